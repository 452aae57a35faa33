//! Parameter grids, Monte Carlo trial execution, and the CSV output
//! contract.
//!
//! A grid is the cartesian product of parameter lists. Every (cell, trial)
//! pair runs as an independent job with a derived seed, so the CSV is
//! byte-identical for a fixed base seed regardless of thread count or rerun.
//! Wall times stay in the in-memory records (summarized on stderr); putting
//! them in the CSV would break that determinism contract.

use hopm_core::certify::{
    bernstein_events, certificate, noise_spectral_estimate, CertifyOptions, LambdaMode,
};
use hopm_core::error::{CoreError, Result};
use hopm_core::model::{DiagonalPolicy, ModelInstance, ModelParams};
use hopm_core::rng::derive_seed;
use hopm_core::solver::{solve, SolveMethod, SolverConfig};
use hopm_core::spectral::PowerConfig;
use rayon::prelude::*;
use serde::Deserialize;
use std::io::Write;
use std::time::{Duration, Instant};

pub const CSV_HEADER: &str = "row_type,cell_id,trial,n,m,r,k,p,q,policy,seed,status,reason,\
cert_pass,cert_margin,solver_exact,solver_objective,lemma1_value,bernstein_events,bernstein_sums,\
cert_rate,cert_rate_se,exact_rate,exact_rate_se,mean_margin";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Certify,
    Solve,
    Lemma1,
    Bernstein,
}

impl Task {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "certify" => Ok(Task::Certify),
            "solve" => Ok(Task::Solve),
            "lemma1" => Ok(Task::Lemma1),
            "bernstein" => Ok(Task::Bernstein),
            other => Err(CoreError::InvalidParameter(format!(
                "unknown task '{other}' (expected certify|solve|lemma1|bernstein)"
            ))),
        }
    }
}

/// Full grid specification. `auto_n` replaces the `n` list with `r·k` per
/// cell (the HSBM convention).
#[derive(Debug, Clone)]
pub struct ExperimentGrid {
    pub n: Vec<usize>,
    pub m: Vec<usize>,
    pub r: Vec<usize>,
    pub k: Vec<usize>,
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    pub auto_n: bool,
    pub trials: usize,
    pub seed: u64,
    pub tasks: Vec<Task>,
    pub policy: DiagonalPolicy,
    pub lambda_mode: LambdaMode,
    pub safety: f64,
    pub solver_method: SolveMethod,
    pub solver_restarts: usize,
    pub power_restarts: usize,
    /// Per-trial wall clock cap; an over-budget trial is marked failed, the
    /// run continues.
    pub trial_cap: Duration,
}

impl Default for ExperimentGrid {
    fn default() -> Self {
        ExperimentGrid {
            n: vec![6],
            m: vec![3],
            r: vec![2],
            k: vec![3],
            p: vec![0.9],
            q: vec![0.1],
            auto_n: false,
            trials: 10,
            seed: 0,
            tasks: vec![Task::Certify, Task::Solve],
            policy: DiagonalPolicy::Bernoulli,
            lambda_mode: LambdaMode::Measured,
            safety: 1.25,
            solver_method: SolveMethod::LocalSearch,
            solver_restarts: 16,
            power_restarts: 64,
            trial_cap: Duration::from_secs(30),
        }
    }
}

impl ExperimentGrid {
    fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(CoreError::InvalidParameter("trials must be >= 1".into()));
        }
        if self.tasks.is_empty() {
            return Err(CoreError::InvalidParameter("no tasks selected".into()));
        }
        for list in [
            ("n", self.n.is_empty() && !self.auto_n),
            ("m", self.m.is_empty()),
            ("r", self.r.is_empty()),
            ("k", self.k.is_empty()),
        ] {
            if list.1 {
                return Err(CoreError::InvalidParameter(format!(
                    "parameter list '{}' is empty",
                    list.0
                )));
            }
        }
        if self.p.is_empty() || self.q.is_empty() {
            return Err(CoreError::InvalidParameter("p/q lists are empty".into()));
        }
        Ok(())
    }

    /// Cells in deterministic nested order (n, m, r, k, p, q).
    pub fn cells(&self) -> Vec<CellSpec> {
        let n_list: Vec<Option<usize>> = if self.auto_n {
            vec![None]
        } else {
            self.n.iter().copied().map(Some).collect()
        };
        let mut cells = Vec::new();
        let mut id = 0usize;
        for &n in &n_list {
            for &m in &self.m {
                for &r in &self.r {
                    for &k in &self.k {
                        for &p in &self.p {
                            for &q in &self.q {
                                let n_eff = n.unwrap_or(r * k);
                                let params = ModelParams::new(n_eff, m, r, k, p, q, self.policy);
                                cells.push(CellSpec {
                                    id,
                                    n: n_eff,
                                    m,
                                    r,
                                    k,
                                    p,
                                    q,
                                    valid: params.map_err(|e| e.to_string()),
                                });
                                id += 1;
                            }
                        }
                    }
                }
            }
        }
        cells
    }
}

#[derive(Debug, Clone)]
pub struct CellSpec {
    pub id: usize,
    pub n: usize,
    pub m: usize,
    pub r: usize,
    pub k: usize,
    pub p: f64,
    pub q: f64,
    pub valid: std::result::Result<ModelParams, String>,
}

/// One Monte Carlo trial's outcomes. Wall time is in-memory only.
#[derive(Debug, Clone)]
pub struct TrialRecord {
    pub cell_id: usize,
    pub trial: usize,
    pub seed: u64,
    pub failed_reason: Option<String>,
    pub cert: Option<(bool, f64)>,
    pub solve: Option<(bool, f64)>,
    pub lemma1: Option<f64>,
    pub bernstein: Option<(usize, usize)>,
    pub wall: Duration,
}

/// Per-cell aggregate: success rates with standard errors
/// `√(p̂(1−p̂)/trials)`.
#[derive(Debug, Clone)]
pub struct CellAggregate {
    pub cell_id: usize,
    pub trials: usize,
    pub cert_rate: Option<f64>,
    pub cert_rate_se: Option<f64>,
    pub exact_rate: Option<f64>,
    pub exact_rate_se: Option<f64>,
    pub mean_margin: Option<f64>,
}

#[derive(Debug)]
pub struct GridOutcome {
    pub cells: Vec<CellSpec>,
    pub records: Vec<TrialRecord>,
    pub aggregates: Vec<CellAggregate>,
    pub total_wall: Duration,
}

fn run_trial(
    grid: &ExperimentGrid,
    params: ModelParams,
    cell_id: usize,
    trial: usize,
) -> TrialRecord {
    let seed = derive_seed(grid.seed, &[cell_id as u64, trial as u64]);
    let start = Instant::now();
    let mut record = TrialRecord {
        cell_id,
        trial,
        seed,
        failed_reason: None,
        cert: None,
        solve: None,
        lemma1: None,
        bernstein: None,
        wall: Duration::ZERO,
    };
    let instance = ModelInstance::sample(params, seed);
    let power = PowerConfig {
        restarts: grid.power_restarts,
        seed: derive_seed(seed, &[0x70]),
        ..PowerConfig::default()
    };
    let opts = CertifyOptions {
        lambda_mode: grid.lambda_mode,
        safety: grid.safety,
        power,
        ..CertifyOptions::default()
    };
    for task in &grid.tasks {
        if start.elapsed() > grid.trial_cap {
            record.failed_reason = Some("time_budget_exceeded".into());
            break;
        }
        let outcome: Result<()> = (|| {
            match task {
                Task::Certify => {
                    let rep = certificate(&instance, &opts)?;
                    record.cert = Some((rep.passes, rep.margin));
                }
                Task::Solve => {
                    let config = SolverConfig {
                        method: grid.solver_method,
                        restarts: grid.solver_restarts,
                        seed: derive_seed(seed, &[0x50]),
                        ..SolverConfig::default()
                    };
                    let mut res = solve(&instance.adjacency, params.r, params.k, &config)?;
                    res.score_against(&instance.truth);
                    record.solve = Some((res.exact == Some(true), res.objective));
                }
                Task::Lemma1 => {
                    record.lemma1 = Some(noise_spectral_estimate(&instance, &power)?);
                }
                Task::Bernstein => {
                    record.bernstein = Some(bernstein_events(&instance));
                }
            }
            Ok(())
        })();
        if let Err(e) = outcome {
            record.failed_reason = Some(format!("task_error: {e}"));
            break;
        }
    }
    record.wall = start.elapsed();
    record
}

fn aggregate_cell(cell_id: usize, records: &[&TrialRecord]) -> CellAggregate {
    let ok: Vec<&&TrialRecord> = records
        .iter()
        .filter(|r| r.failed_reason.is_none())
        .collect();
    let rate_of = |hits: usize, total: usize| -> (f64, f64) {
        let rate = hits as f64 / total as f64;
        (rate, (rate * (1.0 - rate) / total as f64).sqrt())
    };
    let cert_samples: Vec<bool> = ok.iter().filter_map(|r| r.cert.map(|c| c.0)).collect();
    let (cert_rate, cert_rate_se) = if cert_samples.is_empty() {
        (None, None)
    } else {
        let (rate, se) = rate_of(
            cert_samples.iter().filter(|&&b| b).count(),
            cert_samples.len(),
        );
        (Some(rate), Some(se))
    };
    let exact_samples: Vec<bool> = ok.iter().filter_map(|r| r.solve.map(|s| s.0)).collect();
    let (exact_rate, exact_rate_se) = if exact_samples.is_empty() {
        (None, None)
    } else {
        let (rate, se) = rate_of(
            exact_samples.iter().filter(|&&b| b).count(),
            exact_samples.len(),
        );
        (Some(rate), Some(se))
    };
    let margins: Vec<f64> = ok.iter().filter_map(|r| r.cert.map(|c| c.1)).collect();
    let mean_margin = if margins.is_empty() {
        None
    } else {
        Some(margins.iter().sum::<f64>() / margins.len() as f64)
    };
    CellAggregate {
        cell_id,
        trials: records.len(),
        cert_rate,
        cert_rate_se,
        exact_rate,
        exact_rate_se,
        mean_margin,
    }
}

/// Run every (cell, trial) job on a bounded worker pool (`threads = 0`
/// uses the rayon default) and collect results in deterministic order.
pub fn run_grid(grid: &ExperimentGrid, threads: usize) -> Result<GridOutcome> {
    grid.validate()?;
    let start = Instant::now();
    let cells = grid.cells();
    let jobs: Vec<(usize, ModelParams, usize)> = cells
        .iter()
        .filter_map(|cell| cell.valid.as_ref().ok().map(|p| (cell.id, *p)))
        .flat_map(|(id, params)| (0..grid.trials).map(move |t| (id, params, t)))
        .collect();

    let worker = |&(cell_id, params, trial): &(usize, ModelParams, usize)| -> TrialRecord {
        run_trial(grid, params, cell_id, trial)
    };
    let records: Vec<TrialRecord> = if threads == 0 {
        jobs.par_iter().map(worker).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| CoreError::InvalidParameter(format!("thread pool: {e}")))?;
        pool.install(|| jobs.par_iter().map(worker).collect())
    };

    // records arrive in job order (cell id, then trial index)
    let mut aggregates = Vec::new();
    for cell in &cells {
        if cell.valid.is_err() {
            continue;
        }
        let cell_records: Vec<&TrialRecord> =
            records.iter().filter(|r| r.cell_id == cell.id).collect();
        aggregates.push(aggregate_cell(cell.id, &cell_records));
    }
    Ok(GridOutcome {
        cells,
        records,
        aggregates,
        total_wall: start.elapsed(),
    })
}

fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

fn fmt_opt_bool(v: Option<bool>) -> String {
    match v {
        Some(true) => "1".into(),
        Some(false) => "0".into(),
        None => String::new(),
    }
}

fn fmt_opt_f64(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

impl GridOutcome {
    /// Serialize to the fixed CSV schema: one row per trial, one aggregate
    /// row per cell, one row per skipped cell, sorted by (cell id, trial).
    pub fn write_csv<W: Write>(&self, grid: &ExperimentGrid, w: &mut W) -> Result<()> {
        writeln!(w, "{CSV_HEADER}")?;
        for cell in &self.cells {
            match &cell.valid {
                Err(reason) => {
                    writeln!(
                        w,
                        "skipped,{},,{},{},{},{},{},{},{},,skipped,{},,,,,,,,,,,,",
                        cell.id,
                        cell.n,
                        cell.m,
                        cell.r,
                        cell.k,
                        fmt_f64(cell.p),
                        fmt_f64(cell.q),
                        grid.policy.as_str(),
                        sanitize(reason),
                    )?;
                }
                Ok(_) => {
                    for rec in self.records.iter().filter(|r| r.cell_id == cell.id) {
                        let status = if rec.failed_reason.is_none() {
                            "ok"
                        } else {
                            "failed"
                        };
                        writeln!(
                            w,
                            "trial,{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},,,,,",
                            cell.id,
                            rec.trial,
                            cell.n,
                            cell.m,
                            cell.r,
                            cell.k,
                            fmt_f64(cell.p),
                            fmt_f64(cell.q),
                            grid.policy.as_str(),
                            rec.seed,
                            status,
                            rec.failed_reason
                                .as_deref()
                                .map(sanitize)
                                .unwrap_or_default(),
                            fmt_opt_bool(rec.cert.map(|c| c.0)),
                            fmt_opt_f64(rec.cert.map(|c| c.1)),
                            fmt_opt_bool(rec.solve.map(|s| s.0)),
                            fmt_opt_f64(rec.solve.map(|s| s.1)),
                            fmt_opt_f64(rec.lemma1),
                            rec.bernstein.map(|b| b.0.to_string()).unwrap_or_default(),
                            rec.bernstein.map(|b| b.1.to_string()).unwrap_or_default(),
                        )?;
                    }
                    if let Some(agg) = self.aggregates.iter().find(|a| a.cell_id == cell.id) {
                        writeln!(
                            w,
                            "aggregate,{},,{},{},{},{},{},{},{},,ok,,,,,,,,,{},{},{},{},{}",
                            cell.id,
                            cell.n,
                            cell.m,
                            cell.r,
                            cell.k,
                            fmt_f64(cell.p),
                            fmt_f64(cell.q),
                            grid.policy.as_str(),
                            fmt_opt_f64(agg.cert_rate),
                            fmt_opt_f64(agg.cert_rate_se),
                            fmt_opt_f64(agg.exact_rate),
                            fmt_opt_f64(agg.exact_rate_se),
                            fmt_opt_f64(agg.mean_margin),
                        )?;
                    }
                }
            }
        }
        Ok(())
    }

    pub fn timing_summary(&self) -> String {
        let total: Duration = self.records.iter().map(|r| r.wall).sum();
        let slowest = self
            .records
            .iter()
            .map(|r| r.wall)
            .max()
            .unwrap_or(Duration::ZERO);
        format!(
            "{} trials, cpu {:.1?} total, slowest trial {:.1?}, wall {:.1?}",
            self.records.len(),
            total,
            slowest,
            self.total_wall
        )
    }
}

fn sanitize(reason: &str) -> String {
    reason.replace([',', '\n'], ";")
}

/// TOML-file mirror of the `experiment run` flags; every field optional so
/// CLI flags can override.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfigFile {
    pub n: Option<Vec<usize>>,
    pub m: Option<Vec<usize>>,
    pub r: Option<Vec<usize>>,
    pub k: Option<Vec<usize>>,
    pub p: Option<Vec<f64>>,
    pub q: Option<Vec<f64>>,
    pub auto_n: Option<bool>,
    pub trials: Option<usize>,
    pub seed: Option<u64>,
    pub tasks: Option<Vec<String>>,
    pub policy: Option<String>,
    pub lambda_mode: Option<String>,
    pub constant_c: Option<f64>,
    pub safety: Option<f64>,
    pub solver_method: Option<String>,
    pub solver_restarts: Option<usize>,
    pub power_restarts: Option<usize>,
    pub trial_cap_secs: Option<u64>,
    pub threads: Option<usize>,
    pub out: Option<String>,
}

impl GridConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text)
            .map_err(|e| CoreError::InvalidParameter(format!("config parse error: {e}")))
    }

    /// Fold the file values under explicit CLI values (CLI wins).
    pub fn apply(&self, grid: &mut ExperimentGrid) -> Result<()> {
        if let Some(v) = &self.n {
            grid.n = v.clone();
        }
        if let Some(v) = &self.m {
            grid.m = v.clone();
        }
        if let Some(v) = &self.r {
            grid.r = v.clone();
        }
        if let Some(v) = &self.k {
            grid.k = v.clone();
        }
        if let Some(v) = &self.p {
            grid.p = v.clone();
        }
        if let Some(v) = &self.q {
            grid.q = v.clone();
        }
        if let Some(v) = self.auto_n {
            grid.auto_n = v;
        }
        if let Some(v) = self.trials {
            grid.trials = v;
        }
        if let Some(v) = self.seed {
            grid.seed = v;
        }
        if let Some(tasks) = &self.tasks {
            grid.tasks = tasks
                .iter()
                .map(|s| Task::parse(s))
                .collect::<Result<Vec<_>>>()?;
        }
        if let Some(policy) = &self.policy {
            grid.policy = DiagonalPolicy::parse(policy)?;
        }
        if let Some(mode) = &self.lambda_mode {
            grid.lambda_mode = match mode.as_str() {
                "measured" => LambdaMode::Measured,
                "constant" => LambdaMode::Constant(self.constant_c.unwrap_or(3.0)),
                other => {
                    return Err(CoreError::InvalidParameter(format!(
                        "unknown lambda mode '{other}' (expected measured|constant)"
                    )))
                }
            };
        }
        if let Some(v) = self.safety {
            grid.safety = v;
        }
        if let Some(method) = &self.solver_method {
            grid.solver_method = SolveMethod::parse(method)?;
        }
        if let Some(v) = self.solver_restarts {
            grid.solver_restarts = v;
        }
        if let Some(v) = self.power_restarts {
            grid.power_restarts = v;
        }
        if let Some(v) = self.trial_cap_secs {
            grid.trial_cap = Duration::from_secs(v);
        }
        Ok(())
    }
}
