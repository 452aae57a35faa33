//! `hopm` — generate planted hypergraph instances, estimate tensor norms,
//! verify partitioning certificates, run solvers, and drive Monte Carlo
//! experiment grids.

use clap::{Args, Parser, Subcommand};
use hopm_cli::grid::{run_grid, ExperimentGrid, GridConfigFile, Task, CSV_HEADER};
use hopm_cli::report::phase_report;
use hopm_core::certify::{
    certificate, estimate_signal, regenerate, theorem_threshold, CertifyOptions, LambdaMode,
    SpectralBoundMethod,
};
use hopm_core::error::{CoreError, Result};
use hopm_core::io::{read_atoms, read_partition, read_tensor, write_partition, write_tensor};
use hopm_core::model::{DiagonalPolicy, ModelInstance, ModelParams};
use hopm_core::solver::{
    exactness, exhaustive_search_with_budget, solve, SolveMethod, SolverConfig,
};
use hopm_core::spectral::{
    nuclear_lower_from_witness, nuclear_upper_from_decomposition, power_iteration, spectral_oracle,
    NuclearBounds, PowerConfig,
};
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(
    name = "hopm",
    version,
    about = "High-order planted model partitioning toolkit"
)]
struct Cli {
    /// Base seed for anything stochastic.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads (0 = all cores). HOPM_THREADS sets the default.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// TOML config file mirroring `experiment run` flags.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a model instance and write the tensor + partition sidecar.
    Generate(GenerateArgs),
    /// Spectral estimate and optional nuclear bounds for a tensor file.
    Norms(NormsArgs),
    /// Run the optimality certificate on an instance.
    Certify(CertifyArgs),
    /// Maximize ⟨A, Y⟩ over equal-size partitions.
    Solve(SolveArgs),
    /// Monte Carlo experiment grids.
    Experiment {
        #[command(subcommand)]
        command: ExperimentCommand,
    },
}

#[derive(Args)]
struct ModelArgs {
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    r: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    q: Option<f64>,
    /// Diagonal policy: bernoulli (default) or zeroed.
    #[arg(long, default_value = "bernoulli")]
    policy: String,
    /// Preset: hyperclique | densest | hsbm (fills the constrained fields).
    #[arg(long)]
    preset: Option<String>,
}

impl ModelArgs {
    fn build(&self) -> Result<ModelParams> {
        let policy = DiagonalPolicy::parse(&self.policy)?;
        let need = |v: Option<usize>, name: &str| -> Result<usize> {
            v.ok_or_else(|| CoreError::InvalidParameter(format!("--{name} is required")))
        };
        let need_f = |v: Option<f64>, name: &str| -> Result<f64> {
            v.ok_or_else(|| CoreError::InvalidParameter(format!("--{name} is required")))
        };
        let params = match self.preset.as_deref() {
            None => ModelParams::new(
                need(self.n, "n")?,
                need(self.m, "m")?,
                need(self.r, "r")?,
                need(self.k, "k")?,
                need_f(self.p, "p")?,
                need_f(self.q, "q")?,
                policy,
            )?,
            Some("hyperclique") => {
                if let Some(p) = self.p {
                    if p != 1.0 {
                        return Err(CoreError::InvalidParameter(format!(
                            "hyperclique preset fixes p = 1, got --p {p}"
                        )));
                    }
                }
                ModelParams::hyperclique(
                    need(self.n, "n")?,
                    need(self.m, "m")?,
                    need(self.r, "r")?,
                    need(self.k, "k")?,
                    need_f(self.q, "q")?,
                )?
            }
            Some("densest") => {
                if let Some(r) = self.r {
                    if r != 1 {
                        return Err(CoreError::InvalidParameter(format!(
                            "densest preset fixes r = 1, got --r {r}"
                        )));
                    }
                }
                ModelParams::densest(
                    need(self.n, "n")?,
                    need(self.m, "m")?,
                    need(self.k, "k")?,
                    need_f(self.p, "p")?,
                    need_f(self.q, "q")?,
                )?
            }
            Some("hsbm") => {
                let r = need(self.r, "r")?;
                let k = need(self.k, "k")?;
                if let Some(n) = self.n {
                    if n != r * k {
                        return Err(CoreError::InvalidParameter(format!(
                            "hsbm preset fixes n = r*k = {}, got --n {n}",
                            r * k
                        )));
                    }
                }
                ModelParams::hsbm(
                    need(self.m, "m")?,
                    r,
                    k,
                    need_f(self.p, "p")?,
                    need_f(self.q, "q")?,
                )?
            }
            Some(other) => {
                return Err(CoreError::InvalidParameter(format!(
                    "unknown preset '{other}' (expected hyperclique|densest|hsbm)"
                )))
            }
        };
        let mut params = params;
        params.diagonal_policy = policy;
        Ok(params)
    }
}

#[derive(Args)]
struct GenerateArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Output tensor file.
    #[arg(long)]
    out: PathBuf,
    /// Partition sidecar path (default: the tensor path with a .truth extension).
    #[arg(long)]
    truth_out: Option<PathBuf>,
}

#[derive(Args)]
struct NormsArgs {
    /// Tensor file (format: "m n" header then n^m values).
    #[arg(long)]
    tensor: PathBuf,
    /// Reject asymmetric input beyond this tolerance.
    #[arg(long)]
    strict: bool,
    #[arg(long, default_value_t = 64)]
    restarts: usize,
    #[arg(long, default_value_t = 500)]
    max_iters: usize,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// Force the brute-force sphere oracle (recommended n <= 6).
    #[arg(long)]
    oracle: bool,
    /// Lattice resolution for the oracle.
    #[arg(long, default_value_t = 4)]
    grid: usize,
    /// Rank-one decomposition file for a nuclear upper bound.
    #[arg(long)]
    atoms: Option<PathBuf>,
    /// Witness tensor file for a nuclear lower bound.
    #[arg(long)]
    witness: Option<PathBuf>,
}

#[derive(Args)]
struct CertifyArgs {
    /// Adjacency tensor file (needs --truth, --p, --q).
    #[arg(long)]
    tensor: Option<PathBuf>,
    /// Ground-truth partition sidecar.
    #[arg(long)]
    truth: Option<PathBuf>,
    #[command(flatten)]
    model: ModelArgs,
    /// measured | constant
    #[arg(long, default_value = "measured")]
    lambda_mode: String,
    /// C for constant lambda mode.
    #[arg(long, default_value_t = 3.0)]
    constant_c: f64,
    /// Safety factor on the heuristic spectral upper bound.
    #[arg(long, default_value_t = 1.25)]
    safety: f64,
    #[arg(long, default_value_t = 64)]
    restarts: usize,
    /// Print empirical p̂/q̂ estimated from the truth partition.
    #[arg(long)]
    estimate: bool,
    /// Append one CSV row (grid schema) to this file.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct SolveArgs {
    /// Adjacency tensor file; omit to regenerate from model flags + seed.
    #[arg(long)]
    tensor: Option<PathBuf>,
    #[command(flatten)]
    model: ModelArgs,
    /// exhaustive | local-search | conditional-gradient
    #[arg(long, default_value = "local-search")]
    method: String,
    #[arg(long, default_value_t = 16)]
    restarts: usize,
    #[arg(long, default_value_t = 400)]
    max_iters: usize,
    /// Enumeration budget for exhaustive search.
    #[arg(long, default_value_t = 1_000_000)]
    budget: u128,
    /// Truth sidecar; triggers exactness scoring.
    #[arg(long)]
    truth: Option<PathBuf>,
    /// Append one CSV row (grid schema) to this file.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args, Default)]
struct GridArgs {
    /// Comma-separated lists, e.g. --n 8,12
    #[arg(long, value_delimiter = ',')]
    n: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    m: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    r: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    k: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    p: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    q: Option<Vec<f64>>,
    /// Derive n = r*k per cell.
    #[arg(long)]
    auto_n: bool,
    #[arg(long)]
    trials: Option<usize>,
    /// certify,solve,lemma1,bernstein
    #[arg(long, value_delimiter = ',')]
    tasks: Option<Vec<String>>,
    #[arg(long)]
    policy: Option<String>,
    #[arg(long)]
    lambda_mode: Option<String>,
    #[arg(long)]
    constant_c: Option<f64>,
    #[arg(long)]
    safety: Option<f64>,
    #[arg(long)]
    solver_method: Option<String>,
    #[arg(long)]
    solver_restarts: Option<usize>,
    #[arg(long)]
    power_restarts: Option<usize>,
    #[arg(long)]
    trial_cap_secs: Option<u64>,
}

#[derive(Subcommand)]
enum ExperimentCommand {
    /// Run a grid and write the CSV.
    Run {
        #[command(flatten)]
        grid: Box<GridArgs>,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Summarize a grid CSV against the recovery threshold.
    Report {
        /// Input CSV from `experiment run`.
        #[arg(long)]
        csv: PathBuf,
        /// Fallback C when calibration finds no successful cell.
        #[arg(long, default_value_t = 1.0)]
        constant_c: f64,
    },
}

fn open_reader(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path)?))
}

fn resolve_threads(flag: Option<usize>) -> usize {
    flag.or_else(|| {
        std::env::var("HOPM_THREADS")
            .ok()
            .and_then(|s| s.parse().ok())
    })
    .unwrap_or(0)
}

fn method_name(m: &SpectralBoundMethod) -> String {
    match m {
        SpectralBoundMethod::Oracle => "oracle".into(),
        SpectralBoundMethod::Heuristic { safety } => format!("heuristic(safety={safety})"),
    }
}

fn load_instance_or_regenerate(
    tensor: Option<&PathBuf>,
    truth: Option<&PathBuf>,
    model: &ModelArgs,
    seed: u64,
) -> Result<ModelInstance> {
    match tensor {
        Some(tensor_path) => {
            let truth_path = truth.ok_or_else(|| {
                CoreError::InvalidParameter("--truth is required with --tensor".into())
            })?;
            let adjacency = read_tensor(&mut open_reader(tensor_path)?, Some(1e-9))?;
            let truth = read_partition(&mut open_reader(truth_path)?)?;
            if truth.n() != adjacency.dim() {
                return Err(CoreError::ShapeMismatch(format!(
                    "tensor dim {} vs partition size {}",
                    adjacency.dim(),
                    truth.n()
                )));
            }
            let p = model
                .p
                .ok_or_else(|| CoreError::InvalidParameter("--p is required".into()))?;
            let q = model
                .q
                .ok_or_else(|| CoreError::InvalidParameter("--q is required".into()))?;
            let params = ModelParams::new(
                adjacency.dim(),
                adjacency.order(),
                truth.num_clusters(),
                truth.cluster_size(),
                p,
                q,
                DiagonalPolicy::parse(&model.policy)?,
            )?;
            Ok(ModelInstance {
                params,
                truth,
                adjacency,
                seed,
            })
        }
        None => Ok(regenerate(model.build()?, seed)),
    }
}

/// One trial row in the shared grid CSV schema, for single-shot commands.
fn append_csv_row(
    path: &Path,
    params: &ModelParams,
    seed: u64,
    cert: Option<(bool, f64)>,
    solve_outcome: Option<(bool, f64)>,
) -> Result<()> {
    let fresh = !path.exists();
    let mut file = std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)?;
    if fresh {
        writeln!(file, "{CSV_HEADER}")?;
    }
    let opt_bool = |v: Option<bool>| match v {
        Some(true) => "1".to_string(),
        Some(false) => "0".to_string(),
        None => String::new(),
    };
    let opt_f64 = |v: Option<f64>| v.map(|x| format!("{x}")).unwrap_or_default();
    writeln!(
        file,
        "trial,0,0,{},{},{},{},{},{},{},{},ok,,{},{},{},{},,,,,,,,",
        params.n,
        params.m,
        params.r,
        params.k,
        params.p,
        params.q,
        params.diagonal_policy.as_str(),
        seed,
        opt_bool(cert.map(|c| c.0)),
        opt_f64(cert.map(|c| c.1)),
        opt_bool(solve_outcome.map(|s| s.0)),
        opt_f64(solve_outcome.map(|s| s.1)),
    )?;
    Ok(())
}

fn cmd_generate(args: &GenerateArgs, seed: u64) -> Result<()> {
    let params = args.model.build()?;
    let instance = regenerate(params, seed);
    let mut tensor_file = BufWriter::new(File::create(&args.out)?);
    write_tensor(&mut tensor_file, &instance.adjacency)?;
    tensor_file.flush()?;
    let truth_path = args
        .truth_out
        .clone()
        .unwrap_or_else(|| args.out.with_extension("truth"));
    let mut truth_file = BufWriter::new(File::create(&truth_path)?);
    write_partition(&mut truth_file, &instance.truth)?;
    truth_file.flush()?;
    println!(
        "generated n={} m={} r={} k={} p={} q={} policy={} seed={}",
        params.n,
        params.m,
        params.r,
        params.k,
        params.p,
        params.q,
        params.diagonal_policy.as_str(),
        seed
    );
    println!("tensor: {}", args.out.display());
    println!("truth:  {}", truth_path.display());
    Ok(())
}

fn cmd_norms(args: &NormsArgs, seed: u64) -> Result<()> {
    let strict = if args.strict { Some(1e-9) } else { None };
    let tensor = read_tensor(&mut open_reader(&args.tensor)?, strict)?;
    println!(
        "tensor: order {} dim {} (symmetry error {:.3e})",
        tensor.order(),
        tensor.dim(),
        tensor.symmetry_error()
    );
    let estimate = if args.oracle || tensor.dim() <= 5 {
        spectral_oracle(&tensor, args.restarts, args.grid)
    } else {
        power_iteration(
            &tensor,
            &PowerConfig {
                restarts: args.restarts,
                max_iters: args.max_iters,
                tol: args.tol,
                seed,
            },
        )?
    };
    println!(
        "spectral estimate: {} (method {:?}, restarts {}, converged {})",
        estimate.value, estimate.method, estimate.restarts, estimate.converged
    );
    type UpperBound = (f64, Vec<(f64, Vec<f64>)>);
    let mut upper: Option<UpperBound> = None;
    if let Some(atoms_path) = &args.atoms {
        let atoms = read_atoms(&mut open_reader(atoms_path)?)?;
        let (bound, rebuilt) = nuclear_upper_from_decomposition(tensor.order(), &atoms)?;
        let residual = rebuilt.subtract(&tensor)?.linf_norm();
        println!("nuclear upper bound: {bound} (reconstruction error {residual:.3e})");
        upper = Some((bound, atoms));
    }
    let mut lower: Option<(f64, _)> = None;
    if let Some(witness_path) = &args.witness {
        let witness = read_tensor(&mut open_reader(witness_path)?, None)?;
        let bound = nuclear_lower_from_witness(
            &tensor,
            &witness,
            &PowerConfig {
                restarts: args.restarts.max(64),
                seed,
                ..PowerConfig::default()
            },
        )?;
        println!("nuclear lower bound: {bound}");
        lower = Some((bound, witness));
    }
    if let (Some((upper_bound, atoms)), Some((lower_bound, witness))) = (upper, lower) {
        if lower_bound > upper_bound + 1e-8 {
            return Err(CoreError::InvariantViolation(format!(
                "nuclear bracket inverted: lower {lower_bound} > upper {upper_bound}"
            )));
        }
        let bounds = NuclearBounds {
            lower: lower_bound,
            upper: upper_bound,
            lower_witness: witness,
            upper_decomposition: atoms,
        };
        let gap = bounds.upper - bounds.lower;
        println!(
            "nuclear bracket: [{}, {}] (gap {gap:.3e}{})",
            bounds.lower,
            bounds.upper,
            if gap.abs() <= 1e-8 { ", exact" } else { "" }
        );
    }
    Ok(())
}

fn cmd_certify(args: &CertifyArgs, seed: u64) -> Result<()> {
    let instance =
        load_instance_or_regenerate(args.tensor.as_ref(), args.truth.as_ref(), &args.model, seed)?;
    let lambda_mode = match args.lambda_mode.as_str() {
        "measured" => LambdaMode::Measured,
        "constant" => LambdaMode::Constant(args.constant_c),
        other => {
            return Err(CoreError::InvalidParameter(format!(
                "unknown lambda mode '{other}' (expected measured|constant)"
            )))
        }
    };
    let opts = CertifyOptions {
        lambda_mode,
        safety: args.safety,
        power: PowerConfig {
            restarts: args.restarts,
            seed,
            ..PowerConfig::default()
        },
        reference_c: args.constant_c,
        ..CertifyOptions::default()
    };
    let report = certificate(&instance, &opts)?;
    let params = &instance.params;
    println!(
        "instance: n={} m={} r={} k={} p={} q={} policy={} seed={}",
        params.n,
        params.m,
        params.r,
        params.k,
        params.p,
        params.q,
        params.diagonal_policy.as_str(),
        instance.seed
    );
    println!("lambda:             {}", report.lambda);
    println!(
        "spectral method:    {}",
        method_name(&report.spectral_method)
    );
    println!(
        "|Z| estimate:       {} (threshold {})",
        report.z_spectral_bound,
        2.0 / (params.m as f64 * (params.m as f64 - 1.0))
    );
    println!("lemma-1 rhs (C={}): {}", args.constant_c, report.lemma1_rhs);
    println!("|Q(lambda Z)|_inf:  {}", report.linf_projected);
    println!("margin:             {}", report.margin);
    for check in &report.sub_checks {
        println!(
            "  [{}] {} = {} (threshold {})",
            if check.passed { "ok" } else { "FAIL" },
            check.name,
            check.value,
            check.threshold
        );
    }
    let threshold = theorem_threshold(params, args.constant_c)?;
    println!(
        "threshold predicate (C={}): {} (lhs {}, rhs {}, side condition {})",
        args.constant_c,
        threshold.predicate,
        threshold.lhs,
        threshold.rhs,
        threshold.side_condition
    );
    if args.estimate {
        let (p_hat, q_hat) = estimate_signal(&instance.adjacency, &instance.truth)?;
        println!("empirical estimates: p^ = {p_hat}, q^ = {q_hat}");
    }
    println!(
        "certificate: {}",
        if report.passes { "PASS" } else { "FAIL" }
    );
    if let Some(csv) = &args.csv {
        append_csv_row(
            csv,
            params,
            instance.seed,
            Some((report.passes, report.margin)),
            None,
        )?;
    }
    Ok(())
}

fn cmd_solve(args: &SolveArgs, seed: u64) -> Result<()> {
    let method = SolveMethod::parse(&args.method)?;
    let (adjacency, truth, params) = match &args.tensor {
        Some(tensor_path) => {
            let adjacency = read_tensor(&mut open_reader(tensor_path)?, Some(1e-9))?;
            let truth = match &args.truth {
                Some(path) => Some(read_partition(&mut open_reader(path)?)?),
                None => None,
            };
            (adjacency, truth, None)
        }
        None => {
            let params = args.model.build()?;
            let instance = regenerate(params, seed);
            (
                instance.adjacency,
                Some(instance.truth),
                Some(instance.params),
            )
        }
    };
    let r = args
        .model
        .r
        .or(params.map(|p| p.r))
        .or(truth.as_ref().map(|t| t.num_clusters()))
        .ok_or_else(|| CoreError::InvalidParameter("--r is required".into()))?;
    let k = args
        .model
        .k
        .or(params.map(|p| p.k))
        .or(truth.as_ref().map(|t| t.cluster_size()))
        .ok_or_else(|| CoreError::InvalidParameter("--k is required".into()))?;
    let config = SolverConfig {
        method,
        restarts: args.restarts,
        max_iters: args.max_iters,
        seed,
        ..SolverConfig::default()
    };
    let mut result = match method {
        SolveMethod::Exhaustive => exhaustive_search_with_budget(&adjacency, r, k, args.budget)?,
        _ => solve(&adjacency, r, k, &config)?,
    };
    if let Some(truth) = &truth {
        result.exact = Some(exactness(&result.partition, truth)?);
    }
    println!("method:     {}", method.as_str());
    println!("objective:  {}", result.objective);
    println!("converged:  {}", result.converged);
    println!(
        "partition:  {}",
        result
            .partition
            .assignment()
            .iter()
            .map(|a| a.map_or("-1".to_string(), |c| c.to_string()))
            .collect::<Vec<_>>()
            .join(" ")
    );
    let f = &result.feasibility;
    println!(
        "feasibility: nuclear {} / {}, affine {} / {}, box violation {}",
        f.nuclear_upper, f.nuclear_budget, f.affine_sum, f.affine_target, f.max_box_violation
    );
    match result.exact {
        Some(exact) => println!("exact vs truth: {exact}"),
        None => println!("exact vs truth: (no truth supplied)"),
    }
    if let Some(csv) = &args.csv {
        let params_for_csv = params.unwrap_or(ModelParams::new(
            adjacency.dim(),
            adjacency.order(),
            r,
            k,
            1.0,
            0.0,
            DiagonalPolicy::Bernoulli,
        )?);
        append_csv_row(
            csv,
            &params_for_csv,
            seed,
            None,
            Some((result.exact == Some(true), result.objective)),
        )?;
    }
    Ok(())
}

fn build_grid(args: &GridArgs, config: Option<&PathBuf>, seed: u64) -> Result<ExperimentGrid> {
    let mut grid = ExperimentGrid {
        seed,
        ..ExperimentGrid::default()
    };
    if let Some(path) = config {
        let text = std::fs::read_to_string(path)?;
        let file = GridConfigFile::parse(&text)?;
        file.apply(&mut grid)?;
        if let Some(s) = file.seed {
            grid.seed = s;
        }
    }
    // CLI flags override file values
    if let Some(v) = &args.n {
        grid.n = v.clone();
    }
    if let Some(v) = &args.m {
        grid.m = v.clone();
    }
    if let Some(v) = &args.r {
        grid.r = v.clone();
    }
    if let Some(v) = &args.k {
        grid.k = v.clone();
    }
    if let Some(v) = &args.p {
        grid.p = v.clone();
    }
    if let Some(v) = &args.q {
        grid.q = v.clone();
    }
    if args.auto_n {
        grid.auto_n = true;
    }
    if let Some(v) = args.trials {
        grid.trials = v;
    }
    if let Some(tasks) = &args.tasks {
        grid.tasks = tasks
            .iter()
            .map(|t| Task::parse(t))
            .collect::<Result<Vec<_>>>()?;
    }
    if let Some(policy) = &args.policy {
        grid.policy = DiagonalPolicy::parse(policy)?;
    }
    if let Some(mode) = &args.lambda_mode {
        grid.lambda_mode = match mode.as_str() {
            "measured" => LambdaMode::Measured,
            "constant" => LambdaMode::Constant(args.constant_c.unwrap_or(3.0)),
            other => {
                return Err(CoreError::InvalidParameter(format!(
                    "unknown lambda mode '{other}'"
                )))
            }
        };
    }
    if let Some(v) = args.safety {
        grid.safety = v;
    }
    if let Some(method) = &args.solver_method {
        grid.solver_method = SolveMethod::parse(method)?;
    }
    if let Some(v) = args.solver_restarts {
        grid.solver_restarts = v;
    }
    if let Some(v) = args.power_restarts {
        grid.power_restarts = v;
    }
    if let Some(v) = args.trial_cap_secs {
        grid.trial_cap = std::time::Duration::from_secs(v);
    }
    Ok(grid)
}

fn cmd_experiment_run(
    args: &GridArgs,
    out: &Path,
    config: Option<&PathBuf>,
    seed: u64,
    threads: usize,
) -> Result<()> {
    let grid = build_grid(args, config, seed)?;
    let outcome = run_grid(&grid, threads)?;
    let mut file = BufWriter::new(File::create(out)?);
    outcome.write_csv(&grid, &mut file)?;
    file.flush()?;
    eprintln!("timing: {}", outcome.timing_summary());
    println!(
        "wrote {} ({} cells, {} trial rows)",
        out.display(),
        outcome.cells.len(),
        outcome.records.len()
    );
    let show = |rate: Option<f64>| rate.map_or_else(|| "-".to_string(), |r| format!("{r:.3}"));
    for agg in &outcome.aggregates {
        let cell = &outcome.cells[agg.cell_id];
        println!(
            "cell {}: n={} m={} r={} k={} p={} q={} cert_rate={} exact_rate={}",
            agg.cell_id,
            cell.n,
            cell.m,
            cell.r,
            cell.k,
            cell.p,
            cell.q,
            show(agg.cert_rate),
            show(agg.exact_rate)
        );
    }
    Ok(())
}

fn main() {
    let cli = Cli::parse();
    let threads = resolve_threads(cli.threads);
    let result = match &cli.command {
        Command::Generate(args) => cmd_generate(args, cli.seed),
        Command::Norms(args) => cmd_norms(args, cli.seed),
        Command::Certify(args) => cmd_certify(args, cli.seed),
        Command::Solve(args) => cmd_solve(args, cli.seed),
        Command::Experiment { command } => match command {
            ExperimentCommand::Run { grid, out } => {
                cmd_experiment_run(grid, out, cli.config.as_ref(), cli.seed, threads)
            }
            ExperimentCommand::Report { csv, constant_c } => (|| {
                let mut reader = open_reader(csv)?;
                let report = phase_report(&mut reader, *constant_c)?;
                print!("{}", report.render());
                Ok(())
            })(),
        },
    };
    if let Err(e) = result {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
