//! Phase-transition reporting: align empirical success rates from a grid
//! CSV against the asymptotic threshold predicate, with the constant C
//! calibrated from the data.

use hopm_core::certify::theorem_threshold_raw;
use hopm_core::error::{CoreError, Result};
use std::io::BufRead;

#[derive(Debug, Clone)]
pub struct CellSummary {
    pub cell_id: usize,
    pub n: usize,
    pub m: usize,
    pub r: usize,
    pub k: usize,
    pub p: f64,
    pub q: f64,
    /// Empirical success rate: certificate pass rate when recorded,
    /// otherwise solver exactness rate.
    pub success_rate: f64,
    pub predicate: bool,
    /// Set when the predicate claims success but the data disagrees.
    pub flagged: bool,
}

#[derive(Debug, Clone)]
pub struct PhaseReport {
    pub cells: Vec<CellSummary>,
    /// Largest C consistent with every empirically-successful cell; `None`
    /// when no cell reached the success frontier.
    pub calibrated_c: Option<f64>,
    pub flagged: Vec<usize>,
}

const SUCCESS_FRONTIER: f64 = 0.9;

struct Columns {
    row_type: usize,
    cell_id: usize,
    n: usize,
    m: usize,
    r: usize,
    k: usize,
    p: usize,
    q: usize,
    cert_rate: usize,
    exact_rate: usize,
}

fn find_columns(header: &str) -> Result<Columns> {
    let names: Vec<&str> = header.trim().split(',').collect();
    let find = |name: &str| -> Result<usize> {
        names
            .iter()
            .position(|&c| c == name)
            .ok_or_else(|| CoreError::Parse {
                line: 1,
                message: format!("missing column '{name}'"),
            })
    };
    Ok(Columns {
        row_type: find("row_type")?,
        cell_id: find("cell_id")?,
        n: find("n")?,
        m: find("m")?,
        r: find("r")?,
        k: find("k")?,
        p: find("p")?,
        q: find("q")?,
        cert_rate: find("cert_rate")?,
        exact_rate: find("exact_rate")?,
    })
}

/// The constant at which the threshold inequality holds with equality for a
/// cell: the largest C whose predicate still admits the cell.
fn cell_constant(n: usize, m: usize, k: usize, p: f64, q: f64) -> Option<f64> {
    let mf = m as f64;
    let gap = p - q;
    if gap <= 0.0 {
        return None;
    }
    let denom = (p * (1.0 - q) * mf.powi(5) * mf.ln()).sqrt()
        * (n as f64 / (k as f64).powi(m as i32 - 1)).sqrt();
    if denom > 0.0 {
        Some(gap / denom)
    } else {
        None
    }
}

/// Parse a grid CSV and align each cell's empirical success rate with the
/// threshold predicate. `fallback_c` is used when no cell reaches the
/// success frontier (so there is nothing to calibrate against).
pub fn phase_report<R: BufRead>(reader: &mut R, fallback_c: f64) -> Result<PhaseReport> {
    let mut header = String::new();
    if reader.read_line(&mut header)? == 0 {
        return Err(CoreError::Parse {
            line: 0,
            message: "empty CSV".into(),
        });
    }
    let cols = find_columns(&header)?;

    struct RawCell {
        cell_id: usize,
        n: usize,
        m: usize,
        r: usize,
        k: usize,
        p: f64,
        q: f64,
        success_rate: f64,
    }
    let mut raw = Vec::new();
    let mut line = String::new();
    let mut line_no = 1usize;
    loop {
        line.clear();
        if reader.read_line(&mut line)? == 0 {
            break;
        }
        line_no += 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.trim_end().split(',').collect();
        let get = |idx: usize| -> Result<&str> {
            fields.get(idx).copied().ok_or_else(|| CoreError::Parse {
                line: line_no,
                message: format!("missing field {idx}"),
            })
        };
        if get(cols.row_type)? != "aggregate" {
            continue;
        }
        let parse_usize = |idx: usize, name: &str| -> Result<usize> {
            get(idx)?.parse().map_err(|_| CoreError::Parse {
                line: line_no,
                message: format!("bad {name} '{}'", fields.get(idx).copied().unwrap_or("")),
            })
        };
        let parse_f64 = |idx: usize, name: &str| -> Result<f64> {
            get(idx)?.parse().map_err(|_| CoreError::Parse {
                line: line_no,
                message: format!("bad {name} '{}'", fields.get(idx).copied().unwrap_or("")),
            })
        };
        let cert = get(cols.cert_rate)?;
        let exact = get(cols.exact_rate)?;
        let success_rate = if !cert.is_empty() {
            parse_f64(cols.cert_rate, "cert_rate")?
        } else if !exact.is_empty() {
            parse_f64(cols.exact_rate, "exact_rate")?
        } else {
            continue;
        };
        raw.push(RawCell {
            cell_id: parse_usize(cols.cell_id, "cell_id")?,
            n: parse_usize(cols.n, "n")?,
            m: parse_usize(cols.m, "m")?,
            r: parse_usize(cols.r, "r")?,
            k: parse_usize(cols.k, "k")?,
            p: parse_f64(cols.p, "p")?,
            q: parse_f64(cols.q, "q")?,
            success_rate,
        });
    }

    // calibrate: the largest C that keeps the predicate true on every cell
    // at or above the success frontier
    let calibrated_c = raw
        .iter()
        .filter(|c| c.success_rate >= SUCCESS_FRONTIER)
        .filter_map(|c| cell_constant(c.n, c.m, c.k, c.p, c.q))
        .fold(None, |acc: Option<f64>, c| {
            Some(acc.map_or(c, |a| a.min(c)))
        });
    let effective_c = calibrated_c.unwrap_or(fallback_c);

    let mut cells = Vec::new();
    let mut flagged = Vec::new();
    for cell in &raw {
        let predicate =
            theorem_threshold_raw(cell.n, cell.m, cell.k, cell.p, cell.q, effective_c)?.predicate;
        let flag = predicate && cell.success_rate < SUCCESS_FRONTIER;
        if flag {
            flagged.push(cell.cell_id);
        }
        cells.push(CellSummary {
            cell_id: cell.cell_id,
            n: cell.n,
            m: cell.m,
            r: cell.r,
            k: cell.k,
            p: cell.p,
            q: cell.q,
            success_rate: cell.success_rate,
            predicate,
            flagged: flag,
        });
    }
    Ok(PhaseReport {
        cells,
        calibrated_c,
        flagged,
    })
}

impl PhaseReport {
    pub fn render(&self) -> String {
        let mut out = String::new();
        match self.calibrated_c {
            Some(c) => out.push_str(&format!("calibrated C = {c:.6}\n")),
            None => out.push_str("calibrated C: none (no cell reached the 0.9 frontier)\n"),
        }
        out.push_str("cell    n  m  r  k      p      q   success  predicate  flag\n");
        for c in &self.cells {
            out.push_str(&format!(
                "{:4} {:4} {:2} {:2} {:2} {:6.3} {:6.3}   {:7.3}  {:9}  {}\n",
                c.cell_id,
                c.n,
                c.m,
                c.r,
                c.k,
                c.p,
                c.q,
                c.success_rate,
                c.predicate,
                if c.flagged { "FLAG" } else { "" }
            ));
        }
        if self.flagged.is_empty() {
            out.push_str("no flags\n");
        } else {
            out.push_str(&format!(
                "{} flagged cell(s): predicate true but success < 0.9\n",
                self.flagged.len()
            ));
        }
        out
    }
}
