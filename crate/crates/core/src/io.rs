//! Text file formats.
//!
//! Tensor files: first line `m n`, then `n^m` whitespace-separated decimal
//! values in lexicographic index order (last index fastest). Partition
//! sidecars: one line of `n` space-separated cluster ids, `-1` for
//! unassigned. Atom files (nuclear decompositions): one atom per line,
//! `weight u_1 … u_n`.

use crate::error::{CoreError, Result};
use crate::model::Partition;
use crate::tensor::SymmetricTensor;
use std::io::{BufRead, Write};

pub fn write_tensor<W: Write>(w: &mut W, t: &SymmetricTensor) -> Result<()> {
    writeln!(w, "{} {}", t.order(), t.dim())?;
    let n = t.dim();
    for row in t.values().chunks(n) {
        let line: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        writeln!(w, "{}", line.join(" "))?;
    }
    Ok(())
}

/// Parse a tensor file. `strict_symmetry` rejects tensors whose symmetry
/// error exceeds the given tolerance; pass `None` to accept asymmetric data
/// (projected intermediates are legitimate tensors too).
pub fn read_tensor<R: BufRead>(r: &mut R, strict_symmetry: Option<f64>) -> Result<SymmetricTensor> {
    let mut header = String::new();
    let mut line_no = 0usize;
    loop {
        header.clear();
        if r.read_line(&mut header)? == 0 {
            return Err(CoreError::Parse {
                line: line_no,
                message: "missing header line 'm n'".into(),
            });
        }
        line_no += 1;
        if !header.trim().is_empty() {
            break;
        }
    }
    let mut parts = header.split_whitespace();
    let order: usize =
        parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| CoreError::Parse {
                line: line_no,
                message: "expected tensor order".into(),
            })?;
    let dim: usize = parts
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| CoreError::Parse {
            line: line_no,
            message: "expected tensor dim".into(),
        })?;
    if parts.next().is_some() {
        return Err(CoreError::Parse {
            line: line_no,
            message: "header must be exactly 'm n'".into(),
        });
    }

    let expected = dim
        .checked_pow(order as u32)
        .ok_or_else(|| CoreError::Parse {
            line: line_no,
            message: format!("tensor size {dim}^{order} overflows"),
        })?;
    let mut values = Vec::with_capacity(expected);
    let mut line = String::new();
    loop {
        line.clear();
        if r.read_line(&mut line)? == 0 {
            break;
        }
        line_no += 1;
        for token in line.split_whitespace() {
            let v: f64 = token.parse().map_err(|_| CoreError::Parse {
                line: line_no,
                message: format!("bad value '{token}'"),
            })?;
            values.push(v);
        }
        if values.len() > expected {
            return Err(CoreError::Parse {
                line: line_no,
                message: format!("too many values (expected {expected})"),
            });
        }
    }
    if values.len() != expected {
        return Err(CoreError::Parse {
            line: line_no,
            message: format!("expected {expected} values, found {}", values.len()),
        });
    }
    let t = SymmetricTensor::from_values(order, dim, values)?;
    if let Some(tol) = strict_symmetry {
        let err = t.symmetry_error();
        if err > tol {
            return Err(CoreError::InvariantViolation(format!(
                "tensor is asymmetric: max deviation {err} exceeds {tol}"
            )));
        }
    }
    Ok(t)
}

pub fn write_partition<W: Write>(w: &mut W, p: &Partition) -> Result<()> {
    let ids: Vec<String> = p
        .assignment()
        .iter()
        .map(|a| match a {
            Some(c) => format!("{c}"),
            None => "-1".into(),
        })
        .collect();
    writeln!(w, "{}", ids.join(" "))?;
    Ok(())
}

/// Parse a partition sidecar; cluster count and size are inferred and
/// validated (all clusters must have equal size).
pub fn read_partition<R: BufRead>(r: &mut R) -> Result<Partition> {
    let mut line = String::new();
    let mut line_no = 0usize;
    loop {
        line.clear();
        if r.read_line(&mut line)? == 0 {
            return Err(CoreError::Parse {
                line: line_no,
                message: "missing partition line".into(),
            });
        }
        line_no += 1;
        if !line.trim().is_empty() {
            break;
        }
    }
    let mut assignment = Vec::new();
    let mut max_id: Option<usize> = None;
    for token in line.split_whitespace() {
        let id: i64 = token.parse().map_err(|_| CoreError::Parse {
            line: line_no,
            message: format!("bad cluster id '{token}'"),
        })?;
        if id < -1 {
            return Err(CoreError::Parse {
                line: line_no,
                message: format!("cluster id {id} out of range"),
            });
        }
        if id >= 0 {
            let c = id as usize;
            max_id = Some(max_id.map_or(c, |m: usize| m.max(c)));
            assignment.push(Some(c));
        } else {
            assignment.push(None);
        }
    }
    let r_count = max_id.map_or(0, |m| m + 1);
    if r_count == 0 {
        return Err(CoreError::Parse {
            line: line_no,
            message: "partition has no clusters".into(),
        });
    }
    let mut counts = vec![0usize; r_count];
    for a in assignment.iter().flatten() {
        counts[*a] += 1;
    }
    let k = counts[0];
    if counts.iter().any(|&c| c != k) || k == 0 {
        return Err(CoreError::Parse {
            line: line_no,
            message: format!("cluster sizes {counts:?} are not equal"),
        });
    }
    Partition::new(assignment, r_count, k)
}

/// Parse a nuclear decomposition: `weight u_1 … u_n` per line.
pub fn read_atoms<R: BufRead>(r: &mut R) -> Result<Vec<(f64, Vec<f64>)>> {
    let mut atoms = Vec::new();
    let mut line = String::new();
    let mut line_no = 0usize;
    let mut dim: Option<usize> = None;
    loop {
        line.clear();
        if r.read_line(&mut line)? == 0 {
            break;
        }
        line_no += 1;
        if line.trim().is_empty() {
            continue;
        }
        let mut numbers = Vec::new();
        for token in line.split_whitespace() {
            let v: f64 = token.parse().map_err(|_| CoreError::Parse {
                line: line_no,
                message: format!("bad value '{token}'"),
            })?;
            numbers.push(v);
        }
        if numbers.len() < 2 {
            return Err(CoreError::Parse {
                line: line_no,
                message: "atom line needs a weight and at least one coordinate".into(),
            });
        }
        let weight = numbers[0];
        let u = numbers[1..].to_vec();
        if let Some(d) = dim {
            if u.len() != d {
                return Err(CoreError::Parse {
                    line: line_no,
                    message: format!("atom dimension {} differs from {d}", u.len()),
                });
            }
        } else {
            dim = Some(u.len());
        }
        atoms.push((weight, u));
    }
    if atoms.is_empty() {
        return Err(CoreError::Parse {
            line: line_no,
            message: "no atoms found".into(),
        });
    }
    Ok(atoms)
}
