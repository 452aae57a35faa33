//! Fiber-span subspaces, orthogonal mode projectors, mode products, and the
//! composite projections Q⁰, Qⁱ, Q, Q⊥ built from them.
//!
//! For a reference tensor `A`, the mode-`j` projector maps onto the span of
//! all mode-`j` fibers of `A`. Q⁰ applies the span projector in every mode;
//! Qⁱ swaps mode `i` for the orthogonal complement; Q sums all m+1
//! components and Q⊥ is its complement. For a symmetric reference the m
//! span projectors coincide and Q admits the closed-form expansion
//! Σⱼ (P⊗…⊗I⊗…⊗P) − (m−1)·P⊗…⊗P, evaluated by
//! [`q_symmetric_expansion`].

use crate::error::{CoreError, Result};
use crate::linalg::{dot, norm2, Matrix};
use crate::model::Partition;
use crate::tensor::{for_each_index, SymmetricTensor};

/// Relative singular-value cutoff for the numerical rank of fiber sets.
const RANK_CUTOFF: f64 = 1e-10;

/// An orthogonal projector on `R^n`: symmetric, idempotent, eigenvalues in
/// {0, 1}.
#[derive(Debug, Clone)]
pub struct ModeProjector {
    dim: usize,
    matrix: Matrix,
    rank: usize,
}

impl ModeProjector {
    pub fn zero(dim: usize) -> Self {
        ModeProjector {
            dim,
            matrix: Matrix::zeros(dim, dim),
            rank: 0,
        }
    }

    pub fn identity(dim: usize) -> Self {
        ModeProjector {
            dim,
            matrix: Matrix::identity(dim),
            rank: dim,
        }
    }

    /// Projector onto the span of the given basis-candidate vectors.
    ///
    /// Rank-revealing pivoted Gram–Schmidt: directions enter the basis while
    /// the largest residual norm exceeds `1e-10 ×` the largest original
    /// vector norm (the pivot norm brackets the largest singular value of
    /// the vector set, and residuals of exactly-dependent vectors stay at
    /// the 1e-16 level, so the cutoff separates cleanly).
    pub fn from_spanning_vectors(dim: usize, vectors: &[Vec<f64>]) -> Self {
        let mut residuals: Vec<Vec<f64>> = vectors.to_vec();
        for v in &residuals {
            debug_assert_eq!(v.len(), dim);
        }
        let sigma_ref = residuals.iter().map(|v| norm2(v)).fold(0.0, f64::max);
        let mut basis: Vec<Vec<f64>> = Vec::new();
        if sigma_ref > 0.0 {
            let cutoff = RANK_CUTOFF * sigma_ref;
            while basis.len() < dim {
                let Some((best_idx, best_norm)) = residuals
                    .iter()
                    .enumerate()
                    .map(|(i, v)| (i, norm2(v)))
                    .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
                else {
                    break;
                };
                if best_norm <= cutoff {
                    break;
                }
                let mut v = residuals.swap_remove(best_idx);
                // two orthogonalization passes keep the basis orthonormal to
                // machine precision
                for _ in 0..2 {
                    for b in &basis {
                        let coeff = dot(&v, b);
                        for (vi, bi) in v.iter_mut().zip(b) {
                            *vi -= coeff * bi;
                        }
                    }
                    let nm = norm2(&v);
                    if nm <= cutoff {
                        v.clear();
                        break;
                    }
                    for vi in v.iter_mut() {
                        *vi /= nm;
                    }
                }
                if v.is_empty() {
                    continue;
                }
                for res in residuals.iter_mut() {
                    let coeff = dot(res, &v);
                    for (ri, vi) in res.iter_mut().zip(&v) {
                        *ri -= coeff * vi;
                    }
                }
                basis.push(v);
            }
        }
        let mut matrix = Matrix::zeros(dim, dim);
        for v in &basis {
            for i in 0..dim {
                if v[i] == 0.0 {
                    continue;
                }
                for j in 0..dim {
                    matrix.data[i * dim + j] += v[i] * v[j];
                }
            }
        }
        ModeProjector {
            dim,
            matrix,
            rank: basis.len(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.matrix.get(i, j)
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.matrix.apply(x)
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.matrix.get(i, i)).sum()
    }

    /// Complement projector `I − P`.
    pub fn complement(&self) -> ModeProjector {
        let mut matrix = Matrix::identity(self.dim);
        for (out, v) in matrix.data.iter_mut().zip(&self.matrix.data) {
            *out -= v;
        }
        ModeProjector {
            dim: self.dim,
            matrix,
            rank: self.dim - self.rank,
        }
    }

    /// Largest violation of symmetry and idempotence; useful in tests.
    pub fn projector_error(&self) -> f64 {
        let mut sym = 0.0f64;
        for i in 0..self.dim {
            for j in 0..self.dim {
                sym = sym.max((self.matrix.get(i, j) - self.matrix.get(j, i)).abs());
            }
        }
        let idem = self.matrix.matmul(&self.matrix).max_abs_diff(&self.matrix);
        sym.max(idem)
    }

    pub fn max_abs_diff(&self, other: &ModeProjector) -> f64 {
        self.matrix.max_abs_diff(&other.matrix)
    }
}

/// Projector onto the span of all mode-`mode` fibers of `a`.
pub fn fiber_span_projector(a: &SymmetricTensor, mode: usize) -> Result<ModeProjector> {
    if mode >= a.order() {
        return Err(CoreError::InvalidParameter(format!(
            "mode {mode} out of range for order {}",
            a.order()
        )));
    }
    let n = a.dim();
    let mut fibers = Vec::new();
    for_each_index(n, a.order() - 1, |fixed| {
        let fiber = a.fiber(mode, fixed).expect("in-range fiber");
        if fiber.iter().any(|&v| v != 0.0) {
            fibers.push(fiber);
        }
    });
    Ok(ModeProjector::from_spanning_vectors(n, &fibers))
}

/// Closed-form projector for a planted partition:
/// `P = (1/k) Σᵢ y^{(i)} y^{(i)ᵀ}`.
pub fn agreement_projector(truth: &Partition) -> Result<ModeProjector> {
    let n = truth.n();
    let k = truth.cluster_size();
    if k == 0 {
        return Err(CoreError::InvalidParameter("empty clusters".into()));
    }
    let mut matrix = Matrix::zeros(n, n);
    for y in truth.membership_vectors() {
        for i in 0..n {
            if y[i] == 0.0 {
                continue;
            }
            for j in 0..n {
                matrix.data[i * n + j] += y[i] * y[j] / k as f64;
            }
        }
    }
    Ok(ModeProjector {
        dim: n,
        matrix,
        rank: truth.num_clusters(),
    })
}

/// Apply a linear map to every mode-`mode` fiber of `a`. The result is
/// generally not symmetric; it shares the dense container with symmetry
/// checks left to the caller.
pub fn mode_multiply(
    a: &SymmetricTensor,
    p: &ModeProjector,
    mode: usize,
) -> Result<SymmetricTensor> {
    if p.dim() != a.dim() {
        return Err(CoreError::ShapeMismatch(format!(
            "projector dim {} vs tensor dim {}",
            p.dim(),
            a.dim()
        )));
    }
    if mode >= a.order() {
        return Err(CoreError::InvalidParameter(format!(
            "mode {mode} out of range for order {}",
            a.order()
        )));
    }
    let n = a.dim();
    let m = a.order();
    let stride = n.pow((m - 1 - mode) as u32);
    let mut out = SymmetricTensor::zeros(m, n)?;
    let src = a.values();
    let dst = out.values_mut();
    let mut fiber = vec![0.0; n];
    let total = src.len();
    let block = stride * n;
    let mut base_block = 0;
    while base_block < total {
        for inner in 0..stride {
            let base = base_block + inner;
            for (t, f) in fiber.iter_mut().enumerate() {
                *f = src[base + t * stride];
            }
            let mapped = p.apply(&fiber);
            for (t, v) in mapped.into_iter().enumerate() {
                dst[base + t * stride] = v;
            }
        }
        base_block += block;
    }
    Ok(out)
}

/// Per-mode fiber-span projectors of a reference tensor, precomputed once so
/// repeated Q applications stay cheap.
pub struct QProjection {
    projectors: Vec<ModeProjector>,
}

impl QProjection {
    pub fn from_reference(a: &SymmetricTensor) -> Result<Self> {
        let projectors = (0..a.order())
            .map(|mode| fiber_span_projector(a, mode))
            .collect::<Result<Vec<_>>>()?;
        Ok(QProjection { projectors })
    }

    pub fn projector(&self, mode: usize) -> &ModeProjector {
        &self.projectors[mode]
    }

    /// Q⁰ (`i = 0`): every mode projected onto its fiber span. Qⁱ (`i ≥ 1`):
    /// mode `i` projected onto the orthogonal complement instead.
    pub fn component(&self, x: &SymmetricTensor, i: usize) -> Result<SymmetricTensor> {
        let m = x.order();
        if i > m {
            return Err(CoreError::InvalidParameter(format!(
                "component index {i} out of range 0..={m}"
            )));
        }
        if self.projectors.len() != m {
            return Err(CoreError::ShapeMismatch(
                "reference and argument orders differ".into(),
            ));
        }
        let mut out = x.clone();
        for mode in 0..m {
            if i >= 1 && mode == i - 1 {
                let comp = self.projectors[mode].complement();
                out = mode_multiply(&out, &comp, mode)?;
            } else {
                out = mode_multiply(&out, &self.projectors[mode], mode)?;
            }
        }
        Ok(out)
    }

    /// `Q(x) = Σ_{j=0}^m Q^j(x)`.
    pub fn project(&self, x: &SymmetricTensor) -> Result<SymmetricTensor> {
        let mut sum = self.component(x, 0)?;
        for i in 1..=x.order() {
            sum = sum.add(&self.component(x, i)?)?;
        }
        Ok(sum)
    }

    /// `Q⊥(x) = x − Q(x)`.
    pub fn complement_project(&self, x: &SymmetricTensor) -> Result<SymmetricTensor> {
        x.subtract(&self.project(x)?)
    }
}

/// Q-component of `x` with respect to reference `a_ref` (see
/// [`QProjection::component`]).
pub fn q_component(
    a_ref: &SymmetricTensor,
    x: &SymmetricTensor,
    i: usize,
) -> Result<SymmetricTensor> {
    QProjection::from_reference(a_ref)?.component(x, i)
}

pub fn q_project(a_ref: &SymmetricTensor, x: &SymmetricTensor) -> Result<SymmetricTensor> {
    QProjection::from_reference(a_ref)?.project(x)
}

pub fn q_perp_project(a_ref: &SymmetricTensor, x: &SymmetricTensor) -> Result<SymmetricTensor> {
    QProjection::from_reference(a_ref)?.complement_project(x)
}

/// Evaluate `Q_{Y*}(x)` through the symmetric-reference expansion:
/// m terms with the identity substituted in one mode each, minus `(m−1)`
/// times the all-projected term.
pub fn q_symmetric_expansion(truth: &Partition, x: &SymmetricTensor) -> Result<SymmetricTensor> {
    if x.dim() != truth.n() {
        return Err(CoreError::ShapeMismatch(format!(
            "tensor dim {} vs partition size {}",
            x.dim(),
            truth.n()
        )));
    }
    let m = x.order();
    let p = agreement_projector(truth)?;

    // all-projected term P⊗…⊗P(x)
    let mut all_proj = x.clone();
    for mode in 0..m {
        all_proj = mode_multiply(&all_proj, &p, mode)?;
    }

    let mut sum = all_proj.scale(-((m - 1) as f64));
    for skipped in 0..m {
        let mut term = x.clone();
        for mode in 0..m {
            if mode != skipped {
                term = mode_multiply(&term, &p, mode)?;
            }
        }
        sum = sum.add(&term)?;
    }
    Ok(sum)
}
