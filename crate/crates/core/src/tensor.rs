//! Dense cubical tensors and their elementary algebra: inner products,
//! entrywise norms, outer powers, fibers, and entrywise arithmetic.
//!
//! An index tuple is a `&[usize]` of length `order` with every entry in
//! `0..dim` (0-based; file formats and docs may speak 1-based). Storage is
//! full dense in lexicographic order with the last index fastest, so entry
//! `(i₁,…,i_m)` lives at offset `((i₁·n + i₂)·n + …)·n + i_m`. Symmetry is
//! verified, not structurally enforced: construction paths that cannot
//! guarantee it (file input, mode products) leave verification to callers.

use crate::error::{CoreError, Result};
use crate::rng::unit_from_key;

/// Dense `m`-order cubical real tensor.
///
/// The universal carrier for adjacency tensors, agreement tensors, noise,
/// and projected intermediates (which are generally not symmetric).
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricTensor {
    order: usize,
    dim: usize,
    values: Vec<f64>,
}

/// Offset of an index tuple in lexicographic storage (last index fastest).
#[inline]
pub fn tuple_offset(dim: usize, idx: &[usize]) -> usize {
    let mut off = 0;
    for &i in idx {
        debug_assert!(i < dim);
        off = off * dim + i;
    }
    off
}

/// Inverse of [`tuple_offset`].
pub fn offset_tuple(dim: usize, order: usize, mut offset: usize) -> Vec<usize> {
    let mut idx = vec![0; order];
    for slot in idx.iter_mut().rev() {
        *slot = offset % dim;
        offset /= dim;
    }
    idx
}

/// True when the tuple has at least one duplicate index (a "diagonal" entry).
pub fn has_duplicate(idx: &[usize]) -> bool {
    for i in 0..idx.len() {
        for j in (i + 1)..idx.len() {
            if idx[i] == idx[j] {
                return true;
            }
        }
    }
    false
}

/// Call `f` once per index tuple, in lexicographic order.
pub fn for_each_index(dim: usize, order: usize, mut f: impl FnMut(&[usize])) {
    let mut idx = vec![0usize; order];
    loop {
        f(&idx);
        // odometer increment, last position fastest
        let mut pos = order;
        loop {
            if pos == 0 {
                return;
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < dim {
                break;
            }
            idx[pos] = 0;
        }
    }
}

impl SymmetricTensor {
    pub fn zeros(order: usize, dim: usize) -> Result<Self> {
        if order < 2 {
            return Err(CoreError::InvalidParameter(format!(
                "tensor order must be >= 2, got {order}"
            )));
        }
        if dim == 0 {
            return Err(CoreError::InvalidParameter(
                "tensor dim must be >= 1".into(),
            ));
        }
        let len = dim.checked_pow(order as u32).ok_or_else(|| {
            CoreError::InvalidParameter(format!("tensor size {dim}^{order} overflows"))
        })?;
        Ok(SymmetricTensor {
            order,
            dim,
            values: vec![0.0; len],
        })
    }

    /// The all-one tensor `1^{⊗m}`.
    pub fn ones(order: usize, dim: usize) -> Result<Self> {
        let mut t = Self::zeros(order, dim)?;
        t.values.fill(1.0);
        Ok(t)
    }

    /// Wrap raw values in lexicographic order; checks length and finiteness.
    pub fn from_values(order: usize, dim: usize, values: Vec<f64>) -> Result<Self> {
        let mut t = Self::zeros(order, dim)?;
        if values.len() != t.values.len() {
            return Err(CoreError::ShapeMismatch(format!(
                "expected {} values for a {dim}^{order} tensor, got {}",
                t.values.len(),
                values.len()
            )));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(CoreError::Numerical(format!("non-finite entry {bad}")));
        }
        t.values = values;
        Ok(t)
    }

    /// Rank-one tensor `u^{⊗m}`; symmetric by construction.
    pub fn outer_power(u: &[f64], order: usize) -> Result<Self> {
        if order < 2 {
            return Err(CoreError::InvalidParameter(format!(
                "outer power order must be >= 2, got {order}"
            )));
        }
        if u.is_empty() {
            return Err(CoreError::InvalidParameter(
                "outer power of empty vector".into(),
            ));
        }
        if u.iter().any(|v| !v.is_finite()) {
            return Err(CoreError::Numerical("non-finite vector entry".into()));
        }
        let mut t = Self::zeros(order, u.len())?;
        let dim = u.len();
        // multiply in sorted index order so permuted tuples share the exact
        // same floating-point product
        let mut key = vec![0usize; order];
        for_each_index(dim, order, |idx| {
            key.copy_from_slice(idx);
            key.sort_unstable();
            let mut prod = 1.0;
            for &i in &key {
                prod *= u[i];
            }
            t.values[tuple_offset(dim, idx)] = prod;
        });
        Ok(t)
    }

    /// Symmetric tensor with entries drawn uniformly from `[0,1)`, one draw
    /// per unordered index multiset. Handy for tests and demos.
    pub fn random_symmetric(order: usize, dim: usize, seed: u64) -> Result<Self> {
        let mut t = Self::zeros(order, dim)?;
        let mut key = vec![0usize; order];
        for_each_index(dim, order, |idx| {
            key.copy_from_slice(idx);
            key.sort_unstable();
            let off = tuple_offset(dim, idx);
            t.values[off] = unit_from_key(seed, &key);
        });
        Ok(t)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    #[inline]
    pub fn entry(&self, idx: &[usize]) -> f64 {
        debug_assert_eq!(idx.len(), self.order);
        self.values[tuple_offset(self.dim, idx)]
    }

    #[inline]
    pub fn set_entry(&mut self, idx: &[usize], v: f64) {
        debug_assert_eq!(idx.len(), self.order);
        let off = tuple_offset(self.dim, idx);
        self.values[off] = v;
    }

    fn check_same_shape(&self, other: &Self) -> Result<()> {
        if self.order != other.order || self.dim != other.dim {
            return Err(CoreError::ShapeMismatch(format!(
                "{}^{} vs {}^{}",
                self.dim, self.order, other.dim, other.order
            )));
        }
        Ok(())
    }

    /// `⟨A, B⟩ = Σ A_{i₁..i_m} B_{i₁..i_m}`.
    pub fn inner_product(&self, other: &Self) -> Result<f64> {
        self.check_same_shape(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum())
    }

    /// Entrywise L₁ norm: sum of absolute entries.
    pub fn l1_norm(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).sum()
    }

    /// Entrywise L∞ norm: maximum absolute entry.
    pub fn linf_norm(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a + b)
            .collect();
        Ok(SymmetricTensor {
            order: self.order,
            dim: self.dim,
            values,
        })
    }

    pub fn subtract(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a - b)
            .collect();
        Ok(SymmetricTensor {
            order: self.order,
            dim: self.dim,
            values,
        })
    }

    pub fn scale(&self, c: f64) -> Self {
        SymmetricTensor {
            order: self.order,
            dim: self.dim,
            values: self.values.iter().map(|v| v * c).collect(),
        }
    }

    /// Mode-`mode` fiber with the remaining `m−1` indices fixed (in mode
    /// order, skipping `mode`). Returns a vector of length `dim`.
    pub fn fiber(&self, mode: usize, fixed: &[usize]) -> Result<Vec<f64>> {
        if mode >= self.order {
            return Err(CoreError::InvalidParameter(format!(
                "mode {mode} out of range for order {}",
                self.order
            )));
        }
        if fixed.len() != self.order - 1 {
            return Err(CoreError::InvalidParameter(format!(
                "expected {} fixed indices, got {}",
                self.order - 1,
                fixed.len()
            )));
        }
        if fixed.iter().any(|&i| i >= self.dim) {
            return Err(CoreError::InvalidParameter(
                "fixed index out of range".into(),
            ));
        }
        let mut idx = Vec::with_capacity(self.order);
        idx.extend_from_slice(&fixed[..mode]);
        idx.push(0);
        idx.extend_from_slice(&fixed[mode..]);
        let base = tuple_offset(self.dim, &idx);
        let stride = self.dim.pow((self.order - 1 - mode) as u32);
        Ok((0..self.dim)
            .map(|t| self.values[base + t * stride])
            .collect())
    }

    /// Largest deviation `|entry − entry(sorted indices)|` over all tuples;
    /// zero iff the tensor is exactly permutation-invariant.
    pub fn symmetry_error(&self) -> f64 {
        let mut worst = 0.0f64;
        let mut key = vec![0usize; self.order];
        for_each_index(self.dim, self.order, |idx| {
            key.copy_from_slice(idx);
            key.sort_unstable();
            let d = (self.values[tuple_offset(self.dim, idx)]
                - self.values[tuple_offset(self.dim, &key)])
            .abs();
            if d > worst {
                worst = d;
            }
        });
        worst
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.symmetry_error() <= tol
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn approx(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    /// Independent reference: inner product by explicit nested index loops.
    fn inner_product_loop(a: &SymmetricTensor, b: &SymmetricTensor) -> f64 {
        let n = a.dim();
        let mut total = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    total += a.entry(&[i, j, k]) * b.entry(&[i, j, k]);
                }
            }
        }
        total
    }

    #[test]
    fn inner_product_of_ones_with_two_planted_clusters() {
        // Y* for r=2 clusters of size k=2 on n=4 vertices, m=3
        let y1 = SymmetricTensor::outer_power(&[1.0, 1.0, 0.0, 0.0], 3).unwrap();
        let y2 = SymmetricTensor::outer_power(&[0.0, 0.0, 1.0, 1.0], 3).unwrap();
        let y_star = y1.add(&y2).unwrap();
        let ones = SymmetricTensor::ones(3, 4).unwrap();
        // r * k^m = 2 * 8
        assert!(approx(ones.inner_product(&y_star).unwrap(), 16.0, 1e-12));
    }

    #[test]
    fn inner_product_zero_tensor() {
        let z = SymmetricTensor::zeros(3, 3).unwrap();
        assert_eq!(z.inner_product(&z).unwrap(), 0.0);
    }

    #[test]
    fn inner_product_matches_loop_oracle() {
        let a = SymmetricTensor::random_symmetric(3, 3, 11).unwrap();
        let b = SymmetricTensor::random_symmetric(3, 3, 12).unwrap();
        let expected = inner_product_loop(&a, &b);
        assert!(approx(a.inner_product(&b).unwrap(), expected, 1e-12));
    }

    #[test]
    fn inner_product_shape_mismatch_errors() {
        let a = SymmetricTensor::zeros(3, 3).unwrap();
        let b = SymmetricTensor::zeros(3, 4).unwrap();
        assert!(a.inner_product(&b).is_err());
        let c = SymmetricTensor::zeros(2, 3).unwrap();
        assert!(a.inner_product(&c).is_err());
    }

    #[test]
    fn inner_product_symmetric_and_bilinear() {
        let a = SymmetricTensor::random_symmetric(3, 4, 1).unwrap();
        let b = SymmetricTensor::random_symmetric(3, 4, 2).unwrap();
        let c = SymmetricTensor::random_symmetric(3, 4, 3).unwrap();
        let ab = a.inner_product(&b).unwrap();
        let ba = b.inner_product(&a).unwrap();
        assert!(approx(ab, ba, 1e-10 * ab.abs().max(1.0)));
        let lhs = a.add(&c).unwrap().scale(2.5).inner_product(&b).unwrap();
        let rhs = 2.5 * (ab + c.inner_product(&b).unwrap());
        assert!(approx(lhs, rhs, 1e-10 * rhs.abs().max(1.0)));
    }

    #[test]
    fn outer_power_basis_vector() {
        let t = SymmetricTensor::outer_power(&[1.0, 0.0, 0.0], 3).unwrap();
        assert_eq!(t.entry(&[0, 0, 0]), 1.0);
        assert_eq!(t.l1_norm(), 1.0);
    }

    #[test]
    fn outer_power_all_one() {
        let t = SymmetricTensor::outer_power(&[1.0, 1.0], 3).unwrap();
        assert_eq!(t.values(), SymmetricTensor::ones(3, 2).unwrap().values());
    }

    #[test]
    fn outer_power_hand_expansion_order_two() {
        // (1,2)^{⊗2} = [[1,2],[2,4]]
        let t = SymmetricTensor::outer_power(&[1.0, 2.0], 2).unwrap();
        assert_eq!(t.values(), &[1.0, 2.0, 2.0, 4.0]);
    }

    #[test]
    fn outer_power_rejects_order_one() {
        assert!(SymmetricTensor::outer_power(&[1.0, 2.0], 1).is_err());
    }

    #[test]
    fn unit_outer_power_has_unit_self_inner_product() {
        let u = [0.6, 0.8];
        for m in [2, 3, 4] {
            let t = SymmetricTensor::outer_power(&u, m).unwrap();
            assert!(approx(t.inner_product(&t).unwrap(), 1.0, 1e-10));
        }
    }

    #[test]
    fn l1_of_single_all_one_cluster() {
        // Y* for r=1, k=2, n=2, m=3 is the all-one 2x2x2 tensor
        let y_star = SymmetricTensor::outer_power(&[1.0, 1.0], 3).unwrap();
        assert_eq!(y_star.l1_norm(), 8.0);
    }

    #[test]
    fn linf_of_zero_tensor() {
        assert_eq!(SymmetricTensor::zeros(3, 2).unwrap().linf_norm(), 0.0);
    }

    #[test]
    fn l1_linf_duality_on_random_pairs() {
        for seed in 0..6 {
            let a = SymmetricTensor::random_symmetric(3, 4, seed).unwrap();
            let mut b = SymmetricTensor::random_symmetric(3, 4, seed + 100).unwrap();
            // center b so signs vary
            let vals: Vec<f64> = b.values().iter().map(|v| v - 0.5).collect();
            b = SymmetricTensor::from_values(3, 4, vals).unwrap();
            let ip = a.inner_product(&b).unwrap().abs();
            assert!(ip <= a.l1_norm() * b.linf_norm() + 1e-12);
        }
    }

    #[test]
    fn l1_at_least_linf() {
        for seed in 0..4 {
            let a = SymmetricTensor::random_symmetric(2, 5, seed).unwrap();
            assert!(a.l1_norm() >= a.linf_norm());
        }
    }

    #[test]
    fn subtract_self_is_zero() {
        let a = SymmetricTensor::random_symmetric(3, 3, 9).unwrap();
        let z = a.subtract(&a).unwrap();
        assert_eq!(z.linf_norm(), 0.0);
    }

    #[test]
    fn add_then_subtract_roundtrip() {
        let a = SymmetricTensor::random_symmetric(3, 4, 21).unwrap();
        let b = SymmetricTensor::random_symmetric(3, 4, 22).unwrap();
        let back = a.add(&b).unwrap().subtract(&b).unwrap();
        assert!(back.subtract(&a).unwrap().linf_norm() < 1e-12);
    }

    #[test]
    fn fiber_of_rank_one_is_scaled_vector() {
        let u = [1.0, 2.0, 3.0];
        let t = SymmetricTensor::outer_power(&u, 3).unwrap();
        // mode-0 fiber at fixed (j,k) = (1,2) is u * u[1] * u[2]
        let f = t.fiber(0, &[1, 2]).unwrap();
        for (fi, ui) in f.iter().zip(&u) {
            assert!(approx(*fi, ui * u[1] * u[2], 1e-12));
        }
    }

    #[test]
    fn any_fiber_of_ones_is_all_one() {
        let t = SymmetricTensor::ones(4, 3).unwrap();
        for mode in 0..4 {
            let f = t.fiber(mode, &[2, 0, 1]).unwrap();
            assert_eq!(f, vec![1.0; 3]);
        }
    }

    #[test]
    fn fiber_matches_direct_entry_reads() {
        let t = SymmetricTensor::random_symmetric(3, 4, 33).unwrap();
        for mode in 0..3 {
            let fixed = [1usize, 3];
            let f = t.fiber(mode, &fixed).unwrap();
            for (pos, val) in f.iter().enumerate() {
                let mut idx = Vec::new();
                idx.extend_from_slice(&fixed[..mode]);
                idx.push(pos);
                idx.extend_from_slice(&fixed[mode..]);
                assert_eq!(*val, t.entry(&idx));
            }
        }
    }

    #[test]
    fn fiber_rejects_bad_indices() {
        let t = SymmetricTensor::zeros(3, 3).unwrap();
        assert!(t.fiber(3, &[0, 0]).is_err());
        assert!(t.fiber(0, &[0, 5]).is_err());
        assert!(t.fiber(0, &[0]).is_err());
    }

    #[test]
    fn symmetry_accepts_constructions_and_rejects_perturbation() {
        let u = [0.3, -1.2, 0.7];
        let a = SymmetricTensor::outer_power(&u, 3).unwrap();
        let b = SymmetricTensor::random_symmetric(3, 3, 5).unwrap();
        let combo = a.scale(2.0).add(&b).unwrap();
        assert!(combo.is_symmetric(0.0));

        let mut broken = combo.clone();
        broken.set_entry(&[0, 1, 2], broken.entry(&[0, 1, 2]) + 0.5);
        assert!(!broken.is_symmetric(1e-9));
        assert!(broken.symmetry_error() >= 0.5 - 1e-12);
    }

    #[test]
    fn offset_roundtrip() {
        for off in 0..27 {
            let idx = offset_tuple(3, 3, off);
            assert_eq!(tuple_offset(3, &idx), off);
        }
        assert!(has_duplicate(&[0, 1, 0]));
        assert!(!has_duplicate(&[0, 1, 2]));
    }

    #[test]
    fn from_values_validates() {
        assert!(SymmetricTensor::from_values(2, 2, vec![0.0; 3]).is_err());
        assert!(SymmetricTensor::from_values(2, 2, vec![0.0, 1.0, f64::NAN, 2.0]).is_err());
    }
}
