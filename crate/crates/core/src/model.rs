//! High-order planted models: parameters, ground-truth partitions, adjacency
//! sampling, expectations, and the classical presets.
//!
//! A model `M(n, m, r, k, p, q)` plants `r` disjoint clusters of size `k`
//! among `n` vertices (the rest stay unclustered) and connects each `m`-tuple
//! with probability `p` when all its vertices share a cluster, `q` otherwise.
//! Entries with duplicate indices follow the configured [`DiagonalPolicy`].

use crate::error::{CoreError, Result};
use crate::rng::{chacha, derive_seed, unit_from_key};
use crate::tensor::{for_each_index, has_duplicate, tuple_offset, SymmetricTensor};
use rand::seq::SliceRandom;

/// Treatment of entries with at least one duplicate index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DiagonalPolicy {
    /// Duplicate-index entries forced to zero (m-uniform hypergraph).
    Zeroed,
    /// Duplicate-index entries drawn like any other entry.
    #[default]
    Bernoulli,
}

impl DiagonalPolicy {
    pub fn as_str(&self) -> &'static str {
        match self {
            DiagonalPolicy::Zeroed => "zeroed",
            DiagonalPolicy::Bernoulli => "bernoulli",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "zeroed" => Ok(DiagonalPolicy::Zeroed),
            "bernoulli" => Ok(DiagonalPolicy::Bernoulli),
            other => Err(CoreError::InvalidParameter(format!(
                "unknown diagonal policy '{other}' (expected zeroed|bernoulli)"
            ))),
        }
    }
}

/// Parameters of a high-order planted model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub n: usize,
    pub m: usize,
    pub r: usize,
    pub k: usize,
    pub p: f64,
    pub q: f64,
    pub diagonal_policy: DiagonalPolicy,
}

impl ModelParams {
    pub fn new(
        n: usize,
        m: usize,
        r: usize,
        k: usize,
        p: f64,
        q: f64,
        diagonal_policy: DiagonalPolicy,
    ) -> Result<Self> {
        if m < 2 {
            return Err(CoreError::InvalidParameter(format!(
                "order m must be >= 2, got {m}"
            )));
        }
        if r < 1 || k < 1 {
            return Err(CoreError::InvalidParameter(format!(
                "need r >= 1 and k >= 1, got r={r}, k={k}"
            )));
        }
        if r.checked_mul(k).is_none_or(|rk| rk > n) {
            return Err(CoreError::InvalidParameter(format!(
                "need r*k <= n, got r={r}, k={k}, n={n}"
            )));
        }
        if !(0.0..=1.0).contains(&q) || !(0.0..=1.0).contains(&p) || q >= p {
            return Err(CoreError::InvalidParameter(format!(
                "need 0 <= q < p <= 1, got p={p}, q={q}"
            )));
        }
        Ok(ModelParams {
            n,
            m,
            r,
            k,
            p,
            q,
            diagonal_policy,
        })
    }

    /// Disjoint hypercliques: `p = 1`, `0 < q < 1`.
    pub fn hyperclique(n: usize, m: usize, r: usize, k: usize, q: f64) -> Result<Self> {
        if !(q > 0.0 && q < 1.0) {
            return Err(CoreError::InvalidParameter(format!(
                "hyperclique preset needs 0 < q < 1, got q={q}"
            )));
        }
        Self::new(n, m, r, k, 1.0, q, DiagonalPolicy::default())
    }

    /// Densest subhypergraph: `r = 1`, `0 < q < p < 1`.
    pub fn densest(n: usize, m: usize, k: usize, p: f64, q: f64) -> Result<Self> {
        if !(0.0 < q && q < p && p < 1.0) {
            return Err(CoreError::InvalidParameter(format!(
                "densest preset needs 0 < q < p < 1, got p={p}, q={q}"
            )));
        }
        Self::new(n, m, 1, k, p, q, DiagonalPolicy::default())
    }

    /// Hypergraph stochastic block model: `n = r·k`, `r >= 2`, `0 < q < p < 1`.
    pub fn hsbm(m: usize, r: usize, k: usize, p: f64, q: f64) -> Result<Self> {
        if r < 2 {
            return Err(CoreError::InvalidParameter(format!(
                "hsbm preset needs r >= 2, got r={r}"
            )));
        }
        if !(0.0 < q && q < p && p < 1.0) {
            return Err(CoreError::InvalidParameter(format!(
                "hsbm preset needs 0 < q < p < 1, got p={p}, q={q}"
            )));
        }
        Self::new(r * k, m, r, k, p, q, DiagonalPolicy::default())
    }
}

/// Assignment of `n` vertices to `r` labeled clusters of equal size `k`;
/// unassigned vertices carry `None`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    assignment: Vec<Option<usize>>,
    r: usize,
    k: usize,
}

impl Partition {
    pub fn new(assignment: Vec<Option<usize>>, r: usize, k: usize) -> Result<Self> {
        let mut counts = vec![0usize; r];
        for a in assignment.iter().flatten() {
            if *a >= r {
                return Err(CoreError::InvariantViolation(format!(
                    "cluster id {a} out of range for r={r}"
                )));
            }
            counts[*a] += 1;
        }
        if counts.iter().any(|&c| c != k) {
            return Err(CoreError::InvariantViolation(format!(
                "cluster sizes {counts:?} are not all k={k}"
            )));
        }
        Ok(Partition { assignment, r, k })
    }

    pub fn n(&self) -> usize {
        self.assignment.len()
    }

    pub fn num_clusters(&self) -> usize {
        self.r
    }

    pub fn cluster_size(&self) -> usize {
        self.k
    }

    pub fn assignment(&self) -> &[Option<usize>] {
        &self.assignment
    }

    pub fn cluster_of(&self, vertex: usize) -> Option<usize> {
        self.assignment[vertex]
    }

    pub fn members(&self, cluster: usize) -> Vec<usize> {
        self.assignment
            .iter()
            .enumerate()
            .filter_map(|(v, a)| (*a == Some(cluster)).then_some(v))
            .collect()
    }

    /// Neighborhood `N(v)`: all vertices sharing `v`'s cluster, `v` included.
    /// Empty for unclustered vertices.
    pub fn neighborhood(&self, vertex: usize) -> Vec<usize> {
        match self.assignment[vertex] {
            Some(c) => self.members(c),
            None => Vec::new(),
        }
    }

    /// Membership indicator vectors `y^{(i)} ∈ {0,1}^n`, one per cluster.
    pub fn membership_vectors(&self) -> Vec<Vec<f64>> {
        (0..self.r)
            .map(|c| {
                self.assignment
                    .iter()
                    .map(|a| if *a == Some(c) { 1.0 } else { 0.0 })
                    .collect()
            })
            .collect()
    }

    /// Agreement tensor `Y* = Σᵢ y^{(i)⊗m}`: entry 1 iff all indices share
    /// one cluster.
    pub fn agreement_tensor(&self, order: usize) -> Result<SymmetricTensor> {
        let mut t = SymmetricTensor::zeros(order, self.n())?;
        let n = self.n();
        let assignment = &self.assignment;
        let values = t.values_mut();
        for_each_index(n, order, |idx| {
            let first = assignment[idx[0]];
            if first.is_some() && idx[1..].iter().all(|&i| assignment[i] == first) {
                values[tuple_offset(n, idx)] = 1.0;
            }
        });
        Ok(t)
    }

    /// Relabel clusters in order of their smallest member.
    pub fn canonical(&self) -> Partition {
        let mut first_seen: Vec<(usize, usize)> = (0..self.r)
            .map(|c| {
                let min = self
                    .assignment
                    .iter()
                    .position(|a| *a == Some(c))
                    .unwrap_or(usize::MAX);
                (min, c)
            })
            .collect();
        first_seen.sort_unstable();
        let mut relabel = vec![0usize; self.r];
        for (new_id, (_, old_id)) in first_seen.into_iter().enumerate() {
            relabel[old_id] = new_id;
        }
        Partition {
            assignment: self
                .assignment
                .iter()
                .map(|a| a.map(|c| relabel[c]))
                .collect(),
            r: self.r,
            k: self.k,
        }
    }

    /// Equality up to permutation of cluster labels.
    pub fn same_clustering(&self, other: &Partition) -> bool {
        self.n() == other.n()
            && self.r == other.r
            && self.k == other.k
            && self.canonical().assignment == other.canonical().assignment
    }
}

/// Uniformly sample which `r·k` of the `n` vertices join which labeled cluster.
pub fn sample_partition(params: &ModelParams, seed: u64) -> Partition {
    let mut order: Vec<usize> = (0..params.n).collect();
    let mut rng = chacha(derive_seed(seed, &[0x7061_7274]));
    order.shuffle(&mut rng);
    let mut assignment = vec![None; params.n];
    for c in 0..params.r {
        for &v in &order[c * params.k..(c + 1) * params.k] {
            assignment[v] = Some(c);
        }
    }
    Partition {
        assignment,
        r: params.r,
        k: params.k,
    }
}

/// Sample the 0/1 adjacency tensor: one Bernoulli coin per unordered index
/// multiset, replicated across permutations so the tensor is symmetric by
/// construction.
pub fn sample_adjacency(params: &ModelParams, truth: &Partition, seed: u64) -> SymmetricTensor {
    let n = params.n;
    let m = params.m;
    let coin_seed = derive_seed(seed, &[0x6164_6a61]);
    let y_star = truth.agreement_tensor(m).expect("valid partition");
    let mut t = SymmetricTensor::zeros(m, n).expect("valid shape");
    let mut key = vec![0usize; m];
    {
        let values = t.values_mut();
        for_each_index(n, m, |idx| {
            if params.diagonal_policy == DiagonalPolicy::Zeroed && has_duplicate(idx) {
                return;
            }
            key.copy_from_slice(idx);
            key.sort_unstable();
            let prob = if y_star.entry(idx) == 1.0 {
                params.p
            } else {
                params.q
            };
            if unit_from_key(coin_seed, &key) < prob {
                values[tuple_offset(n, idx)] = 1.0;
            }
        });
    }
    t
}

/// Entrywise mean of the adjacency tensor: `q·1^{⊗m} + (p−q)·Y*`, with
/// duplicate-index entries zeroed under [`DiagonalPolicy::Zeroed`].
pub fn expectation_tensor(params: &ModelParams, truth: &Partition) -> SymmetricTensor {
    let y_star = truth.agreement_tensor(params.m).expect("valid partition");
    let mut t = SymmetricTensor::ones(params.m, params.n)
        .expect("valid shape")
        .scale(params.q)
        .add(&y_star.scale(params.p - params.q))
        .expect("same shape");
    if params.diagonal_policy == DiagonalPolicy::Zeroed {
        let n = params.n;
        let values = t.values_mut();
        for_each_index(n, params.m, |idx| {
            if has_duplicate(idx) {
                values[tuple_offset(n, idx)] = 0.0;
            }
        });
    }
    t
}

/// A sampled model instance: parameters, planted truth, and observed
/// adjacency. Immutable once created.
#[derive(Debug, Clone)]
pub struct ModelInstance {
    pub params: ModelParams,
    pub truth: Partition,
    pub adjacency: SymmetricTensor,
    pub seed: u64,
}

impl ModelInstance {
    pub fn sample(params: ModelParams, seed: u64) -> Self {
        let truth = sample_partition(&params, seed);
        let adjacency = sample_adjacency(&params, &truth, seed);
        ModelInstance {
            params,
            truth,
            adjacency,
            seed,
        }
    }
}
