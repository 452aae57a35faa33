//! Tensor spectral-norm estimation and nuclear-norm bounding.
//!
//! The spectral norm `‖A‖ = sup_{‖u‖=1} |⟨A, u^{⊗m}⟩|` is estimated from
//! below by witnesses: every unit `u` certifies `|⟨A, u^{⊗m}⟩| ≤ ‖A‖`. Two
//! estimators are provided — a brute-force sphere-sampling oracle for tiny
//! dimensions and a restarted symmetric higher-order power iteration — plus
//! a safety-factor upper-bound heuristic for certification. Nuclear norms
//! are bracketed by decomposition upper bounds and dual-witness lower
//! bounds; exactness is claimed only when the two meet.

use crate::error::{CoreError, Result};
use crate::linalg::{dot, norm2};
use crate::rng::{chacha, derive_seed};
use crate::tensor::SymmetricTensor;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpectralMethod {
    Oracle,
    PowerIteration,
}

/// A certified lower bound on the spectral norm together with its witness.
#[derive(Debug, Clone)]
pub struct SpectralEstimate {
    pub value: f64,
    pub witness: Vec<f64>,
    pub restarts: usize,
    pub method: SpectralMethod,
    pub converged: bool,
}

/// Restart budget for the power iteration.
///
/// Plain symmetric power iteration is monotone per step for even order but
/// can cycle for odd order, so the stopping rule watches the value change
/// and restart diversity does the rest. Restart `r` draws its start vector
/// from seed `derive(seed, r)`, making runs reproducible and mergeable.
#[derive(Debug, Clone, Copy)]
pub struct PowerConfig {
    pub restarts: usize,
    pub max_iters: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for PowerConfig {
    fn default() -> Self {
        PowerConfig {
            restarts: 64,
            max_iters: 500,
            tol: 1e-10,
            seed: 0x5EED_0001,
        }
    }
}

/// Contract all modes but the first with `u`: returns the vector
/// `g_i = Σ A_{i, i₂..i_m} u_{i₂} ⋯ u_{i_m}`.
fn contract_all_but_first(a: &SymmetricTensor, u: &[f64]) -> Vec<f64> {
    let n = a.dim();
    let mut cur = a.values().to_vec();
    for _ in 0..a.order() - 1 {
        let blocks = cur.len() / n;
        let mut next = vec![0.0; blocks];
        for (b, slot) in next.iter_mut().enumerate() {
            *slot = dot(&cur[b * n..(b + 1) * n], u);
        }
        cur = next;
    }
    cur
}

/// `⟨A, u^{⊗m}⟩`.
pub fn rayleigh(a: &SymmetricTensor, u: &[f64]) -> f64 {
    dot(&contract_all_but_first(a, u), u)
}

fn random_unit(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n)
            .map(|_| {
                let u1: f64 = rng.random::<f64>().max(1e-300);
                let u2: f64 = rng.random();
                (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
            })
            .collect();
        let nm = norm2(&v);
        if nm > 1e-6 {
            return v.iter().map(|x| x / nm).collect();
        }
    }
}

/// Monotone ascent of `u ↦ ⟨A, u^{⊗m}⟩` on the unit sphere by projected
/// gradient with backtracking; finishes the job when the fixed-point
/// iteration stalls near a maximizer.
fn polish(a: &SymmetricTensor, start: &[f64], max_steps: usize) -> (f64, Vec<f64>, bool) {
    let m = a.order() as f64;
    let mut u = start.to_vec();
    let mut f = rayleigh(a, &u);
    let mut step = 1.0;
    let mut stationary = false;
    for _ in 0..max_steps {
        let g = contract_all_but_first(a, &u);
        let gu = dot(&g, &u);
        let riem: Vec<f64> = g
            .iter()
            .zip(&u)
            .map(|(gi, ui)| m * (gi - gu * ui))
            .collect();
        if norm2(&riem) <= 1e-13 * f.abs().max(1.0) {
            stationary = true;
            break;
        }
        let mut improved = false;
        while step > 1e-16 {
            let mut cand: Vec<f64> = u.iter().zip(&riem).map(|(ui, gi)| ui + step * gi).collect();
            let cn = norm2(&cand);
            if cn > 1e-300 {
                for v in cand.iter_mut() {
                    *v /= cn;
                }
                let fc = rayleigh(a, &cand);
                if fc > f {
                    u = cand;
                    f = fc;
                    improved = true;
                    step *= 1.5;
                    break;
                }
            }
            step *= 0.5;
        }
        if !improved {
            stationary = true;
            break;
        }
    }
    (f, u, stationary)
}

/// One power-iteration run from a given start: plain fixed-point sweeps
/// (tracking the best |value| seen, so odd-order cycling never loses a
/// certified witness) followed by a monotone polish of the best point.
fn power_run(
    a: &SymmetricTensor,
    start: &[f64],
    max_iters: usize,
    tol: f64,
) -> Result<(f64, Vec<f64>, bool)> {
    let odd = a.order() % 2 == 1;
    let mut best_val = 0.0;
    let mut best_u = start.to_vec();
    let mut converged = false;

    let branches: &[f64] = if odd { &[1.0] } else { &[1.0, -1.0] };
    for &branch in branches {
        let signed = if branch < 0.0 {
            a.scale(-1.0)
        } else {
            a.clone()
        };
        let mut u = start.to_vec();
        let mut branch_best_val = rayleigh(&signed, &u);
        let mut branch_best_u = u.clone();
        if odd && branch_best_val < 0.0 {
            branch_best_val = -branch_best_val;
            for v in branch_best_u.iter_mut() {
                *v = -*v;
            }
        }
        let mut prev = branch_best_val;
        for _ in 0..max_iters {
            let mut g = contract_all_but_first(&signed, &u);
            if g.iter().any(|v| !v.is_finite()) {
                return Err(CoreError::Numerical(
                    "non-finite intermediate in power iteration".into(),
                ));
            }
            let gn = norm2(&g);
            if gn < 1e-300 {
                converged = true;
                break;
            }
            for v in g.iter_mut() {
                *v /= gn;
            }
            u = g;
            let mut val = rayleigh(&signed, &u);
            if odd && val < 0.0 {
                // objective is odd in u; chase the positive branch
                for v in u.iter_mut() {
                    *v = -*v;
                }
                val = -val;
            }
            if val > branch_best_val {
                branch_best_val = val;
                branch_best_u = u.clone();
            }
            if (val - prev).abs() <= tol * val.abs().max(1.0) {
                converged = true;
                break;
            }
            prev = val;
        }
        let (polished_val, polished_u, stationary) =
            polish(&signed, &branch_best_u, max_iters.min(200));
        let (final_val, final_u) = if polished_val > branch_best_val {
            (polished_val, polished_u)
        } else {
            (branch_best_val, branch_best_u)
        };
        if stationary {
            converged = true;
        }
        if final_val > best_val {
            best_val = final_val;
            best_u = final_u;
        }
    }
    Ok((best_val, best_u, converged))
}

/// Best witnessed value over random restarts of the symmetric higher-order
/// power iteration. Always a valid lower bound on the spectral norm.
pub fn power_iteration(a: &SymmetricTensor, cfg: &PowerConfig) -> Result<SpectralEstimate> {
    if cfg.restarts == 0 {
        return Err(CoreError::InvalidParameter("restarts must be >= 1".into()));
    }
    let n = a.dim();
    let mut best: Option<(f64, Vec<f64>, bool)> = None;
    for restart in 0..cfg.restarts {
        let mut rng = chacha(derive_seed(cfg.seed, &[restart as u64]));
        let start = random_unit(n, &mut rng);
        let run = power_run(a, &start, cfg.max_iters, cfg.tol)?;
        let better = match &best {
            None => true,
            Some((v, _, _)) => run.0 > *v,
        };
        if better {
            best = Some(run);
        }
    }
    let (value, witness, converged) = best.expect("restarts >= 1");
    Ok(SpectralEstimate {
        value,
        witness,
        restarts: cfg.restarts,
        method: SpectralMethod::PowerIteration,
        converged,
    })
}

/// Brute-force spectral estimate for tiny `n`: dense sphere sampling on an
/// integer lattice of resolution `grid`, followed by local refinement of the
/// top `restarts` candidates. A certified lower bound and a heuristic
/// maximum; cost grows like `(2·grid+1)^n`.
pub fn spectral_oracle(a: &SymmetricTensor, restarts: usize, grid: usize) -> SpectralEstimate {
    let n = a.dim();
    if n > 6 {
        eprintln!("spectral_oracle: n = {n} exceeds the recommended n <= 6; this will be slow");
    }
    let mut g = grid.max(1);
    // keep the lattice enumerable
    while g > 1 && ((2 * g + 1) as f64).powi(n as i32) > 2e7 {
        g -= 1;
    }

    let side = 2 * g + 1;
    let total = side.pow(n as u32);
    // refine a generous pool of direction-distinct candidates; near-parallel
    // points collapse to the best of their basin
    let refine_count = restarts.max(48);
    let mut top: Vec<(f64, Vec<f64>)> = Vec::new();
    let push_candidate = |val: f64, u: Vec<f64>, top: &mut Vec<(f64, Vec<f64>)>| {
        for (existing_val, existing_u) in top.iter_mut() {
            if dot(existing_u, &u).abs() > 0.98 {
                if val > *existing_val {
                    *existing_val = val;
                    *existing_u = u;
                    top.sort_by(|x, y| y.0.partial_cmp(&x.0).unwrap());
                }
                return;
            }
        }
        if top.len() < refine_count {
            top.push((val, u));
            top.sort_by(|x, y| y.0.partial_cmp(&x.0).unwrap());
        } else if val > top.last().map(|t| t.0).unwrap_or(0.0) {
            top.pop();
            top.push((val, u));
            top.sort_by(|x, y| y.0.partial_cmp(&x.0).unwrap());
        }
    };

    let mut point = vec![0i64; n];
    for code in 0..total {
        let mut c = code;
        for slot in point.iter_mut() {
            *slot = (c % side) as i64 - g as i64;
            c /= side;
        }
        // skip zero and one of each antipodal pair
        match point.iter().find(|&&x| x != 0) {
            None => continue,
            Some(&first) if first < 0 => continue,
            _ => {}
        }
        let mut u: Vec<f64> = point.iter().map(|&x| x as f64).collect();
        let nm = norm2(&u);
        for v in u.iter_mut() {
            *v /= nm;
        }
        let val = rayleigh(a, &u).abs();
        push_candidate(val, u, &mut top);
    }
    // coordinate directions catch maximizers the lattice misses at g = 1
    for i in 0..n {
        let mut u = vec![0.0; n];
        u[i] = 1.0;
        let val = rayleigh(a, &u).abs();
        push_candidate(val, u, &mut top);
    }

    let mut best_val = 0.0;
    let mut best_u = vec![0.0; n];
    if let Some(first) = top.first() {
        best_u = first.1.clone();
        best_val = first.0;
    }
    let mut converged = false;
    for (_, candidate) in &top {
        if let Ok((val, u, conv)) = power_run(a, candidate, 500, 1e-12) {
            if val > best_val {
                best_val = val;
                best_u = u;
                converged = conv;
            } else if val == best_val && conv {
                converged = true;
            }
        }
    }
    if best_val == 0.0 && best_u.iter().all(|&v| v == 0.0) {
        best_u[0] = 1.0; // any unit vector witnesses a zero value
    }
    SpectralEstimate {
        value: best_val,
        witness: best_u,
        restarts: refine_count,
        method: SpectralMethod::Oracle,
        converged,
    }
}

/// Heuristic spectral upper bound: `safety ×` the best power-iteration value
/// over the configured restart budget. Not a proof; certification reports
/// carry the method so nothing overstates rigor.
pub fn spectral_upper_heuristic(
    a: &SymmetricTensor,
    safety: f64,
    cfg: &PowerConfig,
) -> Result<f64> {
    if safety < 1.0 {
        return Err(CoreError::InvalidParameter(format!(
            "safety factor must be >= 1, got {safety}"
        )));
    }
    Ok(safety * power_iteration(a, cfg)?.value)
}

/// Nuclear-norm bracket: `lower ≤ ‖·‖_* ≤ upper`, with the artifacts that
/// certify each side.
#[derive(Debug, Clone)]
pub struct NuclearBounds {
    pub lower: f64,
    pub upper: f64,
    pub lower_witness: SymmetricTensor,
    pub upper_decomposition: Vec<(f64, Vec<f64>)>,
}

/// Upper bound from an explicit rank-one decomposition with unit atoms:
/// returns `(Σ|wᵢ|, Σ wᵢ uᵢ^{⊗m})`.
pub fn nuclear_upper_from_decomposition(
    order: usize,
    atoms: &[(f64, Vec<f64>)],
) -> Result<(f64, SymmetricTensor)> {
    let Some(first) = atoms.first() else {
        return Err(CoreError::InvalidParameter("empty decomposition".into()));
    };
    let n = first.1.len();
    let mut sum = SymmetricTensor::zeros(order, n)?;
    let mut bound = 0.0;
    for (weight, u) in atoms {
        if u.len() != n {
            return Err(CoreError::ShapeMismatch("atoms of mixed dimension".into()));
        }
        if (norm2(u) - 1.0).abs() > 1e-9 {
            return Err(CoreError::InvalidParameter(format!(
                "atom is not unit norm: |u| = {}",
                norm2(u)
            )));
        }
        bound += weight.abs();
        sum = sum.add(&SymmetricTensor::outer_power(u, order)?.scale(*weight))?;
    }
    Ok((bound, sum))
}

/// Lower bound `⟨W, A⟩` from a witness with spectral norm at most one
/// (checked by power iteration with the supplied budget).
pub fn nuclear_lower_from_witness(
    a: &SymmetricTensor,
    w: &SymmetricTensor,
    cfg: &PowerConfig,
) -> Result<f64> {
    let tolerance = 1e-6;
    let estimate = power_iteration(w, cfg)?;
    if estimate.value > 1.0 + tolerance {
        return Err(CoreError::WitnessRejected {
            estimate: estimate.value,
            tolerance,
        });
    }
    w.inner_product(a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{sample_partition, DiagonalPolicy, ModelParams, Partition};

    fn unit(v: &[f64]) -> Vec<f64> {
        let n = norm2(v);
        v.iter().map(|x| x / n).collect()
    }

    #[test]
    fn oracle_rank_one_unit() {
        let u = unit(&[1.0, 2.0, -1.0]);
        let a = SymmetricTensor::outer_power(&u, 3).unwrap();
        let est = spectral_oracle(&a, 8, 4);
        assert!((est.value - 1.0).abs() < 1e-8);
        let align = dot(&est.witness, &u).abs();
        assert!((align - 1.0).abs() < 1e-6, "witness not aligned: {align}");
    }

    #[test]
    fn oracle_y_star_value_is_k_to_m_half() {
        // k=4, m=3, one unclustered vertex: expect 4^{3/2} = 8
        let truth = Partition::new(vec![Some(0), Some(0), Some(0), Some(0), None], 1, 4).unwrap();
        let y = truth.agreement_tensor(3).unwrap();
        let est = spectral_oracle(&y, 8, 4);
        assert!((est.value - 8.0).abs() < 1e-8, "got {}", est.value);
    }

    #[test]
    fn oracle_and_power_agree_on_random_tensor() {
        let vals: Vec<f64> = SymmetricTensor::random_symmetric(3, 4, 5)
            .unwrap()
            .values()
            .iter()
            .map(|v| v - 0.5)
            .collect();
        let a = SymmetricTensor::from_values(3, 4, vals).unwrap();
        let oracle = spectral_oracle(&a, 16, 4);
        let power = power_iteration(&a, &PowerConfig::default()).unwrap();
        assert!(
            (oracle.value - power.value).abs() < 1e-6,
            "oracle {} vs power {}",
            oracle.value,
            power.value
        );
        // both are lower bounds of the same sup
        assert!(power.value <= oracle.value + 1e-6);
    }

    #[test]
    fn power_zero_tensor() {
        let a = SymmetricTensor::zeros(3, 3).unwrap();
        let est = power_iteration(&a, &PowerConfig::default()).unwrap();
        assert_eq!(est.value, 0.0);
    }

    #[test]
    fn power_y_star_even_order() {
        // k=2, m=4: expect k^{m/2} = 4
        let truth = Partition::new(vec![Some(0), Some(0), Some(1), Some(1)], 2, 2).unwrap();
        let y = truth.agreement_tensor(4).unwrap();
        let est = power_iteration(&y, &PowerConfig::default()).unwrap();
        assert!((est.value - 4.0).abs() < 1e-6, "got {}", est.value);
    }

    #[test]
    fn power_all_ones_cubed() {
        // sup (Σu_i)^3 over the sphere at n=3 is 3^{3/2}
        let a = SymmetricTensor::ones(3, 3).unwrap();
        let est = power_iteration(&a, &PowerConfig::default()).unwrap();
        assert!((est.value - 3f64.powf(1.5)).abs() < 1e-6);
    }

    #[test]
    fn witness_certifies_value_and_is_unit() {
        let vals: Vec<f64> = SymmetricTensor::random_symmetric(4, 3, 9)
            .unwrap()
            .values()
            .iter()
            .map(|v| v - 0.5)
            .collect();
        let a = SymmetricTensor::from_values(4, 3, vals).unwrap();
        let est = power_iteration(&a, &PowerConfig::default()).unwrap();
        assert!((norm2(&est.witness) - 1.0).abs() < 1e-12);
        assert!((rayleigh(&a, &est.witness).abs() - est.value).abs() < 1e-8);
    }

    #[test]
    fn spectral_homogeneity() {
        let a = SymmetricTensor::random_symmetric(3, 4, 21).unwrap();
        let cfg = PowerConfig::default();
        let base = power_iteration(&a, &cfg).unwrap().value;
        let scaled = power_iteration(&a.scale(-2.5), &cfg).unwrap().value;
        assert!((scaled - 2.5 * base).abs() < 1e-8 * base.max(1.0));
    }

    #[test]
    fn upper_heuristic_cases() {
        let u = unit(&[0.3, -0.4, 0.85]);
        let a = SymmetricTensor::outer_power(&u, 3).unwrap();
        let cfg = PowerConfig::default();
        let tight = spectral_upper_heuristic(&a, 1.0, &cfg).unwrap();
        assert!((tight - 1.0).abs() < 1e-9);

        let vals: Vec<f64> = SymmetricTensor::random_symmetric(3, 4, 31)
            .unwrap()
            .values()
            .iter()
            .map(|v| v - 0.5)
            .collect();
        let b = SymmetricTensor::from_values(3, 4, vals).unwrap();
        let upper = spectral_upper_heuristic(&b, 1.1, &cfg).unwrap();
        let oracle = spectral_oracle(&b, 16, 4);
        assert!(upper >= oracle.value - 1e-9);

        let zero = SymmetricTensor::zeros(3, 3).unwrap();
        assert_eq!(spectral_upper_heuristic(&zero, 1.5, &cfg).unwrap(), 0.0);
        assert!(spectral_upper_heuristic(&zero, 0.5, &cfg).is_err());
    }

    #[test]
    fn nuclear_upper_reconstructs_y_star() {
        let params = ModelParams::new(7, 3, 2, 3, 0.9, 0.1, DiagonalPolicy::Bernoulli).unwrap();
        let truth = sample_partition(&params, 3);
        let y = truth.agreement_tensor(3).unwrap();
        let k = 3f64;
        let atoms: Vec<(f64, Vec<f64>)> = truth
            .membership_vectors()
            .into_iter()
            .map(|y_i| (k.powf(1.5), unit(&y_i)))
            .collect();
        let (bound, rebuilt) = nuclear_upper_from_decomposition(3, &atoms).unwrap();
        assert!((bound - 2.0 * k.powf(1.5)).abs() < 1e-8);
        assert!(rebuilt.subtract(&y).unwrap().linf_norm() < 1e-8);
    }

    #[test]
    fn nuclear_upper_simple_atoms() {
        let u = unit(&[1.0, 1.0]);
        let single = nuclear_upper_from_decomposition(3, &[(-2.5, u.clone())]).unwrap();
        assert!((single.0 - 2.5).abs() < 1e-12);

        let opposite =
            nuclear_upper_from_decomposition(3, &[(1.5, u.clone()), (-1.5, u.clone())]).unwrap();
        assert!((opposite.0 - 3.0).abs() < 1e-12);
        assert!(opposite.1.linf_norm() < 1e-12);

        assert!(nuclear_upper_from_decomposition(3, &[(1.0, vec![1.0, 1.0])]).is_err());
    }

    #[test]
    fn nuclear_lower_cases() {
        let cfg = PowerConfig::default();
        let truth = Partition::new(vec![Some(0), Some(0), Some(1), Some(1)], 2, 2).unwrap();
        let y = truth.agreement_tensor(3).unwrap();
        let k = 2f64;
        let w = y.scale(k.powf(-1.5));
        let lower = nuclear_lower_from_witness(&y, &w, &cfg).unwrap();
        assert!((lower - 2.0 * k.powf(1.5)).abs() < 1e-8);

        let zero = SymmetricTensor::zeros(3, 4).unwrap();
        assert_eq!(nuclear_lower_from_witness(&y, &zero, &cfg).unwrap(), 0.0);

        let u = unit(&[0.2, -0.7, 0.4, 0.1]);
        let rank1 = SymmetricTensor::outer_power(&u, 3).unwrap();
        let self_pair = nuclear_lower_from_witness(&rank1, &rank1, &cfg).unwrap();
        assert!((self_pair - 1.0).abs() < 1e-10);

        let too_big = rank1.scale(2.0);
        assert!(matches!(
            nuclear_lower_from_witness(&rank1, &too_big, &cfg),
            Err(CoreError::WitnessRejected { .. })
        ));
    }

    #[test]
    fn nuclear_sandwich_meets_for_y_star() {
        for seed in 0..4 {
            let params = ModelParams::new(6, 3, 2, 2, 0.9, 0.1, DiagonalPolicy::Bernoulli).unwrap();
            let truth = sample_partition(&params, seed);
            let y = truth.agreement_tensor(3).unwrap();
            let k = 2f64;
            let atoms: Vec<(f64, Vec<f64>)> = truth
                .membership_vectors()
                .into_iter()
                .map(|y_i| (k.powf(1.5), unit(&y_i)))
                .collect();
            let (upper, _) = nuclear_upper_from_decomposition(3, &atoms).unwrap();
            let w = y.scale(k.powf(-1.5));
            let lower = nuclear_lower_from_witness(&y, &w, &PowerConfig::default()).unwrap();
            assert!(lower <= upper + 1e-8);
            assert!(
                (lower - upper).abs() < 1e-8,
                "sandwich gap {}",
                upper - lower
            );
            assert!((upper - 2.0 * k.powf(1.5)).abs() < 1e-8);
        }
    }

    #[test]
    fn spectral_nuclear_duality_inequality() {
        let truth = Partition::new(vec![Some(0), Some(0), Some(1), Some(1)], 2, 2).unwrap();
        let y = truth.agreement_tensor(3).unwrap();
        let k = 2f64;
        let atoms: Vec<(f64, Vec<f64>)> = truth
            .membership_vectors()
            .into_iter()
            .map(|y_i| (k.powf(1.5), unit(&y_i)))
            .collect();
        let (upper, _) = nuclear_upper_from_decomposition(3, &atoms).unwrap();
        for seed in 0..3 {
            let vals: Vec<f64> = SymmetricTensor::random_symmetric(3, 4, seed)
                .unwrap()
                .values()
                .iter()
                .map(|v| v - 0.5)
                .collect();
            let a = SymmetricTensor::from_values(3, 4, vals).unwrap();
            let spectral = spectral_oracle(&a, 16, 4).value;
            let ip = a.inner_product(&y).unwrap().abs();
            assert!(ip <= spectral * upper + 1e-8);
        }
    }
}
