//! Dual bounds for sparse PCA.
//!
//! With a Gram factor `A = C^T C` and `w_i = |c_i|^2`, every multiplier
//! vector `μ` in the box `0 <= μ_i <= w_i` yields the upper bound
//!
//! ```text
//! g(μ) = λ_max( sum_i (1 - μ_i / w_i) c_i c_i^T ) + max_{z in Z} μ^T z
//! ```
//!
//! on `w*`. The saddle bound is the minimum of `g` over the box; it is
//! approached by alternating projected subgradient steps, and the smallest
//! `g` seen along the way is reported, so the returned number is a valid
//! bound whenever the iteration stops.

use crate::error::{Error, Result};
use crate::problem::Selection;
use crate::spectral::{dot, top_eigen, GramFactor};

/// Default iteration budget of [`saddle_upper_bound`].
pub const DEFAULT_SADDLE_ITERS: usize = 2000;

const STALL_WINDOW: usize = 100;
const STALL_TOL: f64 = 1e-7;
const BOX_TOL: f64 = 1e-9;

/// Coefficients of the cut `w <= ν + sum_i μ_i z_i`.
#[derive(Clone, Debug, PartialEq)]
pub struct CutCoefficients {
    pub nu: f64,
    pub mu: Vec<f64>,
}

/// Dual value at a binary point together with its most violated cut.
///
/// The value is `λ_max(A_{S,S}) + sum_{i not in S} w_i`; the cut has
/// `ν = λ_max(A_{S,S})` and `μ_i = w_i` off the support, `0` on it.
pub fn h1_binary(factor: &GramFactor, sel: &Selection) -> Result<(f64, CutCoefficients)> {
    let n = factor.n();
    if let Some(&bad) = sel.indices().iter().find(|&&i| i >= n) {
        return Err(Error::IndexOutOfRange { index: bad, n });
    }
    let nu = if sel.is_empty() {
        0.0
    } else {
        top_eigen(&factor.support_outer(sel.indices()), None)
            .0
            .value
    };
    let mask = sel.mask(n);
    let mu: Vec<f64> = (0..n)
        .map(|i| if mask[i] { 0.0 } else { factor.col_norm_sq(i) })
        .collect();
    let value = nu + mu.iter().sum::<f64>();
    Ok((value, CutCoefficients { nu, mu }))
}

/// Value and subgradients of the relaxed dual function at `(z, μ)`.
#[derive(Clone, Debug)]
pub struct H1BarEval {
    pub value: f64,
    /// Exact gradient in `z` for fixed `μ`: `μ` itself.
    pub grad_z: Vec<f64>,
    /// `z_i - (c_i^T v)^2 / w_i` with `v` the top eigenvector of `M(μ)`.
    pub grad_mu: Vec<f64>,
    /// `λ_max(M(μ))`.
    pub lambda: f64,
    pub vector: Vec<f64>,
}

fn multiplier_weights(factor: &GramFactor, mu: &[f64]) -> Vec<f64> {
    (0..factor.n())
        .map(|i| {
            let w = factor.col_norm_sq(i);
            if w > 0.0 {
                (1.0 - mu[i] / w).max(0.0)
            } else {
                0.0
            }
        })
        .collect()
}

fn top_of_m(factor: &GramFactor, mu: &[f64], warm: Option<&[f64]>) -> (f64, Vec<f64>) {
    let m = factor.weighted_outer(&multiplier_weights(factor, mu));
    let (pair, _) = top_eigen(&m, warm);
    (pair.value, pair.vector)
}

fn mu_gradient(factor: &GramFactor, z: &[f64], v: &[f64]) -> Vec<f64> {
    (0..factor.n())
        .map(|i| {
            let w = factor.col_norm_sq(i);
            if w > 0.0 {
                z[i] - dot(factor.column(i), v).powi(2) / w
            } else {
                0.0
            }
        })
        .collect()
}

/// `λ_max(M(μ)) + μ^T z` and its subgradients.
pub fn h1_bar_value_and_subgradients(
    factor: &GramFactor,
    z: &[f64],
    mu: &[f64],
) -> Result<H1BarEval> {
    let n = factor.n();
    if z.len() != n || mu.len() != n {
        return Err(Error::Dimension(format!("z and mu must have length {n}")));
    }
    for i in 0..n {
        if !(-BOX_TOL..=1.0 + BOX_TOL).contains(&z[i]) {
            return Err(Error::InvalidArgument(format!(
                "z[{i}] = {} outside [0, 1]",
                z[i]
            )));
        }
        let w = factor.col_norm_sq(i);
        if !(-BOX_TOL..=w + BOX_TOL * w.max(1.0)).contains(&mu[i]) {
            return Err(Error::InvalidArgument(format!(
                "mu[{i}] = {} outside [0, {w}]",
                mu[i]
            )));
        }
    }
    let (lambda, vector) = top_of_m(factor, mu, None);
    Ok(H1BarEval {
        value: lambda + dot(mu, z),
        grad_z: mu.to_vec(),
        grad_mu: mu_gradient(factor, z, &vector),
        lambda,
        vector,
    })
}

/// Euclidean projection onto `{z in [0,1]^n : sum z = k}`.
pub fn project_capped_simplex(v: &[f64], k: usize) -> Vec<f64> {
    project_capped(v, k as f64)
}

fn project_capped(v: &[f64], k: f64) -> Vec<f64> {
    let n = v.len() as f64;
    if k <= 0.0 {
        return vec![0.0; v.len()];
    }
    if k >= n {
        return vec![1.0; v.len()];
    }
    let sum_at = |tau: f64| -> f64 { v.iter().map(|x| (x - tau).clamp(0.0, 1.0)).sum() };
    let mut lo = v.iter().copied().fold(f64::INFINITY, f64::min) - 1.0;
    let mut hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if sum_at(mid) > k {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let tau = 0.5 * (lo + hi);
    v.iter().map(|x| (x - tau).clamp(0.0, 1.0)).collect()
}

/// The multiplicative gap `min{k, n/k}` certified for the saddle bound.
pub fn gap_certificate(n: usize, k: usize) -> f64 {
    (k as f64).min(n as f64 / k as f64)
}

/// Step sizes for the saddle iteration: `α_t = α_0 / sqrt(t)` on `μ` and
/// `1 / (α_0 sqrt(t))` on `z`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StepSchedule {
    /// `α_0 = max_i |c_i|^2`.
    Auto,
    Diminishing {
        alpha0: f64,
    },
}

/// Options of [`saddle_upper_bound`].
#[derive(Clone, Debug)]
pub struct SaddleOptions {
    pub schedule: StepSchedule,
    pub max_iters: usize,
    /// Indices forced into the support.
    pub fixed_one: Vec<usize>,
    /// Indices forced out of the support.
    pub fixed_zero: Vec<usize>,
    /// Starting multipliers; also evaluated as a candidate.
    pub warm_mu: Option<Vec<f64>>,
    /// Stop once the best bound improved by less than `1e-7` over the last
    /// 100 iterations.
    pub early_stop: bool,
    /// Keep every evaluated `g(μ)` in [`SaddleState::trace`].
    pub record_trace: bool,
}

impl Default for SaddleOptions {
    fn default() -> Self {
        SaddleOptions {
            schedule: StepSchedule::Auto,
            max_iters: DEFAULT_SADDLE_ITERS,
            fixed_one: Vec::new(),
            fixed_zero: Vec::new(),
            warm_mu: None,
            early_stop: true,
            record_trace: false,
        }
    }
}

/// Iterate and bookkeeping of the saddle method.
#[derive(Clone, Debug)]
pub struct SaddleState {
    /// Last primal iterate in the relaxed cardinality set.
    pub z: Vec<f64>,
    /// Last multiplier iterate.
    pub mu: Vec<f64>,
    /// Multipliers attaining `best_bound`.
    pub best_mu: Vec<f64>,
    /// Top eigenvector of `M(best_mu)` in the factor's row space.
    pub best_vector: Vec<f64>,
    pub best_bound: f64,
    pub iterate_count: usize,
    /// Every evaluated `g(μ)`, in order (only with `record_trace`).
    pub trace: Vec<f64>,
}

/// A cardinality block: its indices and how many of them must be chosen.
#[derive(Clone, Debug)]
pub(crate) struct Block {
    pub indices: Vec<usize>,
    pub k: usize,
}

struct Restricted<'a> {
    factor: &'a GramFactor,
    // per block: free indices and remaining count
    free: Vec<(Vec<usize>, usize)>,
    ones: Vec<usize>,
    zeros: Vec<usize>,
}

impl Restricted<'_> {
    /// Moves `μ` to the box and pins fixed coordinates at their optimal
    /// values (`0` on forced-in, `w_i` on forced-out or saturated blocks).
    fn clamp(&self, mu: &mut [f64]) {
        for (i, m) in mu.iter_mut().enumerate() {
            *m = m.clamp(0.0, self.factor.col_norm_sq(i));
        }
        for &i in &self.ones {
            mu[i] = 0.0;
        }
        for &i in &self.zeros {
            mu[i] = self.factor.col_norm_sq(i);
        }
        for (idx, r) in &self.free {
            if *r == 0 {
                idx.iter().for_each(|&i| mu[i] = self.factor.col_norm_sq(i));
            } else if *r == idx.len() {
                idx.iter().for_each(|&i| mu[i] = 0.0);
            }
        }
    }

    /// `max_{z} μ^T z` over the restricted cardinality set.
    fn linear_max(&self, mu: &[f64]) -> f64 {
        let mut total: f64 = self.ones.iter().map(|&i| mu[i]).sum();
        for (idx, r) in &self.free {
            let mut vals: Vec<f64> = idx.iter().map(|&i| mu[i]).collect();
            vals.sort_by(|a, b| b.total_cmp(a));
            total += vals.iter().take(*r).sum::<f64>();
        }
        total
    }

    fn g(&self, mu: &[f64], warm: Option<&[f64]>) -> (f64, Vec<f64>) {
        let (lambda, v) = top_of_m(self.factor, mu, warm);
        (lambda + self.linear_max(mu), v)
    }
}

/// The saddle-point upper bound `min_μ g(μ)` for one cardinality
/// constraint `sum z = k`, optionally restricted by fixing coordinates.
///
/// The multipliers `μ = 0` (giving `λ_max(A)`) and `μ_i = w_i` (giving the
/// sum of the `k` largest diagonal entries) are always evaluated, so the
/// result never exceeds `min{k, n/k} w*`.
pub fn saddle_upper_bound(
    factor: &GramFactor,
    k: usize,
    opts: &SaddleOptions,
) -> Result<(f64, SaddleState)> {
    let block = Block {
        indices: (0..factor.n()).collect(),
        k,
    };
    saddle_blocks(factor, &[block], opts)
}

pub(crate) fn saddle_blocks(
    factor: &GramFactor,
    blocks: &[Block],
    opts: &SaddleOptions,
) -> Result<(f64, SaddleState)> {
    let n = factor.n();
    let mut status = vec![0u8; n]; // 0 free, 1 forced in, 2 forced out
    for &i in &opts.fixed_one {
        if i >= n {
            return Err(Error::IndexOutOfRange { index: i, n });
        }
        status[i] = 1;
    }
    for &i in &opts.fixed_zero {
        if i >= n {
            return Err(Error::IndexOutOfRange { index: i, n });
        }
        if status[i] == 1 {
            return Err(Error::InvalidArgument(format!(
                "index {i} fixed both in and out"
            )));
        }
        status[i] = 2;
    }
    let mut free = Vec::with_capacity(blocks.len());
    for b in blocks {
        let ones = b.indices.iter().filter(|&&i| status[i] == 1).count();
        let idx: Vec<usize> = b
            .indices
            .iter()
            .copied()
            .filter(|&i| status[i] == 0)
            .collect();
        if ones > b.k {
            return Err(Error::InvalidArgument(format!(
                "{ones} indices fixed in, but only {} may be chosen",
                b.k
            )));
        }
        if idx.len() < b.k - ones {
            return Err(Error::InvalidArgument(format!(
                "too many indices fixed out: {} free for {} open slots",
                idx.len(),
                b.k - ones
            )));
        }
        free.push((idx, b.k - ones));
    }
    let problem = Restricted {
        factor,
        free,
        ones: (0..n).filter(|&i| status[i] == 1).collect(),
        zeros: (0..n).filter(|&i| status[i] == 2).collect(),
    };
    let w = factor.col_norms_sq();
    let scale = match opts.schedule {
        StepSchedule::Auto => w.iter().copied().fold(0.0, f64::max).max(1e-12),
        StepSchedule::Diminishing { alpha0 } if alpha0 > 0.0 => alpha0,
        StepSchedule::Diminishing { alpha0 } => {
            return Err(Error::InvalidArgument(format!(
                "step scale {alpha0} must be positive"
            )))
        }
    };

    let mut best = Best {
        record: opts.record_trace,
        trace: Vec::new(),
        bound: f64::INFINITY,
        mu: Vec::new(),
        vector: Vec::new(),
    };

    // Candidate multipliers with certified quality.
    let mut mu_zero = vec![0.0; n];
    problem.clamp(&mut mu_zero);
    let (g0, v0) = problem.g(&mu_zero, None);
    best.consider(&mu_zero, g0, &v0);
    let mut mu_full = w.to_vec();
    problem.clamp(&mut mu_full);
    let (g1, v1) = problem.g(&mu_full, Some(&v0));
    best.consider(&mu_full, g1, &v1);

    let mut mu = match &opts.warm_mu {
        Some(m) if m.len() == n => {
            let mut m = m.clone();
            problem.clamp(&mut m);
            let (gw, vw) = problem.g(&m, Some(&v0));
            best.consider(&m, gw, &vw);
            m
        }
        _ => mu_zero.clone(),
    };
    let mut v = best.vector.clone();

    let mut z = vec![0.0; n];
    for &i in &problem.ones {
        z[i] = 1.0;
    }
    for (idx, r) in &problem.free {
        if !idx.is_empty() {
            let share = *r as f64 / idx.len() as f64;
            idx.iter().for_each(|&i| z[i] = share);
        }
    }

    let mut history: Vec<f64> = Vec::with_capacity(opts.max_iters);
    let mut iters = 0;
    let all_pinned = problem
        .free
        .iter()
        .all(|(idx, r)| *r == 0 || *r == idx.len());
    if !all_pinned {
        for t in 1..=opts.max_iters {
            iters = t;
            let root = (t as f64).sqrt();
            // ascent in z on the free coordinates
            for (idx, r) in &problem.free {
                if *r == 0 || *r == idx.len() {
                    continue;
                }
                let shifted: Vec<f64> =
                    idx.iter().map(|&i| z[i] + mu[i] / (scale * root)).collect();
                for (&i, zi) in idx.iter().zip(project_capped(&shifted, *r as f64)) {
                    z[i] = zi;
                }
            }
            // descent in μ
            let grad = mu_gradient(factor, &z, &v);
            for i in 0..n {
                mu[i] -= scale / root * grad[i];
            }
            problem.clamp(&mut mu);
            let (g, nv) = problem.g(&mu, Some(&v));
            v = nv;
            best.consider(&mu, g, &v);
            let b = best.bound;
            history.push(b);
            if opts.early_stop && t > STALL_WINDOW && history[t - 1 - STALL_WINDOW] - b < STALL_TOL
            {
                break;
            }
        }
    }
    Ok((
        best.bound,
        SaddleState {
            z,
            mu,
            best_mu: best.mu,
            best_vector: best.vector,
            best_bound: best.bound,
            iterate_count: iters,
            trace: best.trace,
        },
    ))
}

struct Best {
    record: bool,
    trace: Vec<f64>,
    bound: f64,
    mu: Vec<f64>,
    vector: Vec<f64>,
}

impl Best {
    fn consider(&mut self, mu: &[f64], g: f64, v: &[f64]) {
        if self.record {
            self.trace.push(g);
        }
        if g < self.bound || self.mu.is_empty() {
            self.bound = g;
            self.mu = mu.to_vec();
            self.vector = v.to_vec();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::brute_force;
    use crate::problem::{gram_objective, random_psd, SpcaInstance};
    use crate::spectral::{reference_spectrum, SymMatrix};

    #[test]
    fn capped_simplex_examples() {
        let z = project_capped_simplex(&[0.5, 0.5, 0.5], 1);
        assert!(z.iter().all(|x| (x - 1.0 / 3.0).abs() < 1e-12));
        let v = [0.2, 0.7, 0.1, 1.0];
        let z = project_capped_simplex(&v, 2);
        for (a, b) in z.iter().zip(&v) {
            assert!((a - b).abs() < 1e-12);
        }
        let z = project_capped_simplex(&[10.0, 0.0, 0.0], 2);
        assert!(
            (z[0] - 1.0).abs() < 1e-12 && (z[1] - 0.5).abs() < 1e-12 && (z[2] - 0.5).abs() < 1e-12
        );
    }

    #[test]
    fn gap_certificate_values() {
        assert!((gap_certificate(13, 5) - 2.6).abs() < 1e-15);
        assert_eq!(gap_certificate(9, 1), 1.0);
        assert_eq!(gap_certificate(9, 9), 1.0);
    }

    #[test]
    fn h1_binary_small_cases() {
        let f = GramFactor::from_columns(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let (v, cut) = h1_binary(&f, &Selection::prefix(1)).unwrap();
        assert!((v - 2.0).abs() < 1e-12);
        assert_eq!(cut.mu, vec![0.0, 1.0]);
        let a = random_psd(6, 6, 3);
        let inst = SpcaInstance::new(a.clone(), 6).unwrap();
        let (v, _) = h1_binary(inst.factor(), &Selection::prefix(6)).unwrap();
        assert!((v - reference_spectrum(&a).unwrap()[0].value).abs() < 1e-8);
    }

    #[test]
    fn h1_bar_extreme_multipliers() {
        let a = random_psd(5, 5, 9);
        let inst = SpcaInstance::new(a.clone(), 2).unwrap();
        let f = inst.factor();
        let z = vec![0.4; 5];
        let e = h1_bar_value_and_subgradients(f, &z, &[0.0; 5]).unwrap();
        assert!((e.value - reference_spectrum(&a).unwrap()[0].value).abs() < 1e-8);
        let full = f.col_norms_sq().to_vec();
        let e = h1_bar_value_and_subgradients(f, &z, &full).unwrap();
        let expect: f64 = full.iter().map(|w| 0.4 * w).sum();
        assert!((e.value - expect).abs() < 1e-9);
    }

    #[test]
    fn h1_bar_collapses_at_binary_points() {
        let inst = SpcaInstance::new(random_psd(7, 4, 4), 3).unwrap();
        let sel = Selection::new(vec![1, 4, 6], 7).unwrap();
        let (_, cut) = h1_binary(inst.factor(), &sel).unwrap();
        let z: Vec<f64> = sel
            .mask(7)
            .iter()
            .map(|&b| if b { 1.0 } else { 0.0 })
            .collect();
        let e = h1_bar_value_and_subgradients(inst.factor(), &z, &cut.mu).unwrap();
        let g = gram_objective(inst.factor(), &sel).unwrap();
        assert!((e.value - g).abs() < 1e-9);
    }

    #[test]
    fn saddle_bound_is_valid_and_certified() {
        for seed in 0..10 {
            let inst = SpcaInstance::new(random_psd(8, 8, seed), 3).unwrap();
            let opt = brute_force(&inst, 25).unwrap().value;
            let (b, st) = saddle_upper_bound(inst.factor(), 3, &SaddleOptions::default()).unwrap();
            assert!(b >= opt - 1e-8, "seed {seed}: {b} < {opt}");
            assert!(b <= gap_certificate(8, 3) * opt + 1e-6);
            assert!((st.z.iter().sum::<f64>() - 3.0).abs() < 1e-9);
        }
    }

    #[test]
    fn saddle_bound_at_full_cardinality_is_top_eigenvalue() {
        let a = random_psd(6, 3, 1);
        let inst = SpcaInstance::new(a.clone(), 6).unwrap();
        let (b, _) = saddle_upper_bound(inst.factor(), 6, &SaddleOptions::default()).unwrap();
        assert!((b - reference_spectrum(&a).unwrap()[0].value).abs() < 1e-6);
    }

    #[test]
    fn saddle_rejects_infeasible_fixing() {
        let inst = SpcaInstance::new(SymMatrix::identity(4), 2).unwrap();
        let opts = SaddleOptions {
            fixed_one: vec![0, 1, 2],
            ..SaddleOptions::default()
        };
        assert!(saddle_upper_bound(inst.factor(), 2, &opts).is_err());
        let opts = SaddleOptions {
            fixed_zero: vec![0, 1, 2],
            ..SaddleOptions::default()
        };
        assert!(saddle_upper_bound(inst.factor(), 2, &opts).is_err());
    }
}
