//! Problem definitions: SPCA instances, support selections, solver reports,
//! objective evaluation and the worst-case instance generators.

use std::fmt;
use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{
    canonical_sign, pivoted_cholesky, top_eigen, GramFactor, Matrix, SymMatrix, DEFAULT_RANK_TOL,
};

/// A sparse PCA instance: a PSD matrix `A`, its Gram factor and the
/// sparsity level `k`.
#[derive(Clone, Debug)]
pub struct SpcaInstance {
    a: SymMatrix,
    factor: GramFactor,
    k: usize,
}

impl SpcaInstance {
    /// Factorizes `a`; fails if `a` is not positive semidefinite or `k` is
    /// outside `1..=n`.
    pub fn new(a: SymMatrix, k: usize) -> Result<Self> {
        let factor = pivoted_cholesky(&a, DEFAULT_RANK_TOL)?;
        Self::check_k(k, a.dim())?;
        Ok(SpcaInstance { a, factor, k })
    }

    /// Builds the instance `A = C^T C` from an explicit factor.
    pub fn from_factor(factor: GramFactor, k: usize) -> Result<Self> {
        Self::check_k(k, factor.n())?;
        let a = factor.reconstruct();
        Ok(SpcaInstance { a, factor, k })
    }

    fn check_k(k: usize, n: usize) -> Result<()> {
        if k == 0 || k > n {
            return Err(Error::InvalidArgument(format!(
                "sparsity k = {k} must lie in 1..={n}"
            )));
        }
        Ok(())
    }

    /// The same matrix with a different sparsity level.
    pub fn with_k(&self, k: usize) -> Result<Self> {
        Self::check_k(k, self.n())?;
        Ok(SpcaInstance {
            a: self.a.clone(),
            factor: self.factor.clone(),
            k,
        })
    }

    pub fn a(&self) -> &SymMatrix {
        &self.a
    }

    pub fn factor(&self) -> &GramFactor {
        &self.factor
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.a.dim()
    }
}

/// A support set: sorted, distinct, 0-based feature indices.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Selection(Vec<usize>);

impl Selection {
    /// Sorts `indices` and rejects duplicates or entries `>= n`.
    pub fn new(mut indices: Vec<usize>, n: usize) -> Result<Self> {
        indices.sort_unstable();
        if let Some(&bad) = indices.iter().find(|&&i| i >= n) {
            return Err(Error::IndexOutOfRange { index: bad, n });
        }
        if indices.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidSelection("duplicate index".into()));
        }
        Ok(Selection(indices))
    }

    /// Builds a selection from indices already known to be valid.
    pub(crate) fn from_sorted(indices: Vec<usize>) -> Self {
        debug_assert!(indices.windows(2).all(|w| w[0] < w[1]));
        Selection(indices)
    }

    /// The first `k` indices `0..k`.
    pub fn prefix(k: usize) -> Self {
        Selection((0..k).collect())
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0.binary_search(&i).is_ok()
    }

    /// Indices shifted to 1-based numbering, for display.
    pub fn one_based(&self) -> Vec<usize> {
        self.0.iter().map(|i| i + 1).collect()
    }

    /// 0/1 membership mask of length `n`.
    pub fn mask(&self, n: usize) -> Vec<bool> {
        let mut m = vec![false; n];
        for &i in &self.0 {
            m[i] = true;
        }
        m
    }

    fn check_for(&self, n: usize, k: usize) -> Result<()> {
        if let Some(&bad) = self.0.iter().find(|&&i| i >= n) {
            return Err(Error::IndexOutOfRange { index: bad, n });
        }
        if self.0.len() != k {
            return Err(Error::InvalidSelection(format!(
                "support has {} indices, expected {k}",
                self.0.len()
            )));
        }
        Ok(())
    }
}

impl fmt::Display for Selection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (pos, i) in self.0.iter().enumerate() {
            if pos > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", i + 1)?;
        }
        write!(f, "}}")
    }
}

/// Which algorithm produced a report.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Greedy,
    LocalSearch,
    SSwap { s: usize },
    Exact,
    BruteForce,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Greedy => write!(f, "greedy"),
            Method::LocalSearch => write!(f, "local"),
            Method::SSwap { s } => write!(f, "sswap-{s}"),
            Method::Exact => write!(f, "exact"),
            Method::BruteForce => write!(f, "brute"),
        }
    }
}

/// Outcome of a solver run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    /// Proven optimal (exact methods).
    Optimal,
    /// A feasible solution without an optimality proof (heuristics).
    Feasible,
    NodeLimit,
    TimeLimit,
}

impl Status {
    pub fn is_limit(self) -> bool {
        matches!(self, Status::NodeLimit | Status::TimeLimit)
    }
}

/// A support with its objective value and bookkeeping.
#[derive(Clone, Debug)]
pub struct SolveReport {
    pub value: f64,
    pub selection: Selection,
    /// Unit vector in `R^n`, zero outside the support.
    pub leading_vector: Vec<f64>,
    pub upper_bound: Option<f64>,
    pub gap: Option<f64>,
    pub method: Method,
    pub iterations: usize,
    pub wall_time: Duration,
    pub status: Status,
}

impl SolveReport {
    pub(crate) fn evaluate(inst: &SpcaInstance, selection: Selection, method: Method) -> Self {
        let (value, leading_vector) = eval_support(inst.a(), selection.indices(), None);
        SolveReport {
            value,
            selection,
            leading_vector,
            upper_bound: None,
            gap: None,
            method,
            iterations: 0,
            wall_time: Duration::ZERO,
            status: Status::Feasible,
        }
    }

    /// Attaches an upper bound and the derived relative gap.
    pub fn with_bound(mut self, upper_bound: f64) -> Self {
        self.upper_bound = Some(upper_bound);
        self.gap = Some(relative_gap(upper_bound, self.value));
        self
    }
}

/// `(upper - value) / max(value, 1e-12)`.
pub fn relative_gap(upper: f64, value: f64) -> f64 {
    (upper - value) / value.max(1e-12)
}

/// Top eigenpair of `A_{S,S}` embedded into `R^n`.
pub(crate) fn eval_support(
    a: &SymMatrix,
    support: &[usize],
    warm: Option<&[f64]>,
) -> (f64, Vec<f64>) {
    let n = a.dim();
    let mut x = vec![0.0; n];
    if support.is_empty() {
        return (0.0, x);
    }
    let sub = a.principal(support);
    let warm_sub: Option<Vec<f64>> = warm.map(|w| support.iter().map(|&i| w[i]).collect());
    let (pair, _) = top_eigen(&sub, warm_sub.as_deref());
    let mut v = pair.vector;
    canonical_sign(&mut v);
    for (pos, &i) in support.iter().enumerate() {
        x[i] = v[pos];
    }
    (pair.value, x)
}

/// `λ_max(A_{S,S})` and the corresponding unit vector embedded into `R^n`
/// (sign fixed so that its first nonzero entry is positive).
pub fn objective(inst: &SpcaInstance, sel: &Selection) -> Result<(f64, Vec<f64>)> {
    sel.check_for(inst.n(), inst.k())?;
    Ok(eval_support(inst.a(), sel.indices(), None))
}

/// `λ_max(sum_{i in S} c_i c_i^T)`, evaluated in the factor's `d`-dimensional
/// space.
pub fn gram_objective(factor: &GramFactor, sel: &Selection) -> Result<f64> {
    if let Some(&bad) = sel.indices().iter().find(|&&i| i >= factor.n()) {
        return Err(Error::IndexOutOfRange {
            index: bad,
            n: factor.n(),
        });
    }
    if sel.is_empty() {
        return Ok(0.0);
    }
    let m = factor.support_outer(sel.indices());
    Ok(top_eigen(&m, None).0.value)
}

fn unit(d: usize, i: usize) -> Vec<f64> {
    let mut e = vec![0.0; d];
    e[i] = 1.0;
    e
}

/// The instance on which greedy is off by a factor of exactly `k`:
/// `d = k + 1`, `n = 2k`, columns `e_1..e_k` followed by `k` copies of
/// `e_{k+1}`.
pub fn gen_greedy_tight(k: usize) -> Result<SpcaInstance> {
    if k < 2 {
        return Err(Error::InvalidArgument(
            "tight greedy instance needs k >= 2".into(),
        ));
    }
    let cols: Vec<Vec<f64>> = (0..2 * k).map(|i| unit(k + 1, i.min(k))).collect();
    SpcaInstance::from_factor(GramFactor::from_columns(&cols)?, k)
}

/// The instance on which `s`-swap local search stalls at value `s` while
/// the optimum is `k`: `s` blocks of `e_1..e_k` followed by `k` copies of
/// `e_{k+1}` (`n = (s + 1) k`, `d = k + 1`).
pub fn gen_sswap_tight(k: usize, s: usize) -> Result<SpcaInstance> {
    if s == 0 || s > k {
        return Err(Error::InvalidArgument(format!(
            "need 1 <= s <= k, got s = {s}, k = {k}"
        )));
    }
    let n = (s + 1) * k;
    let cols: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            if i < s * k {
                unit(k + 1, i % k)
            } else {
                unit(k + 1, k)
            }
        })
        .collect();
    SpcaInstance::from_factor(GramFactor::from_columns(&cols)?, k)
}

/// The locally optimal start set of [`gen_sswap_tight`]: the first
/// `k - s + 1` columns plus the first column of blocks `2..=s`.
pub fn sswap_tight_start(k: usize, s: usize) -> Selection {
    let mut idx: Vec<usize> = (0..=(k - s)).collect();
    idx.extend((1..s).map(|l| l * k));
    Selection::from_sorted(idx)
}

/// A random PSD matrix `G^T G` with `G` an `rank x n` matrix of uniform
/// `[-1, 1)` entries, reproducible from `seed`.
pub fn random_psd(n: usize, rank: usize, seed: u64) -> SymMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = Matrix::from_fn(rank.max(1), n, |_, _| rng.gen_range(-1.0..1.0));
    g.gram()
}

/// An `m x n` matrix of uniform `[-1, 1)` entries, reproducible from `seed`.
pub fn random_matrix(m: usize, n: usize, seed: u64) -> Matrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Matrix::from_fn(m, n, |_, _| rng.gen_range(-1.0..1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{dot, reference_spectrum};

    fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        let mut cur = Vec::new();
        fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
            if cur.len() == k {
                out.push(cur.clone());
                return;
            }
            for i in start..n {
                cur.push(i);
                rec(i + 1, n, k, cur, out);
                cur.pop();
            }
        }
        rec(0, n, k, &mut cur, &mut out);
        out
    }

    #[test]
    fn identity_objective_is_one() {
        let inst = SpcaInstance::new(SymMatrix::identity(5), 3).unwrap();
        let (v, x) = objective(&inst, &Selection::new(vec![4, 0, 2], 5).unwrap()).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
        assert!(x[1] == 0.0 && x[3] == 0.0);
    }

    #[test]
    fn objective_matches_pairwise_enumeration() {
        let a = random_psd(6, 6, 11);
        let inst = SpcaInstance::new(a.clone(), 2).unwrap();
        let mut best = f64::NEG_INFINITY;
        for pair in combinations(6, 2) {
            let (i, j) = (pair[0], pair[1]);
            // closed-form top eigenvalue of a 2x2 symmetric block
            let (p, q, r) = (a.get(i, i), a.get(j, j), a.get(i, j));
            let top = 0.5 * (p + q) + (0.25 * (p - q).powi(2) + r * r).sqrt();
            let (v, x) = objective(&inst, &Selection::new(pair, 6).unwrap()).unwrap();
            assert!((v - top).abs() < 1e-10);
            assert!((dot(&x, &a.matvec(&x)) - v).abs() < 1e-8);
            best = best.max(top);
        }
        assert!(best > 0.0);
    }

    #[test]
    fn objective_rejects_bad_selection() {
        let inst = SpcaInstance::new(SymMatrix::identity(3), 2).unwrap();
        assert!(Selection::new(vec![0, 3], 3).is_err());
        assert!(Selection::new(vec![1, 1], 3).is_err());
        let wrong_size = Selection::new(vec![0], 3).unwrap();
        assert!(objective(&inst, &wrong_size).is_err());
    }

    #[test]
    fn leading_vector_sign_is_canonical() {
        let a = SymMatrix::new(2, vec![1.0, -0.9, -0.9, 1.0]).unwrap();
        let inst = SpcaInstance::new(a, 2).unwrap();
        let (_, x) = objective(&inst, &Selection::prefix(2)).unwrap();
        assert!(x[0] > 0.0 && x[1] < 0.0);
    }

    #[test]
    fn gram_objective_small_cases() {
        let f = GramFactor::from_columns(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert!((gram_objective(&f, &Selection::prefix(2)).unwrap() - 1.0).abs() < 1e-12);
        let inst = gen_greedy_tight(3).unwrap();
        let s = Selection::new(vec![3, 4, 5], 6).unwrap();
        assert!((gram_objective(inst.factor(), &s).unwrap() - 3.0).abs() < 1e-10);
    }

    #[test]
    fn gram_and_direct_objective_agree() {
        for seed in 0..20 {
            let inst = SpcaInstance::new(random_psd(7, 4, seed), 3).unwrap();
            for sel in combinations(7, 3).into_iter().step_by(5) {
                let sel = Selection::new(sel, 7).unwrap();
                let (v, _) = objective(&inst, &sel).unwrap();
                let g = gram_objective(inst.factor(), &sel).unwrap();
                assert!((v - g).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn tight_greedy_instance_shape() {
        let inst = gen_greedy_tight(2).unwrap();
        assert_eq!((inst.n(), inst.factor().rank()), (4, 3));
        let top = reference_spectrum(&inst.a().principal(&[2, 3])).unwrap()[0].value;
        assert!((top - 2.0).abs() < 1e-12);
    }

    #[test]
    fn sswap_instance_start_value() {
        for (k, s) in [(3, 1), (4, 2), (4, 4), (5, 3)] {
            let inst = gen_sswap_tight(k, s).unwrap();
            assert_eq!(inst.n(), (s + 1) * k);
            let start = sswap_tight_start(k, s);
            assert_eq!(start.len(), k);
            let (v, _) = objective(&inst, &start).unwrap();
            assert!((v - s as f64).abs() < 1e-9, "k={k} s={s} v={v}");
        }
        assert!(gen_sswap_tight(3, 4).is_err());
    }
}
