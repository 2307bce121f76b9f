//! Rank-one sparse SVD: pick `k1` rows and `k2` columns of a rectangular
//! matrix maximizing the largest singular value of the submatrix.
//!
//! The problem reduces to sparse PCA on the augmented matrix
//! `[[0, A], [A^T, 0]]`, whose spectrum is `±σ_i(A)`; shifting it by
//! `σ_max(A) I` makes it positive semidefinite so the SPCA bound machinery
//! applies with one cardinality constraint per block.

use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::bounds::{saddle_blocks, Block, SaddleOptions};
use crate::error::{Error, Result};
use crate::problem::Selection;
use crate::spectral::{
    largest_singular_triplet, largest_singular_triplet_warm, pivoted_cholesky, Matrix,
    SingularTriplet, SymMatrix, DEFAULT_RANK_TOL,
};

const STRICT_TOL: f64 = 1e-8;

/// A rectangular matrix with row and column sparsity levels.
#[derive(Clone, Debug)]
pub struct SsvdInstance {
    a: Matrix,
    k1: usize,
    k2: usize,
}

impl SsvdInstance {
    pub fn new(a: Matrix, k1: usize, k2: usize) -> Result<Self> {
        if k1 == 0 || k1 > a.nrows() || k2 == 0 || k2 > a.ncols() {
            return Err(Error::InvalidArgument(format!(
                "need 1 <= k1 <= {} and 1 <= k2 <= {}, got k1 = {k1}, k2 = {k2}",
                a.nrows(),
                a.ncols()
            )));
        }
        Ok(SsvdInstance { a, k1, k2 })
    }

    pub fn a(&self) -> &Matrix {
        &self.a
    }

    pub fn k1(&self) -> usize {
        self.k1
    }

    pub fn k2(&self) -> usize {
        self.k2
    }
}

/// Selected rows and columns with the top singular triplet of the
/// submatrix embedded into `R^m` and `R^n`.
#[derive(Clone, Debug)]
pub struct SsvdReport {
    pub value: f64,
    pub rows: Selection,
    pub cols: Selection,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub iterations: usize,
    pub wall_time: Duration,
}

impl SsvdReport {
    pub(crate) fn evaluate(a: &Matrix, rows: Selection, cols: Selection) -> Self {
        let t = ssvd_eval(a, rows.indices(), cols.indices(), None);
        let mut u = vec![0.0; a.nrows()];
        let mut v = vec![0.0; a.ncols()];
        for (pos, &i) in rows.indices().iter().enumerate() {
            u[i] = t.u[pos];
        }
        for (pos, &j) in cols.indices().iter().enumerate() {
            v[j] = t.v[pos];
        }
        SsvdReport {
            value: t.sigma,
            rows,
            cols,
            u,
            v,
            iterations: 0,
            wall_time: Duration::ZERO,
        }
    }
}

/// Top singular triplet of `A_{S1,S2}`; `warm_v` is indexed by column of `A`.
pub(crate) fn ssvd_eval(
    a: &Matrix,
    s1: &[usize],
    s2: &[usize],
    warm_v: Option<&[f64]>,
) -> SingularTriplet {
    let sub = a.submatrix(s1, s2);
    let warm: Option<Vec<f64>> = warm_v.map(|w| s2.iter().map(|&j| w[j]).collect());
    largest_singular_triplet_warm(&sub, warm.as_deref()).expect("submatrix is non-empty")
}

/// The symmetric `(m + n) x (m + n)` matrix `[[0, A], [A^T, 0]]`.
pub fn augment(a: &Matrix) -> SymMatrix {
    let (m, n) = (a.nrows(), a.ncols());
    SymMatrix::from_fn(m + n, |i, j| {
        if i < m && j >= m {
            a.get(i, j - m)
        } else {
            0.0
        }
    })
}

/// `Ā + σ I`, positive semidefinite once `σ >= σ_max(A)`.
pub fn shift_psd(abar: &SymMatrix, sigma_max: f64) -> SymMatrix {
    abar.shifted(sigma_max)
}

fn check_supports(a: &Matrix, s1: &Selection, s2: &Selection) -> Result<()> {
    if let Some(&bad) = s1.indices().iter().find(|&&i| i >= a.nrows()) {
        return Err(Error::IndexOutOfRange {
            index: bad,
            n: a.nrows(),
        });
    }
    if let Some(&bad) = s2.indices().iter().find(|&&j| j >= a.ncols()) {
        return Err(Error::IndexOutOfRange {
            index: bad,
            n: a.ncols(),
        });
    }
    if s1.is_empty() || s2.is_empty() {
        return Err(Error::InvalidSelection(
            "row and column supports must be non-empty".into(),
        ));
    }
    Ok(())
}

/// `σ_max(A_{S1,S2})`.
pub fn ssvd_objective(a: &Matrix, s1: &Selection, s2: &Selection) -> Result<f64> {
    check_supports(a, s1, s2)?;
    Ok(ssvd_eval(a, s1.indices(), s2.indices(), None).sigma)
}

fn argmax_first(values: &[f64]) -> usize {
    let mut best = 0;
    for (pos, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] + 1e-9 * values[best].abs().max(1.0) {
            best = pos;
        }
    }
    best
}

fn inserted(s: &[usize], j: usize) -> Vec<usize> {
    let mut out = s.to_vec();
    let pos = out.partition_point(|&i| i < j);
    out.insert(pos, j);
    out
}

fn replaced(s: &[usize], out: usize, inn: usize) -> Vec<usize> {
    let mut r: Vec<usize> = s.iter().copied().filter(|&i| i != out).collect();
    let pos = r.partition_point(|&i| i < inn);
    r.insert(pos, inn);
    r
}

/// Adds the best row (or column, with `rows == false`) to the current pair.
fn greedy_step(a: &Matrix, s1: &mut Vec<usize>, s2: &mut Vec<usize>, rows: bool) {
    let dim = if rows { a.nrows() } else { a.ncols() };
    let current = if rows { &*s1 } else { &*s2 };
    let candidates: Vec<usize> = (0..dim)
        .filter(|j| current.binary_search(j).is_err())
        .collect();
    let values: Vec<f64> = candidates
        .par_iter()
        .map(|&j| {
            if rows {
                ssvd_eval(a, &inserted(s1, j), s2, None).sigma
            } else {
                ssvd_eval(a, s1, &inserted(s2, j), None).sigma
            }
        })
        .collect();
    let j = candidates[argmax_first(&values)];
    if rows {
        *s1 = inserted(s1, j);
    } else {
        *s2 = inserted(s2, j);
    }
}

/// Greedy selection: seed with the entry of largest magnitude, then add a
/// row and a column per round while both sides are below their targets,
/// then grow the larger side alone. Ties go to the smallest index.
pub fn greedy_ssvd(inst: &SsvdInstance) -> SsvdReport {
    let start = Instant::now();
    let a = inst.a();
    let (k1, k2) = (inst.k1(), inst.k2());
    let (mut bi, mut bj, mut bv) = (0, 0, f64::NEG_INFINITY);
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            let v = a.get(i, j).abs();
            if v > bv {
                (bi, bj, bv) = (i, j, v);
            }
        }
    }
    let mut s1 = vec![bi];
    let mut s2 = vec![bj];
    let mut rounds = 1;
    for l in 2..=k1.max(k2) {
        if l <= k1.min(k2) {
            greedy_step(a, &mut s1, &mut s2, true);
            greedy_step(a, &mut s1, &mut s2, false);
        } else if k1 <= k2 {
            greedy_step(a, &mut s1, &mut s2, false);
        } else {
            greedy_step(a, &mut s1, &mut s2, true);
        }
        rounds += 1;
    }
    let mut report =
        SsvdReport::evaluate(a, Selection::from_sorted(s1), Selection::from_sorted(s2));
    report.iterations = rounds;
    report.wall_time = start.elapsed();
    report
}

/// Neighbourhood of [`local_search_ssvd_with`].
#[derive(Clone, Copy, Debug)]
pub struct SsvdLocalOptions {
    /// Also try swapping only a row or only a column when no paired swap
    /// improves. Disable to search the paired neighbourhood alone.
    pub single_side_moves: bool,
}

impl Default for SsvdLocalOptions {
    fn default() -> Self {
        SsvdLocalOptions {
            single_side_moves: true,
        }
    }
}

/// Local search with default options.
pub fn local_search_ssvd(
    inst: &SsvdInstance,
    rows: &Selection,
    cols: &Selection,
) -> Result<SsvdReport> {
    local_search_ssvd_with(inst, rows, cols, SsvdLocalOptions::default())
}

/// A row or column exchange `(out, in)`, or none.
type Swap = Option<(usize, usize)>;

/// First-improvement local search over simultaneous row+column swaps
/// `(i1, j1, i2, j2)` in lexicographic order, optionally followed by
/// row-only and column-only swaps; restarts after every accepted move.
pub fn local_search_ssvd_with(
    inst: &SsvdInstance,
    rows: &Selection,
    cols: &Selection,
    opts: SsvdLocalOptions,
) -> Result<SsvdReport> {
    let a = inst.a();
    check_supports(a, rows, cols)?;
    if rows.len() != inst.k1() || cols.len() != inst.k2() {
        return Err(Error::InvalidSelection(format!(
            "initial supports have sizes ({}, {}), expected ({}, {})",
            rows.len(),
            cols.len(),
            inst.k1(),
            inst.k2()
        )));
    }
    let start = Instant::now();
    let (m, n) = (a.nrows(), a.ncols());
    let mut s1 = rows.indices().to_vec();
    let mut s2 = cols.indices().to_vec();
    let first = ssvd_eval(a, &s1, &s2, None);
    let mut value = first.sigma;
    let mut v_full = embed(&first.v, &s2, n);
    let mut moves = 0;

    loop {
        let out1: Vec<usize> = (0..m).filter(|i| s1.binary_search(i).is_err()).collect();
        let out2: Vec<usize> = (0..n).filter(|j| s2.binary_search(j).is_err()).collect();
        let mut neighbourhood: Vec<(Swap, Swap)> = Vec::new();
        for &i1 in &s1 {
            for &j1 in &out1 {
                for &i2 in &s2 {
                    for &j2 in &out2 {
                        neighbourhood.push((Some((i1, j1)), Some((i2, j2))));
                    }
                }
            }
        }
        if opts.single_side_moves {
            for &i1 in &s1 {
                for &j1 in &out1 {
                    neighbourhood.push((Some((i1, j1)), None));
                }
            }
            for &i2 in &s2 {
                for &j2 in &out2 {
                    neighbourhood.push((None, Some((i2, j2))));
                }
            }
        }
        let found = neighbourhood.par_iter().find_map_first(|(rs, cs)| {
            let r = rs.map_or_else(|| s1.clone(), |(o, i)| replaced(&s1, o, i));
            let c = cs.map_or_else(|| s2.clone(), |(o, i)| replaced(&s2, o, i));
            let trial = ssvd_eval(a, &r, &c, Some(&v_full));
            (trial.sigma > value + STRICT_TOL).then_some((r, c, trial))
        });
        match found {
            Some((r, c, trial)) => {
                s1 = r;
                s2 = c;
                value = trial.sigma;
                v_full = embed(&trial.v, &s2, n);
                moves += 1;
            }
            None => break,
        }
    }
    let mut report =
        SsvdReport::evaluate(a, Selection::from_sorted(s1), Selection::from_sorted(s2));
    report.iterations = moves;
    report.wall_time = start.elapsed();
    Ok(report)
}

fn embed(x: &[f64], support: &[usize], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n];
    for (pos, &i) in support.iter().enumerate() {
        out[i] = x[pos];
    }
    out
}

/// Indices of the `s` largest-magnitude entries, ties to the smallest index,
/// in ascending order.
fn top_magnitude(x: &[f64], s: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&i, &j| x[j].abs().total_cmp(&x[i].abs()).then(i.cmp(&j)));
    let mut keep: Vec<usize> = order.into_iter().take(s).collect();
    keep.sort_unstable();
    keep
}

/// Keeps the `s` largest-magnitude entries of `x` (signs preserved), zeroes
/// the rest and rescales to unit length.
pub fn normalized_truncation(x: &[f64], s: usize) -> Result<Vec<f64>> {
    if s == 0 || s > x.len() {
        return Err(Error::InvalidArgument(format!(
            "truncation level {s} must lie in 1..={}",
            x.len()
        )));
    }
    let keep = top_magnitude(x, s);
    let mut out = vec![0.0; x.len()];
    for &i in &keep {
        out[i] = x[i];
    }
    let nrm = out.iter().map(|v| v * v).sum::<f64>().sqrt();
    if nrm == 0.0 {
        return Err(Error::InvalidArgument(
            "cannot truncate an all-zero vector".into(),
        ));
    }
    out.iter_mut().for_each(|v| *v /= nrm);
    Ok(out)
}

/// Candidate supports from a left vector `u`: its top-`k1` rows, paired
/// with the top-`k2` columns of the best response `A^T û`.
fn complete_from_left(
    a: &Matrix,
    u: &[f64],
    k1: usize,
    k2: usize,
) -> Option<(Vec<usize>, Vec<usize>)> {
    let uh = normalized_truncation(u, k1).ok()?;
    let resp = a.matvec_transpose(&uh);
    normalized_truncation(&resp, k2).ok()?;
    Some((top_magnitude(u, k1), top_magnitude(&resp, k2)))
}

fn complete_from_right(
    a: &Matrix,
    v: &[f64],
    k1: usize,
    k2: usize,
) -> Option<(Vec<usize>, Vec<usize>)> {
    let vh = normalized_truncation(v, k2).ok()?;
    let resp = a.matvec(&vh);
    normalized_truncation(&resp, k1).ok()?;
    Some((top_magnitude(&resp, k1), top_magnitude(v, k2)))
}

/// Truncation heuristic: every column truncated to `k1` rows, every row
/// truncated to `k2` columns, and the truncated top singular pair; each
/// candidate is paired with its truncated best response and the best pair
/// of supports is returned.
pub fn truncation_ssvd(inst: &SsvdInstance) -> SsvdReport {
    let start = Instant::now();
    let a = inst.a();
    let (m, n) = (a.nrows(), a.ncols());
    let (k1, k2) = (inst.k1(), inst.k2());
    let mut candidates: Vec<(Vec<usize>, Vec<usize>)> = Vec::new();
    candidates.extend((0..n).filter_map(|j| complete_from_left(a, &a.column(j), k1, k2)));
    candidates.extend((0..m).filter_map(|i| complete_from_right(a, a.row(i), k1, k2)));
    if let Ok(top) = largest_singular_triplet(a) {
        candidates.extend(complete_from_left(a, &top.u, k1, k2));
    }
    if candidates.is_empty() {
        candidates.push(((0..k1).collect(), (0..k2).collect()));
    }
    let values: Vec<f64> = candidates
        .par_iter()
        .map(|(r, c)| ssvd_eval(a, r, c, None).sigma)
        .collect();
    let best = argmax_first(&values);
    let (r, c) = candidates.swap_remove(best);
    let mut report = SsvdReport::evaluate(a, Selection::from_sorted(r), Selection::from_sorted(c));
    report.iterations = values.len();
    report.wall_time = start.elapsed();
    report
}

/// Upper bound on the optimal sparse singular value: the saddle bound of
/// the shifted augmented matrix with `k1` rows and `k2` columns chosen,
/// minus the shift.
pub fn upper_bound_ssvd(inst: &SsvdInstance, max_iters: usize) -> Result<f64> {
    let a = inst.a();
    let (m, n) = (a.nrows(), a.ncols());
    let sigma = largest_singular_triplet(a)?.sigma;
    let shifted = shift_psd(&augment(a), sigma);
    let factor = pivoted_cholesky(&shifted, DEFAULT_RANK_TOL)?;
    let blocks = [
        Block {
            indices: (0..m).collect(),
            k: inst.k1(),
        },
        Block {
            indices: (m..m + n).collect(),
            k: inst.k2(),
        },
    ];
    let opts = SaddleOptions {
        max_iters,
        ..SaddleOptions::default()
    };
    let (bound, _) = saddle_blocks(&factor, &blocks, &opts)?;
    Ok(bound - sigma)
}

/// The instance on which greedy and local search are off by exactly
/// `sqrt(k1 k2)`: `A = [[I, 0], [0, 1 1^T]]` with `k2 x k2` blocks.
pub fn gen_ssvd_tight(k1: usize, k2: usize) -> Result<SsvdInstance> {
    if k1 == 0 || k1 > k2 {
        return Err(Error::InvalidArgument(format!(
            "need 1 <= k1 <= k2, got ({k1}, {k2})"
        )));
    }
    let d = 2 * k2;
    let a = Matrix::from_fn(d, d, |i, j| {
        if i < k2 && j < k2 {
            if i == j {
                1.0
            } else {
                0.0
            }
        } else if i >= k2 && j >= k2 {
            1.0
        } else {
            0.0
        }
    });
    SsvdInstance::new(a, k1, k2)
}
