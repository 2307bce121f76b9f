//! Greedy forward selection, 1-swap local search and `s`-swap local search.
//!
//! Ties are always broken towards the smallest candidate index and swaps are
//! accepted on first improvement, so every run is deterministic. Candidate
//! evaluations inside a round are independent and run on the rayon pool.

use std::time::Instant;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::oracle::{binomial, next_combination};
use crate::problem::{eval_support, Method, Selection, SolveReport, SpcaInstance};
use crate::spectral::SymMatrix;

/// A swap must improve the objective by more than this to be accepted.
pub const STRICT_TOL: f64 = 1e-8;

/// Largest neighbourhood `sum_t C(k,t) C(n-k,t)` that s-swap search accepts.
pub const SSWAP_BUDGET: u128 = 50_000_000;

fn tie_tol(v: f64) -> f64 {
    1e-9 * v.abs().max(1.0)
}

/// Index of the largest value; earlier entries win ties.
fn argmax_first(values: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (pos, &v) in values.iter().enumerate() {
        match best {
            Some(b) if v <= values[b] + tie_tol(values[b]) => {}
            _ => best = Some(pos),
        }
    }
    best
}

/// Grows `start` to `k` indices, each round adding the allowed index that
/// maximizes the top eigenvalue. Returns the added indices with the value
/// reached after each addition.
pub(crate) fn greedy_extend(
    a: &SymMatrix,
    start: &[usize],
    allowed: &[bool],
    k: usize,
) -> (Vec<usize>, Vec<(usize, f64)>) {
    let n = a.dim();
    let mut support: Vec<usize> = start.to_vec();
    support.sort_unstable();
    let mut in_set = vec![false; n];
    for &i in &support {
        in_set[i] = true;
    }
    let (_, mut x) = eval_support(a, &support, None);
    let mut path = Vec::new();
    while support.len() < k {
        let candidates: Vec<usize> = (0..n).filter(|&j| allowed[j] && !in_set[j]).collect();
        if candidates.is_empty() {
            break;
        }
        let evals: Vec<(f64, Vec<f64>)> = candidates
            .par_iter()
            .map(|&j| {
                let trial = with_added(&support, j);
                eval_support(a, &trial, Some(&x))
            })
            .collect();
        let values: Vec<f64> = evals.iter().map(|e| e.0).collect();
        let pick = argmax_first(&values).expect("non-empty candidate list");
        let j = candidates[pick];
        support = with_added(&support, j);
        in_set[j] = true;
        x = evals.into_iter().nth(pick).expect("index in range").1;
        path.push((j, values[pick]));
    }
    (support, path)
}

fn with_added(support: &[usize], j: usize) -> Vec<usize> {
    let mut s = support.to_vec();
    let pos = s.partition_point(|&i| i < j);
    s.insert(pos, j);
    s
}

fn with_swapped(support: &[usize], out: &[usize], inn: &[usize]) -> Vec<usize> {
    let mut s: Vec<usize> = support
        .iter()
        .copied()
        .filter(|i| !out.contains(i))
        .collect();
    s.extend_from_slice(inn);
    s.sort_unstable();
    s
}

/// The greedy path: the index added in each of the `k` rounds together
/// with the objective value after that round.
pub fn greedy_path(inst: &SpcaInstance) -> Vec<(usize, f64)> {
    greedy_extend(inst.a(), &[], &vec![true; inst.n()], inst.k()).1
}

/// Greedy forward selection: `k` rounds, each adding the index that
/// maximizes `λ_max` of the enlarged principal submatrix (smallest index on
/// ties).
pub fn greedy(inst: &SpcaInstance) -> SolveReport {
    let start = Instant::now();
    let (support, path) = greedy_extend(inst.a(), &[], &vec![true; inst.n()], inst.k());
    let mut report = SolveReport::evaluate(inst, Selection::from_sorted(support), Method::Greedy);
    report.iterations = path.len();
    report.wall_time = start.elapsed();
    report
}

/// Outcome of a swap search on raw index vectors.
pub(crate) struct SwapOutcome {
    pub support: Vec<usize>,
    pub value: f64,
    pub swaps: usize,
}

/// First-improvement 1-swap search. Indices marked `locked` never leave the
/// support; only indices marked `allowed` may enter it.
pub(crate) fn swap_search(
    a: &SymMatrix,
    init: &[usize],
    locked: &[bool],
    allowed: &[bool],
) -> SwapOutcome {
    let n = a.dim();
    let mut support = init.to_vec();
    support.sort_unstable();
    let (mut value, mut x) = eval_support(a, &support, None);
    let mut swaps = 0;
    'restart: loop {
        let outside: Vec<usize> = (0..n)
            .filter(|&j| allowed[j] && support.binary_search(&j).is_err())
            .collect();
        for &i in support.iter().filter(|&&i| !locked[i]) {
            let found = outside.par_iter().find_map_first(|&j| {
                let trial = with_swapped(&support, &[i], &[j]);
                let (v, y) = eval_support(a, &trial, Some(&x));
                (v > value + STRICT_TOL).then_some((trial, v, y))
            });
            if let Some((trial, v, y)) = found {
                support = trial;
                value = v;
                x = y;
                swaps += 1;
                continue 'restart;
            }
        }
        break;
    }
    SwapOutcome {
        support,
        value,
        swaps,
    }
}

fn check_init(inst: &SpcaInstance, init: &Selection) -> Result<()> {
    if let Some(&bad) = init.indices().iter().find(|&&i| i >= inst.n()) {
        return Err(Error::IndexOutOfRange {
            index: bad,
            n: inst.n(),
        });
    }
    if init.len() != inst.k() {
        return Err(Error::InvalidSelection(format!(
            "initial support has {} indices, expected {}",
            init.len(),
            inst.k()
        )));
    }
    Ok(())
}

/// 1-swap local search from `init` (first improvement, `i` ascending over
/// the support, `j` ascending over the complement, restart after each
/// accepted swap).
pub fn local_search(inst: &SpcaInstance, init: &Selection) -> Result<SolveReport> {
    check_init(inst, init)?;
    let start = Instant::now();
    let n = inst.n();
    let out = swap_search(inst.a(), init.indices(), &vec![false; n], &vec![true; n]);
    let mut report = SolveReport::evaluate(
        inst,
        Selection::from_sorted(out.support),
        Method::LocalSearch,
    );
    report.iterations = out.swaps;
    report.wall_time = start.elapsed();
    Ok(report)
}

/// Greedy followed by local search, the usual default.
pub fn greedy_local_search(inst: &SpcaInstance) -> SolveReport {
    let start = Instant::now();
    let g = greedy(inst);
    let mut report = local_search(inst, &g.selection).expect("greedy output is a valid start");
    report.iterations += g.iterations;
    report.wall_time = start.elapsed();
    report
}

fn all_combinations(items: &[usize], t: usize) -> Vec<Vec<usize>> {
    if t > items.len() {
        return Vec::new();
    }
    let mut pos: Vec<usize> = (0..t).collect();
    let mut out = Vec::new();
    loop {
        out.push(pos.iter().map(|&p| items[p]).collect());
        if !next_combination(&mut pos, items.len()) {
            break;
        }
    }
    out
}

/// `s`-swap local search: moves exchange `t <= s` support indices for `t`
/// outside indices. Sizes are tried in increasing order, out-sets and
/// in-sets lexicographically, and the first improving move is taken.
pub fn s_swap_local_search(inst: &SpcaInstance, s: usize, init: &Selection) -> Result<SolveReport> {
    check_init(inst, init)?;
    let (n, k) = (inst.n(), inst.k());
    if s == 0 || s > k {
        return Err(Error::InvalidArgument(format!(
            "swap size s = {s} must lie in 1..={k}"
        )));
    }
    let neighbourhood: u128 = (1..=s)
        .map(|t| binomial(k, t).saturating_mul(binomial(n - k, t)))
        .fold(0u128, u128::saturating_add);
    if neighbourhood > SSWAP_BUDGET {
        return Err(Error::GuardExceeded(format!(
            "{s}-swap neighbourhood has {neighbourhood} moves (limit {SSWAP_BUDGET})"
        )));
    }
    let start = Instant::now();
    let a = inst.a();
    let mut support = init.indices().to_vec();
    let (mut value, mut x) = eval_support(a, &support, None);
    let mut swaps = 0;
    'restart: loop {
        let outside: Vec<usize> = (0..n)
            .filter(|j| support.binary_search(j).is_err())
            .collect();
        for t in 1..=s {
            let ins = all_combinations(&outside, t);
            for out in all_combinations(&support, t) {
                let found = ins.par_iter().find_map_first(|inn| {
                    let trial = with_swapped(&support, &out, inn);
                    let (v, y) = eval_support(a, &trial, Some(&x));
                    (v > value + STRICT_TOL).then_some((trial, v, y))
                });
                if let Some((trial, v, y)) = found {
                    support = trial;
                    value = v;
                    x = y;
                    swaps += 1;
                    continue 'restart;
                }
            }
        }
        break;
    }
    let mut report =
        SolveReport::evaluate(inst, Selection::from_sorted(support), Method::SSwap { s });
    report.iterations = swaps;
    report.wall_time = start.elapsed();
    Ok(report)
}
