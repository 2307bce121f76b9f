//! Exhaustive enumeration oracles for small instances.

use std::time::Instant;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::problem::{eval_support, Method, Selection, SolveReport, SpcaInstance, Status};
use crate::spectral::Matrix;
use crate::ssvd::{ssvd_eval, SsvdInstance, SsvdReport};

/// Default guard `g`: enumeration is allowed up to `C(g, floor(g/2))` subsets.
pub const DEFAULT_SIZE_GUARD: usize = 25;

/// Values closer than this are ties, resolved towards the lexicographically
/// smaller support.
const TIE_TOL: f64 = 1e-9;

/// `C(n, k)`, saturating at `u128::MAX`.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// Advances `comb` (a strictly increasing `k`-subset of `0..n`) to its
/// lexicographic successor; returns `false` after the last subset.
pub(crate) fn next_combination(comb: &mut [usize], n: usize) -> bool {
    let k = comb.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if comb[i] < n - k + i {
            comb[i] += 1;
            for j in i + 1..k {
                comb[j] = comb[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Scans all `k`-subsets of `0..n` whose first element is `first`,
/// returning the best `(value, subset)` under the tie rule.
fn best_with_prefix<F>(n: usize, k: usize, first: usize, eval: &F) -> Option<(f64, Vec<usize>)>
where
    F: Fn(&[usize]) -> f64 + Sync,
{
    if first + k > n {
        return None;
    }
    let mut comb: Vec<usize> = (first..first + k).collect();
    let mut best: Option<(f64, Vec<usize>)> = None;
    loop {
        let v = eval(&comb);
        if best.as_ref().is_none_or(|(b, _)| v > b + TIE_TOL) {
            best = Some((v, comb.clone()));
        }
        if k == 1 {
            break;
        }
        // successors of the tail never drop below first + 1
        if !next_combination(&mut comb[1..], n) {
            break;
        }
    }
    best
}

/// Enumerates every `k`-subset, partitioned by first element across the
/// rayon pool and merged in lexicographic order so that the winner does not
/// depend on the number of workers.
fn enumerate_best<F>(n: usize, k: usize, eval: F) -> (f64, Vec<usize>)
where
    F: Fn(&[usize]) -> f64 + Sync,
{
    let parts: Vec<Option<(f64, Vec<usize>)>> = (0..n)
        .into_par_iter()
        .map(|first| best_with_prefix(n, k, first, &eval))
        .collect();
    let mut best: Option<(f64, Vec<usize>)> = None;
    for part in parts.into_iter().flatten() {
        if best.as_ref().is_none_or(|(b, _)| part.0 > b + TIE_TOL) {
            best = Some(part);
        }
    }
    best.expect("at least one subset")
}

fn guard_limit(size_guard: usize) -> u128 {
    binomial(size_guard, size_guard / 2)
}

/// Exact `w* = max_{|S| = k} λ_max(A_{S,S})` by enumerating every support.
///
/// Refuses to run when `C(n, k)` exceeds `C(size_guard, size_guard / 2)`.
pub fn brute_force(inst: &SpcaInstance, size_guard: usize) -> Result<SolveReport> {
    let (n, k) = (inst.n(), inst.k());
    let count = binomial(n, k);
    if count > guard_limit(size_guard) {
        return Err(Error::GuardExceeded(format!(
            "C({n},{k}) = {count} subsets exceeds the brute-force limit C({size_guard},{}); \
             use the exact branch-and-bound solver instead",
            size_guard / 2
        )));
    }
    let start = Instant::now();
    let a = inst.a();
    let (_, support) = enumerate_best(n, k, |s| eval_support(a, s, None).0);
    let mut report =
        SolveReport::evaluate(inst, Selection::from_sorted(support), Method::BruteForce);
    report.upper_bound = Some(report.value);
    report.gap = Some(0.0);
    report.iterations = count as usize;
    report.status = Status::Optimal;
    report.wall_time = start.elapsed();
    Ok(report)
}

/// Exact `max σ_max(A_{S1,S2})` over `|S1| = k1`, `|S2| = k2`.
///
/// Refuses to run when `C(m, k1) C(n, k2)` exceeds `limit`.
pub fn brute_force_ssvd(inst: &SsvdInstance, limit: u128) -> Result<SsvdReport> {
    let a: &Matrix = inst.a();
    let (m, n) = (a.nrows(), a.ncols());
    let (k1, k2) = (inst.k1(), inst.k2());
    let count = binomial(m, k1).saturating_mul(binomial(n, k2));
    if count > limit {
        return Err(Error::GuardExceeded(format!(
            "C({m},{k1})*C({n},{k2}) = {count} pairs exceeds the limit {limit}"
        )));
    }
    let start = Instant::now();
    let mut rows: Vec<Vec<usize>> = Vec::new();
    let mut comb: Vec<usize> = (0..k1).collect();
    loop {
        rows.push(comb.clone());
        if !next_combination(&mut comb, m) {
            break;
        }
    }
    let parts: Vec<(f64, Vec<usize>, Vec<usize>)> = rows
        .par_iter()
        .map(|s1| {
            let mut cols: Vec<usize> = (0..k2).collect();
            let mut best: Option<(f64, Vec<usize>)> = None;
            loop {
                let v = ssvd_eval(a, s1, &cols, None).sigma;
                if best.as_ref().is_none_or(|(b, _)| v > b + TIE_TOL) {
                    best = Some((v, cols.clone()));
                }
                if !next_combination(&mut cols, n) {
                    break;
                }
            }
            let (v, s2) = best.expect("non-empty");
            (v, s1.clone(), s2)
        })
        .collect();
    let mut best = &parts[0];
    for p in &parts[1..] {
        if p.0 > best.0 + TIE_TOL {
            best = p;
        }
    }
    let mut report = SsvdReport::evaluate(
        a,
        Selection::from_sorted(best.1.clone()),
        Selection::from_sorted(best.2.clone()),
    );
    report.iterations = count as usize;
    report.wall_time = start.elapsed();
    Ok(report)
}
