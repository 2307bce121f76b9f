//! Best-first branch-and-bound over supports.
//!
//! A node fixes some indices in (`T1`) and some out (`T0`). Its bound is the
//! restricted saddle bound, warm-started from the parent's multipliers and
//! capped by the parent's bound; fully determined nodes are evaluated
//! exactly. Every node also produces an incumbent by greedily completing
//! `T1` and polishing it with a 1-swap search that keeps `T1` in place.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::{Duration, Instant};

use crate::bounds::{saddle_upper_bound, SaddleOptions};
use crate::error::{Error, Result};
use crate::heuristics::{greedy_extend, swap_search};
use crate::problem::{eval_support, Method, Selection, SolveReport, SpcaInstance, Status};
use crate::spectral::{dot, top_eigen, GramFactor};

/// Options of [`solve_exact`].
#[derive(Clone, Debug)]
pub struct BnbOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub time_limit: Option<Duration>,
    pub node_limit: Option<usize>,
    /// Saddle iterations at the root.
    pub root_iters: usize,
    /// Saddle iterations below the root.
    pub node_iters: usize,
    /// Keep pruned nodes and the bound/incumbent history in the trace.
    pub record_trace: bool,
}

impl Default for BnbOptions {
    fn default() -> Self {
        BnbOptions {
            abs_tol: 1e-6,
            rel_tol: 1e-4,
            time_limit: None,
            node_limit: None,
            root_iters: 200,
            node_iters: 50,
            record_trace: false,
        }
    }
}

impl BnbOptions {
    fn tolerance(&self, incumbent: f64) -> f64 {
        self.abs_tol.max(self.rel_tol * incumbent.abs())
    }
}

/// A subproblem of the search tree.
#[derive(Clone, Debug)]
pub struct BnbNode {
    pub fixed_one: Vec<usize>,
    pub fixed_zero: Vec<usize>,
    pub bound: f64,
    pub parent_mu: Vec<f64>,
    pub depth: usize,
}

impl BnbNode {
    pub fn root(n: usize) -> Self {
        BnbNode {
            fixed_one: Vec::new(),
            fixed_zero: Vec::new(),
            bound: f64::INFINITY,
            parent_mu: vec![0.0; n],
            depth: 0,
        }
    }

    fn status(&self, n: usize) -> Vec<u8> {
        let mut s = vec![0u8; n];
        self.fixed_one.iter().for_each(|&i| s[i] = 1);
        self.fixed_zero.iter().for_each(|&i| s[i] = 2);
        s
    }

    /// The support if the node leaves no choice, `None` otherwise.
    fn forced_support(&self, n: usize, k: usize) -> Option<Vec<usize>> {
        if self.fixed_one.len() == k {
            let mut s = self.fixed_one.clone();
            s.sort_unstable();
            Some(s)
        } else if n - self.fixed_zero.len() == k {
            let st = self.status(n);
            Some((0..n).filter(|&i| st[i] != 2).collect())
        } else {
            None
        }
    }
}

/// Bookkeeping of a search, for inspection and testing.
#[derive(Clone, Debug, Default)]
pub struct BnbTrace {
    /// Nodes discarded because their bound could not beat the incumbent.
    pub pruned: Vec<BnbNode>,
    /// Global upper bound after each processed node.
    pub upper_history: Vec<f64>,
    /// Incumbent value after each processed node.
    pub incumbent_history: Vec<f64>,
    /// Every node incumbent with the bound of the node that produced it.
    pub node_incumbents: Vec<(f64, f64)>,
    pub nodes: usize,
}

/// Evaluated node: bound, relaxation eigenvector, multipliers and the
/// node's incumbent.
struct Evaluated {
    bound: f64,
    vector: Vec<f64>,
    mu: Vec<f64>,
    incumbent: (f64, Vec<usize>),
}

/// Valid upper bound on every completion of `node`.
///
/// Leaves (all `k` indices decided) are evaluated exactly; other nodes run
/// `iters` saddle iterations warm-started at `node.parent_mu`, and the result
/// is capped by `node.bound`.
pub fn node_bound(node: &BnbNode, inst: &SpcaInstance, iters: usize) -> Result<f64> {
    Ok(bound_of(node, inst, iters)?.0)
}

fn bound_of(
    node: &BnbNode,
    inst: &SpcaInstance,
    iters: usize,
) -> Result<(f64, Vec<f64>, Vec<f64>)> {
    let (n, k) = (inst.n(), inst.k());
    if node.fixed_one.len() > k || n < k + node.fixed_zero.len() {
        return Err(Error::InvalidArgument("infeasible node".into()));
    }
    if let Some(s) = node.forced_support(n, k) {
        let (v, _) = eval_support(inst.a(), &s, None);
        let factor = inst.factor();
        let mut mu = factor.col_norms_sq().to_vec();
        s.iter().for_each(|&i| mu[i] = 0.0);
        let (pair, _) = top_eigen(&factor.support_outer(&s), None);
        return Ok((v.min(node.bound), pair.vector, mu));
    }
    let opts = SaddleOptions {
        max_iters: iters,
        fixed_one: node.fixed_one.clone(),
        fixed_zero: node.fixed_zero.clone(),
        warm_mu: Some(node.parent_mu.clone()),
        early_stop: true,
        ..SaddleOptions::default()
    };
    let (b, st) = saddle_upper_bound(inst.factor(), k, &opts)?;
    Ok((b.min(node.bound), st.best_vector, st.best_mu))
}

/// The free index with the largest `(c_i^T v)^2`, smallest index on ties.
pub fn branch_select(node: &BnbNode, factor: &GramFactor, vector: &[f64]) -> Option<usize> {
    let st = node.status(factor.n());
    let mut best: Option<(usize, f64)> = None;
    for i in (0..factor.n()).filter(|&i| st[i] == 0) {
        let score = dot(factor.column(i), vector).powi(2);
        if best.is_none_or(|(_, b)| score > b + 1e-12 * b.abs().max(1e-300)) {
            best = Some((i, score));
        }
    }
    best.map(|b| b.0)
}

fn evaluate(node: &BnbNode, inst: &SpcaInstance, iters: usize) -> Result<Evaluated> {
    let (n, k) = (inst.n(), inst.k());
    let (bound, vector, mu) = bound_of(node, inst, iters)?;
    let st = node.status(n);
    let allowed: Vec<bool> = st.iter().map(|&s| s != 2).collect();
    let locked: Vec<bool> = st.iter().map(|&s| s == 1).collect();
    let (start, _) = greedy_extend(inst.a(), &node.fixed_one, &allowed, k);
    let polished = swap_search(inst.a(), &start, &locked, &allowed);
    Ok(Evaluated {
        bound,
        vector,
        mu,
        incumbent: (polished.value, polished.support),
    })
}

struct Queued {
    bound: f64,
    seq: usize,
    node: BnbNode,
    vector: Vec<f64>,
}

impl PartialEq for Queued {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Queued {}

impl PartialOrd for Queued {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Queued {
    // max-heap: larger bound first, then earlier insertion
    fn cmp(&self, other: &Self) -> Ordering {
        self.bound
            .total_cmp(&other.bound)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

/// Exact solution by branch-and-bound.
///
/// On completion the report is flagged [`Status::Optimal`] and its upper
/// bound is within `max(abs_tol, rel_tol * value)` of the value. When a
/// limit is hit the best incumbent is returned together with a valid global
/// bound and a limit status.
pub fn solve_exact(inst: &SpcaInstance, opts: &BnbOptions) -> SolveReport {
    solve_exact_traced(inst, opts).0
}

/// [`solve_exact`] returning the search trace as well.
pub fn solve_exact_traced(inst: &SpcaInstance, opts: &BnbOptions) -> (SolveReport, BnbTrace) {
    let start = Instant::now();
    let (n, k) = (inst.n(), inst.k());
    let mut trace = BnbTrace::default();
    let root = BnbNode::root(n);
    let ev = evaluate(&root, inst, opts.root_iters).expect("root node is feasible");
    trace.nodes = 1;
    if opts.record_trace {
        trace.node_incumbents.push((ev.incumbent.0, ev.bound));
    }
    let mut incumbent = ev.incumbent.clone();
    let mut heap = BinaryHeap::new();
    let mut seq = 0;
    let mut status = Status::Optimal;
    let mut final_bound = incumbent.0;

    let root_node = BnbNode {
        bound: ev.bound,
        parent_mu: ev.mu,
        ..root
    };
    if ev.bound > incumbent.0 + opts.tolerance(incumbent.0)
        && root_node.forced_support(n, k).is_none()
    {
        heap.push(Queued {
            bound: ev.bound,
            seq,
            node: root_node,
            vector: ev.vector,
        });
        seq += 1;
    } else {
        final_bound = ev.bound.max(incumbent.0);
    }

    while let Some(top) = heap.pop() {
        let tol = opts.tolerance(incumbent.0);
        if top.bound <= incumbent.0 + tol {
            final_bound = top.bound.max(incumbent.0);
            if opts.record_trace {
                trace.pruned.push(top.node);
                trace.pruned.extend(heap.drain().map(|q| q.node));
            }
            heap.clear();
            break;
        }
        let limit = if opts.node_limit.is_some_and(|l| trace.nodes >= l) {
            Some(Status::NodeLimit)
        } else if opts.time_limit.is_some_and(|t| start.elapsed() >= t) {
            Some(Status::TimeLimit)
        } else {
            None
        };
        if let Some(l) = limit {
            status = l;
            final_bound = top.bound.max(incumbent.0);
            heap.clear();
            break;
        }
        let Some(i) = branch_select(&top.node, inst.factor(), &top.vector) else {
            // nothing free: the node is a leaf and its bound is exact
            continue;
        };
        let mut one = top.node.fixed_one.clone();
        one.push(i);
        let mut zero = top.node.fixed_zero.clone();
        zero.push(i);
        let children = [
            BnbNode {
                fixed_one: one,
                fixed_zero: top.node.fixed_zero.clone(),
                bound: top.bound,
                parent_mu: top.node.parent_mu.clone(),
                depth: top.node.depth + 1,
            },
            BnbNode {
                fixed_one: top.node.fixed_one.clone(),
                fixed_zero: zero,
                bound: top.bound,
                parent_mu: top.node.parent_mu.clone(),
                depth: top.node.depth + 1,
            },
        ];
        let mut evaluated = Vec::with_capacity(2);
        for child in children {
            if child.fixed_one.len() > k || n < k + child.fixed_zero.len() {
                continue;
            }
            let ev = evaluate(&child, inst, opts.node_iters).expect("child is feasible");
            trace.nodes += 1;
            if opts.record_trace {
                trace.node_incumbents.push((ev.incumbent.0, ev.bound));
            }
            if ev.incumbent.0 > incumbent.0 {
                incumbent = ev.incumbent.clone();
            }
            evaluated.push((child, ev));
        }
        for (child, ev) in evaluated {
            let node = BnbNode {
                bound: ev.bound,
                parent_mu: ev.mu,
                ..child
            };
            let leaf = node.forced_support(n, k).is_some();
            if leaf || ev.bound <= incumbent.0 + opts.tolerance(incumbent.0) {
                if opts.record_trace && !leaf {
                    trace.pruned.push(node);
                }
                continue;
            }
            heap.push(Queued {
                bound: ev.bound,
                seq,
                node,
                vector: ev.vector,
            });
            seq += 1;
        }
        if opts.record_trace {
            let upper = heap
                .peek()
                .map_or(incumbent.0, |q| q.bound.max(incumbent.0));
            trace.upper_history.push(upper);
            trace.incumbent_history.push(incumbent.0);
        }
    }

    let mut report =
        SolveReport::evaluate(inst, Selection::from_sorted(incumbent.1), Method::Exact);
    let upper = final_bound.max(report.value);
    report = report.with_bound(upper);
    report.status = status;
    report.iterations = trace.nodes;
    report.wall_time = start.elapsed();
    (report, trace)
}
