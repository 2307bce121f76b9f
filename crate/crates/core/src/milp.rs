//! An ε-accurate mixed-integer linear model of sparse PCA, its per-index
//! decomposition, an LP-format writer/reader and a solver-free witness
//! checker.
//!
//! The model works on a Gram factor `C` (`d x n`, columns `c_i`):
//!
//! ```text
//! max  w
//! s.t. x = δ1_i + δ2_i,  |δ1_i| <= z_i,  |δ2_i| <= 1 - z_i        (i in [n])
//!      x = Σ_j σ_j,  |σ_j| <= y_j,  σ_jj = y_j,  Σ_j y_j = 1      (j in [d])
//!      x = μ1_l + μ2_l,  |μ1_l| <= α_l,  |μ2_l| <= 1 - α_l         (l in [m])
//!      w = w_U - (w_U - w_L) Σ_l 2^-l α_l
//!      | Σ_i c_i c_i^T δ1_i - w_U x + (w_U - w_L) Σ_l 2^-l μ1_l | <= ε
//!      Σ_i z_i = k,   z, y, α binary
//! ```
//!
//! Every `|v| <= s` on a vector is written as two rows per coordinate. The
//! fixed-`j` variant drops `y` and `σ` in favour of `|x| <= 1` and `x_j = 1`.
//!
//! Variable names are 1-based: `z_3`, `x_2`, `d1_4_2` (coordinate 2 of
//! `δ1_4`), `s_1_2`, `m1_5_1`, `a_5`.

use std::collections::{BTreeMap, HashMap};
use std::fmt::{self, Write as _};

use crate::error::{Error, Result};
use crate::problem::Selection;
use crate::spectral::{
    largest_eigenpair_with, reference_spectrum, GramFactor, PowerOptions,
    REFERENCE_SPECTRUM_MAX_DIM,
};

/// Default accuracy `ε`.
pub const DEFAULT_EPS: f64 = 1e-4;

/// Absolute slack allowed on every row by [`check_point`].
pub const ROW_SLACK: f64 = 1e-7;

/// Distance from `{0, 1}` tolerated for binary variables.
pub const BINARY_TOL: f64 = 1e-9;

/// More bits than this cannot be resolved in double precision.
const MAX_BITS: usize = 52;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VarKind {
    Binary,
    Continuous,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

impl Sense {
    fn symbol(self) -> &'static str {
        match self {
            Sense::Le => "<=",
            Sense::Eq => "=",
            Sense::Ge => ">=",
        }
    }
}

/// A named row `Σ coef * var  sense  rhs`; terms hold variable positions.
#[derive(Clone, Debug, PartialEq)]
pub struct Constraint {
    pub name: String,
    pub terms: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct LinearExpr {
    pub terms: Vec<(usize, f64)>,
    pub constant: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MilpMeta {
    pub n: usize,
    pub d: usize,
    pub k: usize,
    pub m: usize,
    pub w_lower: f64,
    pub w_upper: f64,
    pub eps: f64,
    /// 0-based coordinate pinned to 1 in the per-index variant.
    pub fixed_j: Option<usize>,
}

/// A maximization model with binary and continuous variables.
#[derive(Clone, Debug, PartialEq)]
pub struct MilpModel {
    pub variables: Vec<Variable>,
    pub constraints: Vec<Constraint>,
    pub objective: LinearExpr,
    pub meta: MilpMeta,
    index: HashMap<String, usize>,
}

impl MilpModel {
    fn empty(meta: MilpMeta) -> Self {
        MilpModel {
            variables: Vec::new(),
            constraints: Vec::new(),
            objective: LinearExpr::default(),
            meta,
            index: HashMap::new(),
        }
    }

    fn add_var(&mut self, name: String, kind: VarKind, lower: f64, upper: f64) -> Result<usize> {
        if self.index.contains_key(&name) {
            return Err(Error::InvalidArgument(format!(
                "duplicate variable `{name}`"
            )));
        }
        let id = self.variables.len();
        self.index.insert(name.clone(), id);
        self.variables.push(Variable {
            name,
            kind,
            lower,
            upper,
        });
        Ok(id)
    }

    fn add_row(&mut self, name: String, terms: Vec<(usize, f64)>, sense: Sense, rhs: f64) {
        self.constraints.push(Constraint {
            name,
            terms,
            sense,
            rhs,
        });
    }

    /// Position of a variable by name.
    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn binary_count(&self) -> usize {
        self.variables
            .iter()
            .filter(|v| v.kind == VarKind::Binary)
            .count()
    }

    pub fn continuous_count(&self) -> usize {
        self.variables.len() - self.binary_count()
    }
}

/// Number of expansion bits: the smallest `m >= 1` with
/// `(w_U - w_L) / 2^m <= ε`.
pub fn expansion_bits(w_lower: f64, w_upper: f64, eps: f64) -> Result<usize> {
    check_bounds(w_lower, w_upper, eps)?;
    let width = w_upper - w_lower;
    let mut m = 1;
    while width / 2f64.powi(m as i32) > eps {
        m += 1;
        if m > MAX_BITS {
            return Err(Error::InvalidArgument(format!(
                "eps = {eps} needs more than {MAX_BITS} expansion bits for width {width}"
            )));
        }
    }
    Ok(m)
}

fn check_bounds(w_lower: f64, w_upper: f64, eps: f64) -> Result<()> {
    if !(w_lower.is_finite() && w_upper.is_finite()) || w_lower >= w_upper {
        return Err(Error::InvalidArgument(format!(
            "need finite w_lower < w_upper, got [{w_lower}, {w_upper}]"
        )));
    }
    if !(eps.is_finite() && eps > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "eps must be positive, got {eps}"
        )));
    }
    Ok(())
}

/// Adds `|v| <= bound` as two rows per coordinate, where `bound` is
/// `sign * b + offset` for a binary `b`.
fn abs_rows(model: &mut MilpModel, tag: &str, v: &[usize], b: usize, sign: f64, offset: f64) {
    for (t, &vt) in v.iter().enumerate() {
        model.add_row(
            format!("{tag}p_{}", t + 1),
            vec![(vt, 1.0), (b, -sign)],
            Sense::Le,
            offset,
        );
        model.add_row(
            format!("{tag}n_{}", t + 1),
            vec![(vt, -1.0), (b, -sign)],
            Sense::Le,
            offset,
        );
    }
}

/// Shared part of both models: `w`, `z`, `α`, `x`, `δ`, `μ`, the binary
/// expansion, the residual band and the cardinality row. Returns the model
/// with the positions of `x`.
fn build_common(
    factor: &GramFactor,
    k: usize,
    eps: f64,
    w_lower: f64,
    w_upper: f64,
    fixed_j: Option<usize>,
) -> Result<(MilpModel, Vec<usize>)> {
    let (n, d) = (factor.n(), factor.rank());
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!(
            "k = {k} must lie in 1..={n}"
        )));
    }
    let m = expansion_bits(w_lower, w_upper, eps)?;
    let mut model = MilpModel::empty(MilpMeta {
        n,
        d,
        k,
        m,
        w_lower,
        w_upper,
        eps,
        fixed_j,
    });
    let inf = f64::INFINITY;
    let w = model.add_var("w".into(), VarKind::Continuous, -inf, inf)?;
    let z = (0..n)
        .map(|i| model.add_var(format!("z_{}", i + 1), VarKind::Binary, 0.0, 1.0))
        .collect::<Result<Vec<_>>>()?;
    let alpha = (0..m)
        .map(|l| model.add_var(format!("a_{}", l + 1), VarKind::Binary, 0.0, 1.0))
        .collect::<Result<Vec<_>>>()?;
    let x = (0..d)
        .map(|t| model.add_var(format!("x_{}", t + 1), VarKind::Continuous, -inf, inf))
        .collect::<Result<Vec<_>>>()?;
    let copies = |model: &mut MilpModel, prefix: &str, count: usize| -> Result<Vec<Vec<usize>>> {
        (0..count)
            .map(|i| {
                (0..d)
                    .map(|t| {
                        model.add_var(
                            format!("{prefix}_{}_{}", i + 1, t + 1),
                            VarKind::Continuous,
                            -inf,
                            inf,
                        )
                    })
                    .collect()
            })
            .collect()
    };
    let d1 = copies(&mut model, "d1", n)?;
    let d2 = copies(&mut model, "d2", n)?;
    let mu1 = copies(&mut model, "m1", m)?;
    let mu2 = copies(&mut model, "m2", m)?;

    model.objective = LinearExpr {
        terms: vec![(w, 1.0)],
        constant: 0.0,
    };
    model.add_row(
        "card".into(),
        z.iter().map(|&v| (v, 1.0)).collect(),
        Sense::Eq,
        k as f64,
    );

    for i in 0..n {
        for t in 0..d {
            model.add_row(
                format!("dx_{}_{}", i + 1, t + 1),
                vec![(x[t], 1.0), (d1[i][t], -1.0), (d2[i][t], -1.0)],
                Sense::Eq,
                0.0,
            );
        }
        abs_rows(
            &mut model,
            &format!("d1_{}_", i + 1),
            &d1[i],
            z[i],
            1.0,
            0.0,
        );
        abs_rows(
            &mut model,
            &format!("d2_{}_", i + 1),
            &d2[i],
            z[i],
            -1.0,
            1.0,
        );
    }
    for l in 0..m {
        for t in 0..d {
            model.add_row(
                format!("mx_{}_{}", l + 1, t + 1),
                vec![(x[t], 1.0), (mu1[l][t], -1.0), (mu2[l][t], -1.0)],
                Sense::Eq,
                0.0,
            );
        }
        abs_rows(
            &mut model,
            &format!("m1_{}_", l + 1),
            &mu1[l],
            alpha[l],
            1.0,
            0.0,
        );
        abs_rows(
            &mut model,
            &format!("m2_{}_", l + 1),
            &mu2[l],
            alpha[l],
            -1.0,
            1.0,
        );
    }

    let width = w_upper - w_lower;
    let mut expansion = vec![(w, 1.0)];
    expansion.extend(
        alpha
            .iter()
            .enumerate()
            .map(|(l, &a)| (a, width * 0.5f64.powi(l as i32 + 1))),
    );
    model.add_row("wexp".into(), expansion, Sense::Eq, w_upper);

    for r in 0..d {
        let mut terms = Vec::new();
        for i in 0..n {
            let c = factor.column(i);
            if c[r] == 0.0 {
                continue;
            }
            for t in 0..d {
                let coef = c[r] * c[t];
                if coef != 0.0 {
                    terms.push((d1[i][t], coef));
                }
            }
        }
        terms.push((x[r], -w_upper));
        for l in 0..m {
            terms.push((mu1[l][r], width * 0.5f64.powi(l as i32 + 1)));
        }
        model.add_row(format!("resp_{}", r + 1), terms.clone(), Sense::Le, eps);
        model.add_row(format!("resn_{}", r + 1), terms, Sense::Ge, -eps);
    }

    Ok((model, x))
}

/// The full model with the `y`/`σ` disjunction choosing the coordinate of
/// `x` that equals one.
pub fn build_milp(
    factor: &GramFactor,
    k: usize,
    eps: f64,
    w_lower: f64,
    w_upper: f64,
) -> Result<MilpModel> {
    let (mut model, x) = build_common(factor, k, eps, w_lower, w_upper, None)?;
    let d = factor.rank();
    let inf = f64::INFINITY;
    let y = (0..d)
        .map(|j| model.add_var(format!("y_{}", j + 1), VarKind::Binary, 0.0, 1.0))
        .collect::<Result<Vec<_>>>()?;
    let sigma = (0..d)
        .map(|j| {
            (0..d)
                .map(|t| {
                    model.add_var(
                        format!("s_{}_{}", j + 1, t + 1),
                        VarKind::Continuous,
                        -inf,
                        inf,
                    )
                })
                .collect()
        })
        .collect::<Result<Vec<Vec<usize>>>>()?;
    for t in 0..d {
        let mut terms = vec![(x[t], 1.0)];
        terms.extend(sigma.iter().map(|s| (s[t], -1.0)));
        model.add_row(format!("sx_{}", t + 1), terms, Sense::Eq, 0.0);
    }
    for j in 0..d {
        abs_rows(
            &mut model,
            &format!("s_{}_", j + 1),
            &sigma[j],
            y[j],
            1.0,
            0.0,
        );
        model.add_row(
            format!("sd_{}", j + 1),
            vec![(sigma[j][j], 1.0), (y[j], -1.0)],
            Sense::Eq,
            0.0,
        );
    }
    model.add_row(
        "ysum".into(),
        y.iter().map(|&v| (v, 1.0)).collect(),
        Sense::Eq,
        1.0,
    );
    Ok(model)
}

/// The per-index model with `x_j = 1` and `|x| <= 1`; it may be infeasible.
/// `j` is 0-based.
pub fn build_milp_fixed_j(
    factor: &GramFactor,
    k: usize,
    eps: f64,
    w_lower: f64,
    w_upper: f64,
    j: usize,
) -> Result<MilpModel> {
    let d = factor.rank();
    if j >= d {
        return Err(Error::IndexOutOfRange { index: j, n: d });
    }
    let (mut model, x) = build_common(factor, k, eps, w_lower, w_upper, Some(j))?;
    for t in 0..d {
        model.add_row(format!("xp_{}", t + 1), vec![(x[t], 1.0)], Sense::Le, 1.0);
        model.add_row(format!("xn_{}", t + 1), vec![(x[t], -1.0)], Sense::Le, 1.0);
    }
    model.add_row("xfix".into(), vec![(x[j], 1.0)], Sense::Eq, 1.0);
    Ok(model)
}

/// A value for every variable, keyed by name.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Assignment(BTreeMap<String, f64>);

impl Assignment {
    pub fn new() -> Self {
        Assignment::default()
    }

    pub fn set(&mut self, name: impl Into<String>, value: f64) {
        self.0.insert(name.into(), value);
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.0.get(name).copied()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.0.iter().map(|(k, &v)| (k.as_str(), v))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Violation {
    /// Row name, or variable name for bound and integrality violations.
    pub name: String,
    pub amount: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PointCheck {
    pub feasible: bool,
    pub violations: Vec<Violation>,
    pub objective: f64,
}

/// Evaluates every row, bound and integrality requirement at `point`.
pub fn check_point(model: &MilpModel, point: &Assignment) -> Result<PointCheck> {
    let values = model
        .variables
        .iter()
        .map(|v| {
            point
                .get(&v.name)
                .ok_or_else(|| Error::MissingVariable(v.name.clone()))
        })
        .collect::<Result<Vec<f64>>>()?;
    let mut violations = Vec::new();
    for (v, &x) in model.variables.iter().zip(&values) {
        let out = (v.lower - x).max(x - v.upper).max(0.0);
        if out > ROW_SLACK {
            violations.push(Violation {
                name: v.name.clone(),
                amount: out,
            });
        }
        if v.kind == VarKind::Binary {
            let gap = x.abs().min((x - 1.0).abs());
            if gap > BINARY_TOL {
                violations.push(Violation {
                    name: v.name.clone(),
                    amount: gap,
                });
            }
        }
    }
    for row in &model.constraints {
        let lhs: f64 = row.terms.iter().map(|&(i, c)| c * values[i]).sum();
        let excess = match row.sense {
            Sense::Le => lhs - row.rhs,
            Sense::Ge => row.rhs - lhs,
            Sense::Eq => (lhs - row.rhs).abs(),
        };
        if excess > ROW_SLACK {
            violations.push(Violation {
                name: row.name.clone(),
                amount: excess,
            });
        }
    }
    let objective = model.objective.constant
        + model
            .objective
            .terms
            .iter()
            .map(|&(i, c)| c * values[i])
            .sum::<f64>();
    Ok(PointCheck {
        feasible: violations.is_empty(),
        violations,
        objective,
    })
}

fn support_eigenvector(factor: &GramFactor, sel: &Selection) -> Result<(f64, Vec<f64>)> {
    let m = factor.support_outer(sel.indices());
    if m.dim() <= REFERENCE_SPECTRUM_MAX_DIM {
        let top = reference_spectrum(&m)?.swap_remove(0);
        Ok((top.value, top.vector))
    } else {
        let opts = PowerOptions {
            tol: 1e-12,
            psd_hint: true,
            ..PowerOptions::default()
        };
        let top = largest_eigenpair_with(&m, None, opts)?;
        Ok((top.value, top.vector))
    }
}

fn check_support(factor: &GramFactor, sel: &Selection, k: usize) -> Result<()> {
    if let Some(&bad) = sel.indices().iter().find(|&&i| i >= factor.n()) {
        return Err(Error::IndexOutOfRange {
            index: bad,
            n: factor.n(),
        });
    }
    if sel.len() != k {
        return Err(Error::InvalidSelection(format!(
            "support has {} indices, the model expects {k}",
            sel.len()
        )));
    }
    Ok(())
}

/// Fills every variable of `model` from the support, the scaled eigenvector
/// `x` and the coordinate `j` with `x_j = 1`.
fn fill_witness(
    model: &MilpModel,
    factor: &GramFactor,
    sel: &Selection,
    lambda: f64,
    x: &[f64],
    j: usize,
) -> Result<Assignment> {
    let meta = &model.meta;
    let (w_lower, w_upper, eps, m) = (meta.w_lower, meta.w_upper, meta.eps, meta.m);
    let slack = 1e-9 * lambda.abs().max(1.0);
    if lambda < w_lower - slack || lambda > w_upper + slack {
        return Err(Error::InvalidArgument(format!(
            "support value {lambda} lies outside [w_lower, w_upper] = [{w_lower}, {w_upper}]"
        )));
    }
    let scale = 2f64.powi(m as i32);
    let width = w_upper - w_lower;
    let q = ((w_upper - lambda - eps) * scale / width)
        .ceil()
        .clamp(0.0, scale - 1.0) as u64;
    let alpha: Vec<f64> = (1..=m).map(|l| ((q >> (m - l)) & 1) as f64).collect();
    let w = w_upper - width * q as f64 / scale;

    let (n, d) = (factor.n(), factor.rank());
    let mask = sel.mask(n);
    let mut a = Assignment::new();
    a.set("w", w);
    for i in 0..n {
        let zi = if mask[i] { 1.0 } else { 0.0 };
        a.set(format!("z_{}", i + 1), zi);
        for t in 0..d {
            a.set(format!("d1_{}_{}", i + 1, t + 1), zi * x[t]);
            a.set(format!("d2_{}_{}", i + 1, t + 1), (1.0 - zi) * x[t]);
        }
    }
    for (l, &al) in alpha.iter().enumerate() {
        a.set(format!("a_{}", l + 1), al);
        for t in 0..d {
            a.set(format!("m1_{}_{}", l + 1, t + 1), al * x[t]);
            a.set(format!("m2_{}_{}", l + 1, t + 1), (1.0 - al) * x[t]);
        }
    }
    for t in 0..d {
        a.set(format!("x_{}", t + 1), x[t]);
    }
    if meta.fixed_j.is_none() {
        for jj in 0..d {
            let on = if jj == j { 1.0 } else { 0.0 };
            a.set(format!("y_{}", jj + 1), on);
            for t in 0..d {
                a.set(format!("s_{}_{}", jj + 1, t + 1), on * x[t]);
            }
        }
    }
    Ok(a)
}

/// The feasible point built from a size-`k` support: `z` is its indicator,
/// `x` the top eigenvector of `Σ_{i∈S} c_i c_i^T` scaled so that its largest
/// coordinate (smallest index on ties) is `+1`, and `α` encodes the largest
/// representable `w <= λ + ε`.
pub fn witness_from_support(
    model: &MilpModel,
    factor: &GramFactor,
    sel: &Selection,
) -> Result<Assignment> {
    if model.meta.fixed_j.is_some() {
        return Err(Error::InvalidArgument(
            "use witness_fixed_j for a per-index model".into(),
        ));
    }
    check_support(factor, sel, model.meta.k)?;
    let (lambda, mut x) = support_eigenvector(factor, sel)?;
    let mut j = 0;
    for t in 1..x.len() {
        if x[t].abs() > x[j].abs() * (1.0 + 1e-12) {
            j = t;
        }
    }
    let pivot = x[j];
    if pivot == 0.0 {
        return Err(Error::InvalidArgument("support eigenvector is zero".into()));
    }
    for v in &mut x {
        *v /= pivot;
    }
    x[j] = 1.0;
    fill_witness(model, factor, sel, lambda, &x, j)
}

/// The point for a per-index model: the eigenvector is scaled so that
/// `x_j = 1`, which violates `|x| <= 1` when another coordinate is larger.
pub fn witness_fixed_j(
    model: &MilpModel,
    factor: &GramFactor,
    sel: &Selection,
) -> Result<Assignment> {
    let j = model
        .meta
        .fixed_j
        .ok_or_else(|| Error::InvalidArgument("model has no fixed coordinate".into()))?;
    check_support(factor, sel, model.meta.k)?;
    let (lambda, mut x) = support_eigenvector(factor, sel)?;
    let pivot = x[j];
    if pivot.abs() < 1e-300 {
        return Err(Error::InvalidArgument(format!(
            "support eigenvector vanishes at coordinate {}",
            j + 1
        )));
    }
    for v in &mut x {
        *v /= pivot;
    }
    x[j] = 1.0;
    fill_witness(model, factor, sel, lambda, &x, j)
}

const TERMS_PER_LINE: usize = 8;

fn write_terms(out: &mut String, model: &MilpModel, terms: &[(usize, f64)]) {
    for (pos, &(v, c)) in terms.iter().enumerate() {
        if pos > 0 && pos % TERMS_PER_LINE == 0 {
            out.push_str("\n   ");
        }
        let sign = if c < 0.0 { '-' } else { '+' };
        let _ = write!(out, " {sign} {} {}", c.abs(), model.variables[v].name);
    }
}

fn fmt_bound(v: f64) -> String {
    if v == f64::INFINITY {
        "+inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{v}")
    }
}

/// Renders the model in CPLEX LP format. The header comment carries the
/// model metadata and the `Bounds` section lists every variable in model
/// order, so [`parse_lp`] rebuilds an identical model.
pub fn write_lp(model: &MilpModel) -> String {
    let meta = &model.meta;
    let mut out = String::new();
    let fixed = meta
        .fixed_j
        .map_or("none".to_string(), |j| (j + 1).to_string());
    let _ = writeln!(
        out,
        "\\ meta n={} d={} k={} m={} w_lower={} w_upper={} eps={} fixed_j={}",
        meta.n, meta.d, meta.k, meta.m, meta.w_lower, meta.w_upper, meta.eps, fixed
    );
    out.push_str("Maximize\n obj:");
    write_terms(&mut out, model, &model.objective.terms);
    if model.objective.constant != 0.0 {
        let c = model.objective.constant;
        let _ = write!(out, " {} {}", if c < 0.0 { '-' } else { '+' }, c.abs());
    }
    out.push_str("\nSubject To\n");
    for row in &model.constraints {
        let _ = write!(out, " {}:", row.name);
        write_terms(&mut out, model, &row.terms);
        let _ = writeln!(out, " {} {}", row.sense.symbol(), row.rhs);
    }
    out.push_str("Bounds\n");
    for v in &model.variables {
        if v.lower == f64::NEG_INFINITY && v.upper == f64::INFINITY {
            let _ = writeln!(out, " {} free", v.name);
        } else {
            let _ = writeln!(
                out,
                " {} <= {} <= {}",
                fmt_bound(v.lower),
                v.name,
                fmt_bound(v.upper)
            );
        }
    }
    let binaries: Vec<&str> = model
        .variables
        .iter()
        .filter(|v| v.kind == VarKind::Binary)
        .map(|v| v.name.as_str())
        .collect();
    if !binaries.is_empty() {
        out.push_str("Binaries\n");
        for chunk in binaries.chunks(TERMS_PER_LINE) {
            let _ = writeln!(out, " {}", chunk.join(" "));
        }
    }
    out.push_str("End\n");
    out
}

#[derive(Clone, Copy, PartialEq)]
enum Section {
    Preamble,
    Objective,
    Rows,
    Bounds,
    Binaries,
    Done,
}

fn parse_err(line: usize, message: impl fmt::Display) -> Error {
    Error::Parse {
        line,
        message: message.to_string(),
    }
}

fn parse_num(tok: &str, line: usize) -> Result<f64> {
    match tok.to_ascii_lowercase().as_str() {
        "inf" | "+inf" | "infinity" | "+infinity" => Ok(f64::INFINITY),
        "-inf" | "-infinity" => Ok(f64::NEG_INFINITY),
        _ => tok
            .parse()
            .map_err(|_| parse_err(line, format!("expected a number, found `{tok}`"))),
    }
}

fn parse_meta(text: &str, line: usize) -> Result<MilpMeta> {
    let mut fields: HashMap<&str, &str> = HashMap::new();
    for tok in text.split_whitespace() {
        if let Some((k, v)) = tok.split_once('=') {
            fields.insert(k, v);
        }
    }
    let get = |key: &str| {
        fields
            .get(key)
            .copied()
            .ok_or_else(|| parse_err(line, format!("meta lacks `{key}`")))
    };
    let int = |key: &str| -> Result<usize> {
        get(key)?
            .parse()
            .map_err(|_| parse_err(line, format!("bad meta value for `{key}`")))
    };
    let real = |key: &str| -> Result<f64> { parse_num(get(key)?, line) };
    let fixed_j = match get("fixed_j")? {
        "none" => None,
        v => Some(
            v.parse::<usize>()
                .ok()
                .filter(|&j| j >= 1)
                .ok_or_else(|| parse_err(line, "bad meta value for `fixed_j`"))?
                - 1,
        ),
    };
    Ok(MilpMeta {
        n: int("n")?,
        d: int("d")?,
        k: int("k")?,
        m: int("m")?,
        w_lower: real("w_lower")?,
        w_upper: real("w_upper")?,
        eps: real("eps")?,
        fixed_j,
    })
}

/// Parses `± coef name` sequences; returns named terms and a constant.
fn parse_expr(tokens: &[&str], line: usize) -> Result<(Vec<(String, f64)>, f64)> {
    let mut terms = Vec::new();
    let mut constant = 0.0;
    let mut sign = 1.0;
    let mut coef: Option<f64> = None;
    for &tok in tokens {
        match tok {
            "+" => sign = 1.0,
            "-" => sign = -1.0,
            _ => {
                if let Ok(c) = tok.parse::<f64>() {
                    if let Some(prev) = coef.replace(sign * c) {
                        constant += prev;
                    }
                    sign = 1.0;
                } else {
                    let c = coef.take().unwrap_or(sign);
                    terms.push((tok.to_string(), c));
                    sign = 1.0;
                }
            }
        }
    }
    if let Some(c) = coef {
        constant += c;
    }
    let _ = line;
    Ok((terms, constant))
}

/// Reads LP text produced by [`write_lp`].
pub fn parse_lp(text: &str) -> Result<MilpModel> {
    let mut meta: Option<MilpMeta> = None;
    let mut section = Section::Preamble;
    let mut objective: Vec<&str> = Vec::new();
    let mut rows: Vec<(usize, Vec<&str>)> = Vec::new();
    let mut pending: Option<(usize, Vec<&str>)> = None;
    let mut bounds: Vec<(usize, Vec<&str>)> = Vec::new();
    let mut binaries: Vec<&str> = Vec::new();

    for (pos, raw) in text.lines().enumerate() {
        let line_no = pos + 1;
        let line = raw.trim();
        if let Some(comment) = line.strip_prefix('\\') {
            let comment = comment.trim();
            if let Some(rest) = comment.strip_prefix("meta") {
                meta = Some(parse_meta(rest, line_no)?);
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let lower = line.to_ascii_lowercase();
        let next = match lower.as_str() {
            "maximize" | "maximise" | "max" => Some(Section::Objective),
            "subject to" | "such that" | "st" | "s.t." => Some(Section::Rows),
            "bounds" => Some(Section::Bounds),
            "binaries" | "binary" | "bin" => Some(Section::Binaries),
            "end" => Some(Section::Done),
            "minimize" | "minimise" | "min" => {
                return Err(parse_err(line_no, "only maximization models are supported"));
            }
            _ => None,
        };
        if let Some(s) = next {
            section = s;
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        match section {
            Section::Preamble | Section::Done => {
                return Err(parse_err(line_no, format!("unexpected text `{line}`")));
            }
            Section::Objective => objective.extend(tokens),
            Section::Rows => {
                let (start, acc) = pending.get_or_insert_with(|| (line_no, Vec::new()));
                let _ = start;
                acc.extend(tokens);
                let n = acc.len();
                if n >= 2 && matches!(acc[n - 2], "<=" | ">=" | "=" | "=<" | "=>") {
                    rows.push(pending.take().expect("pending row"));
                }
            }
            Section::Bounds => bounds.push((line_no, tokens)),
            Section::Binaries => binaries.extend(tokens),
        }
    }
    if let Some((line, _)) = pending {
        return Err(parse_err(line, "constraint without a right-hand side"));
    }
    let meta = meta.ok_or_else(|| parse_err(1, "missing `\\ meta` header line"))?;

    let mut model = MilpModel::empty(meta);
    let binary_set: std::collections::HashSet<&str> = binaries.iter().copied().collect();
    for (line, tok) in &bounds {
        let (name, lo, hi) = match tok.as_slice() {
            [name, free] if free.eq_ignore_ascii_case("free") => {
                (*name, f64::NEG_INFINITY, f64::INFINITY)
            }
            [lo, "<=", name, "<=", hi] => (*name, parse_num(lo, *line)?, parse_num(hi, *line)?),
            _ => return Err(parse_err(*line, "unsupported bound syntax")),
        };
        let kind = if binary_set.contains(name) {
            VarKind::Binary
        } else {
            VarKind::Continuous
        };
        model
            .add_var(name.to_string(), kind, lo, hi)
            .map_err(|e| parse_err(*line, e))?;
    }
    for name in &binaries {
        if model.var_index(name).is_none() {
            return Err(parse_err(0, format!("binary `{name}` has no bound line")));
        }
    }
    let resolve =
        |terms: Vec<(String, f64)>, line: usize, model: &MilpModel| -> Result<Vec<(usize, f64)>> {
            terms
                .into_iter()
                .map(|(name, c)| {
                    model
                        .var_index(&name)
                        .map(|i| (i, c))
                        .ok_or_else(|| parse_err(line, format!("undeclared variable `{name}`")))
                })
                .collect()
        };

    let obj_tokens: &[&str] = match objective.first() {
        Some(t) if t.ends_with(':') => &objective[1..],
        _ => &objective,
    };
    let (terms, constant) = parse_expr(obj_tokens, 0)?;
    model.objective = LinearExpr {
        terms: resolve(terms, 0, &model)?,
        constant,
    };
    for (line, tokens) in rows {
        let (name, body) = match tokens.first() {
            Some(t) if t.ends_with(':') => (t.trim_end_matches(':').to_string(), &tokens[1..]),
            _ => (format!("r_{}", model.constraints.len() + 1), &tokens[..]),
        };
        let n = body.len();
        let sense = match body[n - 2] {
            "<=" | "=<" => Sense::Le,
            ">=" | "=>" => Sense::Ge,
            _ => Sense::Eq,
        };
        let rhs = parse_num(body[n - 1], line)?;
        let (terms, constant) = parse_expr(&body[..n - 2], line)?;
        if constant != 0.0 {
            return Err(parse_err(
                line,
                "constant terms on the left-hand side are not supported",
            ));
        }
        let terms = resolve(terms, line, &model)?;
        model.add_row(name, terms, sense, rhs);
    }
    Ok(model)
}

/// Reads `name value` lines as written by most solvers' solution files.
/// Blank lines and lines starting with `#` or `\` are skipped.
pub fn read_solution(text: &str) -> Result<Assignment> {
    let mut a = Assignment::new();
    for (pos, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with('\\') {
            continue;
        }
        let mut it = line.split_whitespace();
        let (Some(name), Some(value), None) = (it.next(), it.next(), it.next()) else {
            return Err(parse_err(
                pos + 1,
                format!("expected `name value`, found `{line}`"),
            ));
        };
        a.set(name, parse_num(value, pos + 1)?);
    }
    Ok(a)
}
