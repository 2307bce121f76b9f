//! Dense linear-algebra primitives: the largest eigenpair by power
//! iteration, a Jacobi reference spectrum, a rank-revealing pivoted
//! Cholesky factorization and the largest singular triplet.
//!
//! Everything is 64-bit and deterministic. Matrices are small and dense
//! (the target sizes are a few thousand rows at most), so storage is a
//! plain row-major `Vec<f64>`.

use crate::error::{Error, Result};

/// Relative symmetry tolerance accepted by [`SymMatrix::new`].
pub const SYMMETRY_TOL: f64 = 1e-10;

/// Default relative threshold below which a Cholesky pivot counts as zero.
pub const DEFAULT_RANK_TOL: f64 = 1e-9;

/// Default residual tolerance of [`largest_eigenpair`].
pub const DEFAULT_EIGEN_TOL: f64 = 1e-10;

/// Iteration cap of the power method.
pub const MAX_POWER_ITERS: usize = 10_000;

const WARM_BLEND: f64 = 1e-3;

/// Largest dimension [`reference_spectrum`] accepts.
pub const REFERENCE_SPECTRUM_MAX_DIM: usize = 512;

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Flips `v` so that its first entry of non-negligible magnitude is positive.
pub(crate) fn canonical_sign(v: &mut [f64]) -> bool {
    let scale = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let threshold = scale * 1e-12;
    if let Some(first) = v.iter().find(|x| x.abs() > threshold) {
        if *first < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
            return true;
        }
    }
    false
}

/// A dense row-major `rows x cols` matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Dimension(
                "matrix dimensions must be positive".into(),
            ));
        }
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{} entries supplied for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "non-finite entry at ({},{})",
                pos / cols + 1,
                pos % cols + 1
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().position(|r| r.len() != cols) {
            return Err(Error::Dimension(format!(
                "row {} has {} entries, expected {cols}",
                bad + 1,
                rows[bad].len()
            )));
        }
        Matrix::new(rows.len(), cols, rows.concat())
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.cols + j] = value;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.cols);
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    /// `self^T x`.
    pub fn matvec_transpose(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for (i, xi) in x.iter().enumerate() {
            if *xi != 0.0 {
                for (o, a) in out.iter_mut().zip(self.row(i)) {
                    *o += xi * a;
                }
            }
        }
        out
    }

    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> Matrix {
        Matrix::from_fn(rows.len(), cols.len(), |i, j| self.get(rows[i], cols[j]))
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, x| m.max(x.abs()))
    }

    /// `self^T self`.
    pub fn gram(&self) -> SymMatrix {
        let n = self.cols;
        let mut g = vec![0.0; n * n];
        for r in 0..self.rows {
            let row = self.row(r);
            for i in 0..n {
                let ri = row[i];
                if ri == 0.0 {
                    continue;
                }
                for j in i..n {
                    g[i * n + j] += ri * row[j];
                }
            }
        }
        for i in 0..n {
            for j in 0..i {
                g[i * n + j] = g[j * n + i];
            }
        }
        SymMatrix { n, data: g }
    }

    /// `self self^T`.
    pub fn outer_gram(&self) -> SymMatrix {
        let m = self.rows;
        SymMatrix::from_fn(m, |i, j| dot(self.row(i), self.row(j)))
    }
}

/// A dense symmetric `n x n` matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct SymMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    /// Validates symmetry within `1e-10 * (1 + |a_ij|)` and stores the
    /// exactly symmetrized matrix.
    pub fn new(n: usize, mut data: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::Dimension("symmetric matrix must have n >= 1".into()));
        }
        if data.len() != n * n {
            return Err(Error::Dimension(format!(
                "{} entries supplied for a {n}x{n} matrix",
                data.len()
            )));
        }
        for i in 0..n {
            for j in 0..n {
                let x = data[i * n + j];
                if !x.is_finite() {
                    return Err(Error::InvalidArgument(format!(
                        "non-finite entry at ({},{})",
                        i + 1,
                        j + 1
                    )));
                }
            }
        }
        for i in 0..n {
            for j in (i + 1)..n {
                let upper = data[i * n + j];
                let lower = data[j * n + i];
                if (upper - lower).abs() > SYMMETRY_TOL * (1.0 + upper.abs()) {
                    return Err(Error::NotSymmetric {
                        row: i + 1,
                        col: j + 1,
                        upper,
                        lower,
                    });
                }
                let avg = 0.5 * (upper + lower);
                data[i * n + j] = avg;
                data[j * n + i] = avg;
            }
        }
        Ok(SymMatrix { n, data })
    }

    pub fn from_matrix(m: &Matrix) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::Dimension(format!(
                "expected a square matrix, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        SymMatrix::new(m.nrows(), m.as_slice().to_vec())
    }

    /// Builds a matrix from the upper triangle of `f` (including the
    /// diagonal), mirroring it into the lower triangle.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let v = f(i, j);
                data[i * n + j] = v;
                data[j * n + i] = v;
            }
        }
        SymMatrix { n, data }
    }

    pub fn identity(n: usize) -> Self {
        SymMatrix::from_fn(n, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        SymMatrix::from_fn(d.len(), |i, j| if i == j { d[i] } else { 0.0 })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn to_matrix(&self) -> Matrix {
        Matrix {
            rows: self.n,
            cols: self.n,
            data: self.data.clone(),
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, x| m.max(x.abs()))
    }

    /// The principal submatrix on `idx` (in the given order).
    pub fn principal(&self, idx: &[usize]) -> SymMatrix {
        SymMatrix::from_fn(idx.len(), |i, j| self.get(idx[i], idx[j]))
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        self.matvec_into(x, &mut out);
        out
    }

    pub fn matvec_into(&self, x: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = dot(self.row(i), x);
        }
    }

    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        dot(x, &self.matvec(x))
    }

    /// Adds `shift` to every diagonal entry.
    pub fn shifted(&self, shift: f64) -> SymMatrix {
        let mut out = self.clone();
        for i in 0..self.n {
            out.data[i * self.n + i] += shift;
        }
        out
    }

    /// Lower end of the Gershgorin disc union.
    pub fn gershgorin_lower(&self) -> f64 {
        (0..self.n)
            .map(|i| {
                let row = self.row(i);
                let off: f64 = row
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| *j != i)
                    .map(|(_, x)| x.abs())
                    .sum();
                row[i] - off
            })
            .fold(f64::INFINITY, f64::min)
    }
}

/// An eigenvalue together with a unit eigenvector.
#[derive(Clone, Debug, PartialEq)]
pub struct EigenPair {
    pub value: f64,
    pub vector: Vec<f64>,
}

/// Tuning knobs of the power method.
#[derive(Clone, Copy, Debug)]
pub struct PowerOptions {
    /// Stop once `|Mv - λv| <= tol * max(1, |λ|)`.
    pub tol: f64,
    pub max_iters: usize,
    /// Skip the Gershgorin shift; only sound when the matrix is known to be
    /// positive semidefinite, where it speeds convergence considerably.
    pub psd_hint: bool,
}

impl Default for PowerOptions {
    fn default() -> Self {
        PowerOptions {
            tol: DEFAULT_EIGEN_TOL,
            max_iters: MAX_POWER_ITERS,
            psd_hint: false,
        }
    }
}

/// Deterministic start vector: all-ones perturbed by an index hash so that
/// it is not orthogonal to any structured eigenvector by accident.
fn default_start(n: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..n)
        .map(|i| {
            // splitmix64 of the index
            let mut z = (i as u64).wrapping_add(0x9E37_79B9_7F4A_7C15);
            z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
            z ^= z >> 31;
            1.0 + 0.5 * ((z >> 11) as f64 / (1u64 << 53) as f64 - 0.5)
        })
        .collect();
    let nv = norm(&v);
    v.iter_mut().for_each(|x| *x /= nv);
    v
}

/// Largest eigenpair of `m` by shifted power iteration.
///
/// Convergence is declared when the Rayleigh-quotient residual satisfies
/// `|Mv - λv| <= tol * max(1, |λ|)`. When `m` is not diagonally dominant
/// the iteration runs on `M + sI` with `s` the Gershgorin lower bound, so
/// indefinite matrices converge to their largest (not largest-magnitude)
/// eigenvalue.
pub fn largest_eigenpair(m: &SymMatrix, warm_start: Option<&[f64]>, tol: f64) -> Result<EigenPair> {
    largest_eigenpair_with(
        m,
        warm_start,
        PowerOptions {
            tol,
            ..PowerOptions::default()
        },
    )
}

pub fn largest_eigenpair_with(
    m: &SymMatrix,
    warm_start: Option<&[f64]>,
    opts: PowerOptions,
) -> Result<EigenPair> {
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidArgument(
            "eigen tolerance must be positive".into(),
        ));
    }
    let (pair, residual, iterations, converged) = power_iterate(m, warm_start, opts);
    if converged {
        Ok(pair)
    } else {
        Err(Error::NonConvergence {
            iterations,
            residual,
            best: pair,
        })
    }
}

/// Top eigenpair of a matrix known to be PSD. Returns the last iterate when
/// the iteration cap is hit, together with its residual; Rayleigh quotients
/// are accurate to second order in the residual, which is all the
/// combinatorial searches need.
pub(crate) fn top_eigen(m: &SymMatrix, warm_start: Option<&[f64]>) -> (EigenPair, f64) {
    let opts = PowerOptions {
        psd_hint: true,
        ..PowerOptions::default()
    };
    let (pair, residual, _, _) = power_iterate(m, warm_start, opts);
    (pair, residual)
}

fn power_iterate(
    m: &SymMatrix,
    warm_start: Option<&[f64]>,
    opts: PowerOptions,
) -> (EigenPair, f64, usize, bool) {
    let n = m.dim();
    if n == 1 {
        let pair = EigenPair {
            value: m.get(0, 0),
            vector: vec![1.0],
        };
        return (pair, 0.0, 0, true);
    }
    let shift = if opts.psd_hint {
        0.0
    } else {
        (-m.gershgorin_lower()).max(0.0)
    };

    let mut v = default_start(n);
    if let Some(w) = warm_start {
        let nw = norm(w);
        if w.len() == n && nw.is_finite() && nw > 1e-300 {
            // Blend in a little of the generic start so that a warm vector
            // which is exactly a lower eigenvector cannot stall the iteration.
            for (vi, wi) in v.iter_mut().zip(w) {
                *vi = wi / nw + WARM_BLEND * *vi;
            }
            let nv = norm(&v);
            v.iter_mut().for_each(|x| *x /= nv);
        }
    }
    let mut mv = m.matvec(&v);
    let mut rho = dot(&v, &mv);
    let mut residual = residual_norm(&mv, &v, rho);
    let mut y = vec![0.0; n];

    for it in 0..=opts.max_iters {
        if residual <= opts.tol * rho.abs().max(1.0) {
            return (
                EigenPair {
                    value: rho,
                    vector: v,
                },
                residual,
                it,
                true,
            );
        }
        if it == opts.max_iters {
            break;
        }
        for ((yi, mvi), vi) in y.iter_mut().zip(&mv).zip(&v) {
            *yi = mvi + shift * vi;
        }
        let ny = norm(&y);
        if ny <= 1e-300 {
            // (M + sI) v = 0: v already spans the bottom of the shifted
            // spectrum, which only happens for M = -sI.
            break;
        }
        for (vi, yi) in v.iter_mut().zip(&y) {
            *vi = yi / ny;
        }
        m.matvec_into(&v, &mut mv);
        rho = dot(&v, &mv);
        residual = residual_norm(&mv, &v, rho);
    }
    (
        EigenPair {
            value: rho,
            vector: v,
        },
        residual,
        opts.max_iters,
        false,
    )
}

fn residual_norm(mv: &[f64], v: &[f64], rho: f64) -> f64 {
    mv.iter()
        .zip(v)
        .map(|(a, b)| (a - rho * b).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Full spectrum by cyclic Jacobi sweeps, sorted by descending eigenvalue.
///
/// Intended as a test oracle; refuses matrices larger than
/// [`REFERENCE_SPECTRUM_MAX_DIM`].
pub fn reference_spectrum(m: &SymMatrix) -> Result<Vec<EigenPair>> {
    let n = m.dim();
    if n > REFERENCE_SPECTRUM_MAX_DIM {
        return Err(Error::GuardExceeded(format!(
            "reference spectrum limited to n <= {REFERENCE_SPECTRUM_MAX_DIM}, got {n}"
        )));
    }
    let mut a = m.as_slice().to_vec();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let total: f64 = a.iter().map(|x| x * x).sum();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i * n + j].powi(2))
            .sum();
        if off <= 1e-30 * total.max(f64::MIN_POSITIVE) {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum().max(0.0) * 2.0 - 1.0;
                let t = t / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut pairs: Vec<EigenPair> = (0..n)
        .map(|j| EigenPair {
            value: a[j * n + j],
            vector: (0..n).map(|i| v[i * n + j]).collect(),
        })
        .collect();
    pairs.sort_by(|x, y| y.value.total_cmp(&x.value));
    Ok(pairs)
}

/// A Gram factor `C` (`rank x n`) with `C^T C = A`; column `i` belongs to
/// feature `i` of `A`.
#[derive(Clone, Debug, PartialEq)]
pub struct GramFactor {
    rank: usize,
    n: usize,
    // column-major: column i occupies data[i * rank..(i + 1) * rank]
    data: Vec<f64>,
    col_norms_sq: Vec<f64>,
    pivots: Vec<usize>,
}

impl GramFactor {
    /// Builds a factor from explicit columns `c_1, ..., c_n` of equal length.
    pub fn from_columns(columns: &[Vec<f64>]) -> Result<Self> {
        let n = columns.len();
        let rank = columns.first().map_or(0, Vec::len);
        if n == 0 || rank == 0 {
            return Err(Error::Dimension(
                "factor needs at least one non-empty column".into(),
            ));
        }
        if columns.iter().any(|c| c.len() != rank) {
            return Err(Error::Dimension("factor columns differ in length".into()));
        }
        let data = columns.concat();
        let col_norms_sq = columns.iter().map(|c| dot(c, c)).collect();
        Ok(GramFactor {
            rank,
            n,
            data,
            col_norms_sq,
            pivots: (0..rank.min(n)).collect(),
        })
    }

    /// Number of rows `d` of `C` (the numerical rank).
    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn column(&self, i: usize) -> &[f64] {
        &self.data[i * self.rank..(i + 1) * self.rank]
    }

    pub fn col_norm_sq(&self, i: usize) -> f64 {
        self.col_norms_sq[i]
    }

    pub fn col_norms_sq(&self) -> &[f64] {
        &self.col_norms_sq
    }

    /// Features in the order they were pivoted.
    pub fn pivots(&self) -> &[usize] {
        &self.pivots
    }

    /// `C^T C`.
    pub fn reconstruct(&self) -> SymMatrix {
        SymMatrix::from_fn(self.n, |i, j| dot(self.column(i), self.column(j)))
    }

    /// `sum_i w_i c_i c_i^T` as a `rank x rank` matrix; zero weights are skipped.
    pub fn weighted_outer(&self, weights: &[f64]) -> SymMatrix {
        let d = self.rank;
        let mut m = vec![0.0; d * d];
        for (i, &w) in weights.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            let c = self.column(i);
            for r in 0..d {
                let wr = w * c[r];
                if wr == 0.0 {
                    continue;
                }
                let row = &mut m[r * d..(r + 1) * d];
                for s in r..d {
                    row[s] += wr * c[s];
                }
            }
        }
        for r in 0..d {
            for s in 0..r {
                m[r * d + s] = m[s * d + r];
            }
        }
        SymMatrix { n: d, data: m }
    }

    /// `sum_{i in support} c_i c_i^T`.
    pub fn support_outer(&self, support: &[usize]) -> SymMatrix {
        let mut w = vec![0.0; self.n];
        for &i in support {
            w[i] = 1.0;
        }
        self.weighted_outer(&w)
    }
}

/// Rank-revealing Cholesky factorization with diagonal pivoting.
///
/// Pivoting stops once the largest remaining diagonal of the Schur
/// complement drops to `rank_tol * max_i A_ii`; the number of accepted
/// pivots is the returned rank. A remainder that is not (numerically)
/// positive semidefinite is reported as an error.
pub fn pivoted_cholesky(a: &SymMatrix, rank_tol: f64) -> Result<GramFactor> {
    let n = a.dim();
    let scale = a
        .diagonal()
        .into_iter()
        .fold(0.0f64, f64::max)
        .max(a.max_abs());
    let threshold = rank_tol.max(0.0) * scale;
    let mut residual_diag = a.diagonal();
    let mut remaining: Vec<bool> = vec![true; n];
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut pivots = Vec::new();

    loop {
        let pivot =
            (0..n)
                .filter(|&i| remaining[i])
                .fold(None, |best: Option<usize>, i| match best {
                    Some(b) if residual_diag[b] >= residual_diag[i] => Some(b),
                    _ => Some(i),
                });
        let Some(p) = pivot else { break };
        let dp = residual_diag[p];
        if dp <= threshold || dp <= 0.0 {
            break;
        }
        let lp = dp.sqrt();
        let mut l = vec![0.0; n];
        l[p] = lp;
        for i in 0..n {
            if !remaining[i] || i == p {
                continue;
            }
            let mut s = a.get(i, p);
            for r in &rows {
                s -= r[i] * r[p];
            }
            l[i] = s / lp;
            residual_diag[i] -= l[i] * l[i];
        }
        remaining[p] = false;
        residual_diag[p] = 0.0;
        rows.push(l);
        pivots.push(p);
    }

    // The Schur complement left over must be negligible.
    let slack = threshold + 1e-11 * scale.max(f64::MIN_POSITIVE);
    let rest: Vec<usize> = (0..n).filter(|&i| remaining[i]).collect();
    for &i in &rest {
        if residual_diag[i] < -slack {
            return Err(Error::NotPositiveSemidefinite {
                index: i + 1,
                pivot: residual_diag[i],
            });
        }
    }
    for (ii, &i) in rest.iter().enumerate() {
        for &j in &rest[ii + 1..] {
            let mut s = a.get(i, j);
            for r in &rows {
                s -= r[i] * r[j];
            }
            if s.abs() > 2.0 * slack {
                return Err(Error::NotPositiveSemidefinite {
                    index: i + 1,
                    pivot: residual_diag[i].min(residual_diag[j]) - s.abs(),
                });
            }
        }
    }

    let rank = rows.len();
    if rank == 0 {
        // A = 0: a single zero row keeps the factor non-empty.
        return Ok(GramFactor {
            rank: 1,
            n,
            data: vec![0.0; n],
            col_norms_sq: vec![0.0; n],
            pivots,
        });
    }
    let mut data = vec![0.0; rank * n];
    for i in 0..n {
        for (r, row) in rows.iter().enumerate() {
            data[i * rank + r] = row[i];
        }
    }
    let col_norms_sq = (0..n)
        .map(|i| data[i * rank..(i + 1) * rank].iter().map(|x| x * x).sum())
        .collect();
    Ok(GramFactor {
        rank,
        n,
        data,
        col_norms_sq,
        pivots,
    })
}

/// Largest singular value with unit left/right singular vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct SingularTriplet {
    pub sigma: f64,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

/// Largest singular triplet of `b`, computed from the smaller of the two
/// Gram matrices `B B^T` and `B^T B`.
pub fn largest_singular_triplet(b: &Matrix) -> Result<SingularTriplet> {
    largest_singular_triplet_warm(b, None)
}

/// As [`largest_singular_triplet`], warm-starting from a right singular
/// vector guess.
pub fn largest_singular_triplet_warm(
    b: &Matrix,
    warm_v: Option<&[f64]>,
) -> Result<SingularTriplet> {
    let (m, n) = (b.nrows(), b.ncols());
    if b.max_abs() == 0.0 {
        let mut u = vec![0.0; m];
        let mut v = vec![0.0; n];
        u[0] = 1.0;
        v[0] = 1.0;
        return Ok(SingularTriplet { sigma: 0.0, u, v });
    }
    let mut v = if m < n {
        let warm_u = warm_v.filter(|w| w.len() == n).map(|w| b.matvec(w));
        let (pair, _) = top_eigen(&b.outer_gram(), warm_u.as_deref());
        let mut v = b.matvec_transpose(&pair.vector);
        let s = norm(&v);
        v.iter_mut().for_each(|x| *x /= s);
        v
    } else {
        top_eigen(&b.gram(), warm_v.filter(|w| w.len() == n))
            .0
            .vector
    };
    // Recompute the left vector from v so that B v = sigma u holds exactly.
    let bv = b.matvec(&v);
    let sigma = norm(&bv);
    let mut u = if sigma == 0.0 {
        let mut u = vec![0.0; m];
        u[0] = 1.0;
        u
    } else {
        bv.iter().map(|x| x / sigma).collect()
    };
    if canonical_sign(&mut u) {
        v.iter_mut().for_each(|x| *x = -*x);
    }
    Ok(SingularTriplet { sigma, u, v })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_sym(n: usize, seed: u64) -> SymMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let vals: Vec<f64> = (0..n * n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        SymMatrix::from_fn(n, |i, j| vals[i * n + j])
    }

    fn random_psd(n: usize, rank: usize, seed: u64) -> SymMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = Matrix::from_fn(rank, n, |_, _| rng.gen_range(-1.0..1.0));
        g.gram()
    }

    #[test]
    fn identity_has_unit_top_eigenvalue() {
        let pair = largest_eigenpair(&SymMatrix::identity(3), None, 1e-12).unwrap();
        assert!((pair.value - 1.0).abs() < 1e-12);
        assert!((norm(&pair.vector) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn diagonal_top_eigenvector_is_a_basis_vector() {
        let m = SymMatrix::from_diagonal(&[1.0, 3.0, 2.0]);
        let pair = largest_eigenpair(&m, None, 1e-12).unwrap();
        assert!((pair.value - 3.0).abs() < 1e-10);
        assert!((pair.vector[1].abs() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn indefinite_matrix_converges_to_largest_not_dominant() {
        let m = SymMatrix::from_diagonal(&[-5.0, 1.0, 2.0]);
        let pair = largest_eigenpair(&m, None, 1e-12).unwrap();
        assert!((pair.value - 2.0).abs() < 1e-10);
    }

    #[test]
    fn non_convergence_carries_best_iterate() {
        // A huge relative gap cluster with a tiny cap forces the error path.
        let m = SymMatrix::from_diagonal(&[1.0, 0.999_999, 0.5]);
        let err = largest_eigenpair_with(
            &m,
            None,
            PowerOptions {
                tol: 1e-14,
                max_iters: 5,
                psd_hint: false,
            },
        )
        .unwrap_err();
        match err {
            Error::NonConvergence { best, residual, .. } => {
                assert!(residual > 0.0);
                assert!(best.value <= 1.0 + 1e-12);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_asymmetric_input() {
        let err = SymMatrix::new(2, vec![1.0, 2.0, 2.5, 1.0]).unwrap_err();
        assert!(matches!(err, Error::NotSymmetric { row: 1, col: 2, .. }));
    }

    #[test]
    fn reference_spectrum_small_cases() {
        let s = reference_spectrum(&SymMatrix::from_diagonal(&[5.0, 1.0])).unwrap();
        assert_eq!(s.len(), 2);
        assert!((s[0].value - 5.0).abs() < 1e-14 && (s[1].value - 1.0).abs() < 1e-14);
        let s = reference_spectrum(&SymMatrix::new(2, vec![0.0, 1.0, 1.0, 0.0]).unwrap()).unwrap();
        assert!((s[0].value - 1.0).abs() < 1e-14 && (s[1].value + 1.0).abs() < 1e-14);
    }

    #[test]
    fn reference_spectrum_trace_and_orthogonality() {
        for seed in 0..5 {
            let m = random_sym(8, seed);
            let s = reference_spectrum(&m).unwrap();
            let sum: f64 = s.iter().map(|p| p.value).sum();
            assert!((sum - m.trace()).abs() < 1e-8);
            for a in 0..8 {
                for b in 0..8 {
                    let d = dot(&s[a].vector, &s[b].vector);
                    let expect = if a == b { 1.0 } else { 0.0 };
                    assert!((d - expect).abs() < 1e-8);
                }
            }
            for w in s.windows(2) {
                assert!(w[0].value >= w[1].value);
            }
        }
    }

    #[test]
    fn reference_spectrum_size_guard() {
        let m = SymMatrix::identity(REFERENCE_SPECTRUM_MAX_DIM + 1);
        assert!(matches!(
            reference_spectrum(&m),
            Err(Error::GuardExceeded(_))
        ));
    }

    #[test]
    fn cholesky_of_identity_is_full_rank() {
        let f = pivoted_cholesky(&SymMatrix::identity(4), DEFAULT_RANK_TOL).unwrap();
        assert_eq!(f.rank(), 4);
        for i in 0..4 {
            assert!((f.col_norm_sq(i) - 1.0).abs() < 1e-15);
            assert_eq!(f.column(i).iter().filter(|x| x.abs() > 0.0).count(), 1);
        }
    }

    #[test]
    fn cholesky_of_all_ones_is_rank_one() {
        let ones = SymMatrix::from_fn(2, |_, _| 1.0);
        let f = pivoted_cholesky(&ones, DEFAULT_RANK_TOL).unwrap();
        assert_eq!(f.rank(), 1);
        assert_eq!(f.column(0), f.column(1));
        assert!((f.col_norm_sq(0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn cholesky_reports_indefinite_pivot() {
        let m = SymMatrix::new(2, vec![1.0, 2.0, 2.0, 1.0]).unwrap();
        assert!(matches!(
            pivoted_cholesky(&m, DEFAULT_RANK_TOL),
            Err(Error::NotPositiveSemidefinite { .. })
        ));
        let m = SymMatrix::new(2, vec![0.0, 1.0, 1.0, 0.0]).unwrap();
        assert!(matches!(
            pivoted_cholesky(&m, DEFAULT_RANK_TOL),
            Err(Error::NotPositiveSemidefinite { .. })
        ));
    }

    #[test]
    fn cholesky_reconstructs_low_rank_input() {
        for seed in 0..10 {
            let a = random_psd(9, 4, seed);
            let f = pivoted_cholesky(&a, DEFAULT_RANK_TOL).unwrap();
            assert_eq!(f.rank(), 4);
            let r = f.reconstruct();
            let scale = 1.0 + a.max_abs();
            for i in 0..9 {
                for j in 0..9 {
                    assert!((r.get(i, j) - a.get(i, j)).abs() <= 1e-8 * scale);
                }
                let s: f64 = f.column(i).iter().map(|x| x * x).sum();
                assert!((s - f.col_norm_sq(i)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn singular_triplet_small_cases() {
        let t = largest_singular_triplet(&Matrix::from_rows(&[vec![2.0]]).unwrap()).unwrap();
        assert!((t.sigma - 2.0).abs() < 1e-14);
        let d = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 3.0]]).unwrap();
        let t = largest_singular_triplet(&d).unwrap();
        assert!((t.sigma - 3.0).abs() < 1e-10);
        let z = largest_singular_triplet(&Matrix::zeros(2, 3)).unwrap();
        assert_eq!(z.sigma, 0.0);
    }

    #[test]
    fn singular_triplet_satisfies_defining_equations() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for (m, n) in [(5, 7), (7, 5), (4, 4)] {
            let b = Matrix::from_fn(m, n, |_, _| rng.gen_range(-1.0..1.0));
            let t = largest_singular_triplet(&b).unwrap();
            let bv = b.matvec(&t.v);
            let res: f64 = bv
                .iter()
                .zip(&t.u)
                .map(|(x, u)| (x - t.sigma * u).powi(2))
                .sum();
            assert!(res.sqrt() < 1e-9);
            assert!(t.sigma >= b.max_abs() - 1e-12);
        }
    }
}
