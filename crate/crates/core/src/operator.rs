//! Finite sections of the weighted composition-operator matrix
//! A_β = (√(β_m/β_n) a_{m,n}), their norms, and the block and Schur-multiplier
//! experiments built on them.

use std::fmt::Debug;
use std::ops::{Add, AddAssign, Mul, Sub};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::coeff::{default_truncation, power_columns, CoeffColumn};
use crate::error::{invalid, LabError, Result};
use crate::par;
use crate::symbols::SymbolSpec;
use crate::weights::{predicate_report, WeightSequence};

/// Field of matrix entries.
pub trait Scalar:
    Copy
    + Send
    + Sync
    + Default
    + PartialEq
    + Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + AddAssign
    + 'static
{
    fn conj(self) -> Self;
    fn abs2(self) -> f64;
    fn scale(self, s: f64) -> Self;
    fn from_re(x: f64) -> Self;
    fn re(self) -> f64;
    fn sample<R: Rng>(rng: &mut R) -> Self;
}

impl Scalar for f64 {
    fn conj(self) -> Self {
        self
    }
    fn abs2(self) -> f64 {
        self * self
    }
    fn scale(self, s: f64) -> Self {
        self * s
    }
    fn from_re(x: f64) -> Self {
        x
    }
    fn re(self) -> f64 {
        self
    }
    fn sample<R: Rng>(rng: &mut R) -> Self {
        rng.gen_range(-1.0..1.0)
    }
}

impl Scalar for Complex64 {
    fn conj(self) -> Self {
        Complex64::conj(&self)
    }
    fn abs2(self) -> f64 {
        self.norm_sqr()
    }
    fn scale(self, s: f64) -> Self {
        self * s
    }
    fn from_re(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
    fn re(self) -> f64 {
        self.re
    }
    fn sample<R: Rng>(rng: &mut R) -> Self {
        Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    }
}

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix<S> {
    rows: usize,
    cols: usize,
    data: Vec<S>,
}

impl<S: Scalar> DenseMatrix<S> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![S::default(); rows * cols],
        }
    }

    /// Entry (i, j) = f(i, j), rows filled in parallel.
    pub fn from_fn<F>(rows: usize, cols: usize, f: F) -> Self
    where
        F: Fn(usize, usize) -> S + Sync + Send,
    {
        let mut data = vec![S::default(); rows * cols];
        if cols > 0 {
            par::for_each_chunk_mut(&mut data, cols, |i, row| {
                for (j, v) in row.iter_mut().enumerate() {
                    *v = f(i, j);
                }
            });
        }
        Self { rows, cols, data }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| S::from_re(if i == j { 1.0 } else { 0.0 }))
    }

    pub fn diagonal(d: &[f64]) -> Self {
        Self::from_fn(d.len(), d.len(), |i, j| {
            S::from_re(if i == j { d[i] } else { 0.0 })
        })
    }

    pub fn from_rows(rows: usize, cols: usize, data: Vec<S>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(LabError::Dimension(format!(
                "{} entries for a {rows}×{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn random<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> Self {
        let data = (0..rows * cols).map(|_| S::sample(rng)).collect();
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> S {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: S) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[S] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn data(&self) -> &[S] {
        &self.data
    }

    /// y = A x.
    pub fn matvec(&self, x: &[S]) -> Vec<S> {
        par::map_range(self.rows, |i| {
            let mut acc = S::default();
            for (a, b) in self.row(i).iter().zip(x) {
                acc += *a * *b;
            }
            acc
        })
    }

    /// z = Aᴴ y.
    pub fn matvec_adjoint(&self, y: &[S]) -> Vec<S> {
        const CHUNK: usize = 256;
        let mut z = vec![S::default(); self.cols];
        par::for_each_chunk_mut(&mut z, CHUNK, |c, out| {
            let j0 = c * CHUNK;
            for (i, yi) in y.iter().enumerate() {
                let row = &self.row(i)[j0..j0 + out.len()];
                for (zj, a) in out.iter_mut().zip(row) {
                    *zj += a.conj() * *yi;
                }
            }
        });
        z
    }

    /// z = Aᴴ(A x) in a single pass over the rows.
    pub fn gram_apply(&self, x: &[S]) -> Vec<S> {
        const ROWS: usize = 256;
        let blocks = self.rows.div_ceil(ROWS);
        let partial = par::map_range(blocks, |b| {
            let mut z = vec![S::default(); self.cols];
            for i in b * ROWS..((b + 1) * ROWS).min(self.rows) {
                let row = self.row(i);
                let mut t = S::default();
                for (a, v) in row.iter().zip(x) {
                    t += *a * *v;
                }
                for (zj, a) in z.iter_mut().zip(row) {
                    *zj += a.conj() * t;
                }
            }
            z
        });
        let mut z = vec![S::default(); self.cols];
        for p in partial {
            for (zj, v) in z.iter_mut().zip(p) {
                *zj += v;
            }
        }
        z
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|v| v.abs2()).sum::<f64>().sqrt()
    }

    /// Entry-wise map, keeping the shape.
    pub fn map_indexed<F>(&self, f: F) -> Self
    where
        F: Fn(usize, usize, S) -> S + Sync + Send,
    {
        Self::from_fn(self.rows, self.cols, |i, j| f(i, j, self.get(i, j)))
    }

    pub fn is_lower_triangular(&self) -> bool {
        (0..self.rows).all(|i| self.row(i).iter().skip(i + 1).all(|v| *v == S::default()))
    }

    /// Leading k×k block.
    pub fn leading(&self, k: usize) -> Self {
        Self::from_fn(k, k, |i, j| self.get(i, j))
    }
}

fn dot<S: Scalar>(a: &[S], b: &[S]) -> S {
    let mut acc = S::default();
    for (x, y) in a.iter().zip(b) {
        acc += x.conj() * *y;
    }
    acc
}

fn norm<S: Scalar>(a: &[S]) -> f64 {
    a.iter().map(|v| v.abs2()).sum::<f64>().sqrt()
}

/// A norm estimate from a finite section.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormEstimate {
    pub value: f64,
    #[serde(rename = "N")]
    pub n: usize,
    pub iterations: usize,
    pub residual: f64,
    /// Always true: finite sections under-estimate the operator norm.
    pub lower_bound_only: bool,
}

/// Cap on Krylov dimension per start vector.
pub const LANCZOS_MAX_DIM: usize = 1500;

/// Seed of the restart vector.
pub const RESTART_SEED: u64 = 0x5eed_1a2c;

/// Lanczos on the Gram form AᴴA with full reorthogonalization.
///
/// Returns (‖A y‖ for the top Ritz vector y, Krylov steps, relative residual).
fn lanczos_top<S: Scalar>(
    a: &DenseMatrix<S>,
    start: Vec<S>,
    tol: f64,
) -> Result<(f64, usize, f64)> {
    let n = a.cols();
    let mut q = start;
    let s = norm(&q);
    if s == 0.0 {
        return Err(invalid("start", "zero vector"));
    }
    q.iter_mut().for_each(|v| *v = v.scale(1.0 / s));
    let mut basis: Vec<Vec<S>> = Vec::new();
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let cap = n.min(LANCZOS_MAX_DIM);
    let mut last = (0.0, f64::INFINITY, Vec::new());
    for k in 0..cap {
        let mut w = a.gram_apply(&q);
        let alpha = dot(&q, &w).re();
        basis.push(q);
        alphas.push(alpha);
        // three-term recurrence, then one full Gram–Schmidt pass
        let last_two = basis.len().saturating_sub(2);
        for (j, v) in basis.iter().enumerate().skip(last_two) {
            let c = if j + 1 == basis.len() {
                S::from_re(alpha)
            } else {
                S::from_re(betas[j])
            };
            for (wi, vi) in w.iter_mut().zip(v) {
                *wi = *wi - *vi * c;
            }
        }
        for v in &basis {
            let c = dot(v, &w);
            for (wi, vi) in w.iter_mut().zip(v) {
                *wi = *wi - *vi * c;
            }
        }
        let beta = norm(&w);
        let dim = k + 1;
        let (theta, svec) = tridiagonal_top(&alphas, &betas);
        let res = if theta > 0.0 {
            (beta * svec[dim - 1]).abs() / theta
        } else {
            0.0
        };
        last = (theta, res, svec);
        if res <= tol || beta <= 1e-14 * theta.abs().max(f64::MIN_POSITIVE) || dim == n {
            break;
        }
        betas.push(beta);
        q = w.iter().map(|v| v.scale(1.0 / beta)).collect();
    }
    let (theta, res, svec) = last;
    if !(res <= tol) && basis.len() < n {
        return Err(LabError::NoConvergence {
            iterations: basis.len(),
            residual: res,
        });
    }
    let mut y = vec![S::default(); n];
    for (coef, v) in svec.iter().zip(&basis) {
        for (yi, vi) in y.iter_mut().zip(v) {
            *yi += vi.scale(*coef);
        }
    }
    let ny = norm(&y);
    let value = if ny > 0.0 {
        norm(&a.matvec(&y)) / ny
    } else {
        theta.max(0.0).sqrt()
    };
    Ok((value, basis.len(), res))
}

/// Largest eigenvalue of the symmetric tridiagonal matrix with diagonal `d`
/// and off-diagonal `e`, with a unit eigenvector.
///
/// Sturm-count bisection for the value; inverse iteration with a shift just
/// above it (so the shifted matrix is negative definite and needs no pivoting)
/// for the vector.
pub fn tridiagonal_top(d: &[f64], e: &[f64]) -> (f64, Vec<f64>) {
    let k = d.len();
    if k == 1 {
        return (d[0], vec![1.0]);
    }
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for i in 0..k {
        let r = if i > 0 { e[i - 1].abs() } else { 0.0 } + if i + 1 < k { e[i].abs() } else { 0.0 };
        lo = lo.min(d[i] - r);
        hi = hi.max(d[i] + r);
    }
    let below = |x: f64| {
        let mut count = 0;
        let mut q = d[0] - x;
        if q < 0.0 {
            count += 1;
        }
        for i in 1..k {
            let qq = if q == 0.0 { f64::MIN_POSITIVE } else { q };
            q = d[i] - x - e[i - 1] * e[i - 1] / qq;
            if q < 0.0 {
                count += 1;
            }
        }
        count
    };
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo <= 2.0 * f64::EPSILON * hi.abs().max(lo.abs()) {
            break;
        }
        if below(mid) == k {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let theta = hi;
    let shift = theta + 4.0 * f64::EPSILON * theta.abs().max(f64::MIN_POSITIVE) * k as f64;
    let mut v = vec![1.0; k];
    for _ in 0..3 {
        // Thomas algorithm on (T − shift) x = v
        let mut c = vec![0.0; k];
        let mut g = vec![0.0; k];
        let mut piv = d[0] - shift;
        c[0] = if k > 1 { e[0] / piv } else { 0.0 };
        g[0] = v[0] / piv;
        for i in 1..k {
            piv = d[i] - shift - e[i - 1] * c[i - 1];
            if i + 1 < k {
                c[i] = e[i] / piv;
            }
            g[i] = (v[i] - e[i - 1] * g[i - 1]) / piv;
        }
        let mut x = vec![0.0; k];
        x[k - 1] = g[k - 1];
        for i in (0..k - 1).rev() {
            x[i] = g[i] - c[i] * x[i + 1];
        }
        let s = x.iter().map(|t| t * t).sum::<f64>().sqrt();
        v = x.iter().map(|t| t / s).collect();
    }
    (theta, v)
}

/// Largest singular value by Krylov-accelerated power iteration on AᴴA.
///
/// Runs from the normalized all-ones vector and from one seeded random vector
/// and keeps the larger Rayleigh value; both are lower bounds for ‖A‖.
pub fn matrix_norm<S: Scalar>(a: &DenseMatrix<S>, tol: f64) -> Result<NormEstimate> {
    if !(tol > 0.0) {
        return Err(invalid("tol", "must be positive"));
    }
    let n = a.cols();
    if n == 0 || a.rows() == 0 {
        return Ok(NormEstimate {
            value: 0.0,
            n,
            iterations: 0,
            residual: 0.0,
            lower_bound_only: true,
        });
    }
    let ones = vec![S::from_re(1.0); n];
    let mut rng = ChaCha8Rng::seed_from_u64(RESTART_SEED);
    let rand_start: Vec<S> = (0..n).map(|_| S::sample(&mut rng)).collect();
    let (v1, i1, r1) = lanczos_top(a, ones, tol)?;
    let (v2, i2, r2) = lanczos_top(a, rand_start, tol)?;
    Ok(NormEstimate {
        value: v1.max(v2),
        n,
        iterations: i1 + i2,
        residual: if v1 >= v2 { r1 } else { r2 },
        lower_bound_only: true,
    })
}

/// Plain power iteration on AᴴA, kept as an independent route.
pub fn power_norm<S: Scalar>(
    a: &DenseMatrix<S>,
    tol: f64,
    max_iter: usize,
) -> Result<NormEstimate> {
    let n = a.cols();
    let mut x = vec![S::from_re(1.0 / (n as f64).sqrt()); n];
    let mut prev = 0.0;
    for it in 1..=max_iter {
        let ax = a.matvec(&x);
        let value = norm(&ax);
        let g = a.matvec_adjoint(&ax);
        let s = norm(&g);
        if s == 0.0 {
            return Ok(NormEstimate {
                value: 0.0,
                n,
                iterations: it,
                residual: 0.0,
                lower_bound_only: true,
            });
        }
        x = g.iter().map(|v| v.scale(1.0 / s)).collect();
        let change = (value - prev).abs() / value.max(f64::MIN_POSITIVE);
        if change <= tol {
            return Ok(NormEstimate {
                value,
                n,
                iterations: it,
                residual: change,
                lower_bound_only: true,
            });
        }
        prev = value;
    }
    Err(LabError::NoConvergence {
        iterations: max_iter,
        residual: f64::NAN,
    })
}

/// Real or complex storage, chosen at assembly.
#[derive(Debug, Clone, PartialEq)]
pub enum Section {
    Real(DenseMatrix<f64>),
    Complex(DenseMatrix<Complex64>),
}

/// N×N section of A_β.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedOperator {
    pub size: usize,
    pub symbol: SymbolSpec,
    pub weight: String,
    pub section: Section,
    /// Rounding bound on ‖computed − exact section‖.
    pub trunc_error: f64,
    /// ln β_0..ln β_{N−1}, to undo the weighting.
    pub log_beta: Vec<f64>,
}

/// Section of A_β for symbol φ and weight β.
///
/// Columns n < N of φⁿ are truncated at M = N − 1, which leaves every entry of
/// the section exact up to rounding.
pub fn assemble(phi: &SymbolSpec, beta: &WeightSequence, size: usize) -> Result<TruncatedOperator> {
    if size == 0 {
        return Err(invalid("N", "must be positive"));
    }
    if beta.horizon() + 1 < size {
        return Err(LabError::HorizonMismatch {
            requested: size - 1,
            available: beta.horizon(),
        });
    }
    if let SymbolSpec::Mobius { a } = phi {
        if a.im == 0.0 {
            return Ok(mobius_real_section(phi, a.re, beta, size));
        }
    }
    let cols = power_columns(phi, size - 1, size - 1)?;
    Ok(from_columns(phi, beta, &cols))
}

/// Real Möbius sections straight from the column recurrence
/// h_m = g_m − a h_{m−1}, g = (a + z)·(previous column), skipping complex storage.
fn mobius_real_section(
    phi: &SymbolSpec,
    a: f64,
    beta: &WeightSequence,
    size: usize,
) -> TruncatedOperator {
    let lb: Vec<f64> = beta.logs()[..size].to_vec();
    let mut m = DenseMatrix::<f64>::zeros(size, size);
    let mut col = vec![0.0; size];
    col[0] = 1.0;
    let mut max_entry: f64 = 1.0;
    for n in 0..size {
        if n > 0 {
            let mut prev_h = 0.0;
            let mut prev_c = 0.0;
            for c in col.iter_mut() {
                let g = a * *c + prev_c;
                prev_c = *c;
                let h = g - a * prev_h;
                *c = h;
                prev_h = h;
            }
        }
        for (k, v) in col.iter().enumerate() {
            let e = v * (0.5 * (lb[k] - lb[n])).exp();
            max_entry = max_entry.max(e.abs());
            m.set(k, n, e);
        }
    }
    TruncatedOperator {
        size,
        symbol: phi.clone(),
        weight: beta.rule().label(),
        section: Section::Real(m),
        trunc_error: f64::EPSILON * (size as f64).powi(2) * max_entry,
        log_beta: lb,
    }
}

/// Assemble from precomputed columns (n = 0..N−1, each truncated at N − 1).
pub fn from_columns(
    phi: &SymbolSpec,
    beta: &WeightSequence,
    cols: &[CoeffColumn],
) -> TruncatedOperator {
    let size = cols.len();
    let lb: Vec<f64> = beta.logs()[..size].to_vec();
    let real = cols.iter().all(|c| c.entries.iter().all(|v| v.im == 0.0));
    let w = |m: usize, n: usize| (0.5 * (lb[m] - lb[n])).exp();
    let section = if real {
        Section::Real(DenseMatrix::from_fn(size, size, |m, n| {
            w(m, n) * cols[n].entries[m].re
        }))
    } else {
        Section::Complex(DenseMatrix::from_fn(size, size, |m, n| {
            cols[n].entries[m] * w(m, n)
        }))
    };
    let max_entry = match &section {
        Section::Real(a) => a.data().iter().fold(0.0f64, |x, v| x.max(v.abs())),
        Section::Complex(a) => a.data().iter().fold(0.0f64, |x, v| x.max(v.norm())),
    };
    TruncatedOperator {
        size,
        symbol: phi.clone(),
        weight: beta.rule().label(),
        section,
        trunc_error: f64::EPSILON * (size as f64).powi(2) * max_entry,
        log_beta: lb,
    }
}

impl TruncatedOperator {
    /// Entry (m, n) as a complex number.
    pub fn entry(&self, m: usize, n: usize) -> Complex64 {
        match &self.section {
            Section::Real(a) => Complex64::new(a.get(m, n), 0.0),
            Section::Complex(a) => a.get(m, n),
        }
    }

    /// The unweighted section A = B⁻¹ A_β B with B = diag √β.
    pub fn unweighted(&self) -> Section {
        let lb = &self.log_beta;
        let w = |m: usize, n: usize| (0.5 * (lb[n] - lb[m])).exp();
        match &self.section {
            Section::Real(a) => Section::Real(a.map_indexed(|m, n, v| v * w(m, n))),
            Section::Complex(a) => Section::Complex(a.map_indexed(|m, n, v| v * w(m, n))),
        }
    }
}

impl Section {
    pub fn norm(&self, tol: f64) -> Result<NormEstimate> {
        match self {
            Section::Real(a) => matrix_norm(a, tol),
            Section::Complex(a) => matrix_norm(a, tol),
        }
    }

    pub fn size(&self) -> usize {
        match self {
            Section::Real(a) => a.rows(),
            Section::Complex(a) => a.rows(),
        }
    }
}

/// Largest singular value of the section.
pub fn op_norm(t: &TruncatedOperator, tol: f64) -> Result<NormEstimate> {
    t.section.norm(tol)
}

/// Σ_m |a_{m,n}|² β_m / β_n over the computed column, with a bound on the rest.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ColumnRatio {
    pub n: usize,
    /// Partial sum: a lower bound for the full ratio.
    pub ratio: f64,
    /// Upper bound on the omitted tail (∞ when the weight has no tail bound).
    pub tail_bound: f64,
    pub truncation: usize,
}

pub fn column_norm_ratio(phi: &SymbolSpec, beta: &WeightSequence, n: usize) -> Result<ColumnRatio> {
    let m = default_truncation(phi, n).min(beta.horizon());
    if m < n.min(beta.horizon()) {
        return Err(LabError::HorizonMismatch {
            requested: n,
            available: beta.horizon(),
        });
    }
    let col = crate::coeff::column_explicit(phi, n, m)?;
    let ln = beta.log_at(n).ok_or(LabError::HorizonMismatch {
        requested: n,
        available: beta.horizon(),
    })?;
    // weights are combined in the log domain: β_k/β_n alone can overflow
    let scaled = |x: f64, log_w: f64| {
        if x == 0.0 {
            0.0
        } else {
            (x.ln() + log_w - ln).exp()
        }
    };
    let ratio = col
        .entries
        .iter()
        .enumerate()
        .map(|(k, c)| scaled(c.norm_sqr(), beta.log(k)))
        .sum();
    let tail_bound = match beta.tail_sup_log(m + 1) {
        Ok(s) => scaled(col.trunc_error, s),
        Err(_) => f64::INFINITY,
    };
    Ok(ColumnRatio {
        n,
        ratio,
        tail_bound,
        truncation: m,
    })
}

/// Terms past which the kernel series is cut off at most.
pub const KERNEL_MAX_TERMS: usize = 1 << 24;

/// ‖K_x‖ = (Σ x^{2k}/β_k)^{1/2}, summed until a geometric tail bound falls below `tol`.
pub fn kernel_norm(beta: &WeightSequence, x: f64, tol: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&x) {
        return Err(invalid("x", "must lie in [0, 1)"));
    }
    if x == 0.0 {
        return Ok((-beta.log(0)).exp().sqrt());
    }
    let l2 = 2.0 * x.ln();
    let mut sum = 0.0;
    let mut prev_log = f64::NAN;
    let mut window_max_ratio = 0.0f64;
    for k in 0..KERNEL_MAX_TERMS {
        let Some(lb) = beta.log_at(k) else {
            return Err(LabError::KernelDivergent {
                horizon: beta.horizon(),
            });
        };
        let lt = k as f64 * l2 - lb;
        let t = lt.exp();
        sum += t;
        if k > 0 {
            let q = (lt - prev_log).exp();
            window_max_ratio = if k % 64 == 1 {
                q
            } else {
                window_max_ratio.max(q)
            };
            if k % 64 == 0 && k >= 128 && window_max_ratio < 1.0 {
                let tail = t * window_max_ratio / (1.0 - window_max_ratio);
                if tail <= tol * tol.max(sum) {
                    break;
                }
            }
        }
        prev_log = lt;
        if !sum.is_finite() {
            return Err(LabError::KernelDivergent { horizon: k });
        }
        if k + 1 == KERNEL_MAX_TERMS {
            return Err(LabError::KernelDivergent { horizon: k });
        }
    }
    Ok(sum.sqrt())
}

/// Least-squares slope of ln‖K_x‖ against −ln(1 − x).
pub fn kernel_growth_fit(beta: &WeightSequence, xs: &[f64]) -> Result<f64> {
    if xs.len() < 2 {
        return Err(invalid("xs", "need at least two grid points"));
    }
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .map(|&x| Ok((-(1.0 - x).ln(), kernel_norm(beta, x, 1e-12)?.ln())))
        .collect::<Result<_>>()?;
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    Ok(sxy / sxx)
}

/// Which of the four blocks an entry belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Part {
    D,
    R,
    S,
    U,
}

/// k with i ∈ I_k, where I_0 = [0, N) and I_k = [N^k, N^{k+1}).
pub fn block_index(i: usize, base: usize) -> u32 {
    let mut k = 0;
    let mut hi = base;
    while i >= hi {
        k += 1;
        hi = hi.saturating_mul(base);
    }
    k
}

/// D on I_k × I_k, R on I_k × I_{k+1}, S on rows ≥ N^{k+1} × I_k, U the rest.
pub fn classify(m: usize, n: usize, base: usize) -> Part {
    let (km, kn) = (block_index(m, base), block_index(n, base));
    if km == kn {
        Part::D
    } else if kn == km + 1 {
        Part::R
    } else if km > kn {
        Part::S
    } else {
        Part::U
    }
}

/// Norms of one split.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockNorms {
    pub a: f64,
    pub d: f64,
    pub r: f64,
    pub s: f64,
    pub u_hs: f64,
    /// D + R + S + U reproduces A entry for entry.
    pub partition_exact: bool,
}

/// Block split of a section and of its unweighted counterpart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockReport {
    pub n_base: usize,
    pub size: usize,
    pub blocks: Vec<(usize, usize)>,
    pub unweighted: BlockNorms,
    pub weighted: BlockNorms,
}

/// The four block matrices of a section.
pub struct BlockSplit<S> {
    pub d: DenseMatrix<S>,
    pub r: DenseMatrix<S>,
    pub s: DenseMatrix<S>,
    pub u: DenseMatrix<S>,
}

pub fn split_blocks<S: Scalar>(a: &DenseMatrix<S>, base: usize) -> BlockSplit<S> {
    let pick = |p: Part| {
        a.map_indexed(move |m, n, v| {
            if classify(m, n, base) == p {
                v
            } else {
                S::default()
            }
        })
    };
    BlockSplit {
        d: pick(Part::D),
        r: pick(Part::R),
        s: pick(Part::S),
        u: pick(Part::U),
    }
}

fn block_norms<S: Scalar>(a: &DenseMatrix<S>, base: usize, tol: f64) -> Result<BlockNorms> {
    let sp = split_blocks(a, base);
    let exact = (0..a.rows()).all(|m| {
        (0..a.cols()).all(|n| {
            sp.d.get(m, n) + sp.r.get(m, n) + sp.s.get(m, n) + sp.u.get(m, n) == a.get(m, n)
        })
    });
    Ok(BlockNorms {
        a: matrix_norm(a, tol)?.value,
        d: matrix_norm(&sp.d, tol)?.value,
        r: matrix_norm(&sp.r, tol)?.value,
        s: matrix_norm(&sp.s, tol)?.value,
        u_hs: sp.u.frobenius(),
        partition_exact: exact,
    })
}

fn section_block_norms(s: &Section, base: usize, tol: f64) -> Result<BlockNorms> {
    match s {
        Section::Real(a) => block_norms(a, base, tol),
        Section::Complex(a) => block_norms(a, base, tol),
    }
}

/// Split A and A_β into D, R, S, U and report their norms.
pub fn block_decompose(t: &TruncatedOperator, n_base: usize, tol: f64) -> Result<BlockReport> {
    if n_base < 2 {
        return Err(invalid("N_base", "must be at least 2"));
    }
    if n_base > t.size {
        return Err(invalid("N_base", "exceeds the section size"));
    }
    let mut blocks = vec![(0, n_base)];
    let mut lo = n_base;
    while lo < t.size {
        let hi = lo.saturating_mul(n_base).min(t.size);
        blocks.push((lo, hi));
        lo = hi;
    }
    Ok(BlockReport {
        n_base,
        size: t.size,
        blocks,
        unweighted: section_block_norms(&t.unweighted(), n_base, tol)?,
        weighted: section_block_norms(&t.section, n_base, tol)?,
    })
}

/// Σ_{n≥0} (ρn/2) e^{−αρn} = (ρ/2) q/(1 − q)², q = e^{−αρ}.
pub fn u_block_bound(rho: f64, alpha: f64) -> f64 {
    let q = (-alpha * rho).exp();
    0.5 * rho * q / ((1.0 - q) * (1.0 - q))
}

/// Slack for the Kacnel'son comparison.
pub const KACNELSON_SLACK: f64 = 1e-10;

/// (‖Γ⁻¹MΓ‖, ‖M‖) for lower-triangular M and non-decreasing γ.
pub fn kacnelson_check(m: &DenseMatrix<f64>, gamma: &[f64], tol: f64) -> Result<(f64, f64)> {
    if m.rows() != m.cols() || gamma.len() != m.rows() {
        return Err(LabError::Dimension(
            "M must be square with one γ per row".into(),
        ));
    }
    if !m.is_lower_triangular() {
        return Err(LabError::HypothesisViolated(
            "M must be lower-triangular".into(),
        ));
    }
    if let Some(i) = gamma.iter().position(|g| !(*g > 0.0)) {
        return Err(invalid("gamma", format!("entry {i} is not positive")));
    }
    if let Some(i) = gamma.windows(2).position(|w| w[1] < w[0]) {
        return Err(LabError::NotNonDecreasing(i + 1));
    }
    let conj = m.map_indexed(|i, j, v| v * (gamma[j] / gamma[i]));
    Ok((matrix_norm(&conj, tol)?.value, matrix_norm(m, tol)?.value))
}

/// Outcome of a band Schur-multiplier comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandSchur {
    pub lhs: f64,
    pub rhs: f64,
    /// √(C₂/C₁) from the slow-oscillation profile.
    pub k: f64,
}

/// ‖A ∘ (√(β_m/β_n) 1_{n/C ≤ m ≤ Cn})‖ against K‖A‖.
pub fn band_schur_check(
    a: &DenseMatrix<f64>,
    beta: &WeightSequence,
    c: f64,
    tol: f64,
) -> Result<BandSchur> {
    if !(1.0..=2.0).contains(&c) {
        return Err(invalid("C", "band constant must lie in [1, 2]"));
    }
    let size = a.rows().max(a.cols());
    let horizon = (2 * size).max(4);
    if beta.horizon() < horizon {
        return Err(LabError::HorizonMismatch {
            requested: horizon,
            available: beta.horizon(),
        });
    }
    let rep = predicate_report(beta, horizon)?;
    let (c1, c2) = (rep.slowosc_min, rep.slowosc_max);
    if !(c1 > 0.0 && c2.is_finite() && c2 >= c1) {
        return Err(LabError::DegenerateProfile(format!("bounds ({c1}, {c2})")));
    }
    let k = (c2 / c1).sqrt();
    let masked = a.map_indexed(|m, n, v| {
        let (mf, nf) = (m as f64, n as f64);
        if nf <= c * mf && mf <= c * nf {
            v * beta.ratio(m, n).sqrt()
        } else {
            0.0
        }
    });
    Ok(BandSchur {
        lhs: matrix_norm(&masked, tol)?.value,
        rhs: k * matrix_norm(a, tol)?.value,
        k,
    })
}
