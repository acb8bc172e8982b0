//! Taylor coefficient columns a_{m,n} of φⁿ.
//!
//! Three routes are kept independent so they can serve as oracles for one
//! another: truncated series powering, sampling on a circle followed by an
//! FFT, and explicit per-symbol formulas (the Möbius recurrence, closed forms
//! and the Laguerre recurrence for singular inner functions).

use std::f64::consts::PI;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, LabError, Result};
use crate::par;
use crate::symbols::{sup_modulus, symbol_eval, SymbolSpec};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

/// Target for Σ_{m>M}|a_{m,n}|² when choosing a default truncation.
pub const DEFAULT_TAIL_TARGET: f64 = 1e-12;

/// Largest default truncation; slower-decaying columns report their tail instead.
pub const MAX_DEFAULT_TRUNCATION: usize = 1 << 14;

/// Truncation used for singular inner columns when none is given.
pub const INNER_DEFAULT_TRUNCATION: usize = 4096;

/// Grid for sampling I_a when it seeds the series route.
pub const INNER_SEED_GRID: usize = 1 << 20;

/// Relative disagreement (to the column maximum) that flags a Laguerre entry.
pub const CANCELLATION_TOL: f64 = 1e-6;

/// √2/π: square of the constant in the m^{−3/4} envelope of inner coefficients.
pub const INNER_ENVELOPE_SQ: f64 = std::f64::consts::SQRT_2 / PI;

/// How a column was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    SeriesPower,
    CircleFft,
    Explicit,
}

impl Method {
    pub fn tag(self) -> u8 {
        match self {
            Method::SeriesPower => 0,
            Method::CircleFft => 1,
            Method::Explicit => 2,
        }
    }

    pub fn from_tag(t: u8) -> Result<Self> {
        Ok(match t {
            0 => Method::SeriesPower,
            1 => Method::CircleFft,
            2 => Method::Explicit,
            _ => return Err(LabError::Format(format!("unknown method tag {t}"))),
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Method::SeriesPower => "series_power",
            Method::CircleFft => "circle_fft",
            Method::Explicit => "explicit",
        }
    }
}

/// Coefficients a_{0..M,n} of φⁿ.
#[derive(Debug, Clone, PartialEq)]
pub struct CoeffColumn {
    pub symbol: String,
    pub n: usize,
    pub entries: Vec<Complex64>,
    pub method: Method,
    /// Upper bound on Σ_{m>M} |a_{m,n}|².
    pub trunc_error: f64,
    /// Sampling radius for `CircleFft`.
    pub radius: Option<f64>,
}

impl CoeffColumn {
    /// Truncation index M.
    pub fn truncation(&self) -> usize {
        self.entries.len() - 1
    }

    pub fn norm_sq(&self) -> f64 {
        self.entries.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn max_modulus(&self) -> f64 {
        self.entries.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Real parts, for symbols with real coefficients.
    pub fn real(&self) -> Vec<f64> {
        self.entries.iter().map(|c| c.re).collect()
    }

    /// max_m |a_m − b_m| / max_m |a_m| over the common range.
    pub fn relative_distance(&self, other: &CoeffColumn) -> f64 {
        let k = self.entries.len().min(other.entries.len());
        let d = (0..k)
            .map(|m| (self.entries[m] - other.entries[m]).norm())
            .fold(0.0, f64::max);
        d / self.max_modulus().max(f64::MIN_POSITIVE)
    }
}

/// Truncated product of two series to length `len`.
pub fn mul_truncated(a: &[Complex64], b: &[Complex64], len: usize) -> Vec<Complex64> {
    let la = effective_len(a);
    let lb = effective_len(b);
    let nz_b: Vec<usize> = (0..lb).filter(|&j| b[j] != ZERO).collect();
    let sparse = nz_b.len() * 4 < lb;
    par::map_range(len, |k| {
        let mut acc = ZERO;
        if sparse {
            for &j in &nz_b {
                if j > k {
                    break;
                }
                if k - j < la {
                    acc += a[k - j] * b[j];
                }
            }
        } else {
            let lo = (k + 1).saturating_sub(lb);
            let hi = k.min(la.saturating_sub(1));
            if la > 0 {
                for i in lo..=hi {
                    acc += a[i] * b[k - i];
                }
            }
        }
        acc
    })
}

fn effective_len(a: &[Complex64]) -> usize {
    a.iter().rposition(|c| *c != ZERO).map_or(0, |i| i + 1)
}

/// φ's own coefficients c_0..c_M and a bound on Σ_{k>M}|c_k|².
pub fn symbol_coeffs(phi: &SymbolSpec, m: usize) -> Result<(Vec<Complex64>, f64)> {
    let mut c = vec![ZERO; m + 1];
    let tail = match phi {
        SymbolSpec::Mobius { a } => {
            c[0] = *a;
            let s = 1.0 - a.norm_sqr();
            let mut p = ONE;
            for ck in c.iter_mut().skip(1) {
                *ck = p * s;
                p *= -a.conj();
            }
            s * a.norm_sqr().powf(m as f64)
        }
        SymbolSpec::Rotation { theta } => {
            if m >= 1 {
                c[1] = Complex64::from_polar(1.0, *theta);
                0.0
            } else {
                1.0
            }
        }
        SymbolSpec::Monomial { k } => {
            let k = *k as usize;
            if k <= m {
                c[k] = ONE;
                0.0
            } else {
                1.0
            }
        }
        SymbolSpec::TestSymbol { m: m0, n: n0 } => {
            let col = test_symbol_column(*m0, *n0, 1, m);
            return Ok((col.entries, col.trunc_error));
        }
        SymbolSpec::Custom { coeffs } => {
            for (k, v) in coeffs.iter().enumerate().take(m + 1) {
                c[k] = *v;
            }
            coeffs.iter().skip(m + 1).map(|v| v.norm_sqr()).sum()
        }
        SymbolSpec::SingularInner { a } => {
            let r = 1.0 - 1.0 / (2.0 * m.max(1) as f64);
            let col = circle_fft_raw(phi, 1, m, r, INNER_SEED_GRID)?;
            return Ok((col, inner_envelope_tail(*a, m)));
        }
    };
    Ok((c, tail))
}

/// Binary powering of φ's truncated series.
pub fn column_series_power(phi: &SymbolSpec, n: usize, m: usize) -> Result<CoeffColumn> {
    let len = m + 1;
    let (base_c, _) = symbol_coeffs(phi, m)?;
    let mut result = vec![ZERO; len];
    result[0] = ONE;
    let mut base = base_c;
    let mut e = n;
    while e > 0 {
        if e & 1 == 1 {
            result = mul_truncated(&result, &base, len);
        }
        e >>= 1;
        if e > 0 {
            base = mul_truncated(&base, &base, len);
        }
    }
    Ok(CoeffColumn {
        symbol: phi.label(),
        n,
        trunc_error: column_tail_bound(phi, n, m, &result),
        entries: result,
        method: Method::SeriesPower,
        radius: None,
    })
}

/// Samples φⁿ on |z| = r and returns the scaled DFT coefficients.
fn circle_fft_raw(
    phi: &SymbolSpec,
    n: usize,
    m: usize,
    r: f64,
    grid: usize,
) -> Result<Vec<Complex64>> {
    let step = 2.0 * PI / grid as f64;
    let pow = i32::try_from(n).map_err(|_| invalid("n", "too large"))?;
    let mut samples: Vec<Complex64> = par::map_range(grid, |j| {
        let z = Complex64::from_polar(r, step * j as f64);
        symbol_eval(phi, z).map(|w| w.powi(pow)).unwrap_or(ZERO)
    });
    let fft = FftPlanner::new().plan_fft_forward(grid);
    fft.process(&mut samples);
    let scale = 1.0 / grid as f64;
    let inv_r = 1.0 / r;
    let mut rm = 1.0;
    let mut out = Vec::with_capacity(m + 1);
    for s in samples.iter().take(m + 1) {
        out.push(s * (scale * rm));
        rm *= inv_r;
    }
    Ok(out)
}

/// Coefficients from the DFT of φⁿ sampled on |z| = r.
pub fn column_circle_fft(
    phi: &SymbolSpec,
    n: usize,
    m: usize,
    r: f64,
    grid: usize,
) -> Result<CoeffColumn> {
    if !grid.is_power_of_two() || grid < 4 * (m + 1) {
        return Err(invalid("grid", "must be a power of two at least 4(M+1)"));
    }
    if !(r > 0.0 && r <= 1.0) {
        return Err(invalid("r", "must lie in (0, 1]"));
    }
    if let SymbolSpec::SingularInner { .. } = phi {
        if r >= 1.0 {
            return Err(invalid("r", "singular inner symbols need r < 1"));
        }
    }
    // r^{−M} multiplies rounding of O(1) samples
    if m as f64 * (-r.ln()) > 34.0 {
        return Err(LabError::DynamicRange {
            radius: r,
            truncation: m,
        });
    }
    let entries = circle_fft_raw(phi, n, m, r, grid)?;
    let alias = alias_bound(phi, n, r, grid);
    let tail = column_tail_bound(phi, n, m, &entries);
    Ok(CoeffColumn {
        symbol: phi.label(),
        n,
        trunc_error: tail + (m + 1) as f64 * alias * alias,
        entries,
        method: Method::CircleFft,
        radius: Some(r),
    })
}

/// Bound on |â_m − a_m| from wrap-around of the sampled grid.
fn alias_bound(phi: &SymbolSpec, n: usize, r: f64, grid: usize) -> f64 {
    match phi {
        SymbolSpec::Mobius { a } => {
            let a = a.norm();
            if a == 0.0 {
                return if n >= grid { 1.0 } else { 0.0 };
            }
            // |a_k| ≤ M(R)^n R^{−k}, M(R) = (R − a)/(1 − aR)
            let f = |big_r: f64| {
                let q = (r / big_r).powf(grid as f64);
                n as f64 * ((big_r - a) / (1.0 - a * big_r)).ln() + grid as f64 * (r / big_r).ln()
                    - (1.0 - q).ln()
            };
            minimize_over_radius(f, 1.0, 1.0 / a).exp().min(1.0)
        }
        SymbolSpec::Rotation { .. } => 0.0,
        SymbolSpec::Monomial { k } => {
            if (*k as usize).saturating_mul(n) >= grid {
                1.0
            } else {
                0.0
            }
        }
        SymbolSpec::TestSymbol { .. }
        | SymbolSpec::Custom { .. }
        | SymbolSpec::SingularInner { .. } => {
            // Σ_k |a_k| r^k with Σ|a_k|² ≤ 1, taken past the grid
            let q = r.powf(grid as f64);
            if r < 1.0 {
                q / (1.0 - r * r).sqrt()
            } else {
                f64::INFINITY
            }
        }
    }
}

/// Minimum of `f` over (lo, hi) by a log-spaced scan plus golden refinement.
fn minimize_over_radius<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64) -> f64 {
    let span = hi - lo;
    let mut best = (f64::INFINITY, 0.5);
    for j in 1..400 {
        let t = (j as f64 / 400.0 * 16.0 - 16.0).exp2().min(1.0 - 1e-12);
        for s in [t, 1.0 - t] {
            let v = f(lo + span * s);
            if v < best.0 {
                best = (v, s);
            }
        }
    }
    let g = |s: f64| -f(lo + span * s);
    let (s, v) = crate::symbols::golden_max(
        &g,
        (best.1 * 0.5).max(1e-14),
        (best.1 * 1.5).min(1.0 - 1e-14),
        1e-12,
    );
    let _ = s;
    best.0.min(-v)
}

/// Cauchy bound on Σ_{m>M} |a_{m,n}|² for T_a: min_R M(R)^{2n} R^{−2(M+1)}/(1 − R^{−2}).
pub fn mobius_tail_bound(a: f64, n: usize, m: usize) -> f64 {
    let a = a.abs();
    if a == 0.0 {
        return if n > m { 1.0 } else { 0.0 };
    }
    let f = |big_r: f64| {
        2.0 * n as f64 * ((big_r - a) / (1.0 - a * big_r)).ln()
            - 2.0 * (m + 1) as f64 * big_r.ln()
            - (1.0 - big_r.powi(-2)).ln()
    };
    minimize_over_radius(f, 1.0, 1.0 / a).exp().min(1.0)
}

/// 10× the m^{−3/4} envelope tail: 20 c² √(a n) / √M.
pub fn inner_envelope_tail(a_total: f64, m: usize) -> f64 {
    (20.0 * INNER_ENVELOPE_SQ * a_total.sqrt() / (m.max(1) as f64).sqrt()).min(1.0)
}

/// Bound on Σ_{m>M}|a_{m,n}|² for a column whose entries up to M are known.
fn column_tail_bound(phi: &SymbolSpec, n: usize, m: usize, entries: &[Complex64]) -> f64 {
    match phi {
        SymbolSpec::Mobius { a } => mobius_tail_bound(a.norm(), n, m),
        SymbolSpec::SingularInner { a } => inner_envelope_tail(a * n as f64, m),
        SymbolSpec::Rotation { .. } => {
            if n > m {
                1.0
            } else {
                0.0
            }
        }
        SymbolSpec::Monomial { k } => {
            if (*k as usize).saturating_mul(n) > m {
                1.0
            } else {
                0.0
            }
        }
        // ∥φⁿ∥_{H²} ≤ ∥φⁿ∥_∞ ≤ 1 for every self-map
        _ => (1.0 - entries.iter().map(|c| c.norm_sqr()).sum::<f64>()).max(0.0),
    }
}

/// Smallest power of two M (≥ 64 and ≥ the column's leading index) whose
/// certified tail falls below `DEFAULT_TAIL_TARGET`, capped.
pub fn default_truncation(phi: &SymbolSpec, n: usize) -> usize {
    let floor = 64usize.max((n + 1).next_power_of_two());
    match phi {
        SymbolSpec::Mobius { a } => {
            let mut m = floor;
            while m < MAX_DEFAULT_TRUNCATION
                && mobius_tail_bound(a.norm(), n, m) >= DEFAULT_TAIL_TARGET
            {
                m *= 2;
            }
            m
        }
        SymbolSpec::Monomial { k } => floor.max((*k as usize * n + 1).next_power_of_two()),
        SymbolSpec::TestSymbol { m: m0, n: n0 } if n.is_multiple_of(*n0 as usize) => {
            let q = n / *n0 as usize;
            floor.max((q * *m0 as usize + 1).next_power_of_two())
        }
        SymbolSpec::Custom { coeffs } => floor
            .max(((coeffs.len() - 1) * n + 1).next_power_of_two())
            .min(MAX_DEFAULT_TRUNCATION),
        SymbolSpec::SingularInner { .. } => INNER_DEFAULT_TRUNCATION,
        _ => floor,
    }
}

/// Explicit column: closed forms, the Möbius recurrence, or the Laguerre path.
pub fn column_explicit(phi: &SymbolSpec, n: usize, m: usize) -> Result<CoeffColumn> {
    match phi {
        SymbolSpec::Mobius { a } => {
            let mut col = unit_column(m);
            for _ in 0..n {
                col = mobius_step(*a, &col);
            }
            Ok(CoeffColumn {
                symbol: phi.label(),
                n,
                trunc_error: mobius_tail_bound(a.norm(), n, m),
                entries: col,
                method: Method::Explicit,
                radius: None,
            })
        }
        SymbolSpec::Rotation { theta } => {
            let mut e = vec![ZERO; m + 1];
            if n <= m {
                e[n] = Complex64::from_polar(1.0, *theta * n as f64);
            }
            Ok(explicit(phi, n, e, if n <= m { 0.0 } else { 1.0 }))
        }
        SymbolSpec::Monomial { k } => {
            let mut e = vec![ZERO; m + 1];
            let idx = (*k as usize).saturating_mul(n);
            if idx <= m {
                e[idx] = ONE;
            }
            Ok(explicit(phi, n, e, if idx <= m { 0.0 } else { 1.0 }))
        }
        SymbolSpec::TestSymbol { m: m0, n: n0 } => {
            let mut col = test_symbol_column(*m0, *n0, n, m);
            col.symbol = phi.label();
            Ok(col)
        }
        SymbolSpec::SingularInner { .. } => column_singular_inner(phi, n, m),
        SymbolSpec::Custom { .. } => {
            let mut col = column_series_power(phi, n, m)?;
            col.method = Method::Explicit;
            Ok(col)
        }
    }
}

fn explicit(phi: &SymbolSpec, n: usize, entries: Vec<Complex64>, trunc_error: f64) -> CoeffColumn {
    CoeffColumn {
        symbol: phi.label(),
        n,
        entries,
        method: Method::Explicit,
        trunc_error,
        radius: None,
    }
}

fn unit_column(m: usize) -> Vec<Complex64> {
    let mut c = vec![ZERO; m + 1];
    c[0] = ONE;
    c
}

/// Multiply a truncated series by T_a(z) = (a + z)/(1 + āz).
///
/// g = (a + z)·col, then h_m = g_m − ā h_{m−1}. Exact on indices ≤ M.
pub fn mobius_step(a: Complex64, col: &[Complex64]) -> Vec<Complex64> {
    let ab = a.conj();
    let mut out = Vec::with_capacity(col.len());
    let mut prev_h = ZERO;
    let mut prev_c = ZERO;
    for &c in col {
        let g = a * c + prev_c;
        let h = g - ab * prev_h;
        out.push(h);
        prev_h = h;
        prev_c = c;
    }
    out
}

/// φ^p for the test symbol: z^p · 2^{−α} Σ_j C(α, j) z^{dj} with α = p/n₀, d = m₀ − n₀.
fn test_symbol_column(m0: u32, n0: u32, p: usize, m: usize) -> CoeffColumn {
    let d = (m0 - n0) as usize;
    let mut e = vec![ZERO; m + 1];
    let label = SymbolSpec::TestSymbol { m: m0, n: n0 }.label();
    if p == 0 {
        e[0] = ONE;
        return CoeffColumn {
            symbol: label,
            n: p,
            entries: e,
            method: Method::Explicit,
            trunc_error: 0.0,
            radius: None,
        };
    }
    let n0 = n0 as usize;
    if p.is_multiple_of(n0) {
        // ((z^{n₀} + z^{m₀})/2)^q: exact binomial expansion
        let q = p / n0;
        let mut binom = 1.0f64;
        let mut tail = 0.0;
        for j in 0..=q {
            let idx = q * n0 + j * d;
            let v = binom * 0.5f64.powi(q as i32);
            if idx <= m {
                e[idx] = Complex64::new(v, 0.0);
            } else {
                tail += v * v;
            }
            binom = binom * (q - j) as f64 / (j + 1) as f64;
        }
        return CoeffColumn {
            symbol: label,
            n: p,
            entries: e,
            method: Method::Explicit,
            trunc_error: tail,
            radius: None,
        };
    }
    let alpha = p as f64 / n0 as f64;
    let pre = 0.5f64.powf(alpha);
    let mut binom = 1.0f64;
    let mut j = 0usize;
    while p + j * d <= m {
        e[p + j * d] = Complex64::new(pre * binom, 0.0);
        binom *= (alpha - j as f64) / (j + 1) as f64;
        j += 1;
    }
    let tail = (1.0 - e.iter().map(|c| c.norm_sqr()).sum::<f64>()).max(0.0);
    CoeffColumn {
        symbol: label,
        n: p,
        entries: e,
        method: Method::Explicit,
        trunc_error: tail,
        radius: None,
    }
}

/// c_m(s) = e^{−s} L_m^{(−1)}(2s) for m ≤ M, the coefficients of I_s.
///
/// (m+1)L_{m+1} = (2m − x)L_m − (m−1)L_{m−1}, run with a tracked exponent so
/// that large x cannot overflow before the e^{−s} prefactor is applied.
pub fn laguerre_inner_coeffs(s: f64, m: usize) -> Vec<f64> {
    let x = 2.0 * s;
    let mut out = Vec::with_capacity(m + 1);
    let mut log_scale = -s;
    let (mut l_prev, mut l_cur) = (1.0f64, -x);
    out.push((log_scale).exp());
    if m >= 1 {
        out.push(l_cur * log_scale.exp());
    }
    for k in 1..m {
        let kf = k as f64;
        let next = ((2.0 * kf - x) * l_cur - (kf - 1.0) * l_prev) / (kf + 1.0);
        l_prev = l_cur;
        l_cur = next;
        if l_cur.abs() > 1e100 {
            l_prev *= 1e-100;
            l_cur *= 1e-100;
            log_scale += 100.0 * std::f64::consts::LN_10;
        }
        out.push(l_cur * log_scale.exp());
    }
    out
}

/// Laguerre column of I_aⁿ = I_{na}, without the series cross-check.
pub fn column_singular_inner_unchecked(a: f64, n: usize, m: usize) -> CoeffColumn {
    let s = a * n as f64;
    CoeffColumn {
        symbol: SymbolSpec::SingularInner { a }.label(),
        n,
        entries: laguerre_inner_coeffs(s, m)
            .into_iter()
            .map(|v| Complex64::new(v, 0.0))
            .collect(),
        method: Method::Explicit,
        trunc_error: if n == 0 {
            0.0
        } else {
            inner_envelope_tail(s, m)
        },
        radius: None,
    }
}

/// Laguerre column cross-validated against the series route.
///
/// Entries whose disagreement exceeds `CANCELLATION_TOL` of the column
/// maximum are reported as an error rather than returned.
pub fn column_singular_inner(phi: &SymbolSpec, n: usize, m: usize) -> Result<CoeffColumn> {
    let SymbolSpec::SingularInner { a } = phi else {
        return Err(invalid("symbol", "expected a singular inner symbol"));
    };
    if n == 0 || m == 0 {
        return Err(invalid("n, M", "must be at least 1"));
    }
    let col = column_singular_inner_unchecked(*a, n, m);
    let oracle = column_series_power(phi, n, m)?;
    let scale = col.max_modulus();
    let mut count = 0;
    let mut worst: f64 = 0.0;
    for (x, y) in col.entries.iter().zip(&oracle.entries) {
        let d = (x - y).norm() / scale;
        worst = worst.max(d);
        if d > CANCELLATION_TOL {
            count += 1;
        }
    }
    if count > 0 {
        return Err(LabError::Cancellation { count, worst });
    }
    Ok(col)
}

/// Columns n = 0..=n_max of one symbol with a shared truncation M.
///
/// Möbius columns come from the recurrence (each from the previous one);
/// other symbols compute their columns independently in parallel.
pub fn power_columns(phi: &SymbolSpec, n_max: usize, m: usize) -> Result<Vec<CoeffColumn>> {
    match phi {
        SymbolSpec::Mobius { a } => {
            let mut cols = Vec::with_capacity(n_max + 1);
            let mut cur = unit_column(m);
            for n in 0..=n_max {
                if n > 0 {
                    cur = mobius_step(*a, &cur);
                }
                cols.push(CoeffColumn {
                    symbol: phi.label(),
                    n,
                    entries: cur.clone(),
                    method: Method::Explicit,
                    trunc_error: 0.0,
                    radius: None,
                });
            }
            let tails = par::map_range(n_max + 1, |n| mobius_tail_bound(a.norm(), n, m));
            for (c, t) in cols.iter_mut().zip(tails) {
                c.trunc_error = t;
            }
            Ok(cols)
        }
        SymbolSpec::SingularInner { a } => Ok(par::map_range(n_max + 1, |n| {
            column_singular_inner_unchecked(*a, n, m)
        })),
        SymbolSpec::Custom { .. } => {
            let (base, _) = symbol_coeffs(phi, m)?;
            let mut cols = Vec::with_capacity(n_max + 1);
            let mut cur = unit_column(m);
            for n in 0..=n_max {
                if n > 0 {
                    cur = mul_truncated(&cur, &base, m + 1);
                }
                cols.push(CoeffColumn {
                    symbol: phi.label(),
                    n,
                    trunc_error: column_tail_bound(phi, n, m, &cur),
                    entries: cur.clone(),
                    method: Method::Explicit,
                    radius: None,
                });
            }
            Ok(cols)
        }
        _ => par::map_range(n_max + 1, |n| column_explicit(phi, n, m))
            .into_iter()
            .collect(),
    }
}

/// Per-entry verdicts of an analytic coefficient bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub n: usize,
    pub rho: f64,
    pub verdicts: Vec<bool>,
    pub violations: Vec<usize>,
    /// Largest |a_m| − bound_m (negative when every entry passes with room).
    pub worst_excess: f64,
    pub pass: bool,
}

/// Slack allowed on analytic coefficient bounds.
pub const BOUND_SLACK: f64 = 1e-12;

fn bound_report<F: Fn(usize) -> f64>(
    column: &CoeffColumn,
    rho: f64,
    bound: F,
    zero_below: Option<usize>,
) -> BoundReport {
    let mut verdicts = Vec::with_capacity(column.entries.len());
    let mut violations = Vec::new();
    let mut worst = f64::NEG_INFINITY;
    for (m, c) in column.entries.iter().enumerate() {
        let excess = c.norm() - bound(m);
        let mut ok = excess <= BOUND_SLACK;
        if zero_below.is_some_and(|n| m < n) && *c != ZERO {
            ok = false;
        }
        worst = worst.max(excess);
        if !ok {
            violations.push(m);
        }
        verdicts.push(ok);
    }
    BoundReport {
        n: column.n,
        rho,
        pass: violations.is_empty(),
        verdicts,
        violations,
        worst_excess: worst,
    }
}

/// |a_{m,n}| ≤ e^{−α(ρn − m)} with ρ = ln M(r)/ln r at r = e^{−α}.
pub fn cauchy_bound_check(a: f64, alpha: f64, column: &CoeffColumn) -> Result<BoundReport> {
    if !(alpha > 0.0) {
        return Err(invalid("alpha", "must be positive"));
    }
    let rho = crate::symbols::rho_exponent(a, (-alpha).exp())?;
    let n = column.n as f64;
    Ok(bound_report(
        column,
        rho,
        |m| (-alpha * (rho * n - m as f64)).exp(),
        None,
    ))
}

/// ρ for φ₁ = φ/z at r = e^{−1/2}, from the sup of |φ| on that circle.
pub fn lower_triangular_rho(phi: &SymbolSpec) -> Result<f64> {
    if !phi.fixes_origin() {
        return Err(LabError::HypothesisViolated(
            "symbol must fix the origin".into(),
        ));
    }
    if (phi.derivative_at_origin().norm() - 1.0).abs() < 1e-14 {
        return Err(LabError::BoundInapplicable(
            "|φ′(0)| = 1: the symbol is a rotation".into(),
        ));
    }
    let r = (-0.5f64).exp();
    let m1 = sup_modulus(phi, r, 4096)? / r;
    Ok(m1.ln() / r.ln())
}

/// |φ̂ⁿ(m)| ≤ exp(−½[(1+ρ)n − m]) and exact zeros for m < n.
pub fn lower_triangular_bound_check(phi: &SymbolSpec, column: &CoeffColumn) -> Result<BoundReport> {
    let rho = lower_triangular_rho(phi)?;
    let n = column.n as f64;
    Ok(bound_report(
        column,
        rho,
        |m| (-0.5 * ((1.0 + rho) * n - m as f64)).exp(),
        Some(column.n),
    ))
}

/// Write a column as: u32 symbol length, symbol bytes, u64 n, u64 M, u8 method,
/// f64 trunc_error, f64 radius (NaN when absent), then (M+1) × (re, im) f64,
/// all little-endian.
pub fn write_cache(path: &Path, column: &CoeffColumn) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    let sym = column.symbol.as_bytes();
    let sym_len =
        u32::try_from(sym.len()).map_err(|_| LabError::Format("symbol too long".into()))?;
    w.write_all(&sym_len.to_le_bytes())?;
    w.write_all(sym)?;
    w.write_all(&(column.n as u64).to_le_bytes())?;
    w.write_all(&(column.truncation() as u64).to_le_bytes())?;
    w.write_all(&[column.method.tag()])?;
    w.write_all(&column.trunc_error.to_le_bytes())?;
    w.write_all(&column.radius.unwrap_or(f64::NAN).to_le_bytes())?;
    for c in &column.entries {
        w.write_all(&c.re.to_le_bytes())?;
        w.write_all(&c.im.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

/// Read a column written by [`write_cache`].
pub fn read_cache(path: &Path) -> Result<CoeffColumn> {
    let mut r = BufReader::new(File::open(path)?);
    let mut b4 = [0u8; 4];
    let mut b8 = [0u8; 8];
    r.read_exact(&mut b4)?;
    let len = u32::from_le_bytes(b4) as usize;
    if len > 1 << 16 {
        return Err(LabError::Format("symbol length implausible".into()));
    }
    let mut sym = vec![0u8; len];
    r.read_exact(&mut sym)?;
    let symbol = String::from_utf8(sym).map_err(|e| LabError::Format(e.to_string()))?;
    let mut read_u64 = |r: &mut BufReader<File>| -> Result<u64> {
        r.read_exact(&mut b8)?;
        Ok(u64::from_le_bytes(b8))
    };
    let n = read_u64(&mut r)? as usize;
    let m = read_u64(&mut r)? as usize;
    let mut read_f64 =
        |r: &mut BufReader<File>| -> Result<f64> { Ok(f64::from_bits(read_u64(r)?)) };
    let mut tag = [0u8; 1];
    r.read_exact(&mut tag)?;
    let method = Method::from_tag(tag[0])?;
    let trunc_error = read_f64(&mut r)?;
    let radius = read_f64(&mut r)?;
    if m > 1 << 28 {
        return Err(LabError::Format("truncation implausible".into()));
    }
    let mut entries = Vec::with_capacity(m + 1);
    for _ in 0..=m {
        let re = read_f64(&mut r)?;
        let im = read_f64(&mut r)?;
        entries.push(Complex64::new(re, im));
    }
    if r.read(&mut tag)? != 0 {
        return Err(LabError::Format("trailing bytes".into()));
    }
    Ok(CoeffColumn {
        symbol,
        n,
        entries,
        method,
        trunc_error,
        radius: (!radius.is_nan()).then_some(radius),
    })
}
