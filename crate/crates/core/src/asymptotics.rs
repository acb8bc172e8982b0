//! Stationary phase with an explicit error budget, the oscillatory quadrature
//! that serves as its oracle, Fresnel and van der Corput bounds, the E-set
//! scan for Möbius coefficients, and the Laguerre main term.

use std::f64::consts::{FRAC_PI_4, PI};
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::coeff::{column_explicit, column_singular_inner_unchecked, default_truncation};
use crate::error::{invalid, LabError, Result};
use crate::par;
use crate::quad::{self, QuadResult, Tolerance};
use crate::symbols::{
    critical_point, golden_max, phase_d2, phase_d3, phase_eval, poisson_eval, MobiusGeometry,
    SymbolSpec,
};

type RealFn = Box<dyn Fn(f64) -> f64 + Send + Sync>;

/// A real phase F on [A, B] with derivatives and its stationary-point data.
pub struct PhaseBundle {
    pub f: RealFn,
    pub f1: RealFn,
    pub f2: RealFn,
    pub f3: RealFn,
    pub lo: f64,
    pub hi: f64,
    /// Critical point, F′(c) = 0.
    pub c: f64,
    /// min F″ on [c − η, c + η].
    pub lambda2: f64,
    /// max |F‴| on [A, B].
    pub lambda3: f64,
    pub eta: f64,
}

impl fmt::Debug for PhaseBundle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PhaseBundle")
            .field("interval", &(self.lo, self.hi))
            .field("c", &self.c)
            .field("lambda2", &self.lambda2)
            .field("lambda3", &self.lambda3)
            .field("eta", &self.eta)
            .finish()
    }
}

fn max_on<F: Fn(f64) -> f64>(g: &F, lo: f64, hi: f64, grid: usize) -> f64 {
    let step = (hi - lo) / grid as f64;
    let (mut bx, mut bv) = (lo, g(lo));
    for j in 1..=grid {
        let x = lo + step * j as f64;
        let v = g(x);
        if v > bv {
            bx = x;
            bv = v;
        }
    }
    let (_, v) = golden_max(
        g,
        (bx - step).max(lo),
        (bx + step).min(hi),
        1e-13 * (hi - lo).max(1.0),
    );
    bv.max(v)
}

impl PhaseBundle {
    /// Locate c by bisection on F′ and derive η, λ₂, λ₃.
    ///
    /// η = (λ₂λ₃)^{−1/5}, clamped so that [c − η, c + η] ⊆ [A, B]; λ₂ is
    /// recomputed on the final window so it is a true lower bound there.
    pub fn new(f: RealFn, f1: RealFn, f2: RealFn, f3: RealFn, lo: f64, hi: f64) -> Result<Self> {
        if !(hi > lo) {
            return Err(invalid("interval", "need A < B"));
        }
        let (d_lo, d_hi) = (f1(lo), f1(hi));
        if !(d_lo < 0.0 && d_hi > 0.0) {
            return Err(LabError::HypothesisViolated(format!(
                "F′ must change sign from − to + on the interval (F′(A) = {d_lo}, F′(B) = {d_hi})"
            )));
        }
        let (mut a, mut b) = (lo, hi);
        for _ in 0..200 {
            let mid = 0.5 * (a + b);
            if f1(mid) < 0.0 {
                a = mid;
            } else {
                b = mid;
            }
            if b - a <= 4.0 * f64::EPSILON * mid.abs().max(1.0) {
                break;
            }
        }
        let c = 0.5 * (a + b);
        let room = (c - lo).min(hi - c);
        let lambda3 = max_on(&|x| f3(x).abs(), lo, hi, 2048);
        let min_f2 = |eta: f64| -max_on(&|x| -f2(x), c - eta, c + eta, 256);
        let eta_of = |l2: f64| {
            if lambda3 > 0.0 && l2 > 0.0 {
                (l2 * lambda3).powf(-0.2).min(room)
            } else {
                room
            }
        };
        let eta0 = eta_of(f2(c));
        let lambda2 = min_f2(eta0);
        let eta = eta_of(lambda2);
        let lambda2 = min_f2(eta);
        Ok(Self {
            f,
            f1,
            f2,
            f3,
            lo,
            hi,
            c,
            lambda2,
            lambda3,
            eta,
        })
    }

    /// F(x) = n h_a(x) − m x on [0, π].
    pub fn mobius(a: f64, m: usize, n: usize) -> Result<Self> {
        critical_point(a, m, n)?;
        let (nf, mf) = (n as f64, m as f64);
        Self::new(
            Box::new(move |x| nf * phase_eval(a, x) - mf * x),
            Box::new(move |x| nf * poisson_eval(a, x) - mf),
            Box::new(move |x| nf * phase_d2(a, x)),
            Box::new(move |x| nf * phase_d3(a, x)),
            0.0,
            PI,
        )
    }

    /// 1/(ηλ₂) + η⁴λ₃.
    pub fn budget_shape(&self) -> f64 {
        1.0 / (self.eta * self.lambda2) + self.eta.powi(4) * self.lambda3
    }
}

/// Main term √(2π/F″(c)) e^{i(F(c)+π/4)} and error budget K₀(1/(ηλ₂) + η⁴λ₃).
pub fn stationary_phase_with(bundle: &PhaseBundle, k0: f64) -> Result<(Complex64, f64)> {
    if !(bundle.lambda2 > 0.0) {
        return Err(LabError::HypothesisViolated("λ₂ must be positive".into()));
    }
    if bundle.c - bundle.eta < bundle.lo - 1e-15 || bundle.c + bundle.eta > bundle.hi + 1e-15 {
        return Err(LabError::HypothesisViolated(
            "[c − η, c + η] leaves [A, B]".into(),
        ));
    }
    let f2c = (bundle.f2)(bundle.c);
    let approx = Complex64::from_polar((2.0 * PI / f2c).sqrt(), (bundle.f)(bundle.c) + FRAC_PI_4);
    Ok((approx, k0 * bundle.budget_shape()))
}

/// As [`stationary_phase_with`], with K₀ from the loaded constants.
pub fn stationary_phase(bundle: &PhaseBundle) -> Result<(Complex64, f64)> {
    stationary_phase_with(bundle, crate::constants::Constants::load()?.k0)
}

/// Upper limit on panels produced by phase splitting.
pub const MAX_PANELS: usize = 1 << 22;

/// Split [A, B] until F varies by at most π/4 across each panel.
pub fn phase_panels<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64) -> Result<Vec<f64>> {
    let mut out = vec![lo];
    let mut stack = vec![(lo, hi)];
    // depth-first, right half pushed first so panels come out in order
    while let Some((a, b)) = stack.pop() {
        let vals: Vec<f64> = (0..=4).map(|j| f(a + (b - a) * j as f64 / 4.0)).collect();
        let spread = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max)
            - vals.iter().copied().fold(f64::INFINITY, f64::min);
        if spread <= FRAC_PI_4 || b - a <= 1e-14 * (hi - lo) {
            out.push(b);
            if out.len() > MAX_PANELS {
                return Err(LabError::QuadratureFailed {
                    estimate: f64::INFINITY,
                    tol: 0.0,
                });
            }
        } else {
            let mid = 0.5 * (a + b);
            stack.push((mid, b));
            stack.push((a, mid));
        }
    }
    Ok(out)
}

/// ∫_A^B g(x) e^{iF(x)} dx on π/4 phase panels with Gauss–Kronrod per panel.
pub fn oscillatory_quadrature_weighted<F, G>(
    f: F,
    g: G,
    lo: f64,
    hi: f64,
    tol: f64,
) -> Result<QuadResult<Complex64>>
where
    F: Fn(f64) -> f64,
    G: Fn(f64) -> f64,
{
    if !(tol > 0.0) {
        return Err(invalid("tol", "must be positive"));
    }
    let panels = phase_panels(&f, lo, hi)?;
    let budget = 4 * panels.len() + 10_000;
    quad::integrate_complex_from(
        |x| Complex64::from_polar(g(x), f(x)),
        &panels,
        Tolerance::absolute(tol),
        budget,
    )
}

/// ∫_A^B e^{iF(x)} dx.
pub fn oscillatory_quadrature<F: Fn(f64) -> f64>(
    f: F,
    lo: f64,
    hi: f64,
    tol: f64,
) -> Result<QuadResult<Complex64>> {
    oscillatory_quadrature_weighted(f, |_| 1.0, lo, hi, tol)
}

/// I_{m,n} = ∫₀^π exp i[n h_a(x) − m x] dx, so that 2π a_{m,n} = 2 Re I_{m,n}.
pub fn mobius_fourier_integral(a: f64, m: usize, n: usize, tol: f64) -> Result<Complex64> {
    let (nf, mf) = (n as f64, m as f64);
    Ok(oscillatory_quadrature(|x| nf * phase_eval(a, x) - mf * x, 0.0, PI, tol)?.value)
}

/// √π e^{iπ/4} = ∫₀^∞ e^{it} t^{−1/2} dt.
pub fn fresnel_constant() -> Complex64 {
    Complex64::from_polar(PI.sqrt(), FRAC_PI_4)
}

/// ∫₀^T e^{it} t^{−1/2} dt split from its tail.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FresnelBracket {
    pub t: f64,
    /// Quadrature of ∫₀^T, computed as 2∫₀^{√T} e^{is²} ds.
    pub partial_re: f64,
    pub partial_im: f64,
    pub quad_error: f64,
    /// |∫_T^∞ e^{it} t^{−1/2} dt| ≤ 2/√T.
    pub tail_bound: f64,
    /// Partial plus the asymptotic tail series.
    pub value_re: f64,
    pub value_im: f64,
    /// Remainder bound of the truncated tail series plus quadrature error.
    pub value_error: f64,
}

impl FresnelBracket {
    pub fn partial(&self) -> Complex64 {
        Complex64::new(self.partial_re, self.partial_im)
    }

    pub fn value(&self) -> Complex64 {
        Complex64::new(self.value_re, self.value_im)
    }

    /// Whether the disk of radius `tail_bound + quad_error` about the partial
    /// integral contains `z`.
    pub fn brackets(&self, z: Complex64) -> bool {
        (self.partial() - z).norm() <= self.tail_bound + self.quad_error
    }
}

/// Terms kept in the Fresnel tail series.
pub const FRESNEL_TERMS: usize = 8;

/// tail(s) = i e^{iT} Σ_k (−i)^k (s)_k T^{−s−k}, remainder ≤ 2 (s)_K T^{−s−K}.
pub fn fresnel_tail_series(t: f64, s: f64, terms: usize) -> (Complex64, f64) {
    let lead = Complex64::i() * Complex64::from_polar(1.0, t);
    let mut sum = Complex64::new(0.0, 0.0);
    let mut poch = 1.0;
    let mut rot = Complex64::new(1.0, 0.0);
    for k in 0..terms {
        sum += rot * (poch * t.powf(-s - k as f64));
        poch *= s + k as f64;
        rot *= -Complex64::i();
    }
    (lead * sum, 2.0 * poch * t.powf(-s - terms as f64))
}

pub fn fresnel_bracket(t: f64, tol: f64) -> Result<FresnelBracket> {
    if !(t > 0.0) {
        return Err(invalid("T", "must be positive"));
    }
    let q = oscillatory_quadrature_weighted(|s| s * s, |_| 2.0, 0.0, t.sqrt(), tol)?;
    let (tail, rem) = fresnel_tail_series(t, 0.5, FRESNEL_TERMS);
    let value = q.value + tail;
    Ok(FresnelBracket {
        t,
        partial_re: q.value.re,
        partial_im: q.value.im,
        quad_error: q.error,
        tail_bound: 2.0 / t.sqrt(),
        value_re: value.re,
        value_im: value.im,
        value_error: rem + q.error,
    })
}

/// 2/|F′| at an endpoint of a monotone-phase interval.
pub fn vdc_endpoint_bound(f1_at_endpoint: f64) -> Result<f64> {
    if f1_at_endpoint == 0.0 || !f1_at_endpoint.is_finite() {
        return Err(LabError::VanishingDerivative);
    }
    Ok(2.0 / f1_at_endpoint.abs())
}

/// 2/min|F′| over [u, v] for monotone F′ without sign change, checked on a grid.
pub fn vdc_interval_bound<F: Fn(f64) -> f64>(f1: &F, u: f64, v: f64) -> Result<f64> {
    let first = f1(u);
    let mut prev = first;
    let mut direction = 0.0f64;
    for j in 1..=256 {
        let x = u + (v - u) * j as f64 / 256.0;
        let d = f1(x);
        if d == 0.0 || d.signum() != first.signum() {
            return Err(LabError::VanishingDerivative);
        }
        let step = (d - prev).signum();
        if step != 0.0 {
            if direction != 0.0 && step != direction {
                return Err(LabError::HypothesisViolated("F′ is not monotone".into()));
            }
            direction = step;
        }
        prev = d;
    }
    vdc_endpoint_bound(first.abs().min(f1(v).abs()) * first.signum())
}

/// Scan of J_n for large Möbius coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ESetReport {
    pub a: f64,
    pub n: usize,
    pub mu: f64,
    #[serde(rename = "J")]
    pub j: (usize, usize),
    /// Threshold δ in |a_{m,n}| ≥ δ n^{−1/2}; the calibrated δ* unless overridden.
    #[serde(rename = "delta_star")]
    pub delta_threshold: f64,
    pub e: Vec<usize>,
    /// |E| / n.
    pub density: f64,
    /// Smallest |a_{m,n}| √n over E (∞ when E is empty).
    pub min_scaled_on_e: f64,
    pub increments_summary: IncrementSummary,
}

/// n·(F(x_{m+1}) − F(x_m)) over m ∈ J_n, F the phase at index m.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IncrementSummary {
    pub count: usize,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
}

/// F_m(x_{m+1}) − F_m(x_m) for F_m(x) = n h_a(x) − m x, m over J_n.
pub fn phase_increments(a: f64, n: usize) -> Result<Vec<f64>> {
    let g = MobiusGeometry::new(a)?;
    let (lo, hi) = g.j_interval(n);
    let xs = par::map_range(hi - lo + 2, |i| critical_point(a, lo + i, n));
    let xs: Vec<f64> = xs.into_iter().collect::<Result<_>>()?;
    let nf = n as f64;
    Ok((0..=hi - lo)
        .map(|i| {
            let m = (lo + i) as f64;
            let (x0, x1) = (xs[i], xs[i + 1]);
            nf * (phase_eval(a, x1) - phase_eval(a, x0)) - m * (x1 - x0)
        })
        .collect())
}

/// Geometry, J_n, |a_{m,n}| √n over J_n, and the column's truncation error.
type ScaledOnJ = (MobiusGeometry, (usize, usize), Vec<f64>, f64);

fn scaled_on_j(a: f64, n: usize) -> Result<ScaledOnJ> {
    let g = MobiusGeometry::new(a)?;
    let j = g.j_interval(n);
    let phi = SymbolSpec::mobius(a);
    let col = column_explicit(&phi, n, default_truncation(&phi, n))?;
    let root = (n as f64).sqrt();
    let v = (j.0..=j.1).map(|m| col.entries[m].norm() * root).collect();
    Ok((g, j, v, col.trunc_error))
}

/// E = {m ∈ J_n : |a_{m,n}| ≥ δ n^{−1/2}} with phase-increment diagnostics.
pub fn eset_scan(a: f64, n: usize, delta_threshold: f64) -> Result<ESetReport> {
    if !(delta_threshold >= 0.0) {
        return Err(invalid("delta_threshold", "must be non-negative"));
    }
    let (g, j, v, trunc) = scaled_on_j(a, n)?;
    let threshold = delta_threshold / (n as f64).sqrt();
    if delta_threshold > 0.0 && trunc.sqrt() > 1e-3 * threshold {
        return Err(LabError::InsufficientAccuracy {
            trunc_error: trunc,
            threshold,
        });
    }
    let e: Vec<usize> = v
        .iter()
        .enumerate()
        .filter(|(_, &x)| x >= delta_threshold)
        .map(|(i, _)| j.0 + i)
        .collect();
    let min_scaled_on_e = e.iter().map(|&m| v[m - j.0]).fold(f64::INFINITY, f64::min);
    let inc = phase_increments(a, n)?;
    let nf = n as f64;
    let scaled: Vec<f64> = inc.iter().map(|d| d * nf).collect();
    Ok(ESetReport {
        a,
        n,
        mu: g.mu,
        j,
        delta_threshold,
        density: e.len() as f64 / nf,
        e,
        min_scaled_on_e,
        increments_summary: IncrementSummary {
            count: scaled.len(),
            min: scaled.iter().copied().fold(f64::INFINITY, f64::min),
            max: scaled.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            mean: scaled.iter().sum::<f64>() / scaled.len() as f64,
        },
    })
}

/// Largest δ with density(δ) ≥ δ: max_k min(v_(k), k/n) over the sorted
/// scaled coefficients v = |a_{m,n}| √n on J_n.
pub fn calibrate_delta_star(a: f64, n: usize) -> Result<f64> {
    let (_, _, mut v, _) = scaled_on_j(a, n)?;
    v.sort_by(|x, y| y.total_cmp(x));
    let nf = n as f64;
    Ok(v.iter()
        .enumerate()
        .map(|(i, &x)| x.min((i + 1) as f64 / nf))
        .fold(0.0, f64::max))
}

/// π^{−1/2} 2^{1/4}.
pub fn laguerre_constant() -> f64 {
    2f64.powf(0.25) / PI.sqrt()
}

/// M_m(n) = c n^{1/4} m^{−3/4} cos(2√(2nm) + π/4).
pub fn laguerre_main_term(n: usize, m: usize) -> f64 {
    let (nf, mf) = (n as f64, m as f64);
    laguerre_constant()
        * nf.powf(0.25)
        * mf.powf(-0.75)
        * (2.0 * (2.0 * nf * mf).sqrt() + FRAC_PI_4).cos()
}

/// |c_m(n) − M_m(n)| / (√n m^{−5/4}) for each m in [⌈n/4⌉, 4n].
pub fn laguerre_residual_ratios(n: usize) -> Vec<(usize, f64)> {
    let lo = n.div_ceil(4).max(1);
    let hi = 4 * n;
    let col = column_singular_inner_unchecked(1.0, n, hi);
    let nf = n as f64;
    (lo..=hi)
        .map(|m| {
            let d = (col.entries[m].re - laguerre_main_term(n, m)).abs();
            (m, d / (nf.sqrt() * (m as f64).powf(-1.25)))
        })
        .collect()
}

/// Margin applied to fitted constants before freezing them.
pub const CALIBRATION_MARGIN: f64 = 2.0;

/// Power used to fit the Laguerre constant.
pub const LAGUERRE_CALIBRATION_N: usize = 50;

/// K = margin × max residual ratio at the calibration power.
pub fn calibrate_k_laguerre() -> f64 {
    CALIBRATION_MARGIN
        * laguerre_residual_ratios(LAGUERRE_CALIBRATION_N)
            .iter()
            .map(|p| p.1)
            .fold(0.0, f64::max)
}

/// Parameters of the stationary-phase calibration grid.
pub const SP_AS: [f64; 3] = [0.3, 0.5, 0.7];
pub const SP_CALIBRATION_N: usize = 256;
/// Relative positions inside J_n sampled during calibration.
pub const SP_POSITIONS: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];
/// Tolerance of the quadrature oracle.
pub const SP_QUAD_TOL: f64 = 1e-11;

/// |∫₀^π e^{iF} − main term| for the Möbius phase, with the bundle.
pub fn stationary_phase_residual(a: f64, m: usize, n: usize) -> Result<(f64, PhaseBundle)> {
    let b = PhaseBundle::mobius(a, m, n)?;
    let (approx, _) = stationary_phase_with(&b, 1.0)?;
    let q = oscillatory_quadrature(&b.f, b.lo, b.hi, SP_QUAD_TOL)?;
    Ok(((q.value - approx).norm(), b))
}

/// Index at relative position `t` inside J_n.
pub fn j_position(a: f64, n: usize, t: f64) -> Result<usize> {
    let (lo, hi) = MobiusGeometry::new(a)?.j_interval(n);
    Ok(lo + ((hi - lo) as f64 * t).round() as usize)
}

/// K₀ = margin × max residual / (1/(ηλ₂) + η⁴λ₃) over the n = 256 grid.
pub fn calibrate_k0() -> Result<f64> {
    let mut worst: f64 = 0.0;
    for &a in &SP_AS {
        for &t in &SP_POSITIONS {
            let m = j_position(a, SP_CALIBRATION_N, t)?;
            let (res, b) = stationary_phase_residual(a, m, SP_CALIBRATION_N)?;
            worst = worst.max(res / b.budget_shape());
        }
    }
    Ok(CALIBRATION_MARGIN * worst)
}

/// c_m(n) through the oscillatory integral
/// (1/π)∫_{−π/2}^{π/2} exp[i(n cot x + 2mx)] dx.
///
/// Substituting u = cot x turns it into
/// (1/π)∫_ℝ exp[i(nu + 2m·atan(1/u))] du/(1+u²); the range |u| > U is
/// replaced by its first integration-by-parts term. Returns (value, error bound).
pub fn singular_inner_oscillatory(n: usize, m: usize, tol: f64) -> Result<(Complex64, f64)> {
    if n == 0 {
        return Err(invalid("n", "must be at least 1"));
    }
    let (nf, mf) = (n as f64, m as f64);
    // the cut-off remainder is ≈ 4/(n U²); choose U to meet tol with it
    let big_u = (4.0 / (nf * tol)).sqrt().clamp(100.0, 1e5);
    let phase = |u: f64| nf * u + 2.0 * mf * (1.0 / u).atan();
    let amp = |u: f64| 1.0 / (1.0 + u * u);
    let right = oscillatory_quadrature_weighted(phase, amp, 0.0, big_u, tol)?;
    let left = oscillatory_quadrature_weighted(phase, amp, -big_u, 0.0, tol)?;
    let g = |u: f64| Complex64::from_polar(amp(u), 2.0 * mf * (1.0 / u).atan());
    let i = Complex64::i();
    let tail_r = -Complex64::from_polar(1.0, nf * big_u) * g(big_u) / (i * nf);
    let tail_l = Complex64::from_polar(1.0, -nf * big_u) * g(-big_u) / (i * nf);
    let rem = 2.0 * (1.0 / big_u.powi(2) + mf / big_u.powi(3)) / nf;
    let value = (right.value + left.value + tail_r + tail_l) / PI;
    Ok((value, (right.error + left.error + rem) / PI))
}
