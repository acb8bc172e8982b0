//! Analytic self-maps of the unit disk and the Poisson/phase machinery of
//! real Möbius automorphisms.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{invalid, LabError, Result};
use crate::quad::{self, Tolerance};
use crate::weights::{split_spec, take_param};

/// A symbol φ from the catalog.
#[derive(Debug, Clone, PartialEq)]
pub enum SymbolSpec {
    /// T_a(z) = (a + z)/(1 + āz), |a| < 1.
    Mobius { a: Complex64 },
    /// z ↦ e^{iθ} z.
    Rotation { theta: f64 },
    /// I_a(z) = exp(−a(1+z)/(1−z)), a > 0.
    SingularInner { a: f64 },
    /// z ↦ z^k, k ≥ 1.
    Monomial { k: u32 },
    /// φ(z) = z((1 + z^{m−n})/2)^{1/n}, so that φⁿ = (zⁿ + z^m)/2.
    TestSymbol { m: u32, n: u32 },
    /// Polynomial Σ c_k z^k with Σ|c_k| ≤ 1.
    Custom { coeffs: Vec<Complex64> },
}

impl SymbolSpec {
    pub fn mobius(a: f64) -> Self {
        SymbolSpec::Mobius {
            a: Complex64::new(a, 0.0),
        }
    }

    /// Custom polynomial symbol; rejects Σ|c_k| > 1.
    pub fn custom(coeffs: Vec<Complex64>) -> Result<Self> {
        let l1: f64 = coeffs.iter().map(|c| c.norm()).sum();
        if coeffs.is_empty() || !l1.is_finite() || l1 > 1.0 {
            return Err(invalid(
                "coeffs",
                format!("Σ|c_k| = {l1} must lie in [0, 1]"),
            ));
        }
        Ok(SymbolSpec::Custom { coeffs })
    }

    fn validate(self) -> Result<Self> {
        match &self {
            SymbolSpec::Mobius { a } if !(a.norm() < 1.0) => {
                Err(invalid("a", "must lie in the open unit disk"))
            }
            SymbolSpec::Rotation { theta } if !theta.is_finite() => {
                Err(invalid("theta", "must be finite"))
            }
            SymbolSpec::SingularInner { a } if !(*a > 0.0 && a.is_finite()) => {
                Err(invalid("a", "must be positive"))
            }
            SymbolSpec::Monomial { k } if *k == 0 => Err(invalid("k", "must be at least 1")),
            SymbolSpec::TestSymbol { m, n } if !(*m > *n && *n >= 1) => {
                Err(invalid("m", "need m > n ≥ 1"))
            }
            SymbolSpec::Custom { coeffs } => SymbolSpec::custom(coeffs.clone()),
            _ => Ok(self),
        }
    }

    /// Canonical identifier, parseable back by `FromStr`.
    pub fn label(&self) -> String {
        match self {
            SymbolSpec::Mobius { a } if a.im == 0.0 => format!("mobius:a={}", a.re),
            SymbolSpec::Mobius { a } => format!("mobius:a={},im={}", a.re, a.im),
            SymbolSpec::Rotation { theta } => format!("rotation:theta={theta}"),
            SymbolSpec::SingularInner { a } => format!("inner:a={a}"),
            SymbolSpec::Monomial { k } => format!("monomial:k={k}"),
            SymbolSpec::TestSymbol { m, n } => format!("test:m={m},n={n}"),
            SymbolSpec::Custom { coeffs } => {
                let body: Vec<String> = coeffs
                    .iter()
                    .enumerate()
                    .filter(|(_, c)| **c != Complex64::new(0.0, 0.0))
                    .map(|(k, c)| {
                        if c.im == 0.0 {
                            format!("c{k}={}", c.re)
                        } else {
                            format!("c{k}={},i{k}={}", c.re, c.im)
                        }
                    })
                    .collect();
                format!("custom:{}", body.join(","))
            }
        }
    }

    /// True for symbols with unimodular boundary values.
    pub fn is_inner(&self) -> bool {
        matches!(
            self,
            SymbolSpec::Mobius { .. }
                | SymbolSpec::Rotation { .. }
                | SymbolSpec::SingularInner { .. }
                | SymbolSpec::Monomial { .. }
        )
    }

    /// True when φ(0) = 0.
    pub fn fixes_origin(&self) -> bool {
        match self {
            SymbolSpec::Mobius { a } => a.norm() == 0.0,
            SymbolSpec::SingularInner { .. } => false,
            SymbolSpec::Custom { coeffs } => coeffs[0].norm() == 0.0,
            _ => true,
        }
    }

    /// φ′(0).
    pub fn derivative_at_origin(&self) -> Complex64 {
        match self {
            SymbolSpec::Mobius { a } => Complex64::new(1.0, 0.0) - a * a.conj(),
            SymbolSpec::Rotation { theta } => Complex64::from_polar(1.0, *theta),
            SymbolSpec::SingularInner { a } => Complex64::new(-2.0 * a * (-a).exp(), 0.0),
            SymbolSpec::Monomial { k } => Complex64::new(if *k == 1 { 1.0 } else { 0.0 }, 0.0),
            SymbolSpec::TestSymbol { m, n } => {
                // φ₁(0) = ((1 + 0^{m−n})/2)^{1/n}
                let _ = m;
                Complex64::new(0.5f64.powf(1.0 / f64::from(*n)), 0.0)
            }
            SymbolSpec::Custom { coeffs } => coeffs.get(1).copied().unwrap_or_default(),
        }
    }
}

impl fmt::Display for SymbolSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl FromStr for SymbolSpec {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        let (name, p) = split_spec(s)?;
        let as_index = |key: &str| -> Result<u32> {
            let v = take_param(&p, key, None)?;
            if v.fract() != 0.0 || !(0.0..=f64::from(u32::MAX)).contains(&v) {
                return Err(invalid(key, "must be a non-negative integer"));
            }
            Ok(v as u32)
        };
        let spec = match name.as_str() {
            "mobius" => SymbolSpec::Mobius {
                a: Complex64::new(take_param(&p, "a", None)?, take_param(&p, "im", Some(0.0))?),
            },
            "rotation" => SymbolSpec::Rotation {
                theta: take_param(&p, "theta", None)?,
            },
            "inner" | "singular_inner" => SymbolSpec::SingularInner {
                a: take_param(&p, "a", None)?,
            },
            "monomial" => SymbolSpec::Monomial { k: as_index("k")? },
            "identity" => SymbolSpec::Monomial { k: 1 },
            "test" => SymbolSpec::TestSymbol {
                m: as_index("m")?,
                n: as_index("n")?,
            },
            "custom" => {
                let mut coeffs: Vec<Complex64> = Vec::new();
                for (k, v) in &p {
                    let (re, idx) = if let Some(i) = k.strip_prefix('c') {
                        (true, i)
                    } else if let Some(i) = k.strip_prefix('i') {
                        (false, i)
                    } else {
                        return Err(invalid(k, "expected cK= or iK="));
                    };
                    let idx: usize = idx.parse().map_err(|_| invalid(k, "bad index"))?;
                    if idx > 1 << 20 {
                        return Err(invalid(k, "index too large"));
                    }
                    if coeffs.len() <= idx {
                        coeffs.resize(idx + 1, Complex64::default());
                    }
                    if re {
                        coeffs[idx].re = *v;
                    } else {
                        coeffs[idx].im = *v;
                    }
                }
                SymbolSpec::Custom { coeffs }
            }
            _ => return Err(LabError::UnknownSymbol(s.to_string())),
        };
        spec.validate()
    }
}

/// φ(z) for |z| ≤ 1.
pub fn symbol_eval(phi: &SymbolSpec, z: Complex64) -> Result<Complex64> {
    if z.norm() > 1.0 + 1e-12 {
        return Err(invalid("z", "must lie in the closed unit disk"));
    }
    let one = Complex64::new(1.0, 0.0);
    Ok(match phi {
        SymbolSpec::Mobius { a } => (a + z) / (one + a.conj() * z),
        SymbolSpec::Rotation { theta } => Complex64::from_polar(1.0, *theta) * z,
        SymbolSpec::SingularInner { a } => {
            if (one - z).norm() == 0.0 {
                return Err(LabError::EssentialSingularity);
            }
            (-(*a) * (one + z) / (one - z)).exp()
        }
        SymbolSpec::Monomial { k } => z.powu(*k),
        SymbolSpec::TestSymbol { m, n } => {
            let w = (one + z.powu(m - n)) * 0.5;
            z * w.powf(1.0 / f64::from(*n))
        }
        SymbolSpec::Custom { coeffs } => coeffs
            .iter()
            .rev()
            .fold(Complex64::default(), |acc, c| acc * z + c),
    })
}

/// φ(e^{ix}), taking the angle rather than the point.
///
/// Near x = 0 the singular inner symbol is evaluated through
/// (1 + e^{ix})/(1 − e^{ix}) = i cot(x/2), so its modulus stays 1 to rounding.
pub fn symbol_eval_boundary(phi: &SymbolSpec, x: f64) -> Result<Complex64> {
    match phi {
        SymbolSpec::SingularInner { a } => {
            if x.rem_euclid(TAU) == 0.0 {
                return Err(LabError::EssentialSingularity);
            }
            Ok(Complex64::from_polar(1.0, -a / (0.5 * x).tan()))
        }
        _ => symbol_eval(phi, Complex64::from_polar(1.0, x)),
    }
}

/// a ∗ b = (a + b)/(1 + ab), so that T_a ∘ T_b = T_{a∗b}.
pub fn mobius_param_compose(a: f64, b: f64) -> f64 {
    (a + b) / (1.0 + a * b)
}

/// P_{−a}(x) = (1 − a²)/(1 + 2a cos x + a²).
#[inline]
pub fn poisson_eval(a: f64, x: f64) -> f64 {
    (1.0 - a * a) / (1.0 + 2.0 * a * x.cos() + a * a)
}

/// h_a(x) = ∫₀ˣ P_{−a}, in the closed form 2·atan2((1−a) sin(x/2), (1+a) cos(x/2)).
#[inline]
pub fn phase_eval(a: f64, x: f64) -> f64 {
    let h = 0.5 * x;
    2.0 * ((1.0 - a) * h.sin()).atan2((1.0 + a) * h.cos())
}

/// h_a(x) by adaptive quadrature of the Poisson kernel.
pub fn phase_quadrature(a: f64, x: f64, tol: f64) -> Result<f64> {
    if x == 0.0 {
        return Ok(0.0);
    }
    let r = quad::integrate(
        |t| poisson_eval(a, t),
        0.0,
        x,
        Tolerance::absolute(tol),
        4096,
    )?;
    Ok(r.value)
}

/// h_a″(x) = 2a(1 − a²) sin x / D², D = 1 + 2a cos x + a².
#[inline]
pub fn phase_d2(a: f64, x: f64) -> f64 {
    let d = 1.0 + 2.0 * a * x.cos() + a * a;
    2.0 * a * (1.0 - a * a) * x.sin() / (d * d)
}

/// h_a‴(x) = 2a(1 − a²)[cos x/D² + 4a sin²x/D³].
#[inline]
pub fn phase_d3(a: f64, x: f64) -> f64 {
    let d = 1.0 + 2.0 * a * x.cos() + a * a;
    let s = x.sin();
    2.0 * a * (1.0 - a * a) * (x.cos() / (d * d) + 4.0 * a * s * s / (d * d * d))
}

/// max |φ| on |z| = r: grid scan followed by golden-section refinement.
pub fn sup_modulus(phi: &SymbolSpec, r: f64, grid: usize) -> Result<f64> {
    if grid < 64 {
        return Err(invalid("grid", "must be at least 64"));
    }
    if !(r > 0.0 && r < 1.0) {
        return Err(invalid("r", "must lie in (0, 1)"));
    }
    let f = |t: f64| -> f64 {
        symbol_eval(phi, Complex64::from_polar(r, t))
            .map(|w| w.norm())
            .unwrap_or(f64::NAN)
    };
    let step = TAU / grid as f64;
    let (mut best_t, mut best) = (0.0, f(0.0));
    for j in 1..grid {
        let t = j as f64 * step;
        let v = f(t);
        if v > best {
            best = v;
            best_t = t;
        }
    }
    let (t, v) = golden_max(&f, best_t - step, best_t + step, 1e-14);
    Ok(if v > best { v } else { best }.max(f(t)))
}

/// Golden-section search for a maximum on [lo, hi].
pub fn golden_max<F: Fn(f64) -> f64>(f: &F, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > tol {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        }
    }
    let x = 0.5 * (lo + hi);
    (x, f(x))
}

/// Closed-form M(r) = sup_{|z|=r} |T_a(z)| = (|a| + r)/(1 + |a| r).
pub fn mobius_sup_modulus(a: f64, r: f64) -> f64 {
    let a = a.abs();
    (a + r) / (1.0 + a * r)
}

/// ρ with M(r) = r^ρ.
pub fn rho_exponent(a: f64, r: f64) -> Result<f64> {
    if !(r > 0.0 && r < 1.0) {
        return Err(invalid("r", "must lie in (0, 1)"));
    }
    if !(a.abs() < 1.0) {
        return Err(invalid("a", "must lie in (−1, 1)"));
    }
    Ok(mobius_sup_modulus(a, r).ln() / r.ln())
}

/// Constants attached to a real Möbius parameter a ∈ (0, 1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MobiusGeometry {
    pub a: f64,
    /// τ = (1 + a)/(1 − a).
    pub tau: f64,
    /// μ with τ⁻¹ = 1 − 3μ.
    pub mu: f64,
}

impl MobiusGeometry {
    pub fn new(a: f64) -> Result<Self> {
        if !(a > 0.0 && a < 1.0) {
            return Err(invalid("a", "must lie in (0, 1)"));
        }
        let tau = (1.0 + a) / (1.0 - a);
        Ok(Self {
            a,
            tau,
            mu: (1.0 - 1.0 / tau) / 3.0,
        })
    }

    pub fn rho(&self, r: f64) -> Result<f64> {
        rho_exponent(self.a, r)
    }

    /// J_n = [⌈(1−2μ)n⌉, ⌊(1−μ)n⌋].
    pub fn j_interval(&self, n: usize) -> (usize, usize) {
        let nf = n as f64;
        (
            snap(((1.0 - 2.0 * self.mu) * nf).max(0.0)).ceil() as usize,
            snap((1.0 - self.mu) * nf).floor() as usize,
        )
    }
}

/// Pull values within 1e-9 of an integer onto it before rounding.
fn snap(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() <= 1e-9 * x.abs().max(1.0) {
        r
    } else {
        x
    }
}

/// τ, μ and the index interval J_n.
pub fn main_lemma_geometry(a: f64, n: usize) -> Result<(MobiusGeometry, (usize, usize))> {
    if n == 0 {
        return Err(invalid("n", "must be at least 1"));
    }
    let g = MobiusGeometry::new(a)?;
    Ok((g, g.j_interval(n)))
}

/// The unique x ∈ (0, π) with n·P_{−a}(x) = m, by bisection.
pub fn critical_point(a: f64, m: usize, n: usize) -> Result<f64> {
    let g = MobiusGeometry::new(a)?;
    if n == 0 {
        return Err(invalid("n", "must be at least 1"));
    }
    let ratio = m as f64 / n as f64;
    let (lo_r, hi_r) = (1.0 / g.tau, g.tau);
    if !(ratio > lo_r && ratio < hi_r) {
        return Err(LabError::NoCriticalPoint {
            ratio,
            lo: lo_r,
            hi: hi_r,
        });
    }
    // P_{−a} increases on [0, π]
    let (mut lo, mut hi) = (0.0, PI);
    while hi - lo > 1e-13 {
        let mid = 0.5 * (lo + hi);
        if poisson_eval(a, mid) < ratio {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// cos x_m = (n/m)(1−a²)/(2a) − (1+a²)/(2a), solved directly.
pub fn critical_point_closed(a: f64, m: usize, n: usize) -> f64 {
    let c = (n as f64 / m as f64) * (1.0 - a * a) / (2.0 * a) - (1.0 + a * a) / (2.0 * a);
    c.clamp(-1.0, 1.0).acos()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn eval_examples() {
        let t = SymbolSpec::mobius(0.5);
        assert!((symbol_eval(&t, c(0.0)).unwrap() - c(0.5)).norm() < 1e-16);
        assert!(symbol_eval(&t, c(-0.5)).unwrap().norm() < 1e-16);
        let i = SymbolSpec::SingularInner { a: 1.0 };
        assert!((symbol_eval(&i, c(0.0)).unwrap().re - (-1f64).exp()).abs() < 1e-16);
        assert!(matches!(
            symbol_eval(&i, c(1.0)),
            Err(LabError::EssentialSingularity)
        ));
    }

    #[test]
    fn parse_round_trip() {
        for s in [
            "mobius:a=0.5",
            "inner:a=1",
            "test:m=7,n=3",
            "rotation:theta=0.25",
            "monomial:k=2",
            "custom:c1=0.5",
        ] {
            let p: SymbolSpec = s.parse().unwrap();
            assert_eq!(p.label(), s);
            assert_eq!(p.label().parse::<SymbolSpec>().unwrap(), p);
        }
        assert!("mobius:a=1".parse::<SymbolSpec>().is_err());
        assert!("test:m=3,n=3".parse::<SymbolSpec>().is_err());
        assert!("custom:c0=0.6,c1=0.6".parse::<SymbolSpec>().is_err());
        assert!(matches!(
            "blaschke".parse::<SymbolSpec>(),
            Err(LabError::UnknownSymbol(_))
        ));
    }

    #[test]
    fn compose_examples() {
        assert_eq!(mobius_param_compose(0.0, 0.3), 0.3);
        assert!((mobius_param_compose(0.5, 0.5) - 0.8).abs() < 1e-16);
        assert_eq!(mobius_param_compose(0.4, -0.4), 0.0);
    }

    #[test]
    fn poisson_examples() {
        assert!((poisson_eval(0.5, 0.0) - 1.0 / 3.0).abs() < 1e-15);
        assert!((poisson_eval(0.5, PI) - 3.0).abs() < 1e-14);
        for a in [0.3, 0.5, 0.7] {
            let r = quad::integrate(
                |x| poisson_eval(a, x),
                -PI,
                PI,
                Tolerance::absolute(1e-13),
                1000,
            )
            .unwrap();
            assert!((r.value / TAU - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn phase_examples() {
        assert_eq!(phase_eval(0.5, 0.0), 0.0);
        assert!((phase_eval(0.5, PI) - PI).abs() < 1e-15);
        let v = phase_eval(0.5, PI / 2.0);
        assert!((v - 2.0 * (1.0f64 / 3.0).atan()).abs() < 1e-15);
        assert!((v - 0.643501).abs() < 1e-6);
        assert!((phase_quadrature(0.5, PI / 2.0, 1e-14).unwrap() - v).abs() < 1e-13);
    }

    #[test]
    fn sup_modulus_examples() {
        let t = SymbolSpec::mobius(0.5);
        assert!((sup_modulus(&t, 0.5, 64).unwrap() - 0.8).abs() < 1e-12);
        let rot = SymbolSpec::Rotation { theta: 1.3 };
        assert!((sup_modulus(&rot, 0.7, 64).unwrap() - 0.7).abs() < 1e-15);
        let m2 = SymbolSpec::Monomial { k: 2 };
        assert!((sup_modulus(&m2, 0.5, 64).unwrap() - 0.25).abs() < 1e-15);
        assert!(sup_modulus(&t, 0.5, 8).is_err());
    }

    #[test]
    fn rho_examples() {
        let r = (-1f64).exp();
        let m = mobius_sup_modulus(0.5, r);
        assert!((m - 0.733_043_605_245_445).abs() < 1e-14);
        let rho = rho_exponent(0.5, r).unwrap();
        assert!((rho + m.ln()).abs() < 1e-15);
        assert!((rho - 0.310_550_090_126_2).abs() < 1e-12);
        let grid = sup_modulus(&SymbolSpec::mobius(0.5), r, 256).unwrap();
        assert!((grid - m).abs() < 1e-12);
        assert!((rho_exponent(1e-9, 0.5).unwrap() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn geometry_examples() {
        let (g, j) = main_lemma_geometry(0.5, 900).unwrap();
        assert!((g.tau - 3.0).abs() < 1e-15);
        assert!((g.mu - 2.0 / 9.0).abs() < 1e-15);
        assert_eq!(j, (500, 700));
        let (g, _) = main_lemma_geometry(1e-6, 10).unwrap();
        assert!(g.mu < 1e-6);
    }

    #[test]
    fn critical_point_examples() {
        let x = critical_point(0.5, 300, 300).unwrap();
        assert!((x - 2.0 * PI / 3.0).abs() < 1e-12);
        let x = critical_point(0.5, 200, 300).unwrap();
        assert!((x.cos() + 0.125).abs() < 1e-12);
        assert!((x - 1.69612).abs() < 1e-5);
        assert!((x - critical_point_closed(0.5, 200, 300)).abs() < 1e-12);
        assert!(matches!(
            critical_point(0.5, 900, 300),
            Err(LabError::NoCriticalPoint { .. })
        ));
        // P_{−a} runs from τ⁻¹ at 0 to τ at π
        assert!(critical_point(0.5, 2999, 1000).unwrap() > PI - 0.05);
        assert!(critical_point(0.5, 3334, 10000).unwrap() < 0.05);
    }
}
