//! Adaptive Gauss–Kronrod (7/15) quadrature for real and complex integrands.

use num_complex::Complex64;
use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{LabError, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
// Gauss weights for XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Stopping rule: the estimated error must not exceed `max(abs, rel * |I|)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
}

impl Tolerance {
    pub fn absolute(abs: f64) -> Self {
        Self { abs, rel: 0.0 }
    }

    pub fn relative(rel: f64) -> Self {
        Self { abs: 0.0, rel }
    }

    fn target(&self, value: f64) -> f64 {
        self.abs.max(self.rel * value)
    }
}

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct QuadResult<T> {
    pub value: T,
    pub error: f64,
    pub intervals: usize,
}

/// One 15-point Kronrod rule with its embedded 7-point Gauss estimate.
pub fn gk15<F>(f: &F, a: f64, b: f64) -> (Complex64, f64)
where
    F: Fn(f64) -> Complex64,
{
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for (j, (&x, &w)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let f1 = f(c - h * x);
        let f2 = f(c + h * x);
        let s = f1 + f2;
        kron += s * w;
        if j % 2 == 1 {
            gauss += s * WG[j / 2];
        }
    }
    let kron = kron * h;
    let gauss = gauss * h;
    (kron, (kron - gauss).norm())
}

struct Segment {
    a: f64,
    b: f64,
    value: Complex64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Globally adaptive integration of a complex integrand from `a` to `b`;
/// `b < a` gives the negated integral over `[b, a]`.
pub fn integrate_complex<F>(
    f: F,
    a: f64,
    b: f64,
    tol: Tolerance,
    max_intervals: usize,
) -> Result<QuadResult<Complex64>>
where
    F: Fn(f64) -> Complex64,
{
    if b < a {
        let r = integrate_complex_from(f, &[b, a], tol, max_intervals)?;
        return Ok(QuadResult {
            value: -r.value,
            ..r
        });
    }
    integrate_complex_from(f, &[a, b], tol, max_intervals)
}

/// Like [`integrate_complex`] but starts from a caller-supplied increasing partition.
pub fn integrate_complex_from<F>(
    f: F,
    breakpoints: &[f64],
    tol: Tolerance,
    max_intervals: usize,
) -> Result<QuadResult<Complex64>>
where
    F: Fn(f64) -> Complex64,
{
    let mut heap = BinaryHeap::new();
    let mut total = Complex64::new(0.0, 0.0);
    let mut err = 0.0;
    for w in breakpoints.windows(2) {
        let (v, e) = gk15(&f, w[0], w[1]);
        total += v;
        err += e;
        heap.push(Segment {
            a: w[0],
            b: w[1],
            value: v,
            error: e,
        });
    }
    let max_intervals = max_intervals.max(heap.len());
    while err > tol.target(total.norm()) {
        if heap.len() >= max_intervals {
            return Err(LabError::QuadratureFailed {
                estimate: err,
                tol: tol.target(total.norm()),
            });
        }
        let worst = heap.pop().expect("non-empty heap");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            return Err(LabError::QuadratureFailed {
                estimate: err,
                tol: tol.target(total.norm()),
            });
        }
        let (v1, e1) = gk15(&f, worst.a, mid);
        let (v2, e2) = gk15(&f, mid, worst.b);
        total += v1 + v2 - worst.value;
        err += e1 + e2 - worst.error;
        heap.push(Segment {
            a: worst.a,
            b: mid,
            value: v1,
            error: e1,
        });
        heap.push(Segment {
            a: mid,
            b: worst.b,
            value: v2,
            error: e2,
        });
    }
    // Re-sum to shed the drift of the running updates.
    let mut value = Complex64::new(0.0, 0.0);
    let mut error = 0.0;
    let intervals = heap.len();
    for s in heap.into_iter() {
        value += s.value;
        error += s.error;
    }
    Ok(QuadResult {
        value,
        error,
        intervals,
    })
}

/// Globally adaptive integration of a real integrand over `[a, b]`.
pub fn integrate<F>(
    f: F,
    a: f64,
    b: f64,
    tol: Tolerance,
    max_intervals: usize,
) -> Result<QuadResult<f64>>
where
    F: Fn(f64) -> f64,
{
    let r = integrate_complex(|x| Complex64::new(f(x), 0.0), a, b, tol, max_intervals)?;
    Ok(QuadResult {
        value: r.value.re,
        error: r.error,
        intervals: r.intervals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exact() {
        let r = integrate(|x| x.powi(4), 0.0, 1.0, Tolerance::absolute(1e-14), 100).unwrap();
        assert!((r.value - 0.2).abs() < 1e-15);
    }

    #[test]
    fn oscillatory_complex() {
        let r = integrate_complex(
            |x| Complex64::new(0.0, 10.0 * x).exp(),
            0.0,
            std::f64::consts::PI,
            Tolerance::absolute(1e-13),
            1000,
        )
        .unwrap();
        // (e^{10 i pi} - 1) / (10 i) = 0
        assert!(r.value.norm() < 1e-12);
    }

    #[test]
    fn reversed_limits_negate() {
        let f = |x: f64| 1.0 / (1.1 + x.cos());
        let fwd = integrate(f, 0.0, 3.0, Tolerance::absolute(1e-13), 1000).unwrap();
        let rev = integrate(f, 3.0, 0.0, Tolerance::absolute(1e-13), 1000).unwrap();
        assert_eq!(fwd.value, -rev.value);
    }

    #[test]
    fn reports_failure_on_budget() {
        let r = integrate(
            |x| (1.0 / x).sin(),
            1e-8,
            1.0,
            Tolerance::absolute(1e-15),
            4,
        );
        assert!(matches!(r, Err(LabError::QuadratureFailed { .. })));
    }
}
