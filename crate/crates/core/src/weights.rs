//! Weight sequences β and the regularity predicates that govern boundedness.
//!
//! Every sequence is stored as `ln β_n`; all ratios are formed as
//! `exp(ln β_m - ln β_n)` so factorial and geometric families never underflow.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, LabError, Result};
use crate::quad::{self, Tolerance};

/// Largest index whose factorial block is representable in `u64`.
pub const MAX_FACTORIAL_INDEX: u64 = 2_432_902_008_176_640_000; // 20!

/// Memory guard for memoized prefixes.
pub const MAX_HORIZON: usize = 1 << 28;

/// What is known about the sequence beyond the memoized prefix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TailInfo {
    /// Nothing: tail suprema cannot be formed.
    Unknown,
    /// β is non-increasing from this index on, including past the prefix.
    NonIncreasingFrom(usize),
}

/// The closed-form rule behind a weight sequence.
#[derive(Debug, Clone, PartialEq)]
pub enum WeightRule {
    /// β ≡ 1, the classical Hardy space.
    Constant,
    /// β_n = (n+1)^{-ν}.
    Power { nu: f64 },
    /// β_0 = β_1 = 1, β_n = (k!)^{-δ} for k! < n ≤ (k+1)!.
    Prop24 { delta: f64 },
    /// Factorial blocks with a one-index dip at (k+1)! − 1.
    Thm32,
    /// β_n = π n r^{2n} (β_0 := π).
    Reich { r: f64 },
    /// β_n = exp(−c √n).
    ExpSqrt { c: f64 },
    /// β_n = exp(−c log²(n+1)).
    LogSquared { c: f64 },
    /// Slowly oscillating, bounded, not essentially decreasing (a_k = 4^{k²}).
    SlowOsc,
    /// β_{2k} = 1, β_{2k+1} = 1/(k+1).
    AltOdd,
    /// Explicit values with declared tail behaviour.
    Values { tail: TailInfo },
    /// β̃_n = sup_{m≥n} β_m of a base sequence.
    Tilde(Box<WeightSequence>),
    /// γ_n = max{β_n, sup_{m>(1+δ)n} β_m}.
    Gamma {
        base: Box<WeightSequence>,
        delta: f64,
    },
}

impl WeightRule {
    /// Short identifier used in reports.
    pub fn label(&self) -> String {
        match self {
            WeightRule::Constant => "one".into(),
            WeightRule::Power { nu } => format!("power:nu={nu}"),
            WeightRule::Prop24 { delta } => format!("prop24:delta={delta}"),
            WeightRule::Thm32 => "thm32".into(),
            WeightRule::Reich { r } => format!("reich:r={r}"),
            WeightRule::ExpSqrt { c } => format!("expsqrt:c={c}"),
            WeightRule::LogSquared { c } => format!("logsq:c={c}"),
            WeightRule::SlowOsc => "osc".into(),
            WeightRule::AltOdd => "altodd".into(),
            WeightRule::Values { .. } => "values".into(),
            WeightRule::Tilde(b) => format!("tilde({})", b.rule.label()),
            WeightRule::Gamma { base, delta } => {
                format!("gamma({},delta={delta})", base.rule.label())
            }
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            WeightRule::Power { nu } if !nu.is_finite() => Err(invalid("nu", "must be finite")),
            WeightRule::Prop24 { delta } if !(delta > 0.0 && delta.is_finite()) => {
                Err(invalid("delta", "must be positive"))
            }
            WeightRule::Reich { r } if !(r > 0.0 && r < 1.0) => {
                Err(invalid("r", "must lie in (0, 1)"))
            }
            WeightRule::ExpSqrt { c } | WeightRule::LogSquared { c }
                if !(c > 0.0 && c.is_finite()) =>
            {
                Err(invalid("c", "must be positive"))
            }
            _ => Ok(()),
        }
    }

    fn is_factorial(&self) -> bool {
        matches!(self, WeightRule::Prop24 { .. } | WeightRule::Thm32)
    }

    /// Index from which the family is provably non-increasing, if any.
    fn monotone_from(&self) -> Option<usize> {
        match *self {
            WeightRule::Constant
            | WeightRule::Prop24 { .. }
            | WeightRule::ExpSqrt { .. }
            | WeightRule::LogSquared { .. } => Some(0),
            WeightRule::Power { nu } if nu >= 0.0 => Some(0),
            WeightRule::Reich { r } => Some(reich_monotone_index(r)),
            WeightRule::Values {
                tail: TailInfo::NonIncreasingFrom(t),
            } => Some(t),
            WeightRule::Tilde(_) => Some(0),
            _ => None,
        }
    }

    /// Closed-form `ln β_n`, where one exists.
    fn closed_form_log(&self, n: u64) -> Option<f64> {
        let nf = n as f64;
        Some(match *self {
            WeightRule::Constant => 0.0,
            WeightRule::Power { nu } => -nu * (nf + 1.0).ln(),
            WeightRule::Prop24 { delta } => {
                if n <= 1 {
                    0.0
                } else {
                    let k = factorial_block(n)?;
                    -delta * ln_factorial(k)
                }
            }
            WeightRule::Thm32 => {
                if n <= 6 {
                    0.0
                } else {
                    let k = factorial_block(n)?;
                    let next = factorial_u128(k + 1);
                    if u128::from(n) + 1 == next {
                        -ln_factorial(k + 1)
                    } else {
                        -ln_factorial(k)
                    }
                }
            }
            WeightRule::Reich { r } => {
                std::f64::consts::PI.ln() + nf.max(1.0).ln() + 2.0 * nf * r.ln()
            }
            WeightRule::ExpSqrt { c } => -c * nf.sqrt(),
            WeightRule::LogSquared { c } => -c * (nf + 1.0).ln().powi(2),
            WeightRule::SlowOsc => slow_osc_log(n),
            WeightRule::AltOdd => {
                if n.is_multiple_of(2) {
                    0.0
                } else {
                    -((n / 2 + 1) as f64).ln()
                }
            }
            WeightRule::Values { .. } | WeightRule::Tilde(_) | WeightRule::Gamma { .. } => {
                return None
            }
        })
    }
}

impl fmt::Display for WeightRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

fn reich_monotone_index(r: f64) -> usize {
    // β_{n+1} ≤ β_n  ⇔  n ≥ r² / (1 − r²)
    let r2 = r * r;
    (r2 / (1.0 - r2)).ceil().max(1.0) as usize
}

fn factorial_u128(k: u64) -> u128 {
    (1..=u128::from(k)).product()
}

/// The k with k! < n ≤ (k+1)!, for n ≥ 2.
fn factorial_block(n: u64) -> Option<u64> {
    if n > MAX_FACTORIAL_INDEX {
        return None;
    }
    let n = u128::from(n);
    let mut k = 1u64;
    let mut fk: u128 = 1;
    loop {
        let next = fk * u128::from(k + 1);
        if n <= next {
            return Some(k);
        }
        fk = next;
        k += 1;
    }
}

fn ln_factorial(k: u64) -> f64 {
    (2..=k).map(|i| (i as f64).ln()).sum()
}

fn slow_osc_log(n: u64) -> f64 {
    if n == 0 {
        return 0.0;
    }
    // a_k = 2^{2k²}, b_k = 2^{2k² + 2k + 1}
    let ln2 = std::f64::consts::LN_2;
    let n128 = u128::from(n);
    let mut k: u32 = 0;
    while 2 * (k + 1) * (k + 1) < 128 && (1u128 << (2 * (k + 1) * (k + 1))) <= n128 {
        k += 1;
    }
    let b_exp = 2 * k * k + 2 * k + 1;
    let below_b = b_exp >= 128 || n128 < (1u128 << b_exp);
    let nf = (n as f64).ln();
    if below_b {
        f64::from(2 * k * k) * ln2 - nf
    } else {
        nf - f64::from(2 * (k + 1) * (k + 1)) * ln2
    }
}

/// Ceiling convention for non-integer indices: β_x = β_k with k = ⌈x⌉.
pub fn index_ceil(x: f64) -> usize {
    let r = x.round();
    if (x - r).abs() <= 1e-9 * x.abs().max(1.0) {
        r as usize
    } else {
        x.ceil() as usize
    }
}

/// A positive weight sequence with a memoized prefix β_0..β_N.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightSequence {
    rule: WeightRule,
    log_memo: Vec<f64>,
    tail_monotone_from: Option<usize>,
}

impl WeightSequence {
    /// Build a catalog family and memoize `horizon + 1` values.
    pub fn new(rule: WeightRule, horizon: usize) -> Result<Self> {
        if horizon < 2 {
            return Err(invalid("horizon", "must be at least 2"));
        }
        if horizon > MAX_HORIZON {
            return Err(invalid("horizon", format!("must not exceed {MAX_HORIZON}")));
        }
        rule.validate()?;
        if rule.is_factorial() && horizon as u64 > MAX_FACTORIAL_INDEX {
            return Err(LabError::HorizonOverflow {
                requested: horizon,
                max_index: MAX_FACTORIAL_INDEX,
            });
        }
        let log_memo = match &rule {
            WeightRule::Values { .. } => {
                return Err(invalid("rule", "use WeightSequence::from_values"))
            }
            WeightRule::Tilde(base) => tilde_logs(base, horizon)?,
            WeightRule::Gamma { base, delta } => gamma_logs(base, *delta, horizon)?,
            r => (0..=horizon as u64)
                .map(|n| r.closed_form_log(n).expect("catalog closed form"))
                .collect(),
        };
        let tail_monotone_from = rule.monotone_from();
        Ok(Self {
            rule,
            log_memo,
            tail_monotone_from,
        })
    }

    /// Parse a CLI identifier such as `power:nu=1` and memoize to `horizon`.
    pub fn parse(spec: &str, horizon: usize) -> Result<Self> {
        Self::new(spec.parse()?, horizon)
    }

    /// Wrap explicit positive values β_0..β_N.
    pub fn from_values(values: &[f64], tail: TailInfo) -> Result<Self> {
        if values.len() < 3 {
            return Err(invalid("values", "need at least three entries"));
        }
        if let Some(i) = values.iter().position(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(invalid(
                "values",
                format!("entry {i} is not positive and finite"),
            ));
        }
        let rule = WeightRule::Values { tail };
        Ok(Self {
            tail_monotone_from: rule.monotone_from(),
            rule,
            log_memo: values.iter().map(|v| v.ln()).collect(),
        })
    }

    /// Explicit values given directly as logarithms.
    pub fn from_logs(logs: Vec<f64>, tail: TailInfo) -> Result<Self> {
        if logs.len() < 3 || logs.iter().any(|l| !l.is_finite()) {
            return Err(invalid("logs", "need at least three finite entries"));
        }
        let rule = WeightRule::Values { tail };
        Ok(Self {
            tail_monotone_from: rule.monotone_from(),
            rule,
            log_memo: logs,
        })
    }

    pub fn rule(&self) -> &WeightRule {
        &self.rule
    }

    /// Largest memoized index N.
    pub fn horizon(&self) -> usize {
        self.log_memo.len() - 1
    }

    pub fn tail_monotone_from(&self) -> Option<usize> {
        self.tail_monotone_from
    }

    /// True when β is provably non-increasing beyond some index.
    pub fn tail_monotone(&self) -> bool {
        self.tail_monotone_from.is_some()
    }

    /// `ln β_n` for a memoized index. Panics past the horizon.
    #[inline]
    pub fn log(&self, n: usize) -> f64 {
        self.log_memo[n]
    }

    #[inline]
    pub fn value(&self, n: usize) -> f64 {
        self.log_memo[n].exp()
    }

    pub fn logs(&self) -> &[f64] {
        &self.log_memo
    }

    /// β_m / β_n through logarithms.
    #[inline]
    pub fn ratio(&self, m: usize, n: usize) -> f64 {
        (self.log_memo[m] - self.log_memo[n]).exp()
    }

    /// `ln β_n` at any index: memo first, then the closed form.
    pub fn log_at(&self, n: usize) -> Option<f64> {
        if let Some(v) = self.log_memo.get(n) {
            return Some(*v);
        }
        match &self.rule {
            WeightRule::Tilde(base) => base.tail_sup_log(n).ok(),
            WeightRule::Gamma { base, delta } => {
                let own = base.log_at(n)?;
                let tail = base.tail_sup_log(gamma_cut(n, *delta)).ok()?;
                Some(own.max(tail))
            }
            r => r.closed_form_log(n as u64),
        }
    }

    /// β at a real index with the ceiling convention.
    pub fn log_at_real(&self, x: f64) -> Option<f64> {
        self.log_at(index_ceil(x))
    }

    /// A new sequence with the first `horizon + 1` values of this one.
    pub fn with_horizon(&self, horizon: usize) -> Result<Self> {
        match &self.rule {
            WeightRule::Values { .. } => {
                if horizon > self.horizon() {
                    return Err(LabError::HorizonMismatch {
                        requested: horizon,
                        available: self.horizon(),
                    });
                }
                let mut out = self.clone();
                out.log_memo.truncate(horizon + 1);
                Ok(out)
            }
            r => Self::new(r.clone(), horizon),
        }
    }

    /// `sup_{m ≥ j} ln β_m`, using the family's analytic tail information.
    pub fn tail_sup_log(&self, j: usize) -> Result<f64> {
        let h = self.horizon();
        match &self.rule {
            WeightRule::Constant | WeightRule::SlowOsc | WeightRule::AltOdd => Ok(0.0),
            WeightRule::Power { nu } if *nu < 0.0 => Err(LabError::TailUndetermined(
                "increasing power weight has no finite tail supremum".into(),
            )),
            WeightRule::Thm32 => {
                let at = |i: usize| self.log_at(i).expect("closed form");
                let own = at(j);
                // dips sit at (k+1)! − 1 and are followed by a larger value
                Ok(own.max(at(j + 1)))
            }
            WeightRule::Gamma { .. } => Err(LabError::TailUndetermined(
                "gamma transform carries no tail bound".into(),
            )),
            WeightRule::Values { tail } => match *tail {
                TailInfo::Unknown => Err(LabError::TailUndetermined(
                    "explicit values without tail information".into(),
                )),
                TailInfo::NonIncreasingFrom(t) => {
                    if t > h || j > h {
                        return Err(LabError::TailUndetermined(format!(
                            "index {j} or monotone start {t} past the horizon {h}"
                        )));
                    }
                    Ok(max_log(&self.log_memo[j..=h]))
                }
            },
            _ => {
                let t = self
                    .tail_monotone_from
                    .expect("remaining catalog rules are eventually monotone");
                if j >= t {
                    Ok(self.log_at(j).expect("closed form"))
                } else {
                    Ok((j..=t)
                        .map(|i| self.log_at(i).expect("closed form"))
                        .fold(f64::NEG_INFINITY, f64::max))
                }
            }
        }
    }

    /// Smallest of β_n^{1/n} over 1 ≤ n ≤ N.
    pub fn min_root(&self) -> f64 {
        (1..=self.horizon())
            .map(|n| (self.log(n) / n as f64).exp())
            .fold(f64::INFINITY, f64::min)
    }
}

fn max_log(xs: &[f64]) -> f64 {
    xs.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// First integer strictly above (1+δ)n.
fn gamma_cut(n: usize, delta: f64) -> usize {
    ((1.0 + delta) * n as f64).floor() as usize + 1
}

fn tilde_logs(base: &WeightSequence, horizon: usize) -> Result<Vec<f64>> {
    let mut out = vec![0.0; horizon + 1];
    let mut running = base.tail_sup_log(horizon)?;
    for n in (0..=horizon).rev() {
        let own = base
            .log_at(n)
            .ok_or_else(|| LabError::TailUndetermined(format!("β_{n} unavailable")))?;
        running = running.max(own);
        out[n] = running;
    }
    Ok(out)
}

fn gamma_logs(base: &WeightSequence, delta: f64, horizon: usize) -> Result<Vec<f64>> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(invalid("delta", "must be positive"));
    }
    (0..=horizon)
        .map(|n| {
            let own = base
                .log_at(n)
                .ok_or_else(|| LabError::TailUndetermined(format!("β_{n} unavailable")))?;
            Ok(own.max(base.tail_sup_log(gamma_cut(n, delta))?))
        })
        .collect()
}

/// β̃_n = sup_{m≥n} β_m, memoized over the same horizon.
pub fn tilde_transform(beta: &WeightSequence) -> Result<WeightSequence> {
    WeightSequence::new(WeightRule::Tilde(Box::new(beta.clone())), beta.horizon())
}

/// γ_n = max{β_n, sup_{m>(1+δ)n} β_m}, memoized over the same horizon.
pub fn gamma_transform(beta: &WeightSequence, delta: f64) -> Result<WeightSequence> {
    WeightSequence::new(
        WeightRule::Gamma {
            base: Box::new(beta.clone()),
            delta,
        },
        beta.horizon(),
    )
}

/// Build a catalog weight from a rule and horizon.
pub fn make_weight(rule: WeightRule, horizon: usize) -> Result<WeightSequence> {
    WeightSequence::new(rule, horizon)
}

fn parse_params(body: &str) -> Result<Vec<(String, f64)>> {
    body.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|kv| {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| invalid(kv, "expected key=value"))?;
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|_| invalid(k.trim(), format!("`{v}` is not a number")))?;
            Ok((k.trim().to_string(), v))
        })
        .collect()
}

pub(crate) fn take_param(params: &[(String, f64)], key: &str, default: Option<f64>) -> Result<f64> {
    params
        .iter()
        .find(|(k, _)| k == key)
        .map(|(_, v)| *v)
        .or(default)
        .ok_or_else(|| invalid(key, "missing"))
}

pub(crate) fn split_spec(s: &str) -> Result<(String, Vec<(String, f64)>)> {
    let (name, body) = s.split_once(':').unwrap_or((s, ""));
    Ok((name.trim().to_ascii_lowercase(), parse_params(body)?))
}

impl FromStr for WeightRule {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        let (name, p) = split_spec(s)?;
        let rule = match name.as_str() {
            "one" | "hardy" | "const" => WeightRule::Constant,
            "power" => WeightRule::Power {
                nu: take_param(&p, "nu", None)?,
            },
            "prop24" => WeightRule::Prop24 {
                delta: take_param(&p, "delta", Some(1.0))?,
            },
            "thm32" => WeightRule::Thm32,
            "reich" => WeightRule::Reich {
                r: take_param(&p, "r", None)?,
            },
            "expsqrt" => WeightRule::ExpSqrt {
                c: take_param(&p, "c", Some(1.0))?,
            },
            "logsq" => WeightRule::LogSquared {
                c: take_param(&p, "c", Some(1.0))?,
            },
            "osc" => WeightRule::SlowOsc,
            "altodd" => WeightRule::AltOdd,
            _ => return Err(LabError::UnknownFamily(s.to_string())),
        };
        rule.validate()?;
        Ok(rule)
    }
}

/// β_n = ∫₀¹ tⁿ G(1−t) dt by adaptive quadrature.
///
/// The interval is pre-split geometrically toward t = 1, where the integrand
/// concentrates for large n.
pub fn moment_weight<G>(g: G, n: usize, tol: Tolerance) -> Result<f64>
where
    G: Fn(f64) -> f64,
{
    if !(tol.abs > 0.0 || tol.rel > 0.0) {
        return Err(invalid("quad_tol", "must be positive"));
    }
    let mut breaks: Vec<f64> = (0..60).map(|j| 1.0 - 0.5f64.powi(j)).collect();
    breaks.push(1.0);
    breaks.dedup();
    let nf = n as i32;
    let r = quad::integrate_complex_from(
        |t| {
            let u = 1.0 - t;
            let v = if u <= 0.0 { 0.0 } else { t.powi(nf) * g(u) };
            num_complex::Complex64::new(v, 0.0)
        },
        &breaks,
        tol,
        20_000,
    )?;
    Ok(r.value.re)
}

/// A witness index pair (n, m) realizing a reported extremum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    pub n: usize,
    pub m: usize,
}

/// Finite-horizon profiles of the five regularity predicates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredicateReport {
    pub weight: String,
    pub horizon: usize,
    /// sup β_m/β_n over 0 ≤ n ≤ m ≤ N.
    pub essdec_constant: f64,
    pub essdec_witness: Witness,
    /// min β_{2n}/β_n over 1 ≤ n ≤ N/2.
    pub delta2_inf: f64,
    pub delta2_witness: Witness,
    /// max −ln β_n / ln n over 2 ≤ n ≤ N.
    pub polymin_exponent: f64,
    pub polymin_witness: usize,
    /// min and max of β_m/β_n over n/2 ≤ m ≤ 2n, 1 ≤ n ≤ N/2.
    pub slowosc_min: f64,
    pub slowosc_min_witness: Witness,
    pub slowosc_max: f64,
    pub slowosc_max_witness: Witness,
    /// min over 1 ≤ n ≤ N/2 of n β_{2n} / Σ_{j≤n} β*_j.
    pub meandelta2_inf: f64,
    pub meandelta2_witness: usize,
}

/// Profiles of all five predicates over the horizon N.
pub fn predicate_report(beta: &WeightSequence, horizon: usize) -> Result<PredicateReport> {
    if horizon > beta.horizon() {
        return Err(LabError::HorizonMismatch {
            requested: horizon,
            available: beta.horizon(),
        });
    }
    if horizon < 2 {
        return Err(invalid("horizon", "must be at least 2"));
    }
    let l = &beta.logs()[..=horizon];
    let half = horizon / 2;

    // essential decrease: suffix maximum
    let mut best = (f64::NEG_INFINITY, Witness { n: 0, m: 0 });
    let mut suf = (f64::NEG_INFINITY, horizon);
    for n in (0..=horizon).rev() {
        if l[n] >= suf.0 {
            suf = (l[n], n);
        }
        let d = suf.0 - l[n];
        if d > best.0 {
            best = (d, Witness { n, m: suf.1 });
        }
    }
    let essdec_witness = best.1;

    let mut d2 = (f64::INFINITY, Witness { n: 1, m: 2 });
    for n in 1..=half {
        let d = l[2 * n] - l[n];
        if d < d2.0 {
            d2 = (d, Witness { n, m: 2 * n });
        }
    }

    let mut pm = (f64::NEG_INFINITY, 2usize);
    for (n, &ln_b) in l.iter().enumerate().skip(2) {
        let e = -ln_b / (n as f64).ln();
        if e > pm.0 {
            pm = (e, n);
        }
    }

    let (so_min, so_max) = slow_osc_profile(l, half);

    let (md_value, md_n) = mean_delta2_profile(l, half);

    Ok(PredicateReport {
        weight: beta.rule().label(),
        horizon,
        essdec_constant: beta.ratio(essdec_witness.m, essdec_witness.n),
        essdec_witness,
        delta2_inf: beta.ratio(d2.1.m, d2.1.n),
        delta2_witness: d2.1,
        polymin_exponent: -beta.log(pm.1) / (pm.1 as f64).ln(),
        polymin_witness: pm.1,
        slowosc_min: beta.ratio(so_min.m, so_min.n),
        slowosc_min_witness: so_min,
        slowosc_max: beta.ratio(so_max.m, so_max.n),
        slowosc_max_witness: so_max,
        meandelta2_inf: md_value,
        meandelta2_witness: md_n,
    })
}

/// Sliding-window extrema of ln β over m ∈ [⌈n/2⌉, 2n] for 1 ≤ n ≤ `last`.
fn slow_osc_profile(l: &[f64], last: usize) -> (Witness, Witness) {
    let mut wmin = Witness { n: 1, m: 1 };
    let mut wmax = Witness { n: 1, m: 1 };
    let (mut vmin, mut vmax) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut qmin: VecDeque<usize> = VecDeque::new();
    let mut qmax: VecDeque<usize> = VecDeque::new();
    let mut pushed = 0usize; // next index to enter the window
    for n in 1..=last {
        let lo = n.div_ceil(2);
        let hi = 2 * n;
        while pushed <= hi {
            while qmin.back().is_some_and(|&i| l[i] >= l[pushed]) {
                qmin.pop_back();
            }
            qmin.push_back(pushed);
            while qmax.back().is_some_and(|&i| l[i] <= l[pushed]) {
                qmax.pop_back();
            }
            qmax.push_back(pushed);
            pushed += 1;
        }
        while qmin.front().is_some_and(|&i| i < lo) {
            qmin.pop_front();
        }
        while qmax.front().is_some_and(|&i| i < lo) {
            qmax.pop_front();
        }
        let mi = *qmin.front().expect("window non-empty");
        let ma = *qmax.front().expect("window non-empty");
        if l[mi] - l[n] < vmin {
            vmin = l[mi] - l[n];
            wmin = Witness { n, m: mi };
        }
        if l[ma] - l[n] > vmax {
            vmax = l[ma] - l[n];
            wmax = Witness { n, m: ma };
        }
    }
    (wmin, wmax)
}

/// n β_{2n} / Σ_{j≤n} β*_j, where β* is the non-increasing rearrangement of
/// β_1..β_N. Sums run in log space against the largest value.
fn mean_delta2_profile(l: &[f64], last: usize) -> (f64, usize) {
    let mut sorted: Vec<f64> = l[1..].to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let top = sorted[0];
    let mut acc = 0.0;
    let mut best = (f64::INFINITY, 1usize);
    for n in 1..=last {
        acc += (sorted[n - 1] - top).exp();
        let log_ratio = l[2 * n] + (n as f64).ln() - (top + acc.ln());
        if log_ratio < best.0 {
            best = (log_ratio, n);
        }
    }
    (best.0.exp(), best.1)
}

/// Recompute the mean-Δ₂ ratio at one index from scratch.
pub fn mean_delta2_at(beta: &WeightSequence, horizon: usize, n: usize) -> f64 {
    let l = &beta.logs()[..=horizon];
    let mut sorted: Vec<f64> = l[1..].to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let top = sorted[0];
    let acc: f64 = sorted[..n].iter().map(|v| (v - top).exp()).sum();
    (l[2 * n] + (n as f64).ln() - (top + acc.ln())).exp()
}

impl PredicateReport {
    /// Recompute every reported bound from its witness.
    pub fn verify_witnesses(&self, beta: &WeightSequence) -> bool {
        let r = |w: Witness| beta.ratio(w.m, w.n);
        r(self.essdec_witness) == self.essdec_constant
            && r(self.delta2_witness) == self.delta2_inf
            && r(self.slowosc_min_witness) == self.slowosc_min
            && r(self.slowosc_max_witness) == self.slowosc_max
            && -beta.log(self.polymin_witness) / (self.polymin_witness as f64).ln()
                == self.polymin_exponent
            && mean_delta2_at(beta, self.horizon, self.meandelta2_witness) == self.meandelta2_inf
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(s: &str, h: usize) -> WeightSequence {
        WeightSequence::parse(s, h).unwrap()
    }

    #[test]
    fn closed_form_examples() {
        assert!((w("power:nu=1", 10).value(3) - 0.25).abs() < 1e-16);
        assert!((w("prop24:delta=1", 30).value(7) - 1.0 / 6.0).abs() < 1e-16);
        let t = w("thm32", 200);
        assert!((t.value(23) - 1.0 / 24.0).abs() < 1e-16);
        assert!((t.value(24) - 1.0 / 6.0).abs() < 1e-16);
        assert!((t.value(119) - 1.0 / 120.0).abs() < 1e-17);
        assert!((t.value(120) - 1.0 / 24.0).abs() < 1e-16);
        assert_eq!(t.value(6), 1.0);
        assert!((t.value(7) - 1.0 / 6.0).abs() < 1e-16);
    }

    #[test]
    fn slow_osc_blocks() {
        let s = w("osc", 300);
        assert_eq!(s.value(1), 1.0);
        assert!((s.value(3) - 0.75).abs() < 1e-15);
        assert!((s.value(4) - 1.0).abs() < 1e-15);
        assert!((s.value(31) - 4.0 / 31.0).abs() < 1e-15);
        assert!((s.value(32) - 32.0 / 256.0).abs() < 1e-15);
        assert!((s.value(256) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn errors() {
        assert!(matches!(
            "nope".parse::<WeightRule>(),
            Err(LabError::UnknownFamily(_))
        ));
        assert!("reich:r=1.5".parse::<WeightRule>().is_err());
        assert!("prop24:delta=-1".parse::<WeightRule>().is_err());
        assert!(WeightSequence::parse("one", 1).is_err());
        assert!(WeightSequence::from_values(&[1.0, 0.0, 1.0], TailInfo::Unknown).is_err());
    }

    #[test]
    fn constant_report() {
        let r = predicate_report(&w("one", 64), 64).unwrap();
        assert_eq!(r.essdec_constant, 1.0);
        assert_eq!(r.delta2_inf, 1.0);
        assert_eq!((r.slowosc_min, r.slowosc_max), (1.0, 1.0));
        assert!((r.meandelta2_inf - 1.0).abs() < 1e-15);
        assert_eq!(r.polymin_exponent, 0.0);
    }

    #[test]
    fn reich_delta2_ratio() {
        let r: f64 = 0.5;
        let b = w("reich:r=0.5", 512);
        for n in 1..=256 {
            let expect = (2.0f64.ln() + 2.0 * n as f64 * r.ln()).exp();
            assert!((b.ratio(2 * n, n) / expect - 1.0).abs() < 1e-12);
        }
        let rep = predicate_report(&b, 512).unwrap();
        assert!(rep.delta2_inf < 1e-100);
    }

    #[test]
    fn thm32_essdec_grows() {
        let b = w("thm32", 1000);
        let rep = predicate_report(&b, 1000).unwrap();
        // 5! ≤ 1000 < 6!: the dip at 119 gives ratio 5
        assert!(rep.essdec_constant >= 5.0 - 1e-12);
        assert!((b.ratio(120, 119) - 5.0).abs() < 1e-12);
    }

    #[test]
    fn tilde_examples() {
        let b = w("power:nu=1", 50);
        let t = tilde_transform(&b).unwrap();
        assert_eq!(t.logs(), b.logs());

        let mut v = vec![1.0; 20];
        v[1] = 2.0;
        let c = WeightSequence::from_values(&v, TailInfo::NonIncreasingFrom(2)).unwrap();
        let t = tilde_transform(&c).unwrap();
        assert_eq!(t.value(0), 2.0);
        assert_eq!(t.value(1), 2.0);
        assert_eq!(t.value(2), 1.0);

        let th = tilde_transform(&w("thm32", 100)).unwrap();
        assert!((th.value(23) - 1.0 / 6.0).abs() < 1e-16);

        let u = WeightSequence::from_values(&v, TailInfo::Unknown).unwrap();
        assert!(matches!(
            tilde_transform(&u),
            Err(LabError::TailUndetermined(_))
        ));
    }

    #[test]
    fn gamma_examples() {
        let g = gamma_transform(&w("one", 40), 0.5).unwrap();
        assert!(g.logs().iter().all(|&l| l == 0.0));
        let b = w("expsqrt", 40);
        assert_eq!(gamma_transform(&b, 1.0).unwrap().logs(), b.logs());
        // sup_{m>46} β_m = 1/24 for the factorial-dip weight
        let g = gamma_transform(&w("thm32", 100), 1.0).unwrap();
        assert!((g.value(23) - 1.0 / 24.0).abs() < 1e-16);
    }

    #[test]
    fn moment_weight_examples() {
        let v = moment_weight(|_| 1.0, 4, Tolerance::absolute(1e-13)).unwrap();
        assert!((v - 0.2).abs() < 1e-13);
        let v = moment_weight(|u| u, 1, Tolerance::absolute(1e-13)).unwrap();
        assert!((v - 1.0 / 6.0).abs() < 1e-13);
    }

    #[test]
    fn ceiling_convention() {
        assert_eq!(index_ceil(3.0), 3);
        assert_eq!(index_ceil(3.2), 4);
        assert_eq!(index_ceil(0.7 * 10.0), 7);
    }
}
