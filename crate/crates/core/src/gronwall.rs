//! The integral inequality
//!
//! ```text
//! H(r) ≥ C ∫_{t₁}^r H^a(α) (α − t₀)^b dα      for all r ≥ t₁
//! ```
//!
//! has no positive solution when `C > 0`, `a > 1`, `b ≥ −1`. With
//! `J(r) = ∫_{t₁}^r H^a (α−t₀)^b dα` the inequality gives
//! `J′/J^a ≥ C^a (r−t₀)^b`, and integrating from `t₁+1` bounds how far it
//! can hold: past
//!
//! ```text
//! (r* − t₀)^{b+1} = (t₁+1−t₀)^{b+1} + (b+1) J(t₁+1)^{1−a} / ((a−1) C^a)
//! ```
//!
//! (or `r* = t₀ + (t₁+1−t₀)·exp(J(t₁+1)^{1−a}/((a−1)C^a))` for `b = −1`)
//! the left side of the integrated inequality would exceed its bound.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::io::fmt_value;
use crate::{Error, Result};

/// `(C, a, b, t₀, t₁)`.
///
/// Construction accepts `b < −1` so that counterexamples can be checked;
/// [`failure_radius`] refuses them.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GronwallParams {
    #[serde(rename = "C")]
    pub c: f64,
    pub a: f64,
    pub b: f64,
    pub t0: f64,
    pub t1: f64,
}

impl GronwallParams {
    pub fn new(c: f64, a: f64, b: f64, t0: f64, t1: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::invalid(format!("C must be positive and finite, got {c}")));
        }
        if !(a > 1.0 && a.is_finite()) {
            return Err(Error::invalid(format!("a must exceed 1, got {a}")));
        }
        if !b.is_finite() {
            return Err(Error::invalid(format!("b must be finite, got {b}")));
        }
        if !(t0.is_finite() && t1.is_finite() && t0 <= t1) {
            return Err(Error::invalid(format!("need finite t0 <= t1, got t0 = {t0}, t1 = {t1}")));
        }
        Ok(GronwallParams { c, a, b, t0, t1 })
    }

    fn weight(&self, r: f64) -> f64 {
        (r - self.t0).powf(self.b)
    }
}

/// Samples `values[k] = H(start + k·step)` on a uniform grid.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledFunction {
    start: f64,
    step: f64,
    values: Vec<f64>,
}

impl SampledFunction {
    pub fn new(start: f64, step: f64, values: Vec<f64>) -> Result<Self> {
        if !(start.is_finite() && step > 0.0 && step.is_finite()) {
            return Err(Error::invalid(format!("bad sampling start {start} / step {step}")));
        }
        if values.is_empty() {
            return Err(Error::invalid("no samples"));
        }
        Ok(SampledFunction { start, step, values })
    }

    /// `n + 1` samples of `f` on `[start, end]`.
    pub fn from_fn<F: Fn(f64) -> f64>(start: f64, end: f64, n: usize, f: F) -> Result<Self> {
        if !(end > start) || n == 0 {
            return Err(Error::invalid(format!("need start < end and n > 0, got [{start}, {end}], n = {n}")));
        }
        let step = (end - start) / n as f64;
        Self::new(start, step, (0..=n).map(|k| f(start + k as f64 * step)).collect())
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn end(&self) -> f64 {
        self.r(self.values.len() - 1)
    }

    pub fn r(&self, k: usize) -> f64 {
        self.start + k as f64 * self.step
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["r", "value"])?;
        for (k, v) in self.values.iter().enumerate() {
            w.write_record([fmt_value(self.r(k)), fmt_value(*v)])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a two-column `r,value` CSV; the radii must be uniformly spaced.
    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(input);
        let mut radii = Vec::new();
        let mut values = Vec::new();
        for (line, rec) in rd.records().enumerate() {
            let rec = rec?;
            if rec.len() != 2 {
                return Err(Error::Parse(format!("row {}: expected 2 columns, got {}", line + 2, rec.len())));
            }
            let parse = |s: &str| -> Result<f64> {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("row {}: {s:?}: {e}", line + 2)))
            };
            radii.push(parse(&rec[0])?);
            values.push(parse(&rec[1])?);
        }
        if radii.len() < 2 {
            return Err(Error::Parse("need at least two samples".into()));
        }
        let step = (radii[radii.len() - 1] - radii[0]) / (radii.len() - 1) as f64;
        for (k, &r) in radii.iter().enumerate() {
            let expect = radii[0] + k as f64 * step;
            if (r - expect).abs() > 1e-9 * step.max(r.abs()) {
                return Err(Error::Parse(format!("radii are not uniformly spaced at r = {r}")));
            }
        }
        Self::new(radii[0], step, values)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?)
    }

    fn index_of(&self, r: f64) -> Option<usize> {
        let pos = (r - self.start) / self.step;
        let k = pos.round();
        ((pos - k).abs() <= 1e-9 * pos.abs().max(1.0) && k >= 0.0 && (k as usize) < self.values.len())
            .then_some(k as usize)
    }
}

/// First sampled radius at which the inequality fails.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub r: f64,
    /// `H` itself is infinite there: the function ceased to exist.
    pub breakdown: bool,
}

/// Cumulative `J` on the samples from `t₁` on, together with the index of `t₁`.
fn cumulative_j(h: &SampledFunction, params: &GronwallParams) -> Result<(usize, Vec<f64>)> {
    let k1 = h.index_of(params.t1).ok_or_else(|| {
        Error::invalid(format!(
            "t1 = {} is not a sample point of [{}, {}] with step {}",
            params.t1,
            h.start(),
            h.end(),
            h.step()
        ))
    })?;
    for (k, &v) in h.values.iter().enumerate().skip(k1) {
        if v.is_nan() {
            return Err(Error::invalid(format!("H is NaN at r = {}", h.r(k))));
        }
        if v < 0.0 {
            return Err(Error::HypothesisViolated(format!("H({}) = {v} is negative", h.r(k))));
        }
        if v == 0.0 && k > k1 {
            return Err(Error::HypothesisViolated(format!("H({}) = 0 but H must be positive for r > t1", h.r(k))));
        }
    }
    let singular = params.t1 == params.t0 && params.b < 0.0;
    let n = h.len() - k1;
    let mut j = vec![0.0; n];
    for m in 1..n {
        let (k, r) = (k1 + m, h.r(k1 + m));
        let cell = if m == 1 && singular {
            if params.b > -1.0 {
                let d = r - params.t0;
                h.values[k].powf(params.a) * d.powf(params.b + 1.0) / (params.b + 1.0)
            } else {
                0.0
            }
        } else {
            let r0 = h.r(k - 1);
            0.5 * h.step
                * (h.values[k - 1].powf(params.a) * params.weight(r0) + h.values[k].powf(params.a) * params.weight(r))
        };
        j[m] = j[m - 1] + cell;
    }
    Ok((k1, j))
}

fn first_violation(h: &SampledFunction, params: &GronwallParams, k1: usize, j: &[f64]) -> Option<Violation> {
    for (m, &jm) in j.iter().enumerate() {
        let v = h.values[k1 + m];
        let r = h.r(k1 + m);
        if v.is_infinite() {
            return Some(Violation { r, breakdown: true });
        }
        let tol = 1e-12 * v.abs().max(1.0);
        if v < params.c * jm - tol {
            return Some(Violation { r, breakdown: false });
        }
    }
    None
}

/// Smallest sampled `r ≥ t₁` with `H(r) < C·J(r) − tol`, or an infinite
/// sample (`H` ceased to exist there).
pub fn find_violation(h: &SampledFunction, params: &GronwallParams) -> Result<Option<Violation>> {
    let (k1, j) = cumulative_j(h, params)?;
    Ok(first_violation(h, params, k1, &j))
}

/// Radius of the first violation, if any.
pub fn check_inequality(h: &SampledFunction, params: &GronwallParams) -> Result<Option<f64>> {
    Ok(find_violation(h, params)?.map(|v| v.r))
}

/// Radius beyond which the inequality cannot hold, given `J1 = J(t₁+1)`.
pub fn failure_radius(params: &GronwallParams, j1: f64) -> Result<f64> {
    let ln_gap = ln_failure_gap(params, j1)?;
    Ok(params.t0 + ln_gap.exp())
}

/// `ln(r* − t₀)`, finite even when `r*` itself overflows.
pub fn ln_failure_gap(params: &GronwallParams, j1: f64) -> Result<f64> {
    if params.b < -1.0 {
        return Err(Error::ExponentBelowMinusOne(params.b));
    }
    if !(j1 > 0.0) {
        return Err(Error::invalid(format!("J(t1+1) must be positive, got {j1}")));
    }
    let ln_len = (params.t1 + 1.0 - params.t0).ln();
    if j1.is_infinite() {
        return Ok(ln_len);
    }
    let (a, c) = (params.a, params.c);
    let ln_x = (1.0 - a) * j1.ln() - (a - 1.0).ln() - a * c.ln();
    if params.b == -1.0 {
        return Ok(ln_len + ln_x.exp());
    }
    let beta = params.b + 1.0;
    let ln_y = beta.ln() + ln_x - beta * ln_len;
    // ln(1 + y) without overflowing y
    let ln_1p_y = if ln_y > 30.0 {
        ln_y + (-ln_y).exp().ln_1p()
    } else {
        ln_y.exp().ln_1p()
    };
    Ok(ln_len + ln_1p_y / beta)
}

/// Outcome of [`certify`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GronwallCertificate {
    #[serde(flatten)]
    pub params: GronwallParams,
    #[serde(rename = "J1")]
    pub j1: f64,
    pub r_star: f64,
    /// `ln(r* − t₀)`; stays finite when `r*` does not fit in a double.
    pub ln_r_star_gap: f64,
    pub violation_found_at: Option<f64>,
    #[serde(skip)]
    pub breakdown: bool,
}

impl GronwallCertificate {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Computes `J(t₁+1)` and `r*` from the samples and checks that the
/// inequality fails no later than one sample step past `r*`.
pub fn certify(h: &SampledFunction, params: &GronwallParams) -> Result<GronwallCertificate> {
    let (k1, j) = cumulative_j(h, params)?;
    let violation = first_violation(h, params, k1, &j);
    let target = params.t1 + 1.0;
    let j1 = {
        let pos = (target - params.t1) / h.step();
        let m = pos.floor() as usize;
        if m + 1 < j.len() {
            let w = pos - m as f64;
            (1.0 - w) * j[m] + w * j[m + 1]
        } else if (pos - m as f64).abs() < 1e-9 && m < j.len() {
            j[m]
        } else {
            match violation {
                Some(v) if v.breakdown => f64::INFINITY,
                _ => {
                    return Err(Error::ExtendWindow {
                        r_star: target,
                        window_end: h.end(),
                    })
                }
            }
        }
    };
    let j1 = if violation.is_some_and(|v| v.breakdown && v.r <= target) {
        f64::INFINITY
    } else {
        j1
    };
    let ln_r_star_gap = ln_failure_gap(params, j1)?;
    let r_star = params.t0 + ln_r_star_gap.exp();
    match violation {
        None if h.end() < r_star => Err(Error::ExtendWindow {
            r_star,
            window_end: h.end(),
        }),
        None => Err(Error::CertificateFailed(format!(
            "no violation up to r = {} although r* = {r_star}",
            h.end()
        ))),
        Some(v) if v.r > r_star + h.step() => Err(Error::CertificateFailed(format!(
            "first violation at r = {} lies beyond r* = {r_star} plus one step",
            v.r
        ))),
        Some(v) => Ok(GronwallCertificate {
            params: *params,
            j1,
            r_star,
            ln_r_star_gap,
            violation_found_at: Some(v.r),
            breakdown: v.breakdown,
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn params(c: f64, a: f64, b: f64, t0: f64, t1: f64) -> GronwallParams {
        GronwallParams::new(c, a, b, t0, t1).unwrap()
    }

    #[test]
    fn closed_form_radii() {
        let r = failure_radius(&params(1.0, 2.0, 0.0, 0.0, 0.0), 1.0).unwrap();
        assert!((r - 2.0).abs() <= 1e-12);
        let r = failure_radius(&params(1.0, 2.0, -1.0, 0.0, 0.0), 1.0).unwrap();
        assert!((r - std::f64::consts::E).abs() <= 1e-12 * r);
        let r = failure_radius(&params(1.0, 2.0, 0.0, 0.0, 0.0), 0.2).unwrap();
        assert!((r - 6.0).abs() <= 1e-12 * 6.0);
        let r = failure_radius(&params(1.0, 2.0, 0.0, 0.0, 0.0), 1e9).unwrap();
        assert!(r > 1.0 && r - 1.0 < 1e-8);
        assert_eq!(failure_radius(&params(1.0, 2.0, 0.0, 0.0, 0.0), f64::INFINITY).unwrap(), 1.0);
        let huge = ln_failure_gap(&params(1.0, 2.0, 0.0, 0.0, 0.0), 1e-300).unwrap();
        assert!((huge - 300.0 * 10f64.ln()).abs() < 1e-9);
        // r* overflows, its logarithm does not
        let p = params(1e-6, 1.5, -0.99, 0.0, 0.0);
        assert!(failure_radius(&p, 0.1).unwrap().is_infinite());
        assert!(ln_failure_gap(&p, 0.1).unwrap().is_finite());
    }

    #[test]
    fn rejects_invalid_inputs() {
        assert!(GronwallParams::new(0.0, 2.0, 0.0, 0.0, 0.0).is_err());
        assert!(GronwallParams::new(1.0, 1.0, 0.0, 0.0, 0.0).is_err());
        assert!(GronwallParams::new(1.0, 2.0, 0.0, 1.0, 0.0).is_err());
        let p = params(1.0, 2.0, -1.5, 0.0, 1.0);
        assert!(matches!(failure_radius(&p, 1.0), Err(Error::ExponentBelowMinusOne(_))));
        assert!(failure_radius(&params(1.0, 2.0, 0.0, 0.0, 0.0), 0.0).is_err());
    }

    #[test]
    fn constant_function_fails_just_after_one() {
        let h = SampledFunction::from_fn(0.0, 3.0, 3000, |_| 1.0).unwrap();
        let r = check_inequality(&h, &params(1.0, 2.0, 0.0, 0.0, 0.0)).unwrap().unwrap();
        assert!(r > 1.0 && r <= 1.0 + 2e-3, "r = {r}");
    }

    #[test]
    fn exponential_matches_scalar_root() {
        // first r with e^r < (2/3)(e^{1.5 r} − 1)
        let g = |r: f64| r.exp() - (2.0 / 3.0) * ((1.5 * r).exp() - 1.0);
        let (mut lo, mut hi) = (0.5, 2.0);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if g(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert!((lo - 1.182).abs() < 1e-3, "root {lo}");
        let n = 20_000;
        let h = SampledFunction::from_fn(0.0, 2.0, n, f64::exp).unwrap();
        let r = check_inequality(&h, &params(1.0, 1.5, 0.0, 0.0, 0.0)).unwrap().unwrap();
        assert!((r - lo).abs() <= 3.0 * 2.0 / n as f64, "{r} vs {lo}");
    }

    #[test]
    fn tiny_constant_gives_no_violation_in_a_short_window() {
        let h = SampledFunction::from_fn(0.0, 5.0, 500, |r| 1.0 + r).unwrap();
        assert_eq!(check_inequality(&h, &params(1e-9, 2.0, 0.0, 0.0, 0.0)).unwrap(), None);
    }

    #[test]
    fn zero_and_negative_functions_violate_the_hypothesis() {
        let zero = SampledFunction::from_fn(0.0, 5.0, 50, |_| 0.0).unwrap();
        let p = params(1.0, 2.0, 0.0, 0.0, 0.0);
        assert!(matches!(check_inequality(&zero, &p), Err(Error::HypothesisViolated(_))));
        assert!(matches!(certify(&zero, &p), Err(Error::HypothesisViolated(_))));
        let neg = SampledFunction::from_fn(0.0, 5.0, 50, |r| 1.0 - r).unwrap();
        assert!(matches!(check_inequality(&neg, &p), Err(Error::HypothesisViolated(_))));
    }

    #[test]
    fn square_certificate() {
        let h = SampledFunction::from_fn(0.0, 8.0, 80_000, |r| r * r).unwrap();
        let cert = certify(&h, &params(1.0, 2.0, 0.0, 0.0, 0.0)).unwrap();
        assert!((cert.j1 - 0.2).abs() < 1e-6, "{cert:?}");
        assert!((cert.r_star - 6.0).abs() < 1e-4);
        let v = cert.violation_found_at.unwrap();
        assert!(v <= cert.r_star);
        // brute force: r² < r⁵/5 first for r > 5^{1/3}
        assert!((v - 5f64.powf(1.0 / 3.0)).abs() < 1e-3, "v = {v}");
        let json: serde_json::Value = serde_json::from_str(&cert.to_json().unwrap()).unwrap();
        for key in ["C", "a", "b", "t0", "t1", "J1", "r_star", "violation_found_at"] {
            assert!(json.get(key).is_some(), "missing {key}");
        }
    }

    #[test]
    fn short_window_asks_for_extension() {
        let h = SampledFunction::from_fn(0.0, 4.0, 4000, |r| 1.0 + r).unwrap();
        let err = certify(&h, &params(1e-3, 2.0, 0.0, 0.0, 0.0)).unwrap_err();
        assert!(matches!(err, Error::ExtendWindow { .. }), "{err:?}");
    }

    #[test]
    fn infinite_samples_count_as_breakdown() {
        let h = SampledFunction::from_fn(0.0, 4.0, 400, |r| if r < 1.5 { 1e-3 } else { f64::INFINITY }).unwrap();
        let cert = certify(&h, &params(1.0, 2.0, 0.0, 0.0, 0.0)).unwrap();
        assert!(cert.breakdown);
        assert!(cert.violation_found_at.unwrap() >= 1.5 - 1e-12);
    }

    #[test]
    fn exponent_below_minus_one_has_global_solutions() {
        // H ≡ 1: C ∫_1^r α^{-3} dα < C/2 < 1 for every r
        let h = SampledFunction::from_fn(1.0, 1e4, 200_000, |_| 1.0).unwrap();
        let p = params(1.5, 2.0, -3.0, 0.0, 1.0);
        assert_eq!(check_inequality(&h, &p).unwrap(), None);
        assert!(matches!(certify(&h, &p), Err(Error::ExponentBelowMinusOne(_))));
    }

    #[test]
    fn csv_round_trip() {
        let h = SampledFunction::from_fn(0.5, 2.5, 8, |r| r * r).unwrap();
        let mut buf = Vec::new();
        h.write_csv(&mut buf).unwrap();
        let back = SampledFunction::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back.len(), h.len());
        assert!((back.step() - h.step()).abs() < 1e-15);
        assert_eq!(back.values(), h.values());
        assert!(SampledFunction::read_csv("r,value\n0,1\n1,1\n3,1\n".as_bytes()).is_err());
    }

    proptest! {
        #[test]
        fn r_star_is_monotone(
            c in 0.1f64..10.0, a in 1.05f64..3.0, b in -1.0f64..2.0, j1 in 0.01f64..10.0,
            t0 in -2.0f64..2.0, gap in 0.0f64..3.0, factor in 1.01f64..3.0,
        ) {
            let p = params(c, a, b, t0, t0 + gap);
            let r = failure_radius(&p, j1).unwrap();
            prop_assert!(r > p.t1 + 1.0);
            let bigger_c = failure_radius(&params(c * factor, a, b, t0, t0 + gap), j1).unwrap();
            let bigger_j = failure_radius(&p, j1 * factor).unwrap();
            let bigger_b = failure_radius(&params(c, a, b + (factor - 1.0), t0, t0 + gap), j1).unwrap();
            prop_assert!(bigger_c <= r);
            prop_assert!(bigger_j <= r);
            prop_assert!(bigger_b <= r * (1.0 + 1e-12));
        }

        #[test]
        fn log_form_is_the_limit(c in 0.5f64..5.0, a in 1.2f64..3.0, j1 in 0.5f64..5.0, t0 in -1.0f64..1.0) {
            let at = failure_radius(&params(c, a, -1.0, t0, t0), j1).unwrap();
            let near = failure_radius(&params(c, a, -1.0 + 1e-8, t0, t0), j1).unwrap();
            prop_assert!(((at - near) / at).abs() < 1e-6, "{} vs {}", at, near);
        }

        #[test]
        fn inequality_cannot_hold_past_r_star(
            c in 1.0f64..5.0, a in 1.2f64..3.0, b in -1.0f64..2.0, family in 0usize..3, k in 1.0f64..4.0,
        ) {
            // polynomial, exponential and shifted power families
            let f = move |r: f64| match family {
                0 => r.powf(k),
                1 => (0.5 * k * r).exp(),
                _ => (1.0 + r).powf(k) - 1.0,
            };
            let p = params(c, a, b, 0.0, 0.0);
            let probe = SampledFunction::from_fn(0.0, 1.0, 2000, f).unwrap();
            let (_, j) = cumulative_j(&probe, &p).unwrap();
            let r_star = failure_radius(&p, j[j.len() - 1]).unwrap();
            prop_assume!(r_star < 1e4);
            let end = r_star * 1.01 + 1.0;
            let n = 200_000;
            let h = SampledFunction::from_fn(0.0, end, n, f).unwrap();
            let cert = certify(&h, &p);
            prop_assert!(cert.is_ok(), "{:?} with r* ~ {}", cert, r_star);
            let cert = cert.unwrap();
            prop_assert!(cert.violation_found_at.unwrap() <= cert.r_star + h.step());
        }
    }
}
