//! Exponent bookkeeping for the final weighted integral inequality.

use crate::{Error, Result};

/// `q = p/(p−1)`, the exponent of the weight `(α−β)^q` in `G`.
pub fn weight_exponent(p: f64) -> f64 {
    p / (p - 1.0)
}

/// `s(p,ε) = (p−1−ε)(2−p+q) + 2 − 2p` with `q = p/(p−1)`.
pub fn s_exponent(p: f64, eps: f64) -> f64 {
    let q = weight_exponent(p);
    (p - 1.0 - eps) * (2.0 - p + q) + 2.0 - 2.0 * p
}

/// The expanded form `−p² + 2p − ε(2 − p + p/(p−1))`.
pub fn s_exponent_expanded(p: f64, eps: f64) -> f64 {
    -p * p + 2.0 * p - eps * (2.0 - p + p / (p - 1.0))
}

/// Near-maximal `ε ∈ (0, p−1)` with `s(p,ε) ≥ −1`.
///
/// The largest admissible value is `ε* = (2p − p² + 1)/(2 − p + p/(p−1))`;
/// `0.99·min(ε*, p−1)` is returned. `None` when no positive `ε` works,
/// i.e. for `p ≥ 1 + √2`.
pub fn choose_epsilon(p: f64) -> Result<Option<f64>> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::invalid(format!("exponent p must exceed 1, got {p}")));
    }
    let numerator = 2.0 * p - p * p + 1.0;
    let k = 2.0 - p + p / (p - 1.0);
    if !(numerator > 0.0 && k > 0.0) {
        return Ok(None);
    }
    let eps_star = numerator / k;
    if eps_star <= 1e-12 {
        return Ok(None);
    }
    Ok(Some(0.99 * eps_star.min(p - 1.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const CRITICAL: f64 = 1.0 + std::f64::consts::SQRT_2;

    #[test]
    fn reference_values() {
        assert_eq!(s_exponent(2.0, 0.0), 0.0);
        assert!((s_exponent(CRITICAL, 0.0) + 1.0).abs() < 1e-12);
        assert!((s_exponent(2.0, 0.5) + 1.0).abs() < 1e-15);
        assert_eq!(choose_epsilon(2.0).unwrap(), Some(0.495));
        assert_eq!(choose_epsilon(2.5).unwrap(), None);
        assert_eq!(choose_epsilon(CRITICAL).unwrap(), None);
        assert!(choose_epsilon(1.0).is_err());
    }

    #[test]
    fn chosen_epsilon_is_admissible_below_the_critical_power() {
        for k in 1..=140 {
            let p = 1.0 + 0.01 * k as f64;
            let eps = choose_epsilon(p).unwrap().expect("subcritical p");
            assert!(eps > 0.0 && eps < p - 1.0);
            assert!(s_exponent(p, eps) >= -1.0, "p = {p}");
        }
    }

    proptest! {
        #[test]
        fn q_collapses_the_weight(p in 1.0001f64..CRITICAL) {
            let q = weight_exponent(p);
            prop_assert!(((1.0 - q * p + q) - (1.0 - p)).abs() <= 1e-9 * q * p);
        }

        #[test]
        fn both_forms_agree_and_decrease_in_eps(p in 1.01f64..4.0, e1 in 0.0f64..1.0, e2 in 0.0f64..1.0) {
            let (lo, hi) = if e1 < e2 { (e1, e2) } else { (e2, e1) };
            let a = s_exponent(p, lo);
            prop_assert!((a - s_exponent_expanded(p, lo)).abs() <= 1e-10 * (1.0 + a.abs()));
            if hi > lo + 1e-9 && p < 2.0 + std::f64::consts::SQRT_2 {
                prop_assert!(s_exponent(p, hi) < a);
            }
        }

        #[test]
        fn slack_at_zero_iff_subcritical(p in 1.001f64..4.0) {
            prop_assume!((p - CRITICAL).abs() > 1e-9);
            prop_assert_eq!(s_exponent(p, 0.0) > -1.0, p < CRITICAL);
        }
    }
}
