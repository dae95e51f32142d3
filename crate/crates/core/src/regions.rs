//! Regions of the characteristic `(λ, s)` quarter-plane and radial light cones.
//!
//! Every region is described by strips in the 45° coordinates
//! `α = λ + s`, `β = s − λ`, in which the sets used by the lower-bound
//! argument become axis-aligned. Boundaries are closed everywhere.
//!
//! | kind | definition |
//! |------|------------|
//! | `R(r,t)` | `0 ≤ s ≤ t`, `|r − t + s| ≤ λ ≤ r + t − s` |
//! | `T(t₂,δ)` | `t₂+δ ≤ α ≤ t₂+2δ`, `β ≤ t₂`, `s ≥ 0` |
//! | `Q(t₂,δ)` | `α ≥ t₂+2δ`, `t₂ ≤ β ≤ t₂+δ` |
//! | `Qrt(r,t,t₂,δ)` | `t−r ≤ α ≤ t+r`, `t₂ ≤ β ≤ t₂+δ` |
//! | `Brt(r,t,t*)` | `t−r ≤ α ≤ t+r`, `t* ≤ β ≤ t−r` |
//! | `Σ(t*)` | `0 ≤ r ≤ t − t*` (point read as `(r,t)`) |
//! | `Σ′(t*)` | `t* ≤ t ≤ r` (point read as `(α,β)`) |

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Maps `(λ, s)` to characteristic coordinates `(α, β) = (λ + s, s − λ)`.
#[inline]
pub fn to_characteristic(lambda: f64, s: f64) -> (f64, f64) {
    (lambda + s, s - lambda)
}

/// Inverse of [`to_characteristic`].
#[inline]
pub fn from_characteristic(alpha: f64, beta: f64) -> (f64, f64) {
    (0.5 * (alpha - beta), 0.5 * (alpha + beta))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Forward,
    Backward,
}

/// Solid light cone with apex on a ray through the origin.
///
/// Points are radial coordinates on the same ray as the apex, so the spatial
/// distance reduces to `|r − apex_r|`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cone {
    pub apex_r: f64,
    pub apex_t: f64,
    pub direction: Direction,
}

impl Cone {
    pub fn new(apex_r: f64, apex_t: f64, direction: Direction) -> Result<Self> {
        if !(apex_t >= 0.0) || !(apex_r >= 0.0) {
            return Err(Error::invalid(format!(
                "cone apex must satisfy apex_r >= 0, apex_t >= 0 (got {apex_r}, {apex_t})"
            )));
        }
        Ok(Cone {
            apex_r,
            apex_t,
            direction,
        })
    }

    pub fn forward(apex_r: f64, apex_t: f64) -> Result<Self> {
        Self::new(apex_r, apex_t, Direction::Forward)
    }

    pub fn backward(apex_r: f64, apex_t: f64) -> Result<Self> {
        Self::new(apex_r, apex_t, Direction::Backward)
    }

    pub fn contains(&self, r: f64, t: f64) -> bool {
        if t < 0.0 {
            return false;
        }
        let dist = (r - self.apex_r).abs();
        match self.direction {
            Direction::Forward => dist <= t - self.apex_t,
            Direction::Backward => dist <= self.apex_t - t,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Region {
    R { r: f64, t: f64 },
    T { t2: f64, delta: f64 },
    Q { t2: f64, delta: f64 },
    Qrt { r: f64, t: f64, t2: f64, delta: f64 },
    Brt { r: f64, t: f64, t_star: f64 },
    Sigma { t_star: f64 },
    SigmaPrime { t_star: f64 },
}

fn nonneg(x: f64) -> bool {
    x >= 0.0 && x.is_finite()
}

impl Region {
    pub fn r(r: f64, t: f64) -> Result<Self> {
        if !(r > 0.0 && r.is_finite()) || !nonneg(t) {
            return Err(Error::invalid(format!("R(r,t) needs r > 0, t >= 0 (got {r}, {t})")));
        }
        Ok(Region::R { r, t })
    }

    pub fn t(t2: f64, delta: f64) -> Result<Self> {
        check_t2_delta(t2, delta)?;
        Ok(Region::T { t2, delta })
    }

    pub fn q(t2: f64, delta: f64) -> Result<Self> {
        check_t2_delta(t2, delta)?;
        Ok(Region::Q { t2, delta })
    }

    pub fn qrt(r: f64, t: f64, t2: f64, delta: f64) -> Result<Self> {
        check_t2_delta(t2, delta)?;
        if !nonneg(r) || !nonneg(t) {
            return Err(Error::invalid(format!("Qrt needs r, t >= 0 (got {r}, {t})")));
        }
        Ok(Region::Qrt { r, t, t2, delta })
    }

    pub fn brt(r: f64, t: f64, t_star: f64) -> Result<Self> {
        if !nonneg(r) || !nonneg(t) || !(t_star > 0.0) {
            return Err(Error::invalid(format!(
                "Brt needs r, t >= 0 and t* > 0 (got {r}, {t}, {t_star})"
            )));
        }
        Ok(Region::Brt { r, t, t_star })
    }

    pub fn sigma(t_star: f64) -> Result<Self> {
        if !(t_star > 0.0 && t_star.is_finite()) {
            return Err(Error::invalid(format!("Sigma needs t* > 0 (got {t_star})")));
        }
        Ok(Region::Sigma { t_star })
    }

    pub fn sigma_prime(t_star: f64) -> Result<Self> {
        if !(t_star > 0.0 && t_star.is_finite()) {
            return Err(Error::invalid(format!("Sigma' needs t* > 0 (got {t_star})")));
        }
        Ok(Region::SigmaPrime { t_star })
    }

    /// Closed membership test. The point is `(λ, s)` for every kind except
    /// `Σ` (read as `(r, t)`) and `Σ′` (read as `(α, β)`).
    pub fn contains(&self, lambda: f64, s: f64) -> bool {
        if lambda < 0.0 || s < 0.0 {
            return false;
        }
        let (alpha, beta) = to_characteristic(lambda, s);
        match *self {
            Region::R { r, t } => s <= t && (r - t + s).abs() <= lambda && lambda <= r + t - s,
            Region::T { t2, delta } => t2 + delta <= alpha && alpha <= t2 + 2.0 * delta && beta <= t2,
            Region::Q { t2, delta } => t2 + 2.0 * delta <= alpha && t2 <= beta && beta <= t2 + delta,
            Region::Qrt { r, t, t2, delta } => {
                t - r <= alpha && alpha <= t + r && t2 <= beta && beta <= t2 + delta
            }
            Region::Brt { r, t, t_star } => {
                t - r <= alpha && alpha <= t + r && t_star <= beta && beta <= t - r
            }
            Region::Sigma { t_star } => lambda <= s - t_star,
            Region::SigmaPrime { t_star } => t_star <= s && s <= lambda,
        }
    }

    pub fn is_bounded(&self) -> bool {
        matches!(
            self,
            Region::R { .. } | Region::T { .. } | Region::Qrt { .. } | Region::Brt { .. }
        )
    }

    /// Exact area in the `(λ, s)` plane.
    ///
    /// Strip intersections are rectangles in `(α, β)`; the map
    /// `(α, β) → (λ, s)` has Jacobian `1/2`.
    pub fn area(&self) -> Result<f64> {
        match *self {
            Region::R { r, t } => Ok(if r >= t { t * t } else { 2.0 * r * t - r * r }),
            Region::T { t2, delta } => Ok(delta * t2 + 0.75 * delta * delta),
            Region::Qrt { r, t, t2, delta } => {
                let t_star = t2 + 2.0 * delta;
                if t - r < t_star {
                    return Err(Error::invalid(format!(
                        "Qrt area needs (r,t) in Sigma(t*={t_star}), got ({r}, {t})"
                    )));
                }
                Ok(r * delta)
            }
            Region::Brt { r, t, t_star } => {
                if t - r < t_star {
                    return Err(Error::invalid(format!(
                        "Brt needs (r,t) in Sigma(t*={t_star}), got ({r}, {t})"
                    )));
                }
                Ok(r * (t - r - t_star))
            }
            Region::Q { .. } | Region::Sigma { .. } | Region::SigmaPrime { .. } => {
                Err(Error::UnboundedRegion(format!("{self:?}")))
            }
        }
    }

    /// Bounding box `([α_lo, α_hi], [β_lo, β_hi])` of a bounded region.
    pub fn characteristic_box(&self) -> Result<((f64, f64), (f64, f64))> {
        match *self {
            Region::R { r, t } => Ok(((t - r, t + r), (-(t + r), t - r))),
            Region::T { t2, delta } => Ok(((t2 + delta, t2 + 2.0 * delta), (-(t2 + 2.0 * delta), t2))),
            Region::Qrt { r, t, t2, delta } => Ok(((t - r, t + r), (t2, t2 + delta))),
            Region::Brt { r, t, t_star } => Ok(((t - r, t + r), (t_star, (t - r).max(t_star)))),
            _ => Err(Error::UnboundedRegion(format!("{self:?}"))),
        }
    }
}

fn check_t2_delta(t2: f64, delta: f64) -> Result<()> {
    if !nonneg(t2) || !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::invalid(format!("need t2 >= 0 and delta > 0 (got {t2}, {delta})")));
    }
    Ok(())
}

/// Radical-inverse (van der Corput) value of `index` in `base`.
pub(crate) fn radical_inverse(mut index: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut value = 0.0;
    while index > 0 {
        value += f * (index % base) as f64;
        index /= base;
        f *= inv;
    }
    value
}

/// Sampled inclusion test `inner ⊂ outer`.
///
/// Draws a deterministic 2-D Halton sequence over the characteristic bounding
/// box of `inner`, keeps the first `samples` points that fall in `inner` and
/// checks each against `outer`. A degenerate (zero-area) `inner` that yields
/// no samples is vacuously contained.
pub fn subset_check(inner: &Region, outer: &Region, samples: usize) -> Result<bool> {
    if samples == 0 {
        return Err(Error::invalid("subset_check needs samples >= 1"));
    }
    let ((a_lo, a_hi), (b_lo, b_hi)) = inner.characteristic_box()?;
    let max_draws = 64 * samples as u64;
    let mut accepted = 0usize;
    for k in 1..=max_draws {
        let alpha = a_lo + (a_hi - a_lo) * radical_inverse(k, 2);
        let beta = b_lo + (b_hi - b_lo) * radical_inverse(k, 3);
        let (lambda, s) = from_characteristic(alpha, beta);
        if !inner.contains(lambda, s) {
            continue;
        }
        if !outer.contains(lambda, s) {
            return Ok(false);
        }
        accepted += 1;
        if accepted == samples {
            break;
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn r_region_boundary_and_exterior() {
        let r = Region::r(1.0, 1.0).unwrap();
        assert!(r.contains(1.0, 0.0));
        let r = Region::r(1.0, 3.0).unwrap();
        assert!(!r.contains(0.5, 0.0));
    }

    #[test]
    fn qrt_membership_on_strip_boundary() {
        let q = Region::qrt(1.0, 10.0, 2.0, 0.5).unwrap();
        assert!(q.contains(3.4, 5.6));
        assert!(!q.contains(3.4, 5.0));
    }

    #[test]
    fn closed_form_areas() {
        assert_eq!(Region::qrt(1.0, 10.0, 2.0, 0.5).unwrap().area().unwrap(), 0.5);
        assert_eq!(Region::qrt(0.0, 10.0, 2.0, 1.0).unwrap().area().unwrap(), 0.0);
        assert_eq!(Region::brt(2.0, 12.0, 5.0).unwrap().area().unwrap(), 10.0);
        assert_eq!(Region::t(0.0, 1.0).unwrap().area().unwrap(), 0.75);
        assert!(matches!(
            Region::q(0.0, 1.0).unwrap().area(),
            Err(Error::UnboundedRegion(_))
        ));
        assert!(Region::sigma(1.0).unwrap().area().is_err());
    }

    #[test]
    fn constructors_reject_invalid() {
        assert!(Region::r(0.0, 1.0).is_err());
        assert!(Region::t(0.0, 0.0).is_err());
        assert!(Region::sigma(0.0).is_err());
        assert!(Cone::forward(0.0, -1.0).is_err());
    }

    #[test]
    fn subset_examples() {
        let qrt = Region::qrt(1.0, 10.0, 2.0, 0.5).unwrap();
        let r = Region::r(1.0, 10.0).unwrap();
        assert!(subset_check(&qrt, &r, 10_000).unwrap());
        let brt = Region::brt(2.0, 12.0, 5.0).unwrap();
        assert!(subset_check(&brt, &Region::sigma(5.0).unwrap(), 10_000).unwrap());
        assert!(!subset_check(&r, &qrt, 10_000).unwrap());
        assert!(subset_check(&Region::q(0.0, 1.0).unwrap(), &r, 10).is_err());
    }

    #[test]
    fn r_region_is_not_monotone_in_t_alone() {
        // The λ-hole |r − t + s| opens as t grows.
        let r11 = Region::r(1.0, 1.0).unwrap();
        let r13 = Region::r(1.0, 3.0).unwrap();
        assert!(!subset_check(&r11, &r13, 1_000).unwrap());
    }

    #[test]
    fn cones() {
        let fwd = Cone::forward(0.0, 1.0).unwrap();
        assert!(fwd.contains(0.0, 1.0));
        assert!(fwd.contains(1.0, 2.0));
        assert!(!fwd.contains(1.5, 2.0));
        let bwd = Cone::backward(0.0, 1.0).unwrap();
        assert!(bwd.contains(0.5, 0.5));
        assert!(!bwd.contains(0.5, 0.6));
        assert!(!bwd.contains(0.0, 1.5));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn subset_relations_on_sigma(
            t2 in 0.0f64..3.0,
            delta in 0.05f64..1.0,
            r in 0.01f64..4.0,
            extra in 0.0f64..4.0,
        ) {
            let t_star = t2 + 2.0 * delta;
            let t = r + t_star + extra;
            let qrt = Region::qrt(r, t, t2, delta).unwrap();
            let brt = Region::brt(r, t, t_star).unwrap();
            let rr = Region::r(r, t).unwrap();
            prop_assert!(subset_check(&qrt, &rr, 10_000).unwrap());
            prop_assert!(subset_check(&brt, &rr, 10_000).unwrap());
            prop_assert!(subset_check(&qrt, &Region::q(t2, delta).unwrap(), 10_000).unwrap());
            prop_assert!(subset_check(&brt, &Region::sigma(t_star).unwrap(), 10_000).unwrap());
        }

        #[test]
        fn fixed_region_t_inside_r_for_q_points(
            t2 in 0.0f64..3.0,
            delta in 0.05f64..1.0,
            u in 0.0f64..1.0,
            a in 0.0f64..5.0,
        ) {
            // (r,t) ∈ Q: α = t + r ≥ t₂+2δ, β = t − r ∈ [t₂, t₂+δ]
            let alpha = t2 + 2.0 * delta + a;
            let beta = t2 + u * delta;
            let (r, t) = from_characteristic(alpha, beta);
            let tr = Region::t(t2, delta).unwrap();
            prop_assert!(subset_check(&tr, &Region::r(r, t).unwrap(), 2_000).unwrap());
        }

        #[test]
        fn r_region_grows_along_outgoing_characteristic(
            r in 0.1f64..3.0,
            t in 0.0f64..3.0,
            d in 0.0f64..2.0,
        ) {
            // Fixed β = t − r, growing α = t + r.
            let small = Region::r(r, t).unwrap();
            let big = Region::r(r + d, t + d).unwrap();
            prop_assert!(subset_check(&small, &big, 2_000).unwrap());
        }
    }
}
