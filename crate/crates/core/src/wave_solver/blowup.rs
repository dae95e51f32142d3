//! Blow-up time extraction and divergence-rate fit.

use serde::{Deserialize, Serialize};

use crate::wave_solver::field::RadialField;

/// Blow-up time of a field together with a fit of its level maxima
/// `max|ū|(t) ≈ c·(t_b′ − t)^γ` over the final growth phase.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlowupFit {
    /// Time at which the solver declared blow-up.
    pub t_b: f64,
    /// Root of the straight-line fit of `max^{−(p−1)/2}` against `t`.
    pub fitted_t_b: f64,
    /// Free least-squares exponent `γ`; the ODE rate is `−2/(p−1)`.
    pub fitted_exponent: f64,
    pub points: usize,
}

/// Levels whose maximum exceeds this multiple of the free-wave amplitude
/// form the fit window.
const WINDOW_FACTOR: f64 = 10.0;
const MIN_POINTS: usize = 5;

/// `None` unless the field blew up.
pub fn detect_blowup_time(field: &RadialField) -> Option<BlowupFit> {
    let t_b = field.status.blowup_time()?;
    let p = field.nonlinearity.map_or(2.0, |n| n.p);
    let grid = field.grid();
    let series: Vec<(f64, f64)> = field
        .level_max
        .iter()
        .enumerate()
        .map(|(j, &m)| (grid.t(j), m))
        .collect();
    let floor = WINDOW_FACTOR * field.amplitude_scale;
    let mut start = series.len();
    while start > 0 && series[start - 1].1 >= floor && series[start - 1].1 > 0.0 {
        start -= 1;
    }
    if series.len() - start < MIN_POINTS {
        start = series.len().saturating_sub(MIN_POINTS);
        while start < series.len() && series[start].1 <= 0.0 {
            start += 1;
        }
    }
    let window = &series[start..];
    if window.len() < 3 {
        return Some(BlowupFit {
            t_b,
            fitted_t_b: t_b,
            fitted_exponent: f64::NAN,
            points: window.len(),
        });
    }
    let t_last = window[window.len() - 1].0;
    let (a, b, _) = linear_fit(window.iter().map(|&(t, m)| (t, m.powf(-(p - 1.0) / 2.0))));
    let fitted_t_b = if b < 0.0 && (-a / b) > t_last { -a / b } else { t_b };
    let fitted_exponent = free_exponent(window, t_last, t_b.max(fitted_t_b));
    Some(BlowupFit {
        t_b,
        fitted_t_b,
        fitted_exponent,
        points: window.len(),
    })
}

/// Least squares `y = a + b x`; returns `(a, b, sse)`.
fn linear_fit<I: Iterator<Item = (f64, f64)>>(pts: I) -> (f64, f64, f64) {
    let pts: Vec<(f64, f64)> = pts.collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let b = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let a = my - b * mx;
    let sse = pts.iter().map(|p| (p.1 - a - b * p.0).powi(2)).sum();
    (a, b, sse)
}

/// Best slope of `log max` against `log(T′ − t)` over `T′ > t_last`.
fn free_exponent(window: &[(f64, f64)], t_last: f64, t_guess: f64) -> f64 {
    let span = (t_last - window[0].0).max(t_guess - t_last).max(1e-12);
    let fit = |gap: f64| {
        let tp = t_last + gap;
        linear_fit(window.iter().map(|&(t, m)| ((tp - t).ln(), m.ln())))
    };
    // log-spaced scan of the gap T′ − t_last, then golden refinement in log gap
    let (lo, hi) = ((span * 1e-6).ln(), (span * 10.0).ln());
    let steps = 400;
    let mut best = (f64::INFINITY, lo);
    for k in 0..=steps {
        let x = lo + (hi - lo) * k as f64 / steps as f64;
        let sse = fit(x.exp()).2;
        if sse < best.0 {
            best = (sse, x);
        }
    }
    let dx = (hi - lo) / steps as f64;
    let (mut a, mut b) = (best.1 - dx, best.1 + dx);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..60 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if fit(c.exp()).2 < fit(d.exp()).2 {
            b = d;
        } else {
            a = c;
        }
    }
    fit((0.5 * (a + b)).exp()).1
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spherical_means::RadialProfile;
    use crate::wave_solver::field::{CharGrid, FieldStatus};
    use crate::wave_solver::march::{solve_march, Problem};

    #[test]
    fn complete_field_has_no_blowup_time() {
        let grid = CharGrid::new(0.25, 2.0, 1.0).unwrap();
        assert!(detect_blowup_time(&RadialField::zeros(grid)).is_none());
    }

    #[test]
    fn synthetic_power_law_is_recovered() {
        // max = 6 (1.3 − t)^{-2}
        let grid = CharGrid::new(1.0 / 512.0, 1.0, 1.5).unwrap();
        let last = (1.29 * 512.0) as usize;
        let mut f = RadialField::from_fn(grid, |_, t| if t < 1.3 { 6.0 / ((1.3 - t) * (1.3 - t)) } else { 0.0 });
        f = f.with_nonlinearity(2.0, 1.0);
        f.level_max.truncate(last);
        f.amplitude_scale = 6.0 / (1.3 * 1.3);
        f.status = FieldStatus::BlownUp { t_b: grid.t(last) };
        let fit = detect_blowup_time(&f).unwrap();
        assert_eq!(fit.t_b, grid.t(last));
        assert!((fit.fitted_t_b - 1.3).abs() < 1e-9, "{fit:?}");
        assert!((fit.fitted_exponent + 2.0).abs() < 1e-6, "{fit:?}");
    }

    #[test]
    fn accessor_matches_status() {
        let pb = Problem::new(2.0, 1.0, RadialProfile::zero(), RadialProfile::bump(10.0, 1.0)).unwrap();
        let grid = CharGrid::for_support(1.0, 1.0 / 16.0, 20.0).unwrap();
        let u = solve_march(&pb, &grid, 1e8).unwrap();
        let fit = detect_blowup_time(&u).expect("blows up");
        assert_eq!(Some(fit.t_b), u.status.blowup_time());
        assert!(fit.fitted_t_b >= u.last_time());
        assert!(fit.t_b > 12.0 && fit.t_b < 18.0, "{fit:?}");
    }
}
