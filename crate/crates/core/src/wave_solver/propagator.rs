//! Free radial waves by d'Alembert's formula for `v = r·ū⁰`.

use crate::spherical_means::RadialProfile;
use crate::wave_solver::field::{CharGrid, RadialField};

/// Spherical mean `ū⁰` of the free wave with radial data `(f̄, ḡ)`.
///
/// `v = r·ū⁰` solves the 1-D wave equation with the odd extensions of
/// `r f̄(|r|)` and `r ḡ(|r|)` as data, so on the lattice
///
/// ```text
/// v(r,t) = ½[V₀(r+t) + V₀(r−t)] + ½[W(r+t) − W(|r−t|)],
/// ```
///
/// with `V₀(y) = y f̄(|y|)` and `W` the cumulative trapezoid of `y ḡ(y)`.
/// At `r = 0` the limit `f̄(t) + t f̄′(t) + t ḡ(t)` is used, `f̄′` by a
/// centred difference. Nodes with `|r − t| > ρ` are exactly zero.
pub fn linear_radial(f: &RadialProfile, g: &RadialProfile, grid: &CharGrid) -> RadialField {
    let h = grid.h();
    let top = grid.nr() + grid.nt() + 1;
    let v0: Vec<f64> = (0..=top).map(|k| k as f64 * h * f.eval(k as f64 * h)).collect();
    let mut w = vec![0.0; top + 1];
    let mut prev = 0.0;
    for k in 1..=top {
        let y = k as f64 * h;
        let cur = y * g.eval(y);
        w[k] = w[k - 1] + 0.5 * h * (prev + cur);
        prev = cur;
    }
    let support = f.support().max(g.support());
    let mut values = vec![0.0; grid.node_count()];
    for n in 0..=grid.nt() {
        let t = grid.t(n);
        values[grid.index(0, n)] = if t > support {
            0.0
        } else {
            let df = (f.eval(t + h) - f.eval((t - h).abs())) / (2.0 * h);
            f.eval(t) + t * df + t * g.eval(t)
        };
        for m in 1..=grid.nr() {
            let d = m.abs_diff(n);
            if d as f64 * h > support {
                continue;
            }
            let odd = if m >= n { v0[d] } else { -v0[d] };
            let v = 0.5 * (v0[m + n] + odd) + 0.5 * (w[m + n] - w[d]);
            values[grid.index(m, n)] = v / (m as f64 * h);
        }
    }
    let mut field = RadialField::from_parts(*grid, values, grid.nt() + 1).with_support(support);
    field.amplitude_scale = field.level_max.iter().copied().fold(0.0, f64::max);
    field
}
