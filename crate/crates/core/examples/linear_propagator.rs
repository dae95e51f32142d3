//! Free radial wave from velocity data: the pulse leaves the origin and
//! `r·ū` travels along the light cone.

use semilinear_blowup::spherical_means::RadialProfile;
use semilinear_blowup::wave_solver::{linear_radial, CharGrid};

fn main() -> semilinear_blowup::Result<()> {
    let rho = 1.0;
    let grid = CharGrid::for_support(rho, 1.0 / 32.0, 6.0)?;
    let u0 = linear_radial(&RadialProfile::zero(), &RadialProfile::bump(1.0, rho), &grid);
    for j in (0..=grid.nt()).step_by(32) {
        let t = grid.t(j);
        let (i_peak, peak) = (0..=grid.nr())
            .map(|i| (i, grid.r(i) * u0.at(i, j)))
            .fold((0, 0.0_f64), |a, b| if b.1.abs() > a.1.abs() { b } else { a });
        let inside = if t > rho { u0.value_at(0.0, t)? } else { f64::NAN };
        println!(
            "t = {t:4.1}: max |r u| = {peak:.4} at r = {:.3}, u(0, t) = {inside:.2e}",
            grid.r(i_peak)
        );
    }
    Ok(())
}
