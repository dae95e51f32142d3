//! Evaluates the lower-bound chain on a computed blow-up solution.

use semilinear_blowup::diagnostics::{check_chain, select_t2_delta, ChainConfig};
use semilinear_blowup::spherical_means::RadialProfile;
use semilinear_blowup::wave_solver::{linear_radial, solve_march, CharGrid, Problem};

fn main() -> semilinear_blowup::Result<()> {
    let problem = Problem::new(2.0, 1.0, RadialProfile::zero(), RadialProfile::bump(10.0, 1.0))?;
    let grid = CharGrid::for_support(1.0, 1.0 / 32.0, 20.0)?;
    let field = solve_march(&problem, &grid, 1e8)?;
    let u0 = linear_radial(&problem.f, &problem.g, &grid);
    let (t2, delta) = select_t2_delta(&field, &u0)?;
    let cfg = ChainConfig::for_field(&field, t2, delta, None)?;
    let report = check_chain(&field, &cfg)?;

    println!("t2 = {t2}, delta = {delta}, M = {:.4e}, C0 = {:.4e}", report.m, report.c0);
    for table in &report.tables {
        println!(
            "{:<20} {:>7} points  min residual {:>11.3e}  {:?}",
            table.id, table.checked, table.min_residual, table.verdict
        );
    }
    println!("all hold: {}", report.all_hold);
    Ok(())
}
