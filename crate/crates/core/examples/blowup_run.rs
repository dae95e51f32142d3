//! Solves u_tt - Δu = u² with a bump of velocity data and reports the
//! blow-up time on two grids.

use semilinear_blowup::spherical_means::RadialProfile;
use semilinear_blowup::wave_solver::{detect_blowup_time, solve_march, CharGrid, Problem};

fn main() -> semilinear_blowup::Result<()> {
    let problem = Problem::new(2.0, 1.0, RadialProfile::zero(), RadialProfile::bump(10.0, 1.0))?;
    for cells in [16.0, 32.0] {
        let grid = CharGrid::for_support(problem.source_radius(), 1.0 / cells, 20.0)?;
        let field = solve_march(&problem, &grid, 1e8)?;
        let fit = detect_blowup_time(&field);
        println!(
            "h = 1/{cells}: status {}, t_b = {:?}, fitted t_b = {:?}",
            field.status.label(),
            field.status.blowup_time(),
            fit.map(|f| f.fitted_t_b)
        );
    }
    Ok(())
}
