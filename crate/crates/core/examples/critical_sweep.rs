//! Blow-up across exponents around the critical value 1 + √2.

use semilinear_blowup::cli::commands::run_sweep;
use semilinear_blowup::cli::config::{parse, SweepConfig};

fn main() -> semilinear_blowup::Result<()> {
    let (sweep, _): (SweepConfig, _) = parse(
        r#"{
            "p_values": [1.5, 2.0, 2.4, 3.0],
            "amplitudes": [5.0, 20.0],
            "base": {
                "problem": {"p": 2.0, "A": 1.0, "data": {"profile": "bump", "amplitude": 1.0, "rho": 1.0}},
                "grid": {"h": 0.0625, "t_max": 20.0}
            }
        }"#,
        &[],
    )?;
    let root = std::env::temp_dir().join("critical_sweep");
    let rows = run_sweep(&sweep, 4, &root)?;
    println!("{:>4} {:>6} {:>10} {:>8} {:>9}", "p", "amp", "status", "t_b", "s_margin");
    for r in rows {
        println!(
            "{:>4} {:>6} {:>10} {:>8} {:>9.3}",
            r.p,
            r.amplitude,
            r.status,
            r.t_b.map_or("-".into(), |t| format!("{t:.3}")),
            r.s_margin
        );
    }
    println!("table in {}", root.join("sweep.csv").display());
    Ok(())
}
