//! The integral inequality H(r) ≥ C ∫ (1 - t1/s)^b (s - t0)^b H(s)^a ds
//! cannot hold past r*: a function that keeps growing must violate it.

use semilinear_blowup::gronwall::{certify, failure_radius, GronwallParams, SampledFunction};

fn main() -> semilinear_blowup::Result<()> {
    for (c, a, b) in [(1.0, 2.0, 0.0), (1.0, 3.0, 0.0), (0.5, 1.5, -0.5)] {
        let params = GronwallParams::new(c, a, b, 0.0, 1.0)?;
        println!("C = {c}, a = {a}, b = {b}: r* = {:.6} for J1 = 1", failure_radius(&params, 1.0)?);
    }

    let params = GronwallParams::new(1.0, 2.0, 0.0, 0.0, 1.0)?;
    let h = SampledFunction::from_fn(1.0, 8.0, 70_001, |r| r * r)?;
    let cert = certify(&h, &params)?;
    println!(
        "H = r²: J1 = {:.4}, r* = {:.4}, first violation at r = {:?}",
        cert.j1, cert.r_star, cert.violation_found_at
    );
    Ok(())
}
