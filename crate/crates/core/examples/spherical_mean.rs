//! Spherical means of an off-centre Gaussian against the closed form.

use semilinear_blowup::spherical_means::{spherical_mean, ScalarField3, SphereQuadrature};

fn main() -> semilinear_blowup::Result<()> {
    let (d, w) = (0.6_f64, 0.3_f64);
    let field = ScalarField3::new(d + 8.0 * w, move |x, _| {
        let q = (x[0] - d).powi(2) + x[1] * x[1] + x[2] * x[2];
        (-q / (w * w)).exp()
    })?;
    let exact = |r: f64| {
        if r == 0.0 {
            return (-d * d / (w * w)).exp();
        }
        let x = 2.0 * r * d / (w * w);
        (-(r - d).powi(2) / (w * w)).exp() * -(-2.0 * x).exp_m1() / (2.0 * x)
    };
    for degree in [8, 16, 32] {
        let quad = SphereQuadrature::product_gauss(degree);
        let err = (0..=20)
            .map(|k| 0.1 * k as f64)
            .map(|r| (spherical_mean(&field, r, 0.0, &quad) - exact(r)).abs())
            .fold(0.0, f64::max);
        println!("degree {degree:>2} ({:>4} nodes): max error {err:.3e}", quad.len());
    }
    Ok(())
}
