//! Spherical means of 3-D fields and radial profiles of initial data.
//!
//! The radial average of `h` is
//! `h̄(r,t) = (1/4π) ∫_{|ξ|=1} h(rξ, t) dS_ξ`, discretised with a product rule:
//! Gauss–Legendre in `cos θ` times the uniform (trapezoidal) rule in azimuth.

use std::f64::consts::PI;
use std::fmt;
use std::io::{Read, Write};
use std::sync::Arc;

use rayon::prelude::*;

use crate::io::fmt_value;
use crate::{Error, Result};

type Evaluator = dyn Fn([f64; 3], f64) -> f64 + Send + Sync;

/// A space-time scalar field on `R³ × [0, ∞)` vanishing outside `|x| ≤ ρ`.
#[derive(Clone)]
pub struct ScalarField3 {
    evaluator: Arc<Evaluator>,
    support_radius: f64,
}

impl fmt::Debug for ScalarField3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarField3")
            .field("support_radius", &self.support_radius)
            .finish_non_exhaustive()
    }
}

impl ScalarField3 {
    pub fn new<F>(support_radius: f64, evaluator: F) -> Result<Self>
    where
        F: Fn([f64; 3], f64) -> f64 + Send + Sync + 'static,
    {
        if !(support_radius >= 0.0) {
            return Err(Error::invalid(format!("support radius must be >= 0, got {support_radius}")));
        }
        Ok(ScalarField3 {
            evaluator: Arc::new(evaluator),
            support_radius,
        })
    }

    /// Field depending on `|x|` only. `profile` is evaluated inside the
    /// support and the field is zero outside.
    pub fn radial<F>(support_radius: f64, profile: F) -> Result<Self>
    where
        F: Fn(f64, f64) -> f64 + Send + Sync + 'static,
    {
        Self::new(support_radius, move |x, t| {
            let r = norm(x);
            if r > support_radius {
                0.0
            } else {
                profile(r, t)
            }
        })
    }

    pub fn zero() -> Self {
        ScalarField3 {
            evaluator: Arc::new(|_, _| 0.0),
            support_radius: 0.0,
        }
    }

    pub fn support_radius(&self) -> f64 {
        self.support_radius
    }

    pub fn eval(&self, x: [f64; 3], t: f64) -> f64 {
        (self.evaluator)(x, t)
    }

    /// Sampled check that the evaluator vanishes outside the declared support
    /// (shells out to `3ρ` at times `t`).
    pub fn check_support(&self, times: &[f64], quad: &SphereQuadrature) -> bool {
        let rho = self.support_radius;
        let shells = (1..=16).map(|k| rho * (1.0 + k as f64 / 8.0) + 1e-9);
        shells.into_iter().all(|r| {
            times.iter().all(|&t| {
                quad.nodes
                    .iter()
                    .all(|xi| self.eval([r * xi[0], r * xi[1], r * xi[2]], t) == 0.0)
            })
        })
    }
}

fn norm(x: [f64; 3]) -> f64 {
    (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt()
}

/// Quadrature rule on the unit sphere, normalised so weights sum to 1.
#[derive(Clone, Debug)]
pub struct SphereQuadrature {
    nodes: Vec<[f64; 3]>,
    weights: Vec<f64>,
    degree: usize,
}

/// Default exactness degree of [`SphereQuadrature::default`].
pub const DEFAULT_DEGREE: usize = 23;

impl Default for SphereQuadrature {
    fn default() -> Self {
        Self::product_gauss(DEFAULT_DEGREE)
    }
}

impl SphereQuadrature {
    /// Product Gauss–Legendre × uniform-azimuth rule, exact for all
    /// polynomials of total degree `≤ degree` restricted to the sphere.
    pub fn product_gauss(degree: usize) -> Self {
        let n_polar = degree / 2 + 1;
        let n_azimuth = degree + 1;
        let (z, wz) = gauss_legendre(n_polar);
        let mut nodes = Vec::with_capacity(n_polar * n_azimuth);
        let mut weights = Vec::with_capacity(n_polar * n_azimuth);
        for (&zk, &wk) in z.iter().zip(&wz) {
            let sin_theta = (1.0 - zk * zk).max(0.0).sqrt();
            for j in 0..n_azimuth {
                let phi = 2.0 * PI * j as f64 / n_azimuth as f64;
                nodes.push([sin_theta * phi.cos(), sin_theta * phi.sin(), zk]);
                weights.push(0.5 * wk / n_azimuth as f64);
            }
        }
        SphereQuadrature {
            nodes,
            weights,
            degree,
        }
    }

    /// Builds a rule from explicit nodes and weights, checking the unit-norm
    /// and unit-mass invariants to `1e-12`.
    pub fn from_parts(nodes: Vec<[f64; 3]>, weights: Vec<f64>, degree: usize) -> Result<Self> {
        if nodes.len() != weights.len() || nodes.is_empty() {
            return Err(Error::invalid("sphere quadrature needs matching, nonempty nodes/weights"));
        }
        if weights.iter().any(|&w| !(w > 0.0)) {
            return Err(Error::invalid("sphere quadrature weights must be positive"));
        }
        let mass: f64 = weights.iter().sum();
        if (mass - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!("sphere quadrature weights sum to {mass}")));
        }
        if nodes.iter().any(|&x| (norm(x) - 1.0).abs() > 1e-12) {
            return Err(Error::invalid("sphere quadrature nodes must be unit vectors"));
        }
        Ok(SphereQuadrature {
            nodes,
            weights,
            degree,
        })
    }

    pub fn nodes(&self) -> &[[f64; 3]] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Mean of `f` over the unit sphere.
    pub fn integrate<F: Fn([f64; 3]) -> f64>(&self, f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }

    /// Largest absolute error over all monomials `x^a y^b z^c` with
    /// `a + b + c ≤ degree` (which span the spherical harmonics up to that
    /// degree on the sphere).
    pub fn exactness_error(&self) -> f64 {
        let d = self.degree as i32;
        let mut worst = 0.0f64;
        for a in 0..=d {
            for b in 0..=(d - a) {
                for c in 0..=(d - a - b) {
                    let approx = self.integrate(|x| x[0].powi(a) * x[1].powi(b) * x[2].powi(c));
                    let err = (approx - sphere_monomial_mean(a as u32, b as u32, c as u32)).abs();
                    worst = worst.max(err);
                }
            }
        }
        worst
    }
}

fn double_factorial(n: i64) -> f64 {
    let mut acc = 1.0;
    let mut k = n;
    while k > 1 {
        acc *= k as f64;
        k -= 2;
    }
    acc
}

/// Exact mean of `x^a y^b z^c` over the unit sphere.
pub fn sphere_monomial_mean(a: u32, b: u32, c: u32) -> f64 {
    if a % 2 == 1 || b % 2 == 1 || c % 2 == 1 {
        return 0.0;
    }
    let (a, b, c) = (a as i64, b as i64, c as i64);
    double_factorial(a - 1) * double_factorial(b - 1) * double_factorial(c - 1)
        / double_factorial(a + b + c + 1)
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Legendre recurrence for P_n(z) and P_n'(z).
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let pk = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = pk;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// Radial mean `h̄(r,t)`; zero outside the support and `h(0,t)` at `r = 0`.
pub fn spherical_mean(field: &ScalarField3, r: f64, t: f64, quad: &SphereQuadrature) -> f64 {
    debug_assert!(r >= 0.0, "spherical_mean needs r >= 0");
    if r > field.support_radius {
        return 0.0;
    }
    if r == 0.0 {
        return field.eval([0.0; 3], t);
    }
    quad.integrate(|xi| field.eval([r * xi[0], r * xi[1], r * xi[2]], t))
}

type ProfileFn = dyn Fn(f64) -> f64 + Send + Sync;

/// Radial profile of initial data, either sampled (piecewise linear between
/// radii, zero beyond the last radius) or given in closed form with a
/// support radius.
#[derive(Clone)]
pub enum RadialProfile {
    Sampled { radii: Vec<f64>, values: Vec<f64> },
    Analytic { func: Arc<ProfileFn>, support: f64 },
}

impl fmt::Debug for RadialProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RadialProfile::Sampled { radii, .. } => f
                .debug_struct("Sampled")
                .field("points", &radii.len())
                .field("support", &self.support())
                .finish(),
            RadialProfile::Analytic { support, .. } => {
                f.debug_struct("Analytic").field("support", support).finish()
            }
        }
    }
}

impl RadialProfile {
    pub fn zero() -> Self {
        RadialProfile::Analytic {
            func: Arc::new(|_| 0.0),
            support: 0.0,
        }
    }

    /// `amplitude · (1 − (r/ρ)²)³` for `r < ρ`, zero outside; `C²` at `r = ρ`.
    pub fn bump(amplitude: f64, rho: f64) -> Self {
        Self::analytic(rho, move |r| {
            let x = r / rho;
            if x >= 1.0 {
                0.0
            } else {
                let y = 1.0 - x * x;
                amplitude * y * y * y
            }
        })
    }

    pub fn analytic<F>(support: f64, func: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        RadialProfile::Analytic {
            func: Arc::new(func),
            support,
        }
    }

    pub fn sampled(radii: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        check_radial_grid(&radii)?;
        if radii.len() != values.len() {
            return Err(Error::invalid("profile radii and values differ in length"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("profile values must be finite"));
        }
        Ok(RadialProfile::Sampled { radii, values })
    }

    /// Value at `|r|`.
    pub fn eval(&self, r: f64) -> f64 {
        let r = r.abs();
        match self {
            RadialProfile::Analytic { func, support } => {
                if r > *support {
                    0.0
                } else {
                    func(r)
                }
            }
            RadialProfile::Sampled { radii, values } => {
                let last = radii.len() - 1;
                if r > radii[last] {
                    return 0.0;
                }
                if last == 0 {
                    return values[0];
                }
                let k = radii.partition_point(|&x| x <= r).clamp(1, last);
                let (r0, r1) = (radii[k - 1], radii[k]);
                let w = (r - r0) / (r1 - r0);
                values[k - 1] * (1.0 - w) + values[k] * w
            }
        }
    }

    /// Radius beyond which the profile vanishes.
    pub fn support(&self) -> f64 {
        match self {
            RadialProfile::Analytic { support, .. } => *support,
            RadialProfile::Sampled { radii, values } => values
                .iter()
                .rposition(|&v| v != 0.0)
                .map(|k| radii[(k + 1).min(radii.len() - 1)])
                .unwrap_or(0.0),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            RadialProfile::Analytic { support, func } => *support == 0.0 && func(0.0) == 0.0,
            RadialProfile::Sampled { values, .. } => values.iter().all(|&v| v == 0.0),
        }
    }

    pub fn sample_on(&self, radii: &[f64]) -> Result<Self> {
        Self::sampled(radii.to_vec(), radii.iter().map(|&r| self.eval(r)).collect())
    }

    /// Writes the profile as two-column CSV `r,value`. Analytic profiles are
    /// sampled on `radii`.
    pub fn write_csv<W: Write>(&self, out: W, radii: &[f64]) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["r", "value"])?;
        for &r in radii {
            w.write_record([fmt_value(r), fmt_value(self.eval(r))])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
        let mut radii = Vec::new();
        let mut values = Vec::new();
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec?;
            if rec.len() != 2 {
                return Err(Error::Parse(format!("profile row {} has {} columns", line + 2, rec.len())));
            }
            let parse = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("profile row {}: {e}", line + 2)))
            };
            radii.push(parse(&rec[0])?);
            values.push(parse(&rec[1])?);
        }
        if radii.is_empty() {
            return Err(Error::Parse("empty profile".into()));
        }
        Self::sampled(radii, values)
    }
}

fn check_radial_grid(radii: &[f64]) -> Result<()> {
    if radii.first() != Some(&0.0) || radii.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::UnsortedGrid);
    }
    Ok(())
}

/// Uniform radial grid on `[0, ρ]` with `intervals` cells.
pub fn radial_grid(rho: f64, intervals: usize) -> Vec<f64> {
    (0..=intervals).map(|k| rho * k as f64 / intervals as f64).collect()
}

/// Default profile resolution: 128 cells across the support.
pub const DEFAULT_PROFILE_INTERVALS: usize = 128;

/// Reduces compactly supported initial data `(f, g)` to radial profiles
/// `(f̄, ḡ)` sampled on `grid_r`.
pub fn reduce_initial_data(
    f: &ScalarField3,
    g: &ScalarField3,
    grid_r: &[f64],
    quad: &SphereQuadrature,
) -> Result<(RadialProfile, RadialProfile)> {
    check_radial_grid(grid_r)?;
    let mean_on = |h: &ScalarField3| -> Vec<f64> {
        grid_r
            .par_iter()
            .map(|&r| spherical_mean(h, r, 0.0, quad))
            .collect()
    };
    let fbar = RadialProfile::sampled(grid_r.to_vec(), mean_on(f))?;
    let gbar = RadialProfile::sampled(grid_r.to_vec(), mean_on(g))?;
    Ok((fbar, gbar))
}
