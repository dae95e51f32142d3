//! Numerical laboratory for finite-time blow-up of the radially symmetric
//! semilinear wave equation
//!
//! ```text
//! u_tt - Δu = A |u|^p,   x ∈ R³,  u(x,0) = f,  u_t(x,0) = g,
//! ```
//!
//! built on the exact spherical-means reduction. The spherical mean `ū(r,t)`
//! of a solution satisfies the Volterra integral equation
//!
//! ```text
//! ū = ū⁰ + A · P(|ū|^p),    Pσ(r,t) = ∬_{R(r,t)} λ/(2r) σ(λ,s) dλ ds,
//! R(r,t) = {(λ,s) : 0 ≤ s ≤ t, |r - t + s| ≤ λ ≤ r + t - s},
//! ```
//!
//! where `ū⁰` is the free (homogeneous) wave. The crate is organised as
//!
//! * [`regions`]: the characteristic-plane regions and light cones used by
//!   the lower-bound argument, with membership, closed-form areas and sampled
//!   subset checks.
//! * [`spherical_means`]: sphere quadrature, spherical means of 3-D fields and
//!   reduction of initial data to radial profiles.
//! * [`wave_solver`]: the `P` operator, the free radial propagator and the
//!   characteristic marching solver with blow-up detection.
//! * [`diagnostics`]: the chain of pointwise and functional lower bounds
//!   (`M`, `C₀`, `F`, `G`, `H`, the Hölder step, the single-variable integral
//!   inequality) evaluated on a computed field, plus the exponent bookkeeping.
//! * [`gronwall`]: the weighted Gronwall-type inequality, its closed-form
//!   failure radius and a certificate combining both.
//! * [`cli`]: batch orchestration (solve, diagnose, sweep) used by the
//!   `blowup` binary.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod diagnostics;
pub mod error;
pub mod io;
pub mod gronwall;
pub mod regions;
pub mod spherical_means;
pub mod wave_solver;

pub use error::{Error, Result};
