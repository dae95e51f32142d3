//! Radial solver for the integral equation `ū = ū⁰ + A·P(|ū|^p)`.

mod blowup;
mod field;
mod march;
mod p_operator;
mod propagator;

pub use blowup::{detect_blowup_time, BlowupFit};
pub use field::{CharGrid, FieldStatus, Nonlinearity, RadialField, ResidualReport};
pub use march::{
    integral_residual, solve_march, solve_march_with, Forcing, Problem, SolverOptions, DEFAULT_BLOWUP_THRESHOLD,
    DEFAULT_DIVERGENCE_FACTOR,
};
pub use p_operator::{apply_p, POperator};
pub use propagator::linear_radial;
