//! Explicit characteristic marching for `ū = ū⁰ + P(A|ū|^p + F)`.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;

use crate::spherical_means::RadialProfile;
use crate::wave_solver::field::{CharGrid, FieldStatus, Nonlinearity, RadialField, ResidualReport};
use crate::wave_solver::p_operator::{DiamondSums, SourceRows};
use crate::wave_solver::propagator::linear_radial;
use crate::{Error, Result};

pub const DEFAULT_BLOWUP_THRESHOLD: f64 = 1e8;
pub const DEFAULT_DIVERGENCE_FACTOR: f64 = 10.0;

type ForcingFn = dyn Fn(f64, f64) -> f64 + Send + Sync;

/// Extra radial source `F(r, t)` added to `A|ū|^p`. Must vanish for
/// `r > support + t`.
#[derive(Clone)]
pub struct Forcing {
    func: Arc<ForcingFn>,
    support: f64,
}

impl Forcing {
    pub fn new<F>(support: f64, func: F) -> Self
    where
        F: Fn(f64, f64) -> f64 + Send + Sync + 'static,
    {
        Forcing {
            func: Arc::new(func),
            support,
        }
    }

    pub fn eval(&self, r: f64, t: f64) -> f64 {
        if r > self.support + t {
            0.0
        } else {
            (self.func)(r, t)
        }
    }

    pub fn support(&self) -> f64 {
        self.support
    }
}

impl fmt::Debug for Forcing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Forcing").field("support", &self.support).finish()
    }
}

/// Radial Cauchy problem `□u = A|u|^p (+ F)`, `u = f̄`, `u_t = ḡ` at `t = 0`.
#[derive(Clone, Debug)]
pub struct Problem {
    pub p: f64,
    pub coeff: f64,
    pub f: RadialProfile,
    pub g: RadialProfile,
    /// Radius beyond which both profiles vanish.
    pub rho: f64,
    pub forcing: Option<Forcing>,
}

impl Problem {
    pub fn new(p: f64, coeff: f64, f: RadialProfile, g: RadialProfile) -> Result<Self> {
        if !(p > 1.0 && p.is_finite()) {
            return Err(Error::invalid(format!("exponent p must exceed 1, got {p}")));
        }
        if !(coeff > 0.0 && coeff.is_finite()) {
            return Err(Error::invalid(format!("coefficient A must be positive, got {coeff}")));
        }
        let rho = f.support().max(g.support());
        Ok(Problem {
            p,
            coeff,
            f,
            g,
            rho,
            forcing: None,
        })
    }

    pub fn with_forcing(mut self, forcing: Forcing) -> Self {
        self.forcing = Some(forcing);
        self
    }

    /// Radius outside of which every source sample vanishes at `t = 0`.
    pub fn source_radius(&self) -> f64 {
        self.forcing
            .as_ref()
            .map_or(self.rho, |fc| fc.support().max(self.rho))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverOptions {
    pub blowup_threshold: f64,
    /// Blow-up is also declared when the level maximum grows by more than
    /// this factor in one step, once it exceeds the free-wave amplitude.
    pub divergence_factor: f64,
    pub compute_residual: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            blowup_threshold: DEFAULT_BLOWUP_THRESHOLD,
            divergence_factor: DEFAULT_DIVERGENCE_FACTOR,
            compute_residual: true,
        }
    }
}

/// Marches the integral equation level by level with default options and
/// the given threshold.
pub fn solve_march(problem: &Problem, grid: &CharGrid, blowup_threshold: f64) -> Result<RadialField> {
    let opts = SolverOptions {
        blowup_threshold,
        ..SolverOptions::default()
    };
    solve_march_with(problem, grid, &opts)
}

pub fn solve_march_with(problem: &Problem, grid: &CharGrid, opts: &SolverOptions) -> Result<RadialField> {
    let h = grid.h();
    let rho_src = problem.source_radius();
    if grid.r_max() + 1e-9 * h < rho_src + grid.t_max() {
        return Err(Error::GridTooShort(format!(
            "r_max = {} does not cover the domain of dependence ρ + t_max = {}",
            grid.r_max(),
            rho_src + grid.t_max()
        )));
    }
    if !(opts.divergence_factor > 1.0) {
        return Err(Error::invalid("divergence factor must exceed 1"));
    }
    let u0 = linear_radial(&problem.f, &problem.g, grid);
    if !(opts.blowup_threshold > u0.amplitude_scale) {
        return Err(Error::invalid(format!(
            "blow-up threshold {} must exceed the free-wave amplitude {}",
            opts.blowup_threshold, u0.amplitude_scale
        )));
    }
    let (p, coeff) = (problem.p, problem.coeff);
    let nr = grid.nr();
    let clip = (rho_src / h - 1e-9).ceil().max(0.0) as usize;
    let mut rows = SourceRows::new(h, nr);
    let mut values = vec![0.0; grid.node_count()];
    let mut level_max: Vec<f64> = Vec::with_capacity(grid.nt() + 1);
    let mut status = FieldStatus::Complete;
    let mut levels = grid.nt() + 1;
    let mut source_scale = 0.0f64;

    for n in 0..=grid.nt() {
        let m_hi = nr.min(clip + n);
        let row: Vec<f64> = (0..=m_hi)
            .into_par_iter()
            .map(|m| u0.at(m, n) + rows.p_at(m, n))
            .collect();
        let t = grid.t(n);
        let mut max = 0.0f64;
        let mut finite = true;
        for &v in &row {
            finite &= v.is_finite();
            max = max.max(v.abs());
        }
        if !finite {
            log::warn!("non-finite value at t = {t}");
            status = FieldStatus::Error {
                t,
                reason: "non-finite value before the blow-up threshold".into(),
            };
            levels = n;
            break;
        }
        let prev = level_max.last().copied().unwrap_or(0.0);
        let diverging = prev > 0.0 && prev >= u0.amplitude_scale && max > opts.divergence_factor * prev;
        if max >= opts.blowup_threshold || diverging {
            log::info!("blow-up detected at t = {t} (max {max:.3e}, previous {prev:.3e})");
            status = FieldStatus::BlownUp { t_b: t };
            levels = n;
            break;
        }
        let start = grid.index(0, n);
        values[start..start + row.len()].copy_from_slice(&row);
        level_max.push(max);
        let mut sigma = vec![0.0; nr + 1];
        for (m, &v) in row.iter().enumerate() {
            let mut s = coeff * v.abs().powf(p);
            if let Some(fc) = &problem.forcing {
                s += fc.eval(grid.r(m), t);
            }
            source_scale = source_scale.max(s.abs());
            sigma[m] = s;
        }
        rows.push(sigma);
    }

    let mut field = RadialField::from_parts(*grid, values, levels).with_support(rho_src);
    field.status = status;
    field.nonlinearity = Some(Nonlinearity { p, coeff });
    field.amplitude_scale = u0.amplitude_scale;
    field.source_scale = source_scale;
    if opts.compute_residual {
        field.residual = Some(residual_with(&field, &u0, &rows, clip));
    }
    Ok(field)
}

/// `ū − ū⁰ − P(σ)` with `P` by the diamond rule, over interior nodes.
fn residual_with(field: &RadialField, u0: &RadialField, rows: &SourceRows, clip: usize) -> ResidualReport {
    let levels = field.levels();
    let grid = *field.grid();
    if levels < 2 || grid.nr() == 0 {
        return ResidualReport::default();
    }
    let diamonds = DiamondSums::new(grid.h(), grid.nr(), levels, |i, j| rows.sigma_at(i, j));
    let per_level: Vec<(f64, f64, usize)> = (1..levels)
        .into_par_iter()
        .map(|n| {
            let mut linf = 0.0f64;
            let mut sq = 0.0;
            let m_hi = grid.nr().min(clip + n);
            for m in 1..=m_hi {
                let r = field.at(m, n) - u0.at(m, n) - diamonds.p_at(m, n);
                linf = linf.max(r.abs());
                sq += r * r;
            }
            (linf, sq, m_hi)
        })
        .collect();
    let (linf, sq, nodes) = per_level
        .into_iter()
        .fold((0.0f64, 0.0, 0usize), |(a, b, c), (x, y, z)| (a.max(x), b + y, c + z));
    ResidualReport {
        residual_linf: linf,
        residual_l2: (sq / nodes.max(1) as f64).sqrt(),
        nodes,
    }
}

/// Integral-equation residual of any field against a problem, with `P` by
/// the diamond rule (independent of the marching quadrature).
pub fn integral_residual(field: &RadialField, problem: &Problem) -> Result<ResidualReport> {
    let grid = *field.grid();
    let u0 = linear_radial(&problem.f, &problem.g, &grid);
    let mut rows = SourceRows::new(grid.h(), grid.nr());
    for j in 0..field.levels() {
        let t = grid.t(j);
        rows.push(
            field
                .row(j)
                .iter()
                .enumerate()
                .map(|(m, &v)| {
                    let f = problem.forcing.as_ref().map_or(0.0, |fc| fc.eval(grid.r(m), t));
                    problem.coeff * v.abs().powf(problem.p) + f
                })
                .collect(),
        );
    }
    Ok(residual_with(field, &u0, &rows, grid.nr()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn phi(r: f64) -> f64 {
        if r >= 1.0 {
            0.0
        } else {
            (1.0 - r * r).powi(3)
        }
    }

    /// `ū = (1 − r²)₊³ (1 + t)⁻²` with the forcing that makes it exact for
    /// `□u = |u|² + F`.
    pub(crate) fn manufactured() -> (Problem, impl Fn(f64, f64) -> f64) {
        let exact = |r: f64, t: f64| phi(r) / ((1.0 + t) * (1.0 + t));
        let forcing = Forcing::new(1.0, move |r, t| {
            if r >= 1.0 {
                return 0.0;
            }
            let y = 1.0 - r * r;
            let lap = -18.0 * y * y + 24.0 * r * r * y;
            let tau = 1.0 / ((1.0 + t) * (1.0 + t));
            let tau_tt = 6.0 / (1.0 + t).powi(4);
            let u = phi(r) * tau;
            tau_tt * phi(r) - tau * lap - u * u
        });
        let problem = Problem::new(
            2.0,
            1.0,
            RadialProfile::analytic(1.0, phi),
            RadialProfile::analytic(1.0, |r| -2.0 * phi(r)),
        )
        .unwrap()
        .with_forcing(forcing);
        (problem, exact)
    }

    #[test]
    fn zero_data_stays_zero() {
        let pb = Problem::new(2.0, 1.0, RadialProfile::zero(), RadialProfile::zero()).unwrap();
        let grid = CharGrid::new(1.0 / 16.0, 2.0, 2.0).unwrap();
        let u = solve_march(&pb, &grid, 1e8).unwrap();
        assert_eq!(u.status, FieldStatus::Complete);
        assert!(u.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(Problem::new(1.0, 1.0, RadialProfile::zero(), RadialProfile::zero()).is_err());
        assert!(Problem::new(2.0, 0.0, RadialProfile::zero(), RadialProfile::zero()).is_err());
        let pb = Problem::new(2.0, 1.0, RadialProfile::bump(1.0, 1.0), RadialProfile::zero()).unwrap();
        let short = CharGrid::new(1.0 / 16.0, 1.5, 1.0).unwrap();
        assert!(matches!(solve_march(&pb, &short, 1e8), Err(Error::GridTooShort(_))));
        let grid = CharGrid::new(1.0 / 16.0, 2.0, 1.0).unwrap();
        assert!(solve_march(&pb, &grid, 0.5).is_err());
    }

    #[test]
    fn manufactured_solution_converges_at_second_order() {
        let (pb, exact) = manufactured();
        // errors at the nodes of the coarsest grid, which every finer grid contains
        let mut errs = Vec::new();
        for &cells in &[16usize, 32, 64, 128] {
            let h = 1.0 / cells as f64;
            let grid = CharGrid::new(h, 2.0, 1.0).unwrap();
            let u = solve_march(&pb, &grid, 1e8).unwrap();
            assert_eq!(u.status, FieldStatus::Complete);
            let stride = cells / 16;
            let mut err = 0.0f64;
            for j in (0..=grid.nt()).step_by(stride) {
                for i in (0..=grid.nr()).step_by(stride) {
                    err = err.max((u.at(i, j) - exact(grid.r(i), grid.t(j))).abs());
                }
            }
            errs.push(err);
        }
        for w in errs.windows(2) {
            let ratio = w[0] / w[1];
            assert!((3.5..=4.5).contains(&ratio), "ratio {ratio}, errors {errs:?}");
        }
    }

    #[test]
    fn residual_is_second_order_small() {
        let pb = Problem::new(3.0, 1.0, RadialProfile::bump(0.5, 1.0), RadialProfile::bump(0.5, 1.0)).unwrap();
        let h = 1.0 / 64.0;
        let grid = CharGrid::new(h, 3.0, 2.0).unwrap();
        let u = solve_march(&pb, &grid, 1e8).unwrap();
        assert_eq!(u.status, FieldStatus::Complete);
        let res = u.residual.unwrap();
        assert!(res.nodes > 0);
        assert!(res.residual_linf <= 10.0 * h * h * u.source_scale, "{res:?}, scale {}", u.source_scale);
        let again = integral_residual(&u, &pb).unwrap();
        assert!((again.residual_linf - res.residual_linf).abs() <= 1e-12 * (1.0 + res.residual_linf));
    }

    #[test]
    fn nonnegative_data_give_nonnegative_solution() {
        let pb = Problem::new(2.5, 2.0, RadialProfile::zero(), RadialProfile::bump(0.8, 1.0)).unwrap();
        let grid = CharGrid::new(1.0 / 32.0, 3.0, 2.0).unwrap();
        let u = solve_march(&pb, &grid, 1e8).unwrap();
        let u0 = linear_radial(&pb.f, &pb.g, &grid);
        for j in 0..u.levels() {
            for i in 0..=grid.nr() {
                assert!(u0.at(i, j) >= 0.0);
                assert!(u.at(i, j) >= u0.at(i, j));
            }
        }
        // sign-changing free wave: the nonlinear part still only adds
        let pb = Problem::new(2.0, 1.0, RadialProfile::bump(0.7, 1.0), RadialProfile::bump(-0.3, 0.5)).unwrap();
        let u = solve_march(&pb, &grid, 1e8).unwrap();
        let u0 = linear_radial(&pb.f, &pb.g, &grid);
        for j in 0..u.levels() {
            for i in 0..=grid.nr() {
                assert!(u.at(i, j) >= u0.at(i, j));
            }
        }
    }
}
