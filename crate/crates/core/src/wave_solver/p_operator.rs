//! The positive operator
//!
//! ```text
//! Pσ(r,t) = ∬_{R(r,t)} λ/(2r) σ(λ,s) dλ ds,
//! R(r,t) = {0 ≤ s ≤ t, |r − t + s| ≤ λ ≤ r + t − s},
//! ```
//!
//! which maps a radial source to the spherical mean of the zero-data
//! solution of `□u = σ`.
//!
//! Two independent lattice quadratures are provided:
//!
//! * the marching rule: trapezoid in `λ` along every time row (the row
//!   interval `[|m − n + k|, m + n − k]` is lattice aligned) followed by the
//!   trapezoid in `s`. Row `s = t` has zero width, so `P` at level `n` only
//!   reads rows `< n`. At `r = 0` the limit `∫₀ᵗ (t−s) σ(t−s, s) ds` is used.
//! * the diamond rule: midpoint rule on the `2h × 2h` cells of the
//!   characteristic lattice, with the triangles cut by `s = 0` integrated by
//!   their vertex average. It is used to measure the integral-equation
//!   residual of marched fields.

use crate::wave_solver::field::RadialField;
use crate::{Error, Result};

/// Per-row cumulative trapezoid sums of `λ·σ(λ, s_k)`.
#[derive(Clone, Debug)]
pub(crate) struct SourceRows {
    h: f64,
    nr: usize,
    sigma: Vec<Vec<f64>>,
    cumulative: Vec<Vec<f64>>,
}

impl SourceRows {
    pub(crate) fn new(h: f64, nr: usize) -> Self {
        SourceRows {
            h,
            nr,
            sigma: Vec::new(),
            cumulative: Vec::new(),
        }
    }

    pub(crate) fn len(&self) -> usize {
        self.sigma.len()
    }

    pub(crate) fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.nr + 1);
        let half_h = 0.5 * self.h;
        let mut cum = Vec::with_capacity(row.len());
        let mut acc = 0.0;
        let mut prev = 0.0;
        for (i, &s) in row.iter().enumerate() {
            let g = i as f64 * self.h * s;
            if i > 0 {
                acc += half_h * (prev + g);
            }
            cum.push(acc);
            prev = g;
        }
        self.sigma.push(row);
        self.cumulative.push(cum);
    }

    #[inline]
    pub(crate) fn sigma_at(&self, i: usize, k: usize) -> f64 {
        self.sigma(i, k)
    }

    #[inline]
    fn sigma(&self, i: usize, k: usize) -> f64 {
        if i > self.nr {
            0.0
        } else {
            self.sigma[k][i]
        }
    }

    /// Trapezoid `∫ λσ dλ` over lattice cells `[lo, hi]` of row `k`; cells
    /// beyond `r_max` contribute zero.
    #[inline]
    fn segment(&self, k: usize, lo: usize, hi: usize) -> f64 {
        let cum = &self.cumulative[k];
        cum[hi.min(self.nr)] - cum[lo.min(self.nr)]
    }

    /// Marching-rule value of `Pσ` at node `(m, n)`. Needs rows `0..n`.
    pub(crate) fn p_at(&self, m: usize, n: usize) -> f64 {
        if n == 0 {
            return 0.0;
        }
        debug_assert!(self.len() >= n);
        let h = self.h;
        if m == 0 {
            // lim_{r→0} Pσ(r,t) = ∫₀ᵗ (t − s) σ(t − s, s) ds; the s = t end
            // carries weight zero.
            let mut acc = 0.5 * n as f64 * h * self.sigma(n, 0);
            for k in 1..n {
                acc += (n - k) as f64 * h * self.sigma(n - k, k);
            }
            return acc * h;
        }
        let mut acc = 0.5 * self.segment(0, m.abs_diff(n), m + n);
        for k in 1..n {
            acc += self.segment(k, m.abs_diff(n - k), m + n - k);
        }
        acc * h / (2.0 * m as f64 * h)
    }
}

/// Reusable evaluator of `Pσ` for a frozen source field.
#[derive(Debug)]
pub struct POperator {
    rows: SourceRows,
    bounded_by_support: bool,
    nr: usize,
    h: f64,
}

impl POperator {
    pub fn new(source: &RadialField) -> Self {
        let grid = source.grid();
        let mut rows = SourceRows::new(grid.h(), grid.nr());
        for j in 0..source.levels() {
            rows.push(source.row(j).to_vec());
        }
        POperator {
            rows,
            bounded_by_support: source.support.is_some(),
            nr: grid.nr(),
            h: grid.h(),
        }
    }

    /// `Pσ` at the lattice node `(r, t)`.
    pub fn apply(&self, r: f64, t: f64) -> Result<f64> {
        let (m, n) = self.node(r, t)?;
        Ok(self.rows.p_at(m, n))
    }

    fn node(&self, r: f64, t: f64) -> Result<(usize, usize)> {
        let k = |x: f64| {
            let q = (x / self.h).round();
            if q < 0.0 || (q * self.h - x).abs() > 1e-9 * self.h.max(x.abs()) {
                None
            } else {
                Some(q as usize)
            }
        };
        let (m, n) = match (k(r), k(t)) {
            (Some(m), Some(n)) => (m, n),
            _ => return Err(Error::OffLattice { r, t }),
        };
        if m > self.nr {
            return Err(Error::OutOfGrid(format!("r = {r} beyond r_max")));
        }
        if n > self.rows.len() {
            return Err(Error::OutOfGrid(format!("t = {t} needs source rows beyond the field")));
        }
        if m + n > self.nr && !self.bounded_by_support {
            return Err(Error::OutOfGrid(format!(
                "R({r},{t}) reaches λ = {} beyond r_max = {}",
                r + t,
                self.nr as f64 * self.h
            )));
        }
        Ok((m, n))
    }
}

/// `Pσ(r, t)` for a source sampled on the lattice.
///
/// `(r, t)` must be a lattice node. The region `R(r,t)` must fit inside the
/// grid unless the source declares a support (samples vanish beyond it).
pub fn apply_p(source: &RadialField, r: f64, t: f64) -> Result<f64> {
    POperator::new(source).apply(r, t)
}

/// Anti-diagonal prefix sums `D(i,j) = Σ_{j'=1..j} λσ(i + j − j', j')`
/// for the diamond rule.
pub(crate) struct DiamondSums {
    h: f64,
    nr: usize,
    diag: Vec<f64>,
    lambda_sigma: Vec<f64>,
    levels: usize,
}

impl DiamondSums {
    /// `sigma(i, j)` must be defined for `i ≤ nr`, `j < levels`.
    pub(crate) fn new<F: Fn(usize, usize) -> f64>(h: f64, nr: usize, levels: usize, sigma: F) -> Self {
        let stride = nr + 1;
        let mut lambda_sigma = vec![0.0; stride * levels];
        for j in 0..levels {
            for i in 0..=nr {
                lambda_sigma[j * stride + i] = i as f64 * h * sigma(i, j);
            }
        }
        let mut diag = vec![0.0; stride * levels];
        for j in 1..levels {
            for i in 0..=nr {
                let prev = if i < nr { diag[(j - 1) * stride + i + 1] } else { 0.0 };
                diag[j * stride + i] = prev + lambda_sigma[j * stride + i];
            }
        }
        DiamondSums {
            h,
            nr,
            diag,
            lambda_sigma,
            levels,
        }
    }

    #[inline]
    fn d(&self, i: usize, j: usize) -> f64 {
        if i > self.nr {
            0.0
        } else {
            self.diag[j * (self.nr + 1) + i]
        }
    }

    #[inline]
    fn g(&self, i: usize, j: usize) -> f64 {
        if i > self.nr {
            0.0
        } else {
            self.lambda_sigma[j * (self.nr + 1) + i]
        }
    }

    /// Diamond-rule `Pσ` at `(m, n)`, `m ≥ 1`, `1 ≤ n ≤ levels`.
    pub(crate) fn p_at(&self, m: usize, n: usize) -> f64 {
        debug_assert!(m >= 1 && n >= 1 && n <= self.levels);
        let h = self.h;
        let mut cells = 0.0;
        let mut triangles = 0.0;
        // column centres α/h ∈ {|n−m|+1, |n−m|+3, …, n+m−1}; cells centred
        // on the nodes (col − j, j), j = 1..=(col + n − m − 1)/2
        let mut col = m.abs_diff(n) + 1;
        while col < n + m {
            let top = (col + n - m.min(col + n)).saturating_sub(1) / 2;
            if top >= 1 {
                cells += self.d(col - top, top);
            }
            // triangle cut by s = 0, vertices (col ± 1, 0) and (col, 1)
            triangles += (self.g(col - 1, 0) + self.g(col + 1, 0) + self.g(col, 1)) / 3.0;
            col += 2;
        }
        (2.0 * h * h * cells + h * h * triangles) / (2.0 * m as f64 * h)
    }
}
