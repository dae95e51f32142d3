//! The lower-bound chain behind finite-time blow-up, evaluated on a
//! computed spherical mean `ū`.
//!
//! Starting from `ū ≥ A·P(|ū|^p)` in the cone above `(0, t₂)`, the chain
//! runs through
//!
//! * `ū ≥ M/r` on `Q` and `ū ≥ C₀(t+r)^{1−p}` on `Σ = {r ≤ t − t*}`;
//! * the same statements in characteristic variables for
//!   `F(α,β) = ū((α−β)/2, (α+β)/2)` on `Σ′ = {t* ≤ β ≤ α}`;
//! * the weighted function `G = (α−β)^q F`, its integral `H(α) = ∫ G dβ`,
//!   Hölder's inequality and the single-variable inequality
//!
//! ```text
//! H(r) ≥ C_H ∫_{t*}^r H^p(α) (α − t*)^{2−2p} dα,
//! ```
//!
//! * the lower bound `H(α) ≥ C_L (α−t*)^{2−p+q}` for `α ≥ 2t*`, which turns
//!   the previous line into `H(r) ≥ C_g ∫_{2t*}^r H^{1+ε}(α−t*)^{s(p,ε)} dα`.
//!
//! Every step is checked numerically as a residual table with tolerance
//! `max(10⁻⁹, 50 h² · max(|lhs|, |rhs|))`.

mod chain;
mod exponent;

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::gronwall::{GronwallParams, SampledFunction};
use crate::io::{fmt_opt, fmt_value};
use crate::regions::Region;
use crate::wave_solver::{FieldStatus, RadialField};
use crate::{Error, Result};

pub use chain::{check_chain, check_pointwise_lower_bound};
pub use exponent::{choose_epsilon, s_exponent, s_exponent_expanded, weight_exponent};

const LATTICE_TOL: f64 = 1e-9;

/// Largest logarithmic growth rate `d ln max|ū| / dt` at which a level of a
/// blown-up field still counts as resolved.
pub const RESOLVED_GROWTH_RATE: f64 = 5.0;

/// Number of leading levels on which the chain is checked.
///
/// For a blown-up field the final divergence phase is dropped: scanning
/// back from the last level, levels are removed while `max|ū|` grows faster
/// than [`RESOLVED_GROWTH_RATE`]. There the trapezoid rules cannot follow
/// the singularity and the lower bounds would fail for discretization
/// reasons alone.
pub fn resolved_levels(field: &RadialField) -> usize {
    let n = field.levels();
    if !matches!(field.status, FieldStatus::BlownUp { .. }) {
        return n;
    }
    let h = field.grid().h();
    let lm = &field.level_max;
    let mut j = n.saturating_sub(1);
    while j > 0 && lm[j - 1] > 0.0 && (lm[j] / lm[j - 1]).ln() / h > RESOLVED_GROWTH_RATE {
        j -= 1;
    }
    j + 1
}

/// Parameters of the chain: `t₂`, `δ`, `t* = t₂ + 2δ`, `q = p/(p−1)` and
/// the splitting parameter `ε ∈ (0, p−1)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainConfig {
    pub p: f64,
    #[serde(rename = "A")]
    pub coeff: f64,
    pub t2: f64,
    pub delta: f64,
    pub t_star: f64,
    pub q: f64,
    pub epsilon: Option<f64>,
}

impl ChainConfig {
    pub fn new(p: f64, coeff: f64, t2: f64, delta: f64, epsilon: Option<f64>) -> Result<Self> {
        if !(p > 1.0 && p.is_finite()) {
            return Err(Error::invalid(format!("exponent p must exceed 1, got {p}")));
        }
        if !(coeff > 0.0 && coeff.is_finite()) {
            return Err(Error::invalid(format!("coefficient A must be positive, got {coeff}")));
        }
        if !(t2 >= 0.0 && t2.is_finite()) {
            return Err(Error::invalid(format!("t2 must be nonnegative, got {t2}")));
        }
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::invalid(format!("delta must be positive, got {delta}")));
        }
        if let Some(e) = epsilon {
            if !(e > 0.0 && e < p - 1.0) {
                return Err(Error::invalid(format!("epsilon must lie in (0, p-1) = (0, {}), got {e}", p - 1.0)));
            }
        }
        Ok(ChainConfig {
            p,
            coeff,
            t2,
            delta,
            t_star: t2 + 2.0 * delta,
            q: weight_exponent(p),
            epsilon,
        })
    }

    /// Configuration for a solved field; `ε` defaults to [`choose_epsilon`].
    pub fn for_field(field: &RadialField, t2: f64, delta: f64, epsilon: Option<f64>) -> Result<Self> {
        let nl = field
            .nonlinearity
            .ok_or_else(|| Error::invalid("field carries no nonlinearity (p, A)"))?;
        let epsilon = match epsilon {
            Some(e) => Some(e),
            None => choose_epsilon(nl.p)?,
        };
        Self::new(nl.p, nl.coeff, t2, delta, epsilon)
    }

    /// `C₀ = A·M^p·δ/2`.
    pub fn c0(&self, m: f64) -> f64 {
        self.coeff * m.powf(self.p) * self.delta / 2.0
    }

    /// Constant of the single-variable inequality, `A·2^{p−1}/(4q)`.
    pub fn c_h(&self) -> f64 {
        self.coeff * 2f64.powf(self.p - 1.0) / (4.0 * self.q)
    }

    /// Constant of the lower bound for `H`, `C₀·2^{1−p}/(q+1)`.
    pub fn c_l(&self, c0: f64) -> f64 {
        c0 * 2f64.powf(1.0 - self.p) / (self.q + 1.0)
    }

    /// Final Gronwall constant `C_H·C_L^{p−1−ε}`.
    pub fn c_g(&self, c0: f64) -> Option<f64> {
        self.epsilon.map(|e| self.c_h() * self.c_l(c0).powf(self.p - 1.0 - e))
    }

    /// Gronwall parameters `(C_g, 1+ε, s(p,ε), t*, 2t*)`.
    pub fn gronwall_params(&self, c0: f64) -> Option<Result<GronwallParams>> {
        let eps = self.epsilon?;
        let c = self.c_g(c0)?;
        Some(GronwallParams::new(
            c,
            1.0 + eps,
            s_exponent(self.p, eps),
            self.t_star,
            2.0 * self.t_star,
        ))
    }
}

fn multiple_of(x: f64, step: f64) -> bool {
    let k = (x / step).round();
    (k * step - x).abs() <= LATTICE_TOL * step.max(x.abs())
}

/// Checks that `t₂` sits on the `2h` lattice and `δ` on the `h` lattice, so
/// that every region and the `(α, β)` sampling lattice are node aligned.
pub(crate) fn check_alignment(field: &RadialField, cfg: &ChainConfig) -> Result<()> {
    let h = field.grid().h();
    if !multiple_of(cfg.t2, 2.0 * h) {
        return Err(Error::invalid(format!("t2 = {} must be a multiple of 2h = {}", cfg.t2, 2.0 * h)));
    }
    if !multiple_of(cfg.delta, h) {
        return Err(Error::invalid(format!("delta = {} must be a multiple of h = {h}", cfg.delta)));
    }
    Ok(())
}

/// Default `t₂` and `δ` for a solved field and its free wave `ū⁰`.
///
/// `t₂` is the smallest multiple of `2h` such that `ū⁰ ≥ 0` on the forward
/// cone `{r ≤ t − t₂}` and `ū(δ, t₂ + δ) > 0`; `δ = max(4h, ρ/8)` rounded up
/// to the lattice.
pub fn select_t2_delta(field: &RadialField, u0: &RadialField) -> Result<(f64, f64)> {
    let grid = *field.grid();
    let h = grid.h();
    let rho = u0
        .support
        .or(field.support)
        .ok_or_else(|| Error::invalid("support radius of the data is unknown"))?;
    let delta = (((4.0 * h).max(rho / 8.0)) / h - LATTICE_TOL).ceil().max(1.0) * h;
    let d = (delta / h).round() as usize;
    // latest t − r at which the free wave is negative
    let mut last_negative: Option<usize> = None;
    for j in 0..u0.levels().min(grid.nt() + 1) {
        for i in 0..=grid.nr().min(j) {
            if u0.at(i, j) < 0.0 {
                let k = j - i;
                last_negative = Some(last_negative.map_or(k, |m| m.max(k)));
            }
        }
    }
    let mut k2 = match last_negative {
        None => 0,
        Some(k) => {
            let k = k + 1;
            k + k % 2
        }
    };
    while k2 + d < field.levels() {
        if d <= grid.nr() && field.at(d, k2 + d) > 0.0 {
            return Ok((k2 as f64 * h, delta));
        }
        k2 += 2;
    }
    Err(Error::NoAdmissibleCone(
        "no t2 inside the grid with a nonnegative free wave in its cone and u(δ, t2+δ) > 0".into(),
    ))
}

/// Row-wise cumulative trapezoid sums of `λ·|ū(λ, s_j)|^p`.
pub(crate) struct PowerRows {
    h: f64,
    nr: usize,
    g: Vec<Vec<f64>>,
    cum: Vec<Vec<f64>>,
}

impl PowerRows {
    pub(crate) fn new(field: &RadialField, p: f64) -> Self {
        let grid = field.grid();
        let h = grid.h();
        let mut g = Vec::with_capacity(field.levels());
        let mut cum = Vec::with_capacity(field.levels());
        for j in 0..field.levels() {
            let row: Vec<f64> = field
                .row(j)
                .iter()
                .enumerate()
                .map(|(i, v)| i as f64 * h * v.abs().powf(p))
                .collect();
            let mut c = vec![0.0; row.len()];
            for i in 1..row.len() {
                c[i] = c[i - 1] + 0.5 * h * (row[i - 1] + row[i]);
            }
            g.push(row);
            cum.push(c);
        }
        PowerRows {
            h,
            nr: grid.nr(),
            g,
            cum,
        }
    }

    /// `∫₀^x` of the piecewise-linear interpolant of row `j`.
    fn prefix(&self, j: usize, x: f64) -> f64 {
        let pos = (x / self.h).clamp(0.0, self.nr as f64);
        let k = (pos.floor() as usize).min(self.nr.saturating_sub(1));
        let w = pos - k as f64;
        if self.nr == 0 {
            return 0.0;
        }
        let (g0, g1) = (self.g[j][k], self.g[j][k + 1]);
        let gx = g0 + w * (g1 - g0);
        self.cum[j][k] + 0.5 * w * self.h * (g0 + gx)
    }

    fn row_integral(&self, j: usize, lo: f64, hi: f64) -> f64 {
        let lo = lo.max(0.0);
        if hi <= lo {
            0.0
        } else {
            self.prefix(j, hi) - self.prefix(j, lo)
        }
    }

    /// `∬ λ|ū|^p dλ ds` over `{s_a ≤ s ≤ s_b, lo(s) ≤ λ ≤ hi(s)}`: row
    /// trapezoids on lattice rows, trapezoid in `s`, with the rows at
    /// off-lattice ends interpolated between neighbouring levels.
    pub(crate) fn region_integral<B: Fn(f64) -> (f64, f64)>(&self, s_a: f64, s_b: f64, bounds: B) -> f64 {
        if s_b <= s_a {
            return 0.0;
        }
        let h = self.h;
        let row_at = |s: f64| -> f64 {
            let (lo, hi) = bounds(s);
            let pos = s / h;
            let k = pos.round();
            if (pos - k).abs() <= LATTICE_TOL * pos.max(1.0) {
                self.row_integral(k as usize, lo, hi)
            } else {
                let j = pos.floor() as usize;
                let w = pos - j as f64;
                let j1 = (j + 1).min(self.g.len() - 1);
                (1.0 - w) * self.row_integral(j, lo, hi) + w * self.row_integral(j1, lo, hi)
            }
        };
        let first = (s_a / h - LATTICE_TOL).ceil() as usize;
        let last = (s_b / h + LATTICE_TOL).floor() as usize;
        let mut points: Vec<(f64, f64)> = Vec::with_capacity(last.saturating_sub(first) + 3);
        let push = |points: &mut Vec<(f64, f64)>, s: f64| {
            if points.last().is_none_or(|&(t, _)| s - t > LATTICE_TOL * h) {
                points.push((s, row_at(s)));
            }
        };
        push(&mut points, s_a);
        for k in first..=last {
            push(&mut points, k as f64 * h);
        }
        push(&mut points, s_b);
        points
            .windows(2)
            .map(|w| 0.5 * (w[1].0 - w[0].0) * (w[0].1 + w[1].1))
            .sum()
    }
}

/// `M = A·∬_T (λ/2)|ū|^p dλ ds` over `T(t₂, δ)`, so that `ū ≥ M/r` on `Q`.
pub fn compute_m(field: &RadialField, t2: f64, delta: f64) -> Result<f64> {
    let nl = field
        .nonlinearity
        .ok_or_else(|| Error::invalid("field carries no nonlinearity (p, A)"))?;
    Region::t(t2, delta)?;
    let grid = field.grid();
    if t2 + delta > field.last_time() + LATTICE_TOL * grid.h() || t2 + 2.0 * delta > grid.r_max() {
        return Err(Error::OutOfGrid(format!(
            "T(t2 = {t2}, delta = {delta}) needs t up to {} and r up to {}",
            t2 + delta,
            t2 + 2.0 * delta
        )));
    }
    let rows = PowerRows::new(field, nl.p);
    let integral = rows.region_integral(0.0, t2 + delta, |s| {
        ((t2 + delta - s).max(s - t2).max(0.0), t2 + 2.0 * delta - s)
    });
    Ok(nl.coeff * 0.5 * integral)
}

/// Verdict of one residual table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict {
    Holds,
    Violated { r: f64, t: Option<f64> },
    Skipped { reason: String },
}

impl Verdict {
    pub fn holds(&self) -> bool {
        matches!(self, Verdict::Holds)
    }
}

/// One checked instance `lhs ≥ rhs`. For single-variable inequalities `t`
/// is absent and `r` holds the variable.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualRow {
    pub r: f64,
    pub t: Option<f64>,
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
    pub tol: f64,
}

/// Largest number of rows kept per table for output; the verdict and the
/// worst row always use every checked instance.
pub const MAX_TABLE_ROWS: usize = 2000;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ResidualTable {
    pub id: String,
    pub statement: String,
    pub checked: usize,
    pub min_residual: f64,
    /// Row with the smallest `residual / tol`.
    pub worst: Option<ResidualRow>,
    pub verdict: Verdict,
    #[serde(skip)]
    pub rows: Vec<ResidualRow>,
}

pub(crate) struct TableBuilder {
    id: &'static str,
    statement: &'static str,
    h2: f64,
    rows: Vec<ResidualRow>,
}

impl TableBuilder {
    pub(crate) fn new(id: &'static str, statement: &'static str, h: f64) -> Self {
        TableBuilder {
            id,
            statement,
            h2: h * h,
            rows: Vec::new(),
        }
    }

    pub(crate) fn push(&mut self, r: f64, t: Option<f64>, lhs: f64, rhs: f64) {
        let tol = 1e-9f64.max(50.0 * self.h2 * lhs.abs().max(rhs.abs()));
        self.rows.push(ResidualRow {
            r,
            t,
            lhs,
            rhs,
            residual: lhs - rhs,
            tol,
        });
    }

    pub(crate) fn skipped(id: &'static str, statement: &'static str, reason: impl Into<String>) -> ResidualTable {
        ResidualTable {
            id: id.into(),
            statement: statement.into(),
            checked: 0,
            min_residual: f64::NAN,
            worst: None,
            verdict: Verdict::Skipped { reason: reason.into() },
            rows: Vec::new(),
        }
    }

    pub(crate) fn finish(self) -> ResidualTable {
        let checked = self.rows.len();
        let mut min_residual = f64::INFINITY;
        let mut worst: Option<ResidualRow> = None;
        let mut failed: Option<ResidualRow> = None;
        let mut finite = true;
        for row in &self.rows {
            finite &= row.residual.is_finite() || row.residual == f64::INFINITY;
            min_residual = min_residual.min(row.residual);
            let score = row.residual / row.tol;
            if worst.is_none_or(|w| score < w.residual / w.tol) {
                worst = Some(*row);
            }
            if failed.is_none() && !(row.residual >= -row.tol) {
                failed = Some(*row);
            }
        }
        let verdict = if checked == 0 {
            Verdict::Skipped {
                reason: "no admissible sample points".into(),
            }
        } else if let Some(row) = failed {
            Verdict::Violated { r: row.r, t: row.t }
        } else if !finite {
            Verdict::Violated { r: f64::NAN, t: None }
        } else {
            Verdict::Holds
        };
        let rows = if checked > MAX_TABLE_ROWS {
            let stride = checked.div_ceil(MAX_TABLE_ROWS);
            let mut kept: Vec<ResidualRow> = self.rows.iter().step_by(stride).copied().collect();
            if let Some(w) = worst {
                kept.push(w);
            }
            kept
        } else {
            self.rows
        };
        ResidualTable {
            id: self.id.into(),
            statement: self.statement.into(),
            checked,
            min_residual,
            worst,
            verdict,
            rows,
        }
    }
}

/// A constant of the chain with its defining formula.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NamedConstant {
    pub name: String,
    pub value: f64,
    pub formula: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub config: ChainConfig,
    #[serde(rename = "M")]
    pub m: f64,
    #[serde(rename = "C0")]
    pub c0: f64,
    pub c_chain: Vec<NamedConstant>,
    /// `s(p, ε)` when an admissible `ε` exists.
    pub s: Option<f64>,
    pub field_status: FieldStatus,
    /// Last time level entering the residual tables.
    pub checked_until: f64,
    /// Largest `α` at which `H` is available.
    pub h_valid_until: f64,
    pub tables: Vec<ResidualTable>,
    pub all_hold: bool,
    pub notes: Vec<String>,
}

impl DiagnosticsReport {
    pub fn table(&self, id: &str) -> Option<&ResidualTable> {
        self.tables.iter().find(|t| t.id == id)
    }

    pub fn constant(&self, name: &str) -> Option<f64> {
        self.c_chain.iter().find(|c| c.name == name).map(|c| c.value)
    }

    /// Gronwall parameters for the final inequality, if `ε` exists.
    pub fn gronwall_params(&self) -> Option<Result<GronwallParams>> {
        self.config.gronwall_params(self.c0)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Residual rows of every table as CSV
    /// `inequality_id,r,t,lhs,rhs,residual`.
    pub fn write_residual_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["inequality_id", "r", "t", "lhs", "rhs", "residual"])?;
        for table in &self.tables {
            for row in &table.rows {
                w.write_record([
                    table.id.clone(),
                    fmt_value(row.r),
                    fmt_opt(row.t),
                    fmt_value(row.lhs),
                    fmt_value(row.rhs),
                    fmt_value(row.residual),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

fn nonlinearity(field: &RadialField) -> Result<(f64, f64)> {
    field
        .nonlinearity
        .map(|n| (n.p, n.coeff))
        .ok_or_else(|| Error::invalid("field carries no nonlinearity (p, A)"))
}

fn check_sigma_prime(cfg: &ChainConfig, alpha: f64, beta: f64) -> Result<()> {
    let slack = LATTICE_TOL * alpha.abs().max(1.0);
    if beta < cfg.t_star - slack || beta > alpha + slack {
        return Err(Error::OutsideSigmaPrime {
            alpha,
            beta,
            t_star: cfg.t_star,
        });
    }
    Ok(())
}

/// `F(α, β) = ū((α−β)/2, (α+β)/2)` by bilinear interpolation, on `Σ′`.
pub fn f_of(field: &RadialField, cfg: &ChainConfig, alpha: f64, beta: f64) -> Result<f64> {
    check_sigma_prime(cfg, alpha, beta)?;
    field.interpolate(((alpha - beta) / 2.0).max(0.0), (alpha + beta) / 2.0)
}

/// `G(α, β) = (α−β)^q F(α, β)`.
pub fn g_of(field: &RadialField, cfg: &ChainConfig, alpha: f64, beta: f64) -> Result<f64> {
    let f = f_of(field, cfg, alpha, beta)?;
    let w = (alpha - beta).max(0.0);
    Ok(if w == 0.0 { 0.0 } else { w.powf(cfg.q) * f })
}

/// `H(r) = ∫_{t*}^r G(r, β) dβ`, trapezoid with spacing close to `2h`.
pub fn h_of(field: &RadialField, cfg: &ChainConfig, r: f64) -> Result<f64> {
    if r < cfg.t_star - LATTICE_TOL * r.abs().max(1.0) {
        return Err(Error::OutsideSigmaPrime {
            alpha: r,
            beta: cfg.t_star,
            t_star: cfg.t_star,
        });
    }
    let len = (r - cfg.t_star).max(0.0);
    if len == 0.0 {
        return Ok(0.0);
    }
    let h = field.grid().h();
    let n = ((len / (2.0 * h)) - LATTICE_TOL).ceil().max(1.0) as usize;
    let step = len / n as f64;
    let mut acc = 0.0;
    for k in 0..=n {
        let beta = if k == n { r } else { cfg.t_star + k as f64 * step };
        let w = if k == 0 || k == n { 0.5 } else { 1.0 };
        acc += w * g_of(field, cfg, r, beta)?;
    }
    Ok(acc * step)
}

/// `H` on the lattice `α = t* + 2kh` for every `α` the field supports.
///
/// For a blown-up field one final `+∞` sample marks where the solution,
/// and with it `H`, ceases to exist.
pub fn h_samples(field: &RadialField, cfg: &ChainConfig) -> Result<SampledFunction> {
    check_alignment(field, cfg)?;
    nonlinearity(field)?;
    let lattice = chain::Lattice::new(field, cfg)?;
    let mut values = lattice.h_values();
    let step = 2.0 * field.grid().h();
    if matches!(field.status, FieldStatus::BlownUp { .. }) {
        values.push(f64::INFINITY);
    }
    SampledFunction::new(cfg.t_star, step, values)
}
