//! Residual tables for every step of the chain, on the `(α, β)` lattice
//! `α = t* + 2ah`, `β = t* + 2bh`, which maps onto grid nodes.

use rayon::prelude::*;

use super::{
    check_alignment, compute_m, nonlinearity, resolved_levels, RESOLVED_GROWTH_RATE, ChainConfig, DiagnosticsReport, NamedConstant, PowerRows,
    ResidualTable, TableBuilder, LATTICE_TOL,
};
use crate::diagnostics::exponent::s_exponent;
use crate::wave_solver::RadialField;
use crate::{Error, Result};

/// Number of `Σ` nodes at which the `B_{r,t}` integral is evaluated.
const BRT_SAMPLES: usize = 400;
/// Lattice points per axis in the superadditivity check.
const SUPERADDITIVE_POINTS: usize = 30;

/// `F[a][b] = ū(a−b, t*/h + a + b)` for `a + b ≤ K`.
pub(crate) struct Lattice {
    h: f64,
    t_star: f64,
    p: f64,
    q: f64,
    k: usize,
    f: Vec<Vec<f64>>,
}

impl Lattice {
    pub(crate) fn new(field: &RadialField, cfg: &ChainConfig) -> Result<Self> {
        let grid = field.grid();
        let h = grid.h();
        let ts = (cfg.t_star / h).round() as usize;
        if ts + 1 > field.levels() {
            return Err(Error::GridTooShort(format!(
                "t* = {} lies beyond the last computed level t = {}",
                cfg.t_star,
                field.last_time()
            )));
        }
        let k = field.levels() - 1 - ts;
        if k > grid.nr() {
            return Err(Error::OutOfGrid(format!(
                "the characteristic lattice needs r up to {} but the grid ends at {}",
                k as f64 * h,
                grid.r_max()
            )));
        }
        let f = (0..=k)
            .map(|a| (0..=a.min(k - a)).map(|b| field.at(a - b, ts + a + b)).collect())
            .collect();
        Ok(Lattice {
            h,
            t_star: cfg.t_star,
            p: cfg.p,
            q: cfg.q,
            k,
            f,
        })
    }

    fn alpha(&self, a: usize) -> f64 {
        self.t_star + 2.0 * a as f64 * self.h
    }

    /// Largest `a` with `H(α_a)` available.
    pub(crate) fn h_len(&self) -> usize {
        self.k / 2 + 1
    }

    fn g(&self, a: usize, b: usize) -> f64 {
        if a == b {
            0.0
        } else {
            (2.0 * (a - b) as f64 * self.h).powf(self.q) * self.f[a][b]
        }
    }

    /// Trapezoid over `b = 0..=a`, step `2h`.
    fn beta_trapezoid<F: Fn(usize) -> f64>(&self, a: usize, f: F) -> f64 {
        if a == 0 {
            return 0.0;
        }
        let inner: f64 = (1..a).map(&f).sum();
        2.0 * self.h * (0.5 * (f(0) + f(a)) + inner)
    }

    pub(crate) fn h_values(&self) -> Vec<f64> {
        (0..self.h_len()).map(|a| self.beta_trapezoid(a, |b| self.g(a, b))).collect()
    }

    /// `Y(α) = ∫ G^p (α−β)^{1−p} dβ = ∫ (α−β)^{qp+1−p} |F|^p dβ`.
    fn y_values(&self) -> Vec<f64> {
        let e = self.q * self.p + 1.0 - self.p;
        (0..self.h_len())
            .map(|a| {
                self.beta_trapezoid(a, |b| {
                    if a == b {
                        0.0
                    } else {
                        (2.0 * (a - b) as f64 * self.h).powf(e) * self.f[a][b].abs().powf(self.p)
                    }
                })
            })
            .collect()
    }

    /// `S[a][b] = ∫_{t*}^{β_b} (α_a − β′)|F(α_a, β′)|^p dβ′`.
    fn s_table(&self) -> Vec<Vec<f64>> {
        self.f
            .iter()
            .enumerate()
            .map(|(a, row)| {
                let w = |b: usize| 2.0 * (a - b) as f64 * self.h * row[b].abs().powf(self.p);
                let mut s = vec![0.0; row.len()];
                for b in 1..row.len() {
                    s[b] = s[b - 1] + self.h * (w(b - 1) + w(b));
                }
                s
            })
            .collect()
    }
}

/// Cumulative trapezoid of `values` with spacing `step`.
fn cumulative(values: &[f64], step: f64) -> Vec<f64> {
    let mut out = vec![0.0; values.len()];
    for k in 1..values.len() {
        out[k] = out[k - 1] + 0.5 * step * (values[k - 1] + values[k]);
    }
    out
}

/// `ū(r,t) ≥ C₀(t+r)^{1−p}` at every node of `Σ`, with `C₀` from the
/// given `M`.
pub fn check_pointwise_lower_bound(field: &RadialField, cfg: &ChainConfig, m: f64) -> Result<ResidualTable> {
    check_alignment(field, cfg)?;
    let grid = field.grid();
    let h = grid.h();
    let ts = (cfg.t_star / h).round() as usize;
    if ts >= field.levels() {
        return Err(Error::GridTooShort(format!(
            "Sigma is empty: last level t = {} does not exceed t* = {}",
            field.last_time(),
            cfg.t_star
        )));
    }
    let c0 = cfg.c0(m);
    let mut tb = TableBuilder::new("u_ge_C0_power", "u(r,t) >= C0 (t+r)^(1-p) on Sigma", h);
    for j in ts..field.levels() {
        for i in 0..=(j - ts).min(grid.nr()) {
            let (r, t) = (grid.r(i), grid.t(j));
            tb.push(r, Some(t), field.at(i, j), c0 * (t + r).powf(1.0 - cfg.p));
        }
    }
    Ok(tb.finish())
}

fn check_m_over_r(field: &RadialField, cfg: &ChainConfig, m: f64) -> ResidualTable {
    let grid = field.grid();
    let h = grid.h();
    let k2 = (cfg.t2 / h).round() as usize;
    let d = (cfg.delta / h).round() as usize;
    let ts = (cfg.t_star / h).round() as usize;
    let mut tb = TableBuilder::new("u_ge_M_over_r", "u(r,t) >= M/r on Q", h);
    for j in 0..field.levels() {
        for i in 1..=grid.nr().min(j) {
            let beta = j - i;
            if beta >= k2 && beta <= k2 + d && i + j >= ts {
                tb.push(grid.r(i), Some(grid.t(j)), field.at(i, j), m / grid.r(i));
            }
        }
    }
    tb.finish()
}

/// `ū(r,t) ≥ A ∬_{B_{r,t}} λ/(2r) |ū|^p` at a deterministic subsample of `Σ`.
fn check_brt(field: &RadialField, cfg: &ChainConfig, rows: &PowerRows) -> ResidualTable {
    let grid = field.grid();
    let h = grid.h();
    let ts = (cfg.t_star / h).round() as usize;
    let mut nodes = Vec::new();
    for j in ts..field.levels() {
        for i in 1..=(j - ts).min(grid.nr()) {
            nodes.push((i, j));
        }
    }
    let stride = nodes.len().div_ceil(BRT_SAMPLES).max(1);
    let t_star = cfg.t_star;
    let checked: Vec<(f64, f64, f64, f64)> = nodes
        .par_iter()
        .step_by(stride)
        .map(|&(i, j)| {
            let (r, t) = (grid.r(i), grid.t(j));
            let integral = rows.region_integral(0.5 * (t - r + t_star), t, |s| {
                ((t - r - s).max(s - t + r).max(0.0), (t + r - s).min(s - t_star))
            });
            (r, t, field.at(i, j), cfg.coeff * integral / (2.0 * r))
        })
        .collect();
    let mut tb = TableBuilder::new(
        "u_ge_Brt_integral",
        "u(r,t) >= A * int_{B_rt} lambda/(2r) u^p on Sigma",
        h,
    );
    for (r, t, lhs, rhs) in checked {
        tb.push(r, Some(t), lhs, rhs);
    }
    tb.finish()
}

/// Runs every check of the chain on the resolved levels of `field`.
pub fn check_chain(field: &RadialField, cfg: &ChainConfig) -> Result<DiagnosticsReport> {
    check_alignment(field, cfg)?;
    let keep = resolved_levels(field);
    let truncated;
    let full = field;
    let field = if keep < field.levels() {
        truncated = field.truncated(keep);
        &truncated
    } else {
        field
    };
    let (p, coeff) = nonlinearity(field)?;
    if (p - cfg.p).abs() > 1e-12 * p || (coeff - cfg.coeff).abs() > 1e-12 * coeff {
        return Err(Error::invalid(format!(
            "config (p = {}, A = {}) does not match the field (p = {p}, A = {coeff})",
            cfg.p, cfg.coeff
        )));
    }
    let needed = 2.0 * cfg.t_star + 4.0 * cfg.delta;
    if field.last_time() + LATTICE_TOL < needed {
        return Err(Error::GridTooShort(format!(
            "the chain needs levels up to t = 2t* + 4δ = {needed}, the resolved field ends at t = {}",
            field.last_time()
        )));
    }
    let h = field.grid().h();
    let m = compute_m(field, cfg.t2, cfg.delta)?;
    let c0 = cfg.c0(m);
    let c_h = cfg.c_h();
    let c_l = cfg.c_l(c0);
    let c_g = cfg.c_g(c0);
    let s = cfg.epsilon.map(|e| s_exponent(cfg.p, e));
    let lat = Lattice::new(field, cfg)?;
    let rows = PowerRows::new(field, cfg.p);

    let mut tables = Vec::new();
    tables.push(check_m_over_r(field, cfg, m));
    tables.push(check_pointwise_lower_bound(field, cfg, m)?);
    tables.push(check_brt(field, cfg, &rows));

    // pointwise bounds on the (α, β) lattice
    let s_tab = lat.s_table();
    let mut f_low = TableBuilder::new("F_lower", "F(alpha,beta) >= C0 alpha^(1-p) on Sigma'", h);
    let mut f_int = TableBuilder::new(
        "F_integral",
        "F(alpha,beta) >= A/(4(alpha-beta)) int_beta^alpha int_t*^beta (a'-b') F^p",
        h,
    );
    let mut g_int = TableBuilder::new(
        "G_integral",
        "G(alpha,beta) >= A/4 (alpha-beta)^(q-1) int int G^p (a'-b')^(1-qp)",
        h,
    );
    let max_b = lat.k / 2;
    for b in 0..=max_b {
        let beta = lat.alpha(b);
        let mut t_ab = 0.0;
        for a in b..=(lat.k - b) {
            let alpha = lat.alpha(a);
            if a > b {
                t_ab += h * (s_tab[a - 1][b] + s_tab[a][b]);
            }
            let fv = lat.f[a][b];
            f_low.push(alpha, Some(beta), fv, c0 * alpha.powf(1.0 - cfg.p));
            let rhs = if a == b {
                cfg.coeff / 4.0 * s_tab[a][a]
            } else {
                cfg.coeff / (4.0 * (alpha - beta)) * t_ab
            };
            f_int.push(alpha, Some(beta), fv, rhs);
            if a > b {
                let w = alpha - beta;
                g_int.push(alpha, Some(beta), lat.g(a, b), cfg.coeff / 4.0 * w.powf(cfg.q - 1.0) * t_ab);
            }
        }
    }
    tables.push(f_low.finish());
    tables.push(f_int.finish());
    tables.push(g_int.finish());

    // (r−β)^q − (r−α)^q ≥ (α−β)^q on lattice triples
    let mut sup = TableBuilder::new(
        "superadditivity",
        "(r-beta)^q - (r-alpha)^q >= (alpha-beta)^q for beta <= alpha <= r",
        h,
    );
    let picks: Vec<usize> = {
        let n = SUPERADDITIVE_POINTS.min(lat.k + 1);
        let mut v: Vec<usize> = (0..n).map(|k| k * lat.k / (n - 1).max(1)).collect();
        v.dedup();
        v
    };
    for (x, &ib) in picks.iter().enumerate() {
        for (y, &ia) in picks.iter().enumerate().skip(x) {
            for &ir in picks.iter().skip(y) {
                let (beta, alpha, r) = (lat.alpha(ib), lat.alpha(ia), lat.alpha(ir));
                sup.push(
                    r,
                    Some(alpha),
                    (r - beta).powf(cfg.q) - (r - alpha).powf(cfg.q),
                    (alpha - beta).powf(cfg.q),
                );
            }
        }
    }
    tables.push(sup.finish());

    // single-variable inequalities for H
    let hv = lat.h_values();
    let yv = lat.y_values();
    let step = 2.0 * h;
    let y_cum = cumulative(&yv, step);
    let mut h_double = TableBuilder::new(
        "H_double",
        "H(r) >= A/(4q) int_t*^r int_t*^alpha G^p (alpha-beta)^(1-p)",
        h,
    );
    let mut holder = TableBuilder::new(
        "holder",
        "int G^p (alpha-beta)^(1-p) dbeta >= H^p ((alpha-t*)^2/2)^(1-p)",
        h,
    );
    let single: Vec<f64> = hv
        .iter()
        .enumerate()
        .map(|(a, &hh)| {
            if a == 0 {
                0.0
            } else {
                hh.abs().powf(cfg.p) * (lat.alpha(a) - cfg.t_star).powf(2.0 - 2.0 * cfg.p)
            }
        })
        .collect();
    let single_cum = cumulative(&single, step);
    let mut h_single = TableBuilder::new(
        "H_single",
        "H(r) >= C_H int_t*^r H^p (alpha-t*)^(2-2p)",
        h,
    );
    let mut h_lower = TableBuilder::new("H_lower", "H(alpha) >= C_L (alpha-t*)^(2-p+q) for alpha >= 2t*", h);
    let a2 = (cfg.t_star / step).round() as usize;
    for a in 0..hv.len() {
        let alpha = lat.alpha(a);
        h_double.push(alpha, None, hv[a], cfg.coeff / (4.0 * cfg.q) * y_cum[a]);
        if a > 0 {
            let width = (alpha - cfg.t_star).powi(2) / 2.0;
            holder.push(alpha, None, yv[a], hv[a].abs().powf(cfg.p) * width.powf(1.0 - cfg.p));
        }
        h_single.push(alpha, None, hv[a], c_h * single_cum[a]);
        if a >= a2 {
            h_lower.push(alpha, None, hv[a], c_l * (alpha - cfg.t_star).powf(2.0 - cfg.p + cfg.q));
        }
    }
    tables.push(h_double.finish());
    tables.push(holder.finish());
    tables.push(h_single.finish());
    tables.push(h_lower.finish());

    const FINAL_ID: &str = "H_gronwall";
    const FINAL: &str = "H(r) >= C_g int_2t*^r H^(1+eps) (alpha-t*)^s for r >= 2t*";
    match (cfg.epsilon, c_g, s) {
        (Some(eps), Some(cg), Some(s)) if a2 < hv.len() => {
            let integrand: Vec<f64> = hv[a2..]
                .iter()
                .enumerate()
                .map(|(k, &hh)| hh.abs().powf(1.0 + eps) * (lat.alpha(a2 + k) - cfg.t_star).powf(s))
                .collect();
            let cum = cumulative(&integrand, step);
            let mut tb = TableBuilder::new(FINAL_ID, FINAL, h);
            for (k, &c) in cum.iter().enumerate() {
                tb.push(lat.alpha(a2 + k), None, hv[a2 + k], cg * c);
            }
            tables.push(tb.finish());
        }
        (None, _, _) => tables.push(TableBuilder::skipped(
            FINAL_ID,
            FINAL,
            format!("no eps in (0, p-1) with s(p, eps) >= -1 at p = {}", cfg.p),
        )),
        _ => tables.push(TableBuilder::skipped(FINAL_ID, FINAL, "H is not available at 2t*")),
    }

    let mut c_chain = vec![
        NamedConstant {
            name: "M".into(),
            value: m,
            formula: "A * iint_T (lambda/2) |u|^p dlambda ds".into(),
        },
        NamedConstant {
            name: "C0".into(),
            value: c0,
            formula: "A * M^p * delta / 2".into(),
        },
        NamedConstant {
            name: "q".into(),
            value: cfg.q,
            formula: "p / (p - 1)".into(),
        },
        NamedConstant {
            name: "t_integration".into(),
            value: cfg.coeff / (4.0 * cfg.q),
            formula: "A / (4q), from int_beta^alpha (r-t)^(q-1) dt and superadditivity".into(),
        },
        NamedConstant {
            name: "holder".into(),
            value: 2f64.powf(cfg.p - 1.0),
            formula: "2^(p-1), from (int (alpha-beta) dbeta)^(1-p) = 2^(p-1) (alpha-t*)^(2-2p)".into(),
        },
        NamedConstant {
            name: "C_H".into(),
            value: c_h,
            formula: "A * 2^(p-1) / (4q)".into(),
        },
        NamedConstant {
            name: "C_L".into(),
            value: c_l,
            formula: "C0 * 2^(1-p) / (q + 1)".into(),
        },
    ];
    if let (Some(eps), Some(cg)) = (cfg.epsilon, c_g) {
        c_chain.push(NamedConstant {
            name: "epsilon".into(),
            value: eps,
            formula: "0.99 * min(eps*, p - 1), eps* = (2p - p^2 + 1)/(2 - p + p/(p-1))".into(),
        });
        c_chain.push(NamedConstant {
            name: "C_g".into(),
            value: cg,
            formula: "C_H * C_L^(p-1-eps)".into(),
        });
    }

    let mut notes = Vec::new();
    if m == 0.0 {
        notes.push("M = 0: every lower bound degenerates to 0".into());
    }
    if keep < full.levels() {
        notes.push(format!(
            "levels after t = {} dropped: max|u| grows faster than exp({RESOLVED_GROWTH_RATE} t) there",
            field.last_time()
        ));
    }
    if let Some(s) = s {
        notes.push(format!("s(p, eps) + 1 = {}", s + 1.0));
    }
    let all_hold = tables.iter().all(|t| !matches!(t.verdict, super::Verdict::Violated { .. }));
    Ok(DiagnosticsReport {
        config: *cfg,
        m,
        c0,
        c_chain,
        s,
        field_status: full.status.clone(),
        checked_until: field.last_time(),
        h_valid_until: lat.alpha(hv.len() - 1),
        tables,
        all_hold,
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::{h_of, select_t2_delta, Verdict};
    use crate::spherical_means::RadialProfile;
    use crate::wave_solver::{linear_radial, solve_march, CharGrid, Problem};
    use proptest::prelude::*;

    fn small_run() -> (RadialField, RadialField) {
        let pb = Problem::new(2.0, 1.0, RadialProfile::zero(), RadialProfile::bump(10.0, 1.0)).unwrap();
        let grid = CharGrid::for_support(1.0, 1.0 / 16.0, 4.0).unwrap();
        let u = solve_march(&pb, &grid, 1e8).unwrap();
        let u0 = linear_radial(&pb.f, &pb.g, &grid);
        (u, u0)
    }

    #[test]
    fn zero_field_holds_trivially() {
        let grid = CharGrid::new(1.0 / 16.0, 6.0, 4.0).unwrap();
        let zero = RadialField::zeros(grid).with_nonlinearity(2.0, 1.0);
        let cfg = ChainConfig::new(2.0, 1.0, 0.0, 0.25, Some(0.495)).unwrap();
        let report = check_chain(&zero, &cfg).unwrap();
        assert_eq!(report.m, 0.0);
        assert!(report.all_hold);
        for t in &report.tables {
            assert!(t.checked > 0, "{} is empty", t.id);
            assert!(t.verdict.holds(), "{}: {:?}", t.id, t.verdict);
        }
    }

    #[test]
    fn chain_holds_on_a_short_run() {
        let (u, u0) = small_run();
        let (t2, delta) = select_t2_delta(&u, &u0).unwrap();
        assert_eq!((t2, delta), (0.0, 0.25));
        let cfg = ChainConfig::for_field(&u, t2, delta, None).unwrap();
        let report = check_chain(&u, &cfg).unwrap();
        assert!(report.m > 0.0);
        assert!((report.c0 - report.m * report.m * delta / 2.0).abs() <= 1e-15 * report.c0);
        for t in &report.tables {
            assert!(t.verdict.holds(), "{}: {:?} worst {:?}", t.id, t.verdict, t.worst);
        }
        let json: serde_json::Value = serde_json::from_str(&report.to_json().unwrap()).unwrap();
        assert!(json.get("M").is_some() && json.get("C0").is_some());
        let mut csv = Vec::new();
        report.write_residual_csv(&mut csv).unwrap();
        assert!(String::from_utf8(csv).unwrap().starts_with("inequality_id,r,t,lhs,rhs,residual"));
    }

    #[test]
    fn lattice_h_matches_direct_quadrature() {
        let (u, u0) = small_run();
        let (t2, delta) = select_t2_delta(&u, &u0).unwrap();
        let cfg = ChainConfig::for_field(&u, t2, delta, None).unwrap();
        let lat = Lattice::new(&u, &cfg).unwrap();
        let hv = lat.h_values();
        for a in [0usize, 3, 10, hv.len() - 1] {
            let direct = h_of(&u, &cfg, lat.alpha(a)).unwrap();
            assert!((direct - hv[a]).abs() <= 1e-12 * (1.0 + hv[a].abs()), "{a}: {direct} vs {}", hv[a]);
        }
    }

    #[test]
    fn scaled_field_violates_the_pointwise_bound() {
        let (u, u0) = small_run();
        let (t2, delta) = select_t2_delta(&u, &u0).unwrap();
        let cfg = ChainConfig::for_field(&u, t2, delta, None).unwrap();
        let m = compute_m(&u, t2, delta).unwrap();
        assert!(check_pointwise_lower_bound(&u, &cfg, m).unwrap().verdict.holds());
        // the bound has a lot of slack, so sharpen M until it is tight for u
        let grid = *u.grid();
        let ts = (cfg.t_star / grid.h()).round() as usize;
        let mut kappa = f64::INFINITY;
        for j in ts..u.levels() {
            for i in 0..=(j - ts) {
                let (r, t) = (grid.r(i), grid.t(j));
                kappa = kappa.min(u.at(i, j) / (cfg.c0(m) * (t + r).powf(1.0 - cfg.p)));
            }
        }
        assert!(kappa > 2.0);
        let tight = m * kappa.powf(1.0 / cfg.p) * (1.0 - 1e-9);
        assert!(check_pointwise_lower_bound(&u, &cfg, tight).unwrap().verdict.holds());
        let half = RadialField::from_fn(grid, |r, t| 0.5 * u.value_at(r, t).unwrap_or(0.0));
        let table = check_pointwise_lower_bound(&half, &cfg, tight).unwrap();
        assert!(matches!(table.verdict, Verdict::Violated { .. }), "{:?}", table.worst);
        assert!(check_pointwise_lower_bound(&half, &cfg, m).unwrap().verdict.holds());
    }

    #[test]
    fn q_region_bound_at_sampled_points() {
        let (u, u0) = small_run();
        let (t2, delta) = select_t2_delta(&u, &u0).unwrap();
        let m = compute_m(&u, t2, delta).unwrap();
        let h = u.grid().h();
        let mut seen = 0;
        for k in 0..100 {
            let i = 1 + k % 20;
            let beta = (t2 / h) as usize + (k / 20) % ((delta / h) as usize + 1);
            let j = beta + i;
            if (i + j) as f64 * h >= t2 + 2.0 * delta - 1e-12 && j < u.levels() {
                let r = i as f64 * h;
                assert!(u.at(i, j) * r >= m - 1e-9 - 50.0 * h * h * m, "({i}, {j})");
                seen += 1;
            }
        }
        assert!(seen > 50);
    }

    #[test]
    fn grid_too_short_is_reported() {
        let grid = CharGrid::new(1.0 / 16.0, 4.0, 1.0).unwrap();
        let one = RadialField::from_fn(grid, |_, _| 1.0).with_nonlinearity(2.0, 1.0);
        let cfg = ChainConfig::new(2.0, 1.0, 0.0, 0.25, None).unwrap();
        assert!(matches!(check_chain(&one, &cfg), Err(Error::GridTooShort(_))));
        let cfg = ChainConfig::new(2.0, 1.0, 2.0, 0.25, None).unwrap();
        assert!(matches!(check_pointwise_lower_bound(&one, &cfg, 1.0), Err(Error::GridTooShort(_))));
        let off = ChainConfig::new(2.0, 1.0, 1.0 / 16.0, 0.25, None).unwrap();
        assert!(check_chain(&one, &off).is_err());
    }

    #[test]
    fn verdicts_survive_the_unit_coefficient_dilation() {
        let pb = Problem::new(2.0, 4.0, RadialProfile::zero(), RadialProfile::bump(2.5, 1.0)).unwrap();
        let grid = CharGrid::for_support(1.0, 1.0 / 16.0, 4.0).unwrap();
        let u = solve_march(&pb, &grid, 1e8).unwrap();
        let u0 = linear_radial(&pb.f, &pb.g, &grid);
        let (t2, delta) = select_t2_delta(&u, &u0).unwrap();
        let cfg = ChainConfig::for_field(&u, t2, delta, None).unwrap();
        let before = check_chain(&u, &cfg).unwrap();
        let v = u.dilated_to_unit_coefficient().unwrap();
        let cfg_v = ChainConfig::for_field(&v, t2, delta, None).unwrap();
        let after = check_chain(&v, &cfg_v).unwrap();
        assert!((after.m - before.m).abs() > 1e-6 * before.m);
        for (x, y) in before.tables.iter().zip(&after.tables) {
            assert_eq!(x.verdict.holds(), y.verdict.holds(), "{}", x.id);
        }
    }

    #[test]
    fn superadditivity_example() {
        let (q, r, alpha, beta) = (2.0f64, 10.0f64, 4.0f64, 3.0f64);
        assert_eq!((r - beta).powf(q) - (r - alpha).powf(q), 13.0);
        assert_eq!((alpha - beta).powf(q), 1.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10_000))]
        #[test]
        fn superadditivity_of_powers(q in 1.0f64..6.0, t in 0.0f64..5.0, x in 0.0f64..1.0, y in 0.0f64..1.0, z in 0.0f64..1.0) {
            let beta = t + 3.0 * x;
            let alpha = beta + 3.0 * y;
            let r = alpha + 3.0 * z;
            let lhs = (r - beta).powf(q) - (r - alpha).powf(q);
            let rhs = (alpha - beta).powf(q);
            prop_assert!(lhs >= rhs - 1e-12 * (r - t + 1.0).powf(q));
        }
    }
}
