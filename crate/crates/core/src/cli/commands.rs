//! Run orchestration behind the subcommands.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use super::config::{FieldFamily, GronwallConfig, MeanConfig, RunConfig, SweepConfig};
use crate::diagnostics::{
    check_chain, choose_epsilon, h_samples, s_exponent, select_t2_delta, ChainConfig, DiagnosticsReport,
};
use crate::gronwall::{certify, failure_radius, ln_failure_gap, GronwallCertificate, GronwallParams, SampledFunction};
use crate::io::{fmt_opt, fmt_value};
use crate::spherical_means::{spherical_mean, ScalarField3, SphereQuadrature};
use crate::wave_solver::{
    detect_blowup_time, linear_radial, solve_march_with, BlowupFit, CharGrid, FieldStatus, RadialField,
    ResidualReport,
};
use crate::{Error, Result};

pub const FIELD_FILE: &str = "field.csv";
pub const RESIDUAL_FILE: &str = "residual.json";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const DIAGNOSTICS_FILE: &str = "diagnostics.json";
pub const RESIDUAL_TABLE_FILE: &str = "residuals.csv";
pub const CERTIFICATE_FILE: &str = "certificate.json";
pub const SWEEP_FILE: &str = "sweep.csv";

/// Commit the binary was built from, or `unknown`.
pub fn commit_hash() -> &'static str {
    option_env!("BLOWUP_COMMIT").unwrap_or("unknown")
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Run record written next to the outputs; the only place with wall-clock
/// data.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub config: Value,
    pub commit: String,
    pub version: String,
    pub wall_time_s: f64,
    pub status: String,
    pub t_b: Option<f64>,
    /// SHA-256 of every output file, by file name.
    pub outputs: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep_row: Option<SweepRow>,
}

impl Manifest {
    fn new(command: &str, config: Value) -> Self {
        Manifest {
            command: command.into(),
            config,
            commit: commit_hash().into(),
            version: env!("CARGO_PKG_VERSION").into(),
            wall_time_s: 0.0,
            status: String::new(),
            t_b: None,
            outputs: BTreeMap::new(),
            sweep_row: None,
        }
    }

    fn write(&self, dir: &Path) -> Result<()> {
        fs::write(dir.join(MANIFEST_FILE), serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn read(dir: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&fs::read_to_string(dir.join(MANIFEST_FILE))?)?)
    }
}

fn write_output(dir: &Path, name: &str, bytes: &[u8], manifest: &mut Manifest) -> Result<()> {
    fs::write(dir.join(name), bytes)?;
    manifest.outputs.insert(name.into(), sha256_hex(bytes));
    Ok(())
}

#[derive(Clone, Debug, Serialize)]
struct SolveSummary<'a> {
    status: &'a FieldStatus,
    t_b: Option<f64>,
    blowup_fit: Option<BlowupFit>,
    max_amplitude_reached: f64,
    amplitude_scale: f64,
    source_scale: f64,
    residual: Option<&'a ResidualReport>,
}

pub struct SolveOutcome {
    pub field: RadialField,
    pub fit: Option<BlowupFit>,
    pub manifest: Manifest,
}

/// Grid for a run: `r_max` covers the domain of dependence of the data.
pub fn run_grid(cfg: &RunConfig, support: f64) -> Result<CharGrid> {
    CharGrid::for_support(support, cfg.grid.h, cfg.grid.t_max)
}

/// Solves the configured problem and writes `field.csv`, `residual.json`
/// and `manifest.json` into `dir`.
pub fn run_solve(cfg: &RunConfig, echo: Value, dir: &Path) -> Result<SolveOutcome> {
    cfg.validate()?;
    let started = Instant::now();
    let problem = cfg.problem()?;
    let grid = run_grid(cfg, problem.source_radius())?;
    info!(
        "solving p = {}, A = {} on h = {}, t_max = {} ({} x {} nodes)",
        problem.p,
        problem.coeff,
        grid.h(),
        grid.t_max(),
        grid.nr() + 1,
        grid.nt() + 1
    );
    let field = solve_march_with(&problem, &grid, &cfg.solver_options())?;
    let fit = detect_blowup_time(&field);
    info!("status {} after {:.2?}", field.status.label(), started.elapsed());

    fs::create_dir_all(dir)?;
    let mut manifest = Manifest::new("solve", echo);
    write_output(dir, FIELD_FILE, &field.to_csv_bytes()?, &mut manifest)?;
    let summary = SolveSummary {
        status: &field.status,
        t_b: field.status.blowup_time(),
        blowup_fit: fit,
        max_amplitude_reached: max_amplitude(&field),
        amplitude_scale: field.amplitude_scale,
        source_scale: field.source_scale,
        residual: field.residual.as_ref(),
    };
    write_output(
        dir,
        RESIDUAL_FILE,
        serde_json::to_string_pretty(&summary)?.as_bytes(),
        &mut manifest,
    )?;
    manifest.status = field.status.label().into();
    manifest.t_b = field.status.blowup_time();
    manifest.wall_time_s = started.elapsed().as_secs_f64();
    manifest.write(dir)?;
    Ok(SolveOutcome { field, fit, manifest })
}

fn max_amplitude(field: &RadialField) -> f64 {
    field.level_max.iter().copied().fold(0.0, f64::max)
}

/// Result of the certificate step of `diagnose`.
#[derive(Clone, Debug, Serialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum CertificateOutcome {
    Confirmed(GronwallCertificate),
    Skipped { reason: String },
    Unconfirmed { reason: String, extend_window: bool },
}

pub struct DiagnoseOutcome {
    pub report: DiagnosticsReport,
    pub certificate: CertificateOutcome,
}

impl DiagnoseOutcome {
    pub fn confirmed(&self) -> bool {
        self.report.all_hold && matches!(self.certificate, CertificateOutcome::Confirmed(_))
    }
}

/// Chain parameters from the config or the automatic selection.
pub fn chain_config(cfg: &RunConfig, field: &RadialField) -> Result<ChainConfig> {
    let d = &cfg.diagnostics;
    let (t2, delta) = if d.auto_t2 {
        let (f, g) = cfg.profiles()?;
        let u0 = linear_radial(&f, &g, field.grid());
        let (t2, delta) = select_t2_delta(field, &u0)?;
        (d.t2.unwrap_or(t2), d.delta.unwrap_or(delta))
    } else {
        let t2 = d.t2.ok_or_else(|| Error::Config("diagnostics.t2 is required when auto_t2 is false".into()))?;
        let h = field.grid().h();
        (t2, d.delta.unwrap_or(4.0 * h))
    };
    ChainConfig::for_field(field, t2, delta, d.epsilon)
}

/// Checks the chain on a stored field, then certifies the final inequality.
pub fn run_diagnose(cfg: &RunConfig, echo: Value, field_path: &Path, dir: &Path) -> Result<DiagnoseOutcome> {
    cfg.validate()?;
    let started = Instant::now();
    let file = fs::File::open(field_path)
        .map_err(|e| Error::Parse(format!("cannot open field {}: {e}", field_path.display())))?;
    let mut field = RadialField::read_csv(file)?;
    match field.nonlinearity {
        None => field = field.with_nonlinearity(cfg.problem.p, cfg.problem.coeff),
        Some(nl) if nl.p != cfg.problem.p || nl.coeff != cfg.problem.coeff => {
            return Err(Error::Config(format!(
                "field was computed with p = {}, A = {} but the config has p = {}, A = {}",
                nl.p, nl.coeff, cfg.problem.p, cfg.problem.coeff
            )))
        }
        Some(_) => {}
    }
    let chain = chain_config(cfg, &field)?;
    info!("t2 = {}, delta = {}, t* = {}, eps = {:?}", chain.t2, chain.delta, chain.t_star, chain.epsilon);
    let report = check_chain(&field, &chain)?;
    for t in &report.tables {
        info!("{:>20}: {:?} ({} points)", t.id, t.verdict, t.checked);
    }

    let certificate = match report.gronwall_params() {
        None => CertificateOutcome::Skipped {
            reason: format!(
                "no eps in (0, p-1) with s(p, eps) >= -1 at p = {}: the final inequality is not available",
                chain.p
            ),
        },
        Some(params) => {
            let params = params?;
            let samples = h_samples(&field, &chain)?;
            match certify(&samples, &params) {
                Ok(c) => CertificateOutcome::Confirmed(c),
                Err(e @ Error::ExtendWindow { .. }) => CertificateOutcome::Unconfirmed {
                    reason: e.to_string(),
                    extend_window: true,
                },
                Err(e) => CertificateOutcome::Unconfirmed {
                    reason: e.to_string(),
                    extend_window: false,
                },
            }
        }
    };
    match &certificate {
        CertificateOutcome::Confirmed(c) => info!(
            "certificate: violation at r = {} <= r* (ln(r* - t0) = {})",
            fmt_opt(c.violation_found_at),
            c.ln_r_star_gap
        ),
        CertificateOutcome::Skipped { reason } => warn!("certificate skipped: {reason}"),
        CertificateOutcome::Unconfirmed { reason, .. } => warn!("certificate unconfirmed: {reason}"),
    }

    fs::create_dir_all(dir)?;
    let mut manifest = Manifest::new("diagnose", echo);
    write_output(dir, DIAGNOSTICS_FILE, report.to_json()?.as_bytes(), &mut manifest)?;
    let mut table = Vec::new();
    report.write_residual_csv(&mut table)?;
    write_output(dir, RESIDUAL_TABLE_FILE, &table, &mut manifest)?;
    let cert_json = match &certificate {
        CertificateOutcome::Confirmed(c) => c.to_json()?,
        other => serde_json::to_string_pretty(other)?,
    };
    write_output(dir, CERTIFICATE_FILE, cert_json.as_bytes(), &mut manifest)?;
    manifest.status = field.status.label().into();
    manifest.t_b = field.status.blowup_time();
    manifest.wall_time_s = started.elapsed().as_secs_f64();
    manifest.write(dir)?;
    Ok(DiagnoseOutcome { report, certificate })
}

/// One line of the sweep table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub p: f64,
    pub amplitude: f64,
    pub status: String,
    pub t_b: Option<f64>,
    pub fitted_t_b: Option<f64>,
    pub max_amplitude_reached: Option<f64>,
    pub epsilon: Option<f64>,
    /// `s(p, 0) + 1 = 1 + 2p − p²`, positive exactly below `1 + √2`.
    pub s_margin: f64,
}

impl SweepRow {
    fn failed(p: f64, amplitude: f64, err: &Error) -> Self {
        SweepRow {
            p,
            amplitude,
            status: format!("error: {err}"),
            t_b: None,
            fitted_t_b: None,
            max_amplitude_reached: None,
            epsilon: choose_epsilon(p).ok().flatten(),
            s_margin: s_exponent(p, 0.0) + 1.0,
        }
    }
}

fn row_dir(root: &Path, p: f64, amplitude: f64) -> PathBuf {
    root.join(format!("p{p}_a{amplitude}"))
}

/// A finished row whose manifest matches its config and whose field file
/// still has the recorded hash.
fn resume_row(dir: &Path, echo: &Value) -> Option<SweepRow> {
    let manifest = Manifest::read(dir).ok()?;
    if &manifest.config != echo {
        return None;
    }
    let bytes = fs::read(dir.join(FIELD_FILE)).ok()?;
    (manifest.outputs.get(FIELD_FILE)? == &sha256_hex(&bytes)).then_some(())?;
    manifest.sweep_row
}

fn sweep_row(cfg: &RunConfig, p: f64, amplitude: f64, dir: &Path) -> Result<SweepRow> {
    let echo = serde_json::to_value(cfg)?;
    if let Some(row) = resume_row(dir, &echo) {
        info!("p = {p}, amplitude = {amplitude}: reusing {}", dir.display());
        return Ok(row);
    }
    let mut out = run_solve(cfg, echo, dir)?;
    let row = SweepRow {
        p,
        amplitude,
        status: out.field.status.label().into(),
        t_b: out.field.status.blowup_time(),
        fitted_t_b: out.fit.map(|f| f.fitted_t_b),
        max_amplitude_reached: Some(max_amplitude(&out.field)),
        epsilon: choose_epsilon(p)?,
        s_margin: s_exponent(p, 0.0) + 1.0,
    };
    out.manifest.sweep_row = Some(row.clone());
    out.manifest.write(dir)?;
    Ok(row)
}

/// Runs every `(p, amplitude)` pair, `p` major, and writes `sweep.csv`.
/// Failed rows are recorded and do not stop the sweep.
pub fn run_sweep(sweep: &SweepConfig, jobs: usize, root: &Path) -> Result<Vec<SweepRow>> {
    sweep.validate()?;
    fs::create_dir_all(root)?;
    let pairs: Vec<(f64, f64)> = sweep
        .p_values
        .iter()
        .flat_map(|&p| sweep.amplitudes.iter().map(move |&a| (p, a)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Config(format!("cannot start {jobs} workers: {e}")))?;
    let rows: Vec<SweepRow> = pool.install(|| {
        pairs
            .par_iter()
            .map(|&(p, a)| {
                let mut cfg = sweep.row_config(p, a);
                let dir = row_dir(root, p, a);
                cfg.output_dir = dir.clone();
                sweep_row(&cfg, p, a, &dir).unwrap_or_else(|e| {
                    warn!("p = {p}, amplitude = {a}: {e}");
                    SweepRow::failed(p, a, &e)
                })
            })
            .collect()
    });
    let mut w = csv::Writer::from_path(root.join(SWEEP_FILE))?;
    w.write_record([
        "p",
        "amplitude",
        "status",
        "t_b",
        "fitted_t_b",
        "max_amplitude_reached",
        "epsilon",
        "s_margin",
    ])?;
    for r in &rows {
        w.write_record([
            fmt_value(r.p),
            fmt_value(r.amplitude),
            r.status.clone(),
            fmt_opt(r.t_b),
            fmt_opt(r.fitted_t_b),
            fmt_opt(r.max_amplitude_reached),
            fmt_opt(r.epsilon),
            fmt_value(r.s_margin),
        ])?;
    }
    w.flush()?;
    Ok(rows)
}

/// Output of the `gronwall` subcommand.
#[derive(Clone, Debug, Serialize)]
#[serde(untagged)]
pub enum GronwallOutput {
    Certificate(GronwallCertificate),
    Radius { r_star: f64, ln_r_star_gap: f64 },
}

pub fn run_gronwall(cfg: &GronwallConfig) -> Result<GronwallOutput> {
    let params = GronwallParams::new(cfg.c, cfg.a, cfg.b, cfg.t0, cfg.t1).map_err(|e| Error::Config(e.to_string()))?;
    match (&cfg.samples, cfg.j1) {
        (Some(path), _) => {
            let h = SampledFunction::from_path(path)?;
            Ok(GronwallOutput::Certificate(certify(&h, &params)?))
        }
        (None, Some(j1)) => Ok(GronwallOutput::Radius {
            r_star: failure_radius(&params, j1)?,
            ln_r_star_gap: ln_failure_gap(&params, j1)?,
        }),
        (None, None) => Err(Error::Config("gronwall config needs 'samples' or 'J1'".into())),
    }
}

type ExactMean = Box<dyn Fn(f64) -> f64>;

fn family_field(family: &FieldFamily) -> Result<(ScalarField3, ExactMean)> {
    match *family {
        FieldFamily::Bump { amplitude, rho } => {
            if !(rho > 0.0) {
                return Err(Error::Config(format!("field.rho must be positive, got {rho}")));
            }
            let profile = move |r: f64| {
                let y = 1.0 - (r / rho).powi(2);
                if y > 0.0 {
                    amplitude * y * y * y
                } else {
                    0.0
                }
            };
            Ok((ScalarField3::radial(rho, move |r, _| profile(r))?, Box::new(profile)))
        }
        FieldFamily::OffsetGaussian { center, width } => {
            if !(width > 0.0) {
                return Err(Error::Config(format!("field.width must be positive, got {width}")));
            }
            let d = center.iter().map(|c| c * c).sum::<f64>().sqrt();
            let support = d + 8.0 * width;
            let field = ScalarField3::new(support, move |x, _| {
                let n2: f64 = x.iter().map(|v| v * v).sum();
                if n2 > support * support {
                    return 0.0;
                }
                let q: f64 = x.iter().zip(center).map(|(v, c)| (v - c) * (v - c)).sum();
                (-q / (width * width)).exp()
            })?;
            let exact = move |r: f64| {
                let w2 = width * width;
                let x = 2.0 * r * d / w2;
                let near = (-(r - d) * (r - d) / w2).exp();
                if x < 1e-8 {
                    (-(r * r + d * d) / w2).exp()
                } else {
                    near * (-(-2.0 * x).exp_m1()) / (2.0 * x)
                }
            };
            Ok((field, Box::new(exact)))
        }
    }
}

/// Spherical means of a built-in field as CSV `r,t,mean,exact`.
pub fn run_mean(cfg: &MeanConfig) -> Result<Vec<u8>> {
    if cfg.radii.iter().any(|r| !(*r >= 0.0)) {
        return Err(Error::Config("radii must be nonnegative".into()));
    }
    let (field, exact) = family_field(&cfg.field)?;
    let quad = SphereQuadrature::product_gauss(cfg.degree);
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["r", "t", "mean", "exact"])?;
    for &t in &cfg.times {
        for &r in &cfg.radii {
            let m = spherical_mean(&field, r, t, &quad);
            w.write_record([fmt_value(r), fmt_value(t), fmt_value(m), fmt_value(exact(r))])?;
        }
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}
