//! JSON configuration documents. Unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::spherical_means::RadialProfile;
use crate::wave_solver::{Problem, SolverOptions, DEFAULT_BLOWUP_THRESHOLD, DEFAULT_DIVERGENCE_FACTOR};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemConfig,
    pub grid: GridConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub diagnostics: DiagnosticsConfig,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub p: f64,
    #[serde(rename = "A")]
    pub coeff: f64,
    pub data: DataConfig,
}

/// Which initial datum a bump profile is assigned to.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Component {
    #[default]
    Velocity,
    Displacement,
}

/// Initial data: the bump `amplitude·(1 − r²/ρ²)₊³` in one component, or
/// radial profiles read from `r,value` CSV files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "profile", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DataConfig {
    Bump {
        amplitude: f64,
        rho: f64,
        #[serde(default)]
        component: Component,
    },
    CustomCsv {
        #[serde(default)]
        f: Option<PathBuf>,
        #[serde(default)]
        g: Option<PathBuf>,
        #[serde(default = "one")]
        amplitude: f64,
    },
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub h: f64,
    pub t_max: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default = "default_threshold")]
    pub blowup_threshold: f64,
    #[serde(default = "default_divergence")]
    pub divergence_factor: f64,
}

fn default_threshold() -> f64 {
    DEFAULT_BLOWUP_THRESHOLD
}

fn default_divergence() -> f64 {
    DEFAULT_DIVERGENCE_FACTOR
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            blowup_threshold: DEFAULT_BLOWUP_THRESHOLD,
            divergence_factor: DEFAULT_DIVERGENCE_FACTOR,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsConfig {
    #[serde(default = "yes")]
    pub auto_t2: bool,
    #[serde(default)]
    pub t2: Option<f64>,
    #[serde(default)]
    pub delta: Option<f64>,
    #[serde(default)]
    pub epsilon: Option<f64>,
}

fn yes() -> bool {
    true
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        DiagnosticsConfig {
            auto_t2: true,
            t2: None,
            delta: None,
            epsilon: None,
        }
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must be positive and finite, got {v}")))
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.problem.p > 1.0 && self.problem.p.is_finite()) {
            return Err(Error::Config(format!("problem.p must exceed 1, got {}", self.problem.p)));
        }
        positive("problem.A", self.problem.coeff)?;
        match &self.problem.data {
            DataConfig::Bump { amplitude, rho, .. } => {
                if !amplitude.is_finite() {
                    return Err(Error::Config(format!("problem.data.amplitude must be finite, got {amplitude}")));
                }
                positive("problem.data.rho", *rho)?;
            }
            DataConfig::CustomCsv { f, g, amplitude } => {
                if f.is_none() && g.is_none() {
                    return Err(Error::Config("problem.data: custom-csv needs f and/or g".into()));
                }
                if !amplitude.is_finite() {
                    return Err(Error::Config(format!("problem.data.amplitude must be finite, got {amplitude}")));
                }
            }
        }
        positive("grid.h", self.grid.h)?;
        positive("grid.t_max", self.grid.t_max)?;
        positive("solver.blowup_threshold", self.solver.blowup_threshold)?;
        if !(self.solver.divergence_factor > 1.0) {
            return Err(Error::Config(format!(
                "solver.divergence_factor must exceed 1, got {}",
                self.solver.divergence_factor
            )));
        }
        let d = &self.diagnostics;
        if !d.auto_t2 && d.t2.is_none() {
            return Err(Error::Config("diagnostics.t2 is required when auto_t2 is false".into()));
        }
        if let Some(delta) = d.delta {
            positive("diagnostics.delta", delta)?;
        }
        Ok(())
    }

    /// Initial data `(f̄, ḡ)`.
    pub fn profiles(&self) -> Result<(RadialProfile, RadialProfile)> {
        match &self.problem.data {
            DataConfig::Bump {
                amplitude,
                rho,
                component,
            } => {
                let bump = RadialProfile::bump(*amplitude, *rho);
                Ok(match component {
                    Component::Velocity => (RadialProfile::zero(), bump),
                    Component::Displacement => (bump, RadialProfile::zero()),
                })
            }
            DataConfig::CustomCsv { f, g, amplitude } => {
                let load = |p: &Option<PathBuf>| -> Result<RadialProfile> {
                    match p {
                        None => Ok(RadialProfile::zero()),
                        Some(path) => {
                            let file = std::fs::File::open(path).map_err(|e| {
                                Error::Config(format!("problem.data: cannot open {}: {e}", path.display()))
                            })?;
                            let prof = RadialProfile::read_csv(file)?;
                            scale_profile(prof, *amplitude)
                        }
                    }
                };
                Ok((load(f)?, load(g)?))
            }
        }
    }

    pub fn problem(&self) -> Result<Problem> {
        let (f, g) = self.profiles()?;
        Problem::new(self.problem.p, self.problem.coeff, f, g)
    }

    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions {
            blowup_threshold: self.solver.blowup_threshold,
            divergence_factor: self.solver.divergence_factor,
            compute_residual: true,
        }
    }
}

fn scale_profile(prof: RadialProfile, amplitude: f64) -> Result<RadialProfile> {
    if amplitude == 1.0 {
        return Ok(prof);
    }
    match prof {
        RadialProfile::Sampled { radii, values } => {
            RadialProfile::sampled(radii, values.into_iter().map(|v| v * amplitude).collect())
        }
        other => {
            let support = other.support();
            Ok(RadialProfile::analytic(support, move |r| amplitude * other.eval(r)))
        }
    }
}

/// A grid of runs over `p` and the data amplitude.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub p_values: Vec<f64>,
    pub amplitudes: Vec<f64>,
    pub base: RunConfig,
    #[serde(default = "one_job")]
    pub parallel_jobs: usize,
}

fn one_job() -> usize {
    1
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.p_values.is_empty() {
            return Err(Error::Config("p_values must not be empty".into()));
        }
        if self.amplitudes.is_empty() {
            return Err(Error::Config("amplitudes must not be empty".into()));
        }
        if let Some(p) = self.p_values.iter().find(|p| !(**p > 1.0 && p.is_finite())) {
            return Err(Error::Config(format!("every p must exceed 1, got {p}")));
        }
        if let Some(a) = self.amplitudes.iter().find(|a| !a.is_finite()) {
            return Err(Error::Config(format!("amplitudes must be finite, got {a}")));
        }
        if self.parallel_jobs == 0 {
            return Err(Error::Config("parallel_jobs must be at least 1".into()));
        }
        if !matches!(self.base.problem.data, DataConfig::Bump { .. }) {
            return Err(Error::Config("sweeps vary the amplitude of a bump profile".into()));
        }
        self.base.validate()
    }

    /// Configuration of the row `(p, amplitude)`.
    pub fn row_config(&self, p: f64, amplitude: f64) -> RunConfig {
        let mut cfg = self.base.clone();
        cfg.problem.p = p;
        if let DataConfig::Bump { amplitude: a, .. } = &mut cfg.problem.data {
            *a = amplitude;
        }
        cfg
    }
}

/// Input of the `gronwall` subcommand: parameters plus either sampled `H`
/// (`r,value` CSV) for a certificate or a value of `J(t₁+1)` for the radius.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GronwallConfig {
    #[serde(rename = "C")]
    pub c: f64,
    pub a: f64,
    pub b: f64,
    pub t0: f64,
    pub t1: f64,
    #[serde(default)]
    pub samples: Option<PathBuf>,
    #[serde(default, rename = "J1")]
    pub j1: Option<f64>,
}

/// Built-in fields for the `mean` subcommand.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FieldFamily {
    /// `amplitude·(1 − |x|²/ρ²)₊³`, whose mean is the profile itself.
    Bump { amplitude: f64, rho: f64 },
    /// `exp(−|x − c|²/w²)`, truncated far outside.
    OffsetGaussian { center: [f64; 3], width: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeanConfig {
    pub field: FieldFamily,
    pub radii: Vec<f64>,
    #[serde(default = "default_times")]
    pub times: Vec<f64>,
    #[serde(default = "default_degree")]
    pub degree: usize,
}

fn default_times() -> Vec<f64> {
    vec![0.0]
}

fn default_degree() -> usize {
    16
}

/// Sets `key.sub.leaf = value` in a JSON document; `value` is parsed as
/// JSON and falls back to a string.
pub fn apply_override(doc: &mut Value, spec: &str) -> Result<()> {
    let (path, raw) = spec
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override '{spec}' is not key=value")))?;
    let value: Value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut node = doc;
    let keys: Vec<&str> = path.split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(Error::Config(format!("override key '{path}' has an empty segment")));
    }
    for (n, key) in keys.iter().enumerate() {
        let obj = node
            .as_object_mut()
            .ok_or_else(|| Error::Config(format!("override '{path}': '{}' is not an object", keys[..n].join("."))))?;
        if n + 1 == keys.len() {
            obj.insert((*key).to_string(), value);
            return Ok(());
        }
        node = obj
            .entry((*key).to_string())
            .or_insert_with(|| Value::Object(Default::default()));
    }
    unreachable!("override path has at least one key")
}

/// Reads a JSON document, applies overrides and deserializes it.
pub fn load<T: DeserializeOwned>(path: &Path, overrides: &[String]) -> Result<(T, Value)> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
    parse(&text, overrides)
}

pub fn parse<T: DeserializeOwned>(text: &str, overrides: &[String]) -> Result<(T, Value)> {
    let mut doc: Value = serde_json::from_str(text).map_err(|e| Error::Config(format!("malformed JSON: {e}")))?;
    for o in overrides {
        apply_override(&mut doc, o)?;
    }
    let cfg = serde_json::from_value(doc.clone()).map_err(|e| Error::Config(e.to_string()))?;
    Ok((cfg, doc))
}
