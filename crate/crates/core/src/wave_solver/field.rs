//! The characteristic lattice and fields sampled on it.

use std::io::{BufRead, BufReader, Read, Write};

use serde::{Deserialize, Serialize};

use crate::io::{fmt_opt, fmt_value};
use crate::{Error, Result};

const LATTICE_TOL: f64 = 1e-9;

/// Uniform lattice `(i·h, j·h)`, `0 ≤ i ≤ nr`, `0 ≤ j ≤ nt`, in the `(r,t)`
/// quarter-plane. Space and time share the spacing, so characteristics
/// `t ± r = const` run through nodes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CharGrid {
    h: f64,
    nr: usize,
    nt: usize,
}

fn cells(len: f64, h: f64, what: &str) -> Result<usize> {
    let n = (len / h).round();
    if !(len >= 0.0) || (n * h - len).abs() > LATTICE_TOL * h.max(len) {
        return Err(Error::invalid(format!("{what} = {len} is not a multiple of h = {h}")));
    }
    Ok(n as usize)
}

impl CharGrid {
    pub fn new(h: f64, r_max: f64, t_max: f64) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::invalid(format!("grid spacing must be positive, got {h}")));
        }
        Ok(CharGrid {
            h,
            nr: cells(r_max, h, "r_max")?,
            nt: cells(t_max, h, "t_max")?,
        })
    }

    pub fn from_cells(h: f64, nr: usize, nt: usize) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::invalid(format!("grid spacing must be positive, got {h}")));
        }
        Ok(CharGrid { h, nr, nt })
    }

    /// Grid covering the domain of dependence of data supported in `r ≤ ρ`:
    /// `r_max` is `ρ + t_max` rounded up to the lattice.
    pub fn for_support(rho: f64, h: f64, t_max: f64) -> Result<Self> {
        let nt = cells(t_max, h, "t_max")?;
        let nr = ((rho + t_max) / h - LATTICE_TOL).ceil().max(0.0) as usize;
        Self::from_cells(h, nr, nt)
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn nr(&self) -> usize {
        self.nr
    }

    pub fn nt(&self) -> usize {
        self.nt
    }

    pub fn r_max(&self) -> f64 {
        self.nr as f64 * self.h
    }

    pub fn t_max(&self) -> f64 {
        self.nt as f64 * self.h
    }

    #[inline]
    pub fn r(&self, i: usize) -> f64 {
        i as f64 * self.h
    }

    #[inline]
    pub fn t(&self, j: usize) -> f64 {
        j as f64 * self.h
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * (self.nr + 1) + i
    }

    pub fn node_count(&self) -> usize {
        (self.nr + 1) * (self.nt + 1)
    }

    /// Lattice index of a coordinate, if it lies on the lattice.
    pub fn lattice_index(&self, x: f64) -> Option<usize> {
        let k = (x / self.h).round();
        if k < 0.0 || (k * self.h - x).abs() > LATTICE_TOL * self.h.max(x.abs()) {
            None
        } else {
            Some(k as usize)
        }
    }

    pub fn node_of(&self, r: f64, t: f64) -> Result<(usize, usize)> {
        match (self.lattice_index(r), self.lattice_index(t)) {
            (Some(i), Some(j)) if i <= self.nr && j <= self.nt => Ok((i, j)),
            (Some(_), Some(_)) => Err(Error::OutOfGrid(format!(
                "({r}, {t}) outside [0, {}] x [0, {}]",
                self.r_max(),
                self.t_max()
            ))),
            _ => Err(Error::OffLattice { r, t }),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum FieldStatus {
    Complete,
    BlownUp { t_b: f64 },
    Error { t: f64, reason: String },
}

impl FieldStatus {
    pub fn label(&self) -> &'static str {
        match self {
            FieldStatus::Complete => "complete",
            FieldStatus::BlownUp { .. } => "blown_up",
            FieldStatus::Error { .. } => "error",
        }
    }

    pub fn blowup_time(&self) -> Option<f64> {
        match self {
            FieldStatus::BlownUp { t_b } => Some(*t_b),
            _ => None,
        }
    }
}

/// Power nonlinearity `A|u|^p` a field was computed with.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Nonlinearity {
    pub p: f64,
    #[serde(rename = "A")]
    pub coeff: f64,
}

/// Integral-equation residual of a solved field.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub residual_linf: f64,
    pub residual_l2: f64,
    pub nodes: usize,
}

/// Scalar samples on a [`CharGrid`].
///
/// Only the first `levels` time rows are defined; a blown-up field stops at
/// the level before its blow-up time.
#[derive(Clone, Debug)]
pub struct RadialField {
    grid: CharGrid,
    values: Vec<f64>,
    levels: usize,
    pub status: FieldStatus,
    /// Set when the samples vanish for `r > support + t`.
    pub support: Option<f64>,
    pub nonlinearity: Option<Nonlinearity>,
    /// `max_r |value|` per defined level.
    pub level_max: Vec<f64>,
    /// `max |ū⁰|` of the free wave the field was started from.
    pub amplitude_scale: f64,
    pub residual: Option<ResidualReport>,
    /// `max |source|` the residual is measured against.
    pub source_scale: f64,
}

impl RadialField {
    pub fn zeros(grid: CharGrid) -> Self {
        RadialField {
            grid,
            values: vec![0.0; grid.node_count()],
            levels: grid.nt() + 1,
            status: FieldStatus::Complete,
            support: None,
            nonlinearity: None,
            level_max: vec![0.0; grid.nt() + 1],
            amplitude_scale: 0.0,
            residual: None,
            source_scale: 0.0,
        }
    }

    /// Samples `f(r, t)` at every node.
    pub fn from_fn<F: Fn(f64, f64) -> f64>(grid: CharGrid, f: F) -> Self {
        let mut field = Self::zeros(grid);
        for j in 0..=grid.nt() {
            for i in 0..=grid.nr() {
                field.values[grid.index(i, j)] = f(grid.r(i), grid.t(j));
            }
        }
        field.refresh_level_max();
        field
    }

    pub(crate) fn from_parts(grid: CharGrid, values: Vec<f64>, levels: usize) -> Self {
        debug_assert_eq!(values.len(), grid.node_count());
        let mut field = Self::zeros(grid);
        field.values = values;
        field.levels = levels;
        field.refresh_level_max();
        field
    }

    /// The first `levels` time levels of this field, status unchanged.
    pub fn truncated(&self, levels: usize) -> RadialField {
        let levels = levels.min(self.levels);
        let mut out = self.clone();
        out.levels = levels;
        out.level_max.truncate(levels);
        let grid = self.grid;
        for j in levels..=grid.nt() {
            for i in 0..=grid.nr() {
                out.values[grid.index(i, j)] = 0.0;
            }
        }
        out
    }

    pub fn with_support(mut self, rho: f64) -> Self {
        self.support = Some(rho);
        self
    }

    pub fn with_nonlinearity(mut self, p: f64, coeff: f64) -> Self {
        self.nonlinearity = Some(Nonlinearity { p, coeff });
        self
    }

    pub(crate) fn refresh_level_max(&mut self) {
        let grid = self.grid;
        self.level_max = (0..self.levels)
            .map(|j| {
                (0..=grid.nr())
                    .map(|i| self.values[grid.index(i, j)].abs())
                    .fold(0.0, f64::max)
            })
            .collect();
    }

    pub fn grid(&self) -> &CharGrid {
        &self.grid
    }

    /// Number of defined time levels.
    pub fn levels(&self) -> usize {
        self.levels
    }

    /// Last time at which samples are defined.
    pub fn last_time(&self) -> f64 {
        self.grid.t(self.levels.saturating_sub(1))
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.index(i, j)]
    }

    pub fn row(&self, j: usize) -> &[f64] {
        let start = self.grid.index(0, j);
        &self.values[start..start + self.grid.nr() + 1]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value_at(&self, r: f64, t: f64) -> Result<f64> {
        let (i, j) = self.grid.node_of(r, t)?;
        if j >= self.levels {
            return Err(Error::OutOfGrid(format!("t = {t} beyond the last defined level")));
        }
        Ok(self.at(i, j))
    }

    /// Bilinear interpolation at an arbitrary point of the defined part.
    pub fn interpolate(&self, r: f64, t: f64) -> Result<f64> {
        let h = self.grid.h();
        let (x, y) = (r / h, t / h);
        let last_j = self.levels.saturating_sub(1) as f64;
        let tol = LATTICE_TOL;
        if x < -tol || y < -tol || x > self.grid.nr() as f64 + tol || y > last_j + tol {
            return Err(Error::OutOfGrid(format!("({r}, {t}) outside the defined field")));
        }
        let x = x.clamp(0.0, self.grid.nr() as f64);
        let y = y.clamp(0.0, last_j);
        let i0 = (x.floor() as usize).min(self.grid.nr().saturating_sub(1));
        let j0 = (y.floor() as usize).min(self.levels.saturating_sub(2));
        let (i1, j1) = ((i0 + 1).min(self.grid.nr()), (j0 + 1).min(self.levels - 1));
        let (fx, fy) = (x - i0 as f64, y - j0 as f64);
        let v00 = self.at(i0, j0);
        let v10 = self.at(i1, j0);
        let v01 = self.at(i0, j1);
        let v11 = self.at(i1, j1);
        Ok(v00 * (1.0 - fx) * (1.0 - fy) + v10 * fx * (1.0 - fy) + v01 * (1.0 - fx) * fy + v11 * fx * fy)
    }

    /// Space-time dilation `(r, t) → (√A r, √A t)` normalising the
    /// coefficient of `A|u|^p` to one. Samples are unchanged; the lattice
    /// spacing and support scale by `√A`.
    pub fn dilated_to_unit_coefficient(&self) -> Result<RadialField> {
        let nl = self
            .nonlinearity
            .ok_or_else(|| Error::invalid("field carries no nonlinearity"))?;
        let scale = nl.coeff.sqrt();
        let mut out = self.clone();
        out.grid = CharGrid::from_cells(self.grid.h * scale, self.grid.nr, self.grid.nt)?;
        out.support = self.support.map(|s| s * scale);
        out.nonlinearity = Some(Nonlinearity { p: nl.p, coeff: 1.0 });
        out.status = match &self.status {
            FieldStatus::BlownUp { t_b } => FieldStatus::BlownUp { t_b: t_b * scale },
            FieldStatus::Error { t, reason } => FieldStatus::Error {
                t: t * scale,
                reason: reason.clone(),
            },
            FieldStatus::Complete => FieldStatus::Complete,
        };
        Ok(out)
    }

    /// Writes the field as CSV: one `#` metadata line, then `r,t,value` rows
    /// for the defined levels, row-major by `t`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let nl = self.nonlinearity;
        let mut out = std::io::BufWriter::new(out);
        writeln!(
            out,
            "# h={},p={},A={},status={},t_b={},rho={},r_max={},t_max={}",
            fmt_value(self.grid.h),
            fmt_opt(nl.map(|n| n.p)),
            fmt_opt(nl.map(|n| n.coeff)),
            self.status.label(),
            fmt_opt(self.status.blowup_time()),
            fmt_opt(self.support),
            fmt_value(self.grid.r_max()),
            fmt_value(self.grid.t_max()),
        )?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["r", "t", "value"])?;
        for j in 0..self.levels {
            let t = fmt_value(self.grid.t(j));
            for i in 0..=self.grid.nr() {
                w.write_record([fmt_value(self.grid.r(i)).as_str(), t.as_str(), &fmt_value(self.at(i, j))])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_bytes(&self) -> Result<Vec<u8>> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(buf)
    }

    pub fn read_csv<R: Read>(input: R) -> Result<RadialField> {
        let mut reader = BufReader::new(input);
        let mut first = String::new();
        reader.read_line(&mut first)?;
        let meta = first
            .trim()
            .strip_prefix('#')
            .ok_or_else(|| Error::Parse("field CSV must start with a '# h=...' metadata line".into()))?;
        let mut get = std::collections::BTreeMap::new();
        for kv in meta.split(',') {
            let (k, v) = kv
                .trim()
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("bad metadata entry '{kv}'")))?;
            get.insert(k.to_string(), v.to_string());
        }
        let num = |k: &str| -> Result<Option<f64>> {
            match get.get(k).map(|s| s.as_str()) {
                None | Some("") => Ok(None),
                Some(s) => s
                    .parse::<f64>()
                    .map(Some)
                    .map_err(|e| Error::Parse(format!("metadata {k}: {e}"))),
            }
        };
        let req = |k: &str| -> Result<f64> {
            num(k)?.ok_or_else(|| Error::Parse(format!("metadata key '{k}' missing")))
        };
        let grid = CharGrid::new(req("h")?, req("r_max")?, req("t_max")?)?;
        let status = match get.get("status").map(|s| s.as_str()) {
            Some("complete") => FieldStatus::Complete,
            Some("blown_up") => FieldStatus::BlownUp { t_b: req("t_b")? },
            Some("error") => FieldStatus::Error {
                t: num("t_b")?.unwrap_or(f64::NAN),
                reason: "read from file".into(),
            },
            other => return Err(Error::Parse(format!("unknown status {other:?}"))),
        };
        let mut values = vec![0.0; grid.node_count()];
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let mut count = 0usize;
        let stride = grid.nr() + 1;
        for rec in rdr.records() {
            let rec = rec?;
            if rec.len() != 3 {
                return Err(Error::Parse(format!("field row {} has {} columns", count + 3, rec.len())));
            }
            if count >= values.len() {
                return Err(Error::Parse("field CSV has more rows than its grid".into()));
            }
            let v: f64 = rec[2]
                .trim()
                .parse()
                .map_err(|e| Error::Parse(format!("field row {}: {e}", count + 3)))?;
            values[count] = v;
            count += 1;
        }
        if count == 0 || !count.is_multiple_of(stride) {
            return Err(Error::Parse(format!(
                "field CSV truncated: {count} rows is not a whole number of levels of {stride}"
            )));
        }
        let levels = count / stride;
        let mut field = RadialField::from_parts(grid, values, levels);
        field.status = status;
        field.support = num("rho")?;
        if let (Some(p), Some(coeff)) = (num("p")?, num("A")?) {
            field.nonlinearity = Some(Nonlinearity { p, coeff });
        }
        Ok(field)
    }
}
