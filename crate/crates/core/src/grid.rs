//! Rectilinear space-time grids and the sampled fields that live on them.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geometry::SpaceTimePoint;
use crate::params::MediumParams;

/// Values above this are "numerically infinite" unless a caller overrides it.
pub const DEFAULT_INFINITY_THRESHOLD: f64 = 1e12;

/// Uniform tensor grid on a spatial box times a uniform set of time levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub nx: Vec<usize>,
    pub t_lo: f64,
    pub t_hi: f64,
    pub nt: usize,
}

impl GridSpec {
    pub fn new(lo: &[f64], hi: &[f64], nx: &[usize], t_lo: f64, t_hi: f64, nt: usize) -> Result<Self> {
        if nt < 2 || !(t_hi > t_lo) {
            return invalid("space-time grid needs nt >= 2 and t_hi > t_lo");
        }
        Self::build(lo, hi, nx, t_lo, t_hi, nt)
    }

    /// A purely spatial grid: a single time level at `t`.
    pub fn spatial(lo: &[f64], hi: &[f64], nx: &[usize], t: f64) -> Result<Self> {
        Self::build(lo, hi, nx, t, t, 1)
    }

    /// Same box and node count on every axis.
    pub fn uniform(dim: usize, lo: f64, hi: f64, nx: usize, t_lo: f64, t_hi: f64, nt: usize) -> Result<Self> {
        Self::new(&vec![lo; dim], &vec![hi; dim], &vec![nx; dim], t_lo, t_hi, nt)
    }

    fn build(lo: &[f64], hi: &[f64], nx: &[usize], t_lo: f64, t_hi: f64, nt: usize) -> Result<Self> {
        let dim = lo.len();
        if dim == 0 || dim > 3 || hi.len() != dim || nx.len() != dim {
            return invalid("grids support 1 to 3 spatial axes with matching bounds");
        }
        if nx.iter().any(|&k| k < 3) {
            return invalid("grids need at least 3 points per axis");
        }
        if lo.iter().zip(hi).any(|(a, b)| !(b > a)) {
            return invalid("grid box must have positive extent on every axis");
        }
        Ok(Self {
            lo: lo.to_vec(),
            hi: hi.to_vec(),
            nx: nx.to_vec(),
            t_lo,
            t_hi,
            nt,
        })
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn h(&self, axis: usize) -> f64 {
        (self.hi[axis] - self.lo[axis]) / (self.nx[axis] - 1) as f64
    }

    pub fn dt(&self) -> f64 {
        if self.nt < 2 {
            0.0
        } else {
            (self.t_hi - self.t_lo) / (self.nt - 1) as f64
        }
    }

    pub fn spatial_count(&self) -> usize {
        self.nx.iter().product()
    }

    pub fn len(&self) -> usize {
        self.spatial_count() * self.nt
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn time(&self, level: usize) -> f64 {
        if self.nt < 2 {
            self.t_lo
        } else if level + 1 == self.nt {
            self.t_hi
        } else {
            self.t_lo + level as f64 * self.dt()
        }
    }

    pub fn coord(&self, axis: usize, i: usize) -> f64 {
        if i + 1 == self.nx[axis] {
            self.hi[axis]
        } else {
            self.lo[axis] + i as f64 * self.h(axis)
        }
    }

    /// Multi-index of spatial node `k`; axis 0 varies fastest.
    pub fn multi_index(&self, mut k: usize) -> [usize; 3] {
        let mut idx = [0; 3];
        for (a, &n) in self.nx.iter().enumerate() {
            idx[a] = k % n;
            k /= n;
        }
        idx
    }

    pub fn linear_index(&self, idx: &[usize]) -> usize {
        let mut k = 0;
        for a in (0..self.dim()).rev() {
            k = k * self.nx[a] + idx[a];
        }
        k
    }

    pub fn node_x(&self, k: usize) -> Vec<f64> {
        let idx = self.multi_index(k);
        (0..self.dim()).map(|a| self.coord(a, idx[a])).collect()
    }

    pub fn node(&self, level: usize, k: usize) -> SpaceTimePoint {
        SpaceTimePoint::new(&self.node_x(k), self.time(level))
    }

    pub fn is_boundary(&self, k: usize) -> bool {
        let idx = self.multi_index(k);
        (0..self.dim()).any(|a| idx[a] == 0 || idx[a] + 1 == self.nx[a])
    }

    /// Neighbour of spatial node `k` one step along `axis` (`dir` is +1 or -1).
    pub fn neighbor(&self, k: usize, axis: usize, dir: isize) -> Option<usize> {
        let idx = self.multi_index(k);
        let i = idx[axis] as isize + dir;
        if i < 0 || i >= self.nx[axis] as isize {
            return None;
        }
        let stride: usize = self.nx[..axis].iter().product();
        Some(if dir > 0 { k + stride } else { k - stride })
    }

    pub fn contains_x(&self, x: &[f64]) -> bool {
        x.iter()
            .enumerate()
            .all(|(a, &v)| v >= self.lo[a] - 1e-12 && v <= self.hi[a] + 1e-12)
    }

    pub fn cell_volume(&self) -> f64 {
        (0..self.dim()).map(|a| self.h(a)).product()
    }

    /// The spatial part of this grid at a single time.
    pub fn spatial_slice(&self, t: f64) -> GridSpec {
        GridSpec {
            t_lo: t,
            t_hi: t,
            nt: 1,
            ..self.clone()
        }
    }
}

/// Field sampled on a [`GridSpec`]. Samples above the infinity threshold (or
/// non-finite ones) carry a flag instead of being trusted as numbers.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    spec: GridSpec,
    values: Vec<f64>,
    flags: Vec<bool>,
    params: Option<MediumParams>,
}

impl GridField {
    pub fn zeros(spec: GridSpec) -> Self {
        let len = spec.len();
        Self {
            spec,
            values: vec![0.0; len],
            flags: vec![false; len],
            params: None,
        }
    }

    /// Wraps raw samples, flagging anything non-finite or above `threshold`.
    pub fn from_values(spec: GridSpec, values: Vec<f64>, threshold: f64) -> Result<Self> {
        if values.len() != spec.len() {
            return invalid(format!("expected {} samples, got {}", spec.len(), values.len()));
        }
        let flags = values.iter().map(|v| !v.is_finite() || *v > threshold).collect();
        Ok(Self {
            spec,
            values,
            flags,
            params: None,
        })
    }

    pub fn from_parts(spec: GridSpec, values: Vec<f64>, flags: Vec<bool>) -> Result<Self> {
        if values.len() != spec.len() || flags.len() != spec.len() {
            return invalid("value/flag arrays do not match the grid");
        }
        if values.iter().zip(&flags).any(|(v, f)| !f && !v.is_finite()) {
            return invalid("unflagged samples must be finite");
        }
        Ok(Self {
            spec,
            values,
            flags,
            params: None,
        })
    }

    pub fn with_params(mut self, params: MediumParams) -> Self {
        self.params = Some(params);
        self
    }

    pub fn params(&self) -> Option<MediumParams> {
        self.params
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn flags(&self) -> &[bool] {
        &self.flags
    }

    pub fn index(&self, level: usize, k: usize) -> usize {
        level * self.spec.spatial_count() + k
    }

    pub fn get(&self, level: usize, k: usize) -> f64 {
        self.values[self.index(level, k)]
    }

    pub fn is_flagged(&self, level: usize, k: usize) -> bool {
        self.flags[self.index(level, k)]
    }

    pub fn set(&mut self, level: usize, k: usize, value: f64) {
        let i = self.index(level, k);
        self.values[i] = value;
        self.flags[i] = !value.is_finite();
    }

    pub fn level(&self, level: usize) -> &[f64] {
        let m = self.spec.spatial_count();
        &self.values[level * m..(level + 1) * m]
    }

    pub fn level_mut(&mut self, level: usize) -> &mut [f64] {
        let m = self.spec.spatial_count();
        &mut self.values[level * m..(level + 1) * m]
    }

    pub fn any_flagged(&self) -> bool {
        self.flags.iter().any(|&f| f)
    }

    /// Pointwise `min(v, k)`; flagged samples become exactly `k`.
    pub fn truncate(&self, k: f64) -> GridField {
        let values = self
            .values
            .iter()
            .zip(&self.flags)
            .map(|(&v, &f)| if f { k } else { v.min(k) })
            .collect();
        GridField {
            spec: self.spec.clone(),
            values,
            flags: vec![false; self.flags.len()],
            params: self.params,
        }
    }

    /// Multilinear interpolation in space at time level `level`.
    /// Returns `None` outside the grid box or when a flagged node is involved.
    pub fn interpolate_level(&self, level: usize, x: &[f64]) -> Option<f64> {
        let spec = &self.spec;
        let dim = spec.dim();
        if x.len() != dim || !spec.contains_x(x) {
            return None;
        }
        let mut base = [0usize; 3];
        let mut frac = [0f64; 3];
        for a in 0..dim {
            let u = ((x[a] - spec.lo[a]) / spec.h(a)).clamp(0.0, (spec.nx[a] - 1) as f64);
            let i = (u.floor() as usize).min(spec.nx[a] - 2);
            base[a] = i;
            frac[a] = u - i as f64;
        }
        let mut acc = 0.0;
        for corner in 0..(1usize << dim) {
            let mut w = 1.0;
            let mut idx = [0usize; 3];
            for a in 0..dim {
                let bit = (corner >> a) & 1;
                idx[a] = base[a] + bit;
                w *= if bit == 1 { frac[a] } else { 1.0 - frac[a] };
            }
            if w == 0.0 {
                continue;
            }
            let k = spec.linear_index(&idx[..dim]);
            if self.is_flagged(level, k) {
                return None;
            }
            acc += w * self.get(level, k);
        }
        Some(acc)
    }

    /// Interpolation in space and (linearly) in time.
    pub fn interpolate(&self, pt: &SpaceTimePoint) -> Option<f64> {
        let spec = &self.spec;
        if spec.nt == 1 {
            return self.interpolate_level(0, pt.x());
        }
        if pt.t < spec.t_lo - 1e-12 || pt.t > spec.t_hi + 1e-12 {
            return None;
        }
        let u = ((pt.t - spec.t_lo) / spec.dt()).clamp(0.0, (spec.nt - 1) as f64);
        let l = (u.floor() as usize).min(spec.nt - 2);
        let f = u - l as f64;
        let a = self.interpolate_level(l, pt.x())?;
        if f == 0.0 {
            return Some(a);
        }
        let b = self.interpolate_level(l + 1, pt.x())?;
        Some((1.0 - f) * a + f * b)
    }

    /// Snapshot in the plain-text CSV format (see [`GridField::from_csv`]).
    pub fn to_csv(&self) -> String {
        let spec = &self.spec;
        let (p, n) = match self.params {
            Some(m) => (m.p().to_string(), m.n().to_string()),
            None => ("nan".to_string(), spec.dim().to_string()),
        };
        let mut out = String::new();
        let _ = write!(out, "# nx={}", spec.nx[0]);
        if spec.dim() > 1 {
            let _ = write!(out, " ny={}", spec.nx[1]);
        }
        if spec.dim() > 2 {
            let _ = write!(out, " nz={}", spec.nx[2]);
        }
        let _ = writeln!(
            out,
            " nt={} x0={} x1={} t0={} t1={} p={} n={}",
            spec.nt, spec.lo[0], spec.hi[0], spec.t_lo, spec.t_hi, p, n
        );
        let m = spec.spatial_count();
        for level in 0..spec.nt {
            let t = spec.time(level);
            for k in 0..m {
                let _ = write!(out, "{t}");
                for x in spec.node_x(k) {
                    let _ = write!(out, ",{x}");
                }
                let i = self.index(level, k);
                let _ = writeln!(out, ",{},{}", self.values[i], u8::from(self.flags[i]));
            }
        }
        out
    }

    /// Parses a snapshot written by [`GridField::to_csv`]. The header carries
    /// only the first axis range; ranges of further axes are read off the rows.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::Parse("empty snapshot".into()))?;
        let header = header
            .strip_prefix('#')
            .ok_or_else(|| Error::Parse("missing '#' header".into()))?;
        let mut kv = std::collections::HashMap::new();
        for tok in header.split_whitespace() {
            let (k, v) = tok
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("bad header token '{tok}'")))?;
            kv.insert(k.to_string(), v.to_string());
        }
        let num = |k: &str| -> Result<f64> {
            kv.get(k)
                .ok_or_else(|| Error::Parse(format!("header key '{k}' missing")))?
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("header key '{k}': {e}")))
        };
        let count = |k: &str| -> Result<Option<usize>> {
            kv.get(k)
                .map(|v| v.parse::<usize>().map_err(|e| Error::Parse(format!("header key '{k}': {e}"))))
                .transpose()
        };
        let mut nx = vec![count("nx")?.ok_or_else(|| Error::Parse("header key 'nx' missing".into()))?];
        if let Some(ny) = count("ny")? {
            nx.push(ny);
        }
        if let Some(nz) = count("nz")? {
            nx.push(nz);
        }
        let nt = count("nt")?.ok_or_else(|| Error::Parse("header key 'nt' missing".into()))?;
        let dim = nx.len();
        let (t0, t1) = (num("t0")?, num("t1")?);
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (ln, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let row: Vec<f64> = line
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Parse(format!("row {}: {e}", ln + 2)))?;
            if row.len() != dim + 3 {
                return Err(Error::Parse(format!("row {} has {} columns", ln + 2, row.len())));
            }
            rows.push(row);
        }
        let mut lo = vec![num("x0")?];
        let mut hi = vec![num("x1")?];
        for a in 1..dim {
            let col = rows.iter().map(|r| r[1 + a]);
            lo.push(col.clone().fold(f64::INFINITY, f64::min));
            hi.push(col.fold(f64::NEG_INFINITY, f64::max));
        }
        let spec = if nt == 1 {
            GridSpec::spatial(&lo, &hi, &nx, t0)?
        } else {
            GridSpec::new(&lo, &hi, &nx, t0, t1, nt)?
        };
        if rows.len() != spec.len() {
            return Err(Error::Parse(format!("expected {} rows, found {}", spec.len(), rows.len())));
        }
        let values = rows.iter().map(|r| r[dim + 1]).collect();
        let flags = rows.iter().map(|r| r[dim + 2] != 0.0).collect();
        let mut field = GridField::from_parts(spec, values, flags)?;
        if let (Ok(p), Ok(n)) = (num("p"), count("n")) {
            if let (Some(n), true) = (n, p.is_finite()) {
                field.params = MediumParams::new(p, n).ok();
            }
        }
        Ok(field)
    }
}
