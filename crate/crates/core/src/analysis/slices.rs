//! Infinity slices: where a field tends to infinity as `t -> t0+`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::field::Field;
use crate::geometry::{Cylinder, CylinderShape, SpaceTimePoint};
use crate::grid::GridSpec;

pub const DEFAULT_THRESHOLDS: [f64; 4] = [1e2, 1e4, 1e6, 1e8];

/// Mask fraction below which (or above one minus which) a slice counts as
/// null (or full).
pub const EPS_ZERO: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SliceMode {
    /// `v(x, t) -> inf` as `t -> t0+` along the vertical line through `x`.
    Down,
    /// `v -> inf` on whole space-time neighborhoods above `(x, t0)`.
    Perp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceOptions {
    /// Strictly increasing threshold ladder.
    pub thresholds: Vec<f64>,
    /// Strictly decreasing positive time offsets; empty means `2^{-i}` for
    /// `i = 1..=200`, truncated where `t0 + dt` stops being distinct from `t0`.
    pub dt_ladder: Vec<f64>,
    /// Nodes per axis of the spatial grid.
    pub nodes: usize,
    /// Number of halvings of the neighborhood radius (perp mode), starting
    /// from one grid spacing.
    pub radius_levels: usize,
}

impl Default for SliceOptions {
    fn default() -> Self {
        Self {
            thresholds: DEFAULT_THRESHOLDS.to_vec(),
            dt_ladder: vec![],
            nodes: 65,
            radius_levels: 6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfinitySlice {
    pub t0: f64,
    pub mode: SliceMode,
    pub grid: GridSpec,
    pub mask: Vec<bool>,
    /// Nodes inside the open domain; the fraction is taken over these.
    pub domain: Vec<bool>,
    pub fraction: f64,
    /// Fraction times the domain volume.
    pub measure: f64,
}

impl InfinitySlice {
    pub fn flagged(&self) -> usize {
        self.mask.iter().filter(|m| **m).count()
    }

    /// Replaces the mask, recomputing fraction and measure.
    pub fn with_mask(mut self, mask: Vec<bool>, volume: f64) -> Result<Self> {
        if mask.len() != self.mask.len() {
            return invalid("mask length does not match the grid");
        }
        self.mask = mask;
        self.refresh(volume);
        Ok(self)
    }

    fn refresh(&mut self, volume: f64) {
        let total = self.domain.iter().filter(|d| **d).count();
        let hit = self.mask.iter().zip(&self.domain).filter(|(m, d)| **m && **d).count();
        self.fraction = if total == 0 { 0.0 } else { hit as f64 / total as f64 };
        self.measure = self.fraction * volume;
    }
}

fn default_dt_ladder(t0: f64) -> Vec<f64> {
    (1..=200)
        .map(|i| 0.5f64.powi(i))
        .take_while(|dt| t0 + dt > t0 && (t0 + dt - t0) / dt > 0.99)
        .collect()
}

fn check_ladders(thresholds: &[f64], dts: &[f64]) -> Result<()> {
    if thresholds.is_empty() || thresholds.windows(2).any(|w| !(w[1] > w[0])) {
        return invalid("threshold ladder must be nonempty and strictly increasing");
    }
    if dts.len() < 4 || dts.windows(2).any(|w| !(w[1] < w[0])) || dts.iter().any(|d| !(*d > 0.0)) {
        return invalid("dt ladder needs at least 4 strictly decreasing positive entries");
    }
    Ok(())
}

/// Spatial grid over `region` at time `t0` with the open-domain mask.
fn slice_grid(region: &Cylinder, t0: f64, nodes: usize) -> Result<(GridSpec, Vec<bool>)> {
    let (lo, hi) = region.bounds();
    let n = region.dim();
    let grid = GridSpec::spatial(&lo, &hi, &vec![nodes; n], t0)?;
    let domain = (0..grid.spatial_count())
        .map(|k| {
            let x = grid.node_x(k);
            match region.shape {
                CylinderShape::Box => !grid.is_boundary(k),
                CylinderShape::Ball => {
                    let d: f64 = x.iter().zip(&region.center).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
                    d < region.half_widths[0] * (1.0 - 1e-12)
                }
            }
        })
        .collect();
    Ok((grid, domain))
}

fn value(field: &dyn Field, x: &[f64], t: f64) -> f64 {
    match field.try_eval(&SpaceTimePoint::new(x, t)) {
        Ok(v) if !v.is_nan() => v,
        _ => 0.0,
    }
}

/// Flags the nodes of a grid over `region` (at `t0`) where the field tends to
/// infinity as `t -> t0+`. "For every k" runs over the threshold ladder; the
/// `dt` cutoff for each threshold must be reached within the first three
/// quarters of the `dt` ladder, so a flagged node stays above the largest
/// threshold on at least the last quarter.
pub fn detect_infinity_slice(field: &dyn Field, region: &Cylinder, t0: f64, mode: SliceMode, opts: &SliceOptions) -> Result<InfinitySlice> {
    if region.dim() != field.dim() {
        return invalid("region and field dimensions differ");
    }
    let dts = if opts.dt_ladder.is_empty() {
        default_dt_ladder(t0)
    } else {
        opts.dt_ladder.clone()
    };
    check_ladders(&opts.thresholds, &dts)?;
    let (grid, domain) = slice_grid(region, t0, opts.nodes)?;
    let k_max = *opts.thresholds.last().unwrap();
    let cutoff = (3 * dts.len()) / 4;
    let times: Vec<f64> = dts.iter().map(|dt| t0 + dt).collect();

    let down = |x: &[f64]| times[cutoff..].iter().all(|&t| value(field, x, t) > k_max);
    let perp = |x: &[f64]| -> bool {
        let n = x.len();
        let offsets = [-1.0, -0.5, 0.0, 0.5, 1.0];
        let h = grid.h(0);
        (0..opts.radius_levels).any(|j| {
            let rho = h * 0.5f64.powi(j as i32);
            // Minimum over the neighborhood at each time, then suffix minima.
            let mins: Vec<f64> = times
                .iter()
                .map(|&t| {
                    let mut m = f64::INFINITY;
                    let mut y = x.to_vec();
                    for idx in 0..5usize.pow(n as u32) {
                        let mut rem = idx;
                        for a in 0..n {
                            y[a] = x[a] + rho * offsets[rem % 5];
                            rem /= 5;
                        }
                        m = m.min(value(field, &y, t));
                    }
                    m
                })
                .collect();
            let mut suffix = f64::INFINITY;
            let mut best = f64::NEG_INFINITY;
            for i in (0..times.len()).rev() {
                suffix = suffix.min(mins[i]);
                if i <= cutoff {
                    best = best.max(suffix);
                }
            }
            best > k_max
        })
    };

    let mask: Vec<bool> = (0..grid.spatial_count())
        .into_par_iter()
        .map(|k| {
            if !domain[k] {
                return false;
            }
            let x = grid.node_x(k);
            match mode {
                SliceMode::Down => down(&x),
                // Perp points must also be down points.
                SliceMode::Perp => down(&x) && perp(&x),
            }
        })
        .collect();
    let mut slice = InfinitySlice {
        t0,
        mode,
        grid,
        mask,
        domain,
        fraction: 0.0,
        measure: 0.0,
    };
    slice.refresh(region.spatial_volume());
    Ok(slice)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DichotomyCheck {
    pub pass: bool,
    pub fraction: f64,
    /// Set when the fraction is neither null nor full.
    pub anomaly: bool,
}

/// Passes when the slice is null (fraction `<= eps_zero`) or full
/// (fraction `>= 1 - eps_zero`).
pub fn dichotomy_check(slice: &InfinitySlice, eps_zero: f64) -> DichotomyCheck {
    let f = slice.fraction;
    let pass = f <= eps_zero || f >= 1.0 - eps_zero;
    DichotomyCheck {
        pass,
        fraction: f,
        anomaly: !pass,
    }
}
