use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::params::MAX_DIM;

/// A point `(x, t)` of space-time, stored inline (`Copy`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpaceTimePoint {
    coords: [f64; MAX_DIM],
    dim: usize,
    pub t: f64,
}

impl SpaceTimePoint {
    /// Panics when `x` has more than [`MAX_DIM`] entries.
    pub fn new(x: &[f64], t: f64) -> Self {
        assert!(!x.is_empty() && x.len() <= MAX_DIM, "spatial dimension {} unsupported", x.len());
        let mut coords = [0.0; MAX_DIM];
        coords[..x.len()].copy_from_slice(x);
        Self { coords, dim: x.len(), t }
    }

    pub fn origin(dim: usize, t: f64) -> Self {
        Self::new(&vec![0.0; dim], t)
    }

    pub fn x(&self) -> &[f64] {
        &self.coords[..self.dim]
    }

    pub fn x_mut(&mut self) -> &mut [f64] {
        &mut self.coords[..self.dim]
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn norm(&self) -> f64 {
        self.x().iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn dist_to(&self, other: &[f64]) -> f64 {
        self.x()
            .iter()
            .zip(other)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    pub fn with_t(mut self, t: f64) -> Self {
        self.t = t;
        self
    }

    /// The same point moved by `delta` along spatial axis `axis`.
    pub fn shifted(mut self, axis: usize, delta: f64) -> Self {
        self.coords[axis] += delta;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CylinderShape {
    Ball,
    Box,
}

/// Space-time cylinder `D x (t_lo, t_hi)` where `D` is a ball or an
/// axis-aligned box around `center`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cylinder {
    pub center: Vec<f64>,
    /// One entry per axis for boxes; a single radius for balls.
    pub half_widths: Vec<f64>,
    pub t_lo: f64,
    pub t_hi: f64,
    pub shape: CylinderShape,
}

impl Cylinder {
    pub fn ball(center: &[f64], radius: f64, t_lo: f64, t_hi: f64) -> Result<Self> {
        Self::checked(Self {
            center: center.to_vec(),
            half_widths: vec![radius],
            t_lo,
            t_hi,
            shape: CylinderShape::Ball,
        })
    }

    pub fn boxed(center: &[f64], half_widths: &[f64], t_lo: f64, t_hi: f64) -> Result<Self> {
        Self::checked(Self {
            center: center.to_vec(),
            half_widths: half_widths.to_vec(),
            t_lo,
            t_hi,
            shape: CylinderShape::Box,
        })
    }

    /// Box with the same half-width on every axis.
    pub fn cube(center: &[f64], half_width: f64, t_lo: f64, t_hi: f64) -> Result<Self> {
        Self::boxed(center, &vec![half_width; center.len()], t_lo, t_hi)
    }

    fn checked(c: Self) -> Result<Self> {
        if c.center.is_empty() || c.center.len() > MAX_DIM {
            return invalid(format!("cylinder dimension {} unsupported", c.center.len()));
        }
        if c.shape == CylinderShape::Box && c.half_widths.len() != c.center.len() {
            return invalid("box cylinder needs one half-width per axis");
        }
        if c.half_widths.iter().any(|&w| !(w > 0.0) || !w.is_finite()) {
            return invalid("cylinder needs positive spatial extent");
        }
        if !(c.t_hi > c.t_lo) || !c.t_lo.is_finite() || !c.t_hi.is_finite() {
            return invalid("cylinder needs positive temporal extent");
        }
        Ok(c)
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn half_width(&self, axis: usize) -> f64 {
        match self.shape {
            CylinderShape::Ball => self.half_widths[0],
            CylinderShape::Box => self.half_widths[axis],
        }
    }

    /// Axis-aligned bounding box `(lo, hi)` of the spatial section.
    pub fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
        let lo = (0..self.dim()).map(|a| self.center[a] - self.half_width(a)).collect();
        let hi = (0..self.dim()).map(|a| self.center[a] + self.half_width(a)).collect();
        (lo, hi)
    }

    pub fn contains_x(&self, x: &[f64]) -> bool {
        match self.shape {
            CylinderShape::Ball => {
                let r2: f64 = x.iter().zip(&self.center).map(|(a, c)| (a - c) * (a - c)).sum();
                r2 <= self.half_widths[0] * self.half_widths[0]
            }
            CylinderShape::Box => x
                .iter()
                .zip(&self.center)
                .zip(&self.half_widths)
                .all(|((a, c), w)| (a - c).abs() <= *w),
        }
    }

    pub fn contains(&self, pt: &SpaceTimePoint) -> bool {
        pt.t >= self.t_lo && pt.t <= self.t_hi && self.contains_x(pt.x())
    }

    /// Lebesgue measure of the spatial section.
    pub fn spatial_volume(&self) -> f64 {
        match self.shape {
            CylinderShape::Ball => ball_volume(self.dim(), self.half_widths[0]),
            CylinderShape::Box => self.half_widths.iter().map(|w| 2.0 * w).product(),
        }
    }
}

/// Volume of the Euclidean ball of radius `r` in `R^n`.
pub fn ball_volume(n: usize, r: f64) -> f64 {
    use std::f64::consts::PI;
    let unit = match n {
        1 => 2.0,
        2 => PI,
        3 => 4.0 / 3.0 * PI,
        4 => PI * PI / 2.0,
        _ => {
            // Recurrence V_n = 2 pi / n * V_{n-2}.
            let mut v = if n.is_multiple_of(2) { 1.0 } else { 2.0 };
            let mut k = if n.is_multiple_of(2) { 2 } else { 3 };
            while k <= n {
                v *= 2.0 * PI / k as f64;
                k += 2;
            }
            v
        }
    };
    unit * r.powi(n as i32)
}
