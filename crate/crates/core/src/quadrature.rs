//! Composite midpoint quadrature over space-time cylinders, with dyadic
//! subdivision toward a singular locus.
//!
//! Samples are gathered once into a [`SampleSet`] and then reduced with any
//! pointwise transform, so scanning many exponents `s` costs one round of
//! field evaluations. Level `l` of a set integrates down to depth `D(l)`
//! shells around the locus and closes the remaining innermost piece with a
//! plain midpoint block, so the level estimates are the partial sums of a
//! dyadic series: they converge when the integral is finite and grow
//! geometrically when it is not.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::field::{Field, SingularLocus};
use crate::geometry::{Cylinder, SpaceTimePoint};

/// Sentinel returned for integrals forced to diverge by an infinite sample.
pub const DIVERGENT: f64 = f64::INFINITY;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadOptions {
    /// Midpoints per axis in each spatial sub-box of a shell; must be even.
    pub points: usize,
    /// Midpoints per axis for uniform spatial meshes.
    pub uniform_points: usize,
    /// Midpoints per time slab.
    pub time_points: usize,
    /// Extra shells per refinement level; 0 picks 32 for time loci and 16
    /// for spatial poles.
    pub shells_per_level: usize,
    /// Also double the per-box mesh at every level.
    pub refine_mesh: bool,
    /// Extra spatial shells kept below the self-similar core radius.
    pub core_shells: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            points: 2,
            uniform_points: 8,
            time_points: 4,
            shells_per_level: 0,
            refine_mesh: false,
            core_shells: 3,
        }
    }
}

/// A quadrature sample: weight and integrand value.
type Sample = (f64, f64);

/// Shell-by-shell samples for every refinement level.
#[derive(Debug, Clone)]
pub struct SampleSet {
    /// Shared shells; level `l` uses the first `depth[l]` of them.
    shells: Vec<Vec<Sample>>,
    /// Per-level samples that are not shared (innermost blocks, or whole
    /// meshes when there is no locus).
    blocks: Vec<Vec<Sample>>,
    depth: Vec<usize>,
}

impl SampleSet {
    pub fn levels(&self) -> usize {
        self.blocks.len()
    }

    /// One estimate of `sum w g(v)` per level. Infinite samples force the
    /// level to [`DIVERGENT`]; a NaN from `g` is an error.
    pub fn reduce(&self, g: impl Fn(f64) -> f64 + Sync) -> Result<Vec<f64>> {
        let shell_sums: Vec<f64> = self.shells.par_iter().map(|s| sum_samples(s, &g)).collect();
        let mut out = Vec::with_capacity(self.levels());
        for (l, block) in self.blocks.iter().enumerate() {
            let mut acc = 0.0;
            for v in &shell_sums[..self.depth[l]] {
                acc += v;
            }
            acc += sum_samples(block, &g);
            if acc.is_nan() {
                return Err(Error::NonFiniteStencil);
            }
            out.push(if acc.is_infinite() { DIVERGENT } else { acc });
        }
        Ok(out)
    }

    /// Largest sampled value per level (for boundedness trends).
    pub fn sup(&self) -> Vec<f64> {
        let shell_max: Vec<f64> = self
            .shells
            .iter()
            .map(|s| s.iter().map(|x| x.1).fold(0.0, f64::max))
            .collect();
        self.blocks
            .iter()
            .enumerate()
            .map(|(l, b)| {
                let m = shell_max[..self.depth[l]].iter().cloned().fold(0.0, f64::max);
                b.iter().map(|x| x.1).fold(m, f64::max)
            })
            .collect()
    }
}

fn sum_samples(s: &[Sample], g: &(impl Fn(f64) -> f64 + Sync)) -> f64 {
    let mut acc = 0.0;
    for &(w, v) in s {
        if v.is_infinite() {
            return f64::INFINITY;
        }
        let gv = g(v);
        if gv != 0.0 {
            acc += w * gv;
        }
    }
    acc
}

/// Integrand: value at a point given a local cell size (used by callers that
/// difference the field).
pub trait Integrand: Sync {
    fn sample(&self, pt: &SpaceTimePoint, cell: f64) -> Result<f64>;
}

impl<F: Fn(&SpaceTimePoint, f64) -> Result<f64> + Sync> Integrand for F {
    fn sample(&self, pt: &SpaceTimePoint, cell: f64) -> Result<f64> {
        self(pt, cell)
    }
}

struct Plan<'a> {
    region: &'a Cylinder,
    dim: usize,
    /// Centre and half-width of the spatial shell box (for pole-type loci).
    pole: Option<(Vec<f64>, f64)>,
    /// Time locus and the lengths of the two sides of the interval.
    t0: Option<(f64, f64, f64)>,
    rate: Option<f64>,
    opts: &'a QuadOptions,
}

fn midpoints(lo: f64, hi: f64, m: usize) -> impl Iterator<Item = f64> {
    let h = (hi - lo) / m as f64;
    (0..m).map(move |i| lo + (i as f64 + 0.5) * h)
}

impl Plan<'_> {
    /// Spatial samples at time `t` with weight factor `wt`, into `out`.
    fn spatial(
        &self,
        f: &dyn Integrand,
        t: f64,
        wt: f64,
        depth: usize,
        m: usize,
        m_uniform: usize,
        out: &mut Vec<Sample>,
    ) -> Result<()> {
        match &self.pole {
            None => {
                let (lo, hi) = self.region.bounds();
                self.boxed(f, t, wt, &lo, &hi, m_uniform, out)
            }
            Some((c, half)) => {
                for k in 0..depth {
                    self.shell(f, t, wt, c, half * 0.5f64.powi(k as i32), m, out)?;
                }
                let w = half * 0.5f64.powi(depth as i32);
                let lo: Vec<f64> = c.iter().map(|v| v - w).collect();
                let hi: Vec<f64> = c.iter().map(|v| v + w).collect();
                self.boxed(f, t, wt, &lo, &hi, m, out)
            }
        }
    }

    /// Box of half-width `w` around `c` minus the central box of half-width
    /// `w/2`, as `4^n - 2^n` cubes of side `w/2`.
    #[allow(clippy::too_many_arguments)]
    fn shell(&self, f: &dyn Integrand, t: f64, wt: f64, c: &[f64], w: f64, m: usize, out: &mut Vec<Sample>) -> Result<()> {
        let n = self.dim;
        let side = w / 2.0;
        let mut lo = vec![0.0; n];
        let mut hi = vec![0.0; n];
        for cell in 0..4usize.pow(n as u32) {
            let mut rem = cell;
            let mut central = true;
            for a in 0..n {
                let i = rem % 4;
                rem /= 4;
                central &= i == 1 || i == 2;
                lo[a] = c[a] - w + i as f64 * side;
                hi[a] = lo[a] + side;
            }
            if !central {
                self.boxed(f, t, wt, &lo, &hi, m, out)?;
            }
        }
        Ok(())
    }

    /// Tensor midpoint rule on `[lo, hi]`, clipped to the region.
    #[allow(clippy::too_many_arguments)]
    fn boxed(&self, f: &dyn Integrand, t: f64, wt: f64, lo: &[f64], hi: &[f64], m: usize, out: &mut Vec<Sample>) -> Result<()> {
        let n = self.dim;
        let (rlo, rhi) = self.region.bounds();
        if (0..n).any(|a| hi[a] <= rlo[a] || lo[a] >= rhi[a]) {
            return Ok(());
        }
        let lo: Vec<f64> = (0..n).map(|a| lo[a].max(rlo[a])).collect();
        let hi: Vec<f64> = (0..n).map(|a| hi[a].min(rhi[a])).collect();
        let h: Vec<f64> = (0..n).map(|a| (hi[a] - lo[a]) / m as f64).collect();
        let cell_w: f64 = h.iter().product::<f64>() * wt;
        let cell = h.iter().cloned().fold(f64::INFINITY, f64::min);
        let mut x = vec![0.0; n];
        for idx in 0..m.pow(n as u32) {
            let mut rem = idx;
            for a in 0..n {
                x[a] = lo[a] + ((rem % m) as f64 + 0.5) * h[a];
                rem /= m;
            }
            if !self.region.contains_x(&x) {
                continue;
            }
            let v = f.sample(&SpaceTimePoint::new(&x, t), cell)?;
            if v.is_nan() {
                return Err(Error::NonFiniteStencil);
            }
            out.push((cell_w, v));
        }
        Ok(())
    }

    /// Spatial shell depth for a time offset `dt` from the locus time.
    fn spatial_depth(&self, dt: f64, base: usize) -> usize {
        match (self.rate, &self.pole) {
            (Some(rate), Some((c, half))) => {
                let core = dt.abs().powf(rate);
                let k = (half / core).log2().ceil().max(0.0) as usize;
                let cap = max_depth(c.iter().fold(0.0, |m, v| f64::max(m, v.abs())), *half);
                (k + self.opts.core_shells).min(cap)
            }
            _ => base,
        }
    }

    /// Time slabs `j` on both sides of the locus time.
    fn time_shell(&self, f: &dyn Integrand, j: usize, m: usize, mt: usize, mu: usize) -> Result<Vec<Sample>> {
        let (t0, below, above) = self.t0.expect("time locus");
        let mut out = Vec::new();
        for (len, sign) in [(below, -1.0), (above, 1.0)] {
            if len <= 0.0 {
                continue;
            }
            let a = len * 0.5f64.powi(j as i32 + 1);
            let b = 2.0 * a;
            if t0 + sign * a == t0 {
                continue;
            }
            let wt = (b - a) / mt as f64;
            for off in midpoints(a, b, mt) {
                let depth = self.spatial_depth(off, 0);
                self.spatial(f, t0 + sign * off, wt, depth, m, mu, &mut out)?;
            }
        }
        Ok(out)
    }

    fn time_block(&self, f: &dyn Integrand, depth: usize, m: usize, mt: usize, mu: usize) -> Result<Vec<Sample>> {
        let (t0, below, above) = self.t0.expect("time locus");
        let mut out = Vec::new();
        for (len, sign) in [(below, -1.0), (above, 1.0)] {
            if len <= 0.0 {
                continue;
            }
            let b = len * 0.5f64.powi(depth as i32);
            let wt = b / mt as f64;
            for off in midpoints(0.0, b, mt) {
                if t0 + sign * off == t0 {
                    continue;
                }
                let d = self.spatial_depth(off, 0);
                self.spatial(f, t0 + sign * off, wt, d, m, mu, &mut out)?;
            }
        }
        Ok(out)
    }

    /// Uniform in time; spatial shells (if any) to `depth`.
    fn uniform_time(&self, f: &dyn Integrand, depth: usize, m: usize, mt: usize, mu: usize) -> Result<Vec<Sample>> {
        let (lo, hi) = (self.region.t_lo, self.region.t_hi);
        let wt = (hi - lo) / mt as f64;
        let mut out = Vec::new();
        for t in midpoints(lo, hi, mt) {
            self.spatial(f, t, wt, depth, m, mu, &mut out)?;
        }
        Ok(out)
    }

    /// Shell `k` of a spatial pole at every time.
    fn pole_shell(&self, f: &dyn Integrand, k: usize, m: usize, mt: usize) -> Result<Vec<Sample>> {
        let (c, half) = self.pole.as_ref().expect("pole");
        let (lo, hi) = (self.region.t_lo, self.region.t_hi);
        let wt = (hi - lo) / mt as f64;
        let mut out = Vec::new();
        for t in midpoints(lo, hi, mt) {
            self.shell(f, t, wt, c, half * 0.5f64.powi(k as i32), m, &mut out)?;
        }
        Ok(out)
    }

    fn pole_block(&self, f: &dyn Integrand, depth: usize, m: usize, mt: usize) -> Result<Vec<Sample>> {
        let (c, half) = self.pole.as_ref().expect("pole");
        let (lo, hi) = (self.region.t_lo, self.region.t_hi);
        let wt = (hi - lo) / mt as f64;
        let w = half * 0.5f64.powi(depth as i32);
        let blo: Vec<f64> = c.iter().map(|v| v - w).collect();
        let bhi: Vec<f64> = c.iter().map(|v| v + w).collect();
        let mut out = Vec::new();
        for t in midpoints(lo, hi, mt) {
            self.boxed(f, t, wt, &blo, &bhi, m, &mut out)?;
        }
        Ok(out)
    }
}

/// Largest useful number of dyadic shells toward `center` for an extent of
/// `len`: beyond it, offsets are no longer representable next to `center`.
fn max_depth(center: f64, len: f64) -> usize {
    if len <= 0.0 {
        return 0;
    }
    let floor = (center.abs() * 1e-13).max(1e-280);
    ((len / floor).log2().floor().max(1.0)) as usize
}

/// Largest number of samples in one uniform refinement level.
const UNIFORM_BUDGET: f64 = 4.0e6;

/// Collects samples of `f` over `region` for `levels` refinement levels.
pub fn collect_samples(
    f: &dyn Integrand,
    region: &Cylinder,
    locus: Option<&SingularLocus>,
    levels: usize,
    opts: &QuadOptions,
) -> Result<SampleSet> {
    if levels == 0 {
        return invalid("at least one refinement level is needed");
    }
    let dim = region.dim();
    let mut plan = Plan {
        region,
        dim,
        pole: None,
        t0: None,
        rate: None,
        opts,
    };
    let (rlo, rhi) = region.bounds();
    let pole_box = |x0: &[f64]| -> Option<(Vec<f64>, f64)> {
        if x0.len() != dim || (0..dim).any(|a| x0[a] < rlo[a] || x0[a] > rhi[a]) {
            return None;
        }
        let half = (0..dim).map(|a| (x0[a] - rlo[a]).max(rhi[a] - x0[a])).fold(0.0, f64::max);
        Some((x0.to_vec(), half))
    };
    let time_sides = |t0: f64| -> Option<(f64, f64, f64)> {
        if t0 < region.t_lo || t0 > region.t_hi {
            None
        } else {
            Some((t0, t0 - region.t_lo, region.t_hi - t0))
        }
    };
    match locus {
        Some(SingularLocus::Slice { t0 }) => plan.t0 = time_sides(*t0),
        Some(SingularLocus::Point { x0 }) => plan.pole = pole_box(x0),
        Some(SingularLocus::SpaceTime { x0, t0, rate }) => {
            plan.t0 = time_sides(*t0);
            if plan.t0.is_some() {
                plan.pole = pole_box(x0);
                plan.rate = Some(*rate);
            }
        }
        None => {}
    }

    let mesh = |l: usize, base: usize| if opts.refine_mesh { base << l.min(6) } else { base };
    let set = if let Some((t0, below, above)) = plan.t0 {
        let per = if opts.shells_per_level == 0 { 32 } else { opts.shells_per_level };
        let cap = max_depth(t0, below.max(above));
        let depth: Vec<usize> = (0..levels).map(|l| (per * (l + 1)).min(cap)).collect();
        if opts.refine_mesh {
            // Every level is a separate, finer sample.
            let blocks: Result<Vec<Vec<Sample>>> = (0..levels)
                .into_par_iter()
                .map(|l| {
                    let (m, mt, mu) = (mesh(l, opts.points), mesh(l, opts.time_points), mesh(l, opts.uniform_points));
                    let mut all = Vec::new();
                    for j in 0..depth[l] {
                        all.extend(plan.time_shell(f, j, m, mt, mu)?);
                    }
                    all.extend(plan.time_block(f, depth[l], m, mt, mu)?);
                    Ok(all)
                })
                .collect();
            SampleSet {
                shells: vec![],
                blocks: blocks?,
                depth: vec![0; levels],
            }
        } else {
            let dmax = *depth.last().unwrap();
            let (m, mt, mu) = (opts.points, opts.time_points, opts.uniform_points);
            let shells: Result<Vec<Vec<Sample>>> =
                (0..dmax).into_par_iter().map(|j| plan.time_shell(f, j, m, mt, mu)).collect();
            let blocks: Result<Vec<Vec<Sample>>> =
                depth.par_iter().map(|&d| plan.time_block(f, d, m, mt, mu)).collect();
            SampleSet {
                shells: shells?,
                blocks: blocks?,
                depth,
            }
        }
    } else if let Some((c, half)) = &plan.pole {
        let cap = max_depth(c.iter().fold(0.0, |m, v| f64::max(m, v.abs())), *half);
        let per = if opts.shells_per_level == 0 { 16 } else { opts.shells_per_level };
        let per = per.min(cap / levels).max(1);
        let depth: Vec<usize> = (0..levels).map(|l| per * (l + 1)).collect();
        let dmax = *depth.last().unwrap();
        let (m, mt) = (opts.points, opts.time_points);
        let shells: Result<Vec<Vec<Sample>>> = (0..dmax).into_par_iter().map(|k| plan.pole_shell(f, k, m, mt)).collect();
        let blocks: Result<Vec<Vec<Sample>>> = depth.par_iter().map(|&d| plan.pole_block(f, d, m, mt)).collect();
        SampleSet {
            shells: shells?,
            blocks: blocks?,
            depth,
        }
    } else {
        let blocks: Result<Vec<Vec<Sample>>> = (0..levels)
            .into_par_iter()
            .map(|l| {
                let mt = opts.time_points << l.min(6);
                let mut mu = opts.uniform_points << l.min(6);
                while mu > opts.uniform_points && (mu as f64).powi(dim as i32) * (mt as f64) > UNIFORM_BUDGET {
                    mu /= 2;
                }
                plan.uniform_time(f, 0, opts.points, mt, mu)
            })
            .collect();
        SampleSet {
            shells: vec![],
            blocks: blocks?,
            depth: vec![0; levels],
        }
    };
    if set.blocks.iter().all(|b| b.is_empty()) && set.shells.iter().all(|s| s.is_empty()) {
        return Err(Error::EmptyRegion);
    }
    Ok(set)
}

/// `int g(v(x, t)) dx` over the spatial part of `region` at a fixed time,
/// with dyadic shells around the spatial pole of `locus` (if any) and a
/// tensor midpoint rule of `points` nodes per axis in every cube.
pub fn spatial_integral(
    field: &dyn Field,
    region: &Cylinder,
    t: f64,
    locus: Option<&SingularLocus>,
    points: usize,
    g: impl Fn(f64) -> f64 + Sync,
) -> Result<f64> {
    if points == 0 {
        return invalid("at least one quadrature point per axis is needed");
    }
    let opts = QuadOptions::default();
    let dim = region.dim();
    let mut plan = Plan {
        region,
        dim,
        pole: None,
        t0: None,
        rate: None,
        opts: &opts,
    };
    let (rlo, rhi) = region.bounds();
    let x0 = match locus {
        Some(SingularLocus::Point { x0 }) => Some(x0.clone()),
        Some(SingularLocus::SpaceTime { x0, t0, rate }) if t > *t0 => {
            plan.rate = Some(*rate);
            plan.t0 = Some((*t0, 0.0, 0.0));
            Some(x0.clone())
        }
        _ => None,
    };
    if let Some(x0) = x0.filter(|x0| x0.len() == dim && (0..dim).all(|a| x0[a] >= rlo[a] && x0[a] <= rhi[a])) {
        let half = (0..dim).map(|a| (x0[a] - rlo[a]).max(rhi[a] - x0[a])).fold(0.0, f64::max);
        plan.pole = Some((x0, half));
    }
    let depth = match (&plan.pole, plan.t0) {
        (Some((c, half)), None) => max_depth(c.iter().fold(0.0, |m, v| f64::max(m, v.abs())), *half).min(40),
        (Some(_), Some((t0, _, _))) => plan.spatial_depth(t - t0, 0),
        _ => 0,
    };
    let f = |pt: &SpaceTimePoint, _c: f64| field.try_eval(pt);
    let mut out = Vec::new();
    plan.spatial(&f, t, 1.0, depth, points, points, &mut out)?;
    if out.is_empty() {
        return Err(Error::EmptyRegion);
    }
    Ok(sum_samples(&out, &g))
}

/// Samples of the field itself, using its declared singular locus.
pub fn field_samples(field: &dyn Field, region: &Cylinder, levels: usize, opts: &QuadOptions) -> Result<SampleSet> {
    if region.dim() != field.dim() {
        return invalid("region and field dimensions differ");
    }
    let locus = field.locus();
    let f = |pt: &SpaceTimePoint, _cell: f64| field.try_eval(pt);
    collect_samples(&f, region, locus.as_ref(), levels, opts)
}

/// Estimates of `int int_region |v|^s dx dt`, one per refinement level.
pub fn integrate_power(field: &dyn Field, region: &Cylinder, s: f64, levels: usize) -> Result<Vec<f64>> {
    integrate_power_with(field, region, s, levels, &QuadOptions {
        refine_mesh: true,
        ..QuadOptions::default()
    })
}

pub fn integrate_power_with(
    field: &dyn Field,
    region: &Cylinder,
    s: f64,
    levels: usize,
    opts: &QuadOptions,
) -> Result<Vec<f64>> {
    if !(s > 0.0) {
        return invalid(format!("exponent s must be positive (got {s})"));
    }
    if levels < 2 {
        return invalid("integrate_power needs at least two refinement levels");
    }
    field_samples(field, region, levels, opts)?.reduce(|v| v.abs().powf(s))
}

/// Trend rule: the last three estimates each grow by at least `factor`.
pub fn diverges(estimates: &[f64], factor: f64) -> bool {
    if estimates.last().is_some_and(|v| v.is_infinite()) {
        return true;
    }
    if estimates.len() < 4 {
        return false;
    }
    estimates[estimates.len() - 4..]
        .windows(2)
        .all(|w| w[1] >= factor * w[0] && w[1] > 0.0)
}
