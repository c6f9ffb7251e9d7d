//! Implicit time stepping for `v_t = div(|grad v|^{p-2} grad v)` on grids,
//! plus the comparison, minorant and hyperplane experiments built on it.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::field::Field;
use crate::geometry::SpaceTimePoint;
use crate::giant::GiantSolution;
use crate::grid::{GridField, GridSpec};
use crate::params::MediumParams;
use crate::solutions::{wedge_eval, WedgeSpec, WedgeVariant};
use crate::stencil::FaceSystem;

/// Lateral Dirichlet data.
#[derive(Clone)]
pub enum BoundaryData {
    Zero,
    /// Sampled from a field at the boundary node and time level.
    Field(Arc<dyn Field>),
    /// `f(spatial node, time level)`.
    Nodes(Arc<dyn Fn(usize, usize) -> f64 + Send + Sync>),
}

impl fmt::Debug for BoundaryData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundaryData::Zero => write!(f, "Zero"),
            BoundaryData::Field(_) => write!(f, "Field(..)"),
            BoundaryData::Nodes(_) => write!(f, "Nodes(..)"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct EvolutionProblem {
    pub spec: GridSpec,
    pub params: MediumParams,
    /// Spatial values at `t_lo`.
    pub initial: Vec<f64>,
    pub boundary: BoundaryData,
    /// Extra Dirichlet nodes besides the box boundary (e.g. outside a disc).
    pub fixed: Option<Vec<bool>>,
    /// Flux regularization; `None` means the smallest grid spacing.
    pub delta: Option<f64>,
    /// Stop the inner iteration once the scaled residual is below this.
    pub tol_newton: f64,
    pub max_inner: usize,
}

impl EvolutionProblem {
    /// Zero boundary data, default tolerances.
    pub fn new(spec: GridSpec, params: MediumParams, initial: Vec<f64>) -> Result<Self> {
        let prob = Self {
            spec,
            params,
            initial,
            boundary: BoundaryData::Zero,
            fixed: None,
            delta: None,
            tol_newton: 1e-10,
            max_inner: 500,
        };
        prob.validate()?;
        Ok(prob)
    }

    /// Initial and boundary data both sampled from `field`.
    pub fn from_field(spec: GridSpec, params: MediumParams, field: Arc<dyn Field>) -> Result<Self> {
        if field.dim() != spec.dim() {
            return invalid("field and grid dimensions differ");
        }
        let initial = (0..spec.spatial_count())
            .map(|k| field.try_eval(&spec.node(0, k)))
            .collect::<Result<Vec<_>>>()?;
        let mut prob = Self::new(spec, params, initial)?;
        prob.boundary = BoundaryData::Field(field);
        Ok(prob)
    }

    pub fn with_boundary(mut self, boundary: BoundaryData) -> Self {
        self.boundary = boundary;
        self
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = Some(delta);
        self
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.tol_newton = tol;
        self
    }

    pub fn with_fixed(mut self, fixed: Vec<bool>) -> Self {
        self.fixed = Some(fixed);
        self
    }

    fn validate(&self) -> Result<()> {
        if self.spec.dim() > 2 {
            return Err(Error::UnsupportedDimension(self.spec.dim()));
        }
        if self.spec.nt < 2 {
            return invalid("evolution needs at least two time levels");
        }
        if self.params.n() != self.spec.dim() {
            return invalid("params dimension differs from the grid");
        }
        if self.initial.len() != self.spec.spatial_count() {
            return invalid("initial data does not match the grid");
        }
        if self.initial.iter().any(|v| !v.is_finite()) {
            return invalid("initial data must be finite");
        }
        if let Some(d) = self.delta {
            if !(d >= 0.0) {
                return invalid("delta must be nonnegative");
            }
        }
        if let Some(f) = &self.fixed {
            if f.len() != self.spec.spatial_count() {
                return invalid("fixed-node mask does not match the grid");
            }
        }
        if !(self.tol_newton > 0.0) {
            return invalid("tol_newton must be positive");
        }
        Ok(())
    }

    fn is_fixed(&self, k: usize) -> bool {
        self.spec.is_boundary(k) || self.fixed.as_ref().is_some_and(|f| f[k])
    }

    fn boundary_value(&self, k: usize, level: usize) -> Result<f64> {
        let v = match &self.boundary {
            BoundaryData::Zero => 0.0,
            BoundaryData::Field(f) => f.try_eval(&self.spec.node(level, k))?,
            BoundaryData::Nodes(f) => f(k, level),
        };
        if !v.is_finite() {
            return invalid(format!("boundary data at node {k}, level {level} is not finite"));
        }
        Ok(v)
    }
}

/// Per-level inner iteration counts and final scaled residuals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveStats {
    pub iterations: Vec<usize>,
    pub residuals: Vec<f64>,
}

pub fn solve(problem: &EvolutionProblem) -> Result<GridField> {
    solve_with_stats(problem).map(|(f, _)| f)
}

/// Backward Euler with the regularized flux `(|g|^2 + delta^2)^{(p-2)/2} g`.
/// Each level solves `cell (v - v_old)/dt + E'(v) = 0` over the free nodes
/// by the damped fixed-point iteration `v <- v - omega P^{-1} F(v)`, where
/// `P = cell/dt + A(v)` is the weighted Laplacian frozen at the current
/// iterate with the linearized face coefficient
/// `(s + delta^2)^{(p-4)/2} ((p-1) s + delta^2)`, and `omega` is halved until
/// the residual decreases.
pub fn solve_with_stats(problem: &EvolutionProblem) -> Result<(GridField, SolveStats)> {
    problem.validate()?;
    let spec = &problem.spec;
    let m = spec.spatial_count();
    let p = problem.params.p();
    let h_min = (0..spec.dim()).map(|a| spec.h(a)).fold(f64::INFINITY, f64::min);
    let delta = problem.delta.unwrap_or(h_min);
    let d2 = delta * delta;
    let coef = move |s: f64| {
        let base = s + d2;
        if base == 0.0 {
            0.0
        } else {
            base.powf(0.5 * (p - 2.0))
        }
    };
    // d/dg [coef(|g|^2) g] along g: the linearized coefficient used in P.
    let lin = move |s: f64| {
        let base = s + d2;
        if base == 0.0 {
            0.0
        } else {
            base.powf(0.5 * (p - 4.0)) * ((p - 1.0) * s + d2)
        }
    };
    let active: Vec<bool> = (0..m).map(|k| !problem.is_fixed(k)).collect();
    let sys = FaceSystem::new(spec, active);
    let dt = spec.dt();
    let mass = sys.cell / dt;

    let mut values = Vec::with_capacity(spec.len());
    let mut current = problem.initial.clone();
    for k in 0..m {
        if problem.is_fixed(k) {
            current[k] = problem.boundary_value(k, 0)?;
        }
    }
    values.extend_from_slice(&current);
    let mut stats = SolveStats {
        iterations: vec![0],
        residuals: vec![0.0],
    };

    let mut grad = vec![0.0; m];
    let residual = |v: &[f64], old: &[f64], grad: &mut [f64]| -> Vec<f64> {
        sys.energy_gradient(v, coef, grad);
        sys.unknowns.iter().map(|&k| mass * (v[k] - old[k]) + grad[k]).collect()
    };
    let norm = |r: &[f64]| r.iter().fold(0.0f64, |a, b| a.max(b.abs())) / mass;

    for level in 1..spec.nt {
        let old = current.clone();
        for k in 0..m {
            if problem.is_fixed(k) {
                current[k] = problem.boundary_value(k, level)?;
            }
        }
        let mut r = residual(&current, &old, &mut grad);
        let mut rn = norm(&r);
        let mut history = vec![rn];
        let mut iters = 0;
        let mut omega = 1.0;
        while rn > problem.tol_newton {
            if iters >= problem.max_inner || !rn.is_finite() {
                return Err(divergence(level, history));
            }
            iters += 1;
            let pm = sys.frozen_matrix(&current, lin, mass);
            let mut step = vec![0.0; r.len()];
            let max_cg = 20 * step.len().max(10);
            pm.solve_spd(&r, &mut step, 1e-13, max_cg);
            let mut accepted = false;
            for _ in 0..12 {
                let mut trial = current.clone();
                sys.scatter_add(&step, -omega, &mut trial);
                let rt = residual(&trial, &old, &mut grad);
                let rtn = norm(&rt);
                if rtn < rn {
                    current = trial;
                    r = rt;
                    rn = rtn;
                    accepted = true;
                    omega = (omega * 2.0).min(1.0);
                    break;
                }
                omega *= 0.5;
            }
            history.push(rn);
            if !accepted {
                let scale = current.iter().fold(1.0f64, |a, v| a.max(v.abs()));
                if rn <= ROUNDOFF_FLOOR * f64::EPSILON * scale {
                    break;
                }
                return Err(divergence(level, history));
            }
        }
        stats.iterations.push(iters);
        stats.residuals.push(rn);
        values.extend_from_slice(&current);
    }
    let field = GridField::from_parts(spec.clone(), values, vec![false; spec.len()])?.with_params(problem.params);
    Ok((field, stats))
}

/// A stalled inner iteration is accepted once its residual is below this
/// many units of round-off of the largest value.
const ROUNDOFF_FLOOR: f64 = 1e4;

/// Keeps the first and the last few residuals of a failed inner solve.
fn divergence(level: usize, mut history: Vec<f64>) -> Error {
    if history.len() > 24 {
        let tail = history.split_off(history.len() - 16);
        history.truncate(8);
        history.extend(tail);
    }
    Error::InnerDivergence { level, history }
}

/// Samples an analytic solution on the grid (for error measurements).
pub fn sample_exact(field: &dyn Field, spec: &GridSpec) -> Result<Vec<f64>> {
    (0..spec.len())
        .map(|i| {
            let level = i / spec.spatial_count();
            field.try_eval(&spec.node(level, i % spec.spatial_count()))
        })
        .collect()
}

/// Largest absolute nodal difference at the last time level.
pub fn final_level_error(solution: &GridField, exact: &dyn Field) -> Result<f64> {
    let spec = solution.spec();
    let last = spec.nt - 1;
    let mut err = 0.0f64;
    for k in 0..spec.spatial_count() {
        let e = exact.try_eval(&spec.node(last, k))?;
        err = err.max((solution.get(last, k) - e).abs());
    }
    Ok(err)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub pass: bool,
    /// `max(lower - upper)` over all nodes.
    pub worst_violation: f64,
    /// `(time level, spatial node)` of the worst violation.
    pub location: (usize, usize),
    pub tol: f64,
}

/// Checks `lower <= upper + tol` at every node.
pub fn compare(lower: &GridField, upper: &GridField, tol: f64) -> Result<CompareReport> {
    if lower.spec() != upper.spec() {
        return Err(Error::SpecMismatch);
    }
    let spec = lower.spec();
    let mut worst = f64::NEG_INFINITY;
    let mut location = (0, 0);
    for level in 0..spec.nt {
        for k in 0..spec.spatial_count() {
            let lo = if lower.is_flagged(level, k) { f64::INFINITY } else { lower.get(level, k) };
            let up = if upper.is_flagged(level, k) { f64::INFINITY } else { upper.get(level, k) };
            let d = if up == f64::INFINITY { f64::NEG_INFINITY } else { lo - up };
            if d > worst {
                worst = d;
                location = (level, k);
            }
        }
    }
    Ok(CompareReport {
        pass: worst <= tol,
        worst_violation: worst,
        location,
        tol,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinorantReport {
    pub pass: bool,
    /// `min(v - U/(t - t0)^{1/(p-2)})` over the samples.
    pub worst_margin: f64,
    pub worst_point: (Vec<f64>, f64),
    pub samples: usize,
    pub tol: f64,
}

/// Sample set for [`verify_minorant`]: the giant's grid nodes at `times`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinorantSamples {
    /// Offsets `t - t0`, all positive.
    pub offsets: Vec<f64>,
    /// Use every `stride`-th giant node.
    pub stride: usize,
}

impl MinorantSamples {
    /// `count` offsets spaced geometrically from `s_min` to `s_max`.
    pub fn geometric(s_min: f64, s_max: f64, count: usize) -> Self {
        let count = count.max(2);
        let r = (s_max / s_min).ln() / (count - 1) as f64;
        Self {
            offsets: (0..count).map(|i| s_min * (r * i as f64).exp()).collect(),
            stride: 1,
        }
    }
}

/// Checks `v(x, t) >= U(x)/(t - t0)^{1/(p-2)} - tol` at the giant's nodes for
/// every sampled offset.
pub fn verify_minorant(field: &dyn Field, giant: &GiantSolution, t0: f64, tol: f64, samples: &MinorantSamples) -> Result<MinorantReport> {
    if field.dim() != giant.dim() {
        return invalid("field and giant dimensions differ");
    }
    if samples.offsets.is_empty() || samples.offsets.iter().any(|s| !(*s > 0.0)) {
        return invalid("minorant offsets must be positive");
    }
    let e = 1.0 / (giant.p - 2.0);
    let spec = giant.spec();
    let mut worst = f64::INFINITY;
    let mut worst_point = (vec![], 0.0);
    let mut count = 0;
    for &s in &samples.offsets {
        let t = t0 + s;
        for k in (0..spec.spatial_count()).step_by(samples.stride.max(1)) {
            let x = spec.node_x(k);
            let u = giant.values()[k];
            let v = field.try_eval(&SpaceTimePoint::new(&x, t))?;
            let margin = if v == f64::INFINITY { f64::INFINITY } else { v - u * s.powf(-e) };
            count += 1;
            if margin < worst {
                worst = margin;
                worst_point = (x, t);
            }
        }
    }
    Ok(MinorantReport {
        pass: worst >= -tol,
        worst_margin: worst,
        worst_point,
        samples: count,
        tol,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperplaneReport {
    pub applicable: bool,
    pub conclusion: String,
    pub ks: Vec<f64>,
    /// Wedge value at the interior probe point, per `k`.
    pub wedge_values: Vec<f64>,
    pub probe: (Vec<f64>, f64),
    /// Largest wedge value on the finite part of the parabolic boundary
    /// (the rest lies on the hyperplane, where `v` is infinite).
    pub boundary_max: f64,
    /// First `k` whose wedge exceeds `reference_bound` at the probe.
    pub exceeds_at: Option<f64>,
    pub reference_bound: f64,
}

/// The contradiction behind "infinity sets that are hyperplanes must be time
/// slices": if `v = inf` on `t = <a, x> + t0` with `a != 0`, the wedge
/// subsolutions are dominated by `v` on the parabolic boundary of the
/// triangle (1D) or polyhedron (`n = 2`, product wedge) next to the plane
/// for every `k`, so `v` exceeds any bound inside.
pub fn hyperplane_demo(params: &MediumParams, a: &[f64], ks: &[f64], sigma: f64, reference_bound: f64) -> Result<HyperplaneReport> {
    let n = params.n();
    if a.len() != n || n > 2 {
        return invalid("slope vector must match n, with n <= 2");
    }
    if !(sigma > 0.0) || ks.is_empty() || ks.iter().any(|k| !(*k > 0.0)) {
        return invalid("hyperplane demo needs sigma > 0 and positive k values");
    }
    if a.iter().all(|v| *v == 0.0) {
        return Ok(HyperplaneReport {
            applicable: false,
            conclusion: "no contradiction: a = 0 is a time slice, the wedge domain is empty".to_string(),
            ks: ks.to_vec(),
            wedge_values: vec![],
            probe: (vec![], 0.0),
            boundary_max: 0.0,
            exceeds_at: None,
            reference_bound,
        });
    }
    // Reflections x_i -> -x_i make every slope nonnegative.
    let slopes: Vec<f64> = a.iter().map(|v| v.abs()).collect();
    let (spec_of, probe, boundary): (Box<dyn Fn(f64) -> WedgeSpec>, (Vec<f64>, f64), Vec<(Vec<f64>, f64)>) = if n == 1 {
        // Triangle x0 < x < 1, a x < t < a, with t0 = a x0.
        let s = slopes[0];
        let x0 = 0.5;
        let t0 = s * x0;
        let px = 0.75;
        let probe = (vec![px], 0.5 * (s * px + s));
        // Left side x = x0, t0 <= t <= a.
        let left = (0..=16).map(|i| (vec![x0], t0 + (s - t0) * i as f64 / 16.0)).collect();
        let p = *params;
        (
            Box::new(move |k| WedgeSpec {
                params: p,
                k,
                x0,
                t0,
                sigma,
                variant: WedgeVariant::OneD,
            }),
            probe,
            left,
        )
    } else {
        // Polyhedron 0 < <a, x> < t - t0 < 1, x_i > 0 with t0 = 0; the wedge
        // vanishes on the faces x_i = 0.
        let probe_x: Vec<f64> = slopes.iter().map(|&s| if s > 0.0 { 0.25 / (n as f64 * s) } else { 0.5 }).collect();
        let probe = (probe_x.clone(), 0.5);
        let mut faces = vec![];
        for axis in 0..n {
            for i in 0..=16 {
                let mut x = probe_x.clone();
                x[axis] = 0.0;
                faces.push((x, 0.5 + 0.5 * i as f64 / 16.0));
            }
        }
        let p = *params;
        (
            Box::new(move |k| WedgeSpec {
                params: p,
                k,
                x0: 0.0,
                t0: 0.0,
                sigma,
                variant: WedgeVariant::Product,
            }),
            probe,
            faces,
        )
    };
    let probe_pt = SpaceTimePoint::new(&probe.0, probe.1);
    let wedge_values = ks
        .iter()
        .map(|&k| wedge_eval(&spec_of(k), &probe_pt))
        .collect::<Result<Vec<_>>>()?;
    let kmax = ks.iter().cloned().fold(0.0, f64::max);
    let boundary_max = boundary
        .iter()
        .map(|(x, t)| {
            // The product wedge is zero on the faces x_i = 0 (outside its open domain).
            wedge_eval(&spec_of(kmax), &SpaceTimePoint::new(x, *t)).unwrap_or(0.0)
        })
        .fold(f64::NEG_INFINITY, f64::max);
    let exceeds_at = ks.iter().zip(&wedge_values).find(|(_, w)| **w > reference_bound).map(|(k, _)| *k);
    let conclusion = match exceeds_at {
        Some(k) => format!(
            "contradiction: the wedge with k = {k} is dominated on the parabolic boundary yet exceeds the bound {reference_bound} inside"
        ),
        None => "wedge values grow linearly in k; larger k exceeds any bound".to_string(),
    };
    Ok(HyperplaneReport {
        applicable: true,
        conclusion,
        ks: ks.to_vec(),
        wedge_values,
        probe,
        boundary_max,
        exceeds_at,
        reference_bound,
    })
}
