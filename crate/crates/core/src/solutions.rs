//! Closed-form solution and subsolution families, each returned in its
//! lower-semicontinuous form (e.g. the Barenblatt solution is 0, not +inf,
//! at the space-time origin).

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geometry::SpaceTimePoint;
use crate::giant::GiantSolution;
use crate::params::MediumParams;

/// Barenblatt solution with free constant `c` and shifted origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BarenblattSpec {
    pub params: MediumParams,
    pub c: f64,
    pub origin_x: Vec<f64>,
    pub origin_t: f64,
}

/// The constant for which the support has radius 1 at time 1.
pub fn default_barenblatt_c(params: &MediumParams) -> f64 {
    let p = params.p();
    (p - 2.0) / p * params.lambda().powf(-1.0 / (p - 1.0))
}

impl BarenblattSpec {
    pub fn new(params: MediumParams) -> Self {
        Self {
            c: default_barenblatt_c(&params),
            origin_x: vec![0.0; params.n()],
            origin_t: 0.0,
            params,
        }
    }

    pub fn with_c(mut self, c: f64) -> Result<Self> {
        if !(c > 0.0) || !c.is_finite() {
            return invalid("Barenblatt constant must be positive");
        }
        self.c = c;
        Ok(self)
    }

    pub fn with_origin(mut self, x: &[f64], t: f64) -> Result<Self> {
        if x.len() != self.params.n() {
            return invalid("Barenblatt origin has the wrong dimension");
        }
        self.origin_x = x.to_vec();
        self.origin_t = t;
        Ok(self)
    }

    /// Radius of the support at time `t` after the origin.
    pub fn support_radius(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        let p = self.params.p();
        let lam = self.params.lambda();
        t.powf(1.0 / lam) * (self.c * p * lam.powf(1.0 / (p - 1.0)) / (p - 2.0)).powf((p - 1.0) / p)
    }

    /// Conserved mass `int B(x, t) dx`, computed by radial quadrature at `t = 1`.
    pub fn mass(&self) -> f64 {
        let n = self.params.n();
        let r1 = self.support_radius(1.0);
        let m = 20_000;
        let surface = crate::geometry::ball_volume(n, 1.0) * n as f64;
        let pt = |r: f64| {
            let mut x = self.origin_x.clone();
            x[0] += r;
            barenblatt_eval(self, &SpaceTimePoint::new(&x, self.origin_t + 1.0))
        };
        let h = r1 / m as f64;
        (0..m)
            .map(|i| {
                let r = (i as f64 + 0.5) * h;
                pt(r) * r.powi(n as i32 - 1)
            })
            .sum::<f64>()
            * h
            * surface
    }
}

pub fn barenblatt_eval(spec: &BarenblattSpec, pt: &SpaceTimePoint) -> f64 {
    let t = pt.t - spec.origin_t;
    if t <= 0.0 {
        return 0.0;
    }
    let p = spec.params.p();
    let n = spec.params.n() as f64;
    let lam = spec.params.lambda();
    let r = pt.dist_to(&spec.origin_x);
    let bracket = spec.c - (p - 2.0) / p * lam.powf(1.0 / (1.0 - p)) * (r / t.powf(1.0 / lam)).powf(p / (p - 1.0));
    if bracket <= 0.0 {
        return 0.0;
    }
    t.powf(-n / lam) * bracket.powf((p - 1.0) / (p - 2.0))
}

/// Fundamental solution of the heat equation, zero for `t <= 0`.
pub fn heat_kernel_eval(n: usize, pt: &SpaceTimePoint) -> f64 {
    let t = pt.t;
    if t <= 0.0 {
        return 0.0;
    }
    let r2 = pt.norm().powi(2);
    (4.0 * std::f64::consts::PI * t).powf(-(n as f64) / 2.0) * (-r2 / (4.0 * t)).exp()
}

fn giant_at(giant: &GiantSolution, pt: &SpaceTimePoint) -> Result<f64> {
    giant.eval(pt.x()).ok_or_else(|| Error::OutsideDomain {
        x: pt.x().to_vec(),
        t: pt.t,
    })
}

#[derive(Debug, Clone)]
pub struct SeparableSpec {
    pub giant: Arc<GiantSolution>,
    pub t0: f64,
}

/// `U(x) / (t - t0)^{1/(p-2)}` for `t > t0`, else 0.
pub fn separable_eval(spec: &SeparableSpec, pt: &SpaceTimePoint) -> Result<f64> {
    let u = giant_at(&spec.giant, pt)?;
    let s = pt.t - spec.t0;
    if s <= 0.0 {
        return Ok(0.0);
    }
    Ok(u * s.powf(-1.0 / (spec.giant.p - 2.0)))
}

#[derive(Debug, Clone)]
pub struct ExpBlowupSpec {
    pub giant: Arc<GiantSolution>,
    pub t0: f64,
    /// Number of nested exponentials; 1 gives `U exp(1/((p-2)(t-t0)))`.
    pub iterates: usize,
}

/// `U(x) exp(1/((p-2)(t-t0)))` for `t > t0`, else 0; overflow yields `+inf`.
pub fn exp_blowup_eval(giant: &GiantSolution, t0: f64, pt: &SpaceTimePoint) -> Result<f64> {
    exp_tower_eval(giant, t0, 1, pt)
}

pub fn exp_tower_eval(giant: &GiantSolution, t0: f64, iterates: usize, pt: &SpaceTimePoint) -> Result<f64> {
    let u = giant_at(giant, pt)?;
    let s = pt.t - t0;
    if s <= 0.0 || u == 0.0 {
        return Ok(0.0);
    }
    let mut g = (1.0 / ((giant.p - 2.0) * s)).exp();
    for _ in 1..iterates {
        g = g.exp();
    }
    Ok(u * g)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiBenedettoSpec {
    pub params: MediumParams,
    pub a: f64,
    pub t_blow: f64,
}

impl DiBenedettoSpec {
    pub fn new(params: MediumParams, a: f64, t_blow: f64) -> Result<Self> {
        if !(a > 0.0) || !(t_blow > 0.0) {
            return invalid("DiBenedetto solution needs A > 0 and T > 0");
        }
        Ok(Self { params, a, t_blow })
    }
}

/// The explicit solution blowing up everywhere at `t = T`; defined for `t < T`.
pub fn dibenedetto_eval(spec: &DiBenedettoSpec, pt: &SpaceTimePoint) -> Result<f64> {
    let t = pt.t;
    let big_t = spec.t_blow;
    if t >= big_t {
        return invalid(format!("DiBenedetto solution is only defined for t < T = {big_t}"));
    }
    let p = spec.params.p();
    let n = spec.params.n() as f64;
    let lam = spec.params.lambda();
    let first = spec.a * (big_t / (big_t - t)).powf(n * (p - 2.0) / (lam * (p - 1.0)));
    let r = pt.norm();
    let second = (p - 2.0) / p * lam.powf(-1.0 / (p - 1.0)) * (r.powf(p) / (big_t - t)).powf(1.0 / (p - 1.0));
    Ok((first + second).powf((p - 1.0) / (p - 2.0)))
}

#[derive(Debug, Clone)]
pub struct GluedSpec {
    pub dibenedetto: DiBenedettoSpec,
    pub giant: Arc<GiantSolution>,
}

/// `D` before `T`, `(t-T)^{-1/(p-2)} U(x)` after; at `t = T` the lower
/// semicontinuous value is `+inf` where `U > 0` and 0 where `U = 0`.
pub fn glued_eval(spec: &GluedSpec, pt: &SpaceTimePoint) -> Result<f64> {
    let big_t = spec.dibenedetto.t_blow;
    let u = giant_at(&spec.giant, pt)?;
    if pt.t < big_t {
        return dibenedetto_eval(&spec.dibenedetto, pt);
    }
    if pt.t == big_t {
        return Ok(if u > 0.0 { f64::INFINITY } else { 0.0 });
    }
    Ok(u * (pt.t - big_t).powf(-1.0 / (spec.giant.p - 2.0)))
}

/// Largest number of blow-up times accepted by the superposition.
pub const MAX_SUPERPOSITION: usize = 10_000;

#[derive(Debug, Clone)]
pub struct SuperpositionSpec {
    pub giant: Arc<GiantSolution>,
    pub times: Vec<f64>,
}

impl SuperpositionSpec {
    pub fn new(giant: Arc<GiantSolution>, times: &[f64]) -> Result<Self> {
        if times.is_empty() {
            return invalid("superposition needs at least one blow-up time");
        }
        if times.len() > MAX_SUPERPOSITION {
            return invalid(format!(
                "superposition of {} terms requested; only finite sums (at most {MAX_SUPERPOSITION}) are supersolutions here",
                times.len()
            ));
        }
        if times.iter().any(|t| !t.is_finite()) {
            return invalid("blow-up times must be finite");
        }
        let mut times = times.to_vec();
        times.sort_by(f64::total_cmp);
        Ok(Self { giant, times })
    }
}

/// `U(x) sum_j [1/(t - t_j)]_+^{1/(p-2)}`.
pub fn superposition_eval(spec: &SuperpositionSpec, pt: &SpaceTimePoint) -> Result<f64> {
    let u = giant_at(&spec.giant, pt)?;
    let e = 1.0 / (spec.giant.p - 2.0);
    let sum: f64 = spec
        .times
        .iter()
        .filter(|&&tj| pt.t > tj)
        .map(|&tj| (pt.t - tj).powf(-e))
        .sum();
    Ok(u * sum)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationarySpec {
    pub params: MediumParams,
    pub x0: Vec<f64>,
    pub c: f64,
}

fn require_p_below_n(params: &MediumParams) -> Result<()> {
    if params.p() >= params.n() as f64 {
        return invalid(format!(
            "stationary fundamental solution needs p < n (p = {}, n = {}); otherwise it is bounded",
            params.p(),
            params.n()
        ));
    }
    Ok(())
}

impl StationarySpec {
    pub fn new(params: MediumParams, x0: &[f64], c: f64) -> Result<Self> {
        require_p_below_n(&params)?;
        if x0.len() != params.n() || !(c > 0.0) {
            return invalid("stationary solution needs a pole in R^n and C > 0");
        }
        Ok(Self {
            params,
            x0: x0.to_vec(),
            c,
        })
    }

    /// Power `(n-p)/(p-1)` of the pole.
    pub fn decay(&self) -> f64 {
        (self.params.n() as f64 - self.params.p()) / (self.params.p() - 1.0)
    }
}

/// `C |x - x0|^{(p-n)/(p-1)}`, `+inf` at the pole; independent of `t`.
pub fn stationary_eval(spec: &StationarySpec, pt: &SpaceTimePoint) -> f64 {
    let r = pt.dist_to(&spec.x0);
    if r == 0.0 {
        return f64::INFINITY;
    }
    spec.c * r.powf(-spec.decay())
}

/// Default truncation of the dense-poles series.
pub const DEFAULT_POLE_COUNT: usize = 64;

/// The first `count` points of a fixed enumeration of the dyadic rationals in
/// the open unit box: level `m = 1, 2, ...` contributes, in lexicographic
/// order, the points `k / 2^m` with at least one odd numerator.
pub fn dyadic_points(n: usize, count: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(count);
    let mut m = 1u32;
    while out.len() < count {
        let denom = 1usize << m;
        let per_axis = denom - 1;
        let total = per_axis.pow(n as u32);
        for idx in 0..total {
            let mut rem = idx;
            let mut num = vec![0usize; n];
            for a in (0..n).rev() {
                num[a] = rem % per_axis + 1;
                rem /= per_axis;
            }
            if num.iter().any(|k| k % 2 == 1) {
                out.push(num.iter().map(|&k| k as f64 / denom as f64).collect());
                if out.len() == count {
                    break;
                }
            }
        }
        m += 1;
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensePolesSpec {
    pub params: MediumParams,
    pub poles: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl DensePolesSpec {
    /// Poles from [`dyadic_points`] with weights `2^{-j}`, `j = 1..=count`.
    pub fn new(params: MediumParams, count: usize) -> Result<Self> {
        require_p_below_n(&params)?;
        if count == 0 {
            return invalid("dense poles need at least one pole");
        }
        Ok(Self {
            poles: dyadic_points(params.n(), count),
            weights: (1..=count).map(|j| 0.5f64.powi(j as i32)).collect(),
            params,
        })
    }

    fn decay(&self) -> f64 {
        (self.params.n() as f64 - self.params.p()) / (self.params.p() - 1.0)
    }

    /// Bound on the omitted tail `sum_{j > J} C_j dist^{-(n-p)/(p-1)}` for
    /// points at distance at least `dist` from every omitted pole.
    pub fn tail_bound(&self, dist: f64) -> f64 {
        // With C_j = 2^{-j} the omitted weights sum to 2^{-J}.
        let tail: f64 = 0.5f64.powi(self.weights.len() as i32);
        tail * dist.powf(-self.decay())
    }
}

pub fn dense_poles_eval(spec: &DensePolesSpec, pt: &SpaceTimePoint) -> f64 {
    let e = spec.decay();
    let mut sum = 0.0;
    for (q, w) in spec.poles.iter().zip(&spec.weights) {
        let r = pt.dist_to(q);
        if r == 0.0 {
            return f64::INFINITY;
        }
        sum += w * r.powf(-e);
    }
    sum
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WedgeVariant {
    /// `k (x - x0) / (t - t0 + sigma)^{1/(p-2)}` in one dimension.
    OneD,
    /// `k (t - t0 + sigma)^{-1/(p-2)} x_1 ... x_n`; with `t0 = sigma = 0` this
    /// is `k t^{-1/(p-2)} x_1 ... x_n`.
    Product,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WedgeSpec {
    pub params: MediumParams,
    pub k: f64,
    pub x0: f64,
    pub t0: f64,
    pub sigma: f64,
    pub variant: WedgeVariant,
}

pub fn wedge_eval(spec: &WedgeSpec, pt: &SpaceTimePoint) -> Result<f64> {
    let p = spec.params.p();
    let s = pt.t - (spec.t0 - spec.sigma);
    let outside = || Error::OutsideDomain {
        x: pt.x().to_vec(),
        t: pt.t,
    };
    match spec.variant {
        WedgeVariant::OneD => {
            if !(spec.sigma > 0.0) || pt.dim() != 1 || s <= 0.0 {
                return Err(outside());
            }
            Ok(spec.k * (pt.x()[0] - spec.x0) * s.powf(-1.0 / (p - 2.0)))
        }
        WedgeVariant::Product => {
            if s <= 0.0 || pt.x().iter().any(|&v| v <= 0.0) {
                return Err(outside());
            }
            Ok(spec.k * s.powf(-1.0 / (p - 2.0)) * pt.x().iter().product::<f64>())
        }
    }
}
