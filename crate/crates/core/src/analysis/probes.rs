//! Numerical instances of the Caccioppoli, Sobolev and Harnack inequalities,
//! the Lebesgue-time blow-up lower bound and the `R -> inf` scaling argument.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::field::Field;
use crate::geometry::{Cylinder, SpaceTimePoint};
use crate::giant::{GiantDomain, GiantSolution};
use crate::params::MediumParams;
use crate::quadrature::{diverges, spatial_integral};

use super::bump::Bump;

/// Midpoint grid over the outer cylinder of a bump.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProbeGrid {
    pub nx: usize,
    pub nt: usize,
}

impl ProbeGrid {
    /// `8 * 2^level` cells per axis and in time.
    pub fn level(level: usize) -> Self {
        let k = 8 << level;
        Self { nx: k, nt: k }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityProbe {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs / rhs`.
    pub constant: f64,
    pub beta: Option<f64>,
    pub m: Option<f64>,
    pub q: Option<f64>,
    /// Nodes skipped because their stencil touched an infinite value.
    pub skipped: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaccioppoliMode {
    Standard,
    Beta1Log,
    LogGrad,
}

/// Per-time-level partial sums: `(double-integral terms, single-integral
/// terms, skipped nodes)`.
type Level = (Vec<f64>, Vec<f64>, usize);

/// Runs `node` at every midpoint of the grid over `outer` and returns one
/// [`Level`] per time level. `node` receives the point and the spatial step
/// used for differencing, and returns `None` to skip the node.
fn sweep<F>(outer: &Cylinder, grid: ProbeGrid, terms: (usize, usize), node: F) -> Result<(Vec<Level>, f64, f64)>
where
    F: Fn(&SpaceTimePoint, f64) -> Result<Option<(Vec<f64>, Vec<f64>)>> + Sync,
{
    if grid.nx == 0 || grid.nt == 0 {
        return invalid("probe grid needs at least one cell per axis");
    }
    let (lo, hi) = outer.bounds();
    let n = outer.dim();
    let h: Vec<f64> = (0..n).map(|a| (hi[a] - lo[a]) / grid.nx as f64).collect();
    let dt = (outer.t_hi - outer.t_lo) / grid.nt as f64;
    let dx: f64 = h.iter().product();
    let step = 0.5 * h.iter().cloned().fold(f64::INFINITY, f64::min);
    let levels = (0..grid.nt)
        .into_par_iter()
        .map(|j| -> Result<Level> {
            let t = outer.t_lo + (j as f64 + 0.5) * dt;
            let mut dbl = vec![0.0; terms.0];
            let mut sgl = vec![0.0; terms.1];
            let mut skipped = 0;
            let mut x = vec![0.0; n];
            for idx in 0..grid.nx.pow(n as u32) {
                let mut rem = idx;
                for a in 0..n {
                    x[a] = lo[a] + ((rem % grid.nx) as f64 + 0.5) * h[a];
                    rem /= grid.nx;
                }
                match node(&SpaceTimePoint::new(&x, t), step)? {
                    Some((d, s)) => {
                        dbl.iter_mut().zip(d).for_each(|(acc, v)| *acc += v * dx * dt);
                        sgl.iter_mut().zip(s).for_each(|(acc, v)| *acc += v * dx);
                    }
                    None => skipped += 1,
                }
            }
            Ok((dbl, sgl, skipped))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((levels, dx, dt))
}

fn totals(levels: &[Level]) -> (Vec<f64>, Vec<f64>, usize) {
    let nd = levels.first().map_or(0, |l| l.0.len());
    let ns = levels.first().map_or(0, |l| l.1.len());
    let mut dbl = vec![0.0; nd];
    let mut sup = vec![0.0f64; ns];
    let mut skipped = 0;
    for (d, s, k) in levels {
        dbl.iter_mut().zip(d).for_each(|(a, v)| *a += v);
        sup.iter_mut().zip(s).for_each(|(a, v)| *a = a.max(*v));
        skipped += k;
    }
    (dbl, sup, skipped)
}

/// Central-difference gradient of `g` at `pt` with step `step`; `None` when
/// a sample is infinite.
fn grad(g: &dyn Fn(&SpaceTimePoint) -> Result<f64>, pt: &SpaceTimePoint, step: f64) -> Result<Option<Vec<f64>>> {
    let mut out = Vec::with_capacity(pt.dim());
    for a in 0..pt.dim() {
        let up = g(&pt.shifted(a, step))?;
        let down = g(&pt.shifted(a, -step))?;
        if !up.is_finite() || !down.is_finite() {
            return Ok(None);
        }
        out.push((up - down) / (2.0 * step));
    }
    Ok(Some(out))
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

fn ratio(name: &str, lhs: f64, rhs: f64) -> Result<f64> {
    if !(rhs > 0.0) || !rhs.is_finite() {
        return Err(Error::Degenerate(format!("{name}: right-hand side is {rhs}")));
    }
    Ok(lhs / rhs)
}

/// Both sides of the Caccioppoli estimate for `max(v, 1)` and the cut-off
/// `zeta`, without the constant `C(p)`:
///
/// * `Standard`: `int int |grad(zeta v^a)|^p + sup_t int phi(v) zeta^p`
///   against `(beta^{p-1} + beta^{1-p}) (int int v^{p-1-beta}|grad zeta|^p
///   + int int phi(v) |d_t zeta^p|)` with `a = (p-1-beta)/p` and
///   `phi(v) = v^{1-beta}/|beta-1|`, or `|v^{1-beta}-1|/|1-beta|` when
///   `|beta - 1| < 0.1` (`log v` at `beta = 1`).
/// * `Beta1Log`: `(p/(p-2))^p int int |zeta grad v^{(p-2)/p}|^p
///   + sup_t int zeta^p log v` against `int int v^{p-2}|grad zeta|^p
///   + int int log v |d_t zeta^p|`.
/// * `LogGrad`: `int int |grad log v|^p zeta^p` against
///   `int int v^{2-p}|d_t zeta^p| + int int |grad zeta|^p`, over the nodes
///   whose stencil stays finite.
pub fn caccioppoli_probe(
    field: &dyn Field,
    params: &MediumParams,
    zeta: &Bump,
    beta: f64,
    mode: CaccioppoliMode,
    grid: ProbeGrid,
) -> Result<InequalityProbe> {
    if !(beta > 0.0) {
        return invalid(format!("beta must be positive, got {beta}"));
    }
    if field.dim() != zeta.dim() {
        return invalid("field and cut-off dimensions differ");
    }
    let p = params.p();
    let v = |pt: &SpaceTimePoint| -> Result<f64> { Ok(field.try_eval(pt)?.max(1.0)) };
    let phi = |v: f64| -> f64 {
        let d = 1.0 - beta;
        if d == 0.0 {
            v.ln()
        } else if d.abs() < 0.1 {
            (v.powf(d) - 1.0).abs() / d.abs()
        } else {
            v.powf(d) / d.abs()
        }
    };
    let outer = &zeta.outer;
    let (levels, ..) = match mode {
        CaccioppoliMode::Standard => {
            let a = (p - 1.0 - beta) / p;
            let g = |pt: &SpaceTimePoint| -> Result<f64> { Ok(zeta.value(pt) * v(pt)?.powf(a)) };
            sweep(outer, grid, (3, 1), |pt, step| {
                let z = zeta.value(pt);
                let gz = norm(&zeta.gradient(pt));
                if z == 0.0 && gz == 0.0 {
                    return Ok(Some((vec![0.0; 3], vec![0.0])));
                }
                let vv = v(pt)?;
                let Some(gp) = grad(&g, pt, step)? else {
                    return Ok(None);
                };
                if !vv.is_finite() {
                    return Ok(None);
                }
                Ok(Some((
                    vec![
                        norm(&gp).powf(p),
                        vv.powf(p - 1.0 - beta) * gz.powf(p),
                        phi(vv) * zeta.time_derivative_pow(pt, p).abs(),
                    ],
                    vec![phi(vv) * z.powf(p)],
                )))
            })?
        }
        CaccioppoliMode::Beta1Log => {
            let e = (p - 2.0) / p;
            let g = |pt: &SpaceTimePoint| -> Result<f64> { Ok(v(pt)?.powf(e)) };
            sweep(outer, grid, (3, 1), |pt, step| {
                let z = zeta.value(pt);
                let gz = norm(&zeta.gradient(pt));
                if z == 0.0 && gz == 0.0 {
                    return Ok(Some((vec![0.0; 3], vec![0.0])));
                }
                let vv = v(pt)?;
                let Some(gp) = grad(&g, pt, step)? else {
                    return Ok(None);
                };
                if !vv.is_finite() {
                    return Ok(None);
                }
                Ok(Some((
                    vec![
                        (z * norm(&gp)).powf(p),
                        vv.powf(p - 2.0) * gz.powf(p),
                        vv.ln() * zeta.time_derivative_pow(pt, p).abs(),
                    ],
                    vec![z.powf(p) * vv.ln()],
                )))
            })?
        }
        CaccioppoliMode::LogGrad => {
            let g = |pt: &SpaceTimePoint| -> Result<f64> { Ok(v(pt)?.ln()) };
            sweep(outer, grid, (3, 0), |pt, step| {
                let z = zeta.value(pt);
                let gz = norm(&zeta.gradient(pt));
                if z == 0.0 && gz == 0.0 {
                    return Ok(Some((vec![0.0; 3], vec![])));
                }
                let vv = v(pt)?;
                let Some(gl) = grad(&g, pt, step)? else {
                    return Ok(None);
                };
                if !vv.is_finite() {
                    return Ok(None);
                }
                Ok(Some((
                    vec![
                        norm(&gl).powf(p) * z.powf(p),
                        vv.powf(2.0 - p) * zeta.time_derivative_pow(pt, p).abs(),
                        gz.powf(p),
                    ],
                    vec![],
                )))
            })?
        }
    };
    let (d, s, skipped) = totals(&levels);
    let (name, lhs, rhs) = match mode {
        CaccioppoliMode::Standard => {
            let factor = beta.powf(p - 1.0) + beta.powf(1.0 - p);
            ("caccioppoli_standard", d[0] + s[0], factor * (d[1] + d[2]))
        }
        CaccioppoliMode::Beta1Log => ("caccioppoli_beta1_log", (p / (p - 2.0)).powf(p) * d[0] + s[0], d[1] + d[2]),
        CaccioppoliMode::LogGrad => ("caccioppoli_loggrad", d[0], d[1] + d[2]),
    };
    Ok(InequalityProbe {
        name: name.to_string(),
        lhs,
        rhs,
        constant: ratio(name, lhs, rhs)?,
        beta: (mode == CaccioppoliMode::Standard).then_some(beta),
        m: None,
        q: None,
        skipped,
    })
}

/// Both sides of the parabolic Sobolev inequality with `q = p + pm/n`:
/// `int int |zeta w|^q` against
/// `int int |grad(zeta w)|^p (sup_t int |zeta w|^m)^{p/n}`. The reported
/// constant is the empirical `S^q`.
pub fn sobolev_probe(w: &dyn Field, zeta: &Bump, m: f64, params: &MediumParams, grid: ProbeGrid) -> Result<InequalityProbe> {
    if !(m > 0.0) {
        return invalid(format!("m must be positive, got {m}"));
    }
    if w.dim() != zeta.dim() {
        return invalid("field and cut-off dimensions differ");
    }
    let p = params.p();
    let n = params.n() as f64;
    let q = p + p * m / n;
    let g = |pt: &SpaceTimePoint| -> Result<f64> { Ok(zeta.value(pt) * w.try_eval(pt)?) };
    let (levels, ..) = sweep(&zeta.outer, grid, (2, 1), |pt, step| {
        let zw = g(pt)?;
        let Some(gr) = grad(&g, pt, step)? else {
            return Ok(None);
        };
        if !zw.is_finite() {
            return Ok(None);
        }
        Ok(Some((vec![zw.abs().powf(q), norm(&gr).powf(p)], vec![zw.abs().powf(m)])))
    })?;
    let (d, s, skipped) = totals(&levels);
    if skipped > 0 {
        return Err(Error::NonFiniteStencil);
    }
    let rhs = d[1] * s[0].powf(p / n);
    Ok(InequalityProbe {
        name: "sobolev".to_string(),
        lhs: d[0],
        rhs,
        constant: ratio("sobolev", d[0], rhs)?,
        beta: None,
        m: Some(m),
        q: Some(q),
        skipped,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarnackOptions {
    pub c1: f64,
    /// Midpoint nodes per axis for the ball average.
    pub points: usize,
    /// Grid nodes per axis for the infimum over `B(x0, 2R)`.
    pub nodes: usize,
    /// Time levels for the infimum over `(t + tau/2, t + tau)`.
    pub time_levels: usize,
    /// Waiting times at or below this are reported as degenerate.
    pub min_tau: f64,
}

impl Default for HarnackOptions {
    fn default() -> Self {
        Self {
            c1: 1.0,
            points: 64,
            nodes: 33,
            time_levels: 17,
            min_tau: 1e-12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarnackProbe {
    pub avg: f64,
    pub tau: f64,
    pub q2r_inf: f64,
    /// Smallest `c2` for which the inequality holds at this instance;
    /// `+inf` when the infimum vanishes but the left side exceeds the first
    /// term.
    pub c2_min: f64,
}

/// Average of the field over the ball `B(x0, r)` at time `t`, normalized by
/// the same quadrature of 1.
pub fn ball_average(field: &dyn Field, x0: &[f64], r: f64, t: f64, points: usize) -> Result<f64> {
    let ball = Cylinder::ball(x0, r, t - 1.0, t + 1.0)?;
    let total = spatial_integral(field, &ball, t, None, points, |v| v)?;
    let one = spatial_integral(field, &ball, t, None, points, |_| 1.0)?;
    Ok(total / one)
}

/// Minimum of the field over a node grid of `B(x0, r) x (t_a, t_b)`.
fn grid_inf(field: &dyn Field, x0: &[f64], r: f64, t_a: f64, t_b: f64, nodes: usize, levels: usize) -> Result<f64> {
    let n = x0.len();
    let mut m = f64::INFINITY;
    let mut x = vec![0.0; n];
    for j in 0..levels {
        let t = t_a + (j as f64 + 0.5) * (t_b - t_a) / levels as f64;
        for idx in 0..nodes.pow(n as u32) {
            let mut rem = idx;
            for a in 0..n {
                x[a] = x0[a] - r + 2.0 * r * (rem % nodes) as f64 / (nodes - 1) as f64;
                rem /= nodes;
            }
            let d: f64 = x.iter().zip(x0).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            if d <= r * (1.0 + 1e-12) {
                m = m.min(field.try_eval(&SpaceTimePoint::new(&x, t))?);
            }
        }
    }
    Ok(m)
}

/// Ball average `A`, waiting time `tau = min(T - t, c1 R^p A^{2-p})`, the
/// grid infimum over `B(x0, 2R) x (t + tau/2, t + tau)` and the resulting
/// `c2_min = max(0, (A - (c1 R^p/(T - t))^{1/(p-2)}/2) / inf)`.
#[allow(clippy::too_many_arguments)]
pub fn harnack_probe(
    field: &dyn Field,
    params: &MediumParams,
    x0: &[f64],
    r: f64,
    t: f64,
    t_end: f64,
    opts: &HarnackOptions,
) -> Result<HarnackProbe> {
    if !(r > 0.0) || !(t_end > t) {
        return invalid("harnack_probe needs R > 0 and t < T");
    }
    if x0.len() != field.dim() {
        return invalid("center and field dimensions differ");
    }
    let p = params.p();
    let avg = ball_average(field, x0, r, t, opts.points)?;
    let wait = if avg > 0.0 {
        opts.c1 * r.powf(p) * avg.powf(2.0 - p)
    } else {
        f64::INFINITY
    };
    let tau = (t_end - t).min(wait);
    if !(tau > opts.min_tau) {
        return Err(Error::Degenerate(format!("waiting time tau = {tau:e} is below the grid resolution; refine")));
    }
    let q2r_inf = grid_inf(field, x0, 2.0 * r, t + 0.5 * tau, t + tau, opts.nodes, opts.time_levels)?;
    let excess = avg - 0.5 * (opts.c1 * r.powf(p) / (t_end - t)).powf(1.0 / (p - 2.0));
    let c2_min = if excess <= 0.0 {
        0.0
    } else if q2r_inf > 0.0 {
        excess / q2r_inf
    } else {
        f64::INFINITY
    };
    Ok(HarnackProbe {
        avg,
        tau,
        q2r_inf,
        c2_min,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LebesgueReport {
    pub averages: Vec<f64>,
    pub hypothesis_met: bool,
    /// Best constant `gamma` in `v >= gamma R^{p/(p-2)} (t - t0)^{-1/(p-2)}`
    /// on `B(x0, 2R) x (t0, T)`, one per grid refinement; empty when the
    /// hypothesis is unmet.
    pub gammas: Vec<f64>,
    /// Every `gamma` is positive and the finest is at least half the coarsest.
    pub bounded_away: bool,
}

/// Checks whether ball averages along `times` (approaching `t0` from above)
/// diverge and, if they do, measures the lower bound the blow-up lemma
/// predicts on `B(x0, 2R) x (t0, T)` over `levels` grid refinements.
#[allow(clippy::too_many_arguments)]
pub fn lebesgue_blowup_check(
    field: &dyn Field,
    params: &MediumParams,
    x0: &[f64],
    r: f64,
    times: &[f64],
    t0: f64,
    t_end: f64,
    levels: usize,
) -> Result<LebesgueReport> {
    if times.len() < 4 || !(t_end > t0) || times.iter().any(|t| !(*t > t0)) {
        return invalid("lebesgue check needs at least 4 times after t0 and T > t0");
    }
    let averages = times
        .iter()
        .map(|&t| ball_average(field, x0, r, t, 32))
        .collect::<Result<Vec<_>>>()?;
    let hypothesis_met = diverges(&averages, 1.5);
    let mut gammas = vec![];
    if hypothesis_met {
        let p = params.p();
        let e = 1.0 / (p - 2.0);
        let scale = r.powf(p * e);
        let n = x0.len();
        for l in 0..levels {
            let k = 8usize << l;
            let mut g = f64::INFINITY;
            let mut x = vec![0.0; n];
            for j in 0..k {
                let t = t0 + (j as f64 + 0.5) * (t_end - t0) / k as f64;
                for idx in 0..(k + 1).pow(n as u32) {
                    let mut rem = idx;
                    for a in 0..n {
                        x[a] = x0[a] - 2.0 * r + 4.0 * r * (rem % (k + 1)) as f64 / k as f64;
                        rem /= k + 1;
                    }
                    let d: f64 = x.iter().zip(x0).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
                    if d <= 2.0 * r * (1.0 + 1e-12) {
                        let v = field.try_eval(&SpaceTimePoint::new(&x, t))?;
                        g = g.min(v * (t - t0).powf(e) / scale);
                    }
                }
            }
            gammas.push(g);
        }
    }
    let bounded_away = !gammas.is_empty()
        && gammas.iter().all(|g| *g > 0.0)
        && gammas.last().unwrap() >= &(0.5 * gammas[0]);
    Ok(LebesgueReport {
        averages,
        hypothesis_met,
        gammas,
        bounded_away,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RnScalingReport {
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    /// `min_{|y| <= 1/2} U(y)`.
    pub nu: f64,
    /// `nu (R^p/t)^{1/(p-2)}` per radius.
    pub lower_bounds: Vec<f64>,
    pub monotone: bool,
}

/// `(R^p/t)^{1/(p-2)} U(x/R)` along `radii` for the giant `U` on the unit
/// ball; each radius must satisfy `|x| <= R/2`.
pub fn rn_scaling_probe(giant: &GiantSolution, x: &[f64], t: f64, radii: &[f64]) -> Result<RnScalingReport> {
    let unit = match &giant.domain {
        GiantDomain::Interval { lo, hi } => *lo == -1.0 && *hi == 1.0,
        GiantDomain::Disc { center, radius } => center == &[0.0, 0.0] && *radius == 1.0,
        GiantDomain::Box { .. } => false,
    };
    if !unit {
        return invalid("rn_scaling_probe needs the giant on the unit ball");
    }
    if x.len() != giant.dim() || !(t > 0.0) || radii.is_empty() {
        return invalid("rn_scaling_probe needs a point of the giant's dimension, t > 0 and radii");
    }
    let xn = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if let Some(r) = radii.iter().find(|r| !(xn <= 0.5 * **r * (1.0 + 1e-12))) {
        return invalid(format!("|x| = {xn} exceeds R/2 for R = {r}"));
    }
    let p = giant.p;
    // Grid minimum over the half ball and over the half sphere itself.
    let mut nu = giant.min_over_ball(0.5);
    let sphere: Vec<Vec<f64>> = if giant.dim() == 1 {
        vec![vec![-0.5], vec![0.5]]
    } else {
        (0..256)
            .map(|i| {
                let a = std::f64::consts::TAU * i as f64 / 256.0;
                vec![0.5 * a.cos(), 0.5 * a.sin()]
            })
            .collect()
    };
    for y in &sphere {
        nu = nu.min(giant.eval(y).unwrap_or(0.0));
    }
    let e = 1.0 / (p - 2.0);
    let mut values = vec![];
    let mut lower_bounds = vec![];
    for &r in radii {
        let y: Vec<f64> = x.iter().map(|v| v / r).collect();
        let amp = (r.powf(p) / t).powf(e);
        values.push(amp * giant.eval(&y).unwrap_or(0.0));
        lower_bounds.push(amp * nu);
    }
    let monotone = radii
        .windows(2)
        .zip(values.windows(2))
        .all(|(r, v)| (r[1] > r[0]) == (v[1] > v[0]));
    Ok(RnScalingReport {
        radii: radii.to_vec(),
        values,
        nu,
        lower_bounds,
        monotone,
    })
}
