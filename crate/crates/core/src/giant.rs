//! The friendly giant: the positive solution of
//! `div(|grad U|^{p-2} grad U) + U/(p-2) = 0` with zero boundary values.
//!
//! Two independent constructions are provided: minimisation of the discrete
//! Rayleigh quotient followed by rescaling, and (in one dimension) a shooting
//! method on the radial ODE which serves as the oracle for the first.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::{GridField, GridSpec};
use crate::stencil::FaceSystem;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum GiantDomain {
    Interval { lo: f64, hi: f64 },
    Box { lo: [f64; 2], hi: [f64; 2] },
    Disc { center: [f64; 2], radius: f64 },
}

impl GiantDomain {
    pub fn dim(&self) -> usize {
        match self {
            GiantDomain::Interval { .. } => 1,
            _ => 2,
        }
    }

    /// Axis-aligned bounding box.
    pub fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
        match *self {
            GiantDomain::Interval { lo, hi } => (vec![lo], vec![hi]),
            GiantDomain::Box { lo, hi } => (lo.to_vec(), hi.to_vec()),
            GiantDomain::Disc { center, radius } => (
                vec![center[0] - radius, center[1] - radius],
                vec![center[0] + radius, center[1] + radius],
            ),
        }
    }

    /// Closed domain membership.
    pub fn contains(&self, x: &[f64]) -> bool {
        if x.len() != self.dim() {
            return false;
        }
        match *self {
            GiantDomain::Disc { center, radius } => {
                let d2 = (x[0] - center[0]).powi(2) + (x[1] - center[1]).powi(2);
                d2 <= radius * radius * (1.0 + 1e-12)
            }
            _ => {
                let (lo, hi) = self.bounds();
                x.iter().zip(lo.iter().zip(&hi)).all(|(v, (a, b))| v >= a && v <= b)
            }
        }
    }

    pub fn volume(&self) -> f64 {
        match *self {
            GiantDomain::Interval { lo, hi } => hi - lo,
            GiantDomain::Box { lo, hi } => (hi[0] - lo[0]) * (hi[1] - lo[1]),
            GiantDomain::Disc { radius, .. } => std::f64::consts::PI * radius * radius,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            GiantDomain::Interval { lo, hi } => hi > lo,
            GiantDomain::Box { lo, hi } => hi[0] > lo[0] && hi[1] > lo[1],
            GiantDomain::Disc { radius, .. } => radius > 0.0,
        };
        if ok {
            Ok(())
        } else {
            invalid("giant domain must have positive extent")
        }
    }

    /// Grid covering the bounding box with `nodes` points per axis.
    pub fn grid(&self, nodes: usize) -> Result<GridSpec> {
        self.validate()?;
        let (lo, hi) = self.bounds();
        GridSpec::spatial(&lo, &hi, &vec![nodes; lo.len()], 0.0)
    }

    /// Unknown nodes: interior box nodes lying strictly inside the domain.
    pub fn active_mask(&self, spec: &GridSpec) -> Vec<bool> {
        (0..spec.spatial_count())
            .map(|k| {
                if spec.is_boundary(k) {
                    return false;
                }
                match *self {
                    GiantDomain::Disc { center, radius } => {
                        let x = spec.node_x(k);
                        let d2 = (x[0] - center[0]).powi(2) + (x[1] - center[1]).powi(2);
                        d2 < radius * radius * (1.0 - 1e-12)
                    }
                    _ => true,
                }
            })
            .collect()
    }
}

/// Discretised friendly giant on a spatial grid.
#[derive(Debug, Clone)]
pub struct GiantSolution {
    pub p: f64,
    pub domain: GiantDomain,
    /// Values of the giant at the grid nodes (time-independent, `nt = 1`).
    pub field: GridField,
    /// Minimum of the Rayleigh quotient for the L2-normalised minimiser.
    pub lam: f64,
    /// Scale with `lam * C^{p-2} = 1/(p-2)`.
    pub scale: f64,
    pub el_residual: f64,
    pub iters: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GiantSidecar {
    pub lam: f64,
    #[serde(rename = "C")]
    pub scale: f64,
    pub el_residual: f64,
    pub iters: usize,
}

impl GiantSolution {
    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn spec(&self) -> &GridSpec {
        self.field.spec()
    }

    pub fn values(&self) -> &[f64] {
        self.field.level(0)
    }

    /// Multilinear interpolation; `None` outside the domain.
    pub fn eval(&self, x: &[f64]) -> Option<f64> {
        if !self.domain.contains(x) {
            return None;
        }
        self.field.interpolate_level(0, x).map(|v| v.max(0.0))
    }

    pub fn max_value(&self) -> f64 {
        self.values().iter().cloned().fold(0.0, f64::max)
    }

    /// Minimum over the nodes with `|x - c| <= r`, where `c` is the centre of the domain.
    pub fn min_over_ball(&self, r: f64) -> f64 {
        let (lo, hi) = self.domain.bounds();
        let c: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| 0.5 * (a + b)).collect();
        let spec = self.spec();
        let mut m = f64::INFINITY;
        for k in 0..spec.spatial_count() {
            let x = spec.node_x(k);
            let d: f64 = x.iter().zip(&c).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            if d <= r + 1e-12 {
                m = m.min(self.values()[k]);
            }
        }
        m
    }

    pub fn sidecar(&self) -> GiantSidecar {
        GiantSidecar {
            lam: self.lam,
            scale: self.scale,
            el_residual: self.el_residual,
            iters: self.iters,
        }
    }
}

fn p_energy(sys: &FaceSystem, w: &[f64], p: f64) -> f64 {
    sys.energy(w, |s| s.powf(p / 2.0))
}

fn mass(sys: &FaceSystem, w: &[f64]) -> f64 {
    w.iter().map(|v| v * v).sum::<f64>() * sys.cell
}

fn rayleigh(sys: &FaceSystem, w: &[f64], p: f64) -> f64 {
    p_energy(sys, w, p) / mass(sys, w).powf(p / 2.0)
}

/// Discrete Rayleigh quotient `sum_f |g_f|^p h^n / (sum_k w_k^2 h^n)^{p/2}`.
/// Boundary nodes of the grid are treated as zero.
pub fn rayleigh_quotient(w: &GridField, p: f64) -> Result<f64> {
    if !(p > 2.0) {
        return Err(Error::NotSlowDiffusion(p));
    }
    let spec = w.spec().spatial_slice(w.spec().t_lo);
    let sys = FaceSystem::interior(&spec);
    let vals: Vec<f64> = w
        .level(0)
        .iter()
        .enumerate()
        .map(|(k, &v)| if sys.active[k] { v } else { 0.0 })
        .collect();
    if vals.iter().all(|&v| v == 0.0) {
        return invalid("Rayleigh quotient of the zero function");
    }
    Ok(rayleigh(&sys, &vals, p))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MinimizeOptions {
    pub nodes: usize,
    pub tol: f64,
    pub max_iters: usize,
    pub seed: u64,
    /// Relative amplitude of the seeded multiplicative perturbation of the start.
    pub perturbation: f64,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        Self {
            nodes: 129,
            tol: 1e-12,
            max_iters: 20_000,
            seed: 0,
            perturbation: 0.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Minimizer {
    pub domain: GiantDomain,
    pub p: f64,
    /// L2-normalised nonnegative minimiser.
    pub u: GridField,
    pub lam: f64,
    pub iters: usize,
    /// Rayleigh quotient after every accepted step (starting value first).
    pub history: Vec<f64>,
}

fn normalise(sys: &FaceSystem, w: &mut [f64]) {
    let m = mass(sys, w).sqrt();
    w.iter_mut().for_each(|v| *v /= m);
}

/// Projected, preconditioned gradient descent on the discrete Rayleigh
/// quotient. Each step descends along the gradient of `R` preconditioned by
/// the frozen-coefficient weighted Laplacian, takes absolute values and
/// renormalises in L2; the step length is found by halving from 1.
pub fn minimize_rayleigh(domain: &GiantDomain, p: f64, opts: &MinimizeOptions) -> Result<Minimizer> {
    if !(p > 2.0) {
        return Err(Error::NotSlowDiffusion(p));
    }
    if !(opts.tol > 0.0) {
        return invalid("minimize_rayleigh needs tol > 0");
    }
    let spec = domain.grid(opts.nodes)?;
    let sys = FaceSystem::new(&spec, domain.active_mask(&spec));
    if sys.unknowns.is_empty() {
        return invalid("giant grid has no interior nodes");
    }
    let (lo, hi) = domain.bounds();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut w: Vec<f64> = (0..spec.spatial_count())
        .map(|k| {
            if !sys.active[k] {
                return 0.0;
            }
            let x = spec.node_x(k);
            let bump: f64 = (0..x.len())
                .map(|a| (std::f64::consts::PI * (x[a] - lo[a]) / (hi[a] - lo[a])).sin())
                .product();
            let noise = if opts.perturbation > 0.0 {
                1.0 + opts.perturbation * rng.gen_range(-1.0..1.0)
            } else {
                1.0
            };
            bump * noise
        })
        .collect();
    normalise(&sys, &mut w);
    let mut r = rayleigh(&sys, &w, p);
    let mut history = vec![r];
    let mut quiet = 0;
    let mut grad = vec![0.0; w.len()];
    let mut trial = vec![0.0; w.len()];
    for iter in 1..=opts.max_iters {
        // grad R at an L2-normalised w: grad E - p R w h^n.
        sys.energy_gradient(&w, |s| p * s.powf((p - 2.0) / 2.0), &mut grad);
        for (k, g) in grad.iter_mut().enumerate() {
            if sys.active[k] {
                *g -= p * r * w[k] * sys.cell;
            }
        }
        let gmax = sys.faces.iter().map(|f| sys.face_gradient(f, &w).2).fold(0.0, f64::max).sqrt();
        let delta2 = (1e-3 * gmax).powi(2);
        let pre = sys.frozen_matrix(&w, |s| p * (s + delta2).powf((p - 2.0) / 2.0), 0.0);
        let rhs = sys.gather(&grad);
        let mut dir = vec![0.0; rhs.len()];
        pre.solve_spd(&rhs, &mut dir, 1e-10, 4 * rhs.len() + 100);

        let mut alpha = 1.0;
        let mut accepted = None;
        while alpha > 1e-12 {
            trial.copy_from_slice(&w);
            sys.scatter_add(&dir, -alpha, &mut trial);
            trial.iter_mut().for_each(|v| *v = v.abs());
            if trial.iter().any(|v| *v != 0.0) {
                normalise(&sys, &mut trial);
                let rt = rayleigh(&sys, &trial, p);
                if rt <= r {
                    accepted = Some(rt);
                    break;
                }
            }
            alpha *= 0.5;
        }
        let Some(rt) = accepted else {
            // No descent possible along the preconditioned gradient: stationary.
            return Ok(finish(domain, p, spec, w, r, iter, history));
        };
        let rel = (r - rt) / r;
        std::mem::swap(&mut w, &mut trial);
        r = rt;
        history.push(r);
        if rel < opts.tol {
            quiet += 1;
            if quiet >= 10 {
                return Ok(finish(domain, p, spec, w, r, iter, history));
            }
        } else {
            quiet = 0;
        }
    }
    Err(Error::NoConvergence {
        iterations: opts.max_iters,
        residual: r,
    })
}

fn finish(
    domain: &GiantDomain,
    p: f64,
    spec: GridSpec,
    w: Vec<f64>,
    lam: f64,
    iters: usize,
    history: Vec<f64>,
) -> Minimizer {
    let u = GridField::from_parts(spec, w.clone(), vec![false; w.len()]).expect("finite iterate");
    Minimizer {
        domain: domain.clone(),
        p,
        u,
        lam,
        iters,
        history,
    }
}

/// `C = (lam (p-2))^{-1/(p-2)}` and `U = C u`.
pub fn scale_to_giant(min: &Minimizer) -> Result<GiantSolution> {
    if !(min.lam > 0.0) {
        return invalid("scale_to_giant needs lam > 0");
    }
    let p = min.p;
    let scale = giant_scale(min.lam, p);
    let vals: Vec<f64> = min.u.level(0).iter().map(|v| scale * v).collect();
    let spec = min.u.spec().clone();
    let field = GridField::from_parts(spec, vals.clone(), vec![false; vals.len()])?;
    let mut g = GiantSolution {
        p,
        domain: min.domain.clone(),
        field,
        lam: min.lam,
        scale,
        el_residual: 0.0,
        iters: min.iters,
    };
    g.el_residual = giant_residual(&g);
    Ok(g)
}

pub fn giant_scale(lam: f64, p: f64) -> f64 {
    (lam * (p - 2.0)).powf(-1.0 / (p - 2.0))
}

/// Convenience: minimise and rescale in one go.
pub fn build_giant(domain: &GiantDomain, p: f64, opts: &MinimizeOptions) -> Result<GiantSolution> {
    scale_to_giant(&minimize_rayleigh(domain, p, opts)?)
}

/// Weak residual of the giant equation against every interior nodal hat:
/// `|<|grad U|^{p-2} grad U, grad phi> - (1/(p-2)) int U phi| / ||phi||_1`,
/// maximised over the hats. The mass term uses the consistent (tensor
/// product linear element) mass matrix.
pub fn giant_residual(g: &GiantSolution) -> f64 {
    let spec = g.spec().clone();
    let sys = FaceSystem::new(&spec, g.domain.active_mask(&spec));
    let u = g.values();
    let p = g.p;
    let mut flux = vec![0.0; u.len()];
    sys.energy_gradient(u, |s| s.powf((p - 2.0) / 2.0), &mut flux);
    let dim = spec.dim();
    let mut worst: f64 = 0.0;
    for &k in &sys.unknowns {
        // Consistent mass: tensor product of (1/6, 4/6, 1/6) h per axis.
        let mut mass_u = 0.0;
        let idx = spec.multi_index(k);
        let offsets = 3usize.pow(dim as u32);
        for o in 0..offsets {
            let mut w = 1.0;
            let mut j = [0usize; 3];
            let mut ok = true;
            let mut oo = o;
            for a in 0..dim {
                let d = (oo % 3) as isize - 1;
                oo /= 3;
                w *= if d == 0 { 4.0 / 6.0 } else { 1.0 / 6.0 };
                let ni = idx[a] as isize + d;
                if ni < 0 || ni >= spec.nx[a] as isize {
                    ok = false;
                    break;
                }
                j[a] = ni as usize;
            }
            if ok {
                mass_u += w * u[spec.linear_index(&j[..dim])];
            }
        }
        mass_u *= sys.cell;
        let r = (flux[k] - mass_u / (p - 2.0)).abs() / sys.cell;
        worst = worst.max(r);
    }
    worst
}

#[derive(Debug, Clone, Copy)]
struct OdeState {
    u: f64,
    w: f64,
}

fn ode_rhs(s: OdeState, p: f64) -> OdeState {
    OdeState {
        u: s.w.signum() * s.w.abs().powf(1.0 / (p - 1.0)),
        w: -s.u / (p - 2.0),
    }
}

fn rk4(s: OdeState, dx: f64, p: f64) -> OdeState {
    let add = |a: OdeState, b: OdeState, c: f64| OdeState {
        u: a.u + c * b.u,
        w: a.w + c * b.w,
    };
    let k1 = ode_rhs(s, p);
    let k2 = ode_rhs(add(s, k1, dx / 2.0), p);
    let k3 = ode_rhs(add(s, k2, dx / 2.0), p);
    let k4 = ode_rhs(add(s, k3, dx), p);
    OdeState {
        u: s.u + dx / 6.0 * (k1.u + 2.0 * k2.u + 2.0 * k3.u + k4.u),
        w: s.w + dx / 6.0 * (k1.w + 2.0 * k2.w + 2.0 * k3.w + k4.w),
    }
}

/// Position of the first zero of the solution started at `u(0) = a`, `u'(0) = 0`.
fn first_zero(a: f64, p: f64, dx: f64, max_x: f64) -> f64 {
    let mut s = OdeState { u: a, w: 0.0 };
    let mut x = 0.0;
    while x < max_x {
        let next = rk4(s, dx, p);
        if next.u <= 0.0 {
            return x + dx * s.u / (s.u - next.u);
        }
        s = next;
        x += dx;
    }
    f64::INFINITY
}

/// Radial profile `u(x)` for `x` in `[0, len]` at spacing `dx`.
fn profile(a: f64, p: f64, dx: f64, steps: usize) -> Vec<f64> {
    let mut s = OdeState { u: a, w: 0.0 };
    let mut out = Vec::with_capacity(steps + 1);
    out.push(a);
    for _ in 0..steps {
        s = rk4(s, dx, p);
        out.push(s.u);
    }
    out
}

/// Shooting oracle in one dimension on `(-half_width, half_width)`: integrates
/// `(|U'|^{p-2} U')' + U/(p-2) = 0` from the centre with `U'(0) = 0` and bisects
/// on `U(0)` until the first zero sits at `half_width` to within `tol`.
/// The profile is sampled on `nodes` equispaced points.
pub fn shoot_giant_1d(p: f64, half_width: f64, nodes: usize, tol: f64) -> Result<GiantSolution> {
    if !(p > 2.0) {
        return Err(Error::NotSlowDiffusion(p));
    }
    if !(half_width > 0.0) || !(tol > 0.0) || nodes < 3 || nodes.is_multiple_of(2) {
        return invalid("shooting needs half_width > 0, tol > 0 and an odd node count >= 3");
    }
    let sub = 64;
    let h = 2.0 * half_width / (nodes - 1) as f64;
    let dx = h / sub as f64;
    let max_x = 64.0 * half_width;
    let zero = |a: f64| first_zero(a, p, dx, max_x);

    let (mut lo, mut hi) = (1.0, 1.0);
    let mut tries = 0;
    while zero(lo) > half_width {
        lo *= 0.5;
        tries += 1;
        if tries > 400 {
            return Err(Error::BracketNotFound(format!("no start value reaches zero before {half_width}")));
        }
    }
    tries = 0;
    while zero(hi) < half_width {
        hi *= 2.0;
        tries += 1;
        if tries > 400 {
            return Err(Error::BracketNotFound(format!("no start value reaches zero after {half_width}")));
        }
    }
    let mut a = 0.5 * (lo + hi);
    for _ in 0..200 {
        a = 0.5 * (lo + hi);
        let z = zero(a);
        if (z - half_width).abs() <= tol * half_width || hi - lo <= f64::EPSILON * hi {
            break;
        }
        if z > half_width {
            hi = a;
        } else {
            lo = a;
        }
    }

    let half = (nodes - 1) / 2;
    let prof = profile(a, p, dx, half * sub);
    let mut vals = vec![0.0; nodes];
    for i in 0..=half {
        let v = prof[i * sub].max(0.0);
        vals[half + i] = v;
        vals[half - i] = v;
    }
    vals[0] = 0.0;
    vals[nodes - 1] = 0.0;

    // lam from the L2 norm of U, via Simpson's rule on the fine profile.
    let fine: Vec<f64> = prof.iter().map(|v| v.max(0.0)).collect();
    let m = fine.len() - 1;
    let mut simpson = fine[0] * fine[0] + fine[m] * fine[m];
    for (i, v) in fine.iter().enumerate().take(m).skip(1) {
        simpson += if i % 2 == 1 { 4.0 } else { 2.0 } * v * v;
    }
    let norm2 = 2.0 * simpson * dx / 3.0;
    let c = norm2.sqrt();
    let lam = 1.0 / ((p - 2.0) * c.powf(p - 2.0));

    let domain = GiantDomain::Interval {
        lo: -half_width,
        hi: half_width,
    };
    let spec = domain.grid(nodes)?;
    let field = GridField::from_parts(spec, vals.clone(), vec![false; nodes])?;
    let mut g = GiantSolution {
        p,
        domain,
        field,
        lam,
        scale: c,
        el_residual: 0.0,
        iters: 0,
    };
    g.el_residual = giant_residual(&g);
    Ok(g)
}
