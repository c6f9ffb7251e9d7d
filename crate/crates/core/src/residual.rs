//! Pointwise finite-difference residual of `v_t - div(|grad v|^{p-2} grad v)`.

use crate::error::{invalid, Error, Result};
use crate::field::Field;
use crate::geometry::SpaceTimePoint;
use crate::params::MediumParams;

fn sample(field: &dyn Field, pt: &SpaceTimePoint) -> Result<f64> {
    let v = field.try_eval(pt)?;
    if !v.is_finite() {
        return Err(Error::NonFiniteStencil);
    }
    Ok(v)
}

/// Flux `|g|^{p-2} g_axis`, zero at `g = 0`.
fn flux(g: &[f64], axis: usize, p: f64) -> f64 {
    let norm2: f64 = g.iter().map(|v| v * v).sum();
    if norm2 == 0.0 {
        0.0
    } else {
        norm2.powf((p - 2.0) / 2.0) * g[axis]
    }
}

/// Central-difference residual in divergence form: the time derivative is a
/// central difference with step `dt`, and the flux on each face uses the
/// exact normal difference plus the averaged central differences of the
/// tangential components at the two adjacent nodes.
pub fn pde_residual(field: &dyn Field, params: &MediumParams, pt: &SpaceTimePoint, h: f64, dt: f64) -> Result<f64> {
    if !(h > 0.0) || !(dt > 0.0) {
        return invalid("pde_residual needs h > 0 and dt > 0");
    }
    let n = pt.dim();
    let p = params.p();
    let at = |q: SpaceTimePoint| sample(field, &q);
    let vt = (at(pt.with_t(pt.t + dt))? - at(pt.with_t(pt.t - dt))?) / (2.0 * dt);

    // Central derivative along `axis` at node `q`.
    let central = |q: SpaceTimePoint, axis: usize| -> Result<f64> {
        Ok((at(q.shifted(axis, h))? - at(q.shifted(axis, -h))?) / (2.0 * h))
    };
    let face_flux = |axis: usize, dir: f64| -> Result<f64> {
        let (a, b) = if dir > 0.0 {
            (*pt, pt.shifted(axis, h))
        } else {
            (pt.shifted(axis, -h), *pt)
        };
        let mut g = vec![0.0; n];
        g[axis] = (at(b)? - at(a)?) / h;
        for other in (0..n).filter(|&o| o != axis) {
            g[other] = 0.5 * (central(a, other)? + central(b, other)?);
        }
        Ok(flux(&g, axis, p))
    };
    let mut div = 0.0;
    for axis in 0..n {
        div += (face_flux(axis, 1.0)? - face_flux(axis, -1.0)?) / h;
    }
    Ok(vt - div)
}
