//! `int v(x, t)^alpha dx` along a time grid approaching the singular time.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::field::AnalyticField;
use crate::quadrature::spatial_integral;

use super::summability::default_region;

/// Slopes steeper than this count as growth toward the singular time.
pub const SLOPE_TOL: f64 = -0.02;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceNormReport {
    pub alpha: f64,
    pub t_singular: f64,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    /// Least-squares slope of `log value` against `log(t - t_singular)` over
    /// the three times closest to the singular time.
    pub slope: f64,
    pub bounded: bool,
}

/// Integrates `v^alpha` over the field's default region at each time in
/// `times` (all after the singular time) with `points` midpoint nodes per
/// axis in every quadrature cube.
pub fn sup_slice_norm(field: &AnalyticField, alpha: f64, times: &[f64], points: usize) -> Result<SliceNormReport> {
    if !(alpha > 0.0) {
        return invalid(format!("alpha must be positive, got {alpha}"));
    }
    let locus = field.singular_locus();
    let ts = locus.as_ref().and_then(|l| l.time()).unwrap_or(0.0);
    if times.len() < 2 || times.iter().any(|t| !(*t > ts)) {
        return invalid("sup_slice_norm needs at least two times after the singular time");
    }
    let region = default_region(field)?;
    let values = times
        .iter()
        .map(|&t| spatial_integral(field, &region, t, locus.as_ref(), points, |v| v.max(0.0).powf(alpha)))
        .collect::<Result<Vec<f64>>>()?;

    let mut order: Vec<usize> = (0..times.len()).collect();
    order.sort_by(|&a, &b| times[a].total_cmp(&times[b]));
    let near: Vec<(f64, f64)> = order
        .iter()
        .take(3)
        .map(|&i| ((times[i] - ts).ln(), values[i].ln()))
        .collect();
    let slope = fit_slope(&near);
    let finite = values.iter().all(|v| v.is_finite());
    Ok(SliceNormReport {
        alpha,
        t_singular: ts,
        times: times.to_vec(),
        values,
        slope,
        bounded: finite && !(slope < SLOPE_TOL),
    })
}

/// Least-squares slope through `(x, y)` pairs.
pub fn fit_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}
