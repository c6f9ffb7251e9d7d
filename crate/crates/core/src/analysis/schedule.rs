//! Exponent schedules of the two Moser iterations.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::params::MediumParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleKind {
    Gap,
    Alpha,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentSchedule {
    pub kind: ScheduleKind,
    pub params: MediumParams,
    /// `epsilon` for the gap schedule, `alpha` for the alpha schedule.
    pub start: f64,
    pub gamma: f64,
    /// Number of iteration steps `j`.
    pub steps: usize,
    pub exponents: Vec<f64>,
    /// Last exponent of the gap schedule; for the alpha schedule the first
    /// exponent above `p - 2`, where the gap iteration takes over.
    pub final_exponent: f64,
}

/// `gamma = 1 + p/n`.
pub fn gamma(params: &MediumParams) -> f64 {
    1.0 + params.p() / params.n() as f64
}

/// The iteration from `L^{p-2+eps}` up to `L^{p-1+p/n-sigma}`: with
/// `j = ceil(log((1 - sigma/gamma)/eps_max)/log gamma)` and
/// `eps = (1 - sigma/gamma) gamma^{-j}`, the exponents are
/// `p - 2 + eps gamma^i` for `i = 0..=j`, followed by `p - 1 + p/n - sigma`.
pub fn gap_schedule(eps_max: f64, sigma: f64, params: &MediumParams) -> Result<ExponentSchedule> {
    if !(eps_max > 0.0 && eps_max < 1.0) {
        return invalid(format!("eps_max must lie in (0, 1), got {eps_max}"));
    }
    if !(sigma > 0.0 && sigma < 1.0) {
        return invalid(format!("sigma must lie in (0, 1), got {sigma}"));
    }
    let g = gamma(params);
    let base = 1.0 - sigma / g;
    let j = ((base / eps_max).ln() / g.ln()).ceil().max(0.0) as usize;
    let eps = base * g.powi(-(j as i32));
    let p2 = params.class_m_exponent();
    let exponents = (0..=j).map(|i| p2 + eps * g.powi(i as i32)).collect();
    Ok(ExponentSchedule {
        kind: ScheduleKind::Gap,
        params: *params,
        start: eps,
        gamma: g,
        steps: j,
        exponents,
        final_exponent: params.class_b_exponent() - sigma,
    })
}

/// `alpha (1 + j p/n)` for `j = 0, 1, ...` up to the last index below
/// `p - 2`; the next term is the handoff exponent. Empty when
/// `alpha >= p - 2`.
pub fn alpha_schedule(alpha: f64, params: &MediumParams) -> Result<ExponentSchedule> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return invalid(format!("alpha must be positive, got {alpha}"));
    }
    let p2 = params.class_m_exponent();
    let step = params.p() / params.n() as f64;
    let term = |j: usize| alpha * (1.0 + j as f64 * step);
    let mut exponents = vec![];
    let mut j = 0;
    if alpha < p2 {
        while term(j) < p2 {
            exponents.push(term(j));
            j += 1;
        }
        // j is now the first index at or above p - 2.
        exponents.push(term(j));
        j -= 1;
    }
    Ok(ExponentSchedule {
        kind: ScheduleKind::Alpha,
        params: *params,
        start: alpha,
        gamma: gamma(params),
        steps: j,
        final_exponent: if exponents.is_empty() { alpha } else { term(j + 1) },
        exponents,
    })
}
