//! Critical summability exponents and the class verdict.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::field::{AnalyticField, Family, Field, SingularLocus};
use crate::geometry::{Cylinder, SpaceTimePoint};
use crate::giant::GiantDomain;
use crate::params::MediumParams;
use crate::solutions::WedgeVariant;
use crate::quadrature::{collect_samples, diverges, Integrand, QuadOptions, SampleSet};

/// Width of the band around the ends of the void gap.
pub const TOL_GAP: f64 = 0.15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    ClassB,
    ClassM,
    Bounded,
    Inconclusive,
}

/// Whether the critical exponent was bracketed or only bounded by the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Censoring {
    Bracketed,
    /// Every sampled exponent diverged: `s_star` is at most the smallest one.
    AllDivergent,
    /// Every sampled exponent converged: `s_star` is at least the largest one.
    AllConvergent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentSample {
    pub s: f64,
    pub estimates: Vec<f64>,
    pub divergent: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummabilityReport {
    pub field: String,
    pub params: MediumParams,
    pub samples: Vec<ExponentSample>,
    /// `+inf` for locally bounded fields.
    pub s_star: f64,
    pub censoring: Censoring,
    pub bounded: bool,
    pub verdict: Verdict,
    pub flags: Vec<String>,
}

impl SummabilityReport {
    /// `[s, level, value]` triples.
    pub fn estimate_triples(&self) -> Vec<(f64, usize, f64)> {
        self.samples
            .iter()
            .flat_map(|e| e.estimates.iter().enumerate().map(move |(l, v)| (e.s, l, *v)))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanOptions {
    /// Exponents to sample; empty means `0.25, 0.5, ...` up to
    /// `max(p + 2, p - 1 + p/n + 1)`.
    pub s_grid: Vec<f64>,
    pub levels: usize,
    pub bisection_steps: usize,
    pub growth_factor: f64,
    pub tol_gap: f64,
    /// Keep sampling past the grid in steps of 0.5 (up to `4(p + 2)`) while
    /// every exponent converges.
    pub extend: bool,
    pub quad: QuadOptions,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self {
            s_grid: vec![],
            levels: 4,
            bisection_steps: 5,
            growth_factor: 1.5,
            tol_gap: TOL_GAP,
            extend: true,
            quad: QuadOptions::default(),
        }
    }
}

pub fn default_s_grid(params: &MediumParams) -> Vec<f64> {
    let top = (params.p() + 2.0).max(params.class_b_exponent() + 1.0);
    let steps = (top / 0.25).round() as usize;
    (1..=steps).map(|i| 0.25 * i as f64).collect()
}

fn peel(field: &AnalyticField) -> &Family {
    match &field.family {
        Family::PastExtended { inner, .. } | Family::Truncated { inner, .. } => peel(inner),
        other => other,
    }
}

/// A cylinder around the field's singular locus: the giant's domain for
/// giant-based fields, otherwise a box of half-width 1 (0.3 around poles).
pub fn default_region(field: &AnalyticField) -> Result<Cylinder> {
    let n = field.params.n();
    let locus = field.singular_locus();
    let (t_lo, mut t_hi) = match locus.as_ref().and_then(|l| l.time()) {
        Some(t0) => (t0 - 0.5, t0 + 1.0),
        None => (0.0, 1.0),
    };
    if let Some(end) = field.defined_until() {
        t_hi = t_hi.min(end);
    }
    if let Family::Wedge(w) = peel(field) {
        let t_s = w.t0 - w.sigma;
        return match w.variant {
            WedgeVariant::OneD => Cylinder::cube(&[w.x0], 1.0, t_s, t_s + 1.0),
            WedgeVariant::Product => Cylinder::cube(&vec![0.5; n], 0.5, t_s, t_s + 1.0),
        };
    }
    if let Some(domain) = field.giant_domain() {
        return match *domain {
            GiantDomain::Disc { center, radius } => Cylinder::ball(&center, radius, t_lo, t_hi),
            _ => {
                let (lo, hi) = domain.bounds();
                let c: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| 0.5 * (a + b)).collect();
                let w: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| 0.5 * (b - a)).collect();
                Cylinder::boxed(&c, &w, t_lo, t_hi)
            }
        };
    }
    match locus {
        Some(SingularLocus::Point { x0 }) => Cylinder::cube(&x0, 0.3, t_lo, t_hi),
        Some(SingularLocus::SpaceTime { x0, .. }) => Cylinder::cube(&x0, 1.0, t_lo, t_hi),
        _ => Cylinder::cube(&vec![0.0; n], 1.0, t_lo, t_hi),
    }
}

/// Translates the field and region so that the singular time is `t = 0`.
fn centred(field: &AnalyticField, region: &Cylinder) -> Result<(AnalyticField, Cylinder)> {
    let t0 = field.singular_locus().and_then(|l| l.time()).unwrap_or(0.0);
    match field.shifted_in_time(t0) {
        Some(shifted) if t0 != 0.0 => {
            let mut r = region.clone();
            r.t_lo -= t0;
            r.t_hi -= t0;
            Ok((shifted, r))
        }
        _ => Ok((field.clone(), region.clone())),
    }
}

/// Scans a sample set over the exponent grid and bisects the transition.
fn scan(
    set: &SampleSet,
    params: &MediumParams,
    name: String,
    opts: &ScanOptions,
    transform: impl Fn(f64, f64) -> f64 + Sync,
) -> Result<SummabilityReport> {
    let grid = if opts.s_grid.is_empty() {
        default_s_grid(params)
    } else {
        opts.s_grid.clone()
    };
    if grid.iter().any(|s| !(*s > 0.0)) {
        return invalid("exponent grid must be positive");
    }
    let run = |s: f64| -> Result<ExponentSample> {
        let estimates = set.reduce(|v| transform(v, s))?;
        let divergent = diverges(&estimates, opts.growth_factor);
        Ok(ExponentSample { s, estimates, divergent })
    };
    let sup = set.sup();
    let bounded = sup.iter().all(|v| v.is_finite()) && sup.last().unwrap() <= &(1.05 * sup[0].max(f64::MIN_POSITIVE));
    let mut samples: Vec<ExponentSample> = grid.par_iter().map(|&s| run(s)).collect::<Result<_>>()?;
    let mut grid = grid;
    if opts.extend && !bounded && samples.iter().all(|e| !e.divergent) {
        // Walk upward until the integrals diverge or the ceiling is reached.
        let ceiling = 4.0 * (params.p() + 2.0);
        let mut s = *grid.last().unwrap();
        while s + 0.5 <= ceiling {
            s += 0.5;
            let e = run(s)?;
            let stop = e.divergent;
            grid.push(s);
            samples.push(e);
            if stop {
                break;
            }
        }
    }

    let mut flags = vec![];
    let first_div = samples.iter().position(|e| e.divergent);
    if let Some(i) = first_div {
        if samples[i..].iter().any(|e| !e.divergent) {
            flags.push("non_monotone_trend".to_string());
        }
    }
    let (s_star, censoring) = match first_div {
        None => (*grid.last().unwrap(), Censoring::AllConvergent),
        Some(0) => (grid[0], Censoring::AllDivergent),
        Some(i) => {
            let (mut lo, mut hi) = (grid[i - 1], grid[i]);
            for _ in 0..opts.bisection_steps {
                let mid = 0.5 * (lo + hi);
                let e = run(mid)?;
                if e.divergent {
                    hi = mid;
                } else {
                    lo = mid;
                }
                samples.push(e);
            }
            (0.5 * (lo + hi), Censoring::Bracketed)
        }
    };
    samples.sort_by(|a, b| a.s.total_cmp(&b.s));

    let low = params.class_m_exponent() + opts.tol_gap;
    let high = params.class_b_exponent() - opts.tol_gap;
    let (s_star, verdict) = if bounded && censoring == Censoring::AllConvergent {
        (f64::INFINITY, Verdict::Bounded)
    } else if s_star <= low {
        (s_star, Verdict::ClassM)
    } else if s_star >= high {
        (s_star, Verdict::ClassB)
    } else {
        flags.push("gap_violation".to_string());
        (s_star, Verdict::Inconclusive)
    };
    if censoring == Censoring::AllConvergent && verdict == Verdict::ClassB {
        flags.push("s_star_censored_above".to_string());
    }
    Ok(SummabilityReport {
        field: name,
        params: *params,
        samples,
        s_star,
        censoring,
        bounded,
        verdict,
        flags,
    })
}

/// Critical exponent of `int int |v|^s` over `region`, shrinking toward the
/// field's singular locus.
pub fn estimate_critical_exponent(field: &AnalyticField, region: &Cylinder, opts: &ScanOptions) -> Result<SummabilityReport> {
    let (field, region) = &centred(field, region)?;
    let f = |pt: &SpaceTimePoint, _c: f64| field.try_eval(pt);
    let locus = field.singular_locus();
    let set = collect_samples(&f, region, locus.as_ref(), opts.levels, &opts.quad)?;
    scan(&set, &field.params, field.family_name(), opts, |v, s| v.abs().powf(s))
}

/// Class verdict with the default region and options.
pub fn classify(field: &AnalyticField) -> Result<SummabilityReport> {
    estimate_critical_exponent(field, &default_region(field)?, &ScanOptions::default())
}

/// Euclidean norm of the central-difference gradient with step `step`;
/// `+inf` when the stencil touches an infinite value.
pub fn gradient_norm(field: &dyn Field, pt: &SpaceTimePoint, step: f64) -> Result<f64> {
    let mut g2 = 0.0;
    for a in 0..pt.dim() {
        let up = field.try_eval(&pt.shifted(a, step))?;
        let down = field.try_eval(&pt.shifted(a, -step))?;
        if !up.is_finite() || !down.is_finite() {
            return Ok(f64::INFINITY);
        }
        let d = (up - down) / (2.0 * step);
        g2 += d * d;
    }
    Ok(g2.sqrt())
}

/// Critical exponent `q` of `int int |grad v|^q`, by the same scan. The
/// gradient is a central difference with a step of a quarter of the local
/// quadrature cell, so it never reaches across the singular locus.
pub fn gradient_exponent_check(field: &AnalyticField, region: &Cylinder, opts: &ScanOptions) -> Result<SummabilityReport> {
    let (field, region) = &centred(field, region)?;
    let inner = |pt: &SpaceTimePoint, cell: f64| -> Result<f64> {
        let step = 0.25 * cell;
        let (lo, hi) = region.bounds();
        if pt.x().iter().enumerate().any(|(a, x)| x - step < lo[a] || x + step > hi[a]) {
            return Ok(0.0);
        }
        gradient_norm(field, pt, step)
    };
    let locus = field.singular_locus();
    let set = collect_samples(&inner as &dyn Integrand, region, locus.as_ref(), opts.levels, &opts.quad)?;
    let mut report = scan(&set, &field.params, field.family_name(), opts, |v, q| v.powf(q))?;
    // The class bands do not apply to gradients; keep the verdict descriptive.
    report.flags.retain(|f| f != "gap_violation");
    report.verdict = if report.bounded && report.censoring == Censoring::AllConvergent {
        Verdict::Bounded
    } else {
        Verdict::Inconclusive
    };
    Ok(report)
}
