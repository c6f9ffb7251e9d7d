//! One function per subcommand. Each returns an [`Artifact`]; `main` prints
//! its JSON and writes the files.

use std::path::Path;
use std::sync::Arc;

use anyhow::{anyhow, bail, Context, Result};
use clap::ValueEnum;
use serde::Serialize;
use serde_json::{json, Value};
use slowdiff::analysis::{
    alpha_schedule, caccioppoli_probe, default_region, detect_infinity_slice, dichotomy_check, estimate_critical_exponent, gap_schedule,
    gradient_exponent_check, harnack_probe, lebesgue_blowup_check, make_bump, rn_scaling_probe, sobolev_probe, sup_slice_norm,
    CaccioppoliMode, HarnackOptions, InfinitySlice, ProbeGrid, ScanOptions, SliceMode, SliceOptions, SummabilityReport, EPS_ZERO,
};
use slowdiff::evolve::{compare, final_level_error, hyperplane_demo, solve_with_stats, EvolutionProblem};
use slowdiff::field::{default_giant_domain, default_giant_nodes};
use slowdiff::giant::{build_giant, MinimizeOptions};
use slowdiff::{AnalyticField, Cylinder, Field, GiantDomain, GridField, GridSpec, MediumParams, SpaceTimePoint};

use crate::config::Settings;
use crate::output::{num, Artifact, Dat};

/// Non-finite numbers become `null`; callers that need them overwrite the
/// affected keys with [`num`].
fn to_json<T: Serialize>(value: &T) -> Value {
    serde_json::to_value(value).expect("report types serialize")
}

fn params_json(p: &MediumParams) -> Value {
    json!({ "p": p.p(), "n": p.n() })
}

fn tag(params: &MediumParams) -> String {
    format!("p{}-n{}", params.p(), params.n())
}

/// One row per node of a spatial level; 2D grids get a blank line after
/// every row of the first axis so gnuplot's `splot` reads them as a mesh.
fn level_dat(field: &GridField, level: usize) -> String {
    let spec = field.spec();
    let names: Vec<&str> = ["x", "y", "z"][..spec.dim()].iter().copied().chain(["value"]).collect();
    let mut dat = Dat::new(&names);
    for k in 0..spec.spatial_count() {
        let mut row = spec.node_x(k);
        row.push(field.get(level, k));
        dat.row(&row);
        if spec.dim() > 1 && (k + 1) % spec.nx[0] == 0 {
            dat.blank();
        }
    }
    dat.finish()
}

pub fn eval(settings: &Settings, at: &[f64], t: f64) -> Result<Artifact> {
    if at.is_empty() {
        bail!("--at needs at least one coordinate");
    }
    let spec = settings.family_spec(at.len())?;
    if spec.params.n() != at.len() {
        bail!("--at has {} coordinates but n = {}", at.len(), spec.params.n());
    }
    let field = spec.build()?;
    let value = field.try_eval(&SpaceTimePoint::new(at, t))?;
    let json = json!({
        "kind": "eval",
        "field": field.family_name(),
        "params": params_json(&spec.params),
        "x": at,
        "t": t,
        "value": num(value),
    });
    Ok(Artifact::new(format!("eval-{}-{}", field.family_name(), tag(&spec.params)), json))
}

fn summability_json(r: &SummabilityReport) -> Value {
    json!({
        "field": r.field,
        "params": params_json(&r.params),
        "estimates": r.estimate_triples().into_iter().map(|(s, l, v)| json!([s, l, num(v)])).collect::<Vec<_>>(),
        "s_star": num(r.s_star),
        "verdict": r.verdict,
        "censoring": r.censoring,
        "bounded": r.bounded,
        "flags": r.flags,
    })
}

fn estimates_dat(r: &SummabilityReport, exponent: &str) -> String {
    let mut dat = Dat::new(&[exponent, "level", "estimate"]);
    for sample in &r.samples {
        for (l, v) in sample.estimates.iter().enumerate() {
            dat.row(&[sample.s, l as f64, *v]);
        }
        dat.blank();
    }
    dat.finish()
}

pub fn classify(settings: &Settings, levels: Option<usize>, gradient: bool) -> Result<Artifact> {
    let field = settings.family_spec(1)?.build()?;
    let region = default_region(&field)?;
    let mut opts = ScanOptions::default();
    if let Some(l) = levels.or(settings.levels) {
        if l < 3 {
            bail!("--levels must be at least 3 (a divergence trend needs three estimates)");
        }
        opts.levels = l;
    }
    let report = estimate_critical_exponent(&field, &region, &opts)?;
    let mut json = summability_json(&report);
    json["kind"] = json!("classify");
    json["refinement"] = json!(opts.levels);
    let mut failed = report.flags.iter().any(|f| f == "gap_violation");
    let stem = format!("classify-{}-{}", field.family_name(), tag(&field.params));
    let mut art_files = vec![(".dat".to_string(), estimates_dat(&report, "s"))];
    if gradient {
        let g = gradient_exponent_check(&field, &region, &opts)?;
        json["q_star"] = num(g.s_star);
        json["gradient"] = summability_json(&g);
        failed |= g.flags.iter().any(|f| f == "gap_violation");
        art_files.push((".gradient.dat".to_string(), estimates_dat(&g, "q")));
    } else {
        json["q_star"] = Value::Null;
    }
    let mut art = Artifact::new(stem, json).failing_if(failed);
    art.files = art_files;
    Ok(art)
}

fn parse_domain(text: &str) -> Result<GiantDomain> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let domain = serde_path_to_error::deserialize(&mut *de).map_err(|e| anyhow!("--domain: key `{}`: {}", e.path(), e.inner()))?;
    de.end().map_err(|e| anyhow!("--domain: {e}"))?;
    Ok(domain)
}

pub fn giant(settings: &Settings, domain: Option<&str>, nodes: Option<usize>, tol: Option<f64>) -> Result<Artifact> {
    let domain = match domain {
        Some(text) => parse_domain(text)?,
        None => default_giant_domain(settings.n.unwrap_or(1))?,
    };
    let params = MediumParams::new(settings.p, domain.dim())?;
    let mut opts = MinimizeOptions {
        nodes: nodes.or(settings.grid.nx).unwrap_or_else(|| default_giant_nodes(domain.dim())),
        seed: settings.seed,
        ..MinimizeOptions::default()
    };
    if let Some(t) = tol {
        opts.tol = t;
    }
    let g = build_giant(&domain, params.p(), &opts)?;
    let mut json = to_json(&g.sidecar());
    json["kind"] = json!("giant");
    json["params"] = params_json(&params);
    json["domain"] = to_json(&domain);
    json["nodes"] = json!(opts.nodes);
    json["seed"] = json!(opts.seed);
    json["max_value"] = num(g.max_value());
    let field = g.field.clone().with_params(params);
    Ok(Artifact::new(format!("giant-{}", tag(&params)), json)
        .with_file(".csv", field.to_csv())
        .with_file(".dat", level_dat(&field, 0)))
}

pub fn evolve(settings: &Settings, initial: Option<&Path>, delta: Option<f64>, tol_newton: Option<f64>) -> Result<Artifact> {
    let g = &settings.grid;
    let nt = g.nt.unwrap_or(17);
    let (t0, t1) = (g.t0.unwrap_or(0.5), g.t1.unwrap_or(1.0));
    let (problem, field, name, params) = match initial {
        Some(path) => {
            if settings.family.is_some() {
                bail!("--initial and a field family are mutually exclusive");
            }
            let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
            let snap = GridField::from_csv(&text).with_context(|| format!("cannot parse {}", path.display()))?;
            let s = snap.spec();
            let params = match settings.n {
                Some(_) => settings.params(s.dim())?,
                None => snap.params().map_or_else(|| settings.params(s.dim()), Ok)?,
            };
            let spec = GridSpec::new(&s.lo, &s.hi, &s.nx, t0, t1, nt)?;
            let values = snap.level(s.nt - 1).to_vec();
            (EvolutionProblem::new(spec, params, values)?, None, "initial".to_string(), params)
        }
        None => {
            let fspec = settings.family_spec(1)?;
            let params = fspec.params;
            let field = Arc::new(fspec.build()?);
            let (lo, hi) = field.domain_box().unwrap_or_else(|| (vec![-1.5; params.n()], vec![1.5; params.n()]));
            let lo: Vec<f64> = lo.iter().map(|v| g.lo.unwrap_or(*v)).collect();
            let hi: Vec<f64> = hi.iter().map(|v| g.hi.unwrap_or(*v)).collect();
            let spec = GridSpec::new(&lo, &hi, &vec![g.nx.unwrap_or(33); params.n()], t0, t1, nt)?;
            let mut problem = EvolutionProblem::from_field(spec.clone(), params, field.clone() as Arc<dyn Field>)?;
            if let Some(d) = field.giant_domain() {
                problem = problem.with_fixed(d.active_mask(&spec).into_iter().map(|a| !a).collect());
            }
            let name = field.family_name();
            (problem, Some(field), name, params)
        }
    };
    let mut problem = problem;
    if let Some(d) = delta.or(settings.delta) {
        problem = problem.with_delta(d);
    }
    if let Some(t) = tol_newton.or(settings.tol_newton) {
        problem = problem.with_tolerance(t);
    }
    let (solution, stats) = solve_with_stats(&problem)?;
    let solution = solution.with_params(params);
    let error = match &field {
        Some(f) => num(final_level_error(&solution, f.as_ref())?),
        None => Value::Null,
    };
    let spec = solution.spec();
    let json = json!({
        "kind": "evolve",
        "field": name,
        "params": params_json(&params),
        "grid": to_json(spec),
        "delta": problem.delta.unwrap_or_else(|| (0..spec.dim()).map(|a| spec.h(a)).fold(f64::INFINITY, f64::min)),
        "tol_newton": problem.tol_newton,
        "max_error": error,
        "inner_iterations": stats.iterations.iter().sum::<usize>(),
        "max_residual": num(stats.residuals.iter().cloned().fold(0.0, f64::max)),
    });
    Ok(Artifact::new(format!("evolve-{name}-{}", tag(&params)), json)
        .with_file(".csv", solution.to_csv())
        .with_file(".dat", level_dat(&solution, spec.nt - 1)))
}

fn read_field(path: &Path) -> Result<GridField> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    GridField::from_csv(&text).with_context(|| format!("cannot parse {}", path.display()))
}

pub fn compare_fields(lower: &Path, upper: &Path, tol: f64) -> Result<Artifact> {
    let r = compare(&read_field(lower)?, &read_field(upper)?, tol)?;
    let mut json = to_json(&r);
    json["kind"] = json!("compare");
    json["worst_violation"] = num(r.worst_violation);
    json["lower"] = json!(lower.display().to_string());
    json["upper"] = json!(upper.display().to_string());
    Ok(Artifact::new("compare", json).failing_if(!r.pass))
}

fn slice_json(s: &InfinitySlice) -> Value {
    json!({ "fraction": s.fraction, "measure": s.measure, "flagged": s.flagged() })
}

pub fn slices(settings: &Settings, t0: Option<f64>, nodes: Option<usize>) -> Result<Artifact> {
    let field = settings.family_spec(1)?.build()?;
    let region = default_region(&field)?;
    let t0 = t0.or_else(|| field.singular_locus().and_then(|l| l.time())).unwrap_or(0.0);
    let opts = SliceOptions {
        nodes: nodes.or(settings.grid.nx).unwrap_or(SliceOptions::default().nodes),
        ..SliceOptions::default()
    };
    let down = detect_infinity_slice(&field, &region, t0, SliceMode::Down, &opts)?;
    let perp = detect_infinity_slice(&field, &region, t0, SliceMode::Perp, &opts)?;
    let contained = perp.mask.iter().zip(&down.mask).all(|(p, d)| !p || *d);
    let check = dichotomy_check(&down, EPS_ZERO);
    let json = json!({
        "kind": "slices",
        "field": field.family_name(),
        "params": params_json(&field.params),
        "t0": t0,
        "refinement": opts.nodes,
        "thresholds": opts.thresholds,
        "down": slice_json(&down),
        "perp": slice_json(&perp),
        "perp_in_down": contained,
        "dichotomy": to_json(&check),
    });
    let names: Vec<&str> = ["x", "y", "z"][..down.grid.dim()].iter().copied().chain(["down", "perp"]).collect();
    let mut dat = Dat::new(&names);
    for k in 0..down.grid.spatial_count() {
        if !down.domain[k] {
            continue;
        }
        let mut row = down.grid.node_x(k);
        row.push(f64::from(u8::from(down.mask[k])));
        row.push(f64::from(u8::from(perp.mask[k])));
        dat.row(&row);
    }
    Ok(Artifact::new(format!("slices-{}-{}", field.family_name(), tag(&field.params)), json)
        .with_file(".dat", dat.finish())
        .failing_if(!contained || !check.pass))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProbeKind {
    SliceNorm,
    Harnack,
    Sobolev,
    Caccioppoli,
    Lebesgue,
    RnScaling,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CaccMode {
    Standard,
    Beta1Log,
    LogGrad,
}

#[derive(Debug, Clone, Default)]
pub struct ProbeFlags {
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub m: Option<f64>,
    pub level: Option<usize>,
    pub mode: Option<CaccMode>,
    pub radii: Vec<f64>,
    pub times: Vec<f64>,
    pub x: Vec<f64>,
}

/// Cut-off used by the Sobolev and Caccioppoli probes: inner cube of
/// half-width 0.4 over `[0.3, 0.7]` inside the cube of half-width 0.8 over
/// `[0.1, 0.9]`, both around the origin and shifted by the singular time.
fn default_bump(n: usize, ts: f64) -> Result<slowdiff::analysis::Bump> {
    let c = vec![0.0; n];
    Ok(make_bump(
        &Cylinder::cube(&c, 0.4, ts + 0.3, ts + 0.7)?,
        &Cylinder::cube(&c, 0.8, ts + 0.1, ts + 0.9)?,
    )?)
}

fn singular_time(field: &AnalyticField) -> f64 {
    field.singular_locus().and_then(|l| l.time()).unwrap_or(0.0)
}

pub fn probe(settings: &Settings, kind: ProbeKind, flags: &ProbeFlags) -> Result<Artifact> {
    if kind == ProbeKind::RnScaling {
        return rn_scaling(settings, flags);
    }
    let field = settings.family_spec(1)?.build()?;
    let params = field.params;
    let n = params.n();
    let ts = singular_time(&field);
    let level = flags.level.unwrap_or(2);
    let mut dat;
    let mut json = match kind {
        ProbeKind::SliceNorm => {
            let alpha = flags.alpha.unwrap_or(1.0);
            let offsets = if flags.times.is_empty() { vec![0.25, 0.5, 1.0] } else { flags.times.clone() };
            let times: Vec<f64> = offsets.iter().map(|s| ts + s).collect();
            let r = sup_slice_norm(&field, alpha, &times, 16)?;
            dat = Dat::new(&["t_minus_ts", "norm"]);
            for (s, v) in offsets.iter().zip(&r.values) {
                dat.row(&[*s, *v]);
            }
            to_json(&r)
        }
        ProbeKind::Harnack => {
            let radii = if flags.radii.is_empty() { vec![0.5, 0.5f64.sqrt(), 1.0] } else { flags.radii.clone() };
            let x0 = if flags.x.is_empty() { vec![0.0; n] } else { flags.x.clone() };
            let trunc = field.truncate(1e6);
            let lam = params.lambda();
            let opts = HarnackOptions::default();
            dat = Dat::new(&["R", "c2_min"]);
            let mut rows = vec![];
            for &r in &radii {
                let t = ts + 1.5 * 2f64.powf(lam) * r.powf(lam);
                let h = harnack_probe(&trunc, &params, &x0, r, t, ts + 51.0 * (t - ts), &opts)?;
                dat.row(&[r, h.c2_min]);
                let mut row = to_json(&h);
                row["R"] = json!(r);
                row["t"] = json!(t);
                row["c2_min"] = num(h.c2_min);
                rows.push(row);
            }
            let c2: Vec<f64> = rows.iter().filter_map(|r| r["c2_min"].as_f64()).collect();
            let (lo, hi) = c2.iter().fold((f64::INFINITY, 0.0f64), |(a, b), v| (a.min(*v), b.max(*v)));
            json!({ "x0": x0, "instances": rows, "c2_ratio": num(if lo > 0.0 { hi / lo } else { f64::INFINITY }) })
        }
        ProbeKind::Sobolev => {
            let z = default_bump(n, ts)?;
            let m = flags.m.unwrap_or(1.0);
            dat = Dat::new(&["level", "constant"]);
            let mut rows = vec![];
            for l in 0..=level {
                let r = sobolev_probe(&field, &z, m, &params, ProbeGrid::level(l))?;
                dat.row(&[l as f64, r.constant]);
                rows.push(to_json(&r));
            }
            json!({ "levels": rows })
        }
        ProbeKind::Caccioppoli => {
            let z = default_bump(n, ts)?;
            let beta = flags.beta.unwrap_or(0.5);
            let mode = match flags.mode.unwrap_or(CaccMode::Standard) {
                CaccMode::Standard => CaccioppoliMode::Standard,
                CaccMode::Beta1Log => CaccioppoliMode::Beta1Log,
                CaccMode::LogGrad => CaccioppoliMode::LogGrad,
            };
            dat = Dat::new(&["level", "constant"]);
            let mut rows = vec![];
            for l in 0..=level {
                let r = caccioppoli_probe(&field, &params, &z, beta, mode, ProbeGrid::level(l))?;
                dat.row(&[l as f64, r.constant]);
                rows.push(to_json(&r));
            }
            json!({ "mode": to_json(&mode), "levels": rows })
        }
        ProbeKind::Lebesgue => {
            let x0 = if flags.x.is_empty() { vec![0.0; n] } else { flags.x.clone() };
            let r = flags.radii.first().copied().unwrap_or(0.2);
            let offsets: Vec<f64> = if flags.times.is_empty() { (2..12).map(|k| 0.5f64.powi(k)).collect() } else { flags.times.clone() };
            let times: Vec<f64> = offsets.iter().map(|s| ts + s).collect();
            let rep = lebesgue_blowup_check(&field, &params, &x0, r, &times, ts, ts + 0.5, 3)?;
            dat = Dat::new(&["t_minus_ts", "ball_average"]);
            for (s, a) in offsets.iter().zip(&rep.averages) {
                dat.row(&[*s, *a]);
            }
            let mut j = to_json(&rep);
            j["x0"] = json!(x0);
            j["R"] = json!(r);
            j
        }
        ProbeKind::RnScaling => unreachable!(),
    };
    json["kind"] = json!("probe");
    json["probe"] = to_json(&kind_name(kind));
    json["field"] = json!(field.family_name());
    json["params"] = params_json(&params);
    Ok(Artifact::new(format!("probe-{}-{}-{}", kind_name(kind), field.family_name(), tag(&params)), json)
        .with_file(".dat", dat.finish()))
}

fn kind_name(kind: ProbeKind) -> String {
    kind.to_possible_value().expect("no skipped variants").get_name().to_string()
}

fn rn_scaling(settings: &Settings, flags: &ProbeFlags) -> Result<Artifact> {
    let n = settings.n.unwrap_or(2);
    let params = settings.params(n)?;
    let domain = default_giant_domain(n)?;
    let opts = MinimizeOptions {
        nodes: settings.grid.nx.unwrap_or_else(|| default_giant_nodes(n)),
        seed: settings.seed,
        ..MinimizeOptions::default()
    };
    let g = build_giant(&domain, params.p(), &opts)?;
    let x = if flags.x.is_empty() { [0.3, 0.2][..n].to_vec() } else { flags.x.clone() };
    let radii = if flags.radii.is_empty() { (1..=30).map(|k| 2f64.powi(k)).collect() } else { flags.radii.clone() };
    let t = flags.times.first().copied().unwrap_or(1.0);
    let r = rn_scaling_probe(&g, &x, t, &radii)?;
    let mut dat = Dat::new(&["R", "value", "lower_bound"]);
    for ((rad, v), lb) in r.radii.iter().zip(&r.values).zip(&r.lower_bounds) {
        dat.row(&[*rad, *v, *lb]);
    }
    let mut json = to_json(&r);
    json["kind"] = json!("probe");
    json["probe"] = json!("rn-scaling");
    json["params"] = params_json(&params);
    json["x"] = json!(x);
    json["t"] = json!(t);
    Ok(Artifact::new(format!("probe-rn-scaling-{}", tag(&params)), json).with_file(".dat", dat.finish()))
}

pub fn schedule(settings: &Settings, eps: Option<f64>, sigma: Option<f64>, alpha: Option<f64>) -> Result<Artifact> {
    let params = settings.params(1)?;
    let (s, schedule) = match (alpha, eps, sigma) {
        (Some(a), None, None) => {
            let s = alpha_schedule(a, &params)?;
            let list = s.exponents.clone();
            (s, list)
        }
        (None, Some(e), Some(sg)) => {
            let s = gap_schedule(e, sg, &params)?;
            let mut list = s.exponents.clone();
            list.push(s.final_exponent);
            (s, list)
        }
        _ => bail!("pass either --alpha, or both --eps and --sigma"),
    };
    let mut dat = Dat::new(&["step", "exponent"]);
    for (i, e) in schedule.iter().enumerate() {
        dat.row(&[i as f64, *e]);
    }
    let mut json = to_json(&s);
    json["kind"] = json!("schedule");
    json["params"] = params_json(&params);
    json["schedule"] = json!(schedule);
    let stem = format!("schedule-{}-{}", to_json(&s.kind).as_str().unwrap_or("gap"), tag(&params));
    Ok(Artifact::new(stem, json).with_file(".dat", dat.finish()))
}

pub fn demo_hyperplane(settings: &Settings, a: &[f64], ks: &[f64], sigma: f64, bound: f64) -> Result<Artifact> {
    let params = settings.params(a.len())?;
    let r = hyperplane_demo(&params, a, ks, sigma, bound)?;
    let mut dat = Dat::new(&["k", "wedge_value"]);
    for (k, v) in r.ks.iter().zip(&r.wedge_values) {
        dat.row(&[*k, *v]);
    }
    let mut json = to_json(&r);
    json["kind"] = json!("demo-hyperplane");
    json["params"] = params_json(&params);
    json["a"] = json!(a);
    json["sigma"] = json!(sigma);
    let failed = r.applicable && r.exceeds_at.is_none();
    Ok(Artifact::new(format!("demo-hyperplane-{}", tag(&params)), json)
        .with_file(".dat", dat.finish())
        .failing_if(failed))
}
