//! Evaluable space-time fields: the closed-form families with their metadata,
//! plus the operations every field supports (truncation, extension to the
//! past, sampling onto a grid).

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geometry::SpaceTimePoint;
use crate::giant::{build_giant, GiantDomain, GiantSolution, MinimizeOptions};
use crate::grid::{GridField, GridSpec};
use crate::params::MediumParams;
use crate::solutions::*;

/// A scalar field on space-time. `+inf` is a legitimate value; points outside
/// the domain are errors (or NaN through [`Field::eval`]).
pub trait Field: Send + Sync {
    fn dim(&self) -> usize;

    fn try_eval(&self, pt: &SpaceTimePoint) -> Result<f64>;

    fn eval(&self, pt: &SpaceTimePoint) -> f64 {
        self.try_eval(pt).unwrap_or(f64::NAN)
    }

    /// Where the field may be unbounded, if known.
    fn locus(&self) -> Option<SingularLocus> {
        None
    }
}

/// Where a field is (or may be) unbounded; guides the dyadic quadrature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SingularLocus {
    /// A whole time slice `t = t0`.
    Slice { t0: f64 },
    /// A time-independent spatial pole.
    Point { x0: Vec<f64> },
    /// A space-time point around which the field is self-similar with
    /// `|x - x0| ~ (t - t0)^rate`.
    SpaceTime { x0: Vec<f64>, t0: f64, rate: f64 },
}

impl SingularLocus {
    pub fn time(&self) -> Option<f64> {
        match self {
            SingularLocus::Slice { t0 } | SingularLocus::SpaceTime { t0, .. } => Some(*t0),
            SingularLocus::Point { .. } => None,
        }
    }

    pub fn point(&self) -> Option<&[f64]> {
        match self {
            SingularLocus::Point { x0 } | SingularLocus::SpaceTime { x0, .. } => Some(x0),
            SingularLocus::Slice { .. } => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DeclaredClass {
    ClassB,
    ClassM,
    Unknown,
}

type CustomFn = Arc<dyn Fn(&SpaceTimePoint) -> f64 + Send + Sync>;

#[derive(Clone)]
pub struct CustomField {
    pub name: String,
    pub f: CustomFn,
    pub locus: Option<SingularLocus>,
}

impl fmt::Debug for CustomField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomField").field("name", &self.name).finish()
    }
}

#[derive(Debug, Clone)]
pub enum Family {
    Barenblatt(BarenblattSpec),
    HeatKernel,
    Separable(SeparableSpec),
    ExpBlowup(ExpBlowupSpec),
    DiBenedetto(DiBenedettoSpec),
    Glued(GluedSpec),
    Superposition(SuperpositionSpec),
    Stationary(StationarySpec),
    DensePoles(DensePolesSpec),
    Wedge(WedgeSpec),
    Constant(f64),
    Custom(CustomField),
    PastExtended { inner: Box<AnalyticField>, cutoff: f64 },
    Truncated { inner: Box<AnalyticField>, k: f64 },
}

/// A closed-form field together with its parameters and declared metadata.
#[derive(Debug, Clone)]
pub struct AnalyticField {
    pub params: MediumParams,
    pub family: Family,
    pub declared_class: DeclaredClass,
    pub infinity_slices: Vec<f64>,
}

fn giant_params(giant: &GiantSolution) -> Result<MediumParams> {
    MediumParams::new(giant.p, giant.dim())
}

impl AnalyticField {
    fn new(params: MediumParams, family: Family, class: DeclaredClass, slices: Vec<f64>) -> Self {
        Self {
            params,
            family,
            declared_class: class,
            infinity_slices: slices,
        }
    }

    pub fn barenblatt(spec: BarenblattSpec) -> Self {
        Self::new(spec.params, Family::Barenblatt(spec), DeclaredClass::ClassB, vec![])
    }

    pub fn heat_kernel(params: MediumParams) -> Self {
        Self::new(params, Family::HeatKernel, DeclaredClass::Unknown, vec![])
    }

    pub fn separable(giant: Arc<GiantSolution>, t0: f64) -> Result<Self> {
        let params = giant_params(&giant)?;
        Ok(Self::new(
            params,
            Family::Separable(SeparableSpec { giant, t0 }),
            DeclaredClass::ClassM,
            vec![t0],
        ))
    }

    pub fn exp_blowup(giant: Arc<GiantSolution>, t0: f64, iterates: usize) -> Result<Self> {
        if iterates == 0 {
            return invalid("exponential tower needs at least one iterate");
        }
        let params = giant_params(&giant)?;
        Ok(Self::new(
            params,
            Family::ExpBlowup(ExpBlowupSpec { giant, t0, iterates }),
            DeclaredClass::ClassM,
            vec![t0],
        ))
    }

    pub fn dibenedetto(spec: DiBenedettoSpec) -> Self {
        Self::new(spec.params, Family::DiBenedetto(spec), DeclaredClass::Unknown, vec![])
    }

    /// DiBenedetto's solution continued past its blow-up time by the separable one.
    pub fn glue_blowup(spec: DiBenedettoSpec, giant: Arc<GiantSolution>) -> Result<Self> {
        let params = giant_params(&giant)?;
        if params != spec.params {
            return invalid("giant and DiBenedetto solution must share (p, n)");
        }
        let t = spec.t_blow;
        Ok(Self::new(
            params,
            Family::Glued(GluedSpec {
                dibenedetto: spec,
                giant,
            }),
            DeclaredClass::ClassM,
            vec![t],
        ))
    }

    pub fn superpose_separable(giant: Arc<GiantSolution>, times: &[f64]) -> Result<Self> {
        let params = giant_params(&giant)?;
        let spec = SuperpositionSpec::new(giant, times)?;
        let slices = spec.times.clone();
        Ok(Self::new(params, Family::Superposition(spec), DeclaredClass::ClassM, slices))
    }

    pub fn stationary(spec: StationarySpec) -> Self {
        Self::new(spec.params, Family::Stationary(spec), DeclaredClass::ClassB, vec![])
    }

    pub fn dense_poles(spec: DensePolesSpec) -> Self {
        Self::new(spec.params, Family::DensePoles(spec), DeclaredClass::ClassB, vec![])
    }

    pub fn wedge(spec: WedgeSpec) -> Self {
        Self::new(spec.params, Family::Wedge(spec), DeclaredClass::Unknown, vec![])
    }

    pub fn constant(params: MediumParams, value: f64) -> Self {
        Self::new(params, Family::Constant(value), DeclaredClass::Unknown, vec![])
    }

    pub fn custom(
        params: MediumParams,
        name: &str,
        locus: Option<SingularLocus>,
        f: impl Fn(&SpaceTimePoint) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self::new(
            params,
            Family::Custom(CustomField {
                name: name.to_string(),
                f: Arc::new(f),
                locus,
            }),
            DeclaredClass::Unknown,
            vec![],
        )
    }

    pub fn with_declared_class(mut self, class: DeclaredClass) -> Self {
        self.declared_class = class;
        self
    }

    /// Family tag used in reports and JSON specs.
    pub fn family_name(&self) -> String {
        match &self.family {
            Family::Barenblatt(_) => "barenblatt".into(),
            Family::HeatKernel => "heat_kernel".into(),
            Family::Separable(_) => "separable".into(),
            Family::ExpBlowup(_) => "exp_blowup".into(),
            Family::DiBenedetto(_) => "dibenedetto".into(),
            Family::Glued(_) => "glued_blowup".into(),
            Family::Superposition(_) => "superposition".into(),
            Family::Stationary(_) => "stationary_fundamental".into(),
            Family::DensePoles(_) => "dense_poles".into(),
            Family::Wedge(_) => "wedge".into(),
            Family::Constant(_) => "constant".into(),
            Family::Custom(c) => format!("custom:{}", c.name),
            Family::PastExtended { inner, .. } => format!("past_extended({})", inner.family_name()),
            Family::Truncated { inner, k } => format!("truncated({}, {k})", inner.family_name()),
        }
    }

    /// Giant profile underlying the family, if any.
    pub fn giant(&self) -> Option<&Arc<GiantSolution>> {
        match &self.family {
            Family::Separable(s) => Some(&s.giant),
            Family::ExpBlowup(s) => Some(&s.giant),
            Family::Glued(s) => Some(&s.giant),
            Family::Superposition(s) => Some(&s.giant),
            Family::PastExtended { inner, .. } | Family::Truncated { inner, .. } => inner.giant(),
            _ => None,
        }
    }

    /// Bounding box of the spatial domain when it is not all of `R^n`.
    pub fn domain_box(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        self.giant().map(|g| g.domain.bounds())
    }

    /// The field `(x, t) -> v(x, t + tau)`, when the family can represent it
    /// exactly.
    pub fn shifted_in_time(&self, tau: f64) -> Option<AnalyticField> {
        if tau == 0.0 {
            return Some(self.clone());
        }
        let family = match &self.family {
            Family::Barenblatt(b) => Family::Barenblatt(BarenblattSpec {
                origin_t: b.origin_t - tau,
                ..b.clone()
            }),
            Family::Separable(s) => Family::Separable(SeparableSpec {
                t0: s.t0 - tau,
                ..s.clone()
            }),
            Family::ExpBlowup(s) => Family::ExpBlowup(ExpBlowupSpec {
                t0: s.t0 - tau,
                ..s.clone()
            }),
            Family::DiBenedetto(d) => Family::DiBenedetto(DiBenedettoSpec {
                t_blow: d.t_blow - tau,
                ..d.clone()
            }),
            Family::Glued(g) => Family::Glued(GluedSpec {
                dibenedetto: DiBenedettoSpec {
                    t_blow: g.dibenedetto.t_blow - tau,
                    ..g.dibenedetto.clone()
                },
                giant: g.giant.clone(),
            }),
            Family::Superposition(s) => Family::Superposition(SuperpositionSpec {
                giant: s.giant.clone(),
                times: s.times.iter().map(|t| t - tau).collect(),
            }),
            Family::Wedge(w) => Family::Wedge(WedgeSpec {
                t0: if tau == w.t0 - w.sigma { w.sigma } else { w.t0 - tau },
                ..w.clone()
            }),
            Family::Stationary(_) | Family::DensePoles(_) | Family::Constant(_) => self.family.clone(),
            Family::PastExtended { inner, cutoff } => Family::PastExtended {
                inner: Box::new(inner.shifted_in_time(tau)?),
                cutoff: cutoff - tau,
            },
            Family::Truncated { inner, k } => Family::Truncated {
                inner: Box::new(inner.shifted_in_time(tau)?),
                k: *k,
            },
            Family::HeatKernel | Family::Custom(_) => return None,
        };
        Some(AnalyticField {
            family,
            infinity_slices: self.infinity_slices.iter().map(|t| t - tau).collect(),
            ..self.clone()
        })
    }

    /// End of the time interval on which the family is defined.
    pub fn defined_until(&self) -> Option<f64> {
        match &self.family {
            Family::DiBenedetto(d) => Some(d.t_blow),
            Family::Truncated { inner, .. } => inner.defined_until(),
            _ => None,
        }
    }

    /// The spatial domain of a giant-based family.
    pub fn giant_domain(&self) -> Option<&GiantDomain> {
        self.giant().map(|g| &g.domain)
    }

    /// Where the field is unbounded (or, for truncations, where its inner field is).
    pub fn singular_locus(&self) -> Option<SingularLocus> {
        let n = self.params.n();
        match &self.family {
            Family::Barenblatt(b) => Some(SingularLocus::SpaceTime {
                x0: b.origin_x.clone(),
                t0: b.origin_t,
                rate: 1.0 / b.params.lambda(),
            }),
            Family::HeatKernel => Some(SingularLocus::SpaceTime {
                x0: vec![0.0; n],
                t0: 0.0,
                rate: 0.5,
            }),
            Family::Separable(s) => Some(SingularLocus::Slice { t0: s.t0 }),
            Family::ExpBlowup(s) => Some(SingularLocus::Slice { t0: s.t0 }),
            Family::DiBenedetto(d) => Some(SingularLocus::Slice { t0: d.t_blow }),
            Family::Glued(g) => Some(SingularLocus::Slice {
                t0: g.dibenedetto.t_blow,
            }),
            Family::Superposition(s) => Some(SingularLocus::Slice { t0: s.times[0] }),
            Family::Stationary(s) => Some(SingularLocus::Point { x0: s.x0.clone() }),
            Family::DensePoles(d) => Some(SingularLocus::Point { x0: d.poles[0].clone() }),
            Family::Wedge(w) => Some(SingularLocus::Slice { t0: w.t0 - w.sigma }),
            Family::Constant(_) => None,
            Family::Custom(c) => c.locus.clone(),
            Family::PastExtended { inner, .. } | Family::Truncated { inner, .. } => inner.singular_locus(),
        }
    }

    /// `min(v, k)`; infinite values become `k`.
    pub fn truncate(&self, k: f64) -> AnalyticField {
        let mut out = self.clone();
        out.family = Family::Truncated {
            inner: Box::new(self.clone()),
            k,
        };
        out.infinity_slices.clear();
        out
    }

    /// The field with zero values for `t <= cutoff`. Fails when sampling finds
    /// a negative value for `t > cutoff`.
    pub fn extend_to_past(&self, cutoff: f64) -> Result<AnalyticField> {
        let n = self.params.n();
        let (lo, hi) = self.domain_box().unwrap_or((vec![-1.0; n], vec![1.0; n]));
        let per_axis = if n <= 2 { 17 } else { 7 };
        let spec = GridSpec::new(&lo, &hi, &vec![per_axis; n.min(3)], cutoff, cutoff + 1.0, 17);
        // Grids stop at three axes; in four dimensions sample along a diagonal line instead.
        let samples: Vec<SpaceTimePoint> = match spec {
            Ok(spec) if n <= 3 => (1..spec.nt)
                .flat_map(|l| (0..spec.spatial_count()).map(move |k| (l, k)))
                .map(|(l, k)| spec.node(l, k))
                .collect(),
            _ => (1..=16)
                .flat_map(|l| {
                    let lo = lo.clone();
                    let hi = hi.clone();
                    (0..=16).map(move |i| {
                        let x: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| a + (b - a) * i as f64 / 16.0).collect();
                        SpaceTimePoint::new(&x, cutoff + l as f64 / 16.0)
                    })
                })
                .collect(),
        };
        for pt in samples {
            let v = self.eval(&pt);
            if v < 0.0 {
                return Err(Error::NegativeSample { value: v, t: pt.t });
            }
        }
        let mut out = self.clone();
        out.family = Family::PastExtended {
            inner: Box::new(self.clone()),
            cutoff,
        };
        Ok(out)
    }
}

impl Field for AnalyticField {
    fn dim(&self) -> usize {
        self.params.n()
    }

    fn try_eval(&self, pt: &SpaceTimePoint) -> Result<f64> {
        if pt.dim() != self.params.n() {
            return invalid(format!(
                "point has {} coordinates, field lives in R^{}",
                pt.dim(),
                self.params.n()
            ));
        }
        match &self.family {
            Family::Barenblatt(b) => Ok(barenblatt_eval(b, pt)),
            Family::HeatKernel => Ok(heat_kernel_eval(self.params.n(), pt)),
            Family::Separable(s) => separable_eval(s, pt),
            Family::ExpBlowup(e) => exp_tower_eval(&e.giant, e.t0, e.iterates, pt),
            Family::DiBenedetto(d) => dibenedetto_eval(d, pt),
            Family::Glued(g) => glued_eval(g, pt),
            Family::Superposition(s) => superposition_eval(s, pt),
            Family::Stationary(s) => Ok(stationary_eval(s, pt)),
            Family::DensePoles(d) => Ok(dense_poles_eval(d, pt)),
            Family::Wedge(w) => wedge_eval(w, pt),
            Family::Constant(c) => Ok(*c),
            Family::Custom(c) => {
                let v = (c.f)(pt);
                if v.is_nan() {
                    Err(Error::OutsideDomain {
                        x: pt.x().to_vec(),
                        t: pt.t,
                    })
                } else {
                    Ok(v)
                }
            }
            Family::PastExtended { inner, cutoff } => {
                if pt.t <= *cutoff {
                    Ok(0.0)
                } else {
                    inner.try_eval(pt)
                }
            }
            Family::Truncated { inner, k } => Ok(inner.try_eval(pt)?.min(*k)),
        }
    }

    fn locus(&self) -> Option<SingularLocus> {
        self.singular_locus()
    }
}

impl Field for GridField {
    fn dim(&self) -> usize {
        self.spec().dim()
    }

    fn try_eval(&self, pt: &SpaceTimePoint) -> Result<f64> {
        let spec = self.spec();
        let in_time = spec.nt == 1 || (pt.t >= spec.t_lo - 1e-12 && pt.t <= spec.t_hi + 1e-12);
        if pt.dim() != spec.dim() || !in_time || !spec.contains_x(pt.x()) {
            return Err(Error::OutsideDomain {
                x: pt.x().to_vec(),
                t: pt.t,
            });
        }
        // Inside the grid, a failed interpolation means a flagged node.
        Ok(self.interpolate(pt).unwrap_or(f64::INFINITY))
    }
}

/// Evaluates `field` at every node of `spec`; samples above `threshold` (or
/// infinite) are flagged as numerically infinite.
pub fn sample_to_grid(field: &dyn Field, spec: &GridSpec, threshold: f64) -> Result<GridField> {
    let m = spec.spatial_count();
    let values: Result<Vec<f64>> = (0..spec.len())
        .into_par_iter()
        .map(|i| field.try_eval(&spec.node(i / m, i % m)))
        .collect();
    GridField::from_values(spec.clone(), values?, threshold)
}

/// JSON description of a family: `{family, params: {p, n}, args: {...}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilySpec {
    pub family: String,
    pub params: MediumParams,
    #[serde(default)]
    pub args: serde_json::Map<String, serde_json::Value>,
}

struct Args<'a> {
    family: &'a str,
    map: &'a serde_json::Map<String, serde_json::Value>,
}

impl Args<'_> {
    fn check_keys(&self, allowed: &[&str]) -> Result<()> {
        for k in self.map.keys() {
            if !allowed.contains(&k.as_str()) {
                return Err(Error::Parse(format!("unknown argument `{k}` for family {}", self.family)));
            }
        }
        Ok(())
    }

    fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        match self.map.get(key) {
            None => Ok(default),
            Some(v) => v
                .as_f64()
                .ok_or_else(|| Error::Parse(format!("argument `{key}` must be a number"))),
        }
    }

    fn usize_or(&self, key: &str, default: usize) -> Result<usize> {
        match self.map.get(key) {
            None => Ok(default),
            Some(v) => v
                .as_u64()
                .map(|u| u as usize)
                .ok_or_else(|| Error::Parse(format!("argument `{key}` must be a nonnegative integer"))),
        }
    }

    fn vec_or(&self, key: &str, default: Vec<f64>) -> Result<Vec<f64>> {
        match self.map.get(key) {
            None => Ok(default),
            Some(v) => serde_json::from_value(v.clone())
                .map_err(|e| Error::Parse(format!("argument `{key}` must be a list of numbers: {e}"))),
        }
    }

    fn get<T: serde::de::DeserializeOwned>(&self, key: &str) -> Result<Option<T>> {
        self.map
            .get(key)
            .map(|v| serde_json::from_value(v.clone()).map_err(|e| Error::Parse(format!("argument `{key}`: {e}"))))
            .transpose()
    }
}

/// Domain used for giant-based families when none is given: `(-1, 1)` in
/// one dimension, the unit disc in two.
pub fn default_giant_domain(n: usize) -> Result<GiantDomain> {
    match n {
        1 => Ok(GiantDomain::Interval { lo: -1.0, hi: 1.0 }),
        2 => Ok(GiantDomain::Disc {
            center: [0.0, 0.0],
            radius: 1.0,
        }),
        _ => Err(Error::UnsupportedDimension(n)),
    }
}

pub fn default_giant_nodes(n: usize) -> usize {
    if n == 1 {
        257
    } else {
        65
    }
}

const GIANT_KEYS: [&str; 3] = ["domain", "nodes", "seed"];

fn giant_from_args(params: &MediumParams, args: &Args) -> Result<Arc<GiantSolution>> {
    let domain = match args.get::<GiantDomain>("domain")? {
        Some(d) => d,
        None => default_giant_domain(params.n())?,
    };
    if domain.dim() != params.n() {
        return invalid("giant domain dimension differs from n");
    }
    let opts = MinimizeOptions {
        nodes: args.usize_or("nodes", default_giant_nodes(params.n()))?,
        seed: args.usize_or("seed", 0)? as u64,
        ..MinimizeOptions::default()
    };
    Ok(Arc::new(build_giant(&domain, params.p(), &opts)?))
}

impl FamilySpec {
    pub fn new(family: &str, params: MediumParams) -> Self {
        Self {
            family: family.to_string(),
            params,
            args: Default::default(),
        }
    }

    pub fn arg(mut self, key: &str, value: impl Into<serde_json::Value>) -> Self {
        self.args.insert(key.to_string(), value.into());
        self
    }

    /// Builds the field; giant-based families run the Rayleigh minimiser.
    pub fn build(&self) -> Result<AnalyticField> {
        let params = self.params;
        let n = params.n();
        let a = Args {
            family: &self.family,
            map: &self.args,
        };
        let with_giant = |extra: &[&str]| -> Result<Arc<GiantSolution>> {
            let mut keys: Vec<&str> = GIANT_KEYS.to_vec();
            keys.extend_from_slice(extra);
            a.check_keys(&keys)?;
            giant_from_args(&params, &a)
        };
        match self.family.as_str() {
            "barenblatt" => {
                a.check_keys(&["c", "origin", "t_origin"])?;
                let mut spec = BarenblattSpec::new(params);
                if self.args.contains_key("c") {
                    spec = spec.with_c(a.f64_or("c", 0.0)?)?;
                }
                spec = spec.with_origin(&a.vec_or("origin", vec![0.0; n])?, a.f64_or("t_origin", 0.0)?)?;
                Ok(AnalyticField::barenblatt(spec))
            }
            "heat_kernel" => {
                a.check_keys(&[])?;
                Ok(AnalyticField::heat_kernel(params))
            }
            "separable" => {
                let g = with_giant(&["t0"])?;
                AnalyticField::separable(g, a.f64_or("t0", 0.0)?)
            }
            "exp_blowup" => {
                let g = with_giant(&["t0", "iterates"])?;
                AnalyticField::exp_blowup(g, a.f64_or("t0", 0.0)?, a.usize_or("iterates", 1)?)
            }
            "dibenedetto" => {
                a.check_keys(&["a", "T"])?;
                Ok(AnalyticField::dibenedetto(DiBenedettoSpec::new(
                    params,
                    a.f64_or("a", 1.0)?,
                    a.f64_or("T", 1.0)?,
                )?))
            }
            "glued_blowup" => {
                let g = with_giant(&["a", "T"])?;
                let d = DiBenedettoSpec::new(params, a.f64_or("a", 1.0)?, a.f64_or("T", 1.0)?)?;
                AnalyticField::glue_blowup(d, g)
            }
            "superposition" => {
                let g = with_giant(&["times"])?;
                AnalyticField::superpose_separable(g, &a.vec_or("times", vec![0.0])?)
            }
            "stationary_fundamental" => {
                a.check_keys(&["x0", "c"])?;
                Ok(AnalyticField::stationary(StationarySpec::new(
                    params,
                    &a.vec_or("x0", vec![0.0; n])?,
                    a.f64_or("c", 1.0)?,
                )?))
            }
            "dense_poles" => {
                a.check_keys(&["count"])?;
                Ok(AnalyticField::dense_poles(DensePolesSpec::new(
                    params,
                    a.usize_or("count", DEFAULT_POLE_COUNT)?,
                )?))
            }
            "wedge" => {
                a.check_keys(&["k", "x0", "t0", "sigma", "variant"])?;
                let variant = a
                    .get::<WedgeVariant>("variant")?
                    .unwrap_or(if n == 1 { WedgeVariant::OneD } else { WedgeVariant::Product });
                Ok(AnalyticField::wedge(WedgeSpec {
                    params,
                    k: a.f64_or("k", 1.0)?,
                    x0: a.f64_or("x0", 0.0)?,
                    t0: a.f64_or("t0", 0.0)?,
                    sigma: a.f64_or("sigma", if variant == WedgeVariant::OneD { 1.0 } else { 0.0 })?,
                    variant,
                }))
            }
            "constant" => {
                a.check_keys(&["value"])?;
                Ok(AnalyticField::constant(params, a.f64_or("value", 1.0)?))
            }
            other => Err(Error::Parse(format!("unknown family `{other}`"))),
        }
    }
}
