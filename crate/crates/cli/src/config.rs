//! Run configuration: JSON config file, command-line overrides and defaults.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use serde::Deserialize;
use serde_json::{Map, Value};
use slowdiff::{FamilySpec, MediumParams};

/// Grid overrides, from `--grid nx=..,nt=..` or the config's `grid` object.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub nx: Option<usize>,
    pub nt: Option<usize>,
    pub lo: Option<f64>,
    pub hi: Option<f64>,
    pub t0: Option<f64>,
    pub t1: Option<f64>,
}

impl GridConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut g = GridConfig::default();
        for part in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| anyhow!("grid entry `{part}` is not of the form key=value"))?;
            let key = key.trim();
            let value = value.trim();
            let count = || value.parse::<usize>().map_err(|_| anyhow!("grid key `{key}` expects a positive integer, got `{value}`"));
            let real = || value.parse::<f64>().map_err(|_| anyhow!("grid key `{key}` expects a number, got `{value}`"));
            match key {
                "nx" => g.nx = Some(count()?),
                "nt" => g.nt = Some(count()?),
                "lo" => g.lo = Some(real()?),
                "hi" => g.hi = Some(real()?),
                "t0" => g.t0 = Some(real()?),
                "t1" => g.t1 = Some(real()?),
                _ => bail!("unknown grid key `{key}` (expected nx, nt, lo, hi, t0, t1)"),
            }
        }
        Ok(g)
    }

    /// Entries of `other` win.
    pub fn merged(&self, other: &GridConfig) -> GridConfig {
        GridConfig {
            nx: other.nx.or(self.nx),
            nt: other.nt.or(self.nt),
            lo: other.lo.or(self.lo),
            hi: other.hi.or(self.hi),
            t0: other.t0.or(self.t0),
            t1: other.t1.or(self.t1),
        }
    }
}

/// Contents of a `--config` file.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub p: Option<f64>,
    pub n: Option<usize>,
    pub family: Option<String>,
    #[serde(default)]
    pub args: Map<String, Value>,
    pub field: Option<FamilySpec>,
    #[serde(default)]
    pub grid: GridConfig,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
    pub seed: Option<u64>,
    pub levels: Option<usize>,
    pub tol_newton: Option<f64>,
    pub delta: Option<f64>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
        let de = &mut serde_json::Deserializer::from_str(&text);
        let cfg = serde_path_to_error::deserialize(&mut *de).map_err(|e| {
            let key = e.path().to_string();
            if key == "." {
                anyhow!("config {}: {}", path.display(), e.inner())
            } else {
                anyhow!("config {}: key `{key}`: {}", path.display(), e.inner())
            }
        })?;
        de.end().map_err(|e| anyhow!("config {}: {e}", path.display()))?;
        Ok(cfg)
    }
}

/// Global command-line flags, before merging with the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub p: Option<f64>,
    pub n: Option<usize>,
    pub grid: Option<String>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
    pub seed: Option<u64>,
    pub config: Option<PathBuf>,
}

/// Field selection flags shared by the field-based subcommands.
#[derive(Debug, Clone, Default)]
pub struct FieldFlags {
    pub family: Option<String>,
    pub field: Option<String>,
    pub args: Vec<String>,
}

/// Fully resolved settings.
#[derive(Debug, Clone)]
pub struct Settings {
    pub p: f64,
    pub n: Option<usize>,
    pub family: Option<String>,
    pub args: Map<String, Value>,
    pub grid: GridConfig,
    pub out: PathBuf,
    pub threads: Option<usize>,
    pub seed: u64,
    pub levels: Option<usize>,
    pub tol_newton: Option<f64>,
    pub delta: Option<f64>,
}

pub const DEFAULT_OUT: &str = "slowdiff-out";

fn parse_arg(entry: &str) -> Result<(String, Value)> {
    let (key, value) = entry
        .split_once('=')
        .ok_or_else(|| anyhow!("--arg `{entry}` is not of the form key=value"))?;
    let value = serde_json::from_str(value).unwrap_or_else(|_| Value::String(value.to_string()));
    Ok((key.trim().to_string(), value))
}

fn load_field_spec(text: &str) -> Result<FamilySpec> {
    let body = if text.trim_start().starts_with('{') {
        text.to_string()
    } else {
        std::fs::read_to_string(text).with_context(|| format!("cannot read field spec {text}"))?
    };
    let de = &mut serde_json::Deserializer::from_str(&body);
    let spec = serde_path_to_error::deserialize(&mut *de).map_err(|e| anyhow!("field spec: key `{}`: {}", e.path(), e.inner()))?;
    de.end().map_err(|e| anyhow!("field spec: {e}"))?;
    Ok(spec)
}

impl Settings {
    /// Config file first, then command-line flags, then `SLOWDIFF_OUT`.
    pub fn resolve(flags: &Overrides, field: &FieldFlags) -> Result<Self> {
        let cfg = match &flags.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        let mut p = cfg.p;
        let mut n = cfg.n;
        let mut family = cfg.family.clone();
        let mut args = cfg.args.clone();
        if let Some(spec) = &cfg.field {
            p = p.or(Some(spec.params.p()));
            n = n.or(Some(spec.params.n()));
            family = Some(spec.family.clone());
            args.extend(spec.args.clone());
        }
        if let Some(text) = &field.field {
            let spec = load_field_spec(text)?;
            p = Some(spec.params.p());
            n = Some(spec.params.n());
            family = Some(spec.family.clone());
            args = spec.args.clone();
        }
        if let Some(f) = &field.family {
            family = Some(f.clone());
        }
        for entry in &field.args {
            let (k, v) = parse_arg(entry)?;
            args.insert(k, v);
        }
        let grid = match &flags.grid {
            Some(text) => cfg.grid.merged(&GridConfig::parse(text)?),
            None => cfg.grid.clone(),
        };
        let out = std::env::var_os("SLOWDIFF_OUT")
            .filter(|v| !v.is_empty())
            .map(PathBuf::from)
            .or_else(|| flags.out.clone())
            .or(cfg.out.clone())
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
        Ok(Settings {
            p: flags.p.or(p).unwrap_or(3.0),
            n: flags.n.or(n),
            family,
            args,
            grid,
            out,
            threads: flags.threads.or(cfg.threads),
            seed: flags.seed.or(cfg.seed).unwrap_or(0),
            levels: cfg.levels,
            tol_newton: cfg.tol_newton,
            delta: cfg.delta,
        })
    }

    pub fn params(&self, default_n: usize) -> Result<MediumParams> {
        MediumParams::new(self.p, self.n.unwrap_or(default_n)).map_err(|e| anyhow!("--p/--n: {e}"))
    }

    /// The selected family, with the run seed passed to giant-based families.
    pub fn family_spec(&self, default_n: usize) -> Result<FamilySpec> {
        let family = self
            .family
            .clone()
            .ok_or_else(|| anyhow!("no field selected: pass --family or --field (or set `family` in the config)"))?;
        let mut spec = FamilySpec::new(&family, self.params(default_n)?);
        spec.args = self.args.clone();
        if GIANT_FAMILIES.contains(&family.as_str()) && !spec.args.contains_key("seed") {
            spec.args.insert("seed".into(), Value::from(self.seed));
        }
        Ok(spec)
    }
}

pub const GIANT_FAMILIES: [&str; 4] = ["separable", "exp_blowup", "glued_blowup", "superposition"];
