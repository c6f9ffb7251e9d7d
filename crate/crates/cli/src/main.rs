//! `slowdiff`: batch front end for the slow-diffusion laboratory.
//!
//! Every run prints a JSON report on stdout and writes it, together with CSV
//! fields and gnuplot `.dat` series, into the output directory. Exit status
//! is 0 on success, 1 on usage or input errors and 2 when a checked property
//! fails (gap violation, comparison failure, slice dichotomy failure).

mod commands;
mod config;
mod output;
mod report;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

use commands::{CaccMode, ProbeFlags, ProbeKind};
use config::{FieldFlags, Overrides, Settings};
use output::{pretty, Artifact, Status};

#[derive(Debug, Parser)]
#[command(name = "slowdiff", version, about = "Numerical laboratory for unbounded supersolutions of the slow-diffusion p-Laplace equation")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Global {
    /// Exponent p > 2 [default: 3, or the field spec's value]
    #[arg(long = "p", global = true, allow_hyphen_values = true)]
    p: Option<f64>,
    /// Space dimension [default: 1, or inferred from --at / --a / the field spec]
    #[arg(long = "n", global = true)]
    n: Option<usize>,
    /// Grid overrides as key=value pairs: nx, nt, lo, hi, t0, t1
    #[arg(long, global = true, value_name = "nx=..,nt=..")]
    grid: Option<String>,
    /// Output directory [default: slowdiff-out; the SLOWDIFF_OUT variable overrides it]
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads; 0 selects the single-threaded reference mode [default: all cores]
    #[arg(long, global = true, value_name = "K")]
    threads: Option<usize>,
    /// Seed for the giant minimizer's start perturbation [default: 0]
    #[arg(long, global = true, value_name = "S")]
    seed: Option<u64>,
    /// JSON config file; command-line flags take precedence over its keys
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
}

#[derive(Debug, Args, Default)]
struct FieldArgs {
    /// Solution family (barenblatt, heat_kernel, separable, exp_blowup, dibenedetto,
    /// glued_blowup, superposition, stationary_fundamental, dense_poles, wedge, constant)
    #[arg(long)]
    family: Option<String>,
    /// Field spec `{family, params: {p, n}, args}` as a file path or inline JSON
    #[arg(long, value_name = "PATH|JSON")]
    field: Option<String>,
    /// Family argument, repeatable; values are parsed as JSON when possible
    #[arg(long = "arg", value_name = "KEY=VALUE")]
    args: Vec<String>,
}

impl FieldArgs {
    fn flags(&self) -> FieldFlags {
        FieldFlags {
            family: self.family.clone(),
            field: self.field.clone(),
            args: self.args.clone(),
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate a field at one space-time point
    Eval {
        #[command(flatten)]
        field: FieldArgs,
        /// Spatial point, comma separated; its length sets n
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        at: Vec<f64>,
        /// Time
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        t: f64,
    },
    /// Critical summability exponent and class verdict of a field
    Classify {
        #[command(flatten)]
        field: FieldArgs,
        /// Quadrature refinement levels [default: 4]
        #[arg(long)]
        levels: Option<usize>,
        /// Also estimate the critical gradient exponent q_star
        #[arg(long)]
        gradient: bool,
    },
    /// Friendly giant by Rayleigh quotient minimization
    Giant {
        /// Domain as JSON, e.g. {"shape":"disc","center":[0,0],"radius":1} [default: (-1,1) or the unit disc]
        #[arg(long, value_name = "JSON")]
        domain: Option<String>,
        /// Nodes per axis [default: 257 in 1D, 65 in 2D]
        #[arg(long)]
        nodes: Option<usize>,
        /// Minimizer stopping tolerance [default: 1e-12]
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Implicit time stepping from a field's data (or a CSV snapshot) on a grid
    /// [default grid: nx=33, nt=17, t0=0.5, t1=1, box (-1.5,1.5)^n or the giant's domain]
    Evolve {
        #[command(flatten)]
        field: FieldArgs,
        /// Initial values from the last level of a CSV snapshot (zero boundary data)
        #[arg(long, value_name = "CSV")]
        initial: Option<PathBuf>,
        /// Flux regularization [default: smallest grid spacing]
        #[arg(long)]
        delta: Option<f64>,
        /// Inner iteration tolerance [default: 1e-10]
        #[arg(long)]
        tol_newton: Option<f64>,
    },
    /// Check lower <= upper + tol on two CSV fields over the same grid
    Compare {
        #[arg(long, value_name = "CSV")]
        lower: PathBuf,
        #[arg(long, value_name = "CSV")]
        upper: PathBuf,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// Infinity slices (down and perp) at a time t0 and the null/full dichotomy
    Slices {
        #[command(flatten)]
        field: FieldArgs,
        /// Slice time [default: the field's singular time, else 0]
        #[arg(long, allow_hyphen_values = true)]
        t0: Option<f64>,
        /// Nodes per axis [default: 65]
        #[arg(long)]
        nodes: Option<usize>,
    },
    /// Inequality probes with their default configurations
    Probe {
        #[command(flatten)]
        field: FieldArgs,
        #[arg(long, value_enum)]
        kind: ProbeKind,
        /// Exponent of the slice norm [default: 1]
        #[arg(long)]
        alpha: Option<f64>,
        /// Caccioppoli exponent beta [default: 0.5]
        #[arg(long)]
        beta: Option<f64>,
        /// Sobolev exponent m [default: 1]
        #[arg(long)]
        m: Option<f64>,
        /// Finest probe grid level [default: 2]
        #[arg(long)]
        level: Option<usize>,
        /// Caccioppoli variant [default: standard]
        #[arg(long, value_enum)]
        mode: Option<CaccMode>,
        /// Radii (Harnack, rn-scaling; the first one for lebesgue)
        #[arg(long, value_delimiter = ',')]
        radii: Vec<f64>,
        /// Time offsets after the singular time (slice-norm, lebesgue; the first one is t for rn-scaling)
        #[arg(long, value_delimiter = ',')]
        times: Vec<f64>,
        /// Probe point [default: origin; (0.3, 0.2) for rn-scaling]
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        x: Vec<f64>,
    },
    /// Exponent schedule of a Moser iteration: --eps and --sigma, or --alpha
    Schedule {
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long)]
        sigma: Option<f64>,
        #[arg(long)]
        alpha: Option<f64>,
    },
    /// Wedge subsolutions next to a slanted infinity hyperplane t = <a, x>
    DemoHyperplane {
        /// Slope vector a, comma separated; its length sets n
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        a: Vec<f64>,
        /// Wedge heights k
        #[arg(long, value_delimiter = ',', default_value = "1,10,100,1000")]
        ks: Vec<f64>,
        #[arg(long, default_value_t = 0.5)]
        sigma: f64,
        /// Bound the wedge values must exceed
        #[arg(long, default_value_t = 100.0)]
        bound: f64,
    },
    /// Summary CSV over classify and slices JSON artifacts (files or directories)
    Report { paths: Vec<PathBuf> },
}

fn overrides(g: &Global) -> Overrides {
    Overrides {
        p: g.p,
        n: g.n,
        grid: g.grid.clone(),
        out: g.out.clone(),
        threads: g.threads,
        seed: g.seed,
        config: g.config.clone(),
    }
}

fn execute(cmd: &Command, g: &Global) -> Result<(Artifact, Settings)> {
    let o = overrides(g);
    let none = FieldArgs::default();
    let field = match cmd {
        Command::Eval { field, .. }
        | Command::Classify { field, .. }
        | Command::Evolve { field, .. }
        | Command::Slices { field, .. }
        | Command::Probe { field, .. } => field,
        _ => &none,
    };
    let mut settings = Settings::resolve(&o, &field.flags())?;
    if let Command::Eval { at, .. } = cmd {
        settings.n = settings.n.or(Some(at.len()));
    }
    if let Command::DemoHyperplane { a, .. } = cmd {
        settings.n = settings.n.or(Some(a.len()));
    }
    let run = || -> Result<Artifact> {
        match cmd {
            Command::Eval { at, t, .. } => commands::eval(&settings, at, *t),
            Command::Classify { levels, gradient, .. } => commands::classify(&settings, *levels, *gradient),
            Command::Giant { domain, nodes, tol } => commands::giant(&settings, domain.as_deref(), *nodes, *tol),
            Command::Evolve {
                initial, delta, tol_newton, ..
            } => commands::evolve(&settings, initial.as_deref(), *delta, *tol_newton),
            Command::Compare { lower, upper, tol } => commands::compare_fields(lower, upper, *tol),
            Command::Slices { t0, nodes, .. } => commands::slices(&settings, *t0, *nodes),
            Command::Probe {
                kind,
                alpha,
                beta,
                m,
                level,
                mode,
                radii,
                times,
                x,
                ..
            } => {
                let flags = ProbeFlags {
                    alpha: *alpha,
                    beta: *beta,
                    m: *m,
                    level: *level,
                    mode: *mode,
                    radii: radii.clone(),
                    times: times.clone(),
                    x: x.clone(),
                };
                commands::probe(&settings, *kind, &flags)
            }
            Command::Schedule { eps, sigma, alpha } => commands::schedule(&settings, *eps, *sigma, *alpha),
            Command::DemoHyperplane { a, ks, sigma, bound } => commands::demo_hyperplane(&settings, a, ks, *sigma, *bound),
            Command::Report { paths } => report::report(paths),
        }
    };
    let artifact = match settings.threads {
        None => run()?,
        Some(k) => rayon::ThreadPoolBuilder::new().num_threads(k.max(1)).build()?.install(run)?,
    };
    Ok((artifact, settings))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = execute(&cli.command, &cli.global).and_then(|(artifact, settings)| {
        artifact.write(&settings.out)?;
        Ok(artifact)
    });
    match result {
        Ok(artifact) => {
            let _ = std::io::stdout().lock().write_all(pretty(&artifact.json).as_bytes());
            match artifact.status {
                Status::Pass => ExitCode::SUCCESS,
                Status::VerdictFailure => ExitCode::from(2),
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
