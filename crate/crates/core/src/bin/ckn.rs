use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use ckn::config::RunConfig;
use ckn::discretization::snapshot::{write_snapshot, SnapshotHeader};
use ckn::flow::{initial_density, FlowInit, FlowSolver};
use ckn::identities::{run_suite, Suite, SuiteOptions};
use ckn::json::{format_g17, to_json_string};
use ckn::minimize::{detect_breaking, minimize_quotient, Init, InitPreset, Restriction};
use ckn::params::{b_fs, critical_a, derive, lambda_fs, CknParams, DerivedParams};
use ckn::profiles::radial_constant;
use ckn::spectrum::{mode_spectrum, sphere_bifurcation, threshold_report, ThresholdOptions};
use ckn::CknError;

#[derive(Parser)]
#[command(name = "ckn", version, about = "Symmetry and symmetry breaking for Caffarelli-Kohn-Nirenberg inequalities")]
struct Cli {
    /// `key = value` file applied over the built-in defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Pretty-print JSON with this many spaces (compact when absent).
    #[arg(long, global = true, value_name = "N", num_args = 0..=1, default_missing_value = "2")]
    json_indent: Option<usize>,
    /// No progress messages on standard error.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(flatten)]
    overrides: Overrides,
    #[command(subcommand)]
    cmd: Cmd,
}

/// Flags that take precedence over the configuration file.
#[derive(Args, Default)]
struct Overrides {
    #[arg(long, global = true)]
    nz: Option<usize>,
    #[arg(long, global = true)]
    nmu: Option<usize>,
    #[arg(long, global = true)]
    nphi: Option<usize>,
    #[arg(long, global = true)]
    ns: Option<usize>,
    #[arg(long, global = true)]
    z_scale: Option<f64>,
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[arg(long, global = true)]
    max_iter: Option<usize>,
    #[arg(long, global = true)]
    spectrum_nz: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Args, Clone, Copy)]
struct Triple {
    #[arg(long)]
    d: u32,
    #[arg(long, allow_hyphen_values = true)]
    a: f64,
    #[arg(long, allow_hyphen_values = true)]
    b: f64,
}

#[derive(Subcommand)]
enum Cmd {
    /// Derived exponents, cylinder data and region.
    Derive(Triple),
    /// The threshold curve `b_FS(a)` as CSV.
    Curve {
        #[arg(long)]
        d: u32,
        #[arg(long, allow_hyphen_values = true)]
        a_min: f64,
        #[arg(long, allow_hyphen_values = true)]
        a_max: f64,
        #[arg(long, default_value_t = 101)]
        samples: usize,
    },
    /// Quotient of the radial optimizer.
    RadialConstant(Triple),
    /// Minimizes the quotient on the cylinder.
    Minimize {
        #[command(flatten)]
        t: Triple,
        #[arg(long)]
        radial_only: bool,
        #[arg(long, default_value = "soliton-y1")]
        init: String,
        /// Snapshot of the minimizer.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Radial against full minimization.
    DetectBreaking(Triple),
    /// Lowest eigenvalues of the angular modes `ℓ = 0..lmax`.
    Spectrum {
        #[arg(long)]
        d: u32,
        #[arg(long)]
        p: f64,
        #[arg(long, default_value_t = 2)]
        lmax: u32,
        /// Defaults to the threshold value `4(d-1)/(p²-4)`.
        #[arg(long)]
        lambda: Option<f64>,
    },
    /// `Λ` where the `ℓ = 1` eigenvalue crosses zero.
    Threshold {
        #[arg(long)]
        d: u32,
        #[arg(long)]
        p: f64,
    },
    /// Rigidity threshold of the constant solution on the sphere.
    SphereThreshold {
        #[arg(long)]
        d: u32,
        #[arg(long)]
        p: f64,
    },
    /// Fast-diffusion flow with the pressure functional trace as CSV.
    Flow {
        #[command(flatten)]
        t: Triple,
        #[arg(long)]
        t_end: f64,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long, default_value = "perturbed")]
        init: String,
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Identity checks on seeded random fields.
    Verify {
        #[arg(long)]
        suite: String,
        #[arg(long, default_value_t = 5)]
        seeds: usize,
    },
}

enum Failure {
    Args(String),
    Numeric(CknError),
}

impl From<CknError> for Failure {
    fn from(e: CknError) -> Self {
        Failure::Numeric(e)
    }
}

fn args_err(e: impl std::fmt::Display) -> Failure {
    Failure::Args(e.to_string())
}

fn params(t: Triple) -> Result<DerivedParams, Failure> {
    derive(CknParams { d: t.d, a: t.a, b: t.b }).map_err(args_err)
}

fn load_config(cli: &Cli) -> Result<RunConfig, Failure> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &cli.config {
        cfg.apply_file(path).map_err(args_err)?;
    }
    let o = &cli.overrides;
    macro_rules! over {
        ($($f:ident),*) => {$(if let Some(v) = o.$f { cfg.$f = v; })*};
    }
    over!(nmu, nphi, ns, tol, max_iter, spectrum_nz, seed);
    if o.nz.is_some() {
        cfg.nz = o.nz;
    }
    if o.z_scale.is_some() {
        cfg.z_scale = o.z_scale;
    }
    cfg.validate().map_err(args_err)?;
    Ok(cfg)
}

/// Writes to standard output; a closed pipe is not an error.
fn emit(bytes: &[u8]) {
    let mut stdout = std::io::stdout().lock();
    let _ = stdout.write_all(bytes).and_then(|()| stdout.flush());
}

/// Writes through a sibling temporary file so a failed run leaves nothing
/// half-written.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    let tmp = path.with_extension("partial");
    std::fs::write(&tmp, bytes).map_err(|e| Failure::Numeric(e.into()))?;
    std::fs::rename(&tmp, path).map_err(|e| Failure::Numeric(e.into()))
}

struct Out {
    indent: Option<usize>,
    quiet: bool,
}

impl Out {
    fn json<T: Serialize>(&self, v: &T) {
        emit(format!("{}\n", to_json_string(v, self.indent)).as_bytes());
    }

    fn note(&self, msg: &str) {
        if !self.quiet {
            eprintln!("{msg}");
        }
    }
}

#[derive(Serialize)]
struct RadialConstantReport {
    d: u32,
    a: f64,
    b: f64,
    p: f64,
    lambda: f64,
    radial_constant: f64,
}

#[derive(Serialize)]
struct FlowSummary {
    t_end: f64,
    steps: usize,
    j_initial: f64,
    j_final: f64,
    monotone: bool,
    mass_drift_rate: f64,
}

fn run(cli: Cli) -> Result<(), Failure> {
    let cfg = load_config(&cli)?;
    let out = Out {
        indent: cli.json_indent,
        quiet: cli.quiet,
    };
    match cli.cmd {
        Cmd::Derive(t) => out.json(&params(t)?),
        Cmd::Curve { d, a_min, a_max, samples } => {
            if samples < 2 || !(a_max > a_min) {
                return Err(Failure::Args("need a_min < a_max and at least 2 samples".into()));
            }
            if a_max >= critical_a(d) {
                return Err(Failure::Args(format!("a_max = {a_max} must stay below a_c = {}", critical_a(d))));
            }
            let mut csv = String::from("a,b_fs\n");
            for k in 0..samples {
                let a = a_min + (a_max - a_min) * k as f64 / (samples - 1) as f64;
                let b = b_fs(d, a).map_err(args_err)?;
                csv.push_str(&format!("{},{}\n", format_g17(a), format_g17(b)));
            }
            emit(csv.as_bytes());
        }
        Cmd::RadialConstant(t) => {
            let dp = params(t)?;
            out.json(&RadialConstantReport {
                d: dp.d,
                a: dp.a,
                b: dp.b,
                p: dp.p,
                lambda: dp.lambda,
                radial_constant: radial_constant(&dp)?,
            });
        }
        Cmd::Minimize { t, radial_only, init, out: path } => {
            let dp = params(t)?;
            let preset: InitPreset = init.parse().map_err(args_err)?;
            let grid = cfg.cylinder_grid(&dp)?;
            let restriction = if radial_only { Restriction::Radial } else { Restriction::Full };
            out.note(&format!("minimizing on {} z-nodes x {}", grid.nz(), grid.sphere.describe()));
            let res = minimize_quotient(&dp, &grid, restriction, &Init::Preset(preset), &cfg.minimize_options())?;
            if let (Some(path), Some(phi)) = (path.or(cfg.out.clone()), res.minimizer.as_ref()) {
                let header = SnapshotHeader {
                    d: dp.d,
                    nz: grid.nz(),
                    half_length: grid.half_length(),
                    sphere: grid.sphere.describe(),
                    params: serde_json::to_value(dp).map_err(|e| Failure::Numeric(CknError::Io(e.to_string())))?,
                };
                let mut buf = Vec::new();
                write_snapshot(&mut buf, &header, phi)?;
                write_atomic(&path, &buf)?;
            }
            out.json(&res);
        }
        Cmd::DetectBreaking(t) => {
            let dp = params(t)?;
            let grid = cfg.cylinder_grid(&dp)?;
            out.note(&format!("radial and full descent on {} z-nodes x {}", grid.nz(), grid.sphere.describe()));
            out.json(&detect_breaking(&dp, &grid, &cfg.minimize_options())?);
        }
        Cmd::Spectrum { d, p, lmax, lambda } => {
            let lambda = match lambda {
                Some(l) => l,
                None => lambda_fs(d, p).map_err(args_err)?,
            };
            if !(lambda > 0.0) {
                return Err(Failure::Args(format!("lambda = {lambda} must be positive")));
            }
            lambda_fs(d, p).map_err(args_err)?;
            out.json(&mode_spectrum(d, p, lambda, lmax, cfg.spectrum_nz)?);
        }
        Cmd::Threshold { d, p } => {
            lambda_fs(d, p).map_err(args_err)?;
            let opts = ThresholdOptions {
                rel_tol: cfg.threshold_tol,
                nz: cfg.spectrum_nz,
                ..ThresholdOptions::default()
            };
            out.json(&threshold_report(d, p, &opts)?);
        }
        Cmd::SphereThreshold { d, p } => out.json(&sphere_bifurcation(d, p).map_err(args_err)?),
        Cmd::Flow { t, t_end, dt, init, trace } => {
            let dp = params(t)?;
            let init: FlowInit = init.parse().map_err(args_err)?;
            if !(t_end > 0.0) {
                return Err(Failure::Args(format!("t_end = {t_end} must be positive")));
            }
            let dt = dt.unwrap_or(cfg.dt);
            if !(dt > 0.0) {
                return Err(Failure::Args(format!("dt = {dt} must be positive")));
            }
            let grid = cfg.flow_grid(&dp)?;
            let solver = FlowSolver::new(grid, dp)?;
            let v0 = initial_density(init, &solver.grid, &dp, cfg.seed)?;
            let tr = solver.run(v0, t_end, dt)?;
            let mut csv = Vec::new();
            tr.write_csv(&mut csv)?;
            match trace.or(cfg.trace.clone()) {
                Some(path) => {
                    write_atomic(&path, &csv)?;
                    out.json(&FlowSummary {
                        t_end,
                        steps: tr.times.len() - 1,
                        j_initial: tr.j[0],
                        j_final: *tr.j.last().expect("non-empty trace"),
                        monotone: tr.monotone,
                        mass_drift_rate: tr.mass_drift_rate(),
                    });
                }
                None => emit(&csv),
            }
        }
        Cmd::Verify { suite, seeds } => {
            let suite: Suite = suite.parse().map_err(args_err)?;
            let opts = SuiteOptions {
                base_seed: cfg.seed,
                ..SuiteOptions::default()
            };
            out.json(&run_suite(suite, seeds, &opts)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Args(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Numeric(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
