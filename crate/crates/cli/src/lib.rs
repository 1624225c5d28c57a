//! Library side of the `fluidbound` command: argument parsing, dispatch and
//! output writing, callable in-process through [`run_from`].

pub mod commands;
mod config;
pub mod error;
pub mod output;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::{CliError, CliResult};

#[derive(Parser, Debug)]
#[command(name = "fluidbound", version, about = "Bound experiments for fluid-dynamics simulation")]
#[command(args_override_self = true)]
struct Cli {
    /// Directory receiving CSV files and manifests.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// `key = value` file of default flag values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads for parallel sweeps.
    #[arg(long, global = true, env = "FLUIDBOUND_THREADS")]
    threads: Option<usize>,
    /// Seed for random-state sampling.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Growth-rate bounds and continued-fraction roots for each k.
    GrowthBounds(GrowthArgs),
    /// The overlap bound curves over the envelope window.
    BoundCurves(CurveArgs),
    /// Maximum of 1 - H~ for a list of eps and its log-log slope.
    Scaling(ScalingArgs),
    /// Soliton-pair overlap against time.
    Kdv(KdvArgs),
    /// Nonlinear and linearized Euler runs from the perturbed shear flow.
    EulerSim(EulerArgs),
    /// Copy-count lower bound for distinguishing two output states.
    CopyBound(CopyArgs),
    /// Fourier coefficients of the unstable eigenmode.
    Eigenmode(EigenArgs),
}

#[derive(Args, Debug)]
struct GrowthArgs {
    #[arg(long)]
    m: u32,
    #[arg(long, default_value_t = 1.0)]
    u0: f64,
    #[arg(long)]
    k_min: Option<u32>,
    #[arg(long)]
    k_max: Option<u32>,
}

#[derive(Args, Debug, Clone)]
struct ExponentArgs {
    #[arg(long, default_value_t = 2)]
    m: u32,
    #[arg(long, default_value_t = 1)]
    k: u32,
    /// Fixed kappa instead of the value from the envelope estimate.
    #[arg(long)]
    kappa: Option<f64>,
    /// Fixed exponent K with alpha = beta instead of the envelope estimate.
    #[arg(long)]
    k_exp: Option<f64>,
}

#[derive(Args, Debug)]
struct CurveArgs {
    #[command(flatten)]
    setup: ExponentArgs,
    #[arg(long)]
    eps: f64,
    #[arg(long, default_value_t = 1000)]
    n_samples: usize,
}

#[derive(Args, Debug)]
struct ScalingArgs {
    #[command(flatten)]
    setup: ExponentArgs,
    /// Comma-separated eps values.
    #[arg(long, value_delimiter = ',', required = true)]
    eps_list: Vec<f64>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum KdvMode {
    Analytic,
    Numeric,
    Both,
}

#[derive(Args, Debug)]
struct KdvArgs {
    #[arg(long)]
    delta: f64,
    #[arg(long)]
    t_final: f64,
    /// Largest grid spacing.
    #[arg(long, default_value_t = 0.1)]
    resolution: f64,
    /// Margin kept beyond each soliton.
    #[arg(long, default_value_t = fluidbound_core::kdv::WINDOW_MARGIN)]
    window: f64,
    #[arg(long, value_enum, default_value_t = KdvMode::Both)]
    mode: KdvMode,
    /// Number of output intervals.
    #[arg(long, default_value_t = 100)]
    samples: usize,
}

#[derive(Args, Debug)]
struct EulerArgs {
    #[arg(long, default_value_t = 2)]
    m: u32,
    #[arg(long, default_value_t = 1)]
    k: u32,
    #[arg(long, default_value_t = 1e-3)]
    eps: f64,
    #[arg(long, default_value_t = 256)]
    grid_n: usize,
    #[arg(long, default_value_t = 1e-2)]
    dt: f64,
    /// Defaults to the end of the envelope window.
    #[arg(long)]
    t_max: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    gauge: f64,
    #[arg(long, default_value_t = 50)]
    sample_every: usize,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum CopyKind {
    Final,
    History,
}

#[derive(Args, Debug)]
struct CopyArgs {
    #[arg(long)]
    eps0: f64,
    #[arg(long)]
    epsf: f64,
    #[arg(long)]
    delta: f64,
    /// Horizon, required for the history bound.
    #[arg(long = "T", alias = "horizon")]
    horizon: Option<f64>,
    #[arg(long, value_enum, default_value_t = CopyKind::Final)]
    kind: CopyKind,
}

#[derive(Args, Debug)]
struct EigenArgs {
    #[arg(long, default_value_t = 2)]
    m: u32,
    #[arg(long, default_value_t = 1.0)]
    u0: f64,
    #[arg(long, default_value_t = 1)]
    k: u32,
    /// Truncation; chosen adaptively when omitted.
    #[arg(long)]
    j_max: Option<i64>,
    /// Velocity norm of the mode; defaults to the shear-flow norm.
    #[arg(long)]
    aleph: Option<f64>,
}

fn run(args: Vec<OsString>) -> CliResult<()> {
    let args = config::merge_config_args(args)?;
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) if e.exit_code() == 0 => {
            let _ = e.print();
            return Ok(());
        }
        Err(e) => return Err(CliError::Usage(e.render().to_string().trim_end().to_string())),
    };
    let ctx = commands::Context {
        out: cli.out,
        seed: cli.seed,
        threads: cli.threads,
    };
    let command = cli.command;
    let job = move || dispatch(&ctx, command);
    match cli.threads {
        None => job(),
        Some(0) => Err(error::usage("--threads must be positive")),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Numerical(e.to_string()))?
            .install(job),
    }
}

fn dispatch(ctx: &commands::Context, command: Command) -> CliResult<()> {
    match command {
        Command::GrowthBounds(a) => commands::growth_bounds(ctx, a.m, a.u0, a.k_min, a.k_max),
        Command::BoundCurves(a) => commands::bound_curves(ctx, &a.setup.into(), a.eps, a.n_samples),
        Command::Scaling(a) => commands::scaling(ctx, &a.setup.into(), &a.eps_list),
        Command::Kdv(a) => commands::kdv(
            ctx,
            &commands::KdvSettings {
                delta: a.delta,
                t_final: a.t_final,
                resolution: a.resolution,
                margin: a.window,
                numeric: a.mode != KdvMode::Analytic,
                analytic: a.mode != KdvMode::Numeric,
                samples: a.samples,
            },
        ),
        Command::EulerSim(a) => commands::euler_sim(
            ctx,
            &commands::EulerSettings {
                m: a.m,
                k: a.k,
                eps: a.eps,
                grid_n: a.grid_n,
                dt: a.dt,
                t_max: a.t_max,
                gauge: a.gauge,
                sample_every: a.sample_every,
            },
        ),
        Command::CopyBound(a) => commands::copy_bound(ctx, a.eps0, a.epsf, a.delta, a.horizon, a.kind == CopyKind::History),
        Command::Eigenmode(a) => commands::eigenmode(ctx, a.m, a.u0, a.k, a.j_max, a.aleph),
    }
}

impl From<ExponentArgs> for commands::CurveSetup {
    fn from(a: ExponentArgs) -> Self {
        commands::CurveSetup {
            m: a.m,
            k: a.k,
            kappa: a.kappa,
            k_exp: a.k_exp,
        }
    }
}

/// Runs one invocation with `args` (program name first) and returns the
/// process exit code; panics are reported as numerical failures.
pub fn run_from(args: Vec<OsString>) -> i32 {
    match std::panic::catch_unwind(move || run(args)) {
        Ok(Ok(())) => 0,
        Ok(Err(e)) => {
            eprintln!("fluidbound: {e}");
            e.exit_code()
        }
        Err(_) => 4,
    }
}
