use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use esbgk_core::bench::analysis::{conservation_report, l1_distance, relative_l1};
use esbgk_core::bench::output::write_ledger;
use esbgk_core::bench::{convergence_suite, kinetic_profiles, locate_fronts, nse_reference, run_problem, write_profiles, ProblemConfig, ProblemKind};
use esbgk_core::projection::WeightKind;
use esbgk_core::reconstruction::ReconstructionKind;
use esbgk_core::time_integration::{BdfStartup, SchemeKind};

#[derive(Parser)]
#[command(name = "esbgk", version, about = "Semi-Lagrangian ES-BGK solver and benchmark harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Smooth periodic problem; several --n-x values produce a convergence table.
    Accuracy(AccuracyArgs),
    /// Mach 2.5 shock tube in two velocity dimensions.
    Riemann(RunArgs),
    /// Lax shock tube in three velocity dimensions.
    Lax(RunArgs),
    /// Navier-Stokes reference for the riemann or lax setup.
    Nse(NseArgs),
    /// Run a JSON configuration file.
    Custom(CustomArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Switch {
    On,
    Off,
}

#[derive(Clone, Copy, ValueEnum)]
enum Weights {
    LocalGaussian,
    ReferenceMaxwellian,
    Uniform,
}

#[derive(Clone, Copy, ValueEnum)]
enum Startup {
    SameOrderDirk,
    FirstOrder,
}

#[derive(Clone, Copy, ValueEnum)]
enum Recon {
    Linear,
    Qcweno23,
    Qcweno35,
}

#[derive(Clone, Copy, ValueEnum)]
enum FluidProblem {
    Riemann,
    Lax,
}

/// Overrides shared by every kinetic run.
#[derive(Args, Clone)]
struct Common {
    /// fo, dirk2 (rk2), dirk3 (rk3), bdf2 or bdf3
    #[arg(long, default_value = "dirk2")]
    scheme: String,
    /// Defaults to the scheme's pairing.
    #[arg(long, value_enum)]
    reconstruction: Option<Recon>,
    #[arg(long)]
    n_v: Option<usize>,
    #[arg(long)]
    v_max: Option<f64>,
    #[arg(long)]
    cfl: Option<f64>,
    #[arg(long)]
    t_final: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    nu: Option<f64>,
    #[arg(long, value_enum, default_value = "on")]
    projection: Switch,
    #[arg(long, value_enum)]
    weights: Option<Weights>,
    #[arg(long, value_enum)]
    bdf_startup: Option<Startup>,
    /// Directory for CSV profiles, ledgers and the config echo.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct AccuracyArgs {
    #[command(flatten)]
    common: Common,
    /// Comma-separated Knudsen numbers.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    epsilon: Vec<f64>,
    /// Comma-separated cell counts, each doubling the previous.
    #[arg(long, value_delimiter = ',', default_value = "80")]
    n_x: Vec<usize>,
    #[arg(long, default_value_t = 10.0)]
    sigma: f64,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    epsilon: f64,
    #[arg(long)]
    n_x: Option<usize>,
    /// Also run the Navier-Stokes reference and report the difference.
    #[arg(long)]
    compare: bool,
    /// Refinement of the Navier-Stokes grid relative to the kinetic grid.
    #[arg(long, default_value_t = 2)]
    refine: usize,
}

#[derive(Args)]
struct NseArgs {
    #[arg(long, value_enum)]
    problem: FluidProblem,
    #[arg(long)]
    epsilon: f64,
    #[arg(long)]
    n_x: Option<usize>,
    #[arg(long, default_value_t = 1)]
    refine: usize,
    #[arg(long)]
    t_final: Option<f64>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct CustomArgs {
    /// JSON problem configuration.
    config: PathBuf,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

fn apply_common(mut c: ProblemConfig, common: &Common) -> Result<ProblemConfig> {
    let scheme: SchemeKind = common.scheme.parse()?;
    c = c.with_scheme(scheme);
    if let Some(r) = common.reconstruction {
        c.reconstruction = match r {
            Recon::Linear => ReconstructionKind::Linear,
            Recon::Qcweno23 => ReconstructionKind::Qcweno23,
            Recon::Qcweno35 => ReconstructionKind::Qcweno35,
        };
    }
    if let Some(v) = common.n_v {
        c.n_v = v;
    }
    if let Some(v) = common.v_max {
        c.v_max = v;
    }
    if let Some(v) = common.cfl {
        c.cfl = v;
    }
    if let Some(v) = common.t_final {
        c.t_final = v;
    }
    if let Some(v) = common.nu {
        c.nu = v;
    }
    c.projection = matches!(common.projection, Switch::On);
    if let Some(w) = common.weights {
        c.projection_weights = match w {
            Weights::LocalGaussian => WeightKind::LocalGaussian,
            Weights::ReferenceMaxwellian => WeightKind::ReferenceMaxwellian,
            Weights::Uniform => WeightKind::Uniform,
        };
    }
    if let Some(s) = common.bdf_startup {
        c.bdf_startup = match s {
            Startup::SameOrderDirk => BdfStartup::SameOrderDirk,
            Startup::FirstOrder => BdfStartup::FirstOrder,
        };
    }
    c.out_dir = common.out_dir.clone();
    Ok(c)
}

fn run_name(c: &ProblemConfig) -> String {
    let problem = match c.problem {
        ProblemKind::Accuracy => "accuracy",
        ProblemKind::Riemann => "riemann",
        ProblemKind::Lax => "lax",
        ProblemKind::Custom => "custom",
    };
    format!("{problem}_{}_eps{:e}_nx{}", c.scheme.name(), c.epsilon, c.n_x)
}

fn prepare_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

/// Runs one kinetic configuration and writes its artifacts.
fn run_kinetic(c: &ProblemConfig, compare: Option<usize>) -> Result<()> {
    c.validate()?;
    let start = Instant::now();
    let out = run_problem(c, |_, _| {})?;
    let report = conservation_report(&out.state.ledger);
    let name = run_name(c);
    println!("{name}: {} steps of dt = {:.6e} in {:.1?}", out.state.step, out.dt, start.elapsed());
    println!(
        "  cumulative drift (mass, momentum, energy) = {:.3e} {:.3e} {:.3e}",
        report.cumulative_drift[0], report.cumulative_drift[1], report.cumulative_drift[2]
    );
    let profiles = kinetic_profiles(&out.state.field)?;
    let echo = c.to_json()?;
    if let Some(dir) = &c.out_dir {
        prepare_dir(dir)?;
        write_profiles(&dir.join(format!("{name}_profile.csv")), &profiles, &echo)?;
        write_ledger(&dir.join(format!("{name}_ledger.csv")), &out.state.ledger, &echo)?;
        std::fs::write(dir.join(format!("{name}_config.json")), &echo)?;
    }
    if let Some(refine) = compare {
        let reference = nse_reference(c, refine)?;
        let kin: Vec<f64> = profiles.iter().map(|r| r.rho).collect();
        let fluid: Vec<f64> = reference.profiles.iter().map(|r| r.rho).collect();
        let x: Vec<f64> = profiles.iter().map(|r| r.x).collect();
        let dx = c.spatial_grid()?.dx;
        println!(
            "  vs Navier-Stokes: L1(rho) = {:.4e}, relative {:.3e}",
            l1_distance(&kin, &fluid, dx),
            relative_l1(&kin, &fluid)
        );
        let sep = 10.0 * dx;
        println!(
            "  fronts kinetic {:?} / fluid {:?}",
            locate_fronts(&x, &kin, 2, sep),
            locate_fronts(&x, &fluid, 2, sep)
        );
        if let Some(dir) = &c.out_dir {
            write_profiles(&dir.join(format!("{name}_nse_profile.csv")), &reference.profiles, &echo)?;
        }
    }
    Ok(())
}

fn accuracy(args: &AccuracyArgs) -> Result<()> {
    let mut base = apply_common(ProblemConfig::accuracy(args.epsilon[0], SchemeKind::Dirk2, args.n_x[0]), &args.common)?;
    base.sigma = args.sigma;
    if args.n_x.len() == 1 {
        for &eps in &args.epsilon {
            let mut c = base.clone();
            c.epsilon = eps;
            run_kinetic(&c, None)?;
        }
        return Ok(());
    }
    let start = Instant::now();
    let suite = convergence_suite(&base, &args.n_x, &args.epsilon, &[base.scheme]);
    println!("scheme,epsilon,n_coarse,n_fine,rel_l1_error,rate");
    let mut failed = false;
    for entry in &suite {
        match &entry.rows {
            Ok(rows) => {
                for r in rows {
                    let rate = r.rate.map(|v| format!("{v:.3}")).unwrap_or_default();
                    println!("{},{:e},{},{},{:.4e},{rate}", entry.scheme.name(), entry.epsilon, r.n_coarse, r.n_fine, r.error);
                }
            }
            Err(e) => {
                failed = true;
                eprintln!("{} eps={:e}: {e}", entry.scheme.name(), entry.epsilon);
            }
        }
    }
    eprintln!("suite finished in {:.1?}", start.elapsed());
    if failed {
        bail!("some convergence runs failed");
    }
    Ok(())
}

fn nse(args: &NseArgs) -> Result<()> {
    let mut c = match args.problem {
        FluidProblem::Riemann => ProblemConfig::riemann(args.epsilon, SchemeKind::FirstOrder),
        FluidProblem::Lax => ProblemConfig::lax(args.epsilon, SchemeKind::FirstOrder),
    };
    if let Some(n) = args.n_x {
        c.n_x = n;
    }
    if let Some(t) = args.t_final {
        c.t_final = t;
    }
    let start = Instant::now();
    let reference = nse_reference(&c, args.refine)?;
    let totals = reference.fine.totals();
    println!(
        "nse: t = {} on {} cells in {:.1?}; totals (mass, momentum, energy) = {:.10e} {:.10e} {:.10e}",
        reference.fine.time,
        reference.fine.rho.len(),
        start.elapsed(),
        totals[0],
        totals[1],
        totals[2]
    );
    if let Some(dir) = &args.out_dir {
        prepare_dir(dir)?;
        let name = format!(
            "nse_{}_eps{:e}_nx{}",
            if matches!(args.problem, FluidProblem::Riemann) { "riemann" } else { "lax" },
            c.epsilon,
            c.n_x
        );
        write_profiles(&dir.join(format!("{name}_profile.csv")), &reference.profiles, &c.to_json()?)?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let threads = esbgk_core::configure_threads()?;
    eprintln!("using {threads} worker thread(s)");
    match cli.command {
        Command::Accuracy(a) => accuracy(&a),
        Command::Riemann(a) => {
            let mut c = apply_common(ProblemConfig::riemann(a.epsilon, SchemeKind::Dirk2), &a.common)?;
            if let Some(n) = a.n_x {
                c.n_x = n;
            }
            if a.common.n_v.is_none() {
                c.n_v = ProblemConfig::riemann(a.epsilon, c.scheme).n_v;
            }
            run_kinetic(&c, a.compare.then_some(a.refine))
        }
        Command::Lax(a) => {
            let mut c = apply_common(ProblemConfig::lax(a.epsilon, SchemeKind::Dirk2), &a.common)?;
            if let Some(n) = a.n_x {
                c.n_x = n;
            }
            run_kinetic(&c, a.compare.then_some(a.refine))
        }
        Command::Nse(a) => nse(&a),
        Command::Custom(a) => {
            let mut c = ProblemConfig::load(&a.config).with_context(|| format!("reading {}", a.config.display()))?;
            if a.out_dir.is_some() {
                c.out_dir = a.out_dir;
            }
            let compare = c.two_state.is_some().then_some(1);
            run_kinetic(&c, compare)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
