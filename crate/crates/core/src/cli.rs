//! Command-line front end.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::effective::{upscale, EffectiveCoefficients};
use crate::error::Error;
use crate::io::files::{self, read_coefficients, write_coefficients, write_json};
use crate::io::vtk::write_correctors;
use crate::io::RunConfig;
use crate::macro_solver;
use crate::micro_dns::{setup_micro, MicroSimulation};
use crate::unit_cell::tile_micro_domain;
use crate::verification::{self, convergence_study, energy_identity_residual, StudySetup};

#[derive(Debug, Parser)]
#[command(
    name = "thermoporo",
    version,
    about = "Homogenization of two-phase thermo-poro-elastic media"
)]
pub struct Cli {
    /// Worker threads for parallel sections (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Single thread and fixed summation order.
    #[arg(long, global = true)]
    pub sequential: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, clap::Args)]
pub struct Common {
    /// Run configuration (JSON).
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory, overriding `output.directory`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the cell problems and write the effective coefficients.
    Upscale(Common),
    /// Run the homogenized model.
    Macro {
        #[command(flatten)]
        common: Common,
        /// Coefficients JSON from `upscale`; computed in place when absent.
        #[arg(long)]
        coeffs: Option<PathBuf>,
    },
    /// Run the ε-scale model at `dns.epsilon`.
    Dns {
        #[command(flatten)]
        common: Common,
        /// Lift the cap on scalar unknowns.
        #[arg(long)]
        override_desk_cap: bool,
    },
    /// Compare DNS runs over `eps_list` with the homogenized solution.
    Verify {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        override_desk_cap: bool,
    },
    /// Run the closed-form checks.
    Selftest,
}

/// A failure with its process exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Config(_)
            | Error::Json(_)
            | Error::Scale(_)
            | Error::Material(_)
            | Error::WellPosedness(_)
            | Error::Alignment { .. }
            | Error::DegenerateGeometry(_)
            | Error::DeskCap { .. } => 2,
            _ => 1,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn input_failure(what: &str, path: &Path, e: Error) -> Failure {
    Failure {
        code: 2,
        message: format!("cannot read {what} {}: {e}", path.display()),
    }
}

fn load(common: &Common) -> Result<(RunConfig, PathBuf), Failure> {
    let cfg = RunConfig::load(&common.config).map_err(|e| match e {
        Error::Io(_) | Error::Json(_) => input_failure("config", &common.config, e),
        other => other.into(),
    })?;
    init_logging(&cfg.output.verbosity);
    let out = common.out.clone().unwrap_or_else(|| cfg.output.directory.clone());
    files::ensure_dir(&out)?;
    Ok((cfg, out))
}

fn init_logging(level: &str) {
    let env = env_logger::Env::default().default_filter_or(level);
    let _ = env_logger::Builder::from_env(env).format_timestamp(None).try_init();
}

fn coefficients(cfg: &RunConfig) -> Result<EffectiveCoefficients, Failure> {
    let cell = cfg.unit_cell()?;
    Ok(upscale(&cell, &cfg.parameters(), &cfg.sources)?.1)
}

fn cmd_upscale(common: &Common) -> Result<(), Failure> {
    let (cfg, out) = load(common)?;
    let cell = cfg.unit_cell()?;
    let (corr, coeffs) = upscale(&cell, &cfg.parameters(), &cfg.sources)?;
    let [json, csv] = write_coefficients(&out, &coeffs)?;
    if cfg.output.correctors_vtk {
        write_correctors(&out.join("correctors.vtk"), &cell, &corr)?;
    }
    println!("wrote {} and {}", json.display(), csv.display());
    Ok(())
}

fn cmd_macro(common: &Common, coeffs: Option<&Path>) -> Result<(), Failure> {
    let (cfg, out) = load(common)?;
    let coeffs = match coeffs {
        Some(p) => read_coefficients(p).map_err(|e| input_failure("coefficients", p, e))?,
        None => coefficients(&cfg)?,
    };
    let (sys, run) = macro_solver::run(
        &coeffs,
        cfg.macro_.resolution,
        cfg.macro_.boundary,
        &cfg.time,
        &cfg.solver,
    )?;
    if cfg.output.vtk {
        files::write_macro_series(&out, &sys.dofs.grid, &run.outputs)?;
    }
    std::fs::write(out.join("energy.csv"), run.ledger.to_csv()).map_err(Error::from)?;
    write_json(
        &out.join("identity_residuals.json"),
        &energy_identity_residual(&run.ledger),
    )?;
    println!(
        "macro run: {} steps, {} outputs, results in {}",
        cfg.time.steps()?,
        run.outputs.len(),
        out.display()
    );
    Ok(())
}

fn cmd_dns(common: &Common, override_cap: bool) -> Result<(), Failure> {
    let (cfg, out) = load(common)?;
    let cell = cfg.unit_cell()?;
    let mesh = tile_micro_domain(&cell, cfg.dns.epsilon, cfg.dns.allow_boundary)?;
    let cap = if override_cap { usize::MAX } else { cfg.dns.desk_cap };
    let sys = setup_micro(&mesh, &cfg.parameters(), cfg.dns.interface, cap)?;
    let sim = MicroSimulation::new(&sys, cfg.time.dt, &cfg.sources, &cfg.solver)?;
    let run = sim.run(&cfg.time)?;
    if cfg.output.vtk {
        files::write_micro_series(&out, &sys.dofs, &run.outputs)?;
    }
    std::fs::write(out.join("dns_energy.csv"), run.ledger.to_csv()).map_err(Error::from)?;
    write_json(&out.join("dns_summary.json"), &run.summary)?;
    println!(
        "dns run: epsilon {}, {} scalar unknowns, results in {}",
        mesh.epsilon,
        sys.dofs.num_scalar,
        out.display()
    );
    Ok(())
}

fn cmd_verify(common: &Common, override_cap: bool, parallel: bool) -> Result<(), Failure> {
    let (cfg, out) = load(common)?;
    if cfg.eps_list.is_empty() {
        return Err(Error::Config("eps_list is empty".into()).into());
    }
    let setup = StudySetup {
        cell: cfg.unit_cell()?,
        params: cfg.parameters(),
        sources: cfg.sources.clone(),
        time: cfg.time.clone(),
        macro_resolution: cfg.macro_.resolution,
        eps_list: cfg.eps_list.clone(),
        mode: cfg.dns.interface,
        desk_cap: if override_cap { usize::MAX } else { cfg.dns.desk_cap },
        solver: cfg.solver.clone(),
        parallel,
    };
    let study = convergence_study(&setup)?;
    write_coefficients(&out, &study.coefficients)?;
    std::fs::write(out.join("convergence.csv"), study.report.to_csv()).map_err(Error::from)?;
    write_json(&out.join("convergence.json"), &study.report)?;
    print!("{}", study.report.to_csv());
    Ok(())
}

fn cmd_selftest() -> Result<(), Failure> {
    init_logging("warn");
    let checks = verification::selftest()?;
    let mut failed = 0;
    for c in &checks {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
        failed += usize::from(!c.passed);
    }
    if failed > 0 {
        return Err(Failure {
            code: 1,
            message: format!("{failed} of {} checks failed", checks.len()),
        });
    }
    Ok(())
}

pub fn run(cli: Cli) -> Result<(), Failure> {
    let n = if cli.sequential { Some(1) } else { cli.threads };
    let Some(n) = n else { return dispatch(&cli) };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(n.max(1))
        .build()
        .map_err(|e| Failure {
            code: 1,
            message: format!("thread pool: {e}"),
        })?;
    pool.install(|| dispatch(&cli))
}

fn dispatch(cli: &Cli) -> Result<(), Failure> {
    let parallel = !cli.sequential;
    match &cli.command {
        Command::Upscale(c) => cmd_upscale(c),
        Command::Macro { common, coeffs } => cmd_macro(common, coeffs.as_deref()),
        Command::Dns {
            common,
            override_desk_cap,
        } => cmd_dns(common, *override_desk_cap),
        Command::Verify {
            common,
            override_desk_cap,
        } => cmd_verify(common, *override_desk_cap, parallel),
        Command::Selftest => cmd_selftest(),
    }
}

/// Parses `args` and runs; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}
