//! `spinphonon` command-line entry point.

mod commands;
mod config;
mod output;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::Value;

use config::Config;
use output::{ErrorField, Outputs, RunManifest};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] spinphonon::Error),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        use spinphonon::Error as E;
        match self {
            CliError::Config(_) => 2,
            CliError::Core(E::InvalidConfig(_) | E::DimensionMismatch { .. } | E::UnstableFrame { .. }) => 2,
            CliError::Core(E::Capacity { .. }) => 3,
            CliError::Core(_) | CliError::Numerical(_) => 4,
            CliError::Io(_) => 1,
        }
    }

    fn kind(&self) -> &'static str {
        match self.exit_code() {
            2 => "config",
            3 => "capacity",
            4 => "numerical",
            _ => "io",
        }
    }
}

#[derive(Debug, Args)]
struct Common {
    /// TOML file with `[chain]`, `[classical]`, `[anneal]`, `[sweep]`,
    /// `[quantum]`, `[setup]` sections.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override one key, e.g. `--set chain.t_c=0.5`. Applied after the file,
    /// in order.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,

    /// Output directory.
    #[arg(long, env = "SPINPHONON_OUT_DIR", default_value = "spinphonon-out", global = true)]
    out_dir: PathBuf,

    /// Worker threads for sweeps; defaults to the available cores.
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// Seed for randomized start vectors and restart searches.
    #[arg(long, default_value_t = 0x5eed, global = true)]
    seed: u64,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Figure {
    /// Exact vs analytic couplings, N = 20, t_c in {0.1, 1, 5}.
    /// Writes fig1b_tc<t_c>.csv: separation, j_exact, j_analytic.
    Fig1b,
    /// Annealing fidelity over a tau_ev grid.
    /// Writes fig9.csv: t_c, tau_ev, fidelity, max_norm_drift.
    Fig9,
    /// One annealing trajectory. Writes fig10.csv with the `anneal` columns.
    Fig10,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Phonon modes. Writes modes.csv (mode, frequency, zigzag_overlap) and
    /// wavefunctions.csv (site, mode, re, im).
    Modes,
    /// Effective couplings. Writes couplings.csv (j, l, coupling) and
    /// comparison.csv (separation, site, j_exact, j_analytic, rel_err).
    Couplings,
    /// Exhaustive classical ground state. Writes ground_state.csv
    /// (site, spin) and ground_state.json.
    GroundState,
    /// Ground states over a t_c range. Writes frustration_scan.csv (t_c,
    /// energy, degeneracy_count, phase_label, overlap_af, overlap_f,
    /// overlap_hopf_c, overlap_hopf_s, pattern).
    FrustrationScan,
    /// One mean-field anneal. Writes trajectory.csv (t, omega_x, omega_z,
    /// g2_weight, fidelity, x_j, y_j, z_j for every site j).
    Anneal,
    /// Final fidelity over t_c values and a log tau_ev grid. Writes
    /// anneal_sweep.csv (t_c, tau_ev, fidelity, max_norm_drift).
    AnnealSweep,
    /// Exact diagonalization at the listed quantum.omega_x values. Writes
    /// exact.json.
    Exact,
    /// Exact diagonalization over a log Omega_x grid. Writes exact_sweep.csv
    /// (omega_x, energy, oaf, mean_phonons, max_abs_sigma_z, parity,
    /// parity_gap, residual).
    ExactSweep,
    /// Experimental parameters to model inputs. Writes params.json.
    Params,
    /// Plot-ready figure data.
    Figure {
        #[arg(value_enum)]
        which: Figure,
    },
}

impl Command {
    fn name(&self) -> String {
        match self {
            Command::Modes => "modes".into(),
            Command::Couplings => "couplings".into(),
            Command::GroundState => "ground-state".into(),
            Command::FrustrationScan => "frustration-scan".into(),
            Command::Anneal => "anneal".into(),
            Command::AnnealSweep => "anneal-sweep".into(),
            Command::Exact => "exact".into(),
            Command::ExactSweep => "exact-sweep".into(),
            Command::Params => "params".into(),
            Command::Figure { which } => format!(
                "figure {}",
                which
                    .to_possible_value()
                    .map_or("?".into(), |v| v.get_name().to_string())
            ),
        }
    }
}

/// Spin-phonon models of trapped-ion chains. Every run writes its artifacts
/// and a manifest.json into the output directory. Exit codes: 2 for
/// configuration errors, 3 for capacity limits, 4 for numerical failures.
#[derive(Debug, Parser)]
#[command(name = "spinphonon", version, about)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

fn resolve_config(common: &Common) -> Result<Config, CliError> {
    let mut cfg = match &common.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    for s in &common.set {
        cfg.set(s)?;
    }
    Ok(cfg)
}

fn dispatch(command: &Command, cfg: &Config, out: &mut Outputs, seed: u64) -> Result<Value, CliError> {
    let ctx = commands::Context { cfg, out, seed };
    match command {
        Command::Modes => commands::modes(ctx),
        Command::Couplings => commands::couplings(ctx),
        Command::GroundState => commands::ground_state(ctx),
        Command::FrustrationScan => commands::frustration_scan(ctx),
        Command::Anneal => commands::anneal(ctx),
        Command::AnnealSweep => commands::anneal_sweep(ctx),
        Command::Exact => commands::exact(ctx),
        Command::ExactSweep => commands::exact_sweep_cmd(ctx),
        Command::Params => commands::params(ctx),
        Command::Figure { which } => commands::figure(ctx, *which),
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let started = Instant::now();
    if let Some(jobs) = cli.common.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build_global()
            .map_err(|e| CliError::Config(format!("cannot set --jobs: {e}")))?;
    }
    let mut out = Outputs::new(&cli.common.out_dir)?;
    let cfg = resolve_config(&cli.common);
    let result = cfg
        .as_ref()
        .map_err(|e| CliError::Config(e.to_string()))
        .and_then(|c| dispatch(&cli.command, c, &mut out, cli.common.seed));
    let (summary, error) = match &result {
        Ok(v) => (v.clone(), None),
        Err(e) => (
            Value::Null,
            Some(ErrorField {
                kind: e.kind(),
                message: e.to_string(),
                exit_code: e.exit_code() as i32,
            }),
        ),
    };
    let manifest = RunManifest {
        subcommand: cli.command.name(),
        config: cfg
            .as_ref()
            .map_or(Value::Null, |c| serde_json::to_value(c.table()).unwrap_or(Value::Null)),
        seed: cli.common.seed,
        jobs: rayon::current_num_threads(),
        tool_version: env!("CARGO_PKG_VERSION"),
        outputs: out.written().to_vec(),
        wall_clock_seconds: started.elapsed().as_secs_f64(),
        summary,
        error,
    };
    let wrote = out.json("manifest.json", &manifest);
    result?;
    wrote?;
    let mut stdout = std::io::stdout().lock();
    let _ = writeln!(
        stdout,
        "{}",
        serde_json::to_string_pretty(&manifest.summary).unwrap_or_default()
    );
    eprintln!("wrote {} files to {}", manifest.outputs.len() + 1, out.dir().display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
