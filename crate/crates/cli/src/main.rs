mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use rsq::sampler::Resolution;
use rsq::{Grid, Temperature};
use serde::Serialize;

use config::{QpeModel, RunConfig, SampleMode};
use output::Outputs;

const VERSION: &str = concat!("v", env!("CARGO_PKG_VERSION"));

#[derive(Parser, Debug)]
#[command(
    name = "rsq",
    version,
    about = "Effective-Hamiltonian spectra, VQE, QPE hopping and hybrid sampling"
)]
struct Cli {
    /// TOML run configuration; flags override it, RSQ_SEED overrides both.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default)]
struct Physics {
    #[arg(long)]
    temperature: Option<f64>,
    /// Grid qubits.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    box_length: Option<f64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Eigenpairs, effective potentials and the gap-vs-1/T sweep.
    Spectrum {
        #[command(flatten)]
        physics: Physics,
        #[arg(long)]
        states: Option<usize>,
    },
    /// Relaxation rate from the supersymmetric ground energy.
    Rate {
        #[command(flatten)]
        physics: Physics,
    },
    /// Variational ground state over depths 1..=depth.
    Vqe {
        #[command(flatten)]
        physics: Physics,
        #[arg(long)]
        depth: Option<usize>,
        #[arg(long, conflicts_with = "exact")]
        shots: Option<u64>,
        #[arg(long)]
        exact: bool,
        #[arg(long)]
        restarts: Option<usize>,
    },
    /// Minima hopping by phase estimation.
    QpeHop {
        #[command(flatten)]
        physics: Physics,
        #[arg(long, value_enum)]
        model: Option<QpeModel>,
        #[arg(long)]
        ns: Option<usize>,
        #[arg(long)]
        j: Option<f64>,
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long)]
        neps: Option<usize>,
        #[arg(long)]
        shots: Option<usize>,
        /// Base evolution time.
        #[arg(long)]
        t: Option<f64>,
        #[arg(long)]
        trotter_steps: Option<usize>,
    },
    /// Langevin, hybrid, or side-by-side sampling of the Boltzmann density.
    Sample {
        #[command(flatten)]
        physics: Physics,
        #[arg(long, value_enum)]
        mode: Option<SampleMode>,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        local_steps: Option<usize>,
        /// Counting qubits of the global moves (overrides the resolution).
        #[arg(long)]
        neps: Option<usize>,
        /// Metropolis-adjust the local steps.
        #[arg(long)]
        mh: bool,
        #[arg(long)]
        record_every: Option<usize>,
    },
    /// Reaction current `ψ₀ ψ₀ˢ` on the grid.
    Current {
        #[command(flatten)]
        physics: Physics,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Spectrum { .. } => "spectrum",
            Command::Rate { .. } => "rate",
            Command::Vqe { .. } => "vqe",
            Command::QpeHop { .. } => "qpe-hop",
            Command::Sample { .. } => "sample",
            Command::Current { .. } => "current",
        }
    }

    fn physics(&self) -> &Physics {
        match self {
            Command::Spectrum { physics, .. }
            | Command::Rate { physics }
            | Command::Vqe { physics, .. }
            | Command::QpeHop { physics, .. }
            | Command::Sample { physics, .. }
            | Command::Current { physics } => physics,
        }
    }
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn apply_flags(cfg: &mut RunConfig, cli: &Cli) -> anyhow::Result<()> {
    set(&mut cfg.seed, cli.seed);
    let ph = cli.command.physics();
    if let Some(t) = ph.temperature {
        cfg.temperature = Temperature::new(t)?;
    }
    if ph.n.is_some() || ph.box_length.is_some() {
        cfg.grid = Grid::new(
            ph.n.unwrap_or(cfg.grid.n_qubits()),
            ph.box_length.unwrap_or(cfg.grid.length()),
        )?;
    }
    match &cli.command {
        Command::Spectrum { states, .. } => set(&mut cfg.spectrum.states, *states),
        Command::Vqe {
            depth,
            shots,
            exact,
            restarts,
            ..
        } => {
            set(&mut cfg.vqe.depth, *depth);
            set(&mut cfg.vqe.restarts, *restarts);
            if *exact {
                cfg.vqe.shots = None;
            } else if shots.is_some() {
                cfg.vqe.shots = *shots;
            }
        }
        Command::QpeHop {
            model,
            ns,
            j,
            gamma,
            neps,
            shots,
            t,
            trotter_steps,
            ..
        } => {
            let q = &mut cfg.qpe;
            set(&mut q.model, *model);
            set(&mut q.ns, *ns);
            set(&mut q.j, *j);
            set(&mut q.gamma, *gamma);
            set(&mut q.n_eps, *neps);
            set(&mut q.shots, *shots);
            if t.is_some() {
                q.t = *t;
            }
            if trotter_steps.is_some() {
                q.trotter_steps = *trotter_steps;
            }
        }
        Command::Sample {
            mode,
            dt,
            steps,
            epochs,
            local_steps,
            neps,
            mh,
            record_every,
            ..
        } => {
            let s = &mut cfg.sampler;
            set(&mut s.mode, *mode);
            if dt.is_some() {
                s.dt = *dt;
            }
            set(&mut s.steps, *steps);
            set(&mut s.epochs, *epochs);
            set(&mut s.local_steps, *local_steps);
            if let Some(n_eps) = neps {
                s.resolution = Resolution::Manual {
                    n_eps: *n_eps,
                    time: None,
                };
            }
            s.mh |= *mh;
            set(&mut s.record_every, *record_every);
        }
        Command::Rate { .. } | Command::Current { .. } => {}
    }
    if let Ok(raw) = std::env::var("RSQ_SEED") {
        cfg.seed = raw
            .trim()
            .parse()
            .with_context(|| format!("RSQ_SEED is not an unsigned integer: {raw:?}"))?;
    }
    Ok(())
}

#[derive(Serialize)]
struct Manifest<'a> {
    version: &'a str,
    command: &'a str,
    seed: u64,
    config: &'a RunConfig,
    files: Vec<String>,
}

/// Failure with its exit code: 2 for configuration, 3 for numerics, 1 for IO.
struct Failure(u8, anyhow::Error);

fn is_config_error(e: &rsq::Error) -> bool {
    use rsq::Error::*;
    match e {
        InvalidParameter(_)
        | IndexOutOfRange { .. }
        | NotDoubleWell
        | LengthMismatch { .. }
        | OutsideBox { .. }
        | DimensionTooLarge { .. }
        | Aliasing { .. }
        | ChainTooShort { .. } => true,
        NonHermitian { .. } | ZeroNorm | Numeric(_) => false,
    }
}

fn classify(err: anyhow::Error) -> Failure {
    let config = err
        .chain()
        .find_map(|c| c.downcast_ref::<rsq::Error>())
        .is_some_and(is_config_error);
    Failure(if config { 2 } else { 3 }, err)
}

fn run(cli: Cli) -> Result<(), Failure> {
    let command = cli.command.name();
    let cfg = (|| {
        let mut cfg = RunConfig::load(cli.config.as_deref())?;
        apply_flags(&mut cfg, &cli)?;
        cfg.validate()?;
        Ok(cfg)
    })()
    .map_err(|e| Failure(2, e))?;

    if let Some(threads) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| Failure(2, e.into()))?;
    }

    let mut out = Outputs::default();
    let computed = match &cli.command {
        Command::Spectrum { .. } => commands::spectrum(&cfg, &mut out),
        Command::Rate { .. } => commands::rate(&cfg, &mut out),
        Command::Vqe { .. } => commands::vqe(&cfg, &mut out),
        Command::QpeHop { .. } => commands::qpe_hop(&cfg, &mut out),
        Command::Sample { .. } => commands::sample(&cfg, &mut out),
        Command::Current { .. } => commands::current(&cfg, &mut out),
    };
    computed.map_err(classify)?;

    let mut files = out.names();
    files.push("manifest.json".into());
    let manifest = Manifest {
        version: VERSION,
        command,
        seed: cfg.seed,
        config: &cfg,
        files,
    };
    out.json("manifest.json", &manifest).map_err(|e| Failure(3, e))?;
    out.write_all(&cli.out).map_err(|e| Failure(1, e))?;
    eprintln!("{command}: wrote {} files to {}", out.names().len(), cli.out.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure(code, err)) => {
            eprintln!("error: {err:#}");
            ExitCode::from(code)
        }
    }
}
