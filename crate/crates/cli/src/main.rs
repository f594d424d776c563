//! `jcctl` command-line interface.
//!
//! Every command writes one report (JSON, or CSV for `sweep`) to stdout or
//! `--output`. Exit status: 0 success, 1 invalid input, 2 search or budget
//! exhausted (the report then carries the diagnostic).

mod commands;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use jcctl::{Error, KCache};

#[derive(Debug, Parser)]
#[command(name = "jcctl", version, about = "Carrier and red-sideband control of a spin coupled to an oscillator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Json,
    Csv,
}

/// Options shared by every subcommand; echoed into each report.
#[derive(Debug, Clone, Args, Serialize)]
struct RunConfig {
    /// Highest controlled phonon level; the controlled dimension is 2(m+1).
    #[arg(long, default_value_t = 1)]
    m: usize,
    /// Angle tolerance for k-searches and macro splitting.
    #[arg(long, default_value_t = 1e-3)]
    epsilon: f64,
    /// Compilation tolerance (operator-norm budget).
    #[arg(long, default_value_t = 1e-3)]
    tolerance: f64,
    #[arg(long, default_value_t = jcctl::arithmetic::DEFAULT_K_MAX)]
    k_max: u64,
    /// Seed for random targets and sampled sequences.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Persistent k-search cache.
    #[arg(long = "cache", env = "JC_CACHE")]
    cache_path: Option<PathBuf>,
    /// Report destination; stdout when omitted.
    #[arg(long = "output")]
    output_path: Option<PathBuf>,
    /// Report format; `sweep` defaults to CSV, everything else to JSON.
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Control generators on the controlled subspace.
    Model {
        #[command(flatten)]
        cfg: RunConfig,
    },
    /// Dynamical Lie algebra dimension of the four drives.
    Closure {
        #[command(flatten)]
        cfg: RunConfig,
        /// Add `D H₁ D` for the boundary sign flip `D` of the odd restricted pulse.
        #[arg(long)]
        augment: bool,
    },
    /// Squarefree-core partition of levels 1..=m.
    Groups {
        #[command(flatten)]
        cfg: RunConfig,
    },
    /// Smallest restricted red pulse index meeting the angle constraints.
    Findk {
        #[command(flatten)]
        cfg: RunConfig,
        /// Target group core; omit to hold every level near zero.
        #[arg(long)]
        core: Option<u64>,
        /// Target angle of the core level, radians.
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        target: f64,
        #[arg(long, value_enum, default_value_t = ParityArg::Even)]
        parity: ParityArg,
    },
    /// Pulse macro for a limit generator.
    Macro {
        #[command(flatten)]
        cfg: RunConfig,
        #[arg(long, value_enum, default_value_t = MacroKind::Group)]
        kind: MacroKind,
        #[arg(long, default_value_t = 1)]
        core: u64,
        /// Core-level angle for `group`, evolution time otherwise.
        #[arg(long, default_value_t = 0.5, allow_hyphen_values = true)]
        alpha: f64,
    },
    /// Exact commutator cascades and the assembled basis.
    Chains {
        #[command(flatten)]
        cfg: RunConfig,
        #[arg(long, value_enum, default_value_t = ChainKind::S)]
        which: ChainKind,
    },
    /// Compile a target unitary into pulses.
    Compile {
        #[command(flatten)]
        cfg: RunConfig,
        /// `swap01`, `fourier`, or a JSON file of [re, im] rows; a seeded random SU(N) when omitted.
        #[arg(long)]
        target: Option<String>,
        /// Pulse budget.
        #[arg(long, alias = "budget", default_value_t = 1_000_000)]
        max_pulses: usize,
    },
    /// Propagate a pulse sequence and report leakage and fidelity.
    Simulate {
        #[command(flatten)]
        cfg: RunConfig,
        /// JSON array of pulses.
        #[arg(long)]
        pulses: PathBuf,
        /// Target for the fidelity; identity when omitted.
        #[arg(long)]
        target: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        buffer: usize,
    },
    /// Self-checks at the given cutoff; exit 2 if any fails.
    Verify {
        #[command(flatten)]
        cfg: RunConfig,
    },
    /// Convergence table over an epsilon (and k_max) grid.
    Sweep {
        #[command(flatten)]
        cfg: RunConfig,
        #[arg(long, value_delimiter = ',', required = true)]
        epsilons: Vec<f64>,
        #[arg(long, value_delimiter = ',')]
        k_maxes: Vec<u64>,
        #[arg(long, default_value_t = 1)]
        core: u64,
        #[arg(long, default_value_t = 0.5, allow_hyphen_values = true)]
        alpha: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum ParityArg {
    Any,
    Even,
    Odd,
}

impl From<ParityArg> for jcctl::Parity {
    fn from(p: ParityArg) -> Self {
        match p {
            ParityArg::Any => jcctl::Parity::Any,
            ParityArg::Even => jcctl::Parity::Even,
            ParityArg::Odd => jcctl::Parity::Odd,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum MacroKind {
    Group,
    H5,
    H6,
    H7,
    H8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum ChainKind {
    M,
    J,
    S,
    Basis,
}

/// Command output before rendering.
pub struct Report {
    body: serde_json::Value,
    /// Preformatted CSV, for commands that emit tables.
    csv: Option<String>,
    /// True when the command hit a search or budget limit.
    exhausted: bool,
}

impl Report {
    fn ok(body: impl Serialize) -> Result<Self, Error> {
        Ok(Report {
            body: serde_json::to_value(body)?,
            csv: None,
            exhausted: false,
        })
    }
}

fn is_exhaustion(e: &Error) -> bool {
    matches!(
        e,
        Error::KNotFound(_) | Error::PowerNotFound { .. } | Error::BudgetExhausted(_) | Error::NotIsolable(_)
    )
}

fn diagnostic(e: &Error) -> serde_json::Value {
    let mut d = serde_json::json!({ "error": e.to_string() });
    if let Error::KNotFound(nf) = e {
        d["k_max"] = nf.k_max.into();
        d["best"] = serde_json::to_value(&nf.best).unwrap_or_default();
    }
    d
}

fn run(command: Command) -> (RunConfig, Result<Report, Error>) {
    let mut cfg = match &command {
        Command::Model { cfg }
        | Command::Closure { cfg, .. }
        | Command::Groups { cfg }
        | Command::Findk { cfg, .. }
        | Command::Macro { cfg, .. }
        | Command::Chains { cfg, .. }
        | Command::Compile { cfg, .. }
        | Command::Simulate { cfg, .. }
        | Command::Verify { cfg }
        | Command::Sweep { cfg, .. } => cfg.clone(),
    };
    if cfg.format.is_none() {
        let default = if matches!(command, Command::Sweep { .. }) { Format::Csv } else { Format::Json };
        cfg.format = Some(default);
    }
    let cache = Arc::new(match &cfg.cache_path {
        Some(p) => KCache::open(p),
        None => KCache::in_memory(),
    });
    let result = match command {
        Command::Model { cfg } => commands::model(&cfg),
        Command::Closure { cfg, augment } => commands::closure(&cfg, augment),
        Command::Groups { cfg } => commands::groups(&cfg),
        Command::Findk {
            cfg,
            core,
            target,
            parity,
        } => commands::findk(&cfg, &cache, core, target, parity.into()),
        Command::Macro { cfg, kind, core, alpha } => commands::macro_(&cfg, &cache, kind, core, alpha),
        Command::Chains { cfg, which } => commands::chains(&cfg, which),
        Command::Compile { cfg, target, max_pulses } => commands::compile(&cfg, &cache, target.as_deref(), max_pulses),
        Command::Simulate {
            cfg,
            pulses,
            target,
            buffer,
        } => commands::simulate(&cfg, &pulses, target.as_deref(), buffer),
        Command::Verify { cfg } => commands::verify(&cfg, &cache),
        Command::Sweep {
            cfg,
            epsilons,
            k_maxes,
            core,
            alpha,
        } => commands::sweep(&cfg, &cache, &epsilons, &k_maxes, core, alpha),
    };
    if let Err(e) = cache.flush() {
        log::warn!("could not write the k-search cache: {e}");
    }
    (cfg, result)
}

fn emit(cfg: &RunConfig, text: &str) -> std::io::Result<()> {
    match &cfg.output_path {
        Some(p) => std::fs::write(p, text),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let (cfg, result) = run(cli.command);
    let (body, csv, code) = match result {
        Ok(r) => {
            let code = if r.exhausted { 2 } else { 0 };
            (r.body, r.csv, code)
        }
        Err(e) => {
            eprintln!("jcctl: {e}");
            let code = if is_exhaustion(&e) { 2 } else { 1 };
            if code == 1 {
                return ExitCode::from(1);
            }
            (diagnostic(&e), None, code)
        }
    };
    let text = match (cfg.format, csv) {
        (Some(Format::Csv), Some(csv)) => csv,
        _ => {
            let report = serde_json::json!({ "config": &cfg, "result": body });
            let mut s = serde_json::to_string_pretty(&report).expect("report serializes");
            s.push('\n');
            s
        }
    };
    if let Err(e) = emit(&cfg, &text) {
        eprintln!("jcctl: cannot write report: {e}");
        return ExitCode::from(1);
    }
    ExitCode::from(code)
}
