//! Argument parsing and dispatch.
//!
//! Precedence is flags, then the config file, then study defaults.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::{Overrides, StudyConfig};
use crate::error::{LabError, Result};
use crate::output::Emitted;
use crate::run::{Command, Run};

#[derive(Debug, Parser)]
#[command(name = "slr-lab", version, about = "Seeded LR versus SLR studies")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Debug, Subcommand)]
enum Sub {
    /// Exact log LR and log SLR on a grid over [-2, 2]^2
    Contour(Common),
    /// log SLR - log LR per sample under each hypothesis
    Hist(Common),
    /// Verbal-scale bin agreement heatmaps and overall agreement
    Bins(Common),
    /// Random forest scores, KDE SLRs and Markov bound table
    RfStudy(RfArgs),
    /// Bound checks over all score and density settings
    Bounds(Common),
    /// Score-level KL divergence against the raw-data divergence
    Kl(Common),
    /// Every study with the built-in models
    All(RfArgs),
}

#[derive(Debug, Args)]
struct Common {
    /// JSON study configuration
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Master seed
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,
    /// Output root; studies write to <DIR>/<study>/
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker thread cap; results do not depend on it
    #[arg(long, value_name = "N", value_parser = clap::value_parser!(u64).range(1..))]
    threads: Option<u64>,
    /// Training pairs for forest studies, split evenly between hypotheses
    #[arg(long, value_name = "N", value_parser = clap::value_parser!(u64).range(1..))]
    n_train: Option<u64>,
    /// Evaluation samples per hypothesis
    #[arg(long, value_name = "N", value_parser = clap::value_parser!(u64).range(1..))]
    n_eval: Option<u64>,
}

#[derive(Debug, Args)]
struct RfArgs {
    #[command(flatten)]
    common: Common,
    /// Also write each trained forest as forest.json
    #[arg(long)]
    save_forest: bool,
}

/// Parses `args` (program name first), runs the subcommand and returns the
/// process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let mut emitted = Vec::new();
    let result = dispatch(cli, &mut emitted);
    // files written before a failure are still reported
    for e in &emitted {
        println!("{e}");
    }
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("slr-lab: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cli: Cli, emitted: &mut Vec<Emitted>) -> Result<()> {
    let (cmd, common, save_forest) = match cli.command {
        Sub::Contour(c) => (Command::Contour, c, false),
        Sub::Hist(c) => (Command::Hist, c, false),
        Sub::Bins(c) => (Command::Bins, c, false),
        Sub::RfStudy(a) => (Command::RfStudy, a.common, a.save_forest),
        Sub::Bounds(c) => (Command::Bounds, c, false),
        Sub::Kl(c) => (Command::Kl, c, false),
        Sub::All(a) => (Command::All, a.common, a.save_forest),
    };
    let mut cfg = match &common.config {
        Some(p) => StudyConfig::from_path(p)?,
        None => StudyConfig::default(),
    };
    let size = |v: Option<u64>| v.map(|n| n as usize);
    cfg.apply(&Overrides {
        seed: common.seed,
        out: common.out,
        threads: size(common.threads),
        n_train: size(common.n_train),
        n_eval: size(common.n_eval),
    });
    let threads = cfg.threads;
    let mut run = Run::new(cfg, save_forest);
    let result = match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| LabError::config("threads", e.to_string()))?
            .install(|| run.execute(cmd)),
        None => run.execute(cmd),
    };
    emitted.append(&mut run.emitted);
    result
}
