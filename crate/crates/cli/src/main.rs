//! `retrobleu`: batch database builds, route scoring, ranking evaluation and
//! n-gram mining.

mod commands;
mod config;
mod failure;
mod inputs;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::commands::{BuildDbArgs, EvalArgs, MineArgs, ScoreArgs, StatsArgs};

#[derive(Debug, Parser)]
#[command(
    name = "retrobleu",
    version,
    about = "Score retrosynthesis routes by n-gram overlap with known routes"
)]
struct Cli {
    /// Worker threads (0 = one per core).
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,

    /// Config file (TOML); flags override its values.
    #[arg(long, global = true, env = "RETROBLEU_CONFIG")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build a known n-gram database from route files, or merge shard databases.
    BuildDb(BuildDbArgs),
    /// Score routes with Retro-BLEU and the baseline metrics.
    Score(ScoreArgs),
    /// Rank reference routes among candidates and report top-k accuracy.
    Eval(EvalArgs),
    /// List frequent known n-grams and frequent generated-only n-grams.
    MineBigrams(MineArgs),
    /// Corpus overlap statistics against one or more databases.
    Stats(StatsArgs),
}

fn main() -> ExitCode {
    // Usage errors share exit code 1 with other bad input; 2 is kept for I/O.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    if cli.jobs > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.jobs)
            .build_global()
        {
            failure::warn(format!("could not size worker pool: {e}"));
        }
    }
    let config = cli.config.as_deref();
    let result = match &cli.command {
        Command::BuildDb(args) => commands::build_db(args, config),
        Command::Score(args) => commands::score(args, config),
        Command::Eval(args) => commands::eval(args, config),
        Command::MineBigrams(args) => commands::mine_bigrams(args),
        Command::Stats(args) => commands::stats(args, config),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code)
        }
    }
}
