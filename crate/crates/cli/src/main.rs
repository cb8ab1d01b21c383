mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::Ctx;
use config::{parse_override, RunConfig};
use error::CliError;

#[derive(Parser)]
#[command(name = "emograph", version, about = "Emotion recognition from image captions via context graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// Run configuration file (flat `key = value` lines).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory for all artifacts.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Accept upstream artifacts produced under a different config.
    #[arg(long, global = true)]
    force: bool,
    /// Override a config key; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", value_parser = parse_override, global = true)]
    set: Vec<(String, String)>,
}

#[derive(Subcommand)]
enum Command {
    /// Normalize the caption splits into corpus.json.
    Preprocess,
    /// Count word/emotion and word/word co-occurrences on the train split.
    Mine,
    /// Build one context graph per caption.
    BuildGraphs,
    /// Train the graph classifier.
    Train,
    /// Mean average precision on the test split.
    Eval,
    /// Predict emotions for free text.
    Infer {
        /// Caption text; repeatable.
        #[arg(long)]
        text: Vec<String>,
        /// Caption file: JSONL captions, or one caption per line.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Predictions file (default: <out>/predictions.jsonl).
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Per-caption inference latency on the test split.
    Bench,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut overrides = cli.common.set.clone();
    if let Some(s) = cli.common.seed {
        overrides.push(("seed".into(), s.to_string()));
    }
    if let Some(t) = cli.common.threads {
        overrides.push(("threads".into(), t.to_string()));
    }
    if let Some(o) = &cli.common.out {
        overrides.push(("out".into(), o.to_string_lossy().into_owned()));
    }
    let ctx = Ctx {
        cfg: RunConfig::load(cli.common.config.as_deref(), &overrides)?,
        force: cli.common.force,
    };
    match &cli.command {
        Command::Preprocess => commands::preprocess(&ctx),
        Command::Mine => commands::mine(&ctx),
        Command::BuildGraphs => commands::build_graphs(&ctx),
        Command::Train => commands::train_cmd(&ctx),
        Command::Eval => commands::eval(&ctx),
        Command::Infer { text, input, output } => {
            commands::infer(&ctx, text, input.as_deref(), output.as_deref())
        }
        Command::Bench => commands::bench(&ctx),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => {
            let first = e.to_string().lines().next().unwrap_or("invalid arguments").to_string();
            let msg = first.trim_start_matches("error: ").to_string();
            eprintln!("{}", CliError::usage(msg).to_line());
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_line());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
