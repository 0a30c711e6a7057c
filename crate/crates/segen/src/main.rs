use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use segen::config::{self, RunConfig};
use segen::error::StageExt;
use segen::{pipeline, RunError};
use segen_core::rng::from_seed;
use segen_core::synth::stochastic_block_model;

/// Sample-ensemble network embedding.
#[derive(Parser)]
#[command(name = "segen", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build and dump one sub-network pool per strategy.
    Sample(RunArgs),
    /// Evolve unit models and write node embeddings.
    Train(RunArgs),
    /// Score existing embeddings.
    Eval(RunArgs),
    /// Sample, train and evaluate.
    Run(RunArgs),
    /// Write a stochastic block model edge list.
    Synth(SynthArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Flat `key = value` file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Named parameter setting: ps1 to ps5.
    #[arg(long)]
    preset: Option<String>,
    /// Overrides as `--key value` pairs.
    #[arg(trailing_var_arg = true, allow_hyphen_values = true, value_name = "--KEY VALUE")]
    overrides: Vec<String>,
}

#[derive(Args)]
struct SynthArgs {
    /// Comma-separated block sizes.
    #[arg(long, default_value = "150,150")]
    blocks: String,
    #[arg(long, default_value_t = 0.1)]
    p_in: f64,
    #[arg(long, default_value_t = 0.01)]
    p_out: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

impl RunArgs {
    /// `--config` and `--preset` may also appear among the overrides.
    fn resolve(self) -> Result<RunConfig, RunError> {
        let mut file = self.config;
        let mut preset = self.preset;
        let mut rest = Vec::new();
        let mut it = self.overrides.into_iter();
        while let Some(arg) = it.next() {
            let (name, inline) = match arg.split_once('=') {
                Some((n, v)) => (n.to_string(), Some(v.to_string())),
                None => (arg.clone(), None),
            };
            if name == "--config" || name == "--preset" {
                let value = match inline {
                    Some(v) => v,
                    None => it.next().ok_or_else(|| RunError::usage(format!("{name} needs a value")))?,
                };
                if name == "--config" {
                    file = Some(PathBuf::from(value));
                } else {
                    preset = Some(value);
                }
            } else {
                rest.push(arg);
            }
        }
        config::resolve(preset.as_deref(), file.as_deref(), &rest)
    }
}

fn synth(args: SynthArgs) -> Result<(), RunError> {
    let sizes = args
        .blocks
        .split(',')
        .map(|s| s.trim().parse::<usize>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| RunError::usage(format!("blocks: {e}")))?;
    let graph = stochastic_block_model(&sizes, args.p_in, args.p_out, &mut from_seed(args.seed))
        .stage("synth")?;
    let mut out = format!(
        "# stochastic block model: blocks={} p_in={} p_out={} seed={}\n",
        args.blocks, args.p_in, args.p_out, args.seed
    );
    for (u, v) in graph.edges() {
        out.push_str(&format!("{u} {v}\n"));
    }
    std::fs::write(&args.out, out).map_err(|e| RunError::data("synth", &args.out, e))
}

type Stage = fn(&RunConfig) -> Result<(), RunError>;

fn dispatch(command: Command) -> Result<(), RunError> {
    let (args, which): (RunArgs, Stage) = match command {
        Command::Synth(args) => return synth(args),
        Command::Sample(a) => (a, pipeline::cmd_sample),
        Command::Train(a) => (a, |c| pipeline::cmd_train(c).map(drop)),
        Command::Eval(a) => (a, |c| pipeline::cmd_eval(c).map(drop)),
        Command::Run(a) => (a, |c| pipeline::run_experiment(c).map(drop)),
    };
    let cfg = args.resolve()?;
    pipeline::configure_threads(cfg.threads);
    which(&cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("segen: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
