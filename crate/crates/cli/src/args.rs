use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use clbench::PromptMode;
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(name = "clbench", version, about = "Meta-referential game benchmark and exact statistics")]
pub struct Cli {
    /// More log output on stderr (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate episodes (structures, codes, schedules) and reference transcripts.
    Gen(EpisodeArgs),
    /// Play episodes against a listener backend and score them.
    Eval(EvalArgs),
    /// Run the three prompting configurations and tabulate ZSCT.
    Ablate(EvalArgs),
    /// Exact permutation statistics over a model table.
    Stats(StatsArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    /// Rule-based verbalizer.
    Oracle,
    /// Fair coin.
    Random,
    /// Chat-completion endpoint.
    Lm,
    /// Canned responses from a file or an earlier run directory.
    Scripted,
}

#[derive(Debug, Clone, Default, Args)]
pub struct EpisodeArgs {
    /// TOML file with defaults for any of these flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Run directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Number of seeds.
    #[arg(long)]
    pub seeds: Option<usize>,
    /// First seed.
    #[arg(long)]
    pub seed_base: Option<u64>,
    #[arg(long)]
    pub n_dim: Option<usize>,
    #[arg(long)]
    pub v_min: Option<usize>,
    #[arg(long)]
    pub v_max: Option<usize>,
    /// Supporting shots per latent value.
    #[arg(long)]
    pub s_shots: Option<usize>,
    /// Held-out combinations per episode.
    #[arg(long)]
    pub n_test: Option<usize>,
    #[arg(long)]
    pub vocab_size: Option<u32>,
    /// Category registry (JSON object of category -> items).
    #[arg(long)]
    pub registry: Option<PathBuf>,
    /// scs-0shot, cat-0shot or cat-10shot.
    #[arg(long)]
    pub mode: Option<PromptMode>,
    /// Episodes run concurrently.
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub episode: EpisodeArgs,
    #[arg(long, value_enum)]
    pub backend: Option<BackendKind>,
    /// Script file (JSON: episode id -> game -> response) or a run directory
    /// whose logged responses are replayed.
    #[arg(long)]
    pub script: Option<PathBuf>,
    /// Play episodes from a `gen` run directory instead of generating them.
    #[arg(long)]
    pub from: Option<PathBuf>,
    #[arg(long)]
    pub base_url: Option<String>,
    #[arg(long)]
    pub model: Option<String>,
    /// Name of the environment variable holding the API key.
    #[arg(long)]
    pub api_key_env: Option<String>,
    #[arg(long)]
    pub temperature: Option<f64>,
    #[arg(long)]
    pub max_tokens: Option<u32>,
    #[arg(long)]
    pub max_retries: Option<u32>,
    /// On-disk response cache (temperature 0 only).
    #[arg(long)]
    pub cache_dir: Option<PathBuf>,
    #[arg(long)]
    pub requests_per_minute: Option<u32>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct StatsArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// CSV with columns name,size_b,adj_zsct,minif2f (default: bundled table).
    #[arg(long)]
    pub records: Option<PathBuf>,
    /// Tail size (default: records scoring above 75 on the benchmark).
    #[arg(long, conflicts_with = "tail")]
    pub tail_k: Option<usize>,
    /// Explicit comma-separated tail, for tables with ties at the cut.
    #[arg(long, value_delimiter = ',')]
    pub tail: Option<Vec<String>>,
    /// Enumerate on one thread.
    #[arg(long)]
    pub sequential: bool,
}
