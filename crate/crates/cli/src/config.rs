//! Flag/config-file resolution. Flags win over the file, the file wins over
//! built-in defaults.

use std::path::{Path, PathBuf};

use clbench::gateway::BackendConfig;
use clbench::{EpisodeConfig, PromptMode};
use serde::{Deserialize, Serialize};

use crate::args::{BackendKind, EpisodeArgs, EvalArgs, StatsArgs};
use crate::error::CliError;

pub const DEFAULT_SEEDS: usize = 8;

/// Optional `[lm]` table of a config file. Keys only; the secret itself is
/// read from the named environment variable.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LmFile {
    pub base_url: Option<String>,
    pub model: Option<String>,
    pub api_key_env: Option<String>,
    pub temperature: Option<f64>,
    pub max_tokens: Option<u32>,
    pub max_retries: Option<u32>,
    pub backoff_ms: Option<u64>,
    pub timeout_secs: Option<u64>,
    pub requests_per_minute: Option<u32>,
    pub cache_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub seeds: Option<usize>,
    pub seed_base: Option<u64>,
    pub n_dim: Option<usize>,
    pub v_min: Option<usize>,
    pub v_max: Option<usize>,
    pub s_shots: Option<usize>,
    pub n_test: Option<usize>,
    pub vocab_size: Option<u32>,
    pub registry: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub mode: Option<String>,
    pub workers: Option<usize>,
    pub backend: Option<BackendKind>,
    pub script: Option<PathBuf>,
    pub records: Option<PathBuf>,
    pub tail_k: Option<usize>,
    pub tail: Option<Vec<String>>,
    pub lm: Option<LmFile>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }
}

/// Everything an episode-level command needs, after merging.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSettings {
    /// Template config; the seed is replaced per episode.
    pub episode: EpisodeConfig,
    pub seeds: Vec<u64>,
    pub mode: PromptMode,
    pub backend: BackendKind,
    pub workers: usize,
    pub registry: Option<PathBuf>,
    pub script: Option<PathBuf>,
    pub from: Option<PathBuf>,
    pub lm: Option<BackendConfig>,
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

impl RunSettings {
    /// Config for one seed, adjusted to the prompting mode.
    pub fn episode_config(&self, seed: u64, mode: PromptMode) -> EpisodeConfig {
        mode.configure(&EpisodeConfig {
            seed,
            ..self.episode.clone()
        })
    }
}

fn pick<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

pub fn resolve_episode(args: &EpisodeArgs, file: &FileConfig) -> Result<RunSettings, CliError> {
    let d = EpisodeConfig::default();
    let mode = match (&args.mode, &file.mode) {
        (Some(m), _) => *m,
        (None, Some(s)) => s.parse().map_err(CliError::Config)?,
        (None, None) => PromptMode::Cat0Shot,
    };
    let episode = EpisodeConfig {
        n_dim: pick(args.n_dim, file.n_dim, d.n_dim),
        v_min: pick(args.v_min, file.v_min, d.v_min),
        v_max: pick(args.v_max, file.v_max, d.v_max),
        s_shots: pick(args.s_shots, file.s_shots, d.s_shots),
        n_test: pick(args.n_test, file.n_test, d.n_test),
        vocab_size: pick(args.vocab_size, file.vocab_size, d.vocab_size),
        domain: mode.domain(),
        ..d
    };
    episode.validate().map_err(|e| CliError::Config(e.to_string()))?;
    let n_seeds = pick(args.seeds, file.seeds, DEFAULT_SEEDS);
    if n_seeds == 0 {
        return Err(CliError::Config("--seeds must be at least 1".into()));
    }
    let base = pick(args.seed_base, file.seed_base, 0);
    let workers = pick(args.workers, file.workers, 1);
    if workers == 0 {
        return Err(CliError::Config("--workers must be at least 1".into()));
    }
    Ok(RunSettings {
        episode,
        seeds: (base..base + n_seeds as u64).collect(),
        mode,
        backend: BackendKind::Oracle,
        workers,
        registry: args.registry.clone().or_else(|| file.registry.clone()),
        script: None,
        from: None,
        lm: None,
        out: args.out.clone().or_else(|| file.out.clone()),
    })
}

pub fn resolve_eval(args: &EvalArgs) -> Result<RunSettings, CliError> {
    let file = FileConfig::load(args.episode.config.as_deref())?;
    let mut settings = resolve_episode(&args.episode, &file)?;
    settings.backend = pick(args.backend, file.backend, BackendKind::Oracle);
    settings.script = args.script.clone().or_else(|| file.script.clone());
    settings.from = args.from.clone();
    if settings.backend == BackendKind::Scripted && settings.script.is_none() {
        return Err(CliError::Config("--backend scripted needs --script".into()));
    }
    if settings.backend == BackendKind::Lm {
        let lm = file.lm.clone().unwrap_or_default();
        let d = BackendConfig::default();
        let cfg = BackendConfig {
            base_url: pick(args.base_url.clone(), lm.base_url, d.base_url),
            model_id: pick(args.model.clone(), lm.model, d.model_id),
            api_key_env: pick(args.api_key_env.clone(), lm.api_key_env, d.api_key_env),
            temperature: pick(args.temperature, lm.temperature, d.temperature),
            max_tokens: pick(args.max_tokens, lm.max_tokens, d.max_tokens),
            max_retries: pick(args.max_retries, lm.max_retries, d.max_retries),
            parallel_episodes: settings.workers,
            cache_dir: args.cache_dir.clone().or(lm.cache_dir),
            backoff_ms: lm.backoff_ms.unwrap_or(d.backoff_ms),
            requests_per_minute: args.requests_per_minute.or(lm.requests_per_minute),
            timeout_secs: lm.timeout_secs.unwrap_or(d.timeout_secs),
        };
        cfg.validate().map_err(|e| CliError::Config(e.to_string()))?;
        settings.lm = Some(cfg);
    }
    Ok(settings)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatsSettings {
    pub records: Option<PathBuf>,
    pub tail_k: Option<usize>,
    pub tail: Option<Vec<String>>,
    pub sequential: bool,
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

pub fn resolve_stats(args: &StatsArgs) -> Result<StatsSettings, CliError> {
    let file = FileConfig::load(args.config.as_deref())?;
    let tail = args.tail.clone().or(file.tail);
    let tail_k = args.tail_k.or(if tail.is_some() { None } else { file.tail_k });
    Ok(StatsSettings {
        records: args.records.clone().or(file.records),
        tail_k,
        tail,
        sequential: args.sequential,
        out: args.out.clone().or(file.out),
    })
}
