use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clbench::domain::CategoryRegistry;
use clbench::episode::{
    play_episode, prepare_episode, EpisodeLog, EpisodeRun, Listener, OracleListener,
    PreparedEpisode, RandomListener,
};
use clbench::gateway::{script_from_log, ChatClient, LmListener, Script, ScriptedListener};
use clbench::parallel::{map_bounded, Exec};
use clbench::prompt::PromptMode;
use clbench::scoring::{adjust_zsct, aggregate, compute_zsct, SeedResult};
use clbench::stats::{default_records, load_model_records, run_stats, scatter_csv, TailSpec};
use serde::Serialize;

use crate::args::{BackendKind, EpisodeArgs, EvalArgs, StatsArgs};
use crate::config::{resolve_episode, resolve_eval, resolve_stats, FileConfig, RunSettings};
use crate::error::CliError;
use crate::manifest::{sha256_hex, RunManifest};

/// What a command produced.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub run_dir: PathBuf,
    /// Human-readable report, also written to `report.txt`.
    pub report: String,
    /// Requests that reached a chat endpoint.
    pub network_requests: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ModeSummary {
    pub mode: PromptMode,
    pub n_seeds: usize,
    pub mean_zsct: f64,
    /// `None` with a single seed.
    pub stderr_zsct: Option<f64>,
    pub adj_zsct: f64,
    pub network_requests: u64,
    pub cache_hits: u64,
    pub per_seed: Vec<SeedResult>,
}

fn episode_file(seed: u64) -> String {
    format!("seed-{seed:04}.jsonl")
}

fn to_json_value<T: Serialize>(v: &T) -> serde_json::Value {
    serde_json::to_value(v).expect("settings serialise")
}

fn load_registry(path: Option<&Path>) -> Result<CategoryRegistry, CliError> {
    match path {
        Some(p) => CategoryRegistry::load(p).map_err(|e| CliError::Config(e.to_string())),
        None => Ok(CategoryRegistry::bundled()),
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, contents)?;
    Ok(())
}

fn read_jsonl_dir<T: serde::de::DeserializeOwned>(dir: &Path) -> Result<Vec<T>, CliError> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| CliError::Config(format!("{}: {e}", dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
        .collect();
    paths.sort();
    let mut out = Vec::new();
    for path in paths {
        let text = fs::read_to_string(&path)?;
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            out.push(
                serde_json::from_str(line)
                    .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?,
            );
        }
    }
    Ok(out)
}

/// Script file, or responses logged in an earlier run directory (for an
/// ablation directory, the sub-run of the same mode).
fn load_script(path: &Path, mode: PromptMode) -> Result<Script, CliError> {
    if path.is_dir() {
        let nested = path.join(mode.as_str()).join("episodes");
        let episodes = if nested.is_dir() {
            nested
        } else {
            path.join("episodes")
        };
        let logs: Vec<EpisodeLog> = read_jsonl_dir(&episodes)?;
        return Ok(logs
            .iter()
            .map(|log| (log.episode_id.clone(), script_from_log(log)))
            .collect());
    }
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn backend_fingerprint(settings: &RunSettings) -> Result<String, CliError> {
    Ok(match settings.backend {
        BackendKind::Oracle => "oracle".into(),
        BackendKind::Random => "random".into(),
        BackendKind::Lm => format!(
            "lm:{}",
            settings.lm.as_ref().expect("lm settings resolved").fingerprint()
        ),
        BackendKind::Scripted => {
            let path = settings.script.as_ref().expect("script resolved");
            let script = load_script(path, settings.mode)?;
            format!(
                "scripted:{}",
                &sha256_hex(serde_json::to_string(&script).expect("script serialises").as_bytes())[..16]
            )
        }
    })
}

pub fn cmd_gen(args: &EpisodeArgs) -> Result<Outcome, CliError> {
    let file = FileConfig::load(args.config.as_deref())?;
    let settings = resolve_episode(args, &file)?;
    let registry = load_registry(settings.registry.as_deref())?;
    let manifest = RunManifest::new(
        "gen",
        to_json_value(&settings),
        settings.seeds.clone(),
        "oracle".into(),
    )
    .output("episodes", "episodes/")
    .output("transcripts", "transcripts/")
    .output("report", "report.txt");
    let dir = manifest.run_dir(settings.out.as_deref());
    manifest.write(&dir)?;

    let mode = settings.mode;
    let built = map_bounded(&settings.seeds, settings.workers, |&seed| {
        let prepared = prepare_episode(&settings.episode_config(seed, mode), &registry)?;
        let run = play_episode(&prepared, mode, &mut OracleListener)?;
        Ok::<_, CliError>((prepared, run))
    });
    let mut report = format!("generated {} episodes ({})\n", settings.seeds.len(), mode.as_str());
    for (seed, item) in settings.seeds.iter().zip(built) {
        let (prepared, run) = item?;
        let line = serde_json::to_string(&prepared).expect("episode serialises") + "\n";
        write_file(&dir.join("episodes").join(episode_file(*seed)), &line)?;
        write_file(
            &dir.join("transcripts").join(episode_file(*seed)),
            &run.transcript.to_jsonl(),
        )?;
        let _ = writeln!(
            report,
            "seed {seed}: {} supporting + {} querying games, categories {}",
            prepared.plans.len() - prepared.split.test.len(),
            prepared.split.test.len(),
            prepared
                .structure
                .dims
                .iter()
                .map(|d| format!("{}({})", d.category, d.d()))
                .collect::<Vec<_>>()
                .join(", ")
        );
    }
    write_file(&dir.join("report.txt"), &report)?;
    Ok(Outcome {
        run_dir: dir,
        report,
        network_requests: 0,
    })
}

fn make_client(settings: &RunSettings) -> Result<Option<ChatClient>, CliError> {
    match (&settings.backend, &settings.lm) {
        (BackendKind::Lm, Some(cfg)) => Ok(Some(ChatClient::http(cfg.clone())?)),
        _ => Ok(None),
    }
}

fn episodes_for(
    settings: &RunSettings,
    mode: PromptMode,
    registry: &CategoryRegistry,
) -> Result<Vec<PreparedEpisode>, CliError> {
    if let Some(from) = &settings.from {
        return read_jsonl_dir(&from.join("episodes"));
    }
    let prepared = map_bounded(&settings.seeds, settings.workers, |&seed| {
        prepare_episode(&settings.episode_config(seed, mode), registry)
    });
    prepared
        .into_iter()
        .map(|p| p.map_err(CliError::from))
        .collect()
}

/// Play, persist and score one mode's episodes under `dir`.
fn evaluate(
    settings: &RunSettings,
    mode: PromptMode,
    episodes: &[PreparedEpisode],
    dir: &Path,
    client: Option<&ChatClient>,
) -> Result<ModeSummary, CliError> {
    let script = match (&settings.backend, &settings.script) {
        (BackendKind::Scripted, Some(path)) => Some(load_script(path, mode)?),
        _ => None,
    };
    let requests_before = client.map_or(0, ChatClient::requests_sent);
    let hits_before = client.map_or(0, ChatClient::cache_hits);

    let runs: Vec<Result<EpisodeRun, CliError>> = map_bounded(episodes, settings.workers, |prepared| {
        let seed = prepared.config.seed;
        let id = prepared.config.episode_id();
        let mut listener: Box<dyn Listener + '_> = match settings.backend {
            BackendKind::Oracle => Box::new(OracleListener),
            BackendKind::Random => Box::new(RandomListener::new(seed)),
            BackendKind::Scripted => Box::new(ScriptedListener::for_episode(
                script.as_ref().expect("script loaded"),
                &id,
            )),
            BackendKind::Lm => Box::new(LmListener::new(client.expect("client built"))),
        };
        let run = play_episode(prepared, mode, listener.as_mut())?;
        log::info!("{id}: {} games played", run.log.games.len());
        Ok(run)
    });

    let mut per_seed = Vec::with_capacity(runs.len());
    for run in runs {
        let run = run?;
        let seed = run.log.config.seed;
        let result = compute_zsct(std::slice::from_ref(&run.log))
            .map_err(|e| CliError::Other(e.to_string()))?;
        write_file(
            &dir.join("episodes").join(episode_file(seed)),
            &(run.log.to_json_line() + "\n"),
        )?;
        write_file(
            &dir.join("transcripts").join(episode_file(seed)),
            &run.transcript.to_jsonl(),
        )?;
        write_file(
            &dir.join("results").join(format!("seed-{seed:04}.json")),
            &(serde_json::to_string_pretty(&result).expect("result serialises") + "\n"),
        )?;
        per_seed.push(result);
    }

    let (mean, stderr, adj) = if per_seed.len() >= 2 {
        let s = aggregate(&per_seed).map_err(|e| CliError::Other(e.to_string()))?;
        (s.mean_zsct, Some(s.stderr_zsct), s.adj_zsct)
    } else {
        let z = per_seed[0].zsct;
        (z, None, adjust_zsct(z).map_err(|e| CliError::Other(e.to_string()))?)
    };
    let summary = ModeSummary {
        mode,
        n_seeds: per_seed.len(),
        mean_zsct: mean,
        stderr_zsct: stderr,
        adj_zsct: adj,
        network_requests: client.map_or(0, ChatClient::requests_sent) - requests_before,
        cache_hits: client.map_or(0, ChatClient::cache_hits) - hits_before,
        per_seed,
    };
    write_file(
        &dir.join("results").join("summary.json"),
        &(serde_json::to_string_pretty(&summary).expect("summary serialises") + "\n"),
    )?;
    Ok(summary)
}

fn fmt_score(s: &ModeSummary) -> String {
    match s.stderr_zsct {
        Some(se) => format!("{:.1} ± {:.1}", s.mean_zsct, se),
        None => format!("{:.1}", s.mean_zsct),
    }
}

fn eval_report(settings: &RunSettings, s: &ModeSummary) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "mode: {}", s.mode.as_str());
    let _ = writeln!(out, "backend: {:?}", settings.backend);
    let _ = writeln!(out);
    let _ = writeln!(out, "{:>6} {:>6} {:>8} {:>9} {:>7}", "seed", "games", "correct", "unparsed", "ZSCT");
    for r in &s.per_seed {
        let _ = writeln!(
            out,
            "{:>6} {:>6} {:>8} {:>9} {:>7.1}",
            r.seed, r.games, r.correct, r.parse_failures, r.zsct
        );
    }
    let _ = writeln!(out);
    let _ = writeln!(out, "ZSCT (%): {} over {} seeds", fmt_score(s), s.n_seeds);
    let _ = writeln!(out, "adj-ZSCT (%): {:.1}", s.adj_zsct);
    let _ = writeln!(out, "network requests: {}", s.network_requests);
    if s.cache_hits > 0 {
        let _ = writeln!(out, "cache hits: {}", s.cache_hits);
    }
    out
}

pub fn cmd_eval(args: &EvalArgs) -> Result<Outcome, CliError> {
    let mut settings = resolve_eval(args)?;
    let registry = load_registry(settings.registry.as_deref())?;
    let mode = settings.mode;
    let episodes = episodes_for(&settings, mode, &registry)?;
    if episodes.is_empty() {
        return Err(CliError::Config("no episodes to evaluate".into()));
    }
    settings.seeds = episodes.iter().map(|e| e.config.seed).collect();

    let manifest = RunManifest::new(
        "eval",
        to_json_value(&settings),
        settings.seeds.clone(),
        backend_fingerprint(&settings)?,
    )
    .output("episodes", "episodes/")
    .output("transcripts", "transcripts/")
    .output("results", "results/")
    .output("report", "report.txt");
    let dir = manifest.run_dir(settings.out.as_deref());
    manifest.write(&dir)?;

    let client = make_client(&settings)?;
    let summary = evaluate(&settings, mode, &episodes, &dir, client.as_ref())?;
    let report = eval_report(&settings, &summary);
    write_file(&dir.join("report.txt"), &report)?;
    Ok(Outcome {
        run_dir: dir,
        report,
        network_requests: summary.network_requests,
    })
}

pub fn cmd_ablate(args: &EvalArgs) -> Result<Outcome, CliError> {
    if args.from.is_some() {
        return Err(CliError::Config(
            "ablate generates its own episodes per mode; --from is not supported".into(),
        ));
    }
    let settings = resolve_eval(args)?;
    let registry = load_registry(settings.registry.as_deref())?;
    let mut manifest = RunManifest::new(
        "ablate",
        to_json_value(&settings),
        settings.seeds.clone(),
        backend_fingerprint(&settings)?,
    )
    .output("table", "results/ablation.json")
    .output("report", "report.txt");
    for mode in PromptMode::ALL {
        manifest = manifest.output(mode.as_str(), &format!("{}/", mode.as_str()));
    }
    let dir = manifest.run_dir(settings.out.as_deref());
    manifest.write(&dir)?;

    let client = make_client(&settings)?;
    let mut rows = Vec::new();
    for mode in PromptMode::ALL {
        let episodes = episodes_for(&settings, mode, &registry)?;
        let sub = dir.join(mode.as_str());
        let summary = evaluate(&settings, mode, &episodes, &sub, client.as_ref())?;
        write_file(&sub.join("report.txt"), &eval_report(&settings, &summary))?;
        rows.push(summary);
    }

    let mut report = String::new();
    let _ = writeln!(report, "{:<24} {:>14} {:>14}", "Configuration", "ZSCT (%)", "adj-ZSCT (%)");
    for s in &rows {
        let _ = writeln!(
            report,
            "{:<24} {:>14} {:>14.1}",
            s.mode.label(),
            fmt_score(s),
            s.adj_zsct
        );
    }
    let requests: u64 = rows.iter().map(|s| s.network_requests).sum();
    let _ = writeln!(report);
    let _ = writeln!(report, "seeds: {}", settings.seeds.len());
    let _ = writeln!(report, "network requests: {requests}");
    write_file(
        &dir.join("results").join("ablation.json"),
        &(serde_json::to_string_pretty(&rows).expect("rows serialise") + "\n"),
    )?;
    write_file(&dir.join("report.txt"), &report)?;
    Ok(Outcome {
        run_dir: dir,
        report,
        network_requests: requests,
    })
}

pub fn cmd_stats(args: &StatsArgs) -> Result<Outcome, CliError> {
    let settings = resolve_stats(args)?;
    let records = match &settings.records {
        Some(path) => load_model_records(path)?,
        None => default_records(),
    };
    let tail = match (&settings.tail, settings.tail_k) {
        (Some(names), _) => TailSpec::Named(names.clone()),
        (None, Some(k)) => TailSpec::TopK(k),
        (None, None) => TailSpec::Default,
    };
    let records_json = serde_json::to_string(&records).expect("records serialise");
    let manifest = RunManifest::new(
        "stats",
        to_json_value(&settings),
        Vec::new(),
        format!("records:{}", &sha256_hex(records_json.as_bytes())[..16]),
    )
    .output("report", "report.txt")
    .output("results", "results/stats.json")
    .output("scatter", "scatter.csv");
    let dir = manifest.run_dir(settings.out.as_deref());
    manifest.write(&dir)?;

    let exec = if settings.sequential {
        Exec::Sequential
    } else {
        Exec::default()
    };
    let report = run_stats(&records, &tail, exec)?;
    let text = report.render_text();
    write_file(&dir.join("report.txt"), &text)?;
    write_file(&dir.join("results").join("stats.json"), &(report.to_json() + "\n"))?;
    write_file(&dir.join("scatter.csv"), &scatter_csv(&records))?;
    Ok(Outcome {
        run_dir: dir,
        report: text,
        network_requests: 0,
    })
}
