//! Acceptance criteria, one PASS/FAIL line each. Exits non-zero if any
//! criterion fails.

use std::path::PathBuf;
use std::time::{Duration, Instant};

use clbench::agents::{Decision, EpisodeCode};
use clbench::domain::{CategoryRegistry, CombinatorialSplit, DimensionSpec, LatentStructure, LatentVector};
use clbench::episode::{
    play_episode, run_episode, GamePlan, OracleListener, Phase, PreparedEpisode, RandomListener,
};
use clbench::parallel::{map_indexed, Exec};
use clbench::prompt::{parse_decision, TurnRole};
use clbench::scoring::{adjust_zsct, compute_zsct};
use clbench::stats::{
    default_records, global_pairing_test, pearson_permutation_test, run_stats,
    tail_partition_test, vacancy_statistic, Field, TailSpec,
};
use clbench::{EpisodeConfig, PromptMode};
use clbench_cli::{run, BackendKind, Cli, Command};

type Criterion = fn() -> (bool, String);

struct Check {
    ok: bool,
    detail: String,
}

fn check(ok: bool, detail: impl Into<String>) -> Check {
    Check {
        ok,
        detail: detail.into(),
    }
}

fn all(checks: Vec<Check>) -> (bool, String) {
    let ok = checks.iter().all(|c| c.ok);
    let detail = checks
        .iter()
        .map(|c| format!("{}{}", if c.ok { "" } else { "[x] " }, c.detail))
        .collect::<Vec<_>>()
        .join("; ");
    (ok, detail)
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed())
}

fn statistics_regression() -> (bool, String) {
    let records = default_records();
    let ((t, global), elapsed) = timed(|| {
        (
            vacancy_statistic(&records, Field::AdjZsct, Field::Minif2f),
            global_pairing_test(&records, Field::AdjZsct, Field::Minif2f).unwrap(),
        )
    });
    all(vec![
        check((t + 3.017).abs() <= 0.002, format!("T = {t:.4}")),
        check(
            global.total_arrangements == 3_628_800,
            format!("{} arrangements", global.total_arrangements),
        ),
        check(
            (0.045..=0.060).contains(&global.p_value.value),
            format!("p = {} = {:.5}", global.p_value, global.p_value.value),
        ),
        check(elapsed < Duration::from_secs(60), format!("{:.1}s", elapsed.as_secs_f64())),
    ])
}

fn tail_partition() -> (bool, String) {
    let records = default_records();
    let (r, elapsed) =
        timed(|| tail_partition_test(&records, Field::Minif2f, 5, Field::AdjZsct).unwrap());
    all(vec![
        check((r.observed_sum - 354.80).abs() < 1e-9, format!("S_T = {:.2}", r.observed_sum)),
        check(
            r.tally_geq == 1 && r.total == 252,
            format!("tally {}/{}", r.tally_geq, r.total),
        ),
        check(
            (r.p_value.value - 1.0 / 252.0).abs() < 1e-15,
            format!("p = {:.5}", r.p_value.value),
        ),
        check(elapsed < Duration::from_secs(1), format!("{:.3}s", elapsed.as_secs_f64())),
    ])
}

fn pearson_tournament() -> (bool, String) {
    let records = default_records();
    let (result, elapsed) = timed(|| {
        let adj = pearson_permutation_test(&records, Field::AdjZsct, Field::Minif2f).unwrap();
        let size = pearson_permutation_test(&records, Field::SizeB, Field::Minif2f).unwrap();
        let scale_tail = tail_partition_test(&records, Field::Minif2f, 5, Field::SizeB).unwrap();
        (adj, size, scale_tail)
    });
    let (adj, size, scale_tail) = result;
    let report = run_stats(&records, &TailSpec::Default, Exec::default()).unwrap();
    let flagged = report
        .notes
        .iter()
        .any(|n| n.contains("725B") && n.contains(&format!("{:.0}B", scale_tail.observed_sum)));
    all(vec![
        check(
            (adj.observed - 0.8424).abs() <= 0.0005,
            format!("r(adj) = {:.4}", adj.observed),
        ),
        check(
            (0.0008..=0.0020).contains(&adj.p_value.value),
            format!("p(adj) = {:.5}", adj.p_value.value),
        ),
        check(
            (size.observed - 0.3876).abs() <= 0.0005,
            format!("r(size) = {:.4}", size.observed),
        ),
        check(
            (0.19..=0.25).contains(&size.p_value.value),
            format!("p(size) = {:.5}", size.p_value.value),
        ),
        check(
            scale_tail.p_value.value > 0.05,
            format!(
                "scale tail sum {:.0}, p = {} = {:.5}",
                scale_tail.observed_sum, scale_tail.p_value, scale_tail.p_value.value
            ),
        ),
        check(flagged, "725B vs table sum flagged in report"),
        check(elapsed < Duration::from_secs(60), format!("{:.1}s", elapsed.as_secs_f64())),
    ])
}

fn oracle_soundness() -> (bool, String) {
    let registry = CategoryRegistry::bundled();
    let (scores, elapsed) = timed(|| {
        map_indexed(Exec::default(), 100, |seed| {
            let config = EpisodeConfig {
                seed: seed as u64,
                n_dim: 3,
                v_min: 3,
                v_max: 5,
                s_shots: 1,
                n_test: 8,
                ..EpisodeConfig::default()
            };
            let run = run_episode(&config, &registry, PromptMode::Cat0Shot, &mut OracleListener).unwrap();
            compute_zsct(&[run.log]).unwrap().zsct
        })
    });
    let perfect = scores.iter().filter(|&&z| z == 100.0).count();
    all(vec![
        check(perfect == 100, format!("{perfect}/100 episodes at ZSCT 100")),
        check(elapsed < Duration::from_secs(30), format!("{:.1}s", elapsed.as_secs_f64())),
    ])
}

fn chance_floor() -> (bool, String) {
    let registry = CategoryRegistry::bundled();
    let results = map_indexed(Exec::default(), 256, |seed| {
        let seed = seed as u64;
        let config = EpisodeConfig {
            seed,
            ..EpisodeConfig::default()
        };
        let run = run_episode(&config, &registry, PromptMode::Cat0Shot, &mut RandomListener::new(seed)).unwrap();
        compute_zsct(&[run.log]).unwrap()
    });
    let games: usize = results.iter().map(|r| r.games).sum();
    let correct: usize = results.iter().map(|r| r.correct).sum();
    let acc = 100.0 * correct as f64 / games as f64;
    all(vec![
        check(games >= 2000, format!("{games} querying games")),
        check((acc - 50.0).abs() <= 3.0, format!("accuracy {acc:.2}%")),
    ])
}

fn adj_table() -> (bool, String) {
    let rows = [
        (57.9, 15.8),
        (40.0, 0.0),
        (87.0, 74.0),
        (47.6, 0.0),
        (75.0, 50.0),
        (100.0, 100.0),
    ];
    all(rows
        .iter()
        .map(|&(z, expected)| {
            let got = adjust_zsct(z).unwrap();
            check((got - expected).abs() < 1e-9, format!("{z} -> {got:.1}"))
        })
        .collect())
}

fn six_game_episode() -> PreparedEpisode {
    let dim = |category: &str, values: &[&str]| DimensionSpec {
        category: category.into(),
        values: values.iter().map(|v| v.to_string()).collect(),
    };
    let perm = |assigned: &[u32]| {
        let mut p = assigned.to_vec();
        p.extend((1..16).filter(|t| !assigned.contains(t)));
        p
    };
    let plan = |target: [usize; 3], observed: [usize; 3]| GamePlan {
        phase: Phase::Supporting,
        truth: if target == observed {
            Decision::Same
        } else {
            Decision::Different
        },
        speaker_target: LatentVector(target.to_vec()),
        listener_observation: LatentVector(observed.to_vec()),
    };
    let plans = vec![
        plan([0, 0, 0], [0, 0, 0]),
        plan([0, 1, 1], [0, 1, 1]),
        plan([1, 2, 2], [1, 2, 2]),
        plan([1, 3, 0], [1, 2, 2]),
        plan([2, 1, 1], [2, 1, 1]),
        plan([3, 2, 0], [3, 2, 0]),
    ];
    let mut train: Vec<LatentVector> = plans.iter().map(|p| p.speaker_target.clone()).collect();
    train.sort();
    train.dedup();
    PreparedEpisode {
        config: EpisodeConfig::default(),
        structure: LatentStructure::new(vec![
            dim("instruments", &["piano", "oboe", "drums", "guitar"]),
            dim("sports", &["swimming", "golf", "rugby", "skiing"]),
            dim("vegetables", &["eggplant", "pepper", "broccoli"]),
        ])
        .unwrap(),
        code: EpisodeCode {
            vocab_size: 16,
            perms: vec![perm(&[8, 3, 12, 4]), perm(&[5, 11, 9, 15]), perm(&[6, 13, 2])],
        },
        split: CombinatorialSplit {
            train,
            test: Vec::new(),
        },
        plans,
    }
}

fn render(transcript: &clbench::prompt::Transcript) -> String {
    let mut out = String::new();
    for turn in &transcript.turns {
        let label = match (turn.role, turn.game_index) {
            (TurnRole::System, _) => "[System]".to_owned(),
            (TurnRole::User, Some(g)) => format!("[User, game {g}]"),
            (TurnRole::Listener, Some(g)) => format!("[Listener, game {g}]"),
            (_, None) => "[?]".to_owned(),
        };
        out.push_str(&label);
        out.push('\n');
        out.push_str(&turn.content);
        out.push_str("\n\n");
    }
    out
}

fn transcript_fidelity() -> (bool, String) {
    let golden_path =
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/golden/six_games.txt");
    let golden = std::fs::read_to_string(golden_path).unwrap_or_default();
    let a = play_episode(&six_game_episode(), PromptMode::Cat0Shot, &mut OracleListener).unwrap();
    let b = play_episode(&six_game_episode(), PromptMode::Cat0Shot, &mut OracleListener).unwrap();
    let (ra, rb) = (render(&a.transcript), render(&b.transcript));

    let listener_1 = &a.transcript.turns[4].content;
    let three_part = listener_1.lines().count() == 4
        && listener_1.contains("From the last game syncing, we can learn that:")
        && listener_1.contains("In the current game, if the speaker were observing a similar stimulus as ours")
        && listener_1.contains("Since the speaker's message is");
    let sync_lines = a.transcript.turns[3].content.contains("This was correct --- you have won game #0.")
        && a.transcript.turns[5].content.contains("This was incorrect --- you have lost game #1.");
    let system = a.transcript.turns[0].content.contains("communication channel of 16 symbols")
        && a.transcript.turns[0].content.contains("Symbol 0 is the end-of-message symbol");

    // every rendered listener turn parses back, over the golden episode and
    // twenty generated ones in every mode
    let registry = CategoryRegistry::bundled();
    let mut turns = 0usize;
    let mut round_trip = true;
    let mut check_run = |run: &clbench::episode::EpisodeRun| {
        let listener_turns = run.transcript.turns.iter().filter(|t| t.role == TurnRole::Listener);
        for (turn, game) in listener_turns.zip(&run.log.games) {
            turns += 1;
            let suffix = turn.content.ends_with(&format!("Answer: {}", game.verbalizer_decision));
            round_trip &= suffix && parse_decision(&turn.content) == Ok(game.verbalizer_decision);
        }
    };
    check_run(&a);
    for mode in PromptMode::ALL {
        for seed in 0..20 {
            let cfg = mode.configure(&EpisodeConfig {
                seed,
                ..EpisodeConfig::default()
            });
            check_run(&run_episode(&cfg, &registry, mode, &mut OracleListener).unwrap());
        }
    }

    all(vec![
        check(!golden.is_empty() && ra == golden, "matches golden file"),
        check(ra == rb, "byte-stable across two runs"),
        check(system, "system sentence set"),
        check(sync_lines, "sync verdict lines"),
        check(three_part, "three-part trace"),
        check(round_trip, format!("{turns} listener turns parse back")),
    ])
}

fn scripted_end_to_end() -> (bool, String) {
    let dir = tempfile::tempdir().unwrap();
    let oracle_dir = dir.path().join("oracle");
    let replay_dir = dir.path().join("replay");
    let eval = |backend: BackendKind, out: PathBuf, script: Option<PathBuf>| {
        let mut args = clbench_cli::args::EvalArgs {
            backend: Some(backend),
            script,
            ..Default::default()
        };
        args.episode.out = Some(out);
        run(&Cli {
            verbose: 0,
            command: Command::Eval(args),
        })
    };
    let oracle = eval(BackendKind::Oracle, oracle_dir.clone(), None);
    let replay = eval(BackendKind::Scripted, replay_dir.clone(), Some(oracle_dir));
    let Ok(replay) = replay else {
        return (false, format!("scripted run failed: {:?}", replay.err()));
    };
    let summary: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(replay_dir.join("results/summary.json")).unwrap(),
    )
    .unwrap();
    all(vec![
        check(oracle.is_ok(), "oracle run"),
        check(
            summary["mean_zsct"] == 100.0,
            format!("ZSCT {}", summary["mean_zsct"]),
        ),
        check(
            replay.network_requests == 0,
            format!("{} network requests", replay.network_requests),
        ),
    ])
}

fn main() {
    let criteria: Vec<(&str, Criterion)> = vec![
        ("statistics regression", statistics_regression),
        ("tail partition", tail_partition),
        ("pearson tournament", pearson_tournament),
        ("oracle soundness", oracle_soundness),
        ("chance floor", chance_floor),
        ("adj-ZSCT unit table", adj_table),
        ("transcript fidelity", transcript_fidelity),
        ("scripted end-to-end", scripted_end_to_end),
    ];
    let mut failures = 0;
    let mut passed = Vec::new();
    for (i, (name, f)) in criteria.into_iter().enumerate() {
        let (ok, detail) = f();
        println!("{} criterion {} ({name}): {detail}", if ok { "PASS" } else { "FAIL" }, i + 1);
        if ok {
            passed.push(i + 1);
        } else {
            failures += 1;
        }
    }
    let structural = passed.contains(&7) && passed.contains(&8);
    println!(
        "{} criterion 9 (model-dependent rows): not numerically reproducible without the prover models; \
         the pluggable backend path is covered structurally by criteria 7 and 8",
        if structural { "PASS" } else { "FAIL" }
    );
    if !structural {
        failures += 1;
    }
    if failures > 0 {
        println!("{failures} criteria failed");
        std::process::exit(1);
    }
}
