use clbench::domain::CategoryRegistry;
use clbench::episode::{
    prepare_episode, run_episode, AnsweredBy, OracleListener, Phase, RandomListener,
};
use clbench::parallel::{map_indexed, Exec};
use clbench::scoring::{aggregate, compute_zsct};
use clbench::{EpisodeConfig, PromptMode};
use proptest::prelude::*;

fn config(seed: u64) -> EpisodeConfig {
    EpisodeConfig {
        seed,
        ..EpisodeConfig::default()
    }
}

#[test]
fn oracle_is_perfect_on_a_hundred_seeds() {
    let registry = CategoryRegistry::bundled();
    let results = map_indexed(Exec::default(), 100, |seed| {
        let run = run_episode(
            &config(seed as u64),
            &registry,
            PromptMode::Cat0Shot,
            &mut OracleListener,
        )
        .unwrap();
        run.log.check_integrity().unwrap();
        compute_zsct(&[run.log]).unwrap()
    });
    for r in &results {
        assert_eq!(r.zsct, 100.0, "seed {}", r.seed);
        assert_eq!(r.games, 8);
    }
    let summary = aggregate(&results).unwrap();
    assert_eq!((summary.mean_zsct, summary.adj_zsct), (100.0, 100.0));
}

#[test]
fn random_listener_sits_at_chance() {
    let registry = CategoryRegistry::bundled();
    let per_seed = map_indexed(Exec::default(), 256, |seed| {
        let seed = seed as u64;
        let run = run_episode(
            &config(seed),
            &registry,
            PromptMode::Cat0Shot,
            &mut RandomListener::new(seed),
        )
        .unwrap();
        compute_zsct(&[run.log]).unwrap()
    });
    let games: usize = per_seed.iter().map(|r| r.games).sum();
    let correct: usize = per_seed.iter().map(|r| r.correct).sum();
    assert!(games >= 2000);
    let acc = 100.0 * correct as f64 / games as f64;
    assert!((acc - 50.0).abs() <= 3.0, "accuracy {acc} over {games} games");
}

#[test]
fn episodes_replay_identically() {
    let registry = CategoryRegistry::bundled();
    for mode in PromptMode::ALL {
        let cfg = mode.configure(&config(11));
        let a = run_episode(&cfg, &registry, mode, &mut RandomListener::new(11)).unwrap();
        let b = run_episode(&cfg, &registry, mode, &mut RandomListener::new(11)).unwrap();
        assert_eq!(a.log.to_json_line(), b.log.to_json_line());
        assert_eq!(a.transcript.to_jsonl(), b.transcript.to_jsonl());
    }
}

#[test]
fn ten_shot_mode_inlines_ten_exemplars() {
    let registry = CategoryRegistry::bundled();
    let mode = PromptMode::Cat10Shot;
    let run = run_episode(
        &mode.configure(&config(3)),
        &registry,
        mode,
        &mut RandomListener::new(3),
    )
    .unwrap();
    run.log.check_integrity().unwrap();
    let exemplars: Vec<_> = run
        .log
        .games
        .iter()
        .filter(|g| g.answered_by == AnsweredBy::Exemplar)
        .collect();
    assert_eq!(exemplars.len(), 10);
    assert!(exemplars.iter().all(|g| g.plan.phase == Phase::Supporting));
    assert!(run
        .log
        .querying_games()
        .all(|g| g.answered_by == AnsweredBy::Backend));
    assert!(run.transcript.exemplar_count() >= 10);
}

#[test]
fn scs_mode_shows_coordinates_but_oracle_stays_exact() {
    let registry = CategoryRegistry::bundled();
    let mode = PromptMode::Scs0Shot;
    let run = run_episode(&mode.configure(&config(5)), &registry, mode, &mut OracleListener).unwrap();
    let user = &run.transcript.turns[1].content;
    assert!(user.contains("[[") && !user.contains('\''), "{user}");
    assert!(run.log.games.iter().all(|g| g.scs.is_some()));
    assert_eq!(compute_zsct(&[run.log]).unwrap().zsct, 100.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn held_out_vectors_never_leak_into_support(seed in 0u64..10_000, n_dim in 2usize..=4, s in 1usize..=2) {
        let registry = CategoryRegistry::bundled();
        let cfg = EpisodeConfig { seed, n_dim, s_shots: s, n_test: 4, ..EpisodeConfig::default() };
        let prepared = prepare_episode(&cfg, &registry);
        prop_assume!(prepared.is_ok());
        let prepared = prepared.unwrap();
        for plan in &prepared.plans {
            if plan.phase == Phase::Supporting {
                prop_assert!(!prepared.split.is_test(&plan.speaker_target));
                prop_assert!(!prepared.split.is_test(&plan.listener_observation));
            }
        }
        let run = run_episode(&cfg, &registry, PromptMode::Cat0Shot, &mut OracleListener).unwrap();
        prop_assert!(run.log.check_integrity().is_ok());
        prop_assert_eq!(compute_zsct(&[run.log]).unwrap().zsct, 100.0);
    }
}
