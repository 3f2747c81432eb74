//! Six supporting games with a hand-built code, checked against a golden
//! rendering of the whole conversation.

use std::path::PathBuf;

use clbench::agents::{Decision, EpisodeCode};
use clbench::domain::{CombinatorialSplit, DimensionSpec, LatentStructure, LatentVector};
use clbench::episode::{play_episode, GamePlan, OracleListener, Phase, PreparedEpisode};
use clbench::prompt::{parse_decision, render_system_prompt, Transcript, TurnRole};
use clbench::{EpisodeConfig, PromptMode};

fn dim(category: &str, values: &[&str]) -> DimensionSpec {
    DimensionSpec {
        category: category.into(),
        values: values.iter().map(|v| v.to_string()).collect(),
    }
}

// tokens for the listed values first, the unused ones after in ascending order
fn perm(assigned: &[u32], vocab: u32) -> Vec<u32> {
    let mut p = assigned.to_vec();
    p.extend((1..vocab).filter(|t| !assigned.contains(t)));
    p
}

fn plan(target: [usize; 3], observed: [usize; 3]) -> GamePlan {
    let truth = if target == observed {
        Decision::Same
    } else {
        Decision::Different
    };
    GamePlan {
        phase: Phase::Supporting,
        speaker_target: LatentVector(target.to_vec()),
        listener_observation: LatentVector(observed.to_vec()),
        truth,
    }
}

fn six_game_episode() -> PreparedEpisode {
    let structure = LatentStructure::new(vec![
        dim("instruments", &["piano", "oboe", "drums", "guitar"]),
        dim("sports", &["swimming", "golf", "rugby", "skiing"]),
        dim("vegetables", &["eggplant", "pepper", "broccoli"]),
    ])
    .unwrap();
    let code = EpisodeCode {
        vocab_size: 16,
        perms: vec![
            perm(&[8, 3, 12, 4], 16),
            perm(&[5, 11, 9, 15], 16),
            perm(&[6, 13, 2], 16),
        ],
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
        structure,
        code,
        split: CombinatorialSplit {
            train,
            test: Vec::new(),
        },
        plans,
    }
}

fn render(transcript: &Transcript) -> String {
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

fn golden_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden/six_games.txt")
}

#[test]
fn six_games_match_golden_file() {
    let run = play_episode(&six_game_episode(), PromptMode::Cat0Shot, &mut OracleListener).unwrap();
    let text = render(&run.transcript);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(golden_path(), &text).unwrap();
    }
    let golden = std::fs::read_to_string(golden_path()).expect("golden file present");
    assert_eq!(text, golden);
}

#[test]
fn rendering_is_byte_stable() {
    let a = play_episode(&six_game_episode(), PromptMode::Cat0Shot, &mut OracleListener).unwrap();
    let b = play_episode(&six_game_episode(), PromptMode::Cat0Shot, &mut OracleListener).unwrap();
    assert_eq!(a.transcript.to_jsonl(), b.transcript.to_jsonl());
    assert_eq!(a.log.to_json_line(), b.log.to_json_line());
}

#[test]
fn structure_of_the_conversation() {
    let run = play_episode(&six_game_episode(), PromptMode::Cat0Shot, &mut OracleListener).unwrap();
    let t = &run.transcript;
    t.check_alternation().unwrap();
    assert_eq!(t.turns.len(), 13);
    assert_eq!(t.turns[0].content, render_system_prompt(&EpisodeConfig::default()));

    let user = |g: usize| &t.turns[1 + 2 * g].content;
    let listener = |g: usize| &t.turns[2 + 2 * g].content;

    assert!(user(0).starts_with("At game #0, you are observing stimulus: [['piano', 'swimming', 'eggplant']]. Your partner has sent you the following message: [8, 5, 6]."));
    assert_eq!(
        listener(0),
        "Let's think step by step and leverage past games. No sync step data yet --- cannot predict expected symbols. Answer: 0"
    );
    assert!(user(1).starts_with("At the end of game #0, sync step: the exact stimulus your partner observed was [['piano', 'swimming', 'eggplant']]. You decided: similar latent meanings. This was correct --- you have won game #0.\n\n"));
    assert!(user(2).contains("You decided: different latent meanings. This was incorrect --- you have lost game #1."));

    let lines: Vec<&str> = listener(1).lines().collect();
    assert_eq!(lines.len(), 4);
    assert_eq!(lines[0], "Let's think step by step and leverage past games.");
    assert_eq!(
        lines[1],
        "From the last game syncing, we can learn that: symbol 8 at pos 0 -> piano ; symbol 5 at pos 1 -> swimming ; symbol 6 at pos 2 -> eggplant."
    );
    assert_eq!(
        lines[2],
        "In the current game, if the speaker were observing a similar stimulus as ours, [piano, golf, pepper], then: at pos 0, piano -> symbol 8 (from game #0) ; at pos 1, golf has not been observed yet ; at pos 2, pepper has not been observed yet."
    );
    assert_eq!(
        lines[3],
        "Since the speaker's message is [8, 11, 13], yield 1/3 matches, they are likely observing a different stimulus. Answer: 1"
    );

    assert!(user(4).contains("the exact stimulus your partner observed was [['oboe', 'skiing', 'eggplant']]"));
    assert!(listener(4).contains("at pos 0, drums has not been observed yet ; at pos 1, golf -> symbol 11 (from game #1) ; at pos 2, pepper -> symbol 13 (from game #1)."));
    assert!(listener(4).contains("yield 2/3 matches"));
    // eggplant was last seen at game 3, after game 0
    assert!(listener(5).contains("at pos 1, rugby -> symbol 9 (from game #2) ; at pos 2, eggplant -> symbol 6 (from game #3)."));

    let decisions: Vec<u8> = run
        .log
        .games
        .iter()
        .map(|g| g.listener_decision.unwrap().as_u8())
        .collect();
    assert_eq!(decisions, [0, 1, 1, 1, 1, 1]);
    let correct: Vec<bool> = run.log.games.iter().map(|g| g.correct).collect();
    assert_eq!(correct, [true, false, false, true, false, false]);
}

#[test]
fn every_listener_turn_parses_back() {
    let run = play_episode(&six_game_episode(), PromptMode::Cat0Shot, &mut OracleListener).unwrap();
    for (turn, game) in run
        .transcript
        .turns
        .iter()
        .filter(|t| t.role == TurnRole::Listener)
        .zip(&run.log.games)
    {
        assert!(turn.content.ends_with(&format!("Answer: {}", game.verbalizer_decision)));
        assert_eq!(parse_decision(&turn.content), Ok(game.verbalizer_decision));
    }
}
