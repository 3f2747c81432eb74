//! Conversation rendering for external listeners and answer parsing.

use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agents::verbalizer::format_message;
use crate::agents::{Decision, Message, ReasoningTrace};
use crate::domain::{CategoricalStimulus, ScsStimulus};
use crate::episode::{EpisodeConfig, Phase, StimulusDomain};
use crate::templates::{fill, templates};

/// Number of supporting games answered by inlined exemplars in the few-shot
/// configuration.
pub const FEW_SHOT_EXEMPLARS: usize = 10;

/// The three benchmark configurations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PromptMode {
    /// Continuous stimuli, no exemplars.
    #[serde(rename = "scs-0shot")]
    Scs0Shot,
    /// Categorical stimuli, no exemplars.
    #[serde(rename = "cat-0shot")]
    Cat0Shot,
    /// Categorical stimuli, first ten supporting games answered by the
    /// rule-based verbalizer and inlined as exemplars.
    #[serde(rename = "cat-10shot")]
    Cat10Shot,
}

impl PromptMode {
    pub const ALL: [PromptMode; 3] = [
        PromptMode::Scs0Shot,
        PromptMode::Cat0Shot,
        PromptMode::Cat10Shot,
    ];

    pub fn exemplar_games(self) -> usize {
        match self {
            PromptMode::Cat10Shot => FEW_SHOT_EXEMPLARS,
            _ => 0,
        }
    }

    pub fn domain(self) -> StimulusDomain {
        match self {
            PromptMode::Scs0Shot => StimulusDomain::Scs,
            _ => StimulusDomain::Categorical,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PromptMode::Scs0Shot => "scs-0shot",
            PromptMode::Cat0Shot => "cat-0shot",
            PromptMode::Cat10Shot => "cat-10shot",
        }
    }

    /// Row label used in ablation tables.
    pub fn label(self) -> &'static str {
        match self {
            PromptMode::Scs0Shot => "SCS, 0-shot",
            PromptMode::Cat0Shot => "Categorical + 0-shot",
            PromptMode::Cat10Shot => "Categorical + 10-shot",
        }
    }

    /// Adjust an episode config so the mode's domain and exemplar count fit.
    pub fn configure(self, config: &EpisodeConfig) -> EpisodeConfig {
        EpisodeConfig {
            domain: self.domain(),
            min_supporting_games: config.min_supporting_games.max(self.exemplar_games()),
            ..config.clone()
        }
    }
}

impl std::str::FromStr for PromptMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PromptMode::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| format!("unknown mode `{s}` (expected scs-0shot, cat-0shot or cat-10shot)"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TurnRole {
    System,
    User,
    Listener,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConversationTurn {
    pub role: TurnRole,
    pub content: String,
    pub game_index: Option<usize>,
    pub phase: Option<Phase>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transcript {
    pub episode_id: String,
    pub turns: Vec<ConversationTurn>,
}

impl Transcript {
    pub fn new(episode_id: &str) -> Self {
        Self {
            episode_id: episode_id.to_owned(),
            turns: Vec::new(),
        }
    }

    pub fn push(
        &mut self,
        role: TurnRole,
        content: String,
        game_index: Option<usize>,
        phase: Option<Phase>,
    ) {
        self.turns.push(ConversationTurn {
            role,
            content,
            game_index,
            phase,
        });
    }

    pub fn is_empty(&self) -> bool {
        self.turns.is_empty()
    }

    /// One `{role, content, game_index, phase}` object per line.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for turn in &self.turns {
            out.push_str(&serde_json::to_string(turn).expect("turn serialises"));
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(episode_id: &str, text: &str) -> Result<Self, serde_json::Error> {
        let turns = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(serde_json::from_str)
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            episode_id: episode_id.to_owned(),
            turns,
        })
    }

    /// Listener turns that precede the first querying-phase turn.
    pub fn exemplar_count(&self) -> usize {
        self.turns
            .iter()
            .take_while(|t| t.phase != Some(Phase::Querying))
            .filter(|t| t.role == TurnRole::Listener)
            .count()
    }

    /// Structural check: system first, then strictly alternating user and
    /// listener turns with one of each per game.
    pub fn check_alternation(&self) -> Result<(), String> {
        let Some(first) = self.turns.first() else {
            return Err("empty transcript".into());
        };
        if first.role != TurnRole::System {
            return Err("first turn is not the system prompt".into());
        }
        for (k, pair) in self.turns[1..].chunks(2).enumerate() {
            match pair {
                [u, l] if u.role == TurnRole::User && l.role == TurnRole::Listener => {
                    if u.game_index != Some(k) || l.game_index != Some(k) {
                        return Err(format!("turn pair {k} carries the wrong game index"));
                    }
                }
                [u] if u.role == TurnRole::User => {}
                _ => return Err(format!("turn pair {k} does not alternate user/listener")),
            }
        }
        Ok(())
    }
}

/// A stimulus as shown to the listener in a user turn.
#[derive(Debug, Clone, Copy)]
pub enum UserStimulus<'a> {
    Categorical(&'a CategoricalStimulus),
    Scs(&'a ScsStimulus),
}

impl UserStimulus<'_> {
    /// Single-object list notation: `[['piano', 'golf', 'pepper']]`.
    pub fn render(&self) -> String {
        match self {
            UserStimulus::Categorical(s) => {
                let items: Vec<String> = s.items().iter().map(|i| format!("'{i}'")).collect();
                format!("[[{}]]", items.join(", "))
            }
            UserStimulus::Scs(s) => {
                let coords: Vec<String> = s.coords().iter().map(|x| format!("{x:.3}")).collect();
                format!("[[{}]]", coords.join(", "))
            }
        }
    }
}

/// The previous game's sync round, as reported at the top of a user turn.
#[derive(Debug, Clone)]
pub struct PrevSync<'a> {
    pub game: usize,
    pub revealed: UserStimulus<'a>,
    pub decision: Option<Decision>,
    pub correct: bool,
}

pub fn render_system_prompt(config: &EpisodeConfig) -> String {
    fill(
        &templates().system,
        &[
            ("vocab_size", &config.vocab_size.to_string()),
            ("max_len", &config.n_dim.to_string()),
        ],
    )
}

pub fn render_sync_line(sync: &PrevSync<'_>) -> String {
    let t = templates();
    let game = sync.game.to_string();
    let revealed = sync.revealed.render();
    match sync.decision {
        Some(d) => fill(
            &t.user_sync,
            &[
                ("prev", &game),
                ("revealed", &revealed),
                ("decided", d.word()),
                ("verdict", if sync.correct { "correct" } else { "incorrect" }),
                ("outcome", if sync.correct { "won" } else { "lost" }),
            ],
        ),
        None => fill(
            &t.user_sync_no_decision,
            &[("prev", &game), ("revealed", &revealed)],
        ),
    }
}

pub fn render_user_turn(
    game: usize,
    stimulus: &UserStimulus<'_>,
    message: &Message,
    prev_sync: Option<&PrevSync<'_>>,
) -> String {
    let body = fill(
        &templates().user_game,
        &[
            ("game", &game.to_string()),
            ("stimulus", &stimulus.render()),
            ("message", &format_message(message)),
        ],
    );
    match prev_sync {
        Some(sync) => format!("{}\n\n{}", render_sync_line(sync), body),
        None => body,
    }
}

pub fn render_answer(decision: Decision) -> String {
    fill(
        &templates().listener_answer,
        &[("decision", &decision.to_string())],
    )
}

/// Preamble, the three trace parts, and the `Answer: d` suffix.
pub fn render_listener_turn(trace: &ReasoningTrace, decision: Decision) -> String {
    let t = templates();
    let answer = render_answer(decision);
    if trace.is_empty_evidence() {
        format!("{} {} {}", t.listener_preamble, trace.sync_summary, answer)
    } else {
        format!(
            "{}\n{}\n{}\n{} {}",
            t.listener_preamble,
            trace.sync_summary,
            trace.inverse_prediction,
            trace.match_comparison,
            answer
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("no decision found in response")]
pub struct ParseFailure;

fn answer_pattern() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"(?i)answer\s*[:=]?\s*[*_`]*\s*([01])(?:[^0-9./]|[./](?:[^0-9]|$)|$)").expect("valid regex")
    })
}

fn number_pattern() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\d+(?:[./]\d+)*").expect("valid regex"))
}

/// Extract the listener's decision: the last `Answer: X` if present,
/// otherwise the last standalone `0` or `1`.
pub fn parse_decision(response: &str) -> Result<Decision, ParseFailure> {
    let to_decision = |s: &str| if s == "0" { Decision::Same } else { Decision::Different };
    if let Some(c) = answer_pattern().captures_iter(response).last() {
        return Ok(to_decision(&c[1]));
    }
    number_pattern()
        .find_iter(response)
        .filter(|m| matches!(m.as_str(), "0" | "1"))
        .filter(|m| {
            response[..m.start()]
                .chars()
                .next_back()
                .is_none_or(|c| !(c.is_alphanumeric() || c == '_' || c == '#'))
        })
        .last()
        .map(|m| to_decision(m.as_str()))
        .ok_or(ParseFailure)
}
