//! Hypothesis-tracking listener.
//!
//! The listener keeps a value map from `(position, token)` to a histogram of
//! the values the speaker was revealed to observe when it sent that token.
//! Each game it inverts the map to predict the message the speaker would
//! send for the listener's own stimulus, counts matches against the actual
//! message, and answers "same" only on a full match. Every step is rendered
//! as a three-part reasoning trace.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::speaker::{Message, Token, EOS};
use super::{AgentError, Decision};
use crate::domain::CategoricalStimulus;
use crate::templates::{fill, templates};

/// Evidence store: `(position, token) -> value -> count`.
///
/// Alongside the counts it records the most recent game that contributed
/// each `(position, token, value)` triple, which the trace cites.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValueMap {
    entries: BTreeMap<(usize, Token), BTreeMap<String, usize>>,
    last_game: BTreeMap<(usize, Token, String), usize>,
}

impl ValueMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn count(&self, position: usize, token: Token, value: &str) -> usize {
        self.entries
            .get(&(position, token))
            .and_then(|h| h.get(value))
            .copied()
            .unwrap_or(0)
    }

    pub fn histogram(&self, position: usize, token: Token) -> Option<&BTreeMap<String, usize>> {
        self.entries.get(&(position, token))
    }

    pub fn total(&self) -> usize {
        self.entries.values().flat_map(|h| h.values()).sum()
    }

    /// Most recent game whose sync linked `value` to `token` at `position`.
    pub fn last_seen(&self, position: usize, token: Token, value: &str) -> Option<usize> {
        self.last_game
            .get(&(position, token, value.to_owned()))
            .copied()
    }

    /// Record one sync round: the message sent at `game` and the target the
    /// speaker was then revealed to have observed. EoS positions are skipped.
    pub fn sync_update(
        &mut self,
        message: &Message,
        revealed: &CategoricalStimulus,
        game: usize,
    ) -> Result<(), AgentError> {
        if message.len() != revealed.len() {
            return Err(AgentError::LengthMismatch {
                expected: message.len(),
                got: revealed.len(),
            });
        }
        for (i, (&token, value)) in message.tokens().iter().zip(revealed.items()).enumerate() {
            if token == EOS {
                continue;
            }
            *self
                .entries
                .entry((i, token))
                .or_default()
                .entry(value.clone())
                .or_insert(0) += 1;
            self.last_game.insert((i, token, value.clone()), game);
        }
        Ok(())
    }
}

/// Predicted token per position; `None` marks an unknown value.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Prediction(pub Vec<Option<Token>>);

impl Prediction {
    pub fn unknown(n: usize) -> Self {
        Self(vec![None; n])
    }

    pub fn tokens(&self) -> &[Option<Token>] {
        &self.0
    }
}

/// Per position, the token with the most evidence for the stimulus value.
/// Ties go to the lowest token.
pub fn invert_value_map(map: &ValueMap, stimulus: &CategoricalStimulus) -> Prediction {
    let predicted = stimulus
        .items()
        .iter()
        .enumerate()
        .map(|(i, value)| {
            let mut best: Option<(Token, usize)> = None;
            for (_, token) in map.entries.range((i, Token::MIN)..=(i, Token::MAX)).map(|(k, _)| *k)
            {
                let c = map.count(i, token, value);
                // strict `>` keeps the lowest token on ties (range is ascending)
                if c > 0 && best.is_none_or(|(_, bc)| c > bc) {
                    best = Some((token, c));
                }
            }
            best.map(|(t, _)| t)
        })
        .collect();
    Prediction(predicted)
}

/// Count positions where a known prediction equals the actual token; the
/// decision is "same" only when every position matches.
pub fn decide(
    predicted: &Prediction,
    actual: &Message,
    n_dim: usize,
) -> Result<(Decision, usize), AgentError> {
    if predicted.0.len() != actual.len() {
        return Err(AgentError::LengthMismatch {
            expected: predicted.0.len(),
            got: actual.len(),
        });
    }
    let n_match = predicted
        .0
        .iter()
        .zip(actual.tokens())
        .filter(|(p, &a)| **p == Some(a))
        .count();
    let decision = if n_match >= n_dim {
        Decision::Same
    } else {
        Decision::Different
    };
    Ok((decision, n_match))
}

/// The previous game's sync round, as summarised in the trace.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SyncFacts {
    pub game: usize,
    pub message: Message,
    pub revealed: CategoricalStimulus,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReasoningTrace {
    pub sync_summary: String,
    pub inverse_prediction: String,
    pub match_comparison: String,
    pub n_match: usize,
}

impl ReasoningTrace {
    /// True for the evidence-free trace emitted before any sync round.
    pub fn is_empty_evidence(&self) -> bool {
        self.inverse_prediction.is_empty()
    }
}

/// Bracketed message, e.g. `[8, 11, 13]`.
pub fn format_message(message: &Message) -> String {
    let parts: Vec<String> = message.tokens().iter().map(|t| t.to_string()).collect();
    format!("[{}]", parts.join(", "))
}

pub fn verbalize(
    map: &ValueMap,
    stimulus: &CategoricalStimulus,
    message: &Message,
    predicted: &Prediction,
    n_match: usize,
    decision: Decision,
    last_sync: Option<&SyncFacts>,
) -> ReasoningTrace {
    let t = templates();
    if map.is_empty() {
        return ReasoningTrace {
            sync_summary: t.trace_no_data.clone(),
            inverse_prediction: String::new(),
            match_comparison: String::new(),
            n_match,
        };
    }

    let sync_summary = match last_sync {
        Some(sync) => {
            let facts: Vec<String> = sync
                .message
                .tokens()
                .iter()
                .zip(sync.revealed.items())
                .enumerate()
                .filter(|(_, (&tok, _))| tok != EOS)
                .map(|(pos, (tok, value))| {
                    fill(
                        &t.trace_sync_fact,
                        &[
                            ("token", &tok.to_string()),
                            ("pos", &pos.to_string()),
                            ("value", value),
                        ],
                    )
                })
                .collect();
            if facts.is_empty() {
                t.trace_sync_empty.clone()
            } else {
                fill(&t.trace_sync, &[("facts", &facts.join(&t.fact_separator))])
            }
        }
        None => t.trace_sync_empty.clone(),
    };

    let steps: Vec<String> = stimulus
        .items()
        .iter()
        .zip(predicted.tokens())
        .enumerate()
        .map(|(pos, (value, pred))| match pred {
            Some(token) => {
                let game = map.last_seen(pos, *token, value).unwrap_or_default();
                fill(
                    &t.trace_inverse_known,
                    &[
                        ("pos", &pos.to_string()),
                        ("value", value),
                        ("token", &token.to_string()),
                        ("game", &game.to_string()),
                    ],
                )
            }
            None => fill(
                &t.trace_inverse_unknown,
                &[("pos", &pos.to_string()), ("value", value)],
            ),
        })
        .collect();
    let inverse_prediction = fill(
        &t.trace_inverse,
        &[
            ("stimulus", &stimulus.items().join(", ")),
            ("steps", &steps.join(&t.fact_separator)),
        ],
    );

    let match_comparison = fill(
        &t.trace_match,
        &[
            ("message", &format_message(message)),
            ("n_match", &n_match.to_string()),
            ("n_dim", &stimulus.len().to_string()),
            ("verdict", decision.word()),
        ],
    );

    ReasoningTrace {
        sync_summary,
        inverse_prediction,
        match_comparison,
        n_match,
    }
}

/// Everything the verbalizer produced for one game.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerbalizerStep {
    pub prediction: Prediction,
    pub n_match: usize,
    pub decision: Decision,
    pub trace: ReasoningTrace,
}

/// One episode's worth of listener state, stepped once per game.
#[derive(Debug, Clone, Default)]
pub struct Verbalizer {
    map: ValueMap,
    // message sent at the previous game, awaiting its sync reveal
    last_message: Option<(usize, Message)>,
}

impl Verbalizer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn value_map(&self) -> &ValueMap {
        &self.map
    }

    /// Play game `game`. `prev_reveal` is the previous game's speaker target,
    /// which is paired with the previous game's message before predicting.
    pub fn step(
        &mut self,
        game: usize,
        stimulus: &CategoricalStimulus,
        message: &Message,
        prev_reveal: Option<&CategoricalStimulus>,
    ) -> Result<VerbalizerStep, AgentError> {
        let mut last_sync = None;
        if let (Some((prev_game, prev_message)), Some(revealed)) =
            (self.last_message.take(), prev_reveal)
        {
            self.map.sync_update(&prev_message, revealed, prev_game)?;
            last_sync = Some(SyncFacts {
                game: prev_game,
                message: prev_message,
                revealed: revealed.clone(),
            });
        }
        self.last_message = Some((game, message.clone()));

        let prediction = invert_value_map(&self.map, stimulus);
        let (mut decision, n_match) = decide(&prediction, message, stimulus.len())?;
        if self.map.is_empty() {
            // nothing learned yet: default to "same"
            decision = Decision::Same;
        }
        let trace = verbalize(
            &self.map,
            stimulus,
            message,
            &prediction,
            n_match,
            decision,
            last_sync.as_ref(),
        );
        Ok(VerbalizerStep {
            prediction,
            n_match,
            decision,
            trace,
        })
    }
}
