//! Rule-based agents: the posdis speaker, the hypothesis-tracking listener
//! verbalizer, and a coin-flip baseline.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::DomainError;

pub mod speaker;
pub mod verbalizer;

pub use speaker::{sample_episode_code, speaker_encode, EpisodeCode, Message, Token, EOS};
pub use verbalizer::{
    decide, invert_value_map, verbalize, Prediction, ReasoningTrace, SyncFacts, ValueMap,
    Verbalizer, VerbalizerStep,
};

#[derive(Debug, Error)]
pub enum AgentError {
    #[error("vocabulary of {vocab_size} symbols cannot encode {max_values} values per position")]
    VocabTooSmall { vocab_size: Token, max_values: usize },
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Domain(#[from] DomainError),
}

/// Listener verdict: `Same` (0) or `Different` (1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum Decision {
    Same,
    Different,
}

impl Decision {
    pub fn as_u8(self) -> u8 {
        match self {
            Decision::Same => 0,
            Decision::Different => 1,
        }
    }

    /// Word used in conversation text.
    pub fn word(self) -> &'static str {
        match self {
            Decision::Same => "similar",
            Decision::Different => "different",
        }
    }
}

impl From<Decision> for u8 {
    fn from(d: Decision) -> u8 {
        d.as_u8()
    }
}

impl TryFrom<u8> for Decision {
    type Error = String;

    fn try_from(v: u8) -> Result<Self, Self::Error> {
        match v {
            0 => Ok(Decision::Same),
            1 => Ok(Decision::Different),
            other => Err(format!("decision must be 0 or 1, got {other}")),
        }
    }
}

impl std::fmt::Display for Decision {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.as_u8())
    }
}

/// Uniform coin flip over {0, 1}.
pub fn random_listener_decide<R: Rng + ?Sized>(rng: &mut R) -> Decision {
    if rng.random_bool(0.5) {
        Decision::Same
    } else {
        Decision::Different
    }
}
