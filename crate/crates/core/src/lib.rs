//! Meta-referential game episodes for probing compositional learning in
//! chat models, a rule-based reference listener, chat-backend plumbing,
//! scoring, and exact permutation statistics over model tables.

pub mod agents;
pub mod domain;
pub mod episode;
pub mod gateway;
pub mod parallel;
pub mod prompt;
pub mod rng;
pub mod scoring;
pub mod stats;
mod templates;

pub use domain::{CategoryRegistry, LatentStructure};
pub use episode::{prepare_episode, run_episode, EpisodeConfig, EpisodeLog, Listener};
pub use prompt::PromptMode;
