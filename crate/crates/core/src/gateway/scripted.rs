use std::collections::BTreeMap;

use super::ChatClient;
use crate::episode::{
    AnsweredBy, DecisionRequest, EpisodeLog, Listener, ListenerError, ListenerReply,
};
use crate::prompt::parse_decision;

/// Canned responses: episode id -> game index -> response text.
pub type Script = BTreeMap<String, BTreeMap<usize, String>>;

/// Replays canned responses, with no network access.
pub struct ScriptedListener {
    responses: BTreeMap<usize, String>,
}

impl ScriptedListener {
    pub fn new(responses: BTreeMap<usize, String>) -> Self {
        Self { responses }
    }

    /// Listener for one episode of a multi-episode script.
    pub fn for_episode(script: &Script, episode_id: &str) -> Self {
        Self::new(script.get(episode_id).cloned().unwrap_or_default())
    }
}

impl Listener for ScriptedListener {
    fn respond(&mut self, request: &DecisionRequest<'_>) -> Result<ListenerReply, ListenerError> {
        let text = self
            .responses
            .get(&request.game)
            .cloned()
            .ok_or_else(|| ListenerError::MissingScript {
                episode: request.episode_id.to_owned(),
                game: request.game,
            })?;
        let decision = parse_decision(&text).ok();
        Ok(ListenerReply { text, decision })
    }
}

/// Responses the backend gave in a finished episode, replayable through
/// [`ScriptedListener`].
pub fn script_from_log(log: &EpisodeLog) -> BTreeMap<usize, String> {
    log.games
        .iter()
        .filter(|g| g.answered_by == AnsweredBy::Backend)
        .map(|g| (g.index, g.listener_response.clone()))
        .collect()
}

/// Sends the running transcript to a chat model for every backend game.
pub struct LmListener<'a> {
    client: &'a ChatClient,
}

impl<'a> LmListener<'a> {
    pub fn new(client: &'a ChatClient) -> Self {
        Self { client }
    }
}

impl Listener for LmListener<'_> {
    fn respond(&mut self, request: &DecisionRequest<'_>) -> Result<ListenerReply, ListenerError> {
        let text = self.client.complete_chat(request.transcript)?;
        let decision = parse_decision(&text).ok();
        if decision.is_none() {
            log::warn!(
                "{} game {}: unparsable response, scored incorrect",
                request.episode_id,
                request.game
            );
        }
        Ok(ListenerReply { text, decision })
    }
}
