//! Episode orchestration: schedules, the per-game message / decision / sync
//! loop, and the persisted episode log.

use std::collections::BTreeSet;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agents::{
    sample_episode_code, speaker_encode, AgentError, Decision, EpisodeCode, Message, Prediction,
    ReasoningTrace, Verbalizer, VerbalizerStep,
};
use crate::domain::{
    coverage_counts, make_split, render_categorical, render_scs, sample_latent_structure,
    CategoricalStimulus, CategoryRegistry, CombinatorialSplit, DomainError, LatentStructure,
    LatentVector, ScsStimulus,
};
use crate::gateway::GatewayError;
use crate::prompt::{self, PromptMode, PrevSync, Transcript, TurnRole, UserStimulus};
use crate::rng;

pub const EPISODE_SCHEMA: &str = "clbench.episode/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StimulusDomain {
    Categorical,
    Scs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Supporting,
    Querying,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpisodeConfig {
    pub n_dim: usize,
    pub v_min: usize,
    pub v_max: usize,
    pub s_shots: usize,
    pub n_test: usize,
    pub vocab_size: u32,
    pub domain: StimulusDomain,
    pub seed: u64,
    pub balance_query: bool,
    /// Pad the supporting phase to at least this many games.
    #[serde(default)]
    pub min_supporting_games: usize,
}

impl Default for EpisodeConfig {
    fn default() -> Self {
        Self {
            n_dim: 3,
            v_min: 3,
            v_max: 5,
            s_shots: 1,
            n_test: 8,
            vocab_size: 16,
            domain: StimulusDomain::Categorical,
            seed: 0,
            balance_query: true,
            min_supporting_games: 0,
        }
    }
}

impl EpisodeConfig {
    pub fn validate(&self) -> Result<(), EpisodeError> {
        let bad = |msg: String| Err(EpisodeError::InvalidConfig(msg));
        if self.n_dim == 0 {
            return bad("n_dim must be at least 1".into());
        }
        if self.v_min < 2 || self.v_min > self.v_max {
            return bad(format!(
                "need 2 <= v_min <= v_max, got v_min = {}, v_max = {}",
                self.v_min, self.v_max
            ));
        }
        if (self.vocab_size as usize) < self.v_max + 1 {
            return bad(format!(
                "vocab_size {} must be at least v_max + 1 = {}",
                self.vocab_size,
                self.v_max + 1
            ));
        }
        if self.s_shots == 0 {
            return bad("s_shots must be at least 1".into());
        }
        if self.n_test == 0 {
            return bad("n_test must be at least 1".into());
        }
        Ok(())
    }

    pub fn episode_id(&self) -> String {
        format!("seed-{:04}", self.seed)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GamePlan {
    pub phase: Phase,
    pub speaker_target: LatentVector,
    pub listener_observation: LatentVector,
    pub truth: Decision,
}

pub fn ground_truth(plan: &GamePlan) -> Decision {
    if plan.speaker_target == plan.listener_observation {
        Decision::Same
    } else {
        Decision::Different
    }
}

fn pick_distinct<R: Rng + ?Sized>(
    pool: &[LatentVector],
    avoid: &LatentVector,
    rng: &mut R,
) -> Option<LatentVector> {
    let candidates: Vec<&LatentVector> = pool.iter().filter(|v| *v != avoid).collect();
    candidates.choose(rng).map(|v| (*v).clone())
}

fn plan_game<R: Rng + ?Sized>(
    phase: Phase,
    target: LatentVector,
    want: Decision,
    train: &[LatentVector],
    rng: &mut R,
) -> GamePlan {
    let observation = match want {
        Decision::Same => None,
        Decision::Different => pick_distinct(train, &target, rng),
    };
    let listener_observation = observation.unwrap_or_else(|| target.clone());
    let truth = if listener_observation == target {
        Decision::Same
    } else {
        Decision::Different
    };
    GamePlan {
        phase,
        speaker_target: target,
        listener_observation,
        truth,
    }
}

/// Supporting plans achieving S-shot coverage, followed by one querying
/// plan per held-out vector.
pub fn build_schedules<R: Rng + ?Sized>(
    structure: &LatentStructure,
    split: &CombinatorialSplit,
    config: &EpisodeConfig,
    rng: &mut R,
) -> Result<Vec<GamePlan>, EpisodeError> {
    let train = &split.train;
    let s = config.s_shots;
    if !coverage_counts(structure, train).iter().flatten().all(|&c| c >= s) {
        return Err(EpisodeError::Domain(DomainError::InfeasibleSplit {
            n_test: split.test.len(),
            s_shots: s,
            lattice: structure.lattice_size(),
            attempts: 0,
        }));
    }

    // greedy cover: repeatedly take the train vector filling the most
    // still-deficient (dim, value) slots, random among ties
    let mut counts: Vec<Vec<usize>> = structure.sizes().iter().map(|&d| vec![0; d]).collect();
    let mut targets: Vec<LatentVector> = Vec::new();
    loop {
        let gain = |v: &LatentVector| {
            v.0.iter()
                .enumerate()
                .filter(|(dim, &val)| counts[*dim][val] < s)
                .count()
        };
        let best = train.iter().map(gain).max().unwrap_or(0);
        if best == 0 {
            break;
        }
        let ties: Vec<&LatentVector> = train.iter().filter(|v| gain(v) == best).collect();
        let chosen = (*ties.choose(rng).expect("non-empty ties")).clone();
        for (dim, &val) in chosen.0.iter().enumerate() {
            counts[dim][val] += 1;
        }
        targets.push(chosen);
    }
    while targets.len() < config.min_supporting_games {
        targets.push(train.choose(rng).expect("train is non-empty").clone());
    }
    targets.shuffle(rng);

    let mut plans = Vec::with_capacity(targets.len() + split.test.len());
    for target in targets {
        let want = if rng.random_bool(0.5) {
            Decision::Same
        } else {
            Decision::Different
        };
        plans.push(plan_game(Phase::Supporting, target, want, train, rng));
    }

    let mut queries = split.test.clone();
    queries.shuffle(rng);
    let n = queries.len();
    let wants: Vec<Decision> = if config.balance_query {
        let mut w: Vec<Decision> = (0..n)
            .map(|i| {
                if i < n / 2 {
                    Decision::Same
                } else {
                    Decision::Different
                }
            })
            .collect();
        w.shuffle(rng);
        w
    } else {
        (0..n)
            .map(|_| {
                if rng.random_bool(0.5) {
                    Decision::Same
                } else {
                    Decision::Different
                }
            })
            .collect()
    };
    for (target, want) in queries.into_iter().zip(wants) {
        plans.push(plan_game(Phase::Querying, target, want, train, rng));
    }
    Ok(plans)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScsPair {
    pub listener: ScsStimulus,
    pub speaker: ScsStimulus,
}

/// Who produced the listener turn of a game.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AnsweredBy {
    /// Inlined rule-based exemplar.
    Exemplar,
    /// The configured listener backend.
    Backend,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameRecord {
    pub index: usize,
    pub plan: GamePlan,
    pub listener_stimulus: CategoricalStimulus,
    pub message: Message,
    pub prediction: Prediction,
    pub trace: ReasoningTrace,
    pub verbalizer_decision: Decision,
    pub answered_by: AnsweredBy,
    pub listener_response: String,
    /// `None` when the response could not be parsed.
    pub listener_decision: Option<Decision>,
    pub correct: bool,
    pub sync_reveal: CategoricalStimulus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scs: Option<ScsPair>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeLog {
    pub schema: String,
    pub episode_id: String,
    pub mode: PromptMode,
    pub config: EpisodeConfig,
    pub structure: LatentStructure,
    pub code_fingerprint: String,
    pub code: EpisodeCode,
    pub split: CombinatorialSplit,
    pub games: Vec<GameRecord>,
}

impl EpisodeLog {
    pub fn querying_games(&self) -> impl Iterator<Item = &GameRecord> {
        self.games.iter().filter(|g| g.plan.phase == Phase::Querying)
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("episode log serialises")
    }

    /// Structural checks on a finished log: phase order, one query per
    /// held-out vector, zero-shot integrity and consistent scoring flags.
    pub fn check_integrity(&self) -> Result<(), String> {
        let first_query = self
            .games
            .iter()
            .position(|g| g.plan.phase == Phase::Querying)
            .unwrap_or(self.games.len());
        if self.games[first_query..]
            .iter()
            .any(|g| g.plan.phase != Phase::Querying)
        {
            return Err("supporting game after querying phase began".into());
        }
        let mut queried = BTreeSet::new();
        for (i, g) in self.games.iter().enumerate() {
            if g.index != i {
                return Err(format!("game {i} carries index {}", g.index));
            }
            if g.plan.truth != ground_truth(&g.plan) {
                return Err(format!("game {i}: truth disagrees with plan vectors"));
            }
            if g.correct != (g.listener_decision == Some(g.plan.truth)) {
                return Err(format!("game {i}: correct flag inconsistent"));
            }
            if self.split.is_test(&g.plan.listener_observation)
                && g.plan.listener_observation != g.plan.speaker_target
            {
                return Err(format!("game {i}: held-out vector used as a distractor"));
            }
            match g.plan.phase {
                Phase::Supporting => {
                    if self.split.is_test(&g.plan.speaker_target) {
                        return Err(format!("game {i}: held-out vector shown in support"));
                    }
                }
                Phase::Querying => {
                    if !self.split.is_test(&g.plan.speaker_target) {
                        return Err(format!("game {i}: querying target not held out"));
                    }
                    if !queried.insert(g.plan.speaker_target.clone()) {
                        return Err(format!("game {i}: held-out vector queried twice"));
                    }
                }
            }
        }
        if queried.len() != self.split.test.len() {
            return Err("not every held-out vector was queried".into());
        }
        Ok(())
    }
}

/// Result of one played episode.
#[derive(Debug, Clone)]
pub struct EpisodeRun {
    pub log: EpisodeLog,
    pub transcript: Transcript,
}

/// What a listener backend is asked for one game.
pub struct DecisionRequest<'a> {
    pub episode_id: &'a str,
    pub game: usize,
    pub phase: Phase,
    /// Conversation so far, ending with this game's user turn.
    pub transcript: &'a Transcript,
    pub verbalizer: &'a VerbalizerStep,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ListenerReply {
    pub text: String,
    pub decision: Option<Decision>,
}

#[derive(Debug, Error)]
pub enum ListenerError {
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error("no scripted response for episode {episode} game {game}")]
    MissingScript { episode: String, game: usize },
}

/// A listener decides on (stimulus, message, history), all of which are
/// carried by the transcript in the request.
pub trait Listener {
    fn respond(&mut self, request: &DecisionRequest<'_>) -> Result<ListenerReply, ListenerError>;
}

/// Answers with the rule-based verbalizer's full reasoning.
#[derive(Debug, Default, Clone, Copy)]
pub struct OracleListener;

impl Listener for OracleListener {
    fn respond(&mut self, request: &DecisionRequest<'_>) -> Result<ListenerReply, ListenerError> {
        let step = request.verbalizer;
        Ok(ListenerReply {
            text: prompt::render_listener_turn(&step.trace, step.decision),
            decision: Some(step.decision),
        })
    }
}

/// Coin-flip baseline.
pub struct RandomListener {
    rng: rng::EpisodeRng,
}

impl RandomListener {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: rng::stream(seed, rng::LISTENER),
        }
    }
}

impl Listener for RandomListener {
    fn respond(&mut self, _: &DecisionRequest<'_>) -> Result<ListenerReply, ListenerError> {
        let d = crate::agents::random_listener_decide(&mut self.rng);
        Ok(ListenerReply {
            text: prompt::render_answer(d),
            decision: Some(d),
        })
    }
}

#[derive(Debug, Error)]
pub enum EpisodeError {
    #[error("invalid episode config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error("listener failed at episode {episode} game {game}: {source}")]
    Listener {
        episode: String,
        game: usize,
        #[source]
        source: ListenerError,
    },
}

impl EpisodeError {
    pub fn is_infeasible_split(&self) -> bool {
        matches!(
            self,
            EpisodeError::Domain(DomainError::InfeasibleSplit { .. })
                | EpisodeError::Agent(AgentError::Domain(DomainError::InfeasibleSplit { .. }))
        )
    }
}

/// Everything about an episode that is fixed before any game is played.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreparedEpisode {
    pub config: EpisodeConfig,
    pub structure: LatentStructure,
    pub code: EpisodeCode,
    pub split: CombinatorialSplit,
    pub plans: Vec<GamePlan>,
}

pub fn prepare_episode(
    config: &EpisodeConfig,
    registry: &CategoryRegistry,
) -> Result<PreparedEpisode, EpisodeError> {
    config.validate()?;
    let seed = config.seed;
    let structure = sample_latent_structure(
        registry,
        config.n_dim,
        config.v_min,
        config.v_max,
        &mut rng::stream(seed, rng::STRUCTURE),
    )?;
    let code = sample_episode_code(
        config.vocab_size,
        &structure,
        &mut rng::stream(seed, rng::CODE),
    )?;
    let split = make_split(
        &structure,
        config.n_test,
        config.s_shots,
        &mut rng::stream(seed, rng::SPLIT),
    )?;
    let plans = build_schedules(
        &structure,
        &split,
        config,
        &mut rng::stream(seed, rng::SCHEDULE),
    )?;
    Ok(PreparedEpisode {
        config: config.clone(),
        structure,
        code,
        split,
        plans,
    })
}

/// Generate and play one episode.
pub fn run_episode(
    config: &EpisodeConfig,
    registry: &CategoryRegistry,
    mode: PromptMode,
    listener: &mut dyn Listener,
) -> Result<EpisodeRun, EpisodeError> {
    let prepared = prepare_episode(config, registry)?;
    play_episode(&prepared, mode, listener)
}

pub fn play_episode(
    prepared: &PreparedEpisode,
    mode: PromptMode,
    listener: &mut dyn Listener,
) -> Result<EpisodeRun, EpisodeError> {
    let config = &prepared.config;
    let structure = &prepared.structure;
    let episode_id = config.episode_id();
    let mut scs_rng = rng::stream(config.seed, rng::SCS);

    let mut transcript = Transcript::new(&episode_id);
    transcript.push(
        TurnRole::System,
        prompt::render_system_prompt(config),
        None,
        None,
    );

    let mut verbalizer = Verbalizer::new();
    let mut games: Vec<GameRecord> = Vec::with_capacity(prepared.plans.len());
    let mut supporting_seen = 0usize;

    for (index, plan) in prepared.plans.iter().enumerate() {
        let listener_stimulus = render_categorical(structure, &plan.listener_observation)?;
        let sync_reveal = render_categorical(structure, &plan.speaker_target)?;
        let scs = match config.domain {
            StimulusDomain::Scs => Some(ScsPair {
                listener: render_scs(structure, &plan.listener_observation, &mut scs_rng)?,
                speaker: render_scs(structure, &plan.speaker_target, &mut scs_rng)?,
            }),
            StimulusDomain::Categorical => None,
        };
        let message = speaker_encode(structure, &plan.speaker_target, &prepared.code)?;

        let prev = games.last();
        let step = verbalizer.step(
            index,
            &listener_stimulus,
            &message,
            prev.map(|g| &g.sync_reveal),
        )?;

        let prev_sync = prev.map(|g| PrevSync {
            game: g.index,
            revealed: match &g.scs {
                Some(pair) => UserStimulus::Scs(&pair.speaker),
                None => UserStimulus::Categorical(&g.sync_reveal),
            },
            decision: g.listener_decision,
            correct: g.correct,
        });
        let shown = match &scs {
            Some(pair) => UserStimulus::Scs(&pair.listener),
            None => UserStimulus::Categorical(&listener_stimulus),
        };
        let user = prompt::render_user_turn(index, &shown, &message, prev_sync.as_ref());
        transcript.push(TurnRole::User, user, Some(index), Some(plan.phase));

        let exemplar = plan.phase == Phase::Supporting && supporting_seen < mode.exemplar_games();
        if plan.phase == Phase::Supporting {
            supporting_seen += 1;
        }
        let (reply, answered_by) = if exemplar {
            (
                ListenerReply {
                    text: prompt::render_listener_turn(&step.trace, step.decision),
                    decision: Some(step.decision),
                },
                AnsweredBy::Exemplar,
            )
        } else {
            let request = DecisionRequest {
                episode_id: &episode_id,
                game: index,
                phase: plan.phase,
                transcript: &transcript,
                verbalizer: &step,
            };
            let reply = listener
                .respond(&request)
                .map_err(|source| EpisodeError::Listener {
                    episode: episode_id.clone(),
                    game: index,
                    source,
                })?;
            (reply, AnsweredBy::Backend)
        };
        transcript.push(
            TurnRole::Listener,
            reply.text.clone(),
            Some(index),
            Some(plan.phase),
        );

        games.push(GameRecord {
            index,
            plan: plan.clone(),
            listener_stimulus,
            message,
            prediction: step.prediction,
            trace: step.trace,
            verbalizer_decision: step.decision,
            answered_by,
            listener_response: reply.text,
            listener_decision: reply.decision,
            correct: reply.decision == Some(plan.truth),
            sync_reveal,
            scs,
        });
    }

    let log = EpisodeLog {
        schema: EPISODE_SCHEMA.to_owned(),
        episode_id,
        mode,
        config: config.clone(),
        structure: structure.clone(),
        code_fingerprint: prepared.code.fingerprint(),
        code: prepared.code.clone(),
        split: prepared.split.clone(),
        games,
    };
    Ok(EpisodeRun { log, transcript })
}
