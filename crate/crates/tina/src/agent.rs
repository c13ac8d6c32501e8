//! The core agent loop: observe, think, investigate, act, remember.
//!
//! Each step builds the observation snapshot, asks the chat model for a
//! thought, optionally enriches the candidate menu through question-answer
//! interaction, and asks the model to pick a menu entry. Moving updates the
//! pose (heading becomes the bearing just traveled, elevation resets to
//! level) and appends a compressed memory entry. Episodes terminate on an
//! explicit stop, on the step cap, or on an empty menu.
//!
//! Everything the model saw and said is recorded in per-step logs, so runs
//! are auditable after the fact.

use serde::{Deserialize, Serialize};

use crate::backends::{BackendError, Backends, ChatMessage, FixtureKey, Phase};
use crate::interaction::{
    bare_menu, investigate_candidates, render_menu, AugmentedCandidate, InteractionError, QAPair,
    Thought,
};
use crate::memory::{render_memory, summarize_step, MemoryBank};
use crate::navgraph::{absolute_bearing, candidates_at, Environment, GraphError, Pose};
use crate::perception::{
    build_snapshot, PerceptionError, PerceptionOptions, Snapshot, SnapshotContext,
};

/// Task framing sent as the first prompt section of every chat call.
pub const DEFAULT_TASK_DESCRIPTION: &str = "\
You are a navigation agent inside a building, moving between connected viewpoints.
Each step has four stages: (1) you receive an observation describing the eight \
directions around you, including nearby objects with their distances in meters; \
(2) you write a short Thought about what to do next; (3) questions may be asked \
about each candidate direction and the answers are attached to the candidate \
menu; (4) you choose an action from the numbered menu.
Reply to the menu with a single line of the form `Action: <number>`. \
`Action: 0` means stop; choose it when you believe you are at the place the \
instruction describes.";

/// Configuration of one run's agent behavior. The three ablation flags
/// reproduce the standard "without interaction / distances / segmentation"
/// settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AgentConfig {
    pub max_steps: usize,
    pub max_q: usize,
    pub qai_enabled: bool,
    pub include_distances: bool,
    pub use_segmentation: bool,
    /// Character budget for the rendered history section.
    pub memory_budget: usize,
    /// Re-prompts allowed when an action reply fails to parse.
    pub parse_retries: usize,
    /// Sampling temperature forwarded to chat backends; 0 = deterministic.
    pub temperature: f64,
}

impl Default for AgentConfig {
    fn default() -> Self {
        AgentConfig {
            max_steps: 15,
            max_q: 3,
            qai_enabled: true,
            include_distances: true,
            use_segmentation: true,
            memory_budget: 2000,
            parse_retries: 2,
            temperature: 0.0,
        }
    }
}

impl AgentConfig {
    pub fn perception_options(&self) -> PerceptionOptions {
        PerceptionOptions {
            use_segmentation: self.use_segmentation,
            include_distances: self.include_distances,
        }
    }
}

/// One episode as the agent sees it: a single instruction bound to a start.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeSpec {
    /// Stable id used in fixture keys and result records.
    pub id: String,
    pub instruction: String,
    pub start: String,
    /// Initial heading in degrees.
    pub heading: f64,
}

/// The agent's mutable state during an episode.
#[derive(Debug, Clone)]
pub struct AgentState {
    pub pose: Pose,
    pub step: usize,
    pub bank: MemoryBank,
    pub visited: Vec<String>,
}

/// A chosen action: move to a menu entry or stop.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Action {
    Move { index: usize, viewpoint: String },
    Stop,
}

/// Why action parsing failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParseErrorReason {
    NoActionLine,
    OutOfRange,
    NotANumber,
}

/// How an episode ended.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "detail", rename_all = "snake_case")]
pub enum Termination {
    Stopped,
    MaxSteps,
    Error(String),
}

/// Everything one executed step exposed to and received from the models.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepLog {
    pub step: usize,
    pub viewpoint: String,
    pub snapshot: String,
    pub thought: String,
    pub questions: Vec<String>,
    pub qa: Vec<QAPair>,
    pub menu: Vec<String>,
    pub raw_output: String,
    pub action: Action,
    pub parse_retries: usize,
    /// The memory entry this step contributed to the bank.
    pub memory: String,
}

/// The executed path with its full per-step record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub episode_id: String,
    pub visited: Vec<String>,
    pub actions: Vec<Action>,
    pub steps: Vec<StepLog>,
    pub termination: Termination,
}

/// The fixed-order prompt sections prepended to every chat call: task
/// framing, the episode instruction, and the rendered memory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Preamble {
    pub sections: [String; 3],
}

impl Preamble {
    /// The system message: sections joined by blank lines. Byte-deterministic
    /// given identical inputs.
    pub fn system_message(&self) -> String {
        self.sections.join("\n\n")
    }
}

/// Assemble the preamble sections in their fixed order.
pub fn build_preamble(
    task_desc: &str,
    instruction: &str,
    bank: &MemoryBank,
    cfg: &AgentConfig,
) -> Preamble {
    debug_assert!(!instruction.is_empty());
    Preamble {
        sections: [
            format!("== Task ==\n{task_desc}"),
            format!("== Instruction ==\n{instruction}"),
            format!("== History ==\n{}", render_memory(bank, cfg.memory_budget)),
        ],
    }
}

fn observation_block(viewpoint: &str, snapshot: &Snapshot) -> String {
    format!(
        "== Observation ==\nViewpoint: {viewpoint}\n{}",
        snapshot.render()
    )
}

/// Ask the model for the step's thought. An empty reply is retried once;
/// two empties yield the literal thought `(no thought)` so the loop can
/// continue and the log shows what happened.
pub fn think(
    snapshot: &Snapshot,
    viewpoint: &str,
    preamble: &Preamble,
    backends: &Backends,
    episode: &str,
    step: usize,
) -> Result<Thought, BackendError> {
    let slot = backends.agent_slot();
    let user = format!(
        "{}\n\nIn one short paragraph, reason about where to go next given the \
         instruction and history.\nThought:",
        observation_block(viewpoint, snapshot)
    );
    let messages = [
        ChatMessage::system(preamble.system_message()),
        ChatMessage::user(user),
    ];
    for attempt in 0..2 {
        let mut key = FixtureKey::new(episode, step, Phase::Think);
        if attempt > 0 {
            key = key.with_sub(attempt);
        }
        let text = slot.chat(&key, &messages)?;
        let text = text.trim();
        if !text.is_empty() {
            return Ok(Thought {
                step,
                text: text.to_string(),
            });
        }
    }
    log::warn!("empty thought twice at {episode}:{step}");
    Ok(Thought {
        step,
        text: "(no thought)".to_string(),
    })
}

/// Scan a reply for its last `Action:` line and decode it.
///
/// The match is case-insensitive; the payload may be `stop` or an integer
/// where 0 stops and 1..=n selects a menu entry. Decorations around the
/// number (`[2]`, `2.`) are tolerated.
pub fn parse_action(raw: &str, n_candidates: usize) -> Result<Action, ParseErrorReason> {
    let mut payload: Option<&str> = None;
    for line in raw.lines() {
        let trimmed = line.trim_start();
        let lower = trimmed.to_lowercase();
        if let Some(rest_at) = lower.find("action") {
            if rest_at == 0 {
                let after = trimmed["action".len()..].trim_start();
                if let Some(value) = after.strip_prefix(':') {
                    payload = Some(value.trim());
                }
            }
        }
    }
    let payload = payload.ok_or(ParseErrorReason::NoActionLine)?;
    let token = payload.split_whitespace().next().unwrap_or("");
    let token = token.trim_matches(|c: char| !c.is_ascii_alphanumeric());
    if token.eq_ignore_ascii_case("stop") {
        return Ok(Action::Stop);
    }
    let index: usize = token.parse().map_err(|_| ParseErrorReason::NotANumber)?;
    if index == 0 {
        Ok(Action::Stop)
    } else if index <= n_candidates {
        // viewpoint resolved by the caller, which owns the menu
        Ok(Action::Move {
            index,
            viewpoint: String::new(),
        })
    } else {
        Err(ParseErrorReason::OutOfRange)
    }
}

/// Outcome of the action stage: the decoded action plus the raw reply and
/// how many re-prompts it took.
pub struct ActOutcome {
    pub action: Action,
    pub raw_output: String,
    pub retries: usize,
}

/// Show the menu and decode the model's choice.
///
/// On a malformed reply the model is re-prompted with a format reminder up
/// to `cfg.parse_retries` times; persistent failure falls back to a logged
/// stop, which is safe and measurable where a guessed move would corrupt
/// the trajectory.
#[allow(clippy::too_many_arguments)]
pub fn act(
    menu: &[AugmentedCandidate],
    snapshot: &Snapshot,
    thought: &Thought,
    viewpoint: &str,
    preamble: &Preamble,
    backends: &Backends,
    episode: &str,
    step: usize,
    cfg: &AgentConfig,
) -> Result<ActOutcome, BackendError> {
    debug_assert!(!menu.is_empty());
    let slot = backends.agent_slot();
    let menu_lines = render_menu(menu);
    let base_user = format!(
        "{}\n\n== Thought ==\n{}\n\n== Candidates ==\n{}\n\n== Respond ==\nChoose one \
         option. Reply with a single line `Action: <number>`.",
        observation_block(viewpoint, snapshot),
        thought.text,
        menu_lines.join("\n")
    );
    let mut messages = vec![
        ChatMessage::system(preamble.system_message()),
        ChatMessage::user(base_user),
    ];
    let mut raw = String::new();
    for attempt in 0..=cfg.parse_retries {
        let mut key = FixtureKey::new(episode, step, Phase::Act);
        if attempt > 0 {
            key = key.with_sub(attempt);
        }
        raw = slot.chat(&key, &messages)?;
        match parse_action(&raw, menu.len()) {
            Ok(Action::Move { index, .. }) => {
                return Ok(ActOutcome {
                    action: Action::Move {
                        index,
                        viewpoint: menu[index - 1].candidate.viewpoint.clone(),
                    },
                    raw_output: raw,
                    retries: attempt,
                });
            }
            Ok(Action::Stop) => {
                return Ok(ActOutcome {
                    action: Action::Stop,
                    raw_output: raw,
                    retries: attempt,
                })
            }
            Err(reason) => {
                log::debug!(
                    "action parse failure at {episode}:{step} attempt {attempt}: {reason:?}"
                );
                messages.push(ChatMessage {
                    role: crate::backends::Role::Assistant,
                    content: raw.clone(),
                });
                messages.push(ChatMessage::user(format!(
                    "That reply did not contain a valid action line. Reply with exactly \
                     one line `Action: <number>`, where <number> is 0 to stop or 1..{} \
                     to move.",
                    menu.len()
                )));
            }
        }
    }
    log::warn!(
        "action parsing failed after {} re-prompts at {episode}:{step}, stopping",
        cfg.parse_retries
    );
    Ok(ActOutcome {
        action: Action::Stop,
        raw_output: raw,
        retries: cfg.parse_retries,
    })
}

#[derive(Debug, thiserror::Error)]
enum StepError {
    #[error("environment error: {0}")]
    Env(#[from] GraphError),
    #[error("perception error: {0}")]
    Perception(#[from] PerceptionError),
    #[error("backend error: {0}")]
    Backend(#[from] BackendError),
}

impl From<InteractionError> for StepError {
    fn from(e: InteractionError) -> Self {
        match e {
            InteractionError::Backend(b) => StepError::Backend(b),
            InteractionError::Graph(g) => StepError::Env(g),
        }
    }
}

/// Run one full episode and return its trajectory. Failures never panic the
/// harness: they terminate the episode with `Termination::Error`, keeping
/// the visited prefix and step logs gathered so far.
pub fn run_episode(
    env: &Environment,
    episode: &EpisodeSpec,
    cfg: &AgentConfig,
    backends: &Backends,
) -> Trajectory {
    let mut state = AgentState {
        pose: Pose::new(episode.start.clone(), episode.heading, 0),
        step: 0,
        bank: MemoryBank::new(),
        visited: vec![episode.start.clone()],
    };
    let mut trajectory = Trajectory {
        episode_id: episode.id.clone(),
        visited: vec![episode.start.clone()],
        actions: Vec::new(),
        steps: Vec::new(),
        termination: Termination::MaxSteps,
    };
    if !env.graph.contains(&episode.start) {
        trajectory.termination =
            Termination::Error(format!("unknown start viewpoint `{}`", episode.start));
        return trajectory;
    }

    loop {
        match run_step(env, episode, cfg, backends, &mut state, &mut trajectory) {
            Ok(stopped) => {
                if stopped {
                    trajectory.termination = Termination::Stopped;
                    break;
                }
            }
            Err(e) => {
                trajectory.termination = Termination::Error(e.to_string());
                break;
            }
        }
        if state.step >= cfg.max_steps {
            trajectory.termination = Termination::MaxSteps;
            break;
        }
    }
    trajectory
}

/// Execute one step; `Ok(true)` means the episode stopped.
fn run_step(
    env: &Environment,
    episode: &EpisodeSpec,
    cfg: &AgentConfig,
    backends: &Backends,
    state: &mut AgentState,
    trajectory: &mut Trajectory,
) -> Result<bool, StepError> {
    let step = state.step;
    let viewpoint = state.pose.viewpoint.clone();
    let cells = env.cells(&viewpoint)?;
    let ctx = SnapshotContext {
        depths: env.depths(),
        consolidate: backends.consolidate_slot(),
        episode: &episode.id,
        step,
    };
    let mut snapshot = build_snapshot(cells, &state.pose, &cfg.perception_options(), &ctx)?;
    caption_missing_cells(
        env,
        backends,
        &episode.id,
        step,
        &state.pose,
        cfg,
        &mut snapshot,
    )?;

    let preamble = build_preamble(
        DEFAULT_TASK_DESCRIPTION,
        &episode.instruction,
        &state.bank,
        cfg,
    );
    let thought = think(
        &snapshot,
        &viewpoint,
        &preamble,
        backends,
        &episode.id,
        step,
    )?;

    let cands = candidates_at(env, &state.pose)?;

    // dead end: no candidates means the only possible action is stopping
    if cands.is_empty() {
        let entry = finish_step(
            cfg,
            backends,
            episode,
            step,
            &snapshot,
            &thought,
            &[],
            "stop",
        );
        let memory = entry.summary.clone();
        state.bank.push(entry);
        trajectory.actions.push(Action::Stop);
        trajectory.steps.push(StepLog {
            step,
            viewpoint,
            snapshot: snapshot.render(),
            thought: thought.text,
            questions: Vec::new(),
            qa: Vec::new(),
            menu: Vec::new(),
            raw_output: "(no candidates: forced stop)".to_string(),
            action: Action::Stop,
            parse_retries: 0,
            memory,
        });
        state.step += 1;
        return Ok(true);
    }

    let (questions, menu) = if cfg.qai_enabled {
        let inv = investigate_candidates(
            &thought,
            &cands,
            &snapshot,
            env,
            backends,
            &episode.id,
            cfg.max_q,
            cfg.include_distances,
        )?;
        (inv.questions, inv.menu)
    } else {
        (
            Vec::new(),
            bare_menu(&cands, &snapshot, cfg.include_distances),
        )
    };

    let outcome = act(
        &menu,
        &snapshot,
        &thought,
        &viewpoint,
        &preamble,
        backends,
        &episode.id,
        step,
        cfg,
    )?;

    let (action_taken, stopped) = match &outcome.action {
        Action::Stop => ("stop".to_string(), true),
        Action::Move {
            viewpoint: target, ..
        } => {
            let from = *env.graph.position(&viewpoint)?;
            let to = *env.graph.position(target)?;
            debug_assert!(env.graph.has_edge(&viewpoint, target));
            let new_heading = absolute_bearing(&from, &to)?;
            state.pose = Pose::new(target.clone(), new_heading, 0);
            state.visited.push(target.clone());
            trajectory.visited.push(target.clone());
            (target.clone(), false)
        }
    };

    let entry = finish_step(
        cfg,
        backends,
        episode,
        step,
        &snapshot,
        &thought,
        &menu,
        &action_taken,
    );
    let memory = entry.summary.clone();
    state.bank.push(entry);
    trajectory.actions.push(outcome.action.clone());
    trajectory.steps.push(StepLog {
        step,
        viewpoint,
        snapshot: snapshot.render(),
        thought: thought.text,
        questions,
        qa: menu.iter().flat_map(|m| m.qa.iter().cloned()).collect(),
        menu: render_menu(&menu),
        raw_output: outcome.raw_output,
        action: outcome.action,
        parse_retries: outcome.retries,
        memory,
    });
    state.step += 1;
    Ok(stopped)
}

#[allow(clippy::too_many_arguments)]
fn finish_step(
    cfg: &AgentConfig,
    backends: &Backends,
    episode: &EpisodeSpec,
    step: usize,
    snapshot: &Snapshot,
    thought: &Thought,
    menu: &[AugmentedCandidate],
    action_taken: &str,
) -> crate::memory::MemoryEntry {
    let _ = cfg;
    let slot = backends.summarize_slot();
    summarize_step(
        step,
        snapshot,
        thought,
        menu,
        action_taken,
        slot.as_ref().map(|s| (s, episode.id.as_str())),
    )
}

/// Fill empty sector descriptions from the captioner when cells carry image
/// references; live-backend plumbing, inert in simulator runs.
fn caption_missing_cells(
    env: &Environment,
    backends: &Backends,
    episode: &str,
    step: usize,
    pose: &Pose,
    cfg: &AgentConfig,
    snapshot: &mut Snapshot,
) -> Result<(), StepError> {
    let _ = cfg;
    for sector in 0..8 {
        if !snapshot.descriptions[sector].is_empty() {
            continue;
        }
        let heading = crate::perception::CAPTURE_HEADINGS
            [(snapshot.anchor_heading_deg as usize / 45 + sector) % 8];
        let cells = env.cells(&pose.viewpoint)?;
        let Some(cell) = cells
            .iter()
            .find(|c| c.heading_deg == heading && c.elevation_deg == 0 && c.image_ref.is_some())
        else {
            continue;
        };
        let image_ref = cell.image_ref.as_deref().unwrap();
        let key = FixtureKey::new(episode, step, Phase::Caption).with_sub(sector);
        if let Some(result) = backends.caption(&key, image_ref) {
            snapshot.descriptions[sector] = result.map_err(StepError::Backend)?;
        }
    }
    Ok(())
}
