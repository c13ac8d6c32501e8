//! Question-answering interaction: turn the agent's reasoning into targeted
//! questions, answer them per candidate through a VQA backend, and attach
//! the exchanges to the candidate descriptions.
//!
//! Every generated question is asked of every candidate, so the menu stays
//! comparable across candidates. A single failed VQA call degrades to the
//! answer "unknown" rather than aborting the step; a missing fixture key,
//! by contrast, is fatal because scripted runs must be total.

use serde::{Deserialize, Serialize};

use crate::backends::{BackendError, Backends, ChatMessage, FixtureKey, Phase};
use crate::navgraph::{Candidate, Environment, GraphError};
use crate::perception::{Snapshot, SECTOR_NAMES};

/// Question asked when the model's question list cannot be parsed.
pub const FALLBACK_QUESTION: &str = "What objects and pathways are visible in this direction?";

/// VQA answers are clipped to this many characters.
pub const MAX_ANSWER_CHARS: usize = 200;

#[derive(Debug, thiserror::Error)]
pub enum InteractionError {
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// One step's intermediate reasoning.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Thought {
    pub step: usize,
    pub text: String,
}

/// A question asked about one candidate direction, with its answer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QAPair {
    pub question: String,
    pub answer: String,
    /// Viewpoint id of the candidate the question was asked about.
    pub candidate: String,
}

/// A menu entry: a candidate plus its description and any attached
/// question-answer exchanges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentedCandidate {
    /// 1-based menu number (0 is reserved for "stop").
    pub index: usize,
    pub candidate: Candidate,
    pub base_description: String,
    pub qa: Vec<QAPair>,
}

/// What an investigation produced: the questions asked and the enriched menu.
#[derive(Debug, Clone, Default)]
pub struct Investigation {
    pub questions: Vec<String>,
    pub menu: Vec<AugmentedCandidate>,
}

/// Ask the chat backend for up to `max_q` questions grounded in a thought.
///
/// The reply is parsed as a numbered list; when nothing parses, the single
/// [`FALLBACK_QUESTION`] is returned so the interaction still carries signal.
pub fn generate_questions(
    thought: &Thought,
    backends: &Backends,
    episode: &str,
    max_q: usize,
) -> Result<Vec<String>, BackendError> {
    debug_assert!(max_q >= 1);
    let key = FixtureKey::new(episode, thought.step, Phase::Questions);
    let messages = [
        ChatMessage::system(
            "You help a navigation agent inspect the directions it could move in. \
             Given the agent's current thought, list short yes/no or what-questions \
             about what might be visible in a candidate direction. Number them \
             `1.`, `2.`, ... one per line. No other text.",
        ),
        ChatMessage::user(format!(
            "== Thought ==\n{}\n\n== Request ==\nList up to {max_q} questions.",
            thought.text
        )),
    ];
    let reply = backends.agent_slot().chat(&key, &messages)?;
    let mut questions = parse_numbered_list(&reply);
    questions.truncate(max_q);
    if questions.is_empty() {
        questions.push(FALLBACK_QUESTION.to_string());
    }
    Ok(questions)
}

/// Pull the items out of a numbered-list reply. Lines that do not start
/// with `<digits>.`, `<digits>)` or `<digits>:` are ignored.
fn parse_numbered_list(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        let digits = line.chars().take_while(|c| c.is_ascii_digit()).count();
        if digits == 0 {
            continue;
        }
        let rest = &line[digits..];
        let Some(stripped) = rest
            .strip_prefix('.')
            .or_else(|| rest.strip_prefix(')'))
            .or_else(|| rest.strip_prefix(':'))
        else {
            continue;
        };
        let item = stripped.trim();
        if !item.is_empty() {
            out.push(item.to_string());
        }
    }
    out
}

/// Ask one question about one candidate's directional view.
pub fn answer_on_candidate(
    question: &str,
    candidate: &Candidate,
    env: &Environment,
    backends: &Backends,
    key: &FixtureKey,
) -> Result<String, InteractionError> {
    let cell = env.cell(&candidate.cell_ref)?;
    let raw = backends.vqa(key, cell, question)?;
    let mut answer: String = raw.trim().to_string();
    if answer.chars().count() > MAX_ANSWER_CHARS {
        answer = answer.chars().take(MAX_ANSWER_CHARS).collect();
    }
    Ok(answer)
}

/// Build the bare menu: descriptions and bearings only, no questions asked.
/// This is both the starting point of an investigation and the whole menu
/// when interaction is disabled.
pub fn bare_menu(
    cands: &[Candidate],
    snapshot: &Snapshot,
    include_distances: bool,
) -> Vec<AugmentedCandidate> {
    cands
        .iter()
        .enumerate()
        .map(|(i, candidate)| {
            let sector = snapshot.sector_of_capture_heading(candidate.cell_ref.heading_deg);
            let desc = &snapshot.descriptions[sector];
            let desc = if desc.is_empty() {
                "(no description)"
            } else {
                desc
            };
            let name = SECTOR_NAMES[sector];
            let base_description = if include_distances {
                format!("{name}, {:.1} m away | {desc}", candidate.euclid_dist)
            } else {
                format!("{name} | {desc}")
            };
            AugmentedCandidate {
                index: i + 1,
                candidate: candidate.clone(),
                base_description,
                qa: Vec::new(),
            }
        })
        .collect()
}

/// Generate questions from the thought and ask each of every candidate,
/// attaching the exchanges to the menu in question order.
#[allow(clippy::too_many_arguments)]
pub fn investigate_candidates(
    thought: &Thought,
    cands: &[Candidate],
    snapshot: &Snapshot,
    env: &Environment,
    backends: &Backends,
    episode: &str,
    max_q: usize,
    include_distances: bool,
) -> Result<Investigation, InteractionError> {
    debug_assert!(!cands.is_empty());
    let questions = generate_questions(thought, backends, episode, max_q)?;
    let mut menu = bare_menu(cands, snapshot, include_distances);
    for (qi, question) in questions.iter().enumerate() {
        for (ci, entry) in menu.iter_mut().enumerate() {
            let key =
                FixtureKey::new(episode, thought.step, Phase::Vqa).with_sub(qi * cands.len() + ci);
            let answer = match answer_on_candidate(question, &entry.candidate, env, backends, &key)
            {
                Ok(answer) => answer,
                Err(InteractionError::Backend(BackendError::Failure { message, .. })) => {
                    log::warn!(
                        "vqa failed for candidate `{}`, degrading to unknown: {message}",
                        entry.candidate.viewpoint
                    );
                    "unknown".to_string()
                }
                Err(fatal) => return Err(fatal),
            };
            entry.qa.push(QAPair {
                question: question.clone(),
                answer,
                candidate: entry.candidate.viewpoint.clone(),
            });
        }
    }
    Ok(Investigation { questions, menu })
}

/// Render menu entries the way the action prompt shows them: one line per
/// option plus indented `Q: ... A: ...` lines.
pub fn render_menu(menu: &[AugmentedCandidate]) -> Vec<String> {
    let mut lines = vec!["0: stop here".to_string()];
    for entry in menu {
        lines.push(format!(
            "{}: {} | {}",
            entry.index, entry.candidate.viewpoint, entry.base_description
        ));
        for qa in &entry.qa {
            lines.push(format!("   Q: {} A: {}", qa.question, qa.answer));
        }
    }
    lines
}
