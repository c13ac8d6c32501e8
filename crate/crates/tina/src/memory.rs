//! Trajectory memory: each completed step is compressed into one bounded
//! entry, and the bank renders into the history section of every prompt.
//!
//! Entries are capped at [`MAX_SUMMARY_CHARS`] characters and rendering is
//! recency-biased: when the bank outgrows its character budget, the oldest
//! entries collapse into a single "(k earlier steps elided)" line. The
//! newest entry is never elided.

use serde::{Deserialize, Serialize};

use crate::backends::{BackendError, ChatMessage, ChatSlot, FixtureKey, Phase};
use crate::interaction::{AugmentedCandidate, Thought};
use crate::perception::Snapshot;

/// Upper bound on one entry's summary text, in characters.
pub const MAX_SUMMARY_CHARS: usize = 400;

/// Rendering of an empty bank.
pub const EMPTY_BANK_TEXT: &str = "(no prior steps)";

/// One remembered step.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MemoryEntry {
    pub step: usize,
    pub summary: String,
    /// Viewpoint id moved to, or `"stop"`.
    pub action_taken: String,
}

/// Ordered per-episode memory. One entry per completed step.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MemoryBank {
    entries: Vec<MemoryEntry>,
}

impl MemoryBank {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, entry: MemoryEntry) {
        debug_assert!(
            self.entries
                .last()
                .map(|e| e.step < entry.step)
                .unwrap_or(true),
            "memory entries must be pushed in step order"
        );
        self.entries.push(entry);
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[MemoryEntry] {
        &self.entries
    }
}

fn truncate_chars(text: &str, max: usize) -> String {
    if text.chars().count() <= max {
        text.to_string()
    } else {
        text.chars().take(max).collect()
    }
}

/// Compress one completed step into a memory entry.
///
/// With a summarization slot the model writes the summary (truncated to the
/// entry cap). Without one, or when the call fails, a deterministic template
/// is used: `Step {t}: saw ...; thought ...; moved to ...`.
pub fn summarize_step(
    step: usize,
    snapshot: &Snapshot,
    thought: &Thought,
    menu: &[AugmentedCandidate],
    action_taken: &str,
    chat: Option<(&ChatSlot<'_>, &str)>,
) -> MemoryEntry {
    if let Some((slot, episode)) = chat {
        let key = FixtureKey::new(episode, step, Phase::Summarize);
        let menu_text: Vec<String> = menu
            .iter()
            .map(|m| format!("{}: {}", m.index, m.base_description))
            .collect();
        let messages = [
            ChatMessage::system(
                "Summarize one step of a navigation episode in at most two short \
                 sentences: what was seen, what was decided, where the agent moved. \
                 Reply with the summary only.",
            ),
            ChatMessage::user(format!(
                "Observation:\n{}\nThought: {}\nCandidates:\n{}\nAction: {}",
                snapshot.render(),
                thought.text,
                menu_text.join("\n"),
                action_taken
            )),
        ];
        match slot.chat(&key, &messages) {
            Ok(text) => {
                let summary = truncate_chars(text.trim(), MAX_SUMMARY_CHARS);
                if !summary.is_empty() {
                    return MemoryEntry {
                        step,
                        summary,
                        action_taken: action_taken.to_string(),
                    };
                }
                log::warn!("summarizer returned empty text at step {step}, using template");
            }
            Err(BackendError::Failure { message, .. }) => {
                log::warn!("summarizer failed at step {step}, using template: {message}");
            }
            Err(miss @ BackendError::FixtureMiss { .. }) => {
                // A scripted summarizer with a hole is a broken fixture, but
                // memory must never sink an episode; fall through loudly.
                log::error!("summarizer fixture miss at step {step}: {miss}");
            }
        }
    }
    MemoryEntry {
        step,
        summary: truncate_chars(
            &fallback_summary(step, snapshot, thought, action_taken),
            MAX_SUMMARY_CHARS,
        ),
        action_taken: action_taken.to_string(),
    }
}

/// The deterministic no-model summary template.
fn fallback_summary(
    step: usize,
    snapshot: &Snapshot,
    thought: &Thought,
    action_taken: &str,
) -> String {
    let saw = if snapshot.annotations.is_empty() {
        let words: Vec<&str> = snapshot.descriptions[0]
            .split_whitespace()
            .take(8)
            .collect();
        if words.is_empty() {
            "nothing notable".to_string()
        } else {
            words.join(" ")
        }
    } else {
        let mut nearest: Vec<(&f64, &str)> = snapshot
            .annotations
            .iter()
            .map(|a| (&a.distance_m, a.label.as_str()))
            .collect();
        nearest.sort_by(|a, b| a.0.total_cmp(b.0).then_with(|| a.1.cmp(b.1)));
        nearest
            .iter()
            .take(2)
            .map(|(_, l)| *l)
            .collect::<Vec<_>>()
            .join(", ")
    };
    let thought_head: Vec<&str> = thought.text.split_whitespace().take(12).collect();
    format!(
        "Step {step}: saw {saw}; thought {}; moved to {action_taken}",
        thought_head.join(" ")
    )
}

/// Render the bank oldest to newest as `t. summary` lines within a character
/// budget. Oldest entries are elided first; the newest entry never is.
pub fn render_memory(bank: &MemoryBank, budget: usize) -> String {
    debug_assert!(budget >= MAX_SUMMARY_CHARS, "memory budget below one entry");
    if bank.is_empty() {
        return EMPTY_BANK_TEXT.to_string();
    }
    let lines: Vec<String> = bank
        .entries()
        .iter()
        .map(|e| format!("{}. {}", e.step, e.summary))
        .collect();
    let mut elided = 0usize;
    loop {
        let mut out_lines: Vec<&str> = Vec::with_capacity(lines.len() - elided + 1);
        let elision_line;
        if elided > 0 {
            elision_line = format!("({elided} earlier steps elided)");
            out_lines.push(&elision_line);
        }
        out_lines.extend(lines[elided..].iter().map(|s| s.as_str()));
        let rendered = out_lines.join("\n");
        if rendered.chars().count() <= budget || elided == lines.len() - 1 {
            return rendered;
        }
        elided += 1;
    }
}
