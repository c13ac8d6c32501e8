//! A model-free chat stand-in: a token-overlap chooser.
//!
//! It reads the fixed prompt structure and behaves like a very literal
//! navigator: the thought echoes the instruction's content words, questions
//! ask whether those words are visible, and the action stage scores each
//! menu entry by how many instruction words it mentions, weighting
//! affirmative question answers double. "Closer/nearest" instructions break
//! score ties by the candidate's stated distance; remaining ties resolve by
//! a seeded stable hash, which is the chance-level behavior benchmarks care
//! about. It stops once the newest history line mentions an instruction
//! word, that is, once memory says the target has been seen.

use super::policy::stable_hash;
use super::prompt_parse::{menu_entries, section_in_messages, MenuEntry};
use super::{
    BackendError, BackendReply, BackendResult, ChatBackend, ChatMessage, FixtureKey, Phase,
};

/// Words carrying no navigation signal, skipped when extracting content
/// tokens. Includes the words of this backend's own thought template so
/// token extraction from thoughts stays clean.
const STOPWORDS: &[&str] = &[
    "a",
    "an",
    "the",
    "to",
    "of",
    "in",
    "on",
    "at",
    "and",
    "or",
    "is",
    "are",
    "there",
    "this",
    "that",
    "with",
    "by",
    "for",
    "from",
    "into",
    "go",
    "walk",
    "move",
    "head",
    "find",
    "reach",
    "turn",
    "then",
    "it",
    "its",
    "your",
    "you",
    "please",
    "looking",
    "toward",
    "towards",
    "until",
    "here",
    "where",
    "what",
    "which",
    "when",
    "how",
    "do",
    "does",
    "see",
    "visible",
    "direction",
    "closer",
    "closest",
    "nearer",
    "nearest",
    "near",
    "next",
    "room",
    "around",
    "stop",
];

fn is_stopword(word: &str) -> bool {
    STOPWORDS.contains(&word)
}

/// Lowercased alphanumeric words of length >= 2, stopwords removed,
/// first-occurrence order preserved.
fn content_tokens(text: &str) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    let lower = text.to_lowercase();
    for word in lower.split(|c: char| !c.is_ascii_alphanumeric()) {
        if word.len() < 2 || word.chars().all(|c| c.is_ascii_digit()) || is_stopword(word) {
            continue;
        }
        if !out.iter().any(|w| w == word) {
            out.push(word.to_string());
        }
    }
    out
}

/// Whole-word occurrence count of `token` in `text` (both lowercase).
fn count_word(text: &str, token: &str) -> usize {
    let mut count = 0;
    let mut start = 0;
    while let Some(found) = text[start..].find(token) {
        let at = start + found;
        let end = at + token.len();
        let left_ok = at == 0 || !text.as_bytes()[at - 1].is_ascii_alphanumeric();
        let right_ok = end == text.len() || !text.as_bytes()[end].is_ascii_alphanumeric();
        if left_ok && right_ok {
            count += 1;
        }
        start = at + 1;
    }
    count
}

fn score_entry(entry: &MenuEntry, tokens: &[String]) -> usize {
    let lower = entry.text.to_lowercase();
    let mut score = 0;
    for token in tokens {
        score += count_word(&lower, token);
    }
    // affirmative answers are the strongest evidence: count their tokens again, doubled
    for line in lower.lines() {
        if let Some(answer) = line.split(" a: ").nth(1) {
            if answer.trim_start().starts_with("yes") {
                for token in tokens {
                    score += 2 * count_word(answer, token);
                }
            }
        }
    }
    score
}

/// Parse `<number> m away` from an entry's menu line.
fn stated_distance(entry: &MenuEntry) -> Option<f64> {
    let line = entry.text.lines().next()?;
    let at = line.find(" m away")?;
    line[..at]
        .rsplit(|c: char| c.is_whitespace() || c == ',')
        .find_map(|tok| {
            let tok = tok.trim();
            if tok.is_empty() {
                None
            } else {
                tok.parse::<f64>().ok()
            }
        })
}

#[derive(Debug, Clone, Copy)]
pub struct HeuristicChat {
    seed: u64,
}

impl HeuristicChat {
    pub fn new(seed: u64) -> Self {
        HeuristicChat { seed }
    }

    fn act(&self, key: &FixtureKey, messages: &[ChatMessage]) -> String {
        let instruction = section_in_messages(messages, "Instruction").unwrap_or("");
        let tokens = content_tokens(instruction);

        // arrived? the newest memory line mentioning an instruction word
        // means the previous step already found the target
        if let Some(history) = section_in_messages(messages, "History") {
            if let Some(newest) = history.lines().last() {
                if newest != crate::memory::EMPTY_BANK_TEXT {
                    let lower = newest.to_lowercase();
                    if tokens.iter().any(|t| count_word(&lower, t) > 0) {
                        return "Action: 0".to_string();
                    }
                }
            }
        }

        let entries = menu_entries(messages);
        if entries.is_empty() {
            return "Action: 0".to_string();
        }
        let scores: Vec<usize> = entries.iter().map(|e| score_entry(e, &tokens)).collect();
        let best = *scores.iter().max().unwrap();
        let mut winners: Vec<&MenuEntry> = entries
            .iter()
            .zip(&scores)
            .filter(|(_, s)| **s == best)
            .map(|(e, _)| e)
            .collect();

        if winners.len() > 1 {
            let wants_nearest = ["closer", "closest", "nearest", "nearer"]
                .iter()
                .any(|w| count_word(&instruction.to_lowercase(), w) > 0);
            if wants_nearest {
                if let Some(nearest) = winners
                    .iter()
                    .filter_map(|e| stated_distance(e).map(|d| (d, *e)))
                    .min_by(|a, b| a.0.total_cmp(&b.0))
                {
                    return format!("Action: {}", nearest.1.index);
                }
            }
            // chance level: seeded stable hash over the tied entries
            let seed_text = self.seed.to_string();
            let key_text = key.to_string();
            let menu_text: String = winners
                .iter()
                .map(|e| e.text.as_str())
                .collect::<Vec<_>>()
                .join("\n");
            let pick = stable_hash(&[&seed_text, &key_text, &menu_text]) as usize % winners.len();
            return format!("Action: {}", winners.swap_remove(pick).index);
        }
        format!("Action: {}", winners[0].index)
    }
}

impl ChatBackend for HeuristicChat {
    fn chat(&self, key: &FixtureKey, messages: &[ChatMessage], _temperature: f64) -> BackendResult {
        match key.phase {
            Phase::Think => {
                let instruction = section_in_messages(messages, "Instruction").unwrap_or("");
                let tokens = content_tokens(instruction);
                let text = if tokens.is_empty() {
                    "Looking around.".to_string()
                } else {
                    format!("Looking for: {}.", tokens.join(", "))
                };
                Ok(BackendReply::once(text))
            }
            Phase::Questions => {
                let thought = section_in_messages(messages, "Thought").unwrap_or("");
                let tokens = content_tokens(thought);
                if tokens.is_empty() {
                    return Ok(BackendReply::once(""));
                }
                let lines: Vec<String> = tokens
                    .iter()
                    .take(3)
                    .enumerate()
                    .map(|(i, t)| format!("{}. Is there a {t} in this direction?", i + 1))
                    .collect();
                Ok(BackendReply::once(lines.join("\n")))
            }
            Phase::Act => Ok(BackendReply::once(self.act(key, messages))),
            other => Err(BackendError::failure(format!(
                "heuristic backend does not serve phase `{other}`"
            ))),
        }
    }
}
