//! A model-free VQA stand-in that answers from a cell's ground-truth object
//! records.
//!
//! The rule: if any object label occurs in the question (case-insensitive,
//! whole words), the nearest such object is reported as visible, with its
//! distance when known. Otherwise the answer is "no". This makes the
//! question-answering channel carry real information at desk scale: the
//! answers derive from annotations that captions do not reveal.

use crate::perception::DirectionalCell;

use super::{BackendReply, BackendResult, FixtureKey, VqaBackend};

#[derive(Debug, Clone, Copy, Default)]
pub struct SimulatorVqa;

/// Whole-word, case-insensitive containment of `label` in `question`.
/// Labels may span several words ("coffee table").
fn label_in_question(label: &str, question: &str) -> bool {
    let label = label.to_lowercase();
    let question = question.to_lowercase();
    if label.is_empty() {
        return false;
    }
    let mut start = 0;
    while let Some(found) = question[start..].find(&label) {
        let at = start + found;
        let end = at + label.len();
        let left_ok = at == 0 || !question.as_bytes()[at - 1].is_ascii_alphanumeric();
        let right_ok = end == question.len() || !question.as_bytes()[end].is_ascii_alphanumeric();
        if left_ok && right_ok {
            return true;
        }
        start = at + 1;
    }
    false
}

impl VqaBackend for SimulatorVqa {
    fn answer(&self, _key: &FixtureKey, cell: &DirectionalCell, question: &str) -> BackendResult {
        let mut best: Option<&crate::perception::ObjectRecord> = None;
        for object in &cell.objects {
            if !label_in_question(&object.label, question) {
                continue;
            }
            best = match best {
                None => Some(object),
                Some(current) => {
                    // nearest known distance wins; unknown distances sort last
                    let cur = current.known_distance().unwrap_or(f64::INFINITY);
                    let new = object.known_distance().unwrap_or(f64::INFINITY);
                    if new < cur {
                        Some(object)
                    } else {
                        Some(current)
                    }
                }
            };
        }
        let text = match best {
            Some(object) => match object.known_distance() {
                Some(d) => format!("yes, a {} is visible ({:.1} m away)", object.label, d),
                None => format!("yes, a {} is visible", object.label),
            },
            None => "no".to_string(),
        };
        Ok(BackendReply::once(text))
    }
}
