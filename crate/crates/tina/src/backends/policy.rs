//! Model-free policies used by benchmarks and tests: a shortest-path oracle
//! and a seeded random walker. Both are pure functions of the prompt and
//! their configuration, so runs replay byte-identically.

use std::collections::HashMap;
use std::sync::Arc;

use crate::navgraph::Environment;

use super::prompt_parse::{current_viewpoint, menu_entries};
use super::{
    BackendError, BackendReply, BackendResult, ChatBackend, ChatMessage, FixtureKey, Phase,
};

/// FNV-1a over the parts; stable across platforms and releases, unlike the
/// std hasher, so seeded choices replay forever.
pub(crate) fn stable_hash(parts: &[&str]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for part in parts {
        for byte in part.as_bytes() {
            h ^= *byte as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
        h ^= 0xff;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

/// Upper bound on navigation: always moves to the candidate geodesically
/// closest to the episode goal, stopping at the goal. Reads the current
/// viewpoint and the menu from the prompt, so it needs no mutable state.
pub struct OracleChat {
    /// Episode id (as used in fixture keys) to its world and goal viewpoint.
    episodes: HashMap<String, (Arc<Environment>, String)>,
}

impl OracleChat {
    pub fn new(episodes: HashMap<String, (Arc<Environment>, String)>) -> Self {
        OracleChat { episodes }
    }
}

impl ChatBackend for OracleChat {
    fn chat(&self, key: &FixtureKey, messages: &[ChatMessage], _temperature: f64) -> BackendResult {
        match key.phase {
            Phase::Think => Ok(BackendReply::once("(oracle policy)")),
            Phase::Questions => Ok(BackendReply::once("")),
            Phase::Act => {
                let (env, goal) = self.episodes.get(&key.episode).ok_or_else(|| {
                    BackendError::failure(format!(
                        "oracle has no goal for episode `{}`",
                        key.episode
                    ))
                })?;
                let here = current_viewpoint(messages).ok_or_else(|| {
                    BackendError::failure("act prompt carries no `Viewpoint:` line")
                })?;
                if &here == goal {
                    return Ok(BackendReply::once("Action: 0"));
                }
                let entries = menu_entries(messages);
                if entries.is_empty() {
                    return Ok(BackendReply::once("Action: 0"));
                }
                // a candidate is best when the step onto it plus the
                // remaining geodesic is minimal, i.e. it lies on a shortest path
                let mut best: Option<(f64, usize)> = None;
                for entry in &entries {
                    let step = env
                        .graph
                        .edge_length(&here, &entry.viewpoint)
                        .map_err(|e| BackendError::failure(e.to_string()))?;
                    let rest = env
                        .graph
                        .geodesic_distance(&entry.viewpoint, goal)
                        .map_err(|e| BackendError::failure(e.to_string()))?;
                    let d = step + rest;
                    if best.map(|(bd, _)| d < bd).unwrap_or(true) {
                        best = Some((d, entry.index));
                    }
                }
                let (_, index) = best.unwrap();
                Ok(BackendReply::once(format!("Action: {index}")))
            }
            other => Err(BackendError::failure(format!(
                "oracle policy does not serve phase `{other}`"
            ))),
        }
    }
}

/// Uniform random walker over the menu (stop included), driven by a stable
/// hash of `(seed, key)` so concurrent scheduling cannot change a run.
pub struct RandomPolicyChat {
    seed: u64,
}

impl RandomPolicyChat {
    pub fn new(seed: u64) -> Self {
        RandomPolicyChat { seed }
    }
}

impl ChatBackend for RandomPolicyChat {
    fn chat(&self, key: &FixtureKey, messages: &[ChatMessage], _temperature: f64) -> BackendResult {
        match key.phase {
            Phase::Think => Ok(BackendReply::once("(random walk)")),
            Phase::Questions => Ok(BackendReply::once(
                "1. What objects and pathways are visible in this direction?",
            )),
            Phase::Act => {
                let n = menu_entries(messages).len();
                let seed_text = self.seed.to_string();
                let key_text = key.to_string();
                let roll = stable_hash(&[&seed_text, &key_text]) % (n as u64 + 1);
                Ok(BackendReply::once(format!("Action: {roll}")))
            }
            other => Err(BackendError::failure(format!(
                "random policy does not serve phase `{other}`"
            ))),
        }
    }
}
