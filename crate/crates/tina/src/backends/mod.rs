//! Uniform interfaces to the external models the agent leans on: a chat LLM,
//! a visual question answering model, and an image captioner.
//!
//! Three families of implementations exist:
//!
//! - [`http`]: remote model servers speaking the de-facto chat-completions
//!   JSON schema (plus a small VQA/caption protocol), with retry and backoff;
//! - [`scripted`]: fixture replay keyed by [`FixtureKey`], for deterministic
//!   tests and replayable runs;
//! - [`heuristic`] and [`policy`]: model-free stand-ins (a token-overlap
//!   chooser, a shortest-path oracle, a seeded random walker) that make
//!   offline benchmarks meaningful.
//!
//! Every invocation, whatever the implementation, appends one record to a
//! shared [`CallLog`]. Ablation assertions in the evaluation layer (for
//! example "no VQA calls were made in this configuration") are grounded in
//! that log rather than in trust.

use std::fmt;
use std::sync::{Arc, Mutex};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::perception::DirectionalCell;

pub mod heuristic;
pub mod http;
pub mod policy;
mod prompt_parse;
pub mod scripted;
pub mod simulator;

pub use heuristic::HeuristicChat;
pub use http::{HttpChat, HttpChatConfig, HttpVision, HttpVisionConfig};
pub use policy::{OracleChat, RandomPolicyChat};
pub use scripted::ScriptedChat;
pub use simulator::SimulatorVqa;

/// One turn of a chat conversation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

impl ChatMessage {
    pub fn system(content: impl Into<String>) -> Self {
        ChatMessage {
            role: Role::System,
            content: content.into(),
        }
    }

    pub fn user(content: impl Into<String>) -> Self {
        ChatMessage {
            role: Role::User,
            content: content.into(),
        }
    }
}

/// Which call in an episode a backend invocation belongs to.
///
/// The first five phases are the chat calls a scripted fixture file can
/// answer; `Vqa` and `Caption` only ever appear in the call log.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Think,
    Act,
    Questions,
    Consolidate,
    Summarize,
    Vqa,
    Caption,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Think => "think",
            Phase::Act => "act",
            Phase::Questions => "questions",
            Phase::Consolidate => "consolidate",
            Phase::Summarize => "summarize",
            Phase::Vqa => "vqa",
            Phase::Caption => "caption",
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Addresses one backend call within one episode: `<episode>:<step>:<phase>`
/// plus an optional sub-index for phases that fire more than once per step
/// (consolidation runs once per direction, retried calls count attempts).
///
/// The `Display` form is exactly the key grammar of scripted fixture files.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FixtureKey {
    pub episode: String,
    pub step: usize,
    pub phase: Phase,
    pub sub: Option<usize>,
}

impl FixtureKey {
    pub fn new(episode: impl Into<String>, step: usize, phase: Phase) -> Self {
        FixtureKey {
            episode: episode.into(),
            step,
            phase,
            sub: None,
        }
    }

    pub fn with_sub(mut self, sub: usize) -> Self {
        self.sub = Some(sub);
        self
    }
}

impl fmt::Display for FixtureKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.episode, self.step, self.phase)?;
        if let Some(i) = self.sub {
            write!(f, ":{i}")?;
        }
        Ok(())
    }
}

/// Errors surfaced by backend implementations.
#[derive(Debug, Clone, thiserror::Error)]
pub enum BackendError {
    /// The call failed after exhausting its retry budget.
    #[error("backend failure after {attempts} attempt(s){}: {message}", status.map(|s| format!(" (status {s})")).unwrap_or_default())]
    Failure {
        status: Option<u16>,
        attempts: u32,
        message: String,
    },
    /// A scripted backend was asked for a key its fixture file does not
    /// define. Always fatal: fixtures must be total for the run they drive.
    #[error("fixture has no entry for key `{key}`")]
    FixtureMiss { key: String },
}

impl BackendError {
    pub fn failure(message: impl Into<String>) -> Self {
        BackendError::Failure {
            status: None,
            attempts: 1,
            message: message.into(),
        }
    }

    pub fn attempts(&self) -> u32 {
        match self {
            BackendError::Failure { attempts, .. } => *attempts,
            BackendError::FixtureMiss { .. } => 1,
        }
    }
}

/// A successful backend response plus how many attempts it took.
#[derive(Debug, Clone)]
pub struct BackendReply {
    pub text: String,
    pub attempts: u32,
}

impl BackendReply {
    pub fn once(text: impl Into<String>) -> Self {
        BackendReply {
            text: text.into(),
            attempts: 1,
        }
    }
}

pub type BackendResult = Result<BackendReply, BackendError>;

/// A chat completion backend. Implementations must be pure functions of
/// `(key, messages)` when they claim determinism; the HTTP implementation is
/// as deterministic as the remote model allows.
pub trait ChatBackend: Send + Sync {
    fn chat(&self, key: &FixtureKey, messages: &[ChatMessage], temperature: f64) -> BackendResult;
}

/// A visual question answering backend. Offline implementations answer from
/// the cell's ground-truth object records; the HTTP implementation posts the
/// cell's image reference together with the question.
pub trait VqaBackend: Send + Sync {
    fn answer(&self, key: &FixtureKey, cell: &DirectionalCell, question: &str) -> BackendResult;
}

/// An image captioning backend, used only when a cell carries an image
/// reference but no precomputed caption.
pub trait CaptionBackend: Send + Sync {
    fn caption(&self, key: &FixtureKey, image_ref: &str) -> BackendResult;
}

/// One entry of the backend call log.
#[derive(Debug, Clone, Serialize)]
pub struct CallRecord {
    /// `"chat"`, `"vqa"` or `"caption"`.
    pub backend: &'static str,
    pub key: String,
    pub phase: Phase,
    pub attempts: u32,
    pub latency_ms: u64,
    pub ok: bool,
}

/// Append-only log of every backend invocation in a run. Clones share the
/// same underlying log; appends are safe under concurrent episodes.
#[derive(Debug, Clone, Default)]
pub struct CallLog {
    records: Arc<Mutex<Vec<CallRecord>>>,
}

impl CallLog {
    pub fn new() -> Self {
        Self::default()
    }

    fn push(&self, record: CallRecord) {
        self.records.lock().expect("call log poisoned").push(record);
    }

    pub fn snapshot(&self) -> Vec<CallRecord> {
        self.records.lock().expect("call log poisoned").clone()
    }

    pub fn count(&self, backend: &str) -> usize {
        self.records
            .lock()
            .expect("call log poisoned")
            .iter()
            .filter(|r| r.backend == backend)
            .count()
    }

    pub fn is_empty(&self) -> bool {
        self.records.lock().expect("call log poisoned").is_empty()
    }
}

/// A chat backend handle bound to the shared call log. Passing one of these
/// around is how the perception and memory layers get their optional chat
/// capability without knowing which slot they were wired to.
#[derive(Clone, Copy)]
pub struct ChatSlot<'a> {
    backend: &'a dyn ChatBackend,
    log: &'a CallLog,
    temperature: f64,
}

impl<'a> ChatSlot<'a> {
    pub fn chat(&self, key: &FixtureKey, messages: &[ChatMessage]) -> Result<String, BackendError> {
        let start = Instant::now();
        let result = self.backend.chat(key, messages, self.temperature);
        let (attempts, ok) = match &result {
            Ok(reply) => (reply.attempts, true),
            Err(e) => (e.attempts(), false),
        };
        self.log.push(CallRecord {
            backend: "chat",
            key: key.to_string(),
            phase: key.phase,
            attempts,
            latency_ms: start.elapsed().as_millis() as u64,
            ok,
        });
        result.map(|r| r.text)
    }
}

/// The full set of model handles for a run. Construction decides which slot
/// is live; `consolidate`, `summarize` and `caption` are optional and their
/// absence selects the deterministic fallback paths.
#[derive(Clone)]
pub struct Backends {
    chat: Arc<dyn ChatBackend>,
    consolidate: Option<Arc<dyn ChatBackend>>,
    summarize: Option<Arc<dyn ChatBackend>>,
    vqa: Arc<dyn VqaBackend>,
    caption: Option<Arc<dyn CaptionBackend>>,
    temperature: f64,
    log: CallLog,
}

impl Backends {
    /// Agent chat plus simulator VQA; everything else on fallbacks. The
    /// workhorse constructor for offline runs.
    pub fn offline(chat: Arc<dyn ChatBackend>) -> Self {
        Backends {
            chat,
            consolidate: None,
            summarize: None,
            vqa: Arc::new(SimulatorVqa),
            caption: None,
            temperature: 0.0,
            log: CallLog::new(),
        }
    }

    pub fn with_vqa(mut self, vqa: Arc<dyn VqaBackend>) -> Self {
        self.vqa = vqa;
        self
    }

    pub fn with_consolidate(mut self, chat: Arc<dyn ChatBackend>) -> Self {
        self.consolidate = Some(chat);
        self
    }

    pub fn with_summarize(mut self, chat: Arc<dyn ChatBackend>) -> Self {
        self.summarize = Some(chat);
        self
    }

    pub fn with_caption(mut self, caption: Arc<dyn CaptionBackend>) -> Self {
        self.caption = Some(caption);
        self
    }

    pub fn with_temperature(mut self, temperature: f64) -> Self {
        self.temperature = temperature;
        self
    }

    pub fn log(&self) -> &CallLog {
        &self.log
    }

    /// The agent's own reasoning/acting chat slot. Always present.
    pub fn agent_slot(&self) -> ChatSlot<'_> {
        ChatSlot {
            backend: self.chat.as_ref(),
            log: &self.log,
            temperature: self.temperature,
        }
    }

    /// Chat slot for merging vertical captions, if configured.
    pub fn consolidate_slot(&self) -> Option<ChatSlot<'_>> {
        self.consolidate.as_deref().map(|backend| ChatSlot {
            backend,
            log: &self.log,
            temperature: self.temperature,
        })
    }

    /// Chat slot for step summarization, if configured.
    pub fn summarize_slot(&self) -> Option<ChatSlot<'_>> {
        self.summarize.as_deref().map(|backend| ChatSlot {
            backend,
            log: &self.log,
            temperature: self.temperature,
        })
    }

    /// Ask the VQA backend a question about one directional cell.
    pub fn vqa(
        &self,
        key: &FixtureKey,
        cell: &DirectionalCell,
        question: &str,
    ) -> Result<String, BackendError> {
        let start = Instant::now();
        let result = self.vqa.answer(key, cell, question);
        let (attempts, ok) = match &result {
            Ok(reply) => (reply.attempts, true),
            Err(e) => (e.attempts(), false),
        };
        self.log.push(CallRecord {
            backend: "vqa",
            key: key.to_string(),
            phase: Phase::Vqa,
            attempts,
            latency_ms: start.elapsed().as_millis() as u64,
            ok,
        });
        result.map(|r| r.text)
    }

    /// Caption an image reference, if a captioner is configured.
    pub fn caption(
        &self,
        key: &FixtureKey,
        image_ref: &str,
    ) -> Option<Result<String, BackendError>> {
        let backend = self.caption.as_deref()?;
        let start = Instant::now();
        let result = backend.caption(key, image_ref);
        let (attempts, ok) = match &result {
            Ok(reply) => (reply.attempts, true),
            Err(e) => (e.attempts(), false),
        };
        self.log.push(CallRecord {
            backend: "caption",
            key: key.to_string(),
            phase: Phase::Caption,
            attempts,
            latency_ms: start.elapsed().as_millis() as u64,
            ok,
        });
        Some(result.map(|r| r.text))
    }
}
