//! A zero-shot vision-language navigation framework: an agent that thinks,
//! asks questions about where it could go, and acts, running over a
//! graph-world simulator with pluggable model backends.
//!
//! The crate splits into:
//!
//! - [`navgraph`]: the world model (viewpoints, edges, poses, bearings,
//!   geodesic distances) and environment loading;
//! - [`perception`]: depth-based object distances and the 24-direction
//!   observation snapshot;
//! - [`interaction`]: question generation and per-candidate visual question
//!   answering;
//! - [`memory`]: the per-step trajectory memory injected into prompts;
//! - [`agent`]: the step loop tying the above together;
//! - [`backends`]: chat/VQA/caption interfaces with HTTP, scripted, and
//!   model-free implementations;
//! - [`eval`]: the standard navigation metrics (TL, NE, SR, OSR, SPL) and
//!   the batch benchmark runner;
//! - [`cli`]: the `tina run` / `tina eval` command-line surface.
//!
//! Everything runs fully offline with deterministic backends; HTTP backends
//! bolt on for live models. The book under `book/` walks through each
//! concept with runnable examples.

pub mod agent;
pub mod backends;
pub mod cli;
pub mod eval;
pub mod interaction;
pub mod memory;
pub mod navgraph;
pub mod perception;

pub use agent::{run_episode, Action, AgentConfig, EpisodeSpec, StepLog, Termination, Trajectory};
pub use backends::Backends;
pub use eval::{
    aggregate, load_episodes, run_benchmark, score_trajectory, BenchmarkSummary, Episode,
    EpisodeMetrics,
};
pub use navgraph::{
    candidates_at, load_environment, Candidate, EnvBuilder, Environment, NavGraph, Pose, Position,
};
pub use perception::{
    build_snapshot, object_distance_center, object_distance_masked, BBox, DepthMap, DepthRegistry,
    DirectionalCell, ObjectRecord, PerceptionOptions, SegMask, Snapshot,
};
