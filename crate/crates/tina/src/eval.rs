//! Trajectory scoring and batch benchmarking.
//!
//! Metrics follow the standard definitions for graph-world navigation:
//!
//! - `TL`: trajectory length, the sum of traversed edge lengths in meters;
//! - `NE`: navigation error, geodesic distance from the final position to
//!   the goal (`+inf` when disconnected, serialized as `null`);
//! - `SR`: success, `NE < 3 m`;
//! - `OSR`: oracle success, any visited viewpoint within 3 m of the goal;
//! - `SPL`: success weighted by path length, `SR * L / max(TL, L)` with `L`
//!   the geodesic start-goal distance (`SPL = SR` when `L = 0`).
//!
//! Navigation error is geodesic rather than straight-line: that is the
//! convention that makes the 3-meter success threshold meaningful on a
//! graph world.
//!
//! The benchmark runner executes episodes (optionally in parallel), scores
//! them, and writes one JSON record per episode followed by a summary
//! record. Records appear in episode-input order regardless of scheduling,
//! so runs with fixed inputs are byte-identical.

use std::collections::HashMap;
use std::io::Write;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::agent::{run_episode, AgentConfig, EpisodeSpec, StepLog, Termination, Trajectory};
use crate::backends::Backends;
use crate::navgraph::{Environment, GraphError};

/// Success threshold in meters.
pub const SUCCESS_RADIUS_M: f64 = 3.0;

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("no metrics to aggregate")]
    EmptyInput,
    #[error("episode `{0}` references scan `{1}` but no such environment is loaded")]
    MissingEnvironment(String, String),
    #[error("bad episode `{0}`: {1}")]
    BadEpisode(String, String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed record: {0}")]
    Serde(#[from] serde_json::Error),
}

/// One benchmark episode: an instruction set bound to a ground-truth path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Episode {
    pub path_id: i64,
    pub scan: String,
    pub heading: f64,
    pub instructions: Vec<String>,
    /// Ground-truth viewpoint sequence; the goal is the last entry.
    pub path: Vec<String>,
}

impl Episode {
    pub fn start(&self) -> &str {
        &self.path[0]
    }

    pub fn goal(&self) -> &str {
        self.path.last().expect("episode path is non-empty")
    }

    /// The id used in fixture keys and result records for one instruction.
    pub fn run_id(&self, instruction_index: usize) -> String {
        format!("{}-{}", self.path_id, instruction_index)
    }

    pub fn validate(&self, env: &Environment) -> Result<(), EvalError> {
        let id = self.path_id.to_string();
        if self.path.is_empty() {
            return Err(EvalError::BadEpisode(id, "empty ground-truth path".into()));
        }
        if self.instructions.is_empty() {
            return Err(EvalError::BadEpisode(id, "no instructions".into()));
        }
        if !self.heading.is_finite() {
            return Err(EvalError::BadEpisode(id, "non-finite heading".into()));
        }
        for vp in &self.path {
            if !env.graph.contains(vp) {
                return Err(EvalError::BadEpisode(
                    id,
                    format!("unknown viewpoint `{vp}`"),
                ));
            }
        }
        for pair in self.path.windows(2) {
            if !env.graph.has_edge(&pair[0], &pair[1]) {
                return Err(EvalError::BadEpisode(
                    id,
                    format!(
                        "ground-truth pair `{}`-`{}` is not an edge",
                        pair[0], pair[1]
                    ),
                ));
            }
        }
        Ok(())
    }
}

/// Load an episodes file: a JSON array of episodes.
pub fn load_episodes(path: impl AsRef<Path>) -> Result<Vec<Episode>, EvalError> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

mod serde_01 {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &bool, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u8(*v as u8)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<bool, D::Error> {
        Ok(u8::deserialize(d)? != 0)
    }
}

mod serde_inf_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

/// Scores for one trajectory. `success`/`oracle_success` serialize as 0/1;
/// an unreachable `ne` serializes as `null`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpisodeMetrics {
    pub tl: f64,
    #[serde(with = "serde_inf_null")]
    pub ne: f64,
    #[serde(with = "serde_01")]
    pub success: bool,
    #[serde(with = "serde_01")]
    pub oracle_success: bool,
    pub spl: f64,
}

/// Aggregate over an episode set; rates are percentages.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkSummary {
    pub episodes: usize,
    pub tl: f64,
    #[serde(with = "serde_inf_null")]
    pub ne: f64,
    pub osr: f64,
    pub sr: f64,
    pub spl: f64,
}

/// Score one trajectory against its episode's goal.
pub fn score_trajectory(
    env: &Environment,
    episode: &Episode,
    traj: &Trajectory,
) -> Result<EpisodeMetrics, EvalError> {
    let id = episode.path_id.to_string();
    if traj.visited.first().map(String::as_str) != Some(episode.start()) {
        return Err(EvalError::BadEpisode(
            id,
            format!(
                "trajectory starts at `{}`, episode starts at `{}`",
                traj.visited.first().map(String::as_str).unwrap_or("<none>"),
                episode.start()
            ),
        ));
    }
    let goal = episode.goal();
    let mut tl = 0.0;
    for pair in traj.visited.windows(2) {
        tl += env.graph.edge_length(&pair[0], &pair[1])?;
    }
    let final_vp = traj.visited.last().expect("visited is never empty");
    let ne = env.graph.geodesic_distance(final_vp, goal)?;
    let success = ne < SUCCESS_RADIUS_M;
    let mut best = f64::INFINITY;
    for vp in &traj.visited {
        best = best.min(env.graph.geodesic_distance(vp, goal)?);
    }
    let oracle_success = best < SUCCESS_RADIUS_M;
    let optimal = env.graph.geodesic_distance(episode.start(), goal)?;
    let spl = if optimal == 0.0 {
        if success {
            1.0
        } else {
            0.0
        }
    } else if success {
        optimal / tl.max(optimal)
    } else {
        0.0
    };
    Ok(EpisodeMetrics {
        tl,
        ne,
        success,
        oracle_success,
        spl,
    })
}

/// Arithmetic means over episode metrics; rate fields scaled to percent.
pub fn aggregate(metrics: &[EpisodeMetrics]) -> Result<BenchmarkSummary, EvalError> {
    if metrics.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let n = metrics.len() as f64;
    Ok(BenchmarkSummary {
        episodes: metrics.len(),
        tl: metrics.iter().map(|m| m.tl).sum::<f64>() / n,
        ne: metrics.iter().map(|m| m.ne).sum::<f64>() / n,
        osr: metrics.iter().filter(|m| m.oracle_success).count() as f64 / n * 100.0,
        sr: metrics.iter().filter(|m| m.success).count() as f64 / n * 100.0,
        spl: metrics.iter().map(|m| m.spl).sum::<f64>() / n * 100.0,
    })
}

/// One line of a results file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub path_id: i64,
    pub instruction_index: usize,
    pub visited: Vec<String>,
    pub termination: Termination,
    pub metrics: EpisodeMetrics,
    pub steps: Vec<StepLog>,
}

/// The trailing line of a results file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SummaryRecord {
    pub summary: BenchmarkSummary,
    pub config: serde_json::Value,
}

/// A benchmark invocation.
pub struct BenchmarkRequest<'a> {
    pub envs: &'a HashMap<String, Arc<Environment>>,
    pub episodes: &'a [Episode],
    pub cfg: &'a AgentConfig,
    /// Run only `instructions[0]` of each episode instead of all of them.
    pub first_instruction_only: bool,
    /// Worker threads; episodes are independent, records stay in input order.
    pub parallel: usize,
    /// Behavioral configuration echoed into the summary record.
    pub config_echo: serde_json::Value,
}

/// Run every episode, score it, and write the results stream. An episode
/// whose run errors still scores from its visited prefix and is counted;
/// dropping it would silently inflate the success rate.
pub fn run_benchmark(
    req: &BenchmarkRequest<'_>,
    backends: &Backends,
    out: &mut dyn Write,
) -> Result<BenchmarkSummary, EvalError> {
    // validate before running anything
    let mut units: Vec<(usize, usize)> = Vec::new();
    for (ei, episode) in req.episodes.iter().enumerate() {
        let env = req.envs.get(&episode.scan).ok_or_else(|| {
            EvalError::MissingEnvironment(episode.path_id.to_string(), episode.scan.clone())
        })?;
        episode.validate(env)?;
        let n_instr = if req.first_instruction_only {
            1
        } else {
            episode.instructions.len()
        };
        for ii in 0..n_instr {
            units.push((ei, ii));
        }
    }
    if units.is_empty() {
        return Err(EvalError::EmptyInput);
    }

    let results: Vec<Mutex<Option<(Trajectory, EpisodeMetrics)>>> =
        units.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    let workers = req.parallel.max(1).min(units.len());
    let run_unit = |unit_idx: usize| -> Result<(), EvalError> {
        let (ei, ii) = units[unit_idx];
        let episode = &req.episodes[ei];
        let env = &req.envs[&episode.scan];
        let spec = EpisodeSpec {
            id: episode.run_id(ii),
            instruction: episode.instructions[ii].clone(),
            start: episode.start().to_string(),
            heading: episode.heading,
        };
        let traj = run_episode(env, &spec, req.cfg, backends);
        let metrics = score_trajectory(env, episode, &traj)?;
        *results[unit_idx].lock().expect("result slot poisoned") = Some((traj, metrics));
        Ok(())
    };

    if workers <= 1 {
        for i in 0..units.len() {
            run_unit(i)?;
        }
    } else {
        std::thread::scope(|scope| {
            let handles: Vec<_> = (0..workers)
                .map(|_| {
                    scope.spawn(|| -> Result<(), EvalError> {
                        loop {
                            let i = next.fetch_add(1, Ordering::Relaxed);
                            if i >= units.len() {
                                return Ok(());
                            }
                            run_unit(i)?;
                        }
                    })
                })
                .collect();
            for handle in handles {
                handle.join().expect("benchmark worker panicked")?;
            }
            Ok::<(), EvalError>(())
        })?;
    }

    let mut all_metrics = Vec::with_capacity(units.len());
    for (unit_idx, (ei, ii)) in units.iter().enumerate() {
        let (traj, metrics) = results[unit_idx]
            .lock()
            .expect("result slot poisoned")
            .take()
            .expect("unit ran");
        let record = ResultRecord {
            path_id: req.episodes[*ei].path_id,
            instruction_index: *ii,
            visited: traj.visited,
            termination: traj.termination,
            metrics,
            steps: traj.steps,
        };
        serde_json::to_writer(&mut *out, &record)?;
        out.write_all(b"\n")?;
        all_metrics.push(metrics);
    }
    let summary = aggregate(&all_metrics)?;
    serde_json::to_writer(
        &mut *out,
        &SummaryRecord {
            summary,
            config: req.config_echo.clone(),
        },
    )?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(summary)
}

/// One discrepancy found by [`audit_results`].
#[derive(Debug, Clone, PartialEq)]
pub struct Mismatch {
    pub path_id: i64,
    pub instruction_index: usize,
    pub field: &'static str,
    pub stored: f64,
    pub recomputed: f64,
}

/// What an audit saw.
#[derive(Debug, Clone, Default)]
pub struct AuditReport {
    pub records: usize,
    pub mismatches: Vec<Mismatch>,
    pub recomputed: Vec<EpisodeMetrics>,
}

fn close(a: f64, b: f64) -> bool {
    (a.is_infinite() && b.is_infinite() && a.signum() == b.signum()) || (a - b).abs() <= 1e-9
}

/// Recompute every record's metrics from its visited path and compare with
/// what the file claims. Results files travel; verifying them is cheap.
pub fn audit_results(
    envs: &HashMap<String, Arc<Environment>>,
    episodes: &[Episode],
    results_text: &str,
) -> Result<AuditReport, EvalError> {
    let by_id: HashMap<i64, &Episode> = episodes.iter().map(|e| (e.path_id, e)).collect();
    let mut report = AuditReport::default();
    for line in results_text.lines() {
        if line.trim().is_empty() {
            continue;
        }
        let value: serde_json::Value = serde_json::from_str(line)?;
        if value.get("summary").is_some() {
            continue;
        }
        let record: ResultRecord = serde_json::from_value(value)?;
        let episode = by_id.get(&record.path_id).ok_or_else(|| {
            EvalError::BadEpisode(
                record.path_id.to_string(),
                "not in the episodes file".into(),
            )
        })?;
        let env = envs.get(&episode.scan).ok_or_else(|| {
            EvalError::MissingEnvironment(episode.path_id.to_string(), episode.scan.clone())
        })?;
        let traj = Trajectory {
            episode_id: episode.run_id(record.instruction_index),
            visited: record.visited.clone(),
            actions: Vec::new(),
            steps: Vec::new(),
            termination: record.termination.clone(),
        };
        let fresh = score_trajectory(env, episode, &traj)?;
        let stored = record.metrics;
        let mut push = |field: &'static str, s: f64, r: f64| {
            if !close(s, r) {
                report.mismatches.push(Mismatch {
                    path_id: record.path_id,
                    instruction_index: record.instruction_index,
                    field,
                    stored: s,
                    recomputed: r,
                });
            }
        };
        push("tl", stored.tl, fresh.tl);
        push("ne", stored.ne, fresh.ne);
        push("spl", stored.spl, fresh.spl);
        push(
            "success",
            stored.success as u8 as f64,
            fresh.success as u8 as f64,
        );
        push(
            "oracle_success",
            stored.oracle_success as u8 as f64,
            fresh.oracle_success as u8 as f64,
        );
        report.recomputed.push(fresh);
        report.records += 1;
    }
    if report.records == 0 {
        return Err(EvalError::EmptyInput);
    }
    Ok(report)
}
