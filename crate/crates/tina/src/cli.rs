//! Command-line entry points: `run` executes a benchmark and prints the
//! summary table; `eval` audits a results file by recomputing every metric
//! from the recorded trajectories.

use std::collections::HashMap;
use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::agent::AgentConfig;
use crate::backends::{
    Backends, HeuristicChat, HttpChat, HttpChatConfig, HttpVision, HttpVisionConfig, ScriptedChat,
    SimulatorVqa,
};
use crate::eval::{
    audit_results, load_episodes, run_benchmark, BenchmarkRequest, BenchmarkSummary, Episode,
};
use crate::navgraph::{load_environment, Environment};

#[derive(Debug, Parser)]
#[command(
    name = "tina",
    version,
    about = "Zero-shot navigation agent benchmarks"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a benchmark over an episode set and write a results file.
    Run(RunArgs),
    /// Audit a results file: recompute metrics, report mismatches.
    Eval(EvalArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendChoice {
    /// Fixture replay for the chat slots, simulator VQA.
    Scripted,
    /// Token-overlap chooser for chat, simulator VQA.
    Heuristic,
    /// Remote model servers for every slot.
    Http,
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Directory of environment files (one JSON document per scan).
    #[arg(long, value_name = "DIR")]
    env: PathBuf,
    /// Episodes file.
    #[arg(long, value_name = "FILE")]
    episodes: PathBuf,
    /// Run configuration file; flags override its fields.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Backend family for this run.
    #[arg(long, value_enum)]
    backend: Option<BackendChoice>,
    /// Scripted chat fixture file (required with --backend scripted).
    #[arg(long, value_name = "FILE")]
    fixtures: Option<PathBuf>,
    /// Results file to write.
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
    /// Worker threads.
    #[arg(long, value_name = "N")]
    parallel: Option<usize>,
    /// Seed for the artifact-side randomness (heuristic tie-breaks).
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// Step cap per episode.
    #[arg(long, value_name = "N")]
    max_steps: Option<usize>,
    /// Disable question-answering interaction.
    #[arg(long)]
    no_qai: bool,
    /// Drop distance annotations from observations.
    #[arg(long)]
    no_distance: bool,
    /// Estimate object distances from bounding-box centers only.
    #[arg(long)]
    no_seg: bool,
    /// Run only the first instruction of each episode.
    #[arg(long)]
    first_instruction_only: bool,
}

#[derive(Debug, Args)]
struct EvalArgs {
    /// Directory of environment files.
    #[arg(long, value_name = "DIR")]
    env: PathBuf,
    /// Episodes file the results were produced from.
    #[arg(long, value_name = "FILE")]
    episodes: PathBuf,
    /// Results file to audit.
    #[arg(long, value_name = "FILE")]
    results: PathBuf,
}

/// A run configuration file. Every field has a default, so partial files
/// are fine; command-line flags override file values.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    #[serde(flatten)]
    pub agent: AgentConfig,
    pub backend: BackendChoice,
    /// Model name sent to HTTP chat backends.
    pub chat_model: String,
    pub fixtures: Option<PathBuf>,
    pub parallel: usize,
    pub seed: u64,
    pub first_instruction_only: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            agent: AgentConfig::default(),
            backend: BackendChoice::Heuristic,
            chat_model: "gpt-4".to_string(),
            fixtures: None,
            parallel: 1,
            seed: 0,
            first_instruction_only: false,
        }
    }
}

impl RunConfig {
    /// The behavioral subset echoed into results files: everything that can
    /// change outputs, nothing that is an invocation detail (paths).
    pub fn echo(&self) -> serde_json::Value {
        serde_json::json!({
            "agent": self.agent,
            "backend": self.backend,
            "seed": self.seed,
            "parallel": self.parallel,
            "first_instruction_only": self.first_instruction_only,
        })
    }

    /// Table row label in the ablation notation.
    pub fn setting_label(&self) -> String {
        let mut parts = Vec::new();
        if !self.agent.qai_enabled {
            parts.push("w/o QAI");
        }
        if !self.agent.include_distances {
            parts.push("w/o dis");
        }
        if !self.agent.use_segmentation {
            parts.push("w/o seg");
        }
        if parts.is_empty() {
            "base".to_string()
        } else {
            parts.join(", ")
        }
    }
}

/// Load every `*.json` environment in a directory, keyed by scan id.
pub fn load_environment_dir(dir: &Path) -> Result<HashMap<String, Arc<Environment>>> {
    let mut envs = HashMap::new();
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("cannot read --env dir `{}`", dir.display()))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().map(|x| x == "json").unwrap_or(false))
        .collect();
    paths.sort();
    for path in paths {
        let env = load_environment(&path)?;
        envs.insert(env.scan_id.clone(), Arc::new(env));
    }
    if envs.is_empty() {
        bail!("no environment files found in `{}`", dir.display());
    }
    Ok(envs)
}

fn build_backends(cfg: &RunConfig) -> Result<Backends> {
    let backends = match cfg.backend {
        BackendChoice::Scripted => {
            let path = cfg
                .fixtures
                .as_ref()
                .ok_or_else(|| anyhow!("--backend scripted requires --fixtures FILE"))?;
            let chat = ScriptedChat::load(path).map_err(|e| anyhow!("{e}"))?;
            Backends::offline(Arc::new(chat)).with_vqa(Arc::new(SimulatorVqa))
        }
        BackendChoice::Heuristic => Backends::offline(Arc::new(HeuristicChat::new(cfg.seed)))
            .with_vqa(Arc::new(SimulatorVqa)),
        BackendChoice::Http => {
            let mut chat_cfg = HttpChatConfig::from_env().map_err(|e| anyhow!("{e}"))?;
            chat_cfg.model = cfg.chat_model.clone();
            let chat = Arc::new(HttpChat::new(chat_cfg));
            let vision_cfg = HttpVisionConfig::from_env().map_err(|e| anyhow!("{e}"))?;
            let vision = Arc::new(HttpVision::new(vision_cfg));
            Backends::offline(chat.clone())
                .with_vqa(vision.clone())
                .with_caption(vision)
                .with_consolidate(chat.clone())
                .with_summarize(chat)
        }
    };
    Ok(backends.with_temperature(cfg.agent.temperature))
}

fn effective_config(args: &RunArgs) -> Result<RunConfig> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("cannot read --config `{}`", path.display()))?;
            serde_json::from_str::<RunConfig>(&text)
                .with_context(|| format!("bad --config `{}`", path.display()))?
        }
        None => RunConfig::default(),
    };
    if let Some(backend) = args.backend {
        cfg.backend = backend;
    }
    if args.fixtures.is_some() {
        cfg.fixtures = args.fixtures.clone();
    }
    if let Some(parallel) = args.parallel {
        cfg.parallel = parallel;
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(max_steps) = args.max_steps {
        cfg.agent.max_steps = max_steps;
    }
    if args.no_qai {
        cfg.agent.qai_enabled = false;
    }
    if args.no_distance {
        cfg.agent.include_distances = false;
    }
    if args.no_seg {
        cfg.agent.use_segmentation = false;
    }
    if args.first_instruction_only {
        cfg.first_instruction_only = true;
    }
    Ok(cfg)
}

/// Print the summary as an aligned table in the conventional column order.
pub fn print_summary_table(label: &str, summary: &BenchmarkSummary) {
    println!(
        "{:<16} {:>9} {:>8} {:>8} {:>7} {:>7} {:>7}",
        "Setting", "Episodes", "TL", "NE", "OSR", "SR", "SPL"
    );
    let ne = if summary.ne.is_finite() {
        format!("{:.2}", summary.ne)
    } else {
        "inf".to_string()
    };
    println!(
        "{:<16} {:>9} {:>8.2} {:>8} {:>7.1} {:>7.1} {:>7.1}",
        label, summary.episodes, summary.tl, ne, summary.osr, summary.sr, summary.spl
    );
}

fn cmd_run(args: &RunArgs) -> Result<i32> {
    let cfg = effective_config(args)?;
    let envs = load_environment_dir(&args.env)?;
    let episodes: Vec<Episode> = load_episodes(&args.episodes)
        .with_context(|| format!("cannot load --episodes `{}`", args.episodes.display()))?;
    let backends = build_backends(&cfg)?;
    let file = fs::File::create(&args.out)
        .with_context(|| format!("cannot create --out `{}`", args.out.display()))?;
    let mut writer = BufWriter::new(file);
    let request = BenchmarkRequest {
        envs: &envs,
        episodes: &episodes,
        cfg: &cfg.agent,
        first_instruction_only: cfg.first_instruction_only,
        parallel: cfg.parallel,
        config_echo: cfg.echo(),
    };
    let summary = run_benchmark(&request, &backends, &mut writer)?;
    print_summary_table(&cfg.setting_label(), &summary);
    // failed episodes are counted, not fatal: completing the run is the contract
    Ok(0)
}

fn cmd_eval(args: &EvalArgs) -> Result<i32> {
    let envs = load_environment_dir(&args.env)?;
    let episodes: Vec<Episode> = load_episodes(&args.episodes)
        .with_context(|| format!("cannot load --episodes `{}`", args.episodes.display()))?;
    let text = fs::read_to_string(&args.results)
        .with_context(|| format!("cannot read --results `{}`", args.results.display()))?;
    let report = audit_results(&envs, &episodes, &text)?;
    let summary = crate::eval::aggregate(&report.recomputed)?;
    println!(
        "{} records audited, {} mismatches",
        report.records,
        report.mismatches.len()
    );
    print_summary_table("recomputed", &summary);
    if report.mismatches.is_empty() {
        Ok(0)
    } else {
        for m in &report.mismatches {
            eprintln!(
                "mismatch: path_id {} instruction {} field {}: stored {} recomputed {}",
                m.path_id, m.instruction_index, m.field, m.stored, m.recomputed
            );
        }
        Ok(1)
    }
}

/// Parse arguments and dispatch; returns the process exit code.
pub fn run_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // clap renders its own help/usage text
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let outcome = match &cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Eval(args) => cmd_eval(args),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            2
        }
    }
}
