//! End-to-end episode loops against offline backends.

mod common;

use std::collections::HashMap;
use std::sync::Arc;

use tina::agent::{
    build_preamble, run_episode, Action, AgentConfig, EpisodeSpec, Termination,
    DEFAULT_TASK_DESCRIPTION,
};
use tina::backends::{
    BackendError, BackendResult, Backends, FixtureKey, OracleChat, ScriptedChat, VqaBackend,
};
use tina::memory::MemoryBank;
use tina::navgraph::EnvBuilder;
use tina::perception::DirectionalCell;
use tina::Environment;

fn line_env() -> Environment {
    let mut b = EnvBuilder::new("line");
    b.viewpoint("A", [0.0, 0.0, 0.0]);
    b.viewpoint("B", [0.0, 2.0, 0.0]);
    b.viewpoint("C", [0.0, 4.0, 0.0]);
    b.edge("A", "B");
    b.edge("B", "C");
    b.build().unwrap()
}

fn spec(id: &str, start: &str) -> EpisodeSpec {
    EpisodeSpec {
        id: id.to_string(),
        instruction: "walk to the far end of the hallway".to_string(),
        start: start.to_string(),
        heading: 0.0,
    }
}

fn no_qai() -> AgentConfig {
    AgentConfig {
        qai_enabled: false,
        ..AgentConfig::default()
    }
}

#[test]
fn oracle_policy_walks_the_line_graph() {
    let env = Arc::new(line_env());
    let oracle = OracleChat::new(HashMap::from([(
        "e-0".to_string(),
        (Arc::clone(&env), "C".to_string()),
    )]));
    let backends = Backends::offline(Arc::new(oracle));
    let traj = run_episode(&env, &spec("e-0", "A"), &no_qai(), &backends);
    assert_eq!(traj.visited, ["A", "B", "C"]);
    assert_eq!(traj.termination, Termination::Stopped);
    assert_eq!(traj.actions.len(), 3);
    assert_eq!(traj.actions.last(), Some(&Action::Stop));
    assert_eq!(traj.steps.len(), 3);
    // one memory entry per executed step
    assert!(traj.steps.iter().all(|s| !s.memory.is_empty()));
}

#[test]
fn scripted_stop_at_step_zero() {
    let env = line_env();
    let chat = ScriptedChat::from_pairs([("e-0:0:think", "done"), ("e-0:0:act", "Action: 0")]);
    let backends = Backends::offline(Arc::new(chat));
    let traj = run_episode(&env, &spec("e-0", "A"), &no_qai(), &backends);
    assert_eq!(traj.visited, ["A"]);
    assert_eq!(traj.termination, Termination::Stopped);
    assert_eq!(traj.actions, [Action::Stop]);
    assert_eq!(traj.steps.len(), 1);
}

#[test]
fn garbage_actions_fall_back_to_stop_after_retries() {
    let env = line_env();
    let chat = ScriptedChat::from_pairs([
        ("e-0:0:think", "hm"),
        ("e-0:0:act", "no verdict"),
        ("e-0:0:act:1", "still no verdict"),
        ("e-0:0:act:2", "nope"),
    ]);
    let backends = Backends::offline(Arc::new(chat));
    let cfg = no_qai();
    let traj = run_episode(&env, &spec("e-0", "A"), &cfg, &backends);
    assert_eq!(traj.termination, Termination::Stopped);
    assert_eq!(traj.visited, ["A"]);
    assert_eq!(traj.steps.len(), 1);
    assert_eq!(traj.steps[0].parse_retries, cfg.parse_retries);
}

#[test]
fn out_of_range_then_valid_choice_moves() {
    let env = line_env();
    let chat = ScriptedChat::from_pairs([
        ("e-0:0:think", "hm"),
        ("e-0:0:act", "Action: 7"),
        ("e-0:0:act:1", "Action: 1"),
        ("e-0:1:think", "hm"),
        ("e-0:1:act", "Action: 0"),
    ]);
    let backends = Backends::offline(Arc::new(chat));
    let traj = run_episode(&env, &spec("e-0", "A"), &no_qai(), &backends);
    assert_eq!(traj.visited, ["A", "B"]);
    assert_eq!(traj.steps[0].parse_retries, 1);
    assert_eq!(traj.termination, Termination::Stopped);
}

#[test]
fn empty_thought_retries_once_then_placeholder() {
    let env = line_env();
    let chat = ScriptedChat::from_pairs([
        ("e-0:0:think", ""),
        ("e-0:0:think:1", "second try"),
        ("e-0:0:act", "Action: 0"),
    ]);
    let backends = Backends::offline(Arc::new(chat));
    let traj = run_episode(&env, &spec("e-0", "A"), &no_qai(), &backends);
    assert_eq!(traj.steps[0].thought, "second try");

    let chat = ScriptedChat::from_pairs([
        ("e-0:0:think", ""),
        ("e-0:0:think:1", "  "),
        ("e-0:0:act", "Action: 0"),
    ]);
    let backends = Backends::offline(Arc::new(chat));
    let traj = run_episode(&env, &spec("e-0", "A"), &no_qai(), &backends);
    assert_eq!(traj.steps[0].thought, "(no thought)");
}

#[test]
fn isolated_start_forces_stop() {
    let mut b = EnvBuilder::new("iso");
    b.viewpoint("A", [0.0, 0.0, 0.0]);
    let env = b.build().unwrap();
    let chat = ScriptedChat::from_pairs([("e-0:0:think", "hm")]);
    let backends = Backends::offline(Arc::new(chat));
    let traj = run_episode(&env, &spec("e-0", "A"), &no_qai(), &backends);
    assert_eq!(traj.termination, Termination::Stopped);
    assert_eq!(traj.actions, [Action::Stop]);
    assert_eq!(traj.steps.len(), 1);
    assert!(traj.steps[0].menu.is_empty());
}

#[test]
fn max_steps_caps_the_episode() {
    let env = line_env();
    // ping-pong between A and B forever
    let mut entries: Vec<(String, String)> = Vec::new();
    for step in 0..10 {
        entries.push((format!("e-0:{step}:think"), "onward".to_string()));
        entries.push((format!("e-0:{step}:act"), "Action: 1".to_string()));
    }
    let chat = ScriptedChat::new(entries.into_iter().collect());
    let backends = Backends::offline(Arc::new(chat));
    let cfg = AgentConfig {
        max_steps: 4,
        qai_enabled: false,
        ..AgentConfig::default()
    };
    let traj = run_episode(&env, &spec("e-0", "A"), &cfg, &backends);
    assert_eq!(traj.termination, Termination::MaxSteps);
    assert_eq!(traj.steps.len(), 4);
    assert_eq!(traj.visited.len(), 5);
    assert_eq!(traj.actions.len(), 4);
}

#[test]
fn heading_follows_the_traveled_edge() {
    // A east of S: after moving S -> A the agent faces east, so S is rear
    let mut b = EnvBuilder::new("turn");
    b.viewpoint("S", [0.0, 0.0, 0.0]);
    b.viewpoint("A", [3.0, 0.0, 0.0]);
    b.edge("S", "A");
    let env = b.build().unwrap();
    let chat = ScriptedChat::from_pairs([
        ("e-0:0:think", "hm"),
        ("e-0:0:act", "Action: 1"),
        ("e-0:1:think", "hm"),
        ("e-0:1:act", "Action: 0"),
    ]);
    let backends = Backends::offline(Arc::new(chat));
    let traj = run_episode(&env, &spec("e-0", "S"), &no_qai(), &backends);
    assert_eq!(traj.visited, ["S", "A"]);
    let menu_line = &traj.steps[1].menu[1];
    assert!(
        menu_line.contains("rear"),
        "expected S behind the agent, menu: {menu_line}"
    );
}

#[test]
fn fixture_miss_terminates_with_error_and_keeps_prefix() {
    let env = line_env();
    let chat = ScriptedChat::from_pairs([
        ("e-0:0:think", "hm"),
        ("e-0:0:act", "Action: 1"),
        // step 1 think is missing
    ]);
    let backends = Backends::offline(Arc::new(chat));
    let traj = run_episode(&env, &spec("e-0", "A"), &no_qai(), &backends);
    assert_eq!(traj.visited, ["A", "B"]);
    match &traj.termination {
        Termination::Error(msg) => assert!(msg.contains("e-0:1:think"), "{msg}"),
        other => panic!("expected error termination, got {other:?}"),
    }
    assert_eq!(traj.steps.len(), 1, "only the completed step is logged");
}

#[test]
fn qai_fanout_asks_every_question_of_every_candidate() {
    let mut b = EnvBuilder::new("fan");
    b.viewpoint("S", [0.0, 0.0, 0.0]);
    b.viewpoint("N", [0.0, 3.0, 0.0]);
    b.viewpoint("E", [3.0, 0.0, 0.0]);
    b.edge("S", "N");
    b.edge("S", "E");
    b.cell("S", 0, 0)
        .caption("a hallway")
        .object_at("sofa", 1.2);
    b.cell("S", 90, 0)
        .caption("a kitchen")
        .object_at("stove", 2.0);
    let env = b.build().unwrap();
    let chat = ScriptedChat::from_pairs([
        ("e-0:0:think", "look for the sofa"),
        (
            "e-0:0:questions",
            "1. Is there a sofa?\n2. Is there a stove?",
        ),
        ("e-0:0:act", "Action: 0"),
    ]);
    let backends = Backends::offline(Arc::new(chat));
    let traj = run_episode(&env, &spec("e-0", "S"), &AgentConfig::default(), &backends);
    let log = &traj.steps[0];
    assert_eq!(log.questions.len(), 2);
    assert_eq!(log.qa.len(), 4, "2 questions x 2 candidates");
    assert_eq!(backends.log().count("vqa"), 4);
    // one menu entry per candidate, numbered 1..=N after the stop line
    assert_eq!(log.menu.iter().filter(|l| !l.starts_with("   ")).count(), 3);
    assert!(log.menu[1].starts_with("1: ") && log.menu.last().unwrap().contains("A: "));
    // simulator answers derive from the cell objects
    let sofa_answers: Vec<&str> = log
        .qa
        .iter()
        .filter(|qa| qa.question.contains("sofa"))
        .map(|qa| qa.answer.as_str())
        .collect();
    assert!(sofa_answers.contains(&"yes, a sofa is visible (1.2 m away)"));
    assert!(sofa_answers.contains(&"no"));
}

#[test]
fn qai_disabled_makes_no_vqa_calls() {
    let env = line_env();
    let chat = ScriptedChat::from_pairs([("e-0:0:think", "hm"), ("e-0:0:act", "Action: 0")]);
    let backends = Backends::offline(Arc::new(chat));
    let traj = run_episode(&env, &spec("e-0", "A"), &no_qai(), &backends);
    assert_eq!(traj.termination, Termination::Stopped);
    assert_eq!(backends.log().count("vqa"), 0);
    assert!(traj.steps[0].questions.is_empty());
    assert!(traj.steps[0].qa.is_empty());
}

struct FailingVqa;

impl VqaBackend for FailingVqa {
    fn answer(&self, _key: &FixtureKey, _cell: &DirectionalCell, _question: &str) -> BackendResult {
        Err(BackendError::Failure {
            status: Some(503),
            attempts: 4,
            message: "down".into(),
        })
    }
}

#[test]
fn vqa_failure_degrades_to_unknown() {
    let env = line_env();
    let chat = ScriptedChat::from_pairs([
        ("e-0:0:think", "hm"),
        ("e-0:0:questions", "1. Is there a sofa?"),
        ("e-0:0:act", "Action: 0"),
    ]);
    let backends = Backends::offline(Arc::new(chat)).with_vqa(Arc::new(FailingVqa));
    let traj = run_episode(&env, &spec("e-0", "A"), &AgentConfig::default(), &backends);
    assert_eq!(traj.termination, Termination::Stopped);
    assert_eq!(traj.steps[0].qa.len(), 1);
    assert_eq!(traj.steps[0].qa[0].answer, "unknown");
}

struct CannedCaption;

impl tina::backends::CaptionBackend for CannedCaption {
    fn caption(&self, _key: &FixtureKey, image_ref: &str) -> BackendResult {
        Ok(tina::backends::BackendReply::once(format!(
            "a captioned {image_ref}"
        )))
    }
}

#[test]
fn captioner_fills_imageref_only_cells_and_stays_silent_otherwise() {
    let mut b = EnvBuilder::new("img");
    b.viewpoint("A", [0.0, 0.0, 0.0]);
    // a whole heading column with image refs and no captions
    for elevation in [-30, 0, 30] {
        b.cell("A", 0, elevation).caption("").image_ref("front.jpg");
    }
    let env = b.build().unwrap();
    let chat = ScriptedChat::from_pairs([("e-0:0:think", "hm")]);

    // with a captioner wired: the empty front description is filled
    let backends = Backends::offline(Arc::new(chat.clone())).with_caption(Arc::new(CannedCaption));
    let traj = run_episode(&env, &spec("e-0", "A"), &no_qai(), &backends);
    assert_eq!(traj.termination, Termination::Stopped);
    assert!(
        traj.steps[0].snapshot.contains("a captioned front.jpg"),
        "{}",
        traj.steps[0].snapshot
    );
    assert_eq!(backends.log().count("caption"), 1);

    // simulator mode (no captioner): the caption backend is never invoked
    let backends = Backends::offline(Arc::new(chat));
    let traj = run_episode(&env, &spec("e-0", "A"), &no_qai(), &backends);
    assert_eq!(traj.termination, Termination::Stopped);
    assert_eq!(backends.log().count("caption"), 0);
    assert!(traj.steps[0].snapshot.contains("front: (no description)"));
}

#[test]
fn scripted_runs_replay_byte_identically() {
    let env = line_env();
    let chat = Arc::new(ScriptedChat::from_pairs([
        ("e-0:0:think", "onward"),
        ("e-0:0:questions", "1. Is there a hallway?"),
        ("e-0:0:act", "Action: 1"),
        ("e-0:1:think", "done"),
        ("e-0:1:questions", "1. Is there a hallway?"),
        ("e-0:1:act", "Action: 0"),
    ]));
    let cfg = AgentConfig::default();
    let a = run_episode(
        &env,
        &spec("e-0", "A"),
        &cfg,
        &Backends::offline(chat.clone()),
    );
    let b = run_episode(&env, &spec("e-0", "A"), &cfg, &Backends::offline(chat));
    assert_eq!(
        serde_json::to_string(&a).unwrap(),
        serde_json::to_string(&b).unwrap()
    );
}

// Snapshot of the step-0 prompt preamble: generated once (BLESS=1), reviewed,
// then frozen. Any byte change to the prompt templates must be deliberate.
#[test]
fn preamble_step0_matches_golden_file() {
    let cfg = AgentConfig::default();
    let bank = MemoryBank::new();
    let preamble = build_preamble(
        DEFAULT_TASK_DESCRIPTION,
        "walk to the far end of the hallway",
        &bank,
        &cfg,
    );
    let actual = preamble.system_message();
    let path = concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/tests/golden/preamble_step0.txt"
    );
    if std::env::var("BLESS").is_ok() {
        std::fs::write(path, &actual).unwrap();
    }
    let golden = std::fs::read_to_string(path).expect("golden file; regenerate with BLESS=1");
    assert_eq!(actual, golden);
}
