//! Acceptance suite: one test per release criterion, each printing a PASS
//! line with the measured quantities. Tolerances and thresholds are pinned
//! here, not calibrated later.

mod common;

use std::collections::HashMap;
use std::fs;
use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use common::{
    brute_force_geodesic, near_far_suite, qai_lookalike_suite, random_connected_env,
    random_env_maybe_disconnected, rng, shortest_path_nodes, write_suite, StubResponse, StubServer,
    Suite,
};
use rand::Rng;
use tina::agent::{run_episode, AgentConfig, EpisodeSpec, Termination, Trajectory};
use tina::backends::{Backends, HttpChat, HttpChatConfig, OracleChat, RandomPolicyChat};
use tina::eval::{run_benchmark, score_trajectory, BenchmarkRequest, Episode, SUCCESS_RADIUS_M};
use tina::perception::{object_distance_masked, BBox, DepthMap, SegMask};

/// Reference results published for this framework on R2R val-unseen
/// (TL/NE/OSR/SR/SPL) and its dev-split ablations (SR only). They need a
/// GPT-4-class chat model and Matterport3D imagery, neither of which exists
/// at desk scale, so this suite checks behavioral properties instead of
/// chasing these numbers.
const PUBLISHED_VAL_UNSEEN: (f64, f64, f64, f64, f64) = (11.37, 5.93, 48.0, 37.0, 33.0);
const PUBLISHED_ABLATION_SR: [(&str, f64); 3] =
    [("base", 31.0), ("w/o QAI", 29.0), ("w/o dis", 25.0)];

#[test]
fn a01_published_numbers_are_out_of_scope_at_desk_scale() {
    let (tl, ne, osr, sr, spl) = PUBLISHED_VAL_UNSEEN;
    println!(
        "ACCEPTANCE PASS: published reference results (TL {tl}, NE {ne}, OSR {osr}, SR {sr}, \
         SPL {spl}; ablation SRs {PUBLISHED_ABLATION_SR:?}) require GPT-4 and Matterport3D \
         imagery and are NOT reproduced here; the remaining criteria are property-based \
         substitutes."
    );
}

#[test]
fn a02_metrics_match_brute_force_oracle_on_200_random_graphs() {
    let started = Instant::now();
    let mut rng = rng(42);
    for case in 0..200 {
        // a quarter of the graphs may be disconnected, covering the
        // unreachable-goal sentinel path
        let env = if case % 4 == 0 {
            random_env_maybe_disconnected(&mut rng, "m", 4 + case % 7)
        } else {
            random_connected_env(&mut rng, "m", 4 + case % 7)
        };
        let ids: Vec<String> = env.graph.viewpoint_ids().map(str::to_string).collect();
        let start = ids[rng.random_range(0..ids.len())].clone();
        let goal = ids[rng.random_range(0..ids.len())].clone();

        // random walk from the start
        let mut visited = vec![start.clone()];
        for _ in 0..rng.random_range(0..6) {
            let here = visited.last().unwrap().clone();
            let neighbors = env.graph.neighbors(&here).unwrap();
            if neighbors.is_empty() {
                break;
            }
            let (next, _) = &neighbors[rng.random_range(0..neighbors.len())];
            visited.push(next.clone());
        }

        let episode = Episode {
            path_id: case as i64,
            scan: "m".into(),
            heading: 0.0,
            instructions: vec!["x".into()],
            path: vec![start.clone(), goal.clone()],
        };
        let traj = Trajectory {
            episode_id: format!("{case}-0"),
            visited: visited.clone(),
            actions: Vec::new(),
            steps: Vec::new(),
            termination: Termination::Stopped,
        };
        let got = score_trajectory(&env, &episode, &traj).unwrap();

        // brute-force oracle: exhaustive simple-path enumeration
        let ne_bf = brute_force_geodesic(&env, visited.last().unwrap(), &goal);
        let l_bf = brute_force_geodesic(&env, &start, &goal);
        let mut tl_bf = 0.0;
        for pair in visited.windows(2) {
            tl_bf += env
                .graph
                .position(&pair[0])
                .unwrap()
                .distance_to(env.graph.position(&pair[1]).unwrap());
        }
        let success_bf = ne_bf < SUCCESS_RADIUS_M;
        let oracle_bf = visited
            .iter()
            .map(|v| brute_force_geodesic(&env, v, &goal))
            .fold(f64::INFINITY, f64::min)
            < SUCCESS_RADIUS_M;
        let spl_bf = if l_bf == 0.0 {
            success_bf as u8 as f64
        } else if success_bf {
            l_bf / tl_bf.max(l_bf)
        } else {
            0.0
        };

        assert!(
            (got.ne - ne_bf).abs() <= 1e-9 || (got.ne.is_infinite() && ne_bf.is_infinite()),
            "case {case}: NE {} vs brute force {ne_bf}",
            got.ne
        );
        assert!(
            (got.tl - tl_bf).abs() <= 1e-9,
            "case {case}: TL {} vs {tl_bf}",
            got.tl
        );
        assert_eq!(got.success, success_bf, "case {case}: success");
        assert_eq!(got.oracle_success, oracle_bf, "case {case}: oracle success");
        assert!(
            (got.spl - spl_bf).abs() <= 1e-9,
            "case {case}: SPL {} vs {spl_bf}",
            got.spl
        );
    }
    let elapsed = started.elapsed();
    assert!(
        elapsed < Duration::from_secs(10),
        "oracle comparison took {elapsed:?}"
    );
    println!(
        "ACCEPTANCE PASS: NE/TL/SR/OSR/SPL match the all-simple-paths oracle on 200 random \
         graphs within 1e-9 in {elapsed:?}"
    );
}

#[test]
fn a03_masked_distance_matches_double_loop_on_1000_random_triples() {
    let started = Instant::now();

    // the worked 3x3 example first
    let depth = DepthMap::from_rows(&[
        vec![1.0, 2.0, 3.0],
        vec![4.0, 5.0, 6.0],
        vec![7.0, 8.0, 9.0],
    ])
    .unwrap();
    let bbox = BBox::new(0, 0, 2, 2).unwrap();
    let mask = SegMask::from_pixels(3, 3, &[(0, 0), (0, 1), (1, 1)]);
    let worked = object_distance_masked(&depth, &bbox, &mask).unwrap();
    assert!(
        (worked - 10.0 / 3.0).abs() <= 1e-9,
        "worked example: {worked}"
    );

    let mut rng = rng(7);
    let mut checked = 0;
    while checked < 1000 {
        let w = rng.random_range(1..16u32);
        let h = rng.random_range(1..16u32);
        let values: Vec<f64> = (0..w * h)
            .map(|_| {
                if rng.random_bool(0.15) {
                    if rng.random_bool(0.5) {
                        0.0
                    } else {
                        f64::NAN
                    }
                } else {
                    rng.random_range(0.05..30.0)
                }
            })
            .collect();
        let depth = DepthMap::new(w, h, values).unwrap();
        let bits: Vec<bool> = (0..w * h).map(|_| rng.random_bool(0.5)).collect();
        let mask = SegMask::new(w, h, bits).unwrap();
        let x0 = rng.random_range(0..w);
        let y0 = rng.random_range(0..h);
        let bbox = BBox::new(
            x0,
            y0,
            rng.random_range(x0 + 1..=w),
            rng.random_range(y0 + 1..=h),
        )
        .unwrap();

        let mut sum = 0.0;
        let mut n = 0u32;
        for y in 0..h {
            for x in 0..w {
                if x >= bbox.x0 && x < bbox.x1 && y >= bbox.y0 && y < bbox.y1 && mask.get(x, y) {
                    let v = depth.get(x, y);
                    if v.is_finite() && v > 0.0 {
                        sum += v;
                        n += 1;
                    }
                }
            }
        }
        let fast = object_distance_masked(&depth, &bbox, &mask);
        match (fast, n) {
            (Err(_), 0) => {}
            (Ok(f), n) if n > 0 => {
                let slow = sum / n as f64;
                assert!((f - slow).abs() <= 1e-9, "triple {checked}: {f} vs {slow}");
            }
            (fast, n) => panic!("triple {checked}: fast={fast:?} naive_count={n}"),
        }
        checked += 1;
    }
    let elapsed = started.elapsed();
    assert!(
        elapsed < Duration::from_secs(1),
        "distance oracle took {elapsed:?}"
    );
    println!(
        "ACCEPTANCE PASS: masked distance equals the double-loop mean on 1000 random triples \
         within 1e-9 (worked 3x3 example = 10/3) in {elapsed:?}"
    );
}

#[test]
fn a04_oracle_policy_scores_perfectly_on_50_connected_graphs() {
    let started = Instant::now();
    let mut rng = rng(11);
    let mut envs = HashMap::new();
    let mut episodes = Vec::new();
    let mut oracle_map = HashMap::new();
    for i in 0..50 {
        let scan = format!("o{i}");
        let nodes = rng.random_range(5..=15);
        let env = Arc::new(random_connected_env(&mut rng, &scan, nodes));
        // pick the farthest reachable goal from n0 for a non-trivial path
        let start = "n0".to_string();
        let dists = env.graph.distances_from(&start).unwrap();
        let goal = dists
            .iter()
            .filter(|(_, d)| d.is_finite())
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(id, _)| id.clone())
            .unwrap();
        let path = shortest_path_nodes(&env, &start, &goal);
        episodes.push(Episode {
            path_id: i,
            scan: scan.clone(),
            heading: 0.0,
            instructions: vec!["reach the far side".into()],
            path,
        });
        oracle_map.insert(format!("{i}-0"), (Arc::clone(&env), goal));
        envs.insert(scan, env);
    }
    let backends = Backends::offline(Arc::new(OracleChat::new(oracle_map)));
    let cfg = AgentConfig {
        qai_enabled: false,
        ..AgentConfig::default()
    };
    let request = BenchmarkRequest {
        envs: &envs,
        episodes: &episodes,
        cfg: &cfg,
        first_instruction_only: true,
        parallel: 4,
        config_echo: serde_json::json!({}),
    };
    let mut out = Vec::new();
    let summary = run_benchmark(&request, &backends, &mut out).unwrap();
    let elapsed = started.elapsed();
    assert_eq!(summary.sr, 100.0, "oracle policy must reach every goal");
    assert!(
        (summary.spl - 100.0).abs() <= 0.1,
        "mean SPL must be 1.00 +/- 0.001, got {}",
        summary.spl / 100.0
    );
    assert!(
        elapsed < Duration::from_secs(5),
        "oracle end-to-end took {elapsed:?}"
    );
    println!(
        "ACCEPTANCE PASS: oracle policy SR {}%, mean SPL {:.4} over 50 connected graphs in {elapsed:?}",
        summary.sr,
        summary.spl / 100.0
    );
}

/// Run the CLI binary over a suite written to disk; returns the summary
/// record parsed from the results file.
fn run_cli_suite(suite: &Suite, extra: &[&str]) -> serde_json::Value {
    let dir = tempfile::tempdir().unwrap();
    let (env_dir, episodes) = write_suite(dir.path(), suite);
    let out = dir.path().join("results.jsonl");
    let output = Command::new(env!("CARGO_BIN_EXE_tina"))
        .arg("run")
        .arg("--env")
        .arg(&env_dir)
        .arg("--episodes")
        .arg(&episodes)
        .arg("--backend")
        .arg("heuristic")
        .arg("--out")
        .arg(&out)
        .arg("--seed")
        .arg("0")
        .args(extra)
        .output()
        .expect("binary runs");
    assert!(
        output.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    let text = fs::read_to_string(&out).unwrap();
    serde_json::from_str(text.lines().last().unwrap()).unwrap()
}

#[test]
fn a05_qai_ablation_direction_holds() {
    let suite = qai_lookalike_suite(20);
    let with = run_cli_suite(&suite, &[]);
    let without = run_cli_suite(&suite, &["--no-qai"]);
    let sr_with = with["summary"]["sr"].as_f64().unwrap();
    let sr_without = without["summary"]["sr"].as_f64().unwrap();
    assert_eq!(
        sr_with, 100.0,
        "question answering must disambiguate the look-alikes"
    );
    assert!(
        sr_without <= 60.0,
        "without interaction the chooser must be at chance level, got {sr_without}%"
    );
    println!(
        "ACCEPTANCE PASS: question-answering ablation SR {sr_with}% with interaction vs \
         {sr_without}% without (threshold 60%), direction holds at seed 0"
    );
}

#[test]
fn a06_distance_ablation_direction_holds() {
    let suite = near_far_suite(20);
    let with = run_cli_suite(&suite, &[]);
    let without = run_cli_suite(&suite, &["--no-distance"]);
    let sr_with = with["summary"]["sr"].as_f64().unwrap();
    let sr_without = without["summary"]["sr"].as_f64().unwrap();
    assert_eq!(
        sr_with, 100.0,
        "distances must disambiguate the near/far doors"
    );
    assert!(
        sr_without <= 60.0,
        "without distances the chooser must be at chance level, got {sr_without}%"
    );
    println!(
        "ACCEPTANCE PASS: distance ablation SR {sr_with}% with distances vs {sr_without}% \
         without (threshold 60%), direction holds at seed 0"
    );
}

#[test]
fn a07_loop_invariants_hold_over_1000_random_episodes() {
    let mut rng = rng(3);
    let cfg = AgentConfig {
        qai_enabled: false,
        max_steps: 8,
        ..AgentConfig::default()
    };
    let backends = Backends::offline(Arc::new(RandomPolicyChat::new(5)));
    let mut executed = 0usize;
    for g in 0..25 {
        let env = random_connected_env(&mut rng, &format!("inv{g}"), 4 + g % 8);
        let ids: Vec<String> = env.graph.viewpoint_ids().map(str::to_string).collect();
        for e in 0..40 {
            let start = ids[rng.random_range(0..ids.len())].clone();
            let spec = EpisodeSpec {
                id: format!("{g}-{e}"),
                instruction: "wander".into(),
                start,
                heading: rng.random_range(0.0..360.0),
            };
            let traj = run_episode(&env, &spec, &cfg, &backends);
            assert!(
                matches!(
                    traj.termination,
                    Termination::Stopped | Termination::MaxSteps
                ),
                "random policy must not error: {:?}",
                traj.termination
            );
            for pair in traj.visited.windows(2) {
                assert!(
                    env.graph.has_edge(&pair[0], &pair[1]),
                    "move {}-{} is not an edge",
                    pair[0],
                    pair[1]
                );
            }
            assert!(traj.steps.len() <= cfg.max_steps, "step cap exceeded");
            let stopped = matches!(traj.termination, Termination::Stopped) as usize;
            assert_eq!(
                traj.actions.len(),
                traj.visited.len() - 1 + stopped,
                "action count must be moves plus the stop"
            );
            assert_eq!(
                traj.steps.iter().filter(|s| !s.memory.is_empty()).count(),
                traj.steps.len(),
                "memory bank must grow by one entry per executed step"
            );
            for step in &traj.steps {
                assert!(step.questions.is_empty() && step.qa.is_empty());
            }
            executed += 1;
        }
    }
    assert_eq!(executed, 1000);
    assert_eq!(
        backends.log().count("vqa"),
        0,
        "interaction disabled means an empty VQA call log"
    );
    println!(
        "ACCEPTANCE PASS: 1000 random-policy episodes, zero invariant violations, zero VQA \
         calls without interaction"
    );
}

#[test]
fn a08_scripted_runs_are_byte_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let suite = qai_lookalike_suite(6);
    let (env_dir, episodes) = write_suite(dir.path(), &suite);
    let fixtures = dir.path().join("fixtures.json");
    let mut entries = std::collections::BTreeMap::new();
    for episode in &suite.episodes {
        let id = episode.run_id(0);
        for step in 0..2 {
            entries.insert(
                format!("{id}:{step}:think"),
                "Looking for the piano.".to_string(),
            );
            entries.insert(
                format!("{id}:{step}:questions"),
                "1. Is there a piano?".to_string(),
            );
        }
        entries.insert(format!("{id}:0:act"), "Action: 1".to_string());
        entries.insert(format!("{id}:1:act"), "Action: 0".to_string());
    }
    fs::write(
        &fixtures,
        serde_json::json!({ "entries": entries }).to_string(),
    )
    .unwrap();

    let run = |out: &std::path::Path| {
        let output = Command::new(env!("CARGO_BIN_EXE_tina"))
            .arg("run")
            .arg("--env")
            .arg(&env_dir)
            .arg("--episodes")
            .arg(&episodes)
            .arg("--backend")
            .arg("scripted")
            .arg("--fixtures")
            .arg(&fixtures)
            .arg("--out")
            .arg(out)
            .arg("--seed")
            .arg("0")
            .arg("--parallel")
            .arg("3")
            .output()
            .unwrap();
        assert!(
            output.status.success(),
            "stderr: {}",
            String::from_utf8_lossy(&output.stderr)
        );
    };
    let out1 = dir.path().join("r1.jsonl");
    let out2 = dir.path().join("r2.jsonl");
    run(&out1);
    run(&out2);
    let b1 = fs::read(&out1).unwrap();
    let b2 = fs::read(&out2).unwrap();
    assert!(!b1.is_empty());
    assert_eq!(b1, b2, "identical scripted runs must be byte-identical");
    println!("ACCEPTANCE PASS: two identical scripted cmd_run invocations wrote byte-identical results files");
}

#[test]
fn a09_http_chat_conformance_against_a_stub_server() {
    // retry contract: two injected 500s, then success, attempts=3 in the log
    let server = StubServer::start(vec![
        StubResponse::status(500),
        StubResponse::status(500),
        StubResponse::ok_chat("recovered"),
    ]);
    let mut chat_cfg = HttpChatConfig::new(&server.base_url);
    chat_cfg.backoff_base_ms = 1;
    let backends = Backends::offline(Arc::new(HttpChat::new(chat_cfg)));
    let text = backends
        .agent_slot()
        .chat(
            &tina::backends::FixtureKey::new("e-0", 0, tina::backends::Phase::Think),
            &[tina::backends::ChatMessage::user("hi")],
        )
        .unwrap();
    assert_eq!(text, "recovered");
    let log = backends.log().snapshot();
    assert_eq!(log[0].attempts, 3, "attempts must be logged as 3");

    // malformed completion body: the episode errors, the benchmark completes
    let bad = StubServer::start(vec![StubResponse::raw(200, "plainly not json")]);
    let mut chat_cfg = HttpChatConfig::new(&bad.base_url);
    chat_cfg.backoff_base_ms = 1;
    let backends = Backends::offline(Arc::new(HttpChat::new(chat_cfg)));
    let mut b = tina::navgraph::EnvBuilder::new("scan");
    b.viewpoint("A", [0.0, 0.0, 0.0]);
    b.viewpoint("B", [0.0, 5.0, 0.0]);
    b.edge("A", "B");
    let envs = HashMap::from([("scan".to_string(), Arc::new(b.build().unwrap()))]);
    let episodes = vec![Episode {
        path_id: 0,
        scan: "scan".into(),
        heading: 0.0,
        instructions: vec!["go".into()],
        path: vec!["A".into(), "B".into()],
    }];
    let cfg = AgentConfig {
        qai_enabled: false,
        ..AgentConfig::default()
    };
    let request = BenchmarkRequest {
        envs: &envs,
        episodes: &episodes,
        cfg: &cfg,
        first_instruction_only: true,
        parallel: 1,
        config_echo: serde_json::json!({}),
    };
    let mut out = Vec::new();
    let summary = run_benchmark(&request, &backends, &mut out).unwrap();
    assert_eq!(summary.episodes, 1, "the benchmark completes");
    let text = String::from_utf8(out).unwrap();
    let first: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
    assert_eq!(first["termination"]["kind"], "error");
    println!(
        "ACCEPTANCE PASS: HTTP chat retried to attempts=3 on injected 500s; malformed body \
         surfaced as a backend failure and the episode recorded termination=error while the \
         benchmark completed"
    );
}
