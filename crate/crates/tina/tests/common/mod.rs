//! Shared test machinery: designed ablation suites, random graph
//! generators, brute-force oracles, and a minimal scriptable HTTP stub.

#![allow(dead_code)]

use std::collections::HashMap;
use std::fs;
use std::io::{Read, Write};
use std::net::{TcpListener, TcpStream};
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use tina::eval::Episode;
use tina::navgraph::{EnvBuilder, Environment};

// ---------------------------------------------------------------------------
// Brute-force oracles
// ---------------------------------------------------------------------------

/// Shortest path length by exhaustive enumeration of all simple paths.
/// Exponential; only for graphs of ~10 nodes.
pub fn brute_force_geodesic(env: &Environment, a: &str, b: &str) -> f64 {
    fn dfs(
        env: &Environment,
        here: &str,
        goal: &str,
        cost: f64,
        visited: &mut Vec<String>,
        best: &mut f64,
    ) {
        if here == goal {
            *best = best.min(cost);
            return;
        }
        if cost >= *best {
            return;
        }
        for (next, len) in env.graph.neighbors(here).unwrap() {
            if visited.iter().any(|v| v == next) {
                continue;
            }
            visited.push(next.clone());
            dfs(env, next, goal, cost + len, visited, best);
            visited.pop();
        }
    }
    if a == b {
        return 0.0;
    }
    let mut best = f64::INFINITY;
    let mut visited = vec![a.to_string()];
    dfs(env, a, b, 0.0, &mut visited, &mut best);
    best
}

// ---------------------------------------------------------------------------
// Random graphs
// ---------------------------------------------------------------------------

/// A connected random graph: a random spanning tree plus extra edges.
/// Node ids are `n0..n{count-1}`; edge lengths derive from positions.
pub fn random_connected_env(rng: &mut StdRng, scan: &str, nodes: usize) -> Environment {
    builder_for_random_env(rng, scan, nodes, true)
        .build()
        .unwrap()
}

/// Like [`random_connected_env`] but possibly disconnected (no spanning tree).
pub fn random_env_maybe_disconnected(rng: &mut StdRng, scan: &str, nodes: usize) -> Environment {
    builder_for_random_env(rng, scan, nodes, false)
        .build()
        .unwrap()
}

pub fn builder_for_random_env(
    rng: &mut StdRng,
    scan: &str,
    nodes: usize,
    connect: bool,
) -> EnvBuilder {
    let mut b = EnvBuilder::new(scan);
    let mut positions: Vec<[f64; 3]> = Vec::new();
    for i in 0..nodes {
        // grid-jittered positions guarantee pairwise-distinct points
        let base_x = (i % 4) as f64 * 8.0;
        let base_y = (i / 4) as f64 * 8.0;
        let pos = [
            base_x + rng.random_range(-2.0..2.0),
            base_y + rng.random_range(-2.0..2.0),
            rng.random_range(-0.5..0.5),
        ];
        positions.push(pos);
        b.viewpoint(format!("n{i}"), pos);
    }
    let mut edges: Vec<(usize, usize)> = Vec::new();
    if connect {
        for i in 1..nodes {
            let j = rng.random_range(0..i);
            edges.push((j, i));
        }
    }
    for i in 0..nodes {
        for j in (i + 1)..nodes {
            if edges.contains(&(i, j)) || edges.contains(&(j, i)) {
                continue;
            }
            if rng.random_bool(0.25) {
                edges.push((i, j));
            }
        }
    }
    for (i, j) in edges {
        b.edge(&format!("n{i}"), &format!("n{j}"));
    }
    b
}

/// Shortest path as a node sequence (Dijkstra with parents), for building
/// valid ground-truth paths. Panics if `b` is unreachable.
pub fn shortest_path_nodes(env: &Environment, a: &str, b: &str) -> Vec<String> {
    let mut dist: HashMap<String, f64> = HashMap::new();
    let mut parent: HashMap<String, String> = HashMap::new();
    let mut todo: Vec<String> = env.graph.viewpoint_ids().map(str::to_string).collect();
    dist.insert(a.to_string(), 0.0);
    while !todo.is_empty() {
        let (idx, _) = todo
            .iter()
            .enumerate()
            .min_by(|(_, x), (_, y)| {
                dist.get(*x)
                    .copied()
                    .unwrap_or(f64::INFINITY)
                    .total_cmp(&dist.get(*y).copied().unwrap_or(f64::INFINITY))
            })
            .unwrap();
        let here = todo.swap_remove(idx);
        let d = dist.get(&here).copied().unwrap_or(f64::INFINITY);
        if here == b {
            break;
        }
        for (next, len) in env.graph.neighbors(&here).unwrap() {
            if d + len < dist.get(next).copied().unwrap_or(f64::INFINITY) {
                dist.insert(next.clone(), d + len);
                parent.insert(next.clone(), here.clone());
            }
        }
    }
    let mut path = vec![b.to_string()];
    while path.last().unwrap() != a {
        let prev = parent[path.last().unwrap()].clone();
        path.push(prev);
    }
    path.reverse();
    path
}

// ---------------------------------------------------------------------------
// Designed ablation suites
// ---------------------------------------------------------------------------

pub struct Suite {
    pub envs: HashMap<String, Arc<Environment>>,
    pub builders: Vec<EnvBuilder>,
    pub episodes: Vec<Episode>,
}

fn bearing_position(bearing_deg: f64, dist: f64) -> [f64; 3] {
    let rad = bearing_deg.to_radians();
    [dist * rad.sin(), dist * rad.cos(), 0.0]
}

/// Look-alike candidates distinguishable only through question answering:
/// both doors share a caption, and the goal side hides an object beyond the
/// 3-meter annotation filter that only the VQA channel can reveal.
pub fn qai_lookalike_suite(n: usize) -> Suite {
    let mut envs = HashMap::new();
    let mut builders = Vec::new();
    let mut episodes = Vec::new();
    for i in 0..n {
        let scan = format!("qai{i}");
        let (goal_bearing, decoy_bearing) = if i % 2 == 0 {
            (-45.0, 90.0)
        } else {
            (90.0, -45.0)
        };
        let mut b = EnvBuilder::new(&scan);
        b.viewpoint("s", [0.0, 0.0, 0.0]);
        b.viewpoint("g", bearing_position(goal_bearing, 4.0));
        b.viewpoint("d", bearing_position(decoy_bearing, 4.0));
        b.edge("s", "g");
        b.edge("s", "d");
        let goal_heading = if goal_bearing < 0.0 { 315 } else { 90 };
        let decoy_heading = if decoy_bearing < 0.0 { 315 } else { 90 };
        b.cell("s", goal_heading, 0)
            .caption("a doorway")
            .object_at("piano", 4.0);
        b.cell("s", decoy_heading, 0).caption("a doorway");
        let env = Arc::new(b.build().unwrap());
        envs.insert(scan.clone(), env);
        builders.push(b);
        episodes.push(Episode {
            path_id: i as i64,
            scan,
            heading: 0.0,
            instructions: vec!["Find the piano.".to_string()],
            path: vec!["s".to_string(), "g".to_string()],
        });
    }
    Suite {
        envs,
        builders,
        episodes,
    }
}

/// Near/far disambiguation: two identically captioned doors at different
/// distances, the instruction asking for the closer one. Only the distance
/// annotations separate them.
pub fn near_far_suite(n: usize) -> Suite {
    let mut envs = HashMap::new();
    let mut builders = Vec::new();
    let mut episodes = Vec::new();
    for i in 0..n {
        let scan = format!("dis{i}");
        let (near_bearing, far_bearing) = if i % 2 == 0 {
            (-45.0, 90.0)
        } else {
            (90.0, -45.0)
        };
        let mut b = EnvBuilder::new(&scan);
        b.viewpoint("s", [0.0, 0.0, 0.0]);
        b.viewpoint("near", bearing_position(near_bearing, 2.0));
        b.viewpoint("far", bearing_position(far_bearing, 6.0));
        b.edge("s", "near");
        b.edge("s", "far");
        let near_heading = if near_bearing < 0.0 { 315 } else { 90 };
        let far_heading = if far_bearing < 0.0 { 315 } else { 90 };
        b.cell("s", near_heading, 0).caption("a door");
        b.cell("s", far_heading, 0).caption("a door");
        let env = Arc::new(b.build().unwrap());
        envs.insert(scan.clone(), env);
        builders.push(b);
        episodes.push(Episode {
            path_id: i as i64,
            scan,
            heading: 0.0,
            instructions: vec!["Walk to the closer door.".to_string()],
            path: vec!["s".to_string(), "near".to_string()],
        });
    }
    Suite {
        envs,
        builders,
        episodes,
    }
}

/// Write a suite to disk as the CLI expects it: an env dir plus an episodes
/// file. Returns (env_dir, episodes_path).
pub fn write_suite(dir: &Path, suite: &Suite) -> (std::path::PathBuf, std::path::PathBuf) {
    let env_dir = dir.join("envs");
    fs::create_dir_all(&env_dir).unwrap();
    for b in &suite.builders {
        let doc = b.doc();
        let path = env_dir.join(format!("{}.json", doc.scan_id));
        fs::write(&path, serde_json::to_string_pretty(&doc).unwrap()).unwrap();
        for (name, map) in b.depth_maps() {
            let sidecar = env_dir.join(name);
            if let Some(parent) = sidecar.parent() {
                fs::create_dir_all(parent).unwrap();
            }
            fs::write(sidecar, map.to_pgm()).unwrap();
        }
    }
    let episodes_path = dir.join("episodes.json");
    fs::write(
        &episodes_path,
        serde_json::to_string_pretty(&suite.episodes).unwrap(),
    )
    .unwrap();
    (env_dir, episodes_path)
}

// ---------------------------------------------------------------------------
// Stub HTTP server
// ---------------------------------------------------------------------------

/// One canned HTTP response.
#[derive(Debug, Clone)]
pub struct StubResponse {
    pub status: u16,
    pub body: String,
}

impl StubResponse {
    pub fn ok_chat(content: &str) -> Self {
        StubResponse {
            status: 200,
            body: serde_json::json!({
                "choices": [{"message": {"role": "assistant", "content": content}}]
            })
            .to_string(),
        }
    }

    pub fn status(status: u16) -> Self {
        StubResponse {
            status,
            body: format!("{{\"error\": \"status {status}\"}}"),
        }
    }

    pub fn raw(status: u16, body: &str) -> Self {
        StubResponse {
            status,
            body: body.to_string(),
        }
    }
}

/// A minimal HTTP/1.1 server replaying a scripted response sequence; the
/// last response repeats once the script runs out.
pub struct StubServer {
    pub base_url: String,
    hits: Arc<AtomicUsize>,
    shutdown: Arc<AtomicUsize>,
    handle: Option<std::thread::JoinHandle<()>>,
}

impl StubServer {
    pub fn start(script: Vec<StubResponse>) -> Self {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        let hits = Arc::new(AtomicUsize::new(0));
        let shutdown = Arc::new(AtomicUsize::new(0));
        let script = Arc::new(Mutex::new(script));
        let hits_clone = Arc::clone(&hits);
        let shutdown_clone = Arc::clone(&shutdown);
        listener.set_nonblocking(true).unwrap();
        let handle = std::thread::spawn(move || loop {
            if shutdown_clone.load(Ordering::Relaxed) != 0 {
                return;
            }
            match listener.accept() {
                Ok((stream, _)) => {
                    let n = hits_clone.fetch_add(1, Ordering::Relaxed);
                    let response = {
                        let script = script.lock().unwrap();
                        script.get(n).or_else(|| script.last()).cloned().unwrap()
                    };
                    let _ = serve_one(stream, &response);
                }
                Err(ref e) if e.kind() == std::io::ErrorKind::WouldBlock => {
                    std::thread::sleep(std::time::Duration::from_millis(2));
                }
                Err(_) => return,
            }
        });
        StubServer {
            base_url: format!("http://{addr}"),
            hits,
            shutdown,
            handle: Some(handle),
        }
    }

    pub fn hits(&self) -> usize {
        self.hits.load(Ordering::Relaxed)
    }
}

impl Drop for StubServer {
    fn drop(&mut self) {
        self.shutdown.store(1, Ordering::Relaxed);
        if let Some(handle) = self.handle.take() {
            let _ = handle.join();
        }
    }
}

fn serve_one(mut stream: TcpStream, response: &StubResponse) -> std::io::Result<()> {
    stream.set_read_timeout(Some(std::time::Duration::from_secs(2)))?;
    let mut buf = Vec::new();
    let mut chunk = [0u8; 4096];
    // read headers
    while !buf.windows(4).any(|w| w == b"\r\n\r\n") {
        let n = stream.read(&mut chunk)?;
        if n == 0 {
            break;
        }
        buf.extend_from_slice(&chunk[..n]);
    }
    let header_end = buf
        .windows(4)
        .position(|w| w == b"\r\n\r\n")
        .map(|p| p + 4)
        .unwrap_or(buf.len());
    let headers = String::from_utf8_lossy(&buf[..header_end]).to_lowercase();
    let content_length: usize = headers
        .lines()
        .find_map(|l| l.strip_prefix("content-length:"))
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(0);
    while buf.len() < header_end + content_length {
        let n = stream.read(&mut chunk)?;
        if n == 0 {
            break;
        }
        buf.extend_from_slice(&chunk[..n]);
    }
    let reply = format!(
        "HTTP/1.1 {} {}\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{}",
        response.status,
        if response.status < 300 { "OK" } else { "Err" },
        response.body.len(),
        response.body
    );
    stream.write_all(reply.as_bytes())?;
    stream.flush()?;
    Ok(())
}

/// Seeded rng shorthand.
pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}
