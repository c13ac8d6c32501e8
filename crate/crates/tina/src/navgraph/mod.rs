//! The world model: a navigation graph of viewpoints, the agent's pose on
//! it, geodesic distances, and candidate enumeration with relative bearings.
//!
//! Conventions (fixed here, since bearings must be testable):
//!
//! - coordinates: `x` east, `y` north, `z` up, in meters;
//! - heading: degrees in `[0, 360)`, clockwise from `+y` (north);
//! - elevation: restricted to the three capture rings `{-30, 0, +30}`.
//!
//! An [`Environment`] is immutable after load; every operation here is
//! read-only and safe for unsynchronized concurrent use across episodes.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap, HashMap};
use std::path::Path;
use std::sync::{Arc, RwLock};

use serde::{Deserialize, Serialize};

use crate::perception::{DepthRegistry, DirectionalCell};

mod builder;
mod load;

pub use builder::EnvBuilder;
pub use load::{CellDoc, EdgeDoc, EnvironmentDoc, MaskDoc, ObjectDoc, ViewpointDoc};

/// Edge lengths in fixture files must match the endpoint distance this
/// closely, in meters.
pub const EDGE_LENGTH_TOLERANCE_M: f64 = 1e-6;

#[derive(Debug, thiserror::Error)]
pub enum GraphError {
    #[error("malformed environment file `{path}`: {detail}")]
    MalformedFile { path: String, detail: String },
    #[error("environment schema violation in `{path}`: {detail}")]
    SchemaViolation { path: String, detail: String },
    #[error("environment invariant violated: {0}")]
    InvariantViolation(String),
    #[error("unknown viewpoint `{0}`")]
    UnknownViewpoint(String),
    #[error("cannot take a bearing between coincident points")]
    CoincidentPoints,
}

/// A point in the world frame, meters east/north/up.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Position {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Position {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Position { x, y, z }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn distance_to(&self, other: &Position) -> f64 {
        let dx = other.x - self.x;
        let dy = other.y - self.y;
        let dz = other.z - self.z;
        (dx * dx + dy * dy + dz * dz).sqrt()
    }
}

/// Where the agent stands and faces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub viewpoint: String,
    /// Degrees in `[0, 360)`, clockwise from north.
    pub heading: f64,
    /// One of `{-30, 0, 30}`.
    pub elevation: i16,
}

impl Pose {
    /// Normalizes the heading into `[0, 360)`.
    pub fn new(viewpoint: impl Into<String>, heading: f64, elevation: i16) -> Self {
        debug_assert!(
            matches!(elevation, -30 | 0 | 30),
            "elevation must be a capture ring"
        );
        Pose {
            viewpoint: viewpoint.into(),
            heading: normalize_heading(heading),
            elevation,
        }
    }
}

/// Fold any angle into `[0, 360)`.
pub fn normalize_heading(deg: f64) -> f64 {
    let h = deg.rem_euclid(360.0);
    // rem_euclid can yield 360.0 for tiny negative inputs
    if h >= 360.0 {
        0.0
    } else {
        h
    }
}

/// Fold any angle into `(-180, 180]`.
pub fn normalize_relative(deg: f64) -> f64 {
    let mut d = deg.rem_euclid(360.0);
    if d > 180.0 {
        d -= 360.0;
    }
    d
}

/// Bearing from `from` to `to`: degrees clockwise from north, in `[0, 360)`.
pub fn absolute_bearing(from: &Position, to: &Position) -> Result<f64, GraphError> {
    if from == to {
        return Err(GraphError::CoincidentPoints);
    }
    let dx = to.x - from.x;
    let dy = to.y - from.y;
    Ok(normalize_heading(dx.atan2(dy).to_degrees()))
}

/// Heading and elevation of `to` relative to a pose at `from`.
///
/// The relative heading is in `(-180, 180]`; the relative elevation is the
/// pitch angle of the target above the horizontal plane.
pub fn relative_bearing(
    pose: &Pose,
    from: &Position,
    to: &Position,
) -> Result<(f64, f64), GraphError> {
    let bearing = absolute_bearing(from, to)?;
    let rel_heading = normalize_relative(bearing - pose.heading);
    let dx = to.x - from.x;
    let dy = to.y - from.y;
    let horizontal = (dx * dx + dy * dy).sqrt();
    let rel_elevation = (to.z - from.z).atan2(horizontal).to_degrees();
    Ok((rel_heading, rel_elevation))
}

/// Map a relative heading to one of the eight 45-degree sectors.
///
/// Returns the sector index and its name. The sector is the nearest multiple
/// of 45 degrees; an exact boundary (22.5 degrees) resolves to the larger
/// sector index, so 22.5 is `front-right` and -22.5 is `front-left`.
pub fn heading_sector(rel_heading: f64) -> (usize, &'static str) {
    let a = normalize_heading(rel_heading);
    let lo = (a / 45.0).floor() as usize; // 0..=7
    let hi = lo + 1; // up to 8, meaning wraparound to sector 0
    let d_lo = a - (lo as f64) * 45.0;
    let d_hi = (hi as f64) * 45.0 - a;
    let sector = if d_lo < d_hi {
        lo
    } else if d_hi < d_lo {
        hi % 8
    } else {
        lo.max(hi % 8)
    };
    (sector, crate::perception::SECTOR_NAMES[sector])
}

/// Nearest capture ring to a relative elevation; the 15-degree boundary
/// resolves upward.
pub fn elevation_ring(rel_elevation: f64) -> i16 {
    if rel_elevation >= 15.0 {
        30
    } else if rel_elevation < -15.0 {
        -30
    } else {
        0
    }
}

/// Points at the directional cell covering a candidate's direction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellRef {
    pub viewpoint: String,
    pub heading_deg: u16,
    pub elevation_deg: i16,
}

/// A navigable neighbor of the agent's current viewpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub viewpoint: String,
    /// Degrees in `(-180, 180]` relative to the agent's heading.
    pub rel_heading: f64,
    pub rel_elevation: f64,
    pub euclid_dist: f64,
    pub cell_ref: CellRef,
}

/// An undirected graph of viewpoints with metric edge lengths.
///
/// Shortest-path results are memoized per source viewpoint, since the
/// evaluation metrics query many pairs against the same graph.
#[derive(Debug)]
pub struct NavGraph {
    positions: BTreeMap<String, Position>,
    adjacency: BTreeMap<String, Vec<(String, f64)>>,
    edge_count: usize,
    dist_cache: RwLock<HashMap<String, Arc<HashMap<String, f64>>>>,
}

impl NavGraph {
    /// Assemble and validate a graph. Edge lengths of `None` are derived
    /// from the endpoint positions; explicit lengths are checked against
    /// them within [`EDGE_LENGTH_TOLERANCE_M`].
    pub fn new(
        positions: BTreeMap<String, Position>,
        edges: &[(String, String, Option<f64>)],
    ) -> Result<Self, GraphError> {
        for (id, pos) in &positions {
            if !pos.is_finite() {
                return Err(GraphError::InvariantViolation(format!(
                    "viewpoint `{id}` has a non-finite position"
                )));
            }
        }
        let mut adjacency: BTreeMap<String, Vec<(String, f64)>> = positions
            .keys()
            .map(|id| (id.clone(), Vec::new()))
            .collect();
        let mut seen: Vec<(String, String)> = Vec::new();
        for (a, b, stated) in edges {
            if a == b {
                return Err(GraphError::InvariantViolation(format!(
                    "self-loop at `{a}`"
                )));
            }
            let pa = positions.get(a).ok_or_else(|| {
                GraphError::InvariantViolation(format!("edge endpoint `{a}` is not a viewpoint"))
            })?;
            let pb = positions.get(b).ok_or_else(|| {
                GraphError::InvariantViolation(format!("edge endpoint `{b}` is not a viewpoint"))
            })?;
            let key = if a <= b {
                (a.clone(), b.clone())
            } else {
                (b.clone(), a.clone())
            };
            if seen.contains(&key) {
                return Err(GraphError::InvariantViolation(format!(
                    "duplicate edge `{a}`-`{b}`"
                )));
            }
            seen.push(key);
            let euclid = pa.distance_to(pb);
            let length = match stated {
                Some(len) => {
                    if (len - euclid).abs() > EDGE_LENGTH_TOLERANCE_M {
                        return Err(GraphError::InvariantViolation(format!(
                            "edge `{a}`-`{b}` states length {len} but endpoints are {euclid} m apart"
                        )));
                    }
                    *len
                }
                None => euclid,
            };
            if length <= 0.0 {
                return Err(GraphError::InvariantViolation(format!(
                    "edge `{a}`-`{b}` has non-positive length"
                )));
            }
            adjacency.get_mut(a).unwrap().push((b.clone(), length));
            adjacency.get_mut(b).unwrap().push((a.clone(), length));
        }
        for neighbors in adjacency.values_mut() {
            neighbors.sort_by(|x, y| x.0.cmp(&y.0));
        }
        Ok(NavGraph {
            positions,
            adjacency,
            edge_count: seen.len(),
            dist_cache: RwLock::new(HashMap::new()),
        })
    }

    pub fn viewpoint_ids(&self) -> impl Iterator<Item = &str> {
        self.positions.keys().map(|s| s.as_str())
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn contains(&self, id: &str) -> bool {
        self.positions.contains_key(id)
    }

    pub fn position(&self, id: &str) -> Result<&Position, GraphError> {
        self.positions
            .get(id)
            .ok_or_else(|| GraphError::UnknownViewpoint(id.to_string()))
    }

    /// Neighbors with edge lengths, in lexicographic id order.
    pub fn neighbors(&self, id: &str) -> Result<&[(String, f64)], GraphError> {
        self.adjacency
            .get(id)
            .map(|v| v.as_slice())
            .ok_or_else(|| GraphError::UnknownViewpoint(id.to_string()))
    }

    pub fn has_edge(&self, a: &str, b: &str) -> bool {
        self.adjacency
            .get(a)
            .map(|ns| ns.iter().any(|(n, _)| n == b))
            .unwrap_or(false)
    }

    pub fn edge_length(&self, a: &str, b: &str) -> Result<f64, GraphError> {
        self.neighbors(a)?
            .iter()
            .find(|(n, _)| n == b)
            .map(|(_, len)| *len)
            .ok_or_else(|| GraphError::InvariantViolation(format!("no edge `{a}`-`{b}`")))
    }

    /// Shortest path length along edges, in meters. Zero when `a == b`,
    /// `f64::INFINITY` when `b` is unreachable from `a`.
    pub fn geodesic_distance(&self, a: &str, b: &str) -> Result<f64, GraphError> {
        if !self.contains(b) {
            return Err(GraphError::UnknownViewpoint(b.to_string()));
        }
        let dists = self.distances_from(a)?;
        Ok(dists.get(b).copied().unwrap_or(f64::INFINITY))
    }

    /// All shortest-path distances from one source, memoized.
    pub fn distances_from(&self, source: &str) -> Result<Arc<HashMap<String, f64>>, GraphError> {
        if !self.contains(source) {
            return Err(GraphError::UnknownViewpoint(source.to_string()));
        }
        if let Some(cached) = self
            .dist_cache
            .read()
            .expect("dist cache poisoned")
            .get(source)
        {
            return Ok(Arc::clone(cached));
        }
        let computed = Arc::new(self.dijkstra(source));
        self.dist_cache
            .write()
            .expect("dist cache poisoned")
            .entry(source.to_string())
            .or_insert_with(|| Arc::clone(&computed));
        Ok(computed)
    }

    fn dijkstra(&self, source: &str) -> HashMap<String, f64> {
        #[derive(PartialEq)]
        struct Entry(f64, String);
        impl Eq for Entry {}
        impl PartialOrd for Entry {
            fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
                Some(self.cmp(other))
            }
        }
        impl Ord for Entry {
            fn cmp(&self, other: &Self) -> std::cmp::Ordering {
                self.0
                    .total_cmp(&other.0)
                    .then_with(|| self.1.cmp(&other.1))
            }
        }

        let mut dist: HashMap<String, f64> = HashMap::new();
        let mut heap = BinaryHeap::new();
        dist.insert(source.to_string(), 0.0);
        heap.push(Reverse(Entry(0.0, source.to_string())));
        while let Some(Reverse(Entry(d, id))) = heap.pop() {
            if d > dist.get(&id).copied().unwrap_or(f64::INFINITY) {
                continue;
            }
            for (next, len) in &self.adjacency[&id] {
                let nd = d + len;
                if nd < dist.get(next).copied().unwrap_or(f64::INFINITY) {
                    dist.insert(next.clone(), nd);
                    heap.push(Reverse(Entry(nd, next.clone())));
                }
            }
        }
        dist
    }
}

/// A fully loaded scan: graph plus per-viewpoint directional cells and the
/// depth maps their object records refer to.
#[derive(Debug)]
pub struct Environment {
    pub scan_id: String,
    pub graph: NavGraph,
    cells: BTreeMap<String, Vec<DirectionalCell>>,
    depths: DepthRegistry,
}

impl Environment {
    pub(crate) fn from_parts(
        scan_id: String,
        graph: NavGraph,
        mut cells: BTreeMap<String, Vec<DirectionalCell>>,
        depths: DepthRegistry,
    ) -> Self {
        for cell_list in cells.values_mut() {
            for cell in cell_list {
                for object in &mut cell.objects {
                    object.resolve(&depths);
                }
            }
        }
        Environment {
            scan_id,
            graph,
            cells,
            depths,
        }
    }

    /// The 24 directional cells captured at a viewpoint.
    pub fn cells(&self, viewpoint: &str) -> Result<&[DirectionalCell], GraphError> {
        self.cells
            .get(viewpoint)
            .map(|v| v.as_slice())
            .ok_or_else(|| GraphError::UnknownViewpoint(viewpoint.to_string()))
    }

    /// Resolve a candidate's cell reference.
    pub fn cell(&self, cell_ref: &CellRef) -> Result<&DirectionalCell, GraphError> {
        self.cells(&cell_ref.viewpoint)?
            .iter()
            .find(|c| {
                c.heading_deg == cell_ref.heading_deg && c.elevation_deg == cell_ref.elevation_deg
            })
            .ok_or_else(|| {
                GraphError::InvariantViolation(format!(
                    "viewpoint `{}` has no cell at heading {} elevation {}",
                    cell_ref.viewpoint, cell_ref.heading_deg, cell_ref.elevation_deg
                ))
            })
    }

    pub fn depths(&self) -> &DepthRegistry {
        &self.depths
    }
}

/// Load and validate an environment file (see the book's file-format
/// chapter for the schema). Depth map sidecars are resolved relative to the
/// file's directory and loaded eagerly.
pub fn load_environment(path: impl AsRef<Path>) -> Result<Environment, GraphError> {
    load::load_environment(path.as_ref())
}

/// Enumerate the navigable candidates at a pose.
///
/// One candidate per graph neighbor, ordered by ascending absolute relative
/// heading with lexicographic ids breaking ties, so menus are deterministic.
pub fn candidates_at(env: &Environment, pose: &Pose) -> Result<Vec<Candidate>, GraphError> {
    let here = env.graph.position(&pose.viewpoint)?;
    let mut out = Vec::new();
    for (neighbor, _len) in env.graph.neighbors(&pose.viewpoint)? {
        let there = env.graph.position(neighbor)?;
        let (rel_heading, rel_elevation) = relative_bearing(pose, here, there)?;
        let bearing = absolute_bearing(here, there)?;
        let (sector_idx, _) = heading_sector(bearing);
        out.push(Candidate {
            viewpoint: neighbor.clone(),
            rel_heading,
            rel_elevation,
            euclid_dist: here.distance_to(there),
            cell_ref: CellRef {
                viewpoint: pose.viewpoint.clone(),
                heading_deg: crate::perception::CAPTURE_HEADINGS[sector_idx],
                elevation_deg: elevation_ring(rel_elevation),
            },
        });
    }
    out.sort_by(|a, b| {
        a.rel_heading
            .abs()
            .total_cmp(&b.rel_heading.abs())
            .then_with(|| a.viewpoint.cmp(&b.viewpoint))
    });
    Ok(out)
}
