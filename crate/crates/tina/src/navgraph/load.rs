//! Environment file loading: JSON document schema, validation, and depth
//! sidecar resolution.
//!
//! One document per scan:
//!
//! ```json
//! {
//!   "scan_id": "scan1",
//!   "viewpoints": [
//!     {"id": "A", "position": [0.0, 0.0, 0.0], "cells": [ ...24 cells... ]}
//!   ],
//!   "edges": [["A", "B"], ["B", "C", 2.0]]
//! }
//! ```
//!
//! Edges are unordered id pairs; a third element, when present, states the
//! edge length in meters and is validated against the endpoint distance.
//! Depth maps are sidecar binary PGM (`P5`) files, 16-bit grayscale, value =
//! millimeters, 0 = invalid, referenced by path relative to the document.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::perception::{
    BBox, DepthMap, DepthRegistry, DirectionalCell, ObjectRecord, RleMask, SegMask,
    CAPTURE_ELEVATIONS, CAPTURE_HEADINGS,
};

use super::{Environment, GraphError, NavGraph, Position};

/// Wire form of one scan.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnvironmentDoc {
    pub scan_id: String,
    pub viewpoints: Vec<ViewpointDoc>,
    pub edges: Vec<EdgeDoc>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ViewpointDoc {
    pub id: String,
    pub position: [f64; 3],
    pub cells: Vec<CellDoc>,
}

/// `["A", "B"]` or `["A", "B", length_m]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EdgeDoc {
    Pair(String, String),
    WithLength(String, String, f64),
}

impl EdgeDoc {
    fn parts(&self) -> (String, String, Option<f64>) {
        match self {
            EdgeDoc::Pair(a, b) => (a.clone(), b.clone(), None),
            EdgeDoc::WithLength(a, b, len) => (a.clone(), b.clone(), Some(*len)),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CellDoc {
    pub heading: u16,
    pub elevation: i16,
    #[serde(default)]
    pub caption: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub objects: Vec<ObjectDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_ref: Option<String>,
}

/// Wire form of one object record: a `distance` for precomputed entries, or
/// `bbox` (+ optional `mask`) + `depth` for raw detector outputs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ObjectDoc {
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bbox: Option<[u32; 4]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mask: Option<MaskDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth: Option<String>,
}

pub type MaskDoc = RleMask;

pub(super) fn load_environment(path: &Path) -> Result<Environment, GraphError> {
    let text = fs::read_to_string(path).map_err(|e| GraphError::MalformedFile {
        path: path.display().to_string(),
        detail: e.to_string(),
    })?;
    let doc: EnvironmentDoc = serde_json::from_str(&text).map_err(|e| {
        let detail = e.to_string();
        match e.classify() {
            serde_json::error::Category::Data => GraphError::SchemaViolation {
                path: path.display().to_string(),
                detail,
            },
            _ => GraphError::MalformedFile {
                path: path.display().to_string(),
                detail,
            },
        }
    })?;
    environment_from_doc(doc, path.parent())
}

/// Validate a document and assemble the environment. `base` is where depth
/// sidecar paths resolve; `None` forbids sidecars (builder-made documents
/// register depth maps directly instead).
pub fn environment_from_doc(
    doc: EnvironmentDoc,
    base: Option<&Path>,
) -> Result<Environment, GraphError> {
    environment_from_doc_with_depths(doc, base, DepthRegistry::new())
}

pub(super) fn environment_from_doc_with_depths(
    doc: EnvironmentDoc,
    base: Option<&Path>,
    mut depths: DepthRegistry,
) -> Result<Environment, GraphError> {
    let mut positions = BTreeMap::new();
    let mut cells = BTreeMap::new();
    for vp in &doc.viewpoints {
        if positions.contains_key(&vp.id) {
            return Err(GraphError::InvariantViolation(format!(
                "duplicate viewpoint `{}`",
                vp.id
            )));
        }
        positions.insert(
            vp.id.clone(),
            Position::new(vp.position[0], vp.position[1], vp.position[2]),
        );
        let built = build_cells(&vp.id, &vp.cells, base, &mut depths)?;
        cells.insert(vp.id.clone(), built);
    }
    let edges: Vec<(String, String, Option<f64>)> = doc.edges.iter().map(|e| e.parts()).collect();
    let graph = NavGraph::new(positions, &edges)?;
    Ok(Environment::from_parts(doc.scan_id, graph, cells, depths))
}

fn build_cells(
    viewpoint: &str,
    docs: &[CellDoc],
    base: Option<&Path>,
    depths: &mut DepthRegistry,
) -> Result<Vec<DirectionalCell>, GraphError> {
    if docs.len() != 24 {
        return Err(GraphError::InvariantViolation(format!(
            "viewpoint `{viewpoint}` has {} cells, expected 24",
            docs.len()
        )));
    }
    let mut cells = Vec::with_capacity(24);
    let mut seen = Vec::with_capacity(24);
    for doc in docs {
        if !CAPTURE_HEADINGS.contains(&doc.heading) || !CAPTURE_ELEVATIONS.contains(&doc.elevation)
        {
            return Err(GraphError::InvariantViolation(format!(
                "viewpoint `{viewpoint}` cell ({}, {}) is not on the capture grid",
                doc.heading, doc.elevation
            )));
        }
        let dir = (doc.heading, doc.elevation);
        if seen.contains(&dir) {
            return Err(GraphError::InvariantViolation(format!(
                "viewpoint `{viewpoint}` has duplicate cell ({}, {})",
                doc.heading, doc.elevation
            )));
        }
        seen.push(dir);
        if doc.caption.is_empty() && doc.image_ref.is_none() {
            return Err(GraphError::InvariantViolation(format!(
                "viewpoint `{viewpoint}` cell ({}, {}) has neither caption nor image_ref",
                doc.heading, doc.elevation
            )));
        }
        let mut cell = DirectionalCell::new(doc.heading, doc.elevation, doc.caption.clone());
        cell.image_ref = doc.image_ref.clone();
        for obj in &doc.objects {
            cell.objects
                .push(build_object(viewpoint, obj, base, depths)?);
        }
        cells.push(cell);
    }
    Ok(cells)
}

fn build_object(
    viewpoint: &str,
    doc: &ObjectDoc,
    base: Option<&Path>,
    depths: &mut DepthRegistry,
) -> Result<ObjectRecord, GraphError> {
    match (&doc.distance, &doc.bbox, &doc.depth) {
        (Some(d), None, None) => {
            if doc.mask.is_some() {
                return Err(GraphError::SchemaViolation {
                    path: viewpoint.to_string(),
                    detail: format!(
                        "object `{}` mixes precomputed distance with a mask",
                        doc.label
                    ),
                });
            }
            if d.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
                return Err(GraphError::InvariantViolation(format!(
                    "object `{}` at `{viewpoint}` has non-positive distance {d}",
                    doc.label
                )));
            }
            Ok(ObjectRecord::precomputed(doc.label.clone(), *d))
        }
        (None, Some(b), Some(depth_ref)) => {
            let bbox = BBox::new(b[0], b[1], b[2], b[3]).map_err(GraphError::InvariantViolation)?;
            let mask = doc
                .mask
                .as_ref()
                .map(SegMask::from_rle)
                .transpose()
                .map_err(GraphError::InvariantViolation)?;
            if !depths.contains(depth_ref) {
                let base = base.ok_or_else(|| GraphError::InvariantViolation(format!(
                    "object `{}` at `{viewpoint}` references depth map `{depth_ref}` but no sidecar directory is available",
                    doc.label
                )))?;
                let full = base.join(depth_ref);
                let bytes = fs::read(&full).map_err(|e| GraphError::MalformedFile {
                    path: full.display().to_string(),
                    detail: e.to_string(),
                })?;
                let map = DepthMap::from_pgm(&bytes).map_err(|e| GraphError::MalformedFile {
                    path: full.display().to_string(),
                    detail: e,
                })?;
                depths.insert(depth_ref.clone(), map);
            }
            Ok(ObjectRecord::raw(
                doc.label.clone(),
                bbox,
                mask,
                depth_ref.clone(),
            ))
        }
        _ => Err(GraphError::SchemaViolation {
            path: viewpoint.to_string(),
            detail: format!(
                "object `{}` must have either a distance or bbox+depth",
                doc.label
            ),
        }),
    }
}
