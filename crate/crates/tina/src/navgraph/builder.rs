//! Programmatic environment construction for tests, fixtures, and demos.
//!
//! The builder emits the same document schema the loader reads, and `build`
//! routes through the loader's validation, so hand-built worlds obey exactly
//! the invariants file-based ones do.

use std::collections::BTreeMap;

use crate::perception::{
    BBox, DepthMap, DepthRegistry, SegMask, CAPTURE_ELEVATIONS, CAPTURE_HEADINGS,
};

use super::load::{
    environment_from_doc_with_depths, CellDoc, EdgeDoc, EnvironmentDoc, ObjectDoc, ViewpointDoc,
};
use super::{Environment, GraphError};

/// Default caption given to cells the builder was not told about.
pub const DEFAULT_CAPTION: &str = "a plain room";

#[derive(Debug, Clone)]
struct ViewpointSpec {
    position: [f64; 3],
    cells: BTreeMap<(u16, i16), CellDoc>,
}

/// Builds one scan. Every viewpoint starts with a full 24-cell grid carrying
/// [`DEFAULT_CAPTION`]; individual cells can then be customized.
#[derive(Debug, Clone)]
pub struct EnvBuilder {
    scan_id: String,
    viewpoints: BTreeMap<String, ViewpointSpec>,
    order: Vec<String>,
    edges: Vec<EdgeDoc>,
    depths: Vec<(String, DepthMap)>,
}

impl EnvBuilder {
    pub fn new(scan_id: impl Into<String>) -> Self {
        EnvBuilder {
            scan_id: scan_id.into(),
            viewpoints: BTreeMap::new(),
            order: Vec::new(),
            edges: Vec::new(),
            depths: Vec::new(),
        }
    }

    /// Add a viewpoint with a default-captioned full cell grid.
    pub fn viewpoint(&mut self, id: impl Into<String>, position: [f64; 3]) -> &mut Self {
        let id = id.into();
        let mut cells = BTreeMap::new();
        for h in CAPTURE_HEADINGS {
            for e in CAPTURE_ELEVATIONS {
                cells.insert(
                    (h, e),
                    CellDoc {
                        heading: h,
                        elevation: e,
                        caption: DEFAULT_CAPTION.to_string(),
                        objects: Vec::new(),
                        image_ref: None,
                    },
                );
            }
        }
        self.order.push(id.clone());
        self.viewpoints
            .insert(id, ViewpointSpec { position, cells });
        self
    }

    /// Set every caption of a viewpoint at once.
    pub fn caption_all(&mut self, id: &str, caption: &str) -> &mut Self {
        let vp = self
            .viewpoints
            .get_mut(id)
            .expect("unknown viewpoint in builder");
        for cell in vp.cells.values_mut() {
            cell.caption = caption.to_string();
        }
        self
    }

    /// Access one cell for customization.
    pub fn cell(&mut self, id: &str, heading: u16, elevation: i16) -> CellHandle<'_> {
        let vp = self
            .viewpoints
            .get_mut(id)
            .expect("unknown viewpoint in builder");
        let cell = vp
            .cells
            .get_mut(&(heading, elevation))
            .expect("cell direction not on the capture grid");
        CellHandle { cell }
    }

    /// Add an undirected edge; length derives from positions.
    pub fn edge(&mut self, a: &str, b: &str) -> &mut Self {
        self.edges.push(EdgeDoc::Pair(a.to_string(), b.to_string()));
        self
    }

    /// Add an edge with an explicit stated length (validated at build).
    pub fn edge_with_length(&mut self, a: &str, b: &str, length: f64) -> &mut Self {
        self.edges
            .push(EdgeDoc::WithLength(a.to_string(), b.to_string(), length));
        self
    }

    /// Register an in-memory depth map under a name object records can use.
    pub fn depth_map(&mut self, name: impl Into<String>, map: DepthMap) -> &mut Self {
        self.depths.push((name.into(), map));
        self
    }

    /// The wire-format document for this environment; serialize it to get a
    /// loadable fixture file (write registered depth maps as PGM sidecars
    /// alongside it).
    pub fn doc(&self) -> EnvironmentDoc {
        EnvironmentDoc {
            scan_id: self.scan_id.clone(),
            viewpoints: self
                .order
                .iter()
                .map(|id| {
                    let vp = &self.viewpoints[id];
                    ViewpointDoc {
                        id: id.clone(),
                        position: vp.position,
                        cells: vp.cells.values().cloned().collect(),
                    }
                })
                .collect(),
            edges: self.edges.clone(),
        }
    }

    /// Registered depth maps, for writing sidecars next to a serialized doc.
    pub fn depth_maps(&self) -> &[(String, DepthMap)] {
        &self.depths
    }

    /// Validate and assemble the environment.
    pub fn build(&self) -> Result<Environment, GraphError> {
        let mut registry = DepthRegistry::new();
        for (name, map) in &self.depths {
            registry.insert(name.clone(), map.clone());
        }
        environment_from_doc_with_depths(self.doc(), None, registry)
    }
}

/// Mutable view of one cell inside the builder.
pub struct CellHandle<'a> {
    cell: &'a mut CellDoc,
}

impl CellHandle<'_> {
    pub fn caption(self, text: &str) -> Self {
        self.cell.caption = text.to_string();
        self
    }

    pub fn image_ref(self, image: &str) -> Self {
        self.cell.image_ref = Some(image.to_string());
        self
    }

    /// Attach an object with a precomputed distance in meters.
    pub fn object_at(self, label: &str, distance_m: f64) -> Self {
        self.cell.objects.push(ObjectDoc {
            label: label.to_string(),
            distance: Some(distance_m),
            bbox: None,
            mask: None,
            depth: None,
        });
        self
    }

    /// Attach an object described by raw detector/segmenter outputs.
    pub fn object_raw(
        self,
        label: &str,
        bbox: BBox,
        mask: Option<SegMask>,
        depth_ref: &str,
    ) -> Self {
        self.cell.objects.push(ObjectDoc {
            label: label.to_string(),
            distance: None,
            bbox: Some([bbox.x0, bbox.y0, bbox.x1, bbox.y1]),
            mask: mask.map(|m| m.to_rle()),
            depth: Some(depth_ref.to_string()),
        });
        self
    }
}
