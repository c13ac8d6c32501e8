//! Visual perception: turns a viewpoint's 24 directional cells into the
//! textual observation the agent reasons over.
//!
//! Distance to an object is the mean depth over the pixels where the object's
//! bounding box and segmentation mask agree. With segmentation disabled the
//! cheaper variant reads the depth at the bounding-box center instead, which
//! is less robust for irregularly shaped objects. Objects farther than
//! [`DISTANCE_FILTER_M`] are left out of the observation entirely.
//!
//! A [`Snapshot`] keeps the eight consolidated per-direction descriptions
//! separate from the object distance annotations so that ablation flags can
//! drop the annotations without touching the descriptions.

use std::collections::HashMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::backends::{BackendError, ChatMessage, ChatSlot, FixtureKey, Phase};
use crate::navgraph::Pose;

/// Objects beyond this range are omitted from observations.
pub const DISTANCE_FILTER_M: f64 = 3.0;

/// The eight horizontal capture headings, every 45 degrees.
pub const CAPTURE_HEADINGS: [u16; 8] = [0, 45, 90, 135, 180, 225, 270, 315];

/// The three vertical capture rings, in degrees of elevation.
pub const CAPTURE_ELEVATIONS: [i16; 3] = [-30, 0, 30];

#[derive(Debug, Clone, thiserror::Error)]
pub enum PerceptionError {
    #[error("mask is {mask_w}x{mask_h} but depth map is {depth_w}x{depth_h}")]
    DimensionMismatch {
        mask_w: u32,
        mask_h: u32,
        depth_w: u32,
        depth_h: u32,
    },
    #[error("bounding box [{x0},{y0},{x1},{y1}] out of bounds for {w}x{h} depth map")]
    BBoxOutOfBounds {
        x0: u32,
        y0: u32,
        x1: u32,
        y1: u32,
        w: u32,
        h: u32,
    },
    #[error("no valid depth pixels under the mask inside the bounding box")]
    NoValidPixels,
    #[error("depth at bounding-box center ({x},{y}) is invalid")]
    InvalidCenterDepth { x: u32, y: u32 },
    #[error("expected the full 8x3 capture grid, got {got} cells{detail}")]
    GridIncomplete { got: usize, detail: String },
    #[error("unknown depth map `{0}`")]
    UnknownDepthMap(String),
    #[error(transparent)]
    Backend(#[from] BackendError),
}

// ---------------------------------------------------------------------------
// Depth maps
// ---------------------------------------------------------------------------

/// A row-major grid of depth values in meters. Non-finite or non-positive
/// entries mark invalid pixels (sensor holes, missing returns).
#[derive(Debug, Clone, PartialEq)]
pub struct DepthMap {
    width: u32,
    height: u32,
    values: Vec<f64>,
}

impl DepthMap {
    pub fn new(width: u32, height: u32, values: Vec<f64>) -> Result<Self, String> {
        if width == 0 || height == 0 {
            return Err(format!(
                "depth map dimensions must be >= 1, got {width}x{height}"
            ));
        }
        if values.len() != (width as usize) * (height as usize) {
            return Err(format!(
                "depth map {width}x{height} needs {} values, got {}",
                (width as usize) * (height as usize),
                values.len()
            ));
        }
        Ok(DepthMap {
            width,
            height,
            values,
        })
    }

    /// Build from rows of meters; each row must have the same length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, String> {
        let height = rows.len() as u32;
        let width = rows.first().map(|r| r.len()).unwrap_or(0) as u32;
        if rows.iter().any(|r| r.len() as u32 != width) {
            return Err("ragged depth map rows".into());
        }
        DepthMap::new(width, height, rows.concat())
    }

    /// A constant-depth map, handy for fixtures.
    pub fn constant(width: u32, height: u32, meters: f64) -> Self {
        DepthMap {
            width,
            height,
            values: vec![meters; (width as usize) * (height as usize)],
        }
    }

    /// Parse a binary PGM (`P5`) image; pixel values are millimeters and 0
    /// marks an invalid pixel. Both 8-bit and big-endian 16-bit payloads are
    /// accepted, matching how depth sidecars are written in practice.
    pub fn from_pgm(bytes: &[u8]) -> Result<Self, String> {
        let mut pos = 0usize;
        let token = |pos: &mut usize| -> Result<String, String> {
            // skip whitespace and `#` comments
            loop {
                while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
                    *pos += 1;
                }
                if *pos < bytes.len() && bytes[*pos] == b'#' {
                    while *pos < bytes.len() && bytes[*pos] != b'\n' {
                        *pos += 1;
                    }
                } else {
                    break;
                }
            }
            let start = *pos;
            while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
                *pos += 1;
            }
            if start == *pos {
                return Err("truncated PGM header".into());
            }
            Ok(String::from_utf8_lossy(&bytes[start..*pos]).into_owned())
        };

        if token(&mut pos)? != "P5" {
            return Err("not a binary PGM (missing P5 magic)".into());
        }
        let width: u32 = token(&mut pos)?.parse().map_err(|_| "bad PGM width")?;
        let height: u32 = token(&mut pos)?.parse().map_err(|_| "bad PGM height")?;
        let maxval: u32 = token(&mut pos)?.parse().map_err(|_| "bad PGM maxval")?;
        if maxval == 0 || maxval > 65535 {
            return Err(format!("unsupported PGM maxval {maxval}"));
        }
        // exactly one whitespace byte separates header and raster
        pos += 1;
        let pixels = (width as usize) * (height as usize);
        let wide = maxval > 255;
        let need = pixels * if wide { 2 } else { 1 };
        if bytes.len() < pos + need {
            return Err("truncated PGM raster".into());
        }
        let mut values = Vec::with_capacity(pixels);
        for i in 0..pixels {
            let mm = if wide {
                u16::from_be_bytes([bytes[pos + 2 * i], bytes[pos + 2 * i + 1]]) as f64
            } else {
                bytes[pos + i] as f64
            };
            values.push(if mm == 0.0 { f64::NAN } else { mm / 1000.0 });
        }
        DepthMap::new(width, height, values)
    }

    /// Encode as a 16-bit binary PGM, millimeters, 0 = invalid.
    pub fn to_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n65535\n", self.width, self.height).into_bytes();
        for &v in &self.values {
            let mm = if v.is_finite() && v > 0.0 {
                (v * 1000.0).round().clamp(1.0, 65535.0) as u16
            } else {
                0
            };
            out.extend_from_slice(&mm.to_be_bytes());
        }
        out
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    /// Raw value at pixel `(x, y)`; may be invalid.
    pub fn get(&self, x: u32, y: u32) -> f64 {
        self.values[(y as usize) * (self.width as usize) + (x as usize)]
    }
}

/// True for depth values usable in distance estimates.
pub fn depth_valid(v: f64) -> bool {
    v.is_finite() && v > 0.0
}

/// Named collection of depth maps an environment's object records refer to.
#[derive(Debug, Clone, Default)]
pub struct DepthRegistry {
    maps: HashMap<String, Arc<DepthMap>>,
}

impl DepthRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, map: DepthMap) {
        self.maps.insert(name.into(), Arc::new(map));
    }

    pub fn get(&self, name: &str) -> Option<&DepthMap> {
        self.maps.get(name).map(|m| m.as_ref())
    }

    pub fn contains(&self, name: &str) -> bool {
        self.maps.contains_key(name)
    }
}

// ---------------------------------------------------------------------------
// Boxes and masks
// ---------------------------------------------------------------------------

/// Pixel-aligned bounding box: `x0/y0` inclusive, `x1/y1` exclusive.
/// Sub-pixel boxes are rejected at load; fixtures use integers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BBox {
    pub x0: u32,
    pub y0: u32,
    pub x1: u32,
    pub y1: u32,
}

impl BBox {
    pub fn new(x0: u32, y0: u32, x1: u32, y1: u32) -> Result<Self, String> {
        if x0 >= x1 || y0 >= y1 {
            return Err(format!("degenerate bounding box [{x0},{y0},{x1},{y1}]"));
        }
        Ok(BBox { x0, y0, x1, y1 })
    }

    fn check_bounds(&self, depth: &DepthMap) -> Result<(), PerceptionError> {
        if self.x1 > depth.width() || self.y1 > depth.height() {
            return Err(PerceptionError::BBoxOutOfBounds {
                x0: self.x0,
                y0: self.y0,
                x1: self.x1,
                y1: self.y1,
                w: depth.width(),
                h: depth.height(),
            });
        }
        Ok(())
    }

    /// Center pixel under floor rounding.
    pub fn center(&self) -> (u32, u32) {
        ((self.x0 + self.x1) / 2, (self.y0 + self.y1) / 2)
    }
}

/// A binary segmentation mask, row-major, dimensions matching its depth map.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegMask {
    width: u32,
    height: u32,
    bits: Vec<bool>,
}

/// Wire form of a mask: run-length counts alternating zero-runs and one-runs,
/// starting with zeros, summing to `h * w`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RleMask {
    /// `[height, width]`.
    pub size: [u32; 2],
    pub rle: Vec<u64>,
}

impl SegMask {
    pub fn new(width: u32, height: u32, bits: Vec<bool>) -> Result<Self, String> {
        if bits.len() != (width as usize) * (height as usize) {
            return Err(format!(
                "mask {width}x{height} needs {} bits, got {}",
                (width as usize) * (height as usize),
                bits.len()
            ));
        }
        Ok(SegMask {
            width,
            height,
            bits,
        })
    }

    pub fn full(width: u32, height: u32) -> Self {
        SegMask {
            width,
            height,
            bits: vec![true; (width as usize) * (height as usize)],
        }
    }

    /// Mask with bits set only at the listed `(x, y)` pixels.
    pub fn from_pixels(width: u32, height: u32, pixels: &[(u32, u32)]) -> Self {
        let mut bits = vec![false; (width as usize) * (height as usize)];
        for &(x, y) in pixels {
            bits[(y as usize) * (width as usize) + (x as usize)] = true;
        }
        SegMask {
            width,
            height,
            bits,
        }
    }

    pub fn from_rle(rle: &RleMask) -> Result<Self, String> {
        let [height, width] = rle.size;
        let total: u64 = rle.rle.iter().sum();
        if total != (width as u64) * (height as u64) {
            return Err(format!(
                "mask run-lengths sum to {total}, expected {}",
                (width as u64) * (height as u64)
            ));
        }
        let mut bits = Vec::with_capacity(total as usize);
        let mut value = false; // runs start with zeros
        for &run in &rle.rle {
            bits.extend(std::iter::repeat_n(value, run as usize));
            value = !value;
        }
        SegMask::new(width, height, bits)
    }

    pub fn to_rle(&self) -> RleMask {
        let mut runs = Vec::new();
        let mut value = false;
        let mut count = 0u64;
        for &bit in &self.bits {
            if bit == value {
                count += 1;
            } else {
                runs.push(count);
                value = bit;
                count = 1;
            }
        }
        runs.push(count);
        RleMask {
            size: [self.height, self.width],
            rle: runs,
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn get(&self, x: u32, y: u32) -> bool {
        self.bits[(y as usize) * (self.width as usize) + (x as usize)]
    }
}

// ---------------------------------------------------------------------------
// Distance estimation
// ---------------------------------------------------------------------------

/// Mean depth over the pixels that are inside the bounding box, set in the
/// mask, and carry a valid depth reading.
pub fn object_distance_masked(
    depth: &DepthMap,
    bbox: &BBox,
    mask: &SegMask,
) -> Result<f64, PerceptionError> {
    if mask.width() != depth.width() || mask.height() != depth.height() {
        return Err(PerceptionError::DimensionMismatch {
            mask_w: mask.width(),
            mask_h: mask.height(),
            depth_w: depth.width(),
            depth_h: depth.height(),
        });
    }
    bbox.check_bounds(depth)?;
    let mut sum = 0.0;
    let mut n = 0u64;
    for y in bbox.y0..bbox.y1 {
        for x in bbox.x0..bbox.x1 {
            if mask.get(x, y) {
                let v = depth.get(x, y);
                if depth_valid(v) {
                    sum += v;
                    n += 1;
                }
            }
        }
    }
    if n == 0 {
        return Err(PerceptionError::NoValidPixels);
    }
    Ok(sum / n as f64)
}

/// Depth at the bounding-box center pixel. The segmentation-free variant:
/// cheaper, but the center of an irregular object can miss its pixels.
pub fn object_distance_center(depth: &DepthMap, bbox: &BBox) -> Result<f64, PerceptionError> {
    bbox.check_bounds(depth)?;
    let (x, y) = bbox.center();
    let v = depth.get(x, y);
    if !depth_valid(v) {
        return Err(PerceptionError::InvalidCenterDepth { x, y });
    }
    Ok(v)
}

// ---------------------------------------------------------------------------
// Cells and object records
// ---------------------------------------------------------------------------

/// How an object's distance is known: either resolved ahead of time, or from
/// raw detector/segmenter outputs paired with a depth map.
#[derive(Debug, Clone, PartialEq)]
pub enum DistanceSource {
    Precomputed(f64),
    Raw {
        bbox: BBox,
        mask: Option<SegMask>,
        depth_ref: String,
    },
}

/// One annotated object in a directional cell.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectRecord {
    pub label: String,
    pub source: DistanceSource,
    /// Mask-preferred distance resolved once at environment assembly, so
    /// consumers that only see the cell (the simulator VQA) still know it.
    resolved: Option<f64>,
}

impl ObjectRecord {
    pub fn precomputed(label: impl Into<String>, distance_m: f64) -> Self {
        ObjectRecord {
            label: label.into(),
            source: DistanceSource::Precomputed(distance_m),
            resolved: Some(distance_m),
        }
    }

    pub fn raw(
        label: impl Into<String>,
        bbox: BBox,
        mask: Option<SegMask>,
        depth_ref: impl Into<String>,
    ) -> Self {
        ObjectRecord {
            label: label.into(),
            source: DistanceSource::Raw {
                bbox,
                mask,
                depth_ref: depth_ref.into(),
            },
            resolved: None,
        }
    }

    /// Distance under the given options. `None` means estimation failed and
    /// the object should be dropped rather than guessed at.
    pub fn distance(&self, depths: &DepthRegistry, use_segmentation: bool) -> Option<f64> {
        match &self.source {
            DistanceSource::Precomputed(d) => Some(*d),
            DistanceSource::Raw {
                bbox,
                mask,
                depth_ref,
            } => {
                let depth = depths.get(depth_ref)?;
                match mask {
                    Some(mask) if use_segmentation => {
                        object_distance_masked(depth, bbox, mask).ok()
                    }
                    _ => object_distance_center(depth, bbox).ok(),
                }
            }
        }
    }

    /// Best available distance regardless of ablation flags. Prefers the
    /// masked estimate when a mask exists.
    pub fn ground_truth_distance(&self, depths: &DepthRegistry) -> Option<f64> {
        self.distance(depths, true)
    }

    /// Cache the ground-truth distance; called once per object when an
    /// environment is assembled.
    pub fn resolve(&mut self, depths: &DepthRegistry) {
        self.resolved = self.ground_truth_distance(depths);
    }

    /// The distance resolved at assembly time, if estimation succeeded.
    pub fn known_distance(&self) -> Option<f64> {
        self.resolved
    }
}

/// One of the 24 directional views captured at a viewpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionalCell {
    /// Absolute capture heading, one of `CAPTURE_HEADINGS`.
    pub heading_deg: u16,
    /// Capture ring, one of `CAPTURE_ELEVATIONS`.
    pub elevation_deg: i16,
    pub caption: String,
    pub objects: Vec<ObjectRecord>,
    /// Opaque image reference for live backends (file path or URL).
    pub image_ref: Option<String>,
}

impl DirectionalCell {
    pub fn new(heading_deg: u16, elevation_deg: i16, caption: impl Into<String>) -> Self {
        DirectionalCell {
            heading_deg,
            elevation_deg,
            caption: caption.into(),
            objects: Vec::new(),
            image_ref: None,
        }
    }
}

// ---------------------------------------------------------------------------
// Snapshot assembly
// ---------------------------------------------------------------------------

/// Ablation switches for observation building.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PerceptionOptions {
    /// `false` reproduces the "center point only" distance estimate.
    pub use_segmentation: bool,
    /// `false` drops all distance annotations from observations.
    pub include_distances: bool,
}

impl Default for PerceptionOptions {
    fn default() -> Self {
        PerceptionOptions {
            use_segmentation: true,
            include_distances: true,
        }
    }
}

/// The eight agent-relative sector names, in menu order.
pub const SECTOR_NAMES: [&str; 8] = [
    "front",
    "front-right",
    "right",
    "rear-right",
    "rear",
    "rear-left",
    "left",
    "front-left",
];

/// An object annotation attached to a snapshot sector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectorObject {
    pub sector: usize,
    pub label: String,
    pub distance_m: f64,
}

/// The textual observation for one step: eight consolidated sector
/// descriptions plus the nearby-object annotations that survived the
/// 3-meter filter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    /// Indexed by sector 0..8, sector 0 facing the agent's heading.
    pub descriptions: Vec<String>,
    pub annotations: Vec<SectorObject>,
    /// Capture heading of sector 0, so candidates can be mapped to sectors.
    pub anchor_heading_deg: u16,
}

impl Snapshot {
    /// Sector index covering an absolute heading, given this snapshot's
    /// anchor. Inverse of the anchoring done in [`build_snapshot`].
    pub fn sector_of_heading(&self, heading_deg: f64) -> usize {
        let rel = heading_deg - self.anchor_heading_deg as f64;
        crate::navgraph::heading_sector(rel).0
    }

    /// Sector index of a capture-grid heading (a multiple of 45 degrees).
    pub fn sector_of_capture_heading(&self, heading_deg: u16) -> usize {
        ((heading_deg as usize + 360 - self.anchor_heading_deg as usize) % 360) / 45
    }

    /// Render for a prompt: one line per sector, annotations folded into
    /// their sector line at one-decimal precision.
    pub fn render(&self) -> String {
        let mut lines = Vec::with_capacity(8);
        for (i, name) in SECTOR_NAMES.iter().enumerate() {
            let desc = if self.descriptions[i].is_empty() {
                "(no description)"
            } else {
                &self.descriptions[i]
            };
            let mut line = format!("{name}: {desc}");
            let nearby: Vec<String> = self
                .annotations
                .iter()
                .filter(|a| a.sector == i)
                .map(|a| format!("{} ({:.1} m)", a.label, a.distance_m))
                .collect();
            if !nearby.is_empty() {
                line.push_str(&format!(" Nearby: {}.", nearby.join(", ")));
            }
            lines.push(line);
        }
        lines.join("\n")
    }
}

/// Merge the three vertical captions for one heading into a single
/// direction description.
///
/// With a chat slot the merge is delegated to the model; without one the
/// deterministic fallback concatenates the distinct non-empty captions as
/// `up: ...; ahead: ...; down: ...`, collapsing to the bare caption when only
/// one distinct caption remains.
pub fn consolidate_vertical(
    up: &DirectionalCell,
    ahead: &DirectionalCell,
    down: &DirectionalCell,
    chat: Option<(&ChatSlot<'_>, &FixtureKey)>,
) -> Result<String, PerceptionError> {
    if let Some((slot, key)) = chat {
        let messages = [
            ChatMessage::system(
                "Merge the three captions of one viewing direction (looking up, straight \
                 ahead, and down) into a single short paragraph. Mention each distinct \
                 element once. Reply with the paragraph only.",
            ),
            ChatMessage::user(format!(
                "up: {}\nahead: {}\ndown: {}",
                up.caption, ahead.caption, down.caption
            )),
        ];
        let text = slot.chat(key, &messages)?;
        return Ok(text.trim().to_string());
    }
    let mut kept: Vec<(&str, &str)> = Vec::new();
    for (slot_name, caption) in [
        ("up", up.caption.as_str()),
        ("ahead", ahead.caption.as_str()),
        ("down", down.caption.as_str()),
    ] {
        if caption.is_empty() || kept.iter().any(|(_, c)| *c == caption) {
            continue;
        }
        kept.push((slot_name, caption));
    }
    Ok(match kept.as_slice() {
        [] => String::new(),
        [(_, only)] => (*only).to_string(),
        many => many
            .iter()
            .map(|(slot_name, c)| format!("{slot_name}: {c}"))
            .collect::<Vec<_>>()
            .join("; "),
    })
}

/// Context handed to [`build_snapshot`]: where depth maps live and which
/// optional model slots may be consulted.
pub struct SnapshotContext<'a> {
    pub depths: &'a DepthRegistry,
    pub consolidate: Option<ChatSlot<'a>>,
    pub episode: &'a str,
    pub step: usize,
}

impl<'a> SnapshotContext<'a> {
    /// Fully offline context: fallback consolidation, no captioner.
    pub fn offline(depths: &'a DepthRegistry) -> Self {
        SnapshotContext {
            depths,
            consolidate: None,
            episode: "",
            step: 0,
        }
    }
}

/// Build the textual observation from a viewpoint's 24 cells.
///
/// Sector 0 faces the capture heading nearest the pose heading; sectors then
/// proceed clockwise. Objects keep their annotation only when a distance
/// could be estimated and it is within the 3-meter filter.
pub fn build_snapshot(
    cells: &[DirectionalCell],
    pose: &Pose,
    opts: &PerceptionOptions,
    ctx: &SnapshotContext<'_>,
) -> Result<Snapshot, PerceptionError> {
    let mut grid: HashMap<(u16, i16), &DirectionalCell> = HashMap::new();
    for cell in cells {
        grid.insert((cell.heading_deg, cell.elevation_deg), cell);
    }
    if cells.len() != 24 || grid.len() != 24 {
        return Err(PerceptionError::GridIncomplete {
            got: cells.len(),
            detail: if grid.len() != cells.len() {
                " (duplicate directions)".into()
            } else {
                String::new()
            },
        });
    }
    for h in CAPTURE_HEADINGS {
        for e in CAPTURE_ELEVATIONS {
            if !grid.contains_key(&(h, e)) {
                return Err(PerceptionError::GridIncomplete {
                    got: cells.len(),
                    detail: format!(" (missing heading {h} elevation {e})"),
                });
            }
        }
    }

    let anchor_idx = crate::navgraph::heading_sector(pose.heading).0;
    let anchor_heading = CAPTURE_HEADINGS[anchor_idx];

    let mut descriptions = Vec::with_capacity(8);
    let mut annotations = Vec::new();
    for sector in 0..8 {
        let heading = CAPTURE_HEADINGS[(anchor_idx + sector) % 8];
        let up = grid[&(heading, 30)];
        let ahead = grid[&(heading, 0)];
        let down = grid[&(heading, -30)];
        let chat = ctx.consolidate.as_ref().map(|slot| {
            (
                slot,
                FixtureKey::new(ctx.episode, ctx.step, Phase::Consolidate).with_sub(sector),
            )
        });
        let desc = match &chat {
            Some((slot, key)) => consolidate_vertical(up, ahead, down, Some((slot, key)))?,
            None => consolidate_vertical(up, ahead, down, None)?,
        };
        descriptions.push(desc);

        if opts.include_distances {
            for cell in [up, ahead, down] {
                for object in &cell.objects {
                    if let Some(d) = object.distance(ctx.depths, opts.use_segmentation) {
                        if d <= DISTANCE_FILTER_M {
                            annotations.push(SectorObject {
                                sector,
                                label: object.label.clone(),
                                distance_m: d,
                            });
                        }
                    }
                }
            }
        }
    }

    Ok(Snapshot {
        descriptions,
        annotations,
        anchor_heading_deg: anchor_heading,
    })
}
