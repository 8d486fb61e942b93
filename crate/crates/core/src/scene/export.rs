use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::render::RenderedScene;
use super::SceneSpec;
use crate::error::Result;
use crate::geom::DepthMap;
use crate::raster::BBox;

/// JSON scene document: the generating spec plus per-object render summaries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneFile {
    pub scene: SceneSpec,
    pub objects: Vec<ObjectSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectSummary {
    pub id: u32,
    pub bbox: Option<BBox>,
    pub mask_pixels: usize,
    /// `[start, length]` runs over the row-major pixel index.
    pub mask_runs: Vec<[u32; 2]>,
}

impl SceneFile {
    pub fn new(scene: &SceneSpec, rendered: &RenderedScene) -> Self {
        Self {
            scene: scene.clone(),
            objects: rendered
                .objects
                .iter()
                .map(|o| ObjectSummary {
                    id: o.id,
                    bbox: o.bbox,
                    mask_pixels: o.mask.count(),
                    mask_runs: o.mask.to_runs(),
                })
                .collect(),
        }
    }
}

/// Binary 16-bit PGM of depth in millimeters (big-endian, 0 = invalid).
pub fn write_depth_pgm(path: &Path, depth: &DepthMap) -> Result<()> {
    let mut out = Vec::with_capacity(depth.values.len() * 2 + 32);
    write!(out, "P5\n{} {}\n65535\n", depth.width, depth.height)?;
    for z in &depth.values {
        let mm = (z * 1000.0).round().clamp(0.0, 65535.0) as u16;
        out.extend_from_slice(&mm.to_be_bytes());
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Binary 8-bit PGM of palette labels.
pub fn write_color_pgm(path: &Path, width: u32, height: u32, labels: &[u8]) -> Result<()> {
    let mut out = Vec::with_capacity(labels.len() + 32);
    write!(out, "P5\n{width} {height}\n255\n")?;
    out.extend_from_slice(labels);
    std::fs::write(path, out)?;
    Ok(())
}
