//! Per-video feature extraction for every experiment mode, with an optional
//! on-disk cache.
//!
//! Two blocks are computed per video, the 50 D-marker values and the 60 flow
//! values; every mode is a selection or concatenation of them. Cached blocks
//! are keyed by a hash of the video identity, its landmark file contents and
//! the parameters the block depends on, so changing any of them recomputes.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::data::{FeatureVector, Layout, VideoRecord};
use crate::dmarker::{dmarker_features, DmarkerConfig};
use crate::error::{Error, Result};
use crate::flowfeat::{video_flow_descriptor, ComponentSelect, FlowFeatureConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FeatureMode {
    #[serde(rename = "eyes")]
    Eyes,
    #[serde(rename = "lips")]
    Lips,
    #[serde(rename = "eyes+lips")]
    EyesLips,
    #[serde(rename = "flow_x")]
    FlowX,
    #[serde(rename = "flow_y")]
    FlowY,
    #[serde(rename = "flow_xy")]
    FlowXY,
    #[serde(rename = "fused")]
    Fused,
}

impl FeatureMode {
    pub const ALL: [FeatureMode; 7] = [
        FeatureMode::Eyes,
        FeatureMode::Lips,
        FeatureMode::EyesLips,
        FeatureMode::FlowX,
        FeatureMode::FlowY,
        FeatureMode::FlowXY,
        FeatureMode::Fused,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FeatureMode::Eyes => "eyes",
            FeatureMode::Lips => "lips",
            FeatureMode::EyesLips => "eyes+lips",
            FeatureMode::FlowX => "flow_x",
            FeatureMode::FlowY => "flow_y",
            FeatureMode::FlowXY => "flow_xy",
            FeatureMode::Fused => "fused",
        }
    }

    pub fn layout(self) -> Layout {
        match self {
            FeatureMode::Eyes => Layout::DmarkerEye25,
            FeatureMode::Lips => Layout::DmarkerLip25,
            FeatureMode::EyesLips => Layout::Dmarker50,
            FeatureMode::FlowX => Layout::FlowX30,
            FeatureMode::FlowY => Layout::FlowY30,
            FeatureMode::FlowXY => Layout::Flow60,
            FeatureMode::Fused => Layout::Fused110,
        }
    }

    pub fn needs_dmarker(self) -> bool {
        matches!(
            self,
            FeatureMode::Eyes | FeatureMode::Lips | FeatureMode::EyesLips | FeatureMode::Fused
        )
    }

    pub fn needs_flow(self) -> bool {
        matches!(
            self,
            FeatureMode::FlowX | FeatureMode::FlowY | FeatureMode::FlowXY | FeatureMode::Fused
        )
    }

    /// Human-readable name used in report titles.
    pub fn title(self) -> &'static str {
        match self {
            FeatureMode::Eyes => "Eyes (D-markers)",
            FeatureMode::Lips => "Lips (D-markers)",
            FeatureMode::EyesLips => "Eyes + lips (D-markers)",
            FeatureMode::FlowX => "Dense optical flow, X",
            FeatureMode::FlowY => "Dense optical flow, Y",
            FeatureMode::FlowXY => "Dense optical flow, X + Y",
            FeatureMode::Fused => "Fused: eyes + lips + dense optical flow",
        }
    }
}

impl fmt::Display for FeatureMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FeatureMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FeatureMode::ALL
            .into_iter()
            .find(|m| m.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| {
                Error::InvalidParameter(format!(
                    "unknown feature mode `{s}` (expected eyes, lips, eyes+lips, flow_x, flow_y, flow_xy or fused)"
                ))
            })
    }
}

/// Concatenation of a D-marker and a flow block, D-markers first.
pub fn fuse(a: &FeatureVector, b: &FeatureVector) -> Result<FeatureVector> {
    for (v, want) in [(a, Layout::Dmarker50), (b, Layout::Flow60)] {
        if v.layout() != want {
            return Err(Error::LayoutMismatch {
                expected: want,
                found: v.layout(),
            });
        }
    }
    let mut values = a.values().to_vec();
    values.extend_from_slice(b.values());
    FeatureVector::new(Layout::Fused110, values)
}

/// Builds the vector of `mode` from the blocks it needs.
pub fn assemble(
    mode: FeatureMode,
    dmarker: Option<&FeatureVector>,
    flow: Option<&FeatureVector>,
) -> Result<FeatureVector> {
    let need = |v: Option<&FeatureVector>, layout: Layout| -> Result<FeatureVector> {
        let v = v.ok_or_else(|| Error::InvalidParameter(format!("{mode} needs the {layout} block")))?;
        if v.layout() != layout {
            return Err(Error::LayoutMismatch {
                expected: layout,
                found: v.layout(),
            });
        }
        Ok(v.clone())
    };
    match mode {
        FeatureMode::Eyes => FeatureVector::new(
            Layout::DmarkerEye25,
            need(dmarker, Layout::Dmarker50)?.values()[..25].to_vec(),
        ),
        FeatureMode::Lips => FeatureVector::new(
            Layout::DmarkerLip25,
            need(dmarker, Layout::Dmarker50)?.values()[25..].to_vec(),
        ),
        FeatureMode::EyesLips => need(dmarker, Layout::Dmarker50),
        FeatureMode::FlowX => ComponentSelect::X.apply(&need(flow, Layout::Flow60)?),
        FeatureMode::FlowY => ComponentSelect::Y.apply(&need(flow, Layout::Flow60)?),
        FeatureMode::FlowXY => need(flow, Layout::Flow60),
        FeatureMode::Fused => fuse(&need(dmarker, Layout::Dmarker50)?, &need(flow, Layout::Flow60)?),
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ExtractConfig {
    pub dmarker: DmarkerConfig,
    pub flow: FlowFeatureConfig,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Block {
    Dmarker,
    Flow,
}

impl Block {
    fn name(self) -> &'static str {
        match self {
            Block::Dmarker => "dmarker",
            Block::Flow => "flow",
        }
    }
}

/// Directory of cached feature blocks, one small CSV per video and block.
#[derive(Clone, Debug)]
pub struct FeatureCache {
    dir: PathBuf,
}

impl FeatureCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        FeatureCache { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn key(&self, video: &VideoRecord, block: Block, config: &ExtractConfig) -> Result<String> {
        let landmarks = fs::read(&video.landmarks_path).map_err(|e| Error::io(&video.landmarks_path, e))?;
        let params = match block {
            Block::Dmarker => serde_json::to_string(&config.dmarker),
            Block::Flow => serde_json::to_string(&config.flow),
        }
        .expect("config serializes");
        let mut h = Sha256::new();
        for part in [
            block.name().as_bytes(),
            video.video_id.as_bytes(),
            video.frames_dir.to_string_lossy().as_bytes(),
            video.fps.to_bits().to_le_bytes().as_slice(),
            params.as_bytes(),
            &landmarks,
        ] {
            h.update((part.len() as u64).to_le_bytes());
            h.update(part);
        }
        Ok(hex::encode(&h.finalize()[..12]))
    }

    fn path(&self, video: &VideoRecord, block: Block, key: &str) -> PathBuf {
        let safe: String = video
            .video_id
            .chars()
            .map(|c| {
                if c.is_ascii_alphanumeric() || "-_.".contains(c) {
                    c
                } else {
                    '_'
                }
            })
            .collect();
        self.dir.join(format!("{safe}.{}.{key}.csv", block.name()))
    }

    fn get(&self, path: &Path, layout: Layout) -> Option<FeatureVector> {
        let text = fs::read_to_string(path).ok()?;
        let values = text
            .trim_end()
            .split(',')
            .map(|t| t.parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .ok()?;
        FeatureVector::new(layout, values).ok()
    }

    fn put(&self, path: &Path, v: &FeatureVector) -> Result<()> {
        fs::create_dir_all(&self.dir).map_err(|e| Error::io(&self.dir, e))?;
        // shortest round-trip formatting keeps cached values bit-exact
        let line = v.values().iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        let tmp = path.with_extension("tmp");
        fs::write(&tmp, line + "\n").map_err(|e| Error::io(&tmp, e))?;
        fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
    }
}

fn compute_block(video: &VideoRecord, block: Block, config: &ExtractConfig) -> Result<FeatureVector> {
    match block {
        Block::Dmarker => dmarker_features(video, &config.dmarker),
        Block::Flow => video_flow_descriptor(video, ComponentSelect::XY, &config.flow),
    }
    .map_err(|e| e.in_video(&video.video_id, block.name()))
}

fn block(
    video: &VideoRecord,
    block: Block,
    config: &ExtractConfig,
    cache: Option<&FeatureCache>,
) -> Result<FeatureVector> {
    let layout = match block {
        Block::Dmarker => Layout::Dmarker50,
        Block::Flow => Layout::Flow60,
    };
    let Some(cache) = cache else {
        return compute_block(video, block, config);
    };
    let key = cache
        .key(video, block, config)
        .map_err(|e| e.in_video(&video.video_id, "cache"))?;
    let path = cache.path(video, block, &key);
    if let Some(v) = cache.get(&path, layout) {
        return Ok(v);
    }
    let v = compute_block(video, block, config)?;
    cache.put(&path, &v).map_err(|e| e.in_video(&video.video_id, "cache"))?;
    Ok(v)
}

/// Feature vector of one video for `mode`.
pub fn extract(
    video: &VideoRecord,
    mode: FeatureMode,
    config: &ExtractConfig,
    cache: Option<&FeatureCache>,
) -> Result<FeatureVector> {
    if !video.frames_dir.is_dir() && mode.needs_flow() {
        return Err(Error::io(
            &video.frames_dir,
            std::io::Error::new(std::io::ErrorKind::NotFound, "frames directory not found"),
        )
        .in_video(&video.video_id, "load"));
    }
    let d = mode
        .needs_dmarker()
        .then(|| block(video, Block::Dmarker, config, cache))
        .transpose()?;
    let f = mode
        .needs_flow()
        .then(|| block(video, Block::Flow, config, cache))
        .transpose()?;
    assemble(mode, d.as_ref(), f.as_ref()).map_err(|e| e.in_video(&video.video_id, "assemble"))
}

/// Extracts every video, in manifest order, on at most `jobs` worker threads
/// (0 uses the default pool).
pub fn extract_all(
    videos: &[VideoRecord],
    mode: FeatureMode,
    config: &ExtractConfig,
    cache: Option<&FeatureCache>,
    jobs: usize,
) -> Result<Vec<FeatureVector>> {
    let run = || videos.par_iter().map(|v| extract(v, mode, config, cache)).collect();
    if jobs == 0 {
        return run();
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("cannot start {jobs} workers: {e}")))?
        .install(run)
}
