//! Shared value types and the on-disk formats every stage reads and writes.
//!
//! Landmarks follow a fixed 21-point, 1-based labeling (see [`points`]). Image
//! coordinates are raster coordinates: `x` grows to the right, `y` grows
//! downwards, so a point "below" another has the larger `y`.

mod frames;
mod landmarks;
mod manifest;
mod numfmt;

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use frames::{frame_path, load_frame, load_frames, save_frame};
pub use landmarks::{load_landmarks, save_landmarks, write_landmarks};
pub use manifest::{load_manifest, write_manifest};
pub use numfmt::format_sig9;

pub const NUM_POINTS: usize = 21;

/// Indices into the 21-point layout. The `LEFT_*` points are the ones on the
/// left side of the image.
pub mod points {
    pub const LEFT_EYE_OUTER: usize = 1;
    pub const LEFT_UPPER_LID: usize = 2;
    pub const LEFT_EYE_INNER: usize = 3;
    pub const RIGHT_EYE_INNER: usize = 4;
    pub const RIGHT_UPPER_LID: usize = 5;
    pub const RIGHT_EYE_OUTER: usize = 6;
    pub const LEFT_NOSTRIL: usize = 7;
    pub const RIGHT_NOSTRIL: usize = 8;
    pub const NOSE_TIP: usize = 9;
    pub const LEFT_LIP_CORNER: usize = 10;
    pub const RIGHT_LIP_CORNER: usize = 11;
    pub const UPPER_LIP: usize = 12;
    pub const LOWER_LIP: usize = 13;
    pub const LEFT_BROW_INNER: usize = 14;
    pub const LEFT_BROW_MID: usize = 15;
    pub const LEFT_BROW_OUTER: usize = 16;
    pub const RIGHT_BROW_INNER: usize = 17;
    pub const RIGHT_BROW_MID: usize = 18;
    pub const RIGHT_BROW_OUTER: usize = 19;
    pub const LEFT_CHEEK: usize = 20;
    pub const RIGHT_CHEEK: usize = 21;
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Landmark {
    pub x: f64,
    pub y: f64,
    /// Depth, when the tracker provides it.
    pub z: Option<f64>,
}

impl Landmark {
    pub fn planar(x: f64, y: f64) -> Self {
        Landmark { x, y, z: None }
    }

    pub fn spatial(x: f64, y: f64, z: f64) -> Self {
        Landmark { x, y, z: Some(z) }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_none_or(f64::is_finite)
    }

    /// Position as a 3-vector; planar points sit at `z = 0`.
    pub fn to_vector(&self) -> Vector3<f64> {
        Vector3::new(self.x, self.y, self.z.unwrap_or(0.0))
    }
}

/// Anything that can hand out the 21 labeled positions of one frame.
pub trait FacePoints {
    /// Position of point `index` (1-based).
    fn position(&self, index: usize) -> Vector3<f64>;
}

/// Whether a landmark track carries depth.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Dimensionality {
    Planar,
    Spatial,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LandmarkFrame {
    frame_index: u32,
    points: [Landmark; NUM_POINTS],
}

impl LandmarkFrame {
    /// Builds a frame from exactly 21 points ordered by label (point 1 first).
    pub fn new(frame_index: u32, points: Vec<Landmark>) -> Result<Self> {
        let points: [Landmark; NUM_POINTS] = points.try_into().map_err(|p: Vec<Landmark>| {
            Error::InvalidLandmarks(format!(
                "frame {frame_index}: expected {NUM_POINTS} points, found {}",
                p.len()
            ))
        })?;
        if let Some(i) = points.iter().position(|p| !p.is_finite()) {
            return Err(Error::InvalidLandmarks(format!(
                "frame {frame_index}: point {} is not finite",
                i + 1
            )));
        }
        let depth = points[0].z.is_some();
        if points.iter().any(|p| p.z.is_some() != depth) {
            return Err(Error::InvalidLandmarks(format!(
                "frame {frame_index}: mixed 2D and 3D points"
            )));
        }
        let frame = LandmarkFrame { frame_index, points };
        for (a, b) in [
            (points::LEFT_EYE_OUTER, points::LEFT_EYE_INNER),
            (points::RIGHT_EYE_INNER, points::RIGHT_EYE_OUTER),
        ] {
            if frame.point(a).to_vector() == frame.point(b).to_vector() {
                return Err(Error::InvalidLandmarks(format!(
                    "frame {frame_index}: eye corners {a} and {b} coincide"
                )));
            }
        }
        Ok(frame)
    }

    pub fn frame_index(&self) -> u32 {
        self.frame_index
    }

    /// Point `index`, 1-based.
    pub fn point(&self, index: usize) -> &Landmark {
        &self.points[index - 1]
    }

    pub fn points(&self) -> &[Landmark; NUM_POINTS] {
        &self.points
    }

    pub fn dimensionality(&self) -> Dimensionality {
        if self.points[0].z.is_some() {
            Dimensionality::Spatial
        } else {
            Dimensionality::Planar
        }
    }

    /// Applies `f` to every point, re-validating the result.
    pub fn map_points(&self, f: impl Fn(&Landmark) -> Landmark) -> Result<Self> {
        LandmarkFrame::new(self.frame_index, self.points.iter().map(f).collect())
    }
}

impl FacePoints for LandmarkFrame {
    fn position(&self, index: usize) -> Vector3<f64> {
        self.point(index).to_vector()
    }
}

/// All tracked frames of one video.
#[derive(Clone, Debug, PartialEq)]
pub struct LandmarkTrack {
    pub frames: Vec<LandmarkFrame>,
    pub dimensionality: Dimensionality,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Spontaneous,
    Posed,
}

impl Label {
    pub const ALL: [Label; 2] = [Label::Spontaneous, Label::Posed];

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Spontaneous => "spontaneous",
            Label::Posed => "posed",
        }
    }

    /// Class encoding used by the classifier: spontaneous is `+1`.
    pub fn sign(self) -> f64 {
        match self {
            Label::Spontaneous => 1.0,
            Label::Posed => -1.0,
        }
    }

    pub fn flipped(self) -> Label {
        match self {
            Label::Spontaneous => Label::Posed,
            Label::Posed => Label::Spontaneous,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "spontaneous" => Ok(Label::Spontaneous),
            "posed" => Ok(Label::Posed),
            other => Err(format!("unknown label `{other}`")),
        }
    }
}

pub const DEFAULT_FPS: f64 = 50.0;

/// One row of the dataset manifest.
#[derive(Clone, Debug, PartialEq)]
pub struct VideoRecord {
    pub video_id: String,
    pub frames_dir: PathBuf,
    pub landmarks_path: PathBuf,
    /// Absent for unlabeled videos that are only run through prediction.
    pub label: Option<Label>,
    pub fps: f64,
}

/// Axis-aligned pixel rectangle, `x`/`y` being the top-left corner.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rect {
    pub x: usize,
    pub y: usize,
    pub width: usize,
    pub height: usize,
}

impl Rect {
    pub fn area(&self) -> usize {
        self.width * self.height
    }

    pub fn right(&self) -> usize {
        self.x + self.width
    }

    pub fn bottom(&self) -> usize {
        self.y + self.height
    }
}

/// Grayscale image with row-major intensities in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<f64>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self> {
        if width * height != pixels.len() {
            return Err(Error::DimensionMismatch {
                expected: format!("{width}x{height} = {} pixels", width * height),
                found: format!("{} pixels", pixels.len()),
            });
        }
        if let Some(p) = pixels.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::InvalidParameter(format!("pixel intensity {p} outside [0, 1]")));
        }
        Ok(GrayImage { width, height, pixels })
    }

    /// Builds an image from `f(x, y)`, clamping each value into `[0, 1]`.
    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                let v = f(x, y);
                pixels.push(if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) });
            }
        }
        GrayImage { width, height, pixels }
    }

    pub fn constant(width: usize, height: usize, value: f64) -> Self {
        GrayImage::from_fn(width, height, |_, _| value)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.pixels[y * self.width + x]
    }

    pub fn crop(&self, rect: Rect) -> Result<GrayImage> {
        if rect.width == 0 || rect.height == 0 || rect.right() > self.width || rect.bottom() > self.height {
            return Err(Error::InvalidParameter(format!(
                "crop {rect:?} outside {}x{} image",
                self.width, self.height
            )));
        }
        let mut pixels = Vec::with_capacity(rect.area());
        for y in rect.y..rect.bottom() {
            pixels.extend_from_slice(&self.pixels[y * self.width + rect.x..y * self.width + rect.right()]);
        }
        Ok(GrayImage {
            width: rect.width,
            height: rect.height,
            pixels,
        })
    }
}

/// Declared arrangement of a feature vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Layout {
    #[serde(rename = "dmarker-eye-25")]
    DmarkerEye25,
    #[serde(rename = "dmarker-lip-25")]
    DmarkerLip25,
    #[serde(rename = "dmarker-50")]
    Dmarker50,
    #[serde(rename = "flow-x-30")]
    FlowX30,
    #[serde(rename = "flow-y-30")]
    FlowY30,
    #[serde(rename = "flow-60")]
    Flow60,
    #[serde(rename = "fused-110")]
    Fused110,
}

impl Layout {
    #[allow(clippy::len_without_is_empty)]
    pub fn len(self) -> usize {
        match self {
            Layout::DmarkerEye25 | Layout::DmarkerLip25 => 25,
            Layout::Dmarker50 => 50,
            Layout::FlowX30 | Layout::FlowY30 => 30,
            Layout::Flow60 => 60,
            Layout::Fused110 => 110,
        }
    }

    pub fn id(self) -> &'static str {
        match self {
            Layout::DmarkerEye25 => "dmarker-eye-25",
            Layout::DmarkerLip25 => "dmarker-lip-25",
            Layout::Dmarker50 => "dmarker-50",
            Layout::FlowX30 => "flow-x-30",
            Layout::FlowY30 => "flow-y-30",
            Layout::Flow60 => "flow-60",
            Layout::Fused110 => "fused-110",
        }
    }
}

impl fmt::Display for Layout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    layout: Layout,
    values: Vec<f64>,
}

impl FeatureVector {
    pub fn new(layout: Layout, values: Vec<f64>) -> Result<Self> {
        if values.len() != layout.len() {
            return Err(Error::DimensionMismatch {
                expected: format!("{} values for {layout}", layout.len()),
                found: format!("{} values", values.len()),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "{layout} feature vector contains non-finite values"
            )));
        }
        Ok(FeatureVector { layout, values })
    }

    pub fn zeros(layout: Layout) -> Self {
        FeatureVector {
            layout,
            values: vec![0.0; layout.len()],
        }
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frame_points() -> Vec<Landmark> {
        (0..NUM_POINTS)
            .map(|i| Landmark::planar(i as f64, (i * 2) as f64))
            .collect()
    }

    #[test]
    fn frame_requires_21_points() {
        let mut pts = frame_points();
        pts.pop();
        assert!(LandmarkFrame::new(0, pts).is_err());
        assert!(LandmarkFrame::new(0, frame_points()).is_ok());
    }

    #[test]
    fn frame_rejects_coincident_eye_corners() {
        let mut pts = frame_points();
        pts[2] = pts[0];
        assert!(matches!(LandmarkFrame::new(3, pts), Err(Error::InvalidLandmarks(_))));
    }

    #[test]
    fn frame_rejects_mixed_dimensionality() {
        let mut pts = frame_points();
        pts[5].z = Some(1.0);
        assert!(LandmarkFrame::new(0, pts).is_err());
    }

    #[test]
    fn labels_parse_case_insensitively() {
        assert_eq!("Posed".parse::<Label>(), Ok(Label::Posed));
        assert_eq!(" spontaneous".parse::<Label>(), Ok(Label::Spontaneous));
        assert!("smirk".parse::<Label>().is_err());
    }

    #[test]
    fn feature_vector_checks_layout_length() {
        assert!(FeatureVector::new(Layout::Flow60, vec![0.0; 59]).is_err());
        assert!(FeatureVector::new(Layout::Dmarker50, vec![f64::NAN; 50]).is_err());
        assert_eq!(FeatureVector::zeros(Layout::Fused110).values().len(), 110);
    }

    #[test]
    fn image_rejects_out_of_range_pixels() {
        assert!(GrayImage::new(2, 1, vec![0.0, 1.5]).is_err());
        assert!(GrayImage::new(2, 2, vec![0.0; 3]).is_err());
    }

    #[test]
    fn crop_copies_the_window() {
        let img = GrayImage::from_fn(4, 3, |x, y| (x + 4 * y) as f64 / 11.0);
        let c = img
            .crop(Rect {
                x: 1,
                y: 1,
                width: 2,
                height: 2,
            })
            .unwrap();
        assert_eq!(c.get(0, 0), img.get(1, 1));
        assert_eq!(c.get(1, 1), img.get(2, 2));
    }
}
