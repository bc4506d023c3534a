//! Flow descriptors of the eye and mouth regions.
//!
//! For every pair of consecutive frames, flow is computed inside three ROIs
//! (left eye, right eye, mouth). Each flow component of each ROI is reduced
//! to ten numbers: its median, then for the three most populated histogram
//! bins the bin center and a least-squares line through the normalized pixel
//! positions falling in that bin. That gives `3 ROIs × 2 components × 10 = 60`
//! values per frame pair, averaged over the video.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{
    load_frame, load_landmarks, points, FeatureVector, GrayImage, LandmarkFrame, Layout, Rect, VideoRecord,
};
use crate::error::{Error, Result};
use crate::optflow::{compute_flow, FlowParams};

pub const HIST_BINS: usize = 10;
pub const COMPONENT_LEN: usize = 10;
pub const DEFAULT_MARGIN: f64 = 0.5;

/// Variance of `x` below which a bin's point set counts as vertical.
pub const DEGENERATE_VARIANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoiSet {
    pub left_eye: Rect,
    pub right_eye: Rect,
    pub mouth: Rect,
}

impl RoiSet {
    pub fn as_array(&self) -> [Rect; 3] {
        [self.left_eye, self.right_eye, self.mouth]
    }
}

fn roi_around(frame: &LandmarkFrame, idx: &[usize], dims: (usize, usize), margin: f64) -> Result<Rect> {
    let xs = idx.iter().map(|&i| frame.point(i).x);
    let ys = idx.iter().map(|&i| frame.point(i).y);
    let (x0, x1) = (
        xs.clone().fold(f64::INFINITY, f64::min),
        xs.fold(f64::NEG_INFINITY, f64::max),
    );
    let (y0, y1) = (
        ys.clone().fold(f64::INFINITY, f64::min),
        ys.fold(f64::NEG_INFINITY, f64::max),
    );
    let m = margin * (x1 - x0).hypot(y1 - y0);
    // pixel `k` covers [k, k + 1); the box keeps every pixel it touches
    let left = (x0 - m).floor().max(0.0);
    let top = (y0 - m).floor().max(0.0);
    let right = ((x1 + m).floor() + 1.0).min(dims.0 as f64);
    let bottom = ((y1 + m).floor() + 1.0).min(dims.1 as f64);
    if !(right > left && bottom > top) {
        return Err(Error::Degenerate(format!(
            "ROI around landmarks {idx:?} is empty after clipping to {}x{}",
            dims.0, dims.1
        )));
    }
    Ok(Rect {
        x: left as usize,
        y: top as usize,
        width: (right - left) as usize,
        height: (bottom - top) as usize,
    })
}

/// Eye ROIs bound landmarks 1-3 and 4-6, the mouth ROI bounds the lip
/// corners; each is grown by `margin_factor` times its diagonal on every side
/// and clipped to the image.
pub fn rois_from_landmarks(frame: &LandmarkFrame, image_dims: (usize, usize), margin_factor: f64) -> Result<RoiSet> {
    if !(margin_factor >= 0.0 && margin_factor.is_finite()) {
        return Err(Error::InvalidParameter(format!("margin factor {margin_factor}")));
    }
    Ok(RoiSet {
        left_eye: roi_around(
            frame,
            &[points::LEFT_EYE_OUTER, points::LEFT_UPPER_LID, points::LEFT_EYE_INNER],
            image_dims,
            margin_factor,
        )?,
        right_eye: roi_around(
            frame,
            &[
                points::RIGHT_EYE_INNER,
                points::RIGHT_UPPER_LID,
                points::RIGHT_EYE_OUTER,
            ],
            image_dims,
            margin_factor,
        )?,
        mouth: roi_around(
            frame,
            &[points::LEFT_LIP_CORNER, points::RIGHT_LIP_CORNER],
            image_dims,
            margin_factor,
        )?,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Histogram {
    pub counts: [usize; HIST_BINS],
    pub min: f64,
    pub max: f64,
    /// All values equal; everything sits in bin 0.
    pub degenerate: bool,
}

impl Histogram {
    pub fn bin_of(&self, v: f64) -> usize {
        if self.degenerate {
            return 0;
        }
        let t = (v - self.min) / (self.max - self.min) * HIST_BINS as f64;
        (t.floor().max(0.0) as usize).min(HIST_BINS - 1)
    }

    /// Midpoint of the bin edges; the common value for a degenerate histogram.
    pub fn bin_center(&self, bin: usize) -> f64 {
        if self.degenerate {
            return self.min;
        }
        self.min + (bin as f64 + 0.5) * (self.max - self.min) / HIST_BINS as f64
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }
}

/// Ten equal-width bins over `[min, max]`; the maximum lands in the last bin.
pub fn flow_histogram(values: &[f64]) -> Result<Histogram> {
    if values.is_empty() {
        return Err(Error::TooShort { needed: 1, found: 0 });
    }
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut h = Histogram {
        counts: [0; HIST_BINS],
        min,
        max,
        degenerate: max <= min,
    };
    for &v in values {
        h.counts[h.bin_of(v)] += 1;
    }
    Ok(h)
}

/// The three most populated bins, ties going to the lower index. Empty bins
/// are never selected; missing slots are `None`.
pub fn top3_bins(hist: &Histogram) -> [Option<usize>; 3] {
    let mut order: Vec<usize> = (0..HIST_BINS).filter(|&b| hist.counts[b] > 0).collect();
    order.sort_by_key(|&b| (std::cmp::Reverse(hist.counts[b]), b));
    let mut out = [None; 3];
    for (slot, b) in out.iter_mut().zip(order) {
        *slot = Some(b);
    }
    out
}

/// Least-squares line `y = slope · x + intercept` through `points`.
///
/// Empty input gives `(0, 0)`; a vertical or single-point set gives slope 0
/// at the mean `y`.
pub fn bin_regression(points: &[(f64, f64)]) -> (f64, f64) {
    if points.is_empty() {
        return (0.0, 0.0);
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    if sxx / n < DEGENERATE_VARIANCE {
        return (0.0, my);
    }
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinSummary {
    pub bin_center: f64,
    pub slope: f64,
    pub intercept: f64,
}

/// One pixel of a flow component with its ROI-normalized position.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FlowSample {
    pub value: f64,
    pub x: f64,
    pub y: f64,
}

/// Samples of a row-major component; positions are pixel centers scaled by
/// the ROI width and height into `(0, 1)`.
pub fn component_samples(values: &[f64], width: usize, height: usize) -> Vec<FlowSample> {
    assert_eq!(values.len(), width * height, "component size");
    values
        .iter()
        .enumerate()
        .map(|(i, &value)| FlowSample {
            value,
            x: ((i % width) as f64 + 0.5) / width as f64,
            y: ((i / width) as f64 + 0.5) / height as f64,
        })
        .collect()
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    match n {
        0 => 0.0,
        _ if n % 2 == 1 => v[n / 2],
        _ => (v[n / 2 - 1] + v[n / 2]) / 2.0,
    }
}

/// Bin summaries of the top-3 bins; absent bins are `None`.
pub fn bin_summaries(samples: &[FlowSample]) -> Result<[Option<BinSummary>; 3]> {
    let values: Vec<f64> = samples.iter().map(|s| s.value).collect();
    let hist = flow_histogram(&values)?;
    let mut out = [None; 3];
    for (slot, bin) in out.iter_mut().zip(top3_bins(&hist)) {
        if let Some(b) = bin {
            let pts: Vec<(f64, f64)> = samples
                .iter()
                .filter(|s| hist.bin_of(s.value) == b)
                .map(|s| (s.x, s.y))
                .collect();
            let (slope, intercept) = bin_regression(&pts);
            *slot = Some(BinSummary {
                bin_center: hist.bin_center(b),
                slope,
                intercept,
            });
        }
    }
    Ok(out)
}

/// `[median, (center, slope, intercept) of bins 1, 2, 3]`; a missing bin is
/// written as three zeros.
pub fn roi_component_features(samples: &[FlowSample]) -> Result<[f64; COMPONENT_LEN]> {
    let values: Vec<f64> = samples.iter().map(|s| s.value).collect();
    let mut out = [0.0; COMPONENT_LEN];
    out[0] = median(&values);
    for (k, s) in bin_summaries(samples)?.iter().enumerate() {
        if let Some(s) = s {
            out[1 + 3 * k] = s.bin_center;
            out[2 + 3 * k] = s.slope;
            out[3 + 3 * k] = s.intercept;
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowFeatureConfig {
    pub flow: FlowParams,
    pub margin_factor: f64,
}

impl Default for FlowFeatureConfig {
    fn default() -> Self {
        FlowFeatureConfig {
            flow: FlowParams::default(),
            margin_factor: DEFAULT_MARGIN,
        }
    }
}

/// Flow descriptor of one frame pair:
/// `[leftEye.x, leftEye.y, rightEye.x, rightEye.y, mouth.x, mouth.y]`, ten values each.
pub fn framepair_features(
    i_t: &GrayImage,
    i_t1: &GrayImage,
    rois: &RoiSet,
    params: &FlowParams,
) -> Result<FeatureVector> {
    let mut values = Vec::with_capacity(Layout::Flow60.len());
    for roi in rois.as_array() {
        let (a, b) = (i_t.crop(roi)?, i_t1.crop(roi)?);
        let flow = compute_flow(&a, &b, params)?;
        for component in [flow.u(), flow.v()] {
            let samples = component_samples(component, roi.width, roi.height);
            values.extend(roi_component_features(&samples)?);
        }
    }
    FeatureVector::new(Layout::Flow60, values)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ComponentSelect {
    X,
    Y,
    XY,
}

impl ComponentSelect {
    pub fn layout(self) -> Layout {
        match self {
            ComponentSelect::X => Layout::FlowX30,
            ComponentSelect::Y => Layout::FlowY30,
            ComponentSelect::XY => Layout::Flow60,
        }
    }

    /// Keeps the x blocks, the y blocks, or everything of a 60-value vector.
    pub fn apply(self, v: &FeatureVector) -> Result<FeatureVector> {
        if v.layout() != Layout::Flow60 {
            return Err(Error::LayoutMismatch {
                expected: Layout::Flow60,
                found: v.layout(),
            });
        }
        let keep = |block: usize| match self {
            ComponentSelect::X => block.is_multiple_of(2),
            ComponentSelect::Y => block % 2 == 1,
            ComponentSelect::XY => true,
        };
        let values = v
            .values()
            .chunks(COMPONENT_LEN)
            .enumerate()
            .filter(|(b, _)| keep(*b))
            .flat_map(|(_, c)| c.iter().copied())
            .collect();
        FeatureVector::new(self.layout(), values)
    }
}

impl std::str::FromStr for ComponentSelect {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "x" => Ok(ComponentSelect::X),
            "y" => Ok(ComponentSelect::Y),
            "xy" => Ok(ComponentSelect::XY),
            other => Err(Error::InvalidParameter(format!("unknown flow components `{other}`"))),
        }
    }
}

/// Arithmetic mean of per-pair vectors, in order.
pub fn mean_pool(vectors: &[FeatureVector]) -> Result<FeatureVector> {
    let first = vectors.first().ok_or(Error::TooShort { needed: 1, found: 0 })?;
    let mut acc = vec![0.0; first.values().len()];
    for v in vectors {
        if v.layout() != first.layout() {
            return Err(Error::LayoutMismatch {
                expected: first.layout(),
                found: v.layout(),
            });
        }
        for (a, x) in acc.iter_mut().zip(v.values()) {
            *a += x;
        }
    }
    let n = vectors.len() as f64;
    FeatureVector::new(first.layout(), acc.into_iter().map(|a| a / n).collect())
}

/// Per-pair 60-value vectors of an in-memory video; ROIs come from the
/// landmarks of the earlier frame of each pair.
pub fn framepair_sequence(
    frames: &[GrayImage],
    landmarks: &[LandmarkFrame],
    config: &FlowFeatureConfig,
) -> Result<Vec<FeatureVector>> {
    if frames.len() < 2 {
        return Err(Error::TooShort {
            needed: 2,
            found: frames.len(),
        });
    }
    if landmarks.len() != frames.len() {
        return Err(Error::DimensionMismatch {
            expected: format!("{} landmark frames", frames.len()),
            found: landmarks.len().to_string(),
        });
    }
    (0..frames.len() - 1)
        .into_par_iter()
        .map(|t| {
            let dims = (frames[t].width(), frames[t].height());
            let rois = rois_from_landmarks(&landmarks[t], dims, config.margin_factor)?;
            framepair_features(&frames[t], &frames[t + 1], &rois, &config.flow)
        })
        .collect()
}

/// Video-level flow descriptor of in-memory frames.
pub fn flow_descriptor(
    frames: &[GrayImage],
    landmarks: &[LandmarkFrame],
    select: ComponentSelect,
    config: &FlowFeatureConfig,
) -> Result<FeatureVector> {
    select.apply(&mean_pool(&framepair_sequence(frames, landmarks, config)?)?)
}

fn load_video_frames(dir: &Path, landmarks: &[LandmarkFrame]) -> Result<Vec<GrayImage>> {
    landmarks.par_iter().map(|f| load_frame(dir, f.frame_index())).collect()
}

/// Loads a video and computes its pooled flow descriptor.
pub fn video_flow_descriptor(
    video: &VideoRecord,
    select: ComponentSelect,
    config: &FlowFeatureConfig,
) -> Result<FeatureVector> {
    let track = load_landmarks(&video.landmarks_path)?;
    let frames = load_video_frames(&video.frames_dir, &track.frames)?;
    flow_descriptor(&frames, &track.frames, select, config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Landmark;
    use crate::synth::{canonical_face, textured_image};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn face_frame(shift: (f64, f64)) -> LandmarkFrame {
        LandmarkFrame::new(
            0,
            canonical_face()
                .iter()
                .map(|p| Landmark::planar(p.x + shift.0, p.y + shift.1))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn zero_margin_gives_pixel_bounding_boxes() {
        let rois = rois_from_landmarks(&face_frame((0.0, 0.0)), (200, 160), 0.0).unwrap();
        // eye corners at x 55 and 85, lid at y 54, corners at y 60
        assert_eq!(
            rois.left_eye,
            Rect {
                x: 55,
                y: 54,
                width: 31,
                height: 7
            }
        );
        assert_eq!(
            rois.mouth,
            Rect {
                x: 80,
                y: 118,
                width: 41,
                height: 1
            }
        );
    }

    #[test]
    fn rois_clip_at_the_image_edge() {
        let rois = rois_from_landmarks(&face_frame((-60.0, -50.0)), (200, 160), 0.5).unwrap();
        assert_eq!((rois.left_eye.x, rois.left_eye.y), (0, 0));
        assert!(rois.left_eye.area() > 0);
        assert!(rois_from_landmarks(&face_frame((-400.0, 0.0)), (200, 160), 0.5).is_err());
    }

    #[test]
    fn mouth_roi_lies_below_the_eyes() {
        let rois = rois_from_landmarks(&face_frame((0.0, 0.0)), (200, 160), DEFAULT_MARGIN).unwrap();
        assert!(rois.mouth.y >= rois.left_eye.bottom());
        assert!(rois.mouth.y >= rois.right_eye.bottom());
        assert!(rois.left_eye.right() <= rois.right_eye.x + rois.right_eye.width);
    }

    #[test]
    fn histogram_basics() {
        let v: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let h = flow_histogram(&v).unwrap();
        assert_eq!(h.counts, [1; 10]);
        let h = flow_histogram(&[2.5; 10]).unwrap();
        assert!(h.degenerate);
        assert_eq!(h.counts[0], 10);
        assert_eq!(h.bin_center(0), 2.5);
        assert!(flow_histogram(&[]).is_err());
    }

    fn oracle_counts(values: &[f64]) -> [usize; HIST_BINS] {
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let edges: Vec<f64> = (0..=HIST_BINS)
            .map(|b| min + (max - min) * b as f64 / HIST_BINS as f64)
            .collect();
        let mut c = [0; HIST_BINS];
        for &v in values {
            let b = (0..HIST_BINS)
                .find(|&b| v >= edges[b] && (v < edges[b + 1] || b == HIST_BINS - 1))
                .unwrap();
            c[b] += 1;
        }
        c
    }

    fn oracle_top3(counts: &[usize; HIST_BINS]) -> [Option<usize>; 3] {
        // repeated argmax over bins still available
        let mut taken = [false; HIST_BINS];
        let mut out = [None; 3];
        for slot in &mut out {
            let mut best: Option<usize> = None;
            for b in 0..HIST_BINS {
                if !taken[b] && counts[b] > 0 && best.is_none_or(|k| counts[b] > counts[k]) {
                    best = Some(b);
                }
            }
            if let Some(b) = best {
                taken[b] = true;
            }
            *slot = best;
        }
        out
    }

    fn normal_equations(points: &[(f64, f64)]) -> (f64, f64) {
        let n = points.len() as f64;
        let (sx, sy) = points.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1));
        let sxx: f64 = points.iter().map(|p| p.0 * p.0).sum();
        let sxy: f64 = points.iter().map(|p| p.0 * p.1).sum();
        let det = n * sxx - sx * sx;
        let slope = (n * sxy - sx * sy) / det;
        let intercept = (sxx * sy - sx * sxy) / det;
        (slope, intercept)
    }

    #[test]
    fn histogram_top3_and_regression_match_oracles_on_random_inputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for trial in 0..1000 {
            let n = rng.random_range(1..400);
            let spread = rng.random_range(0.01..5.0);
            let values: Vec<f64> = (0..n).map(|_| rng.random_range(-spread..spread)).collect();
            let h = flow_histogram(&values).unwrap();
            assert_eq!(h.total(), n);
            if !h.degenerate {
                assert_eq!(h.counts, oracle_counts(&values), "trial {trial}");
            }
            assert_eq!(top3_bins(&h), oracle_top3(&h.counts), "trial {trial}");

            let m = rng.random_range(2..200);
            let pts: Vec<(f64, f64)> = (0..m).map(|_| (rng.random::<f64>(), rng.random::<f64>())).collect();
            let (s, i) = bin_regression(&pts);
            let (so, io) = normal_equations(&pts);
            assert!((s - so).abs() < 1e-9 && (i - io).abs() < 1e-9, "trial {trial}");
        }
    }

    #[test]
    fn top3_examples() {
        let mk = |counts: [usize; 10]| Histogram {
            counts,
            min: 0.0,
            max: 1.0,
            degenerate: false,
        };
        assert_eq!(
            top3_bins(&mk([5, 9, 1, 0, 0, 0, 0, 0, 0, 7])),
            [Some(1), Some(9), Some(0)]
        );
        assert_eq!(top3_bins(&mk([2; 10])), [Some(0), Some(1), Some(2)]);
        assert_eq!(top3_bins(&mk([0, 0, 0, 4, 0, 0, 0, 0, 0, 0])), [Some(3), None, None]);
    }

    #[test]
    fn regression_examples() {
        let pts: Vec<(f64, f64)> = (0..11).map(|i| i as f64 / 10.0).map(|x| (x, 2.0 * x + 0.1)).collect();
        let (s, i) = bin_regression(&pts);
        assert!((s - 2.0).abs() < 1e-9 && (i - 0.1).abs() < 1e-9);
        assert_eq!(bin_regression(&[(0.5, 0.5)]), (0.0, 0.5));
        let (s, i) = bin_regression(&[(0.3, 0.1), (0.3, 0.7)]);
        assert!(s == 0.0 && (i - 0.4).abs() < 1e-15);
        assert_eq!(bin_regression(&[]), (0.0, 0.0));
    }

    #[test]
    fn constant_component() {
        let s = component_samples(&[0.75; 12], 4, 3);
        let f = roi_component_features(&s).unwrap();
        assert_eq!(f.len(), COMPONENT_LEN);
        assert_eq!(f[0], 0.75);
        assert_eq!(f[1], 0.75);
        assert!(f[2].abs() < 1e-12);
        assert!((f[3] - 0.5).abs() < 1e-12);
        assert!(f[4..].iter().all(|x| *x == 0.0));
    }

    #[test]
    fn bimodal_component_bin_centers_bracket_clusters() {
        // left half moves by -1, right half by +2, with small spread
        let (w, h) = (20, 10);
        let values: Vec<f64> = (0..w * h)
            .map(|i| {
                let jitter = ((i * 37) % 11) as f64 * 0.01;
                if i % w < w / 2 {
                    -1.0 + jitter
                } else {
                    2.0 + jitter
                }
            })
            .collect();
        let f = roi_component_features(&component_samples(&values, w, h)).unwrap();
        let centers = [f[1], f[4]];
        assert!(centers.iter().any(|c| (c + 1.0).abs() < 0.35));
        assert!(centers.iter().any(|c| (c - 2.0).abs() < 0.35));
    }

    proptest! {
        #[test]
        fn pixel_order_does_not_matter(seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (w, h) = (9, 7);
            let values: Vec<f64> = (0..w * h).map(|_| rng.random_range(-2.0..2.0)).collect();
            let samples = component_samples(&values, w, h);
            let mut shuffled = samples.clone();
            for i in (1..shuffled.len()).rev() {
                shuffled.swap(i, rng.random_range(0..=i));
            }
            let a = roi_component_features(&samples).unwrap();
            let b = roi_component_features(&shuffled).unwrap();
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x - y).abs() < 1e-12);
            }
        }
    }

    fn textured_frames(shift: (f64, f64)) -> (GrayImage, GrayImage) {
        let tex = textured_image(5);
        let a = GrayImage::from_fn(200, 160, |x, y| tex(x as f64, y as f64));
        let b = GrayImage::from_fn(200, 160, |x, y| tex(x as f64 - shift.0, y as f64 - shift.1));
        (a, b)
    }

    #[test]
    fn identical_frames_have_zero_medians() {
        let (a, _) = textured_frames((0.0, 0.0));
        let rois = rois_from_landmarks(&face_frame((0.0, 0.0)), (200, 160), DEFAULT_MARGIN).unwrap();
        let v = framepair_features(&a, &a, &rois, &FlowParams::default()).unwrap();
        assert_eq!(v.values().len(), 60);
        for block in 0..6 {
            assert!(v.values()[block * 10].abs() < 1e-3);
        }
    }

    #[test]
    fn translated_frames_give_matching_medians() {
        let (a, b) = textured_frames((1.0, 0.0));
        let rois = rois_from_landmarks(&face_frame((0.0, 0.0)), (200, 160), DEFAULT_MARGIN).unwrap();
        let v = framepair_features(&a, &b, &rois, &FlowParams::default()).unwrap();
        let v = v.values();
        assert!((v[0] - 1.0).abs() < 0.1, "left eye x median {}", v[0]);
        assert!(v[10].abs() < 0.1, "left eye y median {}", v[10]);
        assert!((v[40] - 1.0).abs() < 0.1, "mouth x median {}", v[40]);
    }

    #[test]
    fn component_selection_layouts() {
        let v = FeatureVector::new(Layout::Flow60, (0..60).map(|i| i as f64).collect()).unwrap();
        let x = ComponentSelect::X.apply(&v).unwrap();
        let y = ComponentSelect::Y.apply(&v).unwrap();
        assert_eq!(x.values().len(), 30);
        assert_eq!(y.values().len(), 30);
        assert_eq!(ComponentSelect::XY.apply(&v).unwrap(), v);
        assert_eq!(x.values()[10], 20.0);
        assert_eq!(y.values()[0], 10.0);
        assert_eq!(y.values()[29], 59.0);
        assert!(ComponentSelect::X.apply(&x).is_err());
    }

    #[test]
    fn pooling_is_the_arithmetic_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let vs: Vec<FeatureVector> = (0..7)
            .map(|_| {
                FeatureVector::new(Layout::Flow60, (0..60).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
            })
            .collect();
        let pooled = mean_pool(&vs).unwrap();
        for j in 0..60 {
            let m = vs.iter().map(|v| v.values()[j]).sum::<f64>() / 7.0;
            assert!((pooled.values()[j] - m).abs() < 1e-12);
        }
    }

    #[test]
    fn still_video_has_zero_motion_descriptor() {
        let (a, _) = textured_frames((0.0, 0.0));
        let f = face_frame((0.0, 0.0));
        let frames = vec![a.clone(), a.clone(), a];
        let lms = vec![f.clone(), f.clone(), f];
        let d = flow_descriptor(&frames, &lms, ComponentSelect::XY, &FlowFeatureConfig::default()).unwrap();
        for block in 0..6 {
            assert!(d.values()[block * 10].abs() < 1e-3);
        }
        assert!(flow_descriptor(
            &frames[..1],
            &lms[..1],
            ComponentSelect::X,
            &FlowFeatureConfig::default()
        )
        .is_err());
    }
}
