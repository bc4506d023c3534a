//! Eyelid and lip-corner amplitude signals, onset/apex/offset segmentation
//! and the 25-value temporal descriptor computed for each region.

use std::ops::Range;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::data::{load_landmarks, points, FacePoints, FeatureVector, Layout, VideoRecord};
use crate::error::{Error, Result};
use crate::normalize::normalize_sequence;

/// Steps smaller than this are treated as flat when looking for runs.
pub const RUN_TOLERANCE: f64 = 1e-9;

/// Number of values produced per region by [`descriptor25`].
pub const DESCRIPTOR_LEN: usize = 25;

#[derive(Clone, Debug, PartialEq)]
pub struct SmileSignal {
    samples: Vec<f64>,
    fps: f64,
}

impl SmileSignal {
    pub fn new(samples: Vec<f64>, fps: f64) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::TooShort {
                needed: 2,
                found: samples.len(),
            });
        }
        if !(fps.is_finite() && fps > 0.0) {
            return Err(Error::InvalidParameter(format!("fps must be positive, found {fps}")));
        }
        if samples.iter().any(|s| !s.is_finite()) {
            return Err(Error::InvalidParameter("signal contains non-finite samples".into()));
        }
        Ok(SmileSignal { samples, fps })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn fps(&self) -> f64 {
        self.fps
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.fps
    }
}

/// Frame ranges (half-open) of the three smile phases.
///
/// The onset range runs from the first frame of the rise up to, but not
/// including, its peak frame; the apex then starts at that peak frame and the
/// offset starts at the first frame of the fall.
#[derive(Clone, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Phases {
    pub onset: Range<usize>,
    pub apex: Range<usize>,
    pub offset: Range<usize>,
}

/// Relative vertical location: `-1` when `lj` lies strictly below `li`
/// (larger raster `y`), `+1` otherwise.
pub fn kappa(li: &Vector3<f64>, lj: &Vector3<f64>) -> f64 {
    if lj.y > li.y {
        -1.0
    } else {
        1.0
    }
}

fn dist(a: &Vector3<f64>, b: &Vector3<f64>) -> f64 {
    (a - b).norm()
}

/// Signed eyelid aperture of a single frame.
pub fn eyelid_amplitude(frame: &impl FacePoints) -> Result<f64> {
    let p = |i| frame.position(i);
    let (l1, l2, l3) = (
        p(points::LEFT_EYE_OUTER),
        p(points::LEFT_UPPER_LID),
        p(points::LEFT_EYE_INNER),
    );
    let (l4, l5, l6) = (
        p(points::RIGHT_EYE_INNER),
        p(points::RIGHT_UPPER_LID),
        p(points::RIGHT_EYE_OUTER),
    );
    let eye_width = dist(&l1, &l3);
    if eye_width <= f64::EPSILON {
        return Err(Error::Degenerate("eye corners 1 and 3 coincide".into()));
    }
    let m13 = (l1 + l3) / 2.0;
    let m46 = (l4 + l6) / 2.0;
    let left = kappa(&m13, &l2) * dist(&m13, &l2);
    let right = kappa(&m46, &l5) * dist(&m46, &l5);
    Ok((left + right) / (2.0 * eye_width))
}

pub fn eyelid_signal<F: FacePoints>(seq: &[F], fps: f64) -> Result<SmileSignal> {
    let samples = seq.iter().map(eyelid_amplitude).collect::<Result<Vec<_>>>()?;
    SmileSignal::new(samples, fps)
}

/// Mean lip-corner displacement from the first frame, relative to the
/// first-frame lip length.
pub fn lip_signal<F: FacePoints>(seq: &[F], fps: f64) -> Result<SmileSignal> {
    let first = seq.first().ok_or(Error::TooShort { needed: 2, found: 0 })?;
    let rest_left = first.position(points::LEFT_LIP_CORNER);
    let rest_right = first.position(points::RIGHT_LIP_CORNER);
    let rest_len = dist(&rest_left, &rest_right);
    if rest_len <= f64::EPSILON {
        return Err(Error::Degenerate("lip corners coincide in the first frame".into()));
    }
    let samples = seq
        .iter()
        .map(|f| {
            let moved = dist(&f.position(points::LEFT_LIP_CORNER), &rest_left)
                + dist(&f.position(points::RIGHT_LIP_CORNER), &rest_right);
            moved / (2.0 * rest_len)
        })
        .collect();
    SmileSignal::new(samples, fps)
}

/// Centered moving average over an odd `window`; windows are truncated at the
/// edges.
pub fn smooth(signal: &SmileSignal, window: usize) -> Result<SmileSignal> {
    if window == 0 || window.is_multiple_of(2) {
        return Err(Error::InvalidParameter(format!(
            "smoothing window must be odd and positive, found {window}"
        )));
    }
    let s = signal.samples();
    let half = window / 2;
    let out = (0..s.len())
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(s.len());
            s[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
        })
        .collect();
    SmileSignal::new(out, signal.fps)
}

/// Time derivative in units per second: central differences inside,
/// one-sided at both ends.
pub fn derivative(signal: &SmileSignal) -> Result<SmileSignal> {
    let s = signal.samples();
    let n = s.len();
    if n < 3 {
        return Err(Error::TooShort { needed: 3, found: n });
    }
    let fps = signal.fps;
    let mut d = Vec::with_capacity(n);
    d.push((s[1] - s[0]) * fps);
    d.extend(s.windows(3).map(|w| (w[2] - w[0]) * fps / 2.0));
    d.push((s[n - 1] - s[n - 2]) * fps);
    SmileSignal::new(d, fps)
}

/// Maximal runs of strictly increasing (`rising`) or decreasing steps, as
/// `(first_frame, last_frame)` pairs.
pub fn monotone_runs(samples: &[f64], rising: bool) -> Vec<(usize, usize)> {
    let step = |i: usize| {
        let d = samples[i + 1] - samples[i];
        if rising {
            d > RUN_TOLERANCE
        } else {
            d < -RUN_TOLERANCE
        }
    };
    let mut runs = Vec::new();
    let mut start = None;
    for i in 0..samples.len().saturating_sub(1) {
        match (step(i), start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                runs.push((s, i));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        runs.push((s, samples.len() - 1));
    }
    runs
}

fn longest(runs: impl Iterator<Item = (usize, usize)>) -> Option<(usize, usize)> {
    // strict comparison keeps the earliest of equally long runs
    runs.fold(None, |best, r| match best {
        Some(b) if r.1 - r.0 <= b.1 - b.0 => Some(b),
        _ => Some(r),
    })
}

/// Onset is the longest rise of the (smoothed) lip signal, offset the longest
/// fall at or after the onset peak, apex whatever lies between them.
pub fn segment_phases(d_lip: &SmileSignal) -> Phases {
    let s = d_lip.samples();
    let onset = longest(monotone_runs(s, true).into_iter());
    let onset_end = onset.map_or(0, |r| r.1);
    let offset = longest(monotone_runs(s, false).into_iter().filter(|r| r.0 >= onset_end));
    let onset_range = onset.map_or(0..0, |(a, b)| a..b);
    let offset_range = offset.map_or(0..0, |(a, b)| a..b);
    let apex = match (onset, offset) {
        (Some((_, peak)), Some((fall, _))) => peak..fall,
        _ => 0..0,
    };
    Phases {
        onset: onset_range,
        apex,
        offset: offset_range,
    }
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

fn max(v: &[f64]) -> f64 {
    v.iter().copied().reduce(f64::max).unwrap_or(0.0)
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).reduce(f64::max).unwrap_or(0.0)
}

/// The 25-value descriptor of one region's signal.
///
/// For onset, apex and offset in turn: duration (s), mean and max amplitude,
/// mean speed, max |speed|, mean acceleration, max |acceleration|. Then the
/// clip duration (s), the amplitude range, `(onset_frames + 1) /
/// (offset_frames + 1)` and the clip mean amplitude. Empty phases contribute
/// zeros.
pub fn descriptor25(signal: &SmileSignal, phases: &Phases, layout: Layout) -> Result<FeatureVector> {
    if !matches!(layout, Layout::DmarkerEye25 | Layout::DmarkerLip25) {
        return Err(Error::InvalidParameter(format!("{layout} is not a per-region layout")));
    }
    let amp = signal.samples();
    let speed = derivative(signal)?;
    let accel = derivative(&speed)?;
    let (speed, accel) = (speed.samples(), accel.samples());

    let mut out = Vec::with_capacity(DESCRIPTOR_LEN);
    for r in [&phases.onset, &phases.apex, &phases.offset] {
        let r = r.start.min(amp.len())..r.end.min(amp.len());
        out.extend([
            r.len() as f64 / signal.fps(),
            mean(&amp[r.clone()]),
            max(&amp[r.clone()]),
            mean(&speed[r.clone()]),
            max_abs(&speed[r.clone()]),
            mean(&accel[r.clone()]),
            max_abs(&accel[r]),
        ]);
    }
    let lo = amp.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = amp.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    out.extend([
        signal.duration_s(),
        hi - lo,
        (phases.onset.len() as f64 + 1.0) / (phases.offset.len() as f64 + 1.0),
        mean(amp),
    ]);
    FeatureVector::new(layout, out)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DmarkerConfig {
    /// Moving-average window (frames) applied before segmentation and
    /// differentiation.
    pub smoothing_window: usize,
}

impl Default for DmarkerConfig {
    fn default() -> Self {
        DmarkerConfig { smoothing_window: 5 }
    }
}

/// Eyelid and lip signals of a landmark sequence, smoothed.
pub fn region_signals<F: FacePoints>(
    seq: &[F],
    fps: f64,
    config: &DmarkerConfig,
) -> Result<(SmileSignal, SmileSignal)> {
    let eyelid = smooth(&eyelid_signal(seq, fps)?, config.smoothing_window)?;
    let lip = smooth(&lip_signal(seq, fps)?, config.smoothing_window)?;
    Ok((eyelid, lip))
}

/// `[eyelid descriptor, lip descriptor]`, both segmented by the lip phases.
pub fn dmarker_from_sequence<F: FacePoints>(seq: &[F], fps: f64, config: &DmarkerConfig) -> Result<FeatureVector> {
    if seq.len() < 3 {
        return Err(Error::TooShort {
            needed: 3,
            found: seq.len(),
        });
    }
    let (eyelid, lip) = region_signals(seq, fps, config)?;
    let phases = segment_phases(&lip);
    let mut values = descriptor25(&eyelid, &phases, Layout::DmarkerEye25)?.into_values();
    values.extend(descriptor25(&lip, &phases, Layout::DmarkerLip25)?.into_values());
    FeatureVector::new(Layout::Dmarker50, values)
}

/// Loads, normalizes and describes one video's landmark track.
pub fn dmarker_features(video: &VideoRecord, config: &DmarkerConfig) -> Result<FeatureVector> {
    let track = load_landmarks(&video.landmarks_path)?;
    let normalized = normalize_sequence(&track)?;
    dmarker_from_sequence(&normalized, video.fps, config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Landmark, LandmarkFrame, NUM_POINTS};
    use crate::synth::canonical_face;
    use proptest::prelude::*;

    fn frame_from(pts: &[Vector3<f64>]) -> LandmarkFrame {
        LandmarkFrame::new(0, pts.iter().map(|p| Landmark::planar(p.x, p.y)).collect()).unwrap()
    }

    fn sig(v: Vec<f64>) -> SmileSignal {
        SmileSignal::new(v, 50.0).unwrap()
    }

    fn trapezoid() -> Vec<f64> {
        (0..=60)
            .map(|i| match i {
                0..=20 => i as f64,
                21..=40 => 20.0,
                _ => (60 - i) as f64,
            })
            .collect()
    }

    #[test]
    fn kappa_cases() {
        let o = Vector3::zeros();
        assert_eq!(kappa(&o, &Vector3::new(0.0, 5.0, 0.0)), -1.0);
        assert_eq!(kappa(&o, &Vector3::new(0.0, -5.0, 0.0)), 1.0);
        assert_eq!(kappa(&o, &Vector3::new(3.0, 0.0, 0.0)), 1.0);
    }

    fn eye_config(lid_dy: f64) -> LandmarkFrame {
        let mut pts: Vec<Vector3<f64>> = canonical_face();
        let set = |pts: &mut Vec<Vector3<f64>>, i: usize, x: f64, y: f64| pts[i - 1] = Vector3::new(x, y, 0.0);
        set(&mut pts, 1, 0.0, 0.0);
        set(&mut pts, 3, 10.0, 0.0);
        set(&mut pts, 2, 5.0, lid_dy);
        set(&mut pts, 4, 20.0, 0.0);
        set(&mut pts, 6, 30.0, 0.0);
        set(&mut pts, 5, 25.0, lid_dy);
        frame_from(&pts)
    }

    #[test]
    fn hand_evaluated_eyelid_aperture() {
        // oracle: each lid 3 above its corner midpoint, corners 10 apart
        let oracle = (1.0 * 3.0 + 1.0 * 3.0) / (2.0 * 10.0);
        assert!((eyelid_amplitude(&eye_config(-3.0)).unwrap() - oracle).abs() < 1e-12);
        assert!((oracle - 0.3).abs() < 1e-12);
        assert!((eyelid_amplitude(&eye_config(3.0)).unwrap() + 0.3).abs() < 1e-12);
        assert_eq!(eyelid_amplitude(&eye_config(0.0)).unwrap(), 0.0);
    }

    #[test]
    fn lip_signal_cases() {
        let face = canonical_face();
        let rest = frame_from(&face);
        let mut moved = face.clone();
        // rest lip length of the canonical face
        let len = (face[points::RIGHT_LIP_CORNER - 1] - face[points::LEFT_LIP_CORNER - 1]).norm();
        moved[points::LEFT_LIP_CORNER - 1] += Vector3::new(-3.0, -4.0, 0.0);
        moved[points::RIGHT_LIP_CORNER - 1] += Vector3::new(5.0, 0.0, 0.0);
        let s = lip_signal(&[rest.clone(), rest.clone(), frame_from(&moved)], 50.0).unwrap();
        assert_eq!(s.samples()[1], 0.0);
        assert!((s.samples()[2] - 10.0 / (2.0 * len)).abs() < 1e-12);

        // 5-unit moves on a 50-unit lip
        let mut pts = face.clone();
        pts[points::LEFT_LIP_CORNER - 1] = Vector3::new(0.0, 0.0, 0.0);
        pts[points::RIGHT_LIP_CORNER - 1] = Vector3::new(50.0, 0.0, 0.0);
        let mut smile = pts.clone();
        smile[points::LEFT_LIP_CORNER - 1] = Vector3::new(-3.0, -4.0, 0.0);
        smile[points::RIGHT_LIP_CORNER - 1] = Vector3::new(50.0, -5.0, 0.0);
        let s = lip_signal(&[frame_from(&pts), frame_from(&smile)], 50.0).unwrap();
        assert!((s.samples()[1] - 0.1).abs() < 1e-12);

        let doubled: Vec<_> = [pts, smile]
            .iter()
            .map(|f| f.iter().map(|p| p * 2.0).collect::<Vec<_>>())
            .collect();
        let s2 = lip_signal(&[frame_from(&doubled[0]), frame_from(&doubled[1])], 50.0).unwrap();
        assert!((s2.samples()[1] - 0.1).abs() < 1e-12);
    }

    #[test]
    fn smoothing() {
        let s = sig(vec![1.0, 4.0, 2.0, 8.0]);
        assert_eq!(smooth(&s, 1).unwrap(), s);
        let c = sig(vec![0.7; 9]);
        for v in smooth(&c, 5).unwrap().samples() {
            assert!((v - 0.7).abs() < 1e-15);
        }
        let mut imp = vec![0.0; 11];
        imp[5] = 1.0;
        let out = smooth(&sig(imp.clone()), 5).unwrap();
        // direct-convolution oracle with a box of 5
        for i in 2..9 {
            let oracle: f64 = (i - 2..=i + 2).map(|j| imp[j]).sum::<f64>() / 5.0;
            assert!((out.samples()[i] - oracle).abs() < 1e-15);
        }
        assert!((out.samples()[5] - 0.2).abs() < 1e-15);
        assert!(smooth(&s, 4).is_err());
        assert!(smooth(&s, 0).is_err());
    }

    #[test]
    fn derivative_cases() {
        let ramp = sig((0..10).map(|i| 0.3 * i as f64).collect());
        for d in derivative(&ramp).unwrap().samples() {
            assert!((d - 0.3 * 50.0).abs() < 1e-9);
        }
        for d in derivative(&sig(vec![2.0; 5])).unwrap().samples() {
            assert_eq!(*d, 0.0);
        }
        let fps = 50.0;
        let w = 2.0 * std::f64::consts::PI;
        let sine = SmileSignal::new((0..100).map(|i| (w * i as f64 / fps).sin()).collect(), fps).unwrap();
        let d = derivative(&sine).unwrap();
        for i in 1..99 {
            let t = i as f64 / fps;
            // central differences are second order: error ~ w^3 / (6 fps^2)
            assert!((d.samples()[i] - w * (w * t).cos()).abs() < w.powi(3) / (6.0 * fps * fps) + 1e-9);
        }
        assert!(matches!(derivative(&sig(vec![1.0, 2.0])), Err(Error::TooShort { .. })));
    }

    #[test]
    fn trapezoid_phases() {
        let p = segment_phases(&sig(trapezoid()));
        assert_eq!(p.onset, 0..20);
        assert_eq!(p.apex, 20..40);
        assert_eq!(p.offset, 40..60);
    }

    #[test]
    fn increasing_signal_has_only_onset() {
        let v: Vec<f64> = (0..30).map(|i| i as f64 * 0.1).collect();
        let p = segment_phases(&sig(v));
        assert_eq!(p.onset, 0..29);
        assert!(p.apex.is_empty() && p.offset.is_empty());
    }

    #[test]
    fn constant_signal_has_no_phases() {
        assert_eq!(segment_phases(&sig(vec![1.0; 20])), Phases::default());
    }

    #[test]
    fn picks_the_longer_rise() {
        let mut v = vec![0.0];
        v.extend((1..=5).map(|i| i as f64)); // rise of 5 steps
        v.extend([5.0, 4.0, 3.0]);
        v.extend((1..=9).map(|i| 3.0 + i as f64)); // rise of 9 steps
        let p = segment_phases(&sig(v.clone()));
        // brute-force oracle over every increasing stretch
        let mut best = (0, 0);
        for a in 0..v.len() {
            for b in a + 1..v.len() {
                if (a..b).all(|i| v[i + 1] > v[i]) && b - a > best.1 - best.0 {
                    best = (a, b);
                }
            }
        }
        assert_eq!(p.onset, best.0..best.1);
        assert_eq!(p.onset.len(), 9);
    }

    #[test]
    fn equal_runs_prefer_the_earlier() {
        let v = vec![0.0, 1.0, 2.0, 2.0, 1.0, 2.0, 3.0, 3.0];
        assert_eq!(segment_phases(&sig(v)).onset, 0..2);
    }

    #[test]
    fn descriptor_of_constant_signal() {
        let s = sig(vec![0.4; 30]);
        let d = descriptor25(&s, &Phases::default(), Layout::DmarkerLip25).unwrap();
        let v = d.values();
        assert_eq!(v.len(), 25);
        assert!(v[..21].iter().all(|x| *x == 0.0));
        assert!((v[21] - 30.0 / 50.0).abs() < 1e-15);
        assert_eq!(v[22], 0.0);
        assert_eq!(v[23], 1.0);
        assert!((v[24] - 0.4).abs() < 1e-15);
    }

    #[test]
    fn descriptor_of_trapezoid() {
        let slope = 0.01;
        let s = sig(trapezoid().into_iter().map(|x| x * slope).collect());
        let phases = segment_phases(&s);
        let v = descriptor25(&s, &phases, Layout::DmarkerLip25).unwrap().into_values();
        assert!((v[0] - 0.4).abs() < 1e-12, "onset duration");
        assert!((v[3] - slope * 50.0).abs() < 1e-9, "onset mean speed");
        assert!((v[4] - slope * 50.0).abs() < 1e-9);
        // apex at the plateau
        assert!((v[7] - 0.4).abs() < 1e-12);
        assert!((v[8] - 0.2).abs() < 1e-12);
        // offset mean speed is the negative slope, mean of frames 40..59
        assert!((v[14] - 0.4).abs() < 1e-12);
        let offset_speed: f64 = (40..60)
            .map(|i| if i == 40 { -0.5 * slope * 50.0 } else { -slope * 50.0 })
            .sum::<f64>()
            / 20.0;
        assert!((v[17] - offset_speed).abs() < 1e-9);
        assert!((v[22] - 0.2).abs() < 1e-12);
        assert!((v[23] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn descriptor_rejects_combined_layout() {
        let s = sig(vec![0.0; 5]);
        assert!(descriptor25(&s, &Phases::default(), Layout::Dmarker50).is_err());
    }

    fn smile_sequence(scale: f64, shift: Vector3<f64>) -> Vec<LandmarkFrame> {
        let face = canonical_face();
        (0..40u32)
            .map(|t| {
                let a = (t as f64 / 39.0 * std::f64::consts::PI).sin();
                let mut pts = face.clone();
                pts[points::LEFT_LIP_CORNER - 1] += Vector3::new(-4.0 * a, -2.0 * a, 0.0);
                pts[points::RIGHT_LIP_CORNER - 1] += Vector3::new(4.0 * a, -2.0 * a, 0.0);
                pts[points::LEFT_UPPER_LID - 1] += Vector3::new(0.0, 1.5 * a, 0.0);
                pts[points::RIGHT_UPPER_LID - 1] += Vector3::new(0.0, 1.5 * a, 0.0);
                let pts = pts.iter().map(|p| p * scale + shift);
                LandmarkFrame::new(t, pts.map(|p| Landmark::planar(p.x, p.y)).collect()).unwrap()
            })
            .collect()
    }

    #[test]
    fn dmarker_vector_has_50_values_and_is_scale_free() {
        let cfg = DmarkerConfig::default();
        let a = dmarker_from_sequence(&smile_sequence(1.0, Vector3::zeros()), 50.0, &cfg).unwrap();
        let b = dmarker_from_sequence(&smile_sequence(2.0, Vector3::new(30.0, -12.0, 0.0)), 50.0, &cfg).unwrap();
        assert_eq!(a.values().len(), 50);
        assert_eq!(a.layout(), Layout::Dmarker50);
        for (x, y) in a.values().iter().zip(b.values()) {
            assert!((x - y).abs() < 1e-9 * (1.0 + x.abs()), "{x} vs {y}");
        }
    }

    #[test]
    fn repeated_frame_has_zero_dynamics() {
        let f = frame_from(&canonical_face());
        let seq = vec![f; 12];
        let v = dmarker_from_sequence(&seq, 50.0, &DmarkerConfig::default()).unwrap();
        for block in [&v.values()[..25], &v.values()[25..]] {
            for phase in 0..3 {
                let stats = &block[phase * 7..phase * 7 + 7];
                assert!(stats.iter().all(|x| *x == 0.0));
            }
            assert!(block[22].abs() < 1e-12);
        }
    }

    #[test]
    fn too_few_frames_rejected() {
        let f = frame_from(&canonical_face());
        assert!(dmarker_from_sequence(&[f.clone(), f], 50.0, &DmarkerConfig::default()).is_err());
        let _ = NUM_POINTS;
    }

    /// Every maximal run found by direct enumeration of stretch endpoints.
    fn brute_force_runs(v: &[f64], rising: bool) -> Vec<(usize, usize)> {
        let ok = |i: usize| {
            let d = v[i + 1] - v[i];
            if rising {
                d > RUN_TOLERANCE
            } else {
                d < -RUN_TOLERANCE
            }
        };
        let mut runs = Vec::new();
        for a in 0..v.len() {
            for b in a + 1..v.len() {
                let inside = (a..b).all(ok);
                let left_max = a == 0 || !ok(a - 1);
                let right_max = b + 1 == v.len() || !ok(b);
                if inside && left_max && right_max {
                    runs.push((a, b));
                }
            }
        }
        runs
    }

    proptest! {
        #[test]
        fn phases_are_ordered_and_match_enumeration(v in proptest::collection::vec(-3i32..3, 2..50)) {
            let v: Vec<f64> = v.into_iter().map(f64::from).collect();
            prop_assert_eq!(monotone_runs(&v, true), brute_force_runs(&v, true));
            prop_assert_eq!(monotone_runs(&v, false), brute_force_runs(&v, false));
            let p = segment_phases(&sig(v.clone()));
            for r in [&p.onset, &p.apex, &p.offset] {
                prop_assert!(r.end <= v.len());
            }
            if !p.offset.is_empty() {
                prop_assert!(p.onset.end <= p.apex.start || p.apex.is_empty());
                prop_assert!(p.onset.end <= p.offset.start);
            }
            if !p.apex.is_empty() {
                prop_assert!(p.apex.end <= p.offset.start);
            }
        }
    }
}
