//! Deterministic synthetic smile corpora.
//!
//! Each video is a schematic face: a procedural texture with darker patches
//! at the eyes and mouth, deformed by a smooth displacement field that follows
//! the 21 landmarks along a trapezoidal smile trajectory. Class-specific
//! parameter ranges encode the spontaneous/posed contrasts (slower onset and
//! smaller lip amplitude for spontaneous smiles).

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::{Vector2, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::data::{
    points, save_frame, save_landmarks, write_manifest, GrayImage, Label, Landmark, LandmarkFrame, VideoRecord,
    NUM_POINTS,
};
use crate::error::{Error, Result};

pub const DEFAULT_WIDTH: usize = 200;
pub const DEFAULT_HEIGHT: usize = 160;

/// Rest landmark positions (pixels, raster `y` down) of the schematic face.
/// Eye corners and nose tip share `z = 0`, so a frontal face has normal `+z`.
pub fn canonical_face() -> Vec<Vector3<f64>> {
    let xy: [(f64, f64, f64); NUM_POINTS] = [
        (55.0, 60.0, 0.0),   // 1 left eye outer
        (70.0, 54.0, 0.0),   // 2 left upper lid
        (85.0, 60.0, 0.0),   // 3 left eye inner
        (115.0, 60.0, 0.0),  // 4 right eye inner
        (130.0, 54.0, 0.0),  // 5 right upper lid
        (145.0, 60.0, 0.0),  // 6 right eye outer
        (92.0, 96.0, -4.0),  // 7 left nostril
        (108.0, 96.0, -4.0), // 8 right nostril
        (100.0, 90.0, 0.0),  // 9 nose tip
        (80.0, 118.0, -3.0), // 10 left lip corner
        (120.0, 118.0, -3.0),
        (100.0, 113.0, -1.0),
        (100.0, 124.0, -2.0),
        (85.0, 45.0, -1.0), // 14 left brow inner
        (70.0, 41.0, -2.0),
        (55.0, 45.0, -4.0),
        (115.0, 45.0, -1.0), // 17 right brow inner
        (130.0, 41.0, -2.0),
        (145.0, 45.0, -4.0),
        (62.0, 100.0, -8.0), // 20 left cheek
        (138.0, 100.0, -8.0),
    ];
    xy.iter().map(|&(x, y, z)| Vector3::new(x, y, z)).collect()
}

/// Band-limited procedural texture, a sum of oriented sinusoids scaled into
/// `[0.15, 0.85]`.
#[derive(Clone, Debug)]
pub struct Texture {
    waves: Vec<(f64, f64, f64, f64)>,
    norm: f64,
}

impl Texture {
    pub fn new(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let waves: Vec<_> = (0..14)
            .map(|_| {
                let angle = rng.random_range(0.0..std::f64::consts::PI);
                let wavelength = rng.random_range(5.0..18.0);
                let k = std::f64::consts::TAU / wavelength;
                let amp = rng.random_range(0.5..1.0);
                (
                    k * angle.cos(),
                    k * angle.sin(),
                    rng.random_range(0.0..std::f64::consts::TAU),
                    amp,
                )
            })
            .collect();
        let norm = waves.iter().map(|w| w.3).sum();
        Texture { waves, norm }
    }

    pub fn sample(&self, x: f64, y: f64) -> f64 {
        let s: f64 = self
            .waves
            .iter()
            .map(|&(kx, ky, ph, a)| a * (kx * x + ky * y + ph).sin())
            .sum();
        0.5 + 0.35 * s / self.norm
    }
}

/// Continuous textured intensity function for flow experiments.
pub fn textured_image(seed: u64) -> impl Fn(f64, f64) -> f64 {
    let t = Texture::new(seed);
    move |x, y| t.sample(x, y)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Span {
    pub min: f64,
    pub max: f64,
}

impl Span {
    pub const fn new(min: f64, max: f64) -> Self {
        Span { min, max }
    }

    fn draw(&self, rng: &mut impl Rng) -> f64 {
        if self.max > self.min {
            rng.random_range(self.min..self.max)
        } else {
            self.min
        }
    }

    fn is_valid(&self) -> bool {
        self.min.is_finite() && self.max.is_finite() && self.min >= 0.0 && self.max >= self.min
    }
}

/// Per-class smile dynamics. Durations are seconds; the lip amplitude is the
/// peak lip-corner displacement relative to lip length and the eyelid change
/// is the peak upper-lid drop relative to eye width.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassDynamics {
    pub onset_s: Span,
    pub apex_s: Span,
    pub offset_s: Span,
    pub lip_amplitude: Span,
    pub eyelid_change: Span,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthParams {
    pub n_per_class: usize,
    pub fps: f64,
    pub width: usize,
    pub height: usize,
    /// Neutral frames before the onset and after the offset.
    pub lead_s: Span,
    pub spontaneous: ClassDynamics,
    pub posed: ClassDynamics,
    /// Common horizontal pull of the mouth at the apex, relative to lip
    /// length; the sign is drawn per video.
    pub lateral_pull: Span,
    /// Peak rigid head drift in pixels over the clip.
    pub head_drift_px: Span,
    pub landmark_noise_px: f64,
    pub intensity_noise: f64,
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Easy,
    Overlap,
}

impl std::str::FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "easy" => Ok(Preset::Easy),
            "overlap" => Ok(Preset::Overlap),
            other => Err(Error::InvalidParameter(format!("unknown preset `{other}`"))),
        }
    }
}

impl SynthParams {
    /// Disjoint class ranges and near-zero noise.
    pub fn easy(seed: u64) -> Self {
        SynthParams {
            n_per_class: 50,
            fps: 25.0,
            width: DEFAULT_WIDTH,
            height: DEFAULT_HEIGHT,
            lead_s: Span::new(0.06, 0.12),
            spontaneous: ClassDynamics {
                onset_s: Span::new(0.6, 0.9),
                apex_s: Span::new(0.2, 0.4),
                offset_s: Span::new(0.6, 0.9),
                lip_amplitude: Span::new(0.06, 0.10),
                eyelid_change: Span::new(0.06, 0.10),
            },
            posed: ClassDynamics {
                onset_s: Span::new(0.25, 0.45),
                apex_s: Span::new(0.2, 0.4),
                offset_s: Span::new(0.25, 0.45),
                lip_amplitude: Span::new(0.14, 0.20),
                eyelid_change: Span::new(0.01, 0.04),
            },
            lateral_pull: Span::new(0.0, 0.03),
            head_drift_px: Span::new(0.0, 0.0),
            landmark_noise_px: 0.02,
            intensity_noise: 0.005,
            seed,
        }
    }

    /// Class ranges that nearly touch, heavier noise and head drift.
    pub fn overlap(seed: u64) -> Self {
        let easy = SynthParams::easy(seed);
        SynthParams {
            spontaneous: ClassDynamics {
                onset_s: Span::new(0.42, 0.8),
                lip_amplitude: Span::new(0.08, 0.13),
                eyelid_change: Span::new(0.02, 0.08),
                offset_s: Span::new(0.35, 0.8),
                ..easy.spontaneous
            },
            posed: ClassDynamics {
                onset_s: Span::new(0.25, 0.4),
                lip_amplitude: Span::new(0.135, 0.2),
                eyelid_change: Span::new(0.01, 0.06),
                offset_s: Span::new(0.25, 0.6),
                ..easy.posed
            },
            head_drift_px: Span::new(0.0, 3.0),
            landmark_noise_px: 0.5,
            intensity_noise: 0.02,
            ..easy
        }
    }

    pub fn preset(preset: Preset, seed: u64) -> Self {
        match preset {
            Preset::Easy => SynthParams::easy(seed),
            Preset::Overlap => SynthParams::overlap(seed),
        }
    }

    pub fn dynamics(&self, label: Label) -> &ClassDynamics {
        match label {
            Label::Spontaneous => &self.spontaneous,
            Label::Posed => &self.posed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.into()));
        let (s, p) = (&self.spontaneous, &self.posed);
        let spans = [
            self.lead_s,
            self.lateral_pull,
            self.head_drift_px,
            s.onset_s,
            s.apex_s,
            s.offset_s,
            s.lip_amplitude,
            s.eyelid_change,
            p.onset_s,
            p.apex_s,
            p.offset_s,
            p.lip_amplitude,
            p.eyelid_change,
        ];
        if spans.iter().any(|r| !r.is_valid()) {
            return bad("every range needs finite 0 <= min <= max");
        }
        if !(self.fps.is_finite() && self.fps > 0.0) || self.n_per_class == 0 {
            return bad("fps and n_per_class must be positive");
        }
        if self.width < 160 || self.height < 140 {
            return bad("image must be at least 160x140 to hold the face");
        }
        if s.onset_s.min <= p.onset_s.max {
            return bad("spontaneous onset range must lie strictly above the posed range");
        }
        if s.lip_amplitude.max >= p.lip_amplitude.min {
            return bad("spontaneous lip amplitude range must lie strictly below the posed range");
        }
        if !(self.landmark_noise_px >= 0.0 && self.intensity_noise >= 0.0) {
            return bad("noise levels must be non-negative");
        }
        Ok(())
    }
}

/// Generated trajectory of one video, in frame indices (half-open ranges of
/// the same convention as phase segmentation).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub video_id: String,
    pub label: Label,
    pub fps: f64,
    pub n_frames: usize,
    pub onset: (usize, usize),
    pub apex: (usize, usize),
    pub offset: (usize, usize),
    pub lip_amplitude: f64,
    pub eyelid_change: f64,
    /// Signed common horizontal pull of the mouth (positive is `+x`).
    pub lateral_pull: f64,
    pub head_drift: (f64, f64),
}

impl GroundTruth {
    pub fn onset_frames(&self) -> usize {
        self.onset.1 - self.onset.0
    }

    /// Smile activation in `[0, 1]` at frame `t`.
    pub fn activation(&self, t: usize) -> f64 {
        let (s0, s1) = self.onset;
        let (f0, f1) = self.offset;
        if t <= s0 || t >= f1 {
            0.0
        } else if t < s1 {
            (t - s0) as f64 / (s1 - s0) as f64
        } else if t <= f0 {
            1.0
        } else {
            1.0 - (t - f0) as f64 / (f1 - f0) as f64
        }
    }
}

pub struct SynthVideo {
    pub truth: GroundTruth,
    pub landmarks: Vec<LandmarkFrame>,
    pub frames: Vec<GrayImage>,
}

pub fn video_id(label: Label, i: usize) -> String {
    format!("{}_{i:03}", label.as_str())
}

/// Support radius of each landmark's influence, in kernel widths.
const SUPPORT: f64 = 4.0;

/// Dense displacement carried by the landmarks: the Gaussian-weighted mean of
/// the landmark offsets, fading to zero away from moving landmarks.
struct DisplacementField {
    centers: Vec<Vector2<f64>>,
    sigmas: Vec<f64>,
    offsets: Vec<Vector2<f64>>,
}

impl DisplacementField {
    fn at(&self, p: Vector2<f64>) -> Vector2<f64> {
        let mut wsum = 0.0;
        let mut acc = Vector2::zeros();
        let mut moving = false;
        for ((c, s), d) in self.centers.iter().zip(&self.sigmas).zip(&self.offsets) {
            let d2 = (p - c).norm_squared();
            if d2 >= (SUPPORT * s) * (SUPPORT * s) {
                continue;
            }
            let w = (-d2 / (2.0 * s * s)).exp();
            wsum += w;
            if d.x != 0.0 || d.y != 0.0 {
                acc += d * w;
                moving = true;
            }
        }
        if moving {
            acc / wsum.max(1.0)
        } else {
            Vector2::zeros()
        }
    }

    /// Pixel boxes `(x0, y0, x1, y1)`, half-open, outside of which the
    /// field vanishes.
    fn support(&self, width: usize, height: usize) -> Vec<(usize, usize, usize, usize)> {
        let clip = |v: f64, n: usize| (v.max(0.0) as usize).min(n);
        self.centers
            .iter()
            .zip(&self.sigmas)
            .zip(&self.offsets)
            .filter(|(_, d)| d.x != 0.0 || d.y != 0.0)
            .map(|((c, s), _)| {
                let r = SUPPORT * s;
                (
                    clip((c.x - r).floor(), width),
                    clip((c.y - r).floor(), height),
                    clip((c.x + r).ceil() + 1.0, width),
                    clip((c.y + r).ceil() + 1.0, height),
                )
            })
            .collect()
    }
}

/// Kernel width of each landmark's influence on the rendered image.
fn landmark_sigma(index: usize) -> f64 {
    match index {
        points::LEFT_LIP_CORNER | points::RIGHT_LIP_CORNER | points::UPPER_LIP | points::LOWER_LIP => 10.0,
        points::LEFT_CHEEK | points::RIGHT_CHEEK => 10.0,
        points::LEFT_UPPER_LID | points::RIGHT_UPPER_LID => 5.0,
        _ => 6.0,
    }
}

/// Intensity of the undeformed face at `p`.
fn face_intensity(tex: &Texture, rest: &[Vector3<f64>], p: Vector2<f64>) -> f64 {
    let pt = |i: usize| Vector2::new(rest[i - 1].x, rest[i - 1].y);
    let blob = |c: Vector2<f64>, rx: f64, ry: f64| {
        let d = p - c;
        (-(d.x * d.x / (rx * rx) + d.y * d.y / (ry * ry))).exp()
    };
    let left_eye = (pt(points::LEFT_EYE_OUTER) + pt(points::LEFT_EYE_INNER)) / 2.0;
    let right_eye = (pt(points::RIGHT_EYE_INNER) + pt(points::RIGHT_EYE_OUTER)) / 2.0;
    let mouth = (pt(points::LEFT_LIP_CORNER) + pt(points::RIGHT_LIP_CORNER)) / 2.0;
    let shade = 0.45 * blob(left_eye, 12.0, 6.0) + 0.45 * blob(right_eye, 12.0, 6.0) + 0.4 * blob(mouth, 20.0, 5.0);
    tex.sample(p.x, p.y) * (1.0 - shade) + 0.05 * shade
}

/// Draws the trajectory parameters of one video. `index` selects the random
/// stream, so videos are independent of generation order.
pub fn ground_truth(params: &SynthParams, label: Label, index: usize) -> Result<GroundTruth> {
    plan(params, label, index).map(|(t, _, _)| t)
}

fn plan(params: &SynthParams, label: Label, index: usize) -> Result<(GroundTruth, ChaCha8Rng, u64)> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    rng.set_stream(index as u64);
    let dyn_ = params.dynamics(label);
    let frames_of = |s: f64| ((s * params.fps).round() as usize).max(2);

    let lead = frames_of(params.lead_s.draw(&mut rng));
    let n_on = frames_of(dyn_.onset_s.draw(&mut rng));
    let n_ap = frames_of(dyn_.apex_s.draw(&mut rng));
    let n_off = frames_of(dyn_.offset_s.draw(&mut rng));
    let tail = frames_of(params.lead_s.draw(&mut rng));
    let lip_amp = dyn_.lip_amplitude.draw(&mut rng);
    let lid = dyn_.eyelid_change.draw(&mut rng);
    let pull_sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
    let pull = pull_sign * params.lateral_pull.draw(&mut rng);
    let drift_mag = params.head_drift_px.draw(&mut rng);
    let drift_dir = rng.random_range(0.0..std::f64::consts::TAU);
    let tex_seed: u64 = rng.random();

    let n_frames = lead + n_on + n_ap + n_off + tail;
    let truth = GroundTruth {
        video_id: video_id(label, index),
        label,
        fps: params.fps,
        n_frames,
        onset: (lead, lead + n_on),
        apex: (lead + n_on, lead + n_on + n_ap),
        offset: (lead + n_on + n_ap, lead + n_on + n_ap + n_off),
        lip_amplitude: lip_amp,
        eyelid_change: lid,
        lateral_pull: pull,
        head_drift: (drift_mag * drift_dir.cos(), drift_mag * drift_dir.sin()),
    };
    Ok((truth, rng, tex_seed))
}

/// Renders one video in memory.
pub fn render_video(params: &SynthParams, label: Label, index: usize) -> Result<SynthVideo> {
    let (truth, mut rng, tex_seed) = plan(params, label, index)?;
    render(params, truth, &mut rng, tex_seed)
}

fn render(params: &SynthParams, truth: GroundTruth, rng: &mut ChaCha8Rng, tex_seed: u64) -> Result<SynthVideo> {
    let (n_frames, lip_amp, lid, pull, drift) = (
        truth.n_frames,
        truth.lip_amplitude,
        truth.eyelid_change,
        truth.lateral_pull,
        truth.head_drift,
    );
    // center the face in the frame
    let mut rest = canonical_face();
    let shift = Vector3::new(
        params.width as f64 / 2.0 - 100.0,
        params.height as f64 / 2.0 - 85.0,
        0.0,
    );
    for p in &mut rest {
        *p += shift;
    }
    let p2 = |i: usize| Vector2::new(rest[i - 1].x, rest[i - 1].y);
    let lip_len = (p2(points::RIGHT_LIP_CORNER) - p2(points::LEFT_LIP_CORNER)).norm();
    let eye_width = (p2(points::LEFT_EYE_INNER) - p2(points::LEFT_EYE_OUTER)).norm();
    // corners move outward and up at 30 degrees
    let (c, s) = (30f64.to_radians().cos(), 30f64.to_radians().sin());
    let left_dir = Vector2::new(-c, -s);
    let right_dir = Vector2::new(c, -s);

    let tex = Texture::new(tex_seed);
    let landmark_noise = Normal::new(0.0, params.landmark_noise_px.max(f64::MIN_POSITIVE)).expect("valid sigma");
    let pixel_noise = Normal::new(0.0, params.intensity_noise.max(f64::MIN_POSITIVE)).expect("valid sigma");

    let rest_image: Vec<f64> = (0..params.width * params.height)
        .map(|i| {
            face_intensity(
                &tex,
                &rest,
                Vector2::new((i % params.width) as f64, (i / params.width) as f64),
            )
        })
        .collect();

    let mut landmarks = Vec::with_capacity(n_frames);
    let mut frames = Vec::with_capacity(n_frames);
    for t in 0..n_frames {
        let a = truth.activation(t);
        let progress = if n_frames > 1 {
            t as f64 / (n_frames - 1) as f64
        } else {
            0.0
        };
        let head = Vector2::new(drift.0 * progress, drift.1 * progress);
        let mut offsets = vec![Vector2::zeros(); NUM_POINTS];
        let lateral = Vector2::new(pull * lip_len * a, 0.0);
        offsets[points::LEFT_LIP_CORNER - 1] = left_dir * (lip_amp * lip_len * a) + lateral;
        offsets[points::RIGHT_LIP_CORNER - 1] = right_dir * (lip_amp * lip_len * a) + lateral;
        offsets[points::UPPER_LIP - 1] = Vector2::new(0.0, -0.3 * lip_amp * lip_len * a) + lateral;
        offsets[points::LOWER_LIP - 1] = Vector2::new(0.0, 0.1 * lip_amp * lip_len * a) + lateral;
        for i in [points::LEFT_UPPER_LID, points::RIGHT_UPPER_LID] {
            offsets[i - 1] = Vector2::new(0.0, lid * eye_width * a);
        }
        for i in [points::LEFT_CHEEK, points::RIGHT_CHEEK] {
            offsets[i - 1] = Vector2::new(0.0, -0.5 * lip_amp * lip_len * a);
        }

        let pts: Vec<Landmark> = rest
            .iter()
            .zip(&offsets)
            .map(|(r, d)| {
                let (nx, ny) = if params.landmark_noise_px > 0.0 {
                    (landmark_noise.sample(rng), landmark_noise.sample(rng))
                } else {
                    (0.0, 0.0)
                };
                Landmark::planar(r.x + d.x + head.x + nx, r.y + d.y + head.y + ny)
            })
            .collect();
        landmarks.push(LandmarkFrame::new(t as u32, pts)?);

        let field = DisplacementField {
            centers: (1..=NUM_POINTS).map(p2).collect(),
            sigmas: (1..=NUM_POINTS).map(landmark_sigma).collect(),
            offsets,
        };
        let (w, h) = (params.width, params.height);
        let render_at = |x: usize, y: usize| {
            let p = Vector2::new(x as f64, y as f64) - head;
            face_intensity(&tex, &rest, p - field.at(p))
        };
        let mut img = if head == Vector2::zeros() {
            let mut img = rest_image.clone();
            let mut done = vec![false; w * h];
            for (x0, y0, x1, y1) in field.support(w, h) {
                for y in y0..y1 {
                    for x in x0..x1 {
                        if !std::mem::replace(&mut done[y * w + x], true) {
                            img[y * w + x] = render_at(x, y);
                        }
                    }
                }
            }
            img
        } else {
            (0..w * h).map(|i| render_at(i % w, i / w)).collect()
        };
        if params.intensity_noise > 0.0 {
            for v in &mut img {
                *v += pixel_noise.sample(rng);
            }
        }
        for v in &mut img {
            *v = v.clamp(0.0, 1.0);
        }
        frames.push(GrayImage::new(params.width, params.height, img)?);
    }
    Ok(SynthVideo {
        truth,
        landmarks,
        frames,
    })
}

/// Everything written by [`generate`].
#[derive(Clone, Debug)]
pub struct Corpus {
    pub manifest_path: PathBuf,
    pub records: Vec<VideoRecord>,
    pub truths: Vec<GroundTruth>,
}

/// Writes `manifest.csv`, `videos/<id>/frames/frame_%06d.png`,
/// `videos/<id>/landmarks.csv` and `videos/<id>/truth.json` under `out`.
pub fn generate(params: &SynthParams, out: &Path) -> Result<Corpus> {
    use rayon::prelude::*;
    params.validate()?;
    let jobs: Vec<(Label, usize)> = Label::ALL
        .iter()
        .enumerate()
        .flat_map(|(k, &l)| (0..params.n_per_class).map(move |i| (l, k * params.n_per_class + i)))
        .collect();
    let written: Vec<(VideoRecord, GroundTruth)> = jobs
        .par_iter()
        .map(|&(label, index)| write_video(params, label, index, out))
        .collect::<Result<_>>()?;
    let (records, truths): (Vec<_>, Vec<_>) = written.into_iter().unzip();
    let manifest_path = out.join("manifest.csv");
    write_manifest(&manifest_path, &records)?;
    Ok(Corpus {
        manifest_path,
        records,
        truths,
    })
}

fn write_video(params: &SynthParams, label: Label, index: usize, out: &Path) -> Result<(VideoRecord, GroundTruth)> {
    let video = render_video(params, label, index)?;
    let id = &video.truth.video_id;
    let dir = out.join("videos").join(id);
    let frames_dir = dir.join("frames");
    fs::create_dir_all(&frames_dir).map_err(|e| Error::io(&frames_dir, e))?;
    for (t, f) in video.frames.iter().enumerate() {
        save_frame(frames_dir.join(format!("frame_{t:06}.png")), f)?;
    }
    let landmarks_path = dir.join("landmarks.csv");
    save_landmarks(&landmarks_path, &video.landmarks)?;
    let truth_path = dir.join("truth.json");
    let json = serde_json::to_string_pretty(&video.truth).map_err(|e| Error::Json {
        path: truth_path.clone(),
        source: e,
    })?;
    fs::write(&truth_path, json + "\n").map_err(|e| Error::io(&truth_path, e))?;
    Ok((
        VideoRecord {
            video_id: id.clone(),
            frames_dir,
            landmarks_path,
            label: Some(label),
            fps: params.fps,
        },
        video.truth,
    ))
}
