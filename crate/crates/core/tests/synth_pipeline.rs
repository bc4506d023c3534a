//! Ground truth of the generator recovered by the analysis pipeline.

use smiledyn::data::{Dimensionality, Label, LandmarkTrack};
use smiledyn::dmarker::{region_signals, segment_phases, DmarkerConfig};
use smiledyn::flowfeat::{median, rois_from_landmarks, DEFAULT_MARGIN};
use smiledyn::normalize::normalize_sequence;
use smiledyn::optflow::{compute_flow, FlowParams};
use smiledyn::synth::{render_video, Span, SynthParams};

fn noiseless(seed: u64) -> SynthParams {
    let mut p = SynthParams::easy(seed);
    p.landmark_noise_px = 0.0;
    p.intensity_noise = 0.0;
    p
}

#[test]
fn dmarker_onset_matches_generated_onset() {
    let params = noiseless(21);
    let config = DmarkerConfig { smoothing_window: 1 };
    for label in Label::ALL {
        for index in 0..6 {
            let video = render_video(&params, label, index).unwrap();
            let seq = normalize_sequence(&LandmarkTrack {
                frames: video.landmarks,
                dimensionality: Dimensionality::Planar,
            })
            .unwrap();
            let (_, lip) = region_signals(&seq, video.truth.fps, &config).unwrap();
            let phases = segment_phases(&lip);
            let truth = video.truth.onset.1 - video.truth.onset.0;
            let found = phases.onset.len();
            assert!(
                found.abs_diff(truth) <= 1,
                "{}: onset {found} frames, generated {truth}",
                video.truth.video_id
            );
        }
    }
}

#[test]
fn mouth_x_flow_follows_lateral_pull() {
    let mut params = noiseless(4);
    params.lateral_pull = Span::new(0.12, 0.12);
    let flow = FlowParams::default();
    let mut signs_seen = [false; 2];
    for index in 0..8 {
        let video = render_video(&params, Label::Posed, index).unwrap();
        let pull = video.truth.lateral_pull.signum();
        signs_seen[(pull > 0.0) as usize] = true;
        let (on, off) = (video.truth.onset, video.truth.offset);
        let dims = (video.frames[0].width(), video.frames[0].height());
        // skip the first and last pair of each phase, where the ramp starts or ends
        for (range, dir) in [((on.0 + 1, on.1 - 1), pull), ((off.0 + 1, off.1 - 1), -pull)] {
            for t in range.0..range.1 {
                let rois = rois_from_landmarks(&video.landmarks[t], dims, DEFAULT_MARGIN).unwrap();
                let a = video.frames[t].crop(rois.mouth).unwrap();
                let b = video.frames[t + 1].crop(rois.mouth).unwrap();
                let f = compute_flow(&a, &b, &flow).unwrap();
                let m = median(f.u());
                assert!(
                    m * dir > 0.0,
                    "{} pair {t}: x median {m}, expected sign {dir}",
                    video.truth.video_id
                );
            }
        }
    }
    assert!(signs_seen.iter().all(|&s| s), "both pull directions exercised");
}
