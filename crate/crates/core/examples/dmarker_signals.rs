//! Computes the eyelid and lip signals of a synthetic posed smile, segments
//! the phases and prints the 50 D-marker features.
//!
//! cargo run --release --example dmarker_signals

use smiledyn::data::{Dimensionality, Label, LandmarkTrack, Layout};
use smiledyn::dmarker::{dmarker_from_sequence, region_signals, segment_phases, DmarkerConfig};
use smiledyn::normalize::normalize_sequence;
use smiledyn::synth::{render_video, SynthParams};

fn main() -> smiledyn::Result<()> {
    let mut params = SynthParams::easy(3);
    params.landmark_noise_px = 0.0;
    let video = render_video(&params, Label::Posed, 0)?;
    let truth = video.truth;
    let seq = normalize_sequence(&LandmarkTrack {
        frames: video.landmarks,
        dimensionality: Dimensionality::Planar,
    })?;
    let config = DmarkerConfig { smoothing_window: 1 };

    let (eyelid, lip) = region_signals(&seq, truth.fps, &config)?;
    let phases = segment_phases(&lip);
    println!(
        "generated onset {:?} apex {:?} offset {:?}",
        truth.onset, truth.apex, truth.offset
    );
    println!(
        "recovered onset {:?} apex {:?} offset {:?}",
        phases.onset, phases.apex, phases.offset
    );
    println!("\n t   D_eyelid   D_lip");
    for (t, (e, l)) in eyelid.samples().iter().zip(lip.samples()).enumerate().step_by(3) {
        println!("{t:>3}  {e:>8.4}  {l:>7.4}");
    }

    let v = dmarker_from_sequence(&seq, truth.fps, &DmarkerConfig::default())?;
    for (name, chunk) in ["eyes", "lips"]
        .iter()
        .zip(v.values().chunks(Layout::DmarkerEye25.len()))
    {
        let cells: Vec<String> = chunk.iter().map(|x| format!("{x:.3}")).collect();
        println!("\n{name}: {}", cells.join(" "));
    }
    Ok(())
}
