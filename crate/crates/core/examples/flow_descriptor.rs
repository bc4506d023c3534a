//! Computes the 60-value flow descriptor of every frame pair of a synthetic
//! smile and prints the mouth block of the pooled video descriptor.
//!
//! cargo run --release --example flow_descriptor

use smiledyn::data::Label;
use smiledyn::flowfeat::{framepair_sequence, mean_pool, rois_from_landmarks, FlowFeatureConfig};
use smiledyn::synth::{render_video, SynthParams};

fn main() -> smiledyn::Result<()> {
    let video = render_video(&SynthParams::easy(5), Label::Posed, 0)?;
    let config = FlowFeatureConfig::default();
    let rois = rois_from_landmarks(
        &video.landmarks[0],
        (video.frames[0].width(), video.frames[0].height()),
        config.margin_factor,
    )?;
    println!("ROIs of frame 0: {rois:?}");

    let pairs = framepair_sequence(&video.frames, &video.landmarks, &config)?;
    println!("{} frame pairs, {} values each", pairs.len(), pairs[0].values().len());
    let (on, ap) = (video.truth.onset, video.truth.apex);
    for (t, v) in pairs.iter().enumerate().filter(|(t, _)| t % 4 == 0) {
        let phase = if (on.0..on.1).contains(&t) {
            "onset"
        } else if (ap.0..ap.1).contains(&t) {
            "apex"
        } else {
            ""
        };
        // mouth y block: histogram bins, then medians
        let mouth_y = &v.values()[50..60];
        println!(
            "pair {t:>3} {phase:<6} mouth.y {:?}",
            mouth_y.iter().map(|x| (x * 1e3).round() / 1e3).collect::<Vec<_>>()
        );
    }
    let pooled = mean_pool(&pairs)?;
    let mouth_x: Vec<f64> = pooled.values()[40..50]
        .iter()
        .map(|x| (x * 1e3).round() / 1e3)
        .collect();
    println!("pooled mouth.x {mouth_x:?}");
    Ok(())
}
