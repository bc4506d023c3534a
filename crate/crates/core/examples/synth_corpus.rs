//! Writes a small synthetic corpus and prints the generated ground truth.
//!
//! cargo run --release --example synth_corpus -- [out_dir] [easy|overlap]

use std::path::PathBuf;

use smiledyn::synth::{generate, Preset, SynthParams};

fn main() -> smiledyn::Result<()> {
    let mut args = std::env::args().skip(1);
    let out = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("smiledyn_synth"));
    let preset: Preset = args.next().as_deref().unwrap_or("easy").parse()?;
    let mut params = SynthParams::preset(preset, 1);
    params.n_per_class = 4;

    let corpus = generate(&params, &out)?;
    println!("manifest: {}", corpus.manifest_path.display());
    println!(
        "{:<16} {:<12} {:>6} {:>10} {:>9} {:>8}",
        "video", "label", "frames", "onset", "lip_amp", "eyelid"
    );
    for t in &corpus.truths {
        println!(
            "{:<16} {:<12} {:>6} {:>10} {:>9.3} {:>8.3}",
            t.video_id,
            t.label.as_str(),
            t.n_frames,
            format!("{}..{}", t.onset.0, t.onset.1),
            t.lip_amplitude,
            t.eyelid_change
        );
    }
    Ok(())
}
