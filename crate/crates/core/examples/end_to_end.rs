//! Generates the easy synthetic corpus and runs fused 5-fold CV on it.
//!
//! cargo run --release --example end_to_end -- [out_dir] [seed]

use std::path::PathBuf;
use std::time::Instant;

use smiledyn::eval::{run_experiment, ExperimentConfig};
use smiledyn::features::{FeatureCache, FeatureMode};
use smiledyn::synth::{generate, SynthParams};

fn main() -> smiledyn::Result<()> {
    let mut args = std::env::args().skip(1);
    let out = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("smiledyn_e2e"));
    let seed: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(7);

    let t = Instant::now();
    let corpus = generate(&SynthParams::easy(seed), &out)?;
    println!("generated {} videos in {:.1?}", corpus.records.len(), t.elapsed());

    let config = ExperimentConfig {
        k: 5,
        seed,
        cache: Some(FeatureCache::new(out.join("cache"))),
        ..Default::default()
    };
    for mode in [FeatureMode::EyesLips, FeatureMode::FlowXY, FeatureMode::Fused] {
        let t = Instant::now();
        let report = run_experiment(&corpus.records, mode, &config)?;
        println!("{}({:.1?})\n", report.render(), t.elapsed());
    }
    Ok(())
}
