//! Normalizes a landmark CSV (or a tilted synthetic face) and prints the
//! interocular distance and head pose of each frame.
//!
//! cargo run --release --example normalize_landmarks -- [landmarks.csv]

use smiledyn::data::{load_landmarks, Dimensionality, Landmark, LandmarkFrame, LandmarkTrack};
use smiledyn::normalize::{head_pose_2d, normalize_sequence};
use smiledyn::synth::canonical_face;

fn main() -> smiledyn::Result<()> {
    let track = match std::env::args().nth(1) {
        Some(path) => load_landmarks(path)?,
        None => {
            // the canonical face rotated by 0..20 degrees, scaled and shifted
            let frames = (0..5)
                .map(|i| {
                    let a = (i as f64 * 5.0).to_radians();
                    let s = 1.0 + 0.25 * i as f64;
                    let pts = canonical_face()
                        .iter()
                        .map(|p| (p.x, p.y))
                        .map(|(x, y)| {
                            Landmark::planar(
                                s * (a.cos() * x - a.sin() * y) + 40.0,
                                s * (a.sin() * x + a.cos() * y) - 10.0,
                            )
                        })
                        .collect();
                    LandmarkFrame::new(i, pts)
                })
                .collect::<smiledyn::Result<Vec<_>>>()?;
            LandmarkTrack {
                frames,
                dimensionality: Dimensionality::Planar,
            }
        }
    };
    let normalized = normalize_sequence(&track)?;
    println!("frame  roll_deg  interocular  nose_tip");
    for (raw, n) in track.frames.iter().zip(&normalized) {
        let pose = head_pose_2d(raw);
        let nose = n.points()[8];
        println!(
            "{:>5}  {:>8.2}  {:>11.6}  ({:.3}, {:.3})",
            n.frame_index(),
            pose.theta_z.to_degrees(),
            n.interocular(),
            nose.x,
            nose.y
        );
    }
    Ok(())
}
