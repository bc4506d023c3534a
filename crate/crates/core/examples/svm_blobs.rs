//! Trains the linear SVM on two Gaussian blobs and reports held-out accuracy.
//!
//! cargo run --release --example svm_blobs -- [C]

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use smiledyn::data::{FeatureVector, Label, Layout};
use smiledyn::svm::{predict, train, SvmParams};

fn blobs(n: usize, rng: &mut ChaCha8Rng) -> (Vec<FeatureVector>, Vec<Label>) {
    let noise = Normal::new(0.0, 1.0).unwrap();
    let mut x = Vec::new();
    let mut y = Vec::new();
    for (label, c) in [(Label::Spontaneous, 0.0), (Label::Posed, 3.0)] {
        for _ in 0..n {
            let mut v = vec![0.0; Layout::DmarkerEye25.len()];
            v[0] = c + noise.sample(rng);
            v[1] = c + noise.sample(rng);
            x.push(FeatureVector::new(Layout::DmarkerEye25, v).unwrap());
            y.push(label);
        }
    }
    (x, y)
}

fn main() -> smiledyn::Result<()> {
    let c = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (x, y) = blobs(200, &mut rng);
    let (tx, ty) = blobs(200, &mut rng);
    let model = train(
        &x,
        &y,
        &SvmParams {
            c,
            ..Default::default()
        },
    )?;
    let correct = tx
        .iter()
        .zip(&ty)
        .map(|(v, l)| predict(&model, v).map(|(p, _)| p == *l))
        .collect::<smiledyn::Result<Vec<_>>>()?
        .into_iter()
        .filter(|&ok| ok)
        .count();
    println!(
        "C = {c}: w = ({:.3}, {:.3}), b = {:.3}, {} epochs",
        model.weights[0], model.weights[1], model.bias, model.metadata.epochs
    );
    println!("held-out accuracy {:.1}%", 100.0 * correct as f64 / tx.len() as f64);
    Ok(())
}
