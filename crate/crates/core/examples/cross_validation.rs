//! 5-fold cross-validation on precomputed feature vectors, printed as a
//! confusion table and written as JSON.
//!
//! cargo run --release --example cross_validation -- [report.json]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use smiledyn::data::{FeatureVector, Label, Layout};
use smiledyn::eval::{cross_validate, kfold, LinearSvm};

fn main() -> smiledyn::Result<()> {
    // 60 + 60 samples whose first three features carry a weak class signal
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut ids = Vec::new();
    let mut x = Vec::new();
    let mut y = Vec::new();
    for (i, label) in [Label::Spontaneous, Label::Posed]
        .iter()
        .flat_map(|&l| [l; 60])
        .enumerate()
    {
        let v = (0..Layout::DmarkerLip25.len())
            .map(|j| {
                if j < 3 {
                    0.6 * label.sign() + rng.random_range(-1.0..1.0)
                } else {
                    rng.random_range(-1.0..1.0)
                }
            })
            .collect();
        ids.push(format!("sample_{i:03}"));
        x.push(FeatureVector::new(Layout::DmarkerLip25, v)?);
        y.push(label);
    }

    let folds = kfold(&y, 5, 7)?;
    println!("fold sizes {:?}", folds.iter().map(Vec::len).collect::<Vec<_>>());
    let report = cross_validate(&ids, &x, &y, 5, 7, &LinearSvm::default())?;
    print!("{}", report.render());
    if let Some(path) = std::env::args().nth(1) {
        report.save(&path)?;
        println!("wrote {path}");
    }
    Ok(())
}
