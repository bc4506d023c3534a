//! Linear soft-margin SVM trained by dual coordinate descent.
//!
//! The bias is folded into the weight vector through a constant feature, so
//! the dual is a box-constrained QP
//!
//! ```text
//! max  Σ αᵢ − ½ ‖Σ αᵢ yᵢ x̃ᵢ‖²   subject to 0 ≤ αᵢ ≤ C,   x̃ = [x, 1]
//! ```
//!
//! which coordinate descent solves exactly one variable at a time.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::{FeatureVector, Label, Layout};
use crate::error::{Error, Result};

pub const MODEL_FORMAT: &str = "smiledyn-linear-svm";
pub const MODEL_VERSION: u32 = 1;

/// Per-feature mean and population standard deviation; zero-variance
/// features get a deviation of 1.
pub fn standardize_fit(x: &[Vec<f64>]) -> Result<(Vec<f64>, Vec<f64>)> {
    let first = x.first().ok_or(Error::TooShort { needed: 1, found: 0 })?;
    let d = first.len();
    if let Some(bad) = x.iter().find(|r| r.len() != d) {
        return Err(Error::DimensionMismatch {
            expected: format!("{d} features"),
            found: bad.len().to_string(),
        });
    }
    let n = x.len() as f64;
    let means: Vec<f64> = (0..d).map(|j| x.iter().map(|r| r[j]).sum::<f64>() / n).collect();
    let stds = (0..d)
        .map(|j| {
            let var = x.iter().map(|r| (r[j] - means[j]).powi(2)).sum::<f64>() / n;
            let sd = var.sqrt();
            if sd > 1e-12 * (1.0 + means[j].abs()) {
                sd
            } else {
                1.0
            }
        })
        .collect();
    Ok((means, stds))
}

pub fn standardize_apply(x: &[f64], means: &[f64], stds: &[f64]) -> Vec<f64> {
    x.iter().zip(means).zip(stds).map(|((v, m), s)| (v - m) / s).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvmParams {
    pub c: f64,
    /// Stop once the spread of projected gradients over an epoch falls below
    /// this.
    pub tolerance: f64,
    pub max_epochs: usize,
}

impl Default for SvmParams {
    fn default() -> Self {
        SvmParams {
            c: 1.0,
            tolerance: 1e-4,
            max_epochs: 100_000,
        }
    }
}

/// Solution of the dual on already standardized data.
#[derive(Clone, Debug, PartialEq)]
pub struct DualSolution {
    pub alpha: Vec<f64>,
    /// Weights followed by the bias.
    pub w: Vec<f64>,
    pub epochs: usize,
}

fn augmented(x: &[f64]) -> impl Iterator<Item = f64> + '_ {
    x.iter().copied().chain(std::iter::once(1.0))
}

fn dot_aug(w: &[f64], x: &[f64]) -> f64 {
    w.iter().zip(augmented(x)).map(|(a, b)| a * b).sum()
}

/// Dual objective at `alpha`.
pub fn dual_objective(x: &[Vec<f64>], y: &[f64], alpha: &[f64]) -> f64 {
    let d = x.first().map_or(0, |r| r.len()) + 1;
    let mut w = vec![0.0; d];
    for ((xi, yi), ai) in x.iter().zip(y).zip(alpha) {
        for (wj, v) in w.iter_mut().zip(augmented(xi)) {
            *wj += ai * yi * v;
        }
    }
    alpha.iter().sum::<f64>() - 0.5 * w.iter().map(|v| v * v).sum::<f64>()
}

/// Cyclic dual coordinate descent; `y` holds ±1.
pub fn solve_dual(x: &[Vec<f64>], y: &[f64], params: &SvmParams) -> Result<DualSolution> {
    if !(params.c > 0.0 && params.c.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "C must be positive, found {}",
            params.c
        )));
    }
    let n = x.len();
    let d = x.first().map_or(0, |r| r.len()) + 1;
    let q: Vec<f64> = x.iter().map(|xi| augmented(xi).map(|v| v * v).sum()).collect();
    let mut alpha = vec![0.0; n];
    let mut w = vec![0.0; d];
    let c = params.c;
    let mut epochs = 0;
    while epochs < params.max_epochs {
        epochs += 1;
        let (mut pg_max, mut pg_min) = (f64::NEG_INFINITY, f64::INFINITY);
        for i in 0..n {
            let g = y[i] * dot_aug(&w, &x[i]) - 1.0;
            let pg = if alpha[i] <= 0.0 {
                g.min(0.0)
            } else if alpha[i] >= c {
                g.max(0.0)
            } else {
                g
            };
            pg_max = pg_max.max(pg);
            pg_min = pg_min.min(pg);
            if pg != 0.0 {
                let old = alpha[i];
                alpha[i] = (old - g / q[i]).clamp(0.0, c);
                let delta = (alpha[i] - old) * y[i];
                for (wj, v) in w.iter_mut().zip(augmented(&x[i])) {
                    *wj += delta * v;
                }
            }
        }
        if pg_max - pg_min < params.tolerance {
            break;
        }
    }
    Ok(DualSolution { alpha, w, epochs })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingMetadata {
    pub n_samples: usize,
    pub n_spontaneous: usize,
    pub epochs: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub date: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub format: String,
    pub version: u32,
    pub layout_id: Layout,
    /// Label encoded as `+1`; the other class is `-1`.
    pub positive_class: Label,
    #[serde(rename = "C")]
    pub c: f64,
    pub feature_means: Vec<f64>,
    pub feature_stds: Vec<f64>,
    pub weights: Vec<f64>,
    pub bias: f64,
    pub metadata: TrainingMetadata,
}

pub fn train(samples: &[FeatureVector], labels: &[Label], params: &SvmParams) -> Result<TrainedModel> {
    if samples.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: format!("{} labels", samples.len()),
            found: labels.len().to_string(),
        });
    }
    let layout = samples.first().ok_or(Error::SingleClass)?.layout();
    if let Some(bad) = samples.iter().find(|s| s.layout() != layout) {
        return Err(Error::LayoutMismatch {
            expected: layout,
            found: bad.layout(),
        });
    }
    let n_spont = labels.iter().filter(|&&l| l == Label::Spontaneous).count();
    if n_spont == 0 || n_spont == labels.len() {
        return Err(Error::SingleClass);
    }
    let raw: Vec<Vec<f64>> = samples.iter().map(|s| s.values().to_vec()).collect();
    let (means, stds) = standardize_fit(&raw)?;
    let x: Vec<Vec<f64>> = raw.iter().map(|r| standardize_apply(r, &means, &stds)).collect();
    let y: Vec<f64> = labels.iter().map(|l| l.sign()).collect();
    let sol = solve_dual(&x, &y, params)?;
    let (weights, bias) = (sol.w[..sol.w.len() - 1].to_vec(), sol.w[sol.w.len() - 1]);
    Ok(TrainedModel {
        format: MODEL_FORMAT.into(),
        version: MODEL_VERSION,
        layout_id: layout,
        positive_class: Label::Spontaneous,
        c: params.c,
        feature_means: means,
        feature_stds: stds,
        weights,
        bias,
        metadata: TrainingMetadata {
            n_samples: samples.len(),
            n_spontaneous: n_spont,
            epochs: sol.epochs,
            seed: None,
            date: None,
        },
    })
}

impl TrainedModel {
    /// Signed distance-like score; positive means spontaneous.
    pub fn margin(&self, x: &FeatureVector) -> Result<f64> {
        if x.layout() != self.layout_id {
            return Err(Error::LayoutMismatch {
                expected: self.layout_id,
                found: x.layout(),
            });
        }
        let z = standardize_apply(x.values(), &self.feature_means, &self.feature_stds);
        Ok(z.iter().zip(&self.weights).map(|(a, b)| a * b).sum::<f64>() + self.bias)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes") + "\n"
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let model: TrainedModel = serde_json::from_str(&text).map_err(|e| Error::Json {
            path: path.to_path_buf(),
            source: e,
        })?;
        if model.format != MODEL_FORMAT || model.version != MODEL_VERSION {
            return Err(Error::InvalidParameter(format!(
                "{}: unsupported model {} v{}",
                path.display(),
                model.format,
                model.version
            )));
        }
        let d = model.layout_id.len();
        if [model.weights.len(), model.feature_means.len(), model.feature_stds.len()] != [d; 3] {
            return Err(Error::DimensionMismatch {
                expected: format!("{d} values per vector for {}", model.layout_id),
                found: format!("{}", model.weights.len()),
            });
        }
        Ok(model)
    }
}

/// Label and margin; a zero margin counts as posed.
pub fn predict(model: &TrainedModel, x: &FeatureVector) -> Result<(Label, f64)> {
    let m = model.margin(x)?;
    let label = if m > 0.0 { Label::Spontaneous } else { Label::Posed };
    Ok((label, m))
}
