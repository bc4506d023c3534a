//! Experiment protocol: stratified splits, k-fold cross-validation,
//! confusion matrices and reports.

use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{FeatureVector, Label, Layout, VideoRecord};
use crate::error::{Error, Result};
use crate::features::{extract_all, ExtractConfig, FeatureCache, FeatureMode};
use crate::svm::{self, SvmParams, TrainedModel};

pub use crate::features::fuse;

pub const REPORT_FORMAT: &str = "smiledyn-cv-report";
pub const REPORT_VERSION: u32 = 1;
/// How the report's confusion matrix combines folds.
pub const POOLING: &str = "counts summed over folds, then row-normalized";

fn class_indices(labels: &[Label]) -> [Vec<usize>; 2] {
    let mut out = [Vec::new(), Vec::new()];
    for (i, l) in labels.iter().enumerate() {
        out[class_slot(*l)].push(i);
    }
    out
}

fn class_slot(l: Label) -> usize {
    match l {
        Label::Spontaneous => 0,
        Label::Posed => 1,
    }
}

/// Each class is shuffled by its own stream so that adding records to one
/// class does not reshuffle the other.
fn shuffled_classes(labels: &[Label], seed: u64) -> [Vec<usize>; 2] {
    let mut classes = class_indices(labels);
    for (stream, idx) in classes.iter_mut().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream as u64 + 1);
        idx.shuffle(&mut rng);
    }
    classes
}

fn require_per_class(classes: &[Vec<usize>; 2], needed: usize) -> Result<()> {
    for (label, idx) in Label::ALL.iter().zip(classes) {
        if idx.len() < needed {
            return Err(Error::InsufficientRecords {
                label: *label,
                needed,
                found: idx.len(),
            });
        }
    }
    Ok(())
}

/// Index sets of a two-way split.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Stratified train/test split over record indices. Each class contributes
/// `round(n * train_frac)` training records, kept within `1..n`.
pub fn split(labels: &[Label], train_frac: f64, seed: u64) -> Result<Split> {
    if !(train_frac > 0.0 && train_frac < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "train_frac must lie in (0, 1), got {train_frac}"
        )));
    }
    let classes = shuffled_classes(labels, seed);
    require_per_class(&classes, 2)?;
    let mut out = Split {
        train: Vec::new(),
        test: Vec::new(),
    };
    for idx in &classes {
        let n_train = ((idx.len() as f64 * train_frac).round() as usize).clamp(1, idx.len() - 1);
        out.train.extend_from_slice(&idx[..n_train]);
        out.test.extend_from_slice(&idx[n_train..]);
    }
    out.train.sort_unstable();
    out.test.sort_unstable();
    Ok(out)
}

/// `k` disjoint stratified folds of record indices, each sorted.
///
/// Classes are shuffled, laid end to end and dealt round-robin, so fold
/// sizes differ by at most one overall and per class.
pub fn kfold(labels: &[Label], k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return Err(Error::InvalidParameter(format!("k must be at least 2, got {k}")));
    }
    let classes = shuffled_classes(labels, seed);
    require_per_class(&classes, k)?;
    let mut folds = vec![Vec::new(); k];
    for (pos, &i) in classes.iter().flatten().enumerate() {
        folds[pos % k].push(i);
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(folds)
}

/// Two-class confusion matrix; rows are actual classes, columns predicted,
/// both ordered spontaneous then posed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: [[usize; 2]; 2],
    /// Row-normalized percentages.
    pub percent: [[f64; 2]; 2],
    /// Correct over total, in percent.
    pub accuracy: f64,
    pub total: usize,
}

impl ConfusionMatrix {
    pub fn from_counts(counts: [[usize; 2]; 2]) -> Result<Self> {
        for (label, row) in Label::ALL.iter().zip(&counts) {
            if row[0] + row[1] == 0 {
                return Err(Error::InsufficientRecords {
                    label: *label,
                    needed: 1,
                    found: 0,
                });
            }
        }
        let percent = counts.map(|row| {
            let n = (row[0] + row[1]) as f64;
            [100.0 * row[0] as f64 / n, 100.0 * row[1] as f64 / n]
        });
        let total: usize = counts.iter().flatten().sum();
        let correct = counts[0][0] + counts[1][1];
        Ok(ConfusionMatrix {
            counts,
            percent,
            accuracy: 100.0 * correct as f64 / total as f64,
            total,
        })
    }

    pub fn cell(&self, actual: Label, predicted: Label) -> f64 {
        self.percent[class_slot(actual)][class_slot(predicted)]
    }

    /// Text table with actual classes as rows and predictions as columns.
    pub fn render(&self, title: &str) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{title}");
        let _ = writeln!(s, "{:<14}{:>13}{:>13}", "", "Spontaneous", "Posed");
        for (label, row) in ["Spontaneous", "Posed"].iter().zip(&self.percent) {
            let _ = writeln!(s, "{:<14}{:>13.1}{:>13.1}", label, row[0], row[1]);
        }
        let _ = writeln!(s, "Overall accuracy: {:.1}% ({} videos)", self.accuracy, self.total);
        s
    }
}

pub fn confusion(preds: &[Label], labels: &[Label]) -> Result<ConfusionMatrix> {
    if preds.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: format!("{} predictions", labels.len()),
            found: preds.len().to_string(),
        });
    }
    let mut counts = [[0usize; 2]; 2];
    for (p, a) in preds.iter().zip(labels) {
        counts[class_slot(*a)][class_slot(*p)] += 1;
    }
    ConfusionMatrix::from_counts(counts)
}

/// Something that can be fitted to labelled feature vectors.
pub trait Classifier: Sync {
    type Model: Predictor + Send;

    fn fit(&self, x: &[FeatureVector], y: &[Label]) -> Result<Self::Model>;
}

pub trait Predictor {
    /// Predicted label and its score, positive for spontaneous.
    fn predict(&self, x: &FeatureVector) -> Result<(Label, f64)>;
}

/// The linear SVM with per-feature standardization.
#[derive(Clone, Copy, Debug, Default)]
pub struct LinearSvm {
    pub params: SvmParams,
}

impl Classifier for LinearSvm {
    type Model = TrainedModel;

    fn fit(&self, x: &[FeatureVector], y: &[Label]) -> Result<TrainedModel> {
        svm::train(x, y, &self.params)
    }
}

impl Predictor for TrainedModel {
    fn predict(&self, x: &FeatureVector) -> Result<(Label, f64)> {
        svm::predict(self, x)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: usize,
    pub n_train: usize,
    pub n_test: usize,
    /// Test accuracy in percent.
    pub accuracy: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub video_id: String,
    pub fold: usize,
    pub actual: Label,
    pub predicted: Label,
    pub score: f64,
}

/// Outcome of one cross-validation run. Contains no paths or clock values,
/// so equal inputs serialize to equal bytes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub format: String,
    pub version: u32,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub feature_mode: Option<FeatureMode>,
    pub layout_id: Layout,
    pub k: usize,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub config: Option<ExperimentSettings>,
    pub n_videos: usize,
    pub n_spontaneous: usize,
    pub n_posed: usize,
    pub folds: Vec<FoldResult>,
    /// Arithmetic mean of the fold accuracies, in percent.
    pub mean_accuracy: f64,
    pub confusion_pooling: String,
    pub confusion: ConfusionMatrix,
    pub predictions: Vec<Prediction>,
}

impl CvReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn title(&self) -> String {
        let name = self.feature_mode.map_or(self.layout_id.id(), |m| m.title());
        format!(
            "{name}: {}-fold CV, seed {}, confusion pooled over folds",
            self.k, self.seed
        )
    }

    /// Confusion table plus the per-fold accuracies.
    pub fn render(&self) -> String {
        let mut s = self.confusion.render(&self.title());
        let folds: Vec<String> = self.folds.iter().map(|f| format!("{:.1}", f.accuracy)).collect();
        let _ = writeln!(
            s,
            "Fold accuracies: {} (mean {:.1}%)",
            folds.join(", "),
            self.mean_accuracy
        );
        s
    }
}

/// Parameters recorded in a report next to the results.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSettings {
    pub extract: ExtractConfig,
    pub svm: SvmParams,
}

/// k-fold cross-validation over precomputed features. Folds are trained in
/// parallel; the report is assembled in fold order.
pub fn cross_validate<C: Classifier>(
    ids: &[String],
    x: &[FeatureVector],
    y: &[Label],
    k: usize,
    seed: u64,
    classifier: &C,
) -> Result<CvReport> {
    if x.len() != y.len() || ids.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: format!("{} samples", y.len()),
            found: format!("{} ids, {} vectors", ids.len(), x.len()),
        });
    }
    let layout = x.first().ok_or(Error::SingleClass)?.layout();
    let folds = kfold(y, k, seed)?;
    let run_fold = |f: usize| -> Result<(FoldResult, Vec<Prediction>)> {
        let test = &folds[f];
        let train: Vec<usize> = folds
            .iter()
            .enumerate()
            .filter(|(g, _)| *g != f)
            .flat_map(|(_, idx)| idx.iter().copied())
            .collect();
        let tx: Vec<FeatureVector> = train.iter().map(|&i| x[i].clone()).collect();
        let ty: Vec<Label> = train.iter().map(|&i| y[i]).collect();
        let model = classifier.fit(&tx, &ty)?;
        let mut preds = Vec::with_capacity(test.len());
        for &i in test {
            let (predicted, score) = model.predict(&x[i])?;
            preds.push(Prediction {
                video_id: ids[i].clone(),
                fold: f,
                actual: y[i],
                predicted,
                score,
            });
        }
        let correct = preds.iter().filter(|p| p.actual == p.predicted).count();
        Ok((
            FoldResult {
                fold: f,
                n_train: train.len(),
                n_test: test.len(),
                accuracy: 100.0 * correct as f64 / test.len() as f64,
            },
            preds,
        ))
    };
    let results: Vec<(FoldResult, Vec<Prediction>)> = (0..k).into_par_iter().map(run_fold).collect::<Result<_>>()?;

    let mut fold_results = Vec::with_capacity(k);
    let mut predictions = Vec::with_capacity(y.len());
    for (r, p) in results {
        fold_results.push(r);
        predictions.extend(p);
    }
    let actual: Vec<Label> = predictions.iter().map(|p| p.actual).collect();
    let predicted: Vec<Label> = predictions.iter().map(|p| p.predicted).collect();
    let n_spontaneous = y.iter().filter(|&&l| l == Label::Spontaneous).count();
    Ok(CvReport {
        format: REPORT_FORMAT.into(),
        version: REPORT_VERSION,
        feature_mode: None,
        layout_id: layout,
        k,
        seed,
        config: None,
        n_videos: y.len(),
        n_spontaneous,
        n_posed: y.len() - n_spontaneous,
        mean_accuracy: fold_results.iter().map(|f| f.accuracy).sum::<f64>() / k as f64,
        folds: fold_results,
        confusion_pooling: POOLING.into(),
        confusion: confusion(&predicted, &actual)?,
        predictions,
    })
}

#[derive(Clone, Debug, Default)]
pub struct ExperimentConfig {
    pub extract: ExtractConfig,
    pub svm: SvmParams,
    pub k: usize,
    pub seed: u64,
    /// Worker threads for extraction, 0 for the default pool.
    pub jobs: usize,
    pub cache: Option<FeatureCache>,
}

/// Labels of a manifest, failing on the first unlabeled video.
pub fn labels_of(records: &[VideoRecord]) -> Result<Vec<Label>> {
    records
        .iter()
        .map(|r| {
            r.label
                .ok_or_else(|| Error::InvalidParameter("video has no label".into()).in_video(&r.video_id, "labels"))
        })
        .collect()
}

/// Extracts `mode` features for every video and cross-validates the linear
/// SVM on them.
pub fn run_experiment(records: &[VideoRecord], mode: FeatureMode, config: &ExperimentConfig) -> Result<CvReport> {
    let labels = labels_of(records)?;
    let x = extract_all(records, mode, &config.extract, config.cache.as_ref(), config.jobs)?;
    let ids: Vec<String> = records.iter().map(|r| r.video_id.clone()).collect();
    let mut report = cross_validate(
        &ids,
        &x,
        &labels,
        config.k,
        config.seed,
        &LinearSvm { params: config.svm },
    )?;
    report.feature_mode = Some(mode);
    report.config = Some(ExperimentSettings {
        extract: config.extract,
        svm: config.svm,
    });
    Ok(report)
}
