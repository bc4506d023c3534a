//! Command-line front end of the `smiledyn` binary.
//!
//! Every command writes only under `--out`. Feature blocks are cached in
//! `<out>/cache` unless `SMILEDYN_CACHE` names another directory.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::data::{format_sig9, load_landmarks, load_manifest, save_landmarks, Label, Layout, VideoRecord};
use crate::dmarker::DmarkerConfig;
use crate::eval::{confusion, labels_of, run_experiment, CvReport, ExperimentConfig};
use crate::features::{extract_all, ExtractConfig, FeatureCache, FeatureMode};
use crate::flowfeat::{ComponentSelect, FlowFeatureConfig};
use crate::normalize::normalize_sequence;
use crate::optflow::FlowParams;
use crate::svm::{self, SvmParams, TrainedModel};
use crate::synth::{self, Preset, SynthParams};

pub const CACHE_ENV: &str = "SMILEDYN_CACHE";

#[derive(Debug, Parser)]
#[command(name = "smiledyn", version, about = "Spontaneous versus posed smile classification")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic labelled corpus.
    Synth(SynthArgs),
    /// Write head-pose normalized landmarks as `<video_id>.norm.csv`.
    Normalize(NormalizeArgs),
    /// Extract one feature CSV row per video.
    Extract(ExtractArgs),
    /// Train a linear SVM on every labelled video.
    Train(TrainArgs),
    /// Apply a trained model to a manifest.
    Evaluate(EvaluateArgs),
    /// k-fold cross-validation of one feature mode.
    Cv(CvArgs),
    /// Cross-validate several feature modes and tabulate them.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value = "easy")]
    pub preset: Preset,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub n_per_class: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ManifestArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long, default_value = "smiledyn-out")]
    pub out: PathBuf,
    /// Extraction worker threads; 0 uses one per core.
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct PipelineArgs {
    /// Data-term weight of the optical flow, on the unit intensity scale.
    #[arg(long, default_value_t = FlowParams::default().beta)]
    pub beta: f64,
    #[arg(long, default_value_t = FlowParams::default().pyramid_levels)]
    pub levels: usize,
    /// Smoothing window of the landmark signals, in frames (odd).
    #[arg(long, default_value_t = DmarkerConfig::default().smoothing_window)]
    pub window: usize,
}

impl PipelineArgs {
    fn extract_config(&self) -> anyhow::Result<ExtractConfig> {
        let flow = FlowParams {
            beta: self.beta,
            pyramid_levels: self.levels,
            ..FlowParams::default()
        };
        flow.validate()?;
        if self.window.is_multiple_of(2) {
            bail!("--window must be odd, got {}", self.window);
        }
        Ok(ExtractConfig {
            dmarker: DmarkerConfig {
                smoothing_window: self.window,
            },
            flow: FlowFeatureConfig {
                flow,
                ..FlowFeatureConfig::default()
            },
        })
    }
}

#[derive(Debug, Args)]
pub struct NormalizeArgs {
    #[command(flatten)]
    pub io: ManifestArgs,
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    #[command(flatten)]
    pub io: ManifestArgs,
    /// A feature mode, or `dmarker` / `flow` for the full blocks.
    #[arg(long)]
    pub features: String,
    /// Flow components kept by `--features flow`.
    #[arg(long, default_value = "xy")]
    pub components: ComponentSelect,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub io: ManifestArgs,
    #[arg(long)]
    pub features: FeatureMode,
    #[arg(long = "C", default_value_t = 1.0)]
    pub c: f64,
    #[arg(long)]
    pub seed: u64,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub io: ManifestArgs,
    #[arg(long)]
    pub model: PathBuf,
    /// Extraction parameters must match those used for training.
    #[command(flatten)]
    pub pipeline: PipelineArgs,
}

#[derive(Debug, Args)]
pub struct CvArgs {
    #[command(flatten)]
    pub io: ManifestArgs,
    #[arg(long)]
    pub features: FeatureMode,
    #[arg(long, default_value_t = 5)]
    pub k: usize,
    #[arg(long)]
    pub seed: u64,
    #[arg(long = "C", default_value_t = 1.0)]
    pub c: f64,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[command(flatten)]
    pub io: ManifestArgs,
    /// Comma-separated feature modes; all seven by default.
    #[arg(long, value_delimiter = ',')]
    pub features: Vec<FeatureMode>,
    #[arg(long, default_value_t = 5)]
    pub k: usize,
    #[arg(long)]
    pub seed: u64,
    #[arg(long = "C", default_value_t = 1.0)]
    pub c: f64,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
}

/// Parses `argv`, runs the command and maps the outcome to an exit code:
/// 0 on success, 1 on pipeline errors, 2 on usage errors.
pub fn main() -> ExitCode {
    run(std::env::args_os())
}

pub fn run<I, T>(argv: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(command: Command) -> anyhow::Result<()> {
    match command {
        Command::Synth(a) => cmd_synth(a),
        Command::Normalize(a) => cmd_normalize(a),
        Command::Extract(a) => cmd_extract(a),
        Command::Train(a) => cmd_train(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Cv(a) => cmd_cv(a),
        Command::Report(a) => cmd_report(a),
    }
}

fn create_out(out: &Path) -> anyhow::Result<()> {
    fs::create_dir_all(out).with_context(|| format!("cannot create output directory {}", out.display()))
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> anyhow::Result<()> {
    fs::write(path, contents).with_context(|| format!("cannot write {}", path.display()))
}

/// Loads the manifest and checks that every referenced path exists.
fn load_checked(manifest: &Path) -> anyhow::Result<Vec<VideoRecord>> {
    let records = load_manifest(manifest)?;
    for r in &records {
        if !r.landmarks_path.is_file() {
            bail!(
                "video `{}` (validate): landmarks file {} not found",
                r.video_id,
                r.landmarks_path.display()
            );
        }
        if !r.frames_dir.is_dir() {
            bail!(
                "video `{}` (validate): frames directory {} not found",
                r.video_id,
                r.frames_dir.display()
            );
        }
    }
    if records.is_empty() {
        bail!("{}: manifest lists no videos", manifest.display());
    }
    Ok(records)
}

fn cache_for(out: &Path) -> FeatureCache {
    match std::env::var_os(CACHE_ENV) {
        Some(dir) if !dir.is_empty() => FeatureCache::new(PathBuf::from(dir)),
        _ => FeatureCache::new(out.join("cache")),
    }
}

/// Records the effective settings of a run next to its outputs.
fn save_run_config(out: &Path, command: &str, settings: impl Serialize) -> anyhow::Result<()> {
    let doc = serde_json::json!({ "command": command, "settings": settings });
    write(
        &out.join(format!("{command}_config.json")),
        serde_json::to_string_pretty(&doc)? + "\n",
    )
}

fn mode_file_stem(mode: FeatureMode) -> String {
    mode.as_str().replace('+', "_")
}

fn cmd_synth(a: SynthArgs) -> anyhow::Result<()> {
    let mut params = SynthParams::preset(a.preset, a.seed);
    if let Some(n) = a.n_per_class {
        params.n_per_class = n;
    }
    create_out(&a.out)?;
    let corpus = synth::generate(&params, &a.out)?;
    println!(
        "wrote {} videos; manifest {}",
        corpus.records.len(),
        corpus.manifest_path.display()
    );
    save_run_config(&a.out, "synth", params)
}

fn cmd_normalize(a: NormalizeArgs) -> anyhow::Result<()> {
    let records = load_checked(&a.io.manifest)?;
    let dir = a.io.out.join("normalized");
    create_out(&dir)?;
    for r in &records {
        let track = load_landmarks(&r.landmarks_path).map_err(|e| e.in_video(&r.video_id, "load"))?;
        let frames = normalize_sequence(&track)
            .and_then(|seq| {
                seq.iter()
                    .map(|f| f.to_landmark_frame(track.dimensionality))
                    .collect::<crate::Result<Vec<_>>>()
            })
            .map_err(|e| e.in_video(&r.video_id, "normalize"))?;
        save_landmarks(dir.join(format!("{}.norm.csv", r.video_id)), &frames)?;
    }
    println!("normalized {} videos into {}", records.len(), dir.display());
    Ok(())
}

fn parse_extract_mode(features: &str, components: ComponentSelect) -> anyhow::Result<FeatureMode> {
    Ok(match features.trim().to_ascii_lowercase().as_str() {
        "dmarker" => FeatureMode::EyesLips,
        "flow" => match components {
            ComponentSelect::X => FeatureMode::FlowX,
            ComponentSelect::Y => FeatureMode::FlowY,
            ComponentSelect::XY => FeatureMode::FlowXY,
        },
        other => other.parse()?,
    })
}

fn cmd_extract(a: ExtractArgs) -> anyhow::Result<()> {
    let mode = parse_extract_mode(&a.features, a.components)?;
    let config = a.pipeline.extract_config()?;
    let records = load_checked(&a.io.manifest)?;
    create_out(&a.io.out)?;
    let vectors = extract_all(&records, mode, &config, Some(&cache_for(&a.io.out)), a.io.jobs)?;

    let mut csv = String::from("video_id,label");
    for i in 0..mode.layout().len() {
        csv.push_str(&format!(",f{i}"));
    }
    csv.push('\n');
    for (r, v) in records.iter().zip(&vectors) {
        csv.push_str(&r.video_id);
        csv.push(',');
        csv.push_str(r.label.map_or("", Label::as_str));
        for x in v.values() {
            csv.push(',');
            csv.push_str(&format_sig9(*x));
        }
        csv.push('\n');
    }
    let path = a.io.out.join(format!("features_{}.csv", mode_file_stem(mode)));
    write(&path, csv)?;
    println!(
        "wrote {} rows of {} to {}",
        vectors.len(),
        mode.layout(),
        path.display()
    );
    save_run_config(
        &a.io.out,
        "extract",
        serde_json::json!({ "features": mode, "extract": config }),
    )
}

fn cmd_train(a: TrainArgs) -> anyhow::Result<()> {
    let config = a.pipeline.extract_config()?;
    let records = load_checked(&a.io.manifest)?;
    let labels = labels_of(&records)?;
    create_out(&a.io.out)?;
    let x = extract_all(&records, a.features, &config, Some(&cache_for(&a.io.out)), a.io.jobs)?;
    let params = SvmParams {
        c: a.c,
        ..SvmParams::default()
    };
    let mut model = svm::train(&x, &labels, &params)?;
    model.metadata.seed = Some(a.seed);
    let path = a.io.out.join("model.json");
    model.save(&path)?;
    println!(
        "trained on {} videos ({}); model {}",
        x.len(),
        model.layout_id,
        path.display()
    );
    save_run_config(
        &a.io.out,
        "train",
        serde_json::json!({ "features": a.features, "extract": config, "svm": params }),
    )
}

fn mode_for_layout(layout: Layout) -> FeatureMode {
    FeatureMode::ALL
        .into_iter()
        .find(|m| m.layout() == layout)
        .expect("every layout has a mode")
}

fn cmd_evaluate(a: EvaluateArgs) -> anyhow::Result<()> {
    let config = a.pipeline.extract_config()?;
    let model = TrainedModel::load(&a.model)?;
    let mode = mode_for_layout(model.layout_id);
    let records = load_checked(&a.io.manifest)?;
    create_out(&a.io.out)?;
    let x = extract_all(&records, mode, &config, Some(&cache_for(&a.io.out)), a.io.jobs)?;

    let mut csv = String::from("video_id,label,predicted,score\n");
    let mut pairs = Vec::new();
    for (r, v) in records.iter().zip(&x) {
        let (pred, score) = svm::predict(&model, v).map_err(|e| e.in_video(&r.video_id, "predict"))?;
        csv.push_str(&format!(
            "{},{},{},{}\n",
            r.video_id,
            r.label.map_or("", Label::as_str),
            pred,
            format_sig9(score)
        ));
        if let Some(l) = r.label {
            pairs.push((pred, l));
        }
    }
    write(&a.io.out.join("predictions.csv"), csv)?;
    let (preds, labels): (Vec<Label>, Vec<Label>) = pairs.into_iter().unzip();
    match confusion(&preds, &labels) {
        Ok(cm) => {
            print!("{}", cm.render(&format!("{} (trained model)", mode.title())));
            write(
                &a.io.out.join("evaluation.json"),
                serde_json::to_string_pretty(&cm)? + "\n",
            )?;
        }
        Err(_) => println!(
            "wrote predictions for {} videos (confusion needs both labelled classes)",
            records.len()
        ),
    }
    Ok(())
}

fn experiment_config(
    io: &ManifestArgs,
    pipeline: &PipelineArgs,
    k: usize,
    seed: u64,
    c: f64,
) -> anyhow::Result<ExperimentConfig> {
    Ok(ExperimentConfig {
        extract: pipeline.extract_config()?,
        svm: SvmParams {
            c,
            ..SvmParams::default()
        },
        k,
        seed,
        jobs: io.jobs,
        cache: Some(cache_for(&io.out)),
    })
}

fn save_report(out: &Path, report: &CvReport) -> anyhow::Result<PathBuf> {
    let stem = format!(
        "cv_{}",
        mode_file_stem(report.feature_mode.expect("experiment reports name their mode"))
    );
    let path = out.join(format!("{stem}.json"));
    report.save(&path)?;
    write(&out.join(format!("{stem}.txt")), report.render())?;
    Ok(path)
}

fn cmd_cv(a: CvArgs) -> anyhow::Result<()> {
    let config = experiment_config(&a.io, &a.pipeline, a.k, a.seed, a.c)?;
    let records = load_checked(&a.io.manifest)?;
    create_out(&a.io.out)?;
    let report = run_experiment(&records, a.features, &config)?;
    print!("{}", report.render());
    let path = save_report(&a.io.out, &report)?;
    println!("report {}", path.display());
    Ok(())
}

fn cmd_report(a: ReportArgs) -> anyhow::Result<()> {
    let config = experiment_config(&a.io, &a.pipeline, a.k, a.seed, a.c)?;
    let modes = if a.features.is_empty() {
        FeatureMode::ALL.to_vec()
    } else {
        a.features.clone()
    };
    let records = load_checked(&a.io.manifest)?;
    create_out(&a.io.out)?;
    let mut text = String::new();
    let mut summary = Vec::new();
    for mode in modes {
        let report = run_experiment(&records, mode, &config)?;
        save_report(&a.io.out, &report)?;
        text.push_str(&report.render());
        text.push('\n');
        summary.push(serde_json::json!({
            "feature_mode": mode,
            "mean_accuracy": report.mean_accuracy,
            "pooled_accuracy": report.confusion.accuracy,
            "confusion_percent": report.confusion.percent,
        }));
    }
    print!("{text}");
    write(&a.io.out.join("report.txt"), &text)?;
    write(
        &a.io.out.join("report.json"),
        serde_json::to_string_pretty(&summary)? + "\n",
    )?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }

    #[test]
    fn parses_spec_style_invocations() {
        let cli = Cli::try_parse_from([
            "smiledyn",
            "cv",
            "--manifest",
            "m.csv",
            "--features",
            "eyes+lips",
            "--seed",
            "7",
            "--C",
            "0.5",
        ])
        .unwrap();
        match cli.command {
            Command::Cv(a) => {
                assert_eq!(a.features, FeatureMode::EyesLips);
                assert_eq!((a.k, a.seed, a.c), (5, 7, 0.5));
                assert_eq!(a.io.out, PathBuf::from("smiledyn-out"));
            }
            other => panic!("{other:?}"),
        }
        let cli = Cli::try_parse_from([
            "smiledyn",
            "report",
            "--manifest",
            "m",
            "--features",
            "eyes,fused",
            "--seed",
            "1",
        ])
        .unwrap();
        assert!(matches!(cli.command, Command::Report(a) if a.features == [FeatureMode::Eyes, FeatureMode::Fused]));
    }

    #[test]
    fn seed_is_mandatory() {
        assert!(Cli::try_parse_from(["smiledyn", "synth", "--out", "d"]).is_err());
        assert!(Cli::try_parse_from(["smiledyn", "cv", "--manifest", "m", "--features", "fused"]).is_err());
    }

    #[test]
    fn extract_modes() {
        assert_eq!(
            parse_extract_mode("dmarker", ComponentSelect::XY).unwrap(),
            FeatureMode::EyesLips
        );
        assert_eq!(
            parse_extract_mode("flow", ComponentSelect::Y).unwrap(),
            FeatureMode::FlowY
        );
        assert_eq!(
            parse_extract_mode("lips", ComponentSelect::XY).unwrap(),
            FeatureMode::Lips
        );
        assert!(parse_extract_mode("optical", ComponentSelect::XY).is_err());
    }
}
