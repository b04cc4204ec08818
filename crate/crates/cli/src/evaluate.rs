//! Evaluation command: score a trained model (or any predictor) frame by
//! frame on one dataset split, writing a metrics CSV and agreement overlays.

use crate::checkpoint::Checkpoint;
use crate::manifest::write_run_manifest;
use anyhow::{bail, Context, Result};
use std::path::Path;
use vtu_core::io::write_gray_pgm;
use vtu_core::{Mask, Tensor};
use vtu_data::{load_dataset, snippet_at, SequenceData, Snippet, SplitTag};
use vtu_eval::{frame_metrics, FrameMetrics, MetricReport};

pub const METRICS_CSV: &str = "metrics.csv";
pub const OVERLAY_DIR: &str = "overlays";

/// Probability maps for the two heads on one window's center frame.
pub struct Prediction {
    pub bolus: Tensor<f32>,
    pub pharynx: Tensor<f32>,
}

/// Grayscale agreement image: true positive 255, false positive 170,
/// false negative 85, background 0.
fn overlay_pixels(pred: &Mask, target: &Mask) -> Vec<f32> {
    pred.data
        .iter()
        .zip(&target.data)
        .map(|(&p, &t)| match (p, t) {
            (true, true) => 1.0,
            (true, false) => 2.0 / 3.0,
            (false, true) => 1.0 / 3.0,
            (false, false) => 0.0,
        })
        .collect()
}

/// Run a predictor over every frame of the given sequences and score both
/// heads, writing `metrics.csv` and one overlay PGM per frame per head.
pub fn evaluate_sequences(
    sequences: &[&SequenceData],
    snippet_len: usize,
    out_dir: &Path,
    mut predict: impl FnMut(&Snippet) -> Result<Prediction>,
) -> Result<MetricReport> {
    if sequences.is_empty() {
        bail!("no sequences to evaluate");
    }
    let overlay_dir = out_dir.join(OVERLAY_DIR);
    std::fs::create_dir_all(&overlay_dir)
        .with_context(|| format!("creating {}", overlay_dir.display()))?;

    let mut rows: Vec<FrameMetrics> = Vec::new();
    for seq in sequences {
        for center in 0..seq.frames.len() {
            let snippet = snippet_at(&seq.frames, &seq.masks, snippet_len, center)?;
            let pred = predict(&snippet)?;
            let frame_id = format!("{}/{center:03}", seq.id);
            for (head, probs, target) in [
                ("bolus", &pred.bolus, &snippet.target.bolus),
                ("pharynx", &pred.pharynx, &snippet.target.pharynx),
            ] {
                let mask = Mask::from_probabilities(probs, 0.5);
                rows.push(frame_metrics(&frame_id, head, &mask, target)?);
                let name = format!("{}_{center:03}_{head}.pgm", seq.id);
                write_gray_pgm(
                    &overlay_dir.join(name),
                    mask.width,
                    mask.height,
                    &overlay_pixels(&mask, target),
                )?;
            }
        }
    }
    let report = MetricReport::from_frames(rows);
    report.write_csv(&out_dir.join(METRICS_CSV))?;
    Ok(report)
}

/// CLI entry: evaluate a checkpoint on one split of a stored dataset.
pub fn run_eval(
    data_root: &Path,
    checkpoint_path: &Path,
    split: SplitTag,
    out_dir: &Path,
) -> Result<MetricReport> {
    let dataset = load_dataset(data_root)
        .with_context(|| format!("loading dataset {}", data_root.display()))?;
    let ckpt = Checkpoint::load(checkpoint_path)?;
    if ckpt.img_size != dataset.template.frame_size {
        bail!(
            "checkpoint was trained at {}px, dataset frames are {}px",
            ckpt.img_size,
            dataset.template.frame_size
        );
    }
    let model = ckpt.model()?;
    let sequences = dataset.split(split);
    if sequences.is_empty() {
        bail!("split {} is empty", split.as_str());
    }

    std::fs::create_dir_all(out_dir)
        .with_context(|| format!("creating {}", out_dir.display()))?;
    write_run_manifest(
        out_dir,
        "eval",
        &[
            ("data", data_root.display().to_string()),
            ("checkpoint", checkpoint_path.display().to_string()),
            ("split", split.as_str().to_string()),
        ],
        Some(&ckpt.config.echo()),
    )?;

    let report = evaluate_sequences(
        &sequences,
        ckpt.config.snippet_len,
        out_dir,
        |snippet| {
            let (bolus, pharynx) = model.predict(&snippet.stack)?;
            Ok(Prediction { bolus, pharynx })
        },
    )?;
    Ok(report)
}
