//! Training loop: Adam on the mixture loss over sampled snippet windows,
//! with per-epoch validation, plateau-triggered learning-rate halving,
//! a CSV log, and deterministic resume from the last checkpoint.

use crate::checkpoint::Checkpoint;
use crate::config::TrainConfig;
use crate::manifest::write_run_manifest;
use anyhow::{anyhow, bail, Context, Result};
use rand::seq::SliceRandom;
use rand::Rng;
use std::collections::HashMap;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use vtu_core::rng::{derive_seed, rng_for};
use vtu_core::{Mask, Tape, Tensor, VarId};
use vtu_data::{augment, load_dataset, snippet_at, Dataset, SequenceData, Snippet, SplitTag};
use vtu_eval::dsc;
use vtu_model::{mixture_loss, model_forward, LossWeights, ModelConfig};

const ADAM_B1: f64 = 0.9;
const ADAM_B2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;
pub const LAST_CKPT: &str = "last.ckpt";
pub const BEST_CKPT: &str = "best.ckpt";
pub const TRAIN_LOG: &str = "train_log.csv";
const OVERFIT_LOG: &str = "overfit_log.csv";
pub const OVERFIT_STEPS: usize = 300;
pub const OVERFIT_TARGET: f64 = 0.05;

/// What a finished training run reports back.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub epochs_run: usize,
    pub best_val: f64,
    pub final_val_loss: f64,
    pub final_val_dsc_bolus: f64,
    pub final_val_dsc_pharynx: f64,
    pub best_path: PathBuf,
    pub log_path: PathBuf,
}

/// Mean validation scores of one epoch.
struct ValScores {
    loss: f64,
    dsc_bolus: f64,
    dsc_pharynx: f64,
}

/// One optimizer update from accumulated gradients, in 64-bit arithmetic on
/// 32-bit state so results are deterministic.
fn adam_step(ckpt: &mut Checkpoint, grads: &HashMap<String, Tensor<f32>>) -> Result<()> {
    ckpt.steps += 1;
    let bc1 = 1.0 - ADAM_B1.powi(ckpt.steps as i32);
    let bc2 = 1.0 - ADAM_B2.powi(ckpt.steps as i32);
    let lr = ckpt.lr;
    let Checkpoint {
        params,
        adam_m,
        adam_v,
        ..
    } = ckpt;
    for (name, value) in params.iter_mut() {
        let g = grads
            .get(name)
            .ok_or_else(|| anyhow!("no gradient for parameter {name}"))?;
        let m = adam_m.get_mut(name).expect("moment allocated at init");
        let v = adam_v.get_mut(name).expect("variance allocated at init");
        let (pd, gd) = (value.data_mut(), g.data());
        let (md, vd) = (m.data_mut(), v.data_mut());
        for i in 0..pd.len() {
            let gi = gd[i] as f64;
            let mi = ADAM_B1 * md[i] as f64 + (1.0 - ADAM_B1) * gi;
            let vi = ADAM_B2 * vd[i] as f64 + (1.0 - ADAM_B2) * gi * gi;
            md[i] = mi as f32;
            vd[i] = vi as f32;
            let step = lr * (mi / bc1) / ((vi / bc2).sqrt() + ADAM_EPS);
            pd[i] = (pd[i] as f64 - step) as f32;
        }
    }
    Ok(())
}

fn frame_vars(tape: &mut Tape<f32>, snippet: &Snippet) -> Vec<VarId> {
    snippet
        .stack
        .frames
        .iter()
        .map(|f| {
            let (h, w) = (f.shape()[0], f.shape()[1]);
            let shaped = f.reshaped(&[1, h, w]).expect("frame rank 2");
            tape.constant(shaped)
        })
        .collect()
}

fn target_vars(tape: &mut Tape<f32>, snippet: &Snippet) -> (VarId, VarId) {
    let b = tape.constant(snippet.target.bolus.to_tensor());
    let p = tape.constant(snippet.target.pharynx.to_tensor());
    (b, p)
}

/// Forward, loss, backward and update for one batch; returns the mean loss.
fn batch_step(
    ckpt: &mut Checkpoint,
    model_cfg: &ModelConfig,
    weights: &LossWeights,
    batch: &[Snippet],
) -> Result<f64> {
    let mut tape: Tape<f32> = Tape::new();
    let bound = ckpt.params.bind(&mut tape);
    let mut total: Option<VarId> = None;
    for snippet in batch {
        let frames = frame_vars(&mut tape, snippet);
        let out = model_forward(&mut tape, &bound, model_cfg, &frames)?;
        let (tb, tp) = target_vars(&mut tape, snippet);
        let loss = mixture_loss(&mut tape, (out.bolus, out.pharynx), (tb, tp), weights)?;
        total = Some(match total {
            Some(t) => tape.add(t, loss)?,
            None => loss,
        });
    }
    let total = total.ok_or_else(|| anyhow!("empty batch"))?;
    let mean = tape.affine(total, 1.0 / batch.len() as f64, 0.0);
    tape.backward(mean)?;
    let grads: HashMap<String, Tensor<f32>> = bound
        .iter()
        .map(|(n, id)| (n.to_string(), tape.grad_or_zeros(id)))
        .collect();
    let value = tape.value(mean).data()[0] as f64;
    adam_step(ckpt, &grads)?;
    Ok(value)
}

/// Forward-only loss and thresholded overlap on every `stride`-th frame of
/// the validation sequences.
fn validate(
    ckpt: &Checkpoint,
    model_cfg: &ModelConfig,
    weights: &LossWeights,
    val: &[&SequenceData],
    stride: usize,
) -> Result<ValScores> {
    let mut n = 0usize;
    let (mut loss_sum, mut db_sum, mut dp_sum) = (0.0, 0.0, 0.0);
    for seq in val {
        for center in (0..seq.frames.len()).step_by(stride) {
            let snippet = snippet_at(&seq.frames, &seq.masks, model_cfg.snippet_len, center)?;
            let mut tape: Tape<f32> = Tape::new();
            let bound = ckpt.params.bind_frozen(&mut tape);
            let frames = frame_vars(&mut tape, &snippet);
            let out = model_forward(&mut tape, &bound, model_cfg, &frames)?;
            let (tb, tp) = target_vars(&mut tape, &snippet);
            let loss = mixture_loss(&mut tape, (out.bolus, out.pharynx), (tb, tp), weights)?;
            loss_sum += tape.value(loss).data()[0] as f64;
            let pred_b = Mask::from_probabilities(tape.value(out.bolus), 0.5);
            let pred_p = Mask::from_probabilities(tape.value(out.pharynx), 0.5);
            db_sum += dsc(&pred_b, &snippet.target.bolus)?;
            dp_sum += dsc(&pred_p, &snippet.target.pharynx)?;
            n += 1;
        }
    }
    if n == 0 {
        bail!("validation split is empty");
    }
    let nf = n as f64;
    Ok(ValScores {
        loss: loss_sum / nf,
        dsc_bolus: db_sum / nf,
        dsc_pharynx: dp_sum / nf,
    })
}

/// The training samples of one epoch: window centers drawn per sequence,
/// shuffled, as (sequence index, center) pairs. Purely seed-derived so a
/// resumed run revisits identical batches.
fn epoch_samples(
    cfg: &TrainConfig,
    train: &[&SequenceData],
    epoch: usize,
) -> Vec<(usize, usize)> {
    let tag = epoch.to_string();
    let mut rng = rng_for(cfg.seed, &["epoch", &tag]);
    let mut samples = Vec::new();
    for (si, seq) in train.iter().enumerate() {
        for _ in 0..cfg.samples_per_sequence {
            samples.push((si, rng.random_range(0..seq.frames.len())));
        }
    }
    samples.shuffle(&mut rng);
    samples
}

fn open_log(path: &Path, append: bool, header: &[&str]) -> Result<csv::Writer<std::fs::File>> {
    let file = std::fs::OpenOptions::new()
        .create(true)
        .append(append)
        .write(true)
        .truncate(!append)
        .open(path)
        .with_context(|| format!("opening {}", path.display()))?;
    let mut w = csv::Writer::from_writer(file);
    if !append {
        w.write_record(header)?;
    }
    Ok(w)
}

const TRAIN_HEADER: [&str; 6] = [
    "epoch",
    "train_loss",
    "val_loss",
    "val_dsc_bolus",
    "val_dsc_pharynx",
    "lr",
];

fn load_training_data(data_root: &Path) -> Result<Dataset> {
    let dataset = load_dataset(data_root)
        .with_context(|| format!("loading dataset {}", data_root.display()))?;
    if dataset.template.frame_size % 16 != 0 {
        bail!(
            "dataset frame size {} is not a multiple of 16",
            dataset.template.frame_size
        );
    }
    Ok(dataset)
}

/// Full training command: fresh or resumed.
pub fn run_train(
    data_root: &Path,
    config: &TrainConfig,
    out_dir: &Path,
    resume: bool,
) -> Result<TrainOutcome> {
    let dataset = load_training_data(data_root)?;
    let train: Vec<&SequenceData> = dataset.split(SplitTag::Train);
    let val: Vec<&SequenceData> = dataset.split(SplitTag::Val);
    if train.is_empty() || val.is_empty() {
        bail!(
            "dataset needs nonempty train and val splits, got {} and {}",
            train.len(),
            val.len()
        );
    }

    std::fs::create_dir_all(out_dir)
        .with_context(|| format!("creating {}", out_dir.display()))?;
    let last_path = out_dir.join(LAST_CKPT);
    let best_path = out_dir.join(BEST_CKPT);
    let log_path = out_dir.join(TRAIN_LOG);

    let mut ckpt = if resume {
        let mut ckpt = Checkpoint::load(&last_path)
            .with_context(|| format!("resuming from {}", last_path.display()))?;
        // A longer epoch budget is the one legitimate change on resume;
        // anything else would silently alter what the checkpoint means.
        let mut stored = ckpt.config.clone();
        stored.max_epochs = config.max_epochs;
        if &stored != config {
            bail!("checkpoint config differs from the provided config");
        }
        ckpt.config = stored;
        ckpt
    } else {
        Checkpoint::fresh(config, dataset.template.frame_size)?
    };
    let model_cfg = config.model_config(dataset.template.frame_size)?;

    write_run_manifest(
        out_dir,
        "train",
        &[("data", data_root.display().to_string())],
        Some(&config.echo()),
    )?;

    let start_epoch = ckpt.epoch;
    if start_epoch >= config.max_epochs {
        bail!(
            "checkpoint already at epoch {start_epoch}, max_epochs is {}",
            config.max_epochs
        );
    }
    let mut log = open_log(&log_path, resume && log_path.exists(), &TRAIN_HEADER)?;

    let mut last_scores = None;
    for epoch in start_epoch..config.max_epochs {
        let samples = epoch_samples(config, &train, epoch);
        let lr_used = ckpt.lr;
        let mut loss_sum = 0.0;
        let mut batches = 0usize;
        for chunk in samples.chunks(config.batch_size) {
            if chunk.len() < config.batch_size {
                break;
            }
            let batch: Vec<Snippet> = chunk
                .iter()
                .enumerate()
                .map(|(bi, (si, center))| {
                    let seq = train[*si];
                    let snippet =
                        snippet_at(&seq.frames, &seq.masks, config.snippet_len, *center)?;
                    if config.augment {
                        let tag_e = epoch.to_string();
                        let tag_i = (batches * config.batch_size + bi).to_string();
                        let aug_seed = derive_seed(config.seed, &["aug", &tag_e, &tag_i]);
                        Ok(augment(&snippet, aug_seed))
                    } else {
                        Ok(snippet)
                    }
                })
                .collect::<Result<_>>()?;
            loss_sum += batch_step(&mut ckpt, &model_cfg, &config.weights, &batch)?;
            batches += 1;
        }
        if batches == 0 {
            bail!(
                "no full batches: {} samples per epoch with batch_size {}",
                samples.len(),
                config.batch_size
            );
        }
        let train_loss = loss_sum / batches as f64;

        let scores = validate(&ckpt, &model_cfg, &config.weights, &val, config.val_stride)?;
        ckpt.epoch = epoch + 1;

        let improved = ckpt.best_val - scores.loss >= config.min_delta;
        if improved {
            ckpt.best_val = scores.loss;
            ckpt.plateau_streak = 0;
            ckpt.save(&best_path)?;
        } else {
            ckpt.plateau_streak += 1;
            if ckpt.plateau_streak as usize >= config.patience {
                ckpt.lr *= 0.5;
                ckpt.plateau_streak = 0;
            }
        }
        ckpt.save(&last_path)?;

        log.write_record([
            (epoch + 1).to_string(),
            train_loss.to_string(),
            scores.loss.to_string(),
            scores.dsc_bolus.to_string(),
            scores.dsc_pharynx.to_string(),
            lr_used.to_string(),
        ])?;
        log.flush()?;
        last_scores = Some(scores);
    }

    let scores = last_scores.expect("at least one epoch ran");
    Ok(TrainOutcome {
        epochs_run: ckpt.epoch,
        best_val: ckpt.best_val,
        final_val_loss: scores.loss,
        final_val_dsc_bolus: scores.dsc_bolus,
        final_val_dsc_pharynx: scores.dsc_pharynx,
        best_path,
        log_path,
    })
}

/// Sanity mode: drive the loss down on one fixed training window. Errors if
/// the mixture loss has not dropped below the target within the step budget.
pub fn run_overfit_one(data_root: &Path, config: &TrainConfig, out_dir: &Path) -> Result<f64> {
    let dataset = load_training_data(data_root)?;
    let train = dataset.split(SplitTag::Train);
    let seq = *train.first().ok_or_else(|| anyhow!("train split is empty"))?;
    let center = seq.frames.len() / 2;
    let snippet = snippet_at(&seq.frames, &seq.masks, config.snippet_len, center)?;

    std::fs::create_dir_all(out_dir)
        .with_context(|| format!("creating {}", out_dir.display()))?;
    write_run_manifest(
        out_dir,
        "train --overfit-one",
        &[("data", data_root.display().to_string())],
        Some(&config.echo()),
    )?;

    let mut ckpt = Checkpoint::fresh(config, dataset.template.frame_size)?;
    let model_cfg = config.model_config(dataset.template.frame_size)?;
    let mut log = open_log(&out_dir.join(OVERFIT_LOG), false, &["step", "loss"])?;

    let batch = vec![snippet];
    for step in 1..=OVERFIT_STEPS {
        let loss = batch_step(&mut ckpt, &model_cfg, &config.weights, &batch)?;
        log.write_record([step.to_string(), loss.to_string()])?;
        if loss < OVERFIT_TARGET {
            log.flush()?;
            let mut out = std::io::stdout().lock();
            let _ = writeln!(out, "overfit reached loss {loss:.6} at step {step}");
            return Ok(loss);
        }
    }
    bail!("single-sample loss still above {OVERFIT_TARGET} after {OVERFIT_STEPS} steps")
}
