use anyhow::{anyhow, Result};
use clap::{Parser, Subcommand};
use std::path::PathBuf;
use vtu_cli::{
    config::TrainConfig, run_ablate, run_eval, run_generate, run_overfit_one, run_staple,
    run_train, AblateArgs, GenerateArgs,
};
use vtu_data::SplitTag;

#[derive(Parser)]
#[command(name = "vtu", version, about = "Temporal two-head segmentation pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a seeded synthetic dataset to disk.
    Generate {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 20)]
        sequences: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Square frame side in pixels; must be a multiple of 16.
        #[arg(long, default_value_t = 64)]
        size: usize,
        #[arg(long, default_value_t = 20)]
        length: usize,
        #[arg(long, default_value_t = 0.04)]
        noise_sigma: f64,
        #[arg(long, default_value_t = 0.5)]
        occlusion_prob: f64,
        #[arg(long, default_value_t = 0.35)]
        occlusion_frac: f64,
    },
    /// Fuse matching rater annotation directories into consensus masks.
    Staple {
        /// Two or more directories of <name>.pgm masks with identical names.
        #[arg(long, num_args = 2.., required = true)]
        raters: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a model on a stored dataset.
    Train {
        #[arg(long)]
        data: PathBuf,
        /// key=value config file; defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Continue from <out>/last.ckpt.
        #[arg(long)]
        resume: bool,
        /// Sanity mode: drive one training sample's loss below 0.05.
        #[arg(long)]
        overfit_one: bool,
    },
    /// Score a checkpoint on one dataset split.
    Eval {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, default_value = "test")]
        split: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train and evaluate across snippet lengths, reporting medians.
    AblateSnippet {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "1,3,5,7")]
        lengths: String,
        #[arg(long, default_value_t = 3)]
        seeds: usize,
        /// Concurrent training cells; 1 runs them in this process.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

fn load_config(path: &Option<PathBuf>) -> Result<TrainConfig> {
    match path {
        Some(p) => TrainConfig::from_file(p),
        None => Ok(TrainConfig::default()),
    }
}

fn real_main() -> Result<()> {
    match Cli::parse().command {
        Command::Generate {
            out,
            sequences,
            seed,
            size,
            length,
            noise_sigma,
            occlusion_prob,
            occlusion_frac,
        } => {
            let args = GenerateArgs {
                sequences,
                seed,
                size,
                length,
                noise_sigma,
                occlusion_prob,
                occlusion_frac,
            };
            run_generate(&out, &args)?;
            println!(
                "generated {sequences} sequences of {length} frames at {size}x{size} in {}",
                out.display()
            );
        }
        Command::Staple { raters, out } => {
            let fused = run_staple(&raters, &out)?;
            println!("fused {fused} masks from {} raters into {}", raters.len(), out.display());
        }
        Command::Train {
            data,
            config,
            out,
            resume,
            overfit_one,
        } => {
            let cfg = load_config(&config)?;
            if overfit_one {
                if resume {
                    return Err(anyhow!("--overfit-one does not support --resume"));
                }
                run_overfit_one(&data, &cfg, &out)?;
            } else {
                let outcome = run_train(&data, &cfg, &out, resume)?;
                println!(
                    "trained {} epochs: best val loss {:.6}, val DSC bolus {:.4} pharynx {:.4}",
                    outcome.epochs_run,
                    outcome.best_val,
                    outcome.final_val_dsc_bolus,
                    outcome.final_val_dsc_pharynx
                );
            }
        }
        Command::Eval {
            data,
            checkpoint,
            split,
            out,
        } => {
            let split = SplitTag::parse(&split).map_err(|e| anyhow!("{e}"))?;
            let report = run_eval(&data, &checkpoint, split, &out)?;
            for head in &report.per_head {
                let fmt = |v: Option<f64>| {
                    v.map(|x| format!("{x:.4}")).unwrap_or_else(|| "n/a".into())
                };
                println!(
                    "{}: frames {} dsc {:.4} hd95 {} asd {} sens {:.4} spec {:.4}",
                    head.head,
                    head.frames,
                    head.mean_dsc,
                    fmt(head.mean_hd95),
                    fmt(head.mean_asd),
                    head.mean_sensitivity,
                    head.mean_specificity
                );
            }
        }
        Command::AblateSnippet {
            data,
            config,
            lengths,
            seeds,
            jobs,
            out,
        } => {
            let cfg = load_config(&config)?;
            let lengths: Vec<usize> = lengths
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse::<usize>()
                        .map_err(|e| anyhow!("bad length {s}: {e}"))
                })
                .collect::<Result<_>>()?;
            let args = AblateArgs {
                lengths,
                seeds,
                jobs,
            };
            let table = run_ablate(&data, &cfg, &out, &args)?;
            for row in &table.rows {
                println!(
                    "t={}: median DSC bolus {:.4} pharynx {:.4} mean {:.4}",
                    row.snippet_len,
                    row.median_dsc_bolus,
                    row.median_dsc_pharynx,
                    row.median_dsc_mean
                );
            }
        }
    }
    Ok(())
}

fn main() {
    if let Err(e) = real_main() {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
