//! Snippet-length ablation: train one model per (length, seed) cell, score
//! each on the test split, and tabulate per-length medians. Cells are pure
//! functions of their config, so they can run in this process or as
//! independent child processes without changing any output byte.

use crate::config::TrainConfig;
use crate::evaluate::run_eval;
use crate::manifest::write_run_manifest;
use crate::train::{run_train, BEST_CKPT};
use anyhow::{bail, Context, Result};
use std::path::{Path, PathBuf};
use vtu_data::SplitTag;

#[derive(Debug, Clone)]
pub struct AblateArgs {
    pub lengths: Vec<usize>,
    pub seeds: usize,
    /// Training cells run in this process when 1, else as up to `jobs`
    /// concurrent child processes.
    pub jobs: usize,
}

#[derive(Debug, Clone)]
pub struct AblateCell {
    pub snippet_len: usize,
    pub seed_index: usize,
    pub dsc_bolus: f64,
    pub dsc_pharynx: f64,
}

#[derive(Debug, Clone)]
pub struct AblateRow {
    pub snippet_len: usize,
    pub median_dsc_bolus: f64,
    pub median_dsc_pharynx: f64,
    /// Median over seeds of the per-run mean of the two heads.
    pub median_dsc_mean: f64,
}

#[derive(Debug, Clone)]
pub struct AblateTable {
    pub cells: Vec<AblateCell>,
    pub rows: Vec<AblateRow>,
}

pub const TABLE_CSV: &str = "table.csv";
pub const CELLS_CSV: &str = "cells.csv";
const CELL_CONFIG: &str = "cell.cfg";

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.total_cmp(b));
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

fn cell_dir(out_dir: &Path, len: usize, seed_index: usize) -> PathBuf {
    out_dir.join(format!("t{len}_seed{seed_index}"))
}

/// Write each cell's exact config next to its outputs; child processes
/// re-read it through the ordinary train path.
fn prepare_cells(
    base: &TrainConfig,
    out_dir: &Path,
    args: &AblateArgs,
) -> Result<Vec<(usize, usize, PathBuf)>> {
    let mut cells = Vec::new();
    for &len in &args.lengths {
        for s in 0..args.seeds {
            let dir = cell_dir(out_dir, len, s);
            std::fs::create_dir_all(&dir)
                .with_context(|| format!("creating {}", dir.display()))?;
            let cfg = base.cell(len, base.seed + s as u64);
            std::fs::write(dir.join(CELL_CONFIG), cfg.echo())?;
            cells.push((len, s, dir));
        }
    }
    Ok(cells)
}

fn train_cells_in_process(
    data_root: &Path,
    cells: &[(usize, usize, PathBuf)],
) -> Result<()> {
    for (_, _, dir) in cells {
        let cfg = TrainConfig::from_file(&dir.join(CELL_CONFIG))?;
        run_train(data_root, &cfg, dir, false)?;
    }
    Ok(())
}

/// Run cells as child `train` invocations of this same binary, at most
/// `jobs` at a time.
fn train_cells_in_children(
    data_root: &Path,
    cells: &[(usize, usize, PathBuf)],
    jobs: usize,
) -> Result<()> {
    let exe = std::env::current_exe().context("locating the running binary")?;
    let mut pending = cells.iter();
    let mut running: Vec<(PathBuf, std::process::Child)> = Vec::new();
    loop {
        while running.len() < jobs {
            let Some((_, _, dir)) = pending.next() else {
                break;
            };
            let child = std::process::Command::new(&exe)
                .arg("train")
                .arg("--data")
                .arg(data_root)
                .arg("--config")
                .arg(dir.join(CELL_CONFIG))
                .arg("--out")
                .arg(dir)
                .spawn()
                .with_context(|| format!("spawning training for {}", dir.display()))?;
            running.push((dir.clone(), child));
        }
        if running.is_empty() {
            return Ok(());
        }
        std::thread::sleep(std::time::Duration::from_millis(50));
        let mut i = 0;
        while i < running.len() {
            if let Some(status) = running[i].1.try_wait()? {
                let (dir, _) = running.remove(i);
                if !status.success() {
                    bail!("training in {} failed with {status}", dir.display());
                }
            } else {
                i += 1;
            }
        }
    }
}

pub fn run_ablate(
    data_root: &Path,
    base: &TrainConfig,
    out_dir: &Path,
    args: &AblateArgs,
) -> Result<AblateTable> {
    if args.lengths.is_empty() {
        bail!("need at least one snippet length");
    }
    if args.seeds == 0 {
        bail!("need at least one seed");
    }
    for &len in &args.lengths {
        if len == 0 || len % 2 == 0 {
            bail!("snippet lengths must be odd, got {len}");
        }
    }

    std::fs::create_dir_all(out_dir)
        .with_context(|| format!("creating {}", out_dir.display()))?;
    write_run_manifest(
        out_dir,
        "ablate-snippet",
        &[
            ("data", data_root.display().to_string()),
            (
                "lengths",
                args.lengths
                    .iter()
                    .map(|l| l.to_string())
                    .collect::<Vec<_>>()
                    .join(","),
            ),
            ("seeds", args.seeds.to_string()),
        ],
        Some(&base.echo()),
    )?;

    let cells = prepare_cells(base, out_dir, args)?;
    if args.jobs <= 1 {
        train_cells_in_process(data_root, &cells)?;
    } else {
        train_cells_in_children(data_root, &cells, args.jobs)?;
    }

    let mut scored = Vec::new();
    for (len, s, dir) in &cells {
        let report = run_eval(
            data_root,
            &dir.join(BEST_CKPT),
            SplitTag::Test,
            &dir.join("eval"),
        )?;
        let bolus = report
            .head_summary("bolus")
            .map(|h| h.mean_dsc)
            .unwrap_or(0.0);
        let pharynx = report
            .head_summary("pharynx")
            .map(|h| h.mean_dsc)
            .unwrap_or(0.0);
        scored.push(AblateCell {
            snippet_len: *len,
            seed_index: *s,
            dsc_bolus: bolus,
            dsc_pharynx: pharynx,
        });
    }

    let mut rows = Vec::new();
    for &len in &args.lengths {
        let of_len: Vec<&AblateCell> =
            scored.iter().filter(|c| c.snippet_len == len).collect();
        let mut b: Vec<f64> = of_len.iter().map(|c| c.dsc_bolus).collect();
        let mut p: Vec<f64> = of_len.iter().map(|c| c.dsc_pharynx).collect();
        let mut m: Vec<f64> = of_len
            .iter()
            .map(|c| 0.5 * (c.dsc_bolus + c.dsc_pharynx))
            .collect();
        rows.push(AblateRow {
            snippet_len: len,
            median_dsc_bolus: median(&mut b),
            median_dsc_pharynx: median(&mut p),
            median_dsc_mean: median(&mut m),
        });
    }

    let mut cw = csv::Writer::from_path(out_dir.join(CELLS_CSV))?;
    cw.write_record(["snippet_len", "seed_index", "dsc_bolus", "dsc_pharynx"])?;
    for c in &scored {
        cw.write_record([
            c.snippet_len.to_string(),
            c.seed_index.to_string(),
            c.dsc_bolus.to_string(),
            c.dsc_pharynx.to_string(),
        ])?;
    }
    cw.flush()?;

    let mut tw = csv::Writer::from_path(out_dir.join(TABLE_CSV))?;
    tw.write_record([
        "snippet_len",
        "median_dsc_bolus",
        "median_dsc_pharynx",
        "median_dsc_mean",
    ])?;
    for r in &rows {
        tw.write_record([
            r.snippet_len.to_string(),
            r.median_dsc_bolus.to_string(),
            r.median_dsc_pharynx.to_string(),
            r.median_dsc_mean.to_string(),
        ])?;
    }
    tw.flush()?;

    Ok(AblateTable {
        cells: scored,
        rows,
    })
}
