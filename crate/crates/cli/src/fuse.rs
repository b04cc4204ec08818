//! Multi-rater fusion command: run the EM consensus over matching mask
//! files from several annotation directories, writing fused binary masks
//! and the per-pixel posterior maps.

use crate::manifest::write_run_manifest;
use anyhow::{bail, Context, Result};
use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use vtu_core::io::{read_mask_pgm, write_mask_pgm, write_vtt1};
use vtu_core::{Mask, Tensor};
use vtu_eval::{staple, StapleOptions};

fn pgm_names(dir: &Path) -> Result<BTreeSet<String>> {
    let mut names = BTreeSet::new();
    for entry in
        std::fs::read_dir(dir).with_context(|| format!("reading rater dir {}", dir.display()))?
    {
        let entry = entry?;
        let name = entry.file_name().to_string_lossy().to_string();
        if name.ends_with(".pgm") {
            names.insert(name);
        }
    }
    Ok(names)
}

/// Fuse every identically named mask across the rater directories; returns
/// the number of fused files.
pub fn run_staple(rater_dirs: &[PathBuf], out_dir: &Path) -> Result<usize> {
    if rater_dirs.len() < 2 {
        bail!("need at least 2 rater directories, got {}", rater_dirs.len());
    }
    let names = pgm_names(&rater_dirs[0])?;
    if names.is_empty() {
        bail!("no .pgm masks in {}", rater_dirs[0].display());
    }
    for dir in &rater_dirs[1..] {
        let other = pgm_names(dir)?;
        if other != names {
            bail!(
                "rater {} holds a different mask set than {}",
                dir.display(),
                rater_dirs[0].display()
            );
        }
    }

    std::fs::create_dir_all(out_dir)
        .with_context(|| format!("creating {}", out_dir.display()))?;
    write_run_manifest(
        out_dir,
        "staple",
        &rater_dirs
            .iter()
            .enumerate()
            .map(|(i, d)| ("rater", format!("{i}={}", d.display())))
            .collect::<Vec<_>>(),
        None,
    )?;

    let opts = StapleOptions::default();
    for name in &names {
        let masks: Vec<Mask> = rater_dirs
            .iter()
            .map(|dir| Ok(read_mask_pgm(&dir.join(name))?))
            .collect::<Result<_>>()?;
        let refs: Vec<&Mask> = masks.iter().collect();
        let fused = staple(&refs, &opts).with_context(|| format!("fusing {name}"))?;

        write_mask_pgm(&out_dir.join(name), &fused.fused)?;
        let (w, h) = (fused.fused.width, fused.fused.height);
        let posterior = Tensor::new(
            vec![h, w],
            fused.posterior.iter().map(|&v| v as f32).collect(),
        )
        .expect("posterior matches mask extent");
        let prob_name = format!("{}.vtt1", name.trim_end_matches(".pgm"));
        write_vtt1(&out_dir.join(prob_name), &posterior)?;
    }
    Ok(names.len())
}
