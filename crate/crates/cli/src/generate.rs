//! Dataset generation command: build a seeded synthetic dataset on disk.

use crate::manifest::write_run_manifest;
use anyhow::{bail, Context, Result};
use std::path::Path;
use vtu_data::{generate_dataset, save_dataset, SceneSpec};

/// All generation knobs, mirrored by the CLI flags.
#[derive(Debug, Clone)]
pub struct GenerateArgs {
    pub sequences: usize,
    pub seed: u64,
    pub size: usize,
    pub length: usize,
    pub noise_sigma: f64,
    pub occlusion_prob: f64,
    pub occlusion_frac: f64,
}

impl Default for GenerateArgs {
    fn default() -> Self {
        let spec = SceneSpec::default();
        Self {
            sequences: 20,
            seed: 0,
            size: spec.frame_size,
            length: spec.sequence_length,
            noise_sigma: spec.noise_sigma,
            occlusion_prob: spec.occlusion_prob,
            occlusion_frac: spec.occlusion_frac,
        }
    }
}

pub fn run_generate(out: &Path, args: &GenerateArgs) -> Result<()> {
    if args.size % 16 != 0 {
        bail!("frame size {} is not a multiple of 16", args.size);
    }
    if args.sequences == 0 {
        bail!("need at least 1 sequence");
    }
    let template = SceneSpec {
        seed: args.seed,
        frame_size: args.size,
        sequence_length: args.length,
        noise_sigma: args.noise_sigma,
        occlusion_prob: args.occlusion_prob,
        occlusion_frac: args.occlusion_frac,
    };
    let dataset = generate_dataset(args.seed, args.sequences, &template)?;
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    save_dataset(out, &dataset)?;
    write_run_manifest(
        out,
        "generate",
        &[
            ("sequences", args.sequences.to_string()),
            ("seed", args.seed.to_string()),
            ("size", args.size.to_string()),
            ("length", args.length.to_string()),
            ("noise_sigma", args.noise_sigma.to_string()),
            ("occlusion_prob", args.occlusion_prob.to_string()),
            ("occlusion_frac", args.occlusion_frac.to_string()),
        ],
        None,
    )?;
    Ok(())
}
