//! Training configuration: a strict UTF-8 key=value file covering the
//! optimizer, schedule, sampling, loss weights and model dimensions. Unknown
//! keys are rejected so typos fail loudly, and `echo()` round-trips through
//! the parser so checkpoints and run manifests can embed the exact config.

use anyhow::{anyhow, bail, Context, Result};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;
use vtu_model::{FinalUpsample, LossWeights, ModelConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    /// Initial learning rate; halves on validation plateau.
    pub lr: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Epochs without val-loss improvement before one halving.
    pub patience: usize,
    /// Smallest val-loss drop that counts as an improvement.
    pub min_delta: f64,
    pub seed: u64,
    pub snippet_len: usize,
    /// Window centers drawn per training sequence per epoch.
    pub samples_per_sequence: usize,
    /// Every n-th frame of each validation sequence is scored per epoch.
    pub val_stride: usize,
    /// Random rotation and flipping of training windows.
    pub augment: bool,
    pub weights: LossWeights,
    pub vit_dim: usize,
    pub vit_layers: usize,
    pub vit_heads: usize,
    pub vit_mlp: usize,
    pub stage_channels: [usize; 4],
    pub blocks_per_stage: [usize; 4],
    pub gn_groups: usize,
    pub final_upsample: FinalUpsample,
}

impl Default for TrainConfig {
    fn default() -> Self {
        let m = ModelConfig::default();
        Self {
            lr: 5e-4,
            batch_size: 2,
            max_epochs: 150,
            patience: 20,
            min_delta: 1e-4,
            seed: 0,
            snippet_len: m.snippet_len,
            samples_per_sequence: 4,
            val_stride: 4,
            augment: true,
            weights: LossWeights::default(),
            vit_dim: m.vit_dim,
            vit_layers: m.vit_layers,
            vit_heads: m.vit_heads,
            vit_mlp: m.vit_mlp,
            stage_channels: m.stage_channels,
            blocks_per_stage: m.blocks_per_stage,
            gn_groups: m.gn_groups,
            final_upsample: m.final_upsample,
        }
    }
}

fn upsample_str(u: FinalUpsample) -> &'static str {
    match u {
        FinalUpsample::Bilinear => "bilinear",
        FinalUpsample::Transposed => "transposed",
    }
}

fn parse_upsample(s: &str) -> Result<FinalUpsample> {
    match s {
        "bilinear" => Ok(FinalUpsample::Bilinear),
        "transposed" => Ok(FinalUpsample::Transposed),
        other => bail!("final_upsample must be bilinear or transposed, got {other}"),
    }
}

fn join4(v: [usize; 4]) -> String {
    v.map(|x| x.to_string()).join(",")
}

fn parse4(key: &str, s: &str) -> Result<[usize; 4]> {
    let parts: Vec<usize> = s
        .split(',')
        .map(|p| p.trim().parse::<usize>().map_err(|e| anyhow!("{key}: {e}")))
        .collect::<Result<_>>()?;
    parts
        .try_into()
        .map_err(|_| anyhow!("{key} needs exactly 4 comma-separated values"))
}

impl TrainConfig {
    /// Serialize as sorted key=value lines; `from_text(echo())` is identity.
    pub fn echo(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k}={v}");
        };
        kv("augment", self.augment.to_string());
        kv("batch_size", self.batch_size.to_string());
        kv("blocks_per_stage", join4(self.blocks_per_stage));
        kv("final_upsample", upsample_str(self.final_upsample).into());
        kv("gn_groups", self.gn_groups.to_string());
        kv("lr", self.lr.to_string());
        kv("max_epochs", self.max_epochs.to_string());
        kv("min_delta", self.min_delta.to_string());
        kv("patience", self.patience.to_string());
        kv("samples_per_sequence", self.samples_per_sequence.to_string());
        kv("seed", self.seed.to_string());
        kv("snippet_len", self.snippet_len.to_string());
        kv("stage_channels", join4(self.stage_channels));
        kv("val_stride", self.val_stride.to_string());
        kv("vit_dim", self.vit_dim.to_string());
        kv("vit_heads", self.vit_heads.to_string());
        kv("vit_layers", self.vit_layers.to_string());
        kv("vit_mlp", self.vit_mlp.to_string());
        kv("w_bce", self.weights.bce.to_string());
        kv("w_dice", self.weights.dice.to_string());
        kv("w_hd", self.weights.hd.to_string());
        s
    }

    /// Parse key=value lines; blank lines and `#` comments are allowed,
    /// unknown or duplicate keys are not. Missing keys keep their defaults.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut seen = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("line {}: expected key=value", lineno + 1))?;
            let (key, value) = (key.trim().to_string(), value.trim().to_string());
            if seen.insert(key.clone(), value).is_some() {
                bail!("duplicate key {key}");
            }
        }

        let mut cfg = TrainConfig::default();
        fn take<T: FromStr>(m: &mut BTreeMap<String, String>, key: &str, slot: &mut T) -> Result<()>
        where
            T::Err: std::fmt::Display,
        {
            if let Some(v) = m.remove(key) {
                *slot = v.parse().map_err(|e| anyhow!("{key}: {e}"))?;
            }
            Ok(())
        }
        take(&mut seen, "augment", &mut cfg.augment)?;
        take(&mut seen, "batch_size", &mut cfg.batch_size)?;
        take(&mut seen, "gn_groups", &mut cfg.gn_groups)?;
        take(&mut seen, "lr", &mut cfg.lr)?;
        take(&mut seen, "max_epochs", &mut cfg.max_epochs)?;
        take(&mut seen, "min_delta", &mut cfg.min_delta)?;
        take(&mut seen, "patience", &mut cfg.patience)?;
        take(&mut seen, "samples_per_sequence", &mut cfg.samples_per_sequence)?;
        take(&mut seen, "seed", &mut cfg.seed)?;
        take(&mut seen, "snippet_len", &mut cfg.snippet_len)?;
        take(&mut seen, "val_stride", &mut cfg.val_stride)?;
        take(&mut seen, "vit_dim", &mut cfg.vit_dim)?;
        take(&mut seen, "vit_heads", &mut cfg.vit_heads)?;
        take(&mut seen, "vit_layers", &mut cfg.vit_layers)?;
        take(&mut seen, "vit_mlp", &mut cfg.vit_mlp)?;
        take(&mut seen, "w_bce", &mut cfg.weights.bce)?;
        take(&mut seen, "w_dice", &mut cfg.weights.dice)?;
        take(&mut seen, "w_hd", &mut cfg.weights.hd)?;
        if let Some(v) = seen.remove("stage_channels") {
            cfg.stage_channels = parse4("stage_channels", &v)?;
        }
        if let Some(v) = seen.remove("blocks_per_stage") {
            cfg.blocks_per_stage = parse4("blocks_per_stage", &v)?;
        }
        if let Some(v) = seen.remove("final_upsample") {
            cfg.final_upsample = parse_upsample(&v)?;
        }
        if let Some(key) = seen.keys().next() {
            bail!("unknown key {key}");
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        Self::from_text(&text).with_context(|| format!("config {}", path.display()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.lr <= 0.0 || !self.lr.is_finite() {
            bail!("lr must be positive, got {}", self.lr);
        }
        if self.batch_size == 0 {
            bail!("batch_size must be at least 1");
        }
        if self.snippet_len == 0 || self.snippet_len % 2 == 0 {
            bail!("snippet_len must be odd, got {}", self.snippet_len);
        }
        if self.max_epochs == 0 {
            bail!("max_epochs must be at least 1");
        }
        if self.patience == 0 {
            bail!("patience must be at least 1");
        }
        if self.min_delta < 0.0 {
            bail!("min_delta must be nonnegative");
        }
        if self.samples_per_sequence == 0 {
            bail!("samples_per_sequence must be at least 1");
        }
        if self.val_stride == 0 {
            bail!("val_stride must be at least 1");
        }
        self.weights
            .validate()
            .map_err(|e| anyhow!("loss weights: {e}"))?;
        Ok(())
    }

    /// Model dimensions for a dataset of the given frame size.
    pub fn model_config(&self, img_size: usize) -> Result<ModelConfig> {
        let cfg = ModelConfig {
            img_size,
            snippet_len: self.snippet_len,
            in_channels: 1,
            stage_channels: self.stage_channels,
            blocks_per_stage: self.blocks_per_stage,
            gn_groups: self.gn_groups,
            vit_dim: self.vit_dim,
            vit_layers: self.vit_layers,
            vit_heads: self.vit_heads,
            vit_mlp: self.vit_mlp,
            final_upsample: self.final_upsample,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Copy with a different snippet length and seed, as the ablation sweep
    /// builds per-cell configs.
    pub fn cell(&self, snippet_len: usize, seed: u64) -> Self {
        Self {
            snippet_len,
            seed,
            ..self.clone()
        }
    }
}

/// Package version plus the source revision baked in at build time.
pub fn version_string() -> String {
    format!(
        "vtu {} ({})",
        env!("CARGO_PKG_VERSION"),
        env!("VTU_GIT_DESCRIBE")
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn echo_round_trips() {
        let mut cfg = TrainConfig::default();
        cfg.lr = 1.25e-3;
        cfg.seed = 99;
        cfg.snippet_len = 3;
        cfg.stage_channels = [8, 16, 32, 64];
        let back = TrainConfig::from_text(&cfg.echo()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn unknown_key_is_rejected() {
        let err = TrainConfig::from_text("lr=1e-3\nlearning_rate=1e-3\n").unwrap_err();
        assert!(err.to_string().contains("unknown key learning_rate"), "{err}");
    }

    #[test]
    fn duplicate_and_malformed_lines_are_rejected() {
        assert!(TrainConfig::from_text("lr=1e-3\nlr=2e-3\n").is_err());
        assert!(TrainConfig::from_text("just some words\n").is_err());
    }

    #[test]
    fn comments_and_blanks_are_ignored() {
        let cfg = TrainConfig::from_text("# schedule\n\nmax_epochs=7\n").unwrap();
        assert_eq!(cfg.max_epochs, 7);
    }

    #[test]
    fn invalid_values_are_rejected() {
        assert!(TrainConfig::from_text("snippet_len=4\n").is_err());
        assert!(TrainConfig::from_text("lr=0\n").is_err());
        assert!(TrainConfig::from_text("batch_size=0\n").is_err());
        assert!(TrainConfig::from_text("w_bce=0.9\n").is_err(), "weights no longer sum to 1");
    }

    #[test]
    fn weights_can_be_rebalanced() {
        let cfg = TrainConfig::from_text("w_bce=0.5\nw_dice=0.3\nw_hd=0.2\n").unwrap();
        assert!((cfg.weights.bce - 0.5).abs() < 1e-15);
    }
}
