//! Single-file checkpoints: the exact training config, schedule state,
//! optimizer moments and every parameter tensor as an embedded blob.
//! Round trips are bit-exact so resumed runs continue deterministically.

use crate::config::TrainConfig;
use anyhow::{anyhow, bail, Context, Result};
use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;
use vtu_core::io::{vtt1_bytes, vtt1_from_bytes};
use vtu_core::Tensor;
use vtu_model::{register_model, Model, ParamSet};

const MAGIC: &[u8; 8] = b"VTUCKPT1";
const FORMAT_VERSION: u32 = 1;

/// Complete training state between epochs.
#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub config: TrainConfig,
    pub img_size: usize,
    /// Completed epochs.
    pub epoch: usize,
    /// Completed optimizer steps.
    pub steps: u64,
    pub best_val: f64,
    /// Learning rate currently in effect (after any halvings).
    pub lr: f64,
    /// Consecutive epochs without validation improvement.
    pub plateau_streak: u32,
    pub params: ParamSet<f32>,
    pub adam_m: BTreeMap<String, Tensor<f32>>,
    pub adam_v: BTreeMap<String, Tensor<f32>>,
}

impl Checkpoint {
    /// Fresh state for a model initialized from the config's seed.
    pub fn fresh(config: &TrainConfig, img_size: usize) -> Result<Self> {
        let model_cfg = config.model_config(img_size)?;
        let model: Model<f32> = Model::init(model_cfg, config.seed)?;
        let zeros: BTreeMap<String, Tensor<f32>> = model
            .params
            .iter()
            .map(|(n, t)| (n.to_string(), Tensor::zeros(t.shape())))
            .collect();
        Ok(Self {
            config: config.clone(),
            img_size,
            epoch: 0,
            steps: 0,
            best_val: f64::INFINITY,
            lr: config.lr,
            plateau_streak: 0,
            params: model.params,
            adam_m: zeros.clone(),
            adam_v: zeros,
        })
    }

    pub fn model(&self) -> Result<Model<f32>> {
        let cfg = self.config.model_config(self.img_size)?;
        Ok(Model::from_params(cfg, self.params.clone())?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        push_u32(&mut out, FORMAT_VERSION);
        let echo = self.config.echo();
        push_bytes(&mut out, echo.as_bytes());
        push_u32(&mut out, self.img_size as u32);
        push_u32(&mut out, self.epoch as u32);
        out.extend_from_slice(&self.steps.to_le_bytes());
        out.extend_from_slice(&self.best_val.to_le_bytes());
        out.extend_from_slice(&self.lr.to_le_bytes());
        push_u32(&mut out, self.plateau_streak);
        push_u32(&mut out, self.params.len() as u32);
        for (name, value) in self.params.iter() {
            let m = self
                .adam_m
                .get(name)
                .ok_or_else(|| anyhow!("missing optimizer moment for {name}"))?;
            let v = self
                .adam_v
                .get(name)
                .ok_or_else(|| anyhow!("missing optimizer variance for {name}"))?;
            push_bytes(&mut out, name.as_bytes());
            push_bytes(&mut out, &vtt1_bytes(value));
            push_bytes(&mut out, &vtt1_bytes(m));
            push_bytes(&mut out, &vtt1_bytes(v));
        }
        std::fs::write(path, out).with_context(|| format!("writing {}", path.display()))?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes =
            std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
        let mut r = std::io::Cursor::new(bytes.as_slice());

        let mut magic = [0u8; 8];
        r.read_exact(&mut magic).context("checkpoint header")?;
        if &magic != MAGIC {
            bail!("{} is not a checkpoint file", path.display());
        }
        let version = read_u32(&mut r)?;
        if version != FORMAT_VERSION {
            bail!("checkpoint format version {version} unsupported (expected {FORMAT_VERSION})");
        }
        let echo = String::from_utf8(read_bytes(&mut r)?).context("config echo")?;
        let config = TrainConfig::from_text(&echo).context("embedded config")?;
        let img_size = read_u32(&mut r)? as usize;
        let epoch = read_u32(&mut r)? as usize;
        let steps = read_u64(&mut r)?;
        let best_val = read_f64(&mut r)?;
        let lr = read_f64(&mut r)?;
        let plateau_streak = read_u32(&mut r)?;

        let count = read_u32(&mut r)? as usize;
        let mut params: ParamSet<f32> = ParamSet::new();
        let mut adam_m = BTreeMap::new();
        let mut adam_v = BTreeMap::new();
        for _ in 0..count {
            let name = String::from_utf8(read_bytes(&mut r)?).context("parameter name")?;
            let value = vtt1_from_bytes(&read_bytes(&mut r)?)
                .with_context(|| format!("parameter {name}"))?;
            let m = vtt1_from_bytes(&read_bytes(&mut r)?)
                .with_context(|| format!("moment of {name}"))?;
            let v = vtt1_from_bytes(&read_bytes(&mut r)?)
                .with_context(|| format!("variance of {name}"))?;
            if m.shape() != value.shape() || v.shape() != value.shape() {
                bail!("optimizer state shape mismatch for {name}");
            }
            params
                .insert(&name, value.cast())
                .map_err(|e| anyhow!("{e}"))?;
            adam_m.insert(name.clone(), m.cast());
            adam_v.insert(name, v.cast());
        }
        if r.position() != bytes.len() as u64 {
            bail!("trailing bytes after checkpoint payload");
        }

        let ckpt = Self {
            config,
            img_size,
            epoch,
            steps,
            best_val,
            lr,
            plateau_streak,
            params,
            adam_m,
            adam_v,
        };
        ckpt.verify_against_config()?;
        Ok(ckpt)
    }

    /// The stored tensors must line up, name for name and shape for shape,
    /// with what the embedded config would allocate.
    fn verify_against_config(&self) -> Result<()> {
        let model_cfg = self.config.model_config(self.img_size)?;
        let mut reference: ParamSet<f32> = ParamSet::new();
        register_model(&mut reference, &model_cfg, 0)?;
        if reference.len() != self.params.len() {
            bail!(
                "checkpoint holds {} parameters, config allocates {}",
                self.params.len(),
                reference.len()
            );
        }
        for ((sn, st), (rn, rt)) in self.params.iter().zip(reference.iter()) {
            if sn != rn {
                bail!("parameter order mismatch: {sn} vs {rn}");
            }
            if st.shape() != rt.shape() {
                bail!(
                    "parameter {sn} has shape {:?}, config expects {:?}",
                    st.shape(),
                    rt.shape()
                );
            }
        }
        Ok(())
    }
}

fn push_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn push_bytes(out: &mut Vec<u8>, bytes: &[u8]) {
    push_u32(out, bytes.len() as u32);
    out.extend_from_slice(bytes);
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b).context("truncated checkpoint")?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64(r: &mut impl Read) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b).context("truncated checkpoint")?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64(r: &mut impl Read) -> Result<f64> {
    Ok(f64::from_bits(read_u64(r)?))
}

fn read_bytes(r: &mut impl Read) -> Result<Vec<u8>> {
    let len = read_u32(r)? as usize;
    if len > (1 << 30) {
        bail!("checkpoint field of {len} bytes exceeds limit");
    }
    let mut buf = vec![0u8; len];
    r.read_exact(&mut buf).context("truncated checkpoint")?;
    Ok(buf)
}
