//! The full segmentation network: shared-weight frame encoder, temporal
//! blending onto the center frame, transformer bottleneck, skip-connected
//! decoder with two sigmoid heads.

use crate::config::ModelConfig;
use crate::decoder::{decode, register_decoder};
use crate::encoder::{encode_stack, register_encoder};
use crate::error::{ModelError, ModelResult};
use crate::params::{BoundParams, ParamSet};
use crate::temporal::{register_temporal, temporal_forward};
use crate::vit::{register_vit, vit_forward};
use vtu_core::{FrameStack, Scalar, Tape, Tensor, VarId};

/// All prediction and inspection outputs of one forward pass.
#[derive(Debug, Clone)]
pub struct ModelOutput {
    /// `[H, W]` probability maps for the two instances.
    pub bolus: VarId,
    pub pharynx: VarId,
    /// Temporal correlation maps `[T, h, w]`.
    pub temporal_attn: VarId,
    /// Attention matrices per transformer layer per head.
    pub vit_attn: Vec<Vec<VarId>>,
}

#[derive(Debug, Clone)]
pub struct Model<T: Scalar> {
    pub cfg: ModelConfig,
    pub params: ParamSet<T>,
}

/// Register every module's parameters in a fixed order.
pub fn register_model<T: Scalar>(
    p: &mut ParamSet<T>,
    cfg: &ModelConfig,
    seed: u64,
) -> ModelResult<()> {
    register_encoder(p, cfg, seed)?;
    register_temporal(p, cfg, seed)?;
    register_vit(p, cfg, seed)?;
    register_decoder(p, cfg, seed)
}

/// Run the network on already-bound parameters and frame variables.
pub fn model_forward<T: Scalar>(
    tape: &mut Tape<T>,
    p: &BoundParams,
    cfg: &ModelConfig,
    frames: &[VarId],
) -> ModelResult<ModelOutput> {
    if frames.len() != cfg.snippet_len {
        return Err(ModelError::StackLength {
            expected: cfg.snippet_len,
            got: frames.len(),
        });
    }
    let expect = [cfg.in_channels, cfg.img_size, cfg.img_size];
    for &f in frames {
        if tape.shape(f) != expect {
            return Err(ModelError::FrameShape {
                expected: cfg.img_size,
                got: tape.shape(f).to_vec(),
            });
        }
    }
    let encoded = encode_stack(tape, p, cfg, frames)?;
    let deeps: Vec<VarId> = encoded.iter().map(|e| e.deep).collect();
    let temporal = temporal_forward(tape, p, &deeps, cfg.center())?;
    let (tokens, vit_attn) = vit_forward(tape, p, cfg, temporal.blended)?;
    let (bolus, pharynx) = decode(tape, p, cfg, tokens, &encoded[cfg.center()].skips)?;
    Ok(ModelOutput {
        bolus,
        pharynx,
        temporal_attn: temporal.attn,
        vit_attn,
    })
}

impl<T: Scalar> Model<T> {
    /// Fresh model with parameters drawn from streams tied to (seed, name).
    pub fn init(cfg: ModelConfig, seed: u64) -> ModelResult<Self> {
        cfg.validate()?;
        let mut params = ParamSet::new();
        register_model(&mut params, &cfg, seed)?;
        Ok(Self { cfg, params })
    }

    /// Wrap an existing parameter set (checkpoint restore).
    pub fn from_params(cfg: ModelConfig, params: ParamSet<T>) -> ModelResult<Self> {
        cfg.validate()?;
        Ok(Self { cfg, params })
    }

    /// Put a frame stack on a tape as constants, adapting its length to the
    /// configured snippet length.
    pub fn stack_to_vars(&self, tape: &mut Tape<T>, stack: &FrameStack) -> Vec<VarId> {
        let stack = stack.with_len(self.cfg.snippet_len);
        stack
            .frames
            .iter()
            .map(|f| {
                let t: Tensor<T> = f.cast();
                let shaped = t
                    .reshaped(&[1, f.shape()[0], f.shape()[1]])
                    .expect("frame rank 2");
                tape.constant(shaped)
            })
            .collect()
    }

    /// Inference: probability maps for the center frame of a stack.
    pub fn predict(&self, stack: &FrameStack) -> ModelResult<(Tensor<T>, Tensor<T>)> {
        let mut tape: Tape<T> = Tape::new();
        let frames = self.stack_to_vars(&mut tape, stack);
        let bound = self.params.bind_frozen(&mut tape);
        let out = model_forward(&mut tape, &bound, &self.cfg, &frames)?;
        Ok((
            tape.value(out.bolus).clone(),
            tape.value(out.pharynx).clone(),
        ))
    }
}
