//! Four-stage residual encoder applied to every frame with shared weights.
//!
//! Each stage halves the spatial extent with its first block (stride-2
//! convolution plus a 1x1 projection shortcut) and keeps it with the rest
//! (identity shortcut). The three shallow stage outputs serve as decoder
//! skips; the deepest map feeds the temporal blender.

use crate::config::ModelConfig;
use crate::error::ModelResult;
use crate::params::{BoundParams, ParamSet};
use vtu_core::{Scalar, Tape, VarId};

pub(crate) const GN_EPS: f64 = 1e-5;

/// One frame's feature pyramid: stage outputs at 1/2, 1/4 and 1/8 scale plus
/// the deepest map at 1/16.
#[derive(Debug, Clone)]
pub struct EncoderFeatures {
    pub skips: [VarId; 3],
    pub deep: VarId,
}

fn conv_std(c_in: usize, k: usize) -> f64 {
    (2.0 / (c_in * k * k) as f64).sqrt()
}

pub fn register_encoder<T: Scalar>(
    p: &mut ParamSet<T>,
    cfg: &ModelConfig,
    seed: u64,
) -> ModelResult<()> {
    let mut c_in = cfg.in_channels;
    for (s, (&c_out, &blocks)) in cfg
        .stage_channels
        .iter()
        .zip(&cfg.blocks_per_stage)
        .enumerate()
    {
        for b in 0..blocks {
            let prefix = format!("enc.s{s}.b{b}");
            let b_in = if b == 0 { c_in } else { c_out };
            p.insert_normal(
                &format!("{prefix}.conv1"),
                &[c_out, b_in, 3, 3],
                0.0,
                conv_std(b_in, 3),
                seed,
            )?;
            p.insert_full(&format!("{prefix}.gn1.gain"), &[c_out], 1.0)?;
            p.insert_full(&format!("{prefix}.gn1.bias"), &[c_out], 0.0)?;
            p.insert_normal(
                &format!("{prefix}.conv2"),
                &[c_out, c_out, 3, 3],
                0.0,
                conv_std(c_out, 3),
                seed,
            )?;
            p.insert_full(&format!("{prefix}.gn2.gain"), &[c_out], 1.0)?;
            p.insert_full(&format!("{prefix}.gn2.bias"), &[c_out], 0.0)?;
            if b == 0 {
                p.insert_normal(
                    &format!("{prefix}.short"),
                    &[c_out, b_in, 1, 1],
                    0.0,
                    conv_std(b_in, 1),
                    seed,
                )?;
            }
        }
        c_in = c_out;
    }
    Ok(())
}

fn residual_block<T: Scalar>(
    tape: &mut Tape<T>,
    p: &BoundParams,
    cfg: &ModelConfig,
    prefix: &str,
    x: VarId,
    stride: usize,
) -> ModelResult<VarId> {
    let y = tape.conv2d(x, p.get(&format!("{prefix}.conv1")), stride, 1)?;
    let y = tape.group_norm(
        y,
        p.get(&format!("{prefix}.gn1.gain")),
        p.get(&format!("{prefix}.gn1.bias")),
        cfg.gn_groups,
        GN_EPS,
    )?;
    let y = tape.relu(y);
    let y = tape.conv2d(y, p.get(&format!("{prefix}.conv2")), 1, 1)?;
    let y = tape.group_norm(
        y,
        p.get(&format!("{prefix}.gn2.gain")),
        p.get(&format!("{prefix}.gn2.bias")),
        cfg.gn_groups,
        GN_EPS,
    )?;
    let short = if stride == 1 {
        x
    } else {
        tape.conv2d(x, p.get(&format!("{prefix}.short")), stride, 0)?
    };
    let sum = tape.add(y, short)?;
    Ok(tape.relu(sum))
}

/// Encode one `[in_channels, H, W]` frame.
pub fn encode_frame<T: Scalar>(
    tape: &mut Tape<T>,
    p: &BoundParams,
    cfg: &ModelConfig,
    frame: VarId,
) -> ModelResult<EncoderFeatures> {
    let mut x = frame;
    let mut stage_out = Vec::with_capacity(4);
    for (s, &blocks) in cfg.blocks_per_stage.iter().enumerate() {
        for b in 0..blocks {
            let stride = if b == 0 { 2 } else { 1 };
            x = residual_block(tape, p, cfg, &format!("enc.s{s}.b{b}"), x, stride)?;
        }
        stage_out.push(x);
    }
    Ok(EncoderFeatures {
        skips: [stage_out[0], stage_out[1], stage_out[2]],
        deep: stage_out[3],
    })
}

/// Encode every frame of a snippet with the shared parameters.
pub fn encode_stack<T: Scalar>(
    tape: &mut Tape<T>,
    p: &BoundParams,
    cfg: &ModelConfig,
    frames: &[VarId],
) -> ModelResult<Vec<EncoderFeatures>> {
    frames
        .iter()
        .map(|&f| encode_frame(tape, p, cfg, f))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use vtu_core::Tensor;

    fn setup(cfg: &ModelConfig) -> ParamSet<f32> {
        let mut p = ParamSet::new();
        register_encoder(&mut p, cfg, 11).unwrap();
        p
    }

    #[test]
    fn feature_shapes_halve_per_stage() {
        let cfg = ModelConfig::default();
        let params = setup(&cfg);
        let mut tape: Tape<f32> = Tape::new();
        let bound = params.bind_frozen(&mut tape);
        let frame = tape.constant(Tensor::full(&[1, 64, 64], 0.3f32));
        let out = encode_frame(&mut tape, &bound, &cfg, frame).unwrap();
        assert_eq!(tape.shape(out.skips[0]), &[16, 32, 32]);
        assert_eq!(tape.shape(out.skips[1]), &[32, 16, 16]);
        assert_eq!(tape.shape(out.skips[2]), &[64, 8, 8]);
        assert_eq!(tape.shape(out.deep), &[128, 4, 4]);
    }

    #[test]
    fn shape_scales_with_input_extent() {
        let mut cfg = ModelConfig::default();
        for size in [32usize, 64, 128] {
            cfg.img_size = size;
            let params = setup(&cfg);
            let mut tape: Tape<f32> = Tape::new();
            let bound = params.bind_frozen(&mut tape);
            let frame = tape.constant(Tensor::full(&[1, size, size], 0.1f32));
            let out = encode_frame(&mut tape, &bound, &cfg, frame).unwrap();
            assert_eq!(tape.shape(out.deep), &[128, size / 16, size / 16]);
        }
    }

    #[test]
    fn zero_input_maps_to_zero_features() {
        let cfg = ModelConfig::tiny();
        let params = setup(&cfg);
        let mut tape: Tape<f32> = Tape::new();
        let bound = params.bind_frozen(&mut tape);
        let frame = tape.constant(Tensor::zeros(&[1, 16, 16]));
        let out = encode_frame(&mut tape, &bound, &cfg, frame).unwrap();
        assert!(tape.value(out.deep).data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn stack_shares_weights_across_frames() {
        let cfg = ModelConfig::tiny();
        let params = setup(&cfg);
        let mut tape: Tape<f32> = Tape::new();
        let bound = params.bind_frozen(&mut tape);
        let data = Tensor::from_fn(&[1, 16, 16], |i| (i as f32 * 0.37).sin().abs());
        let frames: Vec<VarId> = (0..3).map(|_| tape.constant(data.clone())).collect();
        let outs = encode_stack(&mut tape, &bound, &cfg, &frames).unwrap();
        assert_eq!(outs.len(), 3);
        let first = tape.value(outs[0].deep).clone();
        for o in &outs[1..] {
            assert_eq!(tape.value(o.deep), &first, "identical frames, identical maps");
        }
    }
}
