//! Cascaded decoder: token grid back to pixels with three skip fusions.
//!
//! Tokens are reshaped onto the 1/16 grid, reprojected to the deep channel
//! count, then upsampled in three stages that each concatenate the matching
//! encoder skip and apply two conv-norm-relu pairs. A final skip-free stage
//! reaches full resolution, and two independent 1x1 sigmoid heads emit the
//! bolus and pharynx probability maps.

use crate::config::{FinalUpsample, ModelConfig};
use crate::encoder::GN_EPS;
use crate::error::ModelResult;
use crate::params::{BoundParams, ParamSet};
use vtu_core::{Scalar, Tape, VarId};

/// Decoder output channel plan: reversed encoder stages.
fn up_channels(cfg: &ModelConfig) -> [usize; 3] {
    [
        cfg.stage_channels[2],
        cfg.stage_channels[1],
        cfg.stage_channels[0],
    ]
}

fn conv_std(c_in: usize, k: usize) -> f64 {
    (2.0 / (c_in * k * k) as f64).sqrt()
}

pub fn register_decoder<T: Scalar>(
    p: &mut ParamSet<T>,
    cfg: &ModelConfig,
    seed: u64,
) -> ModelResult<()> {
    let c4 = cfg.deep_channels();
    p.insert_normal(
        "dec.reproject",
        &[c4, cfg.vit_dim, 1, 1],
        0.0,
        conv_std(cfg.vit_dim, 1),
        seed,
    )?;
    let mut c_in = c4;
    let outs = up_channels(cfg);
    let skips = [
        cfg.stage_channels[2],
        cfg.stage_channels[1],
        cfg.stage_channels[0],
    ];
    for (i, (&c_out, &c_skip)) in outs.iter().zip(&skips).enumerate() {
        let pre = format!("dec.u{i}");
        let fused = c_in + c_skip;
        p.insert_normal(&format!("{pre}.conv1"), &[c_out, fused, 3, 3], 0.0, conv_std(fused, 3), seed)?;
        p.insert_full(&format!("{pre}.gn1.gain"), &[c_out], 1.0)?;
        p.insert_full(&format!("{pre}.gn1.bias"), &[c_out], 0.0)?;
        p.insert_normal(&format!("{pre}.conv2"), &[c_out, c_out, 3, 3], 0.0, conv_std(c_out, 3), seed)?;
        p.insert_full(&format!("{pre}.gn2.gain"), &[c_out], 1.0)?;
        p.insert_full(&format!("{pre}.gn2.bias"), &[c_out], 0.0)?;
        c_in = c_out;
    }
    if cfg.final_upsample == FinalUpsample::Transposed {
        p.insert_normal("dec.final.tconv", &[c_in, c_in, 2, 2], 0.0, conv_std(c_in, 2), seed)?;
    }
    p.insert_normal("dec.final.conv", &[c_in, c_in, 3, 3], 0.0, conv_std(c_in, 3), seed)?;
    p.insert_full("dec.final.gn.gain", &[c_in], 1.0)?;
    p.insert_full("dec.final.gn.bias", &[c_in], 0.0)?;
    for head in ["bolus", "pharynx"] {
        p.insert_normal(&format!("dec.head.{head}.kernel"), &[1, c_in, 1, 1], 0.0, conv_std(c_in, 1), seed)?;
        p.insert_full(&format!("dec.head.{head}.bias"), &[1], 0.0)?;
    }
    Ok(())
}

fn conv_gn_relu<T: Scalar>(
    tape: &mut Tape<T>,
    p: &BoundParams,
    cfg: &ModelConfig,
    x: VarId,
    kernel: &str,
    gn: &str,
) -> ModelResult<VarId> {
    let y = tape.conv2d(x, p.get(kernel), 1, 1)?;
    let y = tape.group_norm(
        y,
        p.get(&format!("{gn}.gain")),
        p.get(&format!("{gn}.bias")),
        cfg.gn_groups,
        GN_EPS,
    )?;
    Ok(tape.relu(y))
}

fn head<T: Scalar>(
    tape: &mut Tape<T>,
    p: &BoundParams,
    x: VarId,
    name: &str,
) -> ModelResult<VarId> {
    let logits = tape.conv2d(x, p.get(&format!("dec.head.{name}.kernel")), 1, 0)?;
    let logits = tape.add(logits, p.get(&format!("dec.head.{name}.bias")))?;
    let probs = tape.sigmoid(logits);
    let shape = tape.shape(probs).to_vec();
    Ok(tape.reshape(probs, &[shape[1], shape[2]])?)
}

/// Decode tokens `[N, D]` with the center frame's skips (shallowest first)
/// into the two `[H, W]` probability maps.
pub fn decode<T: Scalar>(
    tape: &mut Tape<T>,
    p: &BoundParams,
    cfg: &ModelConfig,
    tokens: VarId,
    skips: &[VarId; 3],
) -> ModelResult<(VarId, VarId)> {
    let g = cfg.grid();
    let grid = tape.transpose2d(tokens)?;
    let grid = tape.reshape(grid, &[cfg.vit_dim, g, g])?;
    let mut x = tape.conv2d(grid, p.get("dec.reproject"), 1, 0)?;
    for (i, &skip) in [skips[2], skips[1], skips[0]].iter().enumerate() {
        x = tape.upsample_bilinear(x, 2)?;
        x = tape.concat(0, &[x, skip])?;
        x = conv_gn_relu(tape, p, cfg, x, &format!("dec.u{i}.conv1"), &format!("dec.u{i}.gn1"))?;
        x = conv_gn_relu(tape, p, cfg, x, &format!("dec.u{i}.conv2"), &format!("dec.u{i}.gn2"))?;
    }
    x = match cfg.final_upsample {
        FinalUpsample::Bilinear => tape.upsample_bilinear(x, 2)?,
        FinalUpsample::Transposed => tape.conv_transpose2d(x, p.get("dec.final.tconv"), 2, 0)?,
    };
    x = conv_gn_relu(tape, p, cfg, x, "dec.final.conv", "dec.final.gn")?;
    let bolus = head(tape, p, x, "bolus")?;
    let pharynx = head(tape, p, x, "pharynx")?;
    Ok((bolus, pharynx))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoder::{encode_frame, register_encoder};
    use crate::vit::{patch_embed, register_vit};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use vtu_core::{Tensor, Tape};

    fn full_setup(cfg: &ModelConfig, seed: u64) -> ParamSet<f32> {
        let mut p = ParamSet::new();
        register_encoder(&mut p, cfg, seed).unwrap();
        register_vit(&mut p, cfg, seed).unwrap();
        register_decoder(&mut p, cfg, seed).unwrap();
        p
    }

    fn run(cfg: &ModelConfig, p: &ParamSet<f32>) -> (Tensor<f32>, Tensor<f32>) {
        let mut rng = ChaCha8Rng::seed_from_u64(40);
        let mut tape: Tape<f32> = Tape::new();
        let bound = p.bind_frozen(&mut tape);
        let frame = tape.constant(Tensor::from_fn(&[1, cfg.img_size, cfg.img_size], |_| {
            rng.random_range(0.0..1.0)
        }));
        let enc = encode_frame(&mut tape, &bound, cfg, frame).unwrap();
        let tokens = patch_embed(&mut tape, enc.deep, bound.get("vit.patch"), bound.get("vit.pos"))
            .unwrap();
        let (b, ph) = decode(&mut tape, &bound, cfg, tokens, &enc.skips).unwrap();
        (tape.value(b).clone(), tape.value(ph).clone())
    }

    #[test]
    fn output_maps_match_input_extent() {
        let cfg = ModelConfig {
            img_size: 64,
            ..ModelConfig::tiny()
        };
        let p = full_setup(&cfg, 13);
        let (b, ph) = run(&cfg, &p);
        assert_eq!(b.shape(), &[64, 64]);
        assert_eq!(ph.shape(), &[64, 64]);
        assert!(b.data().iter().all(|&v| v > 0.0 && v < 1.0));
        assert!(ph.data().iter().all(|&v| v > 0.0 && v < 1.0));
    }

    #[test]
    fn transposed_final_stage_keeps_shapes() {
        let cfg = ModelConfig {
            img_size: 32,
            final_upsample: FinalUpsample::Transposed,
            ..ModelConfig::tiny()
        };
        let p = full_setup(&cfg, 17);
        let (b, _) = run(&cfg, &p);
        assert_eq!(b.shape(), &[32, 32]);
    }

    #[test]
    fn zeroed_heads_predict_one_half_everywhere() {
        let cfg = ModelConfig {
            img_size: 32,
            ..ModelConfig::tiny()
        };
        let mut p = full_setup(&cfg, 19);
        let c = cfg.stage_channels[0];
        for h in ["bolus", "pharynx"] {
            p.set(&format!("dec.head.{h}.kernel"), Tensor::zeros(&[1, c, 1, 1]))
                .unwrap();
        }
        let (b, ph) = run(&cfg, &p);
        assert!(b.data().iter().all(|&v| v == 0.5));
        assert!(ph.data().iter().all(|&v| v == 0.5));
    }
}
