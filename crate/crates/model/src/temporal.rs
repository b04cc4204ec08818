//! Temporal blending of per-frame deep features into one center-frame map.
//!
//! Per spatial position, each frame slot gets a scalar logit from a learned
//! per-slot channel embedding; a softmax across slots turns these into
//! correlation maps. The maps are rescaled by their own spatial mass, used
//! as pooling weights over each frame, and the pooled summaries are mixed
//! back onto the center frame through trainable per-slot gains. With all mix
//! gains zero the module passes the center frame through untouched.

use crate::config::ModelConfig;
use crate::error::{ModelError, ModelResult};
use crate::params::{BoundParams, ParamSet};
use vtu_core::{Scalar, Tape, VarId};

/// Blended center-frame features plus the per-slot correlation maps.
#[derive(Debug, Clone)]
pub struct TemporalOutput {
    pub blended: VarId,
    /// `[T, h, w]`, sums to one across slots at every position.
    pub attn: VarId,
}

pub fn register_temporal<T: Scalar>(
    p: &mut ParamSet<T>,
    cfg: &ModelConfig,
    seed: u64,
) -> ModelResult<()> {
    let t = cfg.snippet_len;
    let c = cfg.deep_channels();
    p.insert_normal("tcm.embed", &[t, c], 0.0, (1.0 / c as f64).sqrt(), seed)?;
    p.insert_full("tcm.pool_gain", &[t], 1.0)?;
    p.insert_full("tcm.mix", &[t], 0.0)?;
    Ok(())
}

/// Per-position softmax across frame slots of the embedding logits.
///
/// `embed` is `[T, C]`; `features` holds `T` maps of `[C, h, w]`. Returns
/// `[T, h, w]` with columns over `T` summing to one.
pub fn temporal_correlation<T: Scalar>(
    tape: &mut Tape<T>,
    embed: VarId,
    features: &[VarId],
) -> ModelResult<VarId> {
    let slots = tape.shape(embed)[0];
    if slots != features.len() {
        return Err(ModelError::StackLength {
            expected: slots,
            got: features.len(),
        });
    }
    let c = tape.shape(features[0])[0];
    let mut logits = Vec::with_capacity(slots);
    for (t, &x) in features.iter().enumerate() {
        let row = tape.slice(embed, 0, t, 1)?;
        let row = tape.reshape(row, &[c, 1, 1])?;
        let weighted = tape.mul(x, row)?;
        let logit = tape.reduce_sum(weighted, 0, true)?;
        logits.push(logit);
    }
    let stacked = tape.concat(0, &logits)?;
    Ok(tape.softmax(stacked, 0)?)
}

/// Rescale each slot's correlation map by its spatial mass over `h * w`:
/// entry `(t, i)` becomes `corr[t, i] * sum_j corr[t, j] / (h * w)`.
pub fn normalize_correlation<T: Scalar>(tape: &mut Tape<T>, corr: VarId) -> ModelResult<VarId> {
    let shape = tape.shape(corr).to_vec();
    let (t, h, w) = (shape[0], shape[1], shape[2]);
    let flat = tape.reshape(corr, &[t, h * w])?;
    let sums = tape.reduce_sum(flat, 1, true)?;
    let scaled = tape.affine(sums, 1.0 / (h * w) as f64, 0.0);
    let scaled = tape.reshape(scaled, &[t, 1, 1])?;
    Ok(tape.mul(corr, scaled)?)
}

/// Mix pooled frame summaries back onto the center frame.
///
/// For slot `n`: pool the frame's channels with its rescaled map, scale by
/// `pool_gain[n]`, broadcast-add onto the frame, scale that by `mix[n]`, and
/// accumulate; the center frame is added residually.
pub fn temporal_blend<T: Scalar>(
    tape: &mut Tape<T>,
    features: &[VarId],
    xhat: VarId,
    pool_gain: VarId,
    mix: VarId,
    center: usize,
) -> ModelResult<VarId> {
    let shape = tape.shape(features[0]).to_vec();
    let (c, h, w) = (shape[0], shape[1], shape[2]);
    let mut acc: Option<VarId> = None;
    for (n, &x) in features.iter().enumerate() {
        let map = tape.slice(xhat, 0, n, 1)?;
        let weighted = tape.mul(x, map)?;
        let flat = tape.reshape(weighted, &[c, h * w])?;
        let pooled = tape.reduce_sum(flat, 1, true)?;
        let pooled = tape.reshape(pooled, &[c, 1, 1])?;
        let gain_n = tape.slice(pool_gain, 0, n, 1)?;
        let pooled = tape.mul(pooled, gain_n)?;
        let term = tape.add(x, pooled)?;
        let mix_n = tape.slice(mix, 0, n, 1)?;
        let contrib = tape.mul(term, mix_n)?;
        acc = Some(match acc {
            None => contrib,
            Some(a) => tape.add(a, contrib)?,
        });
    }
    let total = acc.expect("at least one slot");
    Ok(tape.add(features[center], total)?)
}

/// Full temporal pass: correlation, rescaling, blending.
pub fn temporal_forward<T: Scalar>(
    tape: &mut Tape<T>,
    p: &BoundParams,
    features: &[VarId],
    center: usize,
) -> ModelResult<TemporalOutput> {
    if center >= features.len() {
        return Err(ModelError::BadConfig {
            detail: format!("center {center} outside stack of {}", features.len()),
        });
    }
    let attn = temporal_correlation(tape, p.get("tcm.embed"), features)?;
    let xhat = normalize_correlation(tape, attn)?;
    let blended = temporal_blend(
        tape,
        features,
        xhat,
        p.get("tcm.pool_gain"),
        p.get("tcm.mix"),
        center,
    )?;
    Ok(TemporalOutput { blended, attn })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use vtu_core::Tensor;

    fn rand_maps(rng: &mut ChaCha8Rng, t: usize, c: usize, h: usize) -> Vec<Tensor<f64>> {
        (0..t)
            .map(|_| Tensor::from_fn(&[c, h, h], |_| rng.random_range(-1.0..1.0)))
            .collect()
    }

    #[test]
    fn identical_frames_and_rows_give_uniform_attention() {
        let mut tape: Tape<f64> = Tape::new();
        let frame = Tensor::from_fn(&[2, 3, 3], |i| (i as f64 * 0.31).cos());
        let frames: Vec<VarId> = (0..4).map(|_| tape.constant(frame.clone())).collect();
        let row = vec![0.3, -0.7];
        let embed = tape.constant(
            Tensor::new(vec![4, 2], row.iter().cycle().take(8).copied().collect()).unwrap(),
        );
        let corr = temporal_correlation(&mut tape, embed, &frames).unwrap();
        for &v in tape.value(corr).data() {
            assert!((v - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn single_slot_attention_is_all_ones() {
        let mut tape: Tape<f64> = Tape::new();
        let frame = tape.constant(Tensor::from_fn(&[3, 2, 2], |i| i as f64));
        let embed = tape.constant(Tensor::new(vec![1, 3], vec![0.5, -1.0, 2.0]).unwrap());
        let corr = temporal_correlation(&mut tape, embed, &[frame]).unwrap();
        assert!(tape.value(corr).data().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn attention_sums_to_one_over_slots() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut tape: Tape<f64> = Tape::new();
        let maps = rand_maps(&mut rng, 5, 4, 5);
        let frames: Vec<VarId> = maps.into_iter().map(|m| tape.constant(m)).collect();
        let embed = tape.constant(Tensor::from_fn(&[5, 4], |_| rng.random_range(-2.0..2.0)));
        let corr = temporal_correlation(&mut tape, embed, &frames).unwrap();
        let v = tape.value(corr);
        for i in 0..25 {
            let s: f64 = (0..5).map(|t| v.data()[t * 25 + i]).sum();
            assert!((s - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn uniform_map_rescales_to_its_square() {
        let mut tape: Tape<f64> = Tape::new();
        let corr = tape.constant(Tensor::full(&[3, 4, 4], 0.2f64));
        let xhat = normalize_correlation(&mut tape, corr).unwrap();
        for &v in tape.value(xhat).data() {
            assert!((v - 0.04).abs() < 1e-12, "0.2 * (16 * 0.2) / 16");
        }
    }

    #[test]
    fn zero_mix_passes_center_through_bitwise() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut tape: Tape<f64> = Tape::new();
        // Non-negative values, as produced by the relu-terminated encoder.
        let maps: Vec<Tensor<f64>> = (0..5)
            .map(|_| Tensor::from_fn(&[4, 3, 3], |_| rng.random_range(0.0..2.0)))
            .collect();
        let center_data = maps[2].clone();
        let frames: Vec<VarId> = maps.into_iter().map(|m| tape.constant(m)).collect();
        let mut p: ParamSet<f64> = ParamSet::new();
        let cfg = ModelConfig {
            snippet_len: 5,
            stage_channels: [2, 2, 2, 4],
            ..ModelConfig::tiny()
        };
        register_temporal(&mut p, &cfg, 3).unwrap();
        let bound = p.bind_frozen(&mut tape);
        let out = temporal_forward(&mut tape, &bound, &frames, 2).unwrap();
        assert_eq!(tape.value(out.blended), &center_data);
    }

    #[test]
    fn unit_mix_without_pooling_doubles_a_single_frame() {
        let mut tape: Tape<f64> = Tape::new();
        let frame = Tensor::from_fn(&[2, 2, 2], |i| i as f64 + 1.0);
        let x = tape.constant(frame.clone());
        let xhat = tape.constant(Tensor::full(&[1, 2, 2], 0.25f64));
        let pool_gain = tape.constant(Tensor::new(vec![1], vec![0.0]).unwrap());
        let mix = tape.constant(Tensor::new(vec![1], vec![1.0]).unwrap());
        let z = temporal_blend(&mut tape, &[x], xhat, pool_gain, mix, 0).unwrap();
        let expect: Vec<f64> = frame.data().iter().map(|v| 2.0 * v).collect();
        assert_eq!(tape.value(z).data(), &expect[..]);
    }

    #[test]
    fn permuting_non_center_slots_with_their_parameters_is_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let maps = rand_maps(&mut rng, 5, 4, 3);
        let embed: Vec<f64> = (0..20).map(|_| rng.random_range(-1.0..1.0)).collect();
        let pool: Vec<f64> = (0..5).map(|_| rng.random_range(0.5..1.5)).collect();
        let mix: Vec<f64> = (0..5).map(|_| rng.random_range(-0.5..0.5)).collect();

        let run = |order: [usize; 5]| {
            let mut tape: Tape<f64> = Tape::new();
            let frames: Vec<VarId> = order
                .iter()
                .map(|&i| tape.constant(maps[i].clone()))
                .collect();
            let e = tape.constant(Tensor::new(
                vec![5, 4],
                order
                    .iter()
                    .flat_map(|&i| embed[i * 4..i * 4 + 4].to_vec())
                    .collect(),
            )
            .unwrap());
            let g = tape.constant(
                Tensor::new(vec![5], order.iter().map(|&i| pool[i]).collect()).unwrap(),
            );
            let m = tape.constant(
                Tensor::new(vec![5], order.iter().map(|&i| mix[i]).collect()).unwrap(),
            );
            let corr = temporal_correlation(&mut tape, e, &frames).unwrap();
            let xhat = normalize_correlation(&mut tape, corr).unwrap();
            let z = temporal_blend(&mut tape, &frames, xhat, g, m, 2).unwrap();
            tape.value(z).clone()
        };

        let base = run([0, 1, 2, 3, 4]);
        let swapped = run([4, 1, 2, 3, 0]);
        for (a, b) in base.data().iter().zip(swapped.data()) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
