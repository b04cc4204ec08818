//! Transformer bottleneck over the blended feature map.
//!
//! The deep grid is flattened row-major into tokens, projected to the
//! transformer width and given a learned positional embedding. Blocks are
//! pre-norm: attention and MLP each read a layer-normed copy of their input
//! and add their result back onto the untouched residual stream.

use crate::config::ModelConfig;
use crate::error::{ModelError, ModelResult};
use crate::params::{BoundParams, ParamSet};
use vtu_core::{Scalar, Tape, VarId};

pub(crate) const LN_EPS: f64 = 1e-6;

fn linear_std(d_in: usize, d_out: usize) -> f64 {
    (2.0 / (d_in + d_out) as f64).sqrt()
}

pub fn register_vit<T: Scalar>(
    p: &mut ParamSet<T>,
    cfg: &ModelConfig,
    seed: u64,
) -> ModelResult<()> {
    let c = cfg.deep_channels();
    let d = cfg.vit_dim;
    let m = cfg.vit_mlp;
    p.insert_normal("vit.patch", &[c, d], 0.0, linear_std(c, d), seed)?;
    p.insert_full("vit.pos", &[cfg.tokens(), d], 0.0)?;
    for l in 0..cfg.vit_layers {
        let pre = format!("vit.l{l}");
        p.insert_full(&format!("{pre}.ln1.gain"), &[d], 1.0)?;
        p.insert_full(&format!("{pre}.ln1.bias"), &[d], 0.0)?;
        for proj in ["wq", "wk", "wv", "wo"] {
            p.insert_normal(&format!("{pre}.{proj}"), &[d, d], 0.0, linear_std(d, d), seed)?;
        }
        for bias in ["bq", "bk", "bv", "bo"] {
            p.insert_full(&format!("{pre}.{bias}"), &[d], 0.0)?;
        }
        p.insert_full(&format!("{pre}.ln2.gain"), &[d], 1.0)?;
        p.insert_full(&format!("{pre}.ln2.bias"), &[d], 0.0)?;
        p.insert_normal(&format!("{pre}.mlp1"), &[d, m], 0.0, linear_std(d, m), seed)?;
        p.insert_full(&format!("{pre}.mlp1b"), &[m], 0.0)?;
        p.insert_normal(&format!("{pre}.mlp2"), &[m, d], 0.0, linear_std(m, d), seed)?;
        p.insert_full(&format!("{pre}.mlp2b"), &[d], 0.0)?;
    }
    Ok(())
}

/// Flatten `[C, h, w]` into `h * w` tokens, project, and add positions.
pub fn patch_embed<T: Scalar>(
    tape: &mut Tape<T>,
    feature: VarId,
    patch: VarId,
    pos: VarId,
) -> ModelResult<VarId> {
    let shape = tape.shape(feature).to_vec();
    let (c, h, w) = (shape[0], shape[1], shape[2]);
    let n = tape.shape(pos)[0];
    if h * w != n {
        return Err(ModelError::BadConfig {
            detail: format!("feature grid {h}x{w} vs {n} positional rows"),
        });
    }
    let flat = tape.reshape(feature, &[c, h * w])?;
    let tokens = tape.transpose2d(flat)?;
    let projected = tape.matmul(tokens, patch)?;
    Ok(tape.add(projected, pos)?)
}

fn linear<T: Scalar>(
    tape: &mut Tape<T>,
    x: VarId,
    w: VarId,
    b: VarId,
) -> ModelResult<VarId> {
    let y = tape.matmul(x, w)?;
    Ok(tape.add(y, b)?)
}

/// Multi-head scaled dot-product self-attention (no residual). Returns the
/// projected output and the per-head attention matrices.
pub fn msa<T: Scalar>(
    tape: &mut Tape<T>,
    p: &BoundParams,
    layer: usize,
    x: VarId,
    heads: usize,
) -> ModelResult<(VarId, Vec<VarId>)> {
    let pre = format!("vit.l{layer}");
    let d = tape.shape(x)[1];
    let dh = d / heads;
    let q = linear(tape, x, p.get(&format!("{pre}.wq")), p.get(&format!("{pre}.bq")))?;
    let k = linear(tape, x, p.get(&format!("{pre}.wk")), p.get(&format!("{pre}.bk")))?;
    let v = linear(tape, x, p.get(&format!("{pre}.wv")), p.get(&format!("{pre}.bv")))?;
    let mut outs = Vec::with_capacity(heads);
    let mut attns = Vec::with_capacity(heads);
    for head in 0..heads {
        let qh = tape.slice(q, 1, head * dh, dh)?;
        let kh = tape.slice(k, 1, head * dh, dh)?;
        let vh = tape.slice(v, 1, head * dh, dh)?;
        let kt = tape.transpose2d(kh)?;
        let scores = tape.matmul(qh, kt)?;
        let scaled = tape.affine(scores, 1.0 / (dh as f64).sqrt(), 0.0);
        let attn = tape.softmax(scaled, 1)?;
        outs.push(tape.matmul(attn, vh)?);
        attns.push(attn);
    }
    let merged = tape.concat(1, &outs)?;
    let projected = linear(
        tape,
        merged,
        p.get(&format!("{pre}.wo")),
        p.get(&format!("{pre}.bo")),
    )?;
    Ok((projected, attns))
}

/// One pre-norm block: attention then MLP, each around a residual.
pub fn transformer_block<T: Scalar>(
    tape: &mut Tape<T>,
    p: &BoundParams,
    layer: usize,
    x: VarId,
    heads: usize,
) -> ModelResult<(VarId, Vec<VarId>)> {
    let pre = format!("vit.l{layer}");
    let n1 = tape.layer_norm(
        x,
        p.get(&format!("{pre}.ln1.gain")),
        p.get(&format!("{pre}.ln1.bias")),
        LN_EPS,
    )?;
    let (att, attns) = msa(tape, p, layer, n1, heads)?;
    let mid = tape.add(x, att)?;
    let n2 = tape.layer_norm(
        mid,
        p.get(&format!("{pre}.ln2.gain")),
        p.get(&format!("{pre}.ln2.bias")),
        LN_EPS,
    )?;
    let h1 = linear(tape, n2, p.get(&format!("{pre}.mlp1")), p.get(&format!("{pre}.mlp1b")))?;
    let act = tape.gelu(h1);
    let h2 = linear(tape, act, p.get(&format!("{pre}.mlp2")), p.get(&format!("{pre}.mlp2b")))?;
    let out = tape.add(mid, h2)?;
    Ok((out, attns))
}

/// Embed and run all blocks; also returns attention maps per layer per head.
pub fn vit_forward<T: Scalar>(
    tape: &mut Tape<T>,
    p: &BoundParams,
    cfg: &ModelConfig,
    feature: VarId,
) -> ModelResult<(VarId, Vec<Vec<VarId>>)> {
    let mut z = patch_embed(tape, feature, p.get("vit.patch"), p.get("vit.pos"))?;
    let mut attn = Vec::with_capacity(cfg.vit_layers);
    for l in 0..cfg.vit_layers {
        let (next, a) = transformer_block(tape, p, l, z, cfg.vit_heads)?;
        z = next;
        attn.push(a);
    }
    Ok((z, attn))
}
