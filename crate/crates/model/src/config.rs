//! Model hyperparameters shared by the encoder, temporal blending, the
//! transformer bottleneck and the decoder.

use crate::error::{ModelError, ModelResult};

/// How the last decoder stage reaches full resolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FinalUpsample {
    Bilinear,
    Transposed,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelConfig {
    /// Square input extent; must be divisible by 16 (four halvings).
    pub img_size: usize,
    /// Frames per snippet; odd so a center frame exists.
    pub snippet_len: usize,
    pub in_channels: usize,
    /// Output channels of the four encoder stages, shallow to deep.
    pub stage_channels: [usize; 4],
    pub blocks_per_stage: [usize; 4],
    pub gn_groups: usize,
    /// Transformer width, depth, head count and hidden MLP width.
    pub vit_dim: usize,
    pub vit_layers: usize,
    pub vit_heads: usize,
    pub vit_mlp: usize,
    pub final_upsample: FinalUpsample,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            img_size: 64,
            snippet_len: 5,
            in_channels: 1,
            stage_channels: [16, 32, 64, 128],
            blocks_per_stage: [2, 2, 2, 2],
            gn_groups: 8,
            vit_dim: 64,
            vit_layers: 4,
            vit_heads: 4,
            vit_mlp: 128,
            final_upsample: FinalUpsample::Bilinear,
        }
    }
}

impl ModelConfig {
    /// A deliberately small configuration for finite-difference tests.
    pub fn tiny() -> Self {
        Self {
            img_size: 16,
            snippet_len: 3,
            in_channels: 1,
            stage_channels: [2, 4, 4, 8],
            blocks_per_stage: [1, 1, 1, 1],
            gn_groups: 2,
            vit_dim: 16,
            vit_layers: 2,
            vit_heads: 2,
            vit_mlp: 32,
            final_upsample: FinalUpsample::Bilinear,
        }
    }

    pub fn validate(&self) -> ModelResult<()> {
        let bad = |detail: String| Err(ModelError::BadConfig { detail });
        if self.img_size == 0 || self.img_size % 16 != 0 {
            return bad(format!("img_size {} must be a positive multiple of 16", self.img_size));
        }
        if self.snippet_len == 0 || self.snippet_len % 2 == 0 {
            return bad(format!("snippet_len {} must be odd", self.snippet_len));
        }
        if self.in_channels == 0 {
            return bad("in_channels must be positive".into());
        }
        if self.gn_groups == 0 {
            return bad("gn_groups must be positive".into());
        }
        for (i, (&c, &b)) in self
            .stage_channels
            .iter()
            .zip(&self.blocks_per_stage)
            .enumerate()
        {
            if c == 0 || b == 0 {
                return bad(format!("stage {i} has zero channels or blocks"));
            }
            if c % self.gn_groups != 0 {
                return bad(format!(
                    "stage {i} channels {c} not divisible by gn_groups {}",
                    self.gn_groups
                ));
            }
        }
        if self.vit_dim == 0 || self.vit_heads == 0 || self.vit_dim % self.vit_heads != 0 {
            return bad(format!(
                "vit_dim {} must be divisible by vit_heads {}",
                self.vit_dim, self.vit_heads
            ));
        }
        if self.vit_mlp == 0 {
            return bad("vit_mlp must be positive".into());
        }
        Ok(())
    }

    /// Index of the center frame in a snippet.
    pub fn center(&self) -> usize {
        self.snippet_len / 2
    }

    /// Token grid extent on the deepest feature map.
    pub fn grid(&self) -> usize {
        self.img_size / 16
    }

    /// Token count seen by the transformer.
    pub fn tokens(&self) -> usize {
        self.grid() * self.grid()
    }

    pub fn deep_channels(&self) -> usize {
        self.stage_channels[3]
    }

    /// Same configuration with a different snippet length, for ablations.
    pub fn with_snippet_len(&self, snippet_len: usize) -> Self {
        Self {
            snippet_len,
            ..self.clone()
        }
    }
}
