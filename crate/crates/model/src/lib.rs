//! A multi-frame encoder-decoder segmentation network with a temporal
//! blending module and a transformer bottleneck, plus its training losses.
//!
//! Frames of a short snippet are encoded by a shared-weight residual CNN;
//! the deepest per-frame maps are blended onto the center frame by learned
//! temporal attention; a small vision transformer mixes the blended tokens
//! globally; a skip-connected decoder restores resolution and two sigmoid
//! heads predict the bolus and pharynx probability maps.

mod config;
mod decoder;
mod encoder;
mod error;
mod loss;
mod model;
mod params;
mod temporal;
mod vit;

pub use config::{FinalUpsample, ModelConfig};
pub use decoder::{decode, register_decoder};
pub use encoder::{encode_frame, encode_stack, register_encoder, EncoderFeatures};
pub use error::{ModelError, ModelResult};
pub use loss::{
    bce_loss, dice_loss, hausdorff_dt_loss, hausdorff_dt_loss_auto, hd_weight_map, head_loss,
    mixture_loss, LossWeights, BCE_EPS, DICE_SMOOTH,
};
pub use model::{model_forward, register_model, Model, ModelOutput};
pub use params::{BoundParams, ParamSet};
pub use temporal::{
    normalize_correlation, register_temporal, temporal_blend, temporal_correlation,
    temporal_forward, TemporalOutput,
};
pub use vit::{msa, patch_embed, register_vit, transformer_block, vit_forward};
