//! Synthetic swallow-study video data: a deterministic scene generator with
//! ground-truth masks, snippet extraction, sequence-level splits, shared
//! rotation/flip augmentation, and an on-disk dataset store.

mod augment;
mod dataset;
mod error;
mod scene;
mod snippet;
mod split;
mod store;

pub use augment::{
    augment, augment_with, draw_augment, transform_frame, transform_mask, AugmentDraw,
    MAX_ROTATION_DEG,
};
pub use dataset::{generate_dataset, sequence_id, Dataset, SequenceData};
pub use error::{DataError, DataResult};
pub use scene::{
    generate_sequence, generate_sequence_full, GeneratedSequence, OcclusionRect, SceneSpec,
};
pub use snippet::{extract_snippets, snippet_at, Snippet};
pub use split::{split_dataset, Split, SplitTag, DEFAULT_FRACTIONS};
pub use store::{load_dataset, save_dataset, MANIFEST_NAME};
