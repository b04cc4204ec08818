//! In-memory dataset assembly: a batch of generated sequences with their
//! split assignment, derived deterministically from one base seed.

use crate::error::DataResult;
use crate::scene::{generate_sequence, SceneSpec};
use crate::split::{split_dataset, SplitTag, DEFAULT_FRACTIONS};
use vtu_core::rng::derive_seed;
use vtu_core::video::MaskPair;
use vtu_core::Tensor;

#[derive(Debug, Clone)]
pub struct SequenceData {
    pub id: String,
    pub seed: u64,
    pub split: SplitTag,
    pub frames: Vec<Tensor<f32>>,
    pub masks: Vec<MaskPair>,
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub base_seed: u64,
    /// Generation recipe shared by every sequence; its `seed` field is the
    /// base seed, with per-sequence seeds derived from it.
    pub template: SceneSpec,
    pub sequences: Vec<SequenceData>,
}

impl Dataset {
    pub fn split(&self, tag: SplitTag) -> Vec<&SequenceData> {
        self.sequences.iter().filter(|s| s.split == tag).collect()
    }

    pub fn get(&self, id: &str) -> Option<&SequenceData> {
        self.sequences.iter().find(|s| s.id == id)
    }
}

pub fn sequence_id(index: usize) -> String {
    format!("seq{index:03}")
}

/// Generate `count` sequences from `template` and assign splits at the
/// default fractions. Sequence seeds and the split shuffle all derive from
/// `base_seed`, so the whole dataset is reproducible from one number.
pub fn generate_dataset(base_seed: u64, count: usize, template: &SceneSpec) -> DataResult<Dataset> {
    let ids: Vec<String> = (0..count).map(sequence_id).collect();
    let split = split_dataset(&ids, DEFAULT_FRACTIONS, derive_seed(base_seed, &["split"]))?;

    let mut sequences = Vec::with_capacity(count);
    for id in &ids {
        let seed = derive_seed(base_seed, &["sequence", id]);
        let spec = template.with_seed(seed);
        let (frames, masks) = generate_sequence(&spec)?;
        sequences.push(SequenceData {
            id: id.clone(),
            seed,
            split: split.tag_of(id).expect("every id is assigned"),
            frames,
            masks,
        });
    }
    Ok(Dataset {
        base_seed,
        template: template.with_seed(base_seed),
        sequences,
    })
}
