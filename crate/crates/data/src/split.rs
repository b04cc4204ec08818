//! Sequence-level dataset partitioning, so no clip contributes frames to
//! more than one of train, validation, and test.

use crate::error::{DataError, DataResult};
use rand::seq::SliceRandom;
use vtu_core::rng::rng_for;

pub const DEFAULT_FRACTIONS: [f64; 3] = [0.70, 0.15, 0.15];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SplitTag {
    Train,
    Val,
    Test,
}

impl SplitTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            SplitTag::Train => "train",
            SplitTag::Val => "val",
            SplitTag::Test => "test",
        }
    }

    pub fn parse(s: &str) -> DataResult<SplitTag> {
        match s {
            "train" => Ok(SplitTag::Train),
            "val" => Ok(SplitTag::Val),
            "test" => Ok(SplitTag::Test),
            other => Err(DataError::Manifest { detail: format!("unknown split {other:?}") }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<String>,
    pub val: Vec<String>,
    pub test: Vec<String>,
}

impl Split {
    pub fn tag_of(&self, id: &str) -> Option<SplitTag> {
        if self.train.iter().any(|s| s == id) {
            Some(SplitTag::Train)
        } else if self.val.iter().any(|s| s == id) {
            Some(SplitTag::Val)
        } else if self.test.iter().any(|s| s == id) {
            Some(SplitTag::Test)
        } else {
            None
        }
    }
}

/// Shuffle the ids deterministically and cut them at the rounded fraction
/// boundaries; within each part the original id order is preserved.
pub fn split_dataset(ids: &[String], fractions: [f64; 3], seed: u64) -> DataResult<Split> {
    let sum: f64 = fractions.iter().sum();
    if fractions.iter().any(|f| *f < 0.0) || (sum - 1.0).abs() > 1e-9 {
        return Err(DataError::BadFractions(fractions));
    }
    let n = ids.len();
    let n_train = (n as f64 * fractions[0]).round() as usize;
    let n_val = (n as f64 * fractions[1]).round() as usize;
    if n_train + n_val > n {
        return Err(DataError::BadFractions(fractions));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng_for(seed, &["split"]));

    let pick = |range: std::ops::Range<usize>| -> Vec<String> {
        let mut chosen: Vec<usize> = order[range].to_vec();
        chosen.sort_unstable();
        chosen.into_iter().map(|i| ids[i].clone()).collect()
    };
    Ok(Split {
        train: pick(0..n_train),
        val: pick(n_train..n_train + n_val),
        test: pick(n_train + n_val..n),
    })
}
