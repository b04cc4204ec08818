//! Command-line harness tying the pipeline together: synthetic dataset
//! generation, multi-rater fusion, training with checkpoints and CSV logs,
//! evaluation with overlays, and the snippet-length ablation sweep.

pub mod ablate;
pub mod checkpoint;
pub mod config;
pub mod evaluate;
pub mod fuse;
pub mod generate;
pub mod manifest;
pub mod train;

pub use ablate::{run_ablate, AblateArgs, AblateTable};
pub use checkpoint::Checkpoint;
pub use config::{version_string, TrainConfig};
pub use evaluate::{evaluate_sequences, run_eval, Prediction};
pub use fuse::run_staple;
pub use generate::{run_generate, GenerateArgs};
pub use train::{run_overfit_one, run_train, TrainOutcome};
