//! Segmentation quality metrics and multi-rater fusion.
//!
//! Per-frame scoring covers region overlap (Dice), boundary distances
//! (95th-percentile Hausdorff and average surface distance) and pixel
//! classification rates, with explicit conventions for empty masks. Reports
//! aggregate frames per head and export CSV. The `staple` module fuses
//! annotations from several raters by expectation-maximization.

mod error;
mod metrics;
mod report;
mod staple;
mod surface;

pub use error::{EvalError, EvalResult};
pub use metrics::{confusion, dsc, Confusion};
pub use report::{frame_metrics, FrameMetrics, HeadSummary, MetricReport};
pub use staple::{simulate_rater, staple, StapleOptions, StapleOutput};
pub use surface::{asd, boundary, hd95, surface_distances};
