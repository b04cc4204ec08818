//! Per-frame metric rows and their aggregation into a report. Frames where
//! exactly one mask is empty have no defined surface distances; they score
//! dsc 0, are excluded from the hd95/asd means and counted per head.

use crate::error::EvalResult;
use crate::metrics::confusion;
use crate::surface::{asd, hd95};
use std::path::Path;
use vtu_core::Mask;

#[derive(Debug, Clone)]
pub struct FrameMetrics {
    pub frame_id: String,
    pub head: String,
    pub dsc: f64,
    pub hd95: Option<f64>,
    pub asd: Option<f64>,
    pub sensitivity: f64,
    pub specificity: f64,
}

/// Score one prediction against its target, applying the empty-mask rules.
pub fn frame_metrics(
    frame_id: &str,
    head: &str,
    pred: &Mask,
    target: &Mask,
) -> EvalResult<FrameMetrics> {
    let c = confusion(pred, target)?;
    let (h, a) = match (pred.is_empty_mask(), target.is_empty_mask()) {
        (true, true) => (Some(0.0), Some(0.0)),
        (false, false) => (Some(hd95(pred, target)?), Some(asd(pred, target)?)),
        _ => (None, None),
    };
    Ok(FrameMetrics {
        frame_id: frame_id.to_string(),
        head: head.to_string(),
        dsc: c.dsc(),
        hd95: h,
        asd: a,
        sensitivity: c.sensitivity(),
        specificity: c.specificity(),
    })
}

#[derive(Debug, Clone)]
pub struct HeadSummary {
    pub head: String,
    pub frames: usize,
    pub mean_dsc: f64,
    /// None when every frame was excluded from distance metrics.
    pub mean_hd95: Option<f64>,
    pub mean_asd: Option<f64>,
    pub mean_sensitivity: f64,
    pub mean_specificity: f64,
    /// Frames skipped in the distance means because one mask was empty.
    pub distance_excluded: usize,
}

fn summarize(head: &str, rows: &[&FrameMetrics]) -> HeadSummary {
    let n = rows.len().max(1) as f64;
    let mean = |f: &dyn Fn(&FrameMetrics) -> f64| rows.iter().map(|r| f(r)).sum::<f64>() / n;
    let included: Vec<&&FrameMetrics> = rows.iter().filter(|r| r.hd95.is_some()).collect();
    let dist_mean = |f: &dyn Fn(&FrameMetrics) -> f64| {
        if included.is_empty() {
            None
        } else {
            Some(included.iter().map(|r| f(r)).sum::<f64>() / included.len() as f64)
        }
    };
    HeadSummary {
        head: head.to_string(),
        frames: rows.len(),
        mean_dsc: mean(&|r| r.dsc),
        mean_hd95: dist_mean(&|r| r.hd95.unwrap()),
        mean_asd: dist_mean(&|r| r.asd.unwrap()),
        mean_sensitivity: mean(&|r| r.sensitivity),
        mean_specificity: mean(&|r| r.specificity),
        distance_excluded: rows.len() - included.len(),
    }
}

#[derive(Debug, Clone)]
pub struct MetricReport {
    pub frames: Vec<FrameMetrics>,
    pub per_head: Vec<HeadSummary>,
    pub overall: HeadSummary,
}

impl MetricReport {
    pub fn from_frames(frames: Vec<FrameMetrics>) -> Self {
        let mut heads: Vec<String> = Vec::new();
        for f in &frames {
            if !heads.contains(&f.head) {
                heads.push(f.head.clone());
            }
        }
        let per_head = heads
            .iter()
            .map(|h| {
                let rows: Vec<&FrameMetrics> = frames.iter().filter(|f| &f.head == h).collect();
                summarize(h, &rows)
            })
            .collect();
        let overall = summarize("overall", &frames.iter().collect::<Vec<_>>());
        Self {
            frames,
            per_head,
            overall,
        }
    }

    pub fn head_summary(&self, head: &str) -> Option<&HeadSummary> {
        self.per_head.iter().find(|s| s.head == head)
    }

    /// Per-frame rows followed by `mean:<head>` and `mean:overall` rows.
    pub fn write_csv(&self, path: &Path) -> EvalResult<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record([
            "frame_id",
            "head",
            "dsc",
            "hd95",
            "asd",
            "sensitivity",
            "specificity",
            "distance_excluded",
        ])?;
        let fmt = |v: f64| format!("{v:.6}");
        let opt = |v: Option<f64>| v.map(fmt).unwrap_or_default();
        for f in &self.frames {
            w.write_record([
                f.frame_id.clone(),
                f.head.clone(),
                fmt(f.dsc),
                opt(f.hd95),
                opt(f.asd),
                fmt(f.sensitivity),
                fmt(f.specificity),
                String::new(),
            ])?;
        }
        for s in self.per_head.iter().chain(std::iter::once(&self.overall)) {
            w.write_record([
                format!("mean:{}", s.head),
                s.head.clone(),
                fmt(s.mean_dsc),
                opt(s.mean_hd95),
                opt(s.mean_asd),
                fmt(s.mean_sensitivity),
                fmt(s.mean_specificity),
                s.distance_excluded.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}
