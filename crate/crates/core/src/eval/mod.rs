//! Scene-level evaluation: IoU on the query half, manifest batches, and
//! the strategy × aggregator × variant report.

mod harness;
mod manifest;
mod pipeline;
mod report;

pub use harness::{
    derive_scene_seed, evaluate_manifest, evaluate_scene, BackendSource, CellScore, HttpSource,
    MockSource, SceneFailure, SceneOutcome,
};
pub use manifest::{Manifest, SceneRecord};
pub use pipeline::{run_pipeline, CellPrediction, PipelineConfig, PipelineOutput, SceneInputs};
pub use report::{CellKey, CellSummary, IoUAveraging, IoUReport, Variant};

use serde::Serialize;

use crate::error::Result;
use crate::raster::BinaryMask;

/// Foreground intersection and union pixel counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Overlap {
    pub intersection: u64,
    pub union: u64,
}

impl Overlap {
    pub fn measure(truth: &BinaryMask, predicted: &BinaryMask) -> Result<Self> {
        truth.ensure_same_dims(predicted, "iou")?;
        let mut o = Overlap::default();
        for (&t, &p) in truth.values().iter().zip(predicted.values()) {
            o.intersection += (t && p) as u64;
            o.union += (t || p) as u64;
        }
        Ok(o)
    }

    /// `intersection / union`, with an empty union scoring 1.0.
    pub fn iou(&self) -> f64 {
        if self.union == 0 {
            1.0
        } else {
            self.intersection as f64 / self.union as f64
        }
    }
}

/// Intersection over union of the foreground class. Two empty masks score 1.0.
pub fn iou(truth: &BinaryMask, predicted: &BinaryMask) -> Result<f64> {
    Overlap::measure(truth, predicted).map(|o| o.iou())
}
