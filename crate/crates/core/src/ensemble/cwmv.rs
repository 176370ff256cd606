//! Confidence-weighted majority voting.
//!
//! Each pixel accumulates the confidences of the runs that marked it
//! (`score = Σ cᵢ·maskᵢ`), the threshold is `τ = Σ cᵢ / m`, and a pixel is
//! kept when `score ≥ τ`.
//!
//! Sums are always taken over runs sorted by ascending confidence, so the
//! result is bit-identical under any reordering of the input runs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::BinaryMask;
use crate::segmenter::SegmentationRun;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CwmvParams {
    m: f64,
}

impl CwmvParams {
    pub const DEFAULT_M: f64 = 4.0;

    pub fn new(m: f64) -> Result<Self> {
        if !(m.is_finite() && m > 0.0) {
            return Err(Error::InvalidConfig(format!("CWMV m must be > 0, got {m}")));
        }
        Ok(Self { m })
    }

    pub fn m(&self) -> f64 {
        self.m
    }
}

impl Default for CwmvParams {
    fn default() -> Self {
        Self { m: Self::DEFAULT_M }
    }
}

/// Per-pixel accumulated confidence.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMap {
    width: u32,
    height: u32,
    scores: Vec<f64>,
}

impl ScoreMap {
    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn get(&self, x: u32, y: u32) -> f64 {
        self.scores[y as usize * self.width as usize + x as usize]
    }
}

/// Run indices ordered by ascending confidence (stable on ties).
fn summation_order(runs: &[SegmentationRun]) -> Result<Vec<usize>> {
    let first = runs
        .first()
        .ok_or_else(|| Error::InvalidConfig("cannot aggregate an empty ensemble".into()))?;
    for (i, r) in runs.iter().enumerate() {
        if !(r.confidence.is_finite() && r.confidence >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "run {i} has invalid confidence {}",
                r.confidence
            )));
        }
        r.mask.ensure_same_dims(&first.mask, &format!("run {i} mask"))?;
    }
    let mut order: Vec<usize> = (0..runs.len()).collect();
    order.sort_by(|&a, &b| runs[a].confidence.total_cmp(&runs[b].confidence));
    Ok(order)
}

fn total_confidence(runs: &[SegmentationRun], order: &[usize]) -> f64 {
    order.iter().fold(0.0, |acc, &i| acc + runs[i].confidence)
}

pub fn accumulate_cwmv(runs: &[SegmentationRun]) -> Result<ScoreMap> {
    let order = summation_order(runs)?;
    let (width, height) = runs[0].mask.dims();
    let mut scores = vec![0.0f64; width as usize * height as usize];
    for &i in &order {
        let c = runs[i].confidence;
        for (s, &on) in scores.iter_mut().zip(runs[i].mask.values()) {
            if on {
                *s += c;
            }
        }
    }
    Ok(ScoreMap {
        width,
        height,
        scores,
    })
}

pub fn cwmv_threshold(runs: &[SegmentationRun], params: &CwmvParams) -> Result<f64> {
    let order = summation_order(runs)?;
    Ok(total_confidence(runs, &order) / params.m)
}

/// Thresholded vote. An ensemble whose confidences are all zero yields an
/// empty mask instead of marking every pixel.
pub fn aggregate_cwmv(runs: &[SegmentationRun], params: &CwmvParams) -> Result<BinaryMask> {
    let scores = accumulate_cwmv(runs)?;
    let tau = cwmv_threshold(runs, params)?;
    let values = if tau == 0.0 {
        vec![false; scores.scores.len()]
    } else {
        scores.scores.iter().map(|&s| s >= tau).collect()
    };
    BinaryMask::new(scores.width, scores.height, values)
}
