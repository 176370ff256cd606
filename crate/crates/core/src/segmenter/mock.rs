use crate::error::{Error, Result};
use crate::prompt::PromptBundle;
use crate::raster::{BinaryMask, RasterImage};

use super::{SegmentationRun, Segmenter};

/// Labels the 4-connected foreground components of `mask`.
///
/// Returns one label per pixel (`0` for background, `1..=n` for components,
/// numbered in row-major order of their first pixel) and the component count.
pub fn connected_components(mask: &BinaryMask) -> (Vec<u32>, u32) {
    let (w, h) = (mask.width() as usize, mask.height() as usize);
    let values = mask.values();
    let mut labels = vec![0u32; values.len()];
    let mut next = 0u32;
    let mut stack = Vec::new();
    for start in 0..values.len() {
        if !values[start] || labels[start] != 0 {
            continue;
        }
        next += 1;
        labels[start] = next;
        stack.push(start);
        while let Some(i) = stack.pop() {
            let (x, y) = (i % w, i / w);
            let mut visit = |j: usize| {
                if values[j] && labels[j] == 0 {
                    labels[j] = next;
                    stack.push(j);
                }
            };
            if x > 0 {
                visit(i - 1);
            }
            if x + 1 < w {
                visit(i + 1);
            }
            if y > 0 {
                visit(i - w);
            }
            if y + 1 < h {
                visit(i + w);
            }
        }
    }
    (labels, next)
}

/// Deterministic stand-in for a promptable segmenter.
///
/// The mask is the union of the truth components that contain at least one
/// positive point. The confidence is the fraction of point prompts that
/// agree with the truth (positive on foreground, negative on background).
/// Mask prompts are ignored.
pub fn mock_segment(
    truth: &BinaryMask,
    image: &RasterImage,
    prompts: &PromptBundle,
) -> Result<SegmentationRun> {
    if truth.dims() != image.dims() {
        return Err(Error::Dimensions(format!(
            "mock truth is {}x{}, image is {}x{}",
            truth.width(),
            truth.height(),
            image.width(),
            image.height()
        )));
    }
    if prompts.points.is_empty() {
        return Err(Error::InvalidConfig("prompt bundle has no points".into()));
    }
    let (labels, n) = connected_components(truth);
    let mut selected = vec![false; n as usize + 1];
    let mut consistent = 0usize;
    for p in &prompts.points {
        if !truth.contains(p.location) {
            return Err(Error::PromptOutOfBounds {
                x: p.location.x,
                y: p.location.y,
                width: truth.width(),
                height: truth.height(),
            });
        }
        let on_foreground = truth.at(p.location);
        if on_foreground == p.polarity.is_positive() {
            consistent += 1;
        }
        if p.polarity.is_positive() && on_foreground {
            let idx = p.location.y as usize * truth.width() as usize + p.location.x as usize;
            selected[labels[idx] as usize] = true;
        }
    }
    let values = labels.iter().map(|&l| l != 0 && selected[l as usize]).collect();
    let mask = BinaryMask::new(truth.width(), truth.height(), values)?;
    SegmentationRun::new(mask, consistent as f64 / prompts.points.len() as f64)
}

/// Mock backend holding a stitched-frame truth mask.
#[derive(Debug, Clone)]
pub struct MockSegmenter {
    truth: BinaryMask,
}

impl MockSegmenter {
    pub fn new(truth: BinaryMask) -> Self {
        Self { truth }
    }

    pub fn truth(&self) -> &BinaryMask {
        &self.truth
    }
}

impl Segmenter for MockSegmenter {
    fn infer(&self, image: &RasterImage, prompts: &PromptBundle) -> Result<SegmentationRun> {
        mock_segment(&self.truth, image, prompts)
    }

    fn describe(&self) -> String {
        format!("mock({}x{})", self.truth.width(), self.truth.height())
    }
}
