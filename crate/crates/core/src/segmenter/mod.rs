//! The promptable-segmenter contract and its backends.
//!
//! A backend takes the stitched image plus a [`PromptBundle`] and returns a
//! single mask with a scalar confidence in `[0, 1]`. Call [`segment`] rather
//! than [`Segmenter::infer`] directly: it checks prompt bounds before
//! dispatch and validates what the backend sends back.

mod http;
mod mock;

use std::time::Duration;

use serde::{Deserialize, Serialize};

pub use http::{HttpSegmenter, SegmentRequest, SegmentResponse, WirePoint};
pub use mock::{connected_components, mock_segment, MockSegmenter};

use crate::error::{Error, Result};
use crate::prompt::PromptBundle;
use crate::raster::{BinaryMask, RasterImage};

/// One backend output: a stitched-frame mask and its confidence.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentationRun {
    pub mask: BinaryMask,
    pub confidence: f64,
}

impl SegmentationRun {
    pub fn new(mask: BinaryMask, confidence: f64) -> Result<Self> {
        check_confidence(confidence)?;
        Ok(Self { mask, confidence })
    }
}

fn check_confidence(c: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&c) {
        return Err(Error::Protocol(format!("confidence {c} is outside [0, 1]")));
    }
    Ok(())
}

pub trait Segmenter: Send + Sync {
    /// Runs the backend. Inputs are assumed valid; see [`segment`].
    fn infer(&self, image: &RasterImage, prompts: &PromptBundle) -> Result<SegmentationRun>;

    /// Serial backends must not receive concurrent requests.
    fn is_serial(&self) -> bool {
        false
    }

    fn describe(&self) -> String;
}

impl<S: Segmenter + ?Sized> Segmenter for std::sync::Arc<S> {
    fn infer(&self, image: &RasterImage, prompts: &PromptBundle) -> Result<SegmentationRun> {
        (**self).infer(image, prompts)
    }

    fn is_serial(&self) -> bool {
        (**self).is_serial()
    }

    fn describe(&self) -> String {
        (**self).describe()
    }
}

/// Checks that every prompt fits `image`.
pub fn validate_prompts(image: &RasterImage, prompts: &PromptBundle) -> Result<()> {
    if prompts.points.is_empty() {
        return Err(Error::InvalidConfig("prompt bundle has no points".into()));
    }
    for p in &prompts.points {
        if !image.contains(p.location) {
            return Err(Error::PromptOutOfBounds {
                x: p.location.x,
                y: p.location.y,
                width: image.width(),
                height: image.height(),
            });
        }
    }
    if let Some(mp) = &prompts.mask_prompt {
        if mp.dims() != image.dims() {
            return Err(Error::Dimensions(format!(
                "mask prompt is {}x{}, image is {}x{}",
                mp.width(),
                mp.height(),
                image.width(),
                image.height()
            )));
        }
    }
    Ok(())
}

/// Validated segmentation call.
pub fn segment(
    backend: &dyn Segmenter,
    image: &RasterImage,
    prompts: &PromptBundle,
) -> Result<SegmentationRun> {
    validate_prompts(image, prompts)?;
    let run = backend.infer(image, prompts)?;
    if run.mask.dims() != image.dims() {
        return Err(Error::Protocol(format!(
            "backend returned a {}x{} mask for a {}x{} image",
            run.mask.width(),
            run.mask.height(),
            image.width(),
            image.height()
        )));
    }
    check_confidence(run.confidence)?;
    Ok(run)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Mock,
    Http,
}

/// How to reach a backend. Mock backends get their truth mask separately.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BackendDescriptor {
    pub kind: BackendKind,
    pub endpoint: Option<String>,
    pub timeout_secs: f64,
    pub serial: bool,
}

impl Default for BackendDescriptor {
    fn default() -> Self {
        Self {
            kind: BackendKind::Mock,
            endpoint: None,
            timeout_secs: 60.0,
            serial: false,
        }
    }
}

impl BackendDescriptor {
    pub fn validate(&self) -> Result<()> {
        if self.kind == BackendKind::Http && self.endpoint.as_deref().is_none_or(str::is_empty) {
            return Err(Error::InvalidConfig("http backend requires an endpoint".into()));
        }
        if !(self.timeout_secs.is_finite() && self.timeout_secs > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "timeout must be positive, got {}",
                self.timeout_secs
            )));
        }
        Ok(())
    }

    pub fn timeout(&self) -> Duration {
        Duration::from_secs_f64(self.timeout_secs)
    }

    /// Builds the HTTP client for an `http` descriptor.
    pub fn http_client(&self) -> Result<HttpSegmenter> {
        self.validate()?;
        match (&self.kind, &self.endpoint) {
            (BackendKind::Http, Some(ep)) => Ok(HttpSegmenter::new(ep.clone(), self.timeout(), self.serial)),
            _ => Err(Error::InvalidConfig("descriptor is not an http backend".into())),
        }
    }
}
