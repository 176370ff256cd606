//! JSON-over-HTTP client for a remote promptable segmenter.
//!
//! `POST {endpoint}/segment` with
//! `{"image": <b64 PNG>, "points": [{"x", "y", "label"}], "mask"?: <b64 PNG>}`
//! and expects `{"mask": <b64 single-channel PNG>, "score": <0..=1>}` back.

use std::path::Path;
use std::time::Duration;

use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine as _;
use serde::{Deserialize, Serialize};
use ureq::Agent;

use crate::error::{Error, Result};
use crate::prompt::PromptBundle;
use crate::raster::{BinaryMask, RasterImage};

use super::{SegmentationRun, Segmenter};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WirePoint {
    pub x: u32,
    pub y: u32,
    pub label: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentRequest {
    pub image: String,
    pub points: Vec<WirePoint>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mask: Option<String>,
}

impl SegmentRequest {
    pub fn encode(image: &RasterImage, prompts: &PromptBundle) -> Self {
        Self {
            image: B64.encode(image.encode_png()),
            points: prompts
                .points
                .iter()
                .map(|p| WirePoint {
                    x: p.location.x,
                    y: p.location.y,
                    label: p.polarity.label(),
                })
                .collect(),
            mask: prompts.mask_prompt.as_ref().map(|m| B64.encode(m.encode_png())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentResponse {
    pub mask: String,
    pub score: f64,
}

impl SegmentResponse {
    /// Decodes the payload; the score must already lie in `[0, 1]`.
    pub fn decode(&self) -> Result<SegmentationRun> {
        if !(0.0..=1.0).contains(&self.score) {
            return Err(Error::Protocol(format!(
                "score {} is outside [0, 1]",
                self.score
            )));
        }
        let bytes = B64
            .decode(self.mask.as_bytes())
            .map_err(|e| Error::Protocol(format!("mask is not valid base64: {e}")))?;
        let mask = BinaryMask::decode_png(&bytes, Path::new("<response mask>"))
            .map_err(|e| Error::Protocol(format!("mask is not a valid PNG: {e}")))?;
        SegmentationRun::new(mask, self.score)
    }
}

#[derive(Deserialize)]
struct ErrorBody {
    error: String,
}

#[derive(Debug, Clone)]
pub struct HttpSegmenter {
    endpoint: String,
    url: String,
    serial: bool,
    agent: Agent,
}

impl HttpSegmenter {
    pub fn new(endpoint: impl Into<String>, timeout: Duration, serial: bool) -> Self {
        let endpoint = endpoint.into();
        let url = format!("{}/segment", endpoint.trim_end_matches('/'));
        let agent: Agent = Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        Self {
            endpoint,
            url,
            serial,
            agent,
        }
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }

    fn failure(&self, message: impl Into<String>) -> Error {
        Error::Backend {
            endpoint: self.endpoint.clone(),
            message: message.into(),
        }
    }
}

impl Segmenter for HttpSegmenter {
    fn infer(&self, image: &RasterImage, prompts: &PromptBundle) -> Result<SegmentationRun> {
        let body = serde_json::to_vec(&SegmentRequest::encode(image, prompts))
            .expect("request serialization cannot fail");
        let mut response = self
            .agent
            .post(&self.url)
            .header("content-type", "application/json")
            .send(&body[..])
            .map_err(|e| match e {
                ureq::Error::Timeout(t) => self.failure(format!("timed out ({t})")),
                other => self.failure(other.to_string()),
            })?;
        let status = response.status().as_u16();
        let text = response
            .body_mut()
            .with_config()
            .limit(256 * 1024 * 1024)
            .read_to_string()
            .map_err(|e| match e {
                ureq::Error::Timeout(t) => self.failure(format!("timed out ({t})")),
                other => Error::Protocol(format!("could not read response body: {other}")),
            })?;
        if !(200..300).contains(&status) {
            let detail = serde_json::from_str::<ErrorBody>(&text)
                .map(|b| b.error)
                .unwrap_or(text);
            return Err(Error::BackendStatus {
                endpoint: self.endpoint.clone(),
                status,
                body: detail,
            });
        }
        let parsed: SegmentResponse = serde_json::from_str(&text)
            .map_err(|e| Error::Protocol(format!("schema violation in response: {e}")))?;
        let run = parsed.decode()?;
        if run.mask.dims() != image.dims() {
            return Err(Error::Protocol(format!(
                "response mask is {}x{}, request image is {}x{}",
                run.mask.width(),
                run.mask.height(),
                image.width(),
                image.height()
            )));
        }
        Ok(run)
    }

    fn is_serial(&self) -> bool {
        self.serial
    }

    fn describe(&self) -> String {
        format!("http({})", self.endpoint)
    }
}
