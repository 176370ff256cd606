use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::raster::{load_image, load_mask, BinaryMask};
use crate::segmenter::{HttpSegmenter, MockSegmenter, Segmenter};
use crate::stitch::stitch_masks;

use super::manifest::{Manifest, SceneRecord};
use super::pipeline::{run_pipeline, PipelineConfig, SceneInputs};
use super::report::{CellKey, IoUAveraging, IoUReport, Variant};
use super::Overlap;

/// Provides the segmenter used for a scene.
pub trait BackendSource: Sync {
    fn backend_for(&self, record: &SceneRecord, key_mask: &BinaryMask) -> Result<Box<dyn Segmenter>>;

    fn is_serial(&self) -> bool {
        false
    }

    fn describe(&self) -> String;
}

/// Mock oracle per scene, built from the key mask and the scene's query
/// truth. Only the backend sees the truth; the prediction stage never does.
#[derive(Debug, Clone, Copy, Default)]
pub struct MockSource;

impl BackendSource for MockSource {
    fn backend_for(&self, record: &SceneRecord, key_mask: &BinaryMask) -> Result<Box<dyn Segmenter>> {
        let query_truth = load_mask(&record.query_truth)?;
        Ok(Box::new(MockSegmenter::new(stitch_masks(key_mask, &query_truth)?)))
    }

    fn describe(&self) -> String {
        "mock".into()
    }
}

#[derive(Debug, Clone)]
pub struct HttpSource(pub HttpSegmenter);

impl BackendSource for HttpSource {
    fn backend_for(&self, _: &SceneRecord, _: &BinaryMask) -> Result<Box<dyn Segmenter>> {
        Ok(Box::new(self.0.clone()))
    }

    fn is_serial(&self) -> bool {
        self.0.is_serial()
    }

    fn describe(&self) -> String {
        self.0.describe()
    }
}

/// Per-scene seed: the first 8 bytes (little endian) of
/// SHA-256(master_seed as LE bytes ‖ scene_id).
pub fn derive_scene_seed(master_seed: u64, scene_id: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(master_seed.to_le_bytes());
    h.update(scene_id.as_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("sha256 yields 32 bytes"))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellScore {
    pub key: CellKey,
    pub overlap: Overlap,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SceneOutcome {
    pub scene_id: String,
    pub cells: Vec<CellScore>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SceneFailure {
    pub scene_id: String,
    pub message: String,
}

/// Runs every configured cell on one scene and scores the query half.
pub fn evaluate_scene(
    source: &dyn BackendSource,
    record: &SceneRecord,
    config: &PipelineConfig,
) -> Result<SceneOutcome> {
    let inputs = SceneInputs {
        key_image: load_image(&record.key_image)?,
        key_mask: load_mask(&record.key_mask)?,
        query_image: load_image(&record.query_image)?,
    };
    let backend = source.backend_for(record, &inputs.key_mask)?;
    let seed = derive_scene_seed(config.master_seed, &record.scene_id);
    let output = run_pipeline(backend.as_ref(), &inputs, config, seed)?;

    // ground truth is read only once predictions are final
    let truth = load_mask(&record.query_truth)?;
    let mut cells = Vec::with_capacity(output.cells.len() * 2);
    for cell in &output.cells {
        for (variant, predicted) in [(Variant::Raw, &cell.raw), (Variant::Processed, &cell.processed)] {
            cells.push(CellScore {
                key: CellKey {
                    strategy: cell.strategy,
                    aggregator: cell.aggregator,
                    variant,
                },
                overlap: Overlap::measure(&truth, predicted)?,
            });
        }
    }
    Ok(SceneOutcome {
        scene_id: record.scene_id.clone(),
        cells,
    })
}

/// Evaluates every scene. Failing scenes are recorded and excluded from
/// the means; the call only fails when no scene succeeds.
pub fn evaluate_manifest(
    source: &dyn BackendSource,
    manifest: &Manifest,
    config: &PipelineConfig,
    averaging: IoUAveraging,
) -> Result<IoUReport> {
    config.validate()?;
    let one = |record: &SceneRecord| match evaluate_scene(source, record, config) {
        Ok(outcome) => Ok(outcome),
        Err(e) => {
            log::warn!("scene {} failed: {e}", record.scene_id);
            Err(SceneFailure {
                scene_id: record.scene_id.clone(),
                message: e.to_string(),
            })
        }
    };
    let results: Vec<std::result::Result<SceneOutcome, SceneFailure>> = if source.is_serial() {
        manifest.scenes().iter().map(one).collect()
    } else {
        manifest.scenes().par_iter().map(one).collect()
    };

    let mut outcomes = Vec::new();
    let mut failures = Vec::new();
    for r in results {
        match r {
            Ok(o) => outcomes.push(o),
            Err(f) => failures.push(f),
        }
    }
    if outcomes.is_empty() {
        return Err(Error::AllScenesFailed(failures.len()));
    }
    let echo = serde_json::json!({
        "pipeline": config,
        "backend": source.describe(),
        "averaging": averaging,
        "n_scenes": manifest.len(),
    });
    IoUReport::build(&outcomes, failures, averaging, echo)
}
