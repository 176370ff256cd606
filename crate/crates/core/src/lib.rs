//! One-shot segmentation with a promptable segmenter.
//!
//! A key image with a known binary mask is stitched side by side with a
//! query image. Point prompts are sampled from the key mask (and blindly
//! from the query half), the stitched image is segmented K times with
//! fresh prompts, the runs are aggregated by best confidence or by
//! confidence-weighted majority voting, closed morphologically, and the
//! query half is returned.
//!
//! ```no_run
//! use stitchseg::prelude::*;
//!
//! # fn main() -> stitchseg::Result<()> {
//! let inputs = SceneInputs {
//!     key_image: load_image("key.png")?,
//!     key_mask: load_mask("key_mask.png")?,
//!     query_image: load_image("query.png")?,
//! };
//! let backend = HttpSegmenter::new("http://127.0.0.1:8000", std::time::Duration::from_secs(60), true);
//! let output = run_pipeline(&backend, &inputs, &PipelineConfig::default(), 7)?;
//! save_mask(&output.cells[0].processed, "query_mask.png")?;
//! # Ok(())
//! # }
//! ```

pub mod ensemble;
pub mod error;
pub mod eval;
pub mod morphology;
pub mod overlay;
pub mod prompt;
pub mod raster;
pub mod segmenter;
pub mod stitch;

pub use error::{Error, Result};

/// Runs `f` on a rayon pool capped at `jobs` threads (0 = rayon's default).
pub fn with_jobs<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("cannot build thread pool: {e}")))?;
    Ok(pool.install(f))
}

pub mod prelude {
    pub use crate::ensemble::{
        accumulate_cwmv, aggregate_best, aggregate_cwmv, cwmv_threshold, run_ensemble, Aggregator,
        CwmvParams, EnsembleConfig, EnsembleResult, ScoreMap,
    };
    pub use crate::error::{Error, Result};
    pub use crate::eval::{
        evaluate_manifest, evaluate_scene, iou, run_pipeline, IoUAveraging, IoUReport, Manifest,
        MockSource, PipelineConfig, SceneInputs, SceneRecord, Variant,
    };
    pub use crate::morphology::{close, dilate, erode, CloseOrder, StructuringElement};
    pub use crate::prompt::{
        build_prompts, sample_points, PointPrompt, Polarity, PromptBundle, PromptConfig, PromptStrategy,
    };
    pub use crate::raster::{load_image, load_mask, save_image, save_mask, BinaryMask, PixelCoord, RasterImage};
    pub use crate::segmenter::{
        mock_segment, segment, BackendDescriptor, BackendKind, HttpSegmenter, MockSegmenter,
        SegmentationRun, Segmenter,
    };
    pub use crate::stitch::{split_mask, stitch, stitch_masks, stitch_with, StitchLayout};
}
