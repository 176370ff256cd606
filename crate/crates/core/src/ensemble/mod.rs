//! K randomized prompt → segment runs and their aggregation.

mod cwmv;

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use cwmv::{accumulate_cwmv, aggregate_cwmv, cwmv_threshold, CwmvParams, ScoreMap};

use crate::error::{Error, Result};
use crate::prompt::{build_prompts, PromptBundle, PromptConfig, PromptStrategy};
use crate::raster::{BinaryMask, RasterImage};
use crate::segmenter::{segment, SegmentationRun, Segmenter};
use crate::stitch::StitchLayout;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub runs: usize,
    pub master_seed: u64,
    pub strategy: PromptStrategy,
    pub prompt_config: PromptConfig,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        Self {
            runs: 16,
            master_seed: 0,
            strategy: PromptStrategy::KeyPlusQuery,
            prompt_config: PromptConfig::default(),
        }
    }
}

impl EnsembleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.runs == 0 {
            return Err(Error::InvalidConfig("ensemble needs at least one run (K >= 1)".into()));
        }
        self.prompt_config.validate_for(self.strategy)
    }
}

/// The random stream for run `index`: ChaCha8 keyed by the master seed,
/// with the run index selecting the stream.
pub fn run_rng(master_seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index as u64);
    rng
}

/// The K runs in run-index order, with the prompts each one used.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleResult {
    runs: Vec<SegmentationRun>,
    prompts: Vec<PromptBundle>,
}

impl EnsembleResult {
    pub fn new(runs: Vec<SegmentationRun>, prompts: Vec<PromptBundle>) -> Result<Self> {
        let first = runs
            .first()
            .ok_or_else(|| Error::InvalidConfig("ensemble result must hold at least one run".into()))?;
        if prompts.len() != runs.len() {
            return Err(Error::InvalidConfig(format!(
                "{} runs but {} prompt bundles",
                runs.len(),
                prompts.len()
            )));
        }
        for (i, r) in runs.iter().enumerate() {
            r.mask.ensure_same_dims(&first.mask, &format!("run {i} mask"))?;
            if !(0.0..=1.0).contains(&r.confidence) {
                return Err(Error::Protocol(format!(
                    "run {i} confidence {} outside [0, 1]",
                    r.confidence
                )));
            }
        }
        Ok(Self { runs, prompts })
    }

    pub fn runs(&self) -> &[SegmentationRun] {
        &self.runs
    }

    pub fn prompts(&self) -> &[PromptBundle] {
        &self.prompts
    }

    pub fn len(&self) -> usize {
        self.runs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.runs.is_empty()
    }

    /// Index of the highest-confidence run; the lowest index wins ties.
    pub fn best_index(&self) -> usize {
        best_index(&self.runs).expect("ensemble result is never empty")
    }

    pub fn accumulate(&self) -> ScoreMap {
        accumulate_cwmv(&self.runs).expect("validated at construction")
    }

    pub fn threshold(&self, params: &CwmvParams) -> f64 {
        cwmv_threshold(&self.runs, params).expect("validated at construction")
    }

    pub fn cwmv(&self, params: &CwmvParams) -> BinaryMask {
        aggregate_cwmv(&self.runs, params).expect("validated at construction")
    }
}

fn best_index(runs: &[SegmentationRun]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, r) in runs.iter().enumerate() {
        match best {
            Some(b) if runs[b].confidence >= r.confidence => {}
            _ => best = Some(i),
        }
    }
    best
}

/// The single run with maximal confidence (first one on ties).
pub fn aggregate_best(result: &EnsembleResult) -> SegmentationRun {
    result.runs[result.best_index()].clone()
}

/// Runs the ensemble. Non-serial backends are driven concurrently on the
/// current rayon pool; the returned runs are always in run-index order and
/// the first failing run (by index) aborts the whole ensemble.
pub fn run_ensemble(
    backend: &dyn Segmenter,
    stitched: &RasterImage,
    key_mask: &BinaryMask,
    layout: &StitchLayout,
    config: &EnsembleConfig,
) -> Result<EnsembleResult> {
    config.validate()?;
    if stitched.dims() != layout.stitched_dims() {
        return Err(Error::Dimensions(format!(
            "stitched image is {}x{}, layout expects {}x{}",
            stitched.width(),
            stitched.height(),
            layout.total_width(),
            layout.height()
        )));
    }

    let one = |index: usize| -> Result<(SegmentationRun, PromptBundle)> {
        let mut rng = run_rng(config.master_seed, index);
        let attempt = build_prompts(config.strategy, key_mask, layout, &config.prompt_config, &mut rng)
            .and_then(|bundle| segment(backend, stitched, &bundle).map(|run| (run, bundle)));
        attempt.map_err(|e| Error::RunFailed {
            index,
            source: Box::new(e),
        })
    };

    let outcomes: Vec<Result<(SegmentationRun, PromptBundle)>> = if backend.is_serial() {
        (0..config.runs).map(one).collect()
    } else {
        (0..config.runs).into_par_iter().map(one).collect()
    };

    let mut runs = Vec::with_capacity(config.runs);
    let mut prompts = Vec::with_capacity(config.runs);
    for outcome in outcomes {
        let (run, bundle) = outcome?;
        runs.push(run);
        prompts.push(bundle);
    }
    EnsembleResult::new(runs, prompts)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregator {
    Best,
    Cwmv,
}

impl Aggregator {
    pub const ALL: [Aggregator; 2] = [Aggregator::Best, Aggregator::Cwmv];

    pub fn name(self) -> &'static str {
        match self {
            Aggregator::Best => "best",
            Aggregator::Cwmv => "cwmv",
        }
    }

    /// The aggregated stitched-frame mask.
    pub fn apply(self, result: &EnsembleResult, params: &CwmvParams) -> BinaryMask {
        match self {
            Aggregator::Best => aggregate_best(result).mask,
            Aggregator::Cwmv => result.cwmv(params),
        }
    }
}

impl fmt::Display for Aggregator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Aggregator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "best" => Ok(Aggregator::Best),
            "cwmv" => Ok(Aggregator::Cwmv),
            other => Err(Error::InvalidConfig(format!(
                "unknown aggregator '{other}' (expected best or cwmv)"
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::segmenter::{mock_segment, MockSegmenter};
    use crate::stitch::{stitch, stitch_masks};

    fn run_with(c: f64) -> SegmentationRun {
        SegmentationRun {
            mask: BinaryMask::filled(2, 2, c > 0.5).unwrap(),
            confidence: c,
        }
    }

    fn result_of(cs: &[f64]) -> EnsembleResult {
        let runs: Vec<_> = cs.iter().map(|&c| run_with(c)).collect();
        let prompts = vec![
            PromptBundle::new(vec![crate::prompt::PointPrompt::positive(Default::default())], None).unwrap();
            runs.len()
        ];
        EnsembleResult::new(runs, prompts).unwrap()
    }

    #[test]
    fn best_breaks_ties_on_lowest_index() {
        assert_eq!(result_of(&[0.3, 0.9, 0.9]).best_index(), 1);
        assert_eq!(result_of(&[0.5]).best_index(), 0);
        assert_eq!(result_of(&[0.2, 0.2, 0.2]).best_index(), 0);
        assert_eq!(aggregate_best(&result_of(&[0.3, 0.9, 0.1])).confidence, 0.9);
    }

    fn scene() -> (RasterImage, BinaryMask, StitchLayout, MockSegmenter) {
        let key = RasterImage::filled(8, 8, [10, 10, 10]).unwrap();
        let query = RasterImage::filled(8, 8, [20, 20, 20]).unwrap();
        let (stitched, layout) = stitch(&key, &query).unwrap();
        let key_mask = BinaryMask::from_fn(8, 8, |x, y| x < 4 && y < 4).unwrap();
        let query_truth = BinaryMask::from_fn(8, 8, |x, y| x >= 2 && y >= 2).unwrap();
        let truth = stitch_masks(&key_mask, &query_truth).unwrap();
        (stitched, key_mask, layout, MockSegmenter::new(truth))
    }

    #[test]
    fn single_run_equals_mock_output() {
        let (img, km, layout, mock) = scene();
        let cfg = EnsembleConfig { runs: 1, master_seed: 11, ..Default::default() };
        let res = run_ensemble(&mock, &img, &km, &layout, &cfg).unwrap();
        assert_eq!(res.len(), 1);
        let expected = mock_segment(mock.truth(), &img, &res.prompts()[0]).unwrap();
        assert_eq!(res.runs()[0], expected);
        let mut rng = run_rng(11, 0);
        let bundle = build_prompts(cfg.strategy, &km, &layout, &cfg.prompt_config, &mut rng).unwrap();
        assert_eq!(res.prompts()[0], bundle);
    }

    #[test]
    fn zero_runs_is_rejected() {
        let (img, km, layout, mock) = scene();
        let cfg = EnsembleConfig { runs: 0, ..Default::default() };
        assert!(matches!(run_ensemble(&mock, &img, &km, &layout, &cfg), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn reruns_are_identical() {
        let (img, km, layout, mock) = scene();
        let cfg = EnsembleConfig { runs: 24, master_seed: 5, ..Default::default() };
        let a = run_ensemble(&mock, &img, &km, &layout, &cfg).unwrap();
        let b = run_ensemble(&mock, &img, &km, &layout, &cfg).unwrap();
        assert_eq!(a, b);
        let other = EnsembleConfig { master_seed: 6, ..cfg };
        assert_ne!(a.prompts(), run_ensemble(&mock, &img, &km, &layout, &other).unwrap().prompts());
    }

    #[test]
    fn failing_run_index_is_reported() {
        struct FailOn(usize, std::sync::atomic::AtomicUsize);
        impl Segmenter for FailOn {
            fn infer(&self, image: &RasterImage, _: &PromptBundle) -> Result<SegmentationRun> {
                let n = self.1.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
                if n == self.0 {
                    return Err(Error::Backend { endpoint: "x".into(), message: "boom".into() });
                }
                Ok(SegmentationRun { mask: BinaryMask::empty(image.width(), image.height())?, confidence: 0.5 })
            }
            fn is_serial(&self) -> bool {
                true
            }
            fn describe(&self) -> String {
                "fail".into()
            }
        }
        let (img, km, layout, _) = scene();
        let backend = FailOn(2, Default::default());
        let cfg = EnsembleConfig { runs: 4, ..Default::default() };
        match run_ensemble(&backend, &img, &km, &layout, &cfg) {
            Err(Error::RunFailed { index, .. }) => assert_eq!(index, 2),
            other => panic!("expected run failure, got {other:?}"),
        }
    }

    #[test]
    fn run_streams_differ_by_index() {
        use rand::RngCore;
        assert_ne!(run_rng(1, 0).next_u64(), run_rng(1, 1).next_u64());
        assert_eq!(run_rng(1, 3).next_u64(), run_rng(1, 3).next_u64());
    }
}
