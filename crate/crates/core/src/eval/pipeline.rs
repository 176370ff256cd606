use serde::{Deserialize, Serialize};

use crate::ensemble::{run_ensemble, Aggregator, CwmvParams, EnsembleConfig, EnsembleResult};
use crate::error::{Error, Result};
use crate::morphology::{close, CloseOrder, StructuringElement};
use crate::prompt::{PromptConfig, PromptStrategy};
use crate::raster::{BinaryMask, RasterImage};
use crate::segmenter::Segmenter;
use crate::stitch::{split_mask, stitch_with, StitchLayout};

/// Everything the prediction stage may see. There is deliberately no
/// query ground truth here.
#[derive(Debug, Clone)]
pub struct SceneInputs {
    pub key_image: RasterImage,
    pub key_mask: BinaryMask,
    pub query_image: RasterImage,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub strategies: Vec<PromptStrategy>,
    pub aggregators: Vec<Aggregator>,
    pub runs: usize,
    pub master_seed: u64,
    pub prompt_config: PromptConfig,
    pub cwmv: CwmvParams,
    pub structuring_element: StructuringElement,
    pub close_order: CloseOrder,
    pub allow_width_mismatch: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            strategies: vec![PromptStrategy::KeyPlusQuery],
            aggregators: vec![Aggregator::Cwmv],
            runs: 16,
            master_seed: 0,
            prompt_config: PromptConfig::default(),
            cwmv: CwmvParams::default(),
            structuring_element: StructuringElement::default(),
            close_order: CloseOrder::default(),
            allow_width_mismatch: false,
        }
    }
}

impl PipelineConfig {
    /// All four strategies with both aggregators.
    pub fn full_matrix(self) -> Self {
        Self {
            strategies: PromptStrategy::ALL.to_vec(),
            aggregators: Aggregator::ALL.to_vec(),
            ..self
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.strategies.is_empty() || self.aggregators.is_empty() {
            return Err(Error::InvalidConfig(
                "at least one strategy and one aggregator are required".into(),
            ));
        }
        for &strategy in &self.strategies {
            self.ensemble_config(strategy, self.master_seed).validate()?;
        }
        Ok(())
    }

    pub fn ensemble_config(&self, strategy: PromptStrategy, seed: u64) -> EnsembleConfig {
        EnsembleConfig {
            runs: self.runs,
            master_seed: seed,
            strategy,
            prompt_config: self.prompt_config,
        }
    }
}

/// Predictions for one (strategy, aggregator) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellPrediction {
    pub strategy: PromptStrategy,
    pub aggregator: Aggregator,
    /// Aggregated stitched-frame mask before closing.
    pub stitched_raw: BinaryMask,
    /// Query half before closing.
    pub raw: BinaryMask,
    /// Query half after closing.
    pub processed: BinaryMask,
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub stitched: RasterImage,
    pub layout: StitchLayout,
    pub ensembles: Vec<(PromptStrategy, EnsembleResult)>,
    pub cells: Vec<CellPrediction>,
}

impl PipelineOutput {
    pub fn cell(&self, strategy: PromptStrategy, aggregator: Aggregator) -> Option<&CellPrediction> {
        self.cells
            .iter()
            .find(|c| c.strategy == strategy && c.aggregator == aggregator)
    }

    pub fn ensemble(&self, strategy: PromptStrategy) -> Option<&EnsembleResult> {
        self.ensembles.iter().find(|(s, _)| *s == strategy).map(|(_, e)| e)
    }
}

fn postprocess(
    stitched_mask: &BinaryMask,
    layout: &StitchLayout,
    se: &StructuringElement,
    order: CloseOrder,
) -> Result<(BinaryMask, BinaryMask)> {
    let (_, raw) = split_mask(stitched_mask, layout)?;
    let processed = match order {
        CloseOrder::Stitched => split_mask(&close(stitched_mask, se), layout)?.1,
        CloseOrder::QueryHalf => close(&raw, se),
    };
    Ok((raw, processed))
}

/// Stitch, ensemble per strategy, aggregate, and post-process. One
/// ensemble is shared by every aggregator of a strategy; all strategies use
/// the same `seed`, so P2 and P4 see identical point draws.
pub fn run_pipeline(
    backend: &dyn Segmenter,
    inputs: &SceneInputs,
    config: &PipelineConfig,
    seed: u64,
) -> Result<PipelineOutput> {
    config.validate()?;
    let SceneInputs {
        key_image,
        key_mask,
        query_image,
    } = inputs;
    if key_mask.dims() != key_image.dims() {
        return Err(Error::Dimensions(format!(
            "key mask is {}x{}, key image is {}x{}",
            key_mask.width(),
            key_mask.height(),
            key_image.width(),
            key_image.height()
        )));
    }
    let (stitched, layout) = stitch_with(key_image, query_image, config.allow_width_mismatch)?;

    let mut ensembles = Vec::with_capacity(config.strategies.len());
    let mut cells = Vec::new();
    for &strategy in &config.strategies {
        let result = run_ensemble(
            backend,
            &stitched,
            key_mask,
            &layout,
            &config.ensemble_config(strategy, seed),
        )?;
        for &aggregator in &config.aggregators {
            let stitched_raw = aggregator.apply(&result, &config.cwmv);
            let (raw, processed) =
                postprocess(&stitched_raw, &layout, &config.structuring_element, config.close_order)?;
            cells.push(CellPrediction {
                strategy,
                aggregator,
                stitched_raw,
                raw,
                processed,
            });
        }
        ensembles.push((strategy, result));
    }
    Ok(PipelineOutput {
        stitched,
        layout,
        ensembles,
        cells,
    })
}
