use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use stitchseg::ensemble::{Aggregator, CwmvParams};
use stitchseg::eval::{IoUAveraging, PipelineConfig};
use stitchseg::morphology::{CloseOrder, StructuringElement};
use stitchseg::prompt::{PromptConfig, PromptStrategy};
use stitchseg::segmenter::{BackendDescriptor, BackendKind};

use super::args::CommonArgs;
use super::CliError;

pub const ENDPOINT_ENV: &str = "STITCHSEG_ENDPOINT";

/// Fully resolved settings for one invocation. Loaded from an optional TOML
/// file, then overridden field by field by any flag given on the command line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub strategy: PromptStrategy,
    pub runs: usize,
    pub master_seed: u64,
    pub n_pos_key: usize,
    pub n_neg_key: usize,
    pub n_pos_query: usize,
    pub aggregator: Aggregator,
    pub m: f64,
    pub close_side: u32,
    pub close_order: CloseOrder,
    pub allow_width_mismatch: bool,
    pub averaging: IoUAveraging,
    pub jobs: usize,
    pub backend: BackendDescriptor,
    pub outputs: Outputs,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Outputs {
    pub out: Option<PathBuf>,
    pub overlay: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let prompt = PromptConfig::default();
        Self {
            strategy: PromptStrategy::KeyPlusQuery,
            runs: 16,
            master_seed: 0,
            n_pos_key: prompt.n_pos_key,
            n_neg_key: prompt.n_neg_key,
            n_pos_query: prompt.n_pos_query,
            aggregator: Aggregator::Cwmv,
            m: CwmvParams::DEFAULT_M,
            close_side: StructuringElement::DEFAULT_SIDE,
            close_order: CloseOrder::Stitched,
            allow_width_mismatch: false,
            averaging: IoUAveraging::PerScene,
            jobs: 0,
            backend: BackendDescriptor::default(),
            outputs: Outputs::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text)
            .map_err(|e| CliError::Usage(format!("invalid config {}: {e}", path.display())))
    }

    pub fn resolve(common: &CommonArgs) -> Result<Self, CliError> {
        let mut cfg = match &common.config {
            Some(path) => Self::load(path)?,
            None => Self::default(),
        };
        macro_rules! take {
            ($($field:ident),*) => {$(
                if let Some(v) = common.$field.clone() {
                    cfg.$field = v;
                }
            )*};
        }
        take!(strategy, runs, master_seed, n_pos_key, n_neg_key, n_pos_query, aggregator, m, close_side, close_order, jobs);
        if common.allow_width_mismatch {
            cfg.allow_width_mismatch = true;
        }
        if common.pooled {
            cfg.averaging = IoUAveraging::Pooled;
        }
        if let Some(kind) = common.backend {
            cfg.backend.kind = kind;
        }
        if let Some(ep) = &common.endpoint {
            cfg.backend.endpoint = Some(ep.clone());
        }
        if cfg.backend.endpoint.is_none() {
            cfg.backend.endpoint = std::env::var(ENDPOINT_ENV).ok().filter(|s| !s.is_empty());
        }
        if let Some(t) = common.timeout {
            cfg.backend.timeout_secs = t;
        }
        if common.serial {
            cfg.backend.serial = true;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn prompt_config(&self) -> PromptConfig {
        PromptConfig {
            n_pos_key: self.n_pos_key,
            n_neg_key: self.n_neg_key,
            n_pos_query: self.n_pos_query,
        }
    }

    pub fn pipeline(&self) -> Result<PipelineConfig, CliError> {
        Ok(PipelineConfig {
            strategies: vec![self.strategy],
            aggregators: vec![self.aggregator],
            runs: self.runs,
            master_seed: self.master_seed,
            prompt_config: self.prompt_config(),
            cwmv: CwmvParams::new(self.m).map_err(CliError::usage)?,
            structuring_element: StructuringElement::square(self.close_side).map_err(CliError::usage)?,
            close_order: self.close_order,
            allow_width_mismatch: self.allow_width_mismatch,
        })
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.backend.validate().map_err(CliError::usage)?;
        self.pipeline()?.validate().map_err(CliError::usage)
    }

    pub fn is_mock(&self) -> bool {
        self.backend.kind == BackendKind::Mock
    }

    /// One-line JSON echo, printed by every command.
    pub fn echo(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_round_trip_with_partial_file() {
        let cfg: RunConfig = toml::from_str("strategy = \"p3\"\nruns = 8\n[backend]\nkind = \"http\"\nendpoint = \"http://h:1\"\n").unwrap();
        assert_eq!(cfg.strategy, PromptStrategy::KeyNegativesPlusQuery);
        assert_eq!(cfg.runs, 8);
        assert_eq!(cfg.m, 4.0);
        assert_eq!(cfg.backend.kind, BackendKind::Http);
        let text = toml::to_string(&cfg).unwrap();
        assert_eq!(toml::from_str::<RunConfig>(&text).unwrap(), cfg);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(toml::from_str::<RunConfig>("stratgy = \"p1\"").is_err());
    }
}
