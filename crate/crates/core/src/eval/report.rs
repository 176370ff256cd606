use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::ensemble::Aggregator;
use crate::error::{Error, Result};
use crate::prompt::PromptStrategy;

use super::harness::{SceneFailure, SceneOutcome};
use super::Overlap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Raw,
    Processed,
}

impl Variant {
    pub const ALL: [Variant; 2] = [Variant::Raw, Variant::Processed];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Raw => "raw",
            Variant::Processed => "processed",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "raw" => Ok(Variant::Raw),
            "processed" => Ok(Variant::Processed),
            other => Err(Error::InvalidConfig(format!(
                "unknown variant '{other}' (expected raw or processed)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CellKey {
    pub strategy: PromptStrategy,
    pub aggregator: Aggregator,
    pub variant: Variant,
}

/// How per-scene results collapse into one number per cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IoUAveraging {
    /// Arithmetic mean of per-scene IoU.
    #[default]
    PerScene,
    /// Total intersection over total union across all scenes.
    Pooled,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellSummary {
    pub key: CellKey,
    pub per_scene: BTreeMap<String, f64>,
    pub mean_iou: f64,
    pub n_scenes: usize,
    pub n_failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IoUReport {
    pub cells: Vec<CellSummary>,
    pub failures: Vec<SceneFailure>,
    pub averaging: IoUAveraging,
    pub config_echo: serde_json::Value,
}

impl IoUReport {
    pub fn build(
        outcomes: &[SceneOutcome],
        failures: Vec<SceneFailure>,
        averaging: IoUAveraging,
        config_echo: serde_json::Value,
    ) -> Result<Self> {
        if outcomes.is_empty() {
            return Err(Error::AllScenesFailed(failures.len()));
        }
        let mut per_cell: BTreeMap<CellKey, (BTreeMap<String, f64>, Overlap)> = BTreeMap::new();
        for outcome in outcomes {
            for score in &outcome.cells {
                let entry = per_cell.entry(score.key).or_default();
                entry.0.insert(outcome.scene_id.clone(), score.overlap.iou());
                entry.1.intersection += score.overlap.intersection;
                entry.1.union += score.overlap.union;
            }
        }
        let n_failures = failures.len();
        let cells = per_cell
            .into_iter()
            .map(|(key, (per_scene, pooled))| {
                let mean_iou = match averaging {
                    IoUAveraging::PerScene => {
                        per_scene.values().sum::<f64>() / per_scene.len() as f64
                    }
                    IoUAveraging::Pooled => pooled.iou(),
                };
                CellSummary {
                    key,
                    n_scenes: per_scene.len(),
                    per_scene,
                    mean_iou,
                    n_failures,
                }
            })
            .collect();
        Ok(Self {
            cells,
            failures,
            averaging,
            config_echo,
        })
    }

    pub fn cell(&self, key: CellKey) -> Option<&CellSummary> {
        self.cells.iter().find(|c| c.key == key)
    }

    pub fn mean(&self, strategy: PromptStrategy, aggregator: Aggregator, variant: Variant) -> Option<f64> {
        self.cell(CellKey {
            strategy,
            aggregator,
            variant,
        })
        .map(|c| c.mean_iou)
    }

    /// Columns: strategy, aggregator, variant, scene_id, iou.
    pub fn write_report_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::io("report csv", std::io::Error::other(e));
        w.write_record(["strategy", "aggregator", "variant", "scene_id", "iou"]).map_err(io)?;
        for cell in &self.cells {
            for (scene, value) in &cell.per_scene {
                w.write_record([
                    cell.key.strategy.short_name(),
                    cell.key.aggregator.name(),
                    cell.key.variant.name(),
                    scene.as_str(),
                    &value.to_string(),
                ])
                .map_err(io)?;
            }
        }
        w.flush().map_err(|e| Error::io("report csv", e))
    }

    /// Columns: strategy, aggregator, variant, mean_iou, n_scenes, n_failures.
    pub fn write_summary_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::io("summary csv", std::io::Error::other(e));
        w.write_record(["strategy", "aggregator", "variant", "mean_iou", "n_scenes", "n_failures"])
            .map_err(io)?;
        for cell in &self.cells {
            w.write_record([
                cell.key.strategy.short_name(),
                cell.key.aggregator.name(),
                cell.key.variant.name(),
                &cell.mean_iou.to_string(),
                &cell.n_scenes.to_string(),
                &cell.n_failures.to_string(),
            ])
            .map_err(io)?;
        }
        w.flush().map_err(|e| Error::io("summary csv", e))
    }

    /// Rows "Prompt 1".."Prompt 4", columns aggregator × variant.
    pub fn matrix_table(&self) -> String {
        let mut strategies: Vec<PromptStrategy> = self.cells.iter().map(|c| c.key.strategy).collect();
        strategies.dedup();
        let mut columns: Vec<(Aggregator, Variant)> = Vec::new();
        for agg in Aggregator::ALL {
            for var in Variant::ALL {
                if self.cells.iter().any(|c| c.key.aggregator == agg && c.key.variant == var) {
                    columns.push((agg, var));
                }
            }
        }
        let header: Vec<String> = columns
            .iter()
            .map(|(a, v)| {
                let agg = match a {
                    Aggregator::Best => "Best",
                    Aggregator::Cwmv => "CWMV",
                };
                let var = match v {
                    Variant::Raw => "Raw",
                    Variant::Processed => "Processed",
                };
                format!("{agg} {var}")
            })
            .collect();
        let width = header.iter().map(String::len).max().unwrap_or(0).max(8);

        let mut s = String::new();
        let _ = write!(s, "{:<10}", "");
        for h in &header {
            let _ = write!(s, " | {h:>width$}");
        }
        s.push('\n');
        let _ = writeln!(s, "{}", "-".repeat(10 + header.len() * (width + 3)));
        for strategy in strategies {
            let _ = write!(s, "{:<10}", format!("Prompt {}", strategy.number()));
            for &(aggregator, variant) in &columns {
                match self.mean(strategy, aggregator, variant) {
                    Some(v) => {
                        let _ = write!(s, " | {v:>width$.4}");
                    }
                    None => {
                        let _ = write!(s, " | {:>width$}", "-");
                    }
                }
            }
            s.push('\n');
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::harness::CellScore;

    fn outcome(id: &str, overlaps: &[(u64, u64)]) -> SceneOutcome {
        SceneOutcome {
            scene_id: id.into(),
            cells: overlaps
                .iter()
                .zip(Variant::ALL)
                .map(|(&(i, u), variant)| CellScore {
                    key: CellKey {
                        strategy: PromptStrategy::KeyPlusQuery,
                        aggregator: Aggregator::Cwmv,
                        variant,
                    },
                    overlap: Overlap { intersection: i, union: u },
                })
                .collect(),
        }
    }

    #[test]
    fn per_scene_and_pooled_means() {
        let outcomes = vec![outcome("a", &[(1, 2), (2, 2)]), outcome("b", &[(3, 3), (0, 6)])];
        let r = IoUReport::build(&outcomes, vec![], IoUAveraging::PerScene, serde_json::Value::Null).unwrap();
        let raw = r.mean(PromptStrategy::KeyPlusQuery, Aggregator::Cwmv, Variant::Raw).unwrap();
        assert_eq!(raw, 0.75);
        let r = IoUReport::build(&outcomes, vec![], IoUAveraging::Pooled, serde_json::Value::Null).unwrap();
        let raw = r.mean(PromptStrategy::KeyPlusQuery, Aggregator::Cwmv, Variant::Raw).unwrap();
        assert_eq!(raw, 0.8);
    }

    #[test]
    fn no_outcomes_means_all_failed() {
        let failures = vec![SceneFailure { scene_id: "x".into(), message: "bad".into() }];
        assert!(matches!(
            IoUReport::build(&[], failures, IoUAveraging::PerScene, serde_json::Value::Null),
            Err(Error::AllScenesFailed(1))
        ));
    }

    #[test]
    fn csv_layout() {
        let outcomes = vec![outcome("a", &[(1, 2), (2, 2)])];
        let failures = vec![SceneFailure { scene_id: "z".into(), message: "oops".into() }];
        let r = IoUReport::build(&outcomes, failures, IoUAveraging::PerScene, serde_json::Value::Null).unwrap();
        let mut buf = Vec::new();
        r.write_report_csv(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "strategy,aggregator,variant,scene_id,iou\np2,cwmv,raw,a,0.5\np2,cwmv,processed,a,1\n"
        );
        let mut buf = Vec::new();
        r.write_summary_csv(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "strategy,aggregator,variant,mean_iou,n_scenes,n_failures\np2,cwmv,raw,0.5,1,1\np2,cwmv,processed,1,1,1\n"
        );
        let table = r.matrix_table();
        assert!(table.contains("Prompt 2"));
        assert!(table.contains("CWMV Processed"));
    }
}
