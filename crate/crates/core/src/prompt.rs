//! Automatic point/mask prompt generation from the key mask.
//!
//! Key-half points are always correct: positives land on key foreground
//! and negatives on key background. Query-half positives are "blind": they
//! are drawn uniformly over every query pixel because the query mask is
//! unknown, so any of them may in fact sit on background.

use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{BinaryMask, PixelCoord};
use crate::stitch::{stitch_masks, StitchLayout};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    Positive,
    Negative,
}

impl Polarity {
    /// Wire label: 1 for positive, 0 for negative.
    pub fn label(self) -> u8 {
        match self {
            Polarity::Positive => 1,
            Polarity::Negative => 0,
        }
    }

    pub fn is_positive(self) -> bool {
        self == Polarity::Positive
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PointPrompt {
    pub location: PixelCoord,
    pub polarity: Polarity,
}

impl PointPrompt {
    pub fn positive(location: PixelCoord) -> Self {
        Self {
            location,
            polarity: Polarity::Positive,
        }
    }

    pub fn negative(location: PixelCoord) -> Self {
        Self {
            location,
            polarity: Polarity::Negative,
        }
    }
}

/// The prompt set for one segmenter call, in stitched-frame coordinates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptBundle {
    pub points: Vec<PointPrompt>,
    pub mask_prompt: Option<BinaryMask>,
}

impl PromptBundle {
    pub fn new(points: Vec<PointPrompt>, mask_prompt: Option<BinaryMask>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidConfig("a prompt bundle needs at least one point".into()));
        }
        Ok(Self {
            points,
            mask_prompt,
        })
    }

    pub fn positives(&self) -> impl Iterator<Item = &PointPrompt> {
        self.points.iter().filter(|p| p.polarity.is_positive())
    }

    pub fn negatives(&self) -> impl Iterator<Item = &PointPrompt> {
        self.points.iter().filter(|p| !p.polarity.is_positive())
    }
}

/// The four prompt-generation techniques.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PromptStrategy {
    /// Positives and negatives from the key only.
    #[serde(rename = "p1")]
    KeyOnly,
    /// Key positives and negatives plus blind query positives.
    #[serde(rename = "p2")]
    KeyPlusQuery,
    /// Key negatives plus blind query positives; no key positives.
    #[serde(rename = "p3")]
    KeyNegativesPlusQuery,
    /// `KeyPlusQuery` points plus the key mask (query half zeroed) as a mask prompt.
    #[serde(rename = "p4")]
    MaskedKeyPlusQuery,
}

impl PromptStrategy {
    pub const ALL: [PromptStrategy; 4] = [
        PromptStrategy::KeyOnly,
        PromptStrategy::KeyPlusQuery,
        PromptStrategy::KeyNegativesPlusQuery,
        PromptStrategy::MaskedKeyPlusQuery,
    ];

    /// 1-based index used in reports ("Prompt 1" .. "Prompt 4").
    pub fn number(self) -> u8 {
        match self {
            PromptStrategy::KeyOnly => 1,
            PromptStrategy::KeyPlusQuery => 2,
            PromptStrategy::KeyNegativesPlusQuery => 3,
            PromptStrategy::MaskedKeyPlusQuery => 4,
        }
    }

    pub fn short_name(self) -> &'static str {
        match self {
            PromptStrategy::KeyOnly => "p1",
            PromptStrategy::KeyPlusQuery => "p2",
            PromptStrategy::KeyNegativesPlusQuery => "p3",
            PromptStrategy::MaskedKeyPlusQuery => "p4",
        }
    }

    pub fn uses_key_positives(self) -> bool {
        self != PromptStrategy::KeyNegativesPlusQuery
    }

    pub fn uses_query_positives(self) -> bool {
        self != PromptStrategy::KeyOnly
    }
}

impl fmt::Display for PromptStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

impl FromStr for PromptStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "p1" | "1" | "prompt1" | "key-only" => Ok(PromptStrategy::KeyOnly),
            "p2" | "2" | "prompt2" | "key-plus-query" => Ok(PromptStrategy::KeyPlusQuery),
            "p3" | "3" | "prompt3" | "key-negatives-plus-query" => {
                Ok(PromptStrategy::KeyNegativesPlusQuery)
            }
            "p4" | "4" | "prompt4" | "masked-key-plus-query" => {
                Ok(PromptStrategy::MaskedKeyPlusQuery)
            }
            other => Err(Error::InvalidConfig(format!(
                "unknown prompt strategy '{other}' (expected p1, p2, p3 or p4)"
            ))),
        }
    }
}

/// Number of points drawn per bundle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct PromptConfig {
    pub n_pos_key: usize,
    pub n_neg_key: usize,
    pub n_pos_query: usize,
}

impl Default for PromptConfig {
    fn default() -> Self {
        Self {
            n_pos_key: 3,
            n_neg_key: 3,
            n_pos_query: 1,
        }
    }
}

impl PromptConfig {
    /// Checks the per-strategy minimum counts.
    pub fn validate_for(&self, strategy: PromptStrategy) -> Result<()> {
        let need = |ok: bool, what: &str| {
            if ok {
                Ok(())
            } else {
                Err(Error::InvalidConfig(format!(
                    "strategy {strategy} requires {what} >= 1"
                )))
            }
        };
        if strategy.uses_key_positives() {
            need(self.n_pos_key >= 1, "n_pos_key")?;
        }
        need(self.n_neg_key >= 1, "n_neg_key")?;
        if strategy.uses_query_positives() {
            need(self.n_pos_query >= 1, "n_pos_query")?;
        }
        Ok(())
    }
}

/// Draws `n` distinct pixels whose mask value equals `want_foreground`.
pub fn sample_points<R: Rng + ?Sized>(
    mask: &BinaryMask,
    want_foreground: bool,
    n: usize,
    rng: &mut R,
) -> Result<Vec<PixelCoord>> {
    if n == 0 {
        return Err(Error::InvalidConfig("cannot sample zero points".into()));
    }
    let candidates = mask.coords_where(want_foreground);
    if candidates.len() < n {
        return Err(Error::InsufficientPixels {
            class: if want_foreground { "foreground" } else { "background" },
            wanted: n,
            available: candidates.len(),
        });
    }
    Ok(index::sample(rng, candidates.len(), n)
        .into_iter()
        .map(|i| candidates[i])
        .collect())
}

/// Draws `n` distinct query-half pixels uniformly, returned in stitched frame.
fn sample_blind_query<R: Rng + ?Sized>(
    layout: &StitchLayout,
    n: usize,
    rng: &mut R,
) -> Result<Vec<PixelCoord>> {
    let (qw, h) = layout.query_dims();
    let total = qw as usize * h as usize;
    if total < n {
        return Err(Error::InsufficientPixels {
            class: "query",
            wanted: n,
            available: total,
        });
    }
    Ok(index::sample(rng, total, n)
        .into_iter()
        .map(|i| {
            let q = PixelCoord::new((i % qw as usize) as u32, (i / qw as usize) as u32);
            layout.query_to_stitched(q)
        })
        .collect())
}

pub fn build_prompts<R: Rng + ?Sized>(
    strategy: PromptStrategy,
    key_mask: &BinaryMask,
    layout: &StitchLayout,
    config: &PromptConfig,
    rng: &mut R,
) -> Result<PromptBundle> {
    if key_mask.dims() != layout.key_dims() {
        return Err(Error::Dimensions(format!(
            "key mask is {}x{}, layout key half is {}x{}",
            key_mask.width(),
            key_mask.height(),
            layout.key_width(),
            layout.height()
        )));
    }
    config.validate_for(strategy)?;

    // Draw order is fixed (key positives, key negatives, query positives) so
    // that P2 and P4 produce identical points from the same stream.
    let mut points = Vec::new();
    if strategy.uses_key_positives() {
        points.extend(
            sample_points(key_mask, true, config.n_pos_key, rng)?
                .into_iter()
                .map(PointPrompt::positive),
        );
    }
    points.extend(
        sample_points(key_mask, false, config.n_neg_key, rng)?
            .into_iter()
            .map(PointPrompt::negative),
    );
    if strategy.uses_query_positives() {
        points.extend(
            sample_blind_query(layout, config.n_pos_query, rng)?
                .into_iter()
                .map(PointPrompt::positive),
        );
    }

    let mask_prompt = match strategy {
        PromptStrategy::MaskedKeyPlusQuery => {
            let (qw, h) = layout.query_dims();
            Some(stitch_masks(key_mask, &BinaryMask::empty(qw, h)?)?)
        }
        _ => None,
    };
    PromptBundle::new(points, mask_prompt)
}
