//! Binary dilation, erosion and closing with a centered square structuring
//! element. Pixels outside the image count as background for both
//! operations, so erosion clears everything within `radius` of the border.
//!
//! A square window is separable: each operation is a horizontal pass
//! followed by a vertical pass, both using running counts.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::BinaryMask;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct StructuringElement {
    side: u32,
}

impl StructuringElement {
    pub const DEFAULT_SIDE: u32 = 5;

    pub fn square(side: u32) -> Result<Self> {
        if side == 0 || side.is_multiple_of(2) {
            return Err(Error::InvalidConfig(format!(
                "structuring element side must be odd and >= 1, got {side}"
            )));
        }
        Ok(Self { side })
    }

    pub fn side(&self) -> u32 {
        self.side
    }

    pub fn radius(&self) -> u32 {
        self.side / 2
    }
}

impl Default for StructuringElement {
    fn default() -> Self {
        Self {
            side: Self::DEFAULT_SIDE,
        }
    }
}

impl TryFrom<u32> for StructuringElement {
    type Error = Error;

    fn try_from(side: u32) -> Result<Self> {
        Self::square(side)
    }
}

impl From<StructuringElement> for u32 {
    fn from(se: StructuringElement) -> u32 {
        se.side
    }
}

/// One-dimensional window pass over `len` samples spaced `stride` apart.
/// With `any == true` the output is set when any in-window sample is set
/// (dilation); otherwise only when the whole window is inside the line and
/// fully set (erosion).
fn pass_1d(src: &[bool], dst: &mut [bool], start: usize, len: usize, stride: usize, r: usize, any: bool) {
    let at = |i: usize| src[start + i * stride];
    // count of set samples inside [i - r, i + r] ∩ [0, len)
    let mut count = (0..len.min(r + 1)).filter(|&i| at(i)).count();
    for i in 0..len {
        let lo = i as isize - r as isize;
        let hi = i + r;
        let out = if any {
            count > 0
        } else {
            lo >= 0 && hi < len && count == 2 * r + 1
        };
        dst[start + i * stride] = out;
        if hi + 1 < len && at(hi + 1) {
            count += 1;
        }
        if lo >= 0 && at(lo as usize) {
            count -= 1;
        }
    }
}

fn separable(mask: &BinaryMask, se: &StructuringElement, any: bool) -> BinaryMask {
    let (w, h) = (mask.width() as usize, mask.height() as usize);
    let r = se.radius() as usize;
    if r == 0 {
        return mask.clone();
    }
    let mut tmp = vec![false; w * h];
    for y in 0..h {
        pass_1d(mask.values(), &mut tmp, y * w, w, 1, r, any);
    }
    let mut out = vec![false; w * h];
    for x in 0..w {
        pass_1d(&tmp, &mut out, x, h, w, r, any);
    }
    BinaryMask::new(mask.width(), mask.height(), out).expect("dimensions preserved")
}

pub fn dilate(mask: &BinaryMask, se: &StructuringElement) -> BinaryMask {
    separable(mask, se, true)
}

pub fn erode(mask: &BinaryMask, se: &StructuringElement) -> BinaryMask {
    separable(mask, se, false)
}

/// Dilation followed by erosion.
pub fn close(mask: &BinaryMask, se: &StructuringElement) -> BinaryMask {
    erode(&dilate(mask, se), se)
}

/// Where closing is applied relative to splitting the stitched mask.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CloseOrder {
    /// Close the full stitched mask, then take the query half.
    #[default]
    Stitched,
    /// Take the query half, then close it on its own.
    QueryHalf,
}

impl fmt::Display for CloseOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CloseOrder::Stitched => "stitched",
            CloseOrder::QueryHalf => "query-half",
        })
    }
}

impl FromStr for CloseOrder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "stitched" => Ok(CloseOrder::Stitched),
            "query-half" | "query" => Ok(CloseOrder::QueryHalf),
            other => Err(Error::InvalidConfig(format!(
                "unknown close order '{other}' (expected stitched or query-half)"
            ))),
        }
    }
}
