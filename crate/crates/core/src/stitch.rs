//! Side-by-side concatenation of a key and a query raster.
//!
//! The key always occupies the left columns `[0, key_width)` and the query
//! the right columns `[key_width, total_width)`. Query-frame coordinates
//! map into the stitched frame by adding `key_width` to `x`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{BinaryMask, PixelCoord, RasterImage};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StitchLayout {
    key_width: u32,
    total_width: u32,
    height: u32,
}

impl StitchLayout {
    pub fn new(key_width: u32, total_width: u32, height: u32) -> Result<Self> {
        if key_width == 0 || key_width >= total_width || height == 0 {
            return Err(Error::Dimensions(format!(
                "invalid stitch layout: key_width {key_width}, total_width {total_width}, height {height}"
            )));
        }
        Ok(Self {
            key_width,
            total_width,
            height,
        })
    }

    pub fn key_width(&self) -> u32 {
        self.key_width
    }

    pub fn total_width(&self) -> u32 {
        self.total_width
    }

    pub fn query_width(&self) -> u32 {
        self.total_width - self.key_width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn key_dims(&self) -> (u32, u32) {
        (self.key_width, self.height)
    }

    pub fn query_dims(&self) -> (u32, u32) {
        (self.query_width(), self.height)
    }

    pub fn stitched_dims(&self) -> (u32, u32) {
        (self.total_width, self.height)
    }

    pub fn query_to_stitched(&self, p: PixelCoord) -> PixelCoord {
        PixelCoord::new(p.x + self.key_width, p.y)
    }

    pub fn in_query_half(&self, p: PixelCoord) -> bool {
        p.x >= self.key_width
    }
}

/// Concatenates key and query, requiring equal dimensions.
pub fn stitch(key: &RasterImage, query: &RasterImage) -> Result<(RasterImage, StitchLayout)> {
    stitch_with(key, query, false)
}

/// Concatenates key and query. Heights must always agree; widths may differ
/// only when `allow_width_mismatch` is set.
pub fn stitch_with(
    key: &RasterImage,
    query: &RasterImage,
    allow_width_mismatch: bool,
) -> Result<(RasterImage, StitchLayout)> {
    if key.height() != query.height() {
        return Err(Error::HeightMismatch {
            key: key.height(),
            query: query.height(),
        });
    }
    if key.width() != query.width() && !allow_width_mismatch {
        return Err(Error::WidthMismatch {
            key: key.width(),
            query: query.width(),
        });
    }
    let layout = StitchLayout::new(key.width(), key.width() + query.width(), key.height())?;
    let kw = key.width() as usize;
    let qw = query.width() as usize;
    let mut pixels = Vec::with_capacity(layout.total_width as usize * layout.height as usize);
    for (krow, qrow) in key.pixels().chunks_exact(kw).zip(query.pixels().chunks_exact(qw)) {
        pixels.extend_from_slice(krow);
        pixels.extend_from_slice(qrow);
    }
    let image = RasterImage::new(layout.total_width, layout.height, pixels)?;
    Ok((image, layout))
}

pub fn stitch_masks(key_mask: &BinaryMask, query_mask: &BinaryMask) -> Result<BinaryMask> {
    if key_mask.height() != query_mask.height() {
        return Err(Error::Dimensions(format!(
            "mask heights differ: key {} vs query {}",
            key_mask.height(),
            query_mask.height()
        )));
    }
    let kw = key_mask.width() as usize;
    let qw = query_mask.width() as usize;
    let mut values = Vec::with_capacity((kw + qw) * key_mask.height() as usize);
    for (krow, qrow) in key_mask
        .values()
        .chunks_exact(kw)
        .zip(query_mask.values().chunks_exact(qw))
    {
        values.extend_from_slice(krow);
        values.extend_from_slice(qrow);
    }
    BinaryMask::new(key_mask.width() + query_mask.width(), key_mask.height(), values)
}

/// Splits a stitched-frame mask into its (key, query) halves.
pub fn split_mask(stitched: &BinaryMask, layout: &StitchLayout) -> Result<(BinaryMask, BinaryMask)> {
    if stitched.dims() != layout.stitched_dims() {
        return Err(Error::Dimensions(format!(
            "stitched mask is {}x{}, layout expects {}x{}",
            stitched.width(),
            stitched.height(),
            layout.total_width,
            layout.height
        )));
    }
    let kw = layout.key_width as usize;
    let mut key = Vec::with_capacity(kw * layout.height as usize);
    let mut query = Vec::with_capacity(layout.query_width() as usize * layout.height as usize);
    for row in stitched.values().chunks_exact(layout.total_width as usize) {
        key.extend_from_slice(&row[..kw]);
        query.extend_from_slice(&row[kw..]);
    }
    Ok((
        BinaryMask::new(layout.key_width, layout.height, key)?,
        BinaryMask::new(layout.query_width(), layout.height, query)?,
    ))
}

/// The query half of a stitched-frame mask.
pub fn query_half(stitched: &BinaryMask, layout: &StitchLayout) -> Result<BinaryMask> {
    split_mask(stitched, layout).map(|(_, q)| q)
}
