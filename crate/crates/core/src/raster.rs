//! Image and mask value types plus lossless PNG I/O.
//!
//! Coordinates are `(x, y)` with the origin at the top-left corner, `x`
//! growing rightward and `y` growing downward. Storage is row-major.

use std::io::Cursor;
use std::path::Path;

use image::{DynamicImage, GrayImage, ImageFormat, RgbImage};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A pixel location inside a raster.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PixelCoord {
    pub x: u32,
    pub y: u32,
}

impl PixelCoord {
    pub const fn new(x: u32, y: u32) -> Self {
        Self { x, y }
    }
}

fn check_dims(width: u32, height: u32, len: usize) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::Dimensions(format!(
            "raster must be at least 1x1, got {width}x{height}"
        )));
    }
    if len != width as usize * height as usize {
        return Err(Error::Dimensions(format!(
            "{width}x{height} raster needs {} values, got {len}",
            width as usize * height as usize
        )));
    }
    Ok(())
}

/// An 8-bit RGB raster.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RasterImage {
    width: u32,
    height: u32,
    pixels: Vec<[u8; 3]>,
}

impl RasterImage {
    pub fn new(width: u32, height: u32, pixels: Vec<[u8; 3]>) -> Result<Self> {
        check_dims(width, height, pixels.len())?;
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn filled(width: u32, height: u32, rgb: [u8; 3]) -> Result<Self> {
        Self::new(width, height, vec![rgb; width as usize * height as usize])
    }

    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> [u8; 3]) -> Result<Self> {
        let mut pixels = Vec::with_capacity(width as usize * height as usize);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        Self::new(width, height, pixels)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn dims(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    pub fn pixels(&self) -> &[[u8; 3]] {
        &self.pixels
    }

    pub fn get(&self, x: u32, y: u32) -> [u8; 3] {
        self.pixels[y as usize * self.width as usize + x as usize]
    }

    pub fn set(&mut self, x: u32, y: u32, rgb: [u8; 3]) {
        let w = self.width as usize;
        self.pixels[y as usize * w + x as usize] = rgb;
    }

    pub fn contains(&self, p: PixelCoord) -> bool {
        p.x < self.width && p.y < self.height
    }

    pub fn to_rgb_image(&self) -> RgbImage {
        let raw = self.pixels.iter().flatten().copied().collect();
        RgbImage::from_raw(self.width, self.height, raw).expect("buffer length matches dimensions")
    }

    fn from_dynamic(img: DynamicImage, path: &Path) -> Result<Self> {
        let (width, height) = (img.width(), img.height());
        let pixels = match img {
            DynamicImage::ImageLuma8(buf) => buf.pixels().map(|p| [p[0]; 3]).collect(),
            DynamicImage::ImageLumaA8(buf) => buf.pixels().map(|p| [p[0]; 3]).collect(),
            DynamicImage::ImageRgb8(buf) => buf.pixels().map(|p| p.0).collect(),
            DynamicImage::ImageRgba8(buf) => buf.pixels().map(|p| [p[0], p[1], p[2]]).collect(),
            other => {
                return Err(Error::UnsupportedBitDepth {
                    path: path.to_path_buf(),
                    color: format!("{:?}", other.color()),
                })
            }
        };
        Self::new(width, height, pixels)
    }

    /// Decodes PNG bytes. `origin` is only used for error messages.
    pub fn decode_png(bytes: &[u8], origin: &Path) -> Result<Self> {
        Self::from_dynamic(decode_png(bytes, origin)?, origin)
    }

    pub fn encode_png(&self) -> Vec<u8> {
        let mut out = Cursor::new(Vec::new());
        self.to_rgb_image()
            .write_to(&mut out, ImageFormat::Png)
            .expect("in-memory PNG encoding cannot fail");
        out.into_inner()
    }
}

/// A per-pixel boolean target map; `true` marks the class of interest.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BinaryMask {
    width: u32,
    height: u32,
    values: Vec<bool>,
}

impl BinaryMask {
    pub fn new(width: u32, height: u32, values: Vec<bool>) -> Result<Self> {
        check_dims(width, height, values.len())?;
        Ok(Self {
            width,
            height,
            values,
        })
    }

    pub fn filled(width: u32, height: u32, value: bool) -> Result<Self> {
        Self::new(width, height, vec![value; width as usize * height as usize])
    }

    pub fn empty(width: u32, height: u32) -> Result<Self> {
        Self::filled(width, height, false)
    }

    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> bool) -> Result<Self> {
        let mut values = Vec::with_capacity(width as usize * height as usize);
        for y in 0..height {
            for x in 0..width {
                values.push(f(x, y));
            }
        }
        Self::new(width, height, values)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn dims(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    pub fn values(&self) -> &[bool] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> bool {
        self.values[y as usize * self.width as usize + x as usize]
    }

    #[inline]
    pub fn at(&self, p: PixelCoord) -> bool {
        self.get(p.x, p.y)
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, value: bool) {
        let w = self.width as usize;
        self.values[y as usize * w + x as usize] = value;
    }

    pub fn contains(&self, p: PixelCoord) -> bool {
        p.x < self.width && p.y < self.height
    }

    pub fn count_foreground(&self) -> usize {
        self.values.iter().filter(|&&v| v).count()
    }

    pub fn has_foreground(&self) -> bool {
        self.values.iter().any(|&v| v)
    }

    /// Coordinates of all pixels equal to `value`, in row-major order.
    pub fn coords_where(&self, value: bool) -> Vec<PixelCoord> {
        let w = self.width as usize;
        self.values
            .iter()
            .enumerate()
            .filter(|(_, &v)| v == value)
            .map(|(i, _)| PixelCoord::new((i % w) as u32, (i / w) as u32))
            .collect()
    }

    pub fn ensure_same_dims(&self, other: &BinaryMask, what: &str) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(Error::Dimensions(format!(
                "{what}: {}x{} vs {}x{}",
                self.width, self.height, other.width, other.height
            )));
        }
        Ok(())
    }

    /// `true` when every foreground pixel of `self` is foreground in `other`.
    pub fn is_subset_of(&self, other: &BinaryMask) -> bool {
        self.dims() == other.dims()
            && self.values.iter().zip(&other.values).all(|(&a, &b)| !a || b)
    }

    pub fn union(&self, other: &BinaryMask) -> Result<BinaryMask> {
        self.ensure_same_dims(other, "mask union")?;
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| a || b).collect();
        BinaryMask::new(self.width, self.height, values)
    }

    pub fn intersection(&self, other: &BinaryMask) -> Result<BinaryMask> {
        self.ensure_same_dims(other, "mask intersection")?;
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| a && b).collect();
        BinaryMask::new(self.width, self.height, values)
    }

    pub fn to_gray_image(&self) -> GrayImage {
        let raw = self.values.iter().map(|&v| if v { 255 } else { 0 }).collect();
        GrayImage::from_raw(self.width, self.height, raw).expect("buffer length matches dimensions")
    }

    fn from_dynamic(img: DynamicImage, path: &Path) -> Result<Self> {
        let (width, height) = (img.width(), img.height());
        let values = match img {
            DynamicImage::ImageLuma8(buf) => buf.pixels().map(|p| p[0] != 0).collect(),
            DynamicImage::ImageLumaA8(buf) => buf.pixels().map(|p| p[0] != 0).collect(),
            DynamicImage::ImageRgb8(buf) => buf.pixels().map(|p| p.0 != [0, 0, 0]).collect(),
            DynamicImage::ImageRgba8(buf) => {
                buf.pixels().map(|p| p[0] != 0 || p[1] != 0 || p[2] != 0).collect()
            }
            other => {
                return Err(Error::UnsupportedBitDepth {
                    path: path.to_path_buf(),
                    color: format!("{:?}", other.color()),
                })
            }
        };
        Self::new(width, height, values)
    }

    /// Decodes PNG bytes; any nonzero color channel counts as foreground.
    pub fn decode_png(bytes: &[u8], origin: &Path) -> Result<Self> {
        Self::from_dynamic(decode_png(bytes, origin)?, origin)
    }

    /// Encodes as single-channel 8-bit PNG, 255 for foreground and 0 otherwise.
    pub fn encode_png(&self) -> Vec<u8> {
        let mut out = Cursor::new(Vec::new());
        self.to_gray_image()
            .write_to(&mut out, ImageFormat::Png)
            .expect("in-memory PNG encoding cannot fail");
        out.into_inner()
    }
}

impl std::ops::Index<PixelCoord> for BinaryMask {
    type Output = bool;

    fn index(&self, p: PixelCoord) -> &bool {
        &self.values[p.y as usize * self.width as usize + p.x as usize]
    }
}

fn decode_png(bytes: &[u8], origin: &Path) -> Result<DynamicImage> {
    image::load_from_memory_with_format(bytes, ImageFormat::Png).map_err(|e| Error::Decode {
        path: origin.to_path_buf(),
        reason: e.to_string(),
    })
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}

pub fn load_image(path: impl AsRef<Path>) -> Result<RasterImage> {
    let path = path.as_ref();
    RasterImage::decode_png(&read_file(path)?, path)
}

pub fn load_mask(path: impl AsRef<Path>) -> Result<BinaryMask> {
    let path = path.as_ref();
    BinaryMask::decode_png(&read_file(path)?, path)
}

pub fn save_mask(mask: &BinaryMask, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, mask.encode_png()).map_err(|e| Error::io(path, e))
}

pub fn save_image(image: &RasterImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, image.encode_png()).map_err(|e| Error::io(path, e))
}
