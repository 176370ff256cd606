//! Qualitative overlays: predicted foreground tinted over the stitched
//! image, with prompt points drawn green (positive) and red (negative).

use crate::error::{Error, Result};
use crate::prompt::{Polarity, PromptBundle};
use crate::raster::{BinaryMask, RasterImage};

const TINT: [u8; 3] = [30, 144, 255];
const POSITIVE: [u8; 3] = [0, 255, 0];
const NEGATIVE: [u8; 3] = [255, 0, 0];
const MARKER_RADIUS: i64 = 2;

fn blend(base: [u8; 3], tint: [u8; 3]) -> [u8; 3] {
    let mix = |a: u8, b: u8| ((a as u16 + b as u16) / 2) as u8;
    [mix(base[0], tint[0]), mix(base[1], tint[1]), mix(base[2], tint[2])]
}

pub fn render_overlay(
    stitched: &RasterImage,
    predicted: &BinaryMask,
    prompts: &[&PromptBundle],
) -> Result<RasterImage> {
    if predicted.dims() != stitched.dims() {
        return Err(Error::Dimensions(format!(
            "overlay mask is {}x{}, image is {}x{}",
            predicted.width(),
            predicted.height(),
            stitched.width(),
            stitched.height()
        )));
    }
    let mut out = stitched.clone();
    for y in 0..out.height() {
        for x in 0..out.width() {
            if predicted.get(x, y) {
                out.set(x, y, blend(out.get(x, y), TINT));
            }
        }
    }
    let (w, h) = (out.width() as i64, out.height() as i64);
    for bundle in prompts {
        for p in &bundle.points {
            let color = match p.polarity {
                Polarity::Positive => POSITIVE,
                Polarity::Negative => NEGATIVE,
            };
            let (cx, cy) = (p.location.x as i64, p.location.y as i64);
            for y in (cy - MARKER_RADIUS).max(0)..=(cy + MARKER_RADIUS).min(h - 1) {
                for x in (cx - MARKER_RADIUS).max(0)..=(cx + MARKER_RADIUS).min(w - 1) {
                    out.set(x as u32, y as u32, color);
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prompt::PointPrompt;
    use crate::raster::PixelCoord;

    #[test]
    fn tints_foreground_and_marks_points() {
        let img = RasterImage::filled(10, 10, [0, 0, 0]).unwrap();
        let mask = BinaryMask::from_fn(10, 10, |x, _| x >= 5).unwrap();
        let bundle = PromptBundle::new(
            vec![
                PointPrompt::positive(PixelCoord::new(0, 0)),
                PointPrompt::negative(PixelCoord::new(9, 9)),
            ],
            None,
        )
        .unwrap();
        let out = render_overlay(&img, &mask, &[&bundle]).unwrap();
        assert_eq!(out.get(0, 0), POSITIVE);
        assert_eq!(out.get(2, 2), POSITIVE);
        assert_eq!(out.get(9, 9), NEGATIVE);
        assert_eq!(out.get(4, 5), [0, 0, 0]);
        assert_eq!(out.get(6, 4), blend([0, 0, 0], TINT));
        assert!(render_overlay(&img, &BinaryMask::empty(3, 3).unwrap(), &[]).is_err());
    }
}
