//! Synthetic building scenes and closed-form oracles shared by the
//! integration tests and the acceptance suite.
#![allow(dead_code)]

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use stitchseg::raster::{save_image, save_mask, BinaryMask, RasterImage};

/// Key and query are both SIDE × SIDE.
pub const SIDE: u32 = 64;

/// Rectangles keep this distance from every image edge, so no component
/// touches the seam and closing with a 5×5 element leaves them unchanged.
pub const MARGIN: u32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rect {
    pub x: u32,
    pub y: u32,
    pub w: u32,
    pub h: u32,
}

impl Rect {
    pub fn contains(&self, x: u32, y: u32) -> bool {
        x >= self.x && x < self.x + self.w && y >= self.y && y < self.y + self.h
    }

    pub fn area(&self) -> u64 {
        self.w as u64 * self.h as u64
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticScene {
    pub id: String,
    pub key_rects: Vec<Rect>,
    pub query_rects: Vec<Rect>,
}

#[derive(Debug, Clone)]
pub struct SceneFiles {
    pub key_image: PathBuf,
    pub key_mask: PathBuf,
    pub query_image: PathBuf,
    pub query_truth: PathBuf,
}

pub fn rect_mask(rects: &[Rect]) -> BinaryMask {
    BinaryMask::from_fn(SIDE, SIDE, |x, y| rects.iter().any(|r| r.contains(x, y))).unwrap()
}

/// Roof-coloured rectangles over a noisy ground texture.
pub fn scene_image(rects: &[Rect], seed: u64) -> RasterImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut img = RasterImage::filled(SIDE, SIDE, [0, 0, 0]).unwrap();
    for y in 0..SIDE {
        for x in 0..SIDE {
            let n: u8 = rng.random_range(0..24);
            let px = if rects.iter().any(|r| r.contains(x, y)) {
                [170 + n, 70 + n, 50 + n]
            } else {
                [80 + n, 100 + n, 70 + n]
            };
            img.set(x, y, px);
        }
    }
    img
}

fn rect_in(rng: &mut ChaCha8Rng, x_lo: u32, x_hi: u32, w: u32, h: u32) -> Rect {
    // x range is [x_lo, x_hi) for the whole rectangle
    Rect {
        x: rng.random_range(x_lo..=x_hi - w),
        y: rng.random_range(MARGIN..=SIDE - MARGIN - h),
        w,
        h,
    }
}

/// Two rectangles, one per vertical half, at least 6 px apart.
fn split_pair(rng: &mut ChaCha8Rng, w_range: (u32, u32), h_range: (u32, u32)) -> Vec<Rect> {
    let mid = SIDE / 2;
    let mut out = Vec::new();
    for (lo, hi) in [(MARGIN, mid - 3), (mid + 3, SIDE - MARGIN)] {
        let w = rng.random_range(w_range.0..=w_range.1);
        let h = rng.random_range(h_range.0..=h_range.1);
        out.push(rect_in(rng, lo, hi, w, h));
    }
    out
}

/// Scenes with 2–4 buildings: one or two in the key, one or two in the
/// query. Every fourth scene has two query buildings.
pub fn generate_scenes(n: usize, seed: u64) -> Vec<SyntheticScene> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let key_rects = if rng.random_bool(0.5) {
                let s = (rng.random_range(14..=28), rng.random_range(14..=28));
                vec![rect_in(&mut rng, MARGIN, SIDE - MARGIN, s.0, s.1)]
            } else {
                split_pair(&mut rng, (10, 20), (10, 24))
            };
            let query_rects = if i % 4 == 3 {
                split_pair(&mut rng, (24, 26), (52, 58))
            } else {
                let s = (rng.random_range(40..=58), rng.random_range(40..=58));
                vec![rect_in(&mut rng, MARGIN, SIDE - MARGIN, s.0, s.1)]
            };
            SyntheticScene {
                id: format!("scene_{i:02}"),
                key_rects,
                query_rects,
            }
        })
        .collect()
}

pub fn write_scene(dir: &Path, scene: &SyntheticScene, seed: u64) -> SceneFiles {
    let files = SceneFiles {
        key_image: dir.join(format!("{}_key.png", scene.id)),
        key_mask: dir.join(format!("{}_key_mask.png", scene.id)),
        query_image: dir.join(format!("{}_query.png", scene.id)),
        query_truth: dir.join(format!("{}_truth.png", scene.id)),
    };
    save_image(&scene_image(&scene.key_rects, seed), &files.key_image).unwrap();
    save_mask(&rect_mask(&scene.key_rects), &files.key_mask).unwrap();
    save_image(&scene_image(&scene.query_rects, seed ^ 0xA5A5), &files.query_image).unwrap();
    save_mask(&rect_mask(&scene.query_rects), &files.query_truth).unwrap();
    files
}

/// Writes every scene plus `manifest.csv` (relative paths) into `dir`.
pub fn write_fixture(dir: &Path, scenes: &[SyntheticScene]) -> PathBuf {
    let mut csv = String::from("scene_id,key_image,key_mask,query_image,query_truth\n");
    for (i, scene) in scenes.iter().enumerate() {
        let f = write_scene(dir, scene, 1000 + i as u64);
        let name = |p: &Path| p.file_name().unwrap().to_string_lossy().into_owned();
        let _ = writeln!(
            csv,
            "{},{},{},{},{}",
            scene.id,
            name(&f.key_image),
            name(&f.key_mask),
            name(&f.query_image),
            name(&f.query_truth)
        );
    }
    let path = dir.join("manifest.csv");
    std::fs::write(&path, csv).unwrap();
    path
}

/// Whether a query component with `hits` blind positives survives CWMV,
/// given `total_hits` hitting runs out of `runs`, `n_points` prompts per
/// run and integer divisor `m`. Hitting runs score 1, missing runs score
/// (n-1)/n, so `hits >= tau` is `m*n*hits >= total_hits + runs*(n-1)`.
pub fn component_survives(hits: u64, total_hits: u64, runs: u64, n_points: u64, m: u64) -> bool {
    m * n_points * hits >= total_hits + runs * (n_points - 1)
}

/// IoU on the query half when exactly the surviving components are predicted.
pub fn iou_from_hits(areas: &[u64], hits: &[u64], runs: u64, n_points: u64, m: u64) -> f64 {
    let total: u64 = hits.iter().sum();
    let union: u64 = areas.iter().sum();
    if union == 0 {
        return 1.0;
    }
    let kept: u64 = areas
        .iter()
        .zip(hits)
        .filter(|&(_, &h)| component_survives(h, total, runs, n_points, m))
        .map(|(a, _)| a)
        .sum();
    kept as f64 / union as f64
}

fn ln_factorial(n: u64) -> f64 {
    (1..=n).map(|k| (k as f64).ln()).sum()
}

/// Expected raw CWMV query-half IoU for one blind positive per run, by
/// summing over every multinomial split of `runs` draws among the
/// components (probability area / query_px) and "miss".
pub fn expected_cwmv_iou(areas: &[u64], query_px: u64, runs: u64, n_points: u64, m: u64) -> f64 {
    let p: Vec<f64> = areas.iter().map(|&a| a as f64 / query_px as f64).collect();
    let p_miss = 1.0 - p.iter().sum::<f64>();
    let mut hits = vec![0u64; areas.len()];
    let mut expectation = 0.0;
    fn recurse(
        i: usize,
        left: u64,
        hits: &mut [u64],
        p: &[f64],
        p_miss: f64,
        ctx: (&[u64], u64, u64, u64),
        acc: &mut f64,
    ) {
        if i == hits.len() {
            let (areas, runs, n_points, m) = ctx;
            let mut ln_coef = ln_factorial(runs) - ln_factorial(left);
            let mut prob = p_miss.powi(left as i32);
            for (&h, &pj) in hits.iter().zip(p) {
                ln_coef -= ln_factorial(h);
                prob *= pj.powi(h as i32);
            }
            let prob = prob * ln_coef.exp();
            *acc += prob * iou_from_hits(areas, hits, runs, n_points, m);
            return;
        }
        for h in 0..=left {
            hits[i] = h;
            recurse(i + 1, left - h, hits, p, p_miss, ctx, acc);
        }
        hits[i] = 0;
    }
    recurse(0, runs, &mut hits, &p, p_miss, (areas, runs, n_points, m), &mut expectation);
    expectation
}

/// Mean of `values`, summed in order.
pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}
