//! Texture banks for the T ablation.

use std::path::Path;

use rand::Rng;

use crate::dataset::decode_rgb_png;
use crate::error::{Error, Result};
use crate::scene::{Rgb, RgbImage};
use crate::seed;

pub const TEXTURE_SIZE: usize = 128;

/// Base colors of the bundled bank: six corners of the RGB cube, pairwise at
/// least 255 apart.
const BASES: [Rgb; 6] = [
    [255, 0, 0],
    [0, 255, 0],
    [0, 0, 255],
    [0, 255, 255],
    [255, 0, 255],
    [255, 255, 0],
];

/// Six procedural blotchy textures with mutually distant mean colors.
pub fn bundled() -> Vec<RgbImage> {
    BASES
        .iter()
        .enumerate()
        .map(|(i, &base)| blotchy(base, i as u64))
        .collect()
}

/// Smooth value noise on an 8x8 lattice (periodic, so tiling is seamless)
/// modulating brightness by up to +-25 around `base`.
fn blotchy(base: Rgb, salt: u64) -> RgbImage {
    const CELLS: usize = 8;
    let mut rng = seed::rng(0x7e47_u64, salt);
    let lattice: Vec<f64> = (0..CELLS * CELLS)
        .map(|_| rng.gen_range(-1.0..1.0))
        .collect();
    let at = |i: usize, j: usize| lattice[(j % CELLS) * CELLS + (i % CELLS)];
    let cell = TEXTURE_SIZE as f64 / CELLS as f64;
    let smooth = |t: f64| t * t * (3.0 - 2.0 * t);
    let mut pixels = Vec::with_capacity(TEXTURE_SIZE * TEXTURE_SIZE);
    for y in 0..TEXTURE_SIZE {
        for x in 0..TEXTURE_SIZE {
            let (fx, fy) = (x as f64 / cell, y as f64 / cell);
            let (i, j) = (fx as usize, fy as usize);
            let (tx, ty) = (smooth(fx - i as f64), smooth(fy - j as f64));
            let top = at(i, j) * (1.0 - tx) + at(i + 1, j) * tx;
            let bottom = at(i, j + 1) * (1.0 - tx) + at(i + 1, j + 1) * tx;
            let n = top * (1.0 - ty) + bottom * ty;
            let shift = (n * 25.0).round() as i32;
            pixels.push(base.map(|c| (i32::from(c) + shift).clamp(0, 255) as u8));
        }
    }
    RgbImage::new(TEXTURE_SIZE, TEXTURE_SIZE, pixels).expect("size matches")
}

/// Every `*.png` in `dir`, in file-name order.
pub fn load_dir(dir: &Path) -> Result<Vec<RgbImage>> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut paths = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("png"))
        {
            paths.push(path);
        }
    }
    paths.sort();
    paths
        .iter()
        .map(|p| {
            let bytes = std::fs::read(p).map_err(|e| Error::io(p, e))?;
            decode_rgb_png(&bytes).map_err(|source| Error::Image {
                path: p.clone(),
                source,
            })
        })
        .collect()
}

pub fn mean_color(texture: &RgbImage) -> [f64; 3] {
    let mut sum = [0u64; 3];
    for p in texture.pixels() {
        for c in 0..3 {
            sum[c] += u64::from(p[c]);
        }
    }
    let n = texture.pixels().len() as f64;
    sum.map(|s| s as f64 / n)
}
