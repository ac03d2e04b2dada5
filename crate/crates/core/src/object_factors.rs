//! Object-level complexity factors.
//!
//! The two primary factors (color gradient, shape concavity) plus the
//! candidate set: color count, color entropy, non-rectangularity,
//! Polsby-Popper / Schwartzberg incompactness, discontinuity and
//! decentralization.

use std::collections::HashSet;
use std::f64::consts::PI;

use crate::raster::{self, to_grayscale};
use crate::scene::{ObjectInstance, RgbImage};

/// Mean Sobel magnitude over the object's interior, divided by 255 and clamped
/// to `[0, 1]`.
///
/// Returns `None` when every object pixel lies on the inner boundary (thin
/// shapes); such objects carry a missing value rather than a zero.
pub fn object_color_gradient(instance: &ObjectInstance, image: &RgbImage) -> Option<f64> {
    let interior: Vec<(usize, usize)> = instance
        .mask
        .points()
        .filter(|&(x, y)| !instance.boundary.get(x, y))
        .collect();
    if interior.is_empty() {
        return None;
    }
    let gray = crop_gray(image, instance);
    let sobel = raster::sobel_magnitude(&gray.field).ok()?;
    let sum: f64 = interior
        .iter()
        .map(|&(x, y)| sobel.get(x - gray.x0, y - gray.y0))
        .sum();
    Some((sum / interior.len() as f64 / 255.0).clamp(0.0, 1.0))
}

/// Grayscale crop around the bbox with a one-pixel margin, so interior Sobel
/// windows read real neighbors while the image stays small.
struct GrayCrop {
    field: raster::GrayImage,
    x0: usize,
    y0: usize,
}

fn crop_gray(image: &RgbImage, instance: &ObjectInstance) -> GrayCrop {
    let b = instance.bbox;
    let x0 = b.x_min.saturating_sub(1);
    let y0 = b.y_min.saturating_sub(1);
    let x1 = (b.x_max + 1).min(image.width() - 1);
    let y1 = (b.y_max + 1).min(image.height() - 1);
    // A nonempty interior implies a bbox of at least 3x3.
    let (w, h) = (x1 - x0 + 1, y1 - y0 + 1);
    let mut values = Vec::with_capacity(w * h);
    for y in y0..=y1 {
        for x in x0..=x1 {
            values.push(raster::luma(image.get(x, y)));
        }
    }
    GrayCrop {
        field: raster::GrayImage {
            width: w,
            height: h,
            values,
        },
        x0,
        y0,
    }
}

/// `1 - |mask| / |hull raster|`.
pub fn object_shape_concavity(instance: &ObjectInstance) -> f64 {
    let hull = raster::convex_hull(&instance.mask).expect("instance masks are nonempty");
    1.0 - instance.area as f64 / hull.raster.count() as f64
}

pub fn object_color_count(instance: &ObjectInstance, image: &RgbImage) -> usize {
    instance
        .mask
        .points()
        .map(|(x, y)| image.get(x, y))
        .collect::<HashSet<_>>()
        .len()
}

/// Mean local entropy of the rounded grayscale, windows restricted to the mask.
pub fn object_color_entropy(instance: &ObjectInstance, image: &RgbImage) -> f64 {
    let gray = to_grayscale(image);
    let levels: Vec<i32> = gray.values.iter().map(|v| v.round() as i32).collect();
    let entropy =
        raster::local_entropy(&levels, image.width(), image.height(), Some(&instance.mask));
    let w = image.width();
    let sum: f64 = instance
        .mask
        .points()
        .map(|(x, y)| entropy[y * w + x])
        .sum();
    sum / instance.area as f64
}

/// `1 - |mask| / bbox area`.
pub fn object_non_rectangularity(instance: &ObjectInstance) -> f64 {
    1.0 - instance.area as f64 / instance.bbox.area() as f64
}

/// Pixel edges shared with background or the canvas border.
pub fn exposed_perimeter(instance: &ObjectInstance) -> usize {
    let m = &instance.mask;
    m.points()
        .map(|(x, y)| {
            let (x, y) = (x as isize, y as isize);
            [(1, 0), (-1, 0), (0, 1), (0, -1)]
                .iter()
                .filter(|&&(dx, dy)| !m.get_signed(x + dx, y + dy))
                .count()
        })
        .sum()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Incompactness {
    /// `1 - 4 pi A / P^2`
    pub polsby_popper: f64,
    /// `1 - 2 pi sqrt(A / pi) / P`
    pub schwartzberg: f64,
}

pub fn object_incompactness(instance: &ObjectInstance) -> Incompactness {
    let a = instance.area as f64;
    let p = exposed_perimeter(instance) as f64;
    let pp = 4.0 * PI * a / (p * p);
    let s = 2.0 * PI * (a / PI).sqrt() / p;
    Incompactness {
        polsby_popper: (1.0 - pp).clamp(0.0, 1.0),
        schwartzberg: (1.0 - s).clamp(0.0, 1.0),
    }
}

/// `1 - |largest 8-connected component| / |mask|`.
pub fn object_discontinuity(instance: &ObjectInstance) -> f64 {
    let largest = raster::connected_components(&instance.mask)
        .first()
        .map_or(0, |c| c.count());
    1.0 - largest as f64 / instance.area as f64
}

/// Mixed second moment `sum (x - cx)^2 (y - cy)^2`, divided by the pixel count.
///
/// Evaluated on the integer offsets `n x - sum x`, so the value is bit-for-bit
/// unchanged when the object is translated.
pub fn object_decentralization(instance: &ObjectInstance) -> f64 {
    let n = instance.area as i128;
    let (sx, sy) = (instance.coord_sum.0 as i128, instance.coord_sum.1 as i128);
    let sum: i128 = instance
        .mask
        .points()
        .map(|(x, y)| {
            let dx = n * x as i128 - sx;
            let dy = n * y as i128 - sy;
            dx * dx * dy * dy
        })
        .sum();
    let n = n as f64;
    sum as f64 / (n * n * n * n) / n
}
