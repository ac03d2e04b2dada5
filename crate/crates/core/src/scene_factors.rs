//! Scene-level complexity factors.
//!
//! Every pairwise statistic averages the off-diagonal entries of a symmetric
//! `K x K` matrix, which is the same as averaging over unordered pairs.
//! Factors that need at least two objects return `None` otherwise.

use std::collections::HashMap;

use crate::raster;
use crate::scene::{BinaryMask, ObjectInstance, Rgb, Scene};

/// Largest distance between two colors in the RGB cube.
pub const MAX_COLOR_DISTANCE: f64 = 255.0 * 1.732_050_807_568_877_2;
/// Normalizer for bbox diagonal differences.
pub const MAX_DIAGONAL_DIFFERENCE: f64 = 255.0 * std::f64::consts::SQRT_2;
/// Side of the box boundary shapes are normalized into.
pub const SHAPE_BOX: usize = 64;

fn mean_over_pairs<T>(items: &[T], mut f: impl FnMut(&T, &T) -> f64) -> Option<f64> {
    if items.len() < 2 {
        return None;
    }
    let mut values = Vec::with_capacity(items.len() * (items.len() - 1) / 2);
    for i in 0..items.len() {
        for j in i + 1..items.len() {
            values.push(f(&items[i], &items[j]));
        }
    }
    // Summing in sorted order makes the result independent of object order.
    values.sort_by(f64::total_cmp);
    Some(values.iter().sum::<f64>() / values.len() as f64)
}

fn color_distance(a: [f64; 3], b: [f64; 3]) -> f64 {
    let d: f64 = (0..3).map(|c| (a[c] - b[c]).powi(2)).sum();
    d.sqrt()
}

/// `1 - mean pairwise distance of mean colors / (255 sqrt 3)`.
pub fn inter_object_color_similarity(instances: &[ObjectInstance]) -> Option<f64> {
    let d = mean_over_pairs(instances, |a, b| color_distance(a.mean_color, b.mean_color))?;
    Some((1.0 - d / MAX_COLOR_DISTANCE).clamp(0.0, 1.0))
}

/// Mean pairwise `|diag_i - diag_j|` over `255 sqrt 2`.
pub fn inter_object_shape_variation(instances: &[ObjectInstance]) -> Option<f64> {
    let d = mean_over_pairs(instances, |a, b| (a.bbox_diagonal - b.bbox_diagonal).abs())?;
    Some((d / MAX_DIAGONAL_DIFFERENCE).clamp(0.0, 1.0))
}

/// Multiset of colors, stored once per distinct color and sorted by red.
#[derive(Clone, Debug)]
pub struct ColorSet {
    colors: Vec<(Rgb, usize)>,
    total: usize,
}

impl ColorSet {
    pub fn from_pixels(pixels: impl IntoIterator<Item = Rgb>) -> Self {
        let mut counts: HashMap<Rgb, usize> = HashMap::new();
        let mut total = 0;
        for c in pixels {
            *counts.entry(c).or_default() += 1;
            total += 1;
        }
        let mut colors: Vec<(Rgb, usize)> = counts.into_iter().collect();
        colors.sort_unstable();
        Self { colors, total }
    }

    pub fn of_object(mask: &BinaryMask, image: &crate::scene::RgbImage) -> Self {
        Self::from_pixels(mask.points().map(|(x, y)| image.get(x, y)))
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    /// Exact nearest-neighbor squared distance to `q`.
    fn nearest_sq(&self, q: Rgb) -> i64 {
        let key = i64::from(q[0]);
        let start = self.colors.partition_point(|(c, _)| i64::from(c[0]) < key);
        let mut best = i64::MAX;
        let dist = |c: Rgb| -> i64 {
            (0..3)
                .map(|k| (i64::from(c[k]) - i64::from(q[k])).pow(2))
                .sum()
        };
        for &(c, _) in &self.colors[start..] {
            let dr = i64::from(c[0]) - key;
            if dr * dr > best {
                break;
            }
            best = best.min(dist(c));
        }
        for &(c, _) in self.colors[..start].iter().rev() {
            let dr = key - i64::from(c[0]);
            if dr * dr > best {
                break;
            }
            best = best.min(dist(c));
        }
        best
    }

    /// `(mean, max)` over this set's pixels of the distance to the nearest
    /// pixel of `other`.
    fn directed(&self, other: &ColorSet) -> (f64, f64) {
        let mut sum = 0.0;
        let mut max = 0i64;
        for &(c, n) in &self.colors {
            let d = other.nearest_sq(c);
            sum += n as f64 * (d as f64).sqrt();
            max = max.max(d);
        }
        let max = (max as f64).sqrt();
        // Rounding can put the mean of equal terms an ulp above their max.
        ((sum / self.total as f64).min(max), max)
    }

    pub fn directed_chamfer(&self, other: &ColorSet) -> f64 {
        self.directed(other).0
    }

    pub fn directed_hausdorff(&self, other: &ColorSet) -> f64 {
        self.directed(other).1
    }
}

/// Average of both directed Chamfer distances.
pub fn chamfer_color_distance(a: &ColorSet, b: &ColorSet) -> f64 {
    0.5 * (a.directed_chamfer(b) + b.directed_chamfer(a))
}

/// Average of both directed Hausdorff distances.
pub fn hausdorff_color_distance(a: &ColorSet, b: &ColorSet) -> f64 {
    0.5 * (a.directed_hausdorff(b) + b.directed_hausdorff(a))
}

fn color_sets(scene: &Scene) -> Vec<ColorSet> {
    scene
        .objects
        .iter()
        .map(|m| ColorSet::of_object(m, &scene.image))
        .collect()
}

pub fn color_similarity_chamfer(scene: &Scene) -> Option<f64> {
    let sets = color_sets(scene);
    let d = mean_over_pairs(&sets, chamfer_color_distance)?;
    Some((1.0 - d / MAX_COLOR_DISTANCE).clamp(0.0, 1.0))
}

pub fn color_similarity_hausdorff(scene: &Scene) -> Option<f64> {
    let sets = color_sets(scene);
    let d = mean_over_pairs(&sets, hausdorff_color_distance)?;
    Some((1.0 - d / MAX_COLOR_DISTANCE).clamp(0.0, 1.0))
}

/// Scales the mask's bbox crop into a `SHAPE_BOX` square (nearest neighbor,
/// aspect preserved, centered).
pub fn normalize_shape(mask: &BinaryMask) -> BinaryMask {
    let n = SHAPE_BOX;
    let Some(b) = mask.bbox() else {
        return BinaryMask::empty(n, n);
    };
    let (w, h) = (b.width(), b.height());
    let scale = n as f64 / w.max(h) as f64;
    let nw = ((w as f64 * scale).round() as usize).clamp(1, n);
    let nh = ((h as f64 * scale).round() as usize).clamp(1, n);
    let (ox, oy) = ((n - nw) / 2, (n - nh) / 2);
    let mut out = BinaryMask::empty(n, n);
    for j in 0..nh {
        let sy = b.y_min + (((j as f64 + 0.5) * h as f64 / nh as f64) as usize).min(h - 1);
        for i in 0..nw {
            let sx = b.x_min + (((i as f64 + 0.5) * w as f64 / nw as f64) as usize).min(w - 1);
            if mask.get(sx, sy) {
                out.set(ox + i, oy + j, true);
            }
        }
    }
    out
}

/// Dilated inner boundary of the normalized shape.
pub fn normalized_boundary(mask: &BinaryMask) -> BinaryMask {
    raster::dilate(&raster::inner_boundary(&normalize_shape(mask)))
}

fn raster_iou(a: &BinaryMask, b: &BinaryMask) -> f64 {
    let union = a.union_count(b);
    if union == 0 {
        return 0.0;
    }
    a.intersection_count(b) as f64 / union as f64
}

pub fn boundary_shape_similarity(scene: &Scene) -> Option<f64> {
    let boundaries: Vec<BinaryMask> = scene.objects.iter().map(normalized_boundary).collect();
    mean_over_pairs(&boundaries, raster_iou)
}

/// Mean of the strictly positive 3x3 entropies of the object index map.
pub fn boundary_shape_entropy(scene: &Scene) -> f64 {
    let (w, h) = scene.image.dims();
    // Pixels are labeled by the set of objects covering them, so overlapping
    // masks do not make the result depend on object order.
    let mut cover: Vec<Vec<usize>> = vec![Vec::new(); w * h];
    for (k, mask) in scene.objects.iter().enumerate() {
        for (x, y) in mask.points() {
            cover[y * w + x].push(k);
        }
    }
    let mut labels: HashMap<Vec<usize>, i32> = HashMap::new();
    let index: Vec<i32> = cover
        .into_iter()
        .map(|set| {
            let next = labels.len() as i32;
            *labels.entry(set).or_insert(next)
        })
        .collect();
    let entropy = raster::local_entropy(&index, w, h, None);
    let positive: Vec<f64> = entropy.into_iter().filter(|&e| e > 0.0).collect();
    if positive.is_empty() {
        0.0
    } else {
        positive.iter().sum::<f64>() / positive.len() as f64
    }
}

pub fn centroid_proximity(instances: &[ObjectInstance]) -> Option<f64> {
    mean_over_pairs(instances, |a, b| {
        // (sum_a / n_a - sum_b / n_b) with one rounding, independent of any
        // common translation.
        let (na, nb) = (a.area as i128, b.area as i128);
        let dx = a.coord_sum.0 as i128 * nb - b.coord_sum.0 as i128 * na;
        let dy = a.coord_sum.1 as i128 * nb - b.coord_sum.1 as i128 * na;
        ((dx * dx + dy * dy) as f64).sqrt() / (na * nb) as f64
    })
}

/// Mean over `from`'s pixels of the distance to the nearest pixel of the mask
/// whose squared distance transform is `to_dt`.
fn directed_spatial_chamfer(from: &BinaryMask, to_dt: &[f64]) -> f64 {
    let w = from.width();
    let mut sum = 0.0;
    let mut n = 0usize;
    for (x, y) in from.points() {
        sum += to_dt[y * w + x].sqrt();
        n += 1;
    }
    sum / n as f64
}

pub fn chamfer_proximity(scene: &Scene) -> Option<f64> {
    let transforms: Vec<Vec<f64>> = scene
        .objects
        .iter()
        .map(raster::squared_distance_transform)
        .collect();
    let indices: Vec<usize> = (0..scene.objects.len()).collect();
    mean_over_pairs(&indices, |&i, &j| {
        0.5 * (directed_spatial_chamfer(&scene.objects[i], &transforms[j])
            + directed_spatial_chamfer(&scene.objects[j], &transforms[i]))
    })
}
