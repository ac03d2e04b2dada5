//! Raster primitives shared by the factor and ablation modules.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::scene::{BinaryMask, RgbImage};

/// Real-valued single-channel field, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    pub values: Vec<f64>,
}

impl GrayImage {
    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x]
    }

    fn transpose(&self) -> GrayImage {
        let mut values = Vec::with_capacity(self.values.len());
        for x in 0..self.width {
            for y in 0..self.height {
                values.push(self.get(x, y));
            }
        }
        GrayImage {
            width: self.height,
            height: self.width,
            values,
        }
    }
}

/// Luma with `0.299 R + 0.587 G + 0.114 B`, unrounded.
pub fn to_grayscale(image: &RgbImage) -> GrayImage {
    GrayImage {
        width: image.width(),
        height: image.height(),
        values: image.pixels().iter().map(|&c| luma(c)).collect(),
    }
}

#[inline]
pub fn luma([r, g, b]: [u8; 3]) -> f64 {
    0.299 * f64::from(r) + 0.587 * f64::from(g) + 0.114 * f64::from(b)
}

/// Per-pixel `sqrt(Gx^2 + Gy^2)` for the 3x3 Sobel pair, replicating edge pixels.
pub fn sobel_magnitude(gray: &GrayImage) -> Result<GrayImage> {
    let (w, h) = (gray.width, gray.height);
    if w < 3 || h < 3 {
        return Err(Error::TooSmall {
            width: w,
            height: h,
        });
    }
    let at = |x: isize, y: isize| {
        let x = x.clamp(0, w as isize - 1) as usize;
        let y = y.clamp(0, h as isize - 1) as usize;
        gray.values[y * w + x]
    };
    let mut values = Vec::with_capacity(w * h);
    for y in 0..h as isize {
        for x in 0..w as isize {
            let gx = (at(x + 1, y - 1) + 2.0 * at(x + 1, y) + at(x + 1, y + 1))
                - (at(x - 1, y - 1) + 2.0 * at(x - 1, y) + at(x - 1, y + 1));
            let gy = (at(x - 1, y + 1) + 2.0 * at(x, y + 1) + at(x + 1, y + 1))
                - (at(x - 1, y - 1) + 2.0 * at(x, y - 1) + at(x + 1, y - 1));
            values.push((gx * gx + gy * gy).sqrt());
        }
    }
    Ok(GrayImage {
        width: w,
        height: h,
        values,
    })
}

/// Sobel magnitude of the transposed image, transposed back. Exposed for the
/// symmetry property tests.
pub fn sobel_magnitude_transposed(gray: &GrayImage) -> Result<GrayImage> {
    Ok(sobel_magnitude(&gray.transpose())?.transpose())
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvexMask {
    /// Hull vertices as pixel coordinates, counter-clockwise in `(x, y)`
    /// (positive signed area). Collinear points are not vertices.
    pub hull_vertices: Vec<(usize, usize)>,
    pub raster: BinaryMask,
}

/// Convex hull of the foreground pixel centers, rasterized as every pixel whose
/// center lies inside or on the hull polygon.
///
/// Working on centers makes the raster idempotent: the hull of a hull raster
/// is the same polygon, so its concavity is exactly zero.
pub fn convex_hull(mask: &BinaryMask) -> Result<ConvexMask> {
    let points: Vec<(i64, i64)> = mask.points().map(|(x, y)| (x as i64, y as i64)).collect();
    if points.is_empty() {
        return Err(Error::structural("convex hull of an empty mask"));
    }
    let hull = monotone_chain(points);
    let bbox = mask.bbox().expect("nonempty");
    let mut raster = BinaryMask::empty(mask.width(), mask.height());
    for y in bbox.y_min..=bbox.y_max {
        for x in bbox.x_min..=bbox.x_max {
            if inside_or_on(&hull, (x as i64, y as i64)) {
                raster.set(x, y, true);
            }
        }
    }
    Ok(ConvexMask {
        hull_vertices: hull
            .iter()
            .map(|&(x, y)| (x as usize, y as usize))
            .collect(),
        raster,
    })
}

#[inline]
fn cross(o: (i64, i64), a: (i64, i64), b: (i64, i64)) -> i64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

fn monotone_chain(mut points: Vec<(i64, i64)>) -> Vec<(i64, i64)> {
    points.sort_unstable();
    points.dedup();
    if points.len() < 3 {
        return points;
    }
    let mut hull: Vec<(i64, i64)> = Vec::with_capacity(2 * points.len());
    for &p in &points {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0 {
            hull.pop();
        }
        hull.push(p);
    }
    let lower_len = hull.len() + 1;
    for &p in points.iter().rev().skip(1) {
        while hull.len() >= lower_len && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0 {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
    hull
}

fn inside_or_on(hull: &[(i64, i64)], p: (i64, i64)) -> bool {
    match hull.len() {
        0 => false,
        1 => hull[0] == p,
        2 => {
            let (a, b) = (hull[0], hull[1]);
            cross(a, b, p) == 0
                && (p.0 - a.0) * (b.0 - a.0) + (p.1 - a.1) * (b.1 - a.1) >= 0
                && (p.0 - b.0) * (a.0 - b.0) + (p.1 - b.1) * (a.1 - b.1) >= 0
        }
        n => (0..n).all(|i| cross(hull[i], hull[(i + 1) % n], p) >= 0),
    }
}

const NEIGHBORS_8: [(isize, isize); 8] = [
    (-1, -1),
    (0, -1),
    (1, -1),
    (-1, 0),
    (1, 0),
    (-1, 1),
    (0, 1),
    (1, 1),
];

/// 8-connected components, largest first. Equal sizes keep row-major discovery order.
pub fn connected_components(mask: &BinaryMask) -> Vec<BinaryMask> {
    let (w, h) = mask.dims();
    let mut label = vec![usize::MAX; w * h];
    let mut components: Vec<Vec<usize>> = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..w * h {
        if !mask.bits()[start] || label[start] != usize::MAX {
            continue;
        }
        let id = components.len();
        let mut pixels = Vec::new();
        label[start] = id;
        queue.push_back(start);
        while let Some(i) = queue.pop_front() {
            pixels.push(i);
            let (x, y) = ((i % w) as isize, (i / w) as isize);
            for (dx, dy) in NEIGHBORS_8 {
                let (nx, ny) = (x + dx, y + dy);
                if mask.get_signed(nx, ny) {
                    let j = ny as usize * w + nx as usize;
                    if label[j] == usize::MAX {
                        label[j] = id;
                        queue.push_back(j);
                    }
                }
            }
        }
        components.push(pixels);
    }
    components.sort_by_key(|c| std::cmp::Reverse(c.len()));
    components
        .into_iter()
        .map(|pixels| BinaryMask::from_points(w, h, pixels.into_iter().map(|i| (i % w, i / w))))
        .collect()
}

/// Foreground pixels with at least one 8-neighbor outside the mask or the canvas.
///
/// Equivalent to `mask - erode(mask)` with a 3x3 square element, so every
/// remaining interior pixel has its full Sobel support inside the mask.
pub fn inner_boundary(mask: &BinaryMask) -> BinaryMask {
    let (w, h) = mask.dims();
    BinaryMask::from_fn(w, h, |x, y| {
        mask.get(x, y)
            && NEIGHBORS_8
                .iter()
                .any(|&(dx, dy)| !mask.get_signed(x as isize + dx, y as isize + dy))
    })
}

/// Binary dilation with the 3x3 square element.
pub fn dilate(mask: &BinaryMask) -> BinaryMask {
    let (w, h) = mask.dims();
    BinaryMask::from_fn(w, h, |x, y| {
        mask.get(x, y)
            || NEIGHBORS_8
                .iter()
                .any(|&(dx, dy)| mask.get_signed(x as isize + dx, y as isize + dy))
    })
}

/// Shannon entropy (base 2) of the value histogram in each 3x3 window.
///
/// The window is clipped to the canvas and, when `support` is given, to the
/// support mask. Pixels whose clipped window is empty get 0.
pub fn local_entropy(
    values: &[i32],
    width: usize,
    height: usize,
    support: Option<&BinaryMask>,
) -> Vec<f64> {
    assert_eq!(values.len(), width * height, "field size mismatch");
    let inside = |x: isize, y: isize| {
        x >= 0
            && y >= 0
            && (x as usize) < width
            && (y as usize) < height
            && support.is_none_or(|m| m.get(x as usize, y as usize))
    };
    let mut out = Vec::with_capacity(width * height);
    let mut window = Vec::with_capacity(9);
    for y in 0..height as isize {
        for x in 0..width as isize {
            window.clear();
            for dy in -1..=1 {
                for dx in -1..=1 {
                    if inside(x + dx, y + dy) {
                        window.push(values[(y + dy) as usize * width + (x + dx) as usize]);
                    }
                }
            }
            out.push(entropy_of(&mut window));
        }
    }
    out
}

fn entropy_of(window: &mut [i32]) -> f64 {
    if window.is_empty() {
        return 0.0;
    }
    window.sort_unstable();
    let mut counts = [0usize; 9];
    let mut symbols = 0;
    let mut i = 0;
    while i < window.len() {
        let mut j = i;
        while j < window.len() && window[j] == window[i] {
            j += 1;
        }
        counts[symbols] = j - i;
        symbols += 1;
        i = j;
    }
    // Sum by count, not by symbol value, so relabeling cannot change rounding.
    let counts = &mut counts[..symbols];
    counts.sort_unstable();
    let n = window.len() as f64;
    let mut h = 0.0;
    for &c in counts.iter() {
        let p = c as f64 / n;
        h -= p * p.log2();
    }
    h
}

/// Squared Euclidean distance from every pixel to the nearest foreground pixel
/// of `mask` (exact, separable lower-envelope algorithm). Empty masks yield
/// `f64::INFINITY` everywhere.
pub fn squared_distance_transform(mask: &BinaryMask) -> Vec<f64> {
    let (w, h) = mask.dims();
    let mut grid: Vec<f64> = mask
        .bits()
        .iter()
        .map(|&b| if b { 0.0 } else { f64::INFINITY })
        .collect();
    let mut line = Vec::new();
    let mut out = Vec::new();
    for x in 0..w {
        line.clear();
        line.extend((0..h).map(|y| grid[y * w + x]));
        lower_envelope(&line, &mut out);
        for y in 0..h {
            grid[y * w + x] = out[y];
        }
    }
    for y in 0..h {
        line.clear();
        line.extend_from_slice(&grid[y * w..(y + 1) * w]);
        lower_envelope(&line, &mut out);
        grid[y * w..(y + 1) * w].copy_from_slice(&out);
    }
    grid
}

fn lower_envelope(f: &[f64], out: &mut Vec<f64>) {
    let n = f.len();
    out.clear();
    out.resize(n, f64::INFINITY);
    let mut v = vec![0usize; n];
    let mut z = vec![0f64; n + 1];
    let mut k: isize = -1;
    for q in 0..n {
        if f[q].is_infinite() {
            continue;
        }
        loop {
            if k < 0 {
                k = 0;
                v[0] = q;
                z[0] = f64::NEG_INFINITY;
                z[1] = f64::INFINITY;
                break;
            }
            let p = v[k as usize];
            let s =
                ((f[q] + (q * q) as f64) - (f[p] + (p * p) as f64)) / (2.0 * (q as f64 - p as f64));
            if s <= z[k as usize] {
                k -= 1;
                continue;
            }
            k += 1;
            v[k as usize] = q;
            z[k as usize] = s;
            z[k as usize + 1] = f64::INFINITY;
            break;
        }
    }
    if k < 0 {
        return;
    }
    let mut j = 0usize;
    for (q, slot) in out.iter_mut().enumerate() {
        while z[j + 1] < q as f64 {
            j += 1;
        }
        let p = v[j];
        let d = q as f64 - p as f64;
        *slot = d * d + f[p];
    }
}
