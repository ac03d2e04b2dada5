//! Images, masks and scenes.
//!
//! Coordinates follow the raster convention used throughout the crate:
//! `x` is the column index, `y` the row index, origin at the top-left pixel.
//! All buffers are row-major.

use crate::error::{Error, Result};
use crate::raster;

pub type Rgb = [u8; 3];

/// Side length of curated scenes.
pub const CANVAS: usize = 128;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RgbImage {
    width: usize,
    height: usize,
    pixels: Vec<Rgb>,
}

impl RgbImage {
    pub fn new(width: usize, height: usize, pixels: Vec<Rgb>) -> Result<Self> {
        if pixels.len() != width * height {
            return Err(Error::structural(format!(
                "image buffer holds {} pixels, expected {}x{}",
                pixels.len(),
                width,
                height
            )));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn filled(width: usize, height: usize, color: Rgb) -> Self {
        Self {
            width,
            height,
            pixels: vec![color; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn pixels(&self) -> &[Rgb] {
        &self.pixels
    }

    pub fn pixels_mut(&mut self) -> &mut [Rgb] {
        &mut self.pixels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> Rgb {
        self.pixels[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, color: Rgb) {
        self.pixels[y * self.width + x] = color;
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl BinaryMask {
    pub fn new(width: usize, height: usize, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != width * height {
            return Err(Error::structural(format!(
                "mask buffer holds {} pixels, expected {}x{}",
                bits.len(),
                width,
                height
            )));
        }
        Ok(Self {
            width,
            height,
            bits,
        })
    }

    pub fn empty(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            bits: vec![false; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut bits = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                bits.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            bits,
        }
    }

    /// Builds a mask from `(x, y)` pixel coordinates; out-of-range points are ignored.
    pub fn from_points(
        width: usize,
        height: usize,
        points: impl IntoIterator<Item = (usize, usize)>,
    ) -> Self {
        let mut mask = Self::empty(width, height);
        for (x, y) in points {
            if x < width && y < height {
                mask.set(x, y, true);
            }
        }
        mask
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    /// Like [`get`](Self::get) but treats out-of-canvas coordinates as background.
    #[inline]
    pub fn get_signed(&self, x: isize, y: isize) -> bool {
        x >= 0
            && y >= 0
            && (x as usize) < self.width
            && (y as usize) < self.height
            && self.bits[y as usize * self.width + x as usize]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: bool) {
        self.bits[y * self.width + x] = value;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    /// Foreground pixel coordinates in row-major order.
    pub fn points(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let width = self.width;
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(move |(i, _)| (i % width, i / width))
    }

    pub fn bbox(&self) -> Option<BBox> {
        let mut bbox: Option<BBox> = None;
        for (x, y) in self.points() {
            bbox = Some(match bbox {
                None => BBox {
                    x_min: x,
                    y_min: y,
                    x_max: x,
                    y_max: y,
                },
                Some(b) => BBox {
                    x_min: b.x_min.min(x),
                    y_min: b.y_min.min(y),
                    x_max: b.x_max.max(x),
                    y_max: b.y_max.max(y),
                },
            });
        }
        bbox
    }

    pub fn is_subset_of(&self, other: &BinaryMask) -> bool {
        self.dims() == other.dims() && self.bits.iter().zip(&other.bits).all(|(&a, &b)| !a || b)
    }

    pub fn intersection_count(&self, other: &BinaryMask) -> usize {
        self.bits
            .iter()
            .zip(&other.bits)
            .filter(|(&a, &b)| a && b)
            .count()
    }

    pub fn union_count(&self, other: &BinaryMask) -> usize {
        self.bits
            .iter()
            .zip(&other.bits)
            .filter(|(&a, &b)| a || b)
            .count()
    }

    /// Clears every pixel set in `other`.
    pub fn subtract(&mut self, other: &BinaryMask) {
        for (a, &b) in self.bits.iter_mut().zip(&other.bits) {
            *a &= !b;
        }
    }

    pub fn union_with(&mut self, other: &BinaryMask) {
        for (a, &b) in self.bits.iter_mut().zip(&other.bits) {
            *a |= b;
        }
    }

    /// Pixels that lie in both masks.
    pub fn intersects(&self, other: &BinaryMask) -> bool {
        self.bits.iter().zip(&other.bits).any(|(&a, &b)| a && b)
    }

    pub fn transpose(&self) -> BinaryMask {
        BinaryMask::from_fn(self.height, self.width, |x, y| self.get(y, x))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SoftMask {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl SoftMask {
    pub fn new(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != width * height {
            return Err(Error::structural(format!(
                "soft mask buffer holds {} values, expected {}x{}",
                values.len(),
                width,
                height
            )));
        }
        if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::structural(format!(
                "soft mask value {v} outside [0, 1]"
            )));
        }
        Ok(Self {
            width,
            height,
            values,
        })
    }

    pub fn from_binary(mask: &BinaryMask) -> Self {
        Self {
            width: mask.width,
            height: mask.height,
            values: mask
                .bits
                .iter()
                .map(|&b| if b { 1.0 } else { 0.0 })
                .collect(),
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Mean over the full canvas; used as the prediction confidence.
    pub fn mean(&self) -> f64 {
        if self.values.is_empty() {
            return 0.0;
        }
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }
}

/// Inclusive axis-aligned pixel box.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct BBox {
    pub x_min: usize,
    pub y_min: usize,
    pub x_max: usize,
    pub y_max: usize,
}

impl BBox {
    pub fn width(&self) -> usize {
        self.x_max - self.x_min + 1
    }

    pub fn height(&self) -> usize {
        self.y_max - self.y_min + 1
    }

    pub fn area(&self) -> usize {
        self.width() * self.height()
    }

    /// Diagonal over inclusive extents, so a single pixel measures `sqrt(2)`.
    pub fn diagonal(&self) -> f64 {
        let w = self.width() as f64;
        let h = self.height() as f64;
        (w * w + h * h).sqrt()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scene {
    pub id: String,
    pub image: RgbImage,
    pub objects: Vec<BinaryMask>,
}

impl Scene {
    /// Checks that every mask matches the image size and is nonempty.
    pub fn validate(&self) -> Result<()> {
        for (k, mask) in self.objects.iter().enumerate() {
            if mask.dims() != self.image.dims() {
                return Err(Error::structural(format!(
                    "scene {}: mask {k} is {}x{} but image is {}x{}",
                    self.id,
                    mask.width(),
                    mask.height(),
                    self.image.width(),
                    self.image.height()
                )));
            }
            if mask.is_empty() {
                return Err(Error::structural(format!(
                    "scene {}: mask {k} is empty",
                    self.id
                )));
            }
        }
        Ok(())
    }

    /// Pixels covered by no object mask.
    pub fn background(&self) -> BinaryMask {
        let (w, h) = self.image.dims();
        let mut covered = BinaryMask::empty(w, h);
        for mask in &self.objects {
            covered.union_with(mask);
        }
        BinaryMask::from_fn(w, h, |x, y| !covered.get(x, y))
    }

    pub fn instances(&self) -> Result<Vec<ObjectInstance>> {
        self.objects
            .iter()
            .map(|m| derive_instance(m, &self.image))
            .collect()
    }
}

/// A single object mask with its cached geometry.
#[derive(Clone, Debug, PartialEq)]
pub struct ObjectInstance {
    pub mask: BinaryMask,
    pub mean_color: [f64; 3],
    pub bbox: BBox,
    pub bbox_diagonal: f64,
    /// `(x, y)` mean of the foreground pixel coordinates.
    pub centroid: (f64, f64),
    pub boundary: BinaryMask,
    pub area: usize,
    /// Integer `(sum x, sum y)` over the mask; lets callers form
    /// translation-exact centroid offsets.
    pub coord_sum: (u64, u64),
}

pub fn derive_instance(mask: &BinaryMask, image: &RgbImage) -> Result<ObjectInstance> {
    if mask.dims() != image.dims() {
        return Err(Error::structural(format!(
            "mask is {}x{} but image is {}x{}",
            mask.width(),
            mask.height(),
            image.width(),
            image.height()
        )));
    }
    let bbox = mask
        .bbox()
        .ok_or_else(|| Error::structural("cannot derive an instance from an empty mask"))?;

    // Integer accumulation keeps the result independent of visiting order.
    let mut area = 0u64;
    let (mut sx, mut sy) = (0u64, 0u64);
    let mut sum = [0u64; 3];
    for (x, y) in mask.points() {
        area += 1;
        sx += x as u64;
        sy += y as u64;
        let c = image.get(x, y);
        for ch in 0..3 {
            sum[ch] += u64::from(c[ch]);
        }
    }
    let n = area as f64;
    Ok(ObjectInstance {
        mask: mask.clone(),
        mean_color: sum.map(|s| s as f64 / n),
        bbox,
        bbox_diagonal: bbox.diagonal(),
        centroid: (sx as f64 / n, sy as f64 / n),
        boundary: raster::inner_boundary(mask),
        area: area as usize,
        coord_sum: (sx, sy),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rect(w: usize, h: usize, x0: usize, y0: usize, x1: usize, y1: usize) -> BinaryMask {
        BinaryMask::from_fn(w, h, |x, y| {
            (x0..=x1).contains(&x) && (y0..=y1).contains(&y)
        })
    }

    #[test]
    fn uniform_square_instance() {
        let image = RgbImage::filled(3, 3, [100, 100, 100]);
        let mask = rect(3, 3, 0, 0, 2, 2);
        let inst = derive_instance(&mask, &image).unwrap();
        assert_eq!(inst.mean_color, [100.0, 100.0, 100.0]);
        assert_eq!(inst.centroid, (1.0, 1.0));
        assert_eq!(inst.bbox_diagonal, 18f64.sqrt());
        assert_eq!(inst.area, 9);
    }

    #[test]
    fn single_pixel_instance() {
        let image = RgbImage::filled(10, 10, [0, 0, 0]);
        let mask = BinaryMask::from_points(10, 10, [(5, 7)]);
        let inst = derive_instance(&mask, &image).unwrap();
        assert_eq!(inst.centroid, (5.0, 7.0));
        assert_eq!(inst.bbox_diagonal, 2f64.sqrt());
        assert_eq!(inst.boundary, mask);
    }

    #[test]
    fn alternating_colors_average() {
        let mut image = RgbImage::filled(6, 6, [9, 9, 9]);
        let mask = rect(6, 6, 1, 1, 4, 2);
        for (i, (x, y)) in mask.points().enumerate() {
            let v = if i % 2 == 0 { 0 } else { 255 };
            image.set(x, y, [v, v, v]);
        }
        let inst = derive_instance(&mask, &image).unwrap();
        assert_eq!(inst.mean_color, [127.5, 127.5, 127.5]);
    }

    #[test]
    fn empty_mask_rejected() {
        let image = RgbImage::filled(4, 4, [0, 0, 0]);
        assert!(matches!(
            derive_instance(&BinaryMask::empty(4, 4), &image),
            Err(Error::Structural(_))
        ));
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let image = RgbImage::filled(4, 4, [0, 0, 0]);
        let mask = BinaryMask::from_points(5, 4, [(0, 0)]);
        assert!(derive_instance(&mask, &image).is_err());
    }

    #[test]
    fn background_excludes_objects() {
        let scene = Scene {
            id: "s".into(),
            image: RgbImage::filled(4, 4, [0, 0, 0]),
            objects: vec![rect(4, 4, 0, 0, 1, 1), rect(4, 4, 3, 3, 3, 3)],
        };
        assert_eq!(scene.background().count(), 16 - 5);
    }

    #[test]
    fn soft_mask_range_checked() {
        assert!(SoftMask::new(1, 2, vec![0.2, 1.5]).is_err());
        let m = SoftMask::new(1, 2, vec![0.2, 0.6]).unwrap();
        assert!((m.mean() - 0.4).abs() < 1e-15);
    }
}
