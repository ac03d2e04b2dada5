//! Procedural scene generators and curation.
//!
//! Three styles, all on a black 128x128 canvas with 2 to 6 objects:
//!
//! * `dsprites`: ellipses, squares and hearts at random scale and rotation,
//!   one uniform random color each; later objects may occlude earlier ones.
//! * `tetris`: tetrominoes in uniform colors, placed without overlap.
//! * `complex`: stars and L shapes with log-uniform sizes, painted with noisy
//!   multi-color textures drawn from one palette per scene; no overlap.
//!
//! Scene `i` depends only on `(seed, i)`, so output is independent of
//! scheduling.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scene::{BinaryMask, Rgb, RgbImage, Scene, CANVAS};
use crate::seed;

pub const MIN_OBJECTS: usize = 2;
pub const MAX_OBJECTS: usize = 6;
/// Placement attempts per scene before it is redrawn from the next sub-seed.
pub const MAX_REJECTIONS: usize = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Style {
    Dsprites,
    Tetris,
    Complex,
}

impl FromStr for Style {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "dsprites" => Ok(Style::Dsprites),
            "tetris" => Ok(Style::Tetris),
            "complex" => Ok(Style::Complex),
            _ => Err(format!("unknown style {s:?} (dsprites|tetris|complex)")),
        }
    }
}

impl fmt::Display for Style {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Style::Dsprites => "dsprites",
            Style::Tetris => "tetris",
            Style::Complex => "complex",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GeneratorConfig {
    pub style: Style,
    pub count: usize,
    pub seed: u64,
}

pub fn generate(config: &GeneratorConfig) -> Result<Vec<Scene>> {
    if config.count == 0 {
        return Err(Error::Config("scene count must be positive".into()));
    }
    Ok((0..config.count)
        .into_par_iter()
        .map(|i| generate_scene(config.style, config.seed, i))
        .collect())
}

pub fn generate_scene(style: Style, seed: u64, index: usize) -> Scene {
    let base = seed::mix(seed, index as u64);
    for attempt in 0u64.. {
        let mut rng = seed::rng(base, attempt);
        let drawn = match style {
            Style::Dsprites => dsprites(&mut rng),
            Style::Tetris => tetris(&mut rng),
            Style::Complex => complex(&mut rng),
        };
        if let Some((image, objects)) = drawn {
            return Scene {
                id: format!("{index:06}"),
                image,
                objects,
            };
        }
    }
    unreachable!("attempt counter is unbounded")
}

fn random_color(rng: &mut ChaCha8Rng) -> Rgb {
    [rng.gen(), rng.gen(), rng.gen()]
}

/// Pixels whose centers satisfy `inside` after mapping into the shape's unit
/// frame: translate by `center`, rotate by `-angle`, divide by `radius`.
fn raster_shape(
    center: (f64, f64),
    radius: f64,
    angle: f64,
    inside: impl Fn(f64, f64) -> bool,
) -> BinaryMask {
    let (sin, cos) = angle.sin_cos();
    let reach = radius * 1.5 + 1.0;
    let lo = |c: f64| (c - reach).floor().max(0.0) as usize;
    let hi = |c: f64| ((c + reach).ceil() as usize).min(CANVAS - 1);
    let mut mask = BinaryMask::empty(CANVAS, CANVAS);
    for y in lo(center.1)..=hi(center.1) {
        for x in lo(center.0)..=hi(center.0) {
            let (dx, dy) = (x as f64 - center.0, y as f64 - center.1);
            let u = (cos * dx + sin * dy) / radius;
            let v = (-sin * dx + cos * dy) / radius;
            if inside(u, v) {
                mask.set(x, y, true);
            }
        }
    }
    mask
}

fn sprite(rng: &mut ChaCha8Rng) -> BinaryMask {
    let radius = rng.gen_range(6.0..15.0);
    let margin = radius * 1.5 + 1.0;
    let center = (
        rng.gen_range(margin..CANVAS as f64 - margin),
        rng.gen_range(margin..CANVAS as f64 - margin),
    );
    let angle = rng.gen_range(0.0..TAU);
    match rng.gen_range(0..3) {
        0 => {
            let aspect: f64 = rng.gen_range(0.6..1.0);
            raster_shape(center, radius, angle, move |u, v| {
                u * u + (v / aspect).powi(2) <= 1.0
            })
        }
        1 => raster_shape(center, radius, angle, |u, v| {
            u.abs() <= 0.8 && v.abs() <= 0.8
        }),
        _ => raster_shape(center, radius, angle, |u, v| {
            // Implicit heart curve, point up in v.
            let (x, y) = (u * 1.2, -v * 1.2 + 0.2);
            let a = x * x + y * y - 1.0;
            a * a * a - x * x * y * y * y <= 0.0
        }),
    }
}

/// Draws uniformly colored objects in order with later ones on top; fails if
/// any object ends up fully hidden.
fn compose(objects: &[(BinaryMask, Rgb)]) -> Option<(RgbImage, Vec<BinaryMask>)> {
    let mut image = RgbImage::filled(CANVAS, CANVAS, [0, 0, 0]);
    let mut visible = Vec::with_capacity(objects.len());
    for (k, (mask, color)) in objects.iter().enumerate() {
        for (x, y) in mask.points() {
            image.set(x, y, *color);
        }
        let mut v = mask.clone();
        for (later, _) in &objects[k + 1..] {
            v.subtract(later);
        }
        if v.is_empty() {
            return None;
        }
        visible.push(v);
    }
    Some((image, visible))
}

fn dsprites(rng: &mut ChaCha8Rng) -> Option<(RgbImage, Vec<BinaryMask>)> {
    let k = rng.gen_range(MIN_OBJECTS..=MAX_OBJECTS);
    let objects: Vec<(BinaryMask, Rgb)> = (0..k)
        .map(|_| {
            let mask = sprite(rng);
            (mask, random_color(rng))
        })
        .collect();
    compose(&objects)
}

const TETROMINOES: [[(i64, i64); 4]; 7] = [
    [(0, 0), (1, 0), (2, 0), (3, 0)],
    [(0, 0), (1, 0), (0, 1), (1, 1)],
    [(0, 0), (1, 0), (2, 0), (1, 1)],
    [(1, 0), (2, 0), (0, 1), (1, 1)],
    [(0, 0), (1, 0), (1, 1), (2, 1)],
    [(0, 0), (0, 1), (1, 1), (2, 1)],
    [(2, 0), (0, 1), (1, 1), (2, 1)],
];

/// Pixel offsets of a shape, shifted so the smallest x and y are 0.
struct Footprint {
    offsets: Vec<(usize, usize)>,
    width: usize,
    height: usize,
}

impl Footprint {
    fn new(points: impl IntoIterator<Item = (i64, i64)>) -> Footprint {
        let points: Vec<(i64, i64)> = points.into_iter().collect();
        let x0 = points.iter().map(|p| p.0).min().expect("nonempty shape");
        let y0 = points.iter().map(|p| p.1).min().expect("nonempty shape");
        let offsets: Vec<(usize, usize)> = points
            .iter()
            .map(|&(x, y)| ((x - x0) as usize, (y - y0) as usize))
            .collect();
        let width = offsets.iter().map(|p| p.0).max().unwrap_or(0) + 1;
        let height = offsets.iter().map(|p| p.1).max().unwrap_or(0) + 1;
        Footprint {
            offsets,
            width,
            height,
        }
    }

    fn from_mask(mask: &BinaryMask) -> Footprint {
        Footprint::new(mask.points().map(|(x, y)| (x as i64, y as i64)))
    }
}

fn tetromino(rng: &mut ChaCha8Rng) -> Footprint {
    let cells = TETROMINOES[rng.gen_range(0..TETROMINOES.len())];
    let block = rng.gen_range(6..=10i64);
    let turns = rng.gen_range(0..4);
    let mut pixels = Vec::with_capacity(4 * (block * block) as usize);
    for &(cx, cy) in &cells {
        let (mut x, mut y) = (cx, cy);
        for _ in 0..turns {
            (x, y) = (-y, x);
        }
        for dy in 0..block {
            for dx in 0..block {
                pixels.push((x * block + dx, y * block + dy));
            }
        }
    }
    Footprint::new(pixels)
}

/// Places footprints one by one at uniform positions fully inside the canvas
/// without touching earlier ones. Gives up after `MAX_REJECTIONS` collisions.
fn place(
    rng: &mut ChaCha8Rng,
    shapes: impl IntoIterator<Item = Footprint>,
) -> Option<Vec<BinaryMask>> {
    let mut occupied = BinaryMask::empty(CANVAS, CANVAS);
    let mut rejections = 0;
    let mut masks = Vec::new();
    for shape in shapes {
        if shape.width > CANVAS || shape.height > CANVAS {
            return None;
        }
        loop {
            let x0 = rng.gen_range(0..=CANVAS - shape.width);
            let y0 = rng.gen_range(0..=CANVAS - shape.height);
            if shape
                .offsets
                .iter()
                .any(|&(dx, dy)| occupied.get(x0 + dx, y0 + dy))
            {
                rejections += 1;
                if rejections >= MAX_REJECTIONS {
                    return None;
                }
                continue;
            }
            let mask = BinaryMask::from_points(
                CANVAS,
                CANVAS,
                shape.offsets.iter().map(|&(dx, dy)| (x0 + dx, y0 + dy)),
            );
            occupied.union_with(&mask);
            masks.push(mask);
            break;
        }
    }
    Some(masks)
}

fn tetris(rng: &mut ChaCha8Rng) -> Option<(RgbImage, Vec<BinaryMask>)> {
    let k = rng.gen_range(MIN_OBJECTS..=MAX_OBJECTS);
    let shapes: Vec<Footprint> = (0..k).map(|_| tetromino(rng)).collect();
    let masks = place(rng, shapes)?;
    let mut image = RgbImage::filled(CANVAS, CANVAS, [0, 0, 0]);
    for mask in &masks {
        let color = random_color(rng);
        for (x, y) in mask.points() {
            image.set(x, y, color);
        }
    }
    Some((image, masks))
}

/// Even-odd point in polygon.
fn in_polygon(poly: &[(f64, f64)], (u, v): (f64, f64)) -> bool {
    let mut inside = false;
    let mut j = poly.len() - 1;
    for i in 0..poly.len() {
        let (xi, yi) = poly[i];
        let (xj, yj) = poly[j];
        if (yi > v) != (yj > v) && u < (xj - xi) * (v - yi) / (yj - yi) + xi {
            inside = !inside;
        }
        j = i;
    }
    inside
}

/// A star or an L at a log-uniform nominal diagonal, rasterized around the
/// canvas center (placement moves it afterwards).
fn concave_shape(rng: &mut ChaCha8Rng) -> Footprint {
    let diagonal = rng.gen_range(15f64.ln()..90f64.ln()).exp();
    let radius = diagonal / (2.0 * std::f64::consts::SQRT_2);
    let angle = rng.gen_range(0.0..TAU);
    let center = (CANVAS as f64 / 2.0, CANVAS as f64 / 2.0);
    let mask = if rng.gen_bool(0.5) {
        let points = rng.gen_range(5..=8usize);
        let inner = rng.gen_range(0.35..0.6);
        let poly: Vec<(f64, f64)> = (0..2 * points)
            .map(|i| {
                let r = if i % 2 == 0 { 1.0 } else { inner };
                let a = PI * i as f64 / points as f64;
                (r * a.cos(), r * a.sin())
            })
            .collect();
        raster_shape(center, radius, angle, move |u, v| in_polygon(&poly, (u, v)))
    } else {
        let arm = rng.gen_range(0.5..0.9);
        raster_shape(center, radius, angle, move |u, v| {
            u.abs() <= 1.0 && v.abs() <= 1.0 && (u <= -1.0 + arm || v >= 1.0 - arm)
        })
    };
    if mask.is_empty() {
        // Tiny shapes can miss every pixel center.
        return Footprint::new([(0, 0)]);
    }
    Footprint::from_mask(&mask)
}

fn jitter(rng: &mut ChaCha8Rng, base: Rgb, amount: i32) -> Rgb {
    base.map(|c| (i32::from(c) + rng.gen_range(-amount..=amount)).clamp(0, 255) as u8)
}

fn complex(rng: &mut ChaCha8Rng) -> Option<(RgbImage, Vec<BinaryMask>)> {
    let k = rng.gen_range(MIN_OBJECTS..=MAX_OBJECTS);
    let shapes: Vec<Footprint> = (0..k).map(|_| concave_shape(rng)).collect();
    let masks = place(rng, shapes)?;
    // One palette per scene keeps object colors close to each other.
    let base = [
        rng.gen_range(40..=215u8),
        rng.gen_range(40..=215u8),
        rng.gen_range(40..=215u8),
    ];
    let mut image = RgbImage::filled(CANVAS, CANVAS, [0, 0, 0]);
    for mask in &masks {
        let (c1, c2) = (jitter(rng, base, 35), jitter(rng, base, 35));
        let theta = rng.gen_range(0.0..TAU);
        let period = rng.gen_range(6.0..20.0);
        let (sin, cos) = theta.sin_cos();
        for (x, y) in mask.points() {
            let t = 0.5 + 0.5 * ((x as f64 * cos + y as f64 * sin) * TAU / period).sin();
            let noise = rng.gen_range(-18..=18);
            let mut color = [0u8; 3];
            for ch in 0..3 {
                let blend = f64::from(c1[ch]) * (1.0 - t) + f64::from(c2[ch]) * t;
                color[ch] = (blend.round() as i32 + noise).clamp(0, 255) as u8;
            }
            image.set(x, y, color);
        }
    }
    Some((image, masks))
}

/// Drops objects whose pixel count lies outside `[min_pixels, max_pixels]`,
/// then scenes left with fewer than 2 or more than 6 objects, and blanks the
/// background of the remaining scenes.
pub fn curate(scenes: Vec<Scene>, min_pixels: usize, max_pixels: usize) -> Vec<Scene> {
    scenes
        .into_iter()
        .filter_map(|mut scene| {
            scene
                .objects
                .retain(|m| (min_pixels..=max_pixels).contains(&m.count()));
            if !(MIN_OBJECTS..=MAX_OBJECTS).contains(&scene.objects.len()) {
                return None;
            }
            let background = scene.background();
            for (px, &bg) in scene.image.pixels_mut().iter_mut().zip(background.bits()) {
                if bg {
                    *px = [0, 0, 0];
                }
            }
            Some(scene)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(style: Style, count: usize) -> GeneratorConfig {
        GeneratorConfig {
            style,
            count,
            seed: 11,
        }
    }

    fn check_scene(scene: &Scene) {
        assert!((MIN_OBJECTS..=MAX_OBJECTS).contains(&scene.objects.len()));
        scene.validate().unwrap();
        let bg = scene.background();
        for (p, &b) in scene.image.pixels().iter().zip(bg.bits()) {
            if b {
                assert_eq!(*p, [0, 0, 0]);
            }
        }
        for i in 0..scene.objects.len() {
            for j in i + 1..scene.objects.len() {
                assert!(!scene.objects[i].intersects(&scene.objects[j]));
            }
        }
    }

    #[test]
    fn styles_produce_valid_scenes() {
        for style in [Style::Dsprites, Style::Tetris, Style::Complex] {
            for scene in generate(&config(style, 40)).unwrap() {
                check_scene(&scene);
            }
        }
    }

    #[test]
    fn deterministic_per_seed() {
        for style in [Style::Dsprites, Style::Tetris, Style::Complex] {
            let a = generate(&config(style, 5)).unwrap();
            let b = generate(&config(style, 5)).unwrap();
            assert_eq!(a, b);
            assert_eq!(generate_scene(style, 11, 3), a[3]);
        }
        let mut other = config(Style::Dsprites, 5);
        other.seed = 12;
        assert_ne!(
            generate(&other).unwrap(),
            generate(&config(Style::Dsprites, 5)).unwrap()
        );
    }

    #[test]
    fn tetris_objects_are_tetrominoes() {
        for scene in generate(&config(Style::Tetris, 20)).unwrap() {
            for m in &scene.objects {
                let b = m.bbox().unwrap();
                // Four square blocks of side 6 to 10.
                let side = (m.count() / 4) as f64;
                let block = side.sqrt() as usize;
                assert_eq!(block * block * 4, m.count());
                assert!((6..=10).contains(&block));
                assert_eq!(b.width() % block, 0);
                assert!(b.x_max < CANVAS && b.y_max < CANVAS);
            }
        }
    }

    #[test]
    fn zero_count_is_rejected() {
        assert!(generate(&config(Style::Tetris, 0)).is_err());
    }

    #[test]
    fn style_names_round_trip() {
        for style in [Style::Dsprites, Style::Tetris, Style::Complex] {
            assert_eq!(style.to_string().parse::<Style>().unwrap(), style);
        }
        assert!("clevr".parse::<Style>().is_err());
    }

    fn blob(x0: usize, n: usize) -> BinaryMask {
        BinaryMask::from_fn(CANVAS, CANVAS, |x, y| y == 0 && (x0..x0 + n).contains(&x))
    }

    #[test]
    fn curate_drops_small_objects_and_thin_scenes() {
        let image = RgbImage::filled(CANVAS, CANVAS, [1, 1, 1]);
        let scene = Scene {
            id: "a".into(),
            image: image.clone(),
            objects: vec![blob(0, 10), blob(20, 40), blob(70, 50)],
        };
        let out = curate(vec![scene.clone()], 35, 3276);
        assert_eq!(out[0].objects, vec![blob(20, 40), blob(70, 50)]);
        assert_eq!(out[0].image.get(5, 5), [0, 0, 0]);
        assert_eq!(out[0].image.get(20, 0), [1, 1, 1]);

        let thin = Scene {
            objects: vec![blob(0, 10), blob(20, 40)],
            ..scene.clone()
        };
        assert!(curate(vec![thin], 35, 3276).is_empty());
    }

    #[test]
    fn curate_keeps_in_range_scene() {
        let mut image = RgbImage::filled(CANVAS, CANVAS, [0, 0, 0]);
        image.set(0, 0, [4, 4, 4]);
        let scene = Scene {
            id: "b".into(),
            image,
            objects: vec![blob(0, 40), blob(50, 40)],
        };
        assert_eq!(curate(vec![scene.clone()], 35, 3276), vec![scene]);
    }
}
