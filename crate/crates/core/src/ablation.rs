//! C / S / T / U dataset ablations.
//!
//! Operations always run in the order S, U, T, C regardless of how they were
//! requested:
//!
//! * **S** replaces every mask by its convex hull raster. Where two hulls
//!   overlap they are split by a straight cut (see [`Cut`]), so each output
//!   mask stays convex and masks stay disjoint. New pixels take the color of
//!   the nearest original object pixel.
//! * **U** rescales every object so its bbox diagonal matches a target,
//!   keeping the centroid in place. Later objects are drawn over earlier ones.
//!   When S is also requested, the S step is repeated after scaling because
//!   nearest-neighbor resampling does not preserve convexity.
//! * **T** paints every object with a distinct texture from a bank.
//! * **C** fills every object with its rounded mean color.
//!
//! With at least one op, pixels outside all output masks are set to black.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::raster;
use crate::scene::{BinaryMask, Rgb, RgbImage, Scene};
use crate::seed;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Ops {
    pub s: bool,
    pub u: bool,
    pub t: bool,
    pub c: bool,
}

impl Ops {
    pub fn is_empty(&self) -> bool {
        !(self.s || self.u || self.t || self.c)
    }

    /// Op letters in application order.
    pub fn canonical(&self) -> Vec<&'static str> {
        [(self.s, "S"), (self.u, "U"), (self.t, "T"), (self.c, "C")]
            .into_iter()
            .filter_map(|(on, name)| on.then_some(name))
            .collect()
    }
}

impl fmt::Display for Ops {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.canonical().join(","))
    }
}

impl FromStr for Ops {
    type Err = String;

    /// Comma-separated letters in any order or case; blanks are ignored.
    fn from_str(text: &str) -> std::result::Result<Self, String> {
        let mut ops = Ops::default();
        for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            match part.to_ascii_uppercase().as_str() {
                "C" => ops.c = true,
                "S" => ops.s = true,
                "T" => ops.t = true,
                "U" => ops.u = true,
                _ => return Err(format!("unknown ablation {part:?} (expected C, S, T or U)")),
            }
        }
        Ok(ops)
    }
}

/// Target diagonals used for the real-world datasets.
pub fn target_preset(name: &str) -> Option<f64> {
    match name.to_ascii_lowercase().as_str() {
        "ycb" => Some(60.0),
        "scannet" => Some(70.0),
        "coco" => Some(57.0),
        _ => None,
    }
}

/// Mean bbox diagonal over every object of a dataset.
pub fn mean_bbox_diagonal(scenes: &[Scene]) -> Option<f64> {
    let diagonals: Vec<f64> = scenes
        .iter()
        .flat_map(|s| s.objects.iter())
        .filter_map(|m| m.bbox().map(|b| b.diagonal()))
        .collect();
    if diagonals.is_empty() {
        return None;
    }
    Some(diagonals.iter().sum::<f64>() / diagonals.len() as f64)
}

#[derive(Clone, Debug)]
pub struct AblationSpec {
    pub ops: Ops,
    pub textures: Vec<RgbImage>,
    pub target_diagonal: Option<f64>,
    pub seed: u64,
}

impl AblationSpec {
    pub fn validate(&self) -> Result<()> {
        if self.ops.u {
            match self.target_diagonal {
                Some(d) if d.is_finite() && d > 0.0 => {}
                other => {
                    return Err(Error::Config(format!(
                        "U needs a positive target diagonal, got {other:?}"
                    )))
                }
            }
        }
        if self.ops.t {
            if self.textures.is_empty() {
                return Err(Error::Config("T needs a nonempty texture bank".into()));
            }
            if let Some(i) = self.textures.iter().position(|t| t.pixels().is_empty()) {
                return Err(Error::Config(format!("texture {i} is empty")));
            }
        }
        Ok(())
    }
}

/// What happened to one scene. Object indices refer to the input scene.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct SceneProvenance {
    pub id: String,
    /// Input index of each output object.
    pub source_objects: Vec<usize>,
    pub dropped_objects: Vec<usize>,
    /// Texture bank index per output object (T only).
    pub texture_assignment: Vec<usize>,
    /// Scale factor per output object (U only).
    pub scale_factors: Vec<f64>,
    /// Objects that U pushed partly off the canvas.
    pub clipped_objects: Vec<usize>,
    /// Objects that lost pixels to a later object after U.
    pub occluded_objects: Vec<usize>,
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AblatedScene {
    pub scene: Scene,
    pub provenance: SceneProvenance,
}

#[derive(Clone, Debug, Serialize)]
pub struct DatasetProvenance {
    pub ops: Vec<&'static str>,
    pub seed: u64,
    pub target_diagonal: Option<f64>,
    pub scenes: Vec<SceneProvenance>,
}

struct Obj {
    source: usize,
    mask: BinaryMask,
    scale: f64,
}

struct Work {
    image: RgbImage,
    objs: Vec<Obj>,
    prov: SceneProvenance,
}

impl Work {
    fn drop_empty(&mut self, masks: Vec<BinaryMask>, why: &str) {
        let objs = std::mem::take(&mut self.objs);
        for (obj, mask) in objs.into_iter().zip(masks) {
            if mask.is_empty() {
                let msg = format!(
                    "scene {}: object {} dropped ({why})",
                    self.prov.id, obj.source
                );
                log::warn!("{msg}");
                self.prov.warnings.push(msg);
                self.prov.dropped_objects.push(obj.source);
            } else {
                self.objs.push(Obj { mask, ..obj });
            }
        }
    }
}

pub fn ablate(scene: &Scene, spec: &AblationSpec) -> Result<AblatedScene> {
    scene.validate()?;
    let mut work = Work {
        image: scene.image.clone(),
        objs: scene
            .objects
            .iter()
            .enumerate()
            .map(|(source, mask)| Obj {
                source,
                mask: mask.clone(),
                scale: 1.0,
            })
            .collect(),
        prov: SceneProvenance {
            id: scene.id.clone(),
            ..Default::default()
        },
    };
    let ops = spec.ops;
    if ops.s {
        convexify(&mut work);
    }
    if ops.u {
        let target = spec
            .target_diagonal
            .ok_or_else(|| Error::Config("U needs a target diagonal".into()))?;
        rescale(&mut work, target);
        if ops.s {
            convexify(&mut work);
        }
        work.prov.scale_factors = work.objs.iter().map(|o| o.scale).collect();
    }
    if ops.t {
        retexture(&mut work, &spec.textures, spec.seed)?;
    }
    if ops.c {
        average_colors(&mut work);
    }
    if !ops.is_empty() {
        let mut covered = BinaryMask::empty(work.image.width(), work.image.height());
        for o in &work.objs {
            covered.union_with(&o.mask);
        }
        for (px, &c) in work.image.pixels_mut().iter_mut().zip(covered.bits()) {
            if !c {
                *px = [0, 0, 0];
            }
        }
    }
    work.prov.source_objects = work.objs.iter().map(|o| o.source).collect();
    work.prov.dropped_objects.sort_unstable();
    Ok(AblatedScene {
        scene: Scene {
            id: scene.id.clone(),
            image: work.image,
            objects: work.objs.into_iter().map(|o| o.mask).collect(),
        },
        provenance: work.prov,
    })
}

/// Ablates every scene on the current rayon pool, keeping input order.
pub fn ablate_dataset(scenes: &[Scene], spec: &AblationSpec) -> Result<Vec<AblatedScene>> {
    spec.validate()?;
    scenes.par_iter().map(|s| ablate(s, spec)).collect()
}

/// Straight line between two objects' pixel sets.
///
/// The normal points from the centroid of `a` to the centroid of `b`. Along
/// it, the threshold minimizes the fraction of `a` plus the fraction of `b`
/// that lands on the wrong side; among equally good thresholds the middle one
/// is used, and it sits halfway between the two
/// projected pixel values around it. Pixels exactly on the line go to `a`.
/// All arithmetic is integral.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Cut {
    normal: (i128, i128),
    /// Twice the threshold.
    twice: i128,
}

impl Cut {
    pub fn between(a: &BinaryMask, b: &BinaryMask) -> Cut {
        let moments = |m: &BinaryMask| {
            m.points()
                .fold((0i128, 0i128, 0i128), |(n, sx, sy), (x, y)| {
                    (n + 1, sx + x as i128, sy + y as i128)
                })
        };
        let (na, ax, ay) = moments(a);
        let (nb, bx, by) = moments(b);
        let mut normal = (bx * na - ax * nb, by * na - ay * nb);
        if normal == (0, 0) {
            normal = (1, 0);
        }
        let project = |(x, y): (usize, usize)| x as i128 * normal.0 + y as i128 * normal.1;

        let mut values: Vec<(i128, bool)> = a
            .points()
            .map(|p| (project(p), true))
            .chain(b.points().map(|p| (project(p), false)))
            .collect();
        values.sort_unstable();
        let mut distinct: Vec<(i128, usize, usize)> = Vec::new();
        for (v, is_a) in values {
            match distinct.last_mut() {
                Some(last) if last.0 == v => {
                    if is_a {
                        last.1 += 1
                    } else {
                        last.2 += 1
                    }
                }
                _ => distinct.push((v, usize::from(is_a), usize::from(!is_a))),
            }
        }
        // Gap g puts the first g distinct values on a's side. Misassignments
        // are weighed relative to object size so a small object is not simply
        // absorbed, and each side keeps at least one of its own pixels.
        let total_a: usize = distinct.iter().map(|d| d.1).sum();
        let total_b: usize = distinct.iter().map(|d| d.2).sum();
        let mut candidates: Vec<(u128, usize)> = Vec::new();
        let (mut a_before, mut b_before) = (0usize, 0usize);
        for g in 0..=distinct.len() {
            if g > 0 {
                a_before += distinct[g - 1].1;
                b_before += distinct[g - 1].2;
            }
            if a_before == 0 || b_before == total_b {
                continue;
            }
            let cost = b_before as u128 * na as u128 + (total_a - a_before) as u128 * nb as u128;
            candidates.push((cost, g));
        }
        let Some(best) = candidates.iter().map(|c| c.0).min() else {
            // Identical projections (e.g. coinciding masks): all to `a`.
            let last = distinct.last().expect("masks are nonempty").0;
            return Cut {
                normal,
                twice: 2 * last,
            };
        };
        let ties: Vec<usize> = candidates
            .iter()
            .filter(|c| c.0 == best)
            .map(|c| c.1)
            .collect();
        let g = ties[ties.len() / 2];
        let twice = distinct[g - 1].0 + distinct[g].0;
        Cut { normal, twice }
    }

    /// Whether `(x, y)` falls on `a`'s side.
    pub fn on_first(&self, (x, y): (usize, usize)) -> bool {
        2 * (x as i128 * self.normal.0 + y as i128 * self.normal.1) <= self.twice
    }
}

/// Color of the nearest pixel of `mask` to `p`; ties go to the first in
/// row-major order. The nearest mask pixel to an outside point always lies on
/// the inner boundary, so only boundary pixels are scanned.
fn nearest_color(boundary: &[(usize, usize)], image: &RgbImage, p: (usize, usize)) -> Rgb {
    let mut best = (i64::MAX, boundary[0]);
    for &q in boundary {
        let dx = q.0 as i64 - p.0 as i64;
        let dy = q.1 as i64 - p.1 as i64;
        let d = dx * dx + dy * dy;
        if d < best.0 {
            best = (d, q);
        }
    }
    image.get(best.1 .0, best.1 .1)
}

fn convexify(work: &mut Work) {
    let hulls: Vec<BinaryMask> = work
        .objs
        .iter()
        .map(|o| {
            raster::convex_hull(&o.mask)
                .expect("masks are nonempty")
                .raster
        })
        .collect();
    let mut keep = hulls.clone();
    for k in 0..hulls.len() {
        for j in k + 1..hulls.len() {
            if !hulls[k].intersects(&hulls[j]) {
                continue;
            }
            let cut = Cut::between(&work.objs[k].mask, &work.objs[j].mask);
            for p in hulls[k].points() {
                if !cut.on_first(p) {
                    keep[k].set(p.0, p.1, false);
                }
            }
            for p in hulls[j].points() {
                if cut.on_first(p) {
                    keep[j].set(p.0, p.1, false);
                }
            }
        }
    }

    let (w, h) = work.image.dims();
    let mut image = RgbImage::filled(w, h, [0, 0, 0]);
    for (obj, region) in work.objs.iter().zip(&keep) {
        let lost = obj.mask.count() - obj.mask.intersection_count(region);
        if lost > 0 && !region.is_empty() {
            work.prov.warnings.push(format!(
                "scene {}: object {} gave up {lost} pixels to an overlapping hull",
                work.prov.id, obj.source
            ));
        }
        let boundary: Vec<(usize, usize)> = raster::inner_boundary(&obj.mask).points().collect();
        for p in region.points() {
            let color = if obj.mask.get(p.0, p.1) {
                work.image.get(p.0, p.1)
            } else {
                nearest_color(&boundary, &work.image, p)
            };
            image.set(p.0, p.1, color);
        }
    }
    work.image = image;
    work.drop_empty(keep, "covered by overlapping hulls");
}

/// Source rows or columns `[lo, hi)` feeding destination index `j` when `n`
/// source cells map onto `m` destination cells.
fn footprint(j: usize, n: usize, m: usize) -> (usize, usize) {
    let lo = j * n / m;
    let hi = ((j + 1) * n / m).max(lo + 1);
    (lo, hi)
}

/// An object resampled to `dw x dh`, with its top-left corner on the canvas
/// (possibly negative).
struct Resampled {
    origin: (i64, i64),
    width: usize,
    height: usize,
    cells: Vec<Option<Rgb>>,
}

/// Nearest-neighbor resampling of the object's bbox crop to an integer size
/// near `s` times the original. Every destination pixel covers a block of
/// source pixels; it is set if any of them is, and takes the color of the set
/// one nearest the block center. The result fills exactly `dw x dh`.
fn resample(mask: &BinaryMask, image: &RgbImage, target: f64) -> (Resampled, f64) {
    let b = mask.bbox().expect("masks are nonempty");
    let (w, h) = (b.width(), b.height());
    let s = target / b.diagonal();
    let dw = ((w as f64 * s).round() as usize).max(1);
    let dh = ((h as f64 * s).round() as usize).max(1);

    let mut cells = Vec::with_capacity(dw * dh);
    for j in 0..dh {
        let (y0, y1) = footprint(j, h, dh);
        for i in 0..dw {
            let (x0, x1) = footprint(i, w, dw);
            let (cx2, cy2) = ((x0 + x1) as i64, (y0 + y1) as i64);
            let mut best: Option<(i64, Rgb)> = None;
            for y in y0..y1 {
                for x in x0..x1 {
                    let (sx, sy) = (b.x_min + x, b.y_min + y);
                    if !mask.get(sx, sy) {
                        continue;
                    }
                    let dx = 2 * x as i64 + 1 - cx2;
                    let dy = 2 * y as i64 + 1 - cy2;
                    let d = dx * dx + dy * dy;
                    if best.is_none_or(|(bd, _)| d < bd) {
                        best = Some((d, image.get(sx, sy)));
                    }
                }
            }
            cells.push(best.map(|(_, c)| c));
        }
    }

    // Keep the centroid fixed: the left edge moves with the actual scale.
    let (n, sx, sy) = mask
        .points()
        .fold((0f64, 0f64, 0f64), |(n, sx, sy), (x, y)| {
            (n + 1.0, sx + x as f64, sy + y as f64)
        });
    let (cx, cy) = (sx / n + 0.5, sy / n + 0.5);
    let left = cx - (cx - b.x_min as f64) * dw as f64 / w as f64;
    let top = cy - (cy - b.y_min as f64) * dh as f64 / h as f64;
    let origin = ((left + 0.5).floor() as i64, (top + 0.5).floor() as i64);
    (
        Resampled {
            origin,
            width: dw,
            height: dh,
            cells,
        },
        s,
    )
}

fn rescale(work: &mut Work, target: f64) {
    let (w, h) = work.image.dims();
    let mut image = RgbImage::filled(w, h, [0, 0, 0]);
    let mut full = Vec::with_capacity(work.objs.len());
    for obj in &mut work.objs {
        let (r, s) = resample(&obj.mask, &work.image, target);
        obj.scale = s;
        let mut mask = BinaryMask::empty(w, h);
        let mut clipped = false;
        for j in 0..r.height {
            for i in 0..r.width {
                let Some(color) = r.cells[j * r.width + i] else {
                    continue;
                };
                let (x, y) = (r.origin.0 + i as i64, r.origin.1 + j as i64);
                if x < 0 || y < 0 || x >= w as i64 || y >= h as i64 {
                    clipped = true;
                    continue;
                }
                let (x, y) = (x as usize, y as usize);
                mask.set(x, y, true);
                image.set(x, y, color);
            }
        }
        if clipped {
            work.prov.clipped_objects.push(obj.source);
        }
        full.push(mask);
    }

    let mut visible = full.clone();
    for k in 0..visible.len() {
        for later in &full[k + 1..] {
            visible[k].subtract(later);
        }
        if visible[k].count() != full[k].count() {
            work.prov.occluded_objects.push(work.objs[k].source);
        }
    }
    work.prov.occluded_objects.sort_unstable();
    work.image = image;
    work.drop_empty(visible, "hidden after rescaling");
}

fn retexture(work: &mut Work, bank: &[RgbImage], seed: u64) -> Result<()> {
    let k = work.objs.len();
    if bank.len() < k {
        return Err(Error::Config(format!(
            "scene {}: {k} objects but only {} textures",
            work.prov.id,
            bank.len()
        )));
    }
    let mut rng = seed::rng(seed, seed::fnv1a(work.prov.id.as_bytes()));
    let picks = rand::seq::index::sample(&mut rng, bank.len(), k).into_vec();
    for (obj, &t) in work.objs.iter().zip(&picks) {
        let tex = &bank[t];
        for (x, y) in obj.mask.points() {
            work.image
                .set(x, y, tex.get(x % tex.width(), y % tex.height()));
        }
    }
    work.prov.texture_assignment = picks;
    Ok(())
}

/// Per-channel mean, rounded half up.
pub fn rounded_mean(colors: impl IntoIterator<Item = Rgb>) -> Rgb {
    let mut sum = [0u64; 3];
    let mut n = 0u64;
    for c in colors {
        for ch in 0..3 {
            sum[ch] += u64::from(c[ch]);
        }
        n += 1;
    }
    sum.map(|s| ((2 * s + n) / (2 * n)) as u8)
}

fn average_colors(work: &mut Work) {
    let means: Vec<Rgb> = work
        .objs
        .iter()
        .map(|o| rounded_mean(o.mask.points().map(|(x, y)| work.image.get(x, y))))
        .collect();
    for (obj, mean) in work.objs.iter().zip(means) {
        for (x, y) in obj.mask.points() {
            work.image.set(x, y, mean);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::object_factors::{object_color_gradient, object_shape_concavity};
    use crate::scene::{derive_instance, CANVAS};
    use crate::scene_factors::inter_object_shape_variation;

    fn spec(ops: &str) -> AblationSpec {
        AblationSpec {
            ops: ops.parse().unwrap(),
            textures: crate::textures::bundled(),
            target_diagonal: Some(20.0),
            seed: 5,
        }
    }

    fn rect(x0: usize, y0: usize, x1: usize, y1: usize) -> BinaryMask {
        BinaryMask::from_fn(CANVAS, CANVAS, |x, y| {
            (x0..=x1).contains(&x) && (y0..=y1).contains(&y)
        })
    }

    fn paint(image: &mut RgbImage, mask: &BinaryMask, f: impl Fn(usize, usize) -> Rgb) {
        for (x, y) in mask.points() {
            image.set(x, y, f(x, y));
        }
    }

    /// An L shape and a gradient-filled rectangle.
    fn sample_scene() -> Scene {
        let mut image = RgbImage::filled(CANVAS, CANVAS, [0, 0, 0]);
        let mut l = rect(10, 10, 14, 40);
        l.union_with(&rect(10, 36, 40, 40));
        let r = rect(60, 60, 90, 75);
        paint(&mut image, &l, |x, y| [(x * 3) as u8, (y * 2) as u8, 90]);
        paint(&mut image, &r, |x, _| [200, (x * 2) as u8, 10]);
        Scene {
            id: "s0".into(),
            image,
            objects: vec![l, r],
        }
    }

    #[test]
    fn ops_parse_any_order_and_case() {
        let ops: Ops = "u, c,T,s".parse().unwrap();
        assert_eq!(ops.canonical(), vec!["S", "U", "T", "C"]);
        assert_eq!(ops.to_string(), "S,U,T,C");
        assert!("".parse::<Ops>().unwrap().is_empty());
        assert!("C,X".parse::<Ops>().is_err());
    }

    #[test]
    fn presets() {
        assert_eq!(target_preset("YCB"), Some(60.0));
        assert_eq!(target_preset("scannet"), Some(70.0));
        assert_eq!(target_preset("coco"), Some(57.0));
        assert_eq!(target_preset("clevr"), None);
    }

    #[test]
    fn empty_ops_is_identity() {
        let mut scene = sample_scene();
        scene.image.set(127, 127, [1, 2, 3]);
        let out = ablate(&scene, &spec("")).unwrap();
        assert_eq!(out.scene, scene);
    }

    #[test]
    fn c_rounds_half_up() {
        let mut image = RgbImage::filled(4, 4, [0, 0, 0]);
        image.set(1, 0, [255, 255, 255]);
        let scene = Scene {
            id: "c".into(),
            image,
            objects: vec![BinaryMask::from_points(4, 4, [(0, 0), (1, 0)])],
        };
        let out = ablate(&scene, &spec("C")).unwrap().scene;
        assert_eq!(out.image.get(0, 0), [128, 128, 128]);
        assert_eq!(out.image.get(1, 0), [128, 128, 128]);
        assert_eq!(out.objects, scene.objects);
    }

    #[test]
    fn c_zeroes_gradient_and_is_idempotent() {
        let once = ablate(&sample_scene(), &spec("C")).unwrap().scene;
        for m in &once.objects {
            let inst = derive_instance(m, &once.image).unwrap();
            assert_eq!(object_color_gradient(&inst, &once.image), Some(0.0));
        }
        let twice = ablate(&once, &spec("C")).unwrap().scene;
        assert_eq!(once, twice);
    }

    #[test]
    fn s_on_convex_scene_is_identity() {
        let mut image = RgbImage::filled(CANVAS, CANVAS, [0, 0, 0]);
        let a = rect(5, 5, 20, 30);
        let b = rect(50, 50, 60, 52);
        paint(&mut image, &a, |x, y| [x as u8, y as u8, 7]);
        paint(&mut image, &b, |_, _| [9, 9, 9]);
        let scene = Scene {
            id: "convex".into(),
            image,
            objects: vec![a, b],
        };
        assert_eq!(ablate(&scene, &spec("S")).unwrap().scene, scene);
    }

    #[test]
    fn s_fills_l_notch_from_nearest_pixels() {
        let out = ablate(&sample_scene(), &spec("S")).unwrap();
        let scene = out.scene;
        let hull = raster::convex_hull(&sample_scene().objects[0])
            .unwrap()
            .raster;
        assert_eq!(scene.objects[0], hull);
        // (15, 35) is a new pixel; its unique nearest original pixels are
        // (14, 35) and (15, 36) at distance 1, and row-major order picks (14, 35).
        assert!(!sample_scene().objects[0].get(15, 35));
        assert_eq!(scene.image.get(15, 35), sample_scene().image.get(14, 35));
        for m in &scene.objects {
            let inst = derive_instance(m, &scene.image).unwrap();
            assert_eq!(object_shape_concavity(&inst), 0.0);
        }
    }

    #[test]
    fn s_splits_overlapping_hulls_into_convex_parts() {
        // Two interlocking L shapes whose hulls overlap.
        let mut a = rect(10, 10, 13, 50);
        a.union_with(&rect(10, 47, 50, 50));
        let mut b = rect(20, 20, 60, 23);
        b.union_with(&rect(57, 20, 60, 60));
        let mut image = RgbImage::filled(CANVAS, CANVAS, [0, 0, 0]);
        paint(&mut image, &a, |_, _| [200, 0, 0]);
        paint(&mut image, &b, |_, _| [0, 0, 200]);
        let scene = Scene {
            id: "overlap".into(),
            image,
            objects: vec![a, b],
        };
        let out = ablate(&scene, &spec("S")).unwrap();
        let objs = &out.scene.objects;
        assert_eq!(objs.len(), 2);
        assert!(!objs[0].intersects(&objs[1]));
        for m in objs {
            let inst = derive_instance(m, &out.scene.image).unwrap();
            assert_eq!(object_shape_concavity(&inst), 0.0);
        }
        let again = ablate(&out.scene, &spec("S")).unwrap();
        assert_eq!(again.scene, out.scene);
    }

    #[test]
    fn cut_separates_separable_sets_midway() {
        let a = BinaryMask::from_points(20, 1, [(0, 0), (1, 0)]);
        let b = BinaryMask::from_points(20, 1, [(10, 0), (11, 0)]);
        let cut = Cut::between(&a, &b);
        assert!(cut.on_first((5, 0)));
        assert!(!cut.on_first((6, 0)));
        assert!(a.points().all(|p| cut.on_first(p)));
        assert!(b.points().all(|p| !cut.on_first(p)));
    }

    #[test]
    fn cut_keeps_small_object_in_notch() {
        // A 3x3 object inside the notch of a large L.
        let mut big = BinaryMask::from_fn(64, 64, |x, y| x < 4 && y < 60);
        big.union_with(&BinaryMask::from_fn(64, 64, |x, y| {
            (56..60).contains(&y) && x < 60
        }));
        let small = BinaryMask::from_fn(64, 64, |x, y| {
            (20..23).contains(&x) && (40..43).contains(&y)
        });
        let cut = Cut::between(&big, &small);
        assert!(small.points().all(|p| !cut.on_first(p)));
        let dot = BinaryMask::from_points(64, 64, [(5, 5)]);
        assert!(Cut::between(&dot, &dot).on_first((5, 5)));
    }

    #[test]
    fn u_doubles_a_ten_pixel_diagonal() {
        // 6 x 8 bbox has diagonal 10.
        let mask = rect(40, 40, 45, 47);
        let image = RgbImage::filled(CANVAS, CANVAS, [50, 60, 70]);
        let scene = Scene {
            id: "u".into(),
            image,
            objects: vec![mask],
        };
        let out = ablate(&scene, &spec("U")).unwrap();
        let b = out.scene.objects[0].bbox().unwrap();
        assert!((b.diagonal() - 20.0).abs() <= 1.0);
        assert_eq!((b.width(), b.height()), (12, 16));
        assert_eq!(out.provenance.scale_factors, vec![2.0]);
        // Centroid (43, 44) stays put up to rounding.
        let inst = derive_instance(&out.scene.objects[0], &out.scene.image).unwrap();
        assert!((inst.centroid.0 - 43.0).abs() <= 0.5);
        assert!((inst.centroid.1 - 44.0).abs() <= 0.5);
    }

    #[test]
    fn u_at_target_is_identity() {
        let mask = rect(40, 40, 51, 55);
        let mut image = RgbImage::filled(CANVAS, CANVAS, [0, 0, 0]);
        paint(&mut image, &mask, |x, y| [x as u8, y as u8, 1]);
        let scene = Scene {
            id: "u1".into(),
            image,
            objects: vec![mask],
        };
        let out = ablate(&scene, &spec("U")).unwrap();
        assert_eq!(out.scene, scene);
    }

    #[test]
    fn u_equalizes_diagonals() {
        let out = ablate(&sample_scene(), &spec("U")).unwrap();
        assert!(out.provenance.clipped_objects.is_empty());
        assert!(out.provenance.occluded_objects.is_empty());
        let inst: Vec<_> = out
            .scene
            .objects
            .iter()
            .map(|m| derive_instance(m, &out.scene.image).unwrap())
            .collect();
        let v = inter_object_shape_variation(&inst).unwrap();
        assert!(v <= 2.0 / (255.0 * 2f64.sqrt()), "{v}");
    }

    #[test]
    fn u_records_canvas_clipping() {
        let mask = rect(0, 0, 9, 9);
        let scene = Scene {
            id: "edge".into(),
            image: RgbImage::filled(CANVAS, CANVAS, [9, 9, 9]),
            objects: vec![mask],
        };
        let mut sp = spec("U");
        sp.target_diagonal = Some(60.0);
        let out = ablate(&scene, &sp).unwrap();
        assert_eq!(out.provenance.clipped_objects, vec![0]);
    }

    #[test]
    fn t_assigns_distinct_textures_deterministically() {
        let scene = sample_scene();
        let a = ablate(&scene, &spec("T")).unwrap();
        let b = ablate(&scene, &spec("T")).unwrap();
        assert_eq!(a, b);
        let t = &a.provenance.texture_assignment;
        assert_eq!(t.len(), 2);
        assert_ne!(t[0], t[1]);
        assert_eq!(a.scene.objects, scene.objects);
        let bank = crate::textures::bundled();
        assert_eq!(a.scene.image.get(12, 20), bank[t[0]].get(12, 20));
    }

    #[test]
    fn t_distinct_over_many_seeds() {
        let scene = sample_scene();
        for seed in 0..1000 {
            let mut sp = spec("T");
            sp.seed = seed;
            let t = ablate(&scene, &sp).unwrap().provenance.texture_assignment;
            assert_ne!(t[0], t[1], "seed {seed}");
        }
    }

    #[test]
    fn t_needs_enough_textures() {
        let mut sp = spec("T");
        sp.textures.truncate(1);
        assert!(matches!(
            ablate(&sample_scene(), &sp),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn background_is_blanked() {
        let mut scene = sample_scene();
        scene.image.set(127, 0, [5, 5, 5]);
        let out = ablate(&scene, &spec("T")).unwrap().scene;
        assert_eq!(out.image.get(127, 0), [0, 0, 0]);
    }

    #[test]
    fn full_pipeline_post_conditions() {
        let out = ablate(&sample_scene(), &spec("c,s,t,u")).unwrap();
        let scene = out.scene;
        assert_eq!(scene.objects.len(), 2);
        let inst: Vec<_> = scene
            .objects
            .iter()
            .map(|m| derive_instance(m, &scene.image).unwrap())
            .collect();
        for i in &inst {
            assert_eq!(object_shape_concavity(i), 0.0);
            assert!(object_color_gradient(i, &scene.image).is_none_or(|g| g == 0.0));
        }
        let v = inter_object_shape_variation(&inst).unwrap();
        assert!(v <= 2.0 / (255.0 * 2f64.sqrt()), "{v}");
    }

    #[test]
    fn spec_validation() {
        let mut sp = spec("U");
        sp.target_diagonal = None;
        assert!(sp.validate().is_err());
        sp.target_diagonal = Some(-1.0);
        assert!(sp.validate().is_err());
        let mut sp = spec("T");
        sp.textures.clear();
        assert!(sp.validate().is_err());
    }
}
