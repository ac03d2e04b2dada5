//! Manifest and PNG input/output.
//!
//! A dataset directory holds `manifest.json`:
//!
//! ```json
//! {"images": [{"id": "000001", "image": "images/000001.png",
//!              "masks": ["masks/000001_0.png", "masks/000001_1.png"]}]}
//! ```
//!
//! Paths are relative to the manifest. Images are RGB PNGs, masks are 8-bit
//! grayscale PNGs (values above 127 are foreground). A prediction manifest has
//! the same layout; its masks are read as soft masks (`value / 255`).

use std::collections::HashSet;
use std::fs;
use std::io::Cursor;
use std::path::{Path, PathBuf};

use image::{DynamicImage, ImageFormat, ImageResult};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scene::{BinaryMask, RgbImage, Scene, SoftMask};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub images: Vec<ManifestEntry>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub id: String,
    pub image: String,
    pub masks: Vec<String>,
}

pub fn parse_manifest(text: &str) -> serde_json::Result<Manifest> {
    serde_json::from_str(text)
}

/// Resolves a directory to its `manifest.json`; files are returned unchanged.
pub fn manifest_path(path: &Path) -> PathBuf {
    if path.is_dir() {
        path.join(MANIFEST_FILE)
    } else {
        path.to_path_buf()
    }
}

pub fn read_manifest(path: &Path) -> Result<Manifest> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let manifest = parse_manifest(&text).map_err(|source| Error::Manifest {
        path: path.to_path_buf(),
        source,
    })?;
    let mut seen = HashSet::new();
    for entry in &manifest.images {
        if !seen.insert(entry.id.as_str()) {
            return Err(Error::structural(format!(
                "{}: duplicate scene id {:?}",
                path.display(),
                entry.id
            )));
        }
    }
    Ok(manifest)
}

pub fn decode_rgb_png(bytes: &[u8]) -> ImageResult<RgbImage> {
    let img = image::load_from_memory_with_format(bytes, ImageFormat::Png)?.into_rgb8();
    let (w, h) = (img.width() as usize, img.height() as usize);
    let pixels = img.pixels().map(|p| p.0).collect();
    Ok(RgbImage::new(w, h, pixels).expect("decoder returns w*h pixels"))
}

fn decode_gray_png(bytes: &[u8]) -> ImageResult<image::GrayImage> {
    Ok(image::load_from_memory_with_format(bytes, ImageFormat::Png)?.into_luma8())
}

/// Grayscale (or color, converted to luma) PNG to a mask, foreground above 127.
pub fn decode_mask_png(bytes: &[u8]) -> ImageResult<BinaryMask> {
    let img = decode_gray_png(bytes)?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let bits = img.pixels().map(|p| p.0[0] > 127).collect();
    Ok(BinaryMask::new(w, h, bits).expect("decoder returns w*h pixels"))
}

pub fn decode_soft_png(bytes: &[u8]) -> ImageResult<SoftMask> {
    let img = decode_gray_png(bytes)?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let values = img.pixels().map(|p| f64::from(p.0[0]) / 255.0).collect();
    Ok(SoftMask::new(w, h, values).expect("values are in [0, 1]"))
}

fn encode_png(img: DynamicImage) -> Vec<u8> {
    let mut out = Cursor::new(Vec::new());
    img.write_to(&mut out, ImageFormat::Png)
        .expect("in-memory PNG encoding cannot fail");
    out.into_inner()
}

pub fn encode_rgb_png(image: &RgbImage) -> Vec<u8> {
    let raw: Vec<u8> = image.pixels().iter().flatten().copied().collect();
    let buf = image::RgbImage::from_raw(image.width() as u32, image.height() as u32, raw)
        .expect("buffer matches dimensions");
    encode_png(DynamicImage::ImageRgb8(buf))
}

/// Masks are written as 0 / 255.
pub fn encode_mask_png(mask: &BinaryMask) -> Vec<u8> {
    let raw: Vec<u8> = mask
        .bits()
        .iter()
        .map(|&b| if b { 255 } else { 0 })
        .collect();
    let buf = image::GrayImage::from_raw(mask.width() as u32, mask.height() as u32, raw)
        .expect("buffer matches dimensions");
    encode_png(DynamicImage::ImageLuma8(buf))
}

/// Soft masks are quantized to `round(255 v)`.
pub fn encode_soft_png(mask: &SoftMask) -> Vec<u8> {
    let raw: Vec<u8> = mask
        .values()
        .iter()
        .map(|&v| (v * 255.0).round() as u8)
        .collect();
    let buf = image::GrayImage::from_raw(mask.width() as u32, mask.height() as u32, raw)
        .expect("buffer matches dimensions");
    encode_png(DynamicImage::ImageLuma8(buf))
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

fn decode_at<T>(path: &Path, f: impl FnOnce(&[u8]) -> ImageResult<T>) -> Result<T> {
    let bytes = read_bytes(path)?;
    f(&bytes).map_err(|source| Error::Image {
        path: path.to_path_buf(),
        source,
    })
}

fn base_dir(manifest: &Path) -> PathBuf {
    manifest.parent().map(Path::to_path_buf).unwrap_or_default()
}

/// Loads every scene of a manifest (file or directory containing one).
pub fn load_dataset(path: &Path) -> Result<Vec<Scene>> {
    let path = manifest_path(path);
    let manifest = read_manifest(&path)?;
    let base = base_dir(&path);
    manifest
        .images
        .iter()
        .map(|entry| load_scene(&base, entry))
        .collect()
}

fn load_scene(base: &Path, entry: &ManifestEntry) -> Result<Scene> {
    let image_path = base.join(&entry.image);
    let image = decode_at(&image_path, decode_rgb_png)?;
    let mut objects = Vec::with_capacity(entry.masks.len());
    for rel in &entry.masks {
        let mask_path = base.join(rel);
        let mask = decode_at(&mask_path, decode_mask_png)?;
        if mask.dims() != image.dims() {
            return Err(Error::structural(format!(
                "{}: mask is {}x{} but image {} is {}x{}",
                mask_path.display(),
                mask.width(),
                mask.height(),
                image_path.display(),
                image.width(),
                image.height()
            )));
        }
        if mask.is_empty() {
            return Err(Error::structural(format!(
                "{}: mask has no foreground pixels",
                mask_path.display()
            )));
        }
        objects.push(mask);
    }
    Ok(Scene {
        id: entry.id.clone(),
        image,
        objects,
    })
}

/// Predicted soft masks for one scene.
#[derive(Clone, Debug, PartialEq)]
pub struct PredictedScene {
    pub id: String,
    pub masks: Vec<SoftMask>,
}

pub fn load_predictions(path: &Path) -> Result<Vec<PredictedScene>> {
    let path = manifest_path(path);
    let manifest = read_manifest(&path)?;
    let base = base_dir(&path);
    let mut out = Vec::with_capacity(manifest.images.len());
    for entry in &manifest.images {
        let mut masks = Vec::with_capacity(entry.masks.len());
        let mut dims = None;
        for rel in &entry.masks {
            let mask_path = base.join(rel);
            let mask = decode_at(&mask_path, decode_soft_png)?;
            if *dims.get_or_insert(mask.dims()) != mask.dims() {
                return Err(Error::structural(format!(
                    "{}: prediction masks of scene {:?} differ in size",
                    mask_path.display(),
                    entry.id
                )));
            }
            masks.push(mask);
        }
        out.push(PredictedScene {
            id: entry.id.clone(),
            masks,
        });
    }
    Ok(out)
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    write_file(path, text.as_bytes())
}

/// Writes scenes under `dir` with positional file names and a fresh manifest.
pub fn save_dataset(dir: &Path, scenes: &[Scene]) -> Result<()> {
    let mut manifest = Manifest::default();
    for (i, scene) in scenes.iter().enumerate() {
        let image = format!("images/{i:06}.png");
        write_file(&dir.join(&image), &encode_rgb_png(&scene.image))?;
        let mut masks = Vec::with_capacity(scene.objects.len());
        for (k, mask) in scene.objects.iter().enumerate() {
            let rel = format!("masks/{i:06}_{k}.png");
            write_file(&dir.join(&rel), &encode_mask_png(mask))?;
            masks.push(rel);
        }
        manifest.images.push(ManifestEntry {
            id: scene.id.clone(),
            image,
            masks,
        });
    }
    write_json(&dir.join(MANIFEST_FILE), &manifest)
}

pub fn save_predictions(dir: &Path, predictions: &[PredictedScene]) -> Result<()> {
    let mut manifest = Manifest::default();
    for (i, pred) in predictions.iter().enumerate() {
        let mut masks = Vec::with_capacity(pred.masks.len());
        for (k, mask) in pred.masks.iter().enumerate() {
            let rel = format!("masks/{i:06}_{k}.png");
            write_file(&dir.join(&rel), &encode_soft_png(mask))?;
            masks.push(rel);
        }
        manifest.images.push(ManifestEntry {
            id: pred.id.clone(),
            image: String::new(),
            masks,
        });
    }
    write_json(&dir.join(MANIFEST_FILE), &manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_object_scene() -> Scene {
        let mut image = RgbImage::filled(8, 8, [0, 0, 0]);
        image.set(1, 1, [200, 10, 10]);
        image.set(5, 5, [10, 200, 10]);
        Scene {
            id: "scene-a".into(),
            image,
            objects: vec![
                BinaryMask::from_points(8, 8, [(1, 1), (1, 2)]),
                BinaryMask::from_points(8, 8, [(5, 5)]),
            ],
        }
    }

    #[test]
    fn save_then_load() {
        let dir = tempfile::tempdir().unwrap();
        let scene = two_object_scene();
        save_dataset(dir.path(), std::slice::from_ref(&scene)).unwrap();
        let loaded = load_dataset(dir.path()).unwrap();
        assert_eq!(loaded, vec![scene]);
        assert_eq!(loaded[0].objects.len(), 2);
    }

    #[test]
    fn missing_png_names_path() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = r#"{"images":[{"id":"x","image":"nope.png","masks":[]}]}"#;
        fs::write(dir.path().join(MANIFEST_FILE), manifest).unwrap();
        let err = load_dataset(dir.path()).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
        assert!(err.to_string().contains("nope.png"));
    }

    #[test]
    fn mask_size_mismatch_is_structural() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(
            dir.path().join("img.png"),
            encode_rgb_png(&RgbImage::filled(128, 128, [1, 2, 3])),
        )
        .unwrap();
        fs::write(
            dir.path().join("m.png"),
            encode_mask_png(&BinaryMask::from_points(64, 64, [(3, 3)])),
        )
        .unwrap();
        let manifest = r#"{"images":[{"id":"x","image":"img.png","masks":["m.png"]}]}"#;
        fs::write(dir.path().join(MANIFEST_FILE), manifest).unwrap();
        assert!(matches!(
            load_dataset(dir.path()),
            Err(Error::Structural(_))
        ));
    }

    #[test]
    fn empty_mask_is_structural() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(
            dir.path().join("img.png"),
            encode_rgb_png(&RgbImage::filled(4, 4, [1, 2, 3])),
        )
        .unwrap();
        fs::write(
            dir.path().join("m.png"),
            encode_mask_png(&BinaryMask::empty(4, 4)),
        )
        .unwrap();
        let manifest = r#"{"images":[{"id":"x","image":"img.png","masks":["m.png"]}]}"#;
        fs::write(dir.path().join(MANIFEST_FILE), manifest).unwrap();
        assert!(matches!(
            load_dataset(dir.path()),
            Err(Error::Structural(_))
        ));
    }

    #[test]
    fn mask_threshold_is_above_127() {
        let raw = vec![0u8, 127, 128, 255];
        let buf = image::GrayImage::from_raw(4, 1, raw).unwrap();
        let bytes = encode_png(DynamicImage::ImageLuma8(buf));
        let mask = decode_mask_png(&bytes).unwrap();
        assert_eq!(mask.bits(), &[false, false, true, true]);
        let soft = decode_soft_png(&bytes).unwrap();
        assert_eq!(soft.values()[3], 1.0);
        assert!((soft.values()[1] - 127.0 / 255.0).abs() < 1e-15);
    }

    #[test]
    fn duplicate_ids_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = r#"{"images":[{"id":"x","image":"a.png","masks":[]},{"id":"x","image":"b.png","masks":[]}]}"#;
        fs::write(dir.path().join(MANIFEST_FILE), manifest).unwrap();
        assert!(matches!(
            load_dataset(dir.path()),
            Err(Error::Structural(_))
        ));
    }

    #[test]
    fn malformed_manifest() {
        assert!(parse_manifest("{\"images\": 3}").is_err());
        assert!(parse_manifest("{\"images\": [], \"extra\": 1}").is_err());
        assert!(parse_manifest("{\"images\": []}").is_ok());
    }

    #[test]
    fn predictions_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let pred = PredictedScene {
            id: "p".into(),
            masks: vec![SoftMask::new(2, 1, vec![0.0, 1.0]).unwrap()],
        };
        save_predictions(dir.path(), std::slice::from_ref(&pred)).unwrap();
        assert_eq!(load_predictions(dir.path()).unwrap(), vec![pred]);
    }
}
