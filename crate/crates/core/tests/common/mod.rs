#![allow(dead_code)]

use objectness::scene::{BinaryMask, RgbImage, Scene};
use objectness::synth::{generate_scene, Style};

pub const STYLES: [Style; 3] = [Style::Dsprites, Style::Tetris, Style::Complex];

/// One object cut out of its scene: colors outside the mask are black.
pub struct Cutout {
    pub mask: BinaryMask,
    pub image: RgbImage,
}

impl Cutout {
    pub fn from_scene(scene: &Scene, k: usize, margin: usize) -> Cutout {
        let mask = &scene.objects[k];
        let b = mask.bbox().expect("nonempty mask");
        let (w, h) = (b.width() + 2 * margin, b.height() + 2 * margin);
        let mut out = BinaryMask::empty(w, h);
        let mut image = RgbImage::filled(w, h, [0, 0, 0]);
        for (x, y) in mask.points() {
            let (u, v) = (x - b.x_min + margin, y - b.y_min + margin);
            out.set(u, v, true);
            image.set(u, v, scene.image.get(x, y));
        }
        Cutout { mask: out, image }
    }

    /// Moves the cutout to `(dx, dy)` on a `w`×`h` canvas.
    pub fn placed(&self, w: usize, h: usize, dx: usize, dy: usize) -> Cutout {
        let mut mask = BinaryMask::empty(w, h);
        let mut image = RgbImage::filled(w, h, [0, 0, 0]);
        for (x, y) in self.mask.points() {
            mask.set(x + dx, y + dy, true);
            image.set(x + dx, y + dy, self.image.get(x, y));
        }
        Cutout { mask, image }
    }

    /// Nearest-neighbor upscale by an integer factor.
    pub fn upscaled(&self, f: usize) -> Cutout {
        let (w, h) = self.mask.dims();
        let mask = BinaryMask::from_fn(w * f, h * f, |x, y| self.mask.get(x / f, y / f));
        let mut image = RgbImage::filled(w * f, h * f, [0, 0, 0]);
        for y in 0..h * f {
            for x in 0..w * f {
                image.set(x, y, self.image.get(x / f, y / f));
            }
        }
        Cutout { mask, image }
    }
}

/// 100 objects drawn round-robin from the three generator styles.
pub fn object_corpus(seed: u64) -> Vec<Cutout> {
    let mut out = Vec::new();
    let mut i = 0;
    while out.len() < 100 {
        let style = STYLES[i % 3];
        let scene = generate_scene(style, seed, i);
        let k = i % scene.objects.len();
        out.push(Cutout::from_scene(&scene, k, 2));
        i += 1;
    }
    out
}
