use proptest::prelude::*;

use objectness::ablation::{ablate, AblationSpec};
use objectness::dataset::{decode_mask_png, decode_rgb_png, encode_mask_png, encode_rgb_png};
use objectness::eval;
use objectness::profile::{self, FactorSet, ObjectFactorRow, Profile, SceneFactorRow};
use objectness::raster::{self, GrayImage};
use objectness::report;
use objectness::scene::{derive_instance, BinaryMask, RgbImage, Scene};
use objectness::scene_factors::{chamfer_color_distance, hausdorff_color_distance, ColorSet};
use objectness::textures;

const W: usize = 20;
const H: usize = 16;

/// Union of a few rectangles; never empty.
fn blob(w: usize, h: usize) -> impl Strategy<Value = BinaryMask> {
    prop::collection::vec((0..w, 0..h, 1..8usize, 1..8usize), 1..4).prop_map(move |rects| {
        BinaryMask::from_fn(w, h, |x, y| {
            rects
                .iter()
                .any(|&(x0, y0, rw, rh)| x >= x0 && x < x0 + rw && y >= y0 && y < y0 + rh)
        })
    })
}

fn noise_mask(w: usize, h: usize) -> impl Strategy<Value = BinaryMask> {
    prop::collection::vec(prop::bool::weighted(0.4), w * h)
        .prop_filter("nonempty", |b| b.iter().any(|&x| x))
        .prop_map(move |bits| BinaryMask::new(w, h, bits).unwrap())
}

fn image(w: usize, h: usize) -> impl Strategy<Value = RgbImage> {
    prop::collection::vec(any::<[u8; 3]>(), w * h)
        .prop_map(move |px| RgbImage::new(w, h, px).unwrap())
}

/// Images with few distinct colors, so flat regions and ties occur.
fn patchy_image(w: usize, h: usize) -> impl Strategy<Value = RgbImage> {
    (
        prop::collection::vec(any::<[u8; 3]>(), 1..4),
        prop::collection::vec(0..4usize, w * h),
    )
        .prop_map(move |(palette, idx)| {
            let px = idx.iter().map(|&i| palette[i % palette.len()]).collect();
            RgbImage::new(w, h, px).unwrap()
        })
}

/// Scenes with disjoint visible masks: later rectangles occlude earlier ones.
fn scene() -> impl Strategy<Value = Scene> {
    (prop::collection::vec(blob(W, H), 2..5), patchy_image(W, H))
        .prop_map(|(mut objects, image)| {
            for k in (0..objects.len()).rev() {
                for later in k + 1..objects.len() {
                    let cover = objects[later].clone();
                    objects[k].subtract(&cover);
                }
            }
            objects.retain(|m| !m.is_empty());
            Scene {
                id: "p".into(),
                image,
                objects,
            }
        })
        .prop_filter("at least two visible objects", |s| s.objects.len() >= 2)
}

fn object_rows(scene: &Scene) -> (Vec<ObjectFactorRow>, SceneFactorRow) {
    profile::profile_scene(scene, FactorSet::All).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig {
        cases: 128,
        failure_persistence: None,
        ..ProptestConfig::default()
    })]

    #[test]
    fn hull_contains_mask_and_is_idempotent(mask in noise_mask(W, H)) {
        let hull = raster::convex_hull(&mask).unwrap();
        prop_assert!(mask.is_subset_of(&hull.raster));
        for &(x, y) in &hull.hull_vertices {
            prop_assert!(mask.get(x, y));
        }
        let again = raster::convex_hull(&hull.raster).unwrap();
        prop_assert_eq!(again.raster, hull.raster);
    }

    #[test]
    fn components_partition_the_mask(mask in noise_mask(W, H)) {
        let parts = raster::connected_components(&mask);
        let mut union = BinaryMask::empty(W, H);
        let total: usize = parts.iter().map(BinaryMask::count).sum();
        for p in &parts {
            prop_assert!(!p.is_empty());
            prop_assert!(p.is_subset_of(&mask));
            union.union_with(p);
        }
        prop_assert_eq!(total, mask.count());
        prop_assert_eq!(union, mask);
        for w in parts.windows(2) {
            prop_assert!(w[0].count() >= w[1].count());
        }
    }

    #[test]
    fn inner_boundary_is_mask_minus_erosion(mask in noise_mask(W, H)) {
        let b = raster::inner_boundary(&mask);
        for (x, y) in mask.points() {
            let (x, y) = (x as isize, y as isize);
            let exposed = (-1..=1).any(|dy| (-1..=1).any(|dx| !mask.get_signed(x + dx, y + dy)));
            prop_assert_eq!(b.get(x as usize, y as usize), exposed);
        }
        prop_assert!(b.is_subset_of(&mask));
    }

    #[test]
    fn sobel_is_transpose_symmetric(values in prop::collection::vec(0.0..255.0f64, W * H)) {
        let g = GrayImage { width: W, height: H, values };
        prop_assert_eq!(
            raster::sobel_magnitude(&g).unwrap(),
            raster::sobel_magnitude_transposed(&g).unwrap()
        );
    }

    #[test]
    fn object_factors_ignore_translation(
        mask in blob(10, 10),
        img in image(10, 10),
        dx in 0..14usize,
        dy in 0..14usize,
    ) {
        let place = |ox: usize, oy: usize| {
            let mut m = BinaryMask::empty(24, 24);
            let mut im = RgbImage::filled(24, 24, [0, 0, 0]);
            for (x, y) in mask.points() {
                m.set(x + ox, y + oy, true);
                im.set(x + ox, y + oy, img.get(x, y));
            }
            Scene { id: "t".into(), image: im, objects: vec![m] }
        };
        let (a, _) = object_rows(&place(0, 0));
        let (b, _) = object_rows(&place(dx, dy));
        prop_assert_eq!(a, b);
    }

    #[test]
    fn scene_factors_ignore_object_order(s in scene(), seed in any::<u64>()) {
        let mut order: Vec<usize> = (0..s.objects.len()).collect();
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed);
        rand::seq::SliceRandom::shuffle(order.as_mut_slice(), &mut rng);
        let shuffled = Scene {
            objects: order.iter().map(|&k| s.objects[k].clone()).collect(),
            ..s.clone()
        };
        prop_assert_eq!(object_rows(&s).1, object_rows(&shuffled).1);
    }

    #[test]
    fn scene_factors_ignore_joint_translation(s in scene(), dx in 0..8usize, dy in 0..8usize) {
        let place = |ox: usize, oy: usize| {
            let mut image = RgbImage::filled(W + 8, H + 8, [0, 0, 0]);
            for y in 0..H {
                for x in 0..W {
                    image.set(x + ox, y + oy, s.image.get(x, y));
                }
            }
            let objects = s
                .objects
                .iter()
                .map(|m| {
                    BinaryMask::from_fn(W + 8, H + 8, |x, y| {
                        x >= ox && y >= oy && x - ox < W && y - oy < H && m.get(x - ox, y - oy)
                    })
                })
                .collect();
            Scene { id: "p".into(), image, objects }
        };
        let (_, a) = object_rows(&place(0, 0));
        let (_, b) = object_rows(&place(dx, dy));
        prop_assert_eq!(a.centroid_proximity, b.centroid_proximity);
        prop_assert_eq!(a.chamfer_proximity, b.chamfer_proximity);
        prop_assert_eq!(a.shape_variation, b.shape_variation);
        prop_assert_eq!(a.color_similarity, b.color_similarity);
        prop_assert_eq!(a.boundary_shape_similarity, b.boundary_shape_similarity);
    }

    #[test]
    fn bounded_factors_stay_in_unit_range(s in scene()) {
        let (objects, row) = object_rows(&s);
        let mut named: Vec<(&str, Option<f64>)> = row.factors().to_vec();
        for o in &objects {
            named.extend(o.factors());
        }
        for (name, v) in named {
            if let Some(v) = v {
                prop_assert!(v.is_finite() && v >= 0.0, "{name} = {v}");
                if report::BOUNDED.contains(&name) {
                    prop_assert!(v <= 1.0, "{name} = {v}");
                }
            }
        }
    }

    #[test]
    fn hausdorff_bounds_chamfer(
        a in prop::collection::vec(any::<[u8; 3]>(), 1..40),
        b in prop::collection::vec(any::<[u8; 3]>(), 1..40),
    ) {
        let (a, b) = (ColorSet::from_pixels(a), ColorSet::from_pixels(b));
        prop_assert!(hausdorff_color_distance(&a, &b) >= chamfer_color_distance(&a, &b));
        prop_assert_eq!(chamfer_color_distance(&a, &b), chamfer_color_distance(&b, &a));
        prop_assert_eq!(chamfer_color_distance(&a, &a), 0.0);
    }

    #[test]
    fn iou_is_symmetric_and_bounded(a in noise_mask(W, H), b in noise_mask(W, H)) {
        let ab = eval::iou(&a, &b).unwrap();
        prop_assert_eq!(ab, eval::iou(&b, &a).unwrap());
        prop_assert!((0.0..=1.0).contains(&ab));
        prop_assert_eq!(eval::iou(&a, &a).unwrap(), 1.0);
    }

    #[test]
    fn greedy_matching_accounts_for_everything(
        preds in prop::collection::vec(blob(W, H), 0..5),
        gts in prop::collection::vec(blob(W, H), 0..5),
        conf in prop::collection::vec(0.0..1.0f64, 5),
    ) {
        let m = eval::match_greedy(&preds, &conf[..preds.len()], &gts, 0.5).unwrap();
        prop_assert_eq!(m.tp() + m.fp(), preds.len());
        prop_assert_eq!(m.tp() + m.fn_(), gts.len());
        for x in &m.matches {
            prop_assert!(x.iou > 0.5);
        }
        let mut seen = std::collections::HashSet::new();
        prop_assert!(m.matches.iter().all(|x| seen.insert(x.gt)));
    }

    #[test]
    fn metrics_survive_2x_upscaling(
        gts in prop::collection::vec(blob(W, H), 1..4),
        preds in prop::collection::vec(blob(W, H), 0..4),
    ) {
        let up = |m: &BinaryMask| BinaryMask::from_fn(2 * W, 2 * H, |x, y| m.get(x / 2, y / 2));
        let scene = |objects: Vec<BinaryMask>, w, h| Scene {
            id: "u".into(),
            image: RgbImage::filled(w, h, [0, 0, 0]),
            objects,
        };
        let pred = |masks: Vec<BinaryMask>| objectness::dataset::PredictedScene {
            id: "u".into(),
            masks: masks.iter().map(objectness::scene::SoftMask::from_binary).collect(),
        };
        let small = eval::evaluate_scenes(
            &[pred(preds.clone())],
            &[scene(gts.clone(), W, H)],
            0.5,
        ).unwrap();
        let big = eval::evaluate_scenes(
            &[pred(preds.iter().map(up).collect())],
            &[scene(gts.iter().map(up).collect(), 2 * W, 2 * H)],
            0.5,
        ).unwrap();
        prop_assert_eq!(small.pq, big.pq);
        prop_assert_eq!(small.precision, big.precision);
        prop_assert_eq!(small.recall, big.recall);
        prop_assert_eq!(&small.per_image[0].matches, &big.per_image[0].matches);
    }

    #[test]
    fn report_histograms_count_every_value(
        values in prop::collection::vec(prop::option::of(0.0..3.0f64), 0..60),
    ) {
        let p = Profile {
            objects: values
                .iter()
                .enumerate()
                .map(|(i, &v)| ObjectFactorRow {
                    scene_id: "r".into(),
                    object_index: i,
                    color_gradient: v.map(|v| v / 3.0),
                    decentralization: v,
                    ..Default::default()
                })
                .collect(),
            scenes: Vec::new(),
        };
        let r = report::build_report("r", &p);
        for name in ["color_gradient", "decentralization"] {
            let defined = values.iter().flatten().count();
            match r.factors.get(name) {
                Some(s) => {
                    prop_assert_eq!(s.n, defined);
                    prop_assert_eq!(s.histogram.iter().sum::<u64>() as usize, defined);
                    prop_assert_eq!(s.histogram.len(), report::BINS);
                }
                None => prop_assert_eq!(defined, 0),
            }
        }
        let mut reversed = p.clone();
        reversed.objects.reverse();
        prop_assert_eq!(report::build_report("r", &reversed), r);
    }

    #[test]
    fn bin_index_stays_in_range(v in -1.0..2.0f64, hi in 0.0..2.0f64) {
        let i = report::bin_index(v, hi);
        prop_assert!(i < report::BINS);
        if hi > 0.0 && v >= hi {
            prop_assert_eq!(i, report::BINS - 1);
        }
        if v <= 0.0 {
            prop_assert_eq!(i, 0);
        }
    }

    #[test]
    fn factor_rows_round_trip_through_csv(s in scene()) {
        let (objects, row) = object_rows(&s);
        let mut buf = Vec::new();
        profile::write_rows(&mut buf, &objects).unwrap();
        prop_assert_eq!(profile::parse_rows::<ObjectFactorRow>(&buf[..]).unwrap(), objects);
        let mut buf = Vec::new();
        profile::write_rows(&mut buf, std::slice::from_ref(&row)).unwrap();
        prop_assert_eq!(profile::parse_rows::<SceneFactorRow>(&buf[..]).unwrap(), vec![row]);
    }

    #[test]
    fn pngs_round_trip(img in image(W, H), mask in noise_mask(W, H)) {
        prop_assert_eq!(decode_rgb_png(&encode_rgb_png(&img)).unwrap(), img);
        prop_assert_eq!(decode_mask_png(&encode_mask_png(&mask)).unwrap(), mask);
    }

    #[test]
    fn c_and_s_ablations_are_idempotent(s in scene()) {
        for ops in ["C", "S", "C,S"] {
            let spec = AblationSpec {
                ops: ops.parse().unwrap(),
                textures: textures::bundled(),
                target_diagonal: None,
                seed: 1,
            };
            let once = ablate(&s, &spec).unwrap().scene;
            let twice = ablate(&once, &spec).unwrap().scene;
            prop_assert_eq!(&once, &twice);
            for m in &once.objects {
                let inst = derive_instance(m, &once.image).unwrap();
                if spec.ops.s {
                    prop_assert_eq!(objectness::object_factors::object_shape_concavity(&inst), 0.0);
                }
                if spec.ops.c {
                    let g = objectness::object_factors::object_color_gradient(&inst, &once.image);
                    prop_assert!(g.is_none() || g == Some(0.0));
                }
            }
        }
    }

    #[test]
    fn empty_ops_are_identity(s in scene()) {
        let spec = AblationSpec {
            ops: "".parse().unwrap(),
            textures: Vec::new(),
            target_diagonal: None,
            seed: 0,
        };
        prop_assert_eq!(ablate(&s, &spec).unwrap().scene, s);
    }
}
