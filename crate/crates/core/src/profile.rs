//! Per-object and per-scene factor tables.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::object_factors as of;
use crate::scene::Scene;
use crate::scene_factors as sf;

pub const OBJECT_FILE: &str = "object_factors.csv";
pub const SCENE_FILE: &str = "scene_factors.csv";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FactorSet {
    Primary,
    Candidates,
    All,
}

impl FactorSet {
    fn primary(self) -> bool {
        matches!(self, FactorSet::Primary | FactorSet::All)
    }

    fn candidates(self) -> bool {
        matches!(self, FactorSet::Candidates | FactorSet::All)
    }
}

impl FromStr for FactorSet {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "primary" => Ok(FactorSet::Primary),
            "candidates" => Ok(FactorSet::Candidates),
            "all" => Ok(FactorSet::All),
            _ => Err(format!("unknown factor set {s:?} (primary|candidates|all)")),
        }
    }
}

/// One object's factors. `None` is a missing value: either not requested or
/// undefined for this object.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectFactorRow {
    pub scene_id: String,
    pub object_index: usize,
    pub color_gradient: Option<f64>,
    pub shape_concavity: Option<f64>,
    pub color_count: Option<u64>,
    pub color_entropy: Option<f64>,
    pub non_rectangularity: Option<f64>,
    pub incompactness_pp: Option<f64>,
    pub incompactness_schwartzberg: Option<f64>,
    pub discontinuity: Option<f64>,
    pub decentralization: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneFactorRow {
    pub scene_id: String,
    #[serde(rename = "K")]
    pub k: usize,
    pub color_similarity: Option<f64>,
    pub shape_variation: Option<f64>,
    pub color_similarity_chamfer: Option<f64>,
    pub color_similarity_hausdorff: Option<f64>,
    pub boundary_shape_similarity: Option<f64>,
    pub boundary_shape_entropy: Option<f64>,
    pub centroid_proximity: Option<f64>,
    pub chamfer_proximity: Option<f64>,
}

impl ObjectFactorRow {
    /// `(name, value)` for every numeric factor column, in header order.
    pub fn factors(&self) -> [(&'static str, Option<f64>); 9] {
        [
            ("color_gradient", self.color_gradient),
            ("shape_concavity", self.shape_concavity),
            ("color_count", self.color_count.map(|c| c as f64)),
            ("color_entropy", self.color_entropy),
            ("non_rectangularity", self.non_rectangularity),
            ("incompactness_pp", self.incompactness_pp),
            (
                "incompactness_schwartzberg",
                self.incompactness_schwartzberg,
            ),
            ("discontinuity", self.discontinuity),
            ("decentralization", self.decentralization),
        ]
    }
}

impl SceneFactorRow {
    pub fn factors(&self) -> [(&'static str, Option<f64>); 8] {
        [
            ("color_similarity", self.color_similarity),
            ("shape_variation", self.shape_variation),
            ("color_similarity_chamfer", self.color_similarity_chamfer),
            (
                "color_similarity_hausdorff",
                self.color_similarity_hausdorff,
            ),
            ("boundary_shape_similarity", self.boundary_shape_similarity),
            ("boundary_shape_entropy", self.boundary_shape_entropy),
            ("centroid_proximity", self.centroid_proximity),
            ("chamfer_proximity", self.chamfer_proximity),
        ]
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Profile {
    pub objects: Vec<ObjectFactorRow>,
    pub scenes: Vec<SceneFactorRow>,
}

pub fn profile_scene(
    scene: &Scene,
    set: FactorSet,
) -> Result<(Vec<ObjectFactorRow>, SceneFactorRow)> {
    scene.validate()?;
    let instances = scene.instances()?;
    let mut objects = Vec::with_capacity(instances.len());
    for (k, inst) in instances.iter().enumerate() {
        let mut row = ObjectFactorRow {
            scene_id: scene.id.clone(),
            object_index: k,
            ..Default::default()
        };
        if set.primary() {
            row.color_gradient = of::object_color_gradient(inst, &scene.image);
            row.shape_concavity = Some(of::object_shape_concavity(inst));
        }
        if set.candidates() {
            let inc = of::object_incompactness(inst);
            row.color_count = Some(of::object_color_count(inst, &scene.image) as u64);
            row.color_entropy = Some(of::object_color_entropy(inst, &scene.image));
            row.non_rectangularity = Some(of::object_non_rectangularity(inst));
            row.incompactness_pp = Some(inc.polsby_popper);
            row.incompactness_schwartzberg = Some(inc.schwartzberg);
            row.discontinuity = Some(of::object_discontinuity(inst));
            row.decentralization = Some(of::object_decentralization(inst));
        }
        objects.push(row);
    }

    let mut row = SceneFactorRow {
        scene_id: scene.id.clone(),
        k: instances.len(),
        ..Default::default()
    };
    if set.primary() {
        row.color_similarity = sf::inter_object_color_similarity(&instances);
        row.shape_variation = sf::inter_object_shape_variation(&instances);
    }
    if set.candidates() {
        row.color_similarity_chamfer = sf::color_similarity_chamfer(scene);
        row.color_similarity_hausdorff = sf::color_similarity_hausdorff(scene);
        row.boundary_shape_similarity = sf::boundary_shape_similarity(scene);
        row.boundary_shape_entropy = Some(sf::boundary_shape_entropy(scene));
        row.centroid_proximity = sf::centroid_proximity(&instances);
        row.chamfer_proximity = sf::chamfer_proximity(scene);
    }
    Ok((objects, row))
}

/// Profiles scenes in parallel on the current rayon pool; rows keep scene order.
pub fn profile_scenes(scenes: &[Scene], set: FactorSet) -> Result<Profile> {
    let per_scene: Vec<_> = scenes
        .par_iter()
        .map(|s| profile_scene(s, set))
        .collect::<Result<_>>()?;
    let mut profile = Profile::default();
    for (objects, scene) in per_scene {
        profile.objects.extend(objects);
        profile.scenes.push(scene);
    }
    Ok(profile)
}

pub fn write_rows<T: Serialize>(out: impl Write, rows: &[T]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Parses a factor table; the header must name exactly the row's columns.
pub fn parse_rows<T: for<'de> Deserialize<'de>>(input: impl Read) -> csv::Result<Vec<T>> {
    csv::Reader::from_reader(input).deserialize().collect()
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> Error + '_ {
    move |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    }
}

pub fn write_profile(dir: &Path, profile: &Profile) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    // Header-only files still need the header, which `serialize` emits only
    // alongside the first record.
    for (name, header, body) in [
        (OBJECT_FILE, OBJECT_HEADER, rows_to_bytes(&profile.objects)),
        (SCENE_FILE, SCENE_HEADER, rows_to_bytes(&profile.scenes)),
    ] {
        let path = dir.join(name);
        let bytes = body.map_err(csv_err(&path))?;
        let bytes = if bytes.is_empty() {
            format!("{header}\n").into_bytes()
        } else {
            bytes
        };
        std::fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}

fn rows_to_bytes<T: Serialize>(rows: &[T]) -> csv::Result<Vec<u8>> {
    let mut buf = Vec::new();
    write_rows(&mut buf, rows)?;
    Ok(buf)
}

pub const OBJECT_HEADER: &str = "scene_id,object_index,color_gradient,shape_concavity,color_count,color_entropy,non_rectangularity,incompactness_pp,incompactness_schwartzberg,discontinuity,decentralization";
pub const SCENE_HEADER: &str = "scene_id,K,color_similarity,shape_variation,color_similarity_chamfer,color_similarity_hausdorff,boundary_shape_similarity,boundary_shape_entropy,centroid_proximity,chamfer_proximity";

pub fn read_profile(dir: &Path) -> Result<Profile> {
    let open = |name: &str| {
        let path = dir.join(name);
        File::open(&path)
            .map(|f| (f, path.clone()))
            .map_err(|e| Error::io(&path, e))
    };
    let (f, path) = open(OBJECT_FILE)?;
    let objects: Vec<ObjectFactorRow> = parse_rows(f).map_err(csv_err(&path))?;
    let (f, path) = open(SCENE_FILE)?;
    let scenes: Vec<SceneFactorRow> = parse_rows(f).map_err(csv_err(&path))?;
    let profile = Profile { objects, scenes };
    let rows = profile
        .objects
        .iter()
        .map(|r| (OBJECT_FILE, &r.scene_id, r.factors().to_vec()))
        .chain(
            profile
                .scenes
                .iter()
                .map(|r| (SCENE_FILE, &r.scene_id, r.factors().to_vec())),
        );
    for (file, id, factors) in rows {
        if let Some((name, v)) = factors
            .iter()
            .find_map(|&(n, v)| v.filter(|v| !v.is_finite()).map(|v| (n, v)))
        {
            return Err(Error::structural(format!(
                "{}: scene {id}: {name} is {v}",
                dir.join(file).display()
            )));
        }
    }
    Ok(profile)
}
