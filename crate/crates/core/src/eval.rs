//! AP, PQ, precision and recall for class-agnostic instance masks.
//!
//! Conventions:
//! * a prediction's confidence is the mean of its soft mask over the canvas;
//! * predictions binarize at 0.5 (`value >= 0.5`) and empty ones are dropped;
//! * matching is greedy by confidence (ties by index), one-to-one, and needs
//!   IoU strictly above the threshold;
//! * AP is the area under the all-point interpolated precision-recall curve
//!   over all images;
//! * PQ partitions every image by per-pixel argmax over soft values `>= 0.5`
//!   before matching.

use std::collections::{BTreeSet, HashMap};
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::dataset::{self, PredictedScene};
use crate::error::{Error, Result};
use crate::scene::{BinaryMask, Scene, SoftMask};

pub const BINARIZE_THRESHOLD: f64 = 0.5;

pub fn binarize(mask: &SoftMask, threshold: f64) -> BinaryMask {
    let (w, h) = mask.dims();
    let bits = mask.values().iter().map(|&v| v >= threshold).collect();
    BinaryMask::new(w, h, bits).expect("same dimensions")
}

pub fn iou(a: &BinaryMask, b: &BinaryMask) -> Result<f64> {
    if a.dims() != b.dims() {
        return Err(Error::structural(format!(
            "cannot compare a {}x{} mask with a {}x{} mask",
            a.width(),
            a.height(),
            b.width(),
            b.height()
        )));
    }
    let union = a.union_count(b);
    Ok(if union == 0 {
        0.0
    } else {
        a.intersection_count(b) as f64 / union as f64
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Match {
    pub pred: usize,
    pub gt: usize,
    pub iou: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Matching {
    pub matches: Vec<Match>,
    pub unmatched_preds: Vec<usize>,
    pub unmatched_gts: Vec<usize>,
}

impl Matching {
    pub fn tp(&self) -> usize {
        self.matches.len()
    }

    pub fn fp(&self) -> usize {
        self.unmatched_preds.len()
    }

    pub fn fn_(&self) -> usize {
        self.unmatched_gts.len()
    }

    /// Whether prediction `pred` was matched.
    pub fn is_tp(&self, pred: usize) -> bool {
        self.matches.iter().any(|m| m.pred == pred)
    }
}

/// Order of predictions by confidence descending, ties by index.
fn confidence_order(confidences: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..confidences.len()).collect();
    order.sort_by(|&a, &b| confidences[b].total_cmp(&confidences[a]).then(a.cmp(&b)));
    order
}

/// Each prediction, most confident first, claims the unclaimed ground truth
/// with the highest IoU above `iou_thresh` (lowest index on ties).
pub fn match_greedy(
    preds: &[BinaryMask],
    confidences: &[f64],
    gts: &[BinaryMask],
    iou_thresh: f64,
) -> Result<Matching> {
    if preds.len() != confidences.len() {
        return Err(Error::structural(format!(
            "{} predictions but {} confidences",
            preds.len(),
            confidences.len()
        )));
    }
    let mut claimed = vec![false; gts.len()];
    let mut matching = Matching::default();
    for p in confidence_order(confidences) {
        let mut best: Option<(usize, f64)> = None;
        for (g, gt) in gts.iter().enumerate() {
            if claimed[g] {
                continue;
            }
            let v = iou(&preds[p], gt)?;
            if v > iou_thresh && best.is_none_or(|(_, b)| v > b) {
                best = Some((g, v));
            }
        }
        match best {
            Some((g, v)) => {
                claimed[g] = true;
                matching.matches.push(Match {
                    pred: p,
                    gt: g,
                    iou: v,
                });
            }
            None => matching.unmatched_preds.push(p),
        }
    }
    matching.unmatched_preds.sort_unstable();
    matching.unmatched_gts = (0..gts.len()).filter(|&g| !claimed[g]).collect();
    Ok(matching)
}

/// One ranked detection for the AP sweep.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Detection {
    pub confidence: f64,
    pub is_tp: bool,
}

/// All-point interpolated AP. Detections are ranked by confidence descending;
/// equal confidences keep their given order.
pub fn average_precision(detections: &[Detection], num_gt: usize) -> f64 {
    if num_gt == 0 || detections.is_empty() {
        return 0.0;
    }
    let confidences: Vec<f64> = detections.iter().map(|d| d.confidence).collect();
    let mut curve = Vec::with_capacity(detections.len());
    let mut tp = 0usize;
    for (rank, i) in confidence_order(&confidences).into_iter().enumerate() {
        if detections[i].is_tp {
            tp += 1;
        }
        let precision = tp as f64 / (rank + 1) as f64;
        let recall = tp as f64 / num_gt as f64;
        curve.push((recall, precision));
    }
    // Interpolated precision: max precision at any recall >= r.
    let mut best = 0.0f64;
    for point in curve.iter_mut().rev() {
        best = best.max(point.1);
        point.1 = best;
    }
    let mut ap = 0.0;
    let mut prev_recall = 0.0;
    for (recall, precision) in curve {
        if recall > prev_recall {
            ap += (recall - prev_recall) * precision;
            prev_recall = recall;
        }
    }
    ap
}

/// Non-overlapping segments: each pixel goes to the prediction with the
/// highest soft value, among those `>= 0.5` (lowest index on ties). Empty
/// segments are omitted.
pub fn argmax_partition(masks: &[SoftMask]) -> Vec<BinaryMask> {
    let Some(first) = masks.first() else {
        return Vec::new();
    };
    let (w, h) = first.dims();
    let mut segments = vec![BinaryMask::empty(w, h); masks.len()];
    for i in 0..w * h {
        let mut best: Option<(usize, f64)> = None;
        for (k, m) in masks.iter().enumerate() {
            let v = m.values()[i];
            if v >= BINARIZE_THRESHOLD && best.is_none_or(|(_, b)| v > b) {
                best = Some((k, v));
            }
        }
        if let Some((k, _)) = best {
            segments[k].set(i % w, i / w, true);
        }
    }
    segments.retain(|s| !s.is_empty());
    segments
}

/// Sums entering the panoptic quality of one or more images.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PqCounts {
    pub iou_sum: f64,
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
}

impl PqCounts {
    pub fn add(&mut self, other: PqCounts) {
        self.iou_sum += other.iou_sum;
        self.tp += other.tp;
        self.fp += other.fp;
        self.fn_ += other.fn_;
    }

    /// `sum IoU / (TP + FP / 2 + FN / 2)`, or 0 with nothing to score.
    pub fn pq(&self) -> f64 {
        let denom = self.tp as f64 + 0.5 * self.fp as f64 + 0.5 * self.fn_ as f64;
        if denom == 0.0 {
            0.0
        } else {
            self.iou_sum / denom
        }
    }
}

/// Panoptic counts for one image. Segments and ground truths match when their
/// IoU exceeds `iou_thresh`; pairs are taken by IoU descending (lowest indices
/// on ties), which for non-overlapping masks and a threshold of at least 0.5
/// is the unique matching.
pub fn panoptic_counts(
    segments: &[BinaryMask],
    gts: &[BinaryMask],
    iou_thresh: f64,
) -> Result<PqCounts> {
    let mut pairs = Vec::new();
    for (s, seg) in segments.iter().enumerate() {
        for (g, gt) in gts.iter().enumerate() {
            let v = iou(seg, gt)?;
            if v > iou_thresh {
                pairs.push((v, s, g));
            }
        }
    }
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0).then((a.1, a.2).cmp(&(b.1, b.2))));
    let mut seg_used = vec![false; segments.len()];
    let mut gt_used = vec![false; gts.len()];
    let mut counts = PqCounts::default();
    for (v, s, g) in pairs {
        if seg_used[s] || gt_used[g] {
            continue;
        }
        seg_used[s] = true;
        gt_used[g] = true;
        counts.tp += 1;
        counts.iou_sum += v;
    }
    counts.fp = segments.len() - counts.tp;
    counts.fn_ = gts.len() - counts.tp;
    Ok(counts)
}

pub fn panoptic_quality(
    segments: &[BinaryMask],
    gts: &[BinaryMask],
    iou_thresh: f64,
) -> Result<f64> {
    Ok(panoptic_counts(segments, gts, iou_thresh)?.pq())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ImageMatches {
    pub id: String,
    pub matches: Vec<Match>,
    pub false_positives: usize,
    pub false_negatives: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvalResult {
    pub ap: f64,
    pub pq: f64,
    pub precision: f64,
    pub recall: f64,
    pub iou_threshold: f64,
    pub num_images: usize,
    pub num_gt_objects: usize,
    pub ap_interpolation: &'static str,
    pub per_image: Vec<ImageMatches>,
}

struct ImageOutcome {
    matches: ImageMatches,
    detections: Vec<Detection>,
    pq: PqCounts,
    tp: usize,
}

fn evaluate_image(pred: &PredictedScene, gt: &Scene, iou_thresh: f64) -> Result<ImageOutcome> {
    for m in &pred.masks {
        if m.dims() != gt.image.dims() {
            return Err(Error::structural(format!(
                "scene {}: prediction is {}x{} but image is {}x{}",
                gt.id,
                m.width(),
                m.height(),
                gt.image.width(),
                gt.image.height()
            )));
        }
    }
    // Masks that binarize to nothing can never match and are not scored.
    let mut binary = Vec::new();
    let mut confidences = Vec::new();
    for m in &pred.masks {
        let b = binarize(m, BINARIZE_THRESHOLD);
        if !b.is_empty() {
            binary.push(b);
            confidences.push(m.mean());
        }
    }
    let matching = match_greedy(&binary, &confidences, &gt.objects, iou_thresh)?;
    let detections = confidences
        .iter()
        .enumerate()
        .map(|(p, &confidence)| Detection {
            confidence,
            is_tp: matching.is_tp(p),
        })
        .collect();
    let segments = argmax_partition(&pred.masks);
    let pq = panoptic_counts(&segments, &gt.objects, iou_thresh)?;
    Ok(ImageOutcome {
        matches: ImageMatches {
            id: gt.id.clone(),
            matches: matching.matches.clone(),
            false_positives: matching.fp(),
            false_negatives: matching.fn_(),
        },
        detections,
        pq,
        tp: matching.tp(),
    })
}

fn ratio(num: usize, denom: usize) -> f64 {
    if denom == 0 {
        0.0
    } else {
        num as f64 / denom as f64
    }
}

/// Scores predictions against ground truth scenes, paired by id.
pub fn evaluate_scenes(
    preds: &[PredictedScene],
    gts: &[Scene],
    iou_thresh: f64,
) -> Result<EvalResult> {
    if !(iou_thresh > 0.0 && iou_thresh < 1.0) {
        return Err(Error::Config(format!(
            "IoU threshold must lie in (0, 1), got {iou_thresh}"
        )));
    }
    let by_id: HashMap<&str, &PredictedScene> = preds.iter().map(|p| (p.id.as_str(), p)).collect();
    let gt_ids: BTreeSet<&str> = gts.iter().map(|s| s.id.as_str()).collect();
    let pred_ids: BTreeSet<&str> = by_id.keys().copied().collect();
    if gt_ids != pred_ids || by_id.len() != preds.len() {
        let missing: Vec<&str> = gt_ids.difference(&pred_ids).copied().collect();
        let extra: Vec<&str> = pred_ids.difference(&gt_ids).copied().collect();
        return Err(Error::Evaluation(format!(
            "scene ids do not align; without predictions: {missing:?}; without ground truth: {extra:?}"
        )));
    }

    let outcomes: Vec<ImageOutcome> = gts
        .par_iter()
        .map(|gt| evaluate_image(by_id[gt.id.as_str()], gt, iou_thresh))
        .collect::<Result<_>>()?;

    let num_gt: usize = gts.iter().map(|s| s.objects.len()).sum();
    let mut detections = Vec::new();
    let mut pq = PqCounts::default();
    let (mut tp, mut num_pred) = (0usize, 0usize);
    for o in &outcomes {
        num_pred += o.detections.len();
        detections.extend_from_slice(&o.detections);
        pq.add(o.pq);
        tp += o.tp;
    }
    Ok(EvalResult {
        ap: average_precision(&detections, num_gt),
        pq: pq.pq(),
        precision: ratio(tp, num_pred),
        recall: ratio(tp, num_gt),
        iou_threshold: iou_thresh,
        num_images: gts.len(),
        num_gt_objects: num_gt,
        ap_interpolation: "all-point",
        per_image: outcomes.into_iter().map(|o| o.matches).collect(),
    })
}

/// Loads both manifests and scores them.
pub fn evaluate(pred_manifest: &Path, gt_manifest: &Path, iou_thresh: f64) -> Result<EvalResult> {
    let gts = dataset::load_dataset(gt_manifest)?;
    let preds = dataset::load_predictions(pred_manifest)?;
    evaluate_scenes(&preds, &gts, iou_thresh)
}
