//! Soft-NMS with per-category settings, multi-model merging of detections and
//! classifier scores, and top-k classification accuracy.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::annotations::{
    check_distribution, ranked_classes, Detection, PredictionSet, VideoClassScores,
};
use crate::confidence_map::{validate_weights, Proposal};
use crate::{Error, Execution, Result};

pub const DEFAULT_SIGMA: f64 = 0.5;
pub const DEFAULT_SCORE_FLOOR: f64 = 1e-4;

/// Below this sigma the Gaussian decay degenerates to hard suppression of any overlap.
pub const HARD_MODE_SIGMA: f64 = 1e-9;

/// Score decay applied to detections overlapping a selected one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Decay {
    /// `score *= exp(-tiou² / sigma)`
    Gaussian,
    /// `score *= 1 - tiou` when `tiou > iou_threshold`.
    Linear { iou_threshold: f64 },
}

/// Overrides for one category. Unset fields fall back to the global values.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CategoryNms {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score_floor: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NmsConfig {
    pub sigma: f64,
    pub score_floor: f64,
    pub decay: Decay,
    /// Keyed by label index.
    pub per_category: BTreeMap<usize, CategoryNms>,
}

impl Default for NmsConfig {
    fn default() -> Self {
        NmsConfig {
            sigma: DEFAULT_SIGMA,
            score_floor: DEFAULT_SCORE_FLOOR,
            decay: Decay::Gaussian,
            per_category: BTreeMap::new(),
        }
    }
}

impl NmsConfig {
    pub fn validate(&self) -> Result<()> {
        let check = |sigma: f64, floor: f64| {
            if !(sigma > 0.0) || !sigma.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "sigma must be > 0, got {sigma}"
                )));
            }
            if !(0.0..1.0).contains(&floor) {
                return Err(Error::InvalidArgument(format!(
                    "score floor must be in [0, 1), got {floor}"
                )));
            }
            Ok(())
        };
        check(self.sigma, self.score_floor)?;
        for label in self.per_category.keys() {
            let (s, f) = self.params_for(*label);
            check(s, f)?;
        }
        if let Decay::Linear { iou_threshold } = self.decay {
            if !(0.0..=1.0).contains(&iou_threshold) {
                return Err(Error::InvalidArgument(format!(
                    "linear decay threshold must be in [0, 1], got {iou_threshold}"
                )));
            }
        }
        Ok(())
    }

    /// `(sigma, score_floor)` in effect for a category.
    pub fn params_for(&self, label: usize) -> (f64, f64) {
        let o = self.per_category.get(&label).copied().unwrap_or_default();
        (
            o.sigma.unwrap_or(self.sigma),
            o.score_floor.unwrap_or(self.score_floor),
        )
    }
}

/// Soft-NMS over detections of a single (video, label) group.
///
/// Repeatedly emits the best remaining detection and decays the rest against
/// it; anything that drops below the score floor is discarded. Output is
/// sorted by final score, ties by start then end.
pub fn soft_nms(detections: &[Detection], cfg: &NmsConfig) -> Vec<Detection> {
    let Some(first) = detections.first() else {
        return Vec::new();
    };
    debug_assert!(detections.iter().all(|d| d.label == first.label));
    let (sigma, floor) = cfg.params_for(first.label);
    let hard = cfg.decay == Decay::Gaussian && sigma < HARD_MODE_SIGMA;

    let mut pool: Vec<Detection> = detections
        .iter()
        .copied()
        .filter(|d| d.score >= floor)
        .collect();
    let mut out = Vec::with_capacity(pool.len());
    while !pool.is_empty() {
        let best_idx = pool
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.cmp_rank(b.1))
            .map(|(i, _)| i)
            .unwrap();
        let best = pool.swap_remove(best_idx);
        out.push(best);
        if hard {
            pool.retain(|d| d.segment.intersection(&best.segment) <= 0.0);
            continue;
        }
        for d in pool.iter_mut() {
            let iou = d.segment.tiou(&best.segment);
            let factor = match cfg.decay {
                Decay::Gaussian => (-iou * iou / sigma).exp(),
                Decay::Linear { iou_threshold } if iou > iou_threshold => 1.0 - iou,
                Decay::Linear { .. } => 1.0,
            };
            d.score *= factor;
        }
        pool.retain(|d| d.score >= floor);
    }
    out.sort_by(Detection::cmp_rank);
    out
}

/// Soft-NMS applied independently to every (video, label) group of a set.
///
/// Each video's output lists label groups in ascending label order.
pub fn soft_nms_set(
    set: &PredictionSet,
    cfg: &NmsConfig,
    exec: Execution,
) -> Result<PredictionSet> {
    cfg.validate()?;
    let mut groups: Vec<(&str, Vec<Detection>)> = Vec::new();
    for (video, dets) in &set.results {
        let mut by_label: BTreeMap<usize, Vec<Detection>> = BTreeMap::new();
        for d in dets {
            by_label.entry(d.label).or_default().push(*d);
        }
        if by_label.is_empty() {
            groups.push((video, Vec::new()));
        }
        groups.extend(by_label.into_values().map(|g| (video.as_str(), g)));
    }
    let suppressed = exec.map(&groups, |(_, dets)| soft_nms(dets, cfg));
    let mut out = PredictionSet {
        version: set.version.clone(),
        num_classes: set.num_classes,
        results: BTreeMap::new(),
    };
    for ((video, _), dets) in groups.iter().zip(suppressed) {
        out.results
            .entry((*video).to_owned())
            .or_default()
            .extend(dets);
    }
    Ok(out)
}

/// Union of several models' detections, each model's scores scaled by its
/// weight divided by the largest weight.
pub fn merge_detections(sets: &[PredictionSet], weights: &[f64]) -> Result<PredictionSet> {
    validate_weights(weights)?;
    if sets.len() != weights.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} prediction sets but {} weights",
            sets.len(),
            weights.len()
        )));
    }
    let first = &sets[0];
    let max = weights.iter().copied().fold(0.0, f64::max);
    let mut out = PredictionSet {
        version: first.version.clone(),
        num_classes: first.num_classes,
        results: BTreeMap::new(),
    };
    for (set, &w) in sets.iter().zip(weights) {
        if set.num_classes != first.num_classes {
            return Err(Error::LabelSpaceMismatch(format!(
                "prediction sets have {} and {} classes",
                first.num_classes, set.num_classes
            )));
        }
        let scale = w / max;
        for (video, dets) in &set.results {
            out.results
                .entry(video.clone())
                .or_default()
                .extend(dets.iter().map(|d| Detection {
                    score: d.score * scale,
                    ..*d
                }));
        }
    }
    Ok(out)
}

/// Weighted mean of several classifiers' probability vectors for one video,
/// renormalized to sum to 1.
pub fn ensemble_class_scores(
    all: &[VideoClassScores],
    weights: &[f64],
) -> Result<VideoClassScores> {
    validate_weights(weights)?;
    if all.len() != weights.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} score vectors but {} weights",
            all.len(),
            weights.len()
        )));
    }
    let first = &all[0];
    let n = first.probs.len();
    for s in all {
        if s.probs.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "score vectors have {} and {} classes",
                n,
                s.probs.len()
            )));
        }
        if s.video_id != first.video_id {
            return Err(Error::InvalidArgument(format!(
                "cannot ensemble scores of videos {:?} and {:?}",
                first.video_id, s.video_id
            )));
        }
        check_distribution(&s.probs)?;
    }
    let total: f64 = weights.iter().sum();
    let mut probs: Vec<f64> = (0..n)
        .map(|c| {
            all.iter()
                .zip(weights)
                .map(|(s, w)| w * s.probs[c])
                .sum::<f64>()
                / total
        })
        .collect();
    // inputs are distributions, so this only corrects drift beyond rounding error
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > n as f64 * f64::EPSILON {
        probs.iter_mut().for_each(|p| *p /= sum);
    }
    Ok(VideoClassScores {
        video_id: first.video_id.clone(),
        probs,
    })
}

/// Percentage of videos whose true class is among the `k` most probable,
/// lower class index winning ties.
pub fn topk_accuracy(
    scores: &[VideoClassScores],
    truth: &BTreeMap<String, usize>,
    k: usize,
) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be >= 1".into()));
    }
    if scores.is_empty() {
        return Err(Error::InvalidArgument("no scored videos".into()));
    }
    let mut hits = 0usize;
    for s in scores {
        let label = *truth
            .get(&s.video_id)
            .ok_or_else(|| Error::MissingTruth(s.video_id.clone()))?;
        if ranked_classes(&s.probs).iter().take(k).any(|&c| c == label) {
            hits += 1;
        }
    }
    Ok(100.0 * hits as f64 / scores.len() as f64)
}

/// Turns class-agnostic proposals into detections using video-level class
/// probabilities: each proposal is emitted once for each of the
/// `top_classes` most probable classes with score `proposal × class probability`.
pub fn label_proposals(
    proposals: &[Proposal],
    class_probs: &[f64],
    top_classes: usize,
) -> Vec<Detection> {
    let classes: Vec<usize> = ranked_classes(class_probs)
        .into_iter()
        .take(top_classes)
        .collect();
    proposals
        .iter()
        .flat_map(|p| {
            classes.iter().map(move |&c| Detection {
                segment: p.segment,
                label: c,
                score: (p.score * class_probs[c]).clamp(0.0, 1.0),
            })
        })
        .collect()
}
