//! Detection mAP over a sweep of tIoU thresholds, ActivityNet style.
//!
//! Detections of a class are ranked by score (ties: start, end ascending) and
//! greedily matched, in rank order, to the unmatched ground truth in the same
//! video with the highest tIoU at or above the threshold. AP is the area under
//! the interpolated precision/recall curve. mAP averages AP over the classes
//! that have ground truth; the average mAP averages mAP over thresholds.

use std::collections::HashMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::annotations::{GroundTruthDataset, PredictionSet};
use crate::temporal::Segment;
use crate::{Error, Execution, Result};

/// Detections kept per video before evaluation.
pub const DEFAULT_TOP_M: usize = 120;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub tiou_thresholds: Vec<f64>,
    pub top_m: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            tiou_thresholds: default_thresholds(),
            top_m: DEFAULT_TOP_M,
        }
    }
}

/// 0.50, 0.55, ..., 0.95
pub fn default_thresholds() -> Vec<f64> {
    (0..10).map(|i| (50 + 5 * i) as f64 / 100.0).collect()
}

impl EvalConfig {
    pub fn new(tiou_thresholds: Vec<f64>, top_m: usize) -> Result<Self> {
        if tiou_thresholds.is_empty() {
            return Err(Error::InvalidArgument("no tIoU thresholds".into()));
        }
        if let Some(t) = tiou_thresholds.iter().find(|t| !(**t > 0.0 && **t <= 1.0)) {
            return Err(Error::InvalidArgument(format!(
                "tIoU threshold {t} outside (0, 1]"
            )));
        }
        if tiou_thresholds.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument(
                "tIoU thresholds must be strictly increasing".into(),
            ));
        }
        if top_m == 0 {
            return Err(Error::InvalidArgument("top-M must be >= 1".into()));
        }
        Ok(EvalConfig {
            tiou_thresholds,
            top_m,
        })
    }
}

/// Parses `"start:step:stop"` (inclusive) or a comma-separated list.
pub fn parse_thresholds(spec: &str) -> Result<Vec<f64>> {
    let bad = || Error::InvalidArgument(format!("cannot parse thresholds {spec:?}"));
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad());
    let parts: Vec<&str> = spec.split(':').collect();
    match parts.as_slice() {
        [start, step, stop] => {
            let (start, step, stop) = (num(start)?, num(step)?, num(stop)?);
            if !(step > 0.0) || stop < start {
                return Err(bad());
            }
            // integer step count avoids accumulated drift (0.5 + 9 * 0.05 != 0.95 otherwise)
            let n = ((stop - start) / step + 1e-9).floor() as usize;
            Ok((0..=n)
                .map(|i| {
                    let t = start + i as f64 * step;
                    (t * 1e9).round() / 1e9
                })
                .collect())
        }
        [list] => list.split(',').map(num).collect(),
        _ => Err(bad()),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub tiou_thresholds: Vec<f64>,
    /// `per_class_ap[class][threshold]`
    pub per_class_ap: Vec<Vec<f64>>,
    pub map_per_threshold: Vec<f64>,
    pub average_map: f64,
    pub num_gt: Vec<usize>,
}

impl EvalReport {
    /// Plain-text table: one column per threshold plus the average, in percent.
    pub fn render_table(&self) -> String {
        let mut header = String::from("tIoU     ");
        let mut row = String::from("mAP (%)  ");
        for (t, m) in self.tiou_thresholds.iter().zip(&self.map_per_threshold) {
            let _ = write!(header, "| {t:>6.2} ");
            let _ = write!(row, "| {:>6.2} ", 100.0 * m);
        }
        let _ = write!(header, "| Average mAP");
        let _ = write!(row, "| {:>11.2}", 100.0 * self.average_map);
        format!("{header}\n{}\n{row}\n", "-".repeat(header.len()))
    }
}

/// Keeps the `m` best detections of every video, in rank order.
pub fn select_top_m(preds: &PredictionSet, m: usize) -> PredictionSet {
    let results = preds
        .results
        .iter()
        .map(|(video, dets)| {
            let mut dets = dets.clone();
            dets.sort_by(|a, b| a.cmp_rank(b));
            dets.truncate(m);
            (video.clone(), dets)
        })
        .collect();
    PredictionSet {
        version: preds.version.clone(),
        num_classes: preds.num_classes,
        results,
    }
}

/// A detection of the class under evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassDetection<'a> {
    pub video: &'a str,
    pub segment: Segment,
    pub score: f64,
}

/// A ground-truth instance of the class under evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassGroundTruth<'a> {
    pub video: &'a str,
    pub segment: Segment,
}

/// AP of one class at one tIoU threshold; 0 when the class has no ground truth.
pub fn average_precision(
    detections: &[ClassDetection<'_>],
    ground_truth: &[ClassGroundTruth<'_>],
    threshold: f64,
) -> f64 {
    if ground_truth.is_empty() || detections.is_empty() {
        return 0.0;
    }
    let mut order: Vec<usize> = (0..detections.len()).collect();
    order.sort_by(|&a, &b| {
        let (x, y) = (&detections[a], &detections[b]);
        y.score
            .total_cmp(&x.score)
            .then(x.segment.cmp_position(&y.segment))
    });

    let mut by_video: HashMap<&str, Vec<usize>> = HashMap::new();
    for (i, g) in ground_truth.iter().enumerate() {
        by_video.entry(g.video).or_default().push(i);
    }
    let mut matched = vec![false; ground_truth.len()];
    let mut is_tp = Vec::with_capacity(order.len());
    for &i in &order {
        let d = &detections[i];
        let mut best: Option<(usize, f64)> = None;
        for &g in by_video.get(d.video).map(Vec::as_slice).unwrap_or(&[]) {
            if matched[g] {
                continue;
            }
            let iou = d.segment.tiou(&ground_truth[g].segment);
            if iou >= threshold && best.is_none_or(|(_, b)| iou > b) {
                best = Some((g, iou));
            }
        }
        if let Some((g, _)) = best {
            matched[g] = true;
        }
        is_tp.push(best.is_some());
    }
    ap_from_matches(&is_tp, ground_truth.len())
}

/// Area under the interpolated PR curve for a ranked TP/FP sequence.
///
/// Recall only moves at true positives, each step being `1 / num_gt`, so the
/// area is the sum of interpolated precision at those ranks over `num_gt`.
fn ap_from_matches(is_tp: &[bool], num_gt: usize) -> f64 {
    let mut precision = Vec::with_capacity(is_tp.len());
    let mut tp = 0usize;
    for (rank, &hit) in is_tp.iter().enumerate() {
        tp += hit as usize;
        precision.push(tp as f64 / (rank + 1) as f64);
    }
    for i in (0..precision.len().saturating_sub(1)).rev() {
        precision[i] = precision[i].max(precision[i + 1]);
    }
    let area: f64 = precision
        .iter()
        .zip(is_tp)
        .filter(|(_, &hit)| hit)
        .map(|(p, _)| p)
        .sum();
    area / num_gt as f64
}

/// Full evaluation: top-M cut, AP per (class, threshold), mAP and average mAP.
pub fn evaluate(
    preds: &PredictionSet,
    gt: &GroundTruthDataset,
    cfg: &EvalConfig,
    exec: Execution,
) -> Result<EvalReport> {
    let cfg = EvalConfig::new(cfg.tiou_thresholds.clone(), cfg.top_m)?;
    if preds.num_classes != gt.num_classes {
        return Err(Error::LabelSpaceMismatch(format!(
            "predictions use {} classes, ground truth {}",
            preds.num_classes, gt.num_classes
        )));
    }
    let n = gt.num_classes;
    let kept = select_top_m(preds, cfg.top_m);

    let mut dets_by_class: Vec<Vec<ClassDetection>> = vec![Vec::new(); n];
    for (video, dets) in &kept.results {
        for d in dets {
            let slot = dets_by_class
                .get_mut(d.label)
                .ok_or(Error::ClassIndexOutOfRange {
                    index: d.label,
                    len: n,
                })?;
            slot.push(ClassDetection {
                video,
                segment: d.segment,
                score: d.score,
            });
        }
    }
    let mut gt_by_class: Vec<Vec<ClassGroundTruth>> = vec![Vec::new(); n];
    for (video, ann) in &gt.videos {
        for inst in &ann.annotations {
            let slot = gt_by_class
                .get_mut(inst.label)
                .ok_or(Error::ClassIndexOutOfRange {
                    index: inst.label,
                    len: n,
                })?;
            slot.push(ClassGroundTruth {
                video,
                segment: inst.segment,
            });
        }
    }

    let nt = cfg.tiou_thresholds.len();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|c| (0..nt).map(move |t| (c, t))).collect();
    let aps = exec.map(&pairs, |&(c, t)| {
        average_precision(&dets_by_class[c], &gt_by_class[c], cfg.tiou_thresholds[t])
    });
    let per_class_ap: Vec<Vec<f64>> = aps.chunks(nt.max(1)).map(<[f64]>::to_vec).collect();
    let num_gt: Vec<usize> = gt_by_class.iter().map(Vec::len).collect();

    let present: Vec<usize> = (0..n).filter(|&c| num_gt[c] > 0).collect();
    let map_per_threshold: Vec<f64> = (0..nt)
        .map(|t| {
            if present.is_empty() {
                0.0
            } else {
                present.iter().map(|&c| per_class_ap[c][t]).sum::<f64>() / present.len() as f64
            }
        })
        .collect();
    let average_map = map_per_threshold.iter().sum::<f64>() / nt as f64;
    Ok(EvalReport {
        tiou_thresholds: cfg.tiou_thresholds,
        per_class_ap,
        map_per_threshold,
        average_map,
        num_gt,
    })
}
