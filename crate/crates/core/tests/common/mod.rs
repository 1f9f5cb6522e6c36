//! Independent reference implementations used by the integration tests.
//!
//! Nothing here calls into the matching/AP/NMS code paths it checks; only the
//! plain data types are shared.
#![allow(dead_code)]

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tadkit::annotations::{
    Detection, GroundTruthDataset, GtInstance, PredictionSet, VideoAnnotation,
};
use tadkit::Segment;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Interval overlap ratio computed from raw endpoints.
pub fn brute_tiou(a: (f64, f64), b: (f64, f64)) -> f64 {
    let lo = a.0.max(b.0);
    let hi = a.1.min(b.1);
    if hi <= lo {
        return 0.0;
    }
    let inter = hi - lo;
    inter / ((a.1 - a.0) + (b.1 - b.0) - inter)
}

/// Brute-force evaluator: explicit top-M cut, exhaustive scan of every ground
/// truth instance for every ranked detection, and AP as the mean over recall
/// levels `t / n_gt` of the best precision achieved at recall >= that level.
pub fn brute_force_evaluate(
    preds: &PredictionSet,
    gt: &GroundTruthDataset,
    thresholds: &[f64],
    top_m: usize,
) -> (Vec<f64>, f64) {
    // (video, start, end, label, score)
    let mut kept: Vec<(String, f64, f64, usize, f64)> = Vec::new();
    for (video, dets) in &preds.results {
        let mut v: Vec<_> = dets
            .iter()
            .map(|d| {
                (
                    video.clone(),
                    d.segment.start(),
                    d.segment.end(),
                    d.label,
                    d.score,
                )
            })
            .collect();
        v.sort_by(|a, b| {
            b.4.partial_cmp(&a.4)
                .unwrap()
                .then(a.1.partial_cmp(&b.1).unwrap())
                .then(a.2.partial_cmp(&b.2).unwrap())
                .then(a.3.cmp(&b.3))
        });
        v.truncate(top_m);
        kept.extend(v);
    }
    let all_gt: Vec<(String, f64, f64, usize)> = gt
        .videos
        .iter()
        .flat_map(|(v, a)| {
            a.annotations
                .iter()
                .map(move |i| (v.clone(), i.segment.start(), i.segment.end(), i.label))
        })
        .collect();

    let mut maps = Vec::new();
    for &thr in thresholds {
        let mut sum = 0.0;
        let mut classes = 0;
        for c in 0..gt.num_classes {
            let n_gt = all_gt.iter().filter(|g| g.3 == c).count();
            if n_gt == 0 {
                continue;
            }
            classes += 1;
            let mut dets: Vec<&(String, f64, f64, usize, f64)> =
                kept.iter().filter(|d| d.3 == c).collect();
            dets.sort_by(|a, b| {
                b.4.partial_cmp(&a.4)
                    .unwrap()
                    .then(a.1.partial_cmp(&b.1).unwrap())
                    .then(a.2.partial_cmp(&b.2).unwrap())
            });
            let mut used = vec![false; all_gt.len()];
            let mut tp_count = 0usize;
            // (cumulative tp, precision) after each ranked detection
            let mut curve = Vec::new();
            for (rank, d) in dets.iter().enumerate() {
                let mut best: Option<usize> = None;
                let mut best_iou = -1.0;
                for (gi, g) in all_gt.iter().enumerate() {
                    if g.3 != c || g.0 != d.0 || used[gi] {
                        continue;
                    }
                    let iou = brute_tiou((d.1, d.2), (g.1, g.2));
                    if iou >= thr && iou > best_iou {
                        best = Some(gi);
                        best_iou = iou;
                    }
                }
                if let Some(gi) = best {
                    used[gi] = true;
                    tp_count += 1;
                }
                curve.push((tp_count, tp_count as f64 / (rank + 1) as f64));
            }
            let mut ap = 0.0;
            for level in 1..=n_gt {
                let best_prec = curve
                    .iter()
                    .filter(|(tp, _)| *tp >= level)
                    .map(|(_, p)| *p)
                    .fold(0.0, f64::max);
                ap += best_prec / n_gt as f64;
            }
            sum += ap;
        }
        maps.push(if classes == 0 {
            0.0
        } else {
            sum / classes as f64
        });
    }
    let avg = maps.iter().sum::<f64>() / maps.len() as f64;
    (maps, avg)
}

/// Classical greedy NMS that discards anything overlapping a kept detection.
pub fn brute_hard_nms(dets: &[Detection], score_floor: f64) -> Vec<(f64, f64)> {
    let mut sorted: Vec<&Detection> = dets.iter().filter(|d| d.score >= score_floor).collect();
    sorted.sort_by(|a, b| {
        b.score
            .partial_cmp(&a.score)
            .unwrap()
            .then(a.segment.start().partial_cmp(&b.segment.start()).unwrap())
            .then(a.segment.end().partial_cmp(&b.segment.end()).unwrap())
    });
    let mut kept: Vec<(f64, f64)> = Vec::new();
    for d in sorted {
        let s = (d.segment.start(), d.segment.end());
        if kept.iter().all(|k| brute_tiou(*k, s) == 0.0) {
            kept.push(s);
        }
    }
    kept
}

/// Random evaluation instance: up to 5 videos, up to 3 classes, at most 5
/// ground-truth instances and 10 detections per class. Detections are mostly
/// jittered copies of ground truth so that every threshold sees matches.
pub fn random_instance(seed: u64) -> (GroundTruthDataset, PredictionSet) {
    let mut r = rng(seed);
    let n_videos = r.random_range(1..=5);
    let n_classes = r.random_range(1..=3);
    let videos: Vec<String> = (0..n_videos).map(|i| format!("video_{i}")).collect();
    let mut gt = GroundTruthDataset {
        num_classes: n_classes,
        videos: BTreeMap::new(),
        clamped_segments: 0,
    };
    for v in &videos {
        gt.videos.insert(
            v.clone(),
            VideoAnnotation {
                duration: 100.0,
                subset: "validation".into(),
                annotations: vec![],
            },
        );
    }
    let mut preds = PredictionSet::new(n_classes);
    for c in 0..n_classes {
        let n_gt = r.random_range(0..=5);
        let mut placed = Vec::new();
        for _ in 0..n_gt {
            let v = &videos[r.random_range(0..n_videos)];
            let s = r.random_range(0.0..80.0);
            let seg = Segment::new(s, s + r.random_range(1.0..20.0)).unwrap();
            gt.videos.get_mut(v).unwrap().annotations.push(GtInstance {
                segment: seg,
                label: c,
            });
            placed.push((v.clone(), seg));
        }
        let n_det = r.random_range(0..=10);
        for _ in 0..n_det {
            let (v, s, e) = if !placed.is_empty() && r.random_bool(0.7) {
                let (v, g) = &placed[r.random_range(0..placed.len())];
                let l = g.length();
                (
                    v.clone(),
                    g.start() + r.random_range(-0.3..0.3) * l,
                    g.end() + r.random_range(-0.3..0.3) * l,
                )
            } else {
                let s = r.random_range(0.0..90.0);
                (
                    videos[r.random_range(0..n_videos)].clone(),
                    s,
                    s + r.random_range(0.5..10.0),
                )
            };
            let Ok(seg) = Segment::new(s, e) else {
                continue;
            };
            let score = r.random_range(0.0..=1.0);
            preds
                .push(&v, Detection::new(seg, c, score).unwrap())
                .unwrap();
        }
    }
    (gt, preds)
}

/// Predictions that reproduce the ground truth exactly with score 1.
pub fn perfect_predictions(gt: &GroundTruthDataset) -> PredictionSet {
    let mut p = PredictionSet::new(gt.num_classes);
    for (v, a) in &gt.videos {
        for i in &a.annotations {
            p.push(v, Detection::new(i.segment, i.label, 1.0).unwrap())
                .unwrap();
        }
    }
    p
}
