use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use tadkit::annotations::{
    fold_class_scores, infer_label_space, load_class_scores, load_ground_truth, load_predictions,
    write_class_scores,
};
use tadkit::confidence_map::{self, extract_top_k, read_map, write_map};
use tadkit::ensemble::{merge_detections, soft_nms_set, CategoryNms, Decay, NmsConfig};
use tadkit::evaluation::{evaluate as run_evaluation, parse_thresholds, select_top_m, EvalConfig};
use tadkit::losses::{
    circle_loss_weighted, circle_weights, triplet_loss, CircleParams, SimilarityBatch,
    TripletParams,
};
use tadkit::temporal::{generate_fake_proposals, DEFAULT_OFFSETS};
use tadkit::{Execution, FusionSpec, LabelSpace, PredictionSet, Segment};

use crate::{
    EnsembleArgs, EvaluateArgs, FakeProposalsArgs, FoldLabelsArgs, FuseMapsArgs, LossCheckArgs,
    NmsArgs,
};

/// A failure that points at a bug rather than at bad input. Exits with 2.
#[derive(Debug)]
pub struct Internal(pub String);

impl fmt::Display for Internal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "internal error: {}", self.0)
    }
}

impl std::error::Error for Internal {}

/// Central finite-difference step for `loss-check`.
const FD_STEP: f64 = 1e-6;

/// Writes `text` to `out`, or to stdout when no path was given.
fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => {
            fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Internal(e.to_string()))?;
    text.push('\n');
    Ok(text)
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text =
        fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("cannot parse {}", path.display()))
}

fn parse_list(text: &str, what: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .with_context(|| format!("bad {what} entry {s:?}"))
        })
        .collect()
}

/// Label space from a file, or the sorted union of labels in prediction files.
fn resolve_labels(labels: Option<&Path>, preds: &[PathBuf]) -> Result<LabelSpace> {
    if let Some(path) = labels {
        return Ok(LabelSpace::load(path)?);
    }
    let mut names = BTreeSet::new();
    for p in preds {
        names.extend(infer_label_space(p)?.names().iter().cloned());
    }
    Ok(LabelSpace::new(names)?)
}

/// NMS settings as written in config files, with categories named by label.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct NmsSection {
    sigma: Option<f64>,
    score_floor: Option<f64>,
    decay: Option<Decay>,
    #[serde(default)]
    per_category: BTreeMap<String, CategoryNms>,
}

impl NmsSection {
    fn resolve(
        self,
        labels: &LabelSpace,
        sigma: Option<f64>,
        score_floor: Option<f64>,
    ) -> Result<NmsConfig> {
        let defaults = NmsConfig::default();
        let mut per_category = BTreeMap::new();
        for (name, o) in self.per_category {
            let index = labels
                .index_of(&name)
                .with_context(|| format!("per-category settings name unknown label {name:?}"))?;
            per_category.insert(index, o);
        }
        let cfg = NmsConfig {
            sigma: sigma.or(self.sigma).unwrap_or(defaults.sigma),
            score_floor: score_floor
                .or(self.score_floor)
                .unwrap_or(defaults.score_floor),
            decay: self.decay.unwrap_or(defaults.decay),
            per_category,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

fn check_nms_output(before: &PredictionSet, after: &PredictionSet) -> Result<()> {
    for (video, dets) in &after.results {
        let n = before.results.get(video).map_or(0, Vec::len);
        if dets.len() > n {
            return Err(Internal(format!(
                "soft-NMS grew video {video} from {n} to {} detections",
                dets.len()
            ))
            .into());
        }
    }
    Ok(())
}

pub fn evaluate(a: EvaluateArgs) -> Result<()> {
    let labels = LabelSpace::load(&a.labels)?;
    let gt = load_ground_truth(&a.gt, &labels)?;
    let preds = load_predictions(&a.pred, &labels)?;
    let cfg = EvalConfig::new(parse_thresholds(&a.thresholds)?, a.top_m)?;
    let report = run_evaluation(&preds, &gt, &cfg, Execution::default())?;
    let json = to_json(&report)?;
    if let Some(out) = &a.out {
        emit(Some(out), &json)?;
    }
    eprint!("{}", report.render_table());
    emit(None, &json)
}

pub fn nms(a: NmsArgs) -> Result<()> {
    let labels = resolve_labels(a.labels.as_deref(), std::slice::from_ref(&a.pred))?;
    let preds = load_predictions(&a.pred, &labels)?;
    let section: NmsSection = match &a.config {
        Some(path) => read_json(path)?,
        None => NmsSection::default(),
    };
    let cfg = section.resolve(&labels, a.sigma, a.score_floor)?;
    let mut out = soft_nms_set(&preds, &cfg, Execution::default())?;
    check_nms_output(&preds, &out)?;
    if let Some(m) = a.top_m {
        out = select_top_m(&out, m);
    }
    emit(a.out.as_deref(), &out.to_json_string(&labels)?)
}

pub fn fuse_maps(a: FuseMapsArgs) -> Result<()> {
    let maps = a
        .maps
        .iter()
        .map(read_map)
        .collect::<tadkit::Result<Vec<_>>>()?;
    let weights = match &a.weights {
        Some(w) => parse_list(w, "weight")?,
        None => vec![1.0; maps.len()],
    };
    let fused = confidence_map::fuse_maps(&maps, &FusionSpec::new(weights)?)?;
    write_map(&fused, &a.out)?;
    if let Some(path) = &a.proposals {
        let duration = a.duration.context("--proposals needs --duration")?;
        if !(duration > 0.0) {
            bail!("--duration must be positive, got {duration}");
        }
        let proposals = extract_top_k(&fused, a.top_k, duration);
        emit(Some(path), &to_json(&proposals)?)?;
    }
    Ok(())
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct EnsembleSpec {
    models: Vec<EnsembleModel>,
    #[serde(default)]
    nms: NmsSection,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct EnsembleModel {
    predictions: PathBuf,
    #[serde(default = "unit_weight")]
    weight: f64,
}

fn unit_weight() -> f64 {
    1.0
}

pub fn ensemble(a: EnsembleArgs) -> Result<()> {
    let spec: EnsembleSpec = read_json(&a.config)?;
    if spec.models.is_empty() {
        bail!("{} lists no models", a.config.display());
    }
    let base = a.config.parent().unwrap_or(Path::new(""));
    let paths: Vec<PathBuf> = spec
        .models
        .iter()
        .map(|m| base.join(&m.predictions))
        .collect();
    let weights = match &a.weights {
        Some(w) => parse_list(w, "weight")?,
        None => spec.models.iter().map(|m| m.weight).collect(),
    };
    let labels = resolve_labels(a.labels.as_deref(), &paths)?;
    let sets = paths
        .iter()
        .map(|p| load_predictions(p, &labels))
        .collect::<tadkit::Result<Vec<_>>>()?;
    let cfg = spec.nms.resolve(&labels, a.sigma, a.score_floor)?;
    let merged = merge_detections(&sets, &weights)?;
    let suppressed = soft_nms_set(&merged, &cfg, Execution::default())?;
    check_nms_output(&merged, &suppressed)?;
    let out = select_top_m(&suppressed, a.top_m);
    emit(a.out.as_deref(), &out.to_json_string(&labels)?)
}

#[derive(Serialize)]
struct LabeledFake<'a> {
    video: &'a str,
    label: &'a str,
    segment: Segment,
    target: (f64, f64),
}

pub fn fake_proposals(a: FakeProposalsArgs) -> Result<()> {
    let offsets = match &a.offsets {
        Some(o) => parse_list(o, "offset")?,
        None => DEFAULT_OFFSETS.to_vec(),
    };
    if let Some(text) = &a.segment {
        let bounds = parse_list(text, "segment")?;
        let [start, end] = bounds[..] else {
            bail!("--segment takes start,end, got {text:?}");
        };
        let fakes = generate_fake_proposals(&Segment::new(start, end)?, &offsets)?;
        return emit(a.out.as_deref(), &to_json(&fakes)?);
    }
    let (Some(gt_path), Some(label_path)) = (&a.gt, &a.labels) else {
        bail!("either --segment or --gt with --labels is required");
    };
    let labels = LabelSpace::load(label_path)?;
    let gt = load_ground_truth(gt_path, &labels)?;
    let mut all = Vec::new();
    for (video, ann) in &gt.videos {
        for inst in &ann.annotations {
            let label = labels
                .name(inst.label)
                .ok_or_else(|| Internal(format!("label index {} has no name", inst.label)))?;
            for f in generate_fake_proposals(&inst.segment, &offsets)? {
                all.push(LabeledFake {
                    video,
                    label,
                    segment: f.segment,
                    target: f.target,
                });
            }
        }
    }
    emit(a.out.as_deref(), &to_json(&all)?)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct LossBatch {
    s_p: Vec<f64>,
    s_n: Vec<f64>,
    #[serde(default)]
    params: LossParams,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct LossParams {
    #[serde(default)]
    loss: LossKind,
    margin: Option<f64>,
    gamma: Option<f64>,
}

#[derive(Debug, Default, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum LossKind {
    #[default]
    Circle,
    Triplet,
}

#[derive(Debug, Serialize)]
struct LossReport {
    loss: LossKind,
    value: f64,
    grad_pos: Vec<f64>,
    grad_neg: Vec<f64>,
    /// Largest absolute gap between analytic and finite-difference gradients.
    max_fd_abs_error: f64,
    /// The same gap relative to the larger gradient's infinity norm.
    max_fd_rel_error: f64,
}

fn random_batch(seed: u64) -> LossBatch {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |n: usize| {
        (0..n)
            .map(|_| rng.random_range(-1.0..=1.0))
            .collect::<Vec<f64>>()
    };
    LossBatch {
        s_p: draw(4),
        s_n: draw(4),
        params: LossParams::default(),
    }
}

/// Mean triplet loss over every (positive, negative) pair, with gradients.
fn mean_triplet(batch: &SimilarityBatch, p: &TripletParams) -> (f64, Vec<f64>, Vec<f64>) {
    let n = (batch.s_p.len() * batch.s_n.len()) as f64;
    let mut value = 0.0;
    let mut gp = vec![0.0; batch.s_p.len()];
    let mut gn = vec![0.0; batch.s_n.len()];
    for (i, &sp) in batch.s_p.iter().enumerate() {
        for (j, &sn) in batch.s_n.iter().enumerate() {
            let t = triplet_loss(sp, sn, p);
            value += t.value / n;
            gp[i] += t.grad_pos / n;
            gn[j] += t.grad_neg / n;
        }
    }
    (value, gp, gn)
}

fn central_difference(x: &[f64], i: usize, f: &dyn Fn(&[f64]) -> Result<f64>) -> Result<f64> {
    let mut up = x.to_vec();
    let mut down = x.to_vec();
    up[i] += FD_STEP;
    down[i] -= FD_STEP;
    Ok((f(&up)? - f(&down)?) / (2.0 * FD_STEP))
}

pub fn loss_check(a: LossCheckArgs) -> Result<()> {
    let raw = match &a.batch {
        Some(path) => read_json(path)?,
        None => random_batch(a.seed),
    };
    let batch = SimilarityBatch::new(raw.s_p, raw.s_n)?;
    if batch.s_p.is_empty() || batch.s_n.is_empty() {
        bail!("batch needs at least one positive and one negative similarity");
    }
    let kind = raw.params.loss;

    // Returns (value, grad_pos, grad_neg) plus a closure evaluating the loss
    // with one side replaced, for the numerical check.
    type Eval<'a> = Box<dyn Fn(&[f64], &[f64]) -> Result<f64> + 'a>;
    let (value, grad_pos, grad_neg, eval): (f64, Vec<f64>, Vec<f64>, Eval) = match kind {
        LossKind::Circle => {
            let p = CircleParams::new(
                raw.params
                    .margin
                    .unwrap_or(tadkit::losses::DEFAULT_CIRCLE_MARGIN),
                raw.params
                    .gamma
                    .unwrap_or(tadkit::losses::DEFAULT_CIRCLE_GAMMA),
            )?;
            // Weights are held fixed under differentiation.
            let (ap, an) = circle_weights(&batch, &p);
            let out = circle_loss_weighted(&batch, &p, &ap, &an)?;
            let eval: Eval = Box::new(move |sp, sn| {
                let b = SimilarityBatch {
                    s_p: sp.to_vec(),
                    s_n: sn.to_vec(),
                };
                Ok(circle_loss_weighted(&b, &p, &ap, &an)?.value)
            });
            (out.value, out.grad_pos, out.grad_neg, eval)
        }
        LossKind::Triplet => {
            if raw.params.gamma.is_some() {
                bail!("gamma does not apply to the triplet loss");
            }
            let p = TripletParams::new(
                raw.params
                    .margin
                    .unwrap_or(tadkit::losses::DEFAULT_TRIPLET_MARGIN),
            )?;
            let (v, gp, gn) = mean_triplet(&batch, &p);
            let eval: Eval = Box::new(move |sp, sn| {
                let b = SimilarityBatch {
                    s_p: sp.to_vec(),
                    s_n: sn.to_vec(),
                };
                Ok(mean_triplet(&b, &p).0)
            });
            (v, gp, gn, eval)
        }
    };

    let mut max_abs: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for (i, g) in grad_pos.iter().enumerate() {
        let fd = central_difference(&batch.s_p, i, &|x| eval(x, &batch.s_n))?;
        max_abs = max_abs.max((g - fd).abs());
        scale = scale.max(g.abs()).max(fd.abs());
    }
    for (j, g) in grad_neg.iter().enumerate() {
        let fd = central_difference(&batch.s_n, j, &|x| eval(&batch.s_p, x))?;
        max_abs = max_abs.max((g - fd).abs());
        scale = scale.max(g.abs()).max(fd.abs());
    }
    if !value.is_finite() {
        return Err(Internal(format!("loss evaluated to {value}")).into());
    }
    let report = LossReport {
        loss: kind,
        value,
        grad_pos,
        grad_neg,
        max_fd_abs_error: max_abs,
        max_fd_rel_error: if scale > 0.0 { max_abs / scale } else { 0.0 },
    };
    emit(a.out.as_deref(), &to_json(&report)?)
}

pub fn fold_labels(a: FoldLabelsArgs) -> Result<()> {
    if a.expand {
        let path = a.labels.as_deref().context("--expand needs --labels")?;
        let expanded = LabelSpace::load(path)?.expand()?;
        return emit(a.out.as_deref(), &to_json(&expanded.names())?);
    }
    let path = a.scores.as_deref().context("--scores is required")?;
    let scores = load_class_scores(path)?;
    if let Some(label_path) = &a.labels {
        let labels = LabelSpace::load(label_path)?;
        if let Some((video, v)) = scores.iter().find(|(_, v)| v.len() != labels.len()) {
            bail!(
                "{video} has {} scores but the label space has {} entries",
                v.len(),
                labels.len()
            );
        }
    }
    let mut folded = BTreeMap::new();
    for (video, v) in &scores {
        folded.insert(
            video.clone(),
            fold_class_scores(v).with_context(|| format!("video {video}"))?,
        );
    }
    match &a.out {
        Some(out) => Ok(write_class_scores(&folded, out)?),
        None => emit(None, &to_json(&folded)?),
    }
}
