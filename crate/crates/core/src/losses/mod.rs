//! Metric-learning and classification losses with analytic gradients.
//!
//! Losses operate on precomputed similarities (or probabilities); how those are
//! produced is up to the caller. Gradients are with respect to those inputs.

mod mining;
mod sampler;

pub use mining::{batch_circle_loss, batch_triplet_loss, mine_pairs, Mining};
pub use sampler::{first_categories, pk_sample, PkSampler, SamplerConfig};

use serde::{Deserialize, Serialize};

use crate::annotations::check_distribution;
use crate::{Error, Result};

pub const DEFAULT_TRIPLET_MARGIN: f64 = 0.3;
pub const DEFAULT_CIRCLE_MARGIN: f64 = 0.25;
pub const DEFAULT_CIRCLE_GAMMA: f64 = 32.0;
pub const DEFAULT_METRIC_WEIGHT: f64 = 1.0;

/// Probability floor inside the cross-entropy logarithm.
pub const CE_EPSILON: f64 = 1e-12;

/// Positive and negative similarities of one anchor.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SimilarityBatch {
    pub s_p: Vec<f64>,
    pub s_n: Vec<f64>,
}

impl SimilarityBatch {
    pub fn new(s_p: Vec<f64>, s_n: Vec<f64>) -> Result<Self> {
        if let Some(s) = s_p.iter().chain(&s_n).find(|s| !(-1.0..=1.0).contains(*s)) {
            return Err(Error::InvalidArgument(format!(
                "similarity {s} outside [-1, 1]"
            )));
        }
        Ok(SimilarityBatch { s_p, s_n })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TripletParams {
    pub margin: f64,
}

impl Default for TripletParams {
    fn default() -> Self {
        TripletParams {
            margin: DEFAULT_TRIPLET_MARGIN,
        }
    }
}

impl TripletParams {
    pub fn new(margin: f64) -> Result<Self> {
        if !(margin >= 0.0) || !margin.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "triplet margin must be >= 0, got {margin}"
            )));
        }
        Ok(TripletParams { margin })
    }
}

/// Circle-loss relaxation margin `m` and scale `gamma`.
///
/// Derived quantities: optima `O_p = 1 + m`, `O_n = -m`; decision margins
/// `Δ_p = 1 - m`, `Δ_n = m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CircleParams {
    pub margin: f64,
    pub gamma: f64,
}

impl Default for CircleParams {
    fn default() -> Self {
        CircleParams {
            margin: DEFAULT_CIRCLE_MARGIN,
            gamma: DEFAULT_CIRCLE_GAMMA,
        }
    }
}

impl CircleParams {
    pub fn new(margin: f64, gamma: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&margin) {
            return Err(Error::InvalidArgument(format!(
                "circle margin must be in [0, 1], got {margin}"
            )));
        }
        if !(gamma >= 0.0) || !gamma.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "gamma must be >= 0, got {gamma}"
            )));
        }
        Ok(CircleParams { margin, gamma })
    }

    pub fn delta_p(&self) -> f64 {
        1.0 - self.margin
    }

    pub fn delta_n(&self) -> f64 {
        self.margin
    }

    /// `α_p = [1 + m - s_p]_+`
    pub fn alpha_p(&self, s_p: f64) -> f64 {
        (1.0 + self.margin - s_p).max(0.0)
    }

    /// `α_n = [s_n + m]_+`
    pub fn alpha_n(&self, s_n: f64) -> f64 {
        (s_n + self.margin).max(0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TripletOutput {
    pub value: f64,
    pub grad_pos: f64,
    pub grad_neg: f64,
}

/// `max(s_n - s_p + m, 0)`. The subgradient at the hinge itself is zero.
pub fn triplet_loss(s_p: f64, s_n: f64, params: &TripletParams) -> TripletOutput {
    let z = s_n - s_p + params.margin;
    if z > 0.0 {
        TripletOutput {
            value: z,
            grad_pos: -1.0,
            grad_neg: 1.0,
        }
    } else {
        TripletOutput {
            value: 0.0,
            grad_pos: 0.0,
            grad_neg: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CircleOutput {
    pub value: f64,
    pub grad_pos: Vec<f64>,
    pub grad_neg: Vec<f64>,
}

/// The self-paced weights `(α_p, α_n)` of every similarity in the batch.
pub fn circle_weights(batch: &SimilarityBatch, params: &CircleParams) -> (Vec<f64>, Vec<f64>) {
    (
        batch.s_p.iter().map(|&s| params.alpha_p(s)).collect(),
        batch.s_n.iter().map(|&s| params.alpha_n(s)).collect(),
    )
}

/// Circle loss of one anchor.
///
/// Gradients treat the weights `α` as constants: they are the exact gradient of
/// [`circle_loss_weighted`] with the weights frozen at the current similarities.
pub fn circle_loss(batch: &SimilarityBatch, params: &CircleParams) -> Result<CircleOutput> {
    let (alpha_p, alpha_n) = circle_weights(batch, params);
    circle_loss_weighted(batch, params, &alpha_p, &alpha_n)
}

/// Circle loss with caller-supplied weights.
///
/// `log(1 + Σ_j Σ_i exp(γ(α_n^j (s_n^j - Δ_n) - α_p^i (s_p^i - Δ_p))))`. The double
/// sum factors into `exp(LSE(a) + LSE(b))`, which is evaluated as a softplus of
/// two log-sum-exps so large `γ` cannot overflow.
pub fn circle_loss_weighted(
    batch: &SimilarityBatch,
    params: &CircleParams,
    alpha_p: &[f64],
    alpha_n: &[f64],
) -> Result<CircleOutput> {
    if batch.s_p.is_empty() || batch.s_n.is_empty() {
        return Err(Error::InvalidArgument(
            "circle loss needs at least one positive and one negative similarity".into(),
        ));
    }
    if alpha_p.len() != batch.s_p.len() || alpha_n.len() != batch.s_n.len() {
        return Err(Error::DimensionMismatch(
            "weight count differs from similarity count".into(),
        ));
    }
    let g = params.gamma;
    let neg_logits: Vec<f64> = batch
        .s_n
        .iter()
        .zip(alpha_n)
        .map(|(&s, &a)| g * a * (s - params.delta_n()))
        .collect();
    let pos_logits: Vec<f64> = batch
        .s_p
        .iter()
        .zip(alpha_p)
        .map(|(&s, &a)| -g * a * (s - params.delta_p()))
        .collect();
    let lse_n = log_sum_exp(&neg_logits);
    let lse_p = log_sum_exp(&pos_logits);
    let x = lse_n + lse_p;
    let value = softplus(x);
    let sig = sigmoid(x);
    let grad_neg = neg_logits
        .iter()
        .zip(alpha_n)
        .map(|(&l, &a)| sig * (l - lse_n).exp() * g * a)
        .collect();
    let grad_pos = pos_logits
        .iter()
        .zip(alpha_p)
        .map(|(&l, &a)| -sig * (l - lse_p).exp() * g * a)
        .collect();
    Ok(CircleOutput {
        value,
        grad_pos,
        grad_neg,
    })
}

fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossEntropyOutput {
    pub value: f64,
    pub grad: Vec<f64>,
}

/// `-log(p_true + ε)` over an already-normalized probability vector.
pub fn cross_entropy(probs: &[f64], true_class: usize) -> Result<CrossEntropyOutput> {
    if true_class >= probs.len() {
        return Err(Error::ClassIndexOutOfRange {
            index: true_class,
            len: probs.len(),
        });
    }
    check_distribution(probs)?;
    let p = probs[true_class] + CE_EPSILON;
    let mut grad = vec![0.0; probs.len()];
    grad[true_class] = -1.0 / p;
    Ok(CrossEntropyOutput {
        value: -p.ln(),
        grad,
    })
}

/// `ce + weight * metric`.
pub fn combined_loss(ce: f64, metric: f64, weight: f64) -> f64 {
    ce + weight * metric
}
