use serde::{Deserialize, Serialize};

use super::{circle_loss, triplet_loss, CircleParams, SimilarityBatch, TripletParams};
use crate::{Error, Result};

/// How positive/negative pairs are formed for each anchor of a P×K batch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mining {
    /// Every other same-label sample is a positive, every other-label sample a negative.
    #[default]
    BatchAll,
    /// Only the least similar positive and the most similar negative.
    BatchHard,
}

/// Splits a row-major `n × n` similarity matrix into one [`SimilarityBatch`]
/// per anchor. Anchors lacking a positive or a negative are skipped.
pub fn mine_pairs(
    similarity: &[f64],
    labels: &[usize],
    mining: Mining,
) -> Result<Vec<SimilarityBatch>> {
    let n = labels.len();
    if similarity.len() != n * n {
        return Err(Error::DimensionMismatch(format!(
            "similarity matrix has {} entries, expected {n}x{n}",
            similarity.len()
        )));
    }
    let mut out = Vec::with_capacity(n);
    for a in 0..n {
        let row = &similarity[a * n..(a + 1) * n];
        let mut s_p = Vec::new();
        let mut s_n = Vec::new();
        for (b, &s) in row.iter().enumerate() {
            if b == a {
                continue;
            }
            if labels[b] == labels[a] {
                s_p.push(s);
            } else {
                s_n.push(s);
            }
        }
        if s_p.is_empty() || s_n.is_empty() {
            continue;
        }
        if mining == Mining::BatchHard {
            s_p = vec![s_p.iter().copied().fold(f64::INFINITY, f64::min)];
            s_n = vec![s_n.iter().copied().fold(f64::NEG_INFINITY, f64::max)];
        }
        out.push(SimilarityBatch::new(s_p, s_n)?);
    }
    Ok(out)
}

/// Mean triplet loss over all (positive, negative) pairs of every anchor.
pub fn batch_triplet_loss(batches: &[SimilarityBatch], params: &TripletParams) -> f64 {
    let (sum, count) = batches
        .iter()
        .flat_map(|b| {
            b.s_p
                .iter()
                .flat_map(move |&p| b.s_n.iter().map(move |&n| (p, n)))
        })
        .fold((0.0, 0usize), |(s, c), (p, n)| {
            (s + triplet_loss(p, n, params).value, c + 1)
        });
    if count == 0 {
        0.0
    } else {
        sum / count as f64
    }
}

/// Mean per-anchor circle loss.
pub fn batch_circle_loss(batches: &[SimilarityBatch], params: &CircleParams) -> Result<f64> {
    if batches.is_empty() {
        return Ok(0.0);
    }
    let mut sum = 0.0;
    for b in batches {
        sum += circle_loss(b, params)?.value;
    }
    Ok(sum / batches.len() as f64)
}
