use std::collections::BTreeMap;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// `P` categories × `K` samples per mini-batch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub p_categories: usize,
    pub k_samples: usize,
    pub seed: u64,
}

impl SamplerConfig {
    pub fn new(p_categories: usize, k_samples: usize, seed: u64) -> Result<Self> {
        if p_categories == 0 || k_samples == 0 {
            return Err(Error::InvalidArgument(format!(
                "P and K must be >= 1, got P={p_categories} K={k_samples}"
            )));
        }
        Ok(SamplerConfig {
            p_categories,
            k_samples,
            seed,
        })
    }

    pub fn batch_size(&self) -> usize {
        self.p_categories * self.k_samples
    }
}

/// Reduces multi-label samples to their first category, the one used for batching.
pub fn first_categories(labels: &[Vec<usize>]) -> Result<Vec<usize>> {
    labels
        .iter()
        .enumerate()
        .map(|(i, l)| {
            l.first()
                .copied()
                .ok_or_else(|| Error::InvalidArgument(format!("sample {i} has no category")))
        })
        .collect()
}

/// Draws P×K batches from a labeled pool with its own seeded generator.
///
/// Categories are drawn uniformly without replacement; within a category,
/// samples are drawn without replacement when at least K exist and with
/// replacement otherwise. Each batch is grouped by category in draw order.
#[derive(Debug, Clone)]
pub struct PkSampler {
    by_label: Vec<(usize, Vec<usize>)>,
    cfg: SamplerConfig,
    rng: ChaCha8Rng,
}

impl PkSampler {
    pub fn new(labels: &[usize], cfg: SamplerConfig) -> Result<Self> {
        let cfg = SamplerConfig::new(cfg.p_categories, cfg.k_samples, cfg.seed)?;
        let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (i, &l) in labels.iter().enumerate() {
            groups.entry(l).or_default().push(i);
        }
        if groups.len() < cfg.p_categories {
            return Err(Error::NotEnoughLabels {
                needed: cfg.p_categories,
                available: groups.len(),
            });
        }
        Ok(PkSampler {
            by_label: groups.into_iter().collect(),
            cfg,
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
        })
    }

    pub fn next_batch(&mut self) -> Vec<usize> {
        let k = self.cfg.k_samples;
        let mut out = Vec::with_capacity(self.cfg.batch_size());
        let chosen: Vec<&(usize, Vec<usize>)> = self
            .by_label
            .choose_multiple(&mut self.rng, self.cfg.p_categories)
            .collect();
        for (_, members) in chosen {
            if members.len() >= k {
                out.extend(members.choose_multiple(&mut self.rng, k).copied());
            } else {
                out.extend((0..k).map(|_| members[self.rng.random_range(0..members.len())]));
            }
        }
        out
    }
}

/// One P×K batch of sample indices; identical inputs and seed give identical output.
pub fn pk_sample(labels: &[usize], cfg: &SamplerConfig) -> Result<Vec<usize>> {
    Ok(PkSampler::new(labels, *cfg)?.next_batch())
}
