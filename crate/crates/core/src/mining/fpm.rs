//! Truncated, perturbed top-k gram mining, one run per gram length.
//!
//! Each run computes exact record-level supports for one length, keeps the
//! candidates whose support is within `gamma` of the k-th largest, perturbs
//! them with Laplace noise of scale `noise_factor * k / epsilon_run` and
//! reports the k largest noisy values. Running all `q_max - q_min + 1`
//! lengths at `epsilon / Δq` each composes sequentially to `epsilon`.

use serde::{Deserialize, Serialize};

use super::{rank_order, supports_of_length, top_k, ScoredGram};
use crate::dp::{LaplaceSampler, PrivacyBudget};
use crate::error::{Error, Result};
use crate::records::Dataset;
use crate::strings::Gram;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinerConfig {
    pub k: usize,
    pub q_min: usize,
    pub q_max: usize,
    pub epsilon: f64,
    #[serde(default)]
    pub gamma: f64,
    /// Per-candidate Laplace scale is `noise_factor * k / epsilon_run`.
    #[serde(default = "default_noise_factor")]
    pub noise_factor: f64,
}

fn default_noise_factor() -> f64 {
    2.0
}

impl Default for MinerConfig {
    fn default() -> Self {
        MinerConfig {
            k: 75,
            q_min: 1,
            q_max: 3,
            epsilon: 0.1,
            gamma: 0.0,
            noise_factor: default_noise_factor(),
        }
    }
}

impl MinerConfig {
    pub fn delta_q(&self) -> usize {
        self.q_max + 1 - self.q_min
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::invalid("k must be at least 1"));
        }
        if self.q_min == 0 || self.q_min > self.q_max {
            return Err(Error::invalid(format!(
                "need 1 <= q_min <= q_max, got {}..{}",
                self.q_min, self.q_max
            )));
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(Error::invalid("epsilon must be positive"));
        }
        if !(self.gamma.is_finite() && self.gamma >= 0.0) {
            return Err(Error::invalid("gamma must be non-negative"));
        }
        if !(self.noise_factor.is_finite() && self.noise_factor > 0.0) {
            return Err(Error::invalid("noise_factor must be positive"));
        }
        Ok(())
    }
}

/// Record-level support of `gram`: how many records contain it.
pub fn support(dataset: &Dataset, gram: &Gram) -> usize {
    dataset.iter().filter(|r| r.text.contains(gram.as_str())).count()
}

/// One private top-k run over grams of length `q`, charged `epsilon_run`.
pub fn mine_fixed_length(
    dataset: &Dataset,
    q: usize,
    epsilon_run: f64,
    config: &MinerConfig,
    budget: &mut PrivacyBudget,
    sampler: &mut LaplaceSampler,
) -> Result<Vec<ScoredGram>> {
    if !(epsilon_run.is_finite() && epsilon_run > 0.0) {
        return Err(Error::invalid("epsilon_run must be positive"));
    }
    let k = config.k;
    budget.charge(format!("fpm q={q}"), epsilon_run)?;

    let mut supports: Vec<(String, usize)> = supports_of_length(dataset, q).into_iter().collect();
    supports.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    let f_k = if supports.len() >= k {
        supports[k - 1].1 as f64
    } else {
        0.0
    };
    let cutoff = (f_k - config.gamma).max(1.0);

    let mut candidates: Vec<(String, usize)> = supports.into_iter().filter(|(_, s)| *s as f64 >= cutoff).collect();
    // Draw order follows gram order so results do not depend on hashing.
    candidates.sort_by(|a, b| a.0.cmp(&b.0));

    let scale = config.noise_factor * k as f64 / epsilon_run;
    let mut scored = Vec::with_capacity(candidates.len());
    for (g, s) in candidates {
        let noise = sampler.sample(scale)?;
        scored.push(ScoredGram::new(g, s as f64 + noise));
    }
    Ok(top_k(scored, k))
}

/// Δq sequential runs at `epsilon / Δq`, then the overall top-k.
pub fn fpm_mine(
    dataset: &Dataset,
    config: &MinerConfig,
    budget: &mut PrivacyBudget,
    sampler: &mut LaplaceSampler,
) -> Result<Vec<ScoredGram>> {
    config.validate()?;
    let epsilon_run = config.epsilon / config.delta_q() as f64;
    let mut merged = Vec::new();
    for q in config.q_min..=config.q_max {
        merged.extend(mine_fixed_length(dataset, q, epsilon_run, config, budget, sampler)?);
    }
    merged.sort_by(rank_order);
    merged.truncate(config.k);
    Ok(merged)
}
