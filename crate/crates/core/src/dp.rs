//! Laplace noise, sensitivity-1 noisy counts, and a composition-aware
//! privacy budget accountant.
//!
//! Charges live in *scopes*. A scope is a path of child indices; the empty
//! path is the root. Charges on a scope compose sequentially with charges on
//! its ancestors and descendants, and in parallel with charges on every other
//! branch, since sibling scopes are queried against disjoint records. The
//! amount spent is therefore the largest sum along any root-to-leaf chain.
//! Plain sequential use never leaves the root scope.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative slack applied when comparing spent budget against the total.
const BUDGET_SLACK: f64 = 1e-9;

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} must be positive and finite, got {v}")))
    }
}

/// Draws one sample from Lap(0, scale) by inverse-CDF transform.
pub fn sample_laplace<R: Rng + ?Sized>(scale: f64, rng: &mut R) -> Result<f64> {
    check_positive("laplace scale", scale)?;
    Ok(laplace_unchecked(scale, rng))
}

fn laplace_unchecked<R: Rng + ?Sized>(scale: f64, rng: &mut R) -> f64 {
    // gen::<f64>() is in [0, 1); reject 0 so that ln never sees 0.
    let r = loop {
        let r: f64 = rng.gen();
        if r > 0.0 {
            break r;
        }
    };
    let u = r - 0.5;
    -scale * u.signum() * (1.0 - 2.0 * u.abs()).ln()
}

/// CDF of Lap(0, scale).
pub fn laplace_cdf(x: f64, scale: f64) -> f64 {
    if x < 0.0 {
        0.5 * (x / scale).exp()
    } else {
        1.0 - 0.5 * (-x / scale).exp()
    }
}

/// Seeded noise source owned by one party. Draw order is part of the
/// determinism contract: the same seed and the same sequence of calls yield
/// the same values.
#[derive(Debug, Clone)]
pub struct LaplaceSampler {
    rng: ChaCha20Rng,
}

impl LaplaceSampler {
    pub fn new(seed: u64) -> Self {
        LaplaceSampler {
            rng: ChaCha20Rng::seed_from_u64(seed),
        }
    }

    /// Independent stream for `stream` under the same seed (one per party).
    pub fn with_stream(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        LaplaceSampler { rng }
    }

    pub fn sample(&mut self, scale: f64) -> Result<f64> {
        sample_laplace(scale, &mut self.rng)
    }

    /// Noise for a sensitivity-1 query at privacy level `epsilon`.
    pub fn count_noise(&mut self, epsilon: f64) -> Result<f64> {
        check_positive("epsilon", epsilon)?;
        Ok(laplace_unchecked(1.0 / epsilon, &mut self.rng))
    }

    /// Access to the underlying generator for non-noise randomness.
    pub fn rng(&mut self) -> &mut ChaCha20Rng {
        &mut self.rng
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Charge {
    pub label: String,
    pub epsilon: f64,
    pub scope: Vec<u32>,
}

#[derive(Debug, Clone, Copy, Default)]
struct ScopeTotals {
    own: f64,
    /// Largest chain sum strictly below this scope.
    child_max: f64,
}

impl ScopeTotals {
    fn chain(&self) -> f64 {
        self.own + self.child_max
    }
}

/// Privacy budget accountant. Budget exhaustion is an error.
#[derive(Debug, Clone)]
pub struct PrivacyBudget {
    epsilon_total: f64,
    charges: Vec<Charge>,
    scopes: HashMap<Vec<u32>, ScopeTotals>,
}

impl PrivacyBudget {
    pub fn new(epsilon_total: f64) -> Result<Self> {
        check_positive("epsilon_total", epsilon_total)?;
        let mut scopes = HashMap::new();
        scopes.insert(Vec::new(), ScopeTotals::default());
        Ok(PrivacyBudget {
            epsilon_total,
            charges: Vec::new(),
            scopes,
        })
    }

    pub fn epsilon_total(&self) -> f64 {
        self.epsilon_total
    }

    pub fn charges(&self) -> &[Charge] {
        &self.charges
    }

    /// Worst-case spend over all composition chains.
    pub fn spent(&self) -> f64 {
        self.scopes[&Vec::new()].chain()
    }

    pub fn remaining(&self) -> f64 {
        (self.epsilon_total - self.spent()).max(0.0)
    }

    /// Sequential charge against the whole dataset.
    pub fn charge(&mut self, label: impl Into<String>, epsilon: f64) -> Result<()> {
        self.charge_in(&[], label, epsilon)
    }

    /// Charge a query restricted to the records of `scope`.
    pub fn charge_in(&mut self, scope: &[u32], label: impl Into<String>, epsilon: f64) -> Result<()> {
        check_positive("charge", epsilon)?;
        let label = label.into();

        // New chain sum through `scope`, propagated to the root.
        let here = self.scopes.get(scope).copied().unwrap_or_default();
        let mut chain = here.own + epsilon + here.child_max;
        for depth in (0..scope.len()).rev() {
            let anc = self.scopes.get(&scope[..depth]).copied().unwrap_or_default();
            chain = anc.own + anc.child_max.max(chain);
        }
        if chain > self.epsilon_total * (1.0 + BUDGET_SLACK) {
            return Err(Error::BudgetExceeded {
                label,
                charge: epsilon,
                would_spend: chain,
                total: self.epsilon_total,
            });
        }

        let entry = self.scopes.entry(scope.to_vec()).or_default();
        entry.own += epsilon;
        let mut below = entry.chain();
        for depth in (0..scope.len()).rev() {
            let anc = self.scopes.entry(scope[..depth].to_vec()).or_default();
            anc.child_max = anc.child_max.max(below);
            below = anc.chain();
        }
        self.charges.push(Charge {
            label,
            epsilon,
            scope: scope.to_vec(),
        });
        Ok(())
    }
}

/// Laplace mechanism for a counting query: charges `epsilon` to `budget`
/// and returns `true_count + Lap(1/epsilon)`. Nothing is drawn when the
/// charge is rejected.
pub fn noisy_count(
    true_count: u64,
    epsilon: f64,
    budget: &mut PrivacyBudget,
    sampler: &mut LaplaceSampler,
    label: &str,
) -> Result<f64> {
    noisy_count_in(true_count, epsilon, budget, sampler, &[], label)
}

pub fn noisy_count_in(
    true_count: u64,
    epsilon: f64,
    budget: &mut PrivacyBudget,
    sampler: &mut LaplaceSampler,
    scope: &[u32],
    label: &str,
) -> Result<f64> {
    check_positive("epsilon", epsilon)?;
    budget.charge_in(scope, label, epsilon)?;
    Ok(true_count as f64 + sampler.count_noise(epsilon)?)
}

/// Sequential composition: total privacy loss of charges on the same data.
pub fn audit_sequential(charges: &[f64]) -> f64 {
    charges.iter().sum()
}

/// Parallel composition over disjoint groups: the worst group total.
pub fn audit_parallel(group_totals: &[f64]) -> f64 {
    group_totals.iter().copied().fold(0.0, f64::max)
}
