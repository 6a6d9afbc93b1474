//! Random corruption of a dataset by edit operations.

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::records::{Alphabet, Dataset, Record};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EditOp {
    Substitute,
    Insert,
    Delete,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PerturbationSpec {
    pub ed: usize,
    pub seed: u64,
    /// Relative weights of substitution, insertion and deletion.
    pub weights: [f64; 3],
    /// Apply exactly `ed` edits per record; otherwise a uniform count in
    /// `0..=ed`.
    pub exact: bool,
}

impl Default for PerturbationSpec {
    fn default() -> Self {
        PerturbationSpec {
            ed: 1,
            seed: 1,
            weights: [1.0, 1.0, 1.0],
            exact: true,
        }
    }
}

impl PerturbationSpec {
    pub fn new(ed: usize, seed: u64) -> Self {
        PerturbationSpec {
            ed,
            seed,
            ..PerturbationSpec::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::invalid("edit weights must be non-negative"));
        }
        if self.weights.iter().all(|w| *w == 0.0) {
            return Err(Error::invalid("edit weights must not all be zero"));
        }
        Ok(())
    }
}

/// Applies one random edit in place. Deleting the only symbol becomes a
/// substitution so the string stays non-empty.
pub fn apply_edit<R: Rng + ?Sized>(chars: &mut Vec<char>, op: EditOp, alphabet: &Alphabet, rng: &mut R) {
    let op = if op == EditOp::Delete && chars.len() <= 1 {
        EditOp::Substitute
    } else {
        op
    };
    let symbols = alphabet.symbols();
    match op {
        EditOp::Insert => {
            let at = rng.gen_range(0..=chars.len());
            chars.insert(at, symbols[rng.gen_range(0..symbols.len())]);
        }
        EditOp::Delete => {
            chars.remove(rng.gen_range(0..chars.len()));
        }
        EditOp::Substitute => {
            if chars.is_empty() {
                chars.push(symbols[rng.gen_range(0..symbols.len())]);
                return;
            }
            let at = rng.gen_range(0..chars.len());
            if symbols.len() == 1 {
                chars[at] = symbols[0];
                return;
            }
            // Uniform over the symbols other than the current one.
            let current = alphabet.index_of(chars[at]);
            let mut pick = rng.gen_range(0..symbols.len() - usize::from(current.is_some()));
            if let Some(c) = current {
                if pick >= c {
                    pick += 1;
                }
            }
            chars[at] = symbols[pick];
        }
    }
}

/// Corrupts every record with random edits, keeping its id.
pub fn perturb_dataset(dataset: &Dataset, alphabet: &Alphabet, spec: &PerturbationSpec) -> Result<Dataset> {
    spec.validate()?;
    let mut rng = ChaCha20Rng::seed_from_u64(spec.seed);
    let ops = [EditOp::Substitute, EditOp::Insert, EditOp::Delete];
    let mix = WeightedIndex::new(spec.weights).map_err(|e| Error::invalid(e.to_string()))?;
    let records = dataset
        .iter()
        .map(|r| {
            let mut chars: Vec<char> = r.text.chars().collect();
            let edits = if spec.exact {
                spec.ed
            } else {
                rng.gen_range(0..=spec.ed)
            };
            for _ in 0..edits {
                apply_edit(&mut chars, ops[mix.sample(&mut rng)], alphabet, &mut rng);
            }
            Record::new(r.id.0, chars.into_iter().collect::<String>())
        })
        .collect();
    Dataset::new(records)
}
