//! Frequent variable-length gram mining.
//!
//! Two private miners share one output type: [`fpm`] runs one truncated,
//! noise-perturbed top-k selection per gram length, and [`ptree`] grows a
//! noisy prefix tree once and extracts grams from it. [`exact_top_k`] is the
//! non-private reference both are compared against.

pub mod fpm;
pub mod ptree;

use std::cmp::Ordering;
use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::records::Dataset;
use crate::strings::Gram;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredGram {
    pub gram: Gram,
    pub noisy_frequency: f64,
}

impl ScoredGram {
    pub fn new(gram: impl Into<Gram>, noisy_frequency: f64) -> Self {
        ScoredGram {
            gram: gram.into(),
            noisy_frequency,
        }
    }
}

/// Higher frequency first, then lexicographic gram order.
pub fn rank_order(a: &ScoredGram, b: &ScoredGram) -> Ordering {
    b.noisy_frequency
        .total_cmp(&a.noisy_frequency)
        .then_with(|| a.gram.cmp(&b.gram))
}

/// Sorts by [`rank_order`] and keeps the first `k`.
pub fn top_k(mut grams: Vec<ScoredGram>, k: usize) -> Vec<ScoredGram> {
    grams.sort_by(rank_order);
    grams.truncate(k);
    grams
}

/// Record-level support of every length-`q` gram present in `dataset`: the
/// number of records containing the gram at least once.
pub fn supports_of_length(dataset: &Dataset, q: usize) -> HashMap<String, usize> {
    let mut counts: HashMap<String, usize> = HashMap::new();
    if q == 0 {
        return counts;
    }
    for record in dataset {
        let chars: Vec<char> = record.text.chars().collect();
        if chars.len() < q {
            continue;
        }
        let distinct: HashSet<&[char]> = chars.windows(q).collect();
        for w in distinct {
            *counts.entry(w.iter().collect()).or_insert(0) += 1;
        }
    }
    counts
}

/// Non-private miner: the `k` grams with the highest record-level support
/// over lengths `q_min..=q_max`.
pub fn exact_top_k(dataset: &Dataset, q_min: usize, q_max: usize, k: usize) -> Vec<ScoredGram> {
    let mut all = Vec::new();
    for q in q_min..=q_max {
        all.extend(
            supports_of_length(dataset, q)
                .into_iter()
                .map(|(g, c)| ScoredGram::new(g, c as f64)),
        );
    }
    top_k(all, k)
}
