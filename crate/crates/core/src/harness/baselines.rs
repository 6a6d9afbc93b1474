//! Data-independent comparison points: random gram bases and the Lipschitz
//! embedding over random reference sets.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;

use crate::embedding::{EmbeddedVector, GramBase};
use crate::error::{Error, Result};
use crate::records::{Alphabet, Dataset};
use crate::strings::{edit_distance_chars, Gram};

/// Number of distinct grams with lengths in `q_min..=q_max`, saturating.
pub fn gram_space_size(alphabet_len: usize, q_min: usize, q_max: usize) -> usize {
    (q_min..=q_max)
        .map(|q| (alphabet_len as u128).saturating_pow(q as u32))
        .fold(0u128, u128::saturating_add)
        .min(usize::MAX as u128) as usize
}

fn random_string<R: Rng + ?Sized>(len: usize, alphabet: &Alphabet, rng: &mut R) -> String {
    let symbols = alphabet.symbols();
    (0..len).map(|_| symbols[rng.gen_range(0..symbols.len())]).collect()
}

/// `k` distinct grams, each with a uniform length in `q_min..=q_max` and
/// uniform symbols. Order is draw order.
pub fn random_base<R: Rng + ?Sized>(
    k: usize,
    q_min: usize,
    q_max: usize,
    alphabet: &Alphabet,
    rng: &mut R,
) -> Result<GramBase> {
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    if q_min == 0 || q_min > q_max {
        return Err(Error::invalid("need 1 <= q_min <= q_max"));
    }
    let space = gram_space_size(alphabet.len(), q_min, q_max);
    if k > space {
        return Err(Error::invalid(format!("cannot draw {k} distinct grams from {space}")));
    }
    // Lengths whose grams are all taken are dropped from the draw.
    let mut lengths: Vec<usize> = (q_min..=q_max).collect();
    let mut taken_per_length = vec![0usize; q_max + 1];
    let mut seen = HashSet::with_capacity(k);
    let mut grams = Vec::with_capacity(k);
    while grams.len() < k {
        let q = *lengths.choose(rng).expect("some length has room left");
        let g = random_string(q, alphabet, rng);
        if seen.insert(g.clone()) {
            taken_per_length[q] += 1;
            if taken_per_length[q] == gram_space_size(alphabet.len(), q, q) {
                lengths.retain(|&l| l != q);
            }
            grams.push(Gram::new(g));
        }
    }
    GramBase::new(grams)
}

/// Reference sets for the Lipschitz embedding.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceSets {
    pub sets: Vec<Vec<String>>,
}

impl ReferenceSets {
    pub const POOL_SIZE: usize = 1000;
    pub const STRING_LEN: usize = 10;
    pub const DEFAULT_DIM: usize = 12;

    /// `dim` sets sampled without replacement from a pool of 1000 random
    /// strings of length 10; set sizes cycle through 1, 2, 4, 8.
    pub fn random<R: Rng + ?Sized>(dim: usize, alphabet: &Alphabet, rng: &mut R) -> Self {
        let pool: Vec<String> = (0..Self::POOL_SIZE)
            .map(|_| random_string(Self::STRING_LEN, alphabet, rng))
            .collect();
        let sets = (0..dim)
            .map(|i| {
                let size = 1usize << (i % 4);
                pool.choose_multiple(rng, size).cloned().collect()
            })
            .collect();
        ReferenceSets { sets }
    }

    pub fn dim(&self) -> usize {
        self.sets.len()
    }
}

/// Coordinate `i` is the smallest edit distance from the record to any
/// member of set `i`.
pub fn lipschitz_embed(dataset: &Dataset, reference: &ReferenceSets) -> Result<Vec<EmbeddedVector>> {
    if reference.sets.iter().any(Vec::is_empty) {
        return Err(Error::invalid("reference sets must be non-empty"));
    }
    let sets: Vec<Vec<Vec<char>>> = reference
        .sets
        .iter()
        .map(|s| s.iter().map(|x| x.chars().collect()).collect())
        .collect();
    Ok(dataset
        .records()
        .par_iter()
        .map(|r| {
            let s: Vec<char> = r.text.chars().collect();
            let coordinates = sets
                .iter()
                .map(|set| {
                    set.iter()
                        .map(|x| edit_distance_chars(&s, x))
                        .min()
                        .expect("non-empty set") as f64
                })
                .collect();
            EmbeddedVector {
                record_id: r.id,
                coordinates,
            }
        })
        .collect())
}
