//! Grams, occurrence positions and edit distance.
//!
//! Positions and lengths are counted in symbols (`char`s), not bytes.

use std::fmt;

use serde::{Deserialize, Serialize};

/// A contiguous substring used as a base coordinate.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Gram(String);

impl Gram {
    pub fn new(text: impl Into<String>) -> Self {
        Gram(text.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Length in symbols.
    pub fn len(&self) -> usize {
        self.0.chars().count()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_string(self) -> String {
        self.0
    }
}

impl fmt::Display for Gram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Gram {
    fn from(s: &str) -> Self {
        Gram::new(s)
    }
}

impl From<String> for Gram {
    fn from(s: String) -> Self {
        Gram(s)
    }
}

impl AsRef<str> for Gram {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

/// Levenshtein distance with unit-cost substitution, insertion and deletion.
pub fn edit_distance(x: &str, y: &str) -> usize {
    let a: Vec<char> = x.chars().collect();
    let b: Vec<char> = y.chars().collect();
    edit_distance_chars(&a, &b)
}

pub fn edit_distance_chars(a: &[char], b: &[char]) -> usize {
    if a.is_empty() {
        return b.len();
    }
    if b.is_empty() {
        return a.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, &ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, &cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Start positions of every (possibly overlapping) occurrence of `g` in `s`,
/// in increasing order. Empty when `g` is longer than `s` or empty.
pub fn occurrences(s: &str, g: &str) -> Vec<usize> {
    let s: Vec<char> = s.chars().collect();
    let g: Vec<char> = g.chars().collect();
    occurrences_chars(&s, &g)
}

pub fn occurrences_chars(s: &[char], g: &[char]) -> Vec<usize> {
    if g.is_empty() || g.len() > s.len() {
        return Vec::new();
    }
    s.windows(g.len())
        .enumerate()
        .filter(|(_, w)| *w == g)
        .map(|(i, _)| i)
        .collect()
}
