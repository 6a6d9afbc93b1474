//! Gram-projection embedding and per-record matching thresholds.
//!
//! A string `s` maps to the vector whose i-th coordinate is the number of
//! (overlapping) occurrences of base gram `g_i` in `s`, divided by `|g_i|`.
//! Vectors are compared with the Euclidean distance.
//!
//! The personalized threshold of `s` estimates how far its vector can move
//! under `ed` edits. `D[i]` is the squared weight of the base grams that
//! overlap position `i`; `P[i]` is the closest earlier position that no
//! single occurrence connects to `i`. A dynamic program picks at most `ed`
//! pairwise compatible positions maximizing the sum of `D`, and the
//! threshold is the square root of that maximum.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mining::ScoredGram;
use crate::records::{Dataset, Record, RecordId};
use crate::strings::Gram;

/// Ordered, duplicate-free list of grams; position `i` is coordinate `i`.
#[derive(Debug, Clone)]
pub struct GramBase {
    grams: Vec<Gram>,
    index: HashMap<Vec<char>, usize>,
    /// Distinct gram lengths, ascending.
    lengths: Vec<usize>,
}

impl PartialEq for GramBase {
    fn eq(&self, other: &Self) -> bool {
        self.grams == other.grams
    }
}

impl GramBase {
    pub fn new(grams: Vec<Gram>) -> Result<Self> {
        if grams.is_empty() {
            return Err(Error::EmptyBase("a base needs at least one gram".into()));
        }
        let mut index = HashMap::with_capacity(grams.len());
        let mut lengths = HashSet::new();
        for (i, g) in grams.iter().enumerate() {
            if g.is_empty() {
                return Err(Error::invalid("base grams must be non-empty"));
            }
            let key: Vec<char> = g.as_str().chars().collect();
            lengths.insert(key.len());
            if index.insert(key, i).is_some() {
                return Err(Error::invalid(format!("duplicate gram {g} in base")));
            }
        }
        let mut lengths: Vec<usize> = lengths.into_iter().collect();
        lengths.sort_unstable();
        Ok(GramBase { grams, index, lengths })
    }

    /// Keeps the mined order.
    pub fn from_scored(grams: &[ScoredGram]) -> Result<Self> {
        GramBase::new(grams.iter().map(|g| g.gram.clone()).collect())
    }

    pub fn grams(&self) -> &[Gram] {
        &self.grams
    }

    pub fn len(&self) -> usize {
        self.grams.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grams.is_empty()
    }

    pub fn position(&self, gram: &str) -> Option<usize> {
        let key: Vec<char> = gram.chars().collect();
        self.index.get(&key).copied()
    }

    /// Every occurrence of a base gram in `chars` as `(start, length, coordinate)`.
    fn occurrences_in(&self, chars: &[char]) -> Vec<(usize, usize, usize)> {
        let mut out = Vec::new();
        for start in 0..chars.len() {
            for &len in &self.lengths {
                let Some(window) = chars.get(start..start + len) else {
                    break;
                };
                if let Some(&coord) = self.index.get(window) {
                    out.push((start, len, coord));
                }
            }
        }
        out
    }

    /// One gram per line, in coordinate order.
    pub fn to_lines(&self) -> String {
        let mut s = String::new();
        for g in &self.grams {
            let _ = writeln!(s, "{g}");
        }
        s
    }

    pub fn parse_lines(text: &str) -> Result<Self> {
        GramBase::new(
            text.lines()
                .map(|l| l.strip_suffix('\r').unwrap_or(l))
                .filter(|l| !l.is_empty())
                .map(Gram::from)
                .collect(),
        )
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        GramBase::parse_lines(&text)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_lines()).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddedVector {
    pub record_id: RecordId,
    pub coordinates: Vec<f64>,
}

impl EmbeddedVector {
    pub fn dim(&self) -> usize {
        self.coordinates.len()
    }
}

/// Coordinates of `text` over `base`.
pub fn embed(text: &str, base: &GramBase) -> Vec<f64> {
    let chars: Vec<char> = text.chars().collect();
    let mut counts = vec![0usize; base.len()];
    for (_, _, coord) in base.occurrences_in(&chars) {
        counts[coord] += 1;
    }
    counts
        .iter()
        .zip(base.grams())
        .map(|(&c, g)| c as f64 / g.len() as f64)
        .collect()
}

pub fn embed_record(record: &Record, base: &GramBase) -> EmbeddedVector {
    EmbeddedVector {
        record_id: record.id,
        coordinates: embed(&record.text, base),
    }
}

/// Embeds every record, in dataset order. Records are processed in parallel.
pub fn embed_dataset(dataset: &Dataset, base: &GramBase) -> Vec<EmbeddedVector> {
    dataset.records().par_iter().map(|r| embed_record(r, base)).collect()
}

pub fn embed_dataset_sequential(dataset: &Dataset, base: &GramBase) -> Vec<EmbeddedVector> {
    dataset.iter().map(|r| embed_record(r, base)).collect()
}

pub fn squared_distance(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// Euclidean distance between two embedded vectors.
pub fn distance(x: &EmbeddedVector, y: &EmbeddedVector) -> Result<f64> {
    if x.dim() != y.dim() {
        return Err(Error::DimensionMismatch {
            left: x.dim(),
            right: y.dim(),
        });
    }
    Ok(squared_distance(&x.coordinates, &y.coordinates).sqrt())
}

/// Global bound `(q_max - q_min + 1) * ed` on the embedded distance of two
/// strings within `ed` edits.
pub fn global_threshold_bound(q_min: usize, q_max: usize, ed: usize) -> f64 {
    ((q_max + 1).saturating_sub(q_min) * ed) as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdTables {
    pub d: Vec<f64>,
    /// `-1` when no earlier position is compatible.
    pub p: Vec<isize>,
}

pub fn threshold_tables(s: &str, base: &GramBase) -> ThresholdTables {
    let chars: Vec<char> = s.chars().collect();
    let n = chars.len();
    let mut occ = base.occurrences_in(&chars);
    let mut d = vec![0.0; n];
    let mut p: Vec<isize> = (0..n as isize).map(|i| i - 1).collect();

    // Group by gram so each gram counts once per covered position.
    occ.sort_by_key(|&(start, _, coord)| (coord, start));
    let mut marked: Vec<usize> = vec![usize::MAX; n];
    for &(start, len, coord) in &occ {
        let weight = 1.0 / (len * len) as f64;
        for pos in start..start + len {
            if marked[pos] != coord {
                marked[pos] = coord;
                d[pos] += weight;
            }
            if pos > start {
                p[pos] = p[pos].min(start as isize - 1);
            }
        }
    }
    ThresholdTables { d, p }
}

/// `sqrt(T[ed][|s|-1])` with `T[0][·] = 0`, `T[·][-1] = 0` and
/// `T[i][j] = max(T[i][j-1], T[i-1][P[j]] + D[j])`.
pub fn personalized_threshold(tables: &ThresholdTables, ed: usize) -> f64 {
    let n = tables.d.len();
    if ed == 0 || n == 0 {
        return 0.0;
    }
    let mut prev = vec![0.0f64; n];
    let mut cur = vec![0.0f64; n];
    for _ in 1..=ed {
        for j in 0..n {
            let skip = if j > 0 { cur[j - 1] } else { 0.0 };
            let before = match tables.p[j] {
                p if p >= 0 => prev[p as usize],
                _ => 0.0,
            };
            cur[j] = skip.max(before + tables.d[j]);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[n - 1].sqrt()
}

pub fn threshold_for(s: &str, base: &GramBase, ed: usize) -> f64 {
    personalized_threshold(&threshold_tables(s, base), ed)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSet {
    pub ed: usize,
    pub ids: Vec<RecordId>,
    pub values: Vec<f64>,
}

impl ThresholdSet {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

pub fn thresholds_for_dataset(dataset: &Dataset, base: &GramBase, ed: usize) -> ThresholdSet {
    let values = dataset
        .records()
        .par_iter()
        .map(|r| threshold_for(&r.text, base, ed))
        .collect();
    ThresholdSet {
        ed,
        ids: dataset.ids().collect(),
        values,
    }
}

/// Rows of `id \t c_1 \t … \t c_k`.
pub fn vectors_to_tsv(vectors: &[EmbeddedVector]) -> String {
    let mut out = String::new();
    for v in vectors {
        let _ = write!(out, "{}", v.record_id);
        for c in &v.coordinates {
            let _ = write!(out, "\t{c}");
        }
        out.push('\n');
    }
    out
}

pub fn vectors_from_tsv(text: &str) -> Result<Vec<EmbeddedVector>> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split('\t');
        let bad = |what: &str| Error::invalid(format!("vector line {}: bad {what}", n + 1));
        let id: u64 = fields.next().and_then(|f| f.parse().ok()).ok_or_else(|| bad("id"))?;
        let coordinates = fields
            .map(|f| f.parse::<f64>().map_err(|_| bad("coordinate")))
            .collect::<Result<Vec<_>>>()?;
        out.push(EmbeddedVector {
            record_id: RecordId(id),
            coordinates,
        });
    }
    Ok(out)
}
