//! Alphabet-constrained string records and dataset files.
//!
//! A dataset file is UTF-8 text with one record per LF-terminated line and no
//! header. The record id is the 0-based line index, so blank lines (and lines
//! that lenient ingestion filters down to nothing) leave gaps in the id space.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Ordered set of distinct symbols. The order fixes child order in the
/// prefix tree and lexicographic tie-breaks everywhere else.
#[derive(Clone, PartialEq, Eq)]
pub struct Alphabet {
    symbols: Vec<char>,
    index: HashMap<char, usize>,
}

impl Alphabet {
    pub fn new(symbols: impl IntoIterator<Item = char>) -> Result<Self> {
        let symbols: Vec<char> = symbols.into_iter().collect();
        if symbols.is_empty() {
            return Err(Error::Alphabet("alphabet must not be empty".into()));
        }
        let mut index = HashMap::with_capacity(symbols.len());
        for (i, &c) in symbols.iter().enumerate() {
            if index.insert(c, i).is_some() {
                return Err(Error::Alphabet(format!("duplicate symbol {c:?}")));
            }
        }
        Ok(Alphabet { symbols, index })
    }

    /// Uppercase `A`..=`Z`, the default for name and city data.
    pub fn uppercase() -> Self {
        Alphabet::new('A'..='Z').expect("A-Z is a valid alphabet")
    }

    pub fn symbols(&self) -> &[char] {
        &self.symbols
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn contains(&self, c: char) -> bool {
        self.index.contains_key(&c)
    }

    pub fn index_of(&self, c: char) -> Option<usize> {
        self.index.get(&c).copied()
    }

    pub fn symbol(&self, i: usize) -> char {
        self.symbols[i]
    }

    /// True when every character of `text` is a symbol.
    pub fn admits(&self, text: &str) -> bool {
        text.chars().all(|c| self.contains(c))
    }

    /// Compares two strings symbol by symbol in alphabet order. Characters
    /// outside the alphabet sort after every symbol, by code point.
    pub fn compare(&self, a: &str, b: &str) -> std::cmp::Ordering {
        let key = |c: char| match self.index_of(c) {
            Some(i) => (0, i as u32),
            None => (1, c as u32),
        };
        a.chars().map(key).cmp(b.chars().map(key))
    }
}

impl Default for Alphabet {
    fn default() -> Self {
        Alphabet::uppercase()
    }
}

impl fmt::Debug for Alphabet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: String = self.symbols.iter().collect();
        f.debug_tuple("Alphabet").field(&s).finish()
    }
}

impl std::str::FromStr for Alphabet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Alphabet::new(s.chars())
    }
}

impl Serialize for Alphabet {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let text: String = self.symbols.iter().collect();
        s.serialize_str(&text)
    }
}

impl<'de> Deserialize<'de> for Alphabet {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RecordId(pub u64);

impl fmt::Display for RecordId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Record {
    pub id: RecordId,
    pub text: String,
}

impl Record {
    pub fn new(id: u64, text: impl Into<String>) -> Self {
        Record {
            id: RecordId(id),
            text: text.into(),
        }
    }

    /// Length in symbols.
    pub fn len(&self) -> usize {
        self.text.chars().count()
    }

    pub fn is_empty(&self) -> bool {
        self.text.is_empty()
    }
}

/// Immutable ordered collection of records with pairwise distinct ids.
/// Duplicate texts are allowed.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Dataset {
    records: Vec<Record>,
}

impl Dataset {
    pub fn new(records: Vec<Record>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(records.len());
        for r in &records {
            if !seen.insert(r.id) {
                return Err(Error::DuplicateId(r.id.0));
            }
        }
        Ok(Dataset { records })
    }

    /// Assigns ids `0..n` in iteration order.
    pub fn from_texts<I, S>(texts: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let records = texts
            .into_iter()
            .enumerate()
            .map(|(i, t)| Record::new(i as u64, t))
            .collect();
        Dataset { records }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Record> {
        self.records.iter()
    }

    pub fn texts(&self) -> impl Iterator<Item = &str> {
        self.records.iter().map(|r| r.text.as_str())
    }

    pub fn ids(&self) -> impl Iterator<Item = RecordId> + '_ {
        self.records.iter().map(|r| r.id)
    }

    /// Mean record length in symbols; 0 for an empty dataset.
    pub fn average_length(&self) -> f64 {
        if self.records.is_empty() {
            return 0.0;
        }
        let total: usize = self.records.iter().map(Record::len).sum();
        total as f64 / self.records.len() as f64
    }

    /// First `n` records (all of them when `n >= len`).
    pub fn take(&self, n: usize) -> Dataset {
        Dataset {
            records: self.records.iter().take(n).cloned().collect(),
        }
    }

    /// Checks that every record is non-empty and drawn from `alphabet`.
    pub fn validate(&self, alphabet: &Alphabet) -> Result<()> {
        for r in &self.records {
            if r.text.is_empty() {
                return Err(Error::invalid(format!("record {} is empty", r.id)));
            }
            if let Some(ch) = r.text.chars().find(|&c| !alphabet.contains(c)) {
                return Err(Error::Alphabet(format!(
                    "record {} contains {ch:?} outside the alphabet",
                    r.id
                )));
            }
        }
        Ok(())
    }
}

impl<'a> IntoIterator for &'a Dataset {
    type Item = &'a Record;
    type IntoIter = std::slice::Iter<'a, Record>;

    fn into_iter(self) -> Self::IntoIter {
        self.records.iter()
    }
}

/// How characters outside the alphabet are handled on load.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Ingest {
    /// Reject the file, reporting the 1-based line number.
    #[default]
    Strict,
    /// Uppercase, then drop characters that are still outside the alphabet.
    Lenient,
}

pub fn load_dataset(path: impl AsRef<Path>, alphabet: &Alphabet, mode: Ingest) -> Result<Dataset> {
    let path = path.as_ref();
    let raw = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut records = Vec::new();
    for (idx, line) in raw.lines().enumerate() {
        let line = line.strip_suffix('\r').unwrap_or(line);
        let text: String = match mode {
            Ingest::Strict => {
                if let Some(ch) = line.chars().find(|&c| !alphabet.contains(c)) {
                    return Err(Error::AlphabetViolation {
                        path: path.to_path_buf(),
                        line: idx + 1,
                        ch,
                    });
                }
                line.to_string()
            }
            Ingest::Lenient => line
                .chars()
                .flat_map(char::to_uppercase)
                .filter(|&c| alphabet.contains(c))
                .collect(),
        };
        if !text.is_empty() {
            records.push(Record::new(idx as u64, text));
        }
    }
    Ok(Dataset { records })
}

/// Writes one record per line. Ids are not stored; a reload assigns line
/// indices, which matches the original ids only for gap-free datasets.
pub fn write_dataset(path: impl AsRef<Path>, dataset: &Dataset) -> Result<()> {
    let path = path.as_ref();
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = fs::File::create(path).map_err(io_err)?;
    let mut out = BufWriter::new(file);
    for r in dataset {
        writeln!(out, "{}", r.text).map_err(io_err)?;
    }
    out.flush().map_err(io_err)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_tmp(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn alphabet_rejects_empty_and_duplicates() {
        assert!(Alphabet::new([]).is_err());
        assert!(Alphabet::new("ABA".chars()).is_err());
        assert_eq!(Alphabet::uppercase().len(), 26);
    }

    #[test]
    fn alphabet_order_drives_comparison() {
        let rev: Alphabet = "CBA".parse().unwrap();
        assert_eq!(rev.compare("C", "A"), std::cmp::Ordering::Less);
        assert_eq!(rev.compare("CA", "C"), std::cmp::Ordering::Greater);
        let up = Alphabet::uppercase();
        assert_eq!(up.compare("AB", "B"), std::cmp::Ordering::Less);
    }

    #[test]
    fn load_assigns_line_ids() {
        let f = write_tmp("ANNA\nMARIA\n");
        let ds = load_dataset(f.path(), &Alphabet::uppercase(), Ingest::Strict).unwrap();
        assert_eq!(ds.len(), 2);
        let ids: Vec<u64> = ds.ids().map(|i| i.0).collect();
        assert_eq!(ids, vec![0, 1]);
        assert_eq!(ds.records()[1].text, "MARIA");
    }

    #[test]
    fn strict_mode_reports_line() {
        let f = write_tmp("ann a\n");
        let err = load_dataset(f.path(), &Alphabet::uppercase(), Ingest::Strict).unwrap_err();
        match err {
            Error::AlphabetViolation { line, ch, .. } => {
                assert_eq!(line, 1);
                assert_eq!(ch, 'a');
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn lenient_mode_uppercases_and_filters() {
        let f = write_tmp("ann a\nst. louis\r\n\n");
        let ds = load_dataset(f.path(), &Alphabet::uppercase(), Ingest::Lenient).unwrap();
        let texts: Vec<&str> = ds.texts().collect();
        assert_eq!(texts, vec!["ANNA", "STLOUIS"]);
    }

    #[test]
    fn empty_file_is_empty_dataset() {
        let f = write_tmp("");
        let ds = load_dataset(f.path(), &Alphabet::uppercase(), Ingest::Strict).unwrap();
        assert!(ds.is_empty());
    }

    #[test]
    fn duplicate_ids_rejected_duplicate_texts_allowed() {
        assert!(Dataset::new(vec![Record::new(1, "A"), Record::new(1, "B")]).is_err());
        let ds = Dataset::new(vec![Record::new(0, "A"), Record::new(1, "A")]).unwrap();
        assert_eq!(ds.len(), 2);
    }

    #[test]
    fn write_then_load() {
        let ds = Dataset::from_texts(["SPRINGFIELD", "AUSTIN"]);
        let f = tempfile::NamedTempFile::new().unwrap();
        write_dataset(f.path(), &ds).unwrap();
        let back = load_dataset(f.path(), &Alphabet::uppercase(), Ingest::Strict).unwrap();
        assert_eq!(back, ds);
    }
}
