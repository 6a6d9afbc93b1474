//! Deterministic generator of place-name-like strings over `A`..=`Z`.
//!
//! Names are built from weighted syllables with optional place-name prefixes
//! and suffixes, so gram frequencies are skewed the way real name lists are.
//! Output is duplicate-free.

use std::collections::HashSet;

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::records::Dataset;

const ONSETS: &[(&str, u32)] = &[
    ("B", 8),
    ("C", 7),
    ("D", 6),
    ("F", 4),
    ("G", 5),
    ("H", 6),
    ("J", 2),
    ("K", 3),
    ("L", 8),
    ("M", 9),
    ("N", 6),
    ("P", 5),
    ("R", 8),
    ("S", 9),
    ("T", 7),
    ("V", 3),
    ("W", 5),
    ("Y", 1),
    ("Z", 1),
    ("BR", 3),
    ("CH", 3),
    ("CL", 2),
    ("CR", 2),
    ("DR", 1),
    ("FR", 2),
    ("GR", 3),
    ("PL", 2),
    ("SH", 3),
    ("ST", 3),
    ("TR", 2),
    ("WH", 1),
    ("TH", 2),
    ("", 6),
];

const VOWELS: &[(&str, u32)] = &[
    ("A", 16),
    ("E", 14),
    ("I", 9),
    ("O", 11),
    ("U", 4),
    ("EA", 2),
    ("OU", 2),
    ("AI", 1),
    ("EE", 1),
    ("OO", 1),
    ("IA", 1),
    ("Y", 1),
];

const CODAS: &[(&str, u32)] = &[
    ("", 20),
    ("N", 9),
    ("R", 7),
    ("L", 6),
    ("S", 4),
    ("T", 3),
    ("M", 2),
    ("RD", 1),
    ("ND", 2),
    ("NT", 1),
    ("LL", 2),
    ("SS", 1),
    ("CK", 1),
    ("X", 1),
    ("RT", 1),
];

const PREFIXES: &[(&str, u32)] = &[
    ("NEW", 5),
    ("LAKE", 3),
    ("FORT", 3),
    ("SAINT", 2),
    ("SAN", 4),
    ("EAST", 3),
    ("WEST", 3),
    ("NORTH", 3),
    ("SOUTH", 3),
    ("MOUNT", 2),
    ("PORT", 2),
    ("GLEN", 2),
    ("LOS", 1),
    ("EL", 1),
    ("LA", 2),
    ("GREEN", 2),
    ("SPRING", 1),
    ("RED", 1),
    ("CEDAR", 1),
    ("OAK", 1),
];

const SUFFIXES: &[(&str, u32)] = &[
    ("VILLE", 8),
    ("TON", 10),
    ("BURG", 4),
    ("FIELD", 4),
    ("WOOD", 4),
    ("PORT", 2),
    ("DALE", 3),
    ("SPRINGS", 2),
    ("CITY", 3),
    ("LAND", 3),
    ("FORD", 3),
    ("HAVEN", 2),
    ("MONT", 2),
    ("BURY", 2),
    ("STON", 2),
    ("BORO", 1),
    ("VIEW", 2),
    ("RIDGE", 2),
    ("CREEK", 2),
    ("WELL", 1),
    ("HILL", 2),
    ("TOWN", 3),
    ("DON", 1),
    ("IA", 2),
    ("ER", 2),
    ("LEY", 3),
    ("SON", 3),
    ("ING", 2),
    ("ON", 3),
    ("A", 4),
    ("O", 2),
    ("ES", 2),
];

struct Table {
    items: Vec<&'static str>,
    dist: WeightedIndex<u32>,
}

impl Table {
    fn new(entries: &[(&'static str, u32)]) -> Self {
        Table {
            items: entries.iter().map(|e| e.0).collect(),
            dist: WeightedIndex::new(entries.iter().map(|e| e.1)).expect("positive weights"),
        }
    }

    fn pick<R: Rng + ?Sized>(&self, rng: &mut R) -> &'static str {
        self.items[self.dist.sample(rng)]
    }
}

pub const MIN_LEN: usize = 3;
pub const MAX_LEN: usize = 23;

pub struct NameGenerator {
    rng: ChaCha20Rng,
    onsets: Table,
    vowels: Table,
    codas: Table,
    prefixes: Table,
    suffixes: Table,
    seen: HashSet<String>,
}

impl NameGenerator {
    pub fn new(seed: u64) -> Self {
        NameGenerator {
            rng: ChaCha20Rng::seed_from_u64(seed),
            onsets: Table::new(ONSETS),
            vowels: Table::new(VOWELS),
            codas: Table::new(CODAS),
            prefixes: Table::new(PREFIXES),
            suffixes: Table::new(SUFFIXES),
            seen: HashSet::new(),
        }
    }

    fn syllable(&mut self) -> String {
        let mut s = String::new();
        s.push_str(self.onsets.pick(&mut self.rng));
        s.push_str(self.vowels.pick(&mut self.rng));
        s.push_str(self.codas.pick(&mut self.rng));
        s
    }

    fn candidate(&mut self) -> String {
        let mut name = String::new();
        if self.rng.gen_bool(0.12) {
            name.push_str(self.prefixes.pick(&mut self.rng));
        }
        let syllables = *[1, 1, 2, 2, 2, 3].get(self.rng.gen_range(0..6)).unwrap_or(&2);
        for _ in 0..syllables {
            name.push_str(&self.syllable());
        }
        if self.rng.gen_bool(0.45) {
            name.push_str(self.suffixes.pick(&mut self.rng));
        }
        name
    }

    /// Next unseen name with length in `MIN_LEN..=MAX_LEN`.
    pub fn next_name(&mut self) -> String {
        loop {
            let name = self.candidate();
            if (MIN_LEN..=MAX_LEN).contains(&name.len()) && self.seen.insert(name.clone()) {
                return name;
            }
        }
    }
}

/// `n` distinct place-like names with ids `0..n`.
pub fn synthetic_places(n: usize, seed: u64) -> Dataset {
    let mut generator = NameGenerator::new(seed);
    let names: Vec<String> = (0..n).map(|_| generator.next_name()).collect();
    Dataset::from_texts(names.iter().map(String::as_str))
}
