//! Brute-force reference implementations shared by the integration tests,
//! plus the checks behind the acceptance report.
#![allow(dead_code)]

use std::collections::{BTreeSet, HashSet};

use gramlink::dp::{laplace_cdf, noisy_count, LaplaceSampler, PrivacyBudget};
use gramlink::embedding::{embed, global_threshold_bound, squared_distance, threshold_for, GramBase};
use gramlink::mining::fpm::{fpm_mine, MinerConfig};
use gramlink::mining::ptree::{build_tree, enforce_consistency, Allocation, PrefixTree, TreeConfig};
use gramlink::records::{Alphabet, Dataset};
use gramlink::strings::Gram;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

pub const SAMPLE: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/data/places_2000.txt");

pub fn rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

pub fn base(grams: &[&str]) -> GramBase {
    GramBase::new(grams.iter().map(|g| Gram::from(*g)).collect()).unwrap()
}

pub fn random_text<R: Rng>(rng: &mut R, symbols: &[char], len: usize) -> String {
    (0..len).map(|_| *symbols.choose(rng).unwrap()).collect()
}

/// Two small datasets whose merged top-5 grams over lengths 1..=2 are
/// exactly {M, A, MA, E, O}, with a gap of four to the sixth gram. Records
/// 6 and 7 of the first are the only ones starting with "AL".
pub fn toy_pair() -> (Dataset, Dataset) {
    let a = Dataset::from_texts(["MAEVA", "MATEO", "EMMA", "NOEMA", "MARCO", "ROMEO", "ALMA", "ALEMAO"]);
    let b = Dataset::from_texts(["MAEVA", "MATTEO", "EMMA", "NOEMI", "MARCO", "ROMEO", "ALMAS", "ALEMAO"]);
    (a, b)
}

// ---------------------------------------------------------------------------
// Embedding and threshold oracles

/// Window scan: occurrences of each gram (overlaps included) over its length.
pub fn naive_embed(s: &str, grams: &[Gram]) -> Vec<f64> {
    let chars: Vec<char> = s.chars().collect();
    grams
        .iter()
        .map(|g| {
            let g: Vec<char> = g.as_str().chars().collect();
            let hits = (0..chars.len())
                .filter(|&i| chars.len() >= i + g.len() && chars[i..i + g.len()] == g[..])
                .count();
            hits as f64 / g.len() as f64
        })
        .collect()
}

/// Every occurrence of a base gram as a closed interval `(first, last, gram)`.
pub fn occurrence_intervals(s: &str, grams: &[Gram]) -> Vec<(usize, usize, usize)> {
    let chars: Vec<char> = s.chars().collect();
    let mut out = Vec::new();
    for (gi, g) in grams.iter().enumerate() {
        let g: Vec<char> = g.as_str().chars().collect();
        for i in 0..chars.len() {
            if chars.len() >= i + g.len() && chars[i..i + g.len()] == g[..] {
                out.push((i, i + g.len() - 1, gi));
            }
        }
    }
    out
}

/// Maximum of `sum D` over sets of at most `ed` positions no two of which
/// lie in one common occurrence, by exhaustive enumeration; square-rooted.
pub fn brute_threshold(s: &str, grams: &[Gram], ed: usize) -> f64 {
    let n = s.chars().count();
    let occ = occurrence_intervals(s, grams);
    let d: Vec<f64> = (0..n)
        .map(|pos| {
            let covering: HashSet<usize> = occ
                .iter()
                .filter(|&&(lo, hi, _)| lo <= pos && pos <= hi)
                .map(|o| o.2)
                .collect();
            covering
                .iter()
                .map(|&gi| {
                    let len = grams[gi].len() as f64;
                    1.0 / (len * len)
                })
                .sum()
        })
        .collect();
    let compatible = |i: usize, j: usize| !occ.iter().any(|&(lo, hi, _)| lo <= i.min(j) && i.max(j) <= hi);

    fn search(start: usize, left: usize, chosen: &mut Vec<usize>, d: &[f64], ok: &dyn Fn(usize, usize) -> bool) -> f64 {
        let mut best = chosen.iter().map(|&i| d[i]).sum::<f64>();
        if left == 0 {
            return best;
        }
        for j in start..d.len() {
            if chosen.iter().all(|&i| ok(i, j)) {
                chosen.push(j);
                best = best.max(search(j + 1, left - 1, chosen, d, ok));
                chosen.pop();
            }
        }
        best
    }
    search(0, ed, &mut Vec::new(), &d, &compatible).sqrt()
}

/// All strings over `symbols` with length in `0..=max_len`.
pub fn all_strings(symbols: &[char], max_len: usize) -> Vec<String> {
    let mut out = vec![String::new()];
    let mut layer = vec![String::new()];
    for _ in 0..max_len {
        layer = layer
            .iter()
            .flat_map(|s| symbols.iter().map(move |&c| format!("{s}{c}")))
            .collect();
        out.extend(layer.iter().cloned());
    }
    out
}

/// All non-empty subsets of `pool` with at most `max` elements.
pub fn subsets<'a>(pool: &[&'a str], max: usize) -> Vec<Vec<&'a str>> {
    let mut out = Vec::new();
    for mask in 1u32..(1 << pool.len()) {
        if mask.count_ones() as usize <= max {
            out.push(
                (0..pool.len())
                    .filter(|i| mask >> i & 1 == 1)
                    .map(|i| pool[i])
                    .collect(),
            );
        }
    }
    out
}

/// Criterion 5: mismatches between the threshold DP and the exhaustive
/// maximizer over binary strings of length <= 8, bases of <= 3 grams from
/// a 6-gram pool, and ed <= 2.
pub fn threshold_mismatches() -> (usize, usize) {
    let pool = ["A", "B", "AB", "BA", "AA", "BB"];
    let strings = all_strings(&['A', 'B'], 8);
    let mut checked = 0;
    let mut bad = 0;
    for subset in subsets(&pool, 3) {
        let b = base(&subset);
        for s in &strings {
            for ed in 0..=2 {
                let fast = threshold_for(s, &b, ed);
                let slow = brute_threshold(s, b.grams(), ed);
                checked += 1;
                if (fast - slow).abs() > 1e-12 * slow.max(1.0) {
                    bad += 1;
                }
            }
        }
    }
    (checked, bad)
}

/// Criterion 6: strings where the embedding differs from the window scan.
pub fn embedding_mismatches(trials: usize, seed: u64) -> usize {
    let mut r = rng(seed);
    let symbols: Vec<char> = "ABCD".chars().collect();
    let pool: Vec<String> = all_strings(&symbols, 3).into_iter().skip(1).collect();
    let mut bad = 0;
    for _ in 0..trials {
        let k = r.gen_range(1..=12);
        let grams: Vec<Gram> = pool
            .choose_multiple(&mut r, k)
            .map(|g| Gram::from(g.as_str()))
            .collect();
        let b = GramBase::new(grams).unwrap();
        let len = r.gen_range(0..=16);
        let s = random_text(&mut r, &symbols, len);
        if embed(&s, &b) != naive_embed(&s, b.grams()) {
            bad += 1;
        }
    }
    bad
}

/// Criterion 7: substitution-only pairs whose embedded distance exceeds the
/// global bound, with grams of lengths 1..=3.
pub fn substitution_violations(trials: usize, seed: u64) -> usize {
    let mut r = rng(seed);
    let alphabet = Alphabet::uppercase();
    let symbols = alphabet.symbols();
    let small: Vec<char> = "ABC".chars().collect();
    let mut bad = 0;
    for _ in 0..trials {
        // Mostly a tiny alphabet so grams actually recur.
        let sym: &[char] = if r.gen_bool(0.7) { &small } else { symbols };
        let len = r.gen_range(1..=14);
        let s: Vec<char> = random_text(&mut r, sym, len).chars().collect();
        let mut grams: BTreeSet<String> = BTreeSet::new();
        let k = r.gen_range(1..=20);
        while grams.len() < k {
            let q = r.gen_range(1..=3);
            if s.len() >= q && r.gen_bool(0.8) {
                let i = r.gen_range(0..=s.len() - q);
                grams.insert(s[i..i + q].iter().collect());
            } else {
                grams.insert(random_text(&mut r, sym, q));
            }
        }
        let b = GramBase::new(grams.into_iter().map(Gram::new).collect()).unwrap();
        let ed = r.gen_range(1..=3);
        let mut t = s.clone();
        for _ in 0..ed {
            let i = r.gen_range(0..t.len());
            t[i] = *sym.choose(&mut r).unwrap();
        }
        let x: String = s.iter().collect();
        let y: String = t.iter().collect();
        let d = squared_distance(&embed(&x, &b), &embed(&y, &b)).sqrt();
        if d > global_threshold_bound(1, 3, ed) + 1e-12 {
            bad += 1;
        }
    }
    bad
}

// ---------------------------------------------------------------------------
// Mining oracles

pub fn brute_support(dataset: &Dataset, gram: &str) -> usize {
    dataset.texts().filter(|t| t.contains(gram)).count()
}

/// Records whose text starts with `prefix`, as raw ids.
pub fn brute_partition(dataset: &Dataset, prefix: &str) -> Vec<u64> {
    let mut ids: Vec<u64> = dataset
        .iter()
        .filter(|r| r.text.starts_with(prefix))
        .map(|r| r.id.0)
        .collect();
    ids.sort_unstable();
    ids
}

pub const STRATEGIES: [Allocation; 4] = [
    Allocation::Linear,
    Allocation::Exponential,
    Allocation::Adaptive,
    Allocation::Hybrid,
];

/// A random small dataset over a random prefix of `ABCDE`.
pub fn random_dataset<R: Rng>(r: &mut R, n: usize) -> (Dataset, Alphabet) {
    let width = r.gen_range(2..=5);
    let symbols: Vec<char> = "ABCDE".chars().take(width).collect();
    let texts: Vec<String> = (0..n)
        .map(|_| {
            let len = r.gen_range(1..=8);
            random_text(r, &symbols, len)
        })
        .collect();
    (Dataset::from_texts(texts), Alphabet::new(symbols).unwrap())
}

/// A randomly parameterized noisy tree, before post-processing.
pub fn random_tree(seed: u64) -> PrefixTree {
    let mut r = rng(seed);
    let n = r.gen_range(0..=60);
    let (ds, alphabet) = random_dataset(&mut r, n);
    let config = TreeConfig {
        epsilon: [0.05, 0.3, 1.0, 5.0][r.gen_range(0..4)],
        h_max: r.gen_range(0..=6),
        // Negative thresholds keep noisy negative counts in the tree.
        theta: if r.gen_bool(0.5) {
            Some(r.gen_range(-3.0..1.0))
        } else {
            None
        },
        strategy: STRATEGIES[r.gen_range(0..4)],
        q_min: 1,
        q_max: r.gen_range(1..=3),
        k: 10,
    };
    let mut budget = PrivacyBudget::new(config.epsilon).unwrap();
    let mut sampler = LaplaceSampler::new(seed);
    build_tree(&ds, &alphabet, &config, &mut budget, &mut sampler).unwrap()
}

/// Nodes violating `count >= child` or `count >= sum(children)`.
pub fn consistency_violations(tree: &PrefixTree) -> usize {
    tree.nodes()
        .iter()
        .filter(|n| {
            let kids: Vec<f64> = n.children.iter().map(|&(_, c)| tree.node(c).noisy_count).collect();
            kids.iter().any(|&c| c > n.noisy_count) || kids.iter().sum::<f64>() > n.noisy_count
        })
        .count()
}

/// Criterion 12: violations after enforcement over `trees` random trees, and
/// how many of those trees were inconsistent before.
pub fn consistency_report(trees: u64) -> (usize, usize) {
    let mut after = 0;
    let mut fixed = 0;
    for seed in 0..trees {
        let raw = random_tree(seed);
        if consistency_violations(&raw) > 0 {
            fixed += 1;
        }
        let tree = enforce_consistency(raw);
        after += consistency_violations(&tree);
        after += tree.nodes().iter().filter(|n| n.noisy_count < 0.0).count();
    }
    (after, fixed)
}

/// Criterion 8: worst overspend over every root-to-leaf path of trees built
/// with each strategy, and the largest |sum of FPM charges - epsilon|.
pub fn budget_audit(dataset: &Dataset) -> (f64, f64) {
    let mut worst_path = f64::NEG_INFINITY;
    for (i, &strategy) in STRATEGIES.iter().enumerate() {
        for &epsilon in &[0.1, 0.5, 1.0] {
            for h_max in [3, 8] {
                let config = TreeConfig {
                    epsilon,
                    h_max,
                    strategy,
                    ..TreeConfig::default()
                };
                let mut budget = PrivacyBudget::new(epsilon).unwrap();
                let mut sampler = LaplaceSampler::new(i as u64);
                let tree = build_tree(dataset, &Alphabet::uppercase(), &config, &mut budget, &mut sampler).unwrap();
                for total in tree.path_totals() {
                    worst_path = worst_path.max(total - epsilon);
                }
                worst_path = worst_path.max(budget.spent() - epsilon);
            }
        }
    }
    let mut worst_fpm: f64 = 0.0;
    for (q_min, q_max) in [(1, 1), (1, 3), (2, 5)] {
        for &epsilon in &[0.1, 0.7, 3.0] {
            let config = MinerConfig {
                k: 20,
                q_min,
                q_max,
                epsilon,
                ..MinerConfig::default()
            };
            let mut budget = PrivacyBudget::new(epsilon).unwrap();
            fpm_mine(dataset, &config, &mut budget, &mut LaplaceSampler::new(3)).unwrap();
            let total: f64 = budget.charges().iter().map(|c| c.epsilon).sum();
            worst_fpm = worst_fpm.max((total - epsilon).abs());
        }
    }
    (worst_path, worst_fpm)
}

// ---------------------------------------------------------------------------
// Statistical checks

/// Kolmogorov-Smirnov distance of `samples` against Lap(0, scale), and the
/// relative error of the empirical variance against `2 scale^2`.
pub fn laplace_fit(samples: usize, scale: f64, seed: u64) -> (f64, f64) {
    let mut sampler = LaplaceSampler::new(seed);
    let mut xs: Vec<f64> = (0..samples).map(|_| sampler.sample(scale).unwrap()).collect();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let ks = xs
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = laplace_cdf(x, scale);
            (f - i as f64 / n).abs().max((f - (i + 1) as f64 / n).abs())
        })
        .fold(0.0, f64::max);
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    let target = 2.0 * scale * scale;
    (ks, (var - target).abs() / target)
}

/// Criterion 10: one noisy count on two neighboring 5-record datasets
/// (support 3 vs 2), bucketed; returns the largest |log ratio| over buckets
/// with enough mass, and the bound `epsilon + 3 standard errors` for it.
pub fn dp_log_ratio(epsilon: f64, trials: usize, seed: u64) -> (f64, f64) {
    let with = Dataset::from_texts(["ANNA", "ANA", "AN", "BOB", "CY"]);
    let without = Dataset::from_texts(["ANNA", "ANA", "XY", "BOB", "CY"]);
    let count = |ds: &Dataset, seed: u64| -> Vec<f64> {
        let c = brute_support(ds, "AN") as u64;
        let mut sampler = LaplaceSampler::new(seed);
        (0..trials)
            .map(|_| {
                let mut budget = PrivacyBudget::new(epsilon).unwrap();
                noisy_count(c, epsilon, &mut budget, &mut sampler, "AN").unwrap()
            })
            .collect()
    };
    let bucket = |x: f64| ((x + 10.0) / 1.0).floor().clamp(0.0, 24.0) as usize;
    let mut h1 = [0usize; 25];
    let mut h2 = [0usize; 25];
    for x in count(&with, seed) {
        h1[bucket(x)] += 1;
    }
    for x in count(&without, seed + 1) {
        h2[bucket(x)] += 1;
    }
    let mut worst = 0.0f64;
    let mut worst_se = 0.0f64;
    for (&a, &b) in h1.iter().zip(&h2) {
        if a < 1000 || b < 1000 {
            continue;
        }
        let ratio = (a as f64 / b as f64).ln().abs();
        // Delta-method standard error of a log ratio of two counts.
        let se = (1.0 / a as f64 + 1.0 / b as f64).sqrt();
        if ratio - 3.0 * se > worst - 3.0 * worst_se {
            worst = ratio;
            worst_se = se;
        }
    }
    (worst, epsilon + 3.0 * worst_se)
}
