//! Private top-k gram mining with per-length runs, compared with the exact
//! top-k at several privacy levels.

use std::collections::HashSet;

use gramlink::dp::{LaplaceSampler, PrivacyBudget};
use gramlink::mining::exact_top_k;
use gramlink::mining::fpm::{fpm_mine, MinerConfig};
use gramlink::records::{load_dataset, Alphabet, Ingest};

const SAMPLE: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/data/places_2000.txt");

fn main() -> gramlink::Result<()> {
    let ds = load_dataset(SAMPLE, &Alphabet::uppercase(), Ingest::Strict)?;
    let k = 30;
    let exact = exact_top_k(&ds, 1, 3, k);
    let truth: HashSet<_> = exact.iter().map(|g| g.gram.clone()).collect();
    println!(
        "exact top-10: {:?}",
        exact.iter().take(10).map(|g| g.gram.as_str()).collect::<Vec<_>>()
    );

    for epsilon in [0.1, 1.0, 10.0, 100.0] {
        let config = MinerConfig {
            k,
            epsilon,
            ..MinerConfig::default()
        };
        let mut budget = PrivacyBudget::new(epsilon)?;
        let mut sampler = LaplaceSampler::new(1);
        let mined = fpm_mine(&ds, &config, &mut budget, &mut sampler)?;
        let hits = mined.iter().filter(|g| truth.contains(&g.gram)).count();
        println!(
            "epsilon {epsilon:>5}: {hits}/{k} of the exact top-k, {} charges totalling {}",
            budget.charges().len(),
            budget.spent()
        );
    }
    Ok(())
}
