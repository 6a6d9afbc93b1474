//! Noisy prefix tree: construction under each budget schedule, consistency
//! enforcement and gram extraction.

use gramlink::dp::{LaplaceSampler, PrivacyBudget};
use gramlink::mining::ptree::{build_tree, enforce_consistency, extract_grams, Allocation, TreeConfig};
use gramlink::records::{load_dataset, Alphabet, Ingest};

const SAMPLE: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/data/places_2000.txt");

fn main() -> gramlink::Result<()> {
    let alphabet = Alphabet::uppercase();
    let ds = load_dataset(SAMPLE, &alphabet, Ingest::Strict)?;
    let h_max = ds.average_length().round() as usize;

    for strategy in [
        Allocation::Linear,
        Allocation::Exponential,
        Allocation::Adaptive,
        Allocation::Hybrid,
    ] {
        let config = TreeConfig {
            epsilon: 0.5,
            h_max,
            strategy,
            ..TreeConfig::default()
        };
        let mut budget = PrivacyBudget::new(config.epsilon)?;
        let mut sampler = LaplaceSampler::new(3);
        let tree = enforce_consistency(build_tree(&ds, &alphabet, &config, &mut budget, &mut sampler)?);
        let worst = tree.path_totals().into_iter().fold(0.0, f64::max);
        let grams = extract_grams(&tree, 1, 3, 10)?;
        println!(
            "{strategy:?}: {} nodes, level sizes {:?}, max path budget {worst:.4}",
            tree.len(),
            tree.level_sizes()
        );
        println!(
            "  top grams: {:?}",
            grams.iter().map(|g| g.gram.as_str()).collect::<Vec<_>>()
        );
    }
    Ok(())
}
