//! Edit-budget sweep across miners, averaged over seeded repetitions.

use gramlink::harness::experiment::{run_experiment, ExperimentConfig};
use gramlink::protocol::MinerKind;
use gramlink::records::{load_dataset, Alphabet, Ingest};

const SAMPLE: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/data/places_2000.txt");

fn main() -> gramlink::Result<()> {
    let ds = load_dataset(SAMPLE, &Alphabet::uppercase(), Ingest::Strict)?;
    let config = ExperimentConfig {
        miners: vec![
            MinerKind::Nonprivate,
            MinerKind::Fpm,
            MinerKind::PtreeHybrid,
            MinerKind::PtreeLinear,
        ],
        sizes: vec![1000],
        repetitions: 3,
        ..ExperimentConfig::default()
    };
    let report = run_experiment(&config, &ds)?;
    println!(
        "{:<18} {:>3} {:>7} {:>7} {:>7} {:>9}",
        "miner", "ed", "F1", "min", "max", "prep ms"
    );
    for p in &report.points {
        println!(
            "{:<18} {:>3} {:>7.3} {:>7.3} {:>7.3} {:>9.1}",
            p.point.miner.to_string(),
            p.point.ed,
            p.f1.mean,
            p.f1.min,
            p.f1.max,
            p.preparation_seconds.mean * 1e3
        );
    }
    Ok(())
}
