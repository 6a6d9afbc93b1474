//! Frequent versus random gram bases, and the Lipschitz embedding over random
//! reference sets.

use std::time::Instant;

use gramlink::embedding::{embed_dataset, thresholds_for_dataset, GramBase};
use gramlink::harness::baselines::{lipschitz_embed, random_base, ReferenceSets};
use gramlink::harness::metrics::{evaluate, GroundTruth};
use gramlink::harness::perturb::{perturb_dataset, PerturbationSpec};
use gramlink::mining::exact_top_k;
use gramlink::protocol::match_vectors;
use gramlink::records::{load_dataset, Alphabet, Dataset, Ingest};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

const SAMPLE: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/data/places_2000.txt");

fn f1(a: &Dataset, b: &Dataset, base: &GramBase, ed: usize) -> gramlink::Result<f64> {
    let th = thresholds_for_dataset(a, base, ed);
    let matches = match_vectors(&embed_dataset(a, base), &embed_dataset(b, base), &th)?;
    Ok(evaluate(&matches, &GroundTruth::id_equality(a, b)).f1)
}

fn main() -> gramlink::Result<()> {
    let alphabet = Alphabet::uppercase();
    let a = load_dataset(SAMPLE, &alphabet, Ingest::Strict)?;
    let mut rng = ChaCha20Rng::seed_from_u64(5);
    let frequent = GramBase::from_scored(&exact_top_k(&a, 1, 3, 100))?;
    let random = random_base(100, 1, 3, &alphabet, &mut rng)?;

    for ed in [1, 2] {
        let b = perturb_dataset(&a, &alphabet, &PerturbationSpec::new(ed, 5))?;
        println!(
            "ed={ed}: F1 frequent {:.3}, random {:.3}",
            f1(&a, &b, &frequent, ed)?,
            f1(&a, &b, &random, ed)?
        );
    }

    let reference = ReferenceSets::random(ReferenceSets::DEFAULT_DIM, &alphabet, &mut rng);
    let start = Instant::now();
    let vectors = lipschitz_embed(&a, &reference)?;
    println!(
        "Lipschitz embedding of {} records into {} dimensions in {:?}; first: {:?}",
        vectors.len(),
        reference.dim(),
        start.elapsed(),
        vectors[0].coordinates
    );
    Ok(())
}
