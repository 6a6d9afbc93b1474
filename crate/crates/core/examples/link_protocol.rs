//! Full three-party linkage between a dataset and a corrupted copy of it,
//! under both schedules, with the transcript summary.

use gramlink::harness::metrics::{evaluate, GroundTruth};
use gramlink::harness::perturb::{perturb_dataset, PerturbationSpec};
use gramlink::protocol::{run_protocol, MinerKind, ProtocolConfig, Schedule};
use gramlink::records::{load_dataset, Alphabet, Ingest};

const SAMPLE: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/data/places_2000.txt");

fn main() -> gramlink::Result<()> {
    let alphabet = Alphabet::uppercase();
    let a = load_dataset(SAMPLE, &alphabet, Ingest::Strict)?;
    let b = perturb_dataset(&a, &alphabet, &PerturbationSpec::new(1, 11))?;
    let truth = GroundTruth::id_equality(&a, &b);

    for schedule in [Schedule::Sequential, Schedule::Threaded] {
        let config = ProtocolConfig {
            miner: MinerKind::PtreeHybrid,
            epsilon: 0.5,
            ed: 1,
            schedule,
            ..ProtocolConfig::default()
        };
        let out = run_protocol(&a, &b, &config)?;
        let m = evaluate(&out.matches, &truth);
        println!(
            "{schedule:?}: {} pairs, precision {:.3}, recall {:.3}, F1 {:.3}, spent {:?} of {}",
            out.matches.len(),
            m.precision,
            m.recall,
            m.f1,
            out.spent,
            out.allotment
        );
        println!(
            "  preparation {:?}, matching {:?}",
            out.timings.preparation(),
            out.timings.matching
        );
        if schedule == Schedule::Threaded {
            println!("{}", out.transcript.summary_json()?);
        }
    }
    Ok(())
}
