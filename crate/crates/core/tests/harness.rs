mod common;

use std::collections::HashSet;

use common::*;
use gramlink::harness::{
    evaluate, lipschitz_embed, perturb_dataset, random_base, run_experiment, synthetic_places, ExperimentConfig,
    ExperimentReport, GroundTruth, PerturbationSpec, ReferenceSets,
};
use gramlink::protocol::{match_global, MatchPair, MatchResult, MinerKind};
use gramlink::records::{Alphabet, Dataset, RecordId};
use gramlink::strings::edit_distance;
use proptest::prelude::*;

#[test]
fn perturbation_is_checked_by_edit_distance() {
    let ds = synthetic_places(2000, 1);
    let az = Alphabet::uppercase();
    for ed in 0..=3 {
        for exact in [true, false] {
            let spec = PerturbationSpec {
                exact,
                ..PerturbationSpec::new(ed, ed as u64 + 10)
            };
            let out = perturb_dataset(&ds, &az, &spec).unwrap();
            assert_eq!(out.len(), ds.len());
            let mut changed = 0;
            for (x, y) in ds.iter().zip(&out) {
                assert_eq!(x.id, y.id);
                let d = edit_distance(&x.text, &y.text);
                assert!(d <= ed, "{} -> {} ({d} > {ed})", x.text, y.text);
                assert!(!y.text.is_empty());
                changed += usize::from(d > 0);
            }
            if ed == 0 {
                assert_eq!(out, ds);
            } else if exact {
                // Exact edits can cancel out only rarely.
                assert!(changed * 10 > ds.len() * 9, "{changed}");
            }
            out.validate(&az).unwrap();
        }
    }
}

#[test]
fn metrics_identities_on_real_runs() {
    let a = synthetic_places(300, 2);
    let b = perturb_dataset(&a, &Alphabet::uppercase(), &PerturbationSpec::new(1, 5)).unwrap();
    let base = random_base(40, 1, 3, &Alphabet::uppercase(), &mut rng(3)).unwrap();
    let va = gramlink::embedding::embed_dataset(&a, &base);
    let vb = gramlink::embedding::embed_dataset(&b, &base);
    let matches = match_global(&va, &vb, 1.0).unwrap();
    let m = evaluate(&matches, &GroundTruth::id_equality(&a, &b));
    let distinct: HashSet<(RecordId, RecordId)> = matches.pairs.iter().map(|p| (p.id_a, p.id_b)).collect();
    assert_eq!(m.tp + m.fp, distinct.len());
    assert_eq!(m.tp + m.fn_, a.len());
}

#[test]
fn duplicate_reports_count_once() {
    let pair = |a, b| MatchPair {
        id_a: RecordId(a),
        id_b: RecordId(b),
        distance: 0.0,
    };
    let m = MatchResult {
        pairs: vec![pair(0, 0), pair(0, 0), pair(1, 2)],
    };
    let truth = GroundTruth::from_ids([RecordId(0), RecordId(1)]);
    let r = evaluate(&m, &truth);
    assert_eq!((r.tp, r.fp, r.fn_), (1, 1, 1));
}

#[test]
fn lipschitz_coordinates_are_set_distances() {
    let ds = synthetic_places(40, 3);
    let refs = ReferenceSets::random(ReferenceSets::DEFAULT_DIM, &Alphabet::uppercase(), &mut rng(1));
    let vectors = lipschitz_embed(&ds, &refs).unwrap();
    for (r, v) in ds.iter().zip(&vectors) {
        assert_eq!(v.dim(), 12);
        for (set, &c) in refs.sets.iter().zip(&v.coordinates) {
            let expected = set.iter().map(|s| edit_distance(&r.text, s)).min().unwrap();
            assert_eq!(c, expected as f64);
        }
    }
}

#[test]
fn lipschitz_embedding_is_contractive() {
    // |d(x, A) - d(y, A)| <= d(x, y): each coordinate is 1-Lipschitz.
    let ds = synthetic_places(60, 4);
    let refs = ReferenceSets::random(8, &Alphabet::uppercase(), &mut rng(2));
    let v = lipschitz_embed(&ds, &refs).unwrap();
    for i in 0..ds.len() {
        for j in 0..ds.len() {
            let d = edit_distance(&ds.records()[i].text, &ds.records()[j].text) as f64;
            for (x, y) in v[i].coordinates.iter().zip(&v[j].coordinates) {
                assert!((x - y).abs() <= d);
            }
        }
    }
}

#[test]
fn experiment_report_roundtrips_and_is_labeled() {
    let ds = synthetic_places(150, 7);
    let config = ExperimentConfig {
        miners: vec![MinerKind::Fpm, MinerKind::Random],
        ks: vec![20, 40],
        eds: vec![0, 2],
        repetitions: 2,
        ..ExperimentConfig::default()
    };
    let report = run_experiment(&config, &ds).unwrap();
    assert_eq!(report.points.len(), 8);
    let json = report.to_json().unwrap();
    let parsed = ExperimentReport::from_json(&json).unwrap();
    assert_eq!(parsed.to_json().unwrap(), json);
    for p in &report.points {
        let seeds: Vec<u64> = p.runs.iter().map(|r| r.seed).collect();
        assert_eq!(seeds, vec![1, 2]);
        for r in &p.runs {
            assert_eq!(r.metrics.tp + r.metrics.fn_, ds.len());
        }
    }

    let bad = ExperimentConfig {
        miners: vec![MinerKind::Random],
        ks: vec![100_000],
        eds: vec![1],
        repetitions: 1,
        ..ExperimentConfig::default()
    };
    let err = run_experiment(&bad, &ds).unwrap_err().to_string();
    assert!(err.contains("miner=random") && err.contains("k=100000"), "{err}");
    assert!(run_experiment(&ExperimentConfig { eds: vec![], ..bad }, &ds).is_err());
}

#[test]
fn synthetic_names_look_like_places() {
    let ds = synthetic_places(3000, 11);
    let texts: HashSet<&str> = ds.texts().collect();
    assert_eq!(texts.len(), 3000);
    ds.validate(&Alphabet::uppercase()).unwrap();
    // Frequent grams are skewed, as in real name lists.
    let top = gramlink::mining::exact_top_k(&ds, 1, 3, 75);
    assert!(top[0].noisy_frequency > 0.4 * ds.len() as f64);
    assert!(top[74].noisy_frequency < 0.1 * ds.len() as f64);
}

#[test]
fn sample_file_matches_its_generator() {
    let loaded = gramlink::records::load_dataset(SAMPLE, &Alphabet::uppercase(), Default::default()).unwrap();
    assert_eq!(loaded, synthetic_places(2000, 2024));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn perturbed_records_stay_within_ed(
        texts in prop::collection::vec("[A-Z]{1,12}", 1..20),
        ed in 0usize..4,
        seed in any::<u64>(),
        exact in any::<bool>(),
    ) {
        let ds = Dataset::from_texts(texts);
        let spec = PerturbationSpec { exact, ..PerturbationSpec::new(ed, seed) };
        let out = perturb_dataset(&ds, &Alphabet::uppercase(), &spec).unwrap();
        for (x, y) in ds.iter().zip(&out) {
            prop_assert!(edit_distance(&x.text, &y.text) <= ed);
        }
    }
}
