//! Linkage quality against id-equality ground truth.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::protocol::MatchResult;
use crate::records::{Dataset, RecordId};

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl Metrics {
    pub fn from_counts(tp: usize, fp: usize, fn_: usize) -> Self {
        let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        Metrics {
            precision,
            recall,
            f1,
            tp,
            fp,
            fn_,
        }
    }
}

/// Ids that appear on both sides; a pair is correct iff its ids are equal.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GroundTruth {
    pub linked: HashSet<RecordId>,
}

impl GroundTruth {
    pub fn id_equality(a: &Dataset, b: &Dataset) -> Self {
        let in_b: HashSet<RecordId> = b.ids().collect();
        GroundTruth {
            linked: a.ids().filter(|id| in_b.contains(id)).collect(),
        }
    }

    pub fn from_ids(ids: impl IntoIterator<Item = RecordId>) -> Self {
        GroundTruth {
            linked: ids.into_iter().collect(),
        }
    }
}

/// Each distinct reported pair counts once.
pub fn evaluate(matches: &MatchResult, truth: &GroundTruth) -> Metrics {
    let pairs: HashSet<(RecordId, RecordId)> = matches.pairs.iter().map(|p| (p.id_a, p.id_b)).collect();
    let tp = pairs.iter().filter(|(a, b)| a == b && truth.linked.contains(a)).count();
    let fp = pairs.len() - tp;
    Metrics::from_counts(tp, fp, truth.linked.len() - tp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::MatchPair;

    fn result(pairs: &[(u64, u64)]) -> MatchResult {
        MatchResult {
            pairs: pairs
                .iter()
                .map(|&(a, b)| MatchPair {
                    id_a: RecordId(a),
                    id_b: RecordId(b),
                    distance: 0.0,
                })
                .collect(),
        }
    }

    fn truth(n: u64) -> GroundTruth {
        GroundTruth::from_ids((0..n).map(RecordId))
    }

    #[test]
    fn perfect_matching() {
        let m = evaluate(&result(&[(0, 0), (1, 1), (2, 2)]), &truth(3));
        assert_eq!((m.precision, m.recall, m.f1), (1.0, 1.0, 1.0));
    }

    #[test]
    fn half_found() {
        let m = evaluate(&result(&[(0, 0), (1, 1)]), &truth(4));
        assert_eq!(m.precision, 1.0);
        assert_eq!(m.recall, 0.5);
        assert!((m.f1 - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn empty_result_scores_zero() {
        let m = evaluate(&MatchResult::default(), &truth(4));
        assert_eq!((m.precision, m.recall, m.f1), (0.0, 0.0, 0.0));
        assert_eq!(m.fn_, 4);
    }

    #[test]
    fn count_identities() {
        let r = result(&[(0, 0), (0, 1), (1, 0), (2, 2), (2, 2)]);
        let m = evaluate(&r, &truth(5));
        assert_eq!(m.tp + m.fp, 4);
        assert_eq!(m.tp + m.fn_, 5);
        let json = serde_json::to_string(&m).unwrap();
        assert!(json.contains("\"fn\":3"));
    }

    #[test]
    fn truth_from_datasets() {
        let a = Dataset::from_texts(["X", "Y", "Z"]);
        let b = Dataset::from_texts(["X", "Y"]);
        assert_eq!(GroundTruth::id_equality(&a, &b).linked.len(), 2);
    }
}
