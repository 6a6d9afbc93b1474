//! Parameter sweeps over the protocol, averaged over seeded repetitions.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::metrics::{evaluate, GroundTruth, Metrics};
use super::perturb::{perturb_dataset, PerturbationSpec};
use crate::error::{Error, Result};
use crate::protocol::{run_protocol, KindTotals, MessageKind, MinerKind, ProtocolConfig, Schedule};
use crate::records::{Alphabet, Dataset};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub miners: Vec<MinerKind>,
    pub epsilons: Vec<f64>,
    pub ks: Vec<usize>,
    pub eds: Vec<usize>,
    /// Dataset prefixes to run on; empty means the whole dataset.
    pub sizes: Vec<usize>,
    pub q_min: usize,
    pub q_max: usize,
    pub h_max: Option<usize>,
    pub theta: Option<f64>,
    pub gamma: f64,
    pub noise_factor: f64,
    pub split_budget: bool,
    /// Repetition `r` (1-based) uses seed `first_seed + r - 1` for both the
    /// perturbation and the protocol.
    pub repetitions: usize,
    pub first_seed: u64,
    pub exact_edits: bool,
    pub schedule: Schedule,
    pub alphabet: Alphabet,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            miners: vec![MinerKind::Fpm],
            epsilons: vec![0.1],
            ks: vec![75],
            eds: vec![0, 1, 2],
            sizes: Vec::new(),
            q_min: 1,
            q_max: 3,
            h_max: None,
            theta: None,
            gamma: 0.0,
            noise_factor: 2.0,
            split_budget: false,
            repetitions: 5,
            first_seed: 1,
            exact_edits: true,
            schedule: Schedule::Sequential,
            alphabet: Alphabet::uppercase(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub miner: MinerKind,
    pub epsilon: f64,
    pub k: usize,
    pub ed: usize,
    pub n: usize,
}

impl std::fmt::Display for SweepPoint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "miner={} epsilon={} k={} ed={} n={}",
            self.miner, self.epsilon, self.k, self.ed, self.n
        )
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

impl Summary {
    pub fn of(values: impl IntoIterator<Item = f64>) -> Self {
        let values: Vec<f64> = values.into_iter().collect();
        if values.is_empty() {
            return Summary::default();
        }
        Summary {
            mean: values.iter().sum::<f64>() / values.len() as f64,
            min: values.iter().copied().fold(f64::INFINITY, f64::min),
            max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub seed: u64,
    pub metrics: Metrics,
    /// Mining through threshold generation, in seconds.
    pub preparation_seconds: f64,
    pub matching_seconds: f64,
    pub spent: [f64; 2],
    pub transcript: BTreeMap<String, KindTotals>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointReport {
    pub point: SweepPoint,
    pub f1: Summary,
    pub precision: Summary,
    pub recall: Summary,
    pub preparation_seconds: Summary,
    pub total_seconds: Summary,
    pub vector_bytes: Summary,
    pub transcript_bytes: Summary,
    pub runs: Vec<RunReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub points: Vec<PointReport>,
}

impl ExperimentReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn find(&self, pred: impl Fn(&SweepPoint) -> bool) -> Option<&PointReport> {
        self.points.iter().find(|p| pred(&p.point))
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let empty = [
            ("miners", self.miners.is_empty()),
            ("epsilons", self.epsilons.is_empty()),
            ("ks", self.ks.is_empty()),
            ("eds", self.eds.is_empty()),
        ];
        if let Some((name, _)) = empty.iter().find(|e| e.1) {
            return Err(Error::invalid(format!("sweep list {name} is empty")));
        }
        if self.repetitions == 0 {
            return Err(Error::invalid("repetitions must be at least 1"));
        }
        Ok(())
    }

    /// Cartesian product of the sweep lists, in miner, epsilon, k, ed, n
    /// order.
    pub fn points(&self, dataset_len: usize) -> Vec<SweepPoint> {
        let sizes = if self.sizes.is_empty() {
            vec![dataset_len]
        } else {
            self.sizes.clone()
        };
        let mut out = Vec::new();
        for &miner in &self.miners {
            for &epsilon in &self.epsilons {
                for &k in &self.ks {
                    for &ed in &self.eds {
                        for &n in &sizes {
                            out.push(SweepPoint {
                                miner,
                                epsilon,
                                k,
                                ed,
                                n,
                            });
                        }
                    }
                }
            }
        }
        out
    }

    pub fn protocol_config(&self, point: &SweepPoint, seed: u64) -> ProtocolConfig {
        ProtocolConfig {
            miner: point.miner,
            epsilon: point.epsilon,
            k: point.k,
            q_min: self.q_min,
            q_max: self.q_max,
            ed: point.ed,
            split_budget: self.split_budget,
            h_max: self.h_max,
            theta: self.theta,
            gamma: self.gamma,
            noise_factor: self.noise_factor,
            seed,
            schedule: self.schedule,
            alphabet: self.alphabet.clone(),
            ..ProtocolConfig::default()
        }
    }
}

/// One repetition: B holds a perturbed copy of the first `n` records of A.
pub fn run_point_once(
    config: &ExperimentConfig,
    dataset: &Dataset,
    point: &SweepPoint,
    seed: u64,
) -> Result<RunReport> {
    if point.n > dataset.len() {
        return Err(Error::invalid(format!(
            "sweep size {} exceeds the dataset ({} records)",
            point.n,
            dataset.len()
        )));
    }
    let a = dataset.take(point.n);
    let spec = PerturbationSpec {
        ed: point.ed,
        seed,
        exact: config.exact_edits,
        ..PerturbationSpec::default()
    };
    let b = perturb_dataset(&a, &config.alphabet, &spec)?;
    let out = run_protocol(&a, &b, &config.protocol_config(point, seed))?;
    let metrics = evaluate(&out.matches, &GroundTruth::id_equality(&a, &b));
    let transcript = out
        .transcript
        .summary()
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect();
    Ok(RunReport {
        seed,
        metrics,
        preparation_seconds: out.timings.preparation().as_secs_f64(),
        matching_seconds: out.timings.matching.as_secs_f64(),
        spent: out.spent,
        transcript,
    })
}

pub fn run_point(config: &ExperimentConfig, dataset: &Dataset, point: &SweepPoint) -> Result<PointReport> {
    let runs = (0..config.repetitions as u64)
        .map(|r| run_point_once(config, dataset, point, config.first_seed + r))
        .collect::<Result<Vec<_>>>()
        .map_err(|e| e.context(point.to_string()))?;
    let bytes_of = |r: &RunReport, kind: MessageKind| r.transcript.get(&kind.to_string()).map_or(0, |t| t.total_bytes);
    Ok(PointReport {
        point: *point,
        f1: Summary::of(runs.iter().map(|r| r.metrics.f1)),
        precision: Summary::of(runs.iter().map(|r| r.metrics.precision)),
        recall: Summary::of(runs.iter().map(|r| r.metrics.recall)),
        preparation_seconds: Summary::of(runs.iter().map(|r| r.preparation_seconds)),
        total_seconds: Summary::of(runs.iter().map(|r| r.preparation_seconds + r.matching_seconds)),
        vector_bytes: Summary::of(runs.iter().map(|r| bytes_of(r, MessageKind::VectorSet) as f64)),
        transcript_bytes: Summary::of(
            runs.iter()
                .map(|r| r.transcript.values().map(|t| t.total_bytes).sum::<usize>() as f64),
        ),
        runs,
    })
}

/// Runs every sweep point in order.
pub fn run_experiment(config: &ExperimentConfig, dataset: &Dataset) -> Result<ExperimentReport> {
    config.validate()?;
    let points = config
        .points(dataset.len())
        .iter()
        .map(|p| run_point(config, dataset, p))
        .collect::<Result<Vec<_>>>()?;
    Ok(ExperimentReport {
        config: config.clone(),
        points,
    })
}
