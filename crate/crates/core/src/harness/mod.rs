//! Experiment support: corruption of datasets, linkage metrics, baselines,
//! synthetic data and parameter sweeps.

pub mod baselines;
pub mod experiment;
pub mod metrics;
pub mod perturb;
pub mod synth;

pub use baselines::{lipschitz_embed, random_base, ReferenceSets};
pub use experiment::{run_experiment, ExperimentConfig, ExperimentReport, SweepPoint};
pub use metrics::{evaluate, GroundTruth, Metrics};
pub use perturb::{perturb_dataset, PerturbationSpec};
pub use synth::synthetic_places;
