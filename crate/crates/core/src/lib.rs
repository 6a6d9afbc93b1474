//! Private record linkage through frequent-gram embeddings.
//!
//! Two data holders each mine a differentially private set of frequent
//! variable-length grams, merge them into a shared base, embed their strings
//! as gram-count vectors and hand the vectors to a third party, which links
//! records whose Euclidean distance falls within a per-record threshold
//! derived from an edit-distance budget.
//!
//! ```
//! use gramlink::harness::{perturb_dataset, synthetic_places, evaluate, GroundTruth, PerturbationSpec};
//! use gramlink::protocol::{run_protocol, MinerKind, ProtocolConfig};
//! use gramlink::records::Alphabet;
//!
//! let a = synthetic_places(300, 1);
//! let b = perturb_dataset(&a, &Alphabet::uppercase(), &PerturbationSpec::new(1, 1)).unwrap();
//! let config = ProtocolConfig { miner: MinerKind::Fpm, epsilon: 1.0, ed: 1, ..ProtocolConfig::default() };
//! let out = run_protocol(&a, &b, &config).unwrap();
//! let metrics = evaluate(&out.matches, &GroundTruth::id_equality(&a, &b));
//! assert!(metrics.recall > 0.0);
//! ```

pub mod dp;
pub mod embedding;
pub mod error;
pub mod harness;
pub mod mining;
pub mod protocol;
pub mod records;
pub mod strings;

pub use error::{Error, Result};
