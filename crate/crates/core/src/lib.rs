//! Self-organizing map analysis of protein conformational ensembles.
//!
//! The crate trains a hexagonal SOM on Cα coordinate frames, groups its
//! neurons by complete linkage with the cluster count picked by Mojena's
//! stopping rule, and extracts the frame closest to each cluster centroid.
//! For every neuron it then builds an atom-atom similarity network from the
//! frames the neuron won, detects communities and separates local from
//! long-range couplings.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix the scalar for the common cases.
//!
//! ```
//! use confsom::{Ensemble64, TrainingConfig, som};
//!
//! let frames: Vec<Vec<f64>> = (0..40)
//!     .map(|f| (0..6).map(|k| ((f * 6 + k) as f64 * 0.3).sin()).collect())
//!     .collect();
//! let e = Ensemble64::from_frames(&frames, Ensemble64::synthetic_labels(2), "demo").unwrap();
//! let cfg = TrainingConfig { map_size: 9, train_len: 20, ..Default::default() };
//! let map = som::train(&som::init_map(&e, &cfg).unwrap(), &e, &cfg).unwrap();
//! let a = som::map_ensemble(&map, &e).unwrap();
//! assert_eq!(a.hits.iter().sum::<usize>(), 40);
//! ```

pub mod clustering;
pub mod ensemble;
pub mod error;
pub mod graph;
pub mod network;
pub mod pipeline;
pub mod report;
pub mod scalar;
pub mod similarity;
pub mod som;

pub use ensemble::{AtomLabel, AtomSelection, Ensemble, Format};
pub use error::{Error, Result};
pub use network::{AtomGraph, Measure};
pub use scalar::Scalar;
pub use som::{Assignment, HexGrid, TrainingConfig};

pub type Ensemble64 = ensemble::Ensemble<f64>;
pub type Ensemble32 = ensemble::Ensemble<f32>;
pub type SomMap64 = som::SomMap<f64>;
pub type SomMap32 = som::SomMap<f32>;
pub type ClusterSummary64 = clustering::ClusterSummary<f64>;
pub type AtomSeriesSet64 = network::AtomSeriesSet<f64>;
