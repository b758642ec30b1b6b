//! Vessel trajectory prediction from AIS position streams.
//!
//! The crate turns raw position reports into fixed-horizon supervised
//! datasets, fits paired longitude/latitude regressors (least squares,
//! multilayer perceptrons, random forests), compares them against a
//! dead-reckoning baseline and a sliding-window perceptron, and answers
//! stateless forecast queries from a registry of saved models.

pub mod dataset;
pub mod eval;
pub mod exec;
pub mod experiment;
pub mod geo;
pub mod ingest;
pub mod models;
pub mod serve;
pub mod synth;

pub use exec::Execution;
pub use geo::{EarthModel, GeoPoint};
