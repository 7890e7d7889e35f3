//! Discriminative event-based modelling (DEBM) of biomarker cascades.
//!
//! The crate estimates the order in which biomarkers become abnormal from
//! cross-sectional data. Subject-level orderings are read off posterior
//! abnormality probabilities and aggregated into a central ordering under a
//! probabilistic Kendall's tau distance. A generative EBM baseline, patient
//! staging, a sigmoid cascade simulator and an experiment harness are
//! included for benchmarking.
//!
//! Module map:
//! - [`data`]: dataset model, CSV ingestion, t-test feature filter.
//! - [`mixture`]: robust initial fits, bounded Gaussian mixture refinement, posteriors.
//! - [`ordering`]: permutations, Kendall distances, consensus search.
//! - [`models`]: DEBM pipeline, EBM likelihood and search, staging.
//! - [`sim`]: synthetic cascade generator with known ground truth.
//! - [`eval`]: sweeps, bootstrap positional variance, cross-validated staging AUC.

pub mod data;
pub mod error;
pub mod eval;
pub mod mixture;
pub mod models;
pub mod ordering;
pub mod seed;
pub mod sim;
pub mod svg;

pub use data::{BiomarkerDataset, DiagnosticLabel};
pub use error::{Error, Result};
pub use mixture::{BiomarkerMixture, FitBounds, FitMethod, GaussianParams};
pub use models::{DebmFit, EventLikelihoodMatrices};
pub use ordering::{EventOrdering, PosteriorVector};
pub use sim::{SimConfig, SimResult};
