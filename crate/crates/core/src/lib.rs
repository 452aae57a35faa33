//! Core library for partitioning hypergraphs drawn from high-order planted models.
//!
//! The pipeline: sample a hypergraph whose adjacency tensor hides `r` planted
//! clusters of size `k` ([`model`]), recover the clusters by maximizing
//! `⟨A, Y⟩` over agreement tensors ([`solver`]), and mechanically verify an
//! optimality certificate built from tensor fiber projections and spectral
//! concentration ([`certify`]). Supporting algebra lives in [`tensor`],
//! [`projections`] and [`spectral`].
//!
//! # Example
//!
//! ```
//! use hopm_core::certify::{certificate, CertifyOptions};
//! use hopm_core::model::{DiagonalPolicy, ModelInstance, ModelParams};
//! use hopm_core::solver::exhaustive_search;
//!
//! // two planted clusters of three vertices, strong signal
//! let params = ModelParams::new(6, 3, 2, 3, 0.95, 0.05, DiagonalPolicy::Bernoulli)?;
//! let instance = ModelInstance::sample(params, 7);
//!
//! let mut found = exhaustive_search(&instance.adjacency, 2, 3)?;
//! found.score_against(&instance.truth);
//! assert_eq!(found.exact, Some(true));
//!
//! // the certificate reports every intermediate quantity and a verdict
//! let report = certificate(&instance, &CertifyOptions::default())?;
//! assert!(report.margin.is_finite());
//! # Ok::<(), hopm_core::CoreError>(())
//! ```

pub mod certify;
pub mod error;
pub mod io;
mod linalg;
pub mod model;
pub mod projections;
pub mod rng;
pub mod solver;
pub mod spectral;
pub mod tensor;

pub use error::CoreError;
pub use model::{DiagonalPolicy, ModelInstance, ModelParams, Partition};
pub use tensor::SymmetricTensor;
