//! Signed graph clustering: generalized-eigenproblem embeddings, the signed
//! stochastic block model, and closed-form expected spectra.

pub mod eigen;
pub mod embedding;
pub mod graph;
pub mod kmeans;
pub mod metrics;
pub mod report;
pub mod sparse;
pub mod ssbm;
pub mod sweep;
pub mod theory;
pub mod timeseries;

pub use embedding::{Embedding, EmbeddingError, Method, MethodSpec};
pub use graph::{DegreePolicy, GraphError, LaplacianKind, SignedGraph};
pub use ssbm::{SsbmInstance, SsbmParams};
