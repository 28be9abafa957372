//! Readability assessment toolkit.
//!
//! Statistical linguistic features are extracted from dependency-annotated
//! documents, optionally joined with precomputed document embeddings, and fed
//! to from-scratch classifiers. The [`harness`] module runs the training,
//! ablation, data-size and feature-range protocols end to end.
//!
//! Numeric code is generic over [`num::Float`]; the aliases below fix the
//! scalar to `f64` (or `f32`) for everyday use.

pub mod classifiers;
pub mod corpus;
pub mod embeddings;
pub mod error;
pub mod eval;
pub mod features;
pub mod harness;
pub mod matrix;
pub mod num;

pub use error::{Error, Result};

pub type FeatureVector64 = features::FeatureVector<f64>;
pub type EmbeddingTable64 = embeddings::EmbeddingTable<f64>;
pub type DesignMatrix64 = embeddings::DesignMatrix<f64>;
pub type Standardizer64 = embeddings::Standardizer<f64>;
pub type Matrix64 = matrix::Matrix<f64>;
pub type Model64 = classifiers::Model<f64>;
pub type ForestModel64 = classifiers::ForestModel<f64>;
pub type SvmModel64 = classifiers::SvmModel<f64>;
pub type MlpModel64 = classifiers::MlpModel<f64>;

pub type Matrix32 = matrix::Matrix<f32>;
pub type DesignMatrix32 = embeddings::DesignMatrix<f32>;
pub type Model32 = classifiers::Model<f32>;
