//! Community-invariant spectral graph augmentation.
//!
//! Normalized-Laplacian spectra, first-order eigenvalue perturbation,
//! budgeted augmentation plans optimized by projected gradient steps,
//! spectral clustering for measuring community change, and a small
//! contrastive pipeline that ties them together.

pub mod augment;
pub mod community;
pub mod contrastive;
pub mod error;
pub mod experiment;
pub mod graph;
pub mod perturbation;
pub mod spectral;
pub mod verify;

pub use error::{Error, Result};
pub use graph::Graph;
