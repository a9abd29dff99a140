//! Desk-scale multi-modal molecular representation pretraining.
//!
//! The crate implements a complete, framework-free pretraining pipeline for
//! molecules observed through several feature modalities (molecular
//! fingerprints/descriptors plus sparsely observed cellular and genetic
//! readouts):
//!
//! * [`data`] — modality schemas, record storage, a synthetic data generator,
//!   and JSON-lines persistence.
//! * [`propagation`] — k-nearest-neighbour similarity graphs and iterative
//!   feature propagation that fills missing modality rows, with a direct
//!   linear-solve oracle and a Dirichlet energy functional for validation.
//! * [`alignment`] — affine projectors into a shared latent space, an InfoNCE
//!   contrastive loss, and a variance/invariance/covariance regularizer, all
//!   with hand-derived analytic gradients.
//! * [`treevq`] — a binary-tree codebook with greedy root-to-leaf routing,
//!   a stop-gradient commitment loss, and geometric guarantees on the
//!   similarity of vectors quantized to the same leaf.
//! * [`context`] — a heterogeneous molecule/context graph, seeded weighted
//!   random walks, and a walk-weighted reconstruction loss.
//! * [`model`] / [`trainer`] — parameter containers with JSON checkpoints, the
//!   combined training objective, finite-difference gradient verification, and
//!   a deterministic Adam training loop.
//! * [`eval`] — embedding extraction, a linear probe (AUC / MAE), and a
//!   convex ensemble combiner.
//!
//! All numeric kernels are generic over the [`scalar::Scalar`] floating-point
//! type; [`Real`] pins the precision used by the binary, file formats, and
//! tests.

pub mod alignment;
pub mod cli;
pub mod context;
pub mod data;
pub mod error;
pub mod eval;
pub mod linalg;
pub mod model;
pub mod propagation;
pub mod scalar;
pub mod trainer;
pub mod treevq;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Concrete scalar type used by the command-line interface, file formats and
/// acceptance tests. Gradient verification tolerances assume f64 precision;
/// f32 remains available through the generic APIs.
pub type Real = f64;
