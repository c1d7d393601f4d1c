//! Technology embedding space and fitness landscape.
//!
//! The pipeline turns a patent corpus (documents, citations, domain labels and
//! per-domain improvement rates) into:
//!
//! * a domain-level citation graph with row-normalized weights ([`corpus`]),
//! * per-domain semantic features from document vectors ([`textembed`]),
//! * 32-dim GraphSAGE embeddings trained by unsupervised link prediction ([`graphembed`]),
//! * a 2D t-SNE layout ([`project`]),
//! * a kernel-smoothed fitness surface, contours and the global peak ([`landscape`]),
//! * distance-decile, NBER theme-shift and NMF topic analyses ([`analyze`]),
//!
//! and exports everything as one self-describing JSON bundle ([`bundle`]).
//!
//! Data-parallel inner loops go through [`par`], which uses rayon when the
//! `parallel` feature is enabled and plain iterators otherwise. Results are
//! identical either way.

pub mod analyze;
pub mod bundle;
pub mod config;
pub mod corpus;
pub mod error;
pub mod graphembed;
pub mod io;
pub mod landscape;
pub mod math;
pub mod par;
pub mod pipeline;
pub mod project;
pub mod synth;
pub mod textembed;

pub use error::{Error, Result};

use rand::SeedableRng;

/// Seeded generator used by every stochastic stage.
pub type Rng = rand_chacha::ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> Rng {
    Rng::seed_from_u64(seed)
}
