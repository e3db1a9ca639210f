//! Divide-and-conquer anchoring for separable non-negative matrix
//! factorization, together with a desk-scale classical simulation of its
//! quantum counterpart.
//!
//! Row and column indexes are 0-based throughout.

pub mod dca;
pub mod error;
pub mod generate;
pub mod harness;
pub mod io;
pub mod matrix;
pub mod nnls;
pub mod pipeline;
pub mod postsel;
pub mod qsim;
pub mod seed;

pub use dca::{dca_solve, AnchorSet, AnchorVotes};
pub use error::{Error, Result};
pub use generate::{generate_separable, SeparableInstance};
pub use matrix::{eigendecompose, embed_hermitian, HermitianEmbedding, NonnegMatrix, Spectrum, SymmetricMatrix};
pub use pipeline::{qdca_solve, QdcaConfig, QdcaTrace};
