//! Gaussian distributions on three symmetric spaces of structured
//! covariance matrices: Hermitian positive definite matrices, Toeplitz
//! HPD matrices in reflection-coefficient coordinates, and block-Toeplitz
//! HPD matrices in matrix reflection-coefficient coordinates.
//!
//! The crate provides exact invariant distances, normalizing factors
//! Z(sigma) (analytic or Monte Carlo), samplers, maximum-likelihood
//! estimation through Riemannian barycentres, EM mixture estimation with
//! BIC order selection, and Bayes classification, plus a batch CLI and
//! JSON artifact formats.

pub mod block_toeplitz;
pub mod error;
pub mod hpd;
pub mod interp;
pub mod manifold;
pub mod matfun;
pub mod toeplitz;
pub mod rng;

pub use error::{Error, Result};
