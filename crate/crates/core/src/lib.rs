//! Direct and inverse spectral theory for finite Hermitian banded matrices.
//!
//! A matrix in the class `J(k, N)` is block tridiagonal with `k×k` blocks,
//! except that the last block row/column may be `k − ℓ` wide, and its
//! subdiagonal blocks are upper triangular (the last one in row echelon form)
//! with positive pivots. Such a matrix is determined by its `k×k`
//! matrix-valued spectral measure, built from its eigenvalues and the first
//! `k` rows of its eigenvectors.
//!
//! The crate provides
//!
//! * [`spectral::spectral_map`] and [`spectral::inverse_spectral_map`], the
//!   bijection between banded matrices and measures, with the inverse built
//!   from matrix orthogonal polynomials ([`orthopoly`]);
//! * block Lanczos and block Householder reductions ([`tridiag`]);
//! * three independent solvers for the Toda flow on banded matrices ([`toda`]).

pub mod cli;
pub mod error;
pub mod io;
pub mod linalg;
pub mod measure;
pub mod orthopoly;
pub mod poly;
pub mod random;
pub mod spectral;
pub mod toda;
pub mod tridiag;

pub use error::{Error, Result};
pub use linalg::{CMat, HermitianEig};
pub use measure::{MatrixMeasure, MeasureClassReport};
pub use poly::MatrixPolynomial;
pub use spectral::BandedHermitian;

/// Numerical thresholds that stand in for exact rank and equality decisions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Relative threshold below which a singular value or eigenvalue counts as zero.
    pub rank: f64,
    /// Support points closer than `merge · range(points)` are treated as one atom.
    pub merge: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { rank: linalg::DEFAULT_RANK_TOL, merge: 1e-9 }
    }
}

impl Tolerances {
    pub fn with_rank(rank: f64) -> Self {
        Tolerances { rank, ..Default::default() }
    }
}

/// `n = ⌈N/k⌉` and `ℓ = nk − N` for a matrix of size `N` and block size `k`.
pub fn block_shape(n_total: usize, k: usize) -> (usize, usize) {
    let n = n_total.div_ceil(k);
    (n, n * k - n_total)
}
