//! Banded Hermitian matrices of the class `J(k, N)`, the spectral map `φ`
//! and its inverse `ψ`.

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, frob, real, CMat};
use crate::measure::{validate_measure, MatrixMeasure};
use crate::orthopoly::recurrence_data;
use crate::poly::MatrixPolynomial;
use crate::{block_shape, Tolerances};

/// Block tridiagonal Hermitian matrix
///
/// ```text
///     [ A_0  B_0*                 ]
///     [ B_0  A_1  B_1*            ]
/// J = [      B_1  ...   ...       ]
///     [           ...   A_{n−2}  B_{n−2}* ]
///     [                 B_{n−2}  A_{n−1}  ]
/// ```
///
/// with `A_{n−1}` of size `(k−ℓ)×(k−ℓ)` and `B_{n−2}` of size `(k−ℓ)×k`.
#[derive(Debug, Clone, PartialEq)]
pub struct BandedHermitian {
    k: usize,
    n_total: usize,
    a: Vec<CMat>,
    b: Vec<CMat>,
}

/// A single way in which a dense matrix fails to be in `J(k, N)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    /// Nonzero entry outside the block band.
    Band { row: usize, col: usize, magnitude: f64 },
    /// Subdiagonal block `B_j` is not upper triangular / row echelon, or a
    /// pivot is not positive real.
    Pivot { block: usize, row: usize, detail: String },
    /// Subdiagonal block `B_j` is rank deficient.
    Rank { block: usize, rank: usize, expected: usize },
    /// Wrong overall shape.
    Shape { detail: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Band { row, col, magnitude } => {
                write!(f, "entry ({row}, {col}) lies outside the band (|value| = {magnitude:.3e})")
            }
            Violation::Pivot { block, row, detail } => write!(f, "B_{block} row {row}: {detail}"),
            Violation::Rank { block, rank, expected } => {
                write!(f, "B_{block} has rank {rank}, expected {expected}")
            }
            Violation::Shape { detail } => write!(f, "{detail}"),
        }
    }
}

fn join(v: &[Violation]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

impl BandedHermitian {
    /// Builds a matrix from its blocks and checks the class conditions with the
    /// default tolerances.
    pub fn new(k: usize, n_total: usize, a: Vec<CMat>, b: Vec<CMat>) -> Result<Self> {
        let j = Self::from_blocks_unchecked(k, n_total, a, b)?;
        let violations = structure_violations(&j.to_dense(), k, &Tolerances::default());
        if !violations.is_empty() {
            return Err(Error::Structure(join(&violations)));
        }
        if linalg::hermitian_defect(&j.to_dense()) > linalg::HERMITIAN_TOL {
            return Err(Error::NotHermitian(linalg::hermitian_defect(&j.to_dense())));
        }
        Ok(j)
    }

    /// Builds a matrix from blocks, checking only shapes.
    pub fn from_blocks_unchecked(k: usize, n_total: usize, a: Vec<CMat>, b: Vec<CMat>) -> Result<Self> {
        if k == 0 || n_total < k {
            return Err(Error::InvalidArgument(format!("need 1 ≤ k ≤ N, got k = {k}, N = {n_total}")));
        }
        let (n, ell) = block_shape(n_total, k);
        if a.len() != n || b.len() != n - 1 {
            return Err(Error::DimensionMismatch(format!(
                "expected {n} diagonal and {} subdiagonal blocks, got {} and {}",
                n - 1,
                a.len(),
                b.len()
            )));
        }
        for (j, blk) in a.iter().enumerate() {
            let w = if j + 1 == n { k - ell } else { k };
            if blk.shape() != (w, w) {
                return Err(Error::DimensionMismatch(format!("A_{j} is {}x{}, expected {w}x{w}", blk.nrows(), blk.ncols())));
            }
        }
        for (j, blk) in b.iter().enumerate() {
            let h = if j + 2 == n { k - ell } else { k };
            if blk.shape() != (h, k) {
                return Err(Error::DimensionMismatch(format!("B_{j} is {}x{}, expected {h}x{k}", blk.nrows(), blk.ncols())));
            }
        }
        Ok(BandedHermitian { k, n_total, a, b })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Matrix size `N`.
    pub fn size(&self) -> usize {
        self.n_total
    }

    /// Number of block rows `n = ⌈N/k⌉`.
    pub fn n(&self) -> usize {
        self.a.len()
    }

    /// `ℓ = nk − N`.
    pub fn ell(&self) -> usize {
        self.n() * self.k - self.n_total
    }

    pub fn a(&self) -> &[CMat] {
        &self.a
    }

    pub fn b(&self) -> &[CMat] {
        &self.b
    }

    /// Assembles the dense `N × N` matrix.
    pub fn to_dense(&self) -> CMat {
        let k = self.k;
        let mut m = CMat::zeros(self.n_total, self.n_total);
        for (j, blk) in self.a.iter().enumerate() {
            m.view_mut((j * k, j * k), blk.shape()).copy_from(blk);
        }
        for (j, blk) in self.b.iter().enumerate() {
            m.view_mut(((j + 1) * k, j * k), blk.shape()).copy_from(blk);
            m.view_mut((j * k, (j + 1) * k), (blk.ncols(), blk.nrows())).copy_from(&blk.adjoint());
        }
        m
    }

    /// Largest block-wise Frobenius distance to another matrix of the same shape.
    pub fn block_distance(&self, other: &BandedHermitian) -> Option<f64> {
        if self.k != other.k || self.n_total != other.n_total {
            return None;
        }
        let d = self
            .a
            .iter()
            .zip(&other.a)
            .chain(self.b.iter().zip(&other.b))
            .map(|(x, y)| frob(&(x - y)))
            .fold(0.0, f64::max);
        Some(d)
    }

    /// Pivot column of every row of every subdiagonal block.
    pub fn pivot_pattern(&self, tol: f64) -> Vec<Vec<Option<usize>>> {
        self.b.iter().map(|blk| linalg::pivot_columns(blk, tol)).collect()
    }

    /// Multiplies every block by a positive scalar.
    pub fn scaled(&self, c: f64) -> Self {
        assert!(c > 0.0, "scale must be positive to stay in the class");
        let s = real(c);
        BandedHermitian {
            k: self.k,
            n_total: self.n_total,
            a: self.a.iter().map(|m| m * s).collect(),
            b: self.b.iter().map(|m| m * s).collect(),
        }
    }
}

/// Selection matrix `E_j` (`N × w`): identity on block `j`, zero elsewhere.
/// The last block is `k − ℓ` wide.
pub fn selection_block(n_total: usize, k: usize, j: usize) -> Result<CMat> {
    let (n, ell) = block_shape(n_total, k);
    if j >= n {
        return Err(Error::InvalidArgument(format!("block index {j} out of range for n = {n}")));
    }
    let w = if j + 1 == n { k - ell } else { k };
    let mut e = CMat::zeros(n_total, w);
    for i in 0..w {
        e[(j * k + i, i)] = real(1.0);
    }
    Ok(e)
}

/// Lists every violation of the class conditions for a dense square matrix.
/// Entries with modulus at most `tol.rank · max|M|` count as zero.
pub fn structure_violations(m: &CMat, k: usize, tol: &Tolerances) -> Vec<Violation> {
    let mut out = Vec::new();
    let n_total = m.nrows();
    if !m.is_square() || k == 0 || n_total < k {
        out.push(Violation::Shape {
            detail: format!("need a square N×N matrix with 1 ≤ k ≤ N, got {}x{} and k = {k}", m.nrows(), m.ncols()),
        });
        return out;
    }
    let (n, ell) = block_shape(n_total, k);
    let zero = tol.rank * linalg::max_abs(m);
    for r in 0..n_total {
        for c in 0..r {
            if r / k > c / k + 1 && m[(r, c)].norm() > zero {
                out.push(Violation::Band { row: r, col: c, magnitude: m[(r, c)].norm() });
            }
        }
    }
    for j in 0..n.saturating_sub(1) {
        let h = if j + 2 == n { k - ell } else { k };
        let blk = m.view(((j + 1) * k, j * k), (h, k)).into_owned();
        let pivots: Vec<Option<usize>> =
            (0..h).map(|i| (0..k).find(|&c| blk[(i, c)].norm() > zero)).collect();
        let last = j + 2 == n;
        let mut prev: Option<usize> = None;
        for (i, p) in pivots.iter().enumerate() {
            match *p {
                None => {}
                Some(c) => {
                    if !last && c != i {
                        out.push(Violation::Pivot {
                            block: j,
                            row: i,
                            detail: format!("leading entry in column {c}, expected the diagonal"),
                        });
                    } else if last && prev.is_some_and(|q| c <= q) {
                        out.push(Violation::Pivot {
                            block: j,
                            row: i,
                            detail: format!("pivot column {c} does not move right"),
                        });
                    }
                    let z = blk[(i, c)];
                    if z.re <= 0.0 || z.im.abs() > zero {
                        out.push(Violation::Pivot {
                            block: j,
                            row: i,
                            detail: format!("pivot {:.3e}{:+.3e}i is not positive real", z.re, z.im),
                        });
                    }
                    prev = Some(c);
                }
            }
        }
        let rank = linalg::rank_with_tol(&blk, tol.rank);
        if pivots.iter().any(Option::is_none) || rank < h {
            out.push(Violation::Rank { block: j, rank: rank.min(pivots.iter().flatten().count()), expected: h });
        }
    }
    out
}

/// Extracts the blocks of a dense matrix and checks every class condition.
pub fn validate_banded(m: &CMat, k: usize, tol: &Tolerances) -> Result<BandedHermitian> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch(format!("matrix is {}x{}", m.nrows(), m.ncols())));
    }
    if !linalg::all_finite(m) {
        return Err(Error::InvalidArgument("matrix has non-finite entries".into()));
    }
    let defect = linalg::hermitian_defect(m);
    if defect > linalg::HERMITIAN_TOL {
        return Err(Error::NotHermitian(defect));
    }
    let violations = structure_violations(m, k, tol);
    if !violations.is_empty() {
        return Err(Error::Structure(join(&violations)));
    }
    let n_total = m.nrows();
    let (n, ell) = block_shape(n_total, k);
    let a = (0..n)
        .map(|j| {
            let w = if j + 1 == n { k - ell } else { k };
            m.view((j * k, j * k), (w, w)).into_owned()
        })
        .collect();
    let b = (0..n - 1)
        .map(|j| {
            let h = if j + 2 == n { k - ell } else { k };
            m.view(((j + 1) * k, j * k), (h, k)).into_owned()
        })
        .collect();
    BandedHermitian::from_blocks_unchecked(k, n_total, a, b)
}

/// `φ(J) = Σ_j V_j V_j* δ_{x_j}` with `V_j` the first `k` rows of the
/// eigenvectors for the eigenvalue `x_j`.
pub fn spectral_map(j: &BandedHermitian, tol: &Tolerances) -> Result<MatrixMeasure> {
    let eig = linalg::hermitian_eig(&j.to_dense())?;
    let k = j.k;
    let points = eig
        .values
        .iter()
        .enumerate()
        .map(|(c, &x)| {
            let v = eig.vectors.view((0, c), (k, 1)).into_owned();
            (x, &v * v.adjoint())
        })
        .collect();
    MatrixMeasure::from_weights(k, points, tol)
}

/// `ψ(μ)`: the banded matrix whose blocks are the recurrence coefficients of
/// the orthonormal polynomials of `μ`.
pub fn inverse_spectral_map(mu: &MatrixMeasure, tol: &Tolerances) -> Result<BandedHermitian> {
    let n_total = mu.rank_sum();
    let report = validate_measure(mu, mu.k(), n_total, tol);
    if !report.member {
        return Err(Error::NotInClass(report.failures.join("; ")));
    }
    let d = recurrence_data(mu, tol)?;
    BandedHermitian::from_blocks_unchecked(mu.k(), n_total, d.a, d.b)
}

/// Polynomials `P_0 … P_{n−1}` built from the blocks of `J` by
/// `xP_j = P_{j−1}B*_{j−1} + P_jA_j + P_{j+1}B_j`, so that `P_j(J) ∘ E_0 = E_j`.
pub fn lanczos_polynomials(j: &BandedHermitian) -> Result<Vec<MatrixPolynomial>> {
    let k = j.k;
    let n = j.n();
    let mut p = vec![MatrixPolynomial::identity(k)];
    for i in 0..n - 1 {
        let mut t = p[i].mul_x().sub(&p[i].mul_right(&j.a[i]));
        if i > 0 {
            t = t.sub(&p[i - 1].mul_right(&j.b[i - 1].adjoint()));
        }
        p.push(t.mul_right(&linalg::right_pseudoinverse(&j.b[i])?));
    }
    Ok(p)
}
