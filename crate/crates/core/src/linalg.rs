//! Dense complex linear-algebra kernels.
//!
//! Everything downstream depends on the sign and pivot conventions fixed here:
//! QR factors carry a strictly positive real diagonal, row echelon factors carry
//! strictly positive real pivots, and Cholesky factors are lower triangular with
//! a positive diagonal.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Dense complex matrix, the workhorse type of the crate.
pub type CMat = DMatrix<Complex64>;

/// Default relative tolerance for rank decisions.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

/// Relative tolerance used when checking that an input is Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-10;

#[inline]
pub fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[inline]
pub fn real(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Unit-modulus phase of `z`, with the convention that the phase of zero is one.
#[inline]
pub fn phase(z: Complex64) -> Complex64 {
    let r = z.norm();
    if r == 0.0 {
        real(1.0)
    } else {
        z / r
    }
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

/// The `n x k` matrix whose first `k` rows form the identity, i.e. `I_{n x k}`.
pub fn leading_identity(n: usize, k: usize) -> CMat {
    CMat::from_fn(n, k, |i, j| if i == j { real(1.0) } else { real(0.0) })
}

pub fn frob(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn all_finite(m: &CMat) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// `‖M − M*‖_F / ‖M‖_F` (zero for the zero matrix).
pub fn hermitian_defect(m: &CMat) -> f64 {
    if !m.is_square() {
        return f64::INFINITY;
    }
    let scale = frob(m);
    if scale == 0.0 {
        return 0.0;
    }
    frob(&(m - m.adjoint())) / scale
}

pub fn hermitian_part(m: &CMat) -> CMat {
    (m + m.adjoint()) * real(0.5)
}

fn ensure_hermitian(m: &CMat) -> Result<()> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "expected a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if !all_finite(m) {
        return Err(Error::InvalidArgument("matrix has non-finite entries".into()));
    }
    let d = hermitian_defect(m);
    if d > HERMITIAN_TOL {
        return Err(Error::NotHermitian(d));
    }
    Ok(())
}

/// Eigendecomposition of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct HermitianEig {
    /// Eigenvalues in ascending order.
    pub values: Vec<f64>,
    /// Unitary matrix whose column `j` pairs with `values[j]`.
    pub vectors: CMat,
}

impl HermitianEig {
    /// Reassemble `U diag(f(λ)) U*`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> CMat {
        let n = self.values.len();
        let mut scaled = self.vectors.clone();
        for j in 0..n {
            let s = real(f(self.values[j]));
            for i in 0..n {
                scaled[(i, j)] *= s;
            }
        }
        scaled * self.vectors.adjoint()
    }
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending.
///
/// Each eigenvector is rotated so that its first entry of largest modulus is
/// real and positive, which makes the output reproducible.
pub fn hermitian_eig(m: &CMat) -> Result<HermitianEig> {
    ensure_hermitian(m)?;
    let n = m.nrows();
    if n == 0 {
        return Ok(HermitianEig { values: vec![], vectors: CMat::zeros(0, 0) });
    }
    let eig = hermitian_part(m).symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]).then(a.cmp(&b)));
    let values = order.iter().map(|&j| eig.eigenvalues[j]).collect();
    let mut vectors = CMat::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let col = eig.eigenvectors.column(src);
        let big = col.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let anchor = col
            .iter()
            .position(|z| z.norm() >= big * (1.0 - 1e-8))
            .unwrap_or(0);
        let rot = phase(col[anchor]).conj();
        for i in 0..n {
            vectors[(i, dst)] = col[i] * rot;
        }
    }
    Ok(HermitianEig { values, vectors })
}

/// Number of singular values above `tol · σ_max`.
pub fn rank_with_tol(a: &CMat, tol: f64) -> usize {
    if a.nrows() == 0 || a.ncols() == 0 {
        return 0;
    }
    let sv = a.clone().singular_values();
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > tol * smax).count()
}

/// Number of zero singular values of `a` at the given relative tolerance,
/// counted against the number of columns.
pub fn nullity_with_tol(a: &CMat, tol: f64) -> usize {
    a.ncols() - rank_with_tol(a, tol).min(a.ncols())
}

/// Applies the reflector `I − 2 w w*` to rows `r0..` of `m` from the left.
fn reflect_rows(m: &mut CMat, r0: usize, w: &[Complex64]) {
    for c in 0..m.ncols() {
        let mut dot = real(0.0);
        for (i, wi) in w.iter().enumerate() {
            dot += wi.conj() * m[(r0 + i, c)];
        }
        if dot == real(0.0) {
            continue;
        }
        for (i, wi) in w.iter().enumerate() {
            m[(r0 + i, c)] -= *wi * dot * 2.0;
        }
    }
}

/// Applies the reflector `I − 2 w w*` to columns `c0..` of `m` from the right.
fn reflect_cols(m: &mut CMat, c0: usize, w: &[Complex64]) {
    for r in 0..m.nrows() {
        let mut dot = real(0.0);
        for (i, wi) in w.iter().enumerate() {
            dot += m[(r, c0 + i)] * *wi;
        }
        if dot == real(0.0) {
            continue;
        }
        for (i, wi) in w.iter().enumerate() {
            m[(r, c0 + i)] -= dot * wi.conj() * 2.0;
        }
    }
}

/// Unit Householder vector `w` with `(I − 2ww*) x = −phase(x₀)‖x‖ e₁`.
/// Returns `None` when `x` is zero.
pub(crate) fn householder_vector(x: &[Complex64]) -> Option<Vec<Complex64>> {
    let norm = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if norm == 0.0 {
        return None;
    }
    let mut u = x.to_vec();
    u[0] += phase(x[0]) * norm;
    let un = u.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    Some(u.into_iter().map(|z| z / un).collect())
}

/// Rank-revealing factorization `M = Q R` where `Q` (m×r) has orthonormal
/// columns and `R` (r×n) is in row echelon form with strictly positive pivots.
///
/// Columns are scanned left to right; a column becomes a pivot when its
/// remaining sub-column has norm above `tol · ‖M‖_F`. Sub-columns below that
/// threshold are set to zero.
pub fn echelon_qr(m: &CMat, tol: f64) -> (CMat, CMat) {
    echelon_qr_abs(m, tol * frob(m))
}

/// [`echelon_qr`] with an absolute drop threshold.
pub fn echelon_qr_abs(m: &CMat, thresh: f64) -> (CMat, CMat) {
    let (rows, cols) = m.shape();
    let mut w = m.clone();
    let mut q = identity(rows);
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let sub: Vec<Complex64> = (r..rows).map(|i| w[(i, c)]).collect();
        let norm = sub.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm <= thresh || norm == 0.0 {
            for i in r..rows {
                w[(i, c)] = real(0.0);
            }
            continue;
        }
        if let Some(h) = householder_vector(&sub) {
            reflect_rows(&mut w, r, &h);
            reflect_cols(&mut q, r, &h);
        }
        // Rotate the pivot onto the positive real axis.
        let ph = phase(w[(r, c)]);
        for j in 0..cols {
            w[(r, j)] *= ph.conj();
        }
        for i in 0..rows {
            q[(i, r)] *= ph;
        }
        w[(r, c)] = real(w[(r, c)].norm());
        for i in r + 1..rows {
            w[(i, c)] = real(0.0);
        }
        r += 1;
    }
    let qr = q.columns(0, r).into_owned();
    // Entries left of each pivot are exact zeros by construction.
    (qr, w.rows(0, r).into_owned())
}

/// QR factorization `M = Q R` of a full-column-rank matrix with `Q` (m×n)
/// having orthonormal columns and `R` (n×n) upper triangular with strictly
/// positive real diagonal.
pub fn qr_positive(m: &CMat) -> Result<(CMat, CMat)> {
    let (rows, cols) = m.shape();
    if rows < cols {
        return Err(Error::RankDeficient { rank: rows, expected: cols });
    }
    if !all_finite(m) {
        return Err(Error::InvalidArgument("matrix has non-finite entries".into()));
    }
    let thresh = DEFAULT_RANK_TOL * frob(m);
    let mut w = m.clone();
    let mut q = identity(rows);
    for c in 0..cols {
        let sub: Vec<Complex64> = (c..rows).map(|i| w[(i, c)]).collect();
        let norm = sub.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm <= thresh || norm == 0.0 {
            return Err(Error::RankDeficient { rank: c, expected: cols });
        }
        if let Some(h) = householder_vector(&sub) {
            reflect_rows(&mut w, c, &h);
            reflect_cols(&mut q, c, &h);
        }
        let ph = phase(w[(c, c)]);
        for j in 0..cols {
            w[(c, j)] *= ph.conj();
        }
        for i in 0..rows {
            q[(i, c)] *= ph;
        }
        w[(c, c)] = real(w[(c, c)].norm());
        for i in c + 1..rows {
            w[(i, c)] = real(0.0);
        }
    }
    Ok((q.columns(0, cols).into_owned(), w.rows(0, cols).into_owned()))
}

/// Factor a PSD matrix as `A = R* R` with `R` (r×n, r = rank) in row echelon
/// form with strictly positive pivots. This factor is unique.
pub fn ref_factor(a: &CMat, tol: f64) -> Result<CMat> {
    let eig = hermitian_eig(a)?;
    let n = a.nrows();
    let lmax = eig.values.iter().cloned().fold(0.0_f64, |m, v| m.max(v.abs()));
    if let Some(&lmin) = eig.values.first() {
        if lmin < -tol.max(1e-14) * lmax.max(f64::MIN_POSITIVE) && lmin < 0.0 {
            return Err(Error::NotPsd(lmin));
        }
    }
    let keep: Vec<usize> = (0..n).filter(|&j| eig.values[j] > tol * lmax).collect();
    // X = Λ₊^{1/2} U₊*, so X* X = A up to dropped eigenvalues.
    let mut x = CMat::zeros(keep.len(), n);
    for (row, &j) in keep.iter().enumerate() {
        let s = eig.values[j].sqrt();
        for c in 0..n {
            x[(row, c)] = eig.vectors[(c, j)].conj() * s;
        }
    }
    let (_, r) = echelon_qr(&x, tol);
    Ok(r)
}

/// Cholesky factor `L` (lower triangular, positive diagonal) with `A = L L*`.
pub fn cholesky(a: &CMat) -> Result<CMat> {
    ensure_hermitian(a)?;
    let n = a.nrows();
    let a = hermitian_part(a);
    let scale = a.diagonal().iter().map(|z| z.re.abs()).fold(0.0, f64::max);
    let mut l = CMat::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)].re;
        for p in 0..j {
            d -= l[(j, p)].norm_sqr();
        }
        if !(d > DEFAULT_RANK_TOL * scale) || d <= 0.0 {
            return Err(Error::NotPositiveDefinite(d));
        }
        let djj = d.sqrt();
        l[(j, j)] = real(djj);
        for i in j + 1..n {
            let mut s = a[(i, j)];
            for p in 0..j {
                s -= l[(i, p)] * l[(j, p)].conj();
            }
            l[(i, j)] = s / djj;
        }
    }
    Ok(l)
}

/// Solve `L X = B` for lower triangular `L`.
pub fn solve_lower(l: &CMat, b: &CMat) -> CMat {
    let n = l.nrows();
    let mut x = b.clone();
    for c in 0..b.ncols() {
        for i in 0..n {
            let mut s = x[(i, c)];
            for p in 0..i {
                s -= l[(i, p)] * x[(p, c)];
            }
            x[(i, c)] = s / l[(i, i)];
        }
    }
    x
}

/// Solve `U X = B` for upper triangular `U`.
pub fn solve_upper(u: &CMat, b: &CMat) -> CMat {
    let n = u.nrows();
    let mut x = b.clone();
    for c in 0..b.ncols() {
        for i in (0..n).rev() {
            let mut s = x[(i, c)];
            for p in i + 1..n {
                s -= u[(i, p)] * x[(p, c)];
            }
            x[(i, c)] = s / u[(i, i)];
        }
    }
    x
}

/// Right inverse `B† = B* (B B*)⁻¹` of a full-row-rank `B` (r×n).
pub fn right_pseudoinverse(b: &CMat) -> Result<CMat> {
    let r = b.nrows();
    if r > b.ncols() {
        return Err(Error::RankDeficient { rank: b.ncols(), expected: r });
    }
    let rank = rank_with_tol(b, DEFAULT_RANK_TOL);
    if rank < r {
        return Err(Error::RankDeficient { rank, expected: r });
    }
    let gram = b * b.adjoint();
    let l = cholesky(&hermitian_part(&gram))?;
    // (B B*)⁻¹ B = L⁻* L⁻¹ B
    let y = solve_lower(&l, b);
    let z = solve_upper(&l.adjoint(), &y);
    Ok(z.adjoint())
}

/// `exp(t M)` for Hermitian `M`.
pub fn hermitian_expm(m: &CMat, t: f64) -> Result<CMat> {
    let eig = hermitian_eig(m)?;
    Ok(eig.map(|l| (t * l).exp()))
}

/// Principal square root of a Hermitian PSD matrix (negative roundoff clipped).
pub fn psd_sqrt(a: &CMat) -> Result<CMat> {
    let eig = hermitian_eig(a)?;
    Ok(eig.map(|l| l.max(0.0).sqrt()))
}

/// Inverse principal square root of a Hermitian positive definite matrix.
pub fn pd_inv_sqrt(a: &CMat) -> Result<CMat> {
    let eig = hermitian_eig(a)?;
    let lmax = eig.values.iter().cloned().fold(0.0_f64, |m, v| m.max(v.abs()));
    if let Some(&lmin) = eig.values.first() {
        if lmin <= DEFAULT_RANK_TOL * lmax {
            return Err(Error::NotPositiveDefinite(lmin));
        }
    }
    Ok(eig.map(|l| 1.0 / l.sqrt()))
}

/// Columns whose leading nonzero entry (by row) define the pivot pattern of
/// a row echelon matrix: entry `i` is the pivot column of row `i`, or `None`
/// for a zero row. Entries below `tol · max|entry|` count as zero.
pub fn pivot_columns(m: &CMat, tol: f64) -> Vec<Option<usize>> {
    let thresh = tol * max_abs(m);
    (0..m.nrows())
        .map(|i| (0..m.ncols()).find(|&j| m[(i, j)].norm() > thresh))
        .collect()
}
