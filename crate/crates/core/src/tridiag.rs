//! Block tridiagonalization: block Lanczos and Householder reduction.

use serde::Serialize;

use crate::block_shape;
use crate::error::{Error, Result};
use crate::linalg::{self, frob, phase, real, CMat};
use crate::measure::MatrixMeasure;
use crate::spectral::{inverse_spectral_map, BandedHermitian};
use crate::Tolerances;

/// Output of block Lanczos.
#[derive(Debug, Clone)]
pub struct LanczosOutput {
    /// Diagonal blocks `A_0, A_1, …`.
    pub a: Vec<CMat>,
    /// Subdiagonal blocks `B_0, B_1, …` (`B_j` is `width_{j+1} × width_j`).
    pub b: Vec<CMat>,
    /// Orthonormal basis blocks `V_1, V_2, …`.
    pub basis: Vec<CMat>,
    /// True when the basis spans the whole space with full blocks of width `k`
    /// except possibly the last.
    pub completed: bool,
    /// Number of diagonal blocks produced.
    pub steps: usize,
}

impl LanczosOutput {
    /// `[V_1 … V_n]`.
    pub fn basis_matrix(&self) -> CMat {
        let rows = self.basis.first().map_or(0, |v| v.nrows());
        let cols: usize = self.basis.iter().map(|v| v.ncols()).sum();
        let mut q = CMat::zeros(rows, cols);
        let mut c = 0;
        for v in &self.basis {
            q.view_mut((0, c), v.shape()).copy_from(v);
            c += v.ncols();
        }
        q
    }

    /// The block tridiagonal matrix assembled from the blocks.
    pub fn to_dense(&self) -> CMat {
        let widths: Vec<usize> = self.a.iter().map(|a| a.nrows()).collect();
        let total: usize = widths.iter().sum();
        let mut m = CMat::zeros(total, total);
        let mut off = 0;
        for (j, a) in self.a.iter().enumerate() {
            m.view_mut((off, off), a.shape()).copy_from(a);
            if let Some(b) = self.b.get(j) {
                let next = off + widths[j];
                if next < total {
                    m.view_mut((next, off), b.shape()).copy_from(b);
                    m.view_mut((off, next), (b.ncols(), b.nrows())).copy_from(&b.adjoint());
                }
            }
            off += widths[j];
        }
        m
    }

    /// The output as a member of `J(k, N)`; requires `completed`.
    pub fn to_banded(&self, k: usize) -> Result<BandedHermitian> {
        if !self.completed {
            return Err(Error::Incomparable(self.steps));
        }
        let n_total = self.a.iter().map(|a| a.nrows()).sum();
        let b = self.b[..self.a.len() - 1].to_vec();
        BandedHermitian::from_blocks_unchecked(k, n_total, self.a.clone(), b)
    }
}

/// Block Lanczos with start block `V`, at most `steps` iterations.
///
/// Each residual block is factored by a rank-revealing QR that drops
/// directions with norm below `tol.rank · ‖A‖_F`. The iteration stops early
/// when a residual block has rank zero and stops normally once the basis has
/// `N` columns.
pub fn block_lanczos(a: &CMat, v: &CMat, steps: usize, reorth: bool, tol: &Tolerances) -> Result<LanczosOutput> {
    if !a.is_square() || a.nrows() != v.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "A is {}x{}, V is {}x{}",
            a.nrows(),
            a.ncols(),
            v.nrows(),
            v.ncols()
        )));
    }
    let defect = linalg::hermitian_defect(a);
    if defect > linalg::HERMITIAN_TOL {
        return Err(Error::NotHermitian(defect));
    }
    let n_total = a.nrows();
    let k = v.ncols();
    let drop = tol.rank * frob(a).max(frob(v));
    let (v1, _) = linalg::echelon_qr_abs(v, tol.rank * frob(v));
    if v1.ncols() == 0 {
        return Err(Error::RankZeroStart);
    }
    let mut basis = vec![v1];
    let mut ab = Vec::new();
    let mut bb: Vec<CMat> = Vec::new();
    let mut filled = basis[0].ncols();
    let mut early = false;
    for j in 0..steps {
        let vj = &basis[j];
        let mut z = a * vj;
        if j > 0 {
            z -= &basis[j - 1] * bb[j - 1].adjoint();
        }
        let aj = linalg::hermitian_part(&(vj.adjoint() * &z));
        z -= vj * &aj;
        if reorth {
            for _ in 0..2 {
                for u in &basis {
                    let proj = u.adjoint() * &z;
                    z -= u * proj;
                }
            }
        }
        ab.push(aj);
        if filled >= n_total || j + 1 == steps {
            break;
        }
        let (q, r) = linalg::echelon_qr_abs(&z, drop);
        if q.ncols() == 0 {
            early = true;
            break;
        }
        filled += q.ncols();
        bb.push(r);
        basis.push(q);
    }
    let (n, ell) = block_shape(n_total, k);
    let widths_ok = basis.len() == n
        && basis.iter().enumerate().all(|(j, b)| b.ncols() == if j + 1 == n { k - ell } else { k });
    Ok(LanczosOutput { steps: ab.len(), completed: !early && filled == n_total && widths_ok, a: ab, b: bb, basis })
}

/// Householder reduction of a Hermitian matrix to bandwidth `k`, followed
/// by a diagonal unitary similarity that makes every pivot of the
/// subdiagonal blocks positive. Returns the reduced dense matrix.
pub fn householder_reduce(a: &CMat, k: usize) -> Result<CMat> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch(format!("matrix is {}x{}", a.nrows(), a.ncols())));
    }
    let defect = linalg::hermitian_defect(a);
    if defect > linalg::HERMITIAN_TOL {
        return Err(Error::NotHermitian(defect));
    }
    if k == 0 {
        return Err(Error::InvalidArgument("block size must be positive".into()));
    }
    let n_total = a.nrows();
    let mut m = linalg::hermitian_part(a);
    for j in 0..n_total.saturating_sub(k + 1) {
        let r0 = j + k;
        let x: Vec<_> = (r0..n_total).map(|i| m[(i, j)]).collect();
        let Some(w) = linalg::householder_vector(&x) else { continue };
        // rows r0.. : M ← H M
        for c in 0..n_total {
            let s: num_complex::Complex64 = (0..w.len()).map(|i| w[i].conj() * m[(r0 + i, c)]).sum();
            for i in 0..w.len() {
                m[(r0 + i, c)] -= w[i] * s * 2.0;
            }
        }
        // columns r0.. : M ← M H
        for r in 0..n_total {
            let s: num_complex::Complex64 = (0..w.len()).map(|i| m[(r, r0 + i)] * w[i]).sum();
            for i in 0..w.len() {
                m[(r, r0 + i)] -= s * w[i].conj() * 2.0;
            }
        }
        for i in r0 + 1..n_total {
            m[(i, j)] = real(0.0);
            m[(j, i)] = real(0.0);
        }
    }
    let scale = linalg::max_abs(&m);
    let mut d = vec![real(1.0); n_total];
    for r in k..n_total {
        let blk = r / k - 1;
        let pivot = (blk * k..(blk + 1) * k).find(|&c| m[(r, c)].norm() > 1e-14 * scale);
        if let Some(p) = pivot {
            d[r] = d[p] * phase(m[(r, p)]);
        }
    }
    let mut out = CMat::zeros(n_total, n_total);
    for r in 0..n_total {
        for c in 0..n_total {
            if r.abs_diff(c) <= k {
                out[(r, c)] = d[r].conj() * m[(r, c)] * d[c];
            }
        }
    }
    for r in k..n_total {
        let blk = r / k - 1;
        if let Some(p) = (blk * k..(blk + 1) * k).find(|&c| out[(r, c)].norm() > 1e-14 * scale) {
            out[(r, p)] = real(out[(r, p)].norm());
            out[(p, r)] = out[(r, p)];
        }
    }
    Ok(linalg::hermitian_part(&out))
}

/// Householder reduction returned as blocks of `J(k, N)`.
///
/// Blocks are read off the reduced matrix; when a subdiagonal block comes out
/// rank deficient the result is not a member of the class.
pub fn householder_blocktridiag(a: &CMat, k: usize) -> Result<BandedHermitian> {
    let m = householder_reduce(a, k)?;
    let n_total = m.nrows();
    if n_total < k {
        return Err(Error::InvalidArgument(format!("N = {n_total} is smaller than k = {k}")));
    }
    let (n, ell) = block_shape(n_total, k);
    let width = |j: usize| if j + 1 == n { k - ell } else { k };
    let blocks_a = (0..n).map(|j| m.view((j * k, j * k), (width(j), width(j))).into_owned()).collect();
    let blocks_b = (0..n - 1).map(|j| m.view(((j + 1) * k, j * k), (width(j + 1), k)).into_owned()).collect();
    BandedHermitian::from_blocks_unchecked(k, n_total, blocks_a, blocks_b)
}

/// Agreement report for the two reductions.
#[derive(Debug, Clone, Serialize)]
pub struct EquivalenceReport {
    pub k: usize,
    pub n_total: usize,
    pub lanczos_steps: usize,
    /// Largest block-wise Frobenius difference.
    pub max_block_error: f64,
    /// `max_block_error / max(‖A‖_F, 1)`.
    pub scaled_error: f64,
    pub tolerance: f64,
    pub agree: bool,
    /// Block distance between the Lanczos output and `ψ` applied to the
    /// measure `Σ_j u_j u_j* δ_{λ_j}` (first `k` entries of eigenvectors of `A`).
    /// Reported only, never asserted.
    pub measure_route_error: Option<f64>,
}

/// Default equivalence tolerance, relative to `‖A‖_F`.
pub const EQUIVALENCE_TOL: f64 = 1e-8;

/// Runs block Lanczos from `I_{N×k}` and Householder on `A` and compares the blocks.
pub fn equivalence_check(a: &CMat, k: usize, tol: &Tolerances) -> Result<EquivalenceReport> {
    let n_total = a.nrows();
    if k == 0 || n_total < k {
        return Err(Error::InvalidArgument(format!("need 1 ≤ k ≤ N, got k = {k}, N = {n_total}")));
    }
    let (n, _) = block_shape(n_total, k);
    let lz = block_lanczos(a, &linalg::leading_identity(n_total, k), n, true, tol)?;
    if !lz.completed {
        return Err(Error::Incomparable(lz.steps));
    }
    let jl = lz.to_banded(k)?;
    let jh = householder_blocktridiag(a, k)?;
    let err = jl.block_distance(&jh).expect("same shape");
    let scaled = err / frob(a).max(1.0);

    let measure_route_error = linalg::hermitian_eig(a).ok().and_then(|eig| {
        let pts = eig
            .values
            .iter()
            .enumerate()
            .map(|(c, &x)| {
                let u = eig.vectors.view((0, c), (k, 1)).into_owned();
                (x, &u * u.adjoint())
            })
            .collect();
        let mu = MatrixMeasure::from_weights(k, pts, tol).ok()?;
        let j = inverse_spectral_map(&mu, tol).ok()?;
        j.block_distance(&jl)
    });

    Ok(EquivalenceReport {
        k,
        n_total,
        lanczos_steps: lz.steps,
        max_block_error: err,
        scaled_error: scaled,
        tolerance: EQUIVALENCE_TOL,
        agree: scaled <= EQUIVALENCE_TOL,
        measure_route_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_banded, random_hermitian};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sorted_eigs(m: &CMat) -> Vec<f64> {
        linalg::hermitian_eig(m).unwrap().values
    }

    #[test]
    fn lanczos_fixed_point_on_banded_input() {
        let tol = Tolerances::default();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for &(k, n) in &[(1, 6), (2, 7), (3, 8)] {
            let j = random_banded(k, n, &mut rng);
            let (nb, _) = block_shape(n, k);
            let out = block_lanczos(&j.to_dense(), &linalg::leading_identity(n, k), nb, true, &tol).unwrap();
            assert!(out.completed);
            let back = out.to_banded(k).unwrap();
            assert!(back.block_distance(&j).unwrap() < 1e-12);
        }
    }

    #[test]
    fn lanczos_stops_on_invariant_subspace() {
        let a = CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![real(1.0), real(2.0)]));
        let out = block_lanczos(&a, &linalg::leading_identity(2, 1), 2, true, &Tolerances::default()).unwrap();
        assert_eq!(out.steps, 1);
        assert!(!out.completed);
        assert!((out.a[0][(0, 0)].re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn lanczos_rejects_zero_start() {
        let a = CMat::identity(3, 3);
        let v = CMat::zeros(3, 1);
        assert!(matches!(block_lanczos(&a, &v, 3, true, &Tolerances::default()), Err(Error::RankZeroStart)));
    }

    #[test]
    fn scalar_lanczos_matches_classical() {
        // classical three-term Lanczos written out with scalars
        let tol = Tolerances::default();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a = random_hermitian(6, &mut rng);
        let out = block_lanczos(&a, &linalg::leading_identity(6, 1), 6, true, &tol).unwrap();
        let mut q_prev = CMat::zeros(6, 1);
        let mut q = linalg::leading_identity(6, 1);
        let mut beta = 0.0;
        for j in 0..6 {
            let mut w = &a * &q - &q_prev * real(beta);
            let alpha = (q.adjoint() * &w)[(0, 0)];
            w -= &q * alpha;
            for u in &out.basis[..=j] {
                let p = u.adjoint() * &w;
                w -= u * p;
            }
            assert!((alpha - out.a[j][(0, 0)]).norm() < 1e-12);
            if j < 5 {
                beta = frob(&w);
                assert!((beta - out.b[j][(0, 0)].re).abs() < 1e-12);
                q_prev = q;
                q = w / real(beta);
            }
        }
    }

    #[test]
    fn householder_on_all_ones() {
        let a = CMat::from_element(3, 3, real(1.0));
        let j = householder_blocktridiag(&a, 1).unwrap();
        let e = sorted_eigs(&j.to_dense());
        assert!((e[0]).abs() < 1e-12 && (e[1]).abs() < 1e-12 && (e[2] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn householder_complex_5x5() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let a = random_hermitian(5, &mut rng);
        let j = householder_blocktridiag(&a, 2).unwrap();
        let d = j.to_dense();
        assert!(linalg::hermitian_defect(&d) < 1e-15);
        for (x, y) in sorted_eigs(&a).iter().zip(sorted_eigs(&d)) {
            assert!((x - y).abs() < 1e-10);
        }
        crate::spectral::validate_banded(&d, 2, &Tolerances::default()).unwrap();
    }

    #[test]
    fn householder_fixed_point() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let j = random_banded(2, 7, &mut rng);
        let h = householder_blocktridiag(&j.to_dense(), 2).unwrap();
        assert!(h.block_distance(&j).unwrap() < 1e-12);
    }

    #[test]
    fn random_equivalence() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let a = random_hermitian(8, &mut rng);
        let rep = equivalence_check(&a, 2, &Tolerances::default()).unwrap();
        assert!(rep.agree, "{rep:?}");
    }

    #[test]
    fn early_termination_is_incomparable() {
        let mut a = CMat::identity(4, 4);
        a[(2, 3)] = real(1.0);
        a[(3, 2)] = real(1.0);
        assert!(matches!(equivalence_check(&a, 2, &Tolerances::default()), Err(Error::Incomparable(1))));
    }
}
