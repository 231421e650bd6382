//! Seeded generators for test instances.

use rand::seq::index::sample;
use rand::Rng;

use crate::block_shape;
use crate::linalg::{self, c64, real, CMat};
use crate::measure::{normalize, validate_measure, MatrixMeasure};
use crate::spectral::BandedHermitian;
use crate::Tolerances;

fn unit_complex<R: Rng>(rng: &mut R) -> num_complex::Complex64 {
    c64(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

/// Random Hermitian `n × n` matrix: real diagonal and complex off-diagonal
/// entries with parts uniform in `[−1, 1]`.
pub fn random_hermitian<R: Rng>(n: usize, rng: &mut R) -> CMat {
    let mut m = CMat::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = real(rng.gen_range(-1.0..1.0));
        for j in 0..i {
            let z = unit_complex(rng);
            m[(i, j)] = z;
            m[(j, i)] = z.conj();
        }
    }
    m
}

/// Random complex `r × c` matrix with parts uniform in `[−1, 1]`.
pub fn random_matrix<R: Rng>(r: usize, c: usize, rng: &mut R) -> CMat {
    CMat::from_fn(r, c, |_, _| unit_complex(rng))
}

/// Random row echelon `h × k` block with positive pivots in uniformly chosen
/// increasing columns.
fn random_echelon<R: Rng>(h: usize, k: usize, rng: &mut R) -> CMat {
    let mut cols = sample(rng, k, h).into_vec();
    cols.sort_unstable();
    let mut b = CMat::zeros(h, k);
    for (i, &p) in cols.iter().enumerate() {
        b[(i, p)] = real(0.5 + rng.gen::<f64>());
        for c in p + 1..k {
            b[(i, c)] = unit_complex(rng);
        }
    }
    b
}

/// Random member of `J(k, N)`. Subdiagonal blocks are upper triangular with
/// diagonal in `[0.5, 1.5)`; the last one is row echelon with random pivots.
pub fn random_banded<R: Rng>(k: usize, n_total: usize, rng: &mut R) -> BandedHermitian {
    let (n, ell) = block_shape(n_total, k);
    let a = (0..n).map(|j| random_hermitian(if j + 1 == n { k - ell } else { k }, rng)).collect();
    let b = (0..n - 1)
        .map(|j| {
            if j + 2 == n {
                random_echelon(k - ell, k, rng)
            } else {
                let mut blk = random_echelon(k, k, rng);
                for i in 0..k {
                    blk[(i, i)] = real(0.5 + rng.gen::<f64>());
                }
                blk
            }
        })
        .collect();
    BandedHermitian::from_blocks_unchecked(k, n_total, a, b).expect("shapes are consistent")
}

/// Random member of `J(k, N)` rescaled so that its spectral norm is `norm`.
pub fn random_banded_with_norm<R: Rng>(k: usize, n_total: usize, norm: f64, rng: &mut R) -> BandedHermitian {
    let j = random_banded(k, n_total, rng);
    let eig = linalg::hermitian_eig(&j.to_dense()).expect("generated matrix is Hermitian");
    let spec = eig.values.iter().map(|v| v.abs()).fold(0.0, f64::max);
    j.scaled(norm / spec)
}

/// Random measure in `M(k, N)`: atoms at distinct points in `[−2, 2]`, ranks
/// `n_j ≤ k` summing to `N`, random factors, normalized to total mass `I`.
///
/// Sampling is repeated until the class check passes, which generic draws do.
pub fn random_measure<R: Rng>(k: usize, n_total: usize, rng: &mut R) -> MatrixMeasure {
    let tol = Tolerances::default();
    loop {
        let mut ranks = Vec::new();
        let mut left = n_total;
        while left > 0 {
            // mostly rank one, with occasional higher multiplicity
            let r = if k > 1 && rng.gen_bool(0.3) { rng.gen_range(1..=k.min(left)) } else { 1 };
            let r = r.min(left);
            ranks.push(r);
            left -= r;
        }
        let mut xs: Vec<f64> = (0..ranks.len()).map(|_| rng.gen_range(-2.0..2.0)).collect();
        xs.sort_by(f64::total_cmp);
        if xs.windows(2).any(|w| w[1] - w[0] < 1e-3) {
            continue;
        }
        let points = xs
            .iter()
            .zip(&ranks)
            .map(|(&x, &r)| {
                let v = random_matrix(k, r, rng);
                (x, &v * v.adjoint())
            })
            .collect();
        let raw = match MatrixMeasure::from_weights(k, points, &tol) {
            Ok(m) => m,
            Err(_) => continue,
        };
        let mu = match normalize(&raw, &tol) {
            Ok(m) => m,
            Err(_) => continue,
        };
        if validate_measure(&mu, k, n_total, &tol).member {
            return mu;
        }
    }
}

/// Random PSD `n × n` matrix of rank `r`.
pub fn random_psd<R: Rng>(n: usize, r: usize, rng: &mut R) -> CMat {
    let x = random_matrix(n, r, rng);
    linalg::hermitian_part(&(&x * x.adjoint()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::validate_banded;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn generated_matrices_are_in_class() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for &(k, n) in &[(1, 5), (2, 6), (2, 7), (3, 8), (3, 10), (4, 5)] {
            let j = random_banded(k, n, &mut rng);
            validate_banded(&j.to_dense(), k, &Tolerances::default()).unwrap();
        }
    }

    #[test]
    fn generated_measures_are_in_class() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mu = random_measure(3, 8, &mut rng);
        assert_eq!(mu.rank_sum(), 8);
    }

    #[test]
    fn same_seed_same_instance() {
        let a = random_banded(2, 7, &mut ChaCha8Rng::seed_from_u64(9));
        let b = random_banded(2, 7, &mut ChaCha8Rng::seed_from_u64(9));
        assert_eq!(a, b);
    }
}
