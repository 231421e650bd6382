//! Toda flow `∂_t X = [X, B(X)]` on banded Hermitian matrices, with
//! `B(X) = X₋ − X₋*` (`X₋` the strictly lower triangular part).
//!
//! Three solvers are provided: the QR factorization of `exp(tX₀)`, evolution
//! of the spectral measure followed by the inverse spectral map, and a plain
//! RK4 integration used as an oracle.

use crate::error::{Error, Result};
use crate::linalg::{self, real, CMat};
use crate::measure::MatrixMeasure;
use crate::spectral::{inverse_spectral_map, spectral_map, validate_banded, BandedHermitian};
use crate::Tolerances;

/// Largest allowed `|t| · (λ_max − λ_min)`.
pub const MAX_EXPONENT_SPREAD: f64 = 40.0;

/// Largest allowed ratio of extreme diagonal entries of `R(t)`.
pub const MAX_R_CONDITION: f64 = 1e15;

/// Default RK4 step.
pub const DEFAULT_DT: f64 = 1e-3;

/// Hermiticity defect per step above which RK4 gives up.
pub const RK4_DRIFT_GUARD: f64 = 1e-6;

/// `B(X) = X₋ − X₋*`.
pub fn flow_generator(x: &CMat) -> CMat {
    let n = x.nrows();
    let mut b = CMat::zeros(n, n);
    for i in 0..n {
        for j in 0..i {
            b[(i, j)] = x[(i, j)];
            b[(j, i)] = -x[(i, j)].conj();
        }
    }
    b
}

/// Unique split `X = π_S(X) + π_U(X)` with `π_S` skew-Hermitian and `π_U`
/// upper triangular:
///
/// * `π_S`: `X_ij` below the diagonal, `0` on it, `−conj(X_ji)` above;
/// * `π_U`: `0` below, `X_ii` on the diagonal, `X_ij + conj(X_ji)` above.
pub fn pi_decomposition(x: &CMat) -> Result<(CMat, CMat)> {
    if !x.is_square() {
        return Err(Error::DimensionMismatch(format!("matrix is {}x{}", x.nrows(), x.ncols())));
    }
    let n = x.nrows();
    let mut s = CMat::zeros(n, n);
    let mut u = CMat::zeros(n, n);
    for i in 0..n {
        u[(i, i)] = x[(i, i)];
        for j in 0..n {
            if i > j {
                s[(i, j)] = x[(i, j)];
            } else if i < j {
                s[(i, j)] = -x[(j, i)].conj();
                u[(i, j)] = x[(i, j)] + x[(j, i)].conj();
            }
        }
    }
    Ok((s, u))
}

/// State of the flow at time `t`.
#[derive(Debug, Clone)]
pub struct TodaSolution {
    pub t: f64,
    pub x_t: BandedHermitian,
    /// Unitary factor of `exp(tX₀)`.
    pub q: CMat,
    /// Triangular factor of `exp(tX₀)` (positive diagonal).
    pub r: CMat,
    /// `L(t) = (leading k×k block of R)*`, the Cholesky factor of `Σ e^{2λ_j t} W_j(0)`.
    pub l: CMat,
    /// Spectral measure of `X(t)` from the weight evolution.
    pub measure: MatrixMeasure,
    /// `‖Q*X₀Q − R X₀ R⁻¹‖_F / ‖X₀‖_F`.
    pub similarity_gap: f64,
}

fn eigen_spread(values: &[f64]) -> f64 {
    match (values.first(), values.last()) {
        (Some(a), Some(b)) => b - a,
        _ => 0.0,
    }
}

fn check_spread(t: f64, spread: f64) -> Result<()> {
    if (t * spread).abs() > MAX_EXPONENT_SPREAD {
        return Err(Error::Conditioning(format!(
            "|t| · spread(λ) = {:.3e} exceeds {MAX_EXPONENT_SPREAD}",
            (t * spread).abs()
        )));
    }
    Ok(())
}

/// Closed-form solution `X(t) = Q*X₀Q` with `exp(tX₀) = QR`.
pub fn toda_qr_flow(x0: &BandedHermitian, t: f64, tol: &Tolerances) -> Result<TodaSolution> {
    if !t.is_finite() {
        return Err(Error::InvalidArgument("time must be finite".into()));
    }
    let dense = x0.to_dense();
    let eig = linalg::hermitian_eig(&dense)?;
    check_spread(t, eigen_spread(&eig.values))?;
    // Shift so the largest exponent is zero; Q is unchanged and R scales by e^{tc}.
    let c = if t >= 0.0 { *eig.values.last().unwrap_or(&0.0) } else { *eig.values.first().unwrap_or(&0.0) };
    let e = eig.map(|l| (t * (l - c)).exp());
    let (q, r_shifted) = linalg::qr_positive(&e)?;
    let diag: Vec<f64> = r_shifted.diagonal().iter().map(|z| z.re).collect();
    let dmax = diag.iter().cloned().fold(0.0, f64::max);
    let dmin = diag.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(dmin > 0.0) || dmax / dmin > MAX_R_CONDITION {
        return Err(Error::Conditioning(format!("R(t) diagonal ratio {:.3e}", dmax / dmin)));
    }
    let x = linalg::hermitian_part(&(q.adjoint() * &dense * &q));
    let r_inv = linalg::solve_upper(&r_shifted, &CMat::identity(dense.nrows(), dense.nrows()));
    let similar = &r_shifted * &dense * r_inv;
    let similarity_gap = linalg::frob(&(&x - similar)) / linalg::frob(&dense).max(f64::MIN_POSITIVE);
    let x_t = validate_banded(&x, x0.k(), tol)?;
    let r = &r_shifted * real((t * c).exp());
    let k = x0.k();
    let l = r.view((0, 0), (k, k)).adjoint();
    let measure = evolve_measure(&spectral_map(x0, tol)?, t, tol)?;
    Ok(TodaSolution { t, x_t, q, r, l, measure, similarity_gap })
}

/// Evolved spectral measure: `W_j(t) = L⁻¹ e^{2x_j t} W_j L⁻*` with
/// `L L* = Σ_j e^{2x_j t} W_j`.
pub fn evolve_measure(mu0: &MatrixMeasure, t: f64, tol: &Tolerances) -> Result<MatrixMeasure> {
    let xs = mu0.points();
    check_spread(t, eigen_spread(&xs))?;
    let shift = xs.iter().map(|&x| 2.0 * x * t).fold(f64::NEG_INFINITY, f64::max);
    let scaled: Vec<(f64, CMat)> = mu0
        .atoms()
        .iter()
        .map(|a| (a.x, &a.weight * real((2.0 * a.x * t - shift).exp())))
        .collect();
    let s = scaled.iter().fold(CMat::zeros(mu0.k(), mu0.k()), |acc, (_, w)| acc + w);
    let l = linalg::cholesky(&linalg::hermitian_part(&s)).map_err(|_| Error::SingularNormalizer)?;
    let weights = scaled
        .into_iter()
        .map(|(x, w)| {
            let y = linalg::solve_lower(&l, &w);
            (x, linalg::solve_lower(&l, &y.adjoint()).adjoint())
        })
        .collect();
    MatrixMeasure::from_weights(mu0.k(), weights, tol)
}

/// Weights of `φ(X(t))` computed through `L(t)` taken from a QR solution.
pub fn weights_from_r(mu0: &MatrixMeasure, sol: &TodaSolution) -> Vec<(f64, CMat)> {
    mu0.atoms()
        .iter()
        .map(|a| {
            let w = &a.weight * real((2.0 * a.x * sol.t).exp());
            let y = linalg::solve_lower(&sol.l, &w);
            (a.x, linalg::solve_lower(&sol.l, &y.adjoint()).adjoint())
        })
        .collect()
}

/// `ψ(evolve_measure(φ(X₀), t))`.
pub fn toda_spectral_flow(x0: &BandedHermitian, t: f64, tol: &Tolerances) -> Result<BandedHermitian> {
    let mu = spectral_map(x0, tol)?;
    inverse_spectral_map(&evolve_measure(&mu, t, tol)?, tol)
}

fn toda_rhs(x: &CMat) -> CMat {
    let b = flow_generator(x);
    x * &b - &b * x
}

/// Classical RK4 on `∂_t X = XB(X) − B(X)X` with steps of at most `dt`,
/// re-symmetrizing after each step. Returns the dense `X(t)`.
pub fn toda_rk4_oracle(x0: &BandedHermitian, t: f64, dt: f64) -> Result<CMat> {
    rk4_dense(&x0.to_dense(), t, dt)
}

/// RK4 on an arbitrary Hermitian starting matrix.
pub fn rk4_dense(x0: &CMat, t: f64, dt: f64) -> Result<CMat> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidArgument(format!("step size must be positive, got {dt}")));
    }
    if !t.is_finite() {
        return Err(Error::InvalidArgument("time must be finite".into()));
    }
    let steps = (t.abs() / dt).ceil().max(if t == 0.0 { 0.0 } else { 1.0 }) as usize;
    if steps == 0 {
        return Ok(x0.clone());
    }
    let h = t / steps as f64;
    let hc = real(h);
    let norm0 = linalg::frob(x0);
    let mut x = x0.clone();
    for _ in 0..steps {
        let k1 = toda_rhs(&x);
        let k2 = toda_rhs(&(&x + &k1 * (hc * 0.5)));
        let k3 = toda_rhs(&(&x + &k2 * (hc * 0.5)));
        let k4 = toda_rhs(&(&x + &k3 * hc));
        let next = &x + (k1 + k2 * real(2.0) + k3 * real(2.0) + k4) * (hc / 6.0);
        let drift = linalg::hermitian_defect(&next).max((linalg::frob(&next) - norm0).abs() / norm0.max(1.0));
        if !linalg::all_finite(&next) || !(drift <= RK4_DRIFT_GUARD) {
            return Err(Error::StepSizeTooLarge(drift));
        }
        x = linalg::hermitian_part(&next);
    }
    Ok(x)
}

/// Largest difference between the sorted eigenvalues of two Hermitian matrices.
pub fn eigenvalue_drift(a: &CMat, b: &CMat) -> Result<f64> {
    let ea = linalg::hermitian_eig(a)?.values;
    let eb = linalg::hermitian_eig(b)?.values;
    Ok(ea.iter().zip(&eb).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::frob;
    use crate::random::{random_banded_with_norm, random_matrix};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn jacobi2() -> BandedHermitian {
        BandedHermitian::new(1, 2, vec![CMat::zeros(1, 1), CMat::zeros(1, 1)], vec![CMat::identity(1, 1)]).unwrap()
    }

    #[test]
    fn generator_and_pi_parts_agree_on_hermitian_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = random_matrix(5, 5, &mut rng);
        let h = linalg::hermitian_part(&m);
        let (s, u) = pi_decomposition(&h).unwrap();
        assert!(frob(&(s - flow_generator(&h))) == 0.0);
        assert!((0..5).all(|i| (0..i).all(|j| u[(i, j)] == real(0.0))));

        let (s, u) = pi_decomposition(&m).unwrap();
        assert_eq!(&s + &u, m);
        assert!(frob(&(&s + s.adjoint())) == 0.0);
    }

    #[test]
    fn pi_parts_of_upper_triangular_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let m = random_matrix(4, 4, &mut rng).upper_triangle();
        let (s, u) = pi_decomposition(&m).unwrap();
        assert_eq!(s, CMat::zeros(4, 4));
        assert_eq!(u, m);
    }

    #[test]
    fn zero_time_is_identity() {
        let tol = Tolerances::default();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x0 = random_banded_with_norm(2, 5, 2.0, &mut rng);
        let sol = toda_qr_flow(&x0, 0.0, &tol).unwrap();
        assert!(sol.x_t.block_distance(&x0).unwrap() < 1e-14);
        assert!(frob(&(sol.l - CMat::identity(2, 2))) < 1e-14);
    }

    #[test]
    fn diagonal_matrix_is_fixed() {
        let tol = Tolerances::default();
        let d = CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![real(1.0), real(-0.5)]));
        let x = rk4_dense(&d, 1.0, 1e-2).unwrap();
        assert!(frob(&(x - &d)) < 1e-15);
        // N = k = 2: a single diagonal block.
        let x0 = BandedHermitian::new(2, 2, vec![d.clone()], vec![]).unwrap();
        let sol = toda_qr_flow(&x0, 1.0, &tol).unwrap();
        assert!(frob(&(sol.x_t.to_dense() - d)) < 1e-14);
    }

    #[test]
    fn two_by_two_methods_agree() {
        let tol = Tolerances::default();
        let x0 = jacobi2();
        let qr = toda_qr_flow(&x0, 1.0, &tol).unwrap();
        let sp = toda_spectral_flow(&x0, 1.0, &tol).unwrap();
        assert!(qr.x_t.block_distance(&sp).unwrap() < 1e-8);
        let rk = toda_rk4_oracle(&x0, 1.0, 1e-3).unwrap();
        assert!(frob(&(rk - qr.x_t.to_dense())) < 1e-6);
        // closed form for [[0,1],[1,0]]: diagonal ±tanh(2t), off-diagonal sech(2t)
        let d = qr.x_t.to_dense();
        assert!((d[(0, 0)].re - 2f64.tanh()).abs() < 1e-14);
        assert!((d[(1, 0)].re - 1.0 / 2f64.cosh()).abs() < 1e-14);
    }

    #[test]
    fn degenerate_block_case_agrees() {
        let tol = Tolerances::default();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x0 = random_banded_with_norm(2, 5, 3.0, &mut rng);
        let qr = toda_qr_flow(&x0, 0.5, &tol).unwrap();
        let sp = toda_spectral_flow(&x0, 0.5, &tol).unwrap();
        assert!(qr.x_t.block_distance(&sp).unwrap() < 1e-7);
        assert!(qr.similarity_gap < 1e-10, "{}", qr.similarity_gap);
    }

    #[test]
    fn evolve_measure_trivial_cases() {
        let tol = Tolerances::default();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x0 = random_banded_with_norm(2, 6, 2.0, &mut rng);
        let mu = spectral_map(&x0, &tol).unwrap();
        let same = evolve_measure(&mu, 0.0, &tol).unwrap();
        assert!(same.weight_distance(&mu, 0.0).unwrap() < 1e-14);
        let single = MatrixMeasure::from_weights(2, vec![(0.7, CMat::identity(2, 2))], &tol).unwrap();
        let moved = evolve_measure(&single, 3.0, &tol).unwrap();
        assert!(frob(&(moved.atoms()[0].weight.clone() - CMat::identity(2, 2))) < 1e-14);
    }

    #[test]
    fn l_from_r_matches_cholesky() {
        let tol = Tolerances::default();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let x0 = random_banded_with_norm(3, 8, 2.5, &mut rng);
        let sol = toda_qr_flow(&x0, 0.8, &tol).unwrap();
        let mu0 = spectral_map(&x0, &tol).unwrap();
        for ((_, w), a) in weights_from_r(&mu0, &sol).iter().zip(sol.measure.atoms()) {
            assert!(frob(&(w - &a.weight)) < 1e-8);
        }
    }

    #[test]
    fn guard_rejects_long_times() {
        let tol = Tolerances::default();
        let x0 = jacobi2();
        assert!(matches!(toda_qr_flow(&x0, 25.0, &tol), Err(Error::Conditioning(_))));
    }

    #[test]
    fn rk4_rejects_bad_step() {
        assert!(rk4_dense(&CMat::identity(2, 2), 1.0, 0.0).is_err());
        let big = CMat::from_fn(4, 4, |i, j| real(if i.abs_diff(j) == 1 { 50.0 } else { 0.0 }));
        assert!(matches!(rk4_dense(&big, 1.0, 0.5), Err(Error::StepSizeTooLarge(_))));
    }
}
