//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::time::Instant;

use bandspec::linalg::{self, frob, CMat};
use bandspec::measure::moment;
use bandspec::orthopoly::null_dimension;
use bandspec::random::{random_banded, random_banded_with_norm, random_hermitian, random_measure, random_psd};
use bandspec::spectral::{inverse_spectral_map, spectral_map, validate_banded};
use bandspec::toda::{eigenvalue_drift, evolve_measure, toda_qr_flow, toda_rk4_oracle, toda_spectral_flow};
use bandspec::tridiag::equivalence_check;
use bandspec::{block_shape, BandedHermitian, Error, MatrixMeasure, Tolerances};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SHAPES: [(usize, usize); 5] = [(1, 8), (2, 6), (2, 7), (3, 8), (3, 10)];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn instance_suite(seed: u64) -> (Vec<BandedHermitian>, Vec<MatrixMeasure>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let js = (0..200).map(|i| {
        let (k, n) = SHAPES[i % SHAPES.len()];
        random_banded(k, n, &mut rng)
    });
    let js: Vec<_> = js.collect();
    let mus = (0..200)
        .map(|i| {
            let (k, n) = SHAPES[i % SHAPES.len()];
            random_measure(k, n, &mut rng)
        })
        .collect();
    (js, mus)
}

fn bijection(js: &[BandedHermitian], mus: &[MatrixMeasure], tol: &Tolerances) -> Outcome {
    let start = Instant::now();
    let mut worst_j = 0.0f64;
    let mut worst_mu = 0.0f64;
    let mut failures = 0;
    for j in js {
        match spectral_map(j, tol).and_then(|mu| inverse_spectral_map(&mu, tol)) {
            Ok(back) => worst_j = worst_j.max(back.block_distance(j).unwrap_or(f64::INFINITY)),
            Err(_) => failures += 1,
        }
    }
    for mu in mus {
        match inverse_spectral_map(mu, tol).and_then(|j| spectral_map(&j, tol)) {
            Ok(back) => worst_mu = worst_mu.max(back.weight_distance(mu, 1e-9).unwrap_or(f64::INFINITY)),
            Err(_) => failures += 1,
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        failures == 0 && worst_j <= 1e-8 && worst_mu <= 1e-8 && secs < 60.0,
        format!("max |psi(phi(J)) - J| = {worst_j:.2e}, max |phi(psi(mu)) - mu| = {worst_mu:.2e}, errors = {failures}, {secs:.2}s"),
    )
}

fn expected_nullity(k: usize, n_total: usize, d: usize) -> usize {
    let (n, ell) = block_shape(n_total, k);
    if d + 1 < n {
        0
    } else if d + 1 == n {
        ell
    } else {
        k * (d + 1) - n_total
    }
}

fn nullity_law(js: &[BandedHermitian], mus: &[MatrixMeasure], tol: &Tolerances) -> Outcome {
    let mut checked = 0;
    let mut mismatches = 0;
    let from_j: Vec<MatrixMeasure> = js.iter().filter_map(|j| spectral_map(j, tol).ok()).collect();
    for (mu, n_total) in from_j.iter().zip(js.iter().map(|j| j.size())).chain(mus.iter().zip(mus.iter().map(|m| m.rank_sum()))) {
        let k = mu.k();
        let (n, _) = block_shape(n_total, k);
        for d in 0..=n + 1 {
            checked += 1;
            if null_dimension(mu, d, tol) != expected_nullity(k, n_total, d) {
                mismatches += 1;
            }
        }
    }
    outcome(
        mismatches == 0 && from_j.len() == js.len(),
        format!("{checked} nullities checked, {mismatches} mismatches"),
    )
}

fn moments(tol: &Tolerances) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    for i in 0..50 {
        let (k, n_total) = SHAPES[i % SHAPES.len()];
        let j = random_banded_with_norm(k, n_total, 1.0, &mut rng);
        let mu = match spectral_map(&j, tol) {
            Ok(mu) => mu,
            Err(_) => return outcome(false, format!("spectral map failed on instance {i}")),
        };
        let dense = j.to_dense();
        let mut power = CMat::identity(n_total, n_total);
        for p in 0..=2 * j.n() as u32 {
            let lead = power.view((0, 0), (k, k)).into_owned();
            worst = worst.max(frob(&(moment(&mu, p) - lead)));
            power = &power * &dense;
        }
    }
    outcome(worst <= 1e-9, format!("max moment error = {worst:.2e} over 50 instances with |J| = 1"))
}

fn lanczos_householder(tol: &Tolerances) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut compared = 0;
    let mut early = 0;
    let mut worst = 0.0f64;
    let mut worst_scaled = 0.0f64;
    let mut errors = 0;
    for _ in 0..100 {
        let k = rng.gen_range(1..=3);
        let n_total = rng.gen_range(k..=32);
        let a = random_hermitian(n_total, &mut rng);
        match equivalence_check(&a, k, tol) {
            Ok(rep) => {
                compared += 1;
                worst = worst.max(rep.max_block_error);
                worst_scaled = worst_scaled.max(rep.scaled_error);
            }
            Err(Error::Incomparable(_)) => early += 1,
            Err(_) => errors += 1,
        }
    }
    outcome(
        errors == 0 && compared > 0 && worst <= 1e-8,
        format!("{compared} compared, {early} early terminations excluded, max block error = {worst:.2e} (relative {worst_scaled:.2e})"),
    )
}

struct TodaStats {
    qr_vs_spectral: f64,
    vs_rk4: f64,
    drift_exact: f64,
    drift_rk4: f64,
    structure_failures: usize,
    errors: usize,
    instances: usize,
    secs: f64,
}

fn toda_suite(tol: &Tolerances) -> TodaStats {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut s = TodaStats {
        qr_vs_spectral: 0.0,
        vs_rk4: 0.0,
        drift_exact: 0.0,
        drift_rk4: 0.0,
        structure_failures: 0,
        errors: 0,
        instances: 0,
        secs: 0.0,
    };
    for i in 0..50 {
        let (k, n_total) = SHAPES[i % SHAPES.len()];
        let norm = rng.gen_range(0.5..=3.0);
        let x0 = random_banded_with_norm(k, n_total, norm, &mut rng);
        let d0 = x0.to_dense();
        let pattern = x0.pivot_pattern(1e-10);
        for t in [0.25, 1.0] {
            s.instances += 1;
            let mut run = || -> bandspec::Result<()> {
                let qr = toda_qr_flow(&x0, t, tol)?;
                let sp = toda_spectral_flow(&x0, t, tol)?;
                let rk = toda_rk4_oracle(&x0, t, 1e-3)?;
                let dq = qr.x_t.to_dense();
                let ds = sp.to_dense();
                s.qr_vs_spectral = s.qr_vs_spectral.max(qr.x_t.block_distance(&sp).unwrap_or(f64::INFINITY));
                s.vs_rk4 = s.vs_rk4.max(frob(&(&dq - &rk))).max(frob(&(&ds - &rk)));
                s.drift_exact = s.drift_exact.max(eigenvalue_drift(&d0, &dq)?).max(eigenvalue_drift(&d0, &ds)?);
                s.drift_rk4 = s.drift_rk4.max(eigenvalue_drift(&d0, &rk)?);
                for (m, dense) in [(&qr.x_t, &dq), (&sp, &ds)] {
                    let ok = validate_banded(dense, k, tol).is_ok() && m.pivot_pattern(1e-10) == pattern;
                    if !ok {
                        s.structure_failures += 1;
                    }
                }
                Ok(())
            };
            if run().is_err() {
                s.errors += 1;
            }
        }
    }
    s.secs = start.elapsed().as_secs_f64();
    s
}

fn classical_weights(tol: &Tolerances) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst = 0.0f64;
    for i in 0..20 {
        let n_total = rng.gen_range(2..=12);
        let j = random_banded(1, n_total, &mut rng);
        let t = rng.gen_range(-1.5..1.5);
        let mu = match spectral_map(&j, tol) {
            Ok(mu) => mu,
            Err(_) => return outcome(false, format!("spectral map failed on instance {i}")),
        };
        let evolved = match evolve_measure(&mu, t, tol) {
            Ok(m) => m,
            Err(e) => return outcome(false, format!("evolve_measure failed on instance {i}: {e}")),
        };
        let raw: Vec<f64> = mu.atoms().iter().map(|a| (2.0 * a.x * t).exp() * a.weight[(0, 0)].re).collect();
        let total: f64 = raw.iter().sum();
        if evolved.len() != raw.len() {
            return outcome(false, format!("atom count changed on instance {i}"));
        }
        for (a, w) in evolved.atoms().iter().zip(&raw) {
            worst = worst.max((a.weight[(0, 0)].re - w / total).abs() + a.weight[(0, 0)].im.abs());
        }
    }
    outcome(worst <= 1e-12, format!("max weight error = {worst:.2e} over 20 Jacobi instances"))
}

fn ref_factorization() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst = 0.0f64;
    let mut worst_idem = 0.0f64;
    let mut shape_failures = 0;
    for _ in 0..200 {
        let n = rng.gen_range(1..=8);
        let r = rng.gen_range(0..=n);
        let a = random_psd(n, r, &mut rng);
        let f = match linalg::ref_factor(&a, 1e-10) {
            Ok(f) => f,
            Err(_) => {
                shape_failures += 1;
                continue;
            }
        };
        if f.nrows() != r || !is_positive_echelon(&f) {
            shape_failures += 1;
        }
        worst = worst.max(frob(&(&a - f.adjoint() * &f)));
        match linalg::ref_factor(&(f.adjoint() * &f), 1e-10) {
            Ok(g) if g.shape() == f.shape() => worst_idem = worst_idem.max(frob(&(g - &f))),
            _ => shape_failures += 1,
        }
    }
    outcome(
        shape_failures == 0 && worst <= 1e-10 && worst_idem <= 1e-10,
        format!("max |A - R*R| = {worst:.2e}, max |ref(R*R) - R| = {worst_idem:.2e}, shape failures = {shape_failures}"),
    )
}

fn is_positive_echelon(r: &CMat) -> bool {
    let mut last: Option<usize> = None;
    for i in 0..r.nrows() {
        let Some(p) = (0..r.ncols()).find(|&j| r[(i, j)].norm() > 0.0) else {
            return false;
        };
        if last.is_some_and(|l| p <= l) || r[(i, p)].re <= 0.0 || r[(i, p)].im != 0.0 {
            return false;
        }
        last = Some(p);
    }
    true
}

fn main() {
    let tol = Tolerances::default();
    let (js, mus) = instance_suite(1);
    let toda = toda_suite(&tol);
    let results = [
        ("bijection phi/psi", bijection(&js, &mus, &tol)),
        ("null space dimension law", nullity_law(&js, &mus, &tol)),
        ("moment identity", moments(&tol)),
        ("Lanczos equals Householder", lanczos_householder(&tol)),
        (
            "Toda three-way agreement",
            outcome(
                toda.errors == 0
                    && toda.qr_vs_spectral <= 1e-7
                    && toda.vs_rk4 <= 1e-5
                    && toda.drift_exact <= 1e-9
                    && toda.drift_rk4 <= 1e-6
                    && toda.secs < 120.0,
                format!(
                    "{} runs, qr/spectral = {:.2e}, vs rk4 = {:.2e}, drift = {:.2e} / rk4 {:.2e}, errors = {}, {:.2}s",
                    toda.instances, toda.qr_vs_spectral, toda.vs_rk4, toda.drift_exact, toda.drift_rk4, toda.errors, toda.secs
                ),
            ),
        ),
        ("k = 1 classical weights", classical_weights(&tol)),
        (
            "structure preserved under Toda",
            outcome(
                toda.errors == 0 && toda.structure_failures == 0,
                format!("{} runs, {} structure or pivot mismatches", toda.instances, toda.structure_failures),
            ),
        ),
        ("ref_factor", ref_factorization()),
    ];
    let mut failed = 0;
    for (i, (name, o)) in results.iter().enumerate() {
        println!("criterion {}: {} - {}: {}", i + 1, if o.pass { "PASS" } else { "FAIL" }, name, o.detail);
        if !o.pass {
            failed += 1;
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
