//! Finitely supported matrix-valued measures `μ = Σ_j W_j δ_{x_j}` and the
//! right quasi-inner product `⟨F, G⟩_μ = Σ_j F(x_j)* W_j G(x_j)`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, hermitian_eig, phase, real, CMat};
use crate::poly::MatrixPolynomial;
use crate::{block_shape, Tolerances};

/// One support point with its PSD weight and a factor `V` with `W = V V*`.
#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub x: f64,
    pub weight: CMat,
    /// `k × n_j` with `n_j = rank W`, canonical up to roundoff.
    pub factor: CMat,
}

impl Atom {
    pub fn rank(&self) -> usize {
        self.factor.ncols()
    }
}

/// A `k×k` matrix-valued measure with finitely many atoms, points strictly
/// increasing. Normalization (`Σ W_j = I`) is not enforced at construction;
/// see [`validate_measure`] and [`normalize`].
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixMeasure {
    k: usize,
    atoms: Vec<Atom>,
}

impl MatrixMeasure {
    /// Builds a measure from `(x, W)` pairs. Points are sorted, nearly equal
    /// points merged (weights summed), atoms with zero weight dropped and
    /// factors recomputed.
    pub fn from_weights(k: usize, points: Vec<(f64, CMat)>, tol: &Tolerances) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidArgument("measure dimension k must be positive".into()));
        }
        for (x, w) in &points {
            if !x.is_finite() {
                return Err(Error::InvalidArgument("support point is not finite".into()));
            }
            if w.shape() != (k, k) {
                return Err(Error::DimensionMismatch(format!(
                    "weight at x = {x} is {}x{}, expected {k}x{k}",
                    w.nrows(),
                    w.ncols()
                )));
            }
        }
        let merged = merge_points(points, tol.merge);
        let mut atoms = Vec::with_capacity(merged.len());
        for (x, w) in merged {
            let w = linalg::hermitian_part(&w);
            let factor = weight_factors(&w, tol.rank)?;
            if factor.ncols() > 0 {
                atoms.push(Atom { x, weight: w, factor });
            }
        }
        Ok(MatrixMeasure { k, atoms })
    }

    /// Builds a measure from `(x, V)` pairs with `W = V V*`.
    pub fn from_factors(k: usize, points: Vec<(f64, CMat)>, tol: &Tolerances) -> Result<Self> {
        let weights = points
            .into_iter()
            .map(|(x, v)| {
                if v.nrows() != k {
                    return Err(Error::DimensionMismatch(format!("factor has {} rows, expected {k}", v.nrows())));
                }
                Ok((x, &v * v.adjoint()))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_weights(k, weights, tol)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn points(&self) -> Vec<f64> {
        self.atoms.iter().map(|a| a.x).collect()
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// `Σ_j W_j`.
    pub fn total_mass(&self) -> CMat {
        self.atoms.iter().fold(CMat::zeros(self.k, self.k), |acc, a| acc + &a.weight)
    }

    /// `Σ_j rank W_j`.
    pub fn rank_sum(&self) -> usize {
        self.atoms.iter().map(Atom::rank).sum()
    }

    /// The stacked factor matrix `V` (N×k) with `V* = [V_1 … V_m]`, and the
    /// diagonal of the matching point matrix `X`.
    pub fn stacked_factors(&self) -> (CMat, Vec<f64>) {
        let n_total = self.rank_sum();
        let mut v = CMat::zeros(n_total, self.k);
        let mut xs = Vec::with_capacity(n_total);
        let mut row = 0;
        for a in &self.atoms {
            let vt = a.factor.adjoint();
            v.view_mut((row, 0), (vt.nrows(), self.k)).copy_from(&vt);
            xs.extend(std::iter::repeat_n(a.x, vt.nrows()));
            row += vt.nrows();
        }
        (v, xs)
    }

    /// Sum of Frobenius errors between the weights of two measures, atom by atom.
    /// Returns `None` when the supports differ in size or location (beyond `point_tol`).
    pub fn weight_distance(&self, other: &MatrixMeasure, point_tol: f64) -> Option<f64> {
        if self.k != other.k || self.atoms.len() != other.atoms.len() {
            return None;
        }
        let mut worst: f64 = 0.0;
        for (a, b) in self.atoms.iter().zip(&other.atoms) {
            if (a.x - b.x).abs() > point_tol {
                return None;
            }
            worst = worst.max(linalg::frob(&(&a.weight - &b.weight)));
        }
        Some(worst)
    }
}

fn merge_points(mut points: Vec<(f64, CMat)>, merge_tol: f64) -> Vec<(f64, CMat)> {
    points.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (lo, hi) = match (points.first(), points.last()) {
        (Some(a), Some(b)) => (a.0, b.0),
        _ => return points,
    };
    let scale = if hi > lo { hi - lo } else { lo.abs().max(hi.abs()) };
    let gap = merge_tol * scale;
    let mut out: Vec<(f64, CMat, f64, f64)> = Vec::new();
    for (x, w) in points {
        let mass = w.trace().re.abs();
        match out.last_mut() {
            Some(last) if x - last.3 <= gap => {
                // weighted location, keep track of the right end for chaining
                let total = last.2 + mass;
                if total > 0.0 {
                    last.0 = (last.0 * last.2 + x * mass) / total;
                }
                last.1 += w;
                last.2 = total;
                last.3 = x;
            }
            _ => out.push((x, w, mass, x)),
        }
    }
    out.into_iter().map(|(x, w, _, _)| (x, w)).collect()
}

/// Factor `V` (k×r, r = numerical rank) with `W = V V*`.
///
/// Columns are the eigenvectors scaled by the square roots of the retained
/// eigenvalues, in descending eigenvalue order, each rotated so its first
/// nonzero entry is real and positive.
pub fn weight_factors(w: &CMat, rank_tol: f64) -> Result<CMat> {
    let eig = hermitian_eig(w)?;
    let k = w.nrows();
    let lmax = eig.values.iter().cloned().fold(0.0_f64, |m, v| m.max(v.abs()));
    if lmax == 0.0 {
        return Ok(CMat::zeros(k, 0));
    }
    if let Some(&lmin) = eig.values.first() {
        if lmin < -rank_tol.max(1e-12) * lmax {
            return Err(Error::NotPsd(lmin));
        }
    }
    let keep: Vec<usize> = (0..k).rev().filter(|&j| eig.values[j] > rank_tol * lmax).collect();
    let mut v = CMat::zeros(k, keep.len());
    for (col, &j) in keep.iter().enumerate() {
        let s = real(eig.values[j].sqrt());
        let u = eig.vectors.column(j);
        let big = u.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let first = u.iter().position(|z| z.norm() > 1e-8 * big).unwrap_or(0);
        let rot = phase(u[first]).conj();
        for i in 0..k {
            v[(i, col)] = u[i] * rot * s;
        }
    }
    Ok(v)
}

/// Right quasi-inner product from values at the atoms: `Σ_j F_j* W_j G_j`.
pub fn inner_from_values(mu: &MatrixMeasure, f: &[CMat], g: &[CMat]) -> CMat {
    let mut acc = CMat::zeros(f[0].ncols(), g[0].ncols());
    for ((a, fv), gv) in mu.atoms.iter().zip(f).zip(g) {
        acc += fv.adjoint() * &a.weight * gv;
    }
    acc
}

/// `⟨F, G⟩_μ = Σ_j F(x_j)* W_j G(x_j)`.
pub fn quasi_inner(f: &MatrixPolynomial, g: &MatrixPolynomial, mu: &MatrixMeasure) -> Result<CMat> {
    if f.rows() != mu.k || g.rows() != mu.k {
        return Err(Error::DimensionMismatch(format!(
            "polynomials with {} and {} rows against a {}x{} measure",
            f.rows(),
            g.rows(),
            mu.k,
            mu.k
        )));
    }
    let mut acc = CMat::zeros(f.cols(), g.cols());
    for a in &mu.atoms {
        acc += f.eval(a.x).adjoint() * &a.weight * g.eval(a.x);
    }
    Ok(acc)
}

/// `Σ_j x_j^i W_j`.
pub fn moment(mu: &MatrixMeasure, i: u32) -> CMat {
    mu.atoms
        .iter()
        .fold(CMat::zeros(mu.k, mu.k), |acc, a| acc + &a.weight * real(a.x.powi(i as i32)))
}

/// `M_d(V, X) = [V, XV, …, X^d V]` (N × (d+1)k).
pub fn krylov_matrix(mu: &MatrixMeasure, d: usize) -> CMat {
    let (v, xs) = mu.stacked_factors();
    let n_total = v.nrows();
    let k = mu.k;
    let mut m = CMat::zeros(n_total, (d + 1) * k);
    let mut block = v;
    for p in 0..=d {
        m.view_mut((0, p * k), (n_total, k)).copy_from(&block);
        for (i, &x) in xs.iter().enumerate() {
            for c in 0..k {
                block[(i, c)] *= real(x);
            }
        }
    }
    m
}

/// Outcome of checking a measure against the class `M(k, N)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeasureClassReport {
    pub k: usize,
    pub n_total: usize,
    /// `n = ⌈N/k⌉`.
    pub n: usize,
    /// `ℓ = nk − N`.
    pub ell: usize,
    pub total_mass_ok: bool,
    pub total_mass_error: f64,
    pub rank_sum: usize,
    pub max_atom_rank: usize,
    /// Rank of `M_{n−1}(V, X)`.
    pub krylov_rank: usize,
    /// Ranks of `M_d(V, X)` for `d = 0, …, n−1`.
    pub krylov_ranks: Vec<usize>,
    pub member: bool,
    pub failures: Vec<String>,
}

/// Checks membership of `μ` in `M(k, N)`: total mass `I_k`, `Σ rank W_j = N`,
/// each `rank W_j ≤ k`, and `rank M_d(V,X) = min((d+1)k, N)` for every `d ≤ n−1`.
pub fn validate_measure(mu: &MatrixMeasure, k: usize, n_total: usize, tol: &Tolerances) -> MeasureClassReport {
    let mut failures = Vec::new();
    if mu.k != k {
        failures.push(format!("measure is {}x{}, expected k = {k}", mu.k, mu.k));
    }
    let (n, ell) = if k > 0 && n_total > 0 { block_shape(n_total, k) } else { (0, 0) };
    if n_total < k {
        failures.push(format!("N = {n_total} is smaller than k = {k}"));
    }
    let total_mass_error = linalg::frob(&(mu.total_mass() - CMat::identity(mu.k, mu.k)));
    let total_mass_ok = total_mass_error <= 1e-8;
    if !total_mass_ok {
        failures.push(format!("total mass differs from identity by {total_mass_error:.3e}"));
    }
    let rank_sum = mu.rank_sum();
    if rank_sum != n_total {
        failures.push(format!("sum of weight ranks is {rank_sum}, expected N = {n_total}"));
    }
    let max_atom_rank = mu.atoms.iter().map(Atom::rank).max().unwrap_or(0);
    if max_atom_rank > k {
        failures.push(format!("an atom has rank {max_atom_rank} > k = {k}"));
    }
    let mut krylov_ranks = Vec::new();
    if failures.is_empty() {
        for d in 0..n {
            let r = linalg::rank_with_tol(&krylov_matrix(mu, d), tol.rank);
            let expected = ((d + 1) * k).min(n_total);
            if r != expected {
                failures.push(format!("rank M_{d}(V,X) = {r}, expected {expected}"));
            }
            krylov_ranks.push(r);
        }
    }
    MeasureClassReport {
        k,
        n_total,
        n,
        ell,
        total_mass_ok,
        total_mass_error,
        rank_sum,
        max_atom_rank,
        krylov_rank: krylov_ranks.last().copied().unwrap_or(0),
        krylov_ranks,
        member: failures.is_empty(),
        failures,
    }
}

/// Rescales a measure to total mass `I`: `W_j ↦ L⁻¹ W_j L⁻*` with `Σ W_j = L L*`.
pub fn normalize(mu: &MatrixMeasure, tol: &Tolerances) -> Result<MatrixMeasure> {
    let l = linalg::cholesky(&mu.total_mass()).map_err(|_| Error::SingularTotalMass)?;
    let weights = mu
        .atoms
        .iter()
        .map(|a| {
            let y = linalg::solve_lower(&l, &a.weight);
            let w = linalg::solve_lower(&l, &y.adjoint()).adjoint();
            (a.x, w)
        })
        .collect();
    MatrixMeasure::from_weights(mu.k, weights, tol)
}
