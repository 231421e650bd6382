//! Matrix orthogonal polynomials for a finitely supported measure: the monic
//! family and its three-term recurrence, the canonical orthonormal family, and
//! the degenerate last polynomial `P_{n−1}` of width `k − ℓ`.
//!
//! Every polynomial is carried together with its values at the support points,
//! and inner products are finite sums over atoms of those values.

use crate::error::{Error, Result};
use crate::linalg::{self, real, CMat};
use crate::measure::{inner_from_values, krylov_matrix, MatrixMeasure};
use crate::poly::MatrixPolynomial;
use crate::{block_shape, Tolerances};

/// How the monic family is built.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MonicMethod {
    /// Three-term recurrence `Π_{j+1} = xΠ_j − Π_j C_j − Π_{j−1} D_j`.
    #[default]
    Recurrence,
    /// Modified Gram–Schmidt on the monomials `x^j I`.
    GramSchmidt,
}

#[derive(Debug, Clone)]
struct Tracked {
    poly: MatrixPolynomial,
    vals: Vec<CMat>,
}

impl Tracked {
    fn constant(mu: &MatrixMeasure, c: CMat) -> Self {
        Tracked { vals: vec![c.clone(); mu.len()], poly: MatrixPolynomial::constant(c) }
    }

    fn monomial(mu: &MatrixMeasure, j: usize) -> Self {
        let k = mu.k();
        let vals = mu.atoms().iter().map(|a| CMat::identity(k, k) * real(a.x.powi(j as i32))).collect();
        Tracked { poly: MatrixPolynomial::monomial(k, j), vals }
    }

    fn mul_x(&self, mu: &MatrixMeasure) -> Self {
        let vals = self.vals.iter().zip(mu.atoms()).map(|(v, a)| v * real(a.x)).collect();
        Tracked { poly: self.poly.mul_x(), vals }
    }

    fn mul_right(&self, c: &CMat) -> Self {
        Tracked { poly: self.poly.mul_right(c), vals: self.vals.iter().map(|v| v * c).collect() }
    }

    fn sub(&self, other: &Self) -> Self {
        let vals = self.vals.iter().zip(&other.vals).map(|(a, b)| a - b).collect();
        Tracked { poly: self.poly.sub(&other.poly), vals }
    }
}

fn ip(mu: &MatrixMeasure, f: &Tracked, g: &Tracked) -> CMat {
    inner_from_values(mu, &f.vals, &g.vals)
}

// Same pairing through the atom factors, consistent with `stacked_values`.
fn ip_factored(mu: &MatrixMeasure, f: &Tracked, g: &Tracked) -> CMat {
    stacked_values(mu, f).adjoint() * stacked_values(mu, g)
}

/// Monic orthogonal polynomials `Π_0 … Π_{n−1}` and their recurrence data.
#[derive(Debug, Clone)]
pub struct MonicSequence {
    pub polys: Vec<MatrixPolynomial>,
    /// `γ_j = ⟨Π_j, Π_j⟩`, `j = 0 … n−1`.
    pub gamma: Vec<CMat>,
    /// `τ_j`, the coefficient of `x^{j−1}` in `Π_j` (`τ_0 = 0`).
    pub tau: Vec<CMat>,
    /// `C_j = γ_j⁻¹⟨Π_j, xΠ_j⟩`, `j = 0 … n−2`.
    pub c: Vec<CMat>,
    /// `D_j = γ_{j−1}⁻¹ γ_j`, `j = 0 … n−2`, with `D_0 = 0`.
    pub d: Vec<CMat>,
}

struct MonicInternal {
    seq: MonicSequence,
}

fn check_definite(gamma: &CMat, index: usize, k: usize, tol: &Tolerances) -> Result<CMat> {
    if linalg::rank_with_tol(gamma, tol.rank) < k {
        return Err(Error::NotDefinite { index });
    }
    linalg::pd_inv_sqrt(&linalg::hermitian_part(gamma)).map_err(|_| Error::NotDefinite { index })
}

fn monic_internal(mu: &MatrixMeasure, n: usize, method: MonicMethod, tol: &Tolerances) -> Result<MonicInternal> {
    let k = mu.k();
    if mu.is_empty() {
        return Err(Error::NotInClass("measure has no atoms".into()));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("number of polynomials must be positive".into()));
    }
    let mut tracked: Vec<Tracked> = vec![Tracked::constant(mu, CMat::identity(k, k))];
    let mut gamma = vec![linalg::hermitian_part(&ip(mu, &tracked[0], &tracked[0]))];
    let mut inv_sqrt = Vec::new();
    let mut c = Vec::new();
    let mut d = Vec::new();
    for j in 0..n - 1 {
        let is = check_definite(&gamma[j], j, k, tol)?;
        let g_inv = &is * &is;
        let xpj = tracked[j].mul_x(mu);
        let cj = &g_inv * ip(mu, &tracked[j], &xpj);
        let dj = if j == 0 { CMat::zeros(k, k) } else { &inv_sqrt_sq(&inv_sqrt[j - 1]) * &gamma[j] };
        let next = match method {
            MonicMethod::Recurrence => {
                let mut t = xpj.sub(&tracked[j].mul_right(&cj));
                if j > 0 {
                    t = t.sub(&tracked[j - 1].mul_right(&dj));
                }
                t
            }
            MonicMethod::GramSchmidt => {
                let mut t = Tracked::monomial(mu, j + 1);
                for i in 0..=j {
                    let gi = if i == j { g_inv.clone() } else { inv_sqrt_sq(&inv_sqrt[i]) };
                    let coef = gi * ip(mu, &tracked[i], &t);
                    t = t.sub(&tracked[i].mul_right(&coef));
                }
                t
            }
        };
        inv_sqrt.push(is);
        c.push(cj);
        d.push(dj);
        gamma.push(linalg::hermitian_part(&ip(mu, &next, &next)));
        tracked.push(next);
    }
    let tau = tracked
        .iter()
        .enumerate()
        .map(|(j, t)| if j == 0 { CMat::zeros(k, k) } else { t.poly.coeff(j - 1) })
        .collect();
    let polys = tracked.iter().map(|t| t.poly.clone()).collect();
    Ok(MonicInternal { seq: MonicSequence { polys, gamma, tau, c, d } })
}

fn inv_sqrt_sq(m: &CMat) -> CMat {
    m * m
}

/// Monic orthogonal polynomials `Π_0 … Π_{n−1}` by the three-term recurrence.
pub fn monic_sequence(mu: &MatrixMeasure, n: usize) -> Result<MonicSequence> {
    monic_sequence_with(mu, n, MonicMethod::Recurrence, &Tolerances::default())
}

pub fn monic_sequence_with(mu: &MatrixMeasure, n: usize, method: MonicMethod, tol: &Tolerances) -> Result<MonicSequence> {
    monic_internal(mu, n, method, tol).map(|m| m.seq)
}

/// Orthonormal polynomials `P_0 … P_{n−2}` with the recurrence blocks
/// `A_0 … A_{n−3}` and `B_0 … B_{n−3}`.
#[derive(Debug, Clone)]
pub struct OrthonormalSequence {
    pub polys: Vec<MatrixPolynomial>,
    pub a: Vec<CMat>,
    pub b: Vec<CMat>,
    /// Normalizing unitaries `Q_0 … Q_{n−2}`.
    pub q: Vec<CMat>,
}

/// The last polynomial `P_{n−1}` (`k × (k−ℓ)`) and the blocks it determines.
#[derive(Debug, Clone)]
pub struct LastPolynomial {
    /// `xP_{n−2} − P_{n−2}A_{n−2} − P_{n−3}B*_{n−3}`; absent when `n = 1`.
    pub auxiliary: Option<MatrixPolynomial>,
    pub p: MatrixPolynomial,
    /// `A_{n−2}`, absent when `n = 1`.
    pub a_prev: Option<CMat>,
    /// `B_{n−2}` (`(k−ℓ) × k`, row echelon), absent when `n = 1`.
    pub b_last: Option<CMat>,
    /// `A_{n−1}` (`(k−ℓ) × (k−ℓ)`).
    pub a_last: CMat,
}

/// Everything the inverse spectral map needs, for a measure with `Σ rank W_j = N`.
#[derive(Debug, Clone)]
pub struct RecurrenceData {
    pub k: usize,
    pub n_total: usize,
    pub n: usize,
    pub ell: usize,
    pub monic: MonicSequence,
    /// `P_0 … P_{n−1}`; the last one is `k × (k−ℓ)`.
    pub orthonormal: Vec<MatrixPolynomial>,
    /// `A_0 … A_{n−1}`.
    pub a: Vec<CMat>,
    /// `B_0 … B_{n−2}`.
    pub b: Vec<CMat>,
    /// `Q_0 … Q_{n−2}`.
    pub q: Vec<CMat>,
    pub auxiliary: Option<MatrixPolynomial>,
}

struct Full {
    data: RecurrenceData,
    tracked: Vec<Tracked>,
}

fn stacked_values(mu: &MatrixMeasure, f: &Tracked) -> CMat {
    let k = f.vals.first().map_or(0, |v| v.ncols());
    let rows: usize = mu.atoms().iter().map(|a| a.rank()).sum();
    let mut y = CMat::zeros(rows, k);
    let mut r = 0;
    for (a, v) in mu.atoms().iter().zip(&f.vals) {
        let blk = a.factor.adjoint() * v;
        y.view_mut((r, 0), (a.rank(), k)).copy_from(&blk);
        r += a.rank();
    }
    y
}

fn hermitian_inner_x(mu: &MatrixMeasure, p: &Tracked) -> CMat {
    linalg::hermitian_part(&ip_factored(mu, p, &p.mul_x(mu)))
}

fn build(mu: &MatrixMeasure, method: MonicMethod, tol: &Tolerances) -> Result<Full> {
    let k = mu.k();
    let n_total = mu.rank_sum();
    if n_total < k || k == 0 {
        return Err(Error::NotInClass(format!("N = {n_total} is smaller than k = {k}")));
    }
    let (n, ell) = block_shape(n_total, k);
    let monic = monic_internal(mu, n, method, tol)?;

    // Orthonormal recurrence on the values at the atoms (block Stieltjes) with
    // reorthogonalization. The result equals P_j = Π_j γ_j^{−1/2} Q_j with B_j
    // upper triangular; Q_j is read off from the leading coefficient.
    let p0 = Tracked::constant(mu, check_definite(&monic.seq.gamma[0], 0, k, tol)?);
    let mut p: Vec<Tracked> = vec![p0];
    let mut a = Vec::new();
    let mut b: Vec<CMat> = Vec::new();
    let mut auxiliary = None;
    for j in 0..n {
        a.push(hermitian_inner_x(mu, &p[j]));
        if j + 1 == n {
            break;
        }
        let xp = p[j].mul_x(mu);
        let scale = linalg::frob(&stacked_values(mu, &xp));
        let mut z = xp.sub(&p[j].mul_right(&a[j]));
        if j > 0 {
            z = z.sub(&p[j - 1].mul_right(&b[j - 1].adjoint()));
        }
        for _ in 0..2 {
            for pi in &p {
                z = z.sub(&pi.mul_right(&ip_factored(mu, pi, &z)));
            }
        }
        let y = stacked_values(mu, &z);
        if j + 2 < n {
            let (_, r) = linalg::qr_positive(&y).map_err(|_| Error::NotDefinite { index: j + 1 })?;
            let r_inv = linalg::solve_upper(&r, &CMat::identity(k, k));
            b.push(r);
            p.push(z.mul_right(&r_inv));
        } else {
            // ⟨𝑃,𝑃⟩ = Y*Y; factoring Y directly avoids squaring the cancellation
            // error. Rank is judged against ‖xP_{n−2}‖.
            let (_, b_last) = linalg::echelon_qr_abs(&y, tol.rank * scale.max(f64::MIN_POSITIVE));
            if b_last.nrows() != k - ell {
                return Err(Error::RankMismatch { found: b_last.nrows(), expected: k - ell });
            }
            let last = z.mul_right(&linalg::right_pseudoinverse(&b_last)?);
            b.push(b_last);
            auxiliary = Some(z.poly.clone());
            p.push(last);
        }
    }
    // Q_j = γ_j^{1/2} · lead(P_j) for the full-width polynomials.
    let q = p
        .iter()
        .take(n.saturating_sub(1).max(1))
        .enumerate()
        .map(|(j, pj)| linalg::psd_sqrt(&monic.seq.gamma[j]).map(|g| g * pj.poly.leading()))
        .collect::<Result<Vec<_>>>()?;

    let data = RecurrenceData {
        k,
        n_total,
        n,
        ell,
        monic: monic.seq,
        orthonormal: p.iter().map(|t| t.poly.clone()).collect(),
        a,
        b,
        q,
        auxiliary,
    };
    Ok(Full { data, tracked: p })
}

/// Monic and orthonormal recurrence data for `μ`, with `N = Σ rank W_j` and
/// `n`, `ℓ` derived from `N` and `k`.
pub fn recurrence_data(mu: &MatrixMeasure, tol: &Tolerances) -> Result<RecurrenceData> {
    build(mu, MonicMethod::Recurrence, tol).map(|f| f.data)
}

pub fn recurrence_data_with(mu: &MatrixMeasure, method: MonicMethod, tol: &Tolerances) -> Result<RecurrenceData> {
    build(mu, method, tol).map(|f| f.data)
}

/// `P_0 … P_{n−2}` with `A_0 … A_{n−3}` and `B_0 … B_{n−3}`.
pub fn orthonormal_sequence(mu: &MatrixMeasure, tol: &Tolerances) -> Result<OrthonormalSequence> {
    let d = recurrence_data(mu, tol)?;
    let m = d.n.saturating_sub(1);
    Ok(OrthonormalSequence {
        polys: d.orthonormal[..m].to_vec(),
        a: d.a[..m.saturating_sub(1)].to_vec(),
        b: d.b[..m.saturating_sub(1)].to_vec(),
        q: d.q[..m.max(1).min(d.q.len())].to_vec(),
    })
}

/// The degenerate last polynomial and the blocks `A_{n−2}`, `B_{n−2}`, `A_{n−1}`.
pub fn last_polynomial(mu: &MatrixMeasure, tol: &Tolerances) -> Result<LastPolynomial> {
    let d = recurrence_data(mu, tol)?;
    let n = d.n;
    Ok(LastPolynomial {
        auxiliary: d.auxiliary.clone(),
        p: d.orthonormal[n - 1].clone(),
        a_prev: (n >= 2).then(|| d.a[n - 2].clone()),
        b_last: (n >= 2).then(|| d.b[n - 2].clone()),
        a_last: d.a[n - 1].clone(),
    })
}

/// Gram matrices `⟨R_{n−2}, R_{n−2}⟩` and `⟨R_{n−1}, R_{n−1}⟩` of the residuals
///
/// `R_{n−2} = xP_{n−2} − P_{n−3}B*_{n−3} − P_{n−2}A_{n−2} − P_{n−1}B_{n−2}`,
/// `R_{n−1} = xP_{n−1} − P_{n−2}B*_{n−2} − P_{n−1}A_{n−1}`,
///
/// both of which vanish for a measure in the class. Requires `n ≥ 2`.
pub fn residual_grams(mu: &MatrixMeasure, tol: &Tolerances) -> Result<(CMat, CMat)> {
    let f = build(mu, MonicMethod::Recurrence, tol)?;
    let d = &f.data;
    let n = d.n;
    if n < 2 {
        return Err(Error::InvalidArgument("residuals need at least two block rows".into()));
    }
    let p = &f.tracked;
    let mut r2 = p[n - 2].mul_x(mu).sub(&p[n - 2].mul_right(&d.a[n - 2])).sub(&p[n - 1].mul_right(&d.b[n - 2]));
    if n >= 3 {
        r2 = r2.sub(&p[n - 3].mul_right(&d.b[n - 3].adjoint()));
    }
    let r1 = p[n - 1]
        .mul_x(mu)
        .sub(&p[n - 2].mul_right(&d.b[n - 2].adjoint()))
        .sub(&p[n - 1].mul_right(&d.a[n - 1]));
    Ok((ip(mu, &r2, &r2), ip(mu, &r1, &r1)))
}

/// `⟨xP_{n−1}, xP_{n−1}⟩` for the last orthonormal polynomial.
pub fn last_moment(mu: &MatrixMeasure, tol: &Tolerances) -> Result<CMat> {
    let f = build(mu, MonicMethod::Recurrence, tol)?;
    let last = f.tracked.last().expect("n ≥ 1").mul_x(mu);
    Ok(ip(mu, &last, &last))
}

/// Dimension of the space of degree-`d` polynomials with zero norm, computed
/// as the nullity of `M_d(V, X)`.
pub fn null_dimension(mu: &MatrixMeasure, d: usize, tol: &Tolerances) -> usize {
    linalg::nullity_with_tol(&krylov_matrix(mu, d), tol.rank)
}
