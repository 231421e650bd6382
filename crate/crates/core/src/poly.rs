//! Matrix polynomials with coefficients acting on the right:
//! `P(x) = Σ_j x^j C_j`, each `C_j` of shape `rows × cols`.

use crate::error::{Error, Result};
use crate::linalg::{real, CMat};

#[derive(Debug, Clone, PartialEq)]
pub struct MatrixPolynomial {
    rows: usize,
    cols: usize,
    coeffs: Vec<CMat>,
}

impl MatrixPolynomial {
    /// Builds a polynomial from its coefficients `C_0, …, C_p`.
    pub fn new(coeffs: Vec<CMat>) -> Result<Self> {
        let first = coeffs
            .first()
            .ok_or_else(|| Error::InvalidArgument("polynomial needs at least one coefficient".into()))?;
        let (rows, cols) = first.shape();
        if coeffs.iter().any(|c| c.shape() != (rows, cols)) {
            return Err(Error::DimensionMismatch("coefficients differ in shape".into()));
        }
        Ok(MatrixPolynomial { rows, cols, coeffs })
    }

    pub fn zero(rows: usize, cols: usize) -> Self {
        MatrixPolynomial { rows, cols, coeffs: vec![CMat::zeros(rows, cols)] }
    }

    pub fn constant(c: CMat) -> Self {
        let (rows, cols) = c.shape();
        MatrixPolynomial { rows, cols, coeffs: vec![c] }
    }

    pub fn identity(k: usize) -> Self {
        Self::constant(CMat::identity(k, k))
    }

    /// `x^j · I_k`.
    pub fn monomial(k: usize, j: usize) -> Self {
        let mut coeffs = vec![CMat::zeros(k, k); j + 1];
        coeffs[j] = CMat::identity(k, k);
        MatrixPolynomial { rows: k, cols: k, coeffs }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Length of the coefficient list minus one (trailing zero coefficients count).
    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[CMat] {
        &self.coeffs
    }

    pub fn coeff(&self, j: usize) -> CMat {
        self.coeffs.get(j).cloned().unwrap_or_else(|| CMat::zeros(self.rows, self.cols))
    }

    pub fn leading(&self) -> &CMat {
        self.coeffs.last().expect("non-empty")
    }

    pub fn is_monic(&self) -> bool {
        self.rows == self.cols && *self.leading() == CMat::identity(self.rows, self.cols)
    }

    /// Horner evaluation at a real point.
    pub fn eval(&self, x: f64) -> CMat {
        let xs = real(x);
        let mut acc = self.leading().clone();
        for c in self.coeffs.iter().rev().skip(1) {
            acc = acc * xs + c;
        }
        acc
    }

    /// `x · P(x)`.
    pub fn mul_x(&self) -> Self {
        let mut coeffs = Vec::with_capacity(self.coeffs.len() + 1);
        coeffs.push(CMat::zeros(self.rows, self.cols));
        coeffs.extend(self.coeffs.iter().cloned());
        MatrixPolynomial { rows: self.rows, cols: self.cols, coeffs }
    }

    /// `P(x) · C`.
    pub fn mul_right(&self, c: &CMat) -> Self {
        let coeffs: Vec<CMat> = self.coeffs.iter().map(|p| p * c).collect();
        MatrixPolynomial { rows: self.rows, cols: c.ncols(), coeffs }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.combine(other, 1.0)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.combine(other, -1.0)
    }

    fn combine(&self, other: &Self, sign: f64) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "polynomial shapes differ");
        let len = self.coeffs.len().max(other.coeffs.len());
        let coeffs = (0..len).map(|j| self.coeff(j) + other.coeff(j) * real(sign)).collect();
        MatrixPolynomial { rows: self.rows, cols: self.cols, coeffs }
    }

    /// `P(J) ∘ E = Σ_j J^j E C_j`.
    pub fn apply(&self, j: &CMat, e: &CMat) -> Result<CMat> {
        if !j.is_square() || j.ncols() != e.nrows() || e.ncols() != self.rows {
            return Err(Error::DimensionMismatch(format!(
                "cannot apply a {}x{} polynomial to J {}x{} and E {}x{}",
                self.rows,
                self.cols,
                j.nrows(),
                j.ncols(),
                e.nrows(),
                e.ncols()
            )));
        }
        let mut acc = e * self.leading();
        for c in self.coeffs.iter().rev().skip(1) {
            acc = j * acc + e * c;
        }
        Ok(acc)
    }
}

/// Evaluates `P(x)`.
pub fn poly_eval(p: &MatrixPolynomial, x: f64) -> CMat {
    p.eval(x)
}

/// Computes `P(J) ∘ E`.
pub fn poly_apply(p: &MatrixPolynomial, j: &CMat, e: &CMat) -> Result<CMat> {
    p.apply(j, e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c64, frob};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rmat(rng: &mut ChaCha8Rng, r: usize, c: usize) -> CMat {
        CMat::from_fn(r, c, |_, _| c64(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
    }

    #[test]
    fn trivial_evaluations() {
        let p = MatrixPolynomial::identity(2);
        assert_eq!(p.eval(7.5), CMat::identity(2, 2));
        let x = MatrixPolynomial::monomial(2, 1);
        assert_eq!(x.eval(3.0), CMat::identity(2, 2) * real(3.0));
        assert!(x.is_monic());
    }

    #[test]
    fn horner_matches_term_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = MatrixPolynomial::new((0..5).map(|_| rmat(&mut rng, 3, 2)).collect()).unwrap();
        let x: f64 = rng.gen_range(-2.0..2.0);
        let direct = p.coeffs().iter().enumerate().fold(CMat::zeros(3, 2), |acc, (j, c)| acc + c * real(x.powi(j as i32)));
        assert!(frob(&(p.eval(x) - direct)) <= 1e-12);
    }

    #[test]
    fn apply_trivial_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let j = rmat(&mut rng, 5, 5);
        let e = rmat(&mut rng, 5, 2);
        assert_eq!(MatrixPolynomial::identity(2).apply(&j, &e).unwrap(), e);
        let xj = MatrixPolynomial::monomial(2, 1).apply(&j, &e).unwrap();
        assert!(frob(&(xj - &j * &e)) < 1e-14);
        assert!(matches!(
            MatrixPolynomial::identity(3).apply(&j, &e),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn apply_identities() {
        // Sum, shift by x^j and right multiplication commute with evaluation at J.
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let jm = rmat(&mut rng, 6, 6);
        let e = rmat(&mut rng, 6, 2);
        let q = MatrixPolynomial::new((0..3).map(|_| rmat(&mut rng, 2, 2)).collect()).unwrap();
        let r = MatrixPolynomial::new((0..4).map(|_| rmat(&mut rng, 2, 2)).collect()).unwrap();
        let c = rmat(&mut rng, 2, 2);

        let lhs = q.add(&r).apply(&jm, &e).unwrap();
        let rhs = q.apply(&jm, &e).unwrap() + r.apply(&jm, &e).unwrap();
        assert!(frob(&(lhs - rhs)) < 1e-12);

        let shifted = q.mul_x().mul_x();
        let lhs = shifted.apply(&jm, &e).unwrap();
        let rhs = &jm * &jm * q.apply(&jm, &e).unwrap();
        assert!(frob(&(lhs - rhs)) < 1e-12);

        let lhs = q.mul_right(&c).apply(&jm, &e).unwrap();
        let rhs = q.apply(&jm, &e).unwrap() * &c;
        assert!(frob(&(lhs - rhs)) < 1e-12);
    }
}
