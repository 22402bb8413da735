//! Dense complex matrices `M_n(C)` and their diagonal projection basis.

use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::{c64, Algebra};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MatError {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("projection basis needs n >= 2, got {0}")]
    TooSmall(usize),
    #[error("matrix is not square ({0}x{1})")]
    NotSquare(usize, usize),
    #[error("matrix has a non-finite entry")]
    NonFinite,
    #[error("malformed matrix JSON: {0}")]
    Json(String),
}

/// A square complex matrix with finite entries.
#[derive(Clone, Debug, PartialEq)]
pub struct MatElement {
    m: DMatrix<Complex64>,
}

/// `{n, rows: [[[re, im], ...], ...]}`
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MatrixJson {
    pub n: usize,
    pub rows: Vec<Vec<[f64; 2]>>,
}

impl MatElement {
    pub fn new(m: DMatrix<Complex64>) -> Result<Self, MatError> {
        if m.nrows() != m.ncols() {
            return Err(MatError::NotSquare(m.nrows(), m.ncols()));
        }
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(MatError::NonFinite);
        }
        Ok(Self { m })
    }

    pub(crate) fn from_matrix_unchecked(m: DMatrix<Complex64>) -> Self {
        debug_assert_eq!(m.nrows(), m.ncols());
        Self { m }
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            m: DMatrix::zeros(n, n),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            m: DMatrix::identity(n, n),
        }
    }

    /// Matrix unit `e_{ij}` (0-based).
    pub fn unit(n: usize, i: usize, j: usize) -> Self {
        let mut out = Self::zeros(n);
        out.m[(i, j)] = c64(1.0, 0.0);
        out
    }

    pub fn diagonal(d: &[Complex64]) -> Self {
        let n = d.len();
        Self {
            m: DMatrix::from_fn(
                n,
                n,
                |i, j| if i == j { d[i] } else { Complex64::default() },
            ),
        }
    }

    pub fn n(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.m
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.m
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.m[(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, z: Complex64) {
        self.m[(i, j)] = z;
    }

    fn check_dim(&self, other: &Self) -> Result<(), MatError> {
        if self.n() == other.n() {
            Ok(())
        } else {
            Err(MatError::DimensionMismatch(self.n(), other.n()))
        }
    }

    pub fn mat_mul(&self, other: &Self) -> Result<Self, MatError> {
        self.check_dim(other)?;
        Ok(Self {
            m: &self.m * &other.m,
        })
    }

    pub fn mat_add(&self, other: &Self) -> Result<Self, MatError> {
        self.check_dim(other)?;
        Ok(Self {
            m: &self.m + &other.m,
        })
    }

    pub fn mat_adjoint(&self) -> Self {
        Self {
            m: self.m.adjoint(),
        }
    }

    pub fn mat_commutator(&self, other: &Self) -> Result<Self, MatError> {
        self.check_dim(other)?;
        Ok(Self {
            m: &self.m * &other.m - &other.m * &self.m,
        })
    }

    /// `Tr`, or `Tr/n` when `normalized`.
    pub fn trace(&self, normalized: bool) -> Complex64 {
        let t = self.m.trace();
        if normalized {
            t / self.n() as f64
        } else {
            t
        }
    }

    /// The matrix with its diagonal zeroed.
    pub fn offdiag(&self) -> Self {
        let mut m = self.m.clone();
        m.fill_diagonal(Complex64::default());
        Self { m }
    }

    pub fn diag_part(&self) -> Self {
        Self::diagonal(self.m.diagonal().as_slice())
    }

    /// Integer power; negative powers use the inverse (only for invertible input).
    pub fn power(&self, k: i64) -> Self {
        let base = if k < 0 {
            Self {
                m: self.m.clone().try_inverse().expect("matrix is invertible"),
            }
        } else {
            self.clone()
        };
        let mut acc = Self::identity(self.n());
        for _ in 0..k.unsigned_abs() {
            acc.m = &acc.m * &base.m;
        }
        acc
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.m.norm()
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        (&self.m - self.m.adjoint()).iter().all(|z| z.norm() <= tol)
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn hermitian_eigenvalues(&self) -> Vec<f64> {
        let h = (&self.m + self.m.adjoint()).scale(0.5);
        let mut ev: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    pub fn to_json_struct(&self) -> MatrixJson {
        let n = self.n();
        MatrixJson {
            n,
            rows: (0..n)
                .map(|i| {
                    (0..n)
                        .map(|j| [self.m[(i, j)].re, self.m[(i, j)].im])
                        .collect()
                })
                .collect(),
        }
    }

    pub fn from_json_struct(j: &MatrixJson) -> Result<Self, MatError> {
        if j.rows.len() != j.n || j.rows.iter().any(|r| r.len() != j.n) {
            return Err(MatError::Json(format!("expected {0}x{0} rows", j.n)));
        }
        Self::new(DMatrix::from_fn(j.n, j.n, |i, k| {
            c64(j.rows[i][k][0], j.rows[i][k][1])
        }))
    }
}

/// `p_1..p_n`: the rank-one diagonal projections.
pub fn projection_basis(n: usize) -> Result<Vec<MatElement>, MatError> {
    if n < 2 {
        return Err(MatError::TooSmall(n));
    }
    Ok((0..n).map(|j| MatElement::unit(n, j, j)).collect())
}

impl Algebra for MatElement {
    fn zero_like(&self) -> Self {
        Self::zeros(self.n())
    }

    fn one_like(&self) -> Self {
        Self::identity(self.n())
    }

    fn add(&self, other: &Self) -> Self {
        self.mat_add(other).expect("matrix dimension mismatch")
    }

    fn scale(&self, c: Complex64) -> Self {
        Self {
            m: self.m.scale_c(c),
        }
    }

    fn mul(&self, other: &Self) -> Self {
        self.mat_mul(other).expect("matrix dimension mismatch")
    }

    fn adjoint(&self) -> Self {
        self.mat_adjoint()
    }

    fn same_carrier(&self, other: &Self) -> bool {
        self.n() == other.n()
    }

    fn max_abs_diff(&self, other: &Self) -> f64 {
        self.m
            .iter()
            .zip(other.m.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Normalized trace, so `τ(1) = 1`.
    fn trace_state(&self) -> Option<Complex64> {
        Some(self.trace(true))
    }

    fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self.to_json_struct()).expect("plain data")
    }
}

trait ScaleComplex {
    fn scale_c(&self, c: Complex64) -> Self;
}

impl ScaleComplex for DMatrix<Complex64> {
    fn scale_c(&self, c: Complex64) -> Self {
        self.map(|z| z * c)
    }
}

impl fmt::Display for MatElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.m)
    }
}

pub fn random_matrix<R: Rng + ?Sized>(n: usize, rng: &mut R) -> MatElement {
    MatElement {
        m: DMatrix::from_fn(n, n, |_, _| {
            c64(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        }),
    }
}

/// Haar-ish random unitary from the QR factorization of a random matrix.
pub fn random_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> MatElement {
    let qr = random_matrix(n, rng).m.qr();
    MatElement { m: qr.q() }
}

/// Random Hermitian `a` with spectrum in `[0, 1]`.
pub fn random_unit_interval<R: Rng + ?Sized>(n: usize, rng: &mut R) -> MatElement {
    let u = random_unitary(n, rng);
    let d: Vec<Complex64> = (0..n).map(|_| c64(rng.gen_range(0.0..=1.0), 0.0)).collect();
    let a = u.mul(&MatElement::diagonal(&d)).mul(&u.adjoint());
    // symmetrize away rounding
    a.add(&a.adjoint()).scale(c64(0.5, 0.0))
}

/// Random normal matrix `V diag(λ) V*` with eigenvalues drawn from a small
/// set, so repeated eigenvalues occur.
pub fn random_normal<R: Rng + ?Sized>(n: usize, rng: &mut R) -> MatElement {
    let v = random_unitary(n, rng);
    let pool: Vec<Complex64> = (0..(n / 2).max(1) + 1)
        .map(|_| c64(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    let d: Vec<Complex64> = (0..n).map(|_| pool[rng.gen_range(0..pool.len())]).collect();
    v.mul(&MatElement::diagonal(&d)).mul(&v.adjoint())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn projection_basis_n2() {
        let p = projection_basis(2).unwrap();
        assert_eq!(p[0], MatElement::diagonal(&[c64(1.0, 0.0), c64(0.0, 0.0)]));
        assert_eq!(p[1], MatElement::diagonal(&[c64(0.0, 0.0), c64(1.0, 0.0)]));
        assert_eq!(projection_basis(1).unwrap_err(), MatError::TooSmall(1));
    }

    #[test]
    fn projections_are_orthogonal_and_complete() {
        for n in 2..6 {
            let p = projection_basis(n).unwrap();
            let sum = p.iter().fold(MatElement::zeros(n), |acc, x| acc.add(x));
            assert_eq!(sum, MatElement::identity(n));
            for j in 0..n {
                for k in 0..n {
                    let prod = p[j].mul(&p[k]);
                    let want = if j == k {
                        p[j].clone()
                    } else {
                        MatElement::zeros(n)
                    };
                    assert_eq!(prod, want);
                    assert!(p[j].mat_commutator(&p[k]).unwrap().is_zero_within(0.0));
                }
            }
        }
    }

    #[test]
    fn commutators_with_e12() {
        let p = projection_basis(2).unwrap();
        let e12 = MatElement::unit(2, 0, 1);
        assert_eq!(p[0].mat_commutator(&e12).unwrap(), e12);
        assert_eq!(
            p[1].mat_commutator(&e12).unwrap(),
            e12.scale(c64(-1.0, 0.0))
        );
    }

    #[test]
    fn dimension_mismatch() {
        let a = MatElement::identity(2);
        let b = MatElement::identity(3);
        assert_eq!(
            a.mat_mul(&b).unwrap_err(),
            MatError::DimensionMismatch(2, 3)
        );
        assert!(a.mat_commutator(&b).is_err());
        assert!(a.mat_add(&b).is_err());
    }

    #[test]
    fn traces() {
        let a = MatElement::diagonal(&[c64(1.0, 0.0), c64(2.0, 0.0), c64(3.0, 0.0)]);
        assert_eq!(a.trace(false), c64(6.0, 0.0));
        assert_eq!(a.trace(true), c64(2.0, 0.0));
    }

    #[test]
    fn offdiag_examples() {
        let d = MatElement::diagonal(&[c64(1.0, 0.0), c64(2.0, 0.0)]);
        assert!(d.offdiag().is_zero_within(0.0));
        let e12 = MatElement::unit(2, 0, 1);
        assert_eq!(e12.offdiag(), e12);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let a = random_matrix(4, &mut rng);
            let b = random_matrix(4, &mut rng);
            assert_eq!(a.offdiag().offdiag(), a.offdiag());
            let lhs = a.offdiag().adjoint().mul(&b).trace(false);
            let rhs = a.adjoint().mul(&b.offdiag()).trace(false);
            assert!((lhs - rhs).norm() < 1e-12);
        }
    }

    #[test]
    fn double_commutator_sum_is_twice_offdiag() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for n in 2..6 {
            let p = projection_basis(n).unwrap();
            for _ in 0..20 {
                let a = random_matrix(n, &mut rng);
                let s = p.iter().fold(a.zero_like(), |acc, pj| {
                    acc.add(&pj.commutator(&pj.commutator(&a)))
                });
                assert!(s.approx_eq(&a.offdiag().scale(c64(2.0, 0.0)), 1e-12));
            }
        }
    }

    #[test]
    fn random_unit_interval_spectrum() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_unit_interval(4, &mut rng);
        assert!(a.is_hermitian(1e-14));
        let ev = a.hermitian_eigenvalues();
        assert!(ev[0] >= -1e-12 && ev[3] <= 1.0 + 1e-12);
    }

    #[test]
    fn json_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a = random_matrix(3, &mut rng);
        let text = serde_json::to_string(&a.to_json_struct()).unwrap();
        let back = MatElement::from_json_struct(&serde_json::from_str(&text).unwrap()).unwrap();
        assert_eq!(back, a);
        let bad = MatrixJson {
            n: 2,
            rows: vec![vec![[0.0, 0.0]]],
        };
        assert!(MatElement::from_json_struct(&bad).is_err());
    }

    #[test]
    fn rejects_non_finite() {
        let m = DMatrix::from_element(2, 2, c64(f64::NAN, 0.0));
        assert_eq!(MatElement::new(m).unwrap_err(), MatError::NonFinite);
    }
}
