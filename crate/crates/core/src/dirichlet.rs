//! Laplacian `Δ = Σ [X_j*, [X_j, ·]]` of a commuting basis `X_j = c_j U_j`,
//! its heat semigroup, carré du champ, Dirichlet form and the locality
//! isometry `a ⊗ b ↦ ([X_j, a] b, [X_j*, a] b)_j`.
//!
//! On matrices every linear map is assembled as an `n² × n²` superoperator on
//! column-major vectorized matrices.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::{c64, Algebra};
use crate::forms::{BasisMode, DifferentialBasis};
use crate::matrix_algebra::{random_matrix, random_unit_interval, MatElement};
use crate::qlattice::QElement;

/// Tolerance for treating an assembled superoperator as Hermitian.
const HERMITIAN_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DirichletError {
    #[error("time must be nonnegative, got {0}")]
    NegativeTime(f64),
    #[error("carrier has no tracial state")]
    NoTrace,
    #[error("operation needs a complex-mode basis")]
    NeedsComplexMode,
    #[error("element does not live over the basis carrier")]
    CarrierMismatch,
    #[error("step count must be at least 1")]
    ZeroSteps,
    #[error("empty generator family")]
    EmptyFamily,
    #[error("monomial is not an eigenvector of the Laplacian (residual {0:.3e})")]
    NotDiagonal(f64),
}

fn check_carrier<A: Algebra>(a: &A, basis: &DifferentialBasis<A>) -> Result<(), DirichletError> {
    if a.same_carrier(basis.sample()) {
        Ok(())
    } else {
        Err(DirichletError::CarrierMismatch)
    }
}

/// `Δ(a) = Σ_j [(c_jU_j)*, [c_jU_j, a]]`.
pub fn laplacian<A: Algebra>(a: &A, basis: &DifferentialBasis<A>) -> Result<A, DirichletError> {
    check_carrier(a, basis)?;
    let mut out = a.zero_like();
    for j in 0..basis.len() {
        let x = basis.scaled(j);
        out = out.add(&x.adjoint().commutator(&x.commutator(a)));
    }
    Ok(out)
}

/// `a*Δ(c) + Δ(a*)c − Δ(a*c)`.
pub fn carre_du_champ<A: Algebra>(
    a: &A,
    c: &A,
    basis: &DifferentialBasis<A>,
) -> Result<A, DirichletError> {
    check_carrier(c, basis)?;
    let a_star = a.adjoint();
    let t1 = a_star.mul(&laplacian(c, basis)?);
    let t2 = laplacian(&a_star, basis)?.mul(c);
    let t3 = laplacian(&a_star.mul(c), basis)?;
    Ok(t1.add(&t2).sub(&t3))
}

/// `Σ_j [X_j, a]*[X_j, c] + [X_j*, a]*[X_j*, c]`, summing both halves
/// regardless of mode.
pub fn gradient_pairing<A: Algebra>(
    a: &A,
    c: &A,
    basis: &DifferentialBasis<A>,
) -> Result<A, DirichletError> {
    check_carrier(a, basis)?;
    check_carrier(c, basis)?;
    let mut out = a.zero_like();
    for j in 0..basis.len() {
        let x = basis.scaled(j);
        let xs = x.adjoint();
        out = out
            .add(&x.commutator(a).adjoint().mul(&x.commutator(c)))
            .add(&xs.commutator(a).adjoint().mul(&xs.commutator(c)));
    }
    Ok(out)
}

/// `⟨δa, δc⟩` over the covectors present in the basis mode: both halves in
/// complex mode, only `Σ_j [X_j, a]*[X_j, c]` in self-adjoint mode.
pub fn delta_pairing<A: Algebra>(
    a: &A,
    c: &A,
    basis: &DifferentialBasis<A>,
) -> Result<A, DirichletError> {
    match basis.mode() {
        BasisMode::Complex => gradient_pairing(a, c, basis),
        BasisMode::SelfAdjoint => {
            check_carrier(a, basis)?;
            check_carrier(c, basis)?;
            let mut out = a.zero_like();
            for j in 0..basis.len() {
                let x = basis.scaled(j);
                out = out.add(&x.commutator(a).adjoint().mul(&x.commutator(c)));
            }
            Ok(out)
        }
    }
}

/// Both sides of the Dirichlet form.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DirichletValue {
    /// `τ(a*Δb)`.
    pub energy: Complex64,
    /// `τ(⟨δa, δb⟩)`.
    pub delta_side: Complex64,
    /// Expected `delta_side / energy`: 2 in complex mode, 1 in self-adjoint mode.
    pub expected_ratio: f64,
}

impl DirichletValue {
    /// `|delta_side − expected_ratio·energy|`.
    pub fn mismatch(&self) -> f64 {
        (self.delta_side - self.energy * self.expected_ratio).norm()
    }
}

pub fn dirichlet_form<A: Algebra>(
    a: &A,
    b: &A,
    basis: &DifferentialBasis<A>,
) -> Result<DirichletValue, DirichletError> {
    let energy = a
        .adjoint()
        .mul(&laplacian(b, basis)?)
        .trace_state()
        .ok_or(DirichletError::NoTrace)?;
    let delta_side = delta_pairing(a, b, basis)?
        .trace_state()
        .ok_or(DirichletError::NoTrace)?;
    let expected_ratio = match basis.mode() {
        BasisMode::Complex => 2.0,
        BasisMode::SelfAdjoint => 1.0,
    };
    Ok(DirichletValue {
        energy,
        delta_side,
        expected_ratio,
    })
}

/// `W(a ⊗ b) = ([X_1, a]b, …, [X_n, a]b, [X_1*, a]b, …, [X_n*, a]b)`.
pub fn locality_isometry<A: Algebra>(
    a: &A,
    b: &A,
    basis: &DifferentialBasis<A>,
) -> Result<Vec<A>, DirichletError> {
    if basis.mode() != BasisMode::Complex {
        return Err(DirichletError::NeedsComplexMode);
    }
    check_carrier(a, basis)?;
    check_carrier(b, basis)?;
    let mut out = Vec::with_capacity(2 * basis.len());
    for j in 0..basis.len() {
        out.push(basis.scaled(j).commutator(a).mul(b));
    }
    for j in 0..basis.len() {
        out.push(basis.scaled_adjoint(j).commutator(a).mul(b));
    }
    Ok(out)
}

/// `max |Σ_k W(a⊗b)_k* W(c⊗d)_k − b*·Γ(a, c)·d|` where `Γ` is the carré du
/// champ.
pub fn isometry_check<A: Algebra>(
    a: &A,
    b: &A,
    c: &A,
    d: &A,
    basis: &DifferentialBasis<A>,
) -> Result<f64, DirichletError> {
    let w1 = locality_isometry(a, b, basis)?;
    let w2 = locality_isometry(c, d, basis)?;
    let mut lhs = a.zero_like();
    for (x, y) in w1.iter().zip(&w2) {
        lhs = lhs.add(&x.adjoint().mul(y));
    }
    let rhs = b.adjoint().mul(&carre_du_champ(a, c, basis)?).mul(d);
    Ok(lhs.max_abs_diff(&rhs))
}

fn vectorize(a: &MatElement) -> nalgebra::DVector<Complex64> {
    nalgebra::DVector::from_column_slice(a.matrix().as_slice())
}

fn unvectorize(v: &[Complex64], n: usize) -> MatElement {
    MatElement::from_matrix_unchecked(DMatrix::from_column_slice(n, n, v))
}

/// Matrix of a linear map on `M_n` acting on column-major vectorizations.
pub fn superoperator<F>(n: usize, map: F) -> DMatrix<Complex64>
where
    F: Fn(&MatElement) -> MatElement,
{
    let mut out = DMatrix::zeros(n * n, n * n);
    for j in 0..n {
        for i in 0..n {
            let image = map(&MatElement::unit(n, i, j));
            out.set_column(i + j * n, &vectorize(&image));
        }
    }
    out
}

/// Applies a superoperator to a matrix.
pub fn apply_superoperator(op: &DMatrix<Complex64>, a: &MatElement) -> MatElement {
    let v = op * vectorize(a);
    unvectorize(v.as_slice(), a.n())
}

fn is_hermitian(m: &DMatrix<Complex64>) -> bool {
    let scale = m.iter().map(|z| z.norm()).fold(1.0, f64::max);
    (m - m.adjoint())
        .iter()
        .all(|z| z.norm() <= HERMITIAN_TOL * scale)
}

/// `e^{sH}` for Hermitian `H` via its eigendecomposition, falling back to
/// scaling-and-squaring when `H` is not Hermitian.
pub fn hermitian_exp(h: &DMatrix<Complex64>, s: f64) -> DMatrix<Complex64> {
    if !is_hermitian(h) {
        log::debug!("superoperator not Hermitian, using scaling-and-squaring exp");
        return h.map(|z| z * s).exp();
    }
    let sym = (h + h.adjoint()).map(|z| z * 0.5);
    let eig = sym.symmetric_eigen();
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| c64((s * l).exp(), 0.0)));
    &eig.eigenvectors * d * eig.eigenvectors.adjoint()
}

fn matrix_power(m: &DMatrix<Complex64>, mut k: usize) -> DMatrix<Complex64> {
    let mut result = DMatrix::identity(m.nrows(), m.ncols());
    let mut base = m.clone();
    while k > 0 {
        if k & 1 == 1 {
            result = &result * &base;
        }
        base = &base * &base;
        k >>= 1;
    }
    result
}

pub fn spectral_norm(m: &DMatrix<Complex64>) -> f64 {
    m.clone().svd(false, false).singular_values.max()
}

fn laplacian_of_family(family: &[MatElement], a: &MatElement) -> MatElement {
    let mut out = a.zero_like();
    for x in family {
        out = out.add(&x.adjoint().commutator(&x.commutator(a)));
    }
    out
}

/// Superoperator of `Δ` for a matrix basis.
pub fn laplacian_superoperator(basis: &DifferentialBasis<MatElement>) -> DMatrix<Complex64> {
    let family: Vec<MatElement> = (0..basis.len()).map(|j| basis.scaled(j)).collect();
    superoperator(basis.sample().n(), |a| laplacian_of_family(&family, a))
}

/// `Φ_t = e^{−tΔ}` on `M_n`, with the spectral decomposition of `Δ` cached.
#[derive(Clone, Debug)]
pub struct HeatSemigroup {
    n: usize,
    eigenvalues: Vec<f64>,
    eigenvectors: DMatrix<Complex64>,
}

impl HeatSemigroup {
    pub fn new(basis: &DifferentialBasis<MatElement>) -> Self {
        let l = laplacian_superoperator(basis);
        let sym = (&l + l.adjoint()).map(|z| z * 0.5);
        let eig = sym.symmetric_eigen();
        Self {
            n: basis.sample().n(),
            eigenvalues: eig.eigenvalues.iter().copied().collect(),
            eigenvectors: eig.eigenvectors,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Spectrum of `Δ` as an operator on `M_n`, ascending.
    pub fn laplacian_spectrum(&self) -> Vec<f64> {
        let mut v = self.eigenvalues.clone();
        v.sort_by(f64::total_cmp);
        v
    }

    pub fn superoperator(&self, t: f64) -> Result<DMatrix<Complex64>, DirichletError> {
        if t < 0.0 || t.is_nan() {
            return Err(DirichletError::NegativeTime(t));
        }
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            self.eigenvalues.len(),
            self.eigenvalues.iter().map(|l| c64((-t * l).exp(), 0.0)),
        ));
        Ok(&self.eigenvectors * d * self.eigenvectors.adjoint())
    }

    pub fn apply(&self, a: &MatElement, t: f64) -> Result<MatElement, DirichletError> {
        if a.n() != self.n {
            return Err(DirichletError::CarrierMismatch);
        }
        Ok(apply_superoperator(&self.superoperator(t)?, a))
    }

    /// `Σ_{ij} e_{ij} ⊗ Φ_t(e_{ij})`: block `(i, j)` holds `Φ_t(e_{ij})`.
    pub fn choi_matrix(&self, t: f64) -> Result<MatElement, DirichletError> {
        let n = self.n;
        let phi = self.superoperator(t)?;
        let mut out = DMatrix::zeros(n * n, n * n);
        for i in 0..n {
            for j in 0..n {
                let image = apply_superoperator(&phi, &MatElement::unit(n, i, j));
                out.view_mut((i * n, j * n), (n, n))
                    .copy_from(image.matrix());
            }
        }
        Ok(MatElement::from_matrix_unchecked(out))
    }
}

/// `Φ_t(a)` for a matrix basis.
pub fn heat_semigroup(
    a: &MatElement,
    t: f64,
    basis: &DifferentialBasis<MatElement>,
) -> Result<MatElement, DirichletError> {
    check_carrier(a, basis)?;
    HeatSemigroup::new(basis).apply(a, t)
}

/// `Φ_t` on a lattice element: each monomial is an eigenvector of `Δ`, so
/// its coefficient is multiplied by `e^{−tλ}`.
pub fn lattice_heat_semigroup(
    x: &QElement,
    t: f64,
    basis: &DifferentialBasis<QElement>,
) -> Result<QElement, DirichletError> {
    if t < 0.0 || t.is_nan() {
        return Err(DirichletError::NegativeTime(t));
    }
    check_carrier(x, basis)?;
    let spec = x.spec();
    let mut out = QElement::zero(spec);
    for (mono, c) in x.terms() {
        let m = QElement::monomial(spec, mono.exponents().to_vec(), c64(1.0, 0.0))
            .expect("valid monomial");
        let image = laplacian(&m, basis)?;
        let lambda = image.coefficient(mono.exponents());
        let residual = image.max_abs_diff(&m.scale(lambda));
        if residual > 1e-9 {
            return Err(DirichletError::NotDiagonal(residual));
        }
        out = out.add(&m.scale(c * (-t * lambda.re).exp()));
    }
    Ok(out)
}

/// Per-time results of a semigroup audit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditEntry {
    pub t: f64,
    pub choi_min_eigenvalue: f64,
    pub symmetry_error: f64,
    pub conservativity_error: f64,
    pub markov_min: f64,
    pub markov_max: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SemigroupAudit {
    pub n: usize,
    pub basis: String,
    pub samples: usize,
    pub entries: Vec<AuditEntry>,
}

impl SemigroupAudit {
    pub fn to_csv(&self) -> String {
        let mut out =
            String::from("t,choi_min,symmetry_err,conservative_err,markov_min,markov_max\n");
        for e in &self.entries {
            out.push_str(&format!(
                "{},{:e},{:e},{:e},{:e},{:e}\n",
                e.t,
                e.choi_min_eigenvalue,
                e.symmetry_error,
                e.conservativity_error,
                e.markov_min,
                e.markov_max
            ));
        }
        out
    }

    /// Whether every entry meets the given tolerance on all four properties.
    pub fn passes(&self, tol: f64) -> bool {
        self.entries.iter().all(|e| {
            e.choi_min_eigenvalue >= -tol
                && e.symmetry_error <= tol
                && e.conservativity_error <= tol
                && e.markov_min >= -tol
                && e.markov_max <= 1.0 + tol
        })
    }
}

/// Checks complete positivity, `τ`-symmetry, conservativity and the Markov
/// property of `Φ_t` at each `t`, with `samples` random test matrices.
pub fn audit_semigroup<R: Rng + ?Sized>(
    times: &[f64],
    basis: &DifferentialBasis<MatElement>,
    samples: usize,
    rng: &mut R,
) -> Result<SemigroupAudit, DirichletError> {
    audit_semigroup_with_trace(times, basis, samples, true, rng)
}

/// As [`audit_semigroup`], measuring the symmetry error with the normalized
/// trace `Tr/n` or the plain trace.
pub fn audit_semigroup_with_trace<R: Rng + ?Sized>(
    times: &[f64],
    basis: &DifferentialBasis<MatElement>,
    samples: usize,
    normalized: bool,
    rng: &mut R,
) -> Result<SemigroupAudit, DirichletError> {
    let semigroup = HeatSemigroup::new(basis);
    let n = semigroup.n();
    let mut entries = Vec::with_capacity(times.len());
    for &t in times {
        let phi = semigroup.superoperator(t)?;
        let choi = semigroup.choi_matrix(t)?;
        let choi_min = choi.hermitian_eigenvalues().first().copied().unwrap_or(0.0);

        let mut symmetry_error: f64 = 0.0;
        let mut markov_min = f64::INFINITY;
        let mut markov_max = f64::NEG_INFINITY;
        for _ in 0..samples {
            let a = random_matrix(n, rng);
            let b = random_matrix(n, rng);
            let lhs = apply_superoperator(&phi, &a).mul(&b).trace(normalized);
            let rhs = a.mul(&apply_superoperator(&phi, &b)).trace(normalized);
            symmetry_error = symmetry_error.max((lhs - rhs).norm());

            let x = random_unit_interval(n, rng);
            let y = apply_superoperator(&phi, &x);
            let herm = y.add(&y.adjoint()).scale(c64(0.5, 0.0));
            let spectrum = herm.hermitian_eigenvalues();
            markov_min = markov_min.min(spectrum[0]);
            markov_max = markov_max.max(spectrum[spectrum.len() - 1]);
        }
        let one = MatElement::identity(n);
        let conservativity_error = apply_superoperator(&phi, &one).max_abs_diff(&one);
        entries.push(AuditEntry {
            t,
            choi_min_eigenvalue: choi_min,
            symmetry_error,
            conservativity_error,
            markov_min: if samples == 0 { 0.0 } else { markov_min },
            markov_max: if samples == 0 { 1.0 } else { markov_max },
        });
    }
    Ok(SemigroupAudit {
        n,
        basis: basis.label().to_string(),
        samples,
        entries,
    })
}

/// `K_1(a) = Σ(X* a X + X a X*)` and `K_2(a) = A a + a A` with
/// `A = −Σ X* X`, so that `K_1 + K_2 = −Δ` for normal `X`.
pub fn trotter_generators(
    family: &[MatElement],
) -> Result<(DMatrix<Complex64>, DMatrix<Complex64>), DirichletError> {
    let first = family.first().ok_or(DirichletError::EmptyFamily)?;
    let n = first.n();
    let mut big_a = MatElement::zeros(n);
    for x in family {
        big_a = big_a.sub(&x.adjoint().mul(x));
    }
    let k1 = superoperator(n, |a| {
        let mut out = a.zero_like();
        for x in family {
            out = out
                .add(&x.adjoint().mul(a).mul(x))
                .add(&x.mul(a).mul(&x.adjoint()));
        }
        out
    });
    let k2 = superoperator(n, |a| big_a.mul(a).add(&a.mul(&big_a)));
    Ok((k1, k2))
}

/// `‖(e^{(t/m)K_1} e^{(t/m)K_2})^m − e^{−tΔ}‖` in the spectral norm, for an
/// arbitrary family of normal matrices (commutation is not required).
pub fn trotter_error(t: f64, steps: usize, family: &[MatElement]) -> Result<f64, DirichletError> {
    if t < 0.0 || t.is_nan() {
        return Err(DirichletError::NegativeTime(t));
    }
    if steps == 0 {
        return Err(DirichletError::ZeroSteps);
    }
    let (k1, k2) = trotter_generators(family)?;
    let n = family[0].n();
    let lap = superoperator(n, |a| laplacian_of_family(family, a));
    let exact = hermitian_exp(&lap, -t);
    let h = t / steps as f64;
    let step = hermitian_exp(&k1, h) * hermitian_exp(&k2, h);
    Ok(spectral_norm(&(matrix_power(&step, steps) - exact)))
}

/// [`trotter_error`] for the scaled elements of a basis.
pub fn trotter_check(
    t: f64,
    steps: usize,
    basis: &DifferentialBasis<MatElement>,
) -> Result<f64, DirichletError> {
    let family: Vec<MatElement> = (0..basis.len()).map(|j| basis.scaled(j)).collect();
    trotter_error(t, steps, &family)
}
