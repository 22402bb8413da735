//! Boundary matrices of the deRham and Dolbeault complexes on
//! finite-dimensional carriers, and the resulting cohomology dimensions.
//!
//! Lattice algebras are infinite dimensional. They are handled through a
//! tower of monomial boxes `R_k` of radius `K − (top − k)·d`, where `d` is the
//! largest exponent appearing in the differential basis. Since a commutator
//! with a basis element moves exponents by at most `d`, the boundary maps send
//! degree-`k` forms over `R_k` into degree-`k+1` forms over `R_{k+1}`, and the
//! truncated spaces form an honest subcomplex.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::{c64, Algebra};
use crate::forms::{
    indices_of_bidegree, indices_of_degree, BasisMode, DifferentialBasis, DifferentialForm,
    FormError, FormIndex,
};
use crate::matrix_algebra::MatElement;
use crate::qlattice::{QAlgebraSpec, QElement, QError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CohomologyError {
    #[error("truncation K = {k} is too small for top degree {top} with basis degree {d} (need K >= {need})")]
    TruncationTooSmall {
        k: i64,
        top: usize,
        d: i64,
        need: i64,
    },
    #[error("element has a monomial outside the truncation box of radius {0}")]
    OutsideTruncation(i64),
    #[error("carrier dimension mismatch")]
    CarrierMismatch,
    #[error("complex kind needs a complex-mode basis")]
    NeedsComplexMode,
    #[error("operation needs a 2-generator spec, found {0} generators")]
    NotTwoGenerators(usize),
    #[error("degree {0} is past the top of the complex ({1})")]
    DegreeOutOfRange(usize, usize),
    #[error(transparent)]
    Form(#[from] FormError),
    #[error(transparent)]
    Lattice(#[from] QError),
}

/// A finite linear basis of (a truncation of) a carrier algebra.
pub trait CarrierBasis<A: Algebra> {
    fn dim(&self) -> usize;
    fn element(&self, i: usize) -> A;
    fn coordinates(&self, a: &A) -> Result<DVector<Complex64>, CohomologyError>;
}

/// A family of carrier bases, one per form degree, such that the boundary
/// maps send level `k` into level `k + 1`.
pub trait Truncation<A: Algebra> {
    type Level: CarrierBasis<A>;
    fn level(
        &self,
        k: usize,
        top: usize,
        basis: &DifferentialBasis<A>,
    ) -> Result<Self::Level, CohomologyError>;
    fn describe(&self, top: usize, basis: &DifferentialBasis<A>) -> serde_json::Value;
}

/// Matrix units `e_{ij}` of `M_n`, ordered column-major.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MatrixUnits {
    pub n: usize,
}

impl CarrierBasis<MatElement> for MatrixUnits {
    fn dim(&self) -> usize {
        self.n * self.n
    }

    fn element(&self, i: usize) -> MatElement {
        MatElement::unit(self.n, i % self.n, i / self.n)
    }

    fn coordinates(&self, a: &MatElement) -> Result<DVector<Complex64>, CohomologyError> {
        if a.n() != self.n {
            return Err(CohomologyError::CarrierMismatch);
        }
        Ok(DVector::from_column_slice(a.matrix().as_slice()))
    }
}

impl Truncation<MatElement> for MatrixUnits {
    type Level = MatrixUnits;

    fn level(
        &self,
        _k: usize,
        _top: usize,
        basis: &DifferentialBasis<MatElement>,
    ) -> Result<Self, CohomologyError> {
        if basis.sample().n() != self.n {
            return Err(CohomologyError::CarrierMismatch);
        }
        Ok(*self)
    }

    fn describe(&self, _top: usize, _basis: &DifferentialBasis<MatElement>) -> serde_json::Value {
        serde_json::json!({ "carrier": "matrix", "n": self.n })
    }
}

/// Monomials with every exponent in `[-radius, radius]`.
#[derive(Clone, Debug)]
pub struct MonomialBox {
    spec: Arc<QAlgebraSpec>,
    radius: i64,
}

impl MonomialBox {
    pub fn new(spec: &Arc<QAlgebraSpec>, radius: i64) -> Self {
        Self {
            spec: Arc::clone(spec),
            radius: radius.max(0),
        }
    }

    pub fn radius(&self) -> i64 {
        self.radius
    }

    fn side(&self) -> i64 {
        2 * self.radius + 1
    }

    fn exponents(&self, mut i: usize) -> Vec<i64> {
        let m = self.spec.generator_count();
        let side = self.side() as usize;
        let mut out = vec![0; m];
        for slot in out.iter_mut() {
            *slot = (i % side) as i64 - self.radius;
            i /= side;
        }
        out
    }

    fn position(&self, exps: &[i64]) -> Option<usize> {
        let side = self.side();
        let mut pos = 0i64;
        for &e in exps.iter().rev() {
            if e.abs() > self.radius {
                return None;
            }
            pos = pos * side + (e + self.radius);
        }
        Some(pos as usize)
    }
}

impl CarrierBasis<QElement> for MonomialBox {
    fn dim(&self) -> usize {
        (self.side() as usize).pow(self.spec.generator_count() as u32)
    }

    fn element(&self, i: usize) -> QElement {
        QElement::monomial(&self.spec, self.exponents(i), c64(1.0, 0.0)).expect("box monomial")
    }

    fn coordinates(&self, a: &QElement) -> Result<DVector<Complex64>, CohomologyError> {
        let mut v = DVector::zeros(self.dim());
        for (mono, c) in a.terms() {
            let pos = self
                .position(mono.exponents())
                .ok_or(CohomologyError::OutsideTruncation(self.radius))?;
            v[pos] = *c;
        }
        Ok(v)
    }
}

/// Nested monomial boxes for a lattice algebra, outer radius `k_max`.
#[derive(Clone, Debug)]
pub struct LatticeTruncation {
    pub spec: Arc<QAlgebraSpec>,
    pub k_max: i64,
}

impl LatticeTruncation {
    pub fn new(spec: &Arc<QAlgebraSpec>, k_max: i64) -> Self {
        Self {
            spec: Arc::clone(spec),
            k_max,
        }
    }

    fn radius(&self, k: usize, top: usize, d: i64) -> Result<i64, CohomologyError> {
        let need = top as i64 * d;
        if self.k_max < need {
            return Err(CohomologyError::TruncationTooSmall {
                k: self.k_max,
                top,
                d,
                need,
            });
        }
        Ok(self.k_max - (top as i64 - k as i64) * d)
    }
}

/// Largest absolute exponent among the basis elements.
pub fn basis_degree(basis: &DifferentialBasis<QElement>) -> i64 {
    basis
        .elements()
        .iter()
        .flat_map(|x| x.terms().keys())
        .flat_map(|m| m.exponents().iter().map(|e| e.abs()))
        .max()
        .unwrap_or(0)
}

impl Truncation<QElement> for LatticeTruncation {
    type Level = MonomialBox;

    fn level(
        &self,
        k: usize,
        top: usize,
        basis: &DifferentialBasis<QElement>,
    ) -> Result<MonomialBox, CohomologyError> {
        if !Arc::ptr_eq(basis.sample().spec(), &self.spec) && **basis.sample().spec() != *self.spec
        {
            return Err(CohomologyError::CarrierMismatch);
        }
        Ok(MonomialBox::new(
            &self.spec,
            self.radius(k, top, basis_degree(basis))?,
        ))
    }

    fn describe(&self, top: usize, basis: &DifferentialBasis<QElement>) -> serde_json::Value {
        let d = basis_degree(basis);
        let radii: Vec<i64> = (0..=top)
            .map(|k| self.k_max - (top as i64 - k as i64) * d)
            .collect();
        serde_json::json!({
            "carrier": "lattice",
            "spec": self.spec.label(),
            "K": self.k_max,
            "basis_degree": d,
            "radii_by_degree": radii,
        })
    }
}

/// Which complex the boundary maps come from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ComplexKind {
    /// `δ` on `Ω^k`.
    DeRham,
    /// `∂*` on `Ω^{p,q}` with `p` fixed, graded by `q`.
    Dolbeault { p: usize },
    /// `∂` on `Ω^{p,q}` with `q` fixed, graded by `p`.
    Holomorphic { q: usize },
}

impl ComplexKind {
    fn top<A: Algebra>(&self, basis: &DifferentialBasis<A>) -> Result<usize, CohomologyError> {
        let n = basis.len();
        match (self, basis.mode()) {
            (ComplexKind::DeRham, BasisMode::Complex) => Ok(2 * n),
            (ComplexKind::DeRham, BasisMode::SelfAdjoint) => Ok(n),
            (_, BasisMode::SelfAdjoint) => Err(CohomologyError::NeedsComplexMode),
            _ => Ok(n),
        }
    }

    fn indices<A: Algebra>(&self, k: usize, basis: &DifferentialBasis<A>) -> Vec<FormIndex> {
        let n = basis.len();
        match *self {
            ComplexKind::DeRham => indices_of_degree(n, k, basis.mode()),
            ComplexKind::Dolbeault { p } => indices_of_bidegree(n, p, k),
            ComplexKind::Holomorphic { q } => indices_of_bidegree(n, k, q),
        }
    }

    fn apply<A: Algebra>(
        &self,
        f: &DifferentialForm<A>,
    ) -> Result<DifferentialForm<A>, CohomologyError> {
        Ok(match self {
            ComplexKind::DeRham => f.delta(),
            ComplexKind::Dolbeault { .. } => f.partial_star()?,
            ComplexKind::Holomorphic { .. } => f.partial()?,
        })
    }

    fn name(&self) -> String {
        match self {
            ComplexKind::DeRham => "de_rham".into(),
            ComplexKind::Dolbeault { p } => format!("dolbeault(p={p})"),
            ComplexKind::Holomorphic { q } => format!("holomorphic(q={q})"),
        }
    }
}

/// Matrix of the degree-`k` boundary map. Columns run over
/// (form index, level-`k` carrier element), rows over
/// (form index, level-`k+1` carrier element), form index outermost.
pub fn boundary_matrix<A, T>(
    k: usize,
    kind: ComplexKind,
    basis: &Arc<DifferentialBasis<A>>,
    truncation: &T,
) -> Result<DMatrix<Complex64>, CohomologyError>
where
    A: Algebra,
    T: Truncation<A>,
{
    let top = kind.top(basis)?;
    if k > top {
        return Err(CohomologyError::DegreeOutOfRange(k, top));
    }
    let dom_idx = kind.indices(k, basis);
    let dom = truncation.level(k, top, basis)?;
    if k == top {
        // nothing above the top degree
        return Ok(DMatrix::zeros(0, dom_idx.len() * dom.dim()));
    }
    let cod_idx = kind.indices(k + 1, basis);
    let cod = truncation.level(k + 1, top, basis)?;
    let (dd, cd) = (dom.dim(), cod.dim());
    let mut out = DMatrix::zeros(cod_idx.len() * cd, dom_idx.len() * dd);
    for (a, idx) in dom_idx.iter().enumerate() {
        for i in 0..dd {
            let form = DifferentialForm::term(basis, *idx, dom.element(i))?;
            let image = kind.apply(&form)?;
            for (target, coeff) in image.terms() {
                let row_block = cod_idx
                    .binary_search(target)
                    .expect("boundary lands in the next degree");
                let coords = cod.coordinates(coeff)?;
                out.view_mut((row_block * cd, a * dd + i), (cd, 1))
                    .copy_from(&coords);
            }
        }
    }
    Ok(out)
}

/// `max_dim · ε · σ_max`.
pub fn default_rank_tol(m: &DMatrix<Complex64>, sigma_max: f64) -> f64 {
    m.nrows().max(m.ncols()) as f64 * f64::EPSILON * sigma_max
}

/// Numeric rank from singular values.
pub fn numeric_rank(m: &DMatrix<Complex64>, tol: Option<f64>) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let sv = m.clone().svd(false, false).singular_values;
    let smax = sv.max();
    if smax == 0.0 {
        return 0;
    }
    let tol = tol.unwrap_or_else(|| default_rank_tol(m, smax));
    sv.iter().filter(|&&s| s > tol).count()
}

/// Orthonormal basis of the null space, as columns.
pub fn null_space(m: &DMatrix<Complex64>, tol: Option<f64>) -> DMatrix<Complex64> {
    let cols = m.ncols();
    if m.nrows() == 0 || m.norm() == 0.0 {
        return DMatrix::identity(cols, cols);
    }
    let padded = if m.nrows() < cols {
        let mut p = DMatrix::zeros(cols, cols);
        p.view_mut((0, 0), (m.nrows(), cols)).copy_from(m);
        p
    } else {
        m.clone()
    };
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("requested");
    let smax = svd.singular_values.max();
    let tol = tol.unwrap_or_else(|| default_rank_tol(m, smax));
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] <= tol)
        .collect();
    let mut out = DMatrix::zeros(cols, keep.len());
    for (c, &i) in keep.iter().enumerate() {
        out.set_column(c, &v_t.row(i).adjoint());
    }
    out
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CohomologyOptions {
    /// Stop after this degree.
    pub max_degree: Option<usize>,
    /// Absolute singular-value threshold; the default is `max_dim·ε·σ_max`.
    pub rank_tol: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DegreeReport {
    pub k: usize,
    pub dim_ker: usize,
    pub rank_prev: usize,
    pub h_dim: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexReport {
    pub basis: String,
    pub complex: String,
    pub truncation: serde_json::Value,
    pub degrees: Vec<DegreeReport>,
}

impl ComplexReport {
    pub fn h(&self, k: usize) -> Option<usize> {
        self.degrees.iter().find(|d| d.k == k).map(|d| d.h_dim)
    }
}

/// Cohomology dimensions of the chosen complex.
pub fn complex_dims<A, T>(
    kind: ComplexKind,
    basis: &Arc<DifferentialBasis<A>>,
    truncation: &T,
    options: CohomologyOptions,
) -> Result<ComplexReport, CohomologyError>
where
    A: Algebra,
    T: Truncation<A>,
{
    let top = kind.top(basis)?;
    let last = options.max_degree.map_or(top, |m| m.min(top));
    let mut degrees = Vec::with_capacity(last + 1);
    let mut rank_prev = 0;
    for k in 0..=last {
        let d = boundary_matrix(k, kind, basis, truncation)?;
        let rank = numeric_rank(&d, options.rank_tol);
        let dim_ker = d.ncols() - rank;
        degrees.push(DegreeReport {
            k,
            dim_ker,
            rank_prev,
            h_dim: dim_ker.saturating_sub(rank_prev),
        });
        rank_prev = rank;
    }
    Ok(ComplexReport {
        basis: basis.label().to_string(),
        complex: kind.name(),
        truncation: truncation.describe(top, basis),
        degrees,
    })
}

pub fn de_rham_dims<A, T>(
    basis: &Arc<DifferentialBasis<A>>,
    truncation: &T,
    options: CohomologyOptions,
) -> Result<ComplexReport, CohomologyError>
where
    A: Algebra,
    T: Truncation<A>,
{
    complex_dims(ComplexKind::DeRham, basis, truncation, options)
}

pub fn dolbeault_dims<A, T>(
    p: usize,
    basis: &Arc<DifferentialBasis<A>>,
    truncation: &T,
    options: CohomologyOptions,
) -> Result<ComplexReport, CohomologyError>
where
    A: Algebra,
    T: Truncation<A>,
{
    complex_dims(ComplexKind::Dolbeault { p }, basis, truncation, options)
}

/// Largest entry of `D_{k+1} D_k`.
pub fn composite_residual<A, T>(
    k: usize,
    kind: ComplexKind,
    basis: &Arc<DifferentialBasis<A>>,
    truncation: &T,
) -> Result<f64, CohomologyError>
where
    A: Algebra,
    T: Truncation<A>,
{
    let top = kind.top(basis)?;
    if k + 1 >= top {
        return Ok(0.0);
    }
    let d0 = boundary_matrix(k, kind, basis, truncation)?;
    let d1 = boundary_matrix(k + 1, kind, basis, truncation)?;
    Ok((d1 * d0).iter().map(|z| z.norm()).fold(0.0, f64::max))
}

/// `vec(XA − AX) = (I ⊗ X − Xᵀ ⊗ I) vec(A)` for column-major `vec`.
pub fn commutation_operator(x: &MatElement) -> DMatrix<Complex64> {
    let n = x.n();
    let id = DMatrix::<Complex64>::identity(n, n);
    id.kronecker(x.matrix()) - x.matrix().transpose().kronecker(&id)
}

fn stacked(ops: &[DMatrix<Complex64>]) -> DMatrix<Complex64> {
    let cols = ops[0].ncols();
    let rows: usize = ops.iter().map(|o| o.nrows()).sum();
    let mut out = DMatrix::zeros(rows, cols);
    let mut r = 0;
    for o in ops {
        out.view_mut((r, 0), (o.nrows(), cols)).copy_from(o);
        r += o.nrows();
    }
    out
}

/// Null space of `a ↦ ([X_j, a])_j`, optionally also `[X_j*, a]`, assembled
/// from Kronecker products.
///
/// The default threshold is `COMMUTANT_REL_TOL · max(1, max_j ‖X_j‖_F)`. It
/// scales with the family rather than with the largest singular value of the
/// stacked operator, which is itself rounding noise when some `X_j` is
/// numerically a multiple of the identity.
pub fn commutant_null_space(
    family: &[MatElement],
    with_adjoints: bool,
    tol: Option<f64>,
) -> DMatrix<Complex64> {
    let mut ops: Vec<DMatrix<Complex64>> = family.iter().map(commutation_operator).collect();
    if with_adjoints {
        ops.extend(family.iter().map(|x| commutation_operator(&x.adjoint())));
    }
    let scale = family
        .iter()
        .map(|x| x.frobenius_norm())
        .fold(1.0, f64::max);
    null_space(
        &stacked(&ops),
        Some(tol.unwrap_or(COMMUTANT_REL_TOL * scale)),
    )
}

pub const COMMUTANT_REL_TOL: f64 = 1e-12;

pub fn commutant_dimension(family: &[MatElement], with_adjoints: bool) -> usize {
    commutant_null_space(family, with_adjoints, None).ncols()
}

/// `C_{0,0}` (commutant of the `X_j`) against `HC_{0,0}` (commutant of the
/// `X_j` and `X_j*`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FugledeReport {
    pub dim_c00: usize,
    pub dim_hc00: usize,
    /// Dimension of the sum of the two kernels.
    pub dim_sum: usize,
    pub coincide: bool,
}

pub fn fuglede_putnam_check(family: &[MatElement]) -> FugledeReport {
    let k1 = commutant_null_space(family, false, None);
    let k2 = commutant_null_space(family, true, None);
    let mut joined = DMatrix::zeros(k1.nrows(), k1.ncols() + k2.ncols());
    joined
        .view_mut((0, 0), (k1.nrows(), k1.ncols()))
        .copy_from(&k1);
    joined
        .view_mut((0, k1.ncols()), (k2.nrows(), k2.ncols()))
        .copy_from(&k2);
    let dim_sum = numeric_rank(&joined, Some(1e-8));
    FugledeReport {
        dim_c00: k1.ncols(),
        dim_hc00: k2.ncols(),
        dim_sum,
        coincide: k1.ncols() == k2.ncols() && dim_sum == k1.ncols(),
    }
}

/// Membership of a torus element in the commutant of `U`: a coefficient
/// `a_{k,l}` may be nonzero only when `e^{iθl} = 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct C00Membership {
    pub member: bool,
    /// Exponents `(k, l)` whose coefficients obstruct membership.
    pub witnesses: Vec<(i64, i64)>,
}

pub fn c00_membership(a: &QElement, tol: f64) -> Result<C00Membership, CohomologyError> {
    let spec = a.spec();
    if spec.generator_count() != 2 {
        return Err(CohomologyError::NotTwoGenerators(spec.generator_count()));
    }
    let theta = spec.theta(1, 0);
    let witnesses: Vec<(i64, i64)> = a
        .terms()
        .keys()
        .map(|m| (m.exponents()[0], m.exponents()[1]))
        .filter(|&(_, l)| {
            (c64(1.0, 0.0) - Complex64::from_polar(1.0, theta * l as f64)).norm() > tol
        })
        .collect();
    Ok(C00Membership {
        member: witnesses.is_empty(),
        witnesses,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix_algebra::{projection_basis, random_normal};
    use crate::qlattice::ClockShift;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn pbasis(n: usize) -> Arc<DifferentialBasis<MatElement>> {
        Arc::new(
            DifferentialBasis::new(projection_basis(n).unwrap(), BasisMode::SelfAdjoint, "p")
                .unwrap(),
        )
    }

    #[test]
    fn delta0_on_m2() {
        let b = pbasis(2);
        let d0 = boundary_matrix(0, ComplexKind::DeRham, &b, &MatrixUnits { n: 2 }).unwrap();
        assert_eq!((d0.nrows(), d0.ncols()), (8, 4));
        assert_eq!(numeric_rank(&d0, None), 2);
        let top = boundary_matrix(2, ComplexKind::DeRham, &b, &MatrixUnits { n: 2 }).unwrap();
        assert_eq!(top.nrows(), 0);
    }

    #[test]
    fn m2_cohomology() {
        let r = de_rham_dims(
            &pbasis(2),
            &MatrixUnits { n: 2 },
            CohomologyOptions::default(),
        )
        .unwrap();
        assert_eq!(r.h(0), Some(2));
        assert_eq!(r.degrees[1].dim_ker, 6);
        assert_eq!(r.degrees[1].rank_prev, 2);
        assert_eq!(r.h(1), Some(4));
        assert!(
            composite_residual(0, ComplexKind::DeRham, &pbasis(2), &MatrixUnits { n: 2 }).unwrap()
                < 1e-12
        );
    }

    #[test]
    fn h0_matrix_algebras() {
        for n in 2..=6 {
            let b = pbasis(n);
            let r = de_rham_dims(
                &b,
                &MatrixUnits { n },
                CohomologyOptions {
                    max_degree: Some(0),
                    rank_tol: None,
                },
            )
            .unwrap();
            assert_eq!(r.h(0), Some(n));
            assert_eq!(commutant_dimension(b.elements(), false), n);
        }
    }

    #[test]
    fn torus_truncated_complex() {
        let spec = Arc::new(QAlgebraSpec::torus2(0.7));
        let u = QElement::generator(&spec, 0).unwrap();
        let b = Arc::new(DifferentialBasis::new(vec![u], BasisMode::Complex, "U").unwrap());
        let t = LatticeTruncation::new(&spec, 6);
        for k in 0..2 {
            assert!(composite_residual(k, ComplexKind::DeRham, &b, &t).unwrap() < 1e-10);
        }
        let r = de_rham_dims(&b, &t, CohomologyOptions::default()).unwrap();
        // commutant of U inside the radius-4 box: powers of U only
        assert_eq!(r.h(0), Some(9));
        let dol = dolbeault_dims(0, &b, &t, CohomologyOptions::default()).unwrap();
        assert_eq!(dol.degrees.len(), 2);
        assert!(matches!(
            de_rham_dims(
                &b,
                &LatticeTruncation::new(&spec, 1),
                CohomologyOptions::default()
            ),
            Err(CohomologyError::TruncationTooSmall { .. })
        ));
    }

    #[test]
    fn dolbeault_squares_vanish() {
        let spec = Arc::new(QAlgebraSpec::torus_blocks(&[0.4, 0.9]));
        let us = vec![
            QElement::generator(&spec, 0).unwrap(),
            QElement::generator(&spec, 2).unwrap(),
        ];
        let b = Arc::new(DifferentialBasis::new(us, BasisMode::Complex, "U1U3").unwrap());
        let t = LatticeTruncation::new(&spec, 2);
        for p in 0..=2 {
            assert!(composite_residual(0, ComplexKind::Dolbeault { p }, &b, &t).unwrap() < 1e-10);
            assert!(
                composite_residual(0, ComplexKind::Holomorphic { q: p }, &b, &t).unwrap() < 1e-10
            );
        }
    }

    #[test]
    fn c00_examples() {
        let spec = Arc::new(QAlgebraSpec::torus2(1.0));
        let a = QElement::generator_power(&spec, 0, 2)
            .unwrap()
            .scale(c64(3.0, 0.0))
            .add(&QElement::generator_power(&spec, 0, -1).unwrap());
        assert!(c00_membership(&a, 1e-9).unwrap().member);
        let v = QElement::generator(&spec, 1).unwrap();
        let r = c00_membership(&v, 1e-9).unwrap();
        assert!(!r.member);
        assert_eq!(r.witnesses, vec![(0, 1)]);

        let odd = Arc::new(QAlgebraSpec::torus2(PI * 3.0 / 7.0));
        assert!(
            c00_membership(&QElement::generator_power(&odd, 1, 14).unwrap(), 1e-9)
                .unwrap()
                .member
        );
        assert!(
            !c00_membership(&QElement::generator_power(&odd, 1, 7).unwrap(), 1e-9)
                .unwrap()
                .member
        );
        let even = Arc::new(QAlgebraSpec::torus2(PI * 2.0 / 7.0));
        assert!(
            c00_membership(&QElement::generator_power(&even, 1, 7).unwrap(), 1e-9)
                .unwrap()
                .member
        );
    }

    #[test]
    fn c00_matches_commutator_with_u() {
        let spec = Arc::new(QAlgebraSpec::torus2(2.0 * PI / 7.0));
        let u = QElement::generator(&spec, 0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut members = 0;
        for i in 0..200 {
            let a = if i % 2 == 0 {
                // V-exponents that are multiples of 7
                let x = crate::qlattice::random_element(&spec, &mut rng, 3, 2);
                let terms = x.terms().iter().map(|(m, c)| {
                    let e = m.exponents();
                    (crate::qlattice::QMonomial::new(vec![e[0], 7 * e[1]]), *c)
                });
                QElement::from_terms(&spec, terms).unwrap()
            } else {
                crate::qlattice::random_element(&spec, &mut rng, 3, 6)
            };
            let member = c00_membership(&a, 1e-9).unwrap().member;
            members += usize::from(member);
            assert_eq!(member, u.commutator(&a).norm_max() <= 1e-9, "{a}");
        }
        assert!(members >= 100);
    }

    #[test]
    fn fuglede_putnam() {
        let cs = ClockShift::new(2.0 * PI * 3.0 / 7.0).unwrap();
        let r = fuglede_putnam_check(&[cs.clock().clone()]);
        assert!(r.coincide);
        assert_eq!(r.dim_c00, 7);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..5 {
            let u = random_normal(4, &mut rng);
            assert!(fuglede_putnam_check(&[u]).coincide);
        }
        // a nilpotent is not normal, and the kernels differ
        let n = MatElement::unit(2, 0, 1);
        assert!(!fuglede_putnam_check(&[n]).coincide);
    }

    #[test]
    fn commutation_operator_matches_direct() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = crate::matrix_algebra::random_matrix(3, &mut rng);
        let a = crate::matrix_algebra::random_matrix(3, &mut rng);
        let op = commutation_operator(&x);
        let v = &op * DVector::from_column_slice(a.matrix().as_slice());
        let direct = x.commutator(&a);
        let dv = DVector::from_column_slice(direct.matrix().as_slice());
        assert!((v - dv).norm() < 1e-12);
    }
}
