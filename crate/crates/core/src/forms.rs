//! Graded differential forms `Σ a_{I,J} dU_I ∧ dU_J*` over any [`Algebra`].
//!
//! Every form is kept in canonical order: unstarred covectors first, then
//! starred ones, each ascending. Coefficients sit to the left of the
//! covectors and commute past them when forms are multiplied.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::{c64, Algebra};

/// Tolerance for the commutation checks done when a basis is built.
pub const BASIS_CHECK_TOL: f64 = 1e-10;
/// Coefficients with max-norm at or below this are dropped.
pub const FORM_PRUNE: f64 = 1e-12;
/// Generators per basis is capped by the index bitmask.
pub const MAX_BASIS_LEN: usize = 32;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FormError {
    #[error("basis is empty")]
    EmptyBasis,
    #[error("basis has {0} elements, at most {MAX_BASIS_LEN} are supported")]
    TooLarge(usize),
    #[error("prefactor list has length {found}, expected {expected}")]
    PrefactorLength { expected: usize, found: usize },
    #[error("basis elements live over different carriers")]
    MixedCarriers,
    #[error("basis elements {0} and {1} do not commute (error {2:.3e})")]
    NotCommuting(String, String, f64),
    #[error("basis element {0} is not self-adjoint (error {1:.3e})")]
    NotSelfAdjoint(usize, f64),
    #[error("forms use different bases")]
    BasisMismatch,
    #[error("coefficient lives over a different carrier than the basis")]
    CarrierMismatch,
    #[error("operation needs a complex-mode basis")]
    NeedsComplexMode,
    #[error("index {0} out of range for a basis of size {1}")]
    IndexOutOfRange(usize, usize),
    #[error("starred covectors are not available in self-adjoint mode")]
    StarredInSelfAdjoint,
    #[error("malformed form JSON: {0}")]
    Json(String),
}

/// Whether starred covectors `dU_j*` are independent (complex) or identified
/// with `dU_j` (self-adjoint generators).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisMode {
    Complex,
    SelfAdjoint,
}

/// The generators `c_j U_j` of a differential calculus.
#[derive(Clone, Debug)]
pub struct DifferentialBasis<A: Algebra> {
    elements: Vec<A>,
    prefactors: Vec<Complex64>,
    mode: BasisMode,
    label: String,
}

impl<A: Algebra> DifferentialBasis<A> {
    pub fn new(elements: Vec<A>, mode: BasisMode, label: &str) -> Result<Self, FormError> {
        let n = elements.len();
        Self::with_prefactors(elements, vec![c64(1.0, 0.0); n], mode, label)
    }

    /// Builds the basis and checks that `U_j, U_j*, U_k, U_k*` all commute.
    /// In self-adjoint mode every `U_j` must equal its adjoint.
    pub fn with_prefactors(
        elements: Vec<A>,
        prefactors: Vec<Complex64>,
        mode: BasisMode,
        label: &str,
    ) -> Result<Self, FormError> {
        let n = elements.len();
        if n == 0 {
            return Err(FormError::EmptyBasis);
        }
        if n > MAX_BASIS_LEN {
            return Err(FormError::TooLarge(n));
        }
        if prefactors.len() != n {
            return Err(FormError::PrefactorLength {
                expected: n,
                found: prefactors.len(),
            });
        }
        if elements.iter().any(|u| !u.same_carrier(&elements[0])) {
            return Err(FormError::MixedCarriers);
        }
        let mut family = Vec::with_capacity(2 * n);
        for (j, u) in elements.iter().enumerate() {
            family.push((format!("U{}", j + 1), u.clone()));
            family.push((format!("U{}*", j + 1), u.adjoint()));
        }
        for (x, (nx, a)) in family.iter().enumerate() {
            for (ny, b) in family.iter().skip(x + 1) {
                let err = a.commutator(b).norm_max();
                if err > BASIS_CHECK_TOL {
                    return Err(FormError::NotCommuting(nx.clone(), ny.clone(), err));
                }
            }
        }
        for (j, u) in elements.iter().enumerate() {
            let err = u.max_abs_diff(&u.adjoint());
            match mode {
                BasisMode::SelfAdjoint if err > BASIS_CHECK_TOL => {
                    return Err(FormError::NotSelfAdjoint(j, err));
                }
                BasisMode::Complex if err <= BASIS_CHECK_TOL => {
                    log::warn!("basis element U{} is self-adjoint; dU and dU* will coincide up to sign conventions", j + 1);
                }
                _ => {}
            }
        }
        Ok(Self {
            elements,
            prefactors,
            mode,
            label: label.to_string(),
        })
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn mode(&self) -> BasisMode {
        self.mode
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn elements(&self) -> &[A] {
        &self.elements
    }

    pub fn prefactors(&self) -> &[Complex64] {
        &self.prefactors
    }

    /// `c_j U_j`.
    pub fn scaled(&self, j: usize) -> A {
        self.elements[j].scale(self.prefactors[j])
    }

    /// `(c_j U_j)*`.
    pub fn scaled_adjoint(&self, j: usize) -> A {
        self.scaled(j).adjoint()
    }

    /// Any element of the carrier, for building zeros and units.
    pub fn sample(&self) -> &A {
        &self.elements[0]
    }

    fn same(&self, other: &Self) -> bool {
        std::ptr::eq(self, other)
            || (self.mode == other.mode
                && self.prefactors == other.prefactors
                && self.elements.len() == other.elements.len()
                && self
                    .elements
                    .iter()
                    .zip(&other.elements)
                    .all(|(a, b)| a.same_carrier(b) && a.approx_eq(b, 0.0)))
    }
}

/// Pair `(I, J)` stored as a bitmask: bit `j` for `dU_j`, bit `32 + j` for
/// `dU_j*`. Ascending bit order is the canonical covector order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct FormIndex(u64);

impl FormIndex {
    pub const EMPTY: FormIndex = FormIndex(0);

    pub fn new(unstarred: &[usize], starred: &[usize]) -> Result<Self, FormError> {
        let mut bits = 0u64;
        for &i in unstarred {
            if i >= MAX_BASIS_LEN {
                return Err(FormError::IndexOutOfRange(i, MAX_BASIS_LEN));
            }
            bits |= 1 << i;
        }
        for &j in starred {
            if j >= MAX_BASIS_LEN {
                return Err(FormError::IndexOutOfRange(j, MAX_BASIS_LEN));
            }
            bits |= 1 << (32 + j);
        }
        Ok(Self(bits))
    }

    pub fn unstarred_slot(j: usize) -> Self {
        Self(1 << j)
    }

    pub fn starred_slot(j: usize) -> Self {
        Self(1 << (32 + j))
    }

    pub fn unstarred(&self) -> Vec<usize> {
        (0..32).filter(|b| self.0 >> b & 1 == 1).collect()
    }

    pub fn starred(&self) -> Vec<usize> {
        (0..32).filter(|b| self.0 >> (32 + b) & 1 == 1).collect()
    }

    pub fn p(&self) -> usize {
        (self.0 as u32).count_ones() as usize
    }

    pub fn q(&self) -> usize {
        ((self.0 >> 32) as u32).count_ones() as usize
    }

    pub fn degree(&self) -> usize {
        self.0.count_ones() as usize
    }

    /// Sign and index of `dU_self ∧ dU_other`, or `None` when a covector
    /// repeats.
    pub fn wedge(self, other: FormIndex) -> Option<(f64, FormIndex)> {
        if self.0 & other.0 != 0 {
            return None;
        }
        let mut inversions = 0u32;
        let mut rest = self.0;
        while rest != 0 {
            let x = rest.trailing_zeros();
            inversions += (other.0 & ((1u64 << x) - 1)).count_ones();
            rest &= rest - 1;
        }
        let sign = if inversions.is_multiple_of(2) {
            1.0
        } else {
            -1.0
        };
        Some((sign, FormIndex(self.0 | other.0)))
    }

    /// Swaps starred and unstarred slots.
    pub fn swapped(self) -> FormIndex {
        FormIndex(self.0.rotate_left(32))
    }

    fn fits(&self, n: usize, mode: BasisMode) -> Result<(), FormError> {
        let mask = if n == 32 {
            u32::MAX as u64
        } else {
            (1u64 << n) - 1
        };
        if self.0 & !(mask | mask << 32) != 0 {
            let bad = (0..64)
                .find(|b| self.0 >> b & 1 == 1 && (b % 32) >= n)
                .unwrap_or(0);
            return Err(FormError::IndexOutOfRange(bad % 32, n));
        }
        if mode == BasisMode::SelfAdjoint && self.q() > 0 {
            return Err(FormError::StarredInSelfAdjoint);
        }
        Ok(())
    }

    fn label(&self) -> String {
        let mut parts: Vec<String> = self
            .unstarred()
            .iter()
            .map(|i| format!("dU{}", i + 1))
            .collect();
        parts.extend(self.starred().iter().map(|j| format!("dU{}*", j + 1)));
        parts.join("∧")
    }
}

/// A differential form over a fixed basis.
#[derive(Clone, Debug)]
pub struct DifferentialForm<A: Algebra> {
    basis: Arc<DifferentialBasis<A>>,
    terms: BTreeMap<FormIndex, A>,
}

impl<A: Algebra> DifferentialForm<A> {
    pub fn zero(basis: &Arc<DifferentialBasis<A>>) -> Self {
        Self {
            basis: Arc::clone(basis),
            terms: BTreeMap::new(),
        }
    }

    /// The 0-form `a`.
    pub fn scalar(basis: &Arc<DifferentialBasis<A>>, a: A) -> Result<Self, FormError> {
        Self::term(basis, FormIndex::EMPTY, a)
    }

    pub fn term(
        basis: &Arc<DifferentialBasis<A>>,
        index: FormIndex,
        a: A,
    ) -> Result<Self, FormError> {
        if !a.same_carrier(basis.sample()) {
            return Err(FormError::CarrierMismatch);
        }
        index.fits(basis.len(), basis.mode)?;
        let mut out = Self::zero(basis);
        out.insert_add(index, a);
        Ok(out)
    }

    /// The 1-form `dU_j` with unit coefficient.
    pub fn covector(
        basis: &Arc<DifferentialBasis<A>>,
        j: usize,
        starred: bool,
    ) -> Result<Self, FormError> {
        let idx = if starred {
            FormIndex::starred_slot(j)
        } else {
            FormIndex::unstarred_slot(j)
        };
        Self::term(basis, idx, basis.sample().one_like())
    }

    pub fn basis(&self) -> &Arc<DifferentialBasis<A>> {
        &self.basis
    }

    pub fn terms(&self) -> &BTreeMap<FormIndex, A> {
        &self.terms
    }

    pub fn coefficient(&self, index: FormIndex) -> A {
        self.terms
            .get(&index)
            .cloned()
            .unwrap_or_else(|| self.basis.sample().zero_like())
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn insert_add(&mut self, index: FormIndex, a: A) {
        let updated = match self.terms.remove(&index) {
            Some(prev) => prev.add(&a),
            None => a,
        };
        if updated.norm_max() > FORM_PRUNE {
            self.terms.insert(index, updated);
        }
    }

    fn check_basis(&self, other: &Self) -> Result<(), FormError> {
        if Arc::ptr_eq(&self.basis, &other.basis) || self.basis.same(&other.basis) {
            Ok(())
        } else {
            Err(FormError::BasisMismatch)
        }
    }

    pub fn try_add(&self, other: &Self) -> Result<Self, FormError> {
        self.check_basis(other)?;
        let mut out = self.clone();
        for (idx, a) in &other.terms {
            out.insert_add(*idx, a.clone());
        }
        Ok(out)
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self, FormError> {
        self.try_add(&other.scale(c64(-1.0, 0.0)))
    }

    pub fn scale(&self, c: Complex64) -> Self {
        let mut out = Self::zero(&self.basis);
        for (idx, a) in &self.terms {
            out.insert_add(*idx, a.scale(c));
        }
        out
    }

    /// Multiplies every coefficient on the left by `x`.
    pub fn left_mul(&self, x: &A) -> Result<Self, FormError> {
        if !x.same_carrier(self.basis.sample()) {
            return Err(FormError::CarrierMismatch);
        }
        let mut out = Self::zero(&self.basis);
        for (idx, a) in &self.terms {
            out.insert_add(*idx, x.mul(a));
        }
        Ok(out)
    }

    /// `α ∧ β = Σ a b dU_{I} ∧ dU_{J}* ∧ dU_{M} ∧ dU_{N}*`, reordered.
    pub fn wedge(&self, other: &Self) -> Result<Self, FormError> {
        self.check_basis(other)?;
        let mut out = Self::zero(&self.basis);
        for (i1, a) in &self.terms {
            for (i2, b) in &other.terms {
                if let Some((sign, idx)) = i1.wedge(*i2) {
                    out.insert_add(idx, a.mul(b).scale(c64(sign, 0.0)));
                }
            }
        }
        Ok(out)
    }

    fn derivative(&self, unstarred: bool, starred: bool) -> Self {
        let basis = &self.basis;
        let mut out = Self::zero(basis);
        for (idx, a) in &self.terms {
            for j in 0..basis.len() {
                if unstarred {
                    if let Some((sign, new)) = FormIndex::unstarred_slot(j).wedge(*idx) {
                        out.insert_add(new, basis.scaled(j).commutator(a).scale(c64(sign, 0.0)));
                    }
                }
                if starred {
                    if let Some((sign, new)) = FormIndex::starred_slot(j).wedge(*idx) {
                        out.insert_add(
                            new,
                            basis.scaled_adjoint(j).commutator(a).scale(c64(sign, 0.0)),
                        );
                    }
                }
            }
        }
        out
    }

    /// `δα = Σ δa_{I,J} ∧ dU_I ∧ dU_J*` with
    /// `δa = Σ_j [c_jU_j, a] dU_j + [(c_jU_j)*, a] dU_j*`; the starred half is
    /// absent in self-adjoint mode.
    pub fn delta(&self) -> Self {
        let complex = self.basis.mode == BasisMode::Complex;
        self.derivative(true, complex)
    }

    /// Unstarred half of [`delta`](Self::delta).
    pub fn partial(&self) -> Result<Self, FormError> {
        self.require_complex()?;
        Ok(self.derivative(true, false))
    }

    /// Starred half of [`delta`](Self::delta).
    pub fn partial_star(&self) -> Result<Self, FormError> {
        self.require_complex()?;
        Ok(self.derivative(false, true))
    }

    /// `α* = Σ a*_{I,J} dU_I* ∧ dU_J`, brought back to canonical order.
    pub fn star(&self) -> Result<Self, FormError> {
        self.require_complex()?;
        let mut out = Self::zero(&self.basis);
        for (idx, a) in &self.terms {
            let sign = if (idx.p() * idx.q()) % 2 == 0 {
                1.0
            } else {
                -1.0
            };
            out.insert_add(idx.swapped(), a.adjoint().scale(c64(sign, 0.0)));
        }
        Ok(out)
    }

    fn require_complex(&self) -> Result<(), FormError> {
        match self.basis.mode {
            BasisMode::Complex => Ok(()),
            BasisMode::SelfAdjoint => Err(FormError::NeedsComplexMode),
        }
    }

    /// Splits into `(p, q)`-homogeneous components.
    pub fn grade(&self) -> BTreeMap<(usize, usize), Self> {
        let mut out: BTreeMap<(usize, usize), Self> = BTreeMap::new();
        for (idx, a) in &self.terms {
            out.entry((idx.p(), idx.q()))
                .or_insert_with(|| Self::zero(&self.basis))
                .terms
                .insert(*idx, a.clone());
        }
        out
    }

    /// Total-degree component `Ω^r`.
    pub fn degree_part(&self, r: usize) -> Self {
        let mut out = Self::zero(&self.basis);
        for (idx, a) in &self.terms {
            if idx.degree() == r {
                out.terms.insert(*idx, a.clone());
            }
        }
        out
    }

    /// `Some(r)` if every term has total degree `r`.
    pub fn homogeneous_degree(&self) -> Option<usize> {
        let mut degrees = self.terms.keys().map(|i| i.degree());
        let first = degrees.next().unwrap_or(0);
        degrees.all(|d| d == first).then_some(first)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let mut worst: f64 = 0.0;
        for (idx, a) in &self.terms {
            worst = worst.max(a.max_abs_diff(&other.coefficient(*idx)));
        }
        for (idx, b) in &other.terms {
            if !self.terms.contains_key(idx) {
                worst = worst.max(b.norm_max());
            }
        }
        worst
    }

    pub fn norm_max(&self) -> f64 {
        self.terms
            .values()
            .map(|a| a.norm_max())
            .fold(0.0, f64::max)
    }

    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.max_abs_diff(other) <= tol
    }

    pub fn to_json(&self) -> serde_json::Value {
        let terms: Vec<serde_json::Value> = self
            .terms
            .iter()
            .map(|(idx, a)| {
                serde_json::json!({
                    "I": idx.unstarred().iter().map(|i| i + 1).collect::<Vec<_>>(),
                    "J": idx.starred().iter().map(|j| j + 1).collect::<Vec<_>>(),
                    "coefficient": a.to_json(),
                })
            })
            .collect();
        serde_json::json!({ "basis_ref": self.basis.label, "terms": terms })
    }

    /// Reads the output of [`to_json`](Self::to_json), with a carrier-specific
    /// coefficient parser. Index lists are 1-based.
    pub fn from_json<F>(
        basis: &Arc<DifferentialBasis<A>>,
        value: &serde_json::Value,
        parse: F,
    ) -> Result<Self, FormError>
    where
        F: Fn(&serde_json::Value) -> Option<A>,
    {
        #[derive(Deserialize)]
        struct TermJson {
            #[serde(rename = "I")]
            i: Vec<usize>,
            #[serde(rename = "J")]
            j: Vec<usize>,
            coefficient: serde_json::Value,
        }
        #[derive(Deserialize)]
        struct FormJson {
            basis_ref: String,
            terms: Vec<TermJson>,
        }
        let parsed: FormJson =
            serde_json::from_value(value.clone()).map_err(|e| FormError::Json(e.to_string()))?;
        if parsed.basis_ref != basis.label {
            return Err(FormError::BasisMismatch);
        }
        let zero_based = |v: &[usize]| -> Result<Vec<usize>, FormError> {
            v.iter()
                .map(|&k| {
                    k.checked_sub(1)
                        .ok_or_else(|| FormError::Json("indices are 1-based".into()))
                })
                .collect()
        };
        let mut out = Self::zero(basis);
        for t in parsed.terms {
            let idx = FormIndex::new(&zero_based(&t.i)?, &zero_based(&t.j)?)?;
            let a =
                parse(&t.coefficient).ok_or_else(|| FormError::Json("bad coefficient".into()))?;
            out = out.try_add(&Self::term(basis, idx, a)?)?;
        }
        Ok(out)
    }
}

impl<A: Algebra + fmt::Display> fmt::Display for DifferentialForm<A> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (k, (idx, a)) in self.terms.iter().enumerate() {
            if k > 0 {
                f.write_str(" + ")?;
            }
            if idx.degree() == 0 {
                write!(f, "[{a}]")?;
            } else {
                write!(f, "[{a}] {}", idx.label())?;
            }
        }
        Ok(())
    }
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// Rank of `Ω^{p,q}` as a free module: `C(n,p)·C(n,q)`.
pub fn bidegree_rank(n: usize, p: usize, q: usize) -> u128 {
    binomial(n, p) * binomial(n, q)
}

/// Rank of `Ω^r`: `C(2n, r)` in complex mode, `C(n, r)` in self-adjoint mode.
pub fn degree_rank(n: usize, r: usize, mode: BasisMode) -> u128 {
    match mode {
        BasisMode::Complex => binomial(2 * n, r),
        BasisMode::SelfAdjoint => binomial(n, r),
    }
}

/// Whether `Ω^{p,q}` vanishes for a basis of size `n`.
pub fn bidegree_vanishes(n: usize, p: usize, q: usize) -> bool {
    p.max(q) > n
}

/// All indices of bidegree `(p, q)` over `n` generators, in canonical order.
pub fn indices_of_bidegree(n: usize, p: usize, q: usize) -> Vec<FormIndex> {
    let subsets = |k: usize| -> Vec<u64> {
        (0u64..1 << n)
            .filter(|m| m.count_ones() as usize == k)
            .collect()
    };
    let mut out = Vec::new();
    for i in subsets(p) {
        for j in subsets(q) {
            out.push(FormIndex(i | j << 32));
        }
    }
    out.sort();
    out
}

/// All indices of total degree `r` available in `mode`.
pub fn indices_of_degree(n: usize, r: usize, mode: BasisMode) -> Vec<FormIndex> {
    let mut out = Vec::new();
    match mode {
        BasisMode::SelfAdjoint => out.extend(indices_of_bidegree(n, r, 0)),
        BasisMode::Complex => {
            for p in 0..=r {
                out.extend(indices_of_bidegree(n, p, r - p));
            }
        }
    }
    out.sort();
    out
}

/// Random form with up to `max_terms` terms of degree `≤ max_degree`,
/// coefficients drawn by `coeff`.
pub fn random_form<A, R, F>(
    basis: &Arc<DifferentialBasis<A>>,
    rng: &mut R,
    max_terms: usize,
    max_degree: usize,
    mut coeff: F,
) -> DifferentialForm<A>
where
    A: Algebra,
    R: Rng + ?Sized,
    F: FnMut(&mut R) -> A,
{
    let n = basis.len();
    let mut out = DifferentialForm::zero(basis);
    for _ in 0..rng.gen_range(1..=max_terms.max(1)) {
        let r = rng.gen_range(0..=max_degree);
        let pool = indices_of_degree(n, r, basis.mode);
        if pool.is_empty() {
            continue;
        }
        let idx = pool[rng.gen_range(0..pool.len())];
        let a = coeff(rng);
        out.insert_add(idx, a);
    }
    out
}

/// Random form of exact total degree `r`.
pub fn random_homogeneous_form<A, R, F>(
    basis: &Arc<DifferentialBasis<A>>,
    rng: &mut R,
    max_terms: usize,
    r: usize,
    mut coeff: F,
) -> DifferentialForm<A>
where
    A: Algebra,
    R: Rng + ?Sized,
    F: FnMut(&mut R) -> A,
{
    let pool = indices_of_degree(basis.len(), r, basis.mode);
    let mut out = DifferentialForm::zero(basis);
    if pool.is_empty() {
        return out;
    }
    for _ in 0..rng.gen_range(1..=max_terms.max(1)) {
        let idx = pool[rng.gen_range(0..pool.len())];
        out.insert_add(idx, coeff(rng));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix_algebra::{projection_basis, random_matrix, MatElement};
    use crate::qlattice::{random_element, QAlgebraSpec, QElement};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn torus_basis(theta: f64) -> (Arc<QAlgebraSpec>, Arc<DifferentialBasis<QElement>>) {
        let spec = Arc::new(QAlgebraSpec::torus2(theta));
        let u = QElement::generator(&spec, 0).unwrap();
        let basis = DifferentialBasis::new(vec![u], BasisMode::Complex, "torus-U").unwrap();
        (spec, Arc::new(basis))
    }

    fn four_torus() -> (Arc<QAlgebraSpec>, Arc<DifferentialBasis<QElement>>) {
        let spec = Arc::new(QAlgebraSpec::torus_blocks(&[0.7, 1.3]));
        let u1 = QElement::generator(&spec, 0).unwrap();
        let u3 = QElement::generator(&spec, 2).unwrap();
        let basis = DifferentialBasis::new(vec![u1, u3], BasisMode::Complex, "torus4").unwrap();
        (spec, Arc::new(basis))
    }

    fn matrix_basis(n: usize) -> Arc<DifferentialBasis<MatElement>> {
        Arc::new(
            DifferentialBasis::new(
                projection_basis(n).unwrap(),
                BasisMode::SelfAdjoint,
                "p-basis",
            )
            .unwrap(),
        )
    }

    #[test]
    fn wedge_signs() {
        let a = FormIndex::unstarred_slot(0);
        let b = FormIndex::unstarred_slot(1);
        assert_eq!(a.wedge(a), None);
        assert_eq!(
            a.wedge(b),
            Some((1.0, FormIndex::new(&[0, 1], &[]).unwrap()))
        );
        assert_eq!(
            b.wedge(a),
            Some((-1.0, FormIndex::new(&[0, 1], &[]).unwrap()))
        );
        let s = FormIndex::starred_slot(0);
        assert_eq!(s.wedge(b).unwrap().0, -1.0);
        assert_eq!(b.wedge(s).unwrap().0, 1.0);
        assert_eq!(FormIndex::EMPTY.wedge(s), Some((1.0, s)));
    }

    #[test]
    fn matrix_delta_example() {
        let basis = matrix_basis(2);
        let e12 = MatElement::unit(2, 0, 1);
        let d = DifferentialForm::scalar(&basis, e12.clone())
            .unwrap()
            .delta();
        let expected = DifferentialForm::term(&basis, FormIndex::unstarred_slot(0), e12.clone())
            .unwrap()
            .try_sub(&DifferentialForm::term(&basis, FormIndex::unstarred_slot(1), e12).unwrap())
            .unwrap();
        assert!(d.approx_eq(&expected, 1e-12));
        let one = DifferentialForm::scalar(&basis, MatElement::identity(2)).unwrap();
        assert!(one.delta().is_zero());
    }

    #[test]
    fn torus_delta_example() {
        let theta = 0.9;
        let (spec, basis) = torus_basis(theta);
        let v = QElement::generator(&spec, 1).unwrap();
        let d = DifferentialForm::scalar(&basis, v).unwrap().delta();
        let e = |x: f64| Complex64::from_polar(1.0, x);
        let c1 = c64(1.0, 0.0) - e(-theta);
        let c2 = c64(1.0, 0.0) - e(theta);
        assert!(
            (d.coefficient(FormIndex::unstarred_slot(0))
                .coefficient(&[1, 1])
                - c1)
                .norm()
                < 1e-12
        );
        assert!(
            (d.coefficient(FormIndex::starred_slot(0))
                .coefficient(&[-1, 1])
                - c2)
                .norm()
                < 1e-12
        );
        assert_eq!(d.terms().len(), 2);
        let p = DifferentialForm::scalar(&basis, QElement::generator(&spec, 1).unwrap())
            .unwrap()
            .partial()
            .unwrap();
        assert_eq!(p.terms().len(), 1);
        assert!(
            (p.coefficient(FormIndex::unstarred_slot(0))
                .coefficient(&[1, 1])
                - c1)
                .norm()
                < 1e-12
        );
    }

    #[test]
    fn basis_rejects_noncommuting() {
        let spec = Arc::new(QAlgebraSpec::torus2(0.4));
        let u = QElement::generator(&spec, 0).unwrap();
        let v = QElement::generator(&spec, 1).unwrap();
        assert!(matches!(
            DifferentialBasis::new(vec![u.clone(), v], BasisMode::Complex, "bad"),
            Err(FormError::NotCommuting(..))
        ));
        assert!(matches!(
            DifferentialBasis::new(vec![u], BasisMode::SelfAdjoint, "bad"),
            Err(FormError::NotSelfAdjoint(0, _))
        ));
        let spec0 = Arc::new(QAlgebraSpec::torus2(0.0));
        let u = QElement::generator(&spec0, 0).unwrap();
        let v = QElement::generator(&spec0, 1).unwrap();
        assert!(DifferentialBasis::new(vec![u, v], BasisMode::Complex, "ok").is_ok());
    }

    #[test]
    fn wedge_noncommutative_example() {
        let (spec, _) = torus_basis(0.0);
        drop(spec);
        // two commuting generators with non-commuting coefficients
        let (spec, basis) = four_torus();
        let u = QElement::generator(&spec, 1).unwrap();
        let v = QElement::generator(&spec, 0).unwrap();
        let a_du1 =
            DifferentialForm::term(&basis, FormIndex::unstarred_slot(0), u.clone()).unwrap();
        let b_du2 =
            DifferentialForm::term(&basis, FormIndex::unstarred_slot(1), v.clone()).unwrap();
        let ab = a_du1.wedge(&b_du2).unwrap();
        let ba = b_du2.wedge(&a_du1).unwrap();
        let both = FormIndex::new(&[0, 1], &[]).unwrap();
        assert!(ab.coefficient(both).approx_eq(&u.mul(&v), 1e-12));
        assert!(ba
            .coefficient(both)
            .approx_eq(&v.mul(&u).scale(c64(-1.0, 0.0)), 1e-12));
        assert!(ab.try_add(&ba).unwrap().norm_max() > 0.1);
        let one = DifferentialForm::scalar(&basis, u.one_like()).unwrap();
        assert!(one.wedge(&ab).unwrap().approx_eq(&ab, 0.0));
        let du = DifferentialForm::covector(&basis, 0, false).unwrap();
        assert!(du.wedge(&du).unwrap().is_zero());
    }

    #[test]
    fn delta_squared_vanishes() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let (spec, basis) = four_torus();
        for _ in 0..200 {
            let f = random_form(&basis, &mut rng, 4, 3, |r| random_element(&spec, r, 3, 2));
            assert!(f.delta().delta().norm_max() < 1e-10);
            let p = f.partial().unwrap();
            let ps = f.partial_star().unwrap();
            assert!(p.try_add(&ps).unwrap().approx_eq(&f.delta(), 1e-12));
            assert!(p.partial().unwrap().norm_max() < 1e-10);
            assert!(ps.partial_star().unwrap().norm_max() < 1e-10);
            let mixed = ps
                .partial()
                .unwrap()
                .try_add(&p.partial_star().unwrap())
                .unwrap();
            assert!(mixed.norm_max() < 1e-10);
        }
        let mb = matrix_basis(3);
        for _ in 0..200 {
            let f = random_form(&mb, &mut rng, 3, 2, |r| random_matrix(3, r));
            assert!(f.delta().delta().norm_max() < 1e-10);
        }
    }

    #[test]
    fn graded_leibniz() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (spec, basis) = four_torus();
        for _ in 0..60 {
            let r = rng.gen_range(0..3);
            let a =
                random_homogeneous_form(&basis, &mut rng, 3, r, |g| random_element(&spec, g, 3, 2));
            let b = random_form(&basis, &mut rng, 3, 2, |g| random_element(&spec, g, 3, 2));
            let lhs = a.wedge(&b).unwrap().delta();
            let sign = if r % 2 == 0 { 1.0 } else { -1.0 };
            let rhs = a
                .delta()
                .wedge(&b)
                .unwrap()
                .try_add(&a.wedge(&b.delta()).unwrap().scale(c64(sign, 0.0)))
                .unwrap();
            assert!(lhs.approx_eq(&rhs, 1e-10));
        }
    }

    #[test]
    fn star_properties() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let (spec, basis) = four_torus();
        let u = QElement::generator(&spec, 1).unwrap();
        let f = DifferentialForm::term(&basis, FormIndex::unstarred_slot(0), u.clone()).unwrap();
        let s = f.star().unwrap();
        assert!(s
            .coefficient(FormIndex::starred_slot(0))
            .approx_eq(&u.adjoint(), 0.0));
        let one = DifferentialForm::scalar(&basis, u.one_like()).unwrap();
        assert!(one.star().unwrap().approx_eq(&one, 0.0));
        for _ in 0..100 {
            let f = random_form(&basis, &mut rng, 4, 4, |g| random_element(&spec, g, 3, 2));
            assert!(f.star().unwrap().star().unwrap().approx_eq(&f, 1e-12));
            for ((p, q), comp) in f.grade() {
                for idx in comp.star().unwrap().terms().keys() {
                    assert_eq!((idx.p(), idx.q()), (q, p));
                }
            }
        }
        let mb = matrix_basis(2);
        let m = DifferentialForm::scalar(&mb, MatElement::identity(2)).unwrap();
        assert_eq!(m.star().unwrap_err(), FormError::NeedsComplexMode);
        assert_eq!(m.partial().unwrap_err(), FormError::NeedsComplexMode);
    }

    #[test]
    fn grading_and_ranks() {
        let (spec, basis) = four_torus();
        let a = QElement::generator(&spec, 1).unwrap();
        let b = QElement::generator(&spec, 3).unwrap();
        let f = DifferentialForm::scalar(&basis, a.clone())
            .unwrap()
            .try_add(
                &DifferentialForm::term(&basis, FormIndex::new(&[0], &[1]).unwrap(), b).unwrap(),
            )
            .unwrap();
        let g = f.grade();
        assert_eq!(g.keys().copied().collect::<Vec<_>>(), vec![(0, 0), (1, 1)]);
        let mut back = DifferentialForm::zero(&basis);
        for c in g.values() {
            back = back.try_add(c).unwrap();
        }
        assert!(back.approx_eq(&f, 0.0));
        assert!(DifferentialForm::zero(&basis).grade().is_empty());
        for n in 1..6 {
            for r in 0..=2 * n {
                let sum: u128 = (0..=r).map(|p| bidegree_rank(n, p, r - p)).sum();
                assert_eq!(sum, degree_rank(n, r, BasisMode::Complex));
                assert_eq!(
                    indices_of_degree(n, r, BasisMode::Complex).len() as u128,
                    sum
                );
            }
            assert!(bidegree_vanishes(n, n + 1, 0));
            assert!(!bidegree_vanishes(n, n, n));
        }
    }

    #[test]
    fn json_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (spec, basis) = four_torus();
        let f = random_form(&basis, &mut rng, 5, 3, |g| random_element(&spec, g, 3, 2));
        let js = f.to_json();
        let back =
            DifferentialForm::from_json(&basis, &js, |v| QElement::from_json_value(&spec, v).ok())
                .unwrap();
        assert!(back.approx_eq(&f, 0.0));
    }

    #[test]
    fn mismatches() {
        let (_, b1) = four_torus();
        let (spec2, b2) = torus_basis(PI / 3.0);
        let f1 = DifferentialForm::covector(&b1, 0, false).unwrap();
        let f2 = DifferentialForm::covector(&b2, 0, false).unwrap();
        assert_eq!(f1.wedge(&f2).unwrap_err(), FormError::BasisMismatch);
        let v = QElement::generator(&spec2, 1).unwrap();
        assert_eq!(
            DifferentialForm::scalar(&b1, v).unwrap_err(),
            FormError::CarrierMismatch
        );
        let mb = matrix_basis(2);
        assert_eq!(
            DifferentialForm::term(&mb, FormIndex::starred_slot(0), MatElement::identity(2))
                .unwrap_err(),
            FormError::StarredInSelfAdjoint
        );
    }
}
