//! Symbolic arithmetic in algebras generated by q-commuting unitaries.
//!
//! Generators `U_1..U_m` satisfy `U_k U_j = e^{iθ_{j,k}} U_j U_k`. Every element
//! is kept as a finite combination of normal-ordered monomials
//! `U_1^{e_1} ··· U_m^{e_m}`; negative exponents are adjoint powers.
//!
//! Sign convention: for `k > j`, moving `U_k` to the left of `U_j` multiplies
//! by `e^{iθ_{j,k}}` (0-based `theta[j][k]` in code). The 2-torus with
//! `UV = e^{iθ}VU` therefore has `theta[1][0] = θ`, `theta[0][1] = -θ`.
//!
//! The same machinery houses the lattice-restricted Weyl operators of the
//! quantum plane ([`WeylPlane`]) and the three-generator presentation of the
//! quantum Heisenberg von Neumann algebra ([`QAlgebraSpec::heisenberg`]).

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::{c64, Algebra};
use crate::matrix_algebra::MatElement;

pub const DEFAULT_PRUNE_EPSILON: f64 = 1e-12;

/// Coefficientwise tolerance used when comparing elements.
pub const ELEMENT_EQ_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QError {
    #[error("generator index {index} out of range for {count} generators")]
    IndexOutOfRange { index: usize, count: usize },
    #[error("elements belong to different algebra specs ({left:?} vs {right:?})")]
    SpecMismatch { left: String, right: String },
    #[error("operation needs exactly {expected} generators, spec has {found}")]
    WrongGeneratorCount { expected: usize, found: usize },
    #[error("angle matrix is not a skew-symmetric {0}x{0} matrix")]
    NotSkewSymmetric(usize),
    #[error("an algebra needs at least one generator")]
    NoGenerators,
    #[error("monomial has {found} exponents, expected {expected}")]
    ExponentLength { expected: usize, found: usize },
    #[error("theta = {0} is not a rational multiple of 2π with a small denominator")]
    IrrationalAngle(f64),
    #[error("invalid generator names: {0}")]
    BadNames(String),
    #[error("malformed element JSON: {0}")]
    Json(String),
}

/// Structure data of a q-commuting algebra: generator count, angle matrix and
/// a free-form label.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpecJson", into = "SpecJson")]
pub struct QAlgebraSpec {
    theta: Vec<Vec<f64>>,
    label: String,
    names: Vec<String>,
    prune_epsilon: f64,
}

#[derive(Serialize, Deserialize)]
struct SpecJson {
    generators: usize,
    theta_matrix: Vec<Vec<f64>>,
    #[serde(default)]
    label: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    names: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    prune_epsilon: Option<f64>,
}

impl TryFrom<SpecJson> for QAlgebraSpec {
    type Error = QError;

    fn try_from(raw: SpecJson) -> Result<Self, QError> {
        if raw.theta_matrix.len() != raw.generators {
            return Err(QError::NotSkewSymmetric(raw.generators));
        }
        let mut spec = QAlgebraSpec::new(raw.theta_matrix, raw.label)?;
        if !raw.names.is_empty() {
            spec = spec.with_names(raw.names)?;
        }
        if let Some(eps) = raw.prune_epsilon {
            spec.prune_epsilon = eps;
        }
        Ok(spec)
    }
}

impl From<QAlgebraSpec> for SpecJson {
    fn from(spec: QAlgebraSpec) -> Self {
        let default_names = QAlgebraSpec::indexed_names(spec.generator_count());
        SpecJson {
            generators: spec.generator_count(),
            names: if spec.names == default_names {
                Vec::new()
            } else {
                spec.names
            },
            prune_epsilon: (spec.prune_epsilon != DEFAULT_PRUNE_EPSILON)
                .then_some(spec.prune_epsilon),
            theta_matrix: spec.theta,
            label: spec.label,
        }
    }
}

impl QAlgebraSpec {
    /// Validates skew-symmetry (within 1e-12) and a non-zero generator count.
    pub fn new(theta: Vec<Vec<f64>>, label: impl Into<String>) -> Result<Self, QError> {
        let m = theta.len();
        if m == 0 {
            return Err(QError::NoGenerators);
        }
        for (j, row) in theta.iter().enumerate() {
            if row.len() != m || row[j] != 0.0 {
                return Err(QError::NotSkewSymmetric(m));
            }
            for (k, &v) in row.iter().enumerate() {
                if !v.is_finite() || (v + theta[k][j]).abs() > 1e-12 {
                    return Err(QError::NotSkewSymmetric(m));
                }
            }
        }
        Ok(Self {
            theta,
            label: label.into(),
            names: Self::indexed_names(m),
            prune_epsilon: DEFAULT_PRUNE_EPSILON,
        })
    }

    fn indexed_names(m: usize) -> Vec<String> {
        (1..=m).map(|i| format!("U{i}")).collect()
    }

    /// Replaces the default `U1..Um` display names (e.g. with `U, V, W`).
    pub fn with_names(mut self, names: Vec<String>) -> Result<Self, QError> {
        if names.len() != self.generator_count() {
            return Err(QError::BadNames(format!(
                "{} names for {} generators",
                names.len(),
                self.generator_count()
            )));
        }
        for (i, n) in names.iter().enumerate() {
            let ok = n.chars().next().is_some_and(|c| c.is_ascii_alphabetic())
                && n.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
            if !ok || n == "i" || names[..i].contains(n) {
                return Err(QError::BadNames(n.clone()));
            }
        }
        self.names = names;
        Ok(self)
    }

    pub fn with_prune_epsilon(mut self, eps: f64) -> Self {
        self.prune_epsilon = eps;
        self
    }

    /// Two generators `U, V` with `UV = e^{iθ}VU`.
    pub fn torus2(theta: f64) -> Self {
        Self::new(
            vec![vec![0.0, -theta], vec![theta, 0.0]],
            format!("torus2(theta={theta})"),
        )
        .expect("skew-symmetric by construction")
        .with_names(vec!["U".into(), "V".into()])
        .expect("valid names")
    }

    /// The `2n`-torus in block form: pairs `(U_{2j-1}, U_{2j})` each behave like
    /// the 2-torus with angle `thetas[j]`, different pairs commute.
    pub fn torus_blocks(thetas: &[f64]) -> Self {
        let m = 2 * thetas.len();
        let mut theta = vec![vec![0.0; m]; m];
        for (j, &t) in thetas.iter().enumerate() {
            theta[2 * j + 1][2 * j] = t;
            theta[2 * j][2 * j + 1] = -t;
        }
        Self::new(theta, format!("torus{m}(thetas={thetas:?})"))
            .expect("skew-symmetric by construction")
    }

    /// Lattice generators `(U, V, W)` of the quantum Heisenberg von Neumann
    /// algebra: `UV = VU`, `UW = e^{-4πiħμ}WU`, `VW = e^{-4πiħν}WV`.
    pub fn heisenberg(mu: f64, nu: f64, hbar: f64) -> Self {
        let a = 4.0 * PI * mu * hbar;
        let b = 4.0 * PI * nu * hbar;
        let theta = vec![vec![0.0, 0.0, a], vec![0.0, 0.0, b], vec![-a, -b, 0.0]];
        Self::new(theta, format!("heisenberg(mu={mu},nu={nu},hbar={hbar})"))
            .expect("skew-symmetric by construction")
            .with_names(vec!["U".into(), "V".into(), "W".into()])
            .expect("valid names")
    }

    pub fn generator_count(&self) -> usize {
        self.theta.len()
    }

    pub fn theta(&self, j: usize, k: usize) -> f64 {
        self.theta[j][k]
    }

    pub fn theta_matrix(&self) -> &[Vec<f64>] {
        &self.theta
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn prune_epsilon(&self) -> f64 {
        self.prune_epsilon
    }

    pub fn generator_index(&self, name: &str) -> Option<usize> {
        if let Some(i) = self.names.iter().position(|n| n == name) {
            return Some(i);
        }
        let idx: usize = name.strip_prefix('U')?.parse().ok()?;
        (1..=self.generator_count()).contains(&idx).then(|| idx - 1)
    }

    /// Phase angle picked up when the product `a·b` of normal-ordered
    /// monomials is brought back to normal order.
    #[allow(clippy::needless_range_loop)]
    fn product_angle(&self, a: &[i64], b: &[i64]) -> f64 {
        let m = a.len();
        let mut angle = 0.0;
        for k in 1..m {
            if a[k] == 0 {
                continue;
            }
            for j in 0..k {
                if b[j] != 0 {
                    angle += self.theta[j][k] * (a[k] * b[j]) as f64;
                }
            }
        }
        angle
    }

    /// Phase angle of `(U^e)^* = e^{i·angle} U^{-e}`.
    fn adjoint_angle(&self, e: &[i64]) -> f64 {
        let m = e.len();
        let mut angle = 0.0;
        for k in 1..m {
            for j in 0..k {
                angle += self.theta[j][k] * (e[j] * e[k]) as f64;
            }
        }
        angle
    }
}

/// Exponent tuple of a normal-ordered monomial `U_1^{e_1}···U_m^{e_m}`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct QMonomial(Vec<i64>);

impl QMonomial {
    pub fn new(exponents: Vec<i64>) -> Self {
        Self(exponents)
    }

    pub fn identity(m: usize) -> Self {
        Self(vec![0; m])
    }

    pub fn generator(m: usize, index: usize, power: i64) -> Self {
        let mut e = vec![0; m];
        e[index] = power;
        Self(e)
    }

    pub fn exponents(&self) -> &[i64] {
        &self.0
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    /// Largest absolute exponent.
    pub fn spread(&self) -> u64 {
        self.0.iter().map(|e| e.unsigned_abs()).max().unwrap_or(0)
    }

    fn plus(&self, other: &Self) -> Self {
        Self(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    fn negated(&self) -> Self {
        Self(self.0.iter().map(|e| -e).collect())
    }
}

/// A finite linear combination of normal-ordered monomials.
#[derive(Clone, Debug)]
pub struct QElement {
    spec: Arc<QAlgebraSpec>,
    terms: BTreeMap<QMonomial, Complex64>,
}

/// One entry of the element JSON list.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TermJson {
    pub exponents: Vec<i64>,
    pub re: f64,
    pub im: f64,
}

impl QElement {
    pub fn zero(spec: &Arc<QAlgebraSpec>) -> Self {
        Self {
            spec: Arc::clone(spec),
            terms: BTreeMap::new(),
        }
    }

    pub fn scalar(spec: &Arc<QAlgebraSpec>, c: Complex64) -> Self {
        let m = spec.generator_count();
        Self::from_terms(spec, [(QMonomial::identity(m), c)])
            .expect("identity has the right length")
    }

    pub fn one(spec: &Arc<QAlgebraSpec>) -> Self {
        Self::scalar(spec, c64(1.0, 0.0))
    }

    pub fn generator(spec: &Arc<QAlgebraSpec>, index: usize) -> Result<Self, QError> {
        Self::generator_power(spec, index, 1)
    }

    pub fn generator_power(
        spec: &Arc<QAlgebraSpec>,
        index: usize,
        power: i64,
    ) -> Result<Self, QError> {
        let m = spec.generator_count();
        if index >= m {
            return Err(QError::IndexOutOfRange { index, count: m });
        }
        Self::from_terms(
            spec,
            [(QMonomial::generator(m, index, power), c64(1.0, 0.0))],
        )
    }

    pub fn monomial(
        spec: &Arc<QAlgebraSpec>,
        exponents: Vec<i64>,
        c: Complex64,
    ) -> Result<Self, QError> {
        Self::from_terms(spec, [(QMonomial::new(exponents), c)])
    }

    /// Builds an element from (monomial, coefficient) pairs, summing repeats
    /// and pruning small coefficients.
    pub fn from_terms(
        spec: &Arc<QAlgebraSpec>,
        terms: impl IntoIterator<Item = (QMonomial, Complex64)>,
    ) -> Result<Self, QError> {
        let m = spec.generator_count();
        let mut out = Self::zero(spec);
        for (mono, c) in terms {
            if mono.0.len() != m {
                return Err(QError::ExponentLength {
                    expected: m,
                    found: mono.0.len(),
                });
            }
            *out.terms.entry(mono).or_insert(Complex64::new(0.0, 0.0)) += c;
        }
        out.prune();
        Ok(out)
    }

    fn prune(&mut self) {
        let eps = self.spec.prune_epsilon;
        self.terms.retain(|_, c| c.norm() > eps);
    }

    pub fn spec(&self) -> &Arc<QAlgebraSpec> {
        &self.spec
    }

    pub fn terms(&self) -> &BTreeMap<QMonomial, Complex64> {
        &self.terms
    }

    pub fn coefficient(&self, exponents: &[i64]) -> Complex64 {
        self.terms
            .get(&QMonomial(exponents.to_vec()))
            .copied()
            .unwrap_or_default()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Largest absolute exponent over all stored monomials.
    pub fn spread(&self) -> u64 {
        self.terms.keys().map(QMonomial::spread).max().unwrap_or(0)
    }

    fn check_spec(&self, other: &Self) -> Result<(), QError> {
        if Arc::ptr_eq(&self.spec, &other.spec) || *self.spec == *other.spec {
            Ok(())
        } else {
            Err(QError::SpecMismatch {
                left: self.spec.label.clone(),
                right: other.spec.label.clone(),
            })
        }
    }

    pub fn try_add(&self, other: &Self) -> Result<Self, QError> {
        self.check_spec(other)?;
        let mut out = self.clone();
        for (mono, c) in &other.terms {
            *out.terms.entry(mono.clone()).or_default() += c;
        }
        out.prune();
        Ok(out)
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self, QError> {
        self.check_spec(other)?;
        let mut out = Self::zero(&self.spec);
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                let angle = self.spec.product_angle(&ma.0, &mb.0);
                let c = ca * cb * Complex64::from_polar(1.0, angle);
                *out.terms.entry(ma.plus(mb)).or_default() += c;
            }
        }
        out.prune();
        Ok(out)
    }

    pub fn try_commutator(&self, other: &Self) -> Result<Self, QError> {
        let ab = self.try_mul(other)?;
        let ba = other.try_mul(self)?;
        ab.try_add(&ba.scale_by(c64(-1.0, 0.0)))
    }

    pub fn scale_by(&self, c: Complex64) -> Self {
        let mut out = self.clone();
        for v in out.terms.values_mut() {
            *v *= c;
        }
        out.prune();
        out
    }

    /// Conjugate-linear involution; uses unitarity of the generators.
    pub fn dagger(&self) -> Self {
        let mut out = Self::zero(&self.spec);
        for (mono, c) in &self.terms {
            let angle = self.spec.adjoint_angle(&mono.0);
            *out.terms.entry(mono.negated()).or_default() +=
                c.conj() * Complex64::from_polar(1.0, angle);
        }
        out.prune();
        out
    }

    /// Integer power; negative powers only for single monomials.
    pub fn pow(&self, k: i64) -> Option<Self> {
        let base = if k >= 0 {
            self.clone()
        } else {
            let (mono, c) = match (self.terms.len(), self.terms.iter().next()) {
                (1, Some(t)) => t,
                _ => return None,
            };
            if c.norm() == 0.0 {
                return None;
            }
            // (c·M)^{-1} = c^{-1} M^*, M unitary
            QElement {
                spec: Arc::clone(&self.spec),
                terms: [(mono.clone(), c64(1.0, 0.0))].into(),
            }
            .dagger()
            .scale_by(c.inv())
        };
        let mut acc = Self::one(&self.spec);
        for _ in 0..k.unsigned_abs() {
            acc = acc.try_mul(&base).expect("same spec");
        }
        Some(acc)
    }

    /// Coefficient of the identity monomial: the canonical tracial state.
    pub fn tau(&self) -> Complex64 {
        self.coefficient(&vec![0; self.spec.generator_count()])
    }

    /// `tau(a^* b)`.
    pub fn inner(&self, other: &Self) -> Result<Complex64, QError> {
        Ok(self.dagger().try_mul(other)?.tau())
    }

    /// The gauge action `θ̂_{s,t}(U^k V^l) = e^{-i(sk+tl)} U^k V^l` on a
    /// two-generator algebra.
    pub fn theta_hat(&self, s: f64, t: f64) -> Result<Self, QError> {
        let found = self.spec.generator_count();
        if found != 2 {
            return Err(QError::WrongGeneratorCount { expected: 2, found });
        }
        let mut out = self.clone();
        for (mono, c) in out.terms.iter_mut() {
            let (k, l) = (mono.0[0] as f64, mono.0[1] as f64);
            *c *= Complex64::from_polar(1.0, -(s * k + t * l));
        }
        Ok(out)
    }

    pub fn to_json_terms(&self) -> Vec<TermJson> {
        self.terms
            .iter()
            .map(|(m, c)| TermJson {
                exponents: m.0.clone(),
                re: c.re,
                im: c.im,
            })
            .collect()
    }

    pub fn from_json_terms(spec: &Arc<QAlgebraSpec>, terms: &[TermJson]) -> Result<Self, QError> {
        Self::from_terms(
            spec,
            terms
                .iter()
                .map(|t| (QMonomial(t.exponents.clone()), c64(t.re, t.im))),
        )
    }

    /// Inverse of [`Algebra::to_json`] for lattice elements.
    pub fn from_json_value(
        spec: &Arc<QAlgebraSpec>,
        value: &serde_json::Value,
    ) -> Result<Self, QError> {
        let terms: Vec<TermJson> =
            serde_json::from_value(value.clone()).map_err(|e| QError::Json(e.to_string()))?;
        Self::from_json_terms(spec, &terms)
    }

    /// Finite-dimensional clock-and-shift image for a rational angle
    /// `θ = 2πp/q`: `U ↦ diag(1, ω, …, ω^{q-1})` with `ω = e^{iθ}`, `V ↦` the
    /// cyclic shift `e_j ↦ e_{j+1}`.
    pub fn clock_shift_rep(&self) -> Result<MatElement, QError> {
        let rep = ClockShift::for_spec(&self.spec)?;
        Ok(rep.image(self))
    }
}

/// Normal-orders a word of generator letters `(index, exponent)`.
pub fn normal_order(spec: &Arc<QAlgebraSpec>, word: &[(usize, i64)]) -> Result<QElement, QError> {
    let mut acc = QElement::one(spec);
    for &(index, power) in word {
        acc = acc.try_mul(&QElement::generator_power(spec, index, power)?)?;
    }
    Ok(acc)
}

impl Algebra for QElement {
    fn zero_like(&self) -> Self {
        Self::zero(&self.spec)
    }

    fn one_like(&self) -> Self {
        Self::one(&self.spec)
    }

    fn add(&self, other: &Self) -> Self {
        self.try_add(other).expect("q-lattice spec mismatch")
    }

    fn scale(&self, c: Complex64) -> Self {
        self.scale_by(c)
    }

    fn mul(&self, other: &Self) -> Self {
        self.try_mul(other).expect("q-lattice spec mismatch")
    }

    fn adjoint(&self) -> Self {
        self.dagger()
    }

    fn same_carrier(&self, other: &Self) -> bool {
        self.check_spec(other).is_ok()
    }

    fn max_abs_diff(&self, other: &Self) -> f64 {
        let mut worst: f64 = 0.0;
        for (m, c) in &self.terms {
            let d = c - other.terms.get(m).copied().unwrap_or_default();
            worst = worst.max(d.norm());
        }
        for (m, c) in &other.terms {
            if !self.terms.contains_key(m) {
                worst = worst.max(c.norm());
            }
        }
        worst
    }

    fn trace_state(&self) -> Option<Complex64> {
        Some(self.tau())
    }

    fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self.to_json_terms()).expect("plain data")
    }
}

impl PartialEq for QElement {
    fn eq(&self, other: &Self) -> bool {
        self.same_carrier(other) && self.max_abs_diff(other) <= ELEMENT_EQ_TOL
    }
}

impl fmt::Display for QElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (i, (mono, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                f.write_str(" + ")?;
            }
            write!(f, "({}{:+}i)", c.re, c.im)?;
            for (name, &e) in self.spec.names.iter().zip(&mono.0) {
                match e {
                    0 => {}
                    1 => write!(f, "*{name}")?,
                    _ => write!(f, "*{name}^{e}")?,
                }
            }
        }
        Ok(())
    }
}

/// Random element with up to `max_terms` monomials, exponents in
/// `-max_exp..=max_exp`, Gaussian-ish coefficients in the unit box.
pub fn random_element<R: Rng + ?Sized>(
    spec: &Arc<QAlgebraSpec>,
    rng: &mut R,
    max_terms: usize,
    max_exp: i64,
) -> QElement {
    let m = spec.generator_count();
    let count = rng.gen_range(1..=max_terms.max(1));
    let terms = (0..count).map(|_| {
        let e = (0..m).map(|_| rng.gen_range(-max_exp..=max_exp)).collect();
        (
            QMonomial(e),
            c64(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
        )
    });
    QElement::from_terms(spec, terms).expect("lengths match")
}

/// The clock-and-shift representation of a rational-angle 2-torus.
#[derive(Clone, Debug)]
pub struct ClockShift {
    p: i64,
    q: usize,
    clock: MatElement,
    shift: MatElement,
}

impl ClockShift {
    pub fn for_spec(spec: &QAlgebraSpec) -> Result<Self, QError> {
        let found = spec.generator_count();
        if found != 2 {
            return Err(QError::WrongGeneratorCount { expected: 2, found });
        }
        Self::new(spec.theta(1, 0))
    }

    /// `theta` must equal `2πp/q` (denominator ≤ 4096) within 1e-9.
    pub fn new(theta: f64) -> Result<Self, QError> {
        let (p, q) = rational_approx(theta / (2.0 * PI), 4096, 1e-9)
            .ok_or(QError::IrrationalAngle(theta))?;
        let q = q as usize;
        let omega = Complex64::from_polar(1.0, theta);
        let diag: Vec<Complex64> = (0..q).map(|j| omega.powu(j as u32)).collect();
        let clock = MatElement::diagonal(&diag);
        let mut shift = MatElement::zeros(q);
        for j in 0..q {
            shift.set((j + 1) % q, j, c64(1.0, 0.0));
        }
        Ok(Self { p, q, clock, shift })
    }

    pub fn dimension(&self) -> usize {
        self.q
    }

    pub fn numerator(&self) -> i64 {
        self.p
    }

    pub fn clock(&self) -> &MatElement {
        &self.clock
    }

    pub fn shift(&self) -> &MatElement {
        &self.shift
    }

    /// Image of `U^a V^b`.
    pub fn monomial_image(&self, a: i64, b: i64) -> MatElement {
        let u = self.clock.power(a);
        let v = self.shift.power(b);
        u.mul(&v)
    }

    pub fn image(&self, x: &QElement) -> MatElement {
        let mut out = MatElement::zeros(self.q);
        for (mono, c) in x.terms() {
            let img = self.monomial_image(mono.0[0], mono.0[1]);
            out = out.add(&img.scale(*c));
        }
        out
    }
}

/// Best rational `p/q` (q ≤ max_den) within `tol` of `x`, via continued fractions.
fn rational_approx(x: f64, max_den: i64, tol: f64) -> Option<(i64, i64)> {
    let (mut h0, mut h1) = (0i64, 1i64);
    let (mut k0, mut k1) = (1i64, 0i64);
    let mut r = x;
    for _ in 0..64 {
        let a = r.floor();
        let ai = a as i64;
        let h2 = ai.checked_mul(h1)?.checked_add(h0)?;
        let k2 = ai.checked_mul(k1)?.checked_add(k0)?;
        if k2 > max_den {
            return None;
        }
        if (x - h2 as f64 / k2 as f64).abs() <= tol {
            return Some((h2, k2));
        }
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        let frac = r - a;
        if frac.abs() < 1e-15 {
            return None;
        }
        r = 1.0 / frac;
    }
    None
}

/// Lattice-restricted Weyl operators `e^{i(t_1P + t_2Q)}` for `n` canonical
/// pairs with `[P_j, Q_k] = -iħδ_{jk}`.
///
/// Generators are ordered `(A_1, B_1, …, A_n, B_n)` with `A_j = e^{i·step·P_j}`
/// and `B_j = e^{i·step·Q_j}`; each pair has angle `ħ·step²`.
#[derive(Clone, Debug)]
pub struct WeylPlane {
    spec: Arc<QAlgebraSpec>,
    hbar: f64,
    step: f64,
    pairs: usize,
}

impl WeylPlane {
    pub fn new(pairs: usize, hbar: f64, step: f64) -> Self {
        let angle = hbar * step * step;
        let base = QAlgebraSpec::torus_blocks(&vec![angle; pairs]);
        let names = if pairs == 1 {
            vec!["A".to_string(), "B".to_string()]
        } else {
            (1..=pairs)
                .flat_map(|j| [format!("A{j}"), format!("B{j}")])
                .collect()
        };
        let spec = QAlgebraSpec::new(
            base.theta,
            format!("weyl(pairs={pairs},hbar={hbar},step={step})"),
        )
        .expect("skew-symmetric")
        .with_names(names)
        .expect("valid names");
        Self {
            spec: Arc::new(spec),
            hbar,
            step,
            pairs,
        }
    }

    pub fn spec(&self) -> &Arc<QAlgebraSpec> {
        &self.spec
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn pairs(&self) -> usize {
        self.pairs
    }

    /// `exp(i·step·Σ_j (p_j P_j + q_j Q_j))` as a phase times `Π A_j^{p_j} B_j^{q_j}`.
    pub fn weyl(&self, p: &[i64], q: &[i64]) -> QElement {
        assert_eq!(p.len(), self.pairs);
        assert_eq!(q.len(), self.pairs);
        let mut e = vec![0; 2 * self.pairs];
        let mut angle = 0.0;
        for j in 0..self.pairs {
            e[2 * j] = p[j];
            e[2 * j + 1] = q[j];
            angle -= self.hbar * self.step * self.step * (p[j] * q[j]) as f64 / 2.0;
        }
        QElement::monomial(&self.spec, e, Complex64::from_polar(1.0, angle))
            .expect("length matches")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn torus(theta: f64) -> Arc<QAlgebraSpec> {
        Arc::new(QAlgebraSpec::torus2(theta))
    }

    fn close(a: Complex64, b: Complex64) -> bool {
        (a - b).norm() < 1e-12
    }

    #[test]
    fn vu_reorders_with_negative_phase() {
        let s = torus(0.7);
        let x = normal_order(&s, &[(1, 1), (0, 1)]).unwrap();
        assert!(close(
            x.coefficient(&[1, 1]),
            Complex64::from_polar(1.0, -0.7)
        ));
        assert_eq!(x.terms().len(), 1);
    }

    #[test]
    fn unitarity_cancels() {
        let s = torus(0.7);
        let x = normal_order(&s, &[(0, 1), (0, -1)]).unwrap();
        assert_eq!(x, QElement::one(&s));
        for j in 0..2 {
            let u = QElement::generator(&s, j).unwrap();
            let p = u.mul(&u.adjoint());
            assert!(p.max_abs_diff(&QElement::one(&s)) == 0.0);
        }
    }

    #[test]
    fn heisenberg_w_past_u() {
        let (mu, nu) = (0.11, 0.07);
        let s = Arc::new(QAlgebraSpec::heisenberg(mu, nu, 1.0));
        let x = normal_order(&s, &[(2, 1), (0, 1)]).unwrap();
        assert!(close(
            x.coefficient(&[1, 0, 1]),
            Complex64::from_polar(1.0, 4.0 * PI * mu)
        ));
    }

    #[test]
    fn out_of_range_index() {
        let s = torus(0.3);
        assert_eq!(
            normal_order(&s, &[(2, 1)]).unwrap_err(),
            QError::IndexOutOfRange { index: 2, count: 2 }
        );
    }

    #[test]
    fn products_and_adjoint() {
        let s = torus(0.4);
        let u = QElement::generator(&s, 0).unwrap();
        let v = QElement::generator(&s, 1).unwrap();
        assert!(close(u.mul(&v).coefficient(&[1, 1]), c64(1.0, 0.0)));
        assert!(close(
            v.mul(&u).coefficient(&[1, 1]),
            Complex64::from_polar(1.0, -0.4)
        ));
        let iu = u.scale(c64(0.0, 1.0));
        let adj = iu.adjoint();
        assert!(close(adj.coefficient(&[-1, 0]), c64(0.0, -1.0)));
        assert_eq!(adj.terms().len(), 1);
    }

    #[test]
    fn commutator_examples() {
        let th = 0.9;
        let s = torus(th);
        let u = QElement::generator(&s, 0).unwrap();
        let v = QElement::generator(&s, 1).unwrap();
        let c = u.commutator(&v);
        assert!(close(
            c.coefficient(&[1, 1]),
            c64(1.0, 0.0) - Complex64::from_polar(1.0, -th)
        ));
        let u5 = QElement::generator_power(&s, 0, 5).unwrap();
        assert!(u.commutator(&u5).is_zero());
    }

    #[test]
    fn heisenberg_commutator_with_w() {
        let (mu, nu) = (0.11, 0.07);
        let s = Arc::new(QAlgebraSpec::heisenberg(mu, nu, 1.0));
        let w = QElement::generator(&s, 2).unwrap();
        for m in -3..=3 {
            for n in -3..=3 {
                let x = QElement::monomial(&s, vec![m, n, 0], c64(1.0, 0.0)).unwrap();
                let c = w.commutator(&x);
                let want =
                    Complex64::from_polar(1.0, 4.0 * PI * (m as f64 * mu + n as f64 * nu)) - 1.0;
                assert!(close(c.coefficient(&[m, n, 1]), want), "m={m} n={n}");
            }
        }
    }

    #[test]
    fn commutator_with_u_matches_closed_form() {
        let th = 0.37;
        let s = torus(th);
        let u = QElement::generator(&s, 0).unwrap();
        for k in -6..=6 {
            for l in -6..=6 {
                let x = QElement::monomial(&s, vec![k, l], c64(1.0, 0.0)).unwrap();
                let c = u.commutator(&x);
                let want = c64(1.0, 0.0) - Complex64::from_polar(1.0, -(l as f64) * th);
                assert!((c.coefficient(&[k + 1, l]) - want).norm() < 1e-12);
                // same thing through the gauge action
                let via_gauge = u.mul(&x.sub(&x.theta_hat(0.0, th).unwrap()));
                assert!(c.approx_eq(&via_gauge, 1e-12));
            }
        }
    }

    #[test]
    fn theta_hat_examples() {
        let s = torus(0.5);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a = random_element(&s, &mut rng, 6, 3);
        assert_eq!(a.theta_hat(0.0, 0.0).unwrap(), a);
        let u = QElement::generator(&s, 0).unwrap();
        let img = u.theta_hat(0.3, 1.1).unwrap();
        assert!(close(
            img.coefficient(&[1, 0]),
            Complex64::from_polar(1.0, -0.3)
        ));
        for _ in 0..20 {
            let a = random_element(&s, &mut rng, 6, 3);
            let lhs = a.theta_hat(0.2, -0.4).unwrap().theta_hat(1.3, 0.9).unwrap();
            let rhs = a.theta_hat(1.5, 0.5).unwrap();
            assert!(lhs.approx_eq(&rhs, 1e-12));
        }
        let h = Arc::new(QAlgebraSpec::heisenberg(0.1, 0.1, 1.0));
        assert_eq!(
            QElement::one(&h).theta_hat(0.0, 0.0).unwrap_err(),
            QError::WrongGeneratorCount {
                expected: 2,
                found: 3
            }
        );
    }

    #[test]
    fn theta_hat_is_automorphism() {
        let s = torus(1.3);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..30 {
            let a = random_element(&s, &mut rng, 5, 3);
            let b = random_element(&s, &mut rng, 5, 3);
            let lhs = a.mul(&b).theta_hat(0.7, -2.1).unwrap();
            let rhs = a
                .theta_hat(0.7, -2.1)
                .unwrap()
                .mul(&b.theta_hat(0.7, -2.1).unwrap());
            assert!(lhs.approx_eq(&rhs, 1e-12));
        }
    }

    #[test]
    fn trace_and_inner_product() {
        let s = torus(0.8);
        assert_eq!(QElement::one(&s).tau(), c64(1.0, 0.0));
        let x = QElement::monomial(&s, vec![2, -1], c64(1.0, 0.0)).unwrap();
        assert_eq!(x.tau(), c64(0.0, 0.0));
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let a = random_element(&s, &mut rng, 6, 3);
            let b = random_element(&s, &mut rng, 6, 3);
            assert!(close(a.mul(&b).tau(), b.mul(&a).tau()));
        }
    }

    #[test]
    fn clock_shift_q2() {
        let s = torus(PI);
        let rep = ClockShift::for_spec(&s).unwrap();
        assert_eq!(rep.dimension(), 2);
        let u = QElement::generator(&s, 0)
            .unwrap()
            .clock_shift_rep()
            .unwrap();
        let v = QElement::generator(&s, 1)
            .unwrap()
            .clock_shift_rep()
            .unwrap();
        assert!(u.approx_eq(
            &MatElement::diagonal(&[c64(1.0, 0.0), c64(-1.0, 0.0)]),
            1e-15
        ));
        let mut perm = MatElement::zeros(2);
        perm.set(0, 1, c64(1.0, 0.0));
        perm.set(1, 0, c64(1.0, 0.0));
        assert!(v.approx_eq(&perm, 1e-15));
        assert!(u.mul(&v).approx_eq(&v.mul(&u).scale(c64(-1.0, 0.0)), 1e-15));
        assert!(QElement::one(&s)
            .clock_shift_rep()
            .unwrap()
            .approx_eq(&MatElement::identity(2), 0.0));
    }

    #[test]
    fn clock_shift_rejects_irrational() {
        let s = torus(1.0);
        assert!(matches!(
            QElement::one(&s).clock_shift_rep(),
            Err(QError::IrrationalAngle(_))
        ));
    }

    #[test]
    fn rational_detection() {
        assert_eq!(rational_approx(3.0 / 7.0, 4096, 1e-9), Some((3, 7)));
        assert_eq!(rational_approx(0.5, 4096, 1e-9), Some((1, 2)));
        assert_eq!(rational_approx(0.0, 4096, 1e-9), Some((0, 1)));
        assert_eq!(rational_approx(1.0 / (2.0 * PI), 4096, 1e-9), None);
    }

    #[test]
    fn spec_json_round_trip() {
        let s = QAlgebraSpec::heisenberg(0.1, 0.2, 0.5);
        let text = serde_json::to_string(&s).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["generators"], 3);
        assert!(v["theta_matrix"].is_array());
        let back: QAlgebraSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(back, s);
        let bad = r#"{"generators":2,"theta_matrix":[[0,1],[1,0]],"label":"x"}"#;
        assert!(serde_json::from_str::<QAlgebraSpec>(bad).is_err());
    }

    #[test]
    fn element_json_round_trip() {
        let s = torus(0.3);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = random_element(&s, &mut rng, 8, 4);
        let json = serde_json::to_string(&a.to_json_terms()).unwrap();
        let terms: Vec<TermJson> = serde_json::from_str(&json).unwrap();
        assert_eq!(QElement::from_json_terms(&s, &terms).unwrap(), a);
    }

    #[test]
    fn pruning_drops_tiny_coefficients() {
        let s = torus(0.3);
        let x = QElement::scalar(&s, c64(1e-13, 0.0));
        assert!(x.is_zero());
        let loose = Arc::new(QAlgebraSpec::torus2(0.3).with_prune_epsilon(1e-3));
        assert!(QElement::scalar(&loose, c64(1e-4, 0.0)).is_zero());
    }

    #[test]
    fn spec_mismatch_is_an_error() {
        let a = QElement::one(&torus(0.3));
        let b = QElement::one(&torus(0.4));
        assert!(matches!(a.try_mul(&b), Err(QError::SpecMismatch { .. })));
    }

    #[test]
    fn negative_powers() {
        let s = torus(0.6);
        let x = QElement::monomial(&s, vec![1, 2], c64(2.0, 0.0)).unwrap();
        let inv = x.pow(-1).unwrap();
        assert_eq!(x.mul(&inv), QElement::one(&s));
        let y = x.add(&QElement::one(&s));
        assert!(y.pow(-1).is_none());
        assert_eq!(y.pow(2).unwrap(), y.mul(&y));
    }

    #[test]
    fn weyl_commutation_phase() {
        let hbar = 0.3;
        let plane = WeylPlane::new(1, hbar, 1.0);
        for (k, t) in [((1, 0), (0, 1)), ((2, -1), (1, 3)), ((1, 1), (2, 2))] {
            let wk = plane.weyl(&[k.0], &[k.1]);
            let wt = plane.weyl(&[t.0], &[t.1]);
            let phase = Complex64::from_polar(1.0, hbar * (k.0 * t.1 - k.1 * t.0) as f64);
            assert!(wk.mul(&wt).approx_eq(&wt.mul(&wk).scale(phase), 1e-12));
            // W(k)W(t) = W(k+t) e^{iħ(k1t2-k2t1)/2}
            let sum = plane.weyl(&[k.0 + t.0], &[k.1 + t.1]);
            let half = Complex64::from_polar(1.0, hbar * (k.0 * t.1 - k.1 * t.0) as f64 / 2.0);
            assert!(wk.mul(&wt).approx_eq(&sum.scale(half), 1e-12));
        }
    }
}
