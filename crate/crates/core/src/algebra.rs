//! The carrier interface shared by every algebra the calculus runs on.
//!
//! Quantum-torus style lattices, dense matrices and Cuntz–Krieger graph
//! algebras all implement [`Algebra`]. The forms, Laplacian and semigroup code
//! is written once against this trait.

use std::fmt;

use num_complex::Complex64;

/// A complex *-algebra element that carries its own context (spec, dimension
/// or graph), so `zero_like`/`one_like` need no extra arguments.
///
/// Binary operations assume [`Algebra::same_carrier`] holds and panic
/// otherwise; callers that accept user input check compatibility first.
pub trait Algebra: Clone + fmt::Debug {
    fn zero_like(&self) -> Self;
    fn one_like(&self) -> Self;
    fn add(&self, other: &Self) -> Self;
    fn scale(&self, c: Complex64) -> Self;
    fn mul(&self, other: &Self) -> Self;
    fn adjoint(&self) -> Self;
    fn same_carrier(&self, other: &Self) -> bool;

    /// Largest coefficientwise (or entrywise) modulus of `self - other`.
    fn max_abs_diff(&self, other: &Self) -> f64;

    /// Tracial state, when the carrier has one.
    fn trace_state(&self) -> Option<Complex64> {
        None
    }

    /// JSON rendering of the element in its carrier's published format.
    fn to_json(&self) -> serde_json::Value;

    fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    fn commutator(&self, other: &Self) -> Self {
        self.mul(other).sub(&other.mul(self))
    }

    fn norm_max(&self) -> f64 {
        self.max_abs_diff(&self.zero_like())
    }

    fn is_zero_within(&self, tol: f64) -> bool {
        self.norm_max() <= tol
    }

    fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.max_abs_diff(other) <= tol
    }
}

pub fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}
