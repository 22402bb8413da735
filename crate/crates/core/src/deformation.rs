//! Classical limits of inner derivations as the deformation parameter goes
//! to zero, and the three derivations of the quantum Heisenberg algebra.
//!
//! Each sweep evaluates a scaled commutator `(1/ε)[G, f]` in the deformed
//! algebra and compares it coefficientwise with `Σ λ_m a_m · (m·G)`, where
//! `λ_m` is the classical factor of the monomial `m` (e.g. `i·m` for
//! `(e^{imθ} − 1)/θ`). The error is first order in `ε`.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::{c64, Algebra};
use crate::forms::{BasisMode, DifferentialBasis, DifferentialForm, FormError, FormIndex};
use crate::qlattice::{QAlgebraSpec, QElement, QError, WeylPlane};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DeformationError {
    #[error("parameter list is empty")]
    EmptyParameters,
    #[error("parameters must be positive and strictly decreasing")]
    BadParameters,
    #[error("exponent vector has length {found}, expected {expected}")]
    ExponentLength { expected: usize, found: usize },
    #[error("derivation series truncation must be at least 1 when W appears")]
    TruncationTooSmall,
    #[error("element does not live over a three-generator Heisenberg spec")]
    WrongSpec,
    #[error(transparent)]
    Form(#[from] FormError),
    #[error(transparent)]
    Lattice(#[from] QError),
}

/// Errors of a scaled commutator against its classical limit over a
/// decreasing parameter sequence.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeformationSweep {
    pub parameters: Vec<f64>,
    pub errors: Vec<f64>,
    /// Least-squares slope of `log error` against `log parameter`; `None`
    /// when fewer than two errors are positive.
    pub fitted_order: Option<f64>,
    pub target_description: String,
}

impl DeformationSweep {
    fn new(parameters: Vec<f64>, errors: Vec<f64>, target_description: String) -> Self {
        let fitted_order = fit_order(&parameters, &errors);
        Self {
            parameters,
            errors,
            fitted_order,
            target_description,
        }
    }

    /// `error[last] / error[last − 1]`, which is about `1/2` for first-order
    /// convergence on a halving sequence.
    pub fn halving_ratio(&self) -> Option<f64> {
        let n = self.errors.len();
        if n < 2 || self.errors[n - 2] == 0.0 {
            return None;
        }
        Some(self.errors[n - 1] / self.errors[n - 2])
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("parameter,error\n");
        for (p, e) in self.parameters.iter().zip(&self.errors) {
            out.push_str(&format!("{p:e},{e:e}\n"));
        }
        out
    }

    pub fn summary_json(&self) -> serde_json::Value {
        serde_json::json!({
            "fitted_order": self.fitted_order,
            "halving_ratio": self.halving_ratio(),
            "target_description": self.target_description,
        })
    }
}

/// Least-squares slope in log-log coordinates over the positive errors.
pub fn fit_order(parameters: &[f64], errors: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = parameters
        .iter()
        .zip(errors)
        .filter(|(_, &e)| e > 0.0 && e.is_finite())
        .map(|(&p, &e)| (p.ln(), e.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

fn check_parameters(params: &[f64]) -> Result<(), DeformationError> {
    if params.is_empty() {
        return Err(DeformationError::EmptyParameters);
    }
    if params.iter().any(|&p| !p.is_finite() || p <= 0.0) || params.windows(2).any(|w| w[1] >= w[0])
    {
        return Err(DeformationError::BadParameters);
    }
    Ok(())
}

/// `ε, ε/2, ε/4, …` with `count` entries.
pub fn halving_sequence(start: f64, count: usize) -> Vec<f64> {
    (0..count).map(|i| start / 2f64.powi(i as i32)).collect()
}

/// The 2n-torus limit. `f` is a table of monomials in the position
/// generators `U_2, U_4, …, U_{2n}` (one exponent per pair). For each `θ`
/// the unstarred derivative with basis `θ^{-1}U_{2j-1}` is compared with
/// `Σ_j i·m_j·a_m · (U^m U_{2j-1})`.
pub fn torus_limit_sweep(
    pairs: usize,
    f: &[(Vec<i64>, Complex64)],
    thetas: &[f64],
) -> Result<DeformationSweep, DeformationError> {
    check_parameters(thetas)?;
    let mut errors = Vec::with_capacity(thetas.len());
    for &theta in thetas {
        let spec = Arc::new(QAlgebraSpec::torus_blocks(&vec![theta; pairs]));
        let mut x = QElement::zero(&spec);
        for (m, a) in f {
            if m.len() != pairs {
                return Err(DeformationError::ExponentLength {
                    expected: pairs,
                    found: m.len(),
                });
            }
            let mut e = vec![0; 2 * pairs];
            for j in 0..pairs {
                e[2 * j + 1] = m[j];
            }
            x = x.add(&QElement::monomial(&spec, e, *a)?);
        }
        let gens: Vec<QElement> = (0..pairs)
            .map(|j| QElement::generator(&spec, 2 * j))
            .collect::<Result<_, _>>()?;
        let basis = Arc::new(DifferentialBasis::with_prefactors(
            gens.clone(),
            vec![c64(1.0 / theta, 0.0); pairs],
            BasisMode::Complex,
            "theta^-1 U_odd",
        )?);
        let d = DifferentialForm::scalar(&basis, x.clone())?.partial()?;
        let mut err: f64 = 0.0;
        for (j, g) in gens.iter().enumerate() {
            let mut target = QElement::zero(&spec);
            for (mono, a) in x.terms() {
                let m = mono.exponents()[2 * j + 1] as f64;
                let term = QElement::monomial(&spec, mono.exponents().to_vec(), *a)?;
                target = target.add(&term.mul(g).scale(c64(0.0, m)));
            }
            err = err.max(
                d.coefficient(FormIndex::unstarred_slot(j))
                    .max_abs_diff(&target),
            );
        }
        errors.push(err);
    }
    Ok(DeformationSweep::new(
        thetas.to_vec(),
        errors,
        "i*m_j * a_m on U^m U_{2j-1} (classical d/dU_{2j})".into(),
    ))
}

/// Weyl-plane limit `(1/ħ)[W(k), f]` against
/// `Σ_t i·s²(k_1t_2 − k_2t_1)·f̂(t) · W(t)W(k)`, with `s` the lattice step.
pub fn plane_limit_sweep(
    k: (i64, i64),
    f: &[((i64, i64), Complex64)],
    hbars: &[f64],
    step: f64,
) -> Result<DeformationSweep, DeformationError> {
    check_parameters(hbars)?;
    let mut errors = Vec::with_capacity(hbars.len());
    for &hbar in hbars {
        let plane = WeylPlane::new(1, hbar, step);
        let g = plane.weyl(&[k.0], &[k.1]);
        let mut x = QElement::zero(plane.spec());
        let mut target = QElement::zero(plane.spec());
        for &((t1, t2), a) in f {
            let w = plane.weyl(&[t1], &[t2]).scale(a);
            let factor = step * step * (k.0 * t2 - k.1 * t1) as f64;
            target = target.add(&w.mul(&g).scale(c64(0.0, factor)));
            x = x.add(&w);
        }
        let actual = g.commutator(&x).scale(c64(1.0 / hbar, 0.0));
        errors.push(actual.max_abs_diff(&target));
    }
    Ok(DeformationSweep::new(
        hbars.to_vec(),
        errors,
        format!(
            "i(k1*t2 - k2*t1) * fhat(t) on W(t)W(k), k = ({}, {})",
            k.0, k.1
        ),
    ))
}

/// `∂ f(Q_1, …, Q_n)` with basis `ħ^{-1}e^{i·s·P_j}` against
/// `Σ_j i·s²·t_j·f̂(t) · W(0,t)·A_j`.
pub fn plane_position_sweep(
    pairs: usize,
    f: &[(Vec<i64>, Complex64)],
    hbars: &[f64],
    step: f64,
) -> Result<DeformationSweep, DeformationError> {
    check_parameters(hbars)?;
    let mut errors = Vec::with_capacity(hbars.len());
    for &hbar in hbars {
        let plane = WeylPlane::new(pairs, hbar, step);
        let zero = vec![0; pairs];
        let gens: Vec<QElement> = (0..pairs)
            .map(|j| {
                let mut p = zero.clone();
                p[j] = 1;
                plane.weyl(&p, &zero)
            })
            .collect();
        let basis = Arc::new(DifferentialBasis::with_prefactors(
            gens.clone(),
            vec![c64(1.0 / hbar, 0.0); pairs],
            BasisMode::Complex,
            "hbar^-1 e^{iP_j}",
        )?);
        let mut x = QElement::zero(plane.spec());
        for (t, a) in f {
            if t.len() != pairs {
                return Err(DeformationError::ExponentLength {
                    expected: pairs,
                    found: t.len(),
                });
            }
            x = x.add(&plane.weyl(&zero, t).scale(*a));
        }
        let d = DifferentialForm::scalar(&basis, x)?.partial()?;
        let mut err: f64 = 0.0;
        for (j, g) in gens.iter().enumerate() {
            let mut target = QElement::zero(plane.spec());
            for (t, a) in f {
                let w = plane.weyl(&zero, t).scale(*a);
                target = target.add(&w.mul(g).scale(c64(0.0, step * step * t[j] as f64)));
            }
            err = err.max(
                d.coefficient(FormIndex::unstarred_slot(j))
                    .max_abs_diff(&target),
            );
        }
        errors.push(err);
    }
    Ok(DeformationSweep::new(
        hbars.to_vec(),
        errors,
        "i*t_j * fhat(t) on e^{i t.Q} e^{iP_j} (classical d/dQ_j)".into(),
    ))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum HeisenbergDirection {
    U,
    V,
    W,
}

impl HeisenbergDirection {
    pub fn index(self) -> usize {
        match self {
            Self::U => 0,
            Self::V => 1,
            Self::W => 2,
        }
    }

    /// Classical factor of `U^mV^nW^k`.
    pub fn limit_factor(self, exps: [i64; 3], mu: f64, nu: f64) -> Complex64 {
        let [m, n, k] = exps.map(|e| e as f64);
        match self {
            Self::W => c64(0.0, 4.0 * PI * (m * mu + n * nu)),
            Self::U => c64(0.0, -4.0 * PI * k * mu),
            Self::V => c64(0.0, -4.0 * PI * k * nu),
        }
    }
}

/// `(1/ħ)[G, U^mV^nW^k]` against `λ · U^mV^nW^k · G` in the Heisenberg
/// algebra with angles `4πμħ`, `4πνħ`.
pub fn heisenberg_limit_sweep(
    direction: HeisenbergDirection,
    exps: [i64; 3],
    hbars: &[f64],
    mu: f64,
    nu: f64,
) -> Result<DeformationSweep, DeformationError> {
    check_parameters(hbars)?;
    let factor = direction.limit_factor(exps, mu, nu);
    let mut errors = Vec::with_capacity(hbars.len());
    for &hbar in hbars {
        let spec = Arc::new(QAlgebraSpec::heisenberg(mu, nu, hbar));
        let g = QElement::generator(&spec, direction.index())?;
        let x = QElement::monomial(&spec, exps.to_vec(), c64(1.0, 0.0))?;
        let actual = g.commutator(&x).scale(c64(1.0 / hbar, 0.0));
        let target = x.mul(&g).scale(factor);
        errors.push(actual.max_abs_diff(&target));
    }
    Ok(DeformationSweep::new(
        hbars.to_vec(),
        errors,
        format!(
            "{:?}-direction factor {} on U^mV^nW^k * {:?}",
            direction, factor, direction
        ),
    ))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeisenbergParams {
    pub mu: f64,
    pub nu: f64,
    pub c: f64,
    pub hbar: f64,
}

impl HeisenbergParams {
    pub fn spec(&self) -> QAlgebraSpec {
        QAlgebraSpec::heisenberg(self.mu, self.nu, self.hbar)
    }
}

/// Which series defines `D1(W)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum D1Variant {
    /// `Σ_{0<|l|≤K} c·l^{-1} V^l W`.
    PlainSeries,
    /// The plain series plus `−πic·W`, from the Fourier series of the
    /// fractional part.
    WithMeanTerm,
}

/// The derivations `D1, D2, D3`, extended from the generators by linearity
/// and the Leibniz rule.
#[derive(Clone, Debug)]
pub struct HeisenbergDerivations {
    spec: Arc<QAlgebraSpec>,
    c: f64,
    truncation: i64,
    variant: D1Variant,
}

impl HeisenbergDerivations {
    pub fn new(
        spec: &Arc<QAlgebraSpec>,
        c: f64,
        truncation: i64,
        variant: D1Variant,
    ) -> Result<Self, DeformationError> {
        if spec.generator_count() != 3 {
            return Err(DeformationError::WrongSpec);
        }
        Ok(Self {
            spec: Arc::clone(spec),
            c,
            truncation,
            variant,
        })
    }

    fn check(&self, x: &QElement) -> Result<(), DeformationError> {
        if !x.same_carrier(&QElement::zero(&self.spec)) {
            return Err(DeformationError::WrongSpec);
        }
        Ok(())
    }

    /// `D1(W)`.
    pub fn d1_w(&self) -> Result<QElement, DeformationError> {
        if self.truncation < 1 {
            return Err(DeformationError::TruncationTooSmall);
        }
        let mut out = QElement::zero(&self.spec);
        for l in (-self.truncation..=self.truncation).filter(|&l| l != 0) {
            out = out.add(&QElement::monomial(
                &self.spec,
                vec![0, l, 1],
                c64(self.c / l as f64, 0.0),
            )?);
        }
        if self.variant == D1Variant::WithMeanTerm {
            out = out.add(&QElement::monomial(
                &self.spec,
                vec![0, 0, 1],
                c64(0.0, -PI * self.c),
            )?);
        }
        Ok(out)
    }

    /// `D1(W^k)` by the Leibniz rule; negative powers use
    /// `D(W^{-1}) = −W^{-1} D(W) W^{-1}`.
    fn d1_w_power(&self, k: i64) -> Result<QElement, DeformationError> {
        if k == 0 {
            return Ok(QElement::zero(&self.spec));
        }
        let dw = self.d1_w()?;
        let w = |p: i64| QElement::generator_power(&self.spec, 2, p);
        let (base, sign) = if k > 0 {
            (dw, 1.0)
        } else {
            (w(-1)?.mul(&dw).mul(&w(-1)?), -1.0)
        };
        let step = if k > 0 { 1 } else { -1 };
        let mut out = QElement::zero(&self.spec);
        for i in 0..k.abs() {
            out = out.add(&w(step * i)?.mul(&base).mul(&w(step * (k.abs() - 1 - i))?));
        }
        Ok(out.scale(c64(sign, 0.0)))
    }

    pub fn d1(&self, x: &QElement) -> Result<QElement, DeformationError> {
        self.check(x)?;
        let mut out = QElement::zero(&self.spec);
        for (mono, a) in x.terms() {
            let e = mono.exponents();
            let uv = QElement::monomial(&self.spec, vec![e[0], e[1], 0], *a)?;
            let full = QElement::monomial(&self.spec, e.to_vec(), *a)?;
            out = out.add(&full.scale(c64(0.0, 2.0 * PI * e[0] as f64)));
            if e[2] != 0 {
                out = out.add(&uv.mul(&self.d1_w_power(e[2])?));
            }
        }
        Ok(out)
    }

    pub fn d2(&self, x: &QElement) -> Result<QElement, DeformationError> {
        self.check(x)?;
        self.diagonal(x, |e| c64(0.0, 2.0 * PI * e[1] as f64))
    }

    pub fn d3(&self, x: &QElement) -> Result<QElement, DeformationError> {
        self.check(x)?;
        let c = self.c;
        self.diagonal(x, |e| c64(0.0, 2.0 * PI * c * e[2] as f64))
    }

    fn diagonal<F: Fn(&[i64]) -> Complex64>(
        &self,
        x: &QElement,
        factor: F,
    ) -> Result<QElement, DeformationError> {
        let mut out = QElement::zero(&self.spec);
        for (mono, a) in x.terms() {
            let e = mono.exponents();
            out = out.add(&QElement::monomial(&self.spec, e.to_vec(), a * factor(e))?);
        }
        Ok(out)
    }

    /// `(D1 x, D2 x, D3 x)`.
    pub fn apply_all(
        &self,
        x: &QElement,
    ) -> Result<(QElement, QElement, QElement), DeformationError> {
        Ok((self.d1(x)?, self.d2(x)?, self.d3(x)?))
    }
}

/// `(D1x, D2x, D3x)` for the Heisenberg algebra of `params`.
pub fn heisenberg_derivations(
    x: &QElement,
    params: &HeisenbergParams,
    truncation: i64,
    variant: D1Variant,
) -> Result<(QElement, QElement, QElement), DeformationError> {
    HeisenbergDerivations::new(x.spec(), params.c, truncation, variant)?.apply_all(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn taylor(x: f64) -> f64 {
        // |e^{ix} − 1 − ix|
        (c64(0.0, x).exp() - c64(1.0, 0.0) - c64(0.0, x)).norm()
    }

    #[test]
    fn torus_single_generator() {
        let sweep = torus_limit_sweep(1, &[(vec![1], c64(1.0, 0.0))], &[0.01]).unwrap();
        assert!((sweep.errors[0] - taylor(0.01) / 0.01).abs() < 1e-12);
        assert!((sweep.errors[0] - 0.005).abs() < 1e-4);
        let constant = torus_limit_sweep(1, &[(vec![0], c64(2.0, 0.0))], &[0.1, 0.05]).unwrap();
        assert!(constant.errors.iter().all(|&e| e == 0.0));
        assert_eq!(constant.fitted_order, None);
    }

    #[test]
    fn torus_first_order() {
        for m in 1..=5 {
            let s = torus_limit_sweep(1, &[(vec![m], c64(1.0, 0.0))], &[2e-3, 1e-3]).unwrap();
            let r = s.halving_ratio().unwrap();
            assert!((0.45..=0.55).contains(&r), "m={m} ratio={r}");
        }
        let two = torus_limit_sweep(
            2,
            &[(vec![1, 2], c64(0.5, 0.5)), (vec![-3, 0], c64(1.0, 0.0))],
            &halving_sequence(1e-2, 4),
        )
        .unwrap();
        assert!((two.fitted_order.unwrap() - 1.0).abs() < 0.1);
    }

    #[test]
    fn plane_examples() {
        let s = plane_limit_sweep((1, 0), &[((0, 1), c64(1.0, 0.0))], &[0.01], 1.0).unwrap();
        assert!((s.errors[0] - taylor(0.01) / 0.01).abs() < 1e-12);
        let parallel =
            plane_limit_sweep((1, 2), &[((2, 4), c64(1.0, 0.0))], &[0.1, 0.05], 1.0).unwrap();
        assert!(parallel.errors.iter().all(|&e| e < 1e-14));
        let fit = plane_limit_sweep(
            (1, -1),
            &[((2, 1), c64(1.0, 0.0)), ((0, 3), c64(0.0, 1.0))],
            &[1e-2, 5e-3, 2.5e-3],
            1.0,
        )
        .unwrap();
        assert!((fit.fitted_order.unwrap() - 1.0).abs() < 0.1);
        let pos = plane_position_sweep(
            2,
            &[(vec![1, 2], c64(1.0, 0.0))],
            &halving_sequence(1e-2, 4),
            1.0,
        )
        .unwrap();
        assert!((pos.fitted_order.unwrap() - 1.0).abs() < 0.1);
    }

    #[test]
    fn heisenberg_sweeps() {
        let h = 1e-3;
        let s = heisenberg_limit_sweep(HeisenbergDirection::W, [1, 0, 0], &[h], 0.1, 0.0).unwrap();
        let x = 4.0 * PI * 0.1;
        assert!((s.errors[0] - taylor(x * h) / h).abs() < 1e-9);
        assert!((s.errors[0] - h * x * x / 2.0).abs() < 1e-6);
        let zero =
            heisenberg_limit_sweep(HeisenbergDirection::U, [0, 0, 0], &[0.1, 0.05], 0.1, 0.2)
                .unwrap();
        assert!(zero.errors.iter().all(|&e| e == 0.0));
        for d in [
            HeisenbergDirection::U,
            HeisenbergDirection::V,
            HeisenbergDirection::W,
        ] {
            let s = heisenberg_limit_sweep(d, [2, 1, 3], &halving_sequence(1e-2, 4), 0.11, 0.07)
                .unwrap();
            assert!((s.fitted_order.unwrap() - 1.0).abs() < 0.1, "{d:?}");
        }
    }

    #[test]
    fn parameter_validation() {
        assert_eq!(
            torus_limit_sweep(1, &[], &[]).unwrap_err(),
            DeformationError::EmptyParameters
        );
        assert_eq!(
            heisenberg_limit_sweep(HeisenbergDirection::U, [0, 0, 1], &[0.1, 0.2], 0.1, 0.1)
                .unwrap_err(),
            DeformationError::BadParameters
        );
    }

    #[test]
    fn derivations_on_generators() {
        let params = HeisenbergParams {
            mu: 0.11,
            nu: 0.07,
            c: 1.0,
            hbar: 1.0,
        };
        let spec = Arc::new(params.spec());
        let d = HeisenbergDerivations::new(&spec, params.c, 3, D1Variant::PlainSeries).unwrap();
        let g = |i| QElement::generator(&spec, i).unwrap();
        let two_pi_i = c64(0.0, 2.0 * PI);
        assert!(d.d1(&g(0)).unwrap().approx_eq(&g(0).scale(two_pi_i), 0.0));
        assert!(d.d1(&g(1)).unwrap().is_zero());
        assert!(d.d1(&g(2)).unwrap().approx_eq(&d.d1_w().unwrap(), 1e-15));
        assert_eq!(d.d1_w().unwrap().terms().len(), 6);
        assert!(d.d2(&g(0)).unwrap().is_zero());
        assert!(d.d2(&g(1)).unwrap().approx_eq(&g(1).scale(two_pi_i), 0.0));
        assert!(d.d2(&g(2)).unwrap().is_zero());
        assert!(d.d3(&g(0)).unwrap().is_zero());
        assert!(d.d3(&g(1)).unwrap().is_zero());
        assert!(d
            .d3(&g(2))
            .unwrap()
            .approx_eq(&g(2).scale(two_pi_i * params.c), 0.0));
        let uv = QElement::monomial(&spec, vec![3, -2, 0], c64(1.0, 0.0)).unwrap();
        assert!(d.d3(&uv).unwrap().is_zero());

        let mean = HeisenbergDerivations::new(&spec, 1.0, 3, D1Variant::WithMeanTerm).unwrap();
        assert_eq!(mean.d1_w().unwrap().coefficient(&[0, 0, 1]), c64(0.0, -PI));
        assert_eq!(
            HeisenbergDerivations::new(&spec, 1.0, 0, D1Variant::PlainSeries)
                .unwrap()
                .d1(&g(2))
                .unwrap_err(),
            DeformationError::TruncationTooSmall
        );
    }

    #[test]
    fn brackets_with_d3_vanish() {
        let spec = Arc::new(QAlgebraSpec::heisenberg(0.11, 0.07, 1.0));
        let d = HeisenbergDerivations::new(&spec, 1.0, 2, D1Variant::PlainSeries).unwrap();
        for m in -2..=2 {
            for n in -2..=2 {
                for k in -2..=2 {
                    let x = QElement::monomial(&spec, vec![m, n, k], c64(1.0, 0.0)).unwrap();
                    let b13 = d
                        .d1(&d.d3(&x).unwrap())
                        .unwrap()
                        .sub(&d.d3(&d.d1(&x).unwrap()).unwrap());
                    let b23 = d
                        .d2(&d.d3(&x).unwrap())
                        .unwrap()
                        .sub(&d.d3(&d.d2(&x).unwrap()).unwrap());
                    assert!(b13.norm_max() <= 1e-12, "{}", b13.norm_max());
                    assert!(b23.norm_max() <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn d1_is_leibniz() {
        let spec = Arc::new(QAlgebraSpec::heisenberg(0.11, 0.07, 1.0));
        let d = HeisenbergDerivations::new(&spec, 1.0, 2, D1Variant::WithMeanTerm).unwrap();
        let x = QElement::monomial(&spec, vec![1, 1, 2], c64(1.0, 0.0)).unwrap();
        let y = QElement::monomial(&spec, vec![-1, 0, -1], c64(0.5, 0.0)).unwrap();
        let lhs = d.d1(&x.mul(&y)).unwrap();
        let rhs = d.d1(&x).unwrap().mul(&y).add(&x.mul(&d.d1(&y).unwrap()));
        assert!(lhs.approx_eq(&rhs, 1e-10));
    }
}
