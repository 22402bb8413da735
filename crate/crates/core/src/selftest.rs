//! Invariant checks shared by the `selftest` command and the acceptance
//! suite. Each criterion returns a report made of named numeric checks.

use std::error::Error;
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::algebra::{c64, Algebra};
use crate::cohomology::{
    c00_membership, de_rham_dims, fuglede_putnam_check, CohomologyOptions, MatrixUnits,
};
use crate::deformation::{
    halving_sequence, heisenberg_limit_sweep, plane_limit_sweep, torus_limit_sweep, D1Variant,
    DeformationSweep, HeisenbergDerivations, HeisenbergDirection,
};
use crate::dirichlet::{
    audit_semigroup, carre_du_champ, dirichlet_form, gradient_pairing, trotter_check,
};
use crate::forms::{
    random_form, random_homogeneous_form, BasisMode, DifferentialBasis, DifferentialForm,
};
use crate::graph_algebra::{
    full_isometry_criterion, h0_report, random_graph_element, verify_full_isometry,
    vertex_commutator, CkTerm, DirectedGraph, GraphElement, Path,
};
use crate::matrix_algebra::{projection_basis, random_matrix, random_normal, MatElement};
use crate::qlattice::{random_element, ClockShift, QAlgebraSpec, QElement};

type Fallible<T> = Result<T, Box<dyn Error>>;

/// Built-in graph corpus, `(name, text)`.
pub const GRAPH_CORPUS: &[(&str, &str)] = &[
    ("star5", include_str!("../data/graphs/star5.txt")),
    ("tree5", include_str!("../data/graphs/tree5.txt")),
    ("line3", include_str!("../data/graphs/line3.txt")),
    ("line5", include_str!("../data/graphs/line5.txt")),
    ("loop1", include_str!("../data/graphs/loop1.txt")),
    ("loop_exit", include_str!("../data/graphs/loop_exit.txt")),
    ("cycle2", include_str!("../data/graphs/cycle2.txt")),
];

pub fn corpus_graph(name: &str) -> Option<Arc<DirectedGraph>> {
    GRAPH_CORPUS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| Arc::new(DirectedGraph::parse(text).expect("corpus graphs parse")))
}

/// Thresholds used by the checks.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// Algebraic identities on random inputs.
    pub residual: f64,
    /// Orthonormality and derivation brackets.
    pub exact: f64,
    /// Semigroup conservativity `Φ_t(1) = 1`.
    pub conservativity: f64,
    pub trotter: f64,
    /// Allowed `|fitted order − 1|`.
    pub order_band: f64,
    pub halving_low: f64,
    pub halving_high: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            residual: 1e-10,
            exact: 1e-12,
            conservativity: 0.0,
            trotter: 1e-6,
            order_band: 0.1,
            halving_low: 0.45,
            halving_high: 0.55,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SelftestConfig {
    pub seed: u64,
    /// Exponent bound for random lattice elements.
    pub truncation: i64,
    pub tolerances: Tolerances,
}

impl Default for SelftestConfig {
    fn default() -> Self {
        Self {
            seed: 20240601,
            truncation: 6,
            tolerances: Tolerances::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    /// Human-readable acceptance band, e.g. `<= 1e-10`.
    pub band: String,
}

impl Check {
    pub fn at_most(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            passed: value <= limit,
            value,
            band: format!("<= {limit:e}"),
        }
    }

    pub fn at_least(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            passed: value >= limit,
            value,
            band: format!(">= {limit:e}"),
        }
    }

    pub fn within(name: impl Into<String>, value: f64, lo: f64, hi: f64) -> Self {
        Self {
            name: name.into(),
            passed: (lo..=hi).contains(&value),
            value,
            band: format!("in [{lo}, {hi}]"),
        }
    }

    /// Count of mismatches, which must be zero.
    pub fn exact_count(name: impl Into<String>, mismatches: usize) -> Self {
        Self {
            name: name.into(),
            passed: mismatches == 0,
            value: mismatches as f64,
            band: "== 0 mismatches".into(),
        }
    }

    fn failed(name: &str, err: &dyn Error) -> Self {
        Self {
            name: format!("{name}: {err}"),
            passed: false,
            value: f64::NAN,
            band: "no error".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriterionReport {
    pub id: usize,
    pub title: String,
    pub checks: Vec<Check>,
}

impl CriterionReport {
    pub fn passed(&self) -> bool {
        !self.checks.is_empty() && self.checks.iter().all(|c| c.passed)
    }
}

impl fmt::Display for CriterionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.passed() { "PASS" } else { "FAIL" };
        write!(f, "{status} [{:>2}] {}", self.id, self.title)?;
        let worst = self.checks.iter().find(|c| !c.passed);
        match worst {
            Some(c) => write!(f, " :: {} = {:e} (want {})", c.name, c.value, c.band),
            None => write!(f, " ({} checks)", self.checks.len()),
        }
    }
}

fn report(id: usize, title: &str, run: impl FnOnce() -> Fallible<Vec<Check>>) -> CriterionReport {
    let checks = run().unwrap_or_else(|e| vec![Check::failed(title, e.as_ref())]);
    CriterionReport {
        id,
        title: title.to_string(),
        checks,
    }
}

fn rng_for(config: &SelftestConfig, id: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(config.seed ^ (id << 32))
}

fn projection_diff_basis(
    n: usize,
    mode: BasisMode,
) -> Fallible<Arc<DifferentialBasis<MatElement>>> {
    Ok(Arc::new(DifferentialBasis::new(
        projection_basis(n)?,
        mode,
        &format!("p(M_{n})"),
    )?))
}

fn lattice_basis(
    spec: &Arc<QAlgebraSpec>,
    gens: &[usize],
) -> Fallible<Arc<DifferentialBasis<QElement>>> {
    let els = gens
        .iter()
        .map(|&g| QElement::generator(spec, g))
        .collect::<Result<Vec<_>, _>>()?;
    let label = gens
        .iter()
        .map(|&g| spec.names()[g].as_str())
        .collect::<Vec<_>>()
        .join(",");
    Ok(Arc::new(DifferentialBasis::new(
        els,
        BasisMode::Complex,
        &label,
    )?))
}

fn vertex_basis(g: &Arc<DirectedGraph>) -> Fallible<Arc<DifferentialBasis<GraphElement>>> {
    let ps = (0..g.vertex_count())
        .map(|v| GraphElement::projection(g, v))
        .collect();
    Ok(Arc::new(DifferentialBasis::new(
        ps,
        BasisMode::SelfAdjoint,
        "p_v",
    )?))
}

fn torus(theta: f64) -> Arc<QAlgebraSpec> {
    Arc::new(QAlgebraSpec::torus2(theta))
}

fn heisenberg() -> Arc<QAlgebraSpec> {
    Arc::new(QAlgebraSpec::heisenberg(0.11, 0.07, 1.0))
}

fn max_delta_squared<A, R, F>(
    basis: &Arc<DifferentialBasis<A>>,
    rng: &mut R,
    count: usize,
    coeff: F,
) -> f64
where
    A: Algebra,
    R: Rng,
    F: FnMut(&mut R) -> A + Clone,
{
    (0..count)
        .map(|_| {
            random_form(basis, rng, 4, 2, coeff.clone())
                .delta()
                .delta()
                .norm_max()
        })
        .fold(0.0, f64::max)
}

/// `δ² = 0` on every carrier.
pub fn delta_squared(config: &SelftestConfig) -> CriterionReport {
    report(1, "delta squared vanishes on all carriers", || {
        let tol = config.tolerances.residual;
        let k = config.truncation;
        let mut rng = rng_for(config, 1);
        let mut checks = Vec::new();

        let m4 = projection_diff_basis(4, BasisMode::SelfAdjoint)?;
        let r = max_delta_squared(&m4, &mut rng, 200, |r: &mut ChaCha8Rng| random_matrix(4, r));
        checks.push(Check::at_most("M_4 p-basis", r, tol));

        let t = torus(0.7);
        let tb = lattice_basis(&t, &[0])?;
        let r = max_delta_squared(&tb, &mut rng, 200, |r: &mut ChaCha8Rng| {
            random_element(&t, r, 4, k)
        });
        checks.push(Check::at_most("torus theta=0.7 basis {U}", r, tol));

        let h = heisenberg();
        let hb = lattice_basis(&h, &[2])?;
        let r = max_delta_squared(&hb, &mut rng, 200, |r: &mut ChaCha8Rng| {
            random_element(&h, r, 4, k)
        });
        checks.push(Check::at_most("Heisenberg basis {W}", r, tol));

        for name in ["tree5", "loop1", "cycle2"] {
            let g = corpus_graph(name).expect("corpus");
            let gb = vertex_basis(&g)?;
            let gg = g.clone();
            let r = max_delta_squared(&gb, &mut rng, 200, move |r: &mut ChaCha8Rng| {
                random_graph_element(&gg, r, 4, 3)
            });
            checks.push(Check::at_most(format!("graph {name} basis p_v"), r, tol));
        }
        Ok(checks)
    })
}

fn leibniz_and_splitting<A, R, F>(
    label: &str,
    basis: &Arc<DifferentialBasis<A>>,
    rng: &mut R,
    count: usize,
    tol: f64,
    coeff: F,
) -> Fallible<Vec<Check>>
where
    A: Algebra,
    R: Rng,
    F: FnMut(&mut R) -> A + Clone,
{
    let (mut leib, mut dd, mut ss, mut mixed) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for _ in 0..count {
        let r = rng.gen_range(0..=2);
        let w = random_homogeneous_form(basis, rng, 3, r, coeff.clone());
        let e = random_form(basis, rng, 3, 2, coeff.clone());
        let lhs = w.wedge(&e)?.delta();
        let sign = if r % 2 == 0 { 1.0 } else { -1.0 };
        let rhs = w
            .delta()
            .wedge(&e)?
            .try_add(&w.wedge(&e.delta())?.scale(c64(sign, 0.0)))?;
        leib = leib.max(lhs.max_abs_diff(&rhs));

        let f = random_form(basis, rng, 4, 2, coeff.clone());
        dd = dd.max(f.partial()?.partial()?.norm_max());
        ss = ss.max(f.partial_star()?.partial_star()?.norm_max());
        let anti = f
            .partial()?
            .partial_star()?
            .try_add(&f.partial_star()?.partial()?)?;
        mixed = mixed.max(anti.norm_max());
    }
    Ok(vec![
        Check::at_most(format!("{label}: graded Leibniz"), leib, tol),
        Check::at_most(format!("{label}: partial^2"), dd, tol),
        Check::at_most(format!("{label}: partial_star^2"), ss, tol),
        Check::at_most(format!("{label}: anticommutator"), mixed, tol),
    ])
}

/// Graded Leibniz rule and the vanishing of `∂²`, `∂*²`, `∂∂* + ∂*∂`.
pub fn leibniz_and_partials(config: &SelftestConfig) -> CriterionReport {
    report(
        2,
        "graded Leibniz rule and partial-derivative identities",
        || {
            let tol = config.tolerances.residual;
            let k = config.truncation;
            let mut rng = rng_for(config, 2);
            let mut checks = Vec::new();

            let t = torus(0.7);
            let tb = lattice_basis(&t, &[0])?;
            checks.extend(leibniz_and_splitting(
                "torus {U}",
                &tb,
                &mut rng,
                200,
                tol,
                |r: &mut ChaCha8Rng| random_element(&t, r, 3, k),
            )?);

            let t4 = Arc::new(QAlgebraSpec::torus_blocks(&[0.4, 0.9]));
            let t4b = lattice_basis(&t4, &[0, 2])?;
            checks.extend(leibniz_and_splitting(
                "4-torus {U1,U3}",
                &t4b,
                &mut rng,
                200,
                tol,
                |r: &mut ChaCha8Rng| random_element(&t4, r, 3, 3),
            )?);

            let h = heisenberg();
            let hb = lattice_basis(&h, &[2])?;
            checks.extend(leibniz_and_splitting(
                "Heisenberg {W}",
                &hb,
                &mut rng,
                200,
                tol,
                |r: &mut ChaCha8Rng| random_element(&h, r, 3, k),
            )?);

            let cs = ClockShift::new(2.0 * PI / 3.0)?;
            let clock = cs.clock().clone();
            let mb = Arc::new(DifferentialBasis::new(
                vec![clock.clone(), clock.power(2)],
                BasisMode::Complex,
                "clock(M_3)",
            )?);
            checks.extend(leibniz_and_splitting(
                "M_3 clock basis",
                &mb,
                &mut rng,
                200,
                tol,
                |r: &mut ChaCha8Rng| random_matrix(3, r),
            )?);
            Ok(checks)
        },
    )
}

/// Carré du champ against the explicit sum of gradient products.
pub fn carre_du_champ_identity(config: &SelftestConfig) -> CriterionReport {
    report(3, "carre du champ equals the gradient pairing", || {
        let tol = config.tolerances.residual;
        let mut rng = rng_for(config, 3);
        let m3 = projection_diff_basis(3, BasisMode::SelfAdjoint)?;
        let mut worst_m = 0.0f64;
        for _ in 0..100 {
            let a = random_matrix(3, &mut rng);
            let c = random_matrix(3, &mut rng);
            let d = carre_du_champ(&a, &c, &m3)?.max_abs_diff(&gradient_pairing(&a, &c, &m3)?);
            worst_m = worst_m.max(d);
        }
        let t = torus(0.7);
        let tb = lattice_basis(&t, &[0])?;
        let mut worst_t = 0.0f64;
        for _ in 0..100 {
            let a = random_element(&t, &mut rng, 4, config.truncation);
            let c = random_element(&t, &mut rng, 4, config.truncation);
            let d = carre_du_champ(&a, &c, &tb)?.max_abs_diff(&gradient_pairing(&a, &c, &tb)?);
            worst_t = worst_t.max(d);
        }
        Ok(vec![
            Check::at_most("M_3 p-basis", worst_m, tol),
            Check::at_most("torus {U}", worst_t, tol),
        ])
    })
}

/// Complete positivity, symmetry, conservativity, Markov property and
/// Trotter convergence of the heat semigroup on `M_3`.
pub fn semigroup_audit(config: &SelftestConfig) -> CriterionReport {
    report(
        4,
        "heat semigroup on M_3 is a symmetric Markov semigroup",
        || {
            let tol = config.tolerances;
            let mut rng = rng_for(config, 4);
            let b = projection_diff_basis(3, BasisMode::SelfAdjoint)?;
            let audit = audit_semigroup(&[0.1, 1.0, 10.0], &b, 100, &mut rng)?;
            let mut checks = Vec::new();
            for e in &audit.entries {
                let t = e.t;
                checks.push(Check::at_least(
                    format!("t={t} Choi minimum"),
                    e.choi_min_eigenvalue,
                    -tol.residual,
                ));
                checks.push(Check::at_most(
                    format!("t={t} symmetry"),
                    e.symmetry_error,
                    tol.residual,
                ));
                checks.push(Check::at_most(
                    format!("t={t} Phi(1) - 1"),
                    e.conservativity_error,
                    tol.conservativity,
                ));
                checks.push(Check::at_least(
                    format!("t={t} Markov min"),
                    e.markov_min,
                    -tol.residual,
                ));
                checks.push(Check::at_most(
                    format!("t={t} Markov max"),
                    e.markov_max,
                    1.0 + tol.residual,
                ));
            }
            checks.push(Check::at_most(
                "Trotter error, 4096 steps",
                trotter_check(1.0, 4096, &b)?,
                tol.trotter,
            ));
            Ok(checks)
        },
    )
}

/// `τ(⟨δa, δa⟩)` against `τ(a*Δa)` with the mode-dependent factor.
pub fn dirichlet_representation(config: &SelftestConfig) -> CriterionReport {
    report(
        5,
        "Dirichlet form matches its first-order representation",
        || {
            let tol = config.tolerances.residual;
            let mut rng = rng_for(config, 5);
            let t = torus(0.7);
            let tb = lattice_basis(&t, &[0])?;
            let mut complex = 0.0f64;
            for _ in 0..100 {
                let a = random_element(&t, &mut rng, 4, config.truncation);
                complex = complex.max(dirichlet_form(&a, &a, &tb)?.mismatch());
            }
            let m3 = projection_diff_basis(3, BasisMode::SelfAdjoint)?;
            let mut selfadj = 0.0f64;
            for _ in 0..100 {
                let a = random_matrix(3, &mut rng);
                selfadj = selfadj.max(dirichlet_form(&a, &a, &m3)?.mismatch());
            }
            Ok(vec![
                Check::at_most("complex mode, factor 2 (torus {U})", complex, tol),
                Check::at_most("self-adjoint mode, factor 1 (M_3)", selfadj, tol),
            ])
        },
    )
}

/// `H⁰(M_n) = n` from numeric ranks.
pub fn matrix_h0(_config: &SelftestConfig) -> CriterionReport {
    report(6, "degree-zero cohomology of M_n has dimension n", || {
        let mut checks = Vec::new();
        for n in 2..=6 {
            let b = projection_diff_basis(n, BasisMode::SelfAdjoint)?;
            let opts = CohomologyOptions {
                max_degree: Some(0),
                rank_tol: None,
            };
            let h0 = de_rham_dims(&b, &MatrixUnits { n }, opts)?
                .h(0)
                .unwrap_or(0);
            checks.push(Check::exact_count(
                format!("H0(M_{n}) - {n}"),
                h0.abs_diff(n),
            ));
        }
        Ok(checks)
    })
}

fn expected_vertex_commutator(g: &Arc<DirectedGraph>, v: usize, mu: &Path) -> GraphElement {
    let s = GraphElement::path(g, mu.clone());
    if mu.is_loop() || mu.is_empty() {
        GraphElement::zero(g)
    } else if v == mu.source() {
        s
    } else if v == mu.range() {
        s.scale(c64(-1.0, 0.0))
    } else {
        GraphElement::zero(g)
    }
}

/// Path combinatorics of graph algebras.
pub fn graph_combinatorics(_config: &SelftestConfig) -> CriterionReport {
    report(7, "graph algebra combinatorics", || {
        let mut lemma = 0;
        let mut closed = 0;
        let mut identity = 0.0f64;
        let mut isometry_paths = Vec::new();
        for (name, _) in GRAPH_CORPUS {
            let g = corpus_graph(name).expect("corpus");
            for mu in g.paths_up_to(4) {
                for v in 0..g.vertex_count() {
                    if vertex_commutator(v, &GraphElement::path(&g, mu.clone()))
                        != expected_vertex_commutator(&g, v, &mu)
                    {
                        lemma += 1;
                    }
                }
                if !mu.is_empty() && full_isometry_criterion(&g, &mu)? {
                    isometry_paths.push((g.clone(), mu.clone()));
                }
            }
            let basis = vertex_basis(&g)?;
            let paths = g.paths_up_to(3);
            for mu in &paths {
                for nu in paths.iter().filter(|nu| nu.range() == mu.range()) {
                    let t = CkTerm::new(mu.clone(), nu.clone())?;
                    let x = GraphElement::from_term(&g, t.clone(), c64(1.0, 0.0));
                    let d = DifferentialForm::scalar(&basis, x.clone())?.delta();
                    if t.is_closed() != d.is_zero() {
                        closed += 1;
                    }
                    let expected = DifferentialForm::covector(&basis, mu.source(), false)?
                        .left_mul(&x)?
                        .try_sub(
                            &DifferentialForm::covector(&basis, nu.source(), false)?
                                .left_mul(&x)?,
                        )?;
                    identity = identity.max(d.max_abs_diff(&expected));
                }
            }
        }
        let verified = isometry_paths
            .iter()
            .take(20)
            .filter(|(g, mu)| verify_full_isometry(g, mu))
            .count();
        let star = corpus_graph("star5").expect("corpus");
        let star_count = h0_report(&star, 2).projection_count.unwrap_or(0);
        let loop_flags = h0_report(&corpus_graph("loop1").expect("corpus"), 2)
            .circle_flags
            .len();
        let exit_flags = h0_report(&corpus_graph("loop_exit").expect("corpus"), 2)
            .circle_flags
            .len();
        Ok(vec![
            Check::exact_count("vertex commutator cases, paths of length <= 4", lemma),
            Check::exact_count("closed iff delta = 0, length <= 3", closed),
            Check::at_most("delta of a spanning term, length <= 3", identity, 0.0),
            Check::at_least(
                "criterion-true paths available",
                isometry_paths.len().min(20) as f64,
                20.0,
            ),
            Check::exact_count(
                "bounded expansion failures on 20 paths",
                20usize.saturating_sub(verified),
            ),
            Check::exact_count("star5 projection count - 5", star_count.abs_diff(5)),
            Check::exact_count("loop without exit flagged", 1usize.abs_diff(loop_flags)),
            Check::exact_count("loop with exit not flagged", exit_flags),
        ])
    })
}

/// Commutant-of-`U` membership through the coefficient criterion, compared
/// with an integer oracle for the three angle regimes.
pub fn commutant_branches(config: &SelftestConfig) -> CriterionReport {
    report(8, "commutant of U follows the angle branches", || {
        let mut rng = rng_for(config, 8);
        // (theta, period of l in the commutant; 0 means only l = 0)
        let cases = [
            (1.0, 0i64, "theta=1"),
            (3.0 * PI / 7.0, 14, "theta=3pi/7"),
            (2.0 * PI / 7.0, 7, "theta=2pi/7"),
        ];
        let mut checks = Vec::new();
        for (theta, period, label) in cases {
            let spec = torus(theta);
            let allowed = |l: i64| if period == 0 { l == 0 } else { l % period == 0 };
            let mut wrong = 0;
            for i in 0..50 {
                let count = rng.gen_range(1..=4);
                let mut terms = Vec::new();
                for _ in 0..count {
                    let kexp = rng.gen_range(-5..=5);
                    let l = if period == 0 {
                        0
                    } else {
                        period * rng.gen_range(-3..=3)
                    };
                    terms.push((
                        vec![kexp, l],
                        c64(rng.gen_range(0.1..1.0), rng.gen_range(-1.0..1.0)),
                    ));
                }
                // every other element gets one obstruction
                if i % 2 == 1 {
                    let l = loop {
                        let l = rng.gen_range(-30..=30);
                        if !allowed(l) {
                            break l;
                        }
                    };
                    terms.push((vec![rng.gen_range(-5..=5), l], c64(1.0, 0.0)));
                }
                let mut x = QElement::zero(&spec);
                for (e, c) in terms {
                    x = x.add(&QElement::monomial(&spec, e, c)?);
                }
                let expected = x.terms().keys().all(|m| allowed(m.exponents()[1]));
                if c00_membership(&x, 1e-9)?.member != expected {
                    wrong += 1;
                }
            }
            checks.push(Check::exact_count(
                format!("{label} membership mismatches"),
                wrong,
            ));
        }
        Ok(checks)
    })
}

/// Clock-and-shift homomorphism and Fuglede–Putnam kernel coincidence.
pub fn clock_shift_oracle(config: &SelftestConfig) -> CriterionReport {
    report(
        9,
        "clock-and-shift representation and Fuglede-Putnam",
        || {
            let tol = config.tolerances.residual;
            let mut rng = rng_for(config, 9);
            let spec = torus(2.0 * PI * 3.0 / 7.0);
            let cs = ClockShift::for_spec(&spec)?;
            let mut worst = 0.0f64;
            for _ in 0..100 {
                let x = random_element(&spec, &mut rng, 4, 5);
                let y = random_element(&spec, &mut rng, 4, 5);
                let d = cs
                    .image(&x.mul(&y))
                    .max_abs_diff(&cs.image(&x).mul(&cs.image(&y)));
                worst = worst.max(d);
            }
            let mut disagreements = 0;
            for i in 0..20 {
                let n = 2 + i % 4;
                if !fuglede_putnam_check(&[random_normal(n, &mut rng)]).coincide {
                    disagreements += 1;
                }
            }
            Ok(vec![
                Check::at_most("homomorphism residual, 100 products", worst, tol),
                Check::exact_count("kernel disagreements, 20 normal matrices", disagreements),
            ])
        },
    )
}

fn sweep_checks(label: &str, s: &DeformationSweep, tol: &Tolerances) -> Vec<Check> {
    let order = s.fitted_order.unwrap_or(f64::NAN);
    let ratio = s.halving_ratio().unwrap_or(f64::NAN);
    vec![
        Check::within(
            format!("{label} fitted order"),
            order,
            1.0 - tol.order_band,
            1.0 + tol.order_band,
        ),
        Check::within(
            format!("{label} halving ratio"),
            ratio,
            tol.halving_low,
            tol.halving_high,
        ),
    ]
}

/// First-order convergence of the three classical limits.
pub fn deformation_sweeps(config: &SelftestConfig) -> CriterionReport {
    report(10, "deformation sweeps converge at first order", || {
        let tol = &config.tolerances;
        let params = halving_sequence(1e-2, 4);
        let mut checks = Vec::new();
        for d in 1..=5i64 {
            let s = torus_limit_sweep(1, &[(vec![d], c64(1.0, 0.0))], &params)?;
            checks.extend(sweep_checks(&format!("torus V^{d}"), &s, tol));
            let s = plane_limit_sweep((1, -1), &[((d, 1), c64(1.0, 0.0))], &params, 1.0)?;
            checks.extend(sweep_checks(&format!("plane W({d},1)"), &s, tol));
            for dir in [
                HeisenbergDirection::U,
                HeisenbergDirection::V,
                HeisenbergDirection::W,
            ] {
                let s = heisenberg_limit_sweep(dir, [d, d, d], &params, 0.11, 0.07)?;
                checks.extend(sweep_checks(
                    &format!("Heisenberg {dir:?} degree {d}"),
                    &s,
                    tol,
                ));
            }
        }
        Ok(checks)
    })
}

/// Orthonormal monomials, derivation actions on generators and the
/// brackets with `D3`.
pub fn heisenberg_structure(config: &SelftestConfig) -> CriterionReport {
    report(11, "Heisenberg monomials and derivations", || {
        let tol = config.tolerances.exact;
        let spec = heisenberg();
        let mut monomials = Vec::new();
        for m in -4..=4 {
            for n in -4..=4 {
                for k in -4..=4 {
                    monomials.push(QElement::monomial(&spec, vec![m, n, k], c64(1.0, 0.0))?);
                }
            }
        }
        let mut ortho = 0.0f64;
        for (i, x) in monomials.iter().enumerate() {
            for (j, y) in monomials.iter().enumerate() {
                let expected = if i == j { 1.0 } else { 0.0 };
                ortho = ortho.max((x.inner(y)? - c64(expected, 0.0)).norm());
            }
        }

        let c = 1.0;
        let d = HeisenbergDerivations::new(&spec, c, 4, D1Variant::PlainSeries)?;
        let g = |i| QElement::generator(&spec, i);
        let (u, v, w) = (g(0)?, g(1)?, g(2)?);
        let tpi = c64(0.0, 2.0 * PI);
        let zero = QElement::zero(&spec);
        let actions = [
            (d.d1(&u)?, u.scale(tpi)),
            (d.d1(&v)?, zero.clone()),
            (d.d1(&w)?, d.d1_w()?),
            (d.d2(&u)?, zero.clone()),
            (d.d2(&v)?, v.scale(tpi)),
            (d.d2(&w)?, zero.clone()),
            (d.d3(&u)?, zero.clone()),
            (d.d3(&v)?, zero.clone()),
            (d.d3(&w)?, w.scale(tpi * c)),
        ];
        let action_err = actions
            .iter()
            .map(|(a, b)| a.max_abs_diff(b))
            .fold(0.0, f64::max);
        let series_terms = d.d1_w()?.terms().len();

        let mut bracket = 0.0f64;
        for x in &monomials {
            let b13 = d.d1(&d.d3(x)?)?.sub(&d.d3(&d.d1(x)?)?);
            let b23 = d.d2(&d.d3(x)?)?.sub(&d.d3(&d.d2(x)?)?);
            bracket = bracket.max(b13.norm_max()).max(b23.norm_max());
        }
        Ok(vec![
            Check::at_most("monomial orthonormality, |exponents| <= 4", ortho, tol),
            Check::at_most("derivation actions on U, V, W", action_err, 0.0),
            Check::exact_count("D1(W) series length - 2K", series_terms.abs_diff(8)),
            Check::at_most("[D1,D3] and [D2,D3] on monomials", bracket, tol),
        ])
    })
}

/// Every criterion, in order.
pub fn run_all(config: &SelftestConfig) -> Vec<CriterionReport> {
    vec![
        delta_squared(config),
        leibniz_and_partials(config),
        carre_du_champ_identity(config),
        semigroup_audit(config),
        dirichlet_representation(config),
        matrix_h0(config),
        graph_combinatorics(config),
        commutant_branches(config),
        clock_shift_oracle(config),
        deformation_sweeps(config),
        heisenberg_structure(config),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corpus_parses() {
        for (name, _) in GRAPH_CORPUS {
            assert!(corpus_graph(name).is_some());
        }
        assert_eq!(corpus_graph("star5").unwrap().vertex_count(), 5);
        assert!(corpus_graph("nope").is_none());
    }

    #[test]
    fn check_bands() {
        assert!(Check::at_most("x", 1e-11, 1e-10).passed);
        assert!(!Check::at_most("x", f64::NAN, 1e-10).passed);
        assert!(!Check::within("x", 0.6, 0.45, 0.55).passed);
        assert!(Check::exact_count("x", 0).passed);
        let r = CriterionReport {
            id: 3,
            title: "t".into(),
            checks: vec![Check::at_least("y", -1.0, 0.0)],
        };
        assert!(!r.passed());
        assert!(r.to_string().starts_with("FAIL [ 3] t :: y"));
    }

    #[test]
    fn cheap_criteria_pass() {
        let cfg = SelftestConfig::default();
        for r in [
            matrix_h0(&cfg),
            commutant_branches(&cfg),
            graph_combinatorics(&cfg),
        ] {
            assert!(r.passed(), "{r}");
        }
    }
}
