//! Cohomology dimensions of truncated complexes: M_n with the projection
//! basis, the 2-torus with basis {U}, and the commutant criterion for U.

use std::f64::consts::PI;
use std::sync::Arc;

use innercalc::algebra::c64;
use innercalc::cohomology::{
    c00_membership, de_rham_dims, CohomologyOptions, LatticeTruncation, MatrixUnits,
};
use innercalc::forms::{BasisMode, DifferentialBasis};
use innercalc::matrix_algebra::projection_basis;
use innercalc::qlattice::{QAlgebraSpec, QElement};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for n in 2..=4 {
        let b = Arc::new(DifferentialBasis::new(
            projection_basis(n)?,
            BasisMode::SelfAdjoint,
            "p",
        )?);
        let r = de_rham_dims(&b, &MatrixUnits { n }, CohomologyOptions::default())?;
        let dims: Vec<usize> = r.degrees.iter().map(|d| d.h_dim).collect();
        println!("M_{n}: H^k dims {dims:?}");
    }

    let spec = Arc::new(QAlgebraSpec::torus2(0.7));
    let b = Arc::new(DifferentialBasis::new(
        vec![QElement::generator(&spec, 0)?],
        BasisMode::Complex,
        "U",
    )?);
    let r = de_rham_dims(
        &b,
        &LatticeTruncation::new(&spec, 6),
        CohomologyOptions::default(),
    )?;
    println!("torus K=6: {}", serde_json::to_string(&r)?);

    for (theta, label) in [
        (1.0, "1"),
        (3.0 * PI / 7.0, "3pi/7"),
        (2.0 * PI / 7.0, "2pi/7"),
    ] {
        let spec = Arc::new(QAlgebraSpec::torus2(theta));
        let x = QElement::monomial(&spec, vec![1, 7], c64(1.0, 0.0))?;
        let y = QElement::monomial(&spec, vec![0, 14], c64(1.0, 0.0))?;
        println!(
            "theta={label}: U V^7 commutes with U: {}, V^14: {}",
            c00_membership(&x, 1e-9)?.member,
            c00_membership(&y, 1e-9)?.member
        );
    }
    Ok(())
}
