//! Laplacian, carré du champ and the Dirichlet form in both basis modes.

use std::sync::Arc;

use innercalc::algebra::{c64, Algebra};
use innercalc::dirichlet::{carre_du_champ, delta_pairing, dirichlet_form, laplacian};
use innercalc::forms::{BasisMode, DifferentialBasis};
use innercalc::matrix_algebra::{projection_basis, MatElement};
use innercalc::qlattice::{QAlgebraSpec, QElement};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let p2 = DifferentialBasis::new(projection_basis(2)?, BasisMode::SelfAdjoint, "p")?;
    let e12 = MatElement::unit(2, 0, 1);
    println!("Laplacian(e12) = {:?}", laplacian(&e12, &p2)?.matrix());
    println!(
        "carre du champ(e12, e12) = {:?}",
        carre_du_champ(&e12, &e12, &p2)?.matrix()
    );
    println!(
        "<delta e12, delta e12> = {:?}",
        delta_pairing(&e12, &e12, &p2)?.matrix()
    );
    println!("self-adjoint mode: {:?}", dirichlet_form(&e12, &e12, &p2)?);

    let spec = Arc::new(QAlgebraSpec::torus2(0.7));
    let u = QElement::generator(&spec, 0)?;
    let b = DifferentialBasis::new(vec![u], BasisMode::Complex, "U")?;
    let a = QElement::generator(&spec, 1)?
        .add(&QElement::generator_power(&spec, 1, 2)?.scale(c64(0.0, 0.5)));
    println!("complex mode: {:?}", dirichlet_form(&a, &a, &b)?);
    Ok(())
}
