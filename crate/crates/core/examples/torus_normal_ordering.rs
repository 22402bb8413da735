//! Normal ordering of words in the 2-torus and the Heisenberg lattice.

use std::sync::Arc;

use innercalc::algebra::Algebra;
use innercalc::qlattice::{normal_order, QAlgebraSpec, QElement};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let theta = 0.7;
    let torus = Arc::new(QAlgebraSpec::torus2(theta));
    // V U V^-1 U^2 rewritten as a single phased monomial
    let word = normal_order(&torus, &[(1, 1), (0, 1), (1, -1), (0, 2)])?;
    println!("V U V^-1 U^2 = {word}");

    let u = QElement::generator(&torus, 0)?;
    let v = QElement::generator(&torus, 1)?;
    println!("[U, V]      = {}", u.commutator(&v));
    println!(
        "UV - e^(i theta) VU = {}",
        u.mul(&v).sub(
            &v.mul(&u)
                .scale(num_complex::Complex64::from_polar(1.0, theta))
        )
    );

    let h = Arc::new(QAlgebraSpec::heisenberg(0.11, 0.07, 1.0));
    let w = QElement::generator(&h, 2)?;
    let x = QElement::monomial(&h, vec![1, 2, 0], innercalc::algebra::c64(1.0, 0.0))?;
    println!("[W, U V^2]  = {}", w.commutator(&x));
    println!("tau(W* W)   = {}", w.inner(&w)?);
    Ok(())
}
