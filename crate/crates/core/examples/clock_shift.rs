//! Finite-dimensional representation of a rational-angle torus and the
//! Fuglede-Putnam kernel comparison.

use std::f64::consts::PI;
use std::sync::Arc;

use innercalc::algebra::Algebra;
use innercalc::cohomology::fuglede_putnam_check;
use innercalc::matrix_algebra::{random_normal, MatElement};
use innercalc::qlattice::{random_element, ClockShift, QAlgebraSpec};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = Arc::new(QAlgebraSpec::torus2(2.0 * PI * 3.0 / 7.0));
    let cs = ClockShift::for_spec(&spec)?;
    println!("dimension q = {}", cs.dimension());
    let (u, v) = (cs.clock(), cs.shift());
    let phase = num_complex::Complex64::from_polar(1.0, 2.0 * PI * 3.0 / 7.0);
    println!(
        "|UV - e^(i theta) VU| = {:e}",
        u.mul(v).max_abs_diff(&v.mul(u).scale(phase))
    );

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let x = random_element(&spec, &mut rng, 4, 5);
    let y = random_element(&spec, &mut rng, 4, 5);
    println!(
        "homomorphism residual = {:e}",
        cs.image(&x.mul(&y))
            .max_abs_diff(&cs.image(&x).mul(&cs.image(&y)))
    );

    println!("clock: {:?}", fuglede_putnam_check(std::slice::from_ref(u)));
    println!(
        "random normal: {:?}",
        fuglede_putnam_check(&[random_normal(4, &mut rng)])
    );
    println!(
        "nilpotent: {:?}",
        fuglede_putnam_check(&[MatElement::unit(2, 0, 1)])
    );
    Ok(())
}
