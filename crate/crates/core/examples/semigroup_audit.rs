//! Heat semigroup e^{-tΔ} on M_3 with the projection basis: audit of
//! complete positivity, symmetry, conservativity and the Markov property,
//! then Lie-Trotter splitting.

use innercalc::algebra::c64;
use innercalc::dirichlet::{audit_semigroup, trotter_check, trotter_error, HeatSemigroup};
use innercalc::forms::{BasisMode, DifferentialBasis};
use innercalc::matrix_algebra::{projection_basis, MatElement};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let basis = DifferentialBasis::new(projection_basis(3)?, BasisMode::SelfAdjoint, "p")?;
    let sg = HeatSemigroup::new(&basis);
    println!("spectrum of the Laplacian: {:?}", sg.laplacian_spectrum());

    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let audit = audit_semigroup(&[0.1, 1.0, 10.0], &basis, 100, &mut rng)?;
    print!("{}", audit.to_csv());
    println!("passes at 1e-10: {}", audit.passes(1e-10));

    // the p-basis pieces commute, so splitting is exact up to rounding
    println!(
        "p-basis Trotter error, m=8: {:e}",
        trotter_check(1.0, 8, &basis)?
    );
    // two non-commuting projections show the usual 1/m decay
    let e11 = MatElement::unit(2, 0, 0);
    let mut half = MatElement::zeros(2);
    for i in 0..2 {
        for j in 0..2 {
            half.set(i, j, c64(0.5, 0.0));
        }
    }
    for m in [8, 64, 512] {
        println!(
            "non-commuting family, m={m}: {:e}",
            trotter_error(1.0, m, &[e11.clone(), half.clone()])?
        );
    }
    Ok(())
}
