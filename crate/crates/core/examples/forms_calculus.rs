//! Differential forms over the torus: δ, its (1,0)/(0,1) split, wedge
//! products and the vanishing of δ².

use std::sync::Arc;

use innercalc::algebra::Algebra;
use innercalc::forms::{BasisMode, DifferentialBasis, DifferentialForm};
use innercalc::qlattice::{random_element, QAlgebraSpec, QElement};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = Arc::new(QAlgebraSpec::torus2(0.7));
    let u = QElement::generator(&spec, 0)?;
    let v = QElement::generator(&spec, 1)?;
    let basis = Arc::new(DifferentialBasis::new(vec![u], BasisMode::Complex, "U")?);

    let dv = DifferentialForm::scalar(&basis, v.clone())?.delta();
    println!("delta(V)          = {dv}");
    println!(
        "partial(V)        = {}",
        DifferentialForm::scalar(&basis, v.clone())?.partial()?
    );
    println!(
        "partial_star(V)   = {}",
        DifferentialForm::scalar(&basis, v.clone())?.partial_star()?
    );
    println!(
        "delta(V) ^ delta(V*) = {}",
        dv.wedge(&DifferentialForm::scalar(&basis, v.adjoint())?.delta())?
    );

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let a = random_element(&spec, &mut rng, 5, 6);
        let f = DifferentialForm::scalar(&basis, a)?;
        worst = worst.max(f.delta().delta().norm_max());
    }
    println!("max |delta^2 a| over 50 random elements = {worst:e}");
    Ok(())
}
