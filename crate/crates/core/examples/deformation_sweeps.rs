//! Classical limits of scaled commutators: torus (θ→0), Weyl plane and
//! Heisenberg lattice (ħ→0), with fitted convergence orders.

use innercalc::algebra::c64;
use innercalc::deformation::{
    halving_sequence, heisenberg_limit_sweep, plane_limit_sweep, plane_position_sweep,
    torus_limit_sweep, DeformationSweep, HeisenbergDirection,
};

fn show(name: &str, s: &DeformationSweep) {
    println!(
        "{name}: order {:.4}, halving ratio {:.4}  ({})",
        s.fitted_order.unwrap_or(f64::NAN),
        s.halving_ratio().unwrap_or(f64::NAN),
        s.target_description
    );
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let params = halving_sequence(1e-2, 4);
    let one = c64(1.0, 0.0);
    let torus = torus_limit_sweep(1, &[(vec![3], one)], &params)?;
    print!("{}", torus.to_csv());
    show("torus V^3", &torus);
    show(
        "plane W(2,1) against W(1,-1)",
        &plane_limit_sweep((1, -1), &[((2, 1), one)], &params, 1.0)?,
    );
    show(
        "plane position f(Q1, Q2)",
        &plane_position_sweep(2, &[(vec![1, 2], one)], &params, 1.0)?,
    );
    for d in [
        HeisenbergDirection::U,
        HeisenbergDirection::V,
        HeisenbergDirection::W,
    ] {
        show(
            &format!("Heisenberg {d:?}"),
            &heisenberg_limit_sweep(d, [2, 1, 3], &params, 0.11, 0.07)?,
        );
    }
    Ok(())
}
