//! The derivations D1, D2, D3 on the Heisenberg lattice, both D1(W) series
//! and the brackets with D3.

use std::sync::Arc;

use innercalc::algebra::{c64, Algebra};
use innercalc::deformation::{D1Variant, HeisenbergDerivations, HeisenbergParams};
use innercalc::qlattice::QElement;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let params = HeisenbergParams {
        mu: 0.11,
        nu: 0.07,
        c: 1.0,
        hbar: 1.0,
    };
    let spec = Arc::new(params.spec());
    for variant in [D1Variant::PlainSeries, D1Variant::WithMeanTerm] {
        let d = HeisenbergDerivations::new(&spec, params.c, 3, variant)?;
        println!("{variant:?}: D1(W) = {}", d.d1_w()?);
    }
    let d = HeisenbergDerivations::new(&spec, params.c, 3, D1Variant::PlainSeries)?;
    let x = QElement::monomial(&spec, vec![1, -2, 1], c64(1.0, 0.0))?;
    let (d1, d2, d3) = d.apply_all(&x)?;
    println!("x = {x}\nD1 x = {d1}\nD2 x = {d2}\nD3 x = {d3}");
    let b13 = d.d1(&d3)?.sub(&d.d3(&d1)?);
    println!("|[D1, D3] x| = {:e}", b13.norm_max());
    Ok(())
}
