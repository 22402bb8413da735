//! The expression language: parse, print and evaluate against the 2-torus.
//! Pass expressions as arguments to evaluate your own.

use std::sync::Arc;

use innercalc::expr::{parse, EvalContext};
use innercalc::qlattice::QAlgebraSpec;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let ctx = EvalContext::new(Arc::new(QAlgebraSpec::torus2(0.7)))?;
    let mut inputs: Vec<String> = std::env::args().skip(1).collect();
    if inputs.is_empty() {
        inputs = [
            "[U, V]",
            "delta(V)",
            "U*U'",
            "delta(1)",
            "delta(V) /\\ delta(V')",
            "theta_hat(0, 0.7, U*V) - U*V",
            "(2 + i) * V^-2",
        ]
        .map(String::from)
        .to_vec();
    }
    for text in inputs {
        let ast = parse(&text)?;
        println!("{ast}  =>  {}", ctx.eval(&ast)?);
    }
    Ok(())
}
