//! Consistent sample points and finite-difference checks of the symbol
//! derivative rules.
use std::collections::BTreeMap;

use hypsym::expr::{context, parse_normal, Context};
use hypsym::numeval::{derivative_check, numeric_zero, sample_point};

fn main() -> hypsym::Result<()> {
    let p = sample_point(&BTreeMap::new(), 1)?;
    for (k, v) in p.assignment() {
        println!("{k:<12} {v:+.12}");
    }
    for (k, r) in &p.relation_residuals {
        println!("relation {k:<10} residual {r:.1e}");
    }
    for s in [context::F_X, context::FA_Y, context::P, context::W] {
        println!("derivative rule {}: discrepancy {:.1e}", Context::standard().name(s), derivative_check(s, &p, 1e-6)?);
    }
    let v = numeric_zero(&parse_normal("f(u1) - u1")?, 10, 1e-9, 7)?;
    println!("f(u1) - u1 zero-like: {} (max {:.2e})", v.zero_like, v.max_relative);
    Ok(())
}
