//! The g(u1) table over the constant-separant list and the ODE check
//! w'' + g w' + g' w = 0.
use std::collections::BTreeMap;

use hypsym::catalog::{Catalog, Role};
use hypsym::expr::parse_normal;
use hypsym::verify::{extract_g_nf, ode_check};

fn main() -> hypsym::Result<()> {
    let cat = Catalog::embedded()?;
    for e in cat.list(Some(Role::Evolution)) {
        let g = cat.evolution(&e.id, &BTreeMap::new())?;
        match extract_g_nf(&g) {
            Ok(gn) => println!("{:<6} g = {}", e.id, gn.to_expr()),
            Err(err) => println!("{:<6} {err}", e.id),
        }
    }
    println!();
    // The last pair is not a solution and leaves a nonzero residual.
    for (g, w) in [("0", "u1"), ("-1/u1", "u1*ln(u1)"), ("-1/(2*u1)", "sqrt(u1)"), ("-1/u1", "u1^2")] {
        let r = ode_check(&parse_normal(w)?, &parse_normal(g)?)?;
        println!("g = {g:<10} w = {w:<10} residual {r}");
    }
    Ok(())
}
