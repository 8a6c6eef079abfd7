//! Canonical forms in the algebraic tower: the curve relation of f(u1)
//! and sc² = c are applied automatically.
use hypsym::expr::{is_zero, parse, parse_normal};

fn main() -> hypsym::Result<()> {
    for text in [
        "(f(u1) + u1)^2*(2*f(u1) - u1) + 1",
        "sqrt(c)^2 - c",
        "exp(u)*exp(-u) - 1",
        "(u1^2 - uy^2)/(u1 - uy)",
        "f(u1)^3",
    ] {
        let nf = parse_normal(text)?;
        println!("{text:<40} => {nf}   (zero: {})", is_zero(&parse(text)?)?);
    }
    Ok(())
}
