//! The x/y swap carries a symmetry in x into a symmetry in y.
use std::collections::BTreeMap;

use hypsym::catalog::Catalog;
use hypsym::jet::swap_xy;
use hypsym::verify::determining_residual;

fn main() -> hypsym::Result<()> {
    let cat = Catalog::embedded()?;
    let f = cat.hyperbolic("hyp4", &BTreeMap::new())?;
    let g = cat.evolution("ev12", &BTreeMap::new())?;
    let gy = g.swapped()?;
    println!("G   = {}", g.nf());
    println!("G~  = {}", gy.nf());
    println!("swap twice is identity: {}", swap_xy(gy.nf())? == *g.nf());
    println!("x residual zero: {}", determining_residual(&f, &g)?.is_zero());
    println!("y residual zero: {}", determining_residual(&f, &gy)?.is_zero());
    Ok(())
}
