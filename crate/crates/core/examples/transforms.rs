//! Every transform definition, each convention tried in turn.
use hypsym::catalog::Catalog;
use hypsym::transforms::{check_all, check_parametrization, check_scaling_law};

fn main() -> hypsym::Result<()> {
    println!("parametrization residual: {}", check_parametrization()?);
    println!("scaling law residual: {}", check_scaling_law()?);
    let cat = Catalog::embedded()?;
    for r in check_all(&cat)? {
        print!("{}", r.to_text());
    }
    Ok(())
}
