//! Searches the evolution catalog for symmetries of an unpaired equation.
use hypsym::catalog::Catalog;
use hypsym::verify::resolve;

fn main() -> hypsym::Result<()> {
    let cat = Catalog::embedded()?;
    for p in cat.pairings().iter().filter(|p| p.evolution.is_none()) {
        let (resolved, all) = resolve(&cat, p)?;
        println!("{} resolves to {}", p.id(), resolved.id());
        for c in all {
            let b: Vec<String> = c.bindings.iter().map(|(k, v)| format!("{k}={v}")).collect();
            println!("  candidate {} [{}]", c.evolution, b.join(", "));
        }
    }
    Ok(())
}
