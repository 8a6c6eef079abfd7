//! Runs every shipped pairing and prints the structured reports.
use hypsym::catalog::Catalog;
use hypsym::verify::{verify_all, DEFAULT_SAMPLES, DEFAULT_SEED, DEFAULT_TOLERANCE};

fn main() -> hypsym::Result<()> {
    let cat = Catalog::embedded()?;
    for r in verify_all(&cat, DEFAULT_SAMPLES, DEFAULT_TOLERANCE, DEFAULT_SEED)? {
        print!("{}", r.to_structured());
    }
    Ok(())
}
