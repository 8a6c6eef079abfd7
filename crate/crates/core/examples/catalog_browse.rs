//! Lists the shipped catalog and instantiates an entry with bindings.
use std::collections::BTreeMap;

use hypsym::catalog::{parse_bindings, Catalog};

fn main() -> hypsym::Result<()> {
    let cat = Catalog::embedded()?;
    for e in cat.list(None) {
        println!("{e}");
    }
    println!();
    for p in cat.pairings() {
        println!("pairing {p}");
    }
    let s3 = cat.get("S3", &BTreeMap::new())?;
    let s3_1 = cat.get("S3", &parse_bindings("a=1, b=0")?)?;
    println!("\nS3           : {}", s3.nf());
    println!("S3 at a=1,b=0: {}", s3_1.nf());
    match cat.get("S1", &parse_bindings("a=0")?) {
        Err(e) => println!("S1 at a=0 rejected: {e}"),
        Ok(_) => unreachable!(),
    }
    Ok(())
}
