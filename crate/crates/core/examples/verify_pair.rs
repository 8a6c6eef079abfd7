//! Checks one pair: the Tzitzeica x-symmetry and a negative control.
use std::collections::BTreeMap;

use hypsym::catalog::{Catalog, PairingClaim, PairingStatus};
use hypsym::jet::Direction;
use hypsym::verify::{pairing_equations, verify_pair};

fn main() -> hypsym::Result<()> {
    let cat = Catalog::embedded()?;
    for (hyp, ev) in [("hyp4", "ev12"), ("hyp3", "ev12")] {
        let claim = PairingClaim {
            hyperbolic: hyp.into(),
            evolution: Some(ev.into()),
            direction: Direction::X,
            bindings: BTreeMap::new(),
            status: PairingStatus::AdHoc,
        };
        let (f, g) = pairing_equations(&cat, &claim)?;
        print!("{}", verify_pair(&f, &g, claim, 25, 1e-9, 7)?.to_text());
    }
    Ok(())
}
