//! Total derivatives on solutions of the Tzitzeica equation, and the
//! commutation D_x D_y = D_y D_x.
use hypsym::expr::parse_normal;
use hypsym::jet::{HyperbolicEq, JetSpace};

fn main() -> hypsym::Result<()> {
    let f = HyperbolicEq::parse("tz", "exp(u) + exp(-2*u)")?;
    let js = JetSpace::new(&f);
    let e = parse_normal("u2*uyy + exp(u)*u1")?;
    println!("e        = {e}");
    println!("D_x e    = {}", js.d_x(&e)?);
    println!("D_y e    = {}", js.d_y(&e)?);
    let comm = js.d_x(&js.d_y(&e)?)?.sub(&js.d_y(&js.d_x(&e)?)?);
    println!("[D_x,D_y]e = {comm}");
    Ok(())
}
