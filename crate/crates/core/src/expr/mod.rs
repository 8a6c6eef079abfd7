//! Exact symbolic core: rationals, Laurent polynomials, the variable table,
//! canonical normal forms, expression trees, parsing and printing.

pub mod context;
pub mod gcd;
pub mod normal;
pub mod parse;
pub mod poly;
pub mod print;
pub mod rat;
pub mod tree;

pub use context::Context;
pub use normal::NormalForm;
pub use parse::{parse, parse_normal};
pub use poly::{Mono, Poly, VarId};
pub use rat::Rat;
pub use tree::{is_zero, normalize, Expr};
