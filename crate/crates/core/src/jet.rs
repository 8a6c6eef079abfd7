//! Total derivatives on the jet space of `u_xy = F(u_x, u_y, u)`.
//!
//! Mixed derivatives never appear as variables: `D_x(u_y) = F`,
//! `D_x(v_j) = D_y(D_x(v_{j-1}))`, `D_y(u_k) = D_x(D_y(u_{k-1}))`. Results for
//! jet coordinates are memoized per [`JetSpace`].

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::fmt;

use rustc_hash::FxHashMap;

use crate::error::{Error, Result};
use crate::expr::context::{self, Context, VarKind, U};
use crate::expr::normal::symbol_derivative;
use crate::expr::{normalize, Expr, NormalForm, Rat, VarId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Direction {
    X,
    Y,
}

impl Direction {
    pub fn flip(self) -> Direction {
        match self {
            Direction::X => Direction::Y,
            Direction::Y => Direction::X,
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::X => "x",
            Direction::Y => "y",
        })
    }
}

impl std::str::FromStr for Direction {
    type Err = Error;
    fn from_str(s: &str) -> Result<Direction> {
        match s {
            "x" => Ok(Direction::X),
            "y" => Ok(Direction::Y),
            _ => Err(Error::Usage(format!("direction must be x or y, got `{s}`"))),
        }
    }
}

/// Variables an x-side expression of order `k` may use.
fn x_side_mask(max_order: u8) -> u64 {
    let ctx = Context::standard();
    let mut m = 0u64;
    for v in ctx.vars() {
        let ok = match v.kind {
            VarKind::XJet(k) => k <= max_order,
            VarKind::Param => true,
            VarKind::Transcendental | VarKind::Algebraic => {
                let deps = crate::expr::normal::symbol_dependencies(v.id);
                deps & !(context_jets_x(max_order) | params_mask()) == 0
            }
            _ => false,
        };
        if ok {
            m |= 1 << v.id;
        }
    }
    m
}

fn context_jets_x(max_order: u8) -> u64 {
    (0..=max_order).fold(0, |m, k| m | 1 << context::ux(k))
}

fn params_mask() -> u64 {
    Context::standard().params().fold(0, |m, v| m | 1 << v.id)
}

fn hyperbolic_mask() -> u64 {
    let ctx = Context::standard();
    let jets = 1u64 << U | 1 << context::ux(1) | 1 << context::uy(1);
    let mut m = jets | params_mask();
    for v in ctx.vars() {
        if matches!(v.kind, VarKind::Transcendental | VarKind::Algebraic)
            && crate::expr::normal::symbol_dependencies(v.id) & !(jets | params_mask()) == 0
        {
            m |= 1 << v.id;
        }
    }
    m
}

fn names_of(mask: u64) -> String {
    let ctx = Context::standard();
    (0..ctx.len()).filter(|i| mask & (1 << i) != 0).map(|i| ctx.name(i)).collect::<Vec<_>>().join(", ")
}

/// `u_xy = F(u_x, u_y, u)`.
#[derive(Clone, Debug)]
pub struct HyperbolicEq {
    pub id: String,
    pub f: Expr,
    pub bindings: BTreeMap<String, Rat>,
    nf: NormalForm,
}

impl HyperbolicEq {
    pub fn new(id: &str, f: Expr) -> Result<HyperbolicEq> {
        HyperbolicEq::with_bindings(id, f, BTreeMap::new())
    }

    pub fn with_bindings(id: &str, f: Expr, bindings: BTreeMap<String, Rat>) -> Result<HyperbolicEq> {
        let nf = normalize(&f)?;
        if nf.is_zero() {
            return Err(Error::Catalog(format!("{id}: F is identically zero")));
        }
        let bad = nf.mask() & !hyperbolic_mask();
        if bad != 0 {
            return Err(Error::Catalog(format!("{id}: F may only depend on u, u1, uy; found {}", names_of(bad))));
        }
        Ok(HyperbolicEq { id: id.to_string(), f, bindings, nf })
    }

    pub fn parse(id: &str, text: &str) -> Result<HyperbolicEq> {
        HyperbolicEq::new(id, crate::expr::parse(text)?)
    }

    pub fn nf(&self) -> &NormalForm {
        &self.nf
    }

    /// The mirrored equation `u_xy = F(u_y, u_x, u)`.
    pub fn swapped(&self) -> Result<HyperbolicEq> {
        let f = swap_xy_expr(&self.f)?;
        let nf = swap_xy(&self.nf)?;
        Ok(HyperbolicEq { id: self.id.clone(), f, bindings: self.bindings.clone(), nf })
    }
}

/// `u_t = u_5 + G(u_4, …, u)` (or its y-mirror).
#[derive(Clone, Debug)]
pub struct EvolutionEq {
    pub id: String,
    pub g: Expr,
    pub direction: Direction,
    pub bindings: BTreeMap<String, Rat>,
    nf: NormalForm,
}

impl EvolutionEq {
    pub fn new(id: &str, g: Expr, direction: Direction) -> Result<EvolutionEq> {
        EvolutionEq::with_bindings(id, g, direction, BTreeMap::new())
    }

    pub fn with_bindings(
        id: &str,
        g: Expr,
        direction: Direction,
        bindings: BTreeMap<String, Rat>,
    ) -> Result<EvolutionEq> {
        let nf = normalize(&g)?;
        let x_nf = match direction {
            Direction::X => nf.clone(),
            Direction::Y => swap_xy(&nf)?,
        };
        let bad = x_nf.mask() & !x_side_mask(4);
        if bad != 0 {
            return Err(Error::Catalog(format!(
                "{id}: G may only depend on u..u4 and their symbols; found {}",
                names_of(bad)
            )));
        }
        Ok(EvolutionEq { id: id.to_string(), g, direction, bindings, nf })
    }

    pub fn parse(id: &str, text: &str) -> Result<EvolutionEq> {
        EvolutionEq::new(id, crate::expr::parse(text)?, Direction::X)
    }

    pub fn nf(&self) -> &NormalForm {
        &self.nf
    }

    /// The same equation expressed in the other direction.
    pub fn swapped(&self) -> Result<EvolutionEq> {
        Ok(EvolutionEq {
            id: self.id.clone(),
            g: swap_xy_expr(&self.g)?,
            direction: self.direction.flip(),
            bindings: self.bindings.clone(),
            nf: swap_xy(&self.nf)?,
        })
    }
}

/// Jet space of one hyperbolic equation, with a memo of the images of
/// jet coordinates.
pub struct JetSpace {
    f: NormalForm,
    memo: RefCell<FxHashMap<(Direction, VarId), NormalForm>>,
    use_memo: bool,
}

impl JetSpace {
    pub fn new(eq: &HyperbolicEq) -> JetSpace {
        JetSpace::from_nf(eq.nf().clone())
    }

    pub fn from_nf(f: NormalForm) -> JetSpace {
        JetSpace { f, memo: RefCell::new(FxHashMap::default()), use_memo: true }
    }

    /// Same derivatives, recomputed every time.
    pub fn without_memo(mut self) -> JetSpace {
        self.use_memo = false;
        self
    }

    pub fn f(&self) -> &NormalForm {
        &self.f
    }

    /// Image of a single variable under `D_x` or `D_y`.
    pub fn d_var(&self, dir: Direction, v: VarId) -> Result<NormalForm> {
        if self.use_memo {
            if let Some(r) = self.memo.borrow().get(&(dir, v)) {
                return Ok(r.clone());
            }
        }
        let r = self.d_var_uncached(dir, v)?;
        if self.use_memo {
            self.memo.borrow_mut().insert((dir, v), r.clone());
        }
        Ok(r)
    }

    fn d_var_uncached(&self, dir: Direction, v: VarId) -> Result<NormalForm> {
        let ctx = Context::standard();
        match (ctx.kind(v), dir) {
            (VarKind::Param, _) => Ok(NormalForm::zero()),
            (VarKind::Aux, _) | (VarKind::AuxBase, _) => Err(Error::Auxiliary(ctx.name(v).to_string())),
            (VarKind::XJet(k), Direction::X) => {
                if k >= ctx.max_x_jet {
                    return Err(Error::JetOrder(format!("D_x(u{k}) exceeds max_x_jet = {}", ctx.max_x_jet)));
                }
                Ok(NormalForm::var(context::ux(k + 1)))
            }
            (VarKind::XJet(0), Direction::Y) => Ok(NormalForm::var(context::uy(1))),
            (VarKind::XJet(1), Direction::Y) => Ok(self.f.clone()),
            (VarKind::XJet(k), Direction::Y) => {
                let prev = self.d_var(Direction::Y, context::ux(k - 1))?;
                self.d_x(&prev)
            }
            (VarKind::YJet(k), Direction::Y) => {
                if k >= ctx.max_y_jet {
                    return Err(Error::JetOrder(format!("D_y(v{k}) exceeds max_y_jet = {}", ctx.max_y_jet)));
                }
                Ok(NormalForm::var(context::uy(k + 1)))
            }
            (VarKind::YJet(1), Direction::X) => Ok(self.f.clone()),
            (VarKind::YJet(k), Direction::X) => {
                let prev = self.d_var(Direction::X, context::uy(k - 1))?;
                self.d_y(&prev)
            }
            (VarKind::Transcendental, _) | (VarKind::Algebraic, _) => {
                let def = ctx.symbol(v).expect("symbol");
                let Some(arg) = def.argument else { return Ok(NormalForm::zero()) };
                let da = self.d_var(dir, arg)?;
                if da.is_zero() {
                    return Ok(da);
                }
                let ds = symbol_derivative(v).expect("derivative rule");
                Ok(ds.mul(&da))
            }
        }
    }

    pub fn d(&self, dir: Direction, e: &NormalForm) -> Result<NormalForm> {
        e.derivation(&mut |v| self.d_var(dir, v))
    }

    pub fn d_x(&self, e: &NormalForm) -> Result<NormalForm> {
        self.d(Direction::X, e)
    }

    pub fn d_y(&self, e: &NormalForm) -> Result<NormalForm> {
        self.d(Direction::Y, e)
    }

    pub fn d_x_n(&self, e: &NormalForm, n: usize) -> Result<NormalForm> {
        let mut r = e.clone();
        for _ in 0..n {
            r = self.d_x(&r)?;
        }
        Ok(r)
    }

    /// Expression-level wrappers.
    pub fn d_x_expr(&self, e: &Expr) -> Result<Expr> {
        Ok(self.d_x(&normalize(e)?)?.to_expr())
    }

    pub fn d_y_expr(&self, e: &Expr) -> Result<Expr> {
        Ok(self.d_y(&normalize(e)?)?.to_expr())
    }
}

fn mirror_of(v: VarId) -> Result<VarId> {
    let ctx = Context::standard();
    ctx.mirror(v).ok_or_else(|| Error::NoMirror(ctx.name(v).to_string()))
}

/// Exchange x and y: `u_k <-> v_k`, and each x-side symbol with its y-side
/// counterpart.
pub fn swap_xy(e: &NormalForm) -> Result<NormalForm> {
    let mask = e.mask();
    for v in 0..64 {
        if mask & (1 << v) != 0 {
            mirror_of(v)?;
        }
    }
    Ok(e.rename(&|v| Context::standard().mirror(v).unwrap()))
}

pub fn swap_xy_expr(e: &Expr) -> Result<Expr> {
    let mask = e.free_vars();
    let mut bindings = Vec::new();
    for v in 0..64 {
        if mask & (1 << v) != 0 {
            let m = mirror_of(v)?;
            if m != v {
                bindings.push((v, Expr::var(m)));
            }
        }
    }
    e.substitute(&bindings)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::context::{ux, uy, FA_X, FA_Y};
    use crate::expr::parse_normal;

    fn space(f: &str) -> JetSpace {
        JetSpace::new(&HyperbolicEq::parse("t", f).unwrap())
    }

    #[test]
    fn jet_shifts() {
        let j = space("exp(u)");
        assert_eq!(j.d_x(&NormalForm::var(ux(2))).unwrap(), NormalForm::var(ux(3)));
        assert_eq!(j.d_x(&NormalForm::var(uy(1))).unwrap(), parse_normal("exp(u)").unwrap());
        assert_eq!(j.d_y(&NormalForm::var(ux(1))).unwrap(), parse_normal("exp(u)").unwrap());
        assert_eq!(j.d_y(&NormalForm::var(ux(2))).unwrap(), parse_normal("u1*exp(u)").unwrap());
        assert_eq!(j.d_y(&NormalForm::var(uy(1))).unwrap(), NormalForm::var(uy(2)));
        assert_eq!(j.d_x_n(&NormalForm::var(0), 5).unwrap(), NormalForm::var(ux(5)));
    }

    #[test]
    fn chain_rule_through_fa() {
        let j = space("2*fa(uy)*u");
        let d = j.d_x(&NormalForm::var(FA_Y)).unwrap();
        assert_eq!(d, parse_normal("(uy - fa(uy))*u").unwrap());
    }

    #[test]
    fn jet_order_overflow() {
        let j = space("u");
        assert!(matches!(j.d_x(&NormalForm::var(ux(10))), Err(Error::JetOrder(_))));
    }

    #[test]
    fn swap_of_s1() {
        let f = parse_normal("2*fa(uy)*u").unwrap();
        assert_eq!(swap_xy(&f).unwrap(), parse_normal("2*fa(u1)*u").unwrap());
        assert_eq!(swap_xy(&swap_xy(&f).unwrap()).unwrap(), f);
        assert!(swap_xy(&NormalForm::var(ux(7))).is_err());
        assert_eq!(swap_xy(&NormalForm::var(FA_X)).unwrap(), NormalForm::var(FA_Y));
    }

    #[test]
    fn hyperbolic_variable_constraint() {
        assert!(HyperbolicEq::parse("bad", "u2").is_err());
        assert!(HyperbolicEq::parse("zero", "u - u").is_err());
        assert!(EvolutionEq::parse("bad", "u5").is_err());
        assert!(EvolutionEq::parse("ok", "u4*f(u1)").is_ok());
    }
}
