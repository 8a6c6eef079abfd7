//! The variable table: jet coordinates, special-function symbols, parameters
//! and auxiliary names, in a fixed global order.
//!
//! The order is also the monomial order used for printing and for the sign
//! convention of denominators: `u < u1 < … < u10 < uy < … < v6 < E < V < W
//! < L`, then the algebraic symbols, auxiliary names, and parameters sorted
//! alphabetically.

use std::collections::HashMap;
use std::sync::OnceLock;

use super::poly::{Poly, VarId, NVARS};
use super::rat::Rat;

pub const MAX_X_JET: u8 = 10;
pub const MAX_Y_JET: u8 = 6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum VarKind {
    /// `u_k = ∂^k u / ∂x^k`, `k = 0` is `u` itself
    XJet(u8),
    /// `v_k = ∂^k u / ∂y^k`, `k ≥ 1`
    YJet(u8),
    /// transcendental function of a jet variable (e^u, ln u1, ω(u))
    Transcendental,
    /// algebraic over the base variables, reduced by its relation
    Algebraic,
    /// free base variable with no jet meaning (the curve parameter V)
    AuxBase,
    /// placeholder bound by transform relations before any differentiation
    Aux,
    Param,
}

/// Defining data of an algebraic symbol. Every relation has a constant
/// leading coefficient in the symbol, so reduction never divides.
#[derive(Clone, Debug)]
pub enum Relation {
    /// `2s³ + 3A s² − A³ + k = 0`
    Cubic { arg: Poly, k: Poly },
    /// `s² − A = 0`
    Sqrt { arg: Poly },
    /// `s² − 4W³ − c = 0`
    WeierstrassPrime,
}

#[derive(Clone, Debug)]
pub struct SymbolDef {
    /// function-call spelling, e.g. `f`, `fa`, `sqrt`
    pub func: &'static str,
    /// the variable the symbol is differentiated against (None: constant)
    pub argument: Option<VarId>,
    /// `d(symbol)/d(argument)` in the expression grammar
    pub derivative: Option<&'static str>,
    pub relation: Option<Relation>,
}

impl SymbolDef {
    pub fn reduction_degree(&self) -> Option<u8> {
        match self.relation {
            Some(Relation::Cubic { .. }) => Some(3),
            Some(Relation::Sqrt { .. }) | Some(Relation::WeierstrassPrime) => Some(2),
            None => None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Variable {
    pub id: VarId,
    /// canonical printed form (`u3`, `uy`, `f(u1)`, `lambda1`)
    pub name: String,
    pub kind: VarKind,
    pub symbol: Option<SymbolDef>,
}

#[derive(Debug)]
pub struct Context {
    vars: Vec<Variable>,
    by_name: HashMap<String, VarId>,
    pub max_x_jet: u8,
    pub max_y_jet: u8,
}

pub const U: VarId = 0;

pub fn ux(k: u8) -> VarId {
    assert!(k <= MAX_X_JET);
    k as VarId
}

pub fn uy(k: u8) -> VarId {
    assert!((1..=MAX_Y_JET).contains(&k));
    (MAX_X_JET + k) as VarId
}

pub const E: VarId = 17;
pub const V: VarId = 18;
pub const W: VarId = 19;
pub const L: VarId = 20;
pub const F_X: VarId = 21;
pub const F_Y: VarId = 22;
pub const FA_Y: VarId = 23;
pub const FA_X: VarId = 24;
pub const FAB_Y: VarId = 25;
pub const FAB_X: VarId = 26;
pub const R_X: VarId = 27;
pub const R_Y: VarId = 28;
pub const RB_Y: VarId = 29;
pub const RB_X: VarId = 30;
pub const P: VarId = 31;
pub const SC: VarId = 32;

pub const AUX_NAMES: [&str; 6] = ["ev", "vx", "vy", "w", "wy", "phi"];
pub const PARAM_NAMES: [&str; 12] = [
    "C2", "a", "b", "c", "k", "k1", "k2", "lambda1", "lambda2", "mu", "mu1", "mu2",
];

const FIRST_AUX: VarId = 33;
const FIRST_PARAM: VarId = FIRST_AUX + AUX_NAMES.len();

static STANDARD: OnceLock<Context> = OnceLock::new();

/// Identifier of a parameter by name; panics on unknown names (internal use).
pub fn param(name: &str) -> VarId {
    let i = PARAM_NAMES.iter().position(|p| *p == name).expect("known parameter");
    FIRST_PARAM + i
}

pub fn aux(name: &str) -> VarId {
    let i = AUX_NAMES.iter().position(|p| *p == name).expect("known auxiliary name");
    FIRST_AUX + i
}

fn jet_name_x(k: u8) -> String {
    if k == 0 {
        "u".into()
    } else {
        format!("u{k}")
    }
}

fn jet_name_y(k: u8) -> String {
    match k {
        1 => "uy".into(),
        2 => "uyy".into(),
        3 => "uyyy".into(),
        _ => format!("v{k}"),
    }
}

impl Context {
    pub fn standard() -> &'static Context {
        STANDARD.get_or_init(Context::build)
    }

    fn build() -> Context {
        let a3 = Poly::var(param("a")).pow(3);
        let shift = |v: VarId| Poly::var(v).add(&Poly::var(param("b")));
        let mut vars: Vec<Variable> = Vec::new();
        let mut push = |name: String, kind: VarKind, symbol: Option<SymbolDef>| {
            let id = vars.len();
            vars.push(Variable { id, name, kind, symbol });
        };
        for k in 0..=MAX_X_JET {
            push(jet_name_x(k), VarKind::XJet(k), None);
        }
        for k in 1..=MAX_Y_JET {
            push(jet_name_y(k), VarKind::YJet(k), None);
        }
        let sym = |func, argument, derivative, relation| {
            Some(SymbolDef { func, argument: Some(argument), derivative: Some(derivative), relation })
        };
        push("exp(u)".into(), VarKind::Transcendental, sym("exp", U, "exp(u)", None));
        push("V".into(), VarKind::AuxBase, None);
        push("w(u)".into(), VarKind::Transcendental, sym("w", U, "wp(u)", None));
        push("ln(u1)".into(), VarKind::Transcendental, sym("ln", ux(1), "1/u1", None));

        let cubic = |arg: Poly, k: Poly| Some(Relation::Cubic { arg, k });
        let one = Poly::one();
        push(
            "f(u1)".into(),
            VarKind::Algebraic,
            sym("f", ux(1), "(u1 - f(u1))/(2*f(u1))", cubic(Poly::var(ux(1)), one.clone())),
        );
        push(
            "f(uy)".into(),
            VarKind::Algebraic,
            sym("f", uy(1), "(uy - f(uy))/(2*f(uy))", cubic(Poly::var(uy(1)), one.clone())),
        );
        push(
            "fa(uy)".into(),
            VarKind::Algebraic,
            sym("fa", uy(1), "(uy - fa(uy))/(2*fa(uy))", cubic(Poly::var(uy(1)), a3.clone())),
        );
        push(
            "fa(u1)".into(),
            VarKind::Algebraic,
            sym("fa", ux(1), "(u1 - fa(u1))/(2*fa(u1))", cubic(Poly::var(ux(1)), a3.clone())),
        );
        push(
            "fa(uy+b)".into(),
            VarKind::Algebraic,
            sym("fa", uy(1), "(uy + b - fa(uy+b))/(2*fa(uy+b))", cubic(shift(uy(1)), a3.clone())),
        );
        push(
            "fa(u1+b)".into(),
            VarKind::Algebraic,
            sym("fa", ux(1), "(u1 + b - fa(u1+b))/(2*fa(u1+b))", cubic(shift(ux(1)), a3.clone())),
        );
        let sqrt = |arg: Poly| Some(Relation::Sqrt { arg });
        push(
            "sqrt(u1)".into(),
            VarKind::Algebraic,
            sym("sqrt", ux(1), "1/(2*sqrt(u1))", sqrt(Poly::var(ux(1)))),
        );
        push(
            "sqrt(uy)".into(),
            VarKind::Algebraic,
            sym("sqrt", uy(1), "1/(2*sqrt(uy))", sqrt(Poly::var(uy(1)))),
        );
        push(
            "sqrt(uy+b)".into(),
            VarKind::Algebraic,
            sym("sqrt", uy(1), "1/(2*sqrt(uy+b))", sqrt(shift(uy(1)))),
        );
        push(
            "sqrt(u1+b)".into(),
            VarKind::Algebraic,
            sym("sqrt", ux(1), "1/(2*sqrt(u1+b))", sqrt(shift(ux(1)))),
        );
        push(
            "wp(u)".into(),
            VarKind::Algebraic,
            sym("wp", U, "6*w(u)^2", Some(Relation::WeierstrassPrime)),
        );
        push(
            "sqrt(c)".into(),
            VarKind::Algebraic,
            Some(SymbolDef {
                func: "sqrt",
                argument: None,
                derivative: None,
                relation: sqrt(Poly::var(param("c"))),
            }),
        );
        for n in AUX_NAMES {
            push(n.into(), VarKind::Aux, None);
        }
        for n in PARAM_NAMES {
            push(n.into(), VarKind::Param, None);
        }
        assert!(vars.len() <= NVARS);
        debug_assert_eq!(vars[E].name, "exp(u)");
        debug_assert_eq!(vars[SC].name, "sqrt(c)");
        debug_assert_eq!(vars[FIRST_PARAM].name, "C2");

        let mut by_name = HashMap::new();
        for v in &vars {
            if v.symbol.is_none() {
                by_name.insert(v.name.clone(), v.id);
            }
        }
        for k in 0..=MAX_X_JET {
            by_name.insert(format!("u{k}"), ux(k));
        }
        for k in 1..=MAX_Y_JET {
            by_name.insert(format!("v{k}"), uy(k));
        }
        by_name.insert("ux".into(), ux(1));
        by_name.insert("uxx".into(), ux(2));
        by_name.insert("uxxx".into(), ux(3));
        Context { vars, by_name, max_x_jet: MAX_X_JET, max_y_jet: MAX_Y_JET }
    }

    pub fn vars(&self) -> &[Variable] {
        &self.vars
    }

    pub fn var(&self, id: VarId) -> &Variable {
        &self.vars[id]
    }

    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }

    /// Plain identifier lookup (jets, parameters, auxiliary names).
    pub fn lookup(&self, name: &str) -> Option<VarId> {
        self.by_name.get(name).copied()
    }

    pub fn name(&self, id: VarId) -> &str {
        &self.vars[id].name
    }

    pub fn kind(&self, id: VarId) -> VarKind {
        self.vars[id].kind
    }

    pub fn symbol(&self, id: VarId) -> Option<&SymbolDef> {
        self.vars[id].symbol.as_ref()
    }

    pub fn params(&self) -> impl Iterator<Item = &Variable> {
        self.vars.iter().filter(|v| v.kind == VarKind::Param)
    }

    /// Symbols spelled `func(...)`.
    pub fn symbols_named<'a>(&'a self, func: &'a str) -> impl Iterator<Item = &'a Variable> + 'a {
        self.vars.iter().filter(move |v| v.symbol.as_ref().map(|s| s.func == func).unwrap_or(false))
    }

    pub fn algebraic(&self) -> impl Iterator<Item = &Variable> {
        self.vars.iter().filter(|v| v.kind == VarKind::Algebraic)
    }

    /// Bitmask of algebraic symbols.
    pub fn algebraic_mask(&self) -> u64 {
        self.algebraic().fold(0, |m, v| m | (1 << v.id))
    }

    pub fn is_param(&self, id: VarId) -> bool {
        self.vars[id].kind == VarKind::Param
    }

    /// The relation polynomial `M(s, …)` of an algebraic symbol.
    pub fn relation_poly(&self, id: VarId) -> Option<Poly> {
        let s = Poly::var(id);
        let rel = self.symbol(id)?.relation.as_ref()?;
        Some(match rel {
            Relation::Cubic { arg, k } => s
                .pow(3)
                .scale(&Rat::int(2))
                .add(&arg.mul(&s.pow(2)).scale(&Rat::int(3)))
                .sub(&arg.pow(3))
                .add(k),
            Relation::Sqrt { arg } => s.pow(2).sub(arg),
            Relation::WeierstrassPrime => s
                .pow(2)
                .sub(&Poly::var(W).pow(3).scale(&Rat::int(4)))
                .sub(&Poly::var(param("c"))),
        })
    }

    /// x ↔ y mirror of a variable, if one is registered.
    pub fn mirror(&self, id: VarId) -> Option<VarId> {
        Some(match self.vars[id].kind {
            VarKind::XJet(0) => id,
            VarKind::XJet(k) => {
                if k > MAX_Y_JET {
                    return None;
                }
                uy(k)
            }
            VarKind::YJet(k) => ux(k),
            _ => match id {
                F_X => F_Y,
                F_Y => F_X,
                FA_Y => FA_X,
                FA_X => FA_Y,
                FAB_Y => FAB_X,
                FAB_X => FAB_Y,
                R_X => R_Y,
                R_Y => R_X,
                RB_Y => RB_X,
                RB_X => RB_Y,
                _ => id,
            },
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_are_unique_and_ordered() {
        let ctx = Context::standard();
        let mut names: Vec<&str> = ctx.vars().iter().map(|v| v.name.as_str()).collect();
        let n = names.len();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), n);
        let params: Vec<&str> = ctx.params().map(|v| v.name.as_str()).collect();
        let mut sorted = params.clone();
        sorted.sort();
        assert_eq!(params, sorted);
        assert_eq!(ctx.lookup("u0"), Some(U));
        assert_eq!(ctx.lookup("u"), Some(U));
        assert_eq!(ctx.lookup("v2"), ctx.lookup("uyy"));
    }

    #[test]
    fn mirror_is_an_involution() {
        let ctx = Context::standard();
        for v in ctx.vars() {
            if let Some(m) = ctx.mirror(v.id) {
                assert_eq!(ctx.mirror(m), Some(v.id), "{}", v.name);
            }
        }
        assert_eq!(ctx.mirror(ux(7)), None);
    }
}
