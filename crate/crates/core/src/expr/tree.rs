//! Immutable expression trees with shared subterms.

use std::fmt;
use std::ops;
use std::sync::{Arc, OnceLock};

use rustc_hash::FxHashMap;

use super::context::{Context, VarKind};
use super::normal::NormalForm;
use super::poly::{VarId, NVARS};
use super::rat::Rat;
use crate::error::{Error, Result};

#[derive(Debug, PartialEq, Eq, Hash)]
pub enum Node {
    Const(Rat),
    Var(VarId),
    Add(Vec<Expr>),
    Mul(Vec<Expr>),
    Pow(Expr, i32),
    Div(Expr, Expr),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Expr(Arc<Node>);

impl Expr {
    pub fn node(&self) -> &Node {
        &self.0
    }

    pub fn ptr(&self) -> *const Node {
        Arc::as_ptr(&self.0)
    }

    fn wrap(n: Node) -> Expr {
        Expr(Arc::new(n))
    }

    pub fn constant(c: Rat) -> Expr {
        Expr::wrap(Node::Const(c))
    }

    pub fn int(n: i64) -> Expr {
        Expr::constant(Rat::int(n))
    }

    pub fn zero() -> Expr {
        Expr::int(0)
    }

    pub fn one() -> Expr {
        Expr::int(1)
    }

    pub fn var(v: VarId) -> Expr {
        Expr::wrap(Node::Var(v))
    }

    /// Variable by registered name (jets, parameters, auxiliary names).
    pub fn named(name: &str) -> Result<Expr> {
        Context::standard()
            .lookup(name)
            .map(Expr::var)
            .ok_or_else(|| Error::UnknownIdentifier { pos: 0, name: name.to_string() })
    }

    pub fn as_const(&self) -> Option<&Rat> {
        match self.node() {
            Node::Const(c) => Some(c),
            _ => None,
        }
    }

    pub fn is_const_zero(&self) -> bool {
        self.as_const().map(|c| c.is_zero()).unwrap_or(false)
    }

    pub fn sum(items: Vec<Expr>) -> Expr {
        let mut out = Vec::with_capacity(items.len());
        let mut c = Rat::ZERO;
        for e in items {
            match e.node() {
                Node::Const(k) => c = &c + k,
                Node::Add(xs) => out.extend(xs.iter().cloned()),
                _ => out.push(e),
            }
        }
        if !c.is_zero() {
            out.push(Expr::constant(c));
        }
        match out.len() {
            0 => Expr::zero(),
            1 => out.pop().unwrap(),
            _ => Expr::wrap(Node::Add(out)),
        }
    }

    pub fn product(items: Vec<Expr>) -> Expr {
        let mut out = Vec::with_capacity(items.len());
        let mut c = Rat::ONE;
        for e in items {
            match e.node() {
                Node::Const(k) => c = &c * k,
                Node::Mul(xs) => out.extend(xs.iter().cloned()),
                _ => out.push(e),
            }
        }
        if c.is_zero() {
            return Expr::zero();
        }
        if !c.is_one() {
            out.insert(0, Expr::constant(c));
        }
        match out.len() {
            0 => Expr::one(),
            1 => out.pop().unwrap(),
            _ => Expr::wrap(Node::Mul(out)),
        }
    }

    pub fn pow(&self, k: i32) -> Expr {
        match (self.node(), k) {
            (_, 0) => Expr::one(),
            (_, 1) => self.clone(),
            (Node::Const(c), k) if !c.is_zero() || k > 0 => Expr::constant(c.pow(k)),
            _ => Expr::wrap(Node::Pow(self.clone(), k)),
        }
    }

    pub fn quotient(&self, d: &Expr) -> Expr {
        if let Some(c) = d.as_const() {
            if c.is_one() {
                return self.clone();
            }
            if !c.is_zero() {
                return Expr::product(vec![Expr::constant(c.recip()), self.clone()]);
            }
        }
        if self.is_const_zero() {
            return Expr::zero();
        }
        Expr::wrap(Node::Div(self.clone(), d.clone()))
    }

    pub fn scale(&self, c: Rat) -> Expr {
        Expr::product(vec![Expr::constant(c), self.clone()])
    }

    /// Bitmask of variables occurring in the tree.
    pub fn free_vars(&self) -> u64 {
        let mut memo: FxHashMap<*const Node, u64> = FxHashMap::default();
        free_rec(self, &mut memo)
    }

    pub fn contains_var(&self, v: VarId) -> bool {
        self.free_vars() & (1 << v) != 0
    }

    /// Partial derivative; symbols differentiate by their rules when `v` is
    /// their argument, every other variable is independent.
    pub fn diff(&self, v: VarId) -> Expr {
        let mut memo: FxHashMap<*const Node, Expr> = FxHashMap::default();
        diff_rec(self, v, &mut memo)
    }

    /// Derivation given its values on variables (chain rule on the tree).
    pub fn derivation(&self, dv: &mut dyn FnMut(VarId) -> Result<Expr>) -> Result<Expr> {
        let mut memo: FxHashMap<*const Node, Expr> = FxHashMap::default();
        let mut vmemo: FxHashMap<VarId, Expr> = FxHashMap::default();
        derivation_rec(self, dv, &mut memo, &mut vmemo)
    }

    /// Simultaneous substitution. A binding may mention its own variable
    /// (`u -> u - b`); longer cycles are rejected.
    pub fn substitute(&self, bindings: &[(VarId, Expr)]) -> Result<Expr> {
        check_acyclic(bindings)?;
        let mut table: [Option<&Expr>; NVARS] = [None; NVARS];
        for (v, e) in bindings {
            table[*v] = Some(e);
        }
        let mut memo: FxHashMap<*const Node, Expr> = FxHashMap::default();
        Ok(subst_rec(self, &table, &mut memo))
    }
}

fn free_rec(e: &Expr, memo: &mut FxHashMap<*const Node, u64>) -> u64 {
    if let Some(&m) = memo.get(&e.ptr()) {
        return m;
    }
    let m = match e.node() {
        Node::Const(_) => 0,
        Node::Var(v) => 1 << v,
        Node::Add(xs) | Node::Mul(xs) => xs.iter().fold(0, |m, x| m | free_rec(x, memo)),
        Node::Pow(b, _) => free_rec(b, memo),
        Node::Div(a, b) => free_rec(a, memo) | free_rec(b, memo),
    };
    memo.insert(e.ptr(), m);
    m
}

fn symbol_derivative_expr(s: VarId) -> Option<&'static Expr> {
    static TABLE: OnceLock<Vec<Option<Expr>>> = OnceLock::new();
    TABLE
        .get_or_init(|| {
            Context::standard()
                .vars()
                .iter()
                .map(|v| {
                    let text = v.symbol.as_ref()?.derivative?;
                    Some(super::parse::parse(text).expect("built-in derivative parses"))
                })
                .collect()
        })
        .get(s)
        .and_then(|x| x.as_ref())
}

fn var_partial(s: VarId, v: VarId) -> Expr {
    if s == v {
        return Expr::one();
    }
    let ctx = Context::standard();
    match ctx.symbol(s) {
        Some(def) if def.argument == Some(v) => symbol_derivative_expr(s).cloned().unwrap_or_else(Expr::zero),
        _ => Expr::zero(),
    }
}

fn product_rule(xs: &[Expr], ds: Vec<Expr>) -> Expr {
    let mut terms = Vec::new();
    for (i, d) in ds.into_iter().enumerate() {
        if d.is_const_zero() {
            continue;
        }
        let mut fs: Vec<Expr> = xs.to_vec();
        fs[i] = d;
        terms.push(Expr::product(fs));
    }
    Expr::sum(terms)
}

fn pow_rule(b: &Expr, k: i32, db: Expr) -> Expr {
    if db.is_const_zero() {
        return Expr::zero();
    }
    Expr::product(vec![Expr::int(k as i64), b.pow(k - 1), db])
}

fn quotient_rule(a: &Expr, b: &Expr, da: Expr, db: Expr) -> Expr {
    if db.is_const_zero() {
        return da.quotient(b);
    }
    let num = Expr::sum(vec![
        Expr::product(vec![da, b.clone()]),
        Expr::product(vec![Expr::int(-1), a.clone(), db]),
    ]);
    num.quotient(&b.pow(2))
}

fn diff_rec(e: &Expr, v: VarId, memo: &mut FxHashMap<*const Node, Expr>) -> Expr {
    if let Some(d) = memo.get(&e.ptr()) {
        return d.clone();
    }
    let d = match e.node() {
        Node::Const(_) => Expr::zero(),
        Node::Var(s) => var_partial(*s, v),
        Node::Add(xs) => Expr::sum(xs.iter().map(|x| diff_rec(x, v, memo)).collect()),
        Node::Mul(xs) => {
            let ds = xs.iter().map(|x| diff_rec(x, v, memo)).collect();
            product_rule(xs, ds)
        }
        Node::Pow(b, k) => {
            let db = diff_rec(b, v, memo);
            pow_rule(b, *k, db)
        }
        Node::Div(a, b) => {
            let da = diff_rec(a, v, memo);
            let db = diff_rec(b, v, memo);
            quotient_rule(a, b, da, db)
        }
    };
    memo.insert(e.ptr(), d.clone());
    d
}

fn derivation_rec(
    e: &Expr,
    dv: &mut dyn FnMut(VarId) -> Result<Expr>,
    memo: &mut FxHashMap<*const Node, Expr>,
    vmemo: &mut FxHashMap<VarId, Expr>,
) -> Result<Expr> {
    if let Some(d) = memo.get(&e.ptr()) {
        return Ok(d.clone());
    }
    let d = match e.node() {
        Node::Const(_) => Expr::zero(),
        Node::Var(s) => match vmemo.get(s) {
            Some(d) => d.clone(),
            None => {
                let d = dv(*s)?;
                vmemo.insert(*s, d.clone());
                d
            }
        },
        Node::Add(xs) => {
            let mut ds = Vec::with_capacity(xs.len());
            for x in xs {
                ds.push(derivation_rec(x, dv, memo, vmemo)?);
            }
            Expr::sum(ds)
        }
        Node::Mul(xs) => {
            let mut ds = Vec::with_capacity(xs.len());
            for x in xs {
                ds.push(derivation_rec(x, dv, memo, vmemo)?);
            }
            product_rule(xs, ds)
        }
        Node::Pow(b, k) => {
            let db = derivation_rec(b, dv, memo, vmemo)?;
            pow_rule(b, *k, db)
        }
        Node::Div(a, b) => {
            let da = derivation_rec(a, dv, memo, vmemo)?;
            let db = derivation_rec(b, dv, memo, vmemo)?;
            quotient_rule(a, b, da, db)
        }
    };
    memo.insert(e.ptr(), d.clone());
    Ok(d)
}

/// Chain-rule value of a symbol under a derivation acting on its argument.
pub fn symbol_chain(s: VarId, d_arg: &Expr) -> Option<Expr> {
    let def = Context::standard().symbol(s)?;
    def.argument?;
    let ds = symbol_derivative_expr(s)?.clone();
    Some(Expr::product(vec![ds, d_arg.clone()]))
}

fn check_acyclic(bindings: &[(VarId, Expr)]) -> Result<()> {
    let mut bound = 0u64;
    for (v, _) in bindings {
        bound |= 1 << v;
    }
    let deps: Vec<(VarId, u64)> =
        bindings.iter().map(|(v, e)| (*v, e.free_vars() & bound & !(1u64 << v))).collect();
    // depth-first search for a cycle of length >= 2
    let mut state = [0u8; NVARS];
    fn visit(v: VarId, deps: &[(VarId, u64)], state: &mut [u8; NVARS]) -> Option<VarId> {
        if state[v] == 1 {
            return Some(v);
        }
        if state[v] == 2 {
            return None;
        }
        state[v] = 1;
        if let Some((_, m)) = deps.iter().find(|(w, _)| *w == v) {
            for w in 0..NVARS {
                if m & (1 << w) != 0 {
                    if let Some(c) = visit(w, deps, state) {
                        return Some(c);
                    }
                }
            }
        }
        state[v] = 2;
        None
    }
    for (v, _) in &deps {
        if let Some(c) = visit(*v, &deps, &mut state) {
            return Err(Error::CyclicBinding(Context::standard().name(c).to_string()));
        }
    }
    Ok(())
}

fn subst_rec(e: &Expr, table: &[Option<&Expr>; NVARS], memo: &mut FxHashMap<*const Node, Expr>) -> Expr {
    if let Some(d) = memo.get(&e.ptr()) {
        return d.clone();
    }
    let out = match e.node() {
        Node::Const(_) => e.clone(),
        Node::Var(v) => table[*v].cloned().unwrap_or_else(|| e.clone()),
        Node::Add(xs) => Expr::sum(xs.iter().map(|x| subst_rec(x, table, memo)).collect()),
        Node::Mul(xs) => Expr::product(xs.iter().map(|x| subst_rec(x, table, memo)).collect()),
        Node::Pow(b, k) => subst_rec(b, table, memo).pow(*k),
        Node::Div(a, b) => subst_rec(a, table, memo).quotient(&subst_rec(b, table, memo)),
    };
    memo.insert(e.ptr(), out.clone());
    out
}

/// Canonical normal form of an expression.
pub fn normalize(e: &Expr) -> Result<NormalForm> {
    let mut memo: FxHashMap<*const Node, NormalForm> = FxHashMap::default();
    norm_rec(e, &mut memo)
}

fn norm_rec(e: &Expr, memo: &mut FxHashMap<*const Node, NormalForm>) -> Result<NormalForm> {
    if let Some(n) = memo.get(&e.ptr()) {
        return Ok(n.clone());
    }
    let n = match e.node() {
        Node::Const(c) => NormalForm::constant(c.clone()),
        Node::Var(v) => NormalForm::var(*v),
        Node::Add(xs) => {
            let mut acc = NormalForm::zero();
            for x in xs {
                acc = acc.add(&norm_rec(x, memo)?).checked()?;
            }
            acc
        }
        Node::Mul(xs) => {
            let mut acc = NormalForm::one();
            for x in xs {
                acc = acc.mul(&norm_rec(x, memo)?).checked()?;
                if acc.is_zero() {
                    break;
                }
            }
            acc
        }
        Node::Pow(b, k) => norm_rec(b, memo)?.pow(*k)?.checked()?,
        Node::Div(a, b) => {
            let d = norm_rec(b, memo)?;
            norm_rec(a, memo)?.div(&d)?.checked()?
        }
    };
    memo.insert(e.ptr(), n.clone());
    Ok(n)
}

pub fn is_zero(e: &Expr) -> Result<bool> {
    Ok(normalize(e)?.is_zero())
}

impl NormalForm {
    /// Expression tree with the same value: numerator terms over the
    /// product of denominator atoms.
    pub fn to_expr(&self) -> Expr {
        let poly_expr = |p: &super::poly::Poly| {
            let terms = p
                .terms()
                .iter()
                .map(|(m, c)| {
                    let mut fs = vec![Expr::constant(c.clone())];
                    for (v, k) in m.vars() {
                        fs.push(Expr::var(v).pow(k as i32));
                    }
                    Expr::product(fs)
                })
                .collect();
            Expr::sum(terms)
        };
        let num = poly_expr(self.num());
        if self.den().is_empty() {
            return num;
        }
        let den = Expr::product(self.den().iter().map(|a| poly_expr(&a.poly).pow(a.exp as i32)).collect());
        num.quotient(&den)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&super::print::print_expr(self))
    }
}

impl ops::Add for &Expr {
    type Output = Expr;
    fn add(self, o: &Expr) -> Expr {
        Expr::sum(vec![self.clone(), o.clone()])
    }
}

impl ops::Sub for &Expr {
    type Output = Expr;
    fn sub(self, o: &Expr) -> Expr {
        Expr::sum(vec![self.clone(), Expr::product(vec![Expr::int(-1), o.clone()])])
    }
}

impl ops::Mul for &Expr {
    type Output = Expr;
    fn mul(self, o: &Expr) -> Expr {
        Expr::product(vec![self.clone(), o.clone()])
    }
}

impl ops::Div for &Expr {
    type Output = Expr;
    fn div(self, o: &Expr) -> Expr {
        self.quotient(o)
    }
}

impl ops::Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::product(vec![Expr::int(-1), self.clone()])
    }
}

/// True for variables that may not be differentiated totally.
pub fn is_auxiliary(v: VarId) -> bool {
    Context::standard().kind(v) == VarKind::Aux
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::context::{param, ux, F_X};
    use crate::expr::parse::parse;

    #[test]
    fn builders_fold_constants() {
        let x = Expr::var(ux(1));
        assert_eq!(Expr::sum(vec![Expr::int(2), Expr::int(-2)]), Expr::zero());
        assert_eq!(Expr::product(vec![Expr::int(0), x.clone()]), Expr::zero());
        assert_eq!(x.pow(1), x);
    }

    #[test]
    fn diff_uses_symbol_rule() {
        let f = Expr::var(F_X);
        let d = normalize(&f.diff(ux(1))).unwrap();
        let expect = normalize(&parse("(u1 - f(u1))/(2*f(u1))").unwrap()).unwrap();
        assert_eq!(d, expect);
        assert!(normalize(&f.diff(ux(2))).unwrap().is_zero());
    }

    #[test]
    fn substitution_allows_self_reference_only() {
        let u = Expr::var(0);
        let b = Expr::var(param("b"));
        let e = parse("u^2").unwrap();
        let s = e.substitute(&[(0, &u - &b)]).unwrap();
        assert_eq!(normalize(&s).unwrap(), normalize(&parse("(u - b)^2").unwrap()).unwrap());
        let a = Expr::var(param("a"));
        let err = e.substitute(&[(param("a"), b.clone()), (param("b"), a)]);
        assert!(matches!(err, Err(Error::CyclicBinding(_))));
    }

    #[test]
    fn to_expr_round_trips() {
        let n = normalize(&parse("1/f(u1) + exp(-2*u)/(u1 - 1)").unwrap()).unwrap();
        assert_eq!(normalize(&n.to_expr()).unwrap(), n);
    }
}
