//! Randomized properties of normalization, differentiation and the jet
//! operators.

use std::collections::BTreeMap;

use proptest::prelude::*;

use hypsym::catalog::{Catalog, Role};
use hypsym::expr::{context, is_zero, normalize, parse, parse_normal, Context, NormalForm, VarId};
use hypsym::jet::{swap_xy, HyperbolicEq, JetSpace};
use hypsym::numeval::{eval_relative, point_seed, sample_point};

const LEAVES: &[&str] =
    &["u", "u1", "u2", "u3", "uy", "uyy", "2", "-3", "1/2", "exp(u)", "exp(-2*u)", "f(u1)", "sqrt(u1)", "fa(uy)", "a"];
const X_LEAVES: &[&str] = &["u", "u1", "u2", "u3", "3", "-1", "exp(u)", "f(u1)"];

fn expr_over(leaves: &'static [&'static str], depth: u32) -> impl Strategy<Value = String> {
    let leaf = prop::sample::select(leaves).prop_map(str::to_string);
    leaf.prop_recursive(depth, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a}) + ({b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a}) - ({b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a})*({b})")),
            inner.clone().prop_map(|a| format!("({a})/(1 + u1^2)")),
            inner.prop_map(|a| format!("({a})^2")),
        ]
    })
}

fn arb_expr() -> impl Strategy<Value = String> {
    expr_over(LEAVES, 4)
}

fn x_expr() -> impl Strategy<Value = String> {
    expr_over(X_LEAVES, 3)
}

fn nf(s: &str) -> NormalForm {
    parse_normal(s).unwrap()
}

fn catalog_fs() -> Vec<HyperbolicEq> {
    let cat = Catalog::embedded().unwrap();
    cat.list(Some(Role::Hyperbolic)).iter().map(|e| cat.hyperbolic(&e.id, &BTreeMap::new()).unwrap()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn normalization_is_idempotent(e in arb_expr()) {
        let n = nf(&e);
        prop_assert_eq!(&normalize(&n.to_expr()).unwrap(), &n);
        prop_assert_eq!(nf(&n.to_string()), n);
    }

    #[test]
    fn distributivity(a in arb_expr(), b in arb_expr(), c in arb_expr()) {
        prop_assert_eq!(nf(&format!("({a})*(({b}) + ({c}))")), nf(&format!("({a})*({b}) + ({a})*({c})")));
    }

    #[test]
    fn associativity(a in arb_expr(), b in arb_expr(), c in arb_expr()) {
        prop_assert_eq!(nf(&format!("(({a}) + ({b})) + ({c})")), nf(&format!("({a}) + (({b}) + ({c}))")));
        prop_assert_eq!(nf(&format!("(({a})*({b}))*({c})")), nf(&format!("({a})*(({b})*({c}))")));
    }

    #[test]
    fn mixed_partials_commute(e in arb_expr(), i in 0usize..4, j in 0usize..4) {
        let vars = [context::U, context::ux(1), context::uy(1), context::ux(2)];
        let n = nf(&e);
        let vw = n.diff(vars[i]).unwrap().diff(vars[j]).unwrap();
        let wv = n.diff(vars[j]).unwrap().diff(vars[i]).unwrap();
        prop_assert!(vw.sub(&wv).is_zero());
    }

    #[test]
    fn swap_is_an_involution(e in arb_expr()) {
        let n = nf(&e);
        prop_assert_eq!(swap_xy(&swap_xy(&n).unwrap()).unwrap(), n);
    }

    #[test]
    fn leibniz_and_linearity(a in x_expr(), b in x_expr(), k in 0usize..13) {
        let fs = catalog_fs();
        let js = JetSpace::new(&fs[k % fs.len()]);
        let (a, b) = (nf(&a), nf(&b));
        let prod = js.d_x(&a.mul(&b)).unwrap();
        let leibniz = a.mul(&js.d_x(&b).unwrap()).add(&b.mul(&js.d_x(&a).unwrap()));
        prop_assert!(prod.sub(&leibniz).is_zero());
        let sum = js.d_y(&a.add(&b)).unwrap();
        prop_assert!(sum.sub(&js.d_y(&a).unwrap().add(&js.d_y(&b).unwrap())).is_zero());
    }

    #[test]
    fn memo_is_transparent(e in x_expr(), k in 0usize..13) {
        let fs = catalog_fs();
        let f = &fs[k % fs.len()];
        let n = nf(&e);
        let with = JetSpace::new(f);
        let without = JetSpace::new(f).without_memo();
        prop_assert_eq!(with.d_y(&with.d_x(&n).unwrap()).unwrap(), without.d_y(&without.d_x(&n).unwrap()).unwrap());
    }

    #[test]
    fn exact_zero_implies_numeric_zero(a in arb_expr(), b in arb_expr()) {
        let z = nf(&format!("({a})*({b}) - ({b})*({a})"));
        prop_assert!(z.is_zero());
        let n = nf(&format!("({a})^2 - ({a})*({b})"));
        for i in 0..10 {
            let p = sample_point(&BTreeMap::new(), point_seed(11, i)).unwrap();
            let (_, rel) = eval_relative(&z, &p).unwrap();
            prop_assert!(rel < 1e-9);
            if n.is_zero() {
                prop_assert!(eval_relative(&n, &p).unwrap().1 < 1e-9);
            }
        }
    }
}

/// Raising the top x-order of a pure x-jet expression by exactly one.
#[test]
fn d_x_raises_order_by_one() {
    let js = JetSpace::from_nf(nf("exp(u)"));
    let top = |n: &NormalForm| (0..=10u8).rev().find(|&k| n.contains_var(context::ux(k))).unwrap_or(0);
    for (e, k) in [("u1^2*u3", 3), ("u2 + u1*u4", 4), ("f(u1)*u2", 2)] {
        let d = js.d_x(&nf(e)).unwrap();
        assert_eq!(top(&d), k + 1, "{e}");
    }
}

/// The implicit derivative of each defining relation vanishes, with the
/// chain rule assembled here from raw partial derivatives of the relation.
#[test]
fn relations_are_differentially_consistent() {
    let ctx = Context::standard();
    let bases: Vec<VarId> = (0..ctx.len())
        .filter(|&v| !ctx.is_param(v) && ctx.symbol(v).is_none() && ctx.kind(v) != hypsym::expr::context::VarKind::Aux)
        .collect();
    let mut checked = 0;
    for s in ctx.algebraic() {
        let Some(m) = ctx.relation_poly(s.id) else { continue };
        let vars: Vec<VarId> = (0..ctx.len()).filter(|&w| m.contains_var(w) && !ctx.is_param(w)).collect();
        for &v in &bases {
            let mut total = NormalForm::zero();
            for &w in &vars {
                total = total.add(&NormalForm::from_poly(m.deriv(w)).mul(&NormalForm::var(w).diff(v).unwrap()));
            }
            assert!(total.is_zero(), "relation of {} not consistent in {}: {total}", s.name, ctx.name(v));
        }
        checked += 1;
    }
    assert!(checked >= 10, "{checked}");
}

/// A nonzero verdict is confirmed numerically at most sample points.
#[test]
fn nonzero_is_numerically_nonzero() {
    for e in ["f(u1) - u1", "exp(u) - u", "sqrt(u1) - 1", "u1*u2 - uy", "fa(uy) + uy"] {
        let n = nf(e);
        assert!(!is_zero(&parse(e).unwrap()).unwrap());
        let big = (0..10)
            .filter(|&i| {
                let p = sample_point(&BTreeMap::new(), point_seed(5, i)).unwrap();
                eval_relative(&n, &p).unwrap().1 > 1e-6
            })
            .count();
        assert!(big >= 9, "{e}: {big}/10");
    }
}
