//! Cross-entry identities of the shipped catalog.

use std::collections::BTreeMap;

use hypsym::catalog::{parse_bindings, Catalog, Role};
use hypsym::expr::{normalize, parse, parse_normal, NormalForm};
use hypsym::jet::swap_xy;
use hypsym::verify::{determining_residual, extract_g_nf};

fn cat() -> Catalog {
    Catalog::embedded().unwrap()
}

fn hyp(c: &Catalog, id: &str, b: &str) -> NormalForm {
    c.hyperbolic(id, &parse_bindings(b).unwrap()).unwrap().nf().clone()
}

#[test]
fn final_list_matches_normalized_entries() {
    let c = cat();
    assert_eq!(hyp(&c, "final1", "-"), hyp(&c, "hyp4", "-"));
    assert_eq!(hyp(&c, "final1", "-"), hyp(&c, "S2", "a=1, b=1"));
    // final2 and final3 are written with x and y exchanged relative to S1, S3.
    assert_eq!(hyp(&c, "final2", "-"), swap_xy(&hyp(&c, "S1", "a=1")).unwrap());
    assert_eq!(hyp(&c, "final3", "-"), swap_xy(&hyp(&c, "S3", "a=1, b=0")).unwrap());
    assert_eq!(hyp(&c, "final4", "-"), hyp(&c, "S6", "a=1"));
}

#[test]
fn swap_relations_between_entries() {
    let c = cat();
    let s2 = hyp(&c, "S2", "-");
    assert_eq!(swap_xy(&s2).unwrap(), s2);
    let s6 = hyp(&c, "S6", "a=1");
    assert_eq!(swap_xy(&s6).unwrap(), s6);
    assert_eq!(hyp(&c, "S4", "a=1, b=0"), swap_xy(&hyp(&c, "S1", "a=1")).unwrap());
    assert_eq!(hyp(&c, "S5", "a=1, b=0"), swap_xy(&hyp(&c, "S3", "a=1, b=0")).unwrap());
    assert_eq!(swap_xy(&hyp(&c, "S1", "-")).unwrap(), parse_normal("2*fa(u1)*u").unwrap());
}

#[test]
fn transcription_gate() {
    let c = cat();
    let forms: Vec<NormalForm> =
        ["0", "-1/u1", "-1/(2*u1)", "(f(u1) - u1)/(2*f(u1)^2)"].iter().map(|s| parse_normal(s).unwrap()).collect();
    let evs = c.list(Some(Role::Evolution));
    assert_eq!(evs.len(), 15);
    for e in evs {
        let g = extract_g_nf(&c.evolution(&e.id, &BTreeMap::new()).unwrap()).unwrap();
        assert!(forms.contains(&g), "{}: g = {g}", e.id);
    }
}

#[test]
fn tzitzeica_symmetry_as_printed() {
    let c = cat();
    let ev12 = c.evolution("ev12", &BTreeMap::new()).unwrap();
    assert_eq!(*ev12.nf(), parse_normal("5*(u2 - u1^2)*u3 - 5*u1*u2^2 + u1^5").unwrap());
    assert_eq!(hyp(&c, "hyp4", "-"), parse_normal("exp(u) + exp(-2*u)").unwrap());
}

#[test]
fn catalog_expressions_round_trip_through_the_printer() {
    let c = cat();
    for e in c.entries().iter().filter(|e| e.role != Role::Transform) {
        let expr = e.expr.as_ref().unwrap();
        let again = parse(&expr.to_string()).unwrap();
        assert_eq!(normalize(&again).unwrap(), normalize(expr).unwrap(), "{}", e.id);
        let n = normalize(expr).unwrap();
        assert_eq!(parse_normal(&n.to_string()).unwrap(), n, "{}", e.id);
    }
}

#[test]
fn direction_duality() {
    let c = cat();
    let f = c.hyperbolic("hyp4", &BTreeMap::new()).unwrap();
    let g = c.evolution("ev12", &BTreeMap::new()).unwrap();
    let gy = g.swapped().unwrap();
    let direct = determining_residual(&f, &gy).unwrap().is_zero();
    let mirrored = determining_residual(&f.swapped().unwrap(), &g).unwrap().is_zero();
    assert!(direct && mirrored);
    let h3 = c.hyperbolic("hyp3", &BTreeMap::new()).unwrap();
    assert_eq!(
        determining_residual(&h3, &gy).unwrap().is_zero(),
        determining_residual(&h3.swapped().unwrap(), &g).unwrap().is_zero()
    );
}

#[test]
fn hyp3_is_not_paired_with_ev12() {
    let c = cat();
    let f = c.hyperbolic("hyp3", &BTreeMap::new()).unwrap();
    let g = c.evolution("ev12", &BTreeMap::new()).unwrap();
    assert!(!determining_residual(&f, &g).unwrap().is_zero());
}
