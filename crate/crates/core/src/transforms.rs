//! Substitutions that relate catalog equations to each other and to the
//! Tzitzeica equation.
//!
//! Three kinds of definitions are supported:
//!
//! * `potential`: a new unknown `v` given implicitly by `e^v = ev`, with
//!   `v_x` either stated (`vx = …`) or taken as `D_x(ev)/ev`. The target
//!   `v_xy = T(ev)` is checked in the jet space of the source equation,
//!   with undetermined constants (`unknowns:`) fitted by a linear solve.
//! * `identities`: let-bindings followed by expressions that must vanish;
//!   `dx(name)` and `dy(name)` denote total derivatives of a binding.
//! * `equivalence`: a point change applied to one equation, optionally
//!   followed by the x/y swap, must reproduce another equation.
//!
//! Each definition carries conventions, the finite set of sign and branch
//! alternatives that are tried one by one.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::catalog::{parse_bindings, Catalog, CatalogEntry, Role};
use crate::error::{Error, Result};
use crate::expr::context::{self, Context, VarKind};
use crate::expr::{normalize, parse, parse_normal, Expr, NormalForm, Poly, Rat, VarId};
use crate::jet::{swap_xy, Direction, JetSpace};
use crate::verify::failing_coefficients;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TransformKind {
    Potential,
    Identities,
    Equivalence,
}

#[derive(Clone, Debug)]
pub struct Convention {
    pub name: String,
    pub bindings: Vec<(String, String)>,
}

#[derive(Clone, Debug)]
pub struct TransformDef {
    pub id: String,
    pub kind: TransformKind,
    pub source: String,
    pub source_bindings: BTreeMap<String, Rat>,
    pub relations: Vec<(String, String)>,
    pub target: Option<String>,
    pub target_bindings: BTreeMap<String, Rat>,
    pub unknowns: Vec<String>,
    pub conventions: Vec<Convention>,
    pub checks: Vec<String>,
    pub scale: Option<String>,
    pub swap: bool,
    pub investigative: bool,
}

fn split_binding(s: &str) -> Result<(String, String)> {
    let (k, v) = s.split_once('=').ok_or_else(|| Error::Catalog(format!("expected `name = expr`, got `{s}`")))?;
    Ok((k.trim().to_string(), v.trim().to_string()))
}

impl TransformDef {
    pub fn from_entry(e: &CatalogEntry) -> Result<TransformDef> {
        if e.role != Role::Transform {
            return Err(Error::Usage(format!("`{}` is not a transform", e.id)));
        }
        let kind = match e.field("kind") {
            Some("potential") => TransformKind::Potential,
            Some("identities") => TransformKind::Identities,
            Some("equivalence") => TransformKind::Equivalence,
            k => return Err(Error::Catalog(format!("{}: unknown transform kind {k:?}", e.id))),
        };
        let source = e.field("source").ok_or_else(|| Error::Catalog(format!("{}: missing `source:`", e.id)))?;
        let relations = e.block("relations").iter().map(|l| split_binding(l)).collect::<Result<Vec<_>>>()?;
        let ctx = Context::standard();
        for (name, _) in &relations {
            if ctx.lookup(name).is_none() {
                return Err(Error::Catalog(format!("{}: relation for unregistered name `{name}`", e.id)));
            }
        }
        let mut conventions = Vec::new();
        for line in e.block("conventions") {
            let (name, rest) =
                line.split_once(':').ok_or_else(|| Error::Catalog(format!("{}: bad convention `{line}`", e.id)))?;
            let bindings = rest
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(split_binding)
                .collect::<Result<Vec<_>>>()?;
            conventions.push(Convention { name: name.trim().to_string(), bindings });
        }
        if conventions.is_empty() {
            conventions.push(Convention { name: "as-stated".into(), bindings: Vec::new() });
        }
        let list = |k: &str| -> Vec<String> {
            e.field(k)
                .map(|s| s.split(',').map(|x| x.trim().to_string()).filter(|x| !x.is_empty()).collect())
                .unwrap_or_default()
        };
        Ok(TransformDef {
            id: e.id.clone(),
            kind,
            source: source.to_string(),
            source_bindings: parse_bindings(e.field("source-bindings").unwrap_or(""))?,
            relations,
            target: e.field("target").map(str::to_string),
            target_bindings: parse_bindings(e.field("target-bindings").unwrap_or(""))?,
            unknowns: list("unknowns"),
            conventions,
            checks: e.block("checks").to_vec(),
            scale: e.field("scale").map(str::to_string),
            swap: e.field("swap") == Some("yes"),
            investigative: e.field("investigative") == Some("yes"),
        })
    }
}

/// Outcome of one convention.
#[derive(Clone, Debug, Default)]
pub struct ConventionResult {
    pub name: String,
    pub residual_is_zero: bool,
    pub residual_term_count: usize,
    /// Printed residual (or the first failing coefficients when large).
    pub residual: String,
    pub fitted: Vec<(String, String)>,
    /// `D_y(v_x) − D_x(v_y)` when `v_x` is stated explicitly.
    pub compatibility: Option<String>,
    pub error: Option<String>,
    /// Per-check verdicts for the identities kind.
    pub checks: Vec<(String, bool)>,
}

#[derive(Clone, Debug)]
pub struct TransformReport {
    pub id: String,
    pub investigative: bool,
    /// Constants fitted with every unknown left free.
    pub fitted: Option<Vec<(String, String)>>,
    pub conventions: Vec<ConventionResult>,
}

impl TransformReport {
    pub fn verified(&self) -> Vec<&str> {
        self.conventions.iter().filter(|c| c.residual_is_zero).map(|c| c.name.as_str()).collect()
    }

    /// At least one convention verifies; investigative reports always pass
    /// once every convention has been evaluated.
    pub fn passed(&self) -> bool {
        self.investigative || !self.verified().is_empty()
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "transform {}{}", self.id, if self.investigative { " (investigative)" } else { "" });
        if let Some(f) = &self.fitted {
            let shown: Vec<String> = f.iter().map(|(k, v)| format!("{k} = {v}")).collect();
            let _ = writeln!(s, "  fitted: {}", if shown.is_empty() { "none".into() } else { shown.join(", ") });
        }
        for c in &self.conventions {
            let verdict = match (&c.error, c.residual_is_zero) {
                (Some(_), _) => "ERROR",
                (None, true) => "ZERO",
                (None, false) => "NONZERO",
            };
            let _ = writeln!(s, "  convention {}: {verdict} ({} terms)", c.name, c.residual_term_count);
            if let Some(e) = &c.error {
                let _ = writeln!(s, "    error: {e}");
            } else if !c.residual_is_zero {
                let _ = writeln!(s, "    residual: {}", c.residual);
            }
            for (k, v) in &c.fitted {
                let _ = writeln!(s, "    fitted {k} = {v}");
            }
            if let Some(x) = &c.compatibility {
                let _ = writeln!(s, "    compatibility D_y(v_x) - D_x(v_y) = {x}");
            }
            for (chk, ok) in &c.checks {
                let _ = writeln!(s, "    [{}] {chk}", if *ok { "ok" } else { "FAIL" });
            }
        }
        s
    }

    pub fn to_structured(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "transform: {}", self.id);
        let _ = writeln!(s, "investigative: {}", self.investigative);
        if let Some(f) = &self.fitted {
            for (k, v) in f {
                let _ = writeln!(s, "fitted: {k} = {v}");
            }
        }
        for c in &self.conventions {
            let _ = writeln!(s, "convention: {}", c.name);
            let _ = writeln!(s, "  residual_is_zero: {}", c.residual_is_zero);
            let _ = writeln!(s, "  residual_term_count: {}", c.residual_term_count);
            if let Some(e) = &c.error {
                let _ = writeln!(s, "  error: {e}");
            }
            for (k, v) in &c.fitted {
                let _ = writeln!(s, "  fitted: {k} = {v}");
            }
            if let Some(x) = &c.compatibility {
                let _ = writeln!(s, "  compatibility: {x}");
            }
            for (chk, ok) in &c.checks {
                let _ = writeln!(s, "  check: {ok} {chk}");
            }
        }
        s.push_str("end\n");
        s
    }
}

/// `(f + u1)²(2f − u1) + 1` with `u1` and `f` replaced by the curve
/// parametrization in `V`.
pub fn check_parametrization() -> Result<NormalForm> {
    let rel = parse("(f(u1) + u1)^2*(2*f(u1) - u1) + 1")?;
    let bindings = [
        (context::ux(1), parse("(2*V + V^(-2))/3")?),
        (context::F_X, parse("(V - V^(-2))/3")?),
    ];
    normalize(&rel.substitute(&bindings)?)
}

/// The `f_a` relation with `f_a = a φ` and argument `a s`, where `φ = f(s)`.
pub fn check_scaling_law() -> Result<NormalForm> {
    parse_normal("(a*f(u1) + a*u1)^2*(2*a*f(u1) - a*u1) + a^3")
}

fn resolve_text(text: &str, js: &JetSpace, lets: &[(VarId, NormalForm)]) -> Result<String> {
    let ctx = Context::standard();
    let mut out = String::new();
    let mut rest = text;
    while let Some(i) = rest.find('d') {
        let tail = &rest[i..];
        let is_word_start = i == 0 || !rest.as_bytes()[i - 1].is_ascii_alphanumeric();
        let dir = if tail.starts_with("dx(") {
            Some(Direction::X)
        } else if tail.starts_with("dy(") {
            Some(Direction::Y)
        } else {
            None
        };
        match (dir, is_word_start, tail.find(')')) {
            (Some(dir), true, Some(close)) => {
                let name = tail[3..close].trim();
                let id = ctx.lookup(name).ok_or_else(|| Error::Catalog(format!("unknown name `{name}` in check")))?;
                let value = lets
                    .iter()
                    .find(|(v, _)| *v == id)
                    .map(|(_, n)| n.clone())
                    .ok_or_else(|| Error::Catalog(format!("`{name}` is not bound")))?;
                out.push_str(&rest[..i]);
                out.push_str(&format!("({})", js.d(dir, &value)?));
                rest = &tail[close + 1..];
            }
            _ => {
                out.push_str(&rest[..=i]);
                rest = &rest[i + 1..];
            }
        }
    }
    out.push_str(rest);
    Ok(out)
}

fn aux_id(name: &str) -> Result<VarId> {
    let ctx = Context::standard();
    match ctx.lookup(name) {
        Some(id) if ctx.kind(id) == VarKind::Aux => Ok(id),
        _ => Err(Error::Catalog(format!("`{name}` is not an auxiliary name"))),
    }
}

fn param_id(name: &str) -> Result<VarId> {
    let ctx = Context::standard();
    match ctx.lookup(name) {
        Some(id) if ctx.is_param(id) => Ok(id),
        _ => Err(Error::Catalog(format!("`{name}` is not a parameter"))),
    }
}

/// Solves `Σ c_ij x_j = b_i` over the field of normal forms. `None` when
/// the system is inconsistent or underdetermined.
pub fn solve_linear(rows: Vec<(Vec<NormalForm>, NormalForm)>, n: usize) -> Result<Option<Vec<NormalForm>>> {
    let mut rows = rows;
    let mut pivots = Vec::new();
    let mut r0 = 0;
    for col in 0..n {
        let Some(p) = (r0..rows.len()).find(|&i| !rows[i].0[col].is_zero()) else { continue };
        rows.swap(r0, p);
        let inv = rows[r0].0[col].inv()?;
        let (pc, pb) = {
            let (c, b) = &rows[r0];
            (c.iter().map(|x| x.mul(&inv)).collect::<Vec<_>>(), b.mul(&inv))
        };
        rows[r0] = (pc.clone(), pb.clone());
        for i in 0..rows.len() {
            if i == r0 || rows[i].0[col].is_zero() {
                continue;
            }
            let k = rows[i].0[col].clone();
            let c: Vec<NormalForm> = rows[i].0.iter().zip(&pc).map(|(x, y)| x.sub(&k.mul(y))).collect();
            let b = rows[i].1.sub(&k.mul(&pb));
            rows[i] = (c, b);
        }
        pivots.push((r0, col));
        r0 += 1;
    }
    if rows[r0..].iter().any(|(_, b)| !b.is_zero()) || pivots.len() < n {
        return Ok(None);
    }
    let mut x = vec![NormalForm::zero(); n];
    for (r, c) in pivots {
        x[c] = rows[r].1.clone();
    }
    Ok(Some(x))
}

/// Fits the unknown parameters of a residual that is linear in them.
fn fit(r: &NormalForm, unknowns: &[VarId]) -> Result<Option<Vec<NormalForm>>> {
    let ctx = Context::standard();
    let keep = (0..ctx.len()).filter(|&v| !ctx.is_param(v)).fold(0u64, |m, v| m | 1 << v);
    let mut rows = Vec::new();
    for (_, coeff) in r.split_numerator(keep) {
        let mut cs = Vec::new();
        let mut rest = coeff.clone();
        for &k in unknowns {
            let by = rest.coeffs_in(k);
            if by.keys().any(|&d| d != 0 && d != 1) {
                return Err(Error::Unsupported("residual is not linear in the unknown constants".into()));
            }
            cs.push(by.get(&1).cloned().unwrap_or_else(Poly::zero));
            rest = by.get(&0).cloned().unwrap_or_else(Poly::zero);
        }
        for (i, c) in cs.iter().enumerate() {
            if unknowns.iter().enumerate().any(|(j, &k)| j != i && c.contains_var(k)) {
                return Err(Error::Unsupported("unknown constants multiply each other".into()));
            }
        }
        rows.push((cs.into_iter().map(NormalForm::from_poly).collect(), NormalForm::from_poly(rest).neg()));
    }
    if rows.is_empty() {
        return Ok(None);
    }
    solve_linear(rows, unknowns.len())
}

struct Potential<'a> {
    def: &'a TransformDef,
    cat: &'a Catalog,
}

impl Potential<'_> {
    fn run(&self, conv: &Convention) -> Result<ConventionResult> {
        let def = self.def;
        let mut source_bindings = def.source_bindings.clone();
        let mut relations: BTreeMap<String, String> = def.relations.iter().cloned().collect();
        let mut fixed: Vec<(VarId, NormalForm)> = Vec::new();
        let src = self.cat.entry(&def.source)?;
        for (k, v) in &conv.bindings {
            if src.param(k).is_some() && !def.unknowns.contains(k) {
                let (name, value) = crate::catalog::parse_binding(&format!("{k}={v}"))?;
                source_bindings.insert(name, value);
            } else if def.unknowns.contains(k) {
                fixed.push((param_id(k)?, parse_normal(v)?));
            } else {
                aux_id(k)?;
                relations.insert(k.clone(), v.clone());
            }
        }
        let f = self.cat.hyperbolic(&def.source, &source_bindings)?;
        let js = JetSpace::new(&f);
        let smap = crate::catalog::binding_map(&source_bindings)?;
        let rel = |name: &str| -> Result<Option<NormalForm>> {
            match relations.get(name) {
                None => Ok(None),
                Some(t) => Ok(Some(parse_normal(t)?.substitute(&smap)?)),
            }
        };
        let phi = rel("ev")?.ok_or_else(|| Error::Catalog(format!("{}: missing relation for `ev`", def.id)))?;
        let vx_stated = rel("vx")?;
        let vx = match &vx_stated {
            Some(v) => v.clone(),
            None => js.d_x(&phi)?.div(&phi)?,
        };
        let vxy = js.d_y(&vx)?;
        let target_text = def.target.as_ref().ok_or_else(|| Error::Catalog(format!("{}: missing `target:`", def.id)))?;
        let target = parse_normal(target_text)?.substitute(&smap)?.substitute(&[(context::aux("ev"), phi.clone())])?;
        let r = vxy.sub(&target).checked()?;
        let r = r.substitute(&fixed)?;
        let free: Vec<VarId> =
            def.unknowns.iter().map(|k| param_id(k)).collect::<Result<Vec<_>>>()?.into_iter().filter(|&k| r.contains_var(k)).collect();
        let mut out = ConventionResult { name: conv.name.clone(), ..Default::default() };
        let r = if free.is_empty() {
            r
        } else {
            match fit(&r, &free)? {
                Some(vals) => {
                    let ctx = Context::standard();
                    let pairs: Vec<(VarId, NormalForm)> = free.iter().copied().zip(vals).collect();
                    out.fitted = pairs.iter().map(|(k, v)| (ctx.name(*k).to_string(), v.to_string())).collect();
                    r.substitute(&pairs)?
                }
                None => r,
            }
        };
        if vx_stated.is_some() {
            let vy = js.d_y(&phi)?.div(&phi)?;
            out.compatibility = Some(vxy.sub(&js.d_x(&vy)?).checked()?.to_string());
        }
        fill_residual(&mut out, &r)?;
        Ok(out)
    }

    fn free_fit(&self) -> Result<Option<Vec<(String, String)>>> {
        if self.def.unknowns.is_empty() {
            return Ok(None);
        }
        let c = self.run(&Convention { name: "free".into(), bindings: Vec::new() })?;
        Ok(Some(if c.residual_is_zero { c.fitted } else { Vec::new() }))
    }
}

fn fill_residual(out: &mut ConventionResult, r: &NormalForm) -> Result<()> {
    out.residual_is_zero = r.is_zero();
    out.residual_term_count = r.term_count();
    out.residual = if r.term_count() <= 12 {
        r.to_string()
    } else {
        let fc = failing_coefficients(r)?;
        let shown: Vec<String> = fc.iter().take(4).map(|(m, c)| format!("[{m}] {c}")).collect();
        format!("{} jet coefficients, first: {}", fc.len(), shown.join("; "))
    };
    Ok(())
}

fn run_identities(def: &TransformDef, cat: &Catalog) -> Result<ConventionResult> {
    let f = cat.hyperbolic(&def.source, &def.source_bindings)?;
    let js = JetSpace::new(&f);
    let smap = crate::catalog::binding_map(&def.source_bindings)?;
    let mut lets: Vec<(VarId, Expr)> = Vec::new();
    let mut lets_nf: Vec<(VarId, NormalForm)> = Vec::new();
    for (name, text) in &def.relations {
        let id = aux_id(name)?;
        let e = parse(text)?.substitute(&lets)?;
        let n = normalize(&e)?.substitute(&smap)?;
        lets.push((id, e));
        lets_nf.push((id, n));
    }
    let mut out = ConventionResult { name: "as-stated".into(), residual_is_zero: true, ..Default::default() };
    let mut total = NormalForm::zero();
    for chk in &def.checks {
        let text = resolve_text(chk, &js, &lets_nf)?;
        let value = normalize(&parse(&text)?.substitute(&lets)?)?.substitute(&smap)?;
        out.checks.push((chk.clone(), value.is_zero()));
        out.residual_is_zero &= value.is_zero();
        out.residual_term_count += value.term_count();
        if !value.is_zero() {
            total = total.add(&value);
        }
    }
    out.residual = total.to_string();
    Ok(out)
}

fn run_equivalence(def: &TransformDef, cat: &Catalog) -> Result<ConventionResult> {
    let f = cat.hyperbolic(&def.source, &def.source_bindings)?;
    let subs = def
        .relations
        .iter()
        .map(|(k, v)| {
            let id = Context::standard().lookup(k).ok_or_else(|| Error::Catalog(format!("unknown `{k}`")))?;
            Ok((id, parse_normal(v)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut lhs = f.nf().substitute(&subs)?;
    if let Some(s) = &def.scale {
        lhs = lhs.mul(&parse_normal(s)?);
    }
    if def.swap {
        lhs = swap_xy(&lhs)?;
    }
    let target_id = def.target.as_ref().ok_or_else(|| Error::Catalog(format!("{}: missing `target:`", def.id)))?;
    let rhs = cat.hyperbolic(target_id, &def.target_bindings)?;
    let r = lhs.sub(rhs.nf()).checked()?;
    let mut out = ConventionResult { name: "as-stated".into(), ..Default::default() };
    fill_residual(&mut out, &r)?;
    Ok(out)
}

/// Evaluates every convention of a transform definition.
pub fn check_transform(def: &TransformDef, cat: &Catalog) -> Result<TransformReport> {
    let capture = |name: &str, r: Result<ConventionResult>| match r {
        Ok(c) => c,
        Err(e) => ConventionResult { name: name.to_string(), error: Some(e.to_string()), ..Default::default() },
    };
    match def.kind {
        TransformKind::Potential => {
            let p = Potential { def, cat };
            let fitted = p.free_fit().unwrap_or(Some(Vec::new()));
            let conventions = def.conventions.iter().map(|c| capture(&c.name, p.run(c))).collect();
            Ok(TransformReport { id: def.id.clone(), investigative: def.investigative, fitted, conventions })
        }
        TransformKind::Identities => Ok(TransformReport {
            id: def.id.clone(),
            investigative: def.investigative,
            fitted: None,
            conventions: vec![capture("as-stated", run_identities(def, cat))],
        }),
        TransformKind::Equivalence => Ok(TransformReport {
            id: def.id.clone(),
            investigative: def.investigative,
            fitted: None,
            conventions: vec![capture("as-stated", run_equivalence(def, cat))],
        }),
    }
}

/// Looks up and checks a transform by id.
pub fn check_transform_id(cat: &Catalog, id: &str) -> Result<TransformReport> {
    let def = TransformDef::from_entry(cat.entry(id)?)?;
    check_transform(&def, cat)
}

/// Checks every shipped transform in parallel, in catalog order.
pub fn check_all(cat: &Catalog) -> Result<Vec<TransformReport>> {
    use rayon::prelude::*;
    let ids: Vec<String> = cat.list(Some(Role::Transform)).into_iter().map(|e| e.id).collect();
    ids.par_iter().map(|id| check_transform_id(cat, id)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parametrization_and_scaling_are_identities() {
        assert!(check_parametrization().unwrap().is_zero());
        assert!(check_scaling_law().unwrap().is_zero());
    }

    #[test]
    fn parametrization_points() {
        let at = |v: i64| {
            let bind = [(context::V, NormalForm::int(v))];
            let u1 = parse_normal("(2*V + V^(-2))/3").unwrap().substitute(&bind).unwrap();
            let f = parse_normal("(V - V^(-2))/3").unwrap().substitute(&bind).unwrap();
            (u1.constant_value().unwrap(), f.constant_value().unwrap())
        };
        assert_eq!(at(2), (Rat::new(17, 12), Rat::new(7, 12)));
        assert_eq!(at(1), (Rat::int(1), Rat::int(0)));
    }

    #[test]
    fn scaling_law_at_unit_a_is_the_curve() {
        let ctx = Context::standard();
        let fa = ctx.relation_poly(context::FA_X).unwrap();
        let at1 = NormalForm::from_poly(fa).substitute(&[(context::param("a"), NormalForm::one())]).unwrap();
        let f = NormalForm::from_poly(ctx.relation_poly(context::F_X).unwrap());
        assert_eq!(at1.rename(&|v| if v == context::FA_X { context::F_X } else { v }), f);
    }

    #[test]
    fn all_transforms_in_order() {
        let cat = Catalog::embedded().unwrap();
        let ids: Vec<String> = check_all(&cat).unwrap().into_iter().map(|r| r.id).collect();
        let listed: Vec<String> = cat.list(Some(Role::Transform)).into_iter().map(|e| e.id).collect();
        assert_eq!(ids, listed);
    }

    #[test]
    fn linear_solver() {
        let n = |s: &str| parse_normal(s).unwrap();
        let rows = vec![(vec![n("1"), n("a")], n("1 + a^2")), (vec![n("1"), n("-1")], n("1 - a"))];
        let x = solve_linear(rows, 2).unwrap().unwrap();
        assert_eq!(x, vec![n("1"), n("a")]);
        let rows = vec![(vec![n("1"), n("1")], n("1")), (vec![n("2"), n("2")], n("3"))];
        assert!(solve_linear(rows, 2).unwrap().is_none());
    }

    #[test]
    fn derivative_calls_are_expanded() {
        let js = JetSpace::from_nf(parse_normal("exp(u)").unwrap());
        let lets = vec![(context::aux("w"), NormalForm::var(context::ux(1)))];
        let t = resolve_text("dy(w) - dx(w) + udx", &js, &lets).unwrap();
        assert_eq!(t, "(exp(u)) - (u2) + udx");
    }
}
