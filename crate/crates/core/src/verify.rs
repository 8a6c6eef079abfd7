//! The determining equation of a fifth-order symmetry and the checks built
//! on it.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::catalog::{Catalog, PairingClaim, Role};
use crate::error::{Error, Result};
use crate::expr::context::{self, Context, VarKind, U};
use crate::expr::print::print_mono;
use crate::expr::{Expr, Mono, NormalForm, Poly, Rat};
use crate::jet::{Direction, EvolutionEq, HyperbolicEq, JetSpace};
use crate::numeval::{self, TreeJet};

pub const DEFAULT_TOLERANCE: f64 = 1e-9;
pub const DEFAULT_SAMPLES: usize = 25;
pub const DEFAULT_SEED: u64 = 7;

fn u1() -> usize {
    context::ux(1)
}

fn v1() -> usize {
    context::uy(1)
}

/// Both equations expressed with the symmetry in the x direction.
fn x_form(f: &HyperbolicEq, g: &EvolutionEq) -> Result<(HyperbolicEq, EvolutionEq)> {
    match g.direction {
        Direction::X => Ok((f.clone(), g.clone())),
        Direction::Y => Ok((f.swapped()?, g.swapped()?)),
    }
}

fn h_of(g: &EvolutionEq) -> NormalForm {
    NormalForm::var(context::ux(5)).add(g.nf())
}

/// `D_x D_y H − F_{u1} D_x H − F_{uy} D_y H − F_u H` with `H = u5 + G`,
/// mixed derivatives eliminated.
pub fn determining_residual(f: &HyperbolicEq, g: &EvolutionEq) -> Result<NormalForm> {
    let (f, g) = x_form(f, g)?;
    let js = JetSpace::new(&f);
    residual_in(&js, &h_of(&g))
}

fn residual_in(js: &JetSpace, h: &NormalForm) -> Result<NormalForm> {
    let f = js.f();
    let dxh = js.d_x(h)?;
    let dyh = js.d_y(h)?;
    let dxdy = js.d_x(&dyh)?;
    let r = dxdy
        .sub(&f.diff(u1())?.mul(&dxh))
        .checked()?
        .sub(&f.diff(v1())?.mul(&dyh))
        .checked()?
        .sub(&f.diff(U)?.mul(h));
    r.checked()
}

/// The same residual built on expression trees and evaluated in floating
/// point, without normal forms. Returns the relative residual at a point.
pub struct TreeResidual {
    expr: Expr,
}

impl TreeResidual {
    pub fn new(f: &HyperbolicEq, g: &EvolutionEq) -> Result<TreeResidual> {
        let (f, g) = x_form(f, g)?;
        let tj = TreeJet::new(f.f.clone());
        let h = &Expr::var(context::ux(5)) + &g.g;
        let dxh = tj.d(Direction::X, &h)?;
        let dyh = tj.d(Direction::Y, &h)?;
        let dxdy = tj.d(Direction::X, &dyh)?;
        let expr = Expr::sum(vec![
            dxdy,
            -&(&f.f.diff(u1()) * &dxh),
            -&(&f.f.diff(v1()) * &dyh),
            -&(&f.f.diff(U) * &h),
        ]);
        Ok(TreeResidual { expr })
    }

    pub fn relative(&self, p: &numeval::SamplePoint) -> Result<f64> {
        let (v, s) = numeval::eval_expr(&self.expr, p)?;
        Ok(v.abs() / (1.0 + s))
    }
}

/// `D_y(∂G/∂u4) + 5 D_x(∂F/∂u1)`.
pub fn u5_constraint(f: &HyperbolicEq, g: &EvolutionEq) -> Result<NormalForm> {
    let (f, g) = x_form(f, g)?;
    let js = JetSpace::new(&f);
    let q = g.nf().diff(context::ux(4))?;
    js.d_y(&q)?.add(&js.d_x(&f.nf().diff(u1())?)?.scale(&Rat::int(5))).checked()
}

fn u1_side_mask() -> u64 {
    let ctx = Context::standard();
    let mut m = 1u64 << u1();
    for v in ctx.vars() {
        let ok = match v.kind {
            VarKind::Param => true,
            VarKind::Transcendental | VarKind::Algebraic => {
                v.symbol.as_ref().and_then(|s| s.argument) == Some(u1())
                    && crate::expr::normal::symbol_dependencies(v.id) & !(1u64 << u1() | params_mask()) == 0
            }
            _ => false,
        };
        if ok {
            m |= 1 << v.id;
        }
    }
    m
}

fn params_mask() -> u64 {
    Context::standard().params().fold(0, |m, v| m | 1 << v.id)
}

/// `g` with `∂G/∂u4 = 5 u2 g(u1)`, as a normal form.
pub fn extract_g_nf(g: &EvolutionEq) -> Result<NormalForm> {
    let gx = match g.direction {
        Direction::X => g.nf().clone(),
        Direction::Y => g.swapped()?.nf().clone(),
    };
    let q = gx.diff(context::ux(4))?;
    if q.is_zero() {
        return Ok(q);
    }
    let c1 = q.coefficient_of(context::ux(2), 1).map_err(|e| Error::Premise(format!("{}: {e}", g.id)))?;
    if !q.sub(&c1.mul(&NormalForm::var(context::ux(2)))).is_zero() {
        return Err(Error::Premise(format!("{}: ∂G/∂u4 is not linear homogeneous in u2", g.id)));
    }
    if c1.mask() & !u1_side_mask() != 0 {
        return Err(Error::Premise(format!("{}: ∂G/∂u4 / u2 depends on more than u1", g.id)));
    }
    Ok(c1.scale(&Rat::new(1, 5)))
}

pub fn extract_g(g: &EvolutionEq) -> Result<Expr> {
    Ok(extract_g_nf(g)?.to_expr())
}

#[derive(Clone, Debug)]
pub struct LemmaDecomposition {
    pub g: Expr,
    pub eq28: NormalForm,
    pub eq29: NormalForm,
    /// `D_y(5 u2 g) + 5 D_x(F_{u1})`, the u5 coefficient for this `g`.
    pub expansion: NormalForm,
    /// `expansion = 5 (eq28·u2 + eq29)` and the u2 coefficients agree.
    pub consistent: bool,
}

/// Splits the u5 condition by powers of u2.
pub fn lemma_split(f: &HyperbolicEq, g: &NormalForm) -> Result<LemmaDecomposition> {
    let fx = f.nf();
    let f1 = fx.diff(u1())?;
    let fu = fx.diff(U)?;
    let fv = fx.diff(v1())?;
    let gp = g.diff(u1())?;
    let eq28 = f1.diff(u1())?.add(&g.mul(&f1)).add(&gp.mul(fx)).checked()?;
    let eq29 = NormalForm::var(u1())
        .mul(&f1.diff(U)?.add(&g.mul(&fu)))
        .add(&fx.mul(&f1.diff(v1())?.add(&g.mul(&fv))))
        .checked()?;
    let js = JetSpace::new(f);
    let five = Rat::int(5);
    let q = NormalForm::var(context::ux(2)).mul(g).scale(&five);
    let expansion = js.d_y(&q)?.add(&js.d_x(&f1)?.scale(&five)).checked()?;
    let u2 = context::ux(2);
    let recombined = eq28.mul(&NormalForm::var(u2)).add(&eq29).scale(&five);
    let by_coeff = expansion.coefficient_of(u2, 1)? == eq28.scale(&five)
        && expansion.coefficient_of(u2, 0)? == eq29.scale(&five)
        && expansion.coefficient_of(u2, 2)?.is_zero();
    let consistent = recombined == expansion && by_coeff;
    Ok(LemmaDecomposition { g: g.to_expr(), eq28, eq29, expansion, consistent })
}

/// `w'' + g w' + g' w` with `' = d/du1`.
pub fn ode_check(w: &NormalForm, g: &NormalForm) -> Result<NormalForm> {
    let x = u1();
    let w1 = w.diff(x)?;
    let w2 = w1.diff(x)?;
    w2.add(&g.mul(&w1)).add(&g.diff(x)?.mul(w)).checked()
}

fn jet_and_symbol_mask() -> u64 {
    let ctx = Context::standard();
    (0..ctx.len()).filter(|&v| !ctx.is_param(v)).fold(0, |m, v| m | 1 << v)
}

fn jet_mask() -> u64 {
    let ctx = Context::standard();
    ctx.vars()
        .iter()
        .filter(|v| matches!(v.kind, VarKind::XJet(_) | VarKind::YJet(_)))
        .fold(0, |m, v| m | 1 << v.id)
}

/// One coefficient condition: the monomial in jets and symbols, and the
/// polynomial in parameters that must vanish.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParamCondition {
    pub monomial: Mono,
    pub condition: Poly,
}

/// All coefficient conditions of the residual over the parameters.
pub fn param_conditions(f: &HyperbolicEq, g: &EvolutionEq) -> Result<Vec<ParamCondition>> {
    let r = determining_residual(f, g)?;
    conditions_of(&r)
}

pub fn conditions_of(r: &NormalForm) -> Result<Vec<ParamCondition>> {
    if r.den().iter().any(|a| a.poly.mask() & params_mask() != 0) {
        let pm = params_mask();
        for a in r.den() {
            if a.poly.mask() & pm != 0 && a.poly.mask() & !pm != 0 {
                return Err(Error::Unsupported(
                    "a denominator mixes parameters and jet variables; conditions would not be polynomial".into(),
                ));
            }
        }
    }
    Ok(r
        .split_numerator(jet_and_symbol_mask())
        .into_iter()
        .map(|(monomial, condition)| ParamCondition { monomial, condition })
        .collect())
}

/// True when every condition vanishes under the binding.
pub fn conditions_hold(conds: &[ParamCondition], bindings: &BTreeMap<String, Rat>) -> Result<bool> {
    let map = crate::catalog::binding_map(bindings)?;
    for c in conds {
        if !NormalForm::from_poly(c.condition.clone()).substitute(&map)?.is_zero() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Outcome of one pair check.
#[derive(Clone, Debug)]
pub struct VerificationReport {
    pub pairing: PairingClaim,
    pub residual_is_zero: bool,
    pub residual_term_count: usize,
    /// (jet monomial, coefficient) in decreasing graded-lex order.
    pub failing_coefficients: Vec<(String, String)>,
    pub numeric_max_residual: Option<f64>,
    pub numeric_points_above_tol: Option<usize>,
    pub samples: usize,
    pub tolerance: f64,
    pub seed: u64,
    pub elapsed: Duration,
}

impl VerificationReport {
    /// Symbolic verdict and, when the oracle ran, numeric agreement.
    pub fn passed(&self) -> bool {
        self.residual_is_zero && self.numeric_agrees()
    }

    pub fn numeric_agrees(&self) -> bool {
        match self.numeric_points_above_tol {
            None => true,
            Some(n) => (n == 0) == self.residual_is_zero,
        }
    }

    /// Line-oriented `key: value` document; `elapsed` is left out so that
    /// documents are reproducible.
    pub fn to_structured(&self) -> String {
        let mut s = String::new();
        let p = &self.pairing;
        let bindings = if p.bindings.is_empty() {
            "-".to_string()
        } else {
            p.bindings.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(",")
        };
        let _ = writeln!(s, "report: {}", p.id());
        let _ = writeln!(s, "hyperbolic: {}", p.hyperbolic);
        let _ = writeln!(s, "evolution: {}", p.evolution.as_deref().unwrap_or("?"));
        let _ = writeln!(s, "direction: {}", p.direction);
        let _ = writeln!(s, "bindings: {bindings}");
        let _ = writeln!(s, "status: {}", p.status);
        let _ = writeln!(s, "residual_is_zero: {}", self.residual_is_zero);
        let _ = writeln!(s, "residual_term_count: {}", self.residual_term_count);
        let _ = writeln!(s, "failing_coefficient_count: {}", self.failing_coefficients.len());
        match self.numeric_max_residual {
            Some(x) => {
                let _ = writeln!(s, "numeric_max_residual: {x:e}");
            }
            None => {
                let _ = writeln!(s, "numeric_max_residual: none");
            }
        }
        match self.numeric_points_above_tol {
            Some(n) => {
                let _ = writeln!(s, "numeric_points_above_tol: {n}");
            }
            None => {
                let _ = writeln!(s, "numeric_points_above_tol: none");
            }
        }
        let _ = writeln!(s, "samples: {}", self.samples);
        let _ = writeln!(s, "tolerance: {:e}", self.tolerance);
        let _ = writeln!(s, "seed: {}", self.seed);
        for (m, c) in &self.failing_coefficients {
            let _ = writeln!(s, "coefficient: {m} => {c}");
        }
        s.push_str("end\n");
        s
    }

    /// Inverse of [`to_structured`](Self::to_structured).
    pub fn from_structured(text: &str) -> Result<VerificationReport> {
        let bad = |m: &str| Error::Usage(format!("malformed report: {m}"));
        let mut kv: BTreeMap<&str, &str> = BTreeMap::new();
        let mut coeffs = Vec::new();
        for line in text.lines() {
            if line == "end" {
                break;
            }
            let (k, v) = line.split_once(": ").ok_or_else(|| bad(line))?;
            if k == "coefficient" {
                let (m, c) = v.split_once(" => ").ok_or_else(|| bad(line))?;
                coeffs.push((m.to_string(), c.to_string()));
            } else {
                kv.insert(k, v);
            }
        }
        let get = |k: &str| kv.get(k).copied().ok_or_else(|| bad(k));
        let opt_f = |v: &str| if v == "none" { Ok(None) } else { v.parse::<f64>().map(Some).map_err(|_| bad(v)) };
        let opt_u = |v: &str| if v == "none" { Ok(None) } else { v.parse::<usize>().map(Some).map_err(|_| bad(v)) };
        let ev = get("evolution")?;
        let pairing = PairingClaim {
            hyperbolic: get("hyperbolic")?.to_string(),
            evolution: (ev != "?").then(|| ev.to_string()),
            direction: get("direction")?.parse()?,
            bindings: crate::catalog::parse_bindings(get("bindings")?)?,
            status: get("status")?.parse()?,
        };
        let count: usize = get("failing_coefficient_count")?.parse().map_err(|_| bad("count"))?;
        if count != coeffs.len() {
            return Err(bad("coefficient count"));
        }
        Ok(VerificationReport {
            pairing,
            residual_is_zero: get("residual_is_zero")?.parse().map_err(|_| bad("residual_is_zero"))?,
            residual_term_count: get("residual_term_count")?.parse().map_err(|_| bad("term count"))?,
            failing_coefficients: coeffs,
            numeric_max_residual: opt_f(get("numeric_max_residual")?)?,
            numeric_points_above_tol: opt_u(get("numeric_points_above_tol")?)?,
            samples: get("samples")?.parse().map_err(|_| bad("samples"))?,
            tolerance: get("tolerance")?.parse().map_err(|_| bad("tolerance"))?,
            seed: get("seed")?.parse().map_err(|_| bad("seed"))?,
            elapsed: Duration::ZERO,
        })
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let verdict = if self.residual_is_zero { "ZERO" } else { "NONZERO" };
        let _ = writeln!(s, "{}: residual {verdict} ({} terms)", self.pairing, self.residual_term_count);
        if let Some(x) = self.numeric_max_residual {
            let _ = writeln!(
                s,
                "  numeric: max relative residual {x:.3e} over {} points, {} above {:.0e}",
                self.samples,
                self.numeric_points_above_tol.unwrap_or(0),
                self.tolerance
            );
        }
        if !self.numeric_agrees() {
            let _ = writeln!(s, "  WARNING: numeric oracle disagrees with the symbolic verdict");
        }
        for (m, c) in self.failing_coefficients.iter().take(20) {
            let _ = writeln!(s, "  [{m}] {c}");
        }
        if self.failing_coefficients.len() > 20 {
            let _ = writeln!(s, "  … {} more coefficients", self.failing_coefficients.len() - 20);
        }
        let _ = writeln!(s, "  elapsed {:.2?}", self.elapsed);
        s
    }
}

/// Nonzero coefficients of the residual grouped by jet monomial.
pub fn failing_coefficients(r: &NormalForm) -> Result<Vec<(String, String)>> {
    let den = NormalForm::from_poly(r.den_poly());
    r.split_numerator(jet_mask())
        .into_iter()
        .map(|(m, c)| Ok((print_mono(&m), NormalForm::from_poly(c).div(&den)?.to_string())))
        .collect()
}

/// Symbolic residual plus the tree oracle at `samples` points.
pub fn verify_pair(
    f: &HyperbolicEq,
    g: &EvolutionEq,
    pairing: PairingClaim,
    samples: usize,
    tolerance: f64,
    seed: u64,
) -> Result<VerificationReport> {
    let start = Instant::now();
    let r = determining_residual(f, g)?;
    let residual_is_zero = r.is_zero();
    let failing = if residual_is_zero { Vec::new() } else { failing_coefficients(&r)? };
    let (numeric_max_residual, numeric_points_above_tol) = if samples > 0 {
        let tree = TreeResidual::new(f, g)?;
        let v = numeval::numeric_zero_with(samples, tolerance, seed, &BTreeMap::new(), |p| tree.relative(p))?;
        (Some(v.max_relative), Some(v.above))
    } else {
        (None, None)
    };
    Ok(VerificationReport {
        pairing,
        residual_is_zero,
        residual_term_count: r.term_count(),
        failing_coefficients: failing,
        numeric_max_residual,
        numeric_points_above_tol,
        samples,
        tolerance,
        seed,
        elapsed: start.elapsed(),
    })
}

/// Equations of a pairing, with the y direction applied to `G`.
pub fn pairing_equations(cat: &Catalog, p: &PairingClaim) -> Result<(HyperbolicEq, EvolutionEq)> {
    let ev = p.evolution.as_deref().ok_or_else(|| Error::Usage(format!("pairing {} is unresolved", p.id())))?;
    let f = cat.hyperbolic(&p.hyperbolic, &p.bindings)?;
    let mut g = cat.evolution(ev, &p.bindings)?;
    if p.direction == Direction::Y {
        g = g.swapped()?;
    }
    Ok((f, g))
}

/// A candidate found while resolving an open pairing.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Resolution {
    pub evolution: String,
    pub bindings: BTreeMap<String, Rat>,
}

/// Every evolution entry that annihilates the residual for this pairing's
/// hyperbolic equation, with its parameters symbolic or, failing that, all
/// set to zero when admissible.
pub fn resolve_candidates(cat: &Catalog, p: &PairingClaim) -> Result<Vec<Resolution>> {
    let ids: Vec<String> = cat.list(Some(Role::Evolution)).into_iter().map(|s| s.id).collect();
    let f = cat.hyperbolic(&p.hyperbolic, &p.bindings)?;
    let found: Vec<Option<Resolution>> = ids
        .par_iter()
        .map(|id| -> Result<Option<Resolution>> {
            let entry = cat.entry(id)?;
            let mut tries = vec![BTreeMap::new()];
            if !entry.params.is_empty() {
                tries.push(entry.params.iter().map(|q| (q.name.clone(), Rat::int(0))).collect());
            }
            for b in tries {
                let g = match cat.evolution(id, &b) {
                    Ok(g) => g,
                    Err(Error::Admissibility(_)) => continue,
                    Err(e) => return Err(e),
                };
                let g = if p.direction == Direction::Y { g.swapped()? } else { g };
                if !u5_constraint(&f, &g)?.is_zero() {
                    return Ok(None);
                }
                if determining_residual(&f, &g)?.is_zero() {
                    return Ok(Some(Resolution { evolution: id.clone(), bindings: b }));
                }
            }
            Ok(None)
        })
        .collect::<Result<_>>()?;
    Ok(found.into_iter().flatten().collect())
}

/// Fills in the evolution side of a resolved-by-tool pairing with the first
/// candidate in catalog order.
pub fn resolve(cat: &Catalog, p: &PairingClaim) -> Result<(PairingClaim, Vec<Resolution>)> {
    if p.evolution.is_some() {
        return Ok((p.clone(), Vec::new()));
    }
    let all = resolve_candidates(cat, p)?;
    let mut q = p.clone();
    if let Some(first) = all.first() {
        q.evolution = Some(first.evolution.clone());
        q.bindings.extend(first.bindings.clone());
    }
    Ok((q, all))
}

/// Checks every shipped pairing in parallel; reports come back ordered by
/// pairing id.
pub fn verify_all(cat: &Catalog, samples: usize, tolerance: f64, seed: u64) -> Result<Vec<VerificationReport>> {
    let mut reports: Vec<VerificationReport> = cat
        .pairings()
        .par_iter()
        .map(|p| -> Result<VerificationReport> {
            let start = Instant::now();
            let (q, _) = resolve(cat, p)?;
            if q.evolution.is_none() {
                return Ok(VerificationReport {
                    pairing: q,
                    residual_is_zero: false,
                    residual_term_count: 0,
                    failing_coefficients: Vec::new(),
                    numeric_max_residual: None,
                    numeric_points_above_tol: None,
                    samples: 0,
                    tolerance,
                    seed,
                    elapsed: start.elapsed(),
                });
            }
            let (f, g) = pairing_equations(cat, &q)?;
            let mut r = verify_pair(&f, &g, q, samples, tolerance, seed)?;
            r.elapsed = start.elapsed();
            Ok(r)
        })
        .collect::<Result<_>>()?;
    reports.sort_by_key(|r| r.pairing.id());
    Ok(reports)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::PairingStatus;
    use crate::expr::parse_normal;

    fn hyp(text: &str) -> HyperbolicEq {
        HyperbolicEq::parse("t", text).unwrap()
    }

    fn evo(text: &str) -> EvolutionEq {
        EvolutionEq::parse("t", text).unwrap()
    }

    #[test]
    fn linear_equation_has_the_trivial_symmetry() {
        assert!(determining_residual(&hyp("u"), &evo("0")).unwrap().is_zero());
        assert!(u5_constraint(&hyp("u"), &evo("0")).unwrap().is_zero());
        let conds = param_conditions(&hyp("u"), &evo("0")).unwrap();
        assert!(conds.is_empty());
    }

    #[test]
    fn u5_constraint_detects_u1_dependence() {
        let r = u5_constraint(&hyp("u1*uy"), &evo("0")).unwrap();
        assert!(!r.is_zero());
    }

    #[test]
    fn lemma_examples() {
        let zero = NormalForm::zero();
        let d = lemma_split(&hyp("exp(u) + exp(-2*u)"), &zero).unwrap();
        assert!(d.eq28.is_zero() && d.eq29.is_zero() && d.consistent);
        let d = lemma_split(&hyp("2*fa(uy)*u"), &zero).unwrap();
        assert!(d.eq28.is_zero() && d.eq29.is_zero());
        let d = lemma_split(&hyp("u1^2"), &zero).unwrap();
        assert_eq!(d.eq28, NormalForm::int(2));
        assert!(d.consistent);
    }

    #[test]
    fn ode_examples() {
        for (w, g) in [("u1", "0"), ("u1*ln(u1)", "-1/u1"), ("sqrt(u1)", "-1/(2*u1)")] {
            let r = ode_check(&parse_normal(w).unwrap(), &parse_normal(g).unwrap()).unwrap();
            assert!(r.is_zero(), "{w}, {g}: {r}");
        }
        let r = ode_check(&parse_normal("u1^2").unwrap(), &NormalForm::zero()).unwrap();
        assert_eq!(r, NormalForm::int(2));
    }

    #[test]
    fn extract_g_premise() {
        assert!(extract_g_nf(&evo("5*(u2 - u1^2)*u3 - 5*u1*u2^2 + u1^5")).unwrap().is_zero());
        let g = extract_g_nf(&evo("-5*u2*u4/u1 + u3")).unwrap();
        assert_eq!(g, parse_normal("-1/u1").unwrap());
        assert!(matches!(extract_g_nf(&evo("u2^2*u4")), Err(Error::Premise(_))));
        assert!(matches!(extract_g_nf(&evo("u*u2*u4")), Err(Error::Premise(_))));
    }

    #[test]
    fn structured_report_round_trips() {
        let r = verify_pair(
            &hyp("exp(u) - exp(-u)"),
            &evo("5*(u2 - u1^2)*u3 - 5*u1*u2^2 + u1^5"),
            PairingClaim {
                hyperbolic: "hyp3".into(),
                evolution: Some("ev12".into()),
                direction: Direction::X,
                bindings: BTreeMap::new(),
                status: PairingStatus::AssertedByPaper,
            },
            3,
            1e-9,
            5,
        )
        .unwrap();
        assert!(!r.residual_is_zero && !r.failing_coefficients.is_empty());
        let s = r.to_structured();
        let back = VerificationReport::from_structured(&s).unwrap();
        assert_eq!(back.to_structured(), s);
    }
}
