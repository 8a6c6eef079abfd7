//! Floating-point oracle: consistent random points, evaluation and a
//! probabilistic zero test.

use std::cell::RefCell;
use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustc_hash::FxHashMap;

use crate::error::{Error, Result};
use crate::expr::context::{
    self, Context, Relation, VarKind, E, FAB_X, FAB_Y, FA_X, FA_Y, F_X, F_Y, L, P, RB_X, RB_Y, R_X, R_Y, SC, U, W,
};
use crate::expr::tree::{symbol_chain, Node};
use crate::expr::{Expr, NormalForm, VarId};
use crate::jet::Direction;

const REDRAWS: usize = 100;
/// Smallest admissible magnitude for quantities that appear in denominators.
const CLEARANCE: f64 = 0.05;

/// A numerically consistent assignment to every registered variable.
#[derive(Clone, Debug, PartialEq)]
pub struct SamplePoint {
    pub values: Vec<f64>,
    pub seed: u64,
    pub relation_residuals: BTreeMap<String, f64>,
}

impl SamplePoint {
    pub fn get(&self, name: &str) -> Option<f64> {
        Context::standard().lookup(name).map(|v| self.values[v])
    }

    pub fn assignment(&self) -> BTreeMap<String, f64> {
        let ctx = Context::standard();
        (0..ctx.len()).map(|v| (ctx.name(v).to_string(), self.values[v])).collect()
    }
}

fn draw(rng: &mut ChaCha8Rng) -> f64 {
    let m = rng.gen_range(0.5..2.0);
    if rng.gen_bool(0.5) {
        m
    } else {
        -m
    }
}

/// Real roots of `c3 x³ + c2 x² + c1 x + c0`, ascending, polished by Newton.
pub fn cubic_roots(c3: f64, c2: f64, c1: f64, c0: f64) -> Vec<f64> {
    let (a, b, c) = (c2 / c3, c1 / c3, c0 / c3);
    let q = (a * a - 3.0 * b) / 9.0;
    let r = (2.0 * a * a * a - 9.0 * a * b + 27.0 * c) / 54.0;
    let mut roots = if q > 0.0 && r * r <= q * q * q * (1.0 + 1e-12) {
        let t = (r / q.powf(1.5)).clamp(-1.0, 1.0).acos();
        let s = -2.0 * q.sqrt();
        vec![
            s * (t / 3.0).cos() - a / 3.0,
            s * ((t + 2.0 * std::f64::consts::PI) / 3.0).cos() - a / 3.0,
            s * ((t - 2.0 * std::f64::consts::PI) / 3.0).cos() - a / 3.0,
        ]
    } else {
        let big = -r.signum() * (r.abs() + (r * r - q * q * q).sqrt()).cbrt();
        let small = if big == 0.0 { 0.0 } else { q / big };
        vec![big + small - a / 3.0]
    };
    for x in roots.iter_mut() {
        for _ in 0..4 {
            let p = ((c3 * *x + c2) * *x + c1) * *x + c0;
            let dp = (3.0 * c3 * *x + 2.0 * c2) * *x + c1;
            if dp == 0.0 {
                break;
            }
            *x -= p / dp;
        }
    }
    roots.sort_by(|x, y| x.partial_cmp(y).unwrap());
    roots
}

/// Roots of `2s³ + 3A s² − A³ + k = 0`.
pub fn cubic_symbol_roots(arg: f64, k: f64) -> Vec<f64> {
    cubic_roots(2.0, 3.0 * arg, 0.0, k - arg * arg * arg)
}

fn largest_cubic_root(arg: f64, k: f64) -> f64 {
    *cubic_symbol_roots(arg, k).last().unwrap()
}

/// Draws a consistent point. `pinned` fixes values of base variables and
/// parameters by name.
pub fn sample_point(pinned: &BTreeMap<String, f64>, seed: u64) -> Result<SamplePoint> {
    let ctx = Context::standard();
    let mut pins: Vec<Option<f64>> = vec![None; ctx.len()];
    for (k, v) in pinned {
        let id = ctx.lookup(k).ok_or_else(|| Error::Numeric(format!("unknown name `{k}`")))?;
        if matches!(ctx.kind(id), VarKind::Algebraic | VarKind::Transcendental) && id != W && id != P {
            return Err(Error::Numeric(format!("`{k}` is determined by its relation and cannot be pinned")));
        }
        pins[id] = Some(*v);
    }
    let c_id = context::param("c");
    let b_id = context::param("b");
    let a_id = context::param("a");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut vals = vec![0.0; ctx.len()];
    for v in ctx.vars() {
        if matches!(v.kind, VarKind::XJet(_) | VarKind::YJet(_) | VarKind::AuxBase | VarKind::Aux | VarKind::Param) {
            vals[v.id] = pins[v.id].unwrap_or_else(|| draw(&mut rng));
        }
    }
    // A pinned first derivative keeps its value; a drawn shift gives way.
    let pinned_sides = [pins[context::ux(1)], pins[context::uy(1)]];
    if pins[b_id].is_none() && pinned_sides.iter().flatten().any(|s| s + vals[b_id] <= CLEARANCE) {
        vals[b_id] = vals[b_id].abs();
    }
    let a3 = vals[a_id].powi(3);
    let b = vals[b_id];
    let pick = |rng: &mut ChaCha8Rng, id: VarId, ok: &dyn Fn(f64) -> bool| -> Result<f64> {
        if let Some(p) = pins[id] {
            // Pins skip the clearance margins; only the square roots must exist.
            return if p > 0.0 && p + b > 0.0 {
                Ok(p)
            } else {
                Err(Error::Numeric(format!("pinned `{}` is outside the admissible range", ctx.name(id))))
            };
        }
        for _ in 0..REDRAWS {
            let x = draw(rng).abs() + (-b).max(0.0);
            if ok(x) {
                return Ok(x);
            }
        }
        Err(Error::Numeric(format!("no admissible value for `{}` after {REDRAWS} redraws", ctx.name(id))))
    };
    let clear = |x: f64| x.abs() > CLEARANCE;
    let side_ok = |s: f64| {
        s > 0.0
            && s + b > CLEARANCE
            && clear(largest_cubic_root(s, 1.0))
            && clear(largest_cubic_root(s, a3))
            && clear(largest_cubic_root(s + b, a3))
    };
    vals[context::ux(1)] = pick(&mut rng, context::ux(1), &side_ok)?;
    vals[context::uy(1)] = pick(&mut rng, context::uy(1), &side_ok)?;
    let (x1, y1) = (vals[context::ux(1)], vals[context::uy(1)]);

    // ω and ω′ free, c from the relation unless pinned
    let mut found = false;
    for _ in 0..REDRAWS {
        let w = pins[W].unwrap_or_else(|| draw(&mut rng));
        let p = match pins[c_id] {
            Some(c) => {
                let s = c + 4.0 * w * w * w;
                if s < CLEARANCE * CLEARANCE {
                    if pins[W].is_some() {
                        break;
                    }
                    continue;
                }
                let sign = if pins[P].map(|p| p < 0.0).unwrap_or(rng.gen_bool(0.5)) { -1.0 } else { 1.0 };
                sign * s.sqrt()
            }
            None => pins[P].unwrap_or_else(|| draw(&mut rng)),
        };
        let c = p * p - 4.0 * w * w * w;
        if c > CLEARANCE {
            vals[W] = w;
            vals[P] = p;
            vals[c_id] = c;
            found = true;
            break;
        }
        if pins[W].is_some() && pins[P].is_some() {
            break;
        }
    }
    if !found {
        return Err(Error::Numeric("no consistent (w, wp, c) triple".into()));
    }
    vals[SC] = vals[c_id].sqrt();
    vals[E] = vals[U].exp();
    vals[L] = x1.ln();
    vals[F_X] = largest_cubic_root(x1, 1.0);
    vals[F_Y] = largest_cubic_root(y1, 1.0);
    vals[FA_X] = largest_cubic_root(x1, a3);
    vals[FA_Y] = largest_cubic_root(y1, a3);
    vals[FAB_X] = largest_cubic_root(x1 + b, a3);
    vals[FAB_Y] = largest_cubic_root(y1 + b, a3);
    vals[R_X] = x1.sqrt();
    vals[R_Y] = y1.sqrt();
    vals[RB_X] = (x1 + b).sqrt();
    vals[RB_Y] = (y1 + b).sqrt();

    let mut relation_residuals = BTreeMap::new();
    for v in ctx.algebraic() {
        let rel = ctx.relation_poly(v.id).expect("algebraic symbol has a relation");
        let value = rel.eval(&vals);
        let scale = 1.0 + rel.max_term_abs(&vals);
        relation_residuals.insert(v.name.clone(), value.abs() / scale);
    }
    Ok(SamplePoint { values: vals, seed, relation_residuals })
}

/// Per-point seed derived from a base seed.
pub fn point_seed(seed: u64, i: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(i as u64).rotate_left(17)
}

fn finite(x: f64, what: &str) -> Result<f64> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(Error::Numeric(format!("non-finite value in {what}")))
    }
}

/// Value of a normal form at a point.
pub fn eval(e: &NormalForm, p: &SamplePoint) -> Result<f64> {
    finite(e.eval(&p.values), "evaluation")
}

/// Value and relative residual `|value| / (1 + largest term)`.
pub fn eval_relative(e: &NormalForm, p: &SamplePoint) -> Result<(f64, f64)> {
    let (v, s) = e.eval_with_scale(&p.values);
    let v = finite(v, "evaluation")?;
    Ok((v, v.abs() / (1.0 + finite(s, "evaluation")?)))
}

/// Value of an expression tree, computed directly on the tree. Returns the
/// value and an absolute-value bound used as the relative scale.
pub fn eval_expr(e: &Expr, p: &SamplePoint) -> Result<(f64, f64)> {
    let mut memo: FxHashMap<*const Node, (f64, f64)> = FxHashMap::default();
    let r = eval_rec(e, &p.values, &mut memo);
    Ok((finite(r.0, "expression")?, finite(r.1, "expression")?))
}

fn eval_rec(e: &Expr, vals: &[f64], memo: &mut FxHashMap<*const Node, (f64, f64)>) -> (f64, f64) {
    if let Some(&r) = memo.get(&e.ptr()) {
        return r;
    }
    let r = match e.node() {
        Node::Const(c) => (c.to_f64(), c.to_f64().abs()),
        Node::Var(v) => (vals[*v], vals[*v].abs()),
        Node::Add(xs) => xs.iter().fold((0.0, 0.0), |(s, m), x| {
            let (a, b) = eval_rec(x, vals, memo);
            (s + a, m + b)
        }),
        Node::Mul(xs) => xs.iter().fold((1.0, 1.0), |(s, m), x| {
            let (a, b) = eval_rec(x, vals, memo);
            (s * a, m * b)
        }),
        Node::Pow(b, k) => {
            let (a, m) = eval_rec(b, vals, memo);
            if *k >= 0 {
                (a.powi(*k), m.powi(*k))
            } else {
                (a.powi(*k), a.abs().powi(*k))
            }
        }
        Node::Div(a, b) => {
            let (x, m) = eval_rec(a, vals, memo);
            let (y, _) = eval_rec(b, vals, memo);
            (x / y, m / y.abs())
        }
    };
    memo.insert(e.ptr(), r);
    r
}

#[derive(Clone, Debug, PartialEq)]
pub struct ZeroVerdict {
    pub zero_like: bool,
    pub max_relative: f64,
    /// Number of points whose relative residual exceeded the tolerance.
    pub above: usize,
    pub points: usize,
}

/// Evaluates at `n` points and classifies by the largest relative residual.
pub fn numeric_zero(e: &NormalForm, n: usize, tol: f64, seed: u64) -> Result<ZeroVerdict> {
    numeric_zero_with(n, tol, seed, &BTreeMap::new(), |p| eval_relative(e, p).map(|r| r.1))
}

/// Shared driver: `rel` returns the relative residual at a point.
pub fn numeric_zero_with(
    n: usize,
    tol: f64,
    seed: u64,
    pinned: &BTreeMap<String, f64>,
    mut rel: impl FnMut(&SamplePoint) -> Result<f64>,
) -> Result<ZeroVerdict> {
    let mut max = 0.0f64;
    let mut above = 0;
    for i in 0..n {
        let p = sample_point(pinned, point_seed(seed, i))?;
        let r = rel(&p)?;
        if r > tol {
            above += 1;
        }
        max = max.max(r);
    }
    Ok(ZeroVerdict { zero_like: above == 0, max_relative: max, above, points: n })
}

/// Total derivatives on expression trees, using the tree chain rule and
/// the textual derivative rules only. Independent of normal forms.
pub struct TreeJet {
    f: Expr,
    memo: RefCell<FxHashMap<(Direction, VarId), Expr>>,
}

impl TreeJet {
    pub fn new(f: Expr) -> TreeJet {
        TreeJet { f, memo: RefCell::new(FxHashMap::default()) }
    }

    fn d_var(&self, dir: Direction, v: VarId) -> Result<Expr> {
        if let Some(r) = self.memo.borrow().get(&(dir, v)) {
            return Ok(r.clone());
        }
        let ctx = Context::standard();
        let r = match (ctx.kind(v), dir) {
            (VarKind::Param, _) => Expr::zero(),
            (VarKind::Aux, _) | (VarKind::AuxBase, _) => return Err(Error::Auxiliary(ctx.name(v).to_string())),
            (VarKind::XJet(k), Direction::X) => {
                if k >= ctx.max_x_jet {
                    return Err(Error::JetOrder(format!("u{k}")));
                }
                Expr::var(context::ux(k + 1))
            }
            (VarKind::XJet(0), Direction::Y) => Expr::var(context::uy(1)),
            (VarKind::XJet(1), Direction::Y) => self.f.clone(),
            (VarKind::XJet(k), Direction::Y) => {
                let prev = self.d_var(Direction::Y, context::ux(k - 1))?;
                self.d(Direction::X, &prev)?
            }
            (VarKind::YJet(k), Direction::Y) => {
                if k >= ctx.max_y_jet {
                    return Err(Error::JetOrder(format!("v{k}")));
                }
                Expr::var(context::uy(k + 1))
            }
            (VarKind::YJet(1), Direction::X) => self.f.clone(),
            (VarKind::YJet(k), Direction::X) => {
                let prev = self.d_var(Direction::X, context::uy(k - 1))?;
                self.d(Direction::Y, &prev)?
            }
            (VarKind::Transcendental, _) | (VarKind::Algebraic, _) => match ctx.symbol(v).and_then(|s| s.argument) {
                None => Expr::zero(),
                Some(arg) => {
                    let da = self.d_var(dir, arg)?;
                    symbol_chain(v, &da).unwrap_or_else(Expr::zero)
                }
            },
        };
        self.memo.borrow_mut().insert((dir, v), r.clone());
        Ok(r)
    }

    pub fn d(&self, dir: Direction, e: &Expr) -> Result<Expr> {
        e.derivation(&mut |v| self.d_var(dir, v))
    }
}

/// Central finite-difference check of one symbol's derivative rule at a
/// point. Returns the relative discrepancy.
pub fn derivative_check(symbol: VarId, p: &SamplePoint, h: f64) -> Result<f64> {
    let ctx = Context::standard();
    let def = ctx.symbol(symbol).ok_or_else(|| Error::Numeric(format!("`{}` is not a symbol", ctx.name(symbol))))?;
    let rule = crate::expr::normal::symbol_derivative(symbol)
        .ok_or_else(|| Error::Numeric(format!("`{}` has no derivative rule", ctx.name(symbol))))?;
    let symbolic = eval(rule, p)?;
    let vals = &p.values;
    let numeric = match &def.relation {
        Some(Relation::Cubic { arg, k }) => {
            let a0 = arg.eval(vals);
            let k0 = k.eval(vals);
            let here = vals[symbol];
            let nearest = |s: f64| {
                cubic_symbol_roots(s, k0)
                    .into_iter()
                    .min_by(|x, y| (x - here).abs().partial_cmp(&(y - here).abs()).unwrap())
                    .unwrap()
            };
            (nearest(a0 + h) - nearest(a0 - h)) / (2.0 * h)
        }
        Some(Relation::Sqrt { arg }) => {
            let a0 = arg.eval(vals);
            ((a0 + h).sqrt() - (a0 - h).sqrt()) / (2.0 * h)
        }
        Some(Relation::WeierstrassPrime) => {
            let (w0, p0) = (vals[W], vals[P]);
            let step = |dt: f64| rk4_weierstrass(w0, p0, dt).1;
            (step(h) - step(-h)) / (2.0 * h)
        }
        None if symbol == W => {
            let step = |dt: f64| rk4_weierstrass(vals[W], vals[P], dt).0;
            (step(h) - step(-h)) / (2.0 * h)
        }
        None if symbol == E => ((vals[U] + h).exp() - (vals[U] - h).exp()) / (2.0 * h),
        None if symbol == L => {
            let x = vals[context::ux(1)];
            ((x + h).ln() - (x - h).ln()) / (2.0 * h)
        }
        None => return Err(Error::Numeric(format!("no numeric model for `{}`", ctx.name(symbol)))),
    };
    Ok((numeric - symbolic).abs() / (1.0 + symbolic.abs()))
}

/// One RK4 step of `w' = p, p' = 6w²`.
fn rk4_weierstrass(w: f64, p: f64, h: f64) -> (f64, f64) {
    let f = |w: f64, p: f64| (p, 6.0 * w * w);
    let (k1w, k1p) = f(w, p);
    let (k2w, k2p) = f(w + h / 2.0 * k1w, p + h / 2.0 * k1p);
    let (k3w, k3p) = f(w + h / 2.0 * k2w, p + h / 2.0 * k2p);
    let (k4w, k4p) = f(w + h * k3w, p + h * k3p);
    (w + h / 6.0 * (k1w + 2.0 * k2w + 2.0 * k3w + k4w), p + h / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_normal;

    #[test]
    fn cubic_roots_of_the_curve() {
        let r = cubic_symbol_roots(1.0, 1.0);
        assert!(r.iter().any(|x| x.abs() < 1e-6));
        let r = cubic_symbol_roots(17.0 / 12.0, 1.0);
        assert!(r.iter().any(|x| (x - 7.0 / 12.0).abs() < 1e-12));
    }

    #[test]
    fn points_are_reproducible_and_consistent() {
        let a = sample_point(&BTreeMap::new(), 11).unwrap();
        let b = sample_point(&BTreeMap::new(), 11).unwrap();
        assert_eq!(a, b);
        for seed in 0..50 {
            let p = sample_point(&BTreeMap::new(), seed).unwrap();
            for (k, r) in &p.relation_residuals {
                assert!(*r < 1e-12, "{k}: {r}");
            }
            assert!(p.values[E] > 0.0);
        }
    }

    #[test]
    fn pins_are_respected() {
        let pins = BTreeMap::from([("u1".to_string(), 17.0 / 12.0), ("a".to_string(), 1.0)]);
        let p = sample_point(&pins, 3).unwrap();
        assert!((p.values[F_X] - 7.0 / 12.0).abs() < 1e-12);
        let pins = BTreeMap::from([("c".to_string(), 2.0)]);
        let p = sample_point(&pins, 4).unwrap();
        assert_eq!(p.get("c"), Some(2.0));
        assert!(p.relation_residuals[Context::standard().name(P)] < 1e-12);
    }

    #[test]
    fn zero_classification() {
        let v = numeric_zero(&NormalForm::zero(), 5, 1e-9, 1).unwrap();
        assert!(v.zero_like && v.max_relative == 0.0);
        let v = numeric_zero(&parse_normal("f(u1) - u1").unwrap(), 10, 1e-9, 1).unwrap();
        assert!(!v.zero_like);
        let e = parse_normal("u1^2 - u1*u1").unwrap();
        let p = sample_point(&BTreeMap::new(), 2).unwrap();
        assert_eq!(eval(&e, &p).unwrap(), 0.0);
    }

    #[test]
    fn derivative_rules_match_finite_differences() {
        for seed in 0..20 {
            let p = sample_point(&BTreeMap::new(), seed).unwrap();
            for s in [F_X, FA_Y, FAB_X, R_X, RB_Y, P, W, E, L] {
                let r = derivative_check(s, &p, 1e-6).unwrap();
                assert!(r < 1e-6, "seed {seed}, {}: {r}", Context::standard().name(s));
            }
        }
    }

    #[test]
    fn tree_jet_agrees_with_exact_jet() {
        let f = crate::expr::parse("2*fa(uy)*u").unwrap();
        let tj = TreeJet::new(f.clone());
        let js = crate::jet::JetSpace::from_nf(crate::expr::normalize(&f).unwrap());
        let e = crate::expr::parse("u2*fa(uy) + u1^2").unwrap();
        let t = tj.d(Direction::Y, &tj.d(Direction::X, &e).unwrap()).unwrap();
        let n = js.d_y(&js.d_x(&crate::expr::normalize(&e).unwrap()).unwrap()).unwrap();
        for seed in 0..5 {
            let p = sample_point(&BTreeMap::new(), seed).unwrap();
            let (tv, ts) = eval_expr(&t, &p).unwrap();
            let nv = eval(&n, &p).unwrap();
            assert!((tv - nv).abs() / (1.0 + ts) < 1e-10);
        }
    }
}
