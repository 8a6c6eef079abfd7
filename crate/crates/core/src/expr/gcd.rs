//! Multivariate gcd (recursive primitive PRS) and the light factoring used
//! to split denominators into coprime atoms.
//!
//! Inputs here are small: denominators and norms of algebraic elements. The
//! large numerators of determining-equation residuals never go through a
//! full gcd, only through trial division by certified atoms.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::poly::{Mono, Poly, VarId, NVARS};
use super::rat::{gcd_numers, lcm_denoms, Rat};

/// Split `p = scalar * mono * q` with `q` free of monomial factors, integer
/// coefficients with content 1, and positive leading coefficient.
pub fn unit_normal(p: &Poly) -> (Rat, Mono, Poly) {
    if p.is_zero() {
        return (Rat::ZERO, Mono::ONE, Poly::zero());
    }
    let m = p.min_mono();
    let shifted = p.mul_mono(&m.inv());
    let l = lcm_denoms(shifted.terms().iter().map(|(_, c)| c));
    let lr = Rat::from_bigints(l, BigInt::one());
    let ints = shifted.scale(&lr);
    let g = gcd_numers(ints.terms().iter().map(|(_, c)| c));
    let gr = Rat::from_bigints(g, BigInt::one());
    let mut scale = gr.div(&lr);
    let mut q = ints.scale(&gr.recip());
    if q.leading().map(|(_, c)| c.is_negative()).unwrap_or(false) {
        q = q.neg();
        scale = -scale;
    }
    (scale, m, q)
}

pub fn normalized(p: &Poly) -> Poly {
    unit_normal(p).2
}

fn main_var(mask: u64) -> Option<VarId> {
    if mask == 0 {
        None
    } else {
        Some(63 - mask.leading_zeros() as usize)
    }
}

fn deg_in(p: &Poly, x: VarId) -> i8 {
    p.max_exp(x)
}

/// Coefficient of the highest power of `x`.
fn lead_in(p: &Poly, x: VarId) -> Poly {
    let c = p.coeffs_in(x);
    c.into_iter().next_back().map(|(_, p)| p).unwrap_or_else(Poly::zero)
}

fn content_in(p: &Poly, x: VarId) -> Poly {
    let mut g: Option<Poly> = None;
    for (_, c) in p.coeffs_in(x) {
        if c.is_constant() {
            return Poly::one();
        }
        g = Some(match g {
            None => normalized(&c),
            Some(g) => gcd_rec(&g, &c),
        });
        if g.as_ref().map(|g| g.is_constant()).unwrap_or(false) {
            return Poly::one();
        }
    }
    g.unwrap_or_else(Poly::one)
}

fn pseudo_rem(f: &Poly, g: &Poly, x: VarId) -> Poly {
    let dg = deg_in(g, x);
    let lg = lead_in(g, x);
    let mut r = f.clone();
    loop {
        if r.is_zero() {
            return r;
        }
        let dr = deg_in(&r, x);
        if dr < dg {
            return r;
        }
        let lr = lead_in(&r, x);
        let shift = Mono::var(x, dr - dg);
        r = r.mul(&lg).sub(&g.mul(&lr).mul_mono(&shift));
        // keep coefficients tame
        let (_, _, n) = unit_normal(&r);
        let m = r.min_mono();
        r = n.mul_mono(&m);
    }
}

/// gcd of two polynomials with nonnegative exponents, normalized.
fn gcd_rec(a: &Poly, b: &Poly) -> Poly {
    if a.is_zero() {
        return normalized(b);
    }
    if b.is_zero() {
        return normalized(a);
    }
    let a = normalized(a);
    let b = normalized(b);
    if a.is_constant() || b.is_constant() {
        return Poly::one();
    }
    if a == b {
        return a;
    }
    let x = main_var(a.mask() | b.mask()).unwrap();
    let ina = a.contains_var(x);
    let inb = b.contains_var(x);
    if !ina {
        return gcd_rec(&a, &content_in(&b, x));
    }
    if !inb {
        return gcd_rec(&content_in(&a, x), &b);
    }
    let ca = content_in(&a, x);
    let cb = content_in(&b, x);
    let c = gcd_rec(&ca, &cb);
    let mut f = a.exact_div(&ca).expect("content divides");
    let mut g = b.exact_div(&cb).expect("content divides");
    if deg_in(&f, x) < deg_in(&g, x) {
        std::mem::swap(&mut f, &mut g);
    }
    let prim = loop {
        let r = pseudo_rem(&f, &g, x);
        if r.is_zero() {
            break g;
        }
        if deg_in(&r, x) == 0 {
            break Poly::one();
        }
        f = g;
        let cr = content_in(&r, x);
        g = r.exact_div(&cr).expect("content divides");
    };
    let cp = content_in(&prim, x);
    let prim = prim.exact_div(&cp).expect("content divides");
    normalized(&c.mul(&prim))
}

/// Greatest common divisor in the Laurent ring: monomials are units, so the
/// result has no monomial factor, integer content 1 and positive leading
/// coefficient.
pub fn gcd(a: &Poly, b: &Poly) -> Poly {
    let a = normalized(a);
    let b = normalized(b);
    gcd_rec(&a, &b)
}

/// Variables occurring in `p`, ascending.
pub fn vars_of(p: &Poly) -> Vec<VarId> {
    let m = p.mask();
    (0..NVARS).filter(|i| m & (1 << i) != 0).collect()
}

fn is_homogeneous(p: &Poly) -> bool {
    let mut it = p.terms().iter().map(|(m, _)| m.degree());
    match it.next() {
        None => true,
        Some(d) => it.all(|e| e == d),
    }
}

fn small_divisors(n: &BigInt) -> Option<Vec<i64>> {
    let n = n.abs().to_i64()?;
    if n == 0 || n > 1_000_000 {
        return None;
    }
    let mut out = Vec::new();
    let mut d = 1;
    while d * d <= n {
        if n % d == 0 {
            out.push(d);
            if d != n / d {
                out.push(n / d);
            }
        }
        d += 1;
    }
    Some(out)
}

/// Univariate view (dense, ascending) of a polynomial in one variable `x`,
/// with the other variable `y` (if any) set to 1.
fn dense_univariate(p: &Poly, x: VarId) -> Vec<BigInt> {
    let deg = p.max_exp(x).max(0) as usize;
    let mut c = vec![BigInt::zero(); deg + 1];
    for (m, r) in p.terms() {
        c[m.exp(x) as usize] += r.numer();
    }
    c
}

/// Pull out rational linear factors of a univariate polynomial, or of a
/// homogeneous polynomial in two variables. Returns the linear factors found
/// (with multiplicity) and the remaining cofactor, all normalized.
pub fn split_linear(p: &Poly) -> (Vec<Poly>, Poly) {
    let p = normalized(p);
    let vars = vars_of(&p);
    let (x, y) = match vars.len() {
        1 => (vars[0], None),
        2 if is_homogeneous(&p) => (vars[1], Some(vars[0])),
        _ => return (Vec::new(), p),
    };
    let mut factors = Vec::new();
    let mut rest = p;
    loop {
        if rest.max_exp(x) <= 1 {
            break;
        }
        let dense = dense_univariate(&rest, x);
        let a0 = dense[0].clone();
        let an = dense.last().unwrap().clone();
        if a0.is_zero() {
            break;
        }
        let (Some(ps), Some(qs)) = (small_divisors(&a0), small_divisors(&an)) else {
            break;
        };
        let mut found = None;
        'search: for &q in &qs {
            for &pp in &ps {
                for s in [1i64, -1] {
                    let num = s * pp;
                    if num.gcd(&q) != 1 {
                        continue;
                    }
                    // evaluate at x = num/q, scaled by q^deg
                    let deg = dense.len() - 1;
                    let mut acc = BigInt::zero();
                    let bn = BigInt::from(num);
                    let bq = BigInt::from(q);
                    for (k, c) in dense.iter().enumerate() {
                        acc += c * bn.pow(k as u32) * bq.pow((deg - k) as u32);
                    }
                    if acc.is_zero() {
                        found = Some((num, q));
                        break 'search;
                    }
                }
            }
        }
        let Some((num, q)) = found else { break };
        // factor q*x - num*y (or q*x - num)
        let lin = match y {
            None => Poly::var(x).scale(&Rat::int(q)).sub(&Poly::constant(Rat::int(num))),
            Some(y) => Poly::var(x).scale(&Rat::int(q)).sub(&Poly::var(y).scale(&Rat::int(num))),
        };
        let lin = normalized(&lin);
        match rest.exact_div(&lin) {
            Some(r) => {
                factors.push(lin);
                rest = normalized(&r);
            }
            None => break,
        }
    }
    if rest.max_exp(x) == 1 && !rest.is_constant() {
        factors.push(rest.clone());
        rest = Poly::one();
    }
    (factors, rest)
}

/// Cheap irreducibility certificate for a normalized, non-constant polynomial.
pub fn certified_irreducible(p: &Poly) -> bool {
    let vars = vars_of(p);
    if vars.is_empty() {
        return false;
    }
    // linear in some variable with coprime coefficients
    for &x in &vars {
        if p.max_exp(x) == 1 && p.min_exp(x) == 0 {
            let c = p.coeffs_in(x);
            let c1 = c.get(&1).cloned().unwrap_or_else(Poly::zero);
            let c0 = c.get(&0).cloned().unwrap_or_else(Poly::zero);
            if c0.is_zero() {
                continue;
            }
            if gcd(&c1, &c0).is_constant() {
                return true;
            }
        }
    }
    // univariate or homogeneous bivariate of degree <= 3 without rational roots
    let uni = vars.len() == 1 || (vars.len() == 2 && is_homogeneous(p));
    if uni {
        let x = *vars.last().unwrap();
        let deg = p.max_exp(x);
        if deg <= 3 {
            let (lin, _) = split_linear(p);
            return lin.is_empty() || (lin.len() == 1 && lin[0] == normalized(p));
        }
    }
    false
}
