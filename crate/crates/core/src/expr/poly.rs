//! Sparse multivariate Laurent polynomials over Q.
//!
//! Monomials are dense exponent vectors over the fixed variable table of the
//! standard context (at most [`NVARS`] variables). Exponents may be negative:
//! every base variable is a unit of the ring, which is how `1/u1`, `e^{-2u}`
//! and `1/ω` stay polynomial-sized without any denominator bookkeeping.
//! Terms are kept sorted in decreasing graded-lexicographic order with no
//! zero coefficients, so structural equality is value equality.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use rustc_hash::FxHashMap;

use super::rat::Rat;

pub const NVARS: usize = 64;

pub type VarId = usize;

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Mono {
    deg: i16,
    e: [i8; NVARS],
}

impl Mono {
    pub const ONE: Mono = Mono { deg: 0, e: [0; NVARS] };

    pub fn var(v: VarId, k: i8) -> Mono {
        let mut m = Mono::ONE;
        m.e[v] = k;
        m.deg = k as i16;
        m
    }

    pub fn from_exps(e: [i8; NVARS]) -> Mono {
        let deg = e.iter().map(|&x| x as i16).sum();
        Mono { deg, e }
    }

    #[inline]
    pub fn exp(&self, v: VarId) -> i8 {
        self.e[v]
    }

    pub fn exps(&self) -> &[i8; NVARS] {
        &self.e
    }

    pub fn degree(&self) -> i16 {
        self.deg
    }

    pub fn is_one(&self) -> bool {
        self.deg == 0 && self.e.iter().all(|&x| x == 0)
    }

    /// Product; callers guarantee (via [`Poly::exp_bounds`]) that no
    /// exponent leaves the `i8` range.
    #[inline]
    pub fn mul(&self, o: &Mono) -> Mono {
        let mut e = [0i8; NVARS];
        for i in 0..NVARS {
            e[i] = self.e[i].wrapping_add(o.e[i]);
        }
        Mono { deg: self.deg + o.deg, e }
    }

    #[inline]
    pub fn div(&self, o: &Mono) -> Mono {
        let mut e = [0i8; NVARS];
        for i in 0..NVARS {
            e[i] = self.e[i].wrapping_sub(o.e[i]);
        }
        Mono { deg: self.deg - o.deg, e }
    }

    pub fn inv(&self) -> Mono {
        Mono::ONE.div(self)
    }

    pub fn with_exp(&self, v: VarId, k: i8) -> Mono {
        let mut m = *self;
        m.deg += k as i16 - m.e[v] as i16;
        m.e[v] = k;
        m
    }

    /// Componentwise minimum (the monomial gcd in the Laurent sense).
    pub fn meet(&self, o: &Mono) -> Mono {
        let mut e = [0i8; NVARS];
        for i in 0..NVARS {
            e[i] = self.e[i].min(o.e[i]);
        }
        Mono::from_exps(e)
    }

    pub fn divides(&self, o: &Mono) -> bool {
        (0..NVARS).all(|i| self.e[i] <= o.e[i])
    }

    pub fn vars(&self) -> impl Iterator<Item = (VarId, i8)> + '_ {
        self.e.iter().enumerate().filter(|(_, &k)| k != 0).map(|(i, &k)| (i, k))
    }

    pub fn mask(&self) -> u64 {
        let mut m = 0u64;
        for (i, &k) in self.e.iter().enumerate() {
            if k != 0 {
                m |= 1 << i;
            }
        }
        m
    }
}

impl Ord for Mono {
    /// Graded lexicographic: total degree first, then exponents compared from
    /// the highest-index variable down.
    fn cmp(&self, o: &Mono) -> Ordering {
        match self.deg.cmp(&o.deg) {
            Ordering::Equal => {
                for i in (0..NVARS).rev() {
                    match self.e[i].cmp(&o.e[i]) {
                        Ordering::Equal => continue,
                        c => return c,
                    }
                }
                Ordering::Equal
            }
            c => c,
        }
    }
}

impl PartialOrd for Mono {
    fn partial_cmp(&self, o: &Mono) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

impl fmt::Debug for Mono {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.vars().map(|(v, k)| format!("x{v}^{k}")).collect();
        if parts.is_empty() {
            write!(f, "1")
        } else {
            write!(f, "{}", parts.join("*"))
        }
    }
}

#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Poly {
    terms: Vec<(Mono, Rat)>,
}

impl fmt::Debug for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self.terms.iter().map(|(m, c)| format!("{c}*{m:?}")).collect();
        write!(f, "{}", parts.join(" + "))
    }
}

pub type Accum = FxHashMap<Mono, Rat>;

pub fn accum_add(acc: &mut Accum, m: Mono, c: Rat) {
    use std::collections::hash_map::Entry;
    match acc.entry(m) {
        Entry::Occupied(mut o) => {
            let s = o.get() + &c;
            if s.is_zero() {
                o.remove();
            } else {
                *o.get_mut() = s;
            }
        }
        Entry::Vacant(v) => {
            if !c.is_zero() {
                v.insert(c);
            }
        }
    }
}

impl Poly {
    pub fn zero() -> Poly {
        Poly { terms: Vec::new() }
    }

    pub fn one() -> Poly {
        Poly::constant(Rat::ONE)
    }

    pub fn constant(c: Rat) -> Poly {
        if c.is_zero() {
            Poly::zero()
        } else {
            Poly { terms: vec![(Mono::ONE, c)] }
        }
    }

    pub fn var(v: VarId) -> Poly {
        Poly { terms: vec![(Mono::var(v, 1), Rat::ONE)] }
    }

    pub fn monomial(m: Mono, c: Rat) -> Poly {
        if c.is_zero() {
            Poly::zero()
        } else {
            Poly { terms: vec![(m, c)] }
        }
    }

    pub fn from_accum(acc: Accum) -> Poly {
        let mut terms: Vec<(Mono, Rat)> = acc.into_iter().filter(|(_, c)| !c.is_zero()).collect();
        terms.sort_unstable_by(|a, b| b.0.cmp(&a.0));
        Poly { terms }
    }

    pub fn from_terms(it: impl IntoIterator<Item = (Mono, Rat)>) -> Poly {
        let mut acc = Accum::default();
        for (m, c) in it {
            accum_add(&mut acc, m, c);
        }
        Poly::from_accum(acc)
    }

    pub fn terms(&self) -> &[(Mono, Rat)] {
        &self.terms
    }

    pub fn into_terms(self) -> Vec<(Mono, Rat)> {
        self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_constant(&self) -> bool {
        self.terms.is_empty() || (self.terms.len() == 1 && self.terms[0].0.is_one())
    }

    pub fn constant_value(&self) -> Option<Rat> {
        match self.terms.len() {
            0 => Some(Rat::ZERO),
            1 if self.terms[0].0.is_one() => Some(self.terms[0].1.clone()),
            _ => None,
        }
    }

    pub fn is_one(&self) -> bool {
        self.terms.len() == 1 && self.terms[0].0.is_one() && self.terms[0].1.is_one()
    }

    /// Single term, any coefficient.
    pub fn as_monomial(&self) -> Option<(Mono, Rat)> {
        if self.terms.len() == 1 {
            Some(self.terms[0].clone())
        } else {
            None
        }
    }

    pub fn leading(&self) -> Option<&(Mono, Rat)> {
        self.terms.first()
    }

    pub fn mask(&self) -> u64 {
        self.terms.iter().fold(0, |m, (mono, _)| m | mono.mask())
    }

    pub fn contains_var(&self, v: VarId) -> bool {
        self.terms.iter().any(|(m, _)| m.exp(v) != 0)
    }

    pub fn max_exp(&self, v: VarId) -> i8 {
        self.terms.iter().map(|(m, _)| m.exp(v)).max().unwrap_or(0)
    }

    pub fn min_exp(&self, v: VarId) -> i8 {
        self.terms.iter().map(|(m, _)| m.exp(v)).min().unwrap_or(0)
    }

    /// Per-variable (min, max) exponents.
    pub fn exp_bounds(&self) -> ([i8; NVARS], [i8; NVARS]) {
        let mut lo = [0i8; NVARS];
        let mut hi = [0i8; NVARS];
        for (m, _) in &self.terms {
            for i in 0..NVARS {
                lo[i] = lo[i].min(m.e[i]);
                hi[i] = hi[i].max(m.e[i]);
            }
        }
        (lo, hi)
    }

    /// True when multiplying `self` by `o` keeps every exponent within i8.
    pub fn mul_fits(&self, o: &Poly) -> bool {
        let (l1, h1) = self.exp_bounds();
        let (l2, h2) = o.exp_bounds();
        (0..NVARS).all(|i| {
            let hi = h1[i] as i16 + h2[i] as i16;
            let lo = l1[i] as i16 + l2[i] as i16;
            hi <= i8::MAX as i16 && lo >= i8::MIN as i16
        })
    }

    /// Monomial gcd of all terms (componentwise minimum exponent).
    pub fn min_mono(&self) -> Mono {
        let mut it = self.terms.iter();
        match it.next() {
            None => Mono::ONE,
            Some((m0, _)) => it.fold(*m0, |acc, (m, _)| acc.meet(m)),
        }
    }

    pub fn neg(&self) -> Poly {
        Poly { terms: self.terms.iter().map(|(m, c)| (*m, -c.clone())).collect() }
    }

    pub fn scale(&self, k: &Rat) -> Poly {
        if k.is_zero() {
            return Poly::zero();
        }
        if k.is_one() {
            return self.clone();
        }
        Poly { terms: self.terms.iter().map(|(m, c)| (*m, c * k)).collect() }
    }

    pub fn mul_mono(&self, m: &Mono) -> Poly {
        // multiplying by a monomial preserves the order
        Poly { terms: self.terms.iter().map(|(t, c)| (t.mul(m), c.clone())).collect() }
    }

    pub fn mul_term(&self, m: &Mono, k: &Rat) -> Poly {
        if k.is_zero() {
            return Poly::zero();
        }
        Poly { terms: self.terms.iter().map(|(t, c)| (t.mul(m), c * k)).collect() }
    }

    pub fn add(&self, o: &Poly) -> Poly {
        let (a, b) = (&self.terms, &o.terms);
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                Ordering::Greater => {
                    out.push(a[i].clone());
                    i += 1;
                }
                Ordering::Less => {
                    out.push(b[j].clone());
                    j += 1;
                }
                Ordering::Equal => {
                    let s = &a[i].1 + &b[j].1;
                    if !s.is_zero() {
                        out.push((a[i].0, s));
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        Poly { terms: out }
    }

    pub fn sub(&self, o: &Poly) -> Poly {
        self.add(&o.neg())
    }

    pub fn mul(&self, o: &Poly) -> Poly {
        if self.is_zero() || o.is_zero() {
            return Poly::zero();
        }
        if let Some((m, c)) = o.as_monomial() {
            return self.mul_term(&m, &c);
        }
        if let Some((m, c)) = self.as_monomial() {
            return o.mul_term(&m, &c);
        }
        let mut acc = Accum::default();
        acc.reserve((self.len() * o.len()).min(1 << 20));
        for (m1, c1) in &self.terms {
            for (m2, c2) in &o.terms {
                accum_add(&mut acc, m1.mul(m2), c1 * c2);
            }
        }
        Poly::from_accum(acc)
    }

    pub fn pow(&self, k: u32) -> Poly {
        let mut acc = Poly::one();
        let mut base = self.clone();
        let mut k = k;
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.mul(&base);
            }
            k >>= 1;
            if k > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    /// Partial derivative with respect to an explicit variable.
    pub fn deriv(&self, v: VarId) -> Poly {
        let mut terms = Vec::new();
        for (m, c) in &self.terms {
            let k = m.exp(v);
            if k != 0 {
                terms.push((m.with_exp(v, k - 1), c * &Rat::int(k as i64)));
            }
        }
        // lowering one exponent can reorder terms
        terms.sort_unstable_by(|a, b| b.0.cmp(&a.0));
        Poly { terms }
    }

    /// Group terms by the exponent of `v`; the returned coefficients no
    /// longer contain `v`.
    pub fn coeffs_in(&self, v: VarId) -> BTreeMap<i8, Poly> {
        let mut groups: BTreeMap<i8, Vec<(Mono, Rat)>> = BTreeMap::new();
        for (m, c) in &self.terms {
            groups.entry(m.exp(v)).or_default().push((m.with_exp(v, 0), c.clone()));
        }
        groups
            .into_iter()
            .map(|(k, mut t)| {
                t.sort_unstable_by(|a, b| b.0.cmp(&a.0));
                (k, Poly { terms: t })
            })
            .collect()
    }

    pub fn from_coeffs(v: VarId, coeffs: &BTreeMap<i8, Poly>) -> Poly {
        let mut acc = Accum::default();
        for (&k, p) in coeffs {
            for (m, c) in &p.terms {
                accum_add(&mut acc, m.with_exp(v, m.exp(v) + k), c.clone());
            }
        }
        Poly::from_accum(acc)
    }

    /// Exact quotient `self / d` in the Laurent ring, or `None` when `d` does
    /// not divide `self`.
    pub fn exact_div(&self, d: &Poly) -> Option<Poly> {
        if d.is_zero() {
            return None;
        }
        if self.is_zero() {
            return Some(Poly::zero());
        }
        if let Some((m, c)) = d.as_monomial() {
            return Some(self.mul_term(&m.inv(), &c.recip()));
        }
        let sa = self.min_mono();
        let sd = d.min_mono();
        let a = self.mul_mono(&sa.inv());
        let b = d.mul_mono(&sd.inv());
        // cheap degree screen
        let (_, ha) = a.exp_bounds();
        let (_, hb) = b.exp_bounds();
        if (0..NVARS).any(|i| hb[i] > ha[i]) {
            return None;
        }
        let q = poly_divide(&a, &b)?;
        Some(q.mul_mono(&sa.div(&sd)))
    }

    /// Substitute `v := value` (a polynomial). Negative powers of `v` need an
    /// invertible value and are rejected here.
    pub fn substitute(&self, v: VarId, value: &Poly) -> Option<Poly> {
        let groups = self.coeffs_in(v);
        let mut out = Poly::zero();
        let mut powers: Vec<Poly> = vec![Poly::one()];
        for (&k, c) in &groups {
            if k < 0 {
                if let Some((m, r)) = value.as_monomial() {
                    let p = Poly::monomial(m.inv(), r.recip()).pow((-k) as u32);
                    out = out.add(&c.mul(&p));
                    continue;
                }
                return None;
            }
            while powers.len() <= k as usize {
                let next = powers.last().unwrap().mul(value);
                powers.push(next);
            }
            out = out.add(&c.mul(&powers[k as usize]));
        }
        Some(out)
    }

    /// Rename variables by a permutation-like map (must be injective on the
    /// variables present).
    pub fn rename(&self, map: &dyn Fn(VarId) -> VarId) -> Poly {
        let mut terms: Vec<(Mono, Rat)> = self
            .terms
            .iter()
            .map(|(m, c)| {
                let mut e = [0i8; NVARS];
                for (v, k) in m.vars() {
                    e[map(v)] += k;
                }
                (Mono::from_exps(e), c.clone())
            })
            .collect();
        terms.sort_unstable_by(|a, b| b.0.cmp(&a.0));
        Poly { terms }
    }

    pub fn eval(&self, vals: &[f64]) -> f64 {
        self.terms.iter().map(|(m, c)| c.to_f64() * mono_eval(m, vals)).sum()
    }

    /// Largest absolute contribution of a single term.
    pub fn max_term_abs(&self, vals: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(m, c)| (c.to_f64() * mono_eval(m, vals)).abs())
            .fold(0.0, f64::max)
    }
}

pub fn mono_eval(m: &Mono, vals: &[f64]) -> f64 {
    let mut p = 1.0;
    for (v, k) in m.vars() {
        p *= vals[v].powi(k as i32);
    }
    p
}

/// Division of polynomials with nonnegative exponents; `None` if inexact.
fn poly_divide(a: &Poly, b: &Poly) -> Option<Poly> {
    let (lm, lc) = b.terms[0].clone();
    let lc_inv = lc.recip();
    let mut rem: BTreeMap<Mono, Rat> = a.terms.iter().cloned().collect();
    let mut q = Vec::new();
    while let Some((m, c)) = rem.pop_last() {
        if !lm.divides(&m) {
            return None;
        }
        let tm = m.div(&lm);
        let tc = &c * &lc_inv;
        for (bm, bc) in &b.terms[1..] {
            let key = tm.mul(bm);
            let delta = -(&tc * bc);
            match rem.get_mut(&key) {
                Some(v) => {
                    let s = &*v + &delta;
                    if s.is_zero() {
                        rem.remove(&key);
                    } else {
                        *v = s;
                    }
                }
                None => {
                    rem.insert(key, delta);
                }
            }
        }
        q.push((tm, tc));
    }
    // quotient terms come out in decreasing order already
    Some(Poly { terms: q })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x() -> Poly {
        Poly::var(1)
    }
    fn y() -> Poly {
        Poly::var(2)
    }

    #[test]
    fn mul_and_exact_div_roundtrip() {
        let a = x().add(&y()).add(&Poly::one());
        let b = x().sub(&y().scale(&Rat::int(3)));
        let p = a.mul(&b);
        assert_eq!(p.exact_div(&a).unwrap(), b);
        assert_eq!(p.exact_div(&b).unwrap(), a);
        assert!(p.add(&Poly::one()).exact_div(&a).is_none());
    }

    #[test]
    fn laurent_division() {
        let xinv = Poly::monomial(Mono::var(1, -1), Rat::ONE);
        let a = x().add(&Poly::one()).mul(&xinv);
        let b = x().add(&Poly::one());
        assert_eq!(a.exact_div(&b).unwrap(), xinv);
    }

    #[test]
    fn derivative_keeps_order() {
        let p = x().pow(3).add(&x().mul(&y()).scale(&Rat::int(2)));
        let d = p.deriv(1);
        let expect = x().pow(2).scale(&Rat::int(3)).add(&y().scale(&Rat::int(2)));
        assert_eq!(d, expect);
    }

    #[test]
    fn substitute_polynomial() {
        let p = x().pow(2).add(&y());
        let s = p.substitute(1, &y().add(&Poly::one())).unwrap();
        let expect = y().add(&Poly::one()).pow(2).add(&y());
        assert_eq!(s, expect);
    }
}
