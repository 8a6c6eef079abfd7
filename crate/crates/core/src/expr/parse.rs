//! Recursive-descent parser for the expression grammar.
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' exponent)?
//! exponent:= ['-'] integer | '(' ['-'] integer ')'
//! primary := integer | ident | ident '(' expr ')' | '(' expr ')'
//! ```
//!
//! Call forms resolve to registered symbols by comparing the normalized
//! argument with each symbol's argument: `f(u1)`, `fa(uy+b)`, `sqrt(c)`,
//! `exp(k*u)` (any integer `k`), `ln(u1)`, `w(u)`, `wp(u)`.

use super::context::{Context, Relation, E, L, P, U, W};
use super::normal::NormalForm;
use super::poly::Poly;
use super::rat::Rat;
use super::tree::{normalize, Expr};
use crate::error::{Error, Result};

use num_bigint::BigInt;

pub fn parse(text: &str) -> Result<Expr> {
    let mut p = Parser { src: text.as_bytes(), pos: 0 };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(p.error("unexpected trailing input"));
    }
    Ok(e)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn error(&self, msg: &str) -> Error {
        Error::Syntax { pos: self.pos, msg: msg.to_string() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: u8) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.error(&format!("expected `{}`", c as char)))
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut items = vec![self.term()?];
        loop {
            if self.eat(b'+') {
                items.push(self.term()?);
            } else if self.eat(b'-') {
                let t = self.term()?;
                items.push(-&t);
            } else {
                break;
            }
        }
        Ok(Expr::sum(items))
    }

    fn term(&mut self) -> Result<Expr> {
        let mut acc = self.unary()?;
        loop {
            if self.eat(b'*') {
                let r = self.unary()?;
                acc = &acc * &r;
            } else if self.eat(b'/') {
                let r = self.unary()?;
                if r.is_const_zero() {
                    return Err(Error::DivisionByZero);
                }
                acc = acc.quotient(&r);
            } else {
                break;
            }
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.eat(b'-') {
            let e = self.unary()?;
            return Ok(-&e);
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.primary()?;
        if self.eat(b'^') {
            let paren = self.eat(b'(');
            let neg = self.eat(b'-');
            let start = self.pos;
            let n = self.integer()?;
            let k: i32 = n
                .try_into()
                .map_err(|_| Error::Syntax { pos: start, msg: "exponent too large".into() })?;
            if paren {
                self.expect(b')')?;
            }
            return Ok(base.pow(if neg { -k } else { k }));
        }
        Ok(base)
    }

    fn integer(&mut self) -> Result<BigInt> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.error("expected integer"));
        }
        let s = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        Ok(s.parse().unwrap())
    }

    fn primary(&mut self) -> Result<Expr> {
        match self.peek() {
            Some(c) if c.is_ascii_digit() => {
                let n = self.integer()?;
                Ok(Expr::constant(Rat::from_bigints(n, BigInt::from(1))))
            }
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(b')')?;
                Ok(e)
            }
            Some(c) if c.is_ascii_alphabetic() => {
                let start = self.pos;
                while self.pos < self.src.len() && self.src[self.pos].is_ascii_alphanumeric() {
                    self.pos += 1;
                }
                let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap().to_string();
                if self.peek() == Some(b'(') {
                    self.pos += 1;
                    let arg_pos = self.pos;
                    let arg = self.expr()?;
                    self.expect(b')')?;
                    return call(&name, &arg, start, arg_pos);
                }
                Context::standard()
                    .lookup(&name)
                    .map(Expr::var)
                    .ok_or(Error::UnknownIdentifier { pos: start, name })
            }
            Some(_) => Err(self.error("unexpected character")),
            None => Err(self.error("unexpected end of input")),
        }
    }
}

fn arg_poly(arg: &Expr, pos: usize) -> Result<Poly> {
    let n = normalize(arg)?;
    if !n.is_polynomial() {
        return Err(Error::Syntax { pos, msg: "function argument must be polynomial".into() });
    }
    Ok(n.num().clone())
}

fn call(name: &str, arg: &Expr, pos: usize, arg_pos: usize) -> Result<Expr> {
    let ctx = Context::standard();
    let unknown = || Error::UnknownIdentifier { pos, name: format!("{name}(…)") };
    let a = arg_poly(arg, arg_pos)?;
    let is = |v| a == Poly::var(v);
    match name {
        "exp" => {
            let (m, c) = a.as_monomial().ok_or_else(unknown)?;
            if m.exp(U) != 1 || m.degree() != 1 || !c.is_integer() {
                return Err(unknown());
            }
            let k: i32 = c.to_f64() as i32;
            Ok(Expr::var(E).pow(k))
        }
        "ln" if is(super::context::ux(1)) => Ok(Expr::var(L)),
        "w" if is(U) => Ok(Expr::var(W)),
        "wp" if is(U) => Ok(Expr::var(P)),
        "f" | "fa" | "sqrt" => {
            let a3 = Poly::var(super::context::param("a")).pow(3);
            let found = ctx.symbols_named(name).find(|v| match &v.symbol.as_ref().unwrap().relation {
                Some(Relation::Cubic { arg, k }) => {
                    *arg == a && (if name == "f" { k.is_one() } else { *k == a3 })
                }
                Some(Relation::Sqrt { arg }) => *arg == a,
                _ => false,
            });
            found.map(|v| Expr::var(v.id)).ok_or_else(unknown)
        }
        _ => Err(unknown()),
    }
}

/// Parse and normalize in one step.
pub fn parse_normal(text: &str) -> Result<NormalForm> {
    normalize(&parse(text)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::context::{ux, uy, F_X, FAB_Y, SC};

    #[test]
    fn precedence_and_unary_minus() {
        let a = parse_normal("-u1^2 + 2*u1*u2 - 3/4").unwrap();
        let b = parse_normal("(2*u2 - u1)*u1 - 3/4").unwrap();
        assert_eq!(a, b);
        assert_eq!(parse_normal("2^3").unwrap(), NormalForm::int(8));
        assert_eq!(parse_normal("u1^(-1)*u1").unwrap(), NormalForm::int(1));
    }

    #[test]
    fn call_forms_resolve() {
        assert_eq!(parse("exp(-2*u)").unwrap(), Expr::var(E).pow(-2));
        assert_eq!(parse("f(u1)").unwrap(), Expr::var(F_X));
        assert_eq!(parse("fa(uy + b)").unwrap(), Expr::var(FAB_Y));
        assert_eq!(parse("sqrt(c)").unwrap(), Expr::var(SC));
        assert_eq!(parse("uxx").unwrap(), Expr::var(ux(2)));
        assert_eq!(parse("v1").unwrap(), Expr::var(uy(1)));
    }

    #[test]
    fn errors_carry_positions() {
        match parse("u1 + ") {
            Err(Error::Syntax { pos, .. }) => assert_eq!(pos, 5),
            other => panic!("{other:?}"),
        }
        match parse("u1 + zeta") {
            Err(Error::UnknownIdentifier { pos, name }) => {
                assert_eq!(pos, 5);
                assert_eq!(name, "zeta");
            }
            other => panic!("{other:?}"),
        }
        assert!(parse("f(u2)").is_err());
        assert!(parse("(u1").is_err());
    }
}
