//! Canonical printer. Output is in the parser's grammar, and for normal forms
//! it is bit-exact (terms in decreasing graded-lex order, factors by variable
//! order), which is what the golden files pin.

use super::context::{Context, E};
use super::normal::NormalForm;
use super::poly::{Mono, Poly};
use super::rat::Rat;
use super::tree::{Expr, Node};

fn var_power(v: usize, k: i8) -> String {
    let ctx = Context::standard();
    if v == E {
        return match k {
            1 => "exp(u)".into(),
            -1 => "exp(-u)".into(),
            _ => format!("exp({k}*u)"),
        };
    }
    let name = ctx.name(v);
    match k {
        1 => name.to_string(),
        k if k < 0 => format!("{name}^({k})"),
        k => format!("{name}^{k}"),
    }
}

pub fn print_mono(m: &Mono) -> String {
    let parts: Vec<String> = m.vars().map(|(v, k)| var_power(v, k)).collect();
    if parts.is_empty() {
        "1".into()
    } else {
        parts.join("*")
    }
}

fn term(m: &Mono, c: &Rat, first: bool) -> String {
    let neg = c.is_negative();
    let a = c.abs();
    let body = if m.is_one() {
        a.to_string()
    } else if a.is_one() {
        print_mono(m)
    } else {
        format!("{a}*{}", print_mono(m))
    };
    match (first, neg) {
        (true, true) => format!("-{body}"),
        (true, false) => body,
        (false, true) => format!(" - {body}"),
        (false, false) => format!(" + {body}"),
    }
}

pub fn print_poly(p: &Poly) -> String {
    if p.is_zero() {
        return "0".into();
    }
    let mut s = String::new();
    for (i, (m, c)) in p.terms().iter().enumerate() {
        s.push_str(&term(m, c, i == 0));
    }
    s
}

pub fn print_normal(n: &NormalForm) -> String {
    let num = print_poly(n.num());
    if n.den().is_empty() {
        return num;
    }
    let num = if n.num().len() > 1 { format!("({num})") } else { num };
    let parts: Vec<String> = n
        .den()
        .iter()
        .map(|a| {
            let body = print_poly(&a.poly);
            let body = if a.poly.len() > 1 { format!("({body})") } else { body };
            if a.exp == 1 {
                body
            } else {
                format!("{body}^{}", a.exp)
            }
        })
        .collect();
    if parts.len() == 1 {
        format!("{num}/{}", parts[0])
    } else {
        format!("{num}/({})", parts.join("*"))
    }
}

impl std::fmt::Display for NormalForm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&print_normal(self))
    }
}

// precedence: sum 1, product 2, unary minus / power 3, atom 4
fn prec(e: &Expr) -> u8 {
    match e.node() {
        Node::Add(_) => 1,
        Node::Mul(_) | Node::Div(..) => 2,
        Node::Const(c) if c.is_negative() || !c.is_integer() => 2,
        Node::Pow(..) => 3,
        _ => 4,
    }
}

fn wrap(e: &Expr, min: u8) -> String {
    let s = print_expr(e);
    if prec(e) < min {
        format!("({s})")
    } else {
        s
    }
}

pub fn print_expr(e: &Expr) -> String {
    match e.node() {
        Node::Const(c) => c.to_string(),
        Node::Var(v) => var_power(*v, 1),
        Node::Add(xs) => {
            let mut s = String::new();
            for (i, x) in xs.iter().enumerate() {
                let neg_part = match x.node() {
                    Node::Mul(fs) if fs[0].as_const().map(|c| c.is_negative()).unwrap_or(false) => {
                        let c = fs[0].as_const().unwrap().abs();
                        let mut rest: Vec<Expr> = fs[1..].to_vec();
                        if !c.is_one() {
                            rest.insert(0, Expr::constant(c));
                        }
                        Some(Expr::product(rest))
                    }
                    Node::Const(c) if c.is_negative() => Some(Expr::constant(c.abs())),
                    _ => None,
                };
                match (i, neg_part) {
                    (0, None) => s.push_str(&wrap(x, 1)),
                    (0, Some(p)) => s.push_str(&format!("-{}", wrap(&p, 3))),
                    (_, None) => s.push_str(&format!(" + {}", wrap(x, 2))),
                    (_, Some(p)) => s.push_str(&format!(" - {}", wrap(&p, 2))),
                }
            }
            s
        }
        Node::Mul(xs) => {
            let parts: Vec<String> = xs
                .iter()
                .enumerate()
                .map(|(i, x)| match (i, x.as_const()) {
                    (0, Some(c)) if c.is_negative() && c.is_integer() => c.to_string(),
                    _ => wrap(x, 3),
                })
                .collect();
            parts.join("*")
        }
        Node::Pow(b, k) => {
            if let Node::Var(v) = b.node() {
                if *v == E {
                    return var_power(E, *k as i8);
                }
            }
            let base = wrap(b, 4);
            if *k < 0 {
                format!("{base}^({k})")
            } else {
                format!("{base}^{k}")
            }
        }
        Node::Div(a, b) => format!("{}/{}", wrap(a, 2), wrap(b, 3)),
    }
}

#[cfg(test)]
mod tests {
    use crate::expr::parse::{parse, parse_normal};
    use crate::expr::tree::normalize;

    #[test]
    fn normal_form_printing_round_trips() {
        for s in [
            "5*(u2 - u1^2)*u3 - 5*u1*u2^2 + u1^5",
            "exp(u) + exp(-2*u)",
            "1/f(u1) - 3/7*u1^(-2)",
            "2*fa(uy)*u/(uy - a)",
            "sqrt(c)*wp(u) - c",
        ] {
            let n = parse_normal(s).unwrap();
            let printed = n.to_string();
            assert_eq!(parse_normal(&printed).unwrap(), n, "{printed}");
            assert_eq!(parse_normal(&printed).unwrap().to_string(), printed);
        }
    }

    #[test]
    fn expression_printing_round_trips() {
        for s in ["-u1^2 + 2*u1*(u2 - 1)", "(u1 - f(u1))/(2*f(u1))", "-(u + 1)^(-2)", "exp(-2*u)*u1"] {
            let e = parse(s).unwrap();
            let again = parse(&e.to_string()).unwrap();
            assert_eq!(normalize(&again).unwrap(), normalize(&e).unwrap(), "{e}");
        }
    }

    #[test]
    fn constants_print_exactly() {
        assert_eq!(parse_normal("3/6").unwrap().to_string(), "1/2");
        assert_eq!(parse_normal("0").unwrap().to_string(), "0");
        assert_eq!(parse_normal("-u1").unwrap().to_string(), "-u1");
    }
}
