use std::fmt;

use num_traits::{One, Signed};

use super::{Expr, ExprKind, Rational};

const SUM: u8 = 1;
const PRODUCT: u8 = 2;
const POWER: u8 = 4;
const ATOM: u8 = 5;

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render(self, 0))
    }
}

fn rational(c: &Rational) -> String {
    if c.is_integer() {
        c.numer().to_string()
    } else {
        format!("{}/{}", c.numer(), c.denom())
    }
}

fn wrap(text: String, prec: u8, min: u8) -> String {
    if prec < min {
        format!("({text})")
    } else {
        text
    }
}

fn render(e: &Expr, min: u8) -> String {
    match e.kind() {
        ExprKind::Const(c) => {
            let prec = if c.is_negative() {
                SUM
            } else if c.is_integer() {
                ATOM
            } else {
                PRODUCT
            };
            wrap(rational(c), prec, min)
        }
        ExprKind::Var(v) => v.name().to_string(),
        ExprKind::Param(p) => p.to_string(),
        ExprKind::Exp(a) => format!("exp({})", render(a, 0)),
        ExprKind::Root { index, radicand, branch } => {
            if *branch == 0 {
                format!("root({}, {index})", render(radicand, 0))
            } else {
                format!("root({}, {index}, {branch})", render(radicand, 0))
            }
        }
        ExprKind::Pow(b, x) => wrap(power(b, x), POWER, min),
        ExprKind::Product(_) => {
            let (neg, body) = signed_product(e);
            if neg {
                wrap(format!("-{body}"), SUM, min)
            } else {
                wrap(body, PRODUCT, min)
            }
        }
        ExprKind::Sum(items) => {
            let mut out = String::new();
            for (i, t) in items.iter().enumerate() {
                let (neg, body) = signed_term(t);
                match (i, neg) {
                    (0, true) => out.push('-'),
                    (0, false) => {}
                    (_, true) => out.push_str(" - "),
                    (_, false) => out.push_str(" + "),
                }
                out.push_str(&body);
            }
            wrap(out, SUM, min)
        }
    }
}

fn power(b: &Expr, x: &Expr) -> String {
    let exponent = match x.as_const() {
        Some(c) if c.is_integer() && !c.is_negative() => rational(c),
        _ => format!("({})", render(x, 0)),
    };
    format!("{}^{exponent}", render(b, ATOM))
}

fn signed_term(t: &Expr) -> (bool, String) {
    match t.kind() {
        ExprKind::Const(c) if c.is_negative() => (true, rational(&-c)),
        ExprKind::Product(_) => signed_product(t),
        _ => (false, render(t, PRODUCT)),
    }
}

fn signed_product(e: &Expr) -> (bool, String) {
    let ExprKind::Product(items) = e.kind() else {
        return (false, render(e, PRODUCT));
    };
    let mut coef = Rational::one();
    let mut num = Vec::new();
    let mut den = Vec::new();
    for it in items {
        match it.kind() {
            ExprKind::Const(c) => coef = c.clone(),
            ExprKind::Pow(b, x) => match x.as_const() {
                Some(c) if c.is_negative() => {
                    let flipped = -c;
                    if flipped.is_one() {
                        den.push(render(b, POWER));
                    } else {
                        den.push(power(b, &Expr::constant(flipped)));
                    }
                }
                _ => num.push(render(it, PRODUCT)),
            },
            _ => num.push(render(it, PRODUCT)),
        }
    }
    let neg = coef.is_negative();
    let coef = coef.abs();
    if !coef.numer().is_one() {
        num.insert(0, coef.numer().to_string());
    }
    if !coef.denom().is_one() {
        den.insert(0, coef.denom().to_string());
    }
    let mut body = if num.is_empty() { "1".to_string() } else { num.join("*") };
    match den.len() {
        0 => {}
        1 => {
            body.push('/');
            body.push_str(&den[0]);
        }
        _ => {
            body.push_str("/(");
            body.push_str(&den.join("*"));
            body.push(')');
        }
    }
    (neg, body)
}

#[cfg(test)]
mod tests {
    use crate::expr::parse;

    #[test]
    fn prints_readable_forms() {
        for src in ["r^4/3", "(x*r + 3*q)^(4/3)", "-6*q*r/p", "exp(r)", "2^(1/2)*x - (3/10)^(1/3)"] {
            let e = parse(src).unwrap();
            let printed = e.to_string();
            assert_eq!(parse(&printed).unwrap(), e, "{src} printed as {printed}");
        }
    }

    #[test]
    fn root_and_branch_syntax() {
        let e = parse("root(q, 2, 1) + root(p, 3)").unwrap();
        let text = e.to_string();
        assert!(text.contains("root(q, 2, 1)"), "{text}");
        assert!(text.contains("root(p, 3)"), "{text}");
    }
}
