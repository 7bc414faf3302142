//! Exact symbolic expressions over the jet coordinates `x, u, p, q, r` (and `a13`).
//!
//! Nodes are immutable and shared through `Arc`; every constructor returns a normalized
//! node (flattened sums and products, folded rational constants, merged like terms).
//! Nothing beyond that is simplified, in particular radicals are kept formal.

mod diff;
mod eval;
mod parse;
mod print;
mod subst;
mod zero;

use std::collections::hash_map::DefaultHasher;
use std::collections::{BTreeSet, HashMap, HashSet};
use std::hash::{Hash, Hasher};
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub use diff::{partial, total_derivative, Differentiator};
pub use eval::{evaluate, EvalError, Evaluator, JetSample, ParamBinding};
pub use parse::{parse, parse_with, ParseError, ParseErrorKind, ParseOptions};
pub use subst::{compose_jet, substitute, Substitution};
pub use zero::{is_identically_zero, zero_test, zero_test_any, SampleSource, ZeroEvidence, ZeroTestConfig, ZeroTestError};

pub type Rational = num_rational::BigRational;

/// Jet coordinate; `A13` is the extra group parameter of the prolonged six-dimensional space.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum JetVar {
    X,
    U,
    P,
    Q,
    R,
    A13,
}

impl JetVar {
    pub const BASE: [JetVar; 5] = [JetVar::X, JetVar::U, JetVar::P, JetVar::Q, JetVar::R];
    pub const ALL: [JetVar; 6] = [JetVar::X, JetVar::U, JetVar::P, JetVar::Q, JetVar::R, JetVar::A13];

    pub fn name(self) -> &'static str {
        match self {
            JetVar::X => "x",
            JetVar::U => "u",
            JetVar::P => "p",
            JetVar::Q => "q",
            JetVar::R => "r",
            JetVar::A13 => "a13",
        }
    }

    pub fn from_name(name: &str) -> Option<JetVar> {
        Some(match name {
            "x" => JetVar::X,
            "u" => JetVar::U,
            "p" => JetVar::P,
            "q" => JetVar::Q,
            "r" => JetVar::R,
            "a13" => JetVar::A13,
            _ => return None,
        })
    }

    pub fn index(self) -> usize {
        self as usize
    }

    fn bit(self) -> u8 {
        1 << (self as u8)
    }
}

#[derive(Clone, Debug)]
pub enum ExprKind {
    Const(Rational),
    Var(JetVar),
    Param(Arc<str>),
    Sum(Vec<Expr>),
    Product(Vec<Expr>),
    Pow(Expr, Expr),
    Exp(Expr),
    /// Formal k-th root of the radicand on a fixed branch:
    /// principal root times `exp(2*pi*i*branch/k)`.
    Root { index: u32, radicand: Expr, branch: u32 },
}

#[derive(Debug)]
struct Node {
    kind: ExprKind,
    hash: u64,
    vars: u8,
    has_params: bool,
    approx: f64,
}

/// Shared handle to an immutable expression node.
#[derive(Clone, Debug)]
pub struct Expr(Arc<Node>);

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        if Arc::ptr_eq(&self.0, &other.0) {
            return true;
        }
        if self.0.hash != other.0.hash {
            return false;
        }
        match (&self.0.kind, &other.0.kind) {
            (ExprKind::Const(a), ExprKind::Const(b)) => a == b,
            (ExprKind::Var(a), ExprKind::Var(b)) => a == b,
            (ExprKind::Param(a), ExprKind::Param(b)) => a == b,
            (ExprKind::Sum(a), ExprKind::Sum(b)) | (ExprKind::Product(a), ExprKind::Product(b)) => a == b,
            (ExprKind::Pow(a, b), ExprKind::Pow(c, d)) => a == c && b == d,
            (ExprKind::Exp(a), ExprKind::Exp(b)) => a == b,
            (
                ExprKind::Root { index: i, radicand: a, branch: x },
                ExprKind::Root { index: j, radicand: b, branch: y },
            ) => i == j && x == y && a == b,
            _ => false,
        }
    }
}

impl Eq for Expr {}

impl Hash for Expr {
    fn hash<H: Hasher>(&self, state: &mut H) {
        state.write_u64(self.0.hash);
    }
}

fn rank(kind: &ExprKind) -> u8 {
    match kind {
        ExprKind::Const(_) => 0,
        ExprKind::Var(_) => 1,
        ExprKind::Param(_) => 2,
        ExprKind::Pow(..) => 3,
        ExprKind::Root { .. } => 4,
        ExprKind::Exp(_) => 5,
        ExprKind::Product(_) => 6,
        ExprKind::Sum(_) => 7,
    }
}

fn order_key(e: &Expr) -> (u8, u64, u64) {
    // Powers sort next to their base so that `x*x^-1`-style products print in a stable order.
    match e.kind() {
        ExprKind::Var(v) => (1, v.index() as u64, 0),
        ExprKind::Param(name) => (2, 0, hash_str(name)),
        ExprKind::Pow(b, _) => {
            let (r, a, h) = order_key(b);
            (r.max(1), a, h ^ e.0.hash.rotate_left(7))
        }
        k => (rank(k), 0, e.0.hash),
    }
}

fn hash_str(s: &str) -> u64 {
    let mut h = DefaultHasher::new();
    s.hash(&mut h);
    h.finish()
}

impl Expr {
    fn from_kind(kind: ExprKind) -> Expr {
        let mut h = DefaultHasher::new();
        let mut vars = 0u8;
        let mut has_params = false;
        let mut approx = f64::NAN;
        rank(&kind).hash(&mut h);
        match &kind {
            ExprKind::Const(c) => {
                c.hash(&mut h);
                approx = c.to_f64().unwrap_or(f64::NAN);
            }
            ExprKind::Var(v) => {
                v.hash(&mut h);
                vars = v.bit();
            }
            ExprKind::Param(p) => {
                p.hash(&mut h);
                has_params = true;
            }
            ExprKind::Sum(items) | ExprKind::Product(items) => {
                items.len().hash(&mut h);
                for it in items {
                    it.0.hash.hash(&mut h);
                    vars |= it.0.vars;
                    has_params |= it.0.has_params;
                }
            }
            ExprKind::Pow(b, e) => {
                for it in [b, e] {
                    it.0.hash.hash(&mut h);
                    vars |= it.0.vars;
                    has_params |= it.0.has_params;
                }
            }
            ExprKind::Exp(a) => {
                a.0.hash.hash(&mut h);
                vars = a.0.vars;
                has_params = a.0.has_params;
            }
            ExprKind::Root { index, radicand, branch } => {
                index.hash(&mut h);
                branch.hash(&mut h);
                radicand.0.hash.hash(&mut h);
                vars = radicand.0.vars;
                has_params = radicand.0.has_params;
            }
        }
        Expr(Arc::new(Node { kind, hash: h.finish(), vars, has_params, approx }))
    }

    pub fn kind(&self) -> &ExprKind {
        &self.0.kind
    }

    /// Stable identity of the shared node, valid while the handle is alive.
    pub fn node_id(&self) -> usize {
        Arc::as_ptr(&self.0) as usize
    }

    pub fn structural_hash(&self) -> u64 {
        self.0.hash
    }

    pub fn constant(c: Rational) -> Expr {
        Expr::from_kind(ExprKind::Const(c))
    }

    pub fn int(n: i64) -> Expr {
        Expr::constant(Rational::from_integer(BigInt::from(n)))
    }

    pub fn ratio(n: i64, d: i64) -> Expr {
        Expr::constant(Rational::new(BigInt::from(n), BigInt::from(d)))
    }

    pub fn zero() -> Expr {
        Expr::int(0)
    }

    pub fn one() -> Expr {
        Expr::int(1)
    }

    pub fn var(v: JetVar) -> Expr {
        Expr::from_kind(ExprKind::Var(v))
    }

    pub fn x() -> Expr {
        Expr::var(JetVar::X)
    }
    pub fn u() -> Expr {
        Expr::var(JetVar::U)
    }
    pub fn p() -> Expr {
        Expr::var(JetVar::P)
    }
    pub fn q() -> Expr {
        Expr::var(JetVar::Q)
    }
    pub fn r() -> Expr {
        Expr::var(JetVar::R)
    }

    pub fn param(name: &str) -> Expr {
        Expr::from_kind(ExprKind::Param(Arc::from(name)))
    }

    pub fn as_const(&self) -> Option<&Rational> {
        match self.kind() {
            ExprKind::Const(c) => Some(c),
            _ => None,
        }
    }

    /// Integer value of a constant node, if it is one and fits.
    pub fn as_integer(&self) -> Option<i64> {
        self.as_const().filter(|c| c.is_integer()).and_then(|c| c.to_integer().to_i64())
    }

    pub fn is_zero(&self) -> bool {
        self.as_const().is_some_and(|c| c.is_zero())
    }

    pub fn is_one(&self) -> bool {
        self.as_const().is_some_and(|c| c.is_one())
    }

    pub fn contains_var(&self, v: JetVar) -> bool {
        self.0.vars & v.bit() != 0
    }

    pub fn is_free_of_jet(&self) -> bool {
        self.0.vars == 0
    }

    pub fn has_params(&self) -> bool {
        self.0.has_params
    }

    pub fn free_vars(&self) -> Vec<JetVar> {
        JetVar::ALL.into_iter().filter(|v| self.contains_var(*v)).collect()
    }

    /// Names of the free parameters, sorted.
    pub fn params(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        let mut seen = HashSet::new();
        let mut stack = vec![self.clone()];
        while let Some(e) = stack.pop() {
            if !e.has_params() || !seen.insert(e.node_id()) {
                continue;
            }
            match e.kind() {
                ExprKind::Param(p) => {
                    out.insert(p.to_string());
                }
                _ => stack.extend(e.children()),
            }
        }
        out
    }

    pub fn children(&self) -> Vec<Expr> {
        match self.kind() {
            ExprKind::Const(_) | ExprKind::Var(_) | ExprKind::Param(_) => Vec::new(),
            ExprKind::Sum(items) | ExprKind::Product(items) => items.clone(),
            ExprKind::Pow(b, e) => vec![b.clone(), e.clone()],
            ExprKind::Exp(a) => vec![a.clone()],
            ExprKind::Root { radicand, .. } => vec![radicand.clone()],
        }
    }

    /// Number of distinct shared nodes.
    pub fn dag_size(&self) -> usize {
        let mut seen = HashSet::new();
        let mut stack = vec![self.clone()];
        while let Some(e) = stack.pop() {
            if seen.insert(e.node_id()) {
                stack.extend(e.children());
            }
        }
        seen.len()
    }

    pub fn neg(&self) -> Expr {
        Expr::product([Expr::int(-1), self.clone()])
    }

    pub fn recip(&self) -> Expr {
        Expr::pow(self, &Expr::int(-1))
    }

    pub fn powi(&self, n: i64) -> Expr {
        Expr::pow(self, &Expr::int(n))
    }

    pub fn square(&self) -> Expr {
        self.powi(2)
    }

    pub fn exp(&self) -> Expr {
        if self.is_zero() {
            return Expr::one();
        }
        Expr::from_kind(ExprKind::Exp(self.clone()))
    }

    /// Formal k-th root on the given branch. Only the trivial radicands 0 and 1 (principal) fold.
    pub fn root(radicand: &Expr, index: u32, branch: u32) -> Expr {
        assert!(index >= 1, "root index must be positive");
        let branch = branch % index;
        if index == 1 || radicand.is_zero() || (radicand.is_one() && branch == 0) {
            return radicand.clone();
        }
        Expr::from_kind(ExprKind::Root { index, radicand: radicand.clone(), branch })
    }

    pub fn sum<I: IntoIterator<Item = Expr>>(terms: I) -> Expr {
        let mut constant = Rational::zero();
        let mut order: Vec<(Expr, Rational)> = Vec::new();
        let mut index: HashMap<Expr, usize> = HashMap::new();
        let mut push = |t: &Expr, constant: &mut Rational| {
            if let ExprKind::Const(c) = t.kind() {
                *constant += c;
                return;
            }
            let (c, rest) = t.split_coefficient();
            match index.get(&rest) {
                Some(&i) => order[i].1 += c,
                None => {
                    index.insert(rest.clone(), order.len());
                    order.push((rest, c));
                }
            }
        };
        for t in terms {
            match t.kind() {
                ExprKind::Sum(items) => {
                    for it in items {
                        push(it, &mut constant);
                    }
                }
                _ => push(&t, &mut constant),
            }
        }
        let mut out: Vec<Expr> = order
            .into_iter()
            .filter(|(_, c)| !c.is_zero())
            .map(|(rest, c)| if c.is_one() { rest } else { Expr::scale(&rest, c) })
            .collect();
        if !constant.is_zero() {
            out.push(Expr::constant(constant));
        }
        match out.len() {
            0 => Expr::zero(),
            1 => out.pop().unwrap(),
            _ => {
                out.sort_by_key(order_key);
                Expr::from_kind(ExprKind::Sum(out))
            }
        }
    }

    fn scale(rest: &Expr, c: Rational) -> Expr {
        let mut factors = vec![Expr::constant(c)];
        match rest.kind() {
            ExprKind::Product(items) => factors.extend(items.iter().cloned()),
            _ => factors.push(rest.clone()),
        }
        Expr::from_kind(ExprKind::Product(factors))
    }

    /// Split `c * rest` with `c` rational.
    fn split_coefficient(&self) -> (Rational, Expr) {
        if let ExprKind::Product(items) = self.kind() {
            if let ExprKind::Const(c) = items[0].kind() {
                let rest = if items.len() == 2 {
                    items[1].clone()
                } else {
                    Expr::from_kind(ExprKind::Product(items[1..].to_vec()))
                };
                return (c.clone(), rest);
            }
        }
        (Rational::one(), self.clone())
    }

    pub fn product<I: IntoIterator<Item = Expr>>(factors: I) -> Expr {
        let mut coef = Rational::one();
        let mut order: Vec<(Expr, Vec<Expr>)> = Vec::new();
        let mut index: HashMap<Expr, usize> = HashMap::new();
        let mut push = |f: &Expr, coef: &mut Rational| {
            let (base, exponent) = match f.kind() {
                ExprKind::Const(c) => {
                    *coef *= c;
                    return;
                }
                ExprKind::Pow(b, e) => (b.clone(), e.clone()),
                _ => (f.clone(), Expr::one()),
            };
            match index.get(&base) {
                Some(&i) => order[i].1.push(exponent),
                None => {
                    index.insert(base.clone(), order.len());
                    order.push((base, vec![exponent]));
                }
            }
        };
        for f in factors {
            match f.kind() {
                ExprKind::Product(items) => {
                    for it in items {
                        push(it, &mut coef);
                    }
                }
                _ => push(&f, &mut coef),
            }
        }
        if coef.is_zero() {
            return Expr::zero();
        }
        let mut out = Vec::with_capacity(order.len());
        let mut redo = false;
        for (base, exps) in order {
            let combined = if exps.len() == 1 { exps.into_iter().next().unwrap() } else { Expr::sum(exps) };
            let p = Expr::pow(&base, &combined);
            match p.kind() {
                ExprKind::Const(c) => coef *= c,
                ExprKind::Product(_) => {
                    // an integer power distributed over a product: merge its factors again
                    redo = true;
                    out.push(p);
                }
                _ => out.push(p),
            }
        }
        if coef.is_zero() {
            return Expr::zero();
        }
        if redo {
            out.push(Expr::constant(coef));
            return Expr::product(out);
        }
        out.sort_by_key(order_key);
        if !coef.is_one() {
            out.insert(0, Expr::constant(coef.clone()));
        }
        match out.len() {
            0 => Expr::constant(coef),
            1 => out.pop().unwrap(),
            _ => Expr::from_kind(ExprKind::Product(out)),
        }
    }

    pub fn pow(base: &Expr, exponent: &Expr) -> Expr {
        if exponent.is_zero() {
            return Expr::one();
        }
        if exponent.is_one() {
            return base.clone();
        }
        let n = exponent.as_integer();
        if let Some(b) = base.as_const() {
            if b.is_one() {
                return Expr::one();
            }
            if let Some(n) = n {
                if b.is_zero() {
                    if n > 0 {
                        return Expr::zero();
                    }
                } else if n.unsigned_abs() <= 4096 {
                    let v = num_traits::pow::pow(b.clone(), n.unsigned_abs() as usize);
                    return Expr::constant(if n < 0 { v.recip() } else { v });
                }
            } else if b.is_zero() {
                if let Some(e) = exponent.as_const() {
                    if e.is_positive() {
                        return Expr::zero();
                    }
                }
            }
        }
        if let Some(n) = n {
            match base.kind() {
                ExprKind::Pow(b, e) => return Expr::pow(b, &(e * exponent)),
                ExprKind::Product(items) => {
                    return Expr::product(items.iter().map(|f| Expr::pow(f, exponent)));
                }
                ExprKind::Exp(a) => return (a * &Expr::int(n)).exp(),
                _ => {}
            }
        }
        Expr::from_kind(ExprKind::Pow(base.clone(), exponent.clone()))
    }

    /// f64 value of a constant node (NaN otherwise).
    pub(crate) fn const_approx(&self) -> f64 {
        self.0.approx
    }
}

impl From<i64> for Expr {
    fn from(n: i64) -> Expr {
        Expr::int(n)
    }
}

impl From<JetVar> for Expr {
    fn from(v: JetVar) -> Expr {
        Expr::var(v)
    }
}

macro_rules! binop {
    ($tr:ident, $m:ident, $body:expr) => {
        impl $tr<Expr> for Expr {
            type Output = Expr;
            fn $m(self, rhs: Expr) -> Expr {
                let f: fn(&Expr, &Expr) -> Expr = $body;
                f(&self, &rhs)
            }
        }
        impl $tr<&Expr> for Expr {
            type Output = Expr;
            fn $m(self, rhs: &Expr) -> Expr {
                let f: fn(&Expr, &Expr) -> Expr = $body;
                f(&self, rhs)
            }
        }
        impl $tr<Expr> for &Expr {
            type Output = Expr;
            fn $m(self, rhs: Expr) -> Expr {
                let f: fn(&Expr, &Expr) -> Expr = $body;
                f(self, &rhs)
            }
        }
        impl $tr<&Expr> for &Expr {
            type Output = Expr;
            fn $m(self, rhs: &Expr) -> Expr {
                let f: fn(&Expr, &Expr) -> Expr = $body;
                f(self, rhs)
            }
        }
    };
}

binop!(Add, add, |a, b| Expr::sum([a.clone(), b.clone()]));
binop!(Sub, sub, |a, b| Expr::sum([a.clone(), b.neg()]));
binop!(Mul, mul, |a, b| Expr::product([a.clone(), b.clone()]));
binop!(Div, div, |a, b| Expr::product([a.clone(), b.recip()]));

impl Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::neg(&self)
    }
}

impl Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::neg(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn like_terms_combine() {
        let x = Expr::x();
        let e = &x + &x - Expr::int(2) * &x;
        assert!(e.is_zero());
        let e = &x * &x / &x;
        assert_eq!(e, x);
    }

    #[test]
    fn constants_fold() {
        let e = Expr::ratio(3, 10) * Expr::ratio(10, 3) + Expr::int(-1);
        assert!(e.is_zero());
        assert_eq!(Expr::pow(&Expr::int(2), &Expr::int(-2)), Expr::ratio(1, 4));
    }

    #[test]
    fn powers_of_products_distribute_for_integers() {
        let x = Expr::x();
        let p = Expr::p();
        let e = (&x * &p).powi(-1) * &x;
        assert_eq!(e, p.recip());
    }

    #[test]
    fn roots_stay_formal() {
        let r = Expr::r();
        let s = Expr::root(&r.square(), 2, 0);
        assert_ne!(s, r);
        assert!(matches!(s.kind(), ExprKind::Root { .. }));
        assert!(matches!(s.square().kind(), ExprKind::Pow(..)));
    }

    #[test]
    fn var_mask_and_params() {
        let e = Expr::x() * Expr::param("K") + Expr::q();
        assert!(e.contains_var(JetVar::Q));
        assert!(!e.contains_var(JetVar::R));
        assert_eq!(e.params().into_iter().collect::<Vec<_>>(), vec!["K".to_string()]);
    }
}
