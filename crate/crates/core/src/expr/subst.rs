use std::collections::HashMap;

use super::{Expr, ExprKind, JetVar};

/// Simultaneous replacement of jet variables and named parameters.
#[derive(Debug, Clone, Default)]
pub struct Substitution {
    pub vars: Vec<(JetVar, Expr)>,
    pub params: Vec<(String, Expr)>,
}

impl Substitution {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn var(mut self, v: JetVar, e: Expr) -> Self {
        self.vars.push((v, e));
        self
    }

    pub fn param(mut self, name: &str, e: Expr) -> Self {
        self.params.push((name.to_string(), e));
        self
    }

    fn lookup_var(&self, v: JetVar) -> Option<&Expr> {
        self.vars.iter().find(|(w, _)| *w == v).map(|(_, e)| e)
    }

    fn lookup_param(&self, name: &str) -> Option<&Expr> {
        self.params.iter().find(|(n, _)| n == name).map(|(_, e)| e)
    }

    fn touches(&self, e: &Expr) -> bool {
        self.vars.iter().any(|(v, _)| e.contains_var(*v)) || (!self.params.is_empty() && e.has_params())
    }
}

pub fn substitute(e: &Expr, s: &Substitution) -> Expr {
    let mut memo = HashMap::new();
    go(e, s, &mut memo)
}

fn go(e: &Expr, s: &Substitution, memo: &mut HashMap<usize, (Expr, Expr)>) -> Expr {
    if !s.touches(e) {
        return e.clone();
    }
    if let Some((_, r)) = memo.get(&e.node_id()) {
        return r.clone();
    }
    let out = match e.kind() {
        ExprKind::Const(_) => e.clone(),
        ExprKind::Var(v) => s.lookup_var(*v).cloned().unwrap_or_else(|| e.clone()),
        ExprKind::Param(n) => s.lookup_param(n).cloned().unwrap_or_else(|| e.clone()),
        ExprKind::Sum(items) => Expr::sum(items.iter().map(|t| go(t, s, memo)).collect::<Vec<_>>()),
        ExprKind::Product(items) => Expr::product(items.iter().map(|t| go(t, s, memo)).collect::<Vec<_>>()),
        ExprKind::Pow(b, x) => Expr::pow(&go(b, s, memo), &go(x, s, memo)),
        ExprKind::Exp(a) => go(a, s, memo).exp(),
        ExprKind::Root { index, radicand, branch } => Expr::root(&go(radicand, s, memo), *index, *branch),
    };
    memo.insert(e.node_id(), (e.clone(), out.clone()));
    out
}

/// Replace `(x, u, p, q, r)` by the given expressions.
pub fn compose_jet(e: &Expr, images: [&Expr; 5]) -> Expr {
    let mut s = Substitution::new();
    for (v, img) in JetVar::BASE.into_iter().zip(images) {
        s = s.var(v, img.clone());
    }
    substitute(e, &s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    #[test]
    fn simultaneous_replacement() {
        let e = parse("x*u + q").unwrap();
        let s = Substitution::new().var(JetVar::X, Expr::u()).var(JetVar::U, Expr::x());
        assert_eq!(substitute(&e, &s), parse("u*x + q").unwrap());
    }

    #[test]
    fn parameter_replacement_folds() {
        let e = parse("K*r^2/q").unwrap();
        let s = Substitution::new().param("K", Expr::ratio(4, 3));
        assert_eq!(substitute(&e, &s), parse("(4/3)*r^2/q").unwrap());
    }
}
