use std::collections::HashMap;

use super::{Expr, ExprKind, JetVar};
use crate::error::ExprError;

/// Memoizing differentiator. Shared subexpressions are differentiated once per variable.
#[derive(Default)]
pub struct Differentiator {
    cache: HashMap<(usize, JetVar), (Expr, Expr)>,
}

impl Differentiator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn partial(&mut self, e: &Expr, v: JetVar) -> Expr {
        if !e.contains_var(v) {
            return Expr::zero();
        }
        let key = (e.node_id(), v);
        if let Some((_, d)) = self.cache.get(&key) {
            return d.clone();
        }
        let d = match e.kind() {
            ExprKind::Const(_) | ExprKind::Param(_) => Expr::zero(),
            ExprKind::Var(w) => {
                if *w == v {
                    Expr::one()
                } else {
                    Expr::zero()
                }
            }
            ExprKind::Sum(items) => {
                let parts: Vec<Expr> = items.iter().map(|t| self.partial(t, v)).collect();
                Expr::sum(parts)
            }
            ExprKind::Product(items) => {
                let mut terms = Vec::new();
                for (i, fi) in items.iter().enumerate() {
                    if !fi.contains_var(v) {
                        continue;
                    }
                    let dfi = self.partial(fi, v);
                    let mut factors: Vec<Expr> = Vec::with_capacity(items.len());
                    factors.extend(items.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, f)| f.clone()));
                    factors.push(dfi);
                    terms.push(Expr::product(factors));
                }
                Expr::sum(terms)
            }
            ExprKind::Pow(b, x) => {
                debug_assert!(!x.contains_var(v), "jet-dependent exponent");
                let db = self.partial(b, v);
                Expr::product([x.clone(), Expr::pow(b, &(x - Expr::one())), db])
            }
            ExprKind::Exp(a) => {
                let da = self.partial(a, v);
                Expr::product([e.clone(), da])
            }
            ExprKind::Root { index, radicand, .. } => {
                let dg = self.partial(radicand, v);
                let k = i64::from(*index);
                Expr::product([Expr::ratio(1, k), dg, e.powi(1 - k)])
            }
        };
        self.cache.insert(key, (e.clone(), d.clone()));
        d
    }

    /// `D̂x e = e_x + p e_u + q e_p + r e_q + f e_r`.
    pub fn total_derivative(&mut self, e: &Expr, f: &Expr) -> Result<Expr, ExprError> {
        if e.contains_var(JetVar::A13) || f.contains_var(JetVar::A13) {
            return Err(ExprError::A13InTotalDerivative);
        }
        Ok(self.total_derivative_unchecked(e, f))
    }

    /// Total derivative treating `a13` as a constant.
    pub(crate) fn total_derivative_unchecked(&mut self, e: &Expr, f: &Expr) -> Expr {
        let coeffs = [Expr::one(), Expr::p(), Expr::q(), Expr::r(), f.clone()];
        let terms: Vec<Expr> = JetVar::BASE
            .iter()
            .zip(coeffs)
            .map(|(v, c)| {
                let d = self.partial(e, *v);
                &c * d
            })
            .collect();
        Expr::sum(terms)
    }
}

pub fn partial(e: &Expr, v: JetVar) -> Expr {
    Differentiator::new().partial(e, v)
}

pub fn total_derivative(e: &Expr, f: &Expr) -> Result<Expr, ExprError> {
    Differentiator::new().total_derivative(e, f)
}
