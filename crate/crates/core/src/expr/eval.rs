use std::collections::{BTreeMap, HashMap};

use num_complex::Complex;
use num_traits::{One, Zero};
use thiserror::Error;

use super::{Expr, ExprKind, JetVar};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("non-finite value (pole or overflow)")]
    NonFinite,
    #[error("parameter `{0}` is not bound")]
    UnboundParam(String),
    #[error("expression uses a13 but the sample has no a13 coordinate")]
    MissingA13,
}

/// A point of the (possibly prolonged) jet space, complex coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JetSample<S> {
    pub coords: [Complex<S>; 5],
    pub a13: Option<Complex<S>>,
}

impl<S: Scalar> JetSample<S> {
    pub fn new(x: Complex<S>, u: Complex<S>, p: Complex<S>, q: Complex<S>, r: Complex<S>) -> Self {
        JetSample { coords: [x, u, p, q, r], a13: None }
    }

    pub fn real(values: [f64; 5]) -> Self {
        JetSample {
            coords: values.map(|v| Complex::new(S::from_f64_lossy(v), S::zero())),
            a13: None,
        }
    }

    pub fn with_a13(mut self, a13: Complex<S>) -> Self {
        self.a13 = Some(a13);
        self
    }

    pub fn get(&self, v: JetVar) -> Option<Complex<S>> {
        match v {
            JetVar::A13 => self.a13,
            _ => Some(self.coords[v.index()]),
        }
    }

    pub fn set(&mut self, v: JetVar, value: Complex<S>) {
        match v {
            JetVar::A13 => self.a13 = Some(value),
            _ => self.coords[v.index()] = value,
        }
    }
}

/// Numeric values for free parameters.
pub type ParamBinding<S> = BTreeMap<String, Complex<S>>;

/// Memoized evaluator for one sample point. Keeps the visited nodes alive so that node
/// identities used as memo keys stay valid for its whole lifetime.
pub struct Evaluator<'a, S: Scalar> {
    point: JetSample<S>,
    params: &'a ParamBinding<S>,
    memo: HashMap<usize, (Expr, Complex<S>)>,
    max_magnitude: S,
}

impl<'a, S: Scalar> Evaluator<'a, S> {
    pub fn new(point: JetSample<S>, params: &'a ParamBinding<S>) -> Self {
        Evaluator { point, params, memo: HashMap::new(), max_magnitude: S::zero() }
    }

    pub fn point(&self) -> &JetSample<S> {
        &self.point
    }

    /// Largest modulus of any intermediate value computed so far.
    pub fn max_magnitude(&self) -> S {
        self.max_magnitude
    }

    pub fn reset_magnitude(&mut self) {
        self.max_magnitude = S::zero();
    }

    pub fn eval(&mut self, e: &Expr) -> Result<Complex<S>, EvalError> {
        if let Some((_, v)) = self.memo.get(&e.node_id()) {
            let v = *v;
            self.note(v);
            return Ok(v);
        }
        let v = self.compute(e)?;
        if !(v.re.is_finite() && v.im.is_finite()) {
            return Err(EvalError::NonFinite);
        }
        self.note(v);
        self.memo.insert(e.node_id(), (e.clone(), v));
        Ok(v)
    }

    fn note(&mut self, v: Complex<S>) {
        let m = v.norm();
        if m > self.max_magnitude {
            self.max_magnitude = m;
        }
    }

    fn compute(&mut self, e: &Expr) -> Result<Complex<S>, EvalError> {
        Ok(match e.kind() {
            ExprKind::Const(_) => Complex::new(S::from_f64_lossy(e.const_approx()), S::zero()),
            ExprKind::Var(v) => self.point.get(*v).ok_or(EvalError::MissingA13)?,
            ExprKind::Param(name) => {
                *self.params.get(name.as_ref()).ok_or_else(|| EvalError::UnboundParam(name.to_string()))?
            }
            ExprKind::Sum(items) => {
                let mut acc = Complex::zero();
                for it in items {
                    acc = acc + self.eval(it)?;
                }
                acc
            }
            ExprKind::Product(items) => {
                let mut acc = Complex::one();
                for it in items {
                    acc = acc * self.eval(it)?;
                }
                acc
            }
            ExprKind::Pow(b, x) => {
                let base = self.eval(b)?;
                match x.as_integer() {
                    Some(n) => int_pow(base, n)?,
                    None => {
                        let ex = self.eval(x)?;
                        if base.is_zero() {
                            if ex.re > S::zero() {
                                Complex::zero()
                            } else {
                                return Err(EvalError::NonFinite);
                            }
                        } else {
                            (base.ln() * ex).exp()
                        }
                    }
                }
            }
            ExprKind::Exp(a) => self.eval(a)?.exp(),
            ExprKind::Root { index, radicand, branch } => {
                let g = self.eval(radicand)?;
                principal_root(g, *index, *branch)
            }
        })
    }
}

fn int_pow<S: Scalar>(base: Complex<S>, n: i64) -> Result<Complex<S>, EvalError> {
    if n < 0 && base.is_zero() {
        return Err(EvalError::NonFinite);
    }
    let mut result = Complex::one();
    let mut b = base;
    let mut k = n.unsigned_abs();
    while k > 0 {
        if k & 1 == 1 {
            result = result * b;
        }
        b = b * b;
        k >>= 1;
    }
    Ok(if n < 0 { result.inv() } else { result })
}

/// Principal k-th root times the branch factor `exp(2 pi i b / k)`.
pub(crate) fn principal_root<S: Scalar>(g: Complex<S>, k: u32, branch: u32) -> Complex<S> {
    if g.is_zero() {
        return Complex::zero();
    }
    let kk = S::from_u32(k).unwrap_or_else(S::one);
    let principal = (g.ln() / kk).exp();
    if branch == 0 {
        return principal;
    }
    let angle = S::TAU() * S::from_u32(branch).unwrap_or_else(S::zero) / kk;
    principal * Complex::from_polar(S::one(), angle)
}

/// One-shot evaluation.
pub fn evaluate<S: Scalar>(e: &Expr, point: &JetSample<S>, params: &ParamBinding<S>) -> Result<Complex<S>, EvalError> {
    Evaluator::new(*point, params).eval(e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use num_complex::Complex64;

    fn at(text: &str, pt: [f64; 5]) -> Complex64 {
        evaluate(&parse(text).unwrap(), &JetSample::real(pt), &ParamBinding::new()).unwrap()
    }

    #[test]
    fn evaluates_simple_polynomials() {
        let v = at("r^2 + 3*q - x", [1.0, 0.0, 0.0, 2.0, 0.5]);
        assert!((v - Complex64::new(0.25 + 6.0 - 1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn root_branches() {
        let e = Expr::root(&Expr::q(), 2, 1);
        let v: Complex64 = evaluate(&e, &JetSample::real([0.0, 0.0, 0.0, 4.0, 0.0]), &ParamBinding::new()).unwrap();
        assert!((v + Complex64::new(2.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn pole_is_non_finite() {
        let e = parse("1/x").unwrap();
        let r = evaluate::<f64>(&e, &JetSample::real([0.0; 5]), &ParamBinding::new());
        assert_eq!(r, Err(EvalError::NonFinite));
    }

    #[test]
    fn unbound_parameter() {
        let e = parse("K*r").unwrap();
        let r = evaluate::<f64>(&e, &JetSample::real([1.0; 5]), &ParamBinding::new());
        assert_eq!(r, Err(EvalError::UnboundParam("K".into())));
    }

    #[test]
    fn single_precision_matches() {
        let e = parse("exp(r)*q^(1/3)").unwrap();
        let pt = [0.3, 0.1, 0.7, 1.3, 0.4];
        let v64: Complex64 = evaluate(&e, &JetSample::real(pt), &ParamBinding::new()).unwrap();
        let v32 = evaluate::<f32>(&e, &JetSample::real(pt), &ParamBinding::new()).unwrap();
        assert!((f64::from(v32.re) - v64.re).abs() < 1e-5);
    }
}
