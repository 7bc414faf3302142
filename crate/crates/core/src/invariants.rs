//! Relative invariants of `u'''' = f`.
//!
//! `I0..I4` are common to both families. The `I4 = 0` family continues with
//! [`BranchAInvariants`], the `I4 != 0` family with [`BranchBInvariants`].

use serde::Serialize;

use crate::error::{ExprError, Result};
use crate::expr::{Differentiator, Expr, JetVar, ZeroTestConfig};

/// Sign in front of the `I0 (I2 - 39 I1) / 20` term of I7 (`I4 = 0` family).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum I7Sign {
    #[default]
    Plus,
    Minus,
}

/// How the `I2_r f` correction enters I8 (`I4 = 0` family).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum I8Correction {
    /// `-(D I2 - I2_r f)`
    #[default]
    Subtract,
    /// `-(D I2 + I2_r f)`
    Add,
}

/// Reading of `D(I4 - I4_r f)` in I8 of the `I4 != 0` family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum I8Grouping {
    /// total derivative of `I4 - I4_r f`
    #[default]
    Grouped,
    /// `D I4 - I4_r f`
    Split,
}

/// Choices among ambiguous printed forms. Defaults are the forms that reproduce the
/// known examples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct Switches {
    pub i7_sign: I7Sign,
    pub i8_correction: I8Correction,
    pub i8_grouping: I8Grouping,
}

impl Switches {
    pub fn describe(&self) -> Vec<String> {
        vec![
            format!(
                "I7 (I4=0): {} (1/20)*I0*(I2 - 39*I1)",
                if self.i7_sign == I7Sign::Plus { "+" } else { "-" }
            ),
            format!(
                "I8 (I4=0): -(D[x] I2 {} I2_r*f)",
                if self.i8_correction == I8Correction::Subtract { "-" } else { "+" }
            ),
            format!(
                "I8 (I4!=0): {}",
                if self.i8_grouping == I8Grouping::Grouped { "D[x](I4 - I4_r*f)" } else { "D[x] I4 - I4_r*f" }
            ),
        ]
    }
}

/// Choice of a radical: a numbered branch of the formal root, or an explicit closed form
/// whose power must reproduce the radicand.
#[derive(Debug, Clone, PartialEq)]
pub enum Radical {
    Branch(u32),
    Explicit(Expr),
}

impl Default for Radical {
    fn default() -> Self {
        Radical::Branch(0)
    }
}

impl Radical {
    pub fn resolve(&self, radicand: &Expr, index: u32) -> Expr {
        match self {
            Radical::Branch(b) => Expr::root(radicand, index, *b),
            Radical::Explicit(e) => e.clone(),
        }
    }

    /// For explicit radicals, checks `e^index - radicand == 0`.
    pub fn verify(&self, radicand: &Expr, index: u32, cfg: &ZeroTestConfig) -> Result<bool> {
        match self {
            Radical::Branch(_) => Ok(true),
            Radical::Explicit(e) => {
                let diff = e.powi(i64::from(index)) - radicand;
                let cfg = ZeroTestConfig { sample_free_params: true, ..cfg.clone() };
                Ok(crate::expr::is_identically_zero(&diff, &cfg)?)
            }
        }
    }
}

/// Named list of invariants, in display order.
#[derive(Debug, Clone, Default)]
pub struct InvariantSet {
    pub entries: Vec<(String, Expr)>,
}

impl InvariantSet {
    pub fn get(&self, name: &str) -> Option<&Expr> {
        self.entries.iter().find(|(n, _)| n == name).map(|(_, e)| e)
    }

    pub fn push(&mut self, name: &str, e: &Expr) {
        self.entries.push((name.to_string(), e.clone()));
    }
}

struct Calc {
    f: Expr,
    d: Differentiator,
}

impl Calc {
    fn new(f: &Expr) -> Result<Calc> {
        if f.contains_var(JetVar::A13) {
            return Err(ExprError::A13InTotalDerivative.into());
        }
        Ok(Calc { f: f.clone(), d: Differentiator::new() })
    }

    fn dx(&mut self, e: &Expr) -> Expr {
        self.d.total_derivative_unchecked(e, &self.f)
    }

    fn pd(&mut self, e: &Expr, v: JetVar) -> Expr {
        self.d.partial(e, v)
    }
}

fn c(n: i64, d: i64) -> Expr {
    Expr::ratio(n, d)
}

#[derive(Debug, Clone)]
pub struct BaseInvariants {
    pub f: Expr,
    pub i0: Expr,
    pub i1: Expr,
    pub i2: Expr,
    pub i3: Expr,
    pub i4: Expr,
}

impl BaseInvariants {
    pub fn compute(f: &Expr) -> Result<BaseInvariants> {
        let mut k = Calc::new(f)?;
        let fr = k.pd(f, JetVar::R);
        let fq = k.pd(f, JetVar::Q);
        let i0 = -fr;
        let di0 = k.dx(&i0);
        let i1 = c(-1, 6) * &di0 + c(1, 4) * i0.square();
        let i2 = c(-1, 2) * &di0 - fq;
        let i0r = k.pd(&i0, JetVar::R);
        let i1r = k.pd(&i1, JetVar::R);
        let i2r = k.pd(&i2, JetVar::R);
        let i3 = c(-1, 8) * &i0r * &i0 + c(1, 4) * i1r - c(1, 12) * i2r;
        let i4 = c(-1, 6) * i0r;
        Ok(BaseInvariants { f: f.clone(), i0, i1, i2, i3, i4 })
    }

    pub fn set(&self) -> InvariantSet {
        let mut s = InvariantSet::default();
        for (n, e) in [("I0", &self.i0), ("I1", &self.i1), ("I2", &self.i2), ("I3", &self.i3), ("I4", &self.i4)] {
            s.push(n, e);
        }
        s
    }
}

/// Invariants of the `I4 = 0` family.
#[derive(Debug, Clone)]
pub struct BranchAInvariants {
    pub base: BaseInvariants,
    pub i5: Expr,
    pub i6: Expr,
    pub i7: Expr,
    pub i8: Expr,
    pub i9: Expr,
    pub i10: Expr,
    pub switches: Switches,
}

/// Radicals of the `I4 = 0` family: `J6^2 = I6`, `J10^4 = I10`, and I11 built from J6.
#[derive(Debug, Clone)]
pub struct BranchARadicals {
    pub j6: Expr,
    pub j10: Expr,
    pub i11: Expr,
}

impl BranchAInvariants {
    pub fn compute(base: &BaseInvariants, switches: Switches) -> Result<BranchAInvariants> {
        let mut k = Calc::new(&base.f)?;
        let f = base.f.clone();
        let BaseInvariants { i0, i1, i2, i3, .. } = base;
        let i0p = k.pd(i0, JetVar::P);
        let i5 = c(-18, 5) * i0 * i3 - c(3, 5) * i0p + c(2, 5) * k.pd(&(i2 - Expr::int(3) * i1), JetVar::Q);
        let i3q = k.pd(i3, JetVar::Q);
        let i3p = k.pd(i3, JetVar::P);
        let i6 = c(-36, 25) * i3.square() - c(3, 5) * i0 * &i3q - c(6, 5) * i3p;
        let s12 = i1 + i2;
        let s12r = k.pd(&s12, JetVar::R);
        let sign7 = if switches.i7_sign == I7Sign::Plus { 1 } else { -1 };
        let i7 = c(1, 2) * i0.powi(3) - c(3, 10) * (k.dx(&s12) - &f * s12r)
            + c(6, 5) * &f * i3
            + c(sign7, 20) * i0 * (i2 - Expr::int(39) * i1);
        let i2r = k.pd(i2, JetVar::R);
        let di2 = k.dx(i2);
        let corr = match switches.i8_correction {
            I8Correction::Subtract => di2 - &i2r * &f,
            I8Correction::Add => di2 + &i2r * &f,
        };
        let fp = k.pd(&f, JetVar::P);
        let i8 = c(7, 8) * i0.powi(3) - corr - fp
            + Expr::int(6) * &f * i3
            + i0 * (Expr::int(-3) * i1 - c(1, 2) * i2);
        let i9 = c(-6, 5) * i3q;
        let fu = k.pd(&f, JetVar::U);
        let i10 = k.dx(&i7) - fu
            + i0 * &i7
            + &s12 * (c(9, 100) * (Expr::int(9) * i1 - i2) - c(9, 40) * i0.square());
        Ok(BranchAInvariants { base: base.clone(), i5, i6, i7, i8, i9, i10, switches })
    }

    pub fn radicals(&self, j6: &Radical, j10: &Radical) -> BranchARadicals {
        let j6 = j6.resolve(&self.i6, 2);
        let j10 = j10.resolve(&self.i10, 4);
        let mut d = Differentiator::new();
        let i11 = Expr::int(-3)
            * (d.partial(&j6, JetVar::X) + Expr::p() * d.partial(&j6, JetVar::U) + Expr::q() * d.partial(&j6, JetVar::P));
        BranchARadicals { j6, j10, i11 }
    }

    pub fn set(&self) -> InvariantSet {
        let mut s = self.base.set();
        for (n, e) in [
            ("I5", &self.i5),
            ("I6", &self.i6),
            ("I7", &self.i7),
            ("I8", &self.i8),
            ("I9", &self.i9),
            ("I10", &self.i10),
        ] {
            s.push(n, e);
        }
        s
    }
}

/// How far to go in the `I4 != 0` family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum BranchBDepth {
    /// I5, I6, I7
    Coframe,
    /// also I8
    WithI8,
    /// also the two e-structure invariants
    WithEStructure,
}

/// Invariants of the `I4 != 0` family.
#[derive(Debug, Clone)]
pub struct BranchBInvariants {
    pub base: BaseInvariants,
    pub i5: Expr,
    pub i6: Expr,
    pub i7: Expr,
    pub i8: Option<Expr>,
    /// `(I9, I10)` of the prolonged e-structure.
    pub estructure: Option<(Expr, Expr)>,
    pub switches: Switches,
}

impl BranchBInvariants {
    pub fn compute(base: &BaseInvariants, depth: BranchBDepth, switches: Switches) -> Result<BranchBInvariants> {
        let mut k = Calc::new(&base.f)?;
        let f = base.f.clone();
        let BaseInvariants { i0, i1, i2, i3, i4, .. } = base;
        let i4r = k.pd(i4, JetVar::R);
        let i5 = c(-1, 2) * &i4r / i4.square();
        let i2r = k.pd(i2, JetVar::R);
        let i6 = c(-3, 2) * i0 * i4 - &i2r - Expr::int(6) * i3;
        let d31r = k.pd(&(Expr::int(3) * i1 - i2), JetVar::R);
        let i7 = c(1, 10) * &f * (Expr::int(9) * i0 * i4 + d31r - Expr::int(12) * i3)
            + c(1, 2) * i0 * (i0.square() + c(1, 10) * i2)
            - c(3, 10) * k.dx(&(i1 + i2))
            - c(39, 20) * i0 * i1;
        let i8 = (depth >= BranchBDepth::WithI8).then(|| {
            let d4 = match switches.i8_grouping {
                I8Grouping::Grouped => k.dx(&(i4 - &i4r * &f)),
                I8Grouping::Split => k.dx(i4) - &i4r * &f,
            };
            &i6 / i4.square() * d4 - k.dx(&i6) / i4 + c(3, 4) * i0.square() - c(1, 2) * i0 * &i6 / i4
                + c(3, 10) * i2
                + c(1, 3) * i6.square() / i4.square()
                - c(27, 10) * i1
        });
        let estructure = (depth >= BranchBDepth::WithEStructure).then(|| {
            let i0p = k.pd(i0, JetVar::P);
            let i4u = k.pd(i4, JetVar::U);
            let i4p = k.pd(i4, JetVar::P);
            let i6p = k.pd(&i6, JetVar::P);
            let i6q = k.pd(&i6, JetVar::Q);
            let i6r = k.pd(&i6, JetVar::R);
            let n = Expr::int;
            let first = c(-2, 3) * &i0p * i4 - c(4, 3) * i4u + c(4, 3) * i6p
                + i4.square() * (i0.square() - n(4) * i2)
                + i0 * i4 * (&i6 + n(4) * i3)
                - c(14, 15) * i6.square()
                - c(172, 15) * i3 * &i6;
            let second = i4.square() * (n(-5) * i0.square() - n(12) * i1 + n(48) * i2)
                - n(5) * i0 * i4 * &i6
                - n(20) * i6.square();
            let third = c(-2, 3) * &i4p * (i0 * i4 + &i6) + c(2, 3) * i6q * (i0 * i4 - c(8, 3) * &i6);
            let i9 = c(-3, 4) / i4 * first + &i6r / (n(60) * i4.powi(3)) * second - c(3, 4) / i4.square() * third;
            let i10 = (i4 * (n(36) * i3 - n(18) * &i6) + n(30) * i4p - n(5) * i0 * &i6r - n(45) * i0 * i4.square())
                / (n(60) * i4);
            (i9, i10)
        });
        Ok(BranchBInvariants { base: base.clone(), i5, i6, i7, i8, estructure, switches })
    }

    pub fn set(&self) -> InvariantSet {
        let mut s = self.base.set();
        s.push("I5", &self.i5);
        s.push("I6", &self.i6);
        s.push("I7", &self.i7);
        if let Some(i8) = &self.i8 {
            s.push("I8", i8);
        }
        if let Some((i9, i10)) = &self.estructure {
            s.push("I9", i9);
            s.push("I10", i10);
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{is_identically_zero, parse};

    fn same(a: &Expr, b: &str) -> bool {
        is_identically_zero(&(a - parse(b).unwrap()), &ZeroTestConfig::default()).unwrap()
    }

    #[test]
    fn base_of_square() {
        let b = BaseInvariants::compute(&parse("r^2").unwrap()).unwrap();
        assert!(same(&b.i0, "-2*r"));
        assert!(same(&b.i4, "1/3"));
    }

    #[test]
    fn base_of_exponential() {
        let b = BaseInvariants::compute(&parse("exp(r)").unwrap()).unwrap();
        assert!(same(&b.i4, "exp(r)/6"));
    }

    #[test]
    fn i5_of_four_thirds_power() {
        let base = BaseInvariants::compute(&parse("r^(4/3)").unwrap()).unwrap();
        assert!(same(&base.i4, "(2/27)*r^(-2/3)"));
        let b = BranchBInvariants::compute(&base, BranchBDepth::Coframe, Switches::default()).unwrap();
        assert!(same(&b.i5, "(9/2)*r^(-1/3)"));
    }

    #[test]
    fn trivial_equation_has_vanishing_invariants() {
        let base = BaseInvariants::compute(&Expr::zero()).unwrap();
        let a = BranchAInvariants::compute(&base, Switches::default()).unwrap();
        for (_, e) in a.set().entries {
            assert!(same(&e, "0"));
        }
    }

    #[test]
    fn a13_rejected() {
        let f = parse("r").unwrap() * Expr::var(JetVar::A13);
        assert!(BaseInvariants::compute(&f).is_err());
    }
}
