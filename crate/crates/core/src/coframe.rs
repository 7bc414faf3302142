//! The adapted coframe `Omega` and the four branch invariant coframes.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::{zero_test, Differentiator, Expr, JetVar, ParamBinding, ZeroTestConfig};
use crate::forms::{aligned_fingerprint, CoframeMatrix, FingerprintConfig, PreparedCoframe, StructureFingerprint};
use crate::scalar::Scalar;
use crate::invariants::{
    BaseInvariants, BranchAInvariants, BranchBDepth, BranchBInvariants, InvariantSet, Radical, Switches,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum BranchTag {
    /// `I4 = 0` with `I5 = I8 = I9 = 0`, `I6 != 0`, `I10 != 0`
    T1,
    /// `I4 != 0`, `I5 != 0`
    T2,
    /// `I4 != 0`, `I5 = 0`, `I8 != 0`
    T3,
    /// `I4 != 0`, `I5 = 0`, `I8 = 0`; six-dimensional e-structure
    T4,
}

impl BranchTag {
    pub const ALL: [BranchTag; 4] = [BranchTag::T1, BranchTag::T2, BranchTag::T3, BranchTag::T4];

    pub fn dim(self) -> usize {
        if self == BranchTag::T4 {
            6
        } else {
            5
        }
    }

    pub fn conditions(self) -> &'static str {
        match self {
            BranchTag::T1 => "I4 = 0, I5 = I8 = I9 = 0, I6 != 0, I10 != 0",
            BranchTag::T2 => "I4 != 0, I5 != 0",
            BranchTag::T3 => "I4 != 0, I5 = 0, I8 != 0",
            BranchTag::T4 => "I4 != 0, I5 = 0, I8 = 0",
        }
    }
}

impl fmt::Display for BranchTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

impl FromStr for BranchTag {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "T1" => Ok(BranchTag::T1),
            "T2" => Ok(BranchTag::T2),
            "T3" => Ok(BranchTag::T3),
            "T4" => Ok(BranchTag::T4),
            other => Err(Error::Database(format!("unknown branch tag `{other}`"))),
        }
    }
}

/// Radical selectors: `J6^2 = I6`, `J10^4 = I10` (T1) and `J8^2 = I8` (T3).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RadicalChoice {
    pub j6: Radical,
    pub j10: Radical,
    pub j8: Radical,
}

impl RadicalChoice {
    pub fn branches(j6: u32, j10: u32, j8: u32) -> Self {
        RadicalChoice { j6: Radical::Branch(j6), j10: Radical::Branch(j10), j8: Radical::Branch(j8) }
    }

    pub fn label(&self, tag: BranchTag) -> String {
        let show = |r: &Radical| match r {
            Radical::Branch(b) => b.to_string(),
            Radical::Explicit(e) => format!("[{e}]"),
        };
        match tag {
            BranchTag::T1 => format!("J6={} J10={}", show(&self.j6), show(&self.j10)),
            BranchTag::T3 => format!("J8={}", show(&self.j8)),
            _ => "none".to_string(),
        }
    }
}

/// Every numbered selector combination relevant to a branch.
pub fn radical_variants(tag: BranchTag) -> Vec<RadicalChoice> {
    match tag {
        BranchTag::T1 => (0..2).flat_map(|a| (0..4).map(move |b| RadicalChoice::branches(a, b, 0))).collect(),
        BranchTag::T3 => (0..2).map(|c| RadicalChoice::branches(0, 0, c)).collect(),
        _ => vec![RadicalChoice::default()],
    }
}

/// Invariants of whichever family a branch belongs to.
#[derive(Debug, Clone)]
pub enum FamilyInvariants {
    A(BranchAInvariants),
    B(BranchBInvariants),
}

impl FamilyInvariants {
    pub fn compute(tag: BranchTag, f: &Expr, switches: Switches) -> Result<FamilyInvariants> {
        let base = BaseInvariants::compute(f)?;
        Ok(match tag {
            BranchTag::T1 => FamilyInvariants::A(BranchAInvariants::compute(&base, switches)?),
            BranchTag::T2 => FamilyInvariants::B(BranchBInvariants::compute(&base, BranchBDepth::Coframe, switches)?),
            BranchTag::T3 => FamilyInvariants::B(BranchBInvariants::compute(&base, BranchBDepth::WithI8, switches)?),
            BranchTag::T4 => {
                FamilyInvariants::B(BranchBInvariants::compute(&base, BranchBDepth::WithEStructure, switches)?)
            }
        })
    }

    pub fn base(&self) -> &BaseInvariants {
        match self {
            FamilyInvariants::A(a) => &a.base,
            FamilyInvariants::B(b) => &b.base,
        }
    }

    pub fn set(&self) -> InvariantSet {
        match self {
            FamilyInvariants::A(a) => a.set(),
            FamilyInvariants::B(b) => b.set(),
        }
    }
}

fn c(n: i64, d: i64) -> Expr {
    Expr::ratio(n, d)
}

fn z() -> Expr {
    Expr::zero()
}

/// `theta = Omega beta`, the adapted coframe.
pub fn build_omega(base: &BaseInvariants) -> CoframeMatrix {
    let BaseInvariants { i0, i1, i2, .. } = base;
    let o = Expr::one;
    let h = c(-1, 2) * i0;
    CoframeMatrix::from_rows(vec![
        vec![o(), z(), z(), z(), z()],
        vec![h.clone(), o(), z(), z(), z()],
        vec![c(3, 10) * (i1 + i2), h, o(), z(), z()],
        vec![z(), c(1, 10) * (Expr::int(-3) * i1 + Expr::int(7) * i2), z(), o(), z()],
        vec![z(), z(), z(), z(), o()],
    ])
    .expect("5x5 by construction")
}

fn require_b(inv: &FamilyInvariants, tag: BranchTag) -> Result<&BranchBInvariants> {
    match inv {
        FamilyInvariants::B(b) => Ok(b),
        FamilyInvariants::A(_) => Err(Error::BranchMismatch { branch: tag, condition: "needs the I4 != 0 family".into() }),
    }
}

/// The branch matrix `S` (5x5) or `A` (6x6, in `a13`), before multiplying by `Omega`.
pub fn branch_matrix(tag: BranchTag, inv: &FamilyInvariants, choice: &RadicalChoice) -> Result<CoframeMatrix> {
    let i3 = &inv.base().i3;
    let i4 = &inv.base().i4;
    let n = Expr::int;
    match tag {
        BranchTag::T1 => {
            let FamilyInvariants::A(a) = inv else {
                return Err(Error::BranchMismatch { branch: tag, condition: "needs the I4 = 0 family".into() });
            };
            let rad = a.radicals(&choice.j6, &choice.j10);
            let (j6, j10, i11, i7) = (&rad.j6, &rad.j10, &rad.i11, &a.i7);
            let j10s = j10.square();
            CoframeMatrix::from_rows(vec![
                vec![j6 * j10, z(), z(), z(), z()],
                vec![-i11.clone(), j6.clone(), z(), z(), z()],
                vec![c(2, 3) * i11.square() / (j6 * j10), c(-4, 3) * i11 / j10, j6 / j10, z(), z()],
                vec![
                    (n(-2) * i11.powi(3) - n(9) * j6.powi(3) * i7) / (n(9) * j6.square() * &j10s),
                    n(2) * i11.square() / (n(3) * j6 * &j10s),
                    -(i11 / &j10s),
                    j6 / &j10s,
                    z(),
                ],
                vec![c(6, 5) * i3 * j10, z(), z(), z(), j10.clone()],
            ])
        }
        BranchTag::T2 => {
            let b = require_b(inv, tag)?;
            let (i5, i6, i7) = (&b.i5, &b.i6, &b.i7);
            CoframeMatrix::from_rows(vec![
                vec![i4 / i5.square(), z(), z(), z(), z()],
                vec![i6 / i5, i4 / i5, z(), z(), z()],
                vec![c(2, 3) * i6.square() / i4, c(4, 3) * i6, i4.clone(), z(), z()],
                vec![
                    -(i4 * i5 * i7) + c(2, 9) * i5 * i6.powi(3) / i4.square(),
                    c(2, 3) * i5 * i6.square() / i4,
                    i5 * i6,
                    i4 * i5,
                    z(),
                ],
                vec![(c(-3, 5) * i6 + c(6, 5) * i3) / i5, z(), z(), z(), i5.recip()],
            ])
        }
        BranchTag::T3 => {
            let b = require_b(inv, tag)?;
            let i8 = b.i8.as_ref().ok_or_else(|| Error::Shape("I8 not computed".into()))?;
            let j8 = choice.j8.resolve(i8, 2);
            let (i6, i7) = (&b.i6, &b.i7);
            CoframeMatrix::from_rows(vec![
                vec![i4 * j8.square(), z(), z(), z(), z()],
                vec![i6 * &j8, i4 * &j8, z(), z(), z()],
                vec![c(2, 3) * i6.square() / i4, c(4, 3) * i6, i4.clone(), z(), z()],
                vec![
                    -(i4 * i7 / &j8) + c(2, 9) * i6.powi(3) / (i4.square() * &j8),
                    c(2, 3) * i6.square() / (i4 * &j8),
                    i6 / &j8,
                    i4 / &j8,
                    z(),
                ],
                vec![(c(-3, 5) * i6 + c(6, 5) * i3) * &j8, z(), z(), z(), j8.clone()],
            ])
        }
        BranchTag::T4 => {
            let b = require_b(inv, tag)?;
            let (i9, i10) = b.estructure.as_ref().ok_or_else(|| Error::Shape("e-structure invariants not computed".into()))?;
            let (i0, i6, i7) = (&inv.base().i0, &b.i6, &b.i7);
            let a = Expr::var(JetVar::A13);
            let i6r = crate::expr::partial(i6, JetVar::R);
            CoframeMatrix::from_rows(vec![
                vec![a.square() * i4, z(), z(), z(), z(), z()],
                vec![&a * i6, &a * i4, z(), z(), z(), z()],
                vec![c(2, 3) * i6.square() / i4, c(4, 3) * i6, i4.clone(), z(), z(), z()],
                vec![
                    -(i4 * i7 / &a) + c(2, 9) * i6.powi(3) / (i4.square() * &a),
                    c(2, 3) * i6.square() / (i4 * &a),
                    i6 / &a,
                    i4 / &a,
                    z(),
                    z(),
                ],
                vec![(c(-3, 5) * i6 + c(6, 5) * i3) * &a, z(), z(), z(), a.clone(), z()],
                vec![
                    i9.clone(),
                    i10.clone(),
                    (n(-9) * i4.square() - i6r) / (n(6) * i4),
                    z(),
                    (n(3) * i0 * i4 - n(4) * i6) / (n(6) * i4),
                    a.recip(),
                ],
            ])
        }
    }
}

/// `diag(Omega, 1)`.
pub fn build_h(base: &BaseInvariants) -> CoframeMatrix {
    let omega = build_omega(base);
    let mut rows = Vec::with_capacity(6);
    for i in 0..5 {
        let mut row: Vec<Expr> = (0..5).map(|j| omega.get(i, j).clone()).collect();
        row.push(z());
        rows.push(row);
    }
    rows.push(vec![z(), z(), z(), z(), z(), Expr::one()]);
    CoframeMatrix::from_rows(rows).expect("6x6 by construction")
}

/// Full coframe `S Omega` or `A H`, without branch checks.
pub fn full_coframe(tag: BranchTag, inv: &FamilyInvariants, choice: &RadicalChoice) -> Result<CoframeMatrix> {
    let s = branch_matrix(tag, inv, choice)?;
    let right = if tag == BranchTag::T4 { build_h(inv.base()) } else { build_omega(inv.base()) };
    s.mul(&right)
}

/// Zero-testing helper bound to a configuration and parameter values.
#[derive(Debug, Clone)]
pub struct ZeroOracle {
    pub cfg: ZeroTestConfig,
    pub params: ParamBinding<f64>,
}

impl ZeroOracle {
    pub fn new(cfg: &ZeroTestConfig, params: &ParamBinding<f64>) -> Self {
        ZeroOracle { cfg: cfg.clone(), params: params.clone() }
    }

    pub fn is_zero(&self, e: &Expr) -> Result<bool> {
        Ok(zero_test(e, &self.cfg, &self.params)?.identically_zero)
    }
}

/// Checks the defining conditions of a branch; the first failing one is reported.
pub fn check_branch(tag: BranchTag, inv: &FamilyInvariants, oracle: &ZeroOracle) -> Result<()> {
    let fail = |condition: &str| Err(Error::BranchMismatch { branch: tag, condition: condition.to_string() });
    let i4_zero = oracle.is_zero(&inv.base().i4)?;
    match (tag, inv) {
        (BranchTag::T1, FamilyInvariants::A(a)) => {
            if !i4_zero {
                return fail("I4 != 0");
            }
            for (name, e, want_zero) in [
                ("I5", &a.i5, true),
                ("I8", &a.i8, true),
                ("I9", &a.i9, true),
                ("I6", &a.i6, false),
                ("I10", &a.i10, false),
            ] {
                if oracle.is_zero(e)? != want_zero {
                    return fail(&format!("{name} {}", if want_zero { "!= 0" } else { "= 0" }));
                }
            }
            Ok(())
        }
        (_, FamilyInvariants::B(b)) if tag != BranchTag::T1 => {
            if i4_zero {
                return fail("I4 = 0");
            }
            let i5_zero = oracle.is_zero(&b.i5)?;
            match tag {
                BranchTag::T2 if i5_zero => fail("I5 = 0"),
                BranchTag::T2 => Ok(()),
                _ if !i5_zero => fail("I5 != 0"),
                _ => {
                    let i8 = b.i8.as_ref().ok_or_else(|| Error::Shape("I8 not computed".into()))?;
                    let i8_zero = oracle.is_zero(i8)?;
                    match (tag, i8_zero) {
                        (BranchTag::T3, true) => fail("I8 = 0"),
                        (BranchTag::T4, false) => fail("I8 != 0"),
                        _ => Ok(()),
                    }
                }
            }
        }
        _ => fail("invariant family does not match the branch"),
    }
}

fn check_radicals(tag: BranchTag, inv: &FamilyInvariants, choice: &RadicalChoice, oracle: &ZeroOracle) -> Result<()> {
    let radicals: Vec<(&str, &Expr, u32, &Radical)> = match (tag, inv) {
        (BranchTag::T1, FamilyInvariants::A(a)) => vec![("J6", &a.i6, 2, &choice.j6), ("J10", &a.i10, 4, &choice.j10)],
        (BranchTag::T3, FamilyInvariants::B(b)) => match &b.i8 {
            Some(i8) => vec![("J8", i8, 2, &choice.j8)],
            None => vec![],
        },
        _ => vec![],
    };
    for (name, radicand, k, r) in radicals {
        if oracle.is_zero(radicand)? {
            return Err(Error::DegenerateRadical(name.to_string()));
        }
        if !r.verify(radicand, k, &oracle.cfg)? {
            return Err(Error::RadicalMismatch(name.to_string()));
        }
    }
    Ok(())
}

/// A checked branch coframe together with the invariants it was built from.
#[derive(Debug, Clone)]
pub struct BranchCoframe {
    pub tag: BranchTag,
    pub matrix: CoframeMatrix,
    pub invariants: FamilyInvariants,
    pub choice: RadicalChoice,
}

/// Builds the coframe of `tag` for `f` after verifying the branch conditions and radicals.
pub fn build_branch_coframe(
    tag: BranchTag,
    f: &Expr,
    choice: &RadicalChoice,
    switches: Switches,
    oracle: &ZeroOracle,
) -> Result<BranchCoframe> {
    let invariants = FamilyInvariants::compute(tag, f, switches)?;
    check_branch(tag, &invariants, oracle)?;
    check_radicals(tag, &invariants, choice, oracle)?;
    let matrix = full_coframe(tag, &invariants, choice)?;
    Ok(BranchCoframe { tag, matrix, invariants, choice: choice.clone() })
}


/// All numbered radical variants of a branch coframe, prepared for evaluation.
#[derive(Debug, Clone)]
pub struct PreparedBranch {
    pub tag: BranchTag,
    pub invariants: FamilyInvariants,
    pub choices: Vec<RadicalChoice>,
    pub variants: Vec<PreparedCoframe>,
}

impl PreparedBranch {
    /// Checks the branch conditions and prepares every variant of [`radical_variants`].
    pub fn new(tag: BranchTag, f: &Expr, switches: Switches, oracle: &ZeroOracle) -> Result<PreparedBranch> {
        let invariants = FamilyInvariants::compute(tag, f, switches)?;
        check_branch(tag, &invariants, oracle)?;
        let choices = radical_variants(tag);
        check_radicals(tag, &invariants, &choices[0], oracle)?;
        let mut d = Differentiator::new();
        let variants = choices
            .iter()
            .map(|c| PreparedCoframe::with_differentiator(&full_coframe(tag, &invariants, c)?, f, &mut d))
            .collect::<Result<Vec<_>>>()?;
        Ok(PreparedBranch { tag, invariants, choices, variants })
    }

    /// Index of the variant with the given selectors.
    pub fn variant_index(&self, choice: &RadicalChoice) -> Option<usize> {
        self.choices.iter().position(|c| c == choice)
    }

    pub fn fingerprint<S: Scalar>(
        &self,
        reference: usize,
        params: &ParamBinding<S>,
        cfg: &FingerprintConfig,
    ) -> Result<StructureFingerprint<S>> {
        Ok(aligned_fingerprint(&self.variants, reference, params, cfg)?.with_branch(self.tag))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{is_identically_zero, parse};

    fn oracle() -> ZeroOracle {
        ZeroOracle::new(&ZeroTestConfig::default(), &ParamBinding::new())
    }

    #[test]
    fn omega_of_trivial_equation_is_identity() {
        let base = BaseInvariants::compute(&Expr::zero()).unwrap();
        assert_eq!(build_omega(&base), CoframeMatrix::identity(5));
    }

    #[test]
    fn omega_entry_of_square() {
        let base = BaseInvariants::compute(&parse("r^2").unwrap()).unwrap();
        let om = build_omega(&base);
        assert!(is_identically_zero(&(om.get(1, 0) - Expr::r()), &ZeroTestConfig::default()).unwrap());
    }

    #[test]
    fn trivial_equation_violates_t1() {
        let err = build_branch_coframe(BranchTag::T1, &Expr::zero(), &RadicalChoice::default(), Switches::default(), &oracle())
            .unwrap_err();
        assert!(matches!(err, Error::BranchMismatch { branch: BranchTag::T1, .. }), "{err}");
    }

    #[test]
    fn square_is_not_t2() {
        let err = build_branch_coframe(BranchTag::T2, &parse("r^2").unwrap(), &RadicalChoice::default(), Switches::default(), &oracle())
            .unwrap_err();
        assert!(matches!(err, Error::BranchMismatch { branch: BranchTag::T2, .. }));
    }

    #[test]
    fn explicit_radical_must_square_to_radicand() {
        // I8 of r^2 is 27 r^2 / 10
        let f = parse("r^2").unwrap();
        let good = RadicalChoice { j8: Radical::Explicit(parse("r*(27/10)^(1/2)").unwrap()), ..Default::default() };
        assert!(build_branch_coframe(BranchTag::T3, &f, &good, Switches::default(), &oracle()).is_ok());
        let bad = RadicalChoice { j8: Radical::Explicit(parse("r").unwrap()), ..Default::default() };
        assert!(matches!(
            build_branch_coframe(BranchTag::T3, &f, &bad, Switches::default(), &oracle()),
            Err(Error::RadicalMismatch(_))
        ));
    }

    #[test]
    fn variant_counts() {
        assert_eq!(radical_variants(BranchTag::T1).len(), 8);
        assert_eq!(radical_variants(BranchTag::T3).len(), 2);
        assert_eq!(radical_variants(BranchTag::T4).len(), 1);
    }
}
