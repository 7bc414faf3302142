//! Point transformations `xbar = phi(x, u)`, `ubar = psi(x, u)`: prolongation,
//! verification of equivalence maps, the b-matrix relating two invariant coframes,
//! and the PDE systems whose solutions are the equivalence maps.

use std::fmt;

use crate::canonical::CanonicalForm;
use crate::coframe::{full_coframe, radical_variants, BranchTag, FamilyInvariants, RadicalChoice, ZeroOracle, check_branch};
use crate::error::{Error, Result};
use crate::expr::{
    compose_jet, parse, substitute, zero_test, zero_test_any, Differentiator, Expr, JetVar, ParamBinding, Substitution,
    ZeroEvidence, ZeroTestConfig,
};
use crate::forms::CoframeMatrix;
use crate::invariants::Switches;
use crate::Complex64;

/// A candidate map `(x, u) -> (phi, psi)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformCandidate {
    pub phi: Expr,
    pub psi: Expr,
}

fn only_xu(e: &Expr) -> bool {
    [JetVar::P, JetVar::Q, JetVar::R, JetVar::A13].iter().all(|v| !e.contains_var(*v))
}

impl TransformCandidate {
    /// Checks that both components depend on `(x, u)` only and the Jacobian is not identically zero.
    pub fn new(phi: Expr, psi: Expr, cfg: &ZeroTestConfig) -> Result<Self> {
        if !only_xu(&phi) || !only_xu(&psi) {
            return Err(Error::InvalidTransform("components may depend on x and u only".into()));
        }
        let mut d = Differentiator::new();
        let jac = d.partial(&phi, JetVar::X) * d.partial(&psi, JetVar::U) - d.partial(&phi, JetVar::U) * d.partial(&psi, JetVar::X);
        if zero_test(&jac, cfg, &ParamBinding::<f64>::new())?.identically_zero {
            return Err(Error::InvalidTransform("Jacobian vanishes identically".into()));
        }
        Ok(TransformCandidate { phi, psi })
    }

    pub fn parse(phi: &str, psi: &str, cfg: &ZeroTestConfig) -> Result<Self> {
        Self::new(parse(phi)?, parse(psi)?, cfg)
    }

    pub fn identity() -> Self {
        TransformCandidate { phi: Expr::x(), psi: Expr::u() }
    }

    /// `next` after `self`: `(x, u) -> next(self(x, u))`.
    pub fn then(&self, next: &TransformCandidate) -> TransformCandidate {
        let s = Substitution::new().var(JetVar::X, self.phi.clone()).var(JetVar::U, self.psi.clone());
        TransformCandidate { phi: substitute(&next.phi, &s), psi: substitute(&next.psi, &s) }
    }
}

impl fmt::Display for TransformCandidate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "xbar = {}, ubar = {}", self.phi, self.psi)
    }
}

/// Names of the unknown functions in the b-matrix and the PDE systems.
pub const UNKNOWNS: [&str; 5] = ["phi", "psi", "g", "eta", "xi"];

/// Third prolongation of a candidate, plus the induced value of `ubar''''`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProlongedMap {
    pub phi: Expr,
    pub psi: Expr,
    pub g: Expr,
    pub eta: Expr,
    pub xi: Expr,
    /// `D xi / D phi` along solutions of the source equation.
    pub fbar: Expr,
}

impl ProlongedMap {
    /// `(xbar, ubar, pbar, qbar, rbar)` as functions of the source jet.
    pub fn images(&self) -> [&Expr; 5] {
        [&self.phi, &self.psi, &self.g, &self.eta, &self.xi]
    }

    /// Substitution giving the unknowns of [`UNKNOWNS`] their values under this map.
    pub fn unknown_values(&self) -> Substitution {
        UNKNOWNS.iter().zip(self.images()).fold(Substitution::new(), |s, (n, e)| s.param(n, e.clone()))
    }
}

/// The unknowns as symbolic parameters.
pub fn unknowns() -> [Expr; 5] {
    UNKNOWNS.map(Expr::param)
}

/// Prolongs `t` along the source equation `u'''' = f`.
pub fn prolong(t: &TransformCandidate, f: &Expr, cfg: &ZeroTestConfig) -> Result<ProlongedMap> {
    let mut d = Differentiator::new();
    let dphi = d.total_derivative(&t.phi, f)?;
    if zero_test(&dphi, cfg, &ParamBinding::<f64>::new())?.identically_zero {
        return Err(Error::InvalidTransform("D[x] phi vanishes identically".into()));
    }
    let g = d.total_derivative(&t.psi, f)? / &dphi;
    let eta = d.total_derivative(&g, f)? / &dphi;
    let xi = d.total_derivative(&eta, f)? / &dphi;
    let fbar = d.total_derivative(&xi, f)? / &dphi;
    Ok(ProlongedMap { phi: t.phi.clone(), psi: t.psi.clone(), g, eta, xi, fbar })
}

/// Outcome of [`verify_transform`].
#[derive(Debug, Clone, PartialEq)]
pub struct TransformCheck {
    pub holds: bool,
    pub evidence: ZeroEvidence,
}

/// Whether `t` maps `u'''' = f_src` onto `u'''' = f_tgt`. `f_tgt` is read in the barred
/// variables; parameters of either side are bound by `params`.
pub fn verify_transform(
    t: &TransformCandidate,
    f_src: &Expr,
    f_tgt: &Expr,
    params: &ParamBinding<f64>,
    cfg: &ZeroTestConfig,
) -> Result<TransformCheck> {
    let pm = prolong(t, f_src, cfg)?;
    let residual = &pm.fbar - compose_jet(f_tgt, pm.images());
    let evidence = zero_test(&residual, cfg, params)?;
    Ok(TransformCheck { holds: evidence.identically_zero, evidence })
}

/// Row `k` of the differential of `h(x, u, p, q, r)` in the contact basis.
fn differential(h: &Expr, f: &Expr, d: &mut Differentiator) -> Vec<Expr> {
    let mut row: Vec<Expr> = [JetVar::U, JetVar::P, JetVar::Q, JetVar::R].into_iter().map(|v| d.partial(h, v)).collect();
    row.push(d.total_derivative_unchecked(h, f));
    row
}

/// The matrix `P` with `(dubar - pbar dxbar, ..., dxbar) = P (du - p dx, ..., dx)` under the
/// prolonged map, using `f_tgt` for the barred fourth derivative.
pub fn pullback_matrix(pm: &ProlongedMap, f_src: &Expr, f_tgt: &Expr) -> Result<CoframeMatrix> {
    let mut d = Differentiator::new();
    let fbar = compose_jet(f_tgt, pm.images());
    let dphi = differential(&pm.phi, f_src, &mut d);
    let pairs = [(&pm.psi, &pm.g), (&pm.g, &pm.eta), (&pm.eta, &pm.xi), (&pm.xi, &fbar)];
    let mut rows = Vec::new();
    for (h, coeff) in pairs {
        let dh = differential(h, f_src, &mut d);
        rows.push(dh.iter().zip(&dphi).map(|(a, b)| a - coeff * b).collect());
    }
    rows.push(dphi);
    CoframeMatrix::from_rows(rows)
}

/// A 5x5 or 6x6 b-matrix with the labels of its free entries.
#[derive(Debug, Clone, PartialEq)]
pub struct BMatrix {
    pub matrix: CoframeMatrix,
}

/// `(row, col)` zero-based of `b1, b2, ...`.
const LABELS_5: [(usize, usize); 13] =
    [(0, 0), (1, 0), (1, 1), (2, 0), (2, 1), (2, 2), (3, 0), (3, 1), (3, 2), (3, 3), (4, 0), (4, 1), (4, 4)];
const LABELS_6: [(usize, usize); 18] = [
    (0, 0), (1, 0), (1, 1), (2, 0), (2, 1), (2, 2), (3, 0), (3, 1), (3, 2), (3, 3), (4, 0), (4, 1), (4, 4),
    (5, 0), (5, 1), (5, 2), (5, 4), (5, 5),
];

impl BMatrix {
    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    fn labels(&self) -> &'static [(usize, usize)] {
        if self.dim() == 5 {
            &LABELS_5
        } else {
            &LABELS_6
        }
    }

    /// Entry `b_k`, one-based. `b12` is the `(5, 2)` slot, which vanishes for genuine maps.
    pub fn b(&self, k: usize) -> &Expr {
        let (i, j) = self.labels()[k - 1];
        self.matrix.get(i, j)
    }

    pub fn count(&self) -> usize {
        self.labels().len()
    }

    /// Slots outside the labelled pattern.
    fn structural_zeros(&self) -> Vec<(usize, usize)> {
        let n = self.dim();
        let labels = self.labels();
        (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).filter(|ij| !labels.contains(ij)).collect()
    }

    /// Checks the triangular pattern by sampling, unknowns included.
    pub fn validate_pattern(&self, cfg: &ZeroTestConfig) -> Result<()> {
        let cfg = ZeroTestConfig { sample_free_params: true, ..cfg.clone() };
        for (i, j) in self.structural_zeros() {
            if !zero_test(self.matrix.get(i, j), &cfg, &ParamBinding::<f64>::new())?.identically_zero {
                return Err(Error::Shape(format!("b-matrix entry ({}, {}) is not zero", i + 1, j + 1)));
            }
        }
        Ok(())
    }

    pub fn map(&self, f: impl FnMut(&Expr) -> Expr) -> BMatrix {
        BMatrix { matrix: self.matrix.map(f) }
    }
}

/// Replaces the barred jet coordinates of a target-side expression by the unknowns.
fn barred(e: &Expr) -> Expr {
    let [phi, psi, g, eta, xi] = unknowns();
    compose_jet(e, [&phi, &psi, &g, &eta, &xi])
}

/// `(Mbar)^{-1} M` for two 5x5 coframes, the barred one read in the unknowns.
pub fn b_matrix_5(cof_src: &CoframeMatrix, cof_tgt: &CoframeMatrix, cfg: &ZeroTestConfig) -> Result<BMatrix> {
    if cof_src.dim() != 5 || cof_tgt.dim() != 5 {
        return Err(Error::Shape("b_matrix_5 needs 5x5 coframes".into()));
    }
    let tgt = cof_tgt.map(barred);
    let b = BMatrix { matrix: tgt.inverse_lower_triangular()?.mul(cof_src)? };
    b.validate_pattern(cfg)?;
    Ok(b)
}

/// Targets of the six-dimensional construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SixTarget {
    FourThirds,
    FiveThirds,
}

impl SixTarget {
    pub fn from_form_id(id: &str) -> Result<SixTarget> {
        match id {
            "(4/3)r^2/q" => Ok(SixTarget::FourThirds),
            "(5/3)r^2/q" => Ok(SixTarget::FiveThirds),
            other => Err(Error::UnsupportedTarget(other.to_string())),
        }
    }

    pub fn f(self) -> Expr {
        let k = match self {
            SixTarget::FourThirds => Expr::ratio(4, 3),
            SixTarget::FiveThirds => Expr::ratio(5, 3),
        };
        k * Expr::r().square() / Expr::q()
    }

    /// The constants `m1..m15` and `n1..n4` of the barred matrices with `abar13 = 1`.
    pub fn constants(self) -> ([(i64, i64); 15], [(i64, i64); 4]) {
        match self {
            SixTarget::FourThirds => (
                [(4, 9), (-4, 9), (4, 9), (8, 27), (-16, 27), (4, 9), (8, 81), (8, 27), (-4, 9), (4, 9), (0, 1), (-1, 3), (2, 3), (-1, 2), (-2, 3)],
                [(4, 3), (10, 9), (4, 3), (2, 3)],
            ),
            SixTarget::FiveThirds => (
                [(5, 9), (-10, 9), (5, 9), (40, 27), (-40, 27), (5, 9), (-40, 81), (40, 27), (-10, 9), (5, 9), (1, 3), (-7, 9), (1, 1), (-1, 2), (-1, 3)],
                [(5, 3), (16, 9), (5, 3), (1, 1)],
            ),
        }
    }

    /// `Abar Hbar` assembled from the tabulated constants, in the unknowns `eta`, `xi`.
    pub fn tabulated_coframe(self) -> CoframeMatrix {
        let (m, n) = self.constants();
        let c = |(a, b): (i64, i64)| Expr::ratio(a, b);
        let (eta, xi) = (Expr::param("eta"), Expr::param("xi"));
        // xi^a / eta^b
        let w = |a: i64, b: i64| xi.powi(a) / eta.powi(b);
        let z = Expr::zero;
        let o = Expr::one;
        let abar = CoframeMatrix::from_rows(vec![
            vec![c(m[0]) * w(0, 1), z(), z(), z(), z(), z()],
            vec![c(m[1]) * w(1, 2), c(m[2]) * w(0, 1), z(), z(), z(), z()],
            vec![c(m[3]) * w(2, 3), c(m[4]) * w(1, 2), c(m[5]) * w(0, 1), z(), z(), z()],
            vec![c(m[6]) * w(3, 4), c(m[7]) * w(2, 3), c(m[8]) * w(1, 2), c(m[9]) * w(0, 1), z(), z()],
            vec![c(m[10]) * w(1, 2), z(), z(), z(), o(), z()],
            vec![c(m[11]) * w(2, 3), c(m[12]) * w(1, 2), c(m[13]) * w(0, 1), z(), c(m[14]) * w(1, 1), o()],
        ])
        .expect("6x6");
        let hbar = CoframeMatrix::from_rows(vec![
            vec![o(), z(), z(), z(), z(), z()],
            vec![c(n[0]) * w(1, 1), o(), z(), z(), z(), z()],
            vec![c(n[1]) * w(2, 2), c(n[2]) * w(1, 1), o(), z(), z(), z()],
            vec![z(), c(n[3]) * w(2, 2), z(), o(), z(), z()],
            vec![z(), z(), z(), z(), o(), z()],
            vec![z(), z(), z(), z(), z(), o()],
        ])
        .expect("6x6");
        abar.mul(&hbar).expect("same size")
    }
}

/// `(Abar Hbar)^{-1} A H` with the barred side from the tabulated constants. `cof_src`
/// is the six-dimensional coframe of the source, which must lie on T4.
pub fn b_matrix_6(cof_src: &CoframeMatrix, target: SixTarget, cfg: &ZeroTestConfig) -> Result<BMatrix> {
    if cof_src.dim() != 6 {
        return Err(Error::Shape("b_matrix_6 needs the six-dimensional coframe".into()));
    }
    let b = BMatrix { matrix: target.tabulated_coframe().inverse_lower_triangular()?.mul(cof_src)? };
    b.validate_pattern(cfg)?;
    Ok(b)
}

/// Which system to emit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PdeKind {
    /// five-dimensional coframes, 17 equations
    Five,
    /// six-dimensional coframes with auxiliary `a13(x, u, p, q)`, 21 equations
    Six,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Derivative {
    Total,
    Partial(JetVar),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PdeEquation {
    pub derivative: Derivative,
    /// `phi`, `psi`, `g`, `eta`, `xi` or `a13`.
    pub target: &'static str,
    pub rhs: Expr,
}

impl fmt::Display for PdeEquation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.derivative {
            Derivative::Total => write!(f, "D[x] {} = {}", self.target, self.rhs),
            Derivative::Partial(v) => write!(f, "d/d{} {} = {}", v.name(), self.target, self.rhs),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PdeSystem {
    pub kind: PdeKind,
    pub equations: Vec<PdeEquation>,
}

impl PdeSystem {
    pub fn lines(&self) -> Vec<String> {
        self.equations.iter().map(|e| e.to_string()).collect()
    }

    /// Replaces right-hand sides that vanish identically, unknowns included, by `0`.
    /// The b-matrix product leaves such entries as large unsimplified trees.
    pub fn prune_zeros(mut self, cfg: &ZeroTestConfig) -> Result<Self> {
        let cfg = ZeroTestConfig { sample_free_params: true, ..cfg.clone() };
        for eq in &mut self.equations {
            if !eq.rhs.is_zero() && zero_test(&eq.rhs, &cfg, &ParamBinding::<f64>::new())?.identically_zero {
                eq.rhs = Expr::zero();
            }
        }
        Ok(self)
    }
}

/// Writes out the PDE system of a b-matrix. `f_tgt` is the target right-hand side in
/// barred variables; it enters as `fbar`.
pub fn emit_pde_system(b: &BMatrix, f_tgt: &Expr) -> PdeSystem {
    use Derivative::{Partial, Total};
    let kind = if b.dim() == 5 { PdeKind::Five } else { PdeKind::Six };
    let [_, _, g, eta, xi] = unknowns();
    let fbar = barred(f_tgt);
    let bk = |k: usize| b.b(k).clone();
    let eq = |derivative, target, rhs| PdeEquation { derivative, target, rhs };
    let mut equations = Vec::new();
    if kind == PdeKind::Six {
        let b18 = bk(18);
        equations.push(eq(Total, "a13", -(bk(17) / &b18)));
        equations.push(eq(Partial(JetVar::U), "a13", -(bk(14) / &b18)));
        equations.push(eq(Partial(JetVar::P), "a13", -(bk(15) / &b18)));
        equations.push(eq(Partial(JetVar::Q), "a13", -(bk(16) / &b18)));
    }
    equations.extend([
        eq(Total, "xi", &fbar * bk(13)),
        eq(Partial(JetVar::U), "xi", &fbar * bk(11) + bk(7)),
        eq(Partial(JetVar::P), "xi", bk(8)),
        eq(Partial(JetVar::Q), "xi", bk(9)),
        eq(Partial(JetVar::R), "xi", bk(10)),
        eq(Total, "eta", &xi * bk(13)),
        eq(Partial(JetVar::U), "eta", &xi * bk(11) + bk(4)),
        eq(Partial(JetVar::P), "eta", bk(5)),
        eq(Partial(JetVar::Q), "eta", bk(6)),
        eq(Total, "g", &eta * bk(13)),
        eq(Partial(JetVar::U), "g", &eta * bk(11) + bk(2)),
        eq(Partial(JetVar::P), "g", bk(3)),
        eq(Total, "psi", &g * bk(13)),
        eq(Partial(JetVar::U), "psi", &g * bk(11) + bk(1)),
        eq(Total, "phi", bk(13)),
        eq(Partial(JetVar::U), "phi", bk(11)),
        eq(Partial(JetVar::P), "phi", bk(12)),
    ]);
    PdeSystem { kind, equations }
}

/// Residuals `lhs - rhs` of every equation after substituting the candidate.
fn residuals(sys: &PdeSystem, pm: &ProlongedMap, f_src: &Expr, aux: Option<&Expr>) -> Result<Vec<Expr>> {
    let mut values = pm.unknown_values();
    if let Some(a) = aux {
        values = values.var(JetVar::A13, a.clone());
    }
    let mut d = Differentiator::new();
    sys.equations
        .iter()
        .map(|eq| {
            let fun = match eq.target {
                "a13" => aux.ok_or_else(|| Error::InvalidTransform("the six-dimensional system needs a13".into()))?.clone(),
                name => {
                    let i = UNKNOWNS.iter().position(|n| *n == name).expect("known unknown");
                    pm.images()[i].clone()
                }
            };
            let lhs = match eq.derivative {
                Derivative::Total => d.total_derivative(&fun, f_src)?,
                Derivative::Partial(v) => d.partial(&fun, v),
            };
            Ok(lhs - substitute(&eq.rhs, &values))
        })
        .collect()
}

/// Whether the candidate (with `aux` as `a13` for the six-dimensional system) solves one of
/// the given systems at every sample. Systems are alternatives for different radical
/// branches; each sample may be satisfied by a different one.
pub fn check_candidate_against_pde(
    t: &TransformCandidate,
    aux: Option<&Expr>,
    f_src: &Expr,
    systems: &[PdeSystem],
    cfg: &ZeroTestConfig,
) -> Result<TransformCheck> {
    if let Some(a) = aux {
        if a.contains_var(JetVar::R) || a.contains_var(JetVar::A13) {
            return Err(Error::InvalidTransform("a13 may depend on x, u, p, q only".into()));
        }
    }
    let pm = prolong(t, f_src, cfg)?;
    let alternatives = systems.iter().map(|s| residuals(s, &pm, f_src, aux)).collect::<Result<Vec<_>>>()?;
    let evidence = zero_test_any(&alternatives, cfg, &ParamBinding::<f64>::new())?;
    Ok(TransformCheck { holds: evidence.identically_zero, evidence })
}

/// PDE systems between a source and target equation on the same branch: the source
/// coframe at its principal radicals against every radical variant of the target.
pub fn pde_systems(f_src: &Expr, f_tgt: &Expr, tag: BranchTag, switches: Switches, cfg: &ZeroTestConfig) -> Result<Vec<PdeSystem>> {
    let oracle = ZeroOracle::new(cfg, &ParamBinding::new());
    let src_inv = FamilyInvariants::compute(tag, f_src, switches)?;
    check_branch(tag, &src_inv, &oracle)?;
    let tgt_inv = FamilyInvariants::compute(tag, f_tgt, switches)?;
    check_branch(tag, &tgt_inv, &oracle)?;
    let src = full_coframe(tag, &src_inv, &RadicalChoice::default())?;
    if tag == BranchTag::T4 {
        let target = six_target_of(f_tgt, cfg)?;
        let b = b_matrix_6(&src, target, cfg)?;
        return Ok(vec![emit_pde_system(&b, f_tgt).prune_zeros(cfg)?]);
    }
    radical_variants(tag)
        .iter()
        .map(|choice| {
            let tgt = full_coframe(tag, &tgt_inv, choice)?;
            emit_pde_system(&b_matrix_5(&src, &tgt, cfg)?, f_tgt).prune_zeros(cfg)
        })
        .collect()
}

fn six_target_of(f_tgt: &Expr, cfg: &ZeroTestConfig) -> Result<SixTarget> {
    for t in [SixTarget::FourThirds, SixTarget::FiveThirds] {
        if zero_test(&(f_tgt - t.f()), cfg, &ParamBinding::<f64>::new())?.identically_zero {
            return Ok(t);
        }
    }
    Err(Error::UnsupportedTarget(f_tgt.to_string()))
}

/// The rescaling map of a canonical form at `K`, with other parameters fixed by `extra`.
/// Returns the candidate, the parameter-free source and the rescaled target.
pub fn scaling_fixture(
    form: &CanonicalForm,
    k: Complex64,
    extra: &ParamBinding<f64>,
    cfg: &ZeroTestConfig,
) -> Result<(TransformCandidate, Expr, Expr)> {
    let map = form.scaling.as_ref().ok_or_else(|| Error::UnsupportedTarget(format!("{} has no scaling map", form.id)))?;
    let mut values = extra.clone();
    values.insert("K".into(), k);
    let mut s = Substitution::new();
    for (name, v) in &values {
        let e = crate::canonical::exact_value(*v)
            .ok_or_else(|| Error::InvalidTransform(format!("{name} must be rational for a scaling fixture")))?;
        s = s.param(name, e);
    }
    let inst = form.instantiate(extra)?;
    let t = TransformCandidate::new(substitute(&map.xbar, &s), substitute(&map.ubar, &s), cfg)?;
    Ok((t, inst.f, substitute(&map.k_form, &s)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::is_identically_zero;

    fn cfg() -> ZeroTestConfig {
        ZeroTestConfig::default()
    }

    fn same(a: &Expr, b: &Expr) -> bool {
        is_identically_zero(&(a - b), &cfg()).unwrap()
    }

    #[test]
    fn identity_prolongs_to_identity() {
        let f = parse("exp(r)*q").unwrap();
        let pm = prolong(&TransformCandidate::identity(), &f, &cfg()).unwrap();
        assert_eq!((pm.g, pm.eta, pm.xi), (Expr::p(), Expr::q(), Expr::r()));
        assert!(same(&pm.fbar, &f));
    }

    #[test]
    fn degenerate_candidates_are_rejected() {
        assert!(TransformCandidate::parse("x + u", "2*x + 2*u", &cfg()).is_err());
        assert!(TransformCandidate::parse("p", "u", &cfg()).is_err());
    }

    #[test]
    fn swap_verifies() {
        let t = TransformCandidate::parse("u", "x", &cfg()).unwrap();
        let src = parse("r^2/q + 4*q*r/p - 6*q^3/p^2").unwrap();
        let tgt = parse("r^2/q").unwrap();
        assert!(verify_transform(&t, &src, &tgt, &ParamBinding::new(), &cfg()).unwrap().holds);
        assert!(!verify_transform(&TransformCandidate::identity(), &src, &tgt, &ParamBinding::new(), &cfg()).unwrap().holds);
    }

    #[test]
    fn identity_b_matrix_is_identity() {
        let f = parse("r^2").unwrap();
        let inv = FamilyInvariants::compute(BranchTag::T3, &f, Switches::default()).unwrap();
        let m = full_coframe(BranchTag::T3, &inv, &RadicalChoice::default()).unwrap();
        let b = b_matrix_5(&m, &m, &cfg()).unwrap();
        let pm = prolong(&TransformCandidate::identity(), &f, &cfg()).unwrap();
        let b = b.map(|e| substitute(e, &pm.unknown_values()));
        assert!(b.matrix.entries().iter().zip(CoframeMatrix::identity(5).entries()).all(|(a, e)| same(a, e)));
    }

    #[test]
    fn tabulated_matches_generic_construction() {
        for t in [SixTarget::FourThirds, SixTarget::FiveThirds] {
            let inv = FamilyInvariants::compute(BranchTag::T4, &t.f(), Switches::default()).unwrap();
            let generic = full_coframe(BranchTag::T4, &inv, &RadicalChoice::default()).unwrap();
            let generic = generic.map(|e| barred(&substitute(e, &Substitution::new().var(JetVar::A13, Expr::one()))));
            let cfg = ZeroTestConfig { sample_free_params: true, ..cfg() };
            for (a, b) in generic.entries().iter().zip(t.tabulated_coframe().entries()) {
                assert!(is_identically_zero(&(a - b), &cfg).unwrap(), "{a} vs {b}");
            }
        }
    }

    #[test]
    fn pde_system_sizes() {
        let f = parse("r^2").unwrap();
        let sys = pde_systems(&f, &f, BranchTag::T3, Switches::default(), &cfg()).unwrap();
        assert_eq!(sys.len(), 2);
        assert_eq!(sys[0].equations.len(), 17);
        assert!(sys[0].lines()[14].starts_with("D[x] phi = "));
        let id = TransformCandidate::identity();
        assert!(check_candidate_against_pde(&id, None, &f, &sys, &cfg()).unwrap().holds);
    }
}
