//! Branch selection, fingerprint matching against the canonical database, and
//! recovery of canonical parameters from structure functions.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_complex::Complex64;
use serde::Serialize;
use serde_json::{json, Value};

use crate::canonical::{canonical_fingerprint, exact_value, CanonicalDatabase, CanonicalForm, Selector};
use crate::coframe::{BranchTag, FamilyInvariants, PreparedBranch, RadicalChoice, ZeroOracle};
use crate::error::{Error, Result};
use crate::expr::{substitute, zero_test, Expr, ParamBinding, Substitution, ZeroTestConfig};
use crate::forms::{fingerprint_lines, fingerprint_match, pretty_complex, recognize_rational, tensor_deviation, FingerprintConfig};
use crate::invariants::{Radical, Switches};
use crate::Fingerprint;

/// Relations fail when their denominator is smaller than this.
pub const RELATION_DENOMINATOR_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct ClassifyConfig {
    pub zero: ZeroTestConfig,
    pub fingerprint: FingerprintConfig,
    /// Tolerance of [`fingerprint_match`] against canonical forms. Looser than the
    /// constancy tolerance because recovered parameters carry sampling error.
    pub match_tolerance: f64,
    pub switches: Switches,
    /// Radical branch used at the reference sample of the input.
    pub selectors: RadicalChoice,
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        ClassifyConfig::new(42, 24, 1e-8)
    }
}

impl ClassifyConfig {
    pub fn new(seed: u64, samples: usize, tolerance: f64) -> Self {
        let zero = ZeroTestConfig { seed, sample_count: samples, tolerance, ..Default::default() };
        ClassifyConfig {
            fingerprint: FingerprintConfig::from_zero_config(&zero),
            zero,
            match_tolerance: (tolerance * 100.0).max(1e-6),
            switches: Switches::default(),
            selectors: RadicalChoice::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvariantStatus {
    pub name: String,
    pub zero: bool,
    pub samples_used: usize,
    pub worst_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Verdict {
    Matched { form: String },
    OutsideScope { reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FormMatch {
    pub form: String,
    pub algebra: String,
    pub params: BTreeMap<String, String>,
    pub deviation: f64,
    /// Radical variant of the canonical coframe at its reference sample.
    pub canonical_variant: usize,
}

#[derive(Debug, Clone)]
pub struct BranchReport {
    pub input: String,
    pub params: BTreeMap<String, String>,
    pub config: ClassifyConfig,
    pub invariants: Vec<InvariantStatus>,
    pub branch: Option<BranchTag>,
    pub verdict: Verdict,
    /// Every canonical form whose fingerprint agrees; families may overlap.
    pub matches: Vec<FormMatch>,
    /// Parameter values recovered from the structure functions, per relation.
    pub recovered: BTreeMap<String, Vec<String>>,
    pub fingerprint: Option<Fingerprint>,
}

impl BranchReport {
    pub fn matched_form(&self) -> Option<&str> {
        match &self.verdict {
            Verdict::Matched { form } => Some(form),
            Verdict::OutsideScope { .. } => None,
        }
    }

    /// 0 matched, 2 outside the classified scope.
    pub fn exit_code(&self) -> i32 {
        match self.verdict {
            Verdict::Matched { .. } => 0,
            Verdict::OutsideScope { .. } => 2,
        }
    }

    pub fn selectors(&self) -> String {
        match self.branch {
            Some(tag) => self.config.selectors.label(tag),
            None => "none".into(),
        }
    }

    pub fn to_json(&self) -> Value {
        let fp = self.fingerprint.as_ref().map(|fp| {
            json!({
                "constant": fp.constant,
                "max_deviation": fp.max_deviation,
                "rejected_samples": fp.rejected_samples,
                "entries": fingerprint_lines(&fp.mean),
            })
        });
        json!({
            "input": self.input,
            "params": self.params,
            "seed": self.config.zero.seed,
            "samples": self.config.zero.sample_count,
            "tolerance": self.config.zero.tolerance,
            "match_tolerance": self.config.match_tolerance,
            "switches": self.config.switches.describe(),
            "invariants": self.invariants,
            "branch": self.branch.map(|b| b.to_string()),
            "selectors": self.selectors(),
            "verdict": self.verdict,
            "matches": self.matches,
            "recovered": self.recovered,
            "fingerprint": fp,
        })
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "input: {}", self.input);
        for (k, v) in &self.params {
            let _ = writeln!(s, "param: {k} = {v}");
        }
        let _ = writeln!(
            s,
            "seed: {}  samples: {}  tolerance: {:e}",
            self.config.zero.seed, self.config.zero.sample_count, self.config.zero.tolerance
        );
        for st in &self.invariants {
            let _ = writeln!(s, "{} {}", st.name, if st.zero { "= 0" } else { "!= 0" });
        }
        if let Some(b) = self.branch {
            let _ = writeln!(s, "branch: {b} ({})", b.conditions());
            let _ = writeln!(s, "selectors: {}", self.selectors());
        }
        if let Some(fp) = &self.fingerprint {
            let _ = writeln!(s, "fingerprint deviation: {:.3e}", fp.max_deviation);
        }
        for (k, vals) in &self.recovered {
            let _ = writeln!(s, "recovered {k}: {}", vals.join(", "));
        }
        for m in &self.matches {
            let params: Vec<String> = m.params.iter().map(|(k, v)| format!("{k}={v}")).collect();
            let _ = writeln!(s, "match: \"{}\" {} {} (deviation {:.3e})", m.form, m.algebra, params.join(" "), m.deviation);
        }
        match &self.verdict {
            Verdict::Matched { form } => {
                let _ = writeln!(s, "matched \"{form}\"");
            }
            Verdict::OutsideScope { reason } => {
                let _ = writeln!(s, "outside classified scope: {reason}");
            }
        }
        s
    }
}

/// The two families with parameter `b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BFamily {
    /// `r^{(b-3)/(b-2)}`
    Power,
    /// `r^{(1-3b)/(1-2b)}`
    Reciprocal,
}

impl BFamily {
    pub fn form_id(self) -> &'static str {
        match self {
            BFamily::Power => "r^{(b-3)/(b-2)}",
            BFamily::Reciprocal => "r^{(1-3b)/(1-2b)}",
        }
    }
}

/// The two families with parameter `K` recovered from structure functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KFamily {
    /// `6qr/p - 6q^3/p^2 + K(3q^2 - 2pr)^{3/2}/p^2`, determined up to sign
    Radical,
    /// `K r^2/q`
    Quotient,
}

impl KFamily {
    pub fn form_id(self) -> &'static str {
        match self {
            KFamily::Radical => "6qr/p-6q^3/p^2+K(3q^2-2pr)^{3/2}/p^2",
            KFamily::Quotient => "Kr^2/q",
        }
    }
}

fn require_branch(fp: &Fingerprint, expected: BranchTag) -> Result<()> {
    if fp.branch != Some(expected) {
        return Err(Error::WrongBranch { expected, found: fp.branch });
    }
    Ok(())
}

fn ratio(num: Complex64, den: Complex64, what: &str) -> Result<Complex64> {
    if den.norm() < RELATION_DENOMINATOR_TOL {
        return Err(Error::DegenerateRelation(format!("{what} is below tolerance")));
    }
    Ok(num / den)
}

/// `b` from `T2_24` and `T5_45` of a T2 fingerprint.
pub fn recover_b(fp: &Fingerprint, family: BFamily) -> Result<Complex64> {
    require_branch(fp, BranchTag::T2)?;
    let (t224, t545) = (fp.t(2, 2, 4), fp.t(5, 4, 5));
    match family {
        BFamily::Power => ratio(-t224, t545, "T5_45"),
        BFamily::Reciprocal => ratio(-t545, t224, "T2_24"),
    }
}

/// `K` from the structure functions; the radical family gives both signs.
pub fn recover_k(fp: &Fingerprint, family: KFamily) -> Result<Vec<Complex64>> {
    match family {
        KFamily::Radical => {
            require_branch(fp, BranchTag::T2)?;
            let k2 = ratio(Complex64::new(4.0, 0.0), 3.0 - 8.0 * fp.t(4, 2, 5), "3 - 8 T4_25")?;
            let k = k2.sqrt();
            Ok(vec![k, -k])
        }
        KFamily::Quotient => {
            require_branch(fp, BranchTag::T3)?;
            Ok(vec![ratio(Complex64::new(3.0, 0.0), 2.0 - fp.t(3, 1, 3), "2 - T3_13")?])
        }
    }
}

/// One-based slots `T^i_jk` of the constants `c1..c8` in the T4 structure equations.
pub const ESTRUCTURE_SLOTS: [(usize, usize, usize); 8] =
    [(2, 1, 4), (2, 2, 3), (3, 2, 4), (4, 3, 4), (5, 1, 4), (5, 3, 5), (6, 2, 4), (6, 4, 5)];

/// The constants `c1..c8` of a T4 fingerprint.
pub fn estructure_constants(fp: &Fingerprint) -> Result<[Complex64; 8]> {
    require_branch(fp, BranchTag::T4)?;
    Ok(ESTRUCTURE_SLOTS.map(|(i, j, k)| fp.t(i, j, k)))
}

/// Rounds to a nearby small-denominator rational so the canonical form can be
/// instantiated exactly.
fn snap(v: Complex64) -> Complex64 {
    let scale = 1.0 + v.norm();
    if v.im.abs() > 1e-9 * scale {
        return v;
    }
    match recognize_rational(v.re, 1000, 1e-9 * scale) {
        Some((n, d)) => Complex64::new(n as f64 / d as f64, 0.0),
        None => v,
    }
}

fn binding(name: &str, v: Complex64) -> ParamBinding<f64> {
    ParamBinding::from([(name.to_string(), v)])
}

/// Normalizes selectors to the fields a branch actually uses.
fn reference_choice(tag: BranchTag, sel: &RadicalChoice) -> RadicalChoice {
    let zero = Radical::Branch(0);
    match tag {
        BranchTag::T1 => RadicalChoice { j8: zero, ..sel.clone() },
        BranchTag::T3 => RadicalChoice { j6: zero.clone(), j10: zero, j8: sel.j8.clone() },
        _ => RadicalChoice::default(),
    }
}

/// Substitutes exactly representable parameter values; the rest stay bound numerically.
pub fn bind_params(f: &Expr, params: &ParamBinding<f64>) -> (Expr, ParamBinding<f64>) {
    let mut s = Substitution::new();
    let mut rest = ParamBinding::new();
    for (k, v) in params {
        match exact_value(*v) {
            Some(c) => s = s.param(k, c),
            None => {
                rest.insert(k.clone(), *v);
            }
        }
    }
    (substitute(f, &s), rest)
}

/// Zero-test results for every invariant of the deepest family computation.
pub fn invariant_statuses(
    f: &Expr,
    params: &ParamBinding<f64>,
    cfg: &ClassifyConfig,
) -> Result<(FamilyInvariants, Vec<InvariantStatus>)> {
    let probe = FamilyInvariants::compute(BranchTag::T1, f, cfg.switches)?;
    let i4_zero = zero_test(&probe.base().i4, &cfg.zero, params)?.identically_zero;
    let inv = if i4_zero { probe } else { FamilyInvariants::compute(BranchTag::T4, f, cfg.switches)? };
    let statuses = inv
        .set()
        .entries
        .iter()
        .map(|(name, e)| {
            let z = zero_test(e, &cfg.zero, params)?;
            Ok(InvariantStatus { name: name.clone(), zero: z.identically_zero, samples_used: z.samples_used, worst_ratio: z.worst_ratio })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((inv, statuses))
}

/// The branch `f` lies on together with its prepared coframes, or the reason it lies on none.
pub fn select_branch(
    f: &Expr,
    params: &ParamBinding<f64>,
    statuses: &[InvariantStatus],
    cfg: &ClassifyConfig,
) -> Result<std::result::Result<PreparedBranch, String>> {
    let i4_zero = statuses.iter().find(|s| s.name == "I4").is_some_and(|s| s.zero);
    let tags: &[BranchTag] = if i4_zero { &[BranchTag::T1] } else { &[BranchTag::T2, BranchTag::T3, BranchTag::T4] };
    let oracle = ZeroOracle::new(&cfg.zero, params);
    let mut reasons = Vec::new();
    for &tag in tags {
        match PreparedBranch::new(tag, f, cfg.switches, &oracle) {
            Ok(p) => return Ok(Ok(p)),
            Err(Error::BranchMismatch { condition, .. }) => reasons.push(format!("not {tag}: {condition}")),
            Err(Error::DegenerateRadical(name)) => reasons.push(format!("{tag} radicand of {name} vanishes")),
            Err(e) => return Err(e),
        }
    }
    Ok(Err(reasons.join("; ")))
}

/// Parameter values to try for a canonical form against an input fingerprint.
fn parameter_candidates(
    form: &CanonicalForm,
    fp: &Fingerprint,
    tag: BranchTag,
    recovered: &mut BTreeMap<String, Vec<String>>,
) -> Vec<ParamBinding<f64>> {
    if !form.is_parametrized() {
        return vec![ParamBinding::new()];
    }
    let note = |recovered: &mut BTreeMap<String, Vec<String>>, key: &str, vals: &[Complex64]| {
        recovered.insert(key.to_string(), vals.iter().map(|v| pretty_complex(*v, 1e-7)).collect());
    };
    let id = form.id.as_str();
    if id == KFamily::Radical.form_id() && tag == BranchTag::T1 {
        return vec![binding("K", Complex64::new(0.0, 0.0))];
    }
    for fam in [BFamily::Power, BFamily::Reciprocal] {
        if id == fam.form_id() {
            return match recover_b(fp, fam) {
                Ok(b) => {
                    let b = snap(b);
                    note(recovered, &format!("b [{id}]"), &[b]);
                    vec![binding("b", b)]
                }
                Err(_) => vec![],
            };
        }
    }
    for fam in [KFamily::Radical, KFamily::Quotient] {
        if id == fam.form_id() {
            return match recover_k(fp, fam) {
                Ok(ks) => {
                    let ks: Vec<Complex64> = ks.into_iter().map(snap).collect();
                    note(recovered, &format!("K [{id}]"), &ks);
                    ks.into_iter().map(|k| binding("K", k)).collect()
                }
                Err(_) => vec![],
            };
        }
    }
    vec![]
}

/// Best agreement of the input fingerprint with a canonical instance over its radical variants.
fn compare(
    form: &CanonicalForm,
    values: &ParamBinding<f64>,
    fp: &Fingerprint,
    cfg: &ClassifyConfig,
) -> Result<Option<(usize, f64)>> {
    let inst = match form.instantiate(values) {
        Ok(i) => i,
        Err(Error::ExcludedParameter { .. }) => return Ok(None),
        Err(e) => return Err(e),
    };
    if Some(inst.branch) != fp.branch {
        return Ok(None);
    }
    let variants = crate::coframe::radical_variants(inst.branch).len();
    for v in 0..variants {
        let can = canonical_fingerprint(form, values, Selector(v), cfg.switches, &cfg.fingerprint)?;
        if !can.constant {
            continue;
        }
        if fingerprint_match(fp, &can, cfg.match_tolerance)? {
            return Ok(Some((v, tensor_deviation(&fp.mean, &can.mean))));
        }
    }
    Ok(None)
}

/// Classifies `u'''' = f` up to point transformations.
///
/// Symbolic parameters of `f` must be bound in `params`. Errors are reserved for
/// malformed input and numerical failure; equations that are not covered come back
/// as [`Verdict::OutsideScope`].
pub fn classify(f: &Expr, params: &ParamBinding<f64>, cfg: &ClassifyConfig) -> Result<BranchReport> {
    classify_with(f, params, cfg, CanonicalDatabase::builtin())
}

pub fn classify_with(
    f: &Expr,
    params: &ParamBinding<f64>,
    cfg: &ClassifyConfig,
    db: &CanonicalDatabase,
) -> Result<BranchReport> {
    let (g, numeric) = bind_params(f, params);
    let (_, statuses) = invariant_statuses(&g, &numeric, cfg)?;
    let mut report = BranchReport {
        input: f.to_string(),
        params: params.iter().map(|(k, v)| (k.clone(), pretty_complex(*v, 1e-12))).collect(),
        config: cfg.clone(),
        invariants: statuses,
        branch: None,
        verdict: Verdict::OutsideScope { reason: String::new() },
        matches: vec![],
        recovered: BTreeMap::new(),
        fingerprint: None,
    };
    let prepared = match select_branch(&g, &numeric, &report.invariants, cfg)? {
        Ok(p) => p,
        Err(reason) => {
            report.verdict = Verdict::OutsideScope { reason };
            return Ok(report);
        }
    };
    let tag = prepared.tag;
    report.branch = Some(tag);
    let choice = reference_choice(tag, &cfg.selectors);
    let reference = prepared
        .variant_index(&choice)
        .ok_or_else(|| Error::Shape(format!("no radical variant {} on {tag}", choice.label(tag))))?;
    let fp = prepared.fingerprint(reference, &numeric, &cfg.fingerprint)?;
    let constant = fp.constant;
    let deviation = fp.max_deviation;
    report.fingerprint = Some(fp);
    if !constant {
        report.verdict = Verdict::OutsideScope {
            reason: format!("structure functions of the {tag} coframe are not constant (deviation {deviation:.3e})"),
        };
        return Ok(report);
    }
    let fp = report.fingerprint.as_ref().expect("set above");
    let mut matches = Vec::new();
    let mut recovered = BTreeMap::new();
    for form in db.candidates(tag) {
        for values in parameter_candidates(form, fp, tag, &mut recovered) {
            if let Some((v, dev)) = compare(form, &values, fp, cfg)? {
                matches.push(FormMatch {
                    form: form.id.clone(),
                    algebra: form.algebra.clone(),
                    params: values.iter().map(|(k, x)| (k.clone(), pretty_complex(*x, 1e-9))).collect(),
                    deviation: dev,
                    canonical_variant: v,
                });
            }
        }
    }
    report.recovered = recovered;
    report.verdict = match matches.first() {
        Some(m) => Verdict::Matched { form: m.form.clone() },
        None => Verdict::OutsideScope { reason: format!("constant {tag} structure functions match no canonical form") },
    };
    report.matches = matches;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    fn run(src: &str) -> BranchReport {
        classify(&parse(src).unwrap(), &ParamBinding::new(), &ClassifyConfig::default()).unwrap()
    }

    #[test]
    fn fixed_forms_match_themselves() {
        for (src, id) in [("r^(4/3)", "r^{4/3}"), ("r^2", "r^2"), ("exp(r)", "e^r"), ("(4/3)*r^2/q", "(4/3)r^2/q")] {
            let rep = run(src);
            assert_eq!(rep.matched_form(), Some(id), "{}", rep.to_text());
        }
    }

    #[test]
    fn trivial_equation_is_outside_scope() {
        let rep = run("0");
        assert_eq!(rep.exit_code(), 2);
        assert!(rep.branch.is_none());
    }

    #[test]
    fn recover_b_needs_t2() {
        let rep = run("r^2");
        let err = recover_b(rep.fingerprint.as_ref().unwrap(), BFamily::Power).unwrap_err();
        assert!(matches!(err, Error::WrongBranch { expected: BranchTag::T2, found: Some(BranchTag::T3) }));
    }

    #[test]
    fn snap_rounds_close_rationals_only() {
        assert_eq!(snap(Complex64::new(0.33333333334, 0.0)), Complex64::new(1.0 / 3.0, 0.0));
        let x = Complex64::new(std::f64::consts::PI, 0.0);
        assert_eq!(snap(x), x);
    }
}
