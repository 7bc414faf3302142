//! Database of canonical equations and their structure-function fingerprints.
//!
//! The database is a versioned text file embedded at build time. Records are
//! `form|id|algebra|f|branch|params`; `scale|id|K-form|xbar|ubar` lines give the point
//! map taking a parameter-free form onto its one-parameter rescaled version.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use serde::Serialize;

use crate::coframe::{BranchTag, PreparedBranch, ZeroOracle};
use crate::error::{Error, Result};
use crate::expr::{parse, substitute, Expr, ParamBinding, Substitution, ZeroTestConfig};
use crate::forms::{recognize_rational, FingerprintConfig};
use crate::invariants::Switches;
use crate::Fingerprint;

pub const BUILTIN_TEXT: &str = include_str!("../data/canonical.txt");
pub const SUPPORTED_VERSION: u32 = 1;

/// Two parameter values closer than this are treated as equal.
pub const PARAM_EQ_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParamSpec {
    pub name: String,
    /// Values for which the form degenerates or changes algebra.
    pub excluded: Vec<String>,
    #[serde(skip)]
    excluded_values: Vec<f64>,
}

impl ParamSpec {
    fn is_excluded(&self, v: Complex64) -> Option<&str> {
        self.excluded_values
            .iter()
            .position(|e| (v - e).norm() < PARAM_EQ_TOL)
            .map(|i| self.excluded[i].as_str())
    }
}

/// Branch of a form at particular parameter values.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BranchRule {
    pub default: BranchTag,
    /// `(param, value, branch)` overrides.
    pub overrides: Vec<(String, f64, BranchTag)>,
}

impl BranchRule {
    pub fn at(&self, values: &ParamBinding<f64>) -> BranchTag {
        for (name, v, tag) in &self.overrides {
            if values.get(name).is_some_and(|x| (x - v).norm() < PARAM_EQ_TOL) {
                return *tag;
            }
        }
        self.default
    }

    pub fn all(&self) -> Vec<BranchTag> {
        let mut out = vec![self.default];
        out.extend(self.overrides.iter().map(|o| o.2));
        out.sort();
        out.dedup();
        out
    }
}

/// The map `(x, u) -> (xbar, ubar)` sending a form to its rescaled version `k_form`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingMap {
    pub k_form: Expr,
    pub xbar: Expr,
    pub ubar: Expr,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalForm {
    pub id: String,
    pub algebra: String,
    pub f: Expr,
    pub branch: BranchRule,
    pub params: Vec<ParamSpec>,
    pub scaling: Option<ScalingMap>,
}

impl CanonicalForm {
    pub fn is_parametrized(&self) -> bool {
        !self.params.is_empty()
    }

    /// Checks the parameter values and substitutes the rational ones exactly.
    pub fn instantiate(&self, values: &ParamBinding<f64>) -> Result<Instance> {
        let mut s = Substitution::new();
        let mut numeric = ParamBinding::new();
        let mut used = ParamBinding::new();
        for spec in &self.params {
            let v = *values
                .get(&spec.name)
                .ok_or_else(|| Error::MissingParameter { form: self.id.clone(), name: spec.name.clone() })?;
            if let Some(e) = spec.is_excluded(v) {
                return Err(Error::ExcludedParameter { form: self.id.clone(), name: spec.name.clone(), value: e.to_string() });
            }
            used.insert(spec.name.clone(), v);
            match exact_value(v) {
                Some(c) => s = s.param(&spec.name, c),
                None => {
                    numeric.insert(spec.name.clone(), v);
                }
            }
        }
        Ok(Instance { id: self.id.clone(), f: substitute(&self.f, &s), numeric, values: used.clone(), branch: self.branch.at(&used) })
    }
}

/// `v` as an exact rational when it is one with a small denominator.
pub fn exact_value(v: Complex64) -> Option<Expr> {
    if v.im.abs() > 1e-12 * (1.0 + v.re.abs()) {
        return None;
    }
    recognize_rational(v.re, 10_000, 1e-12 * (1.0 + v.re.abs())).map(|(n, d)| Expr::ratio(n, d))
}

/// A form with its parameters fixed.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub id: String,
    pub f: Expr,
    /// Parameters that stayed symbolic because their value is not a small rational.
    pub numeric: ParamBinding<f64>,
    pub values: ParamBinding<f64>,
    pub branch: BranchTag,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalDatabase {
    pub version: u32,
    pub forms: Vec<CanonicalForm>,
}

impl CanonicalDatabase {
    pub fn builtin() -> &'static CanonicalDatabase {
        static DB: OnceLock<CanonicalDatabase> = OnceLock::new();
        DB.get_or_init(|| CanonicalDatabase::parse(BUILTIN_TEXT).expect("embedded canonical database is valid"))
    }

    pub fn parse(text: &str) -> Result<CanonicalDatabase> {
        let mut version = None;
        let mut forms: Vec<CanonicalForm> = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |m: &str| Error::Database(format!("line {}: {m}", n + 1));
            if let Some(v) = line.strip_prefix("version ") {
                version = Some(v.trim().parse::<u32>().map_err(|_| err("bad version"))?);
                continue;
            }
            let fields: Vec<&str> = line.split('|').map(str::trim).collect();
            match fields[0] {
                "form" if fields.len() == 6 => {
                    let f = parse(fields[3]).map_err(|e| err(&e.to_string()))?;
                    forms.push(CanonicalForm {
                        id: fields[1].to_string(),
                        algebra: fields[2].to_string(),
                        f,
                        branch: parse_branch(fields[4]).map_err(|m| err(&m))?,
                        params: parse_params(fields[5]).map_err(|m| err(&m))?,
                        scaling: None,
                    });
                }
                "scale" if fields.len() == 5 => {
                    let exprs = fields[2..5].iter().map(|s| parse(s)).collect::<std::result::Result<Vec<_>, _>>();
                    let exprs = exprs.map_err(|e| err(&e.to_string()))?;
                    let form = forms.iter_mut().find(|f| f.id == fields[1]).ok_or_else(|| err("scale before its form"))?;
                    form.scaling = Some(ScalingMap { k_form: exprs[0].clone(), xbar: exprs[1].clone(), ubar: exprs[2].clone() });
                }
                _ => return Err(err("unrecognized record")),
            }
        }
        let version = version.ok_or_else(|| Error::Database("missing version line".into()))?;
        if version != SUPPORTED_VERSION {
            return Err(Error::Database(format!("unsupported version {version}")));
        }
        Ok(CanonicalDatabase { version, forms })
    }

    pub fn get(&self, id: &str) -> Result<&CanonicalForm> {
        self.forms.iter().find(|f| f.id == id).ok_or_else(|| Error::UnknownForm(id.to_string()))
    }

    /// Forms that can lie on `tag`, fixed forms first, in database order otherwise.
    pub fn candidates(&self, tag: BranchTag) -> Vec<&CanonicalForm> {
        let mut out: Vec<&CanonicalForm> = self.forms.iter().filter(|f| f.branch.all().contains(&tag)).collect();
        out.sort_by_key(|f| f.is_parametrized());
        out
    }
}

fn parse_branch(s: &str) -> std::result::Result<BranchRule, String> {
    let mut parts = s.split(';');
    let default = parts.next().unwrap_or("").parse::<BranchTag>().map_err(|e| e.to_string())?;
    let mut overrides = Vec::new();
    for o in parts {
        let (cond, tag) = o.split_once(':').ok_or("branch override needs `name=value:tag`")?;
        let (name, value) = cond.split_once('=').ok_or("branch override needs `name=value`")?;
        overrides.push((name.to_string(), const_value(value)?, tag.parse::<BranchTag>().map_err(|e| e.to_string())?));
    }
    Ok(BranchRule { default, overrides })
}

fn parse_params(s: &str) -> std::result::Result<Vec<ParamSpec>, String> {
    if s.is_empty() {
        return Ok(vec![]);
    }
    s.split(';')
        .map(|p| {
            let (name, excl) = p.split_once("!=").unwrap_or((p, ""));
            let excluded: Vec<String> = excl.split(',').map(str::trim).filter(|e| !e.is_empty()).map(String::from).collect();
            let excluded_values = excluded.iter().map(|e| const_value(e)).collect::<std::result::Result<_, _>>()?;
            Ok(ParamSpec { name: name.trim().to_string(), excluded, excluded_values })
        })
        .collect()
}

fn const_value(s: &str) -> std::result::Result<f64, String> {
    let e = parse(s).map_err(|e| e.to_string())?;
    if !e.is_free_of_jet() || e.has_params() {
        return Err(format!("`{s}` is not a constant"));
    }
    Ok(e.const_approx())
}

/// Which radical variant the reference sample of a fingerprint used.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Selector(pub usize);

impl fmt::Display for Selector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "variant {}", self.0)
    }
}

type CacheKey = String;

fn cache() -> &'static Mutex<HashMap<CacheKey, Arc<Fingerprint>>> {
    static CACHE: OnceLock<Mutex<HashMap<CacheKey, Arc<Fingerprint>>>> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

fn prepared_cache() -> &'static Mutex<HashMap<CacheKey, Arc<PreparedBranch>>> {
    static CACHE: OnceLock<Mutex<HashMap<CacheKey, Arc<PreparedBranch>>>> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

fn zero_config(cfg: &FingerprintConfig) -> ZeroTestConfig {
    ZeroTestConfig {
        sample_count: cfg.samples,
        tolerance: cfg.tolerance,
        seed: cfg.seed,
        modulus_range: cfg.modulus_range,
        retry_factor: cfg.retry_factor,
        sample_free_params: false,
    }
}

/// Prepared branch coframe of an instance (cached).
pub fn prepared_instance(inst: &Instance, switches: Switches, cfg: &FingerprintConfig) -> Result<Arc<PreparedBranch>> {
    let key = format!("{}|{:?}|{:?}|{:?}|{:?}", inst.id, inst.f, inst.numeric, switches, cfg);
    if let Some(p) = prepared_cache().lock().expect("cache poisoned").get(&key) {
        return Ok(p.clone());
    }
    let oracle = ZeroOracle::new(&zero_config(cfg), &inst.numeric);
    let prepared = Arc::new(PreparedBranch::new(inst.branch, &inst.f, switches, &oracle)?);
    prepared_cache().lock().expect("cache poisoned").insert(key, prepared.clone());
    Ok(prepared)
}

/// Fingerprint of a canonical form at parameter values, with the given reference variant.
pub fn canonical_fingerprint(
    form: &CanonicalForm,
    values: &ParamBinding<f64>,
    reference: Selector,
    switches: Switches,
    cfg: &FingerprintConfig,
) -> Result<Arc<Fingerprint>> {
    let inst = form.instantiate(values)?;
    let key = format!("{}|{:?}|{:?}|{}|{:?}|{:?}", inst.id, inst.f, inst.numeric, reference.0, switches, cfg);
    if let Some(fp) = cache().lock().expect("cache poisoned").get(&key) {
        return Ok(fp.clone());
    }
    let prepared = prepared_instance(&inst, switches, cfg)?;
    let fp = Arc::new(prepared.fingerprint(reference.0, &inst.numeric, cfg)?);
    cache().lock().expect("cache poisoned").insert(key, fp.clone());
    Ok(fp)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_parses_in_order() {
        let db = CanonicalDatabase::builtin();
        assert_eq!(db.version, 1);
        assert_eq!(db.forms.len(), 12);
        assert_eq!(db.forms[0].id, "r^{4/3}");
        assert_eq!(db.forms[11].id, "(4/3)r^2/q");
        assert_eq!(db.forms.iter().filter(|f| f.scaling.is_some()).count(), 8);
    }

    #[test]
    fn exclusions_are_enforced() {
        let db = CanonicalDatabase::builtin();
        let form = db.get("Kr^2/q").unwrap();
        let v = ParamBinding::from([("K".to_string(), Complex64::new(4.0 / 3.0, 0.0))]);
        assert!(matches!(form.instantiate(&v), Err(Error::ExcludedParameter { .. })));
        assert!(matches!(form.instantiate(&ParamBinding::new()), Err(Error::MissingParameter { .. })));
        let v = ParamBinding::from([("K".to_string(), Complex64::new(2.0, 0.0))]);
        assert_eq!(form.instantiate(&v).unwrap().f, parse("2*r^2/q").unwrap());
    }

    #[test]
    fn branch_override() {
        let db = CanonicalDatabase::builtin();
        let form = db.get("6qr/p-6q^3/p^2+K(3q^2-2pr)^{3/2}/p^2").unwrap();
        let zero = ParamBinding::from([("K".to_string(), Complex64::new(0.0, 0.0))]);
        let one = ParamBinding::from([("K".to_string(), Complex64::new(1.0, 0.0))]);
        assert_eq!(form.instantiate(&zero).unwrap().branch, BranchTag::T1);
        assert_eq!(form.instantiate(&one).unwrap().branch, BranchTag::T2);
    }

    #[test]
    fn rejects_bad_database() {
        assert!(CanonicalDatabase::parse("version 2\n").is_err());
        assert!(CanonicalDatabase::parse("form|a|b|r^2|T9|\n").is_err());
        assert!(CanonicalDatabase::parse("version 1\nscale|x|r|x|u\n").is_err());
    }

    #[test]
    fn candidates_put_fixed_forms_first() {
        let db = CanonicalDatabase::builtin();
        let c = db.candidates(BranchTag::T2);
        let first_param = c.iter().position(|f| f.is_parametrized()).unwrap();
        assert!(c[first_param..].iter().all(|f| f.is_parametrized()));
        assert!(c.iter().any(|f| f.id == "e^r"));
        assert_eq!(db.candidates(BranchTag::T1).len(), 1);
        assert_eq!(db.candidates(BranchTag::T4).len(), 2);
    }
}
