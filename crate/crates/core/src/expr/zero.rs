use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use super::eval::{EvalError, Evaluator, JetSample, ParamBinding};
use super::{Expr, JetVar};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZeroTestConfig {
    pub sample_count: usize,
    pub tolerance: f64,
    pub seed: u64,
    /// Modulus range of every sampled coordinate; arguments are uniform.
    pub modulus_range: (f64, f64),
    /// Extra attempts allowed per requested sample when hitting poles.
    pub retry_factor: usize,
    /// Sample unbound parameters instead of failing on them.
    pub sample_free_params: bool,
}

impl Default for ZeroTestConfig {
    fn default() -> Self {
        ZeroTestConfig {
            sample_count: 24,
            tolerance: 1e-8,
            seed: 42,
            modulus_range: (0.5, 2.0),
            retry_factor: 4,
            sample_free_params: false,
        }
    }
}

impl ZeroTestConfig {
    pub fn validate(&self) -> Result<(), ZeroTestError> {
        if self.sample_count < 8 {
            return Err(ZeroTestError::Config(format!("sample_count {} is below 8", self.sample_count)));
        }
        if !(self.tolerance > 0.0 && self.tolerance < 1.0) {
            return Err(ZeroTestError::Config(format!("tolerance {} is not in (0, 1)", self.tolerance)));
        }
        let (lo, hi) = self.modulus_range;
        if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
            return Err(ZeroTestError::Config(format!("bad modulus range ({lo}, {hi})")));
        }
        Ok(())
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        ZeroTestConfig { seed, ..self.clone() }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ZeroTestError {
    #[error("invalid zero-test configuration: {0}")]
    Config(String),
    #[error("zero test inconclusive: only {valid} of {wanted} samples were finite after {attempts} attempts")]
    Inconclusive { wanted: usize, valid: usize, attempts: usize },
    #[error("parameter `{0}` is not bound")]
    UnboundParam(String),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZeroEvidence {
    pub identically_zero: bool,
    /// Finite samples evaluated before the verdict.
    pub samples_used: usize,
    /// Samples discarded because of poles.
    pub resamples: usize,
    /// Largest `|value| / (1 + scale)` seen, `scale` being the largest subterm modulus.
    pub worst_ratio: f64,
}

/// Seeded source of complex sample points in an annulus.
pub struct SampleSource {
    rng: ChaCha8Rng,
    lo: f64,
    hi: f64,
}

impl SampleSource {
    pub fn new(seed: u64, modulus_range: (f64, f64)) -> Self {
        SampleSource { rng: ChaCha8Rng::seed_from_u64(seed), lo: modulus_range.0, hi: modulus_range.1 }
    }

    pub fn value<S: Scalar>(&mut self) -> Complex<S> {
        let m = if self.hi > self.lo { self.rng.gen_range(self.lo..self.hi) } else { self.lo };
        let a = self.rng.gen_range(0.0..std::f64::consts::TAU);
        Complex::new(S::from_f64_lossy(m * a.cos()), S::from_f64_lossy(m * a.sin()))
    }

    pub fn point<S: Scalar>(&mut self, with_a13: bool) -> JetSample<S> {
        let coords = [self.value(), self.value(), self.value(), self.value(), self.value()];
        let a13 = self.value();
        JetSample { coords, a13: with_a13.then_some(a13) }
    }
}

pub fn zero_test<S: Scalar>(e: &Expr, cfg: &ZeroTestConfig, params: &ParamBinding<S>) -> Result<ZeroEvidence, ZeroTestError> {
    zero_test_any(&[vec![e.clone()]], cfg, params)
}

/// Samples until one point has every alternative failing. An alternative is a list of
/// expressions that must vanish together; a point passes when at least one alternative
/// vanishes there. This absorbs principal-branch switches of radicals, where each
/// alternative is one branch choice.
pub fn zero_test_any<S: Scalar>(
    alternatives: &[Vec<Expr>],
    cfg: &ZeroTestConfig,
    params: &ParamBinding<S>,
) -> Result<ZeroEvidence, ZeroTestError> {
    cfg.validate()?;
    if alternatives.iter().any(|alt| alt.iter().all(Expr::is_zero)) {
        return Ok(ZeroEvidence { identically_zero: true, samples_used: 0, resamples: 0, worst_ratio: 0.0 });
    }
    let all = || alternatives.iter().flatten();
    let mut free: Vec<String> = all().flat_map(|e| e.params()).filter(|p| !params.contains_key(p)).collect();
    free.sort();
    free.dedup();
    if let Some(p) = free.first() {
        if !cfg.sample_free_params {
            return Err(ZeroTestError::UnboundParam(p.clone()));
        }
    }
    let with_a13 = all().any(|e| e.contains_var(JetVar::A13));
    let mut source = SampleSource::new(cfg.seed, cfg.modulus_range);
    let attempts_allowed = cfg.sample_count * (1 + cfg.retry_factor);
    let mut valid = 0;
    let mut attempts = 0;
    let mut worst = 0.0f64;
    while valid < cfg.sample_count {
        if attempts >= attempts_allowed {
            return Err(ZeroTestError::Inconclusive { wanted: cfg.sample_count, valid, attempts });
        }
        attempts += 1;
        let point = source.point::<S>(with_a13);
        let mut bound = params.clone();
        for p in &free {
            bound.insert(p.clone(), source.value());
        }
        // best alternative at this point: smallest worst-residual; None if all hit poles
        let mut best: Option<f64> = None;
        for alt in alternatives {
            let mut ev = Evaluator::new(point, &bound);
            let mut ratio = 0.0f64;
            let mut finite = true;
            for e in alt {
                ev.reset_magnitude();
                match ev.eval(e) {
                    Ok(v) => ratio = ratio.max(v.norm().to_f64_lossy() / (1.0 + ev.max_magnitude().to_f64_lossy())),
                    Err(EvalError::NonFinite) => {
                        finite = false;
                        break;
                    }
                    Err(EvalError::UnboundParam(p)) => return Err(ZeroTestError::UnboundParam(p)),
                    Err(EvalError::MissingA13) => unreachable!("a13 is sampled whenever an expression uses it"),
                }
            }
            if finite {
                best = Some(best.map_or(ratio, |b: f64| b.min(ratio)));
            }
        }
        let Some(ratio) = best else { continue };
        worst = worst.max(ratio);
        valid += 1;
        if ratio > cfg.tolerance {
            return Ok(ZeroEvidence { identically_zero: false, samples_used: valid, resamples: attempts - valid, worst_ratio: worst });
        }
    }
    Ok(ZeroEvidence { identically_zero: true, samples_used: valid, resamples: attempts - valid, worst_ratio: worst })
}

pub fn is_identically_zero(e: &Expr, cfg: &ZeroTestConfig) -> Result<bool, ZeroTestError> {
    zero_test::<f64>(e, cfg, &ParamBinding::new()).map(|z| z.identically_zero)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse, total_derivative};

    #[test]
    fn detects_hidden_zero() {
        let e = parse("(x + p)^2 - x^2 - 2*x*p - p^2").unwrap();
        assert!(is_identically_zero(&e, &ZeroTestConfig::default()).unwrap());
        let e = parse("exp(r)*exp(-r) - 1").unwrap();
        assert!(is_identically_zero(&e, &ZeroTestConfig::default()).unwrap());
    }

    #[test]
    fn detects_nonzero() {
        let e = parse("r^2 - q").unwrap();
        assert!(!is_identically_zero(&e, &ZeroTestConfig::default()).unwrap());
    }

    #[test]
    fn total_derivative_is_not_partial() {
        let f = parse("r^2").unwrap();
        let d = total_derivative(&Expr::q(), &f).unwrap();
        assert!(is_identically_zero(&(d - Expr::r()), &ZeroTestConfig::default()).unwrap());
    }

    #[test]
    fn always_pole_is_inconclusive() {
        let e = parse("1/(x - x)").unwrap();
        let err = is_identically_zero(&e, &ZeroTestConfig::default()).unwrap_err();
        assert!(matches!(err, ZeroTestError::Inconclusive { .. }));
    }

    #[test]
    fn alternatives_absorb_branch_choice() {
        let cfg = ZeroTestConfig::default();
        let root = parse("(x^2)^(1/2)").unwrap();
        let plus = vec![root.clone() - Expr::x()];
        let minus = vec![root + Expr::x()];
        let params = ParamBinding::<f64>::new();
        assert!(!zero_test_any(std::slice::from_ref(&plus), &cfg, &params).unwrap().identically_zero);
        assert!(zero_test_any(&[plus, minus], &cfg, &params).unwrap().identically_zero);
    }

    #[test]
    fn rejects_bad_config() {
        let cfg = ZeroTestConfig { sample_count: 3, ..Default::default() };
        assert!(matches!(is_identically_zero(&Expr::x(), &cfg), Err(ZeroTestError::Config(_))));
    }

    #[test]
    fn free_params_can_be_sampled() {
        let e = parse("K*r - r*K").unwrap();
        assert!(e.is_zero());
        let e = parse("K*r").unwrap();
        assert!(is_identically_zero(&e, &ZeroTestConfig::default()).is_err());
        let cfg = ZeroTestConfig { sample_free_params: true, ..Default::default() };
        assert!(!is_identically_zero(&e, &cfg).unwrap());
    }
}
