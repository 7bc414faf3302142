//! Acceptance suite: one PASS/FAIL line per criterion. Run with
//! `cargo test -p ode4-core --test acceptance -- --nocapture`.

use std::time::{Duration, Instant};

use ode4_core::canonical::{canonical_fingerprint, CanonicalDatabase, Selector};
use ode4_core::classifier::{classify, estructure_constants, recover_b, recover_k, ClassifyConfig, KFamily, BFamily};
use ode4_core::coframe::BranchTag;
use ode4_core::expr::{evaluate, parse, partial, JetSample, ParamBinding, ZeroTestConfig};
use ode4_core::forms::{jacobi_residual, tensor_scale, FingerprintConfig};
use ode4_core::invariants::Switches;
use ode4_core::transform::{check_candidate_against_pde, pde_systems, scaling_fixture, verify_transform, TransformCandidate};
use ode4_core::{Complex64, Expr, JetVar, Params};

const SEED: u64 = 42;
const SAMPLES: usize = 24;
const ZERO_TOL: f64 = 1e-8;
const CONSTANT_TOL: f64 = 1e-8;
const RATIO_TOL: f64 = 1e-6;
const D2_TOL: f64 = 1e-7;
const FD_TOL: f64 = 1e-6;
const BRANCH_BUDGET: Duration = Duration::from_secs(60);
const SUITE_BUDGET: Duration = Duration::from_secs(300);

const T1_INPUT: &str = "6*q*((1+p)*r - q^2)/(1+p)^2";
const T2_INPUT: &str = "((x*r+3*q)^(4/3) - 4*r)/x";
const T3_INPUT: &str = "r^2/q + 4*q*r/p - 6*q^3/p^2";
const T4_INPUT: &str = "(-24*p*q*r + 18*q^3 + 4*r^2*u)/(-6*p^2 + 3*q*u)";
const RADICAL_FORM: &str = "6qr/p-6q^3/p^2+K(3q^2-2pr)^{3/2}/p^2";

type Outcome = Result<String, String>;

fn cfg() -> ClassifyConfig {
    ClassifyConfig::new(SEED, SAMPLES, ZERO_TOL)
}

fn zcfg() -> ZeroTestConfig {
    cfg().zero
}

fn fcfg() -> FingerprintConfig {
    FingerprintConfig { samples: SAMPLES, seed: SEED, tolerance: CONSTANT_TOL, ..FingerprintConfig::default() }
}

fn real(v: f64) -> Complex64 {
    Complex64::new(v, 0.0)
}

fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
    (a - b).norm() <= tol
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

/// Parameter values exercised per form.
fn instances(id: &str) -> Vec<Params> {
    let one = |name: &str, v: f64| Params::from([(name.to_string(), real(v))]);
    if id.contains("b") && id.starts_with("r^{(") {
        [-1.0, 4.0, 5.0].iter().map(|&b| one("b", b)).collect()
    } else if id == RADICAL_FORM {
        [0.0, 1.0, 2.0].iter().map(|&k| one("K", k)).collect()
    } else if id == "Kr^2/q" {
        [1.0, 2.0].iter().map(|&k| one("K", k)).collect()
    } else {
        vec![Params::new()]
    }
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let db = CanonicalDatabase::builtin();
    let mut checked = 0;
    for form in &db.forms {
        for values in instances(&form.id) {
            let inst = form.instantiate(&values).map_err(err)?;
            let report = classify(&inst.f, &Params::new(), &cfg()).map_err(err)?;
            ensure(report.branch == Some(inst.branch), || {
                format!("{} {:?}: branch {:?}, expected {}", form.id, values, report.branch, inst.branch)
            })?;
            ensure(report.matches.iter().any(|m| m.form == form.id), || format!("{} {:?}: no self match", form.id, values))?;
            checked += 1;
        }
    }
    let took = start.elapsed();
    ensure(took <= BRANCH_BUDGET, || format!("took {took:?}"))?;
    Ok(format!("{checked} instances, {:.1}s", took.as_secs_f64()))
}

fn criterion_2() -> Outcome {
    let report = classify(&parse(T2_INPUT).map_err(err)?, &Params::new(), &cfg()).map_err(err)?;
    let fp = report.fingerprint.as_ref().ok_or("no fingerprint")?;
    let expected = [
        ((1, 1, 5), 3.0),
        ((1, 2, 5), -1.0),
        ((2, 1, 4), -3.0),
        ((2, 2, 4), 1.0),
        ((2, 2, 5), 1.5),
        ((2, 3, 5), -1.0),
        ((3, 2, 4), -3.0),
        ((3, 3, 4), 2.0),
        ((3, 4, 5), -1.0),
        ((4, 4, 5), -1.5),
        ((5, 4, 5), 1.0),
    ];
    for ((i, j, k), v) in expected {
        ensure(close(fp.t(i, j, k), real(v), CONSTANT_TOL), || format!("T{i}_{j}{k} = {}", fp.t(i, j, k)))?;
    }
    ensure(report.matched_form() == Some("r^{4/3}"), || format!("matched {:?}", report.matched_form()))?;
    Ok("11 constants, matched r^{4/3}".into())
}

fn criterion_3() -> Outcome {
    let report = classify(&parse(T3_INPUT).map_err(err)?, &Params::new(), &cfg()).map_err(err)?;
    let fp = report.fingerprint.as_ref().ok_or("no fingerprint")?;
    ensure(close(fp.t(3, 1, 3), real(-1.0), CONSTANT_TOL), || format!("T3_13 = {}", fp.t(3, 1, 3)))?;
    let k = recover_k(fp, KFamily::Quotient).map_err(err)?;
    ensure(close(k[0], real(1.0), CONSTANT_TOL), || format!("K = {}", k[0]))?;
    ensure(report.matched_form() == Some("Kr^2/q"), || format!("matched {:?}", report.matched_form()))?;
    Ok("T3_13 = -1, K = 1".into())
}

fn criterion_4() -> Outcome {
    let four = [-0.75, 1.125, 0.0, -1.125, 0.0, 1.125, 0.0, -0.375];
    let report = classify(&parse(T4_INPUT).map_err(err)?, &Params::new(), &cfg()).map_err(err)?;
    let c = estructure_constants(report.fingerprint.as_ref().ok_or("no fingerprint")?).map_err(err)?;
    for (n, (got, want)) in c.iter().zip(four).enumerate() {
        ensure(close(*got, real(want), CONSTANT_TOL), || format!("input c{} = {got}", n + 1))?;
    }
    let five = [0.6, 0.9, 1.8, 0.9, -1.08, 0.9, -0.54, 0.3];
    let form = CanonicalDatabase::builtin().get("(5/3)r^2/q").map_err(err)?;
    let fp = canonical_fingerprint(form, &Params::new(), Selector(0), Switches::default(), &fcfg()).map_err(err)?;
    let c = estructure_constants(&fp).map_err(err)?;
    for (n, (got, want)) in c.iter().zip(five).enumerate() {
        ensure(close(*got, real(want), CONSTANT_TOL), || format!("(5/3) c{} = {got}", n + 1))?;
    }
    Ok("both rows".into())
}

fn criterion_5() -> Outcome {
    let report = classify(&parse(T1_INPUT).map_err(err)?, &Params::new(), &cfg()).map_err(err)?;
    let fp = report.fingerprint.as_ref().ok_or("no fingerprint")?;
    ensure(fp.constant && fp.max_deviation <= CONSTANT_TOL, || format!("deviation {}", fp.max_deviation))?;
    ensure(report.matched_form() == Some(RADICAL_FORM), || format!("matched {:?}", report.matched_form()))?;
    let s = 6f64.sqrt() / 4.0;
    let has = |v: Complex64| fp.mean.data().iter().any(|t| close(*t, v, CONSTANT_TOL));
    ensure(has(real(s)), || "no entry sqrt(6)/4".into())?;
    ensure(has(Complex64::new(0.0, -s)), || "no entry -i sqrt(6)/4".into())?;
    Ok(format!("selectors {}, deviation {:.1e}", report.selectors(), fp.max_deviation))
}

fn criterion_6() -> Outcome {
    let z = zcfg();
    let cases = [
        (T1_INPUT, "6*q*r/p - 6*q^3/p^2", "1/x", "x+u", None, BranchTag::T1, "x+u+x^2"),
        (T2_INPUT, "r^(4/3)", "x", "x*u", None, BranchTag::T2, "x*u+x^4"),
        (T3_INPUT, "r^2/q", "u", "x", None, BranchTag::T3, "x+u^3"),
        (T4_INPUT, "(4/3)*r^2/q", "1/x", "1/(x*u)", Some("-1/x^2"), BranchTag::T4, "1/(x*u)+x"),
    ];
    for (src, tgt, phi, psi, aux, tag, perturbed) in cases {
        let (fs, ft) = (parse(src).map_err(err)?, parse(tgt).map_err(err)?);
        let good = TransformCandidate::parse(phi, psi, &z).map_err(err)?;
        let bad = TransformCandidate::parse(phi, perturbed, &z).map_err(err)?;
        let aux = aux.map(parse).transpose().map_err(err)?;
        let systems = pde_systems(&fs, &ft, tag, Switches::default(), &z).map_err(err)?;
        let direct = |t| verify_transform(t, &fs, &ft, &Params::new(), &z).map(|c| c.holds).map_err(err);
        let pde = |t| check_candidate_against_pde(t, aux.as_ref(), &fs, &systems, &z).map(|c| c.holds).map_err(err);
        ensure(direct(&good)? && pde(&good)?, || format!("({phi}, {psi}) rejected"))?;
        ensure(!direct(&bad)? && !pde(&bad)?, || format!("({phi}, {perturbed}) accepted"))?;
    }
    Ok("4 maps pass, 4 perturbations fail".into())
}

fn criterion_7() -> Outcome {
    let db = CanonicalDatabase::builtin();
    let power = db.get("r^{(b-3)/(b-2)}").map_err(err)?;
    let b5 = Params::from([("b".to_string(), real(5.0))]);
    let fp = canonical_fingerprint(power, &b5, Selector(0), Switches::default(), &fcfg()).map_err(err)?;
    let ratio = fp.t(2, 2, 4) / fp.t(5, 4, 5);
    ensure(close(ratio, real(-5.0), RATIO_TOL), || format!("T2_24/T5_45 = {ratio}"))?;
    ensure(close(recover_b(&fp, BFamily::Power).map_err(err)?, real(5.0), RATIO_TOL), || "recover_b".into())?;
    let radical = db.get(RADICAL_FORM).map_err(err)?;
    let k2 = Params::from([("K".to_string(), real(2.0))]);
    let fp = canonical_fingerprint(radical, &k2, Selector(0), Switches::default(), &fcfg()).map_err(err)?;
    ensure(close(fp.t(4, 2, 5), real(0.25), CONSTANT_TOL), || format!("T4_25 = {}", fp.t(4, 2, 5)))?;
    Ok(format!("ratio {:.9}, T4_25 {:.9}", ratio.re, fp.t(4, 2, 5).re))
}

/// Derivatives against central differences at a fixed point.
fn finite_difference_suite() -> Result<usize, String> {
    let exprs = ["exp(r)*q^2/p", "(x*r+3*q)^(4/3)", "sqrt(1+u^2)*x", "(3*q^2-2*p*r)^(3/2)/p^2", "root(q, 3)*r^2/(1+x)"];
    let pt = [0.7, 1.3, 0.9, 1.1, 0.8];
    let h = 1e-5;
    let mut checked = 0;
    for s in exprs {
        let e = parse(s).map_err(err)?;
        for (n, v) in JetVar::BASE.iter().enumerate() {
            let d = partial(&e, *v);
            let at = |vals: [f64; 5], e: &Expr| evaluate(e, &JetSample::<f64>::real(vals), &ParamBinding::new()).map_err(err);
            let (mut hi, mut lo) = (pt, pt);
            hi[n] += h;
            lo[n] -= h;
            let fd = (at(hi, &e)? - at(lo, &e)?) / (2.0 * h);
            let exact = at(pt, &d)?;
            ensure((fd - exact).norm() <= FD_TOL * (1.0 + exact.norm()), || format!("d/d{} {s}: {exact} vs {fd}", v.name()))?;
            checked += 1;
        }
    }
    Ok(checked)
}

fn criterion_8() -> Outcome {
    let db = CanonicalDatabase::builtin();
    let mut worst_d2 = 0f64;
    for form in &db.forms {
        for values in instances(&form.id) {
            let fp = canonical_fingerprint(form, &values, Selector(0), Switches::default(), &fcfg()).map_err(err)?;
            ensure(fp.constant, || format!("{} not constant", form.id))?;
            // Quadratic in T, so measured against the squared entry scale.
            let d2 = jacobi_residual(&fp.mean) / tensor_scale(&fp.mean).powi(2);
            worst_d2 = worst_d2.max(d2);
            ensure(d2 <= D2_TOL, || format!("{}: d^2 residual {d2:e}", form.id))?;
            for t in &fp.per_sample {
                ensure(t.antisymmetry_defect() == 0.0, || format!("{}: antisymmetry defect", form.id))?;
            }
        }
    }
    let fd = finite_difference_suite()?;
    let f = parse(T2_INPUT).map_err(err)?;
    let a = classify(&f, &Params::new(), &cfg()).map_err(err)?.to_json();
    let b = classify(&f, &Params::new(), &cfg()).map_err(err)?.to_json();
    ensure(a == b, || "reports differ under a fixed seed".into())?;
    Ok(format!("d^2 residual {worst_d2:.1e}, {fd} derivatives, deterministic"))
}

fn criterion_9() -> Outcome {
    let z = zcfg();
    let mut checked = 0;
    for form in CanonicalDatabase::builtin().forms.iter().filter(|f| f.scaling.is_some()) {
        let mut extra = Params::new();
        if form.id == "r^{(b-3)/(b-2)}" {
            extra.insert("b".into(), real(5.0));
        }
        if form.id == "r^{(1-3b)/(1-2b)}" {
            extra.insert("b".into(), real(4.0));
        }
        for k in [2.0, 5.0] {
            let (t, src, tgt) = scaling_fixture(form, real(k), &extra, &z).map_err(err)?;
            let ok = verify_transform(&t, &src, &tgt, &Params::new(), &z).map_err(err)?.holds;
            ensure(ok, || format!("{} K={k}: {t}", form.id))?;
            checked += 1;
        }
    }
    Ok(format!("{checked} fixtures"))
}

#[test]
fn acceptance() {
    let start = Instant::now();
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("branch placement of canonical forms", criterion_1),
        ("structure constants of a T2 input", criterion_2),
        ("parameter recovery on a T3 input", criterion_3),
        ("T4 constants c1..c8", criterion_4),
        ("complex T1 fingerprint", criterion_5),
        ("point transformations and perturbations", criterion_6),
        ("parameter relations", criterion_7),
        ("engine self-consistency", criterion_8),
        ("scaling fixtures", criterion_9),
    ];
    let mut failed = Vec::new();
    for (n, (name, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(detail) => println!("PASS criterion {}: {name} ({detail})", n + 1),
            Err(why) => {
                println!("FAIL criterion {}: {name}: {why}", n + 1);
                failed.push(n + 1);
            }
        }
    }
    let took = start.elapsed();
    println!("suite time {:.1}s", took.as_secs_f64());
    assert!(failed.is_empty(), "failed criteria {failed:?}");
    assert!(took <= SUITE_BUDGET, "suite took {took:?}");
}
