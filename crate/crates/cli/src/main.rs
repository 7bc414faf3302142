use std::collections::BTreeMap;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};
use thiserror::Error;

use ode4_core::canonical::CanonicalDatabase;
use ode4_core::classifier::{
    bind_params, classify, estructure_constants, invariant_statuses, select_branch, BranchReport, ClassifyConfig,
};
use ode4_core::expr::{evaluate, parse, JetSample, ParamBinding};
use ode4_core::forms::{fingerprint_lines, pretty_complex};
use ode4_core::invariants::Radical;
use ode4_core::transform::{pde_systems, verify_transform, TransformCandidate};

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] ode4_core::Error),
}

impl From<ode4_core::expr::ParseError> for CliError {
    fn from(e: ode4_core::expr::ParseError) -> Self {
        CliError::Core(e.into())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Structured,
}

/// Classify fourth-order ODEs u'''' = f(x, u, p, q, r) up to point transformations.
///
/// Expressions use x, u, p = u', q = u'', r = u''' with + - * / ^, exp, sqrt and
/// root(g, k[, branch]).
#[derive(Debug, Parser)]
#[command(name = "ode4", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Seed of the random sample points.
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
    /// Sample points per zero test and fingerprint.
    #[arg(long, global = true, default_value_t = 24)]
    samples: usize,
    /// Zero-test and constancy tolerance.
    #[arg(long, global = true, default_value_t = 1e-8)]
    tol: f64,
    /// Parameter value, e.g. K=2 or b=1/3. Repeatable.
    #[arg(long = "param", global = true, value_name = "NAME=VALUE")]
    params: Vec<String>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Radical branch at the reference sample, e.g. J6=1 or J10=3. Repeatable.
    #[arg(long = "radical-branch", global = true, value_name = "J=INDEX")]
    radical_branch: Vec<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Branch, canonical form and recovered parameters.
    Classify { f: String },
    /// Relative invariants and whether they vanish.
    Invariants { f: String },
    /// Constant structure functions of the branch coframe.
    Structure { f: String },
    /// Check that xbar = PHI, ubar = PSI maps u'''' = F_SRC onto u'''' = F_TGT.
    Verify { phi: String, psi: String, f_src: String, f_tgt: String },
    /// Print the PDE system whose solutions map F_SRC onto F_TGT.
    EmitPde { f_src: String, f_tgt: String },
    /// The canonical forms.
    ListCanonical,
}

fn parse_params(items: &[String]) -> Result<ParamBinding<f64>, CliError> {
    let mut out = ParamBinding::new();
    for item in items {
        let (name, value) = item.split_once('=').ok_or_else(|| CliError::Usage(format!("--param `{item}` is not NAME=VALUE")))?;
        let e = parse(value.trim())?;
        if !e.is_free_of_jet() || e.has_params() {
            return Err(CliError::Usage(format!("--param {name}: `{value}` is not a constant")));
        }
        let v = evaluate(&e, &JetSample::<f64>::real([0.0; 5]), &ParamBinding::new()).map_err(ode4_core::Error::from)?;
        out.insert(name.trim().to_string(), v);
    }
    Ok(out)
}

fn config(cli: &Cli) -> Result<ClassifyConfig, CliError> {
    let mut cfg = ClassifyConfig::new(cli.seed, cli.samples, cli.tol);
    for item in &cli.radical_branch {
        let (name, idx) = item.split_once('=').ok_or_else(|| CliError::Usage(format!("--radical-branch `{item}` is not J=INDEX")))?;
        let idx: u32 = idx.trim().parse().map_err(|_| CliError::Usage(format!("--radical-branch `{item}`: bad index")))?;
        let (slot, count) = match name.trim() {
            "J6" => (&mut cfg.selectors.j6, 2),
            "J10" => (&mut cfg.selectors.j10, 4),
            "J8" => (&mut cfg.selectors.j8, 2),
            other => return Err(CliError::Usage(format!("unknown radical `{other}` (J6, J10 or J8)"))),
        };
        if idx >= count {
            return Err(CliError::Usage(format!("{name} has branches 0..{}", count - 1)));
        }
        *slot = Radical::Branch(idx);
    }
    Ok(cfg)
}

fn emit(format: Format, text: String, structured: Value) {
    match format {
        Format::Text => print!("{text}"),
        Format::Structured => println!("{}", serde_json::to_string_pretty(&structured).expect("json values serialize")),
    }
}

fn structure_text(report: &BranchReport) -> String {
    let mut s = String::new();
    match (&report.branch, &report.fingerprint) {
        (Some(tag), Some(fp)) => {
            s += &format!("branch: {tag}\nconstant: {}\ndeviation: {:.3e}\n", fp.constant, fp.max_deviation);
            for line in fingerprint_lines(&fp.mean) {
                s += &line;
                s.push('\n');
            }
            if let Ok(c) = estructure_constants(fp) {
                for (i, v) in c.iter().enumerate() {
                    s += &format!("c{} = {}\n", i + 1, pretty_complex(*v, 1e-8));
                }
            }
        }
        _ => s += &format!("no coframe: {}\n", report.to_text().lines().last().unwrap_or_default()),
    }
    s
}

fn run(cli: &Cli) -> Result<ExitCode, CliError> {
    let params = parse_params(&cli.params)?;
    let cfg = config(cli)?;
    match &cli.command {
        Command::Classify { f } => {
            let report = classify(&parse(f)?, &params, &cfg)?;
            emit(cli.format, report.to_text(), report.to_json());
            Ok(ExitCode::from(report.exit_code() as u8))
        }
        Command::Invariants { f } => {
            let (g, numeric) = bind_params(&parse(f)?, &params);
            let (inv, statuses) = invariant_statuses(&g, &numeric, &cfg)?;
            let set = inv.set();
            let mut text = String::new();
            let mut items = BTreeMap::new();
            for ((name, e), st) in set.entries.iter().zip(&statuses) {
                text += &format!("{name} {} : {e}\n", if st.zero { "= 0" } else { "!= 0" });
                items.insert(name.clone(), json!({ "expression": e.to_string(), "status": st }));
            }
            emit(cli.format, text, json!({ "input": f, "seed": cli.seed, "invariants": items }));
            Ok(ExitCode::SUCCESS)
        }
        Command::Structure { f } => {
            let report = classify(&parse(f)?, &params, &cfg)?;
            let mut structured = report.to_json();
            if let Some(Ok(c)) = report.fingerprint.as_ref().map(estructure_constants) {
                structured["estructure"] = json!(c.iter().map(|v| pretty_complex(*v, 1e-8)).collect::<Vec<_>>());
            }
            emit(cli.format, structure_text(&report), structured);
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify { phi, psi, f_src, f_tgt } => {
            let (src, _) = bind_params(&parse(f_src)?, &params);
            let (tgt, numeric) = bind_params(&parse(f_tgt)?, &params);
            let t = TransformCandidate::parse(phi, psi, &cfg.zero)?;
            let check = verify_transform(&t, &src, &tgt, &numeric, &cfg.zero)?;
            let verdict = if check.holds { "PASS" } else { "FAIL" };
            let text = format!(
                "{t}\n{verdict} (samples {}, worst residual {:.3e})\n",
                check.evidence.samples_used, check.evidence.worst_ratio
            );
            emit(cli.format, text, json!({ "transform": t.to_string(), "verdict": verdict, "evidence": check.evidence, "seed": cli.seed }));
            Ok(if check.holds { ExitCode::SUCCESS } else { ExitCode::from(2) })
        }
        Command::EmitPde { f_src, f_tgt } => {
            let (src, _) = bind_params(&parse(f_src)?, &params);
            let (tgt, numeric) = bind_params(&parse(f_tgt)?, &params);
            let (_, statuses) = invariant_statuses(&tgt, &numeric, &cfg)?;
            let tag = match select_branch(&tgt, &numeric, &statuses, &cfg)? {
                Ok(p) => p.tag,
                Err(reason) => return Err(CliError::Usage(format!("target is outside the classified scope: {reason}"))),
            };
            let systems = pde_systems(&src, &tgt, tag, cfg.switches, &cfg.zero)?;
            let lines = systems[0].lines();
            let mut text = format!("# branch {tag}, {} equations\n", lines.len());
            for l in &lines {
                text += l;
                text.push('\n');
            }
            emit(cli.format, text, json!({ "branch": tag.to_string(), "equations": lines, "radical_variants": systems.len() }));
            Ok(ExitCode::SUCCESS)
        }
        Command::ListCanonical => {
            let db = CanonicalDatabase::builtin();
            let mut text = String::new();
            let mut rows = Vec::new();
            for form in &db.forms {
                let branches: Vec<String> = form.branch.all().iter().map(|b| b.to_string()).collect();
                let params: Vec<String> = form
                    .params
                    .iter()
                    .map(|p| if p.excluded.is_empty() { p.name.clone() } else { format!("{} != {}", p.name, p.excluded.join(", ")) })
                    .collect();
                text += &format!("{:<40} {:<22} {:<6} f = {}", form.id, form.algebra, branches.join("/"), form.f);
                if !params.is_empty() {
                    text += &format!("  [{}]", params.join("; "));
                }
                text.push('\n');
                rows.push(json!({ "id": form.id, "algebra": form.algebra, "f": form.f.to_string(), "branches": branches, "params": params }));
            }
            emit(cli.format, text, json!({ "version": db.version, "forms": rows }));
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn param_values_are_constants() {
        let p = parse_params(&["K=4/3".into(), "b = -1".into()]).unwrap();
        assert!((p["K"] - Complex64::new(4.0 / 3.0, 0.0)).norm() < 1e-15);
        assert_eq!(p["b"], Complex64::new(-1.0, 0.0));
        assert!(parse_params(&["K=r".into()]).is_err());
        assert!(parse_params(&["K".into()]).is_err());
    }
}
