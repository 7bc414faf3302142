use std::path::Path;
use std::process::{Command, Output};

fn ode4(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ode4")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

// Residual and deviation magnitudes depend on float rounding, so goldens skip them.
fn stable(text: &str) -> String {
    text.lines()
        .filter(|l| !l.contains("deviation"))
        .map(|l| format!("{l}\n"))
        .collect()
}

fn golden(name: &str, actual: &str) {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/testdata").join(name);
    let expected = std::fs::read_to_string(&path).unwrap();
    assert_eq!(stable(actual), stable(&expected), "golden {name}");
}

#[test]
fn list_canonical_matches_golden() {
    let o = ode4(&["list-canonical"]);
    assert!(o.status.success());
    golden("list_canonical.txt", &stdout(&o));
    assert_eq!(stdout(&o).lines().count(), 12);
}

#[test]
fn structure_reports_estructure_constants() {
    let o = ode4(&["structure", "4*r^2/(3*q)"]);
    assert!(o.status.success());
    let out = stdout(&o);
    golden("structure_four_thirds.txt", &out);
    for line in ["c1 = -3/4", "c2 = 9/8", "c3 = 0", "c4 = -9/8", "c8 = -3/8"] {
        assert!(out.contains(line), "missing {line}");
    }
}

#[test]
fn classify_exit_codes() {
    let o = ode4(&["classify", "r^2"]);
    assert_eq!(o.status.code(), Some(0));
    golden("classify_r2.txt", &stdout(&o));

    let o = ode4(&["classify", "0"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains("outside classified scope"));

    let o = ode4(&["classify", "r^2+"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));
}

#[test]
fn classify_recovers_parameter() {
    let o = ode4(&["classify", "--param", "K=2", "K*r^2/q"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("matched \"Kr^2/q\""), "{out}");
}

#[test]
fn structured_output_is_json() {
    let o = ode4(&["--format", "structured", "classify", "exp(r)"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["verdict"]["kind"], "matched");
    assert_eq!(v["verdict"]["form"], "e^r");
    assert_eq!(v["branch"], "T2");
}

#[test]
fn verify_pass_and_fail() {
    let src = "6*q*((1+p)*r - q^2)/(1+p)^2";
    let tgt = "6*q*r/p - 6*q^3/p^2";
    let o = ode4(&["verify", "1/x", "x+u", src, tgt]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("PASS"));

    let o = ode4(&["verify", "1/x", "x+u+x^2", src, tgt]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains("FAIL"));
}

#[test]
fn emit_pde_first_line() {
    let o = ode4(&["emit-pde", "((x*r+3*q)^(4/3) - 4*r)/x", "r^(4/3)"]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.starts_with("# branch T2, 17 equations\n"), "{out}");
    assert!(out.contains("D[x] phi = (3*q + x*r)^(1/3)/xi^(1/3)\n"));
}

#[test]
fn bad_radical_branch_is_an_error() {
    let o = ode4(&["--radical-branch", "J6=5", "classify", "r^2"]);
    assert_eq!(o.status.code(), Some(1));
}
