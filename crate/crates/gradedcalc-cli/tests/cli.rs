//! End-to-end runs of the binary against the bundled problem corpus,
//! checking the exit-code taxonomy and the report artifacts.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn problems_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("problems")
}

fn run_problem(name: &str, out: &Path, extra: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gradedcalc"))
        .arg("--input")
        .arg(problems_dir().join(name))
        .arg("--out")
        .arg(out)
        .args(extra)
        .output()
        .expect("binary runs")
}

fn tempdir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("gradedcalc-cli-test-{tag}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn report_json(out_dir: &Path) -> serde_json::Value {
    let mut reports: Vec<PathBuf> = std::fs::read_dir(out_dir)
        .unwrap()
        .flatten()
        .map(|e| e.path())
        .filter(|p| {
            p.file_name()
                .map(|n| n.to_string_lossy().starts_with("report-"))
                .unwrap_or(false)
        })
        .collect();
    reports.sort();
    let text = std::fs::read_to_string(reports.last().expect("a report was written")).unwrap();
    serde_json::from_str(&text).unwrap()
}

#[test]
fn verify_group_passes() {
    let out = tempdir("verify");
    let o = run_problem("heisenberg-verify-group.gc", &out, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let report = report_json(&out);
    assert_eq!(report["schema"], 1);
    assert_eq!(report["details"]["dilation_automorphism"], true);
}

#[test]
fn grushin_negative_power_fails_with_witness() {
    let out = tempdir("grushin-neg");
    let o = run_problem("grushin-not-shubin.gc", &out, &[]);
    assert_eq!(o.status.code(), Some(2));
    let report = report_json(&out);
    assert_eq!(report["details"]["witness"]["t_exponent"], -1);
    assert_eq!(report["details"]["witness"]["component"], 2);
}

#[test]
fn engel_check_r_fails_with_monomial_witness() {
    let out = tempdir("engel-r");
    let o = run_problem("engel-check-r.gc", &out, &[]);
    assert_eq!(o.status.code(), Some(2));
    let report = report_json(&out);
    let witness = report["details"]["witness"].as_str().unwrap();
    assert!(witness.contains("x1^2"), "witness {witness}");
}

#[test]
fn euclidean_spectrum_csv_first_eigenvalue() {
    let out = tempdir("spectrum-r2");
    let o = run_problem(
        "euclidean-oscillator-spectrum.gc",
        &out,
        &["--truncation", "12,16,20"],
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let report = report_json(&out);
    assert_eq!(report["details"]["verdict"], "discrete-evidence");
    // First CSV data row at the smallest truncation: eigenvalue 2 within 1e-8.
    let csv_path = report["artifacts"][0].as_str().unwrap();
    let csv = std::fs::read_to_string(csv_path).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("N,index,eigenvalue,gap"));
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    let ev: f64 = first[2].parse().unwrap();
    assert!((ev - 2.0).abs() < 1e-8, "{ev}");
}

#[test]
fn rockland_certificate_for_heisenberg_oscillator() {
    let out = tempdir("rockland");
    let o = run_problem("heisenberg-oscillator-rockland.gc", &out, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let report = report_json(&out);
    assert_eq!(report["details"]["status"], "certified-elliptic");
}

#[test]
fn grushin_symbol_group_brackets() {
    let out = tempdir("grushin-sg");
    let o = run_problem("grushin-symbol-group.gc", &out, &[]);
    assert_eq!(o.status.code(), Some(0));
    let report = report_json(&out);
    let brackets: Vec<String> = report["details"]["brackets"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap().to_string())
        .collect();
    assert!(brackets.iter().any(|b| b == "[eta2, X2] = -1 eta1"), "{brackets:?}");
    assert!(brackets.iter().any(|b| b == "[X1, X2] = 1 X3"), "{brackets:?}");
}

#[test]
fn normal_form_order_of_x3() {
    let out = tempdir("order-x3");
    let o = run_problem("x3-order-dichotomy-dd.gc", &out, &[]);
    assert_eq!(o.status.code(), Some(0));
    let report = report_json(&out);
    assert_eq!(report["details"]["order"], 2);
}

#[test]
fn parametrix_and_estimates_pass() {
    let out = tempdir("parametrix");
    let o = run_problem("parametrix-isotropic.gc", &out, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let o = run_problem("parametrix-anisotropic.gc", &out, &[]);
    assert_eq!(o.status.code(), Some(0));
    let o = run_problem("symbol-estimates-isotropic.gc", &out, &[]);
    assert_eq!(o.status.code(), Some(0));
    // Reports are append-only: three reports accumulated.
    let count = std::fs::read_dir(&out)
        .unwrap()
        .flatten()
        .filter(|e| e.file_name().to_string_lossy().starts_with("report-"))
        .count();
    assert_eq!(count, 3);
}

#[test]
fn explicit_action_check_p() {
    let out = tempdir("explicit");
    let o = run_problem("explicit-translation-action.gc", &out, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn syntax_error_is_usage_error() {
    let out = tempdir("syntax");
    let bad = out.join("bad.gc");
    std::fs::write(
        &bad,
        "[operator]\nexpr = \"x(1)^\"\ndim = 1\n[command]\nname = \"spectrum\"\n",
    )
    .unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_gradedcalc"))
        .arg("--input")
        .arg(&bad)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&o.stderr);
    assert!(stderr.contains("dangling"), "{stderr}");
}

#[test]
fn deterministic_given_seed() {
    let out1 = tempdir("det1");
    let out2 = tempdir("det2");
    for out in [&out1, &out2] {
        let o = run_problem("heisenberg-oscillator-rockland.gc", out, &["--seed", "42"]);
        assert_eq!(o.status.code(), Some(0));
    }
    let r1 = report_json(&out1);
    let r2 = report_json(&out2);
    assert_eq!(r1["details"], r2["details"]);
}
