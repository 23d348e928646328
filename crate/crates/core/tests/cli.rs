use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn model(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("models")
        .join(name)
}

fn emrfuse(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_emrfuse"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn write_model(dir: &tempfile::TempDir, text: &str) -> String {
    let path = dir.path().join("model.toml");
    std::fs::write(&path, text).unwrap();
    path.display().to_string()
}

fn masses(report: &Value) -> Vec<(String, f64)> {
    report["masses"]
        .as_array()
        .unwrap()
        .iter()
        .map(|m| {
            (
                m["label"].as_str().unwrap().to_string(),
                m["mass"].as_f64().unwrap(),
            )
        })
        .collect()
}

fn mass_of(report: &Value, label: &str) -> f64 {
    masses(report)
        .into_iter()
        .find(|(l, _)| l == label)
        .map(|(_, m)| m)
        .unwrap_or(0.0)
}

#[test]
fn algebra_sizes() {
    for (file, size, insulated) in [
        ("free3.toml", 20, "true"),
        ("powerset3.toml", 8, "false"),
        ("constrained12.toml", 12, "true"),
    ] {
        let out = emrfuse(&[
            "algebra",
            model(file).to_str().unwrap(),
            "--check-insulation",
        ]);
        assert!(out.status.success(), "{}", stderr(&out));
        let text = stdout(&out);
        assert!(text.starts_with(&format!("{size} elements\n")), "{text}");
        assert_eq!(text.lines().count(), size + 2);
        assert!(text.ends_with(&format!("insulation: {insulated}\n")));
    }
}

#[test]
fn fuse_zadeh_row() {
    let out = emrfuse(&[
        "fuse",
        model("zadeh-0.3-0.1.toml").to_str().unwrap(),
        "--rule",
        "emr",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let report: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report["outcome"], "fused");
    assert!((mass_of(&report, "a") - 0.3).abs() < 1e-6);
    assert!((mass_of(&report, "b") - 0.3).abs() < 1e-6);
    assert!((mass_of(&report, "c") - 0.175).abs() < 1e-6);
    assert!((mass_of(&report, "top") - 0.225).abs() < 1e-6);
    let total: f64 = masses(&report).iter().map(|(_, m)| m).sum();
    assert!((total - 1.0).abs() < 1e-8);
    assert_eq!(report["diagnostics"]["certified"], true);
}

#[test]
fn fuse_rejection_exit_code() {
    let out = emrfuse(&[
        "fuse",
        model("zadeh-0.501.toml").to_str().unwrap(),
        "--rule",
        "emr",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let report: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report["outcome"], "rejected");
    assert!(report["rejection"]["phase_one_objective"].as_f64().unwrap() > 0.0);
    let family = &report["rejection"]["violations"][0]["family"];
    assert_eq!(family, &serde_json::json!(["a", "b"]));
}

#[test]
fn fuse_dempster_comparison() {
    let out = emrfuse(&[
        "fuse",
        model("comparison.toml").to_str().unwrap(),
        "--rule",
        "dempster",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let report: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert!((mass_of(&report, "a") - 9.0 / 23.0).abs() < 1e-12);
    assert!((mass_of(&report, "a|b") - 3.0 / 23.0).abs() < 1e-12);
    assert!(report.get("diagnostics").is_none());
}

#[test]
fn report_is_deterministic_and_written_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let args = |p: &str| {
        vec![
            "fuse".to_string(),
            model("comparison.toml").display().to_string(),
            "--rule".into(),
            "emr".into(),
            "--beliefs".into(),
            "--out".into(),
            p.to_string(),
        ]
    };
    let run = |p: &str| {
        let a = args(p);
        let refs: Vec<&str> = a.iter().map(String::as_str).collect();
        let out = emrfuse(&refs);
        assert!(out.status.success(), "{}", stderr(&out));
        std::fs::read(p).unwrap()
    };
    let first = run(path.to_str().unwrap());
    let second = run(dir.path().join("again.json").to_str().unwrap());
    assert_eq!(first, second);

    let text = String::from_utf8(first.clone()).unwrap();
    let order: Vec<usize> = [
        "rule",
        "sources",
        "outcome",
        "masses",
        "diagnostics",
        "beliefs",
    ]
    .iter()
    .map(|k| text.find(&format!("\n  \"{k}\"")).unwrap())
    .collect();
    assert!(order.windows(2).all(|w| w[0] < w[1]), "{order:?}");
    let report: Value = serde_json::from_slice(&first).unwrap();
    assert_eq!(report["beliefs"].as_array().unwrap().len(), 8);
}

#[test]
fn report_masses_reparse() {
    let out = emrfuse(&[
        "fuse",
        model("free3.toml").to_str().unwrap(),
        "--rule",
        "emr",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let report: Value = serde_json::from_str(&stdout(&out)).unwrap();
    let entries: Vec<String> = masses(&report)
        .iter()
        .map(|(l, m)| format!("\"{l}\" = {m:?}"))
        .collect();
    let text = format!(
        "atoms = [\"a\", \"b\", \"c\"]\n[[sources]]\nname = \"fused\"\nmasses = {{ {} }}\n[[sources]]\nname = \"nu\"\nmasses = {{ \"top\" = 1 }}\n",
        entries.join(", ")
    );
    let dir = tempfile::tempdir().unwrap();
    let path = write_model(&dir, &text);
    let out = emrfuse(&["check", &path]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
}

#[test]
fn compare_marks_rejection() {
    let out = emrfuse(&[
        "compare",
        model("zadeh.toml").to_str().unwrap(),
        "--rules",
        "dempster,emr",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2, "{text}");
    let cols: Vec<&str> = lines[1].split_whitespace().collect();
    assert_eq!(cols[0], "c");
    assert_eq!(cols[2], "1.000000");
    assert_eq!(cols[3], "REJECTED");
}

#[test]
fn compare_identical_columns_for_ignorance() {
    let out = emrfuse(&[
        "compare",
        model("neutral.toml").to_str().unwrap(),
        "--rules",
        "conjunctive,tbm,free,dempster,emr,emr-approx",
    ]);
    assert!(out.status.success());
    for line in stdout(&out).lines().skip(1) {
        let cols: Vec<&str> = line.split_whitespace().collect();
        assert!(cols[2..].iter().all(|c| *c == cols[2]), "{line}");
    }
}

#[test]
fn compare_table_reproduces_comparison() {
    let out = emrfuse(&[
        "compare",
        model("comparison.toml").to_str().unwrap(),
        "--rules",
        "dempster,emr",
    ]);
    let text = stdout(&out);
    let row = |label: &str| -> Vec<f64> {
        text.lines()
            .find(|l| l.split_whitespace().next() == Some(label))
            .unwrap()
            .split_whitespace()
            .skip(2)
            .map(|v| v.parse().unwrap())
            .collect()
    };
    assert!((row("a")[1] - 0.411).abs() < 2e-3);
    assert!((row("b|c")[1] - 0.153).abs() < 2e-3);
    assert!((row("top")[0] - 1.0 / 23.0).abs() < 1e-6);
}

#[test]
fn check_exit_codes() {
    for (file, code) in [
        ("zadeh.toml", 2),
        ("zadeh-weakened.toml", 0),
        ("neutral.toml", 0),
    ] {
        let out = emrfuse(&["check", model(file).to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(code), "{file}: {}", stdout(&out));
    }
    let out = emrfuse(&["check", model("zadeh.toml").to_str().unwrap()]);
    assert!(stdout(&out).contains("{a, b, c}: 1.99"));
}

#[test]
fn n_ary_and_left_fold() {
    let path = model("non-associative.toml");
    let path = path.to_str().unwrap();
    let out = emrfuse(&["fuse", path, "--rule", "emr"]);
    assert_eq!(out.status.code(), Some(0));
    let report: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert!((mass_of(&report, "a") - 0.5).abs() < 1e-6);
    assert!((mass_of(&report, "na") - 0.5).abs() < 1e-6);

    let out = emrfuse(&["fuse", path, "--rule", "dempster", "--sources", "m1,m2,m3"]);
    let report: Value = serde_json::from_str(&stdout(&out)).unwrap();
    // (m1 + m2) puts 0.75 on a; combining with m3 leaves 0.375 / 0.125 / 0.125.
    assert!((mass_of(&report, "a") - 0.6).abs() < 1e-12);
    assert!((mass_of(&report, "na") - 0.2).abs() < 1e-12);
    assert!((mass_of(&report, "top") - 0.2).abs() < 1e-12);

    let out = emrfuse(&["fuse", path, "--rule", "emr", "--sources", "m1"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn tbm_sources() {
    let path = model("tbm.toml");
    let path = path.to_str().unwrap();
    let out = emrfuse(&["fuse", path, "--rule", "tbm"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let report: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert!((mass_of(&report, "bot") - (0.1 + 0.6 * 0.5)).abs() < 1e-12);

    let out = emrfuse(&["fuse", path, "--rule", "emr"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("tbm"));
}

#[test]
fn input_errors_point_at_lines() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("atoms = [\"a\", \"b\"]\nconstraints = [\"a & = b\"]\n", ":2:"),
        ("atoms = [\"a\", \"b\"]\nconstraints = [\"a & c = b\"]\n", "unknown atom 'c'"),
        (
            "atoms = [\"a\"]\n[[sources]]\nname = \"s\"\nmasses = { \"a\" = 0.5, \"top\" = 0.4 }\n",
            "--renormalize",
        ),
        (
            "atoms = [\"a\", \"b\"]\n[[sources]]\nname = \"s\"\nmasses = { \"a|b\" = 0.5, \"b|a\" = 0.5 }\n",
            "same proposition",
        ),
        ("atoms = [\"a\"]\n[[sources]]\nname = \"s\"\nmasses = { \"!a\" = 1 }\n", "negation"),
        ("atoms = [\"a\"\n", "model.toml"),
        ("atoms = [\"a\"]\n[[sources]]\nname = \"s\"\nmasses = { \"a\" = \"x\" }\n", "not a number"),
    ];
    for (text, needle) in cases {
        let path = write_model(&dir, text);
        let out = emrfuse(&["algebra", &path]);
        assert_eq!(out.status.code(), Some(1), "{text}");
        assert!(stderr(&out).contains(needle), "{text}: {}", stderr(&out));
    }
}

#[test]
fn renormalize_flag() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_model(
        &dir,
        "atoms = [\"a\", \"b\"]\n[[sources]]\nname = \"s\"\nmasses = { \"a\" = 1, \"top\" = 1 }\n[[sources]]\nname = \"t\"\nmasses = { \"b\" = 0.5, \"top\" = 0.5 }\n",
    );
    let out = emrfuse(&["fuse", &path, "--rule", "conjunctive", "--renormalize"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(stderr(&out).contains("renormalized"));
    let report: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert!((mass_of(&report, "a&b") - 0.25).abs() < 1e-12);
}

#[test]
fn solver_flags() {
    let path = model("comparison.toml");
    let out = emrfuse(&[
        "fuse",
        path.to_str().unwrap(),
        "--rule",
        "emr",
        "--max-iter",
        "1",
    ]);
    let report: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report["diagnostics"]["iterations"], 1);
    assert_eq!(report["diagnostics"]["certified"], false);

    let out = emrfuse(&["fuse", path.to_str().unwrap(), "--rule", "emr", "--tol=0"]);
    assert_eq!(out.status.code(), Some(1));
    let out = emrfuse(&["fuse", path.to_str().unwrap(), "--rule", "nope"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn shipped_models_load() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("models");
    let mut count = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            let out = emrfuse(&["algebra", path.to_str().unwrap()]);
            assert!(out.status.success(), "{}: {}", path.display(), stderr(&out));
            count += 1;
        }
    }
    assert!(count >= 10);
}
