use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_noisy-cycles"));
    c.env_remove("NOISY_CYCLES_SEED").env_remove("NOISY_CYCLES_NINO34");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Parses a numeric CSV into (headers, rows).
fn csv(text: &str) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut lines = text.lines();
    let headers = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines
        .map(|l| l.split(',').map(|c| c.parse().unwrap()).collect())
        .collect();
    (headers, rows)
}

fn read(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    csv(&std::fs::read_to_string(path).unwrap())
}

#[test]
fn deterministic_acv_template_is_a_cosine() {
    let o = run(&[
        "formula", "--template", "acv", "--r", "1", "--alpha", "6.2832", "--lambda", "6.2832",
        "--nsr", "0", "--umax", "3",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let (h, rows) = csv(&String::from_utf8(o.stdout).unwrap());
    assert_eq!(h, ["lag", "acv"]);
    assert_eq!(rows.len(), 3001);
    for r in rows {
        assert!((r[1] - 0.5 * (6.2832 * r[0]).cos()).abs() < 1e-12);
    }
}

#[test]
fn sigma_and_nsr_conflict() {
    let o = run(&["formula", "--template", "acv", "--sigma", "1", "--nsr", "0.1"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("--sigma"));
    let o = run(&["formula", "--template", "acv"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn degenerate_spectrum_is_a_numerical_error() {
    let o = run(&["formula", "--template", "psd", "--nsr", "0"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("degenerate"));
}

#[test]
fn unknown_flags_and_commands_are_usage_errors() {
    assert_eq!(code(&run(&["bogus"])), 1);
    assert_eq!(code(&run(&["fit", "--target", "acv", "--input", "x.csv", "--nope"])), 1);
    assert_eq!(code(&run(&["simulate", "--model", "hopf-exact", "--nsr", "-1", "--steps", "3"])), 1);
    assert_eq!(code(&run(&["--help"])), 0);
}

#[test]
fn simulation_is_reproducible_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let go = |name: &str, seed: Option<&str>, env: Option<&str>| {
        let p = dir.path().join(name);
        let mut c = bin();
        c.args(["simulate", "--model", "hopf-exact", "--nsr", "0.1", "--periods", "2"]);
        c.arg("-o").arg(&p);
        if let Some(s) = seed {
            c.args(["--seed", s]);
        }
        if let Some(e) = env {
            c.env("NOISY_CYCLES_SEED", e);
        }
        assert!(c.status().unwrap().success());
        std::fs::read(&p).unwrap()
    };
    let a = go("a.csv", Some("7"), None);
    let b = go("b.csv", Some("7"), None);
    let c = go("c.csv", Some("8"), None);
    let d = go("d.csv", None, Some("7"));
    let e = go("e.csv", Some("8"), Some("7"));
    assert_eq!(a, b);
    assert_ne!(a, c);
    assert_eq!(a, d);
    assert_eq!(c, e);
    // 100 samples per period at the default step.
    let (h, rows) = csv(std::str::from_utf8(&a).unwrap());
    assert_eq!(h, ["t", "x", "y"]);
    assert_eq!(rows.len(), 201);
}

#[test]
fn linear_models_write_phase_and_deviation() {
    let dir = tempfile::tempdir().unwrap();
    for model in ["hopf-linear", "hopf-leading"] {
        let p = dir.path().join(format!("{model}.csv"));
        let o = bin()
            .args(["simulate", "--model", model, "--nsr", "0.1", "--steps", "50", "-o"])
            .arg(&p)
            .output()
            .unwrap();
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        let (h, rows) = read(&p);
        assert_eq!(h, ["t", "tau", "z", "x", "y"]);
        assert_eq!(rows.len(), 51);
    }
}

#[test]
fn several_paths_get_numbered_files() {
    let dir = tempfile::tempdir().unwrap();
    let stem = dir.path().join("run.csv");
    let o = bin()
        .args(["simulate", "--model", "hopf-exact", "--nsr", "0.1", "--steps", "20", "--paths", "3"])
        .arg("-o")
        .arg(&stem)
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    for k in 0..3 {
        assert!(dir.path().join(format!("run_{k}.csv")).exists());
    }
    let o = run(&["simulate", "--model", "hopf-exact", "--nsr", "0.1", "--steps", "2", "--paths", "2"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn reduced_model_on_van_der_pol() {
    let o = run(&[
        "simulate", "--model", "reduced", "--preset", "van-der-pol", "--sigma", "0.05", "--dt",
        "1e-3", "--substeps", "10", "--steps", "20",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let (h, rows) = csv(&String::from_utf8(o.stdout).unwrap());
    assert_eq!(h, ["t", "x", "y", "tau", "z0_1"]);
    assert_eq!(rows.len(), 21);
}

#[test]
fn decompose_reports_period_and_frame() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("frame.csv");
    let summary = dir.path().join("summary.json");
    let o = bin()
        .args(["decompose", "--preset", "van-der-pol", "--grid-size", "512", "-o"])
        .arg(&out)
        .arg("--summary")
        .arg(&summary)
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let s: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&summary).unwrap()).unwrap();
    assert!((s["period"].as_f64().unwrap() - 6.6633).abs() < 1e-3);
    assert!(s["spectral_radius"].as_f64().unwrap() < 1.0);
    let (h, rows) = read(&out);
    assert_eq!(h.len(), 1 + 2 + 2 + 2 + 4);
    assert_eq!(rows.len(), 512);
    assert_eq!(code(&run(&["decompose", "--preset", "linear-spiral"])), 2);
}

#[test]
fn malformed_csv_names_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.csv");
    std::fs::write(&p, "t,x\n0,1\n0.1,2\n0.2,oops\n").unwrap();
    let o = bin().args(["analyze", "--method", "acv", "-i"]).arg(&p).output().unwrap();
    assert_eq!(code(&o), 1);
    let e = stderr(&o);
    assert!(e.contains(":4:") && e.contains("oops"), "{e}");
    std::fs::write(&p, "t,x\n0,1\n0.1\n").unwrap();
    let o = bin().args(["analyze", "--method", "acv", "-i"]).arg(&p).output().unwrap();
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("ragged"));
    let o = bin()
        .args(["analyze", "--method", "acv", "--column", "nope", "-i"])
        .arg(&p)
        .output()
        .unwrap();
    assert_eq!(code(&o), 1);
}

#[test]
fn analyze_then_fit_recovers_the_template() {
    let dir = tempfile::tempdir().unwrap();
    let curve = dir.path().join("acv.csv");
    let o = bin()
        .args(["formula", "--template", "acv", "--nsr", "0.1", "--umax", "60", "--du", "0.01", "-o"])
        .arg(&curve)
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let o = bin().args(["fit", "--target", "acv", "-i"]).arg(&curve).output().unwrap();
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!((v["derived"]["period"].as_f64().unwrap() - 1.0).abs() < 1e-6);
    assert!((v["derived"]["nsr"].as_f64().unwrap() - 0.1).abs() < 1e-3);
    assert_eq!(v["target"], "acv");
}

#[test]
fn analyze_estimators_write_their_tables() {
    let dir = tempfile::tempdir().unwrap();
    let mut inputs = Vec::new();
    for seed in ["1", "2"] {
        let p = dir.path().join(format!("s{seed}.csv"));
        let o = bin()
            .args(["simulate", "--model", "hopf-exact", "--nsr", "0.1", "--periods", "20", "--seed", seed, "-o"])
            .arg(&p)
            .output()
            .unwrap();
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        inputs.push(p);
    }
    let mut c = bin();
    c.args(["analyze", "--method", "psd", "--window", "hann"]);
    for p in &inputs {
        c.arg("-i").arg(p);
    }
    let o = c.output().unwrap();
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let (h, rows) = csv(&String::from_utf8(o.stdout).unwrap());
    assert_eq!(h, ["omega", "psd"]);
    assert!(rows.iter().all(|r| r[1] >= 0.0));

    let o = bin().args(["analyze", "--method", "kde", "--grid-size", "64", "-i"]).arg(&inputs[0]).output().unwrap();
    assert_eq!(code(&o), 0);
    let (h, rows) = csv(&String::from_utf8(o.stdout).unwrap());
    assert_eq!(h, ["x", "density"]);
    assert_eq!(rows.len(), 64);

    let o = bin().args(["analyze", "--method", "kurtosis", "-i"]).arg(&inputs[0]).output().unwrap();
    let k: f64 = String::from_utf8(o.stdout).unwrap().trim().parse().unwrap();
    assert!(k > 1.0 && k < 3.0, "{k}");

    let o = bin().args(["analyze", "--method", "acv", "--max-lag", "1", "--dt", "0.01", "--column", "y", "-i"]).arg(&inputs[0]).output().unwrap();
    let (h, rows) = csv(&String::from_utf8(o.stdout).unwrap());
    assert_eq!(h, ["lag", "acv"]);
    assert_eq!(rows.len(), 101);
}

#[test]
fn config_file_fills_flags_and_command_line_wins() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"template": "acv", "nsr": 0.3, "umax": 1, "du": 0.5}"#).unwrap();
    let o = bin()
        .arg("formula")
        .arg("--config")
        .arg(&cfg)
        .args(["--nsr", "0", "--umax", "2"])
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let (_, rows) = csv(&String::from_utf8(o.stdout).unwrap());
    assert_eq!(rows.len(), 5);
    assert!((rows[2][1] - 0.5).abs() < 1e-12);

    // σ on the command line overrides the file's NSR instead of conflicting.
    let o = bin().arg("formula").arg("--config").arg(&cfg).args(["--sigma", "0"]).output().unwrap();
    assert_eq!(code(&o), 0, "{}", stderr(&o));

    std::fs::write(&cfg, r#"{"template": "acv", "nsr": 0, "bogus": 1}"#).unwrap();
    let o = bin().arg("formula").arg("--config").arg(&cfg).output().unwrap();
    assert_eq!(code(&o), 1);
}

#[test]
fn validate_runs_selected_criteria() {
    let o = run(&["--threads", "1", "validate", "--criteria", "7"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let out = String::from_utf8(o.stdout).unwrap();
    assert!(out.starts_with("[PASS]  7"), "{out}");
    assert_eq!(code(&run(&["validate", "--criteria", "12"])), 1);
    let o = run(&["validate", "--criteria", "11"]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8(o.stdout).unwrap().starts_with("[SKIP]"));
}
