use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_detuned-cnot"));
    c.env_remove("DETUNED_CNOT_OUT_DIR");
    c
}

fn run(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().unwrap()
}

fn rows(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records()
        .map(|rec| rec.unwrap().iter().map(str::to_string).collect())
        .collect()
}

#[test]
fn table1_blank_cells_and_layout() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["table1"]);
    assert!(out.status.success(), "{out:?}");
    let path = dir.path().join("table1.csv");
    let text = fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("delta_over_g,T2,T1,omega1_over_g\n"));
    let body = rows(&path);
    assert_eq!(body.len(), 21);
    assert_eq!(body[0], ["0.000000", "1.000000", "1.000000", "3.872983"]);
    let row = &body[4];
    assert_eq!(row[0], "0.400000");
    assert!((row[1].parse::<f64>().unwrap() - 1.0056).abs() < 5e-3);
    assert!((row[2].parse::<f64>().unwrap() - 1.0155).abs() < 5e-3);
    assert!((row[3].parse::<f64>().unwrap() - 3.8638).abs() < 5e-3);
    assert_eq!(body[15][0], "1.500000");
    assert!((body[15][1].parse::<f64>().unwrap() - 1.1042).abs() < 1e-4);
    assert_eq!(&body[15][2..], ["", ""]);
}

#[test]
fn table2_rows() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run(dir.path(), &["table2", "--out", "t2.csv"])
        .status
        .success());
    let body = rows(&dir.path().join("t2.csv"));
    assert_eq!(body.len(), 11);
    let num = |r: usize, c: usize| body[r][c].parse::<f64>().unwrap();
    assert_eq!((num(0, 3), num(0, 4)), (0.0, 1.0));
    for (r, expected) in [
        (2, [1.1945, 3.7323, 0.0106, 0.9978]),
        (10, [0.9849, 3.6179, 0.1118, 0.9754]),
    ] {
        assert!((num(r, 1) - expected[0]).abs() < 5e-3);
        assert!((num(r, 2) - expected[1]).abs() < 5e-3);
        assert!((num(r, 3) - expected[2]).abs() < 2e-3);
        assert!((num(r, 4) - expected[3]).abs() < 2e-3);
    }
}

#[test]
fn gate_json_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        dir.path(),
        &["gate", "--mode", "one-step", "--delta", "1.5"],
    );
    assert!(out.status.success(), "{out:?}");
    let v: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("gate.json")).unwrap()).unwrap();
    assert!((v["fidelity"].as_f64().unwrap() - 0.9448).abs() < 1e-3);
    assert_eq!(v["recipe"]["kind"], "one-step");
    assert_eq!(v["recipe"]["euler_angles"].as_array().unwrap().len(), 12);
    let gate = v["gate"].as_array().unwrap();
    assert_eq!(gate.len(), 4);
    assert_eq!(gate[0].as_array().unwrap().len(), 4);
    assert_eq!(gate[0][0].as_array().unwrap().len(), 2);
    assert!(v["weyl"]["c"][2].as_f64().unwrap().abs() < 1e-8);
}

#[test]
fn gate_two_step_frame2_entangling_matrix() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        dir.path(),
        &["gate", "--mode", "two-step", "--frame", "2", "--out", "-"],
    );
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let entry = |r: usize, c: usize| {
        (
            v["propagator"][r][c][0].as_f64().unwrap(),
            v["propagator"][r][c][1].as_f64().unwrap(),
        )
    };
    let (re, im) = entry(1, 2);
    assert!((re + 0.2804).abs() < 1e-3 && (im + 0.6491).abs() < 1e-3);
    assert!(1.0 - v["fidelity"].as_f64().unwrap() < 1e-6);
}

#[test]
fn trajectory_with_companion_and_env_dir() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .current_dir(dir.path())
        .env("DETUNED_CNOT_OUT_DIR", dir.path().join("artifacts"))
        .args([
            "trajectory",
            "--delta",
            "1.5",
            "--samples",
            "101",
            "--with-resonant-trace",
            "--out",
            "fig.csv",
        ])
        .output()
        .unwrap();
    assert!(out.status.success(), "{out:?}");
    let main = rows(&dir.path().join("artifacts/fig.csv"));
    let resonant = rows(&dir.path().join("artifacts/fig_resonant.csv"));
    assert_eq!(main.len(), 101);
    assert_eq!(main[0], ["0.000000"; 4]);
    assert!(main
        .iter()
        .all(|r| r[3].parse::<f64>().unwrap().abs() < 1e-6));
    assert_eq!(
        resonant.last().unwrap(),
        &["1.000000", "1.000000", "0.000000", "0.000000"]
    );
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["a.json", "b.json"] {
        assert!(run(
            dir.path(),
            &["gate", "--delta", "1.2", "--seed", "7", "--out", name]
        )
        .status
        .success());
    }
    assert_eq!(
        fs::read(dir.path().join("a.json")).unwrap(),
        fs::read(dir.path().join("b.json")).unwrap()
    );
    for name in ["a.csv", "b.csv"] {
        assert!(run(
            dir.path(),
            &["trajectory", "--samples", "64", "--out", name]
        )
        .status
        .success());
    }
    assert_eq!(
        fs::read(dir.path().join("a.csv")).unwrap(),
        fs::read(dir.path().join("b.csv")).unwrap()
    );
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let domain = run(
        dir.path(),
        &["gate", "--mode", "two-step", "--delta", "2.1"],
    );
    assert_eq!(domain.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&domain.stderr).contains("two-step limit"));

    assert_eq!(
        run(dir.path(), &["trajectory", "--samples", "1"])
            .status
            .code(),
        Some(2)
    );

    fs::write(dir.path().join("blocker"), "").unwrap();
    let io = run(dir.path(), &["table1", "--out", "blocker/table1.csv"]);
    assert_eq!(io.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&io.stderr).contains("blocker"));

    let verify = run(dir.path(), &["verify"]);
    assert_eq!(verify.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&verify.stderr).contains("9/9 checks passed"));
}
