use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use nalgebra::DMatrix;

fn golden(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(name)
}

fn geovc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_geovc"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn parse_u(o: &Output) -> Vec<f64> {
    let text = stdout(o);
    let line = text
        .lines()
        .find(|l| l.starts_with("u = "))
        .expect("control line");
    line.trim_start_matches("u = [")
        .trim_end_matches(']')
        .split(", ")
        .map(|v| v.parse().unwrap())
        .collect()
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("run.toml");
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn run_with(text: &str, args: &[&str]) -> (Output, tempfile::TempDir) {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), text);
    let out = dir.path().join("out");
    let mut full = vec![args[0], "--config", &config, "--out", out.to_str().unwrap()];
    full.extend(&args[1..]);
    (geovc(&full), dir)
}

const SE3: &str = r#"
[system]
kind = "se3_homogeneous"
m = 1.0
k = 0.5

[initial]
xi = [1.0, 2.0, 0.0, 2.0, -1.0, 0.0]

[integrator]
step = 0.01
horizon = 0.5
"#;

const ROTOR: &str = r#"
[system]
kind = "rotor"
lambda = [1.0, 2.0, 3.0]
J = 0.5
k = 0.5
"#;

#[test]
fn golden_se3_run_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let config = golden("se3.toml");
    let o = geovc(&[
        "simulate",
        "--config",
        config.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for (produced, expected) in [
        ("trajectory.csv", "se3_trajectory.csv"),
        ("group.csv", "se3_group.csv"),
    ] {
        let a = fs::read(dir.path().join(produced)).unwrap();
        let b = fs::read(golden(expected)).unwrap();
        assert!(a == b, "{produced} differs from the committed golden file");
    }
}

#[test]
fn golden_group_matches_matrix_exponential() {
    // On the constraint set the closed loop is stationary, so g(t) = exp(t ξ̂).
    let xi = [0.8, -0.5, 0.0, -0.5, -0.8, 0.0];
    #[rustfmt::skip]
    let hat = DMatrix::from_row_slice(4, 4, &[
        0.0, -xi[2], xi[1], xi[3],
        xi[2], 0.0, -xi[0], xi[4],
        -xi[1], xi[0], 0.0, xi[5],
        0.0, 0.0, 0.0, 0.0,
    ]);
    let text = fs::read_to_string(golden("se3_group.csv")).unwrap();
    let mut rows = 0;
    for line in text.lines().skip(1) {
        let v: Vec<f64> = line.split(',').map(|s| s.parse().unwrap()).collect();
        let expected = (&hat * v[0]).exp();
        let g = DMatrix::from_row_slice(4, 4, &v[1..]);
        assert!((g - expected).amax() < 1e-12, "t = {}", v[0]);
        rows += 1;
    }
    assert_eq!(rows, 11);
}

#[test]
fn golden_trajectory_header_and_precision() {
    let text = fs::read_to_string(golden("se3_trajectory.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "t,xi_1,xi_2,xi_3,xi_4,xi_5,xi_6,u_1,u_2,u_3,u_4,energy,residual,ortho_drift"
    );
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(first.len(), 14);
    for field in first {
        let mantissa = field.split('e').next().unwrap().trim_start_matches('-');
        assert_eq!(
            mantissa.chars().filter(char::is_ascii_digit).count(),
            17,
            "{field}"
        );
    }
}

#[test]
fn validate_reports_transversality_for_se3() {
    let (o, _dir) = run_with(SE3, &["validate"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("transversality = PASS (rank 6 of 6"));
}

#[test]
fn validate_rejects_indefinite_rotor_metric() {
    let text = ROTOR.replace("J = 0.5", "J = 3.5");
    let (o, dir) = run_with(&text, &["validate"]);
    assert_eq!(code(&o), 3);
    assert!(stdout(&o).contains("positive-definite"), "{}", stdout(&o));
    let report = fs::read_to_string(dir.path().join("out/validation.txt")).unwrap();
    assert!(report.contains("result = FAIL"));
}

#[test]
fn validate_rejects_inputs_inside_the_constraint() {
    let text = r#"
[system]
kind = "custom"
inputs = [[1.0, 0.0, 0.0]]

[system.algebra]
dim = 3
structure_constants = [[1, 2, 3, 1.0], [2, 1, 3, -1.0], [2, 3, 1, 1.0], [3, 2, 1, -1.0], [3, 1, 2, 1.0], [1, 3, 2, -1.0]]
metric = [1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]

[system.constraint]
basis = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]
"#;
    let (o, _dir) = run_with(text, &["validate"]);
    assert_eq!(code(&o), 3);
    assert!(
        stdout(&o).contains("transversality = FAIL"),
        "{}",
        stdout(&o)
    );
}

#[test]
fn config_errors_exit_2() {
    let o = geovc(&["validate", "--config", "/nonexistent/run.toml"]);
    assert_eq!(code(&o), 2);

    let (o, _dir) = run_with(
        "[system]\nkind = \"se3_homogeneous\"\nm = 1.0\n",
        &["validate"],
    );
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("line"));

    let text = SE3.replace("xi = [1.0, 2.0, 0.0, 2.0, -1.0, 0.0]", "xi = [1.0, 2.0]");
    let (o, _dir) = run_with(&text, &["simulate"]);
    assert_eq!(code(&o), 2);

    let text = format!("{SE3}\n[tolerances]\nresidual = -1.0\n");
    let (o, _dir) = run_with(&text, &["simulate"]);
    assert_eq!(code(&o), 2);

    let text = SE3.replace("[integrator]", "g = [2.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0]\n\n[integrator]");
    let (o, _dir) = run_with(&text, &["simulate"]);
    assert_eq!(code(&o), 2);

    let (o, _dir) = run_with(SE3, &["simulate", "--sweep", "k=0:1"]);
    assert_eq!(code(&o), 2);
    let (o, _dir) = run_with(SE3, &["simulate", "--sweep", "J=0:1:2"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn monitor_tolerance_miss_exits_3() {
    // Off the constraint set the residual is carried along unchanged.
    let text = SE3.replace(
        "xi = [1.0, 2.0, 0.0, 2.0, -1.0, 0.0]",
        "xi = [1.0, 2.0, 0.0, 0.0, 0.0, 0.0]",
    );
    let (o, dir) = run_with(&text, &["simulate"]);
    assert_eq!(code(&o), 3);
    assert!(stdout(&o).contains("check constraint_residual = FAIL"));
    assert!(dir.path().join("out/trajectory.csv").exists());
}

#[test]
fn blow_up_exits_4_with_partial_output() {
    let text = r#"
[system]
kind = "so3_rigid_body"
lambda = [1.0, 2.0, 3.0]

[initial]
xi = [100.0, 100.0, 100.0]

[integrator]
step = 1.0
horizon = 100.0
mode = "uncontrolled"
"#;
    let (o, dir) = run_with(text, &["simulate"]);
    assert_eq!(code(&o), 4);
    assert!(String::from_utf8_lossy(&o.stderr).contains("blow-up"));
    let csv = fs::read_to_string(dir.path().join("out/trajectory.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2);
}

#[test]
fn se3_on_constraint_run_keeps_residual_small() {
    let (o, dir) = run_with(SE3, &["simulate"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let csv = fs::read_to_string(dir.path().join("out/trajectory.csv")).unwrap();
    let header: Vec<&str> = csv.lines().next().unwrap().split(',').collect();
    let col = header.iter().position(|h| *h == "residual").unwrap();
    let max = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(col).unwrap().parse::<f64>().unwrap())
        .fold(0.0, f64::max);
    assert!(max < 1e-8);
}

#[test]
fn zero_state_gives_zero_rows() {
    let (o, dir) = run_with(ROTOR, &["simulate"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let csv = fs::read_to_string(dir.path().join("out/trajectory.csv")).unwrap();
    for line in csv.lines().skip(1) {
        assert!(
            line.split(',')
                .skip(1)
                .all(|v| v.parse::<f64>().unwrap() == 0.0),
            "{line}"
        );
    }
}

#[test]
fn unstable_rotor_run_still_succeeds() {
    let text = format!(
        "{}\n[initial]\nxi = [0.001, 1.0, 0.001, -0.001]\n\n[integrator]\nstep = 0.01\nhorizon = 30.0\nrecord_stride = 100\n",
        ROTOR.replace("k = 0.5", "k = 0.0")
    );
    let (o, _dir) = run_with(&text, &["simulate"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
}

#[test]
fn control_matches_closed_forms() {
    let (o, _dir) = run_with(ROTOR, &["control", "--state", "1,2,0,0"]);
    assert_eq!(code(&o), 0);
    // k(λ₁ − λ₂)ω₁ω₂ = 0.5 · (1 − 2) · 1 · 2
    assert!((parse_u(&o)[0] + 1.0).abs() < 1e-12);

    let (o, _dir) = run_with(ROTOR, &["control"]);
    assert_eq!(parse_u(&o), [0.0]);

    // m(ω₁² + ω₂²) with m = 1
    let (o, _dir) = run_with(SE3, &["control", "--state", "1,2,0,2,-1,0"]);
    let u = parse_u(&o);
    assert!(
        (u[3] - 5.0).abs() < 1e-12 && u[..3].iter().all(|v| v.abs() < 1e-12),
        "{u:?}"
    );

    let (o, _dir) = run_with(SE3, &["control", "--state", "1,2"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn seeded_control_is_reproducible() {
    let (a, _d1) = run_with(SE3, &["control", "--seed", "11", "--samples", "3"]);
    let (b, _d2) = run_with(SE3, &["control", "--seed", "11", "--samples", "3"]);
    assert_eq!(code(&a), 0);
    assert_eq!(stdout(&a), stdout(&b));
    assert_eq!(stdout(&a).matches("u = ").count(), 3);
}

#[test]
fn sweep_writes_one_run_per_value() {
    let (o, dir) = run_with(SE3, &["simulate", "--sweep", "m=1:2:3"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let index = fs::read_to_string(dir.path().join("out/sweep.csv")).unwrap();
    assert_eq!(index.lines().count(), 4);
    for i in 0..3 {
        assert!(dir
            .path()
            .join(format!("out/run_{i:03}/trajectory.csv"))
            .exists());
    }
}

#[test]
fn sweep_reports_worst_exit_code() {
    let (o, dir) = run_with(ROTOR, &["simulate", "--sweep", "J=0.5:3.5:2"]);
    assert_eq!(code(&o), 3);
    let index = fs::read_to_string(dir.path().join("out/sweep.csv")).unwrap();
    let codes: Vec<&str> = index
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(3).unwrap())
        .collect();
    assert_eq!(codes, ["0", "3"]);
}
