use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn data(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn dcs(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dcs"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("spawn dcs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn json(path: PathBuf) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

/// Column `name` of a CSV file.
fn column(path: PathBuf, name: &str) -> Vec<f64> {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let idx = lines
        .next()
        .unwrap()
        .split(',')
        .position(|h| h == name)
        .unwrap();
    lines
        .map(|l| l.split(',').nth(idx).unwrap().parse().unwrap())
        .collect()
}

fn write_u(dir: &Path, name: &str, u: &[f64]) -> String {
    let mut text = String::from("vertex,u\n");
    for (i, x) in u.iter().enumerate() {
        text += &format!("{i},{x}\n");
    }
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn validate_accepts_the_sample_files() {
    let dir = TempDir::new().unwrap();
    let (mesh, weights) = (data("genus2.off"), data("genus2_tangential.json"));
    let o = dcs(
        &["validate", "--mesh", &mesh, "--weights", &weights],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let report = json(dir.path().join("validation.json"));
    assert_eq!(report["ok"], true);
    assert_eq!(report["mesh"]["euler_characteristic"], -2);
}

#[test]
fn validate_rejects_negative_eta() {
    let dir = TempDir::new().unwrap();
    let (mesh, weights) = (data("torus7.off"), data("torus7_bad_eta.json"));
    let o = dcs(
        &["validate", "--mesh", &mesh, "--weights", &weights],
        dir.path(),
    );
    assert_eq!(code(&o), 1);
    assert!(
        stderr(&o).contains("condition (1) fails on edge"),
        "{}",
        stderr(&o)
    );
    assert_eq!(json(dir.path().join("validation.json"))["ok"], false);
}

#[test]
fn validate_lists_faces_of_a_wildly_scaled_state() {
    let dir = TempDir::new().unwrap();
    let state = write_u(
        dir.path(),
        "wild.csv",
        &[-6.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    );
    let o = dcs(
        &[
            "validate",
            "--mesh",
            "torus7",
            "--weights",
            "vertex-scaling",
            "--state",
            &state,
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 1);
    let err = stderr(&o);
    assert!(
        err.contains("face ") && err.contains("triangle inequality"),
        "{err}"
    );
    let listed = json(dir.path().join("validation.json"))["degenerate_faces"]
        .as_array()
        .unwrap()
        .len();
    // vertex 0 has degree 6 on the 7-vertex torus
    assert_eq!(listed, 6);
}

#[test]
fn tetrahedron_curvature_is_pi_everywhere() {
    let dir = TempDir::new().unwrap();
    let o = dcs(
        &["curvature", "--mesh", &data("tetrahedron.off")],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    for k in column(dir.path().join("curvature.csv"), "k") {
        assert!((k - PI).abs() < 1e-12);
    }
    let gb = column(dir.path().join("curvature.csv"), "gauss_bonnet_residual");
    assert!(gb[0].abs() < 1e-12);
}

#[test]
fn curvature_spectrum_counts() {
    let dir = TempDir::new().unwrap();
    let o = dcs(
        &["curvature", "--mesh", "tetrahedron", "--spectrum"],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let report = json(dir.path().join("curvature.json"));
    let jac = &report["jacobian_spectrum"];
    assert_eq!(
        (
            jac["negative"].as_u64(),
            jac["zero"].as_u64(),
            jac["positive"].as_u64()
        ),
        (Some(0), Some(1), Some(3))
    );
    let lin = &report["linearization_spectrum"];
    assert_eq!(lin["kind"], "calabi");
    assert_eq!(
        (lin["negative"].as_u64(), lin["zero"].as_u64()),
        (Some(3), Some(1))
    );

    let o = dcs(
        &[
            "curvature",
            "--mesh",
            "genus2",
            "--geometry",
            "hyperbolic",
            "--alpha",
            "1",
            "--spectrum",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(
        json(dir.path().join("curvature.json"))["jacobian_spectrum"]["positive"],
        10
    );
}

#[test]
fn curvature_rerun_from_written_state_is_bit_identical() {
    let dir = TempDir::new().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let o = dcs(
        &[
            "flow",
            "--mesh",
            "torus7",
            "--alpha",
            "-1",
            "--perturb",
            "0.3",
            "--seed",
            "9",
            "--t-max",
            "0.37",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let fin = dir
        .path()
        .join("final_state.csv")
        .to_string_lossy()
        .into_owned();
    let common = [
        "curvature",
        "--mesh",
        "torus7",
        "--alpha",
        "-1",
        "--spectrum",
        "--state",
    ];
    let o = dcs(&[&common[..], &[fin.as_str()]].concat(), &a);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let echoed = a.join("state.csv").to_string_lossy().into_owned();
    let o = dcs(&[&common[..], &[echoed.as_str()]].concat(), &b);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    for f in ["curvature.csv", "curvature.json", "state.csv"] {
        assert_eq!(
            fs::read(a.join(f)).unwrap(),
            fs::read(b.join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn normalized_flow_converges_with_negative_rate() {
    let dir = TempDir::new().unwrap();
    let o = dcs(
        &[
            "flow",
            "--mesh",
            "torus7",
            "--kind",
            "normalized-ricci",
            "--alpha",
            "-1",
            "--perturb",
            "0.2",
            "--seed",
            "3",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let s = json(dir.path().join("summary.json"));
    assert_eq!(s["converged"], true);
    assert!(s["rate"].as_f64().unwrap() < 0.0);
    assert!(s["conserved_drift"].as_f64().unwrap() < 1e-8);
    assert!(dir.path().join("trace.csv").exists() && dir.path().join("events.csv").exists());
}

#[test]
fn extended_flow_from_a_degenerate_start_reports_the_exit() {
    let dir = TempDir::new().unwrap();
    let generator = write_u(dir.path(), "zero.csv", &[0.0; 4]);
    let start = write_u(dir.path(), "start.csv", &[-2.0, 0.1, -0.1, 0.0]);
    let args = [
        "flow",
        "--mesh",
        "tetrahedron",
        "--weights",
        "vertex-scaling:1",
        "--alpha",
        "-1",
        "--kind",
        "modified-ricci",
        "--target-from-state",
        &generator,
        "--state",
        &start,
    ];
    let o = dcs(&[&args[..], &["--extended"]].concat(), dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let events = fs::read_to_string(dir.path().join("events.csv")).unwrap();
    assert!(
        events.contains("degenerate_enter") && events.contains("degenerate_exit"),
        "{events}"
    );
    assert_eq!(json(dir.path().join("summary.json"))["converged"], true);

    // without the extension the same start is rejected
    let o = dcs(&args, dir.path());
    assert_eq!(code(&o), 1, "{}", stderr(&o));
}

#[test]
fn plain_flow_into_a_degeneration_is_a_singularity() {
    let dir = TempDir::new().unwrap();
    let generator = write_u(dir.path(), "truth.csv", &[-3.0, 0.3, -0.2, 0.1]);
    let o = dcs(
        &[
            "flow",
            "--mesh",
            "tetrahedron",
            "--weights",
            "vertex-scaling",
            "--kind",
            "modified-ricci",
            "--target-from-state",
            &generator,
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 2, "{}", stderr(&o));
    assert!(stderr(&o).contains("removable singularity"));
    assert!(fs::read_to_string(dir.path().join("events.csv"))
        .unwrap()
        .contains("degenerate_enter"));
}

#[test]
fn short_horizon_is_a_warning_not_a_failure() {
    let dir = TempDir::new().unwrap();
    let o = dcs(
        &[
            "flow",
            "--mesh",
            "torus7",
            "--alpha",
            "-1",
            "--perturb",
            "0.2",
            "--t-max",
            "0.5",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 0);
    assert!(
        stderr(&o).contains("warning: not converged"),
        "{}",
        stderr(&o)
    );
    assert_eq!(
        json(dir.path().join("summary.json"))["termination"]["status"],
        "max_time"
    );
}

#[test]
fn flow_output_is_deterministic_in_the_seed() {
    let dir = TempDir::new().unwrap();
    let run = |seed: &str, sub: &str| {
        let out = dir.path().join(sub);
        let o = dcs(
            &[
                "flow",
                "--mesh",
                "genus2",
                "--kind",
                "calabi",
                "--alpha",
                "-1",
                "--perturb",
                "0.3",
                "--seed",
                seed,
                "--t-max",
                "2",
            ],
            &out,
        );
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        fs::read(out.join("trace.csv")).unwrap()
    };
    let (a, b, c) = (run("5", "a"), run("5", "b"), run("6", "c"));
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn solve_round_trips_a_hyperbolic_target() {
    let dir = TempDir::new().unwrap();
    let truth: Vec<f64> = (0..10).map(|i| -1.2 + 0.3 * (i as f64).sin()).collect();
    let path = write_u(dir.path(), "truth.csv", &truth);
    let o = dcs(
        &[
            "solve",
            "--mesh",
            "genus2",
            "--geometry",
            "hyperbolic",
            "--alpha",
            "1",
            "--target-from-state",
            &path,
            "--starts",
            "4",
            "--perturb",
            "0.2",
            "--state",
            &path,
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let u = column(dir.path().join("solution.csv"), "u");
    for (a, b) in u.iter().zip(&truth) {
        assert!((a - b).abs() < 1e-6, "{a} vs {b}");
    }
    let report = json(dir.path().join("solve.json"));
    assert_eq!(report["succeeded"], 4);
    assert!(report["max_pairwise_difference"].as_f64().unwrap() < 1e-6);
}

#[test]
fn alpha_zero_euclidean_solve_needs_a_gauge() {
    let dir = TempDir::new().unwrap();
    let args = ["solve", "--mesh", "torus7", "--target-constant", "0"];
    let o = dcs(&args, dir.path());
    assert_ne!(code(&o), 0);
    assert!(stderr(&o).contains("gauge required"), "{}", stderr(&o));

    let o = dcs(&[&args[..], &["--gauge", "sum-u"]].concat(), dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let u = column(dir.path().join("solution.csv"), "u");
    assert!(u.iter().sum::<f64>().abs() < 1e-9);
}

#[test]
fn positive_alpha_target_warns_about_uniqueness() {
    let dir = TempDir::new().unwrap();
    let pi = PI.to_string();
    let o = dcs(
        &[
            "solve",
            "--mesh",
            "tetrahedron",
            "--alpha",
            "1",
            "--target-constant",
            &pi,
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(
        stderr(&o).contains("uniqueness not guaranteed"),
        "{}",
        stderr(&o)
    );
}

#[test]
fn bad_inputs_are_config_errors() {
    let dir = TempDir::new().unwrap();
    let cases: [&[&str]; 4] = [
        &["curvature", "--mesh", "no/such/file.off"],
        &[
            "curvature",
            "--mesh",
            "tetrahedron",
            "--geometry",
            "spherical",
        ],
        &["flow", "--mesh", "torus7", "--kind", "modified-ricci"],
        &["solve", "--mesh", "torus7"],
    ];
    for args in cases {
        let o = dcs(args, dir.path());
        assert_eq!(code(&o), 3, "{args:?}: {}", stderr(&o));
    }
}
