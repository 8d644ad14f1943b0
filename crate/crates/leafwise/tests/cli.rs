//! End-to-end tests of the `leafwise` binary: exit codes, CSV determinism,
//! report contents, and the annulus file layout.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn binary() -> &'static str {
    env!("CARGO_BIN_EXE_leafwise")
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    Command::new(binary())
        .args(args)
        .current_dir(dir)
        .env("LEAFWISE_OUT_DIR", dir)
        .output()
        .expect("binary runs")
}

fn temp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("leafwise-cli-{tag}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn solve_line_constant_writes_unit_solution() {
    let dir = temp_dir("line");
    let out = run_in(
        &dir,
        &["solve-line", "--v", "const:1", "--grid", "-2:2:401"],
    );
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );

    let body = std::fs::read_to_string(dir.join("solve-line.csv")).unwrap();
    let mut lines = body.lines();
    assert_eq!(lines.next().unwrap(), "# columns: t,u");
    let mut rows = 0;
    for line in lines {
        let fields: Vec<f64> = line.split(',').map(|f| f.parse().unwrap()).collect();
        assert_eq!(fields.len(), 2);
        assert!((fields[1] - 1.0).abs() < 1e-9, "u = {}", fields[1]);
        rows += 1;
    }
    assert_eq!(rows, 401);

    let report = std::fs::read_to_string(dir.join("solve-line.report.txt")).unwrap();
    assert!(report.contains("status: pass"), "report:\n{report}");
}

#[test]
fn identical_scenarios_emit_identical_bytes() {
    let dir = temp_dir("determinism");
    // Coarse grid: the central-difference residual floor is ~2e-4, so relax
    // the verdict tolerance; this test only probes byte determinism.
    let args = [
        "solve-line",
        "--v",
        "fourier:P=6.283185307179586,b1=1",
        "--grid",
        "-1:1:51",
        "--tol",
        "1e-3",
    ];
    assert!(run_in(&dir, &args).status.success());
    let first = std::fs::read(dir.join("solve-line.csv")).unwrap();
    assert!(run_in(&dir, &args).status.success());
    let second = std::fs::read(dir.join("solve-line.csv")).unwrap();
    assert_eq!(first, second);
    assert!(!first.contains(&b'\r'));
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    let dir = temp_dir("usage");
    let out = run_in(&dir, &["solve-everything"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run_in(
        &dir,
        &[
            "solve-line",
            "--v",
            "const:1",
            "--grid",
            "-2:2:401",
            "--wobble",
        ],
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bad_function_spec_is_a_usage_error() {
    let dir = temp_dir("badspec");
    let out = run_in(
        &dir,
        &["solve-line", "--v", "mystery:1", "--grid", "-2:2:41"],
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("usage error"));
    // Grid count below 3 violates the scenario invariants.
    let out = run_in(&dir, &["solve-line", "--v", "const:1", "--grid", "0:1:2"]);
    assert_eq!(out.status.code(), Some(2));
    // So do configuration overrides that fail validation.
    let out = run_in(
        &dir,
        &[
            "solve-line",
            "--v",
            "const:1",
            "--grid",
            "0:1:11",
            "--epsilon",
            "-1",
        ],
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn singular_line_reports_junction_gaps() {
    let dir = temp_dir("singular");
    let out = run_in(&dir, &["singular-line", "--v", "const:1"]);
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report = std::fs::read_to_string(dir.join("singular-line.report.txt")).unwrap();
    assert!(report.contains("max_junction_gap"));
    assert!(report.contains("status: pass"));
    let body: Vec<String> = std::fs::read_to_string(dir.join("singular-line.csv"))
        .unwrap()
        .lines()
        .map(str::to_string)
        .collect();
    assert_eq!(body[0], "# columns: branch,x,u");
    assert!(body.len() > 400);
}

#[test]
fn circle_obstruction_divergence_passes() {
    let dir = temp_dir("obstruction");
    let out = run_in(&dir, &["circle-obstruction", "--v", "const:1"]);
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("arc_one_log_slope"));
}

#[test]
fn bundle_glue_flags_the_inconsistent_cover() {
    let dir = temp_dir("badcover");
    let out = run_in(
        &dir,
        &["bundle-glue", "--cover", "inconsistent3", "--v", "const:1"],
    );
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("cocycle violation"), "stderr: {stderr}");
}

#[test]
fn bundle_glue_circle_passes() {
    let dir = temp_dir("circleglue");
    let out = run_in(
        &dir,
        &[
            "bundle-glue",
            "--cover",
            "circle",
            "--v",
            "fourier:P=6.283185307179586,a1=1",
        ],
    );
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let body = std::fs::read_to_string(dir.join("bundle-glue.csv")).unwrap();
    assert!(body.starts_with("# columns: box,t,u_tilde"));
}

#[test]
fn bundle_glue_reads_cover_files() {
    let dir = temp_dir("coverfile");
    let cover_path = Path::new(env!("CARGO_MANIFEST_DIR")).join("covers/torus-leaf.cover");
    let out = run_in(
        &dir,
        &[
            "bundle-glue",
            "--cover",
            cover_path.to_str().unwrap(),
            "--v",
            "fourier:P=1,a1=1",
        ],
    );
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn solve_annulus_writes_one_file_per_leaf_plus_index() {
    let dir = temp_dir("annulus");
    let out_dir = dir.join("section");
    let out = run_in(
        &dir,
        &[
            "solve-annulus",
            "--v",
            "const:1",
            "--leaves",
            "-1:1:3",
            "--grid",
            "-6:6:25",
            "--out",
            out_dir.to_str().unwrap(),
        ],
    );
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    for name in [
        "leaf_000.csv",
        "leaf_001.csv",
        "leaf_002.csv",
        "circle_inner.csv",
        "circle_outer.csv",
        "index.csv",
    ] {
        assert!(out_dir.join(name).exists(), "missing {name}");
    }
    let index = std::fs::read_to_string(out_dir.join("index.csv")).unwrap();
    assert!(index.starts_with("# columns: leaf,s,file"));
    assert_eq!(index.lines().count(), 1 + 3 + 2);
}

#[test]
fn solve_flow_reports_derivative_agreement() {
    let dir = temp_dir("flow");
    let out = run_in(
        &dir,
        &[
            "solve-flow",
            "--field",
            "unit-x:1",
            "--v",
            "coord:0",
            "--point",
            "0.4",
        ],
    );
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report = std::fs::read_to_string(dir.join("solve-flow.report.txt")).unwrap();
    assert!(report.contains("derivative_agreement"));
    assert!(report.contains("status: pass"));
}

#[test]
fn verify_suite_passes_and_names_checks() {
    let dir = temp_dir("verify");
    let report = dir.join("verify.txt");
    let out = run_in(
        &dir,
        &[
            "verify",
            "--suite",
            "operator",
            "--out",
            report.to_str().unwrap(),
        ],
    );
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("check operator/identity_absorption: PASS"));
    assert!(stdout.contains("checks passed"));
    let written = std::fs::read_to_string(report).unwrap();
    assert!(written.contains("operator/boundedness"));
}
