use std::path::Path;
use std::process::{Command, Output};

const CSV_HEADER: &str = "t,norm_w,norm_grad_w,norm_div_w,norm_lambda,kappa,energy_residual,solver_iterations";

fn hybrid_ns(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hybrid-ns"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn run_writes_one_row_per_level_and_snapshots() {
    let dir = tempfile::tempdir().unwrap();
    let out = hybrid_ns(
        dir.path(),
        &["run", "--set", "output_dir=out", "--set", "snapshots_every=2", "--set", "mesh={\"kind\":\"unit_square\",\"n\":4}"],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let csv = std::fs::read_to_string(dir.path().join("out/timeseries.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], CSV_HEADER);
    // T = 1, dt = 0.1: initial level plus ten steps
    assert_eq!(lines.len(), 1 + 11);
    for step in [0, 2, 4, 6, 8, 10] {
        let vtk = dir.path().join(format!("out/snapshot_{step:06}.vtk"));
        let text = std::fs::read_to_string(&vtk).unwrap();
        assert!(text.starts_with("# vtk DataFile Version 2.0"));
        assert!(text.contains("VECTORS velocity"));
        assert!(text.contains("SCALARS pressure"));
    }
    assert!(!dir.path().join("out/snapshot_000001.vtk").exists());
}

#[test]
fn run_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let args = |o: &'static str| {
        vec!["run", "--set", o, "--set", "mesh={\"kind\":\"unit_square\",\"n\":4}", "--set", "scheme.method=hybrid_trapezoidal"]
    };
    assert!(hybrid_ns(dir.path(), &args("output_dir=a")).status.success());
    assert!(hybrid_ns(dir.path(), &args("output_dir=b")).status.success());
    let a = std::fs::read(dir.path().join("a/timeseries.csv")).unwrap();
    let b = std::fs::read(dir.path().join("b/timeseries.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn config_file_and_overrides_combine() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{
        "problem": {"name": "taylor_green", "reynolds": 10},
        "mesh": {"kind": "unit_square", "n": 4},
        "scheme": {"method": "pp_be", "dt": 0.25},
        "parameter_coupling": {"explicit": {"alpha2": 100, "beta": 50}},
        "t_final": 1.0,
        "output_dir": "from_file"
    }"#;
    std::fs::write(dir.path().join("cfg.json"), cfg).unwrap();
    let out = hybrid_ns(dir.path(), &["run", "cfg.json", "--set", "scheme.dt=0.5"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let csv = std::fs::read_to_string(dir.path().join("from_file/timeseries.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 3);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("pp_be") && stdout.contains("dt = 0.5"), "{stdout}");
}

#[test]
fn configuration_errors_exit_with_code_2() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.json"), "{not json").unwrap();
    let cases: Vec<Vec<&str>> = vec![
        vec!["run", "bad.json"],
        vec!["run", "missing.json"],
        vec!["run", "--set", "scheme.unknown_key=1"],
        vec!["run", "--set", "mystery=1"],
        vec!["run", "--set", "scheme.method=not_a_method"],
        vec!["run", "--set", "scheme.dt=-1"],
        vec!["run", "--set", "scheme.dt=0.3"],
        vec!["run", "--set", "scheme.mu=1.5", "--set", "scheme.method=hybrid_be_filtered"],
        vec!["eigen-check", "--set", "mesh={\"kind\":\"asset\",\"path\":\"no_such_mesh.msh\"}"],
        vec!["convergence", "--set", "problem.name=taylor_green"],
        vec!["damping", "--set", "damping.time=leapfrog"],
    ];
    for args in cases {
        let out = hybrid_ns(dir.path(), &args);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", stderr(&out));
        assert!(stderr(&out).contains("configuration error"), "{args:?}: {}", stderr(&out));
    }
    // nothing reached the numerics, so nothing was written
    assert!(!dir.path().join("output").exists());
}

#[test]
fn solver_failure_exits_with_code_3_and_step_index() {
    let dir = tempfile::tempdir().unwrap();
    let out = hybrid_ns(
        dir.path(),
        &[
            "run",
            "--set",
            "scheme.dt=1",
            "--set",
            "scheme.max_iter=1",
            "--set",
            "scheme.tol=1e-14",
            "--set",
            "mesh={\"kind\":\"unit_square\",\"n\":4}",
        ],
    );
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
    assert!(stderr(&out).contains("step 1"), "{}", stderr(&out));
    // the initial level is kept
    let csv = std::fs::read_to_string(dir.path().join("output/timeseries.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2);
}

#[test]
fn convergence_writes_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = hybrid_ns(
        dir.path(),
        &["convergence", "--set", "mesh={\"kind\":\"unit_square\",\"n\":4}", "--set", "convergence.dts=[0.5,0.25,0.125]"],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let csv = std::fs::read_to_string(dir.path().join("output/convergence.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "dt,err_u,rate_u,err_p,rate_p,div_norm");
    assert_eq!(lines.len(), 4);
    // first row has no rates
    assert_eq!(lines[1].split(',').nth(2), Some(""));
}

#[test]
fn stability_writes_paired_series() {
    let dir = tempfile::tempdir().unwrap();
    let out = hybrid_ns(dir.path(), &["stability", "--set", "mesh={\"kind\":\"unit_square\",\"n\":4}", "--set", "t_final=1"]);
    assert!(out.status.success(), "{}", stderr(&out));
    for name in ["stability_reciprocal_dt.csv", "stability_proportional_dt.csv"] {
        let csv = std::fs::read_to_string(dir.path().join("output").join(name)).unwrap();
        assert_eq!(csv.lines().count(), 1 + 11);
    }
}

#[test]
fn damping_writes_one_series_per_method() {
    let dir = tempfile::tempdir().unwrap();
    let out = hybrid_ns(
        dir.path(),
        &[
            "damping",
            "--set",
            "mesh={\"kind\":\"asset\",\"path\":\"offset_circles_coarse.msh\"}",
            "--set",
            "t_final=0.05",
            "--set",
            "damping.time=be_filtered",
        ],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    for relaxation in ["hybrid", "pp", "ac"] {
        let path = dir.path().join(format!("output/damping_{relaxation}_be_filtered.csv"));
        let csv = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines.len(), 1 + 6);
        // curvature appears from the third level on
        assert_eq!(lines[2].split(',').nth(5), Some(""));
        assert_ne!(lines[3].split(',').nth(5), Some(""));
    }
}

#[test]
fn eigen_check_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    let out = hybrid_ns(dir.path(), &["eigen-check", "--json", "--set", "mesh={\"kind\":\"unit_square\",\"n\":16}"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["verdict"], "overdamped");
    let sigma = v["sigma_min"].as_f64().unwrap();
    assert!((sigma - std::f64::consts::PI.powi(2)).abs() < 0.05 * std::f64::consts::PI.powi(2));

    // α = β = 1 on the 40×10 channel (σ_min ≈ (π/40)² < 1) is not overdamped
    let out = hybrid_ns(
        dir.path(),
        &[
            "eigen-check",
            "--json",
            "--set",
            "mesh={\"kind\":\"channel_step\",\"nx\":40,\"ny\":10}",
            "--set",
            "parameter_coupling={\"explicit\":{\"alpha2\":1,\"beta\":1}}",
        ],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["verdict"], "not_overdamped");
    assert!(v["sigma_min"].as_f64().unwrap() < 1.0);
}
