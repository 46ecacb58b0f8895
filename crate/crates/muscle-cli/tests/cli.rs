//! End-to-end tests of the `muscle` binary: exit codes, file artifacts,
//! determinism, and the config-file flag merge.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use muscle_core::{io, ActuatorSpec, ResistanceModel};
use tempfile::TempDir;

fn muscle(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_muscle"))
        .args(args)
        .output()
        .expect("binary should launch")
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("stdout is UTF-8")
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).expect("stderr is UTF-8")
}

fn exit_code(out: &Output) -> i32 {
    out.status.code().expect("process exited normally")
}

fn write_reference_spec(dir: &Path) -> PathBuf {
    let path = dir.join("spec.json");
    io::write_spec_json(&path, &ActuatorSpec::reference()).unwrap();
    path
}

fn write_kr_model(dir: &Path) -> PathBuf {
    let model =
        ResistanceModel::new(vec![(30e3, 140.7), (60e3, 194.8), (90e3, 248.9)]).unwrap();
    let path = dir.join("kr.json");
    io::write_model_json(&path, &model).unwrap();
    path
}

fn path_str(p: &Path) -> &str {
    p.to_str().expect("temp paths are UTF-8")
}

// ============================================================================
// curve
// ============================================================================

#[test]
fn curve_writes_csv_and_svg_and_reaches_zero_force() {
    let dir = TempDir::new().unwrap();
    let spec = write_reference_spec(dir.path());
    let kr = write_kr_model(dir.path());
    let prefix = dir.path().join("run");

    let out = muscle(&[
        "curve",
        path_str(&spec),
        "--dp1",
        "90",
        "--dp2",
        "-60",
        "--kr-file",
        path_str(&kr),
        "--out",
        path_str(&prefix),
    ]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr_of(&out));

    let csv = fs::read_to_string(prefix.with_extension("csv")).unwrap();
    let parsed = io::curve_from_csv_str(&csv).unwrap();
    assert!(!parsed.truncated);
    assert!(parsed.rows.len() > 50);
    assert_eq!(parsed.rows[0].cr, 0.0);
    assert_eq!(parsed.rows.last().unwrap().f_n, 0.0);

    let svg = fs::read_to_string(prefix.with_extension("svg")).unwrap();
    assert!(svg.starts_with("<svg"));
    assert!(svg.contains("contraction ratio"));

    let text = stdout_of(&out);
    assert!(text.contains("truncated: false"), "stdout: {text}");
    assert!(text.contains("blocked_force_f0_n:"), "stdout: {text}");
}

#[test]
fn curve_reruns_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let spec = write_reference_spec(dir.path());
    let kr = write_kr_model(dir.path());

    let mut artifacts: Vec<(Vec<u8>, Vec<u8>)> = Vec::new();
    for name in ["a", "b"] {
        let prefix = dir.path().join(name);
        let out = muscle(&[
            "curve",
            path_str(&spec),
            "--dp1",
            "60",
            "--dp2",
            "-40",
            "--kr-file",
            path_str(&kr),
            "--out",
            path_str(&prefix),
        ]);
        assert_eq!(exit_code(&out), 0, "stderr: {}", stderr_of(&out));
        artifacts.push((
            fs::read(prefix.with_extension("csv")).unwrap(),
            fs::read(prefix.with_extension("svg")).unwrap(),
        ));
    }
    assert_eq!(artifacts[0].0, artifacts[1].0, "CSV bodies differ between reruns");
    assert_eq!(artifacts[0].1, artifacts[1].1, "SVG bodies differ between reruns");
}

#[test]
fn curve_without_a_blocked_state_exits_with_solver_failure() {
    let dir = TempDir::new().unwrap();
    let spec = write_reference_spec(dir.path());
    let prefix = dir.path().join("zz");

    let out = muscle(&[
        "curve",
        path_str(&spec),
        "--dp1",
        "0",
        "--dp2",
        "0",
        "--out",
        path_str(&prefix),
    ]);
    assert_eq!(exit_code(&out), 1);
    assert!(stderr_of(&out).contains("no blocked state"), "stderr: {}", stderr_of(&out));
    assert!(!prefix.with_extension("csv").exists());
}

#[test]
fn truncated_curve_keeps_partial_csv_with_footer_and_exits_nonzero() {
    let dir = TempDir::new().unwrap();
    let spec = write_reference_spec(dir.path());
    let prefix = dir.path().join("frictionless");

    // Without fold resistance the +90/−60 sweep never crosses zero force, so
    // the trace ends by regime exhaustion and is reported as truncated.
    let out = muscle(&[
        "curve",
        path_str(&spec),
        "--dp1",
        "90",
        "--dp2",
        "-60",
        "--out",
        path_str(&prefix),
    ]);
    assert_eq!(exit_code(&out), 1);
    assert!(stderr_of(&out).contains("truncated"), "stderr: {}", stderr_of(&out));

    let csv = fs::read_to_string(prefix.with_extension("csv")).unwrap();
    let footer = csv.lines().last().unwrap();
    assert!(footer.starts_with("# truncated=true"), "footer: {footer}");
    let parsed = io::curve_from_csv_str(&csv).unwrap();
    assert!(parsed.truncated);
    assert!(parsed.rows.len() > 100);
}

#[test]
fn sealed_curves_outperform_constant_supply_at_the_same_charge() {
    let dir = TempDir::new().unwrap();
    let spec = write_reference_spec(dir.path());
    let kr = write_kr_model(dir.path());
    let constant = dir.path().join("constant");
    let sealed = dir.path().join("sealed");

    for (prefix, extra) in [(&constant, None), (&sealed, Some("--closed"))] {
        let mut args = vec![
            "curve",
            path_str(&spec),
            "--dp1",
            "90",
            "--dp2",
            "-60",
            "--kr-file",
            path_str(&kr),
            "--out",
            path_str(prefix),
        ];
        if let Some(flag) = extra {
            args.push(flag);
        }
        let out = muscle(&args);
        assert_eq!(exit_code(&out), 0, "stderr: {}", stderr_of(&out));
    }

    let read = |prefix: &Path| {
        io::curve_from_csv_str(&fs::read_to_string(prefix.with_extension("csv")).unwrap())
            .unwrap()
    };
    let (con, sea) = (read(&constant), read(&sealed));
    let terminal = |c: &io::CurveCsv| c.rows.last().unwrap().cr;
    assert!(
        terminal(&sea) >= terminal(&con) - 1e-9,
        "sealed terminal {} vs constant {}",
        terminal(&sea),
        terminal(&con)
    );
    // The sealed skeleton's gauge rises as the vacuum squeezes the chamber.
    assert!(sea.rows.last().unwrap().dp1_pa > 90e3);
}

// ============================================================================
// schema and input errors
// ============================================================================

#[test]
fn schema_violations_exit_with_input_error() {
    let dir = TempDir::new().unwrap();
    let bad_spec = dir.path().join("bad.json");
    fs::write(&bad_spec, r#"{"pouch_length_L10": 20.0, "bogus": 1}"#).unwrap();

    let out = muscle(&[
        "curve",
        path_str(&bad_spec),
        "--dp1",
        "90",
        "--dp2",
        "-60",
        "--out",
        path_str(&dir.path().join("x")),
    ]);
    assert_eq!(exit_code(&out), 2);
    assert!(stderr_of(&out).contains("bogus"), "stderr: {}", stderr_of(&out));

    let out = muscle(&["modes", "--explain", "NOT-A-CODE"]);
    assert_eq!(exit_code(&out), 2);

    let spec = write_reference_spec(dir.path());
    let out = muscle(&["fit-kr", path_str(&spec), "--data", "no-equals-sign.csv"]);
    assert_eq!(exit_code(&out), 2);

    // A positive skin gauge violates the documented sign convention.
    let out = muscle(&[
        "curve",
        path_str(&spec),
        "--dp1",
        "90",
        "--dp2",
        "10",
        "--out",
        path_str(&dir.path().join("y")),
    ]);
    assert_eq!(exit_code(&out), 2);
}

#[test]
fn missing_required_values_exit_with_input_error() {
    let dir = TempDir::new().unwrap();
    let spec = write_reference_spec(dir.path());
    let out = muscle(&["curve", path_str(&spec), "--dp2", "-60"]);
    assert_eq!(exit_code(&out), 2);
    assert!(stderr_of(&out).contains("missing"), "stderr: {}", stderr_of(&out));
}

// ============================================================================
// sweep
// ============================================================================

fn run_sweep(spec: &Path, kr: &Path, dir: &Path, serial: bool) {
    let mut args = vec![
        "sweep",
        path_str(spec),
        "--dp1-list",
        "30,90",
        "--dp2-list",
        "-10,-60",
        "--kr-file",
        path_str(kr),
        "--out",
        path_str(dir),
    ];
    if serial {
        args.push("--serial");
    }
    let out = muscle(&args);
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr_of(&out));
}

#[test]
fn sweep_parallel_and_serial_outputs_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let spec = write_reference_spec(dir.path());
    let kr = write_kr_model(dir.path());
    let par_dir = dir.path().join("par");
    let ser_dir = dir.path().join("ser");
    run_sweep(&spec, &kr, &par_dir, false);
    run_sweep(&spec, &kr, &ser_dir, true);

    let names = |d: &Path| {
        let mut v: Vec<String> = fs::read_dir(d)
            .unwrap()
            .map(|e| e.unwrap().file_name().into_string().unwrap())
            .collect();
        v.sort();
        v
    };
    let par_names = names(&par_dir);
    assert_eq!(par_names, names(&ser_dir), "file sets differ");
    // 2×2 grid → 4 CSVs + 4 SVGs + matrix + errors.
    assert_eq!(par_names.len(), 10, "files: {par_names:?}");
    for name in &par_names {
        let a = fs::read(par_dir.join(name)).unwrap();
        let b = fs::read(ser_dir.join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between parallel and serial runs");
    }

    let matrix = fs::read_to_string(par_dir.join("blocked_force.csv")).unwrap();
    let rows: Vec<&str> = matrix.lines().collect();
    assert_eq!(rows.len(), 4); // comment, header, two dp1 rows
    assert!(rows[1].starts_with("dp1_kpa,"));
    assert!(rows[2].starts_with("30,"));
    assert!(rows[3].starts_with("90,"));

    let errors = fs::read_to_string(par_dir.join("errors.csv")).unwrap();
    assert_eq!(errors, "dp1_kpa,dp2_kpa,error\n");
}

#[test]
fn sweep_blocked_matrix_increases_with_pouch_pressure() {
    let dir = TempDir::new().unwrap();
    let spec = write_reference_spec(dir.path());
    let kr = write_kr_model(dir.path());
    let out_dir = dir.path().join("grid");
    run_sweep(&spec, &kr, &out_dir, false);

    let matrix = fs::read_to_string(out_dir.join("blocked_force.csv")).unwrap();
    let parse_row = |line: &str| -> Vec<f64> {
        line.split(',').skip(1).map(|v| v.parse().unwrap()).collect()
    };
    let rows: Vec<&str> = matrix.lines().skip(2).collect();
    let low = parse_row(rows[0]);
    let high = parse_row(rows[1]);
    for (a, b) in low.iter().zip(&high) {
        assert!(b > a, "blocked force should rise with dp1: {a} vs {b}");
    }
}

#[test]
fn sweep_records_cell_failures_without_losing_other_cells() {
    let dir = TempDir::new().unwrap();
    let spec = write_reference_spec(dir.path());
    let kr = write_kr_model(dir.path());
    let out_dir = dir.path().join("partial");

    // dp1 = 0 has no blocked state, so that column of cells fails; the
    // 90 kPa cells must be unaffected and the failures end up in errors.csv.
    let out = muscle(&[
        "sweep",
        path_str(&spec),
        "--dp1-list",
        "0,90",
        "--dp2-list",
        "-60",
        "--kr-file",
        path_str(&kr),
        "--out",
        path_str(&out_dir),
    ]);
    assert_eq!(exit_code(&out), 1);
    assert!(stderr_of(&out).contains("1 of 2 cells failed"), "stderr: {}", stderr_of(&out));

    assert!(out_dir.join("curve_dp1_90_dp2_-60.csv").exists());
    assert!(!out_dir.join("curve_dp1_0_dp2_-60.csv").exists());

    let errors = fs::read_to_string(out_dir.join("errors.csv")).unwrap();
    let lines: Vec<&str> = errors.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[1].starts_with("0,-60,"), "errors row: {}", lines[1]);
    assert!(lines[1].contains("no blocked state"));

    let matrix = fs::read_to_string(out_dir.join("blocked_force.csv")).unwrap();
    let failed_row = matrix.lines().nth(2).unwrap();
    assert_eq!(failed_row, "0,", "failed cells leave an empty matrix entry");
}

// ============================================================================
// table
// ============================================================================

#[test]
fn table_text_matches_the_reference_layout() {
    let expected = concat!(
        "        n=1    n=2    n=3    n=4    n=5\n",
        "m=2    36.3   51.7   55.3   56.9   57.8\n",
        "m=3    36.3   61.1   65.6   67.4   68.5\n",
        "m=4    36.3   67.4   72.0   73.8   74.8\n",
        "m=5    36.3   72.0   76.4   78.1   79.0\n",
        "m=6    36.3   75.4   79.6   81.2   82.0\n",
        "m=inf  36.3  100.0  100.0  100.0  100.0\n",
    );
    let out = muscle(&["table", "--m", "2..6", "--n", "1..5"]);
    assert_eq!(exit_code(&out), 0);
    assert_eq!(stdout_of(&out), expected);

    // The ranges default to the same grid.
    let out = muscle(&["table"]);
    assert_eq!(stdout_of(&out), expected);
}

#[test]
fn table_csv_mirrors_the_text_matrix() {
    let dir = TempDir::new().unwrap();
    let csv_path = dir.path().join("table.csv");
    let out = muscle(&["table", "--m", "2..3", "--n", "2..4", "--out", path_str(&csv_path)]);
    assert_eq!(exit_code(&out), 0);

    let csv = fs::read_to_string(&csv_path).unwrap();
    let expected = "\
m,n=2,n=3,n=4
2,51.7,55.3,56.9
3,61.1,65.6,67.4
inf,100.0,100.0,100.0
";
    assert_eq!(csv, expected);
}

// ============================================================================
// metrics
// ============================================================================

fn write_lift_trace(dir: &Path) -> PathBuf {
    let path = dir.join("trace.csv");
    let mut text = String::from("t_s,x_mm,h_mm,q_m3s,dP_kPa,F_N\n");
    for i in 0..=10 {
        let t = i as f64 * 0.5;
        text.push_str(&format!("{t},{},{},0.00001,90,{}\n", 5 * i, 3 * i, 100 - 10 * i));
    }
    fs::write(&path, text).unwrap();
    path
}

#[test]
fn metrics_emits_aligned_text_and_json_reports() {
    let dir = TempDir::new().unwrap();
    let spec = write_reference_spec(dir.path());
    let trace = write_lift_trace(dir.path());

    let base_args = [
        "metrics",
        path_str(&spec),
        "--data",
        path_str(&trace),
        "--load-mass",
        "1.0",
        "--area-mm2",
        "960",
        "--supply-kpa",
        "90",
    ];
    let out = muscle(&base_args);
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr_of(&out));
    let text = stdout_of(&out);
    for name in ["strain", "work_density", "efficiency", "actuation_stress"] {
        assert!(text.contains(name), "missing {name} in:\n{text}");
    }

    let mut json_args = base_args.to_vec();
    json_args.push("--json");
    let out = muscle(&json_args);
    assert_eq!(exit_code(&out), 0);
    let report: serde_json::Value = serde_json::from_str(&stdout_of(&out)).unwrap();
    // 50 mm peak stroke over the 200 mm flat length.
    let strain = report["strain"].as_f64().unwrap();
    assert!((strain - 0.25).abs() < 1e-12, "strain {strain}");
    assert!(report["efficiency"].as_f64().unwrap() > 0.0);
}

#[test]
fn metrics_rejects_a_non_monotonic_time_axis() {
    let dir = TempDir::new().unwrap();
    let spec = write_reference_spec(dir.path());
    let trace = dir.path().join("bad.csv");
    fs::write(&trace, "t_s,x_mm\n0,0\n2,5\n1,10\n").unwrap();

    let out = muscle(&["metrics", path_str(&spec), "--data", path_str(&trace)]);
    assert_eq!(exit_code(&out), 2);
    assert!(stderr_of(&out).contains("strictly increase"), "stderr: {}", stderr_of(&out));
}

// ============================================================================
// fit-kr
// ============================================================================

#[test]
fn fit_kr_builds_the_model_from_the_shipped_records() {
    let dir = TempDir::new().unwrap();
    let spec = write_reference_spec(dir.path());
    let model_path = dir.path().join("model.json");
    let data_dir = concat!(env!("CARGO_MANIFEST_DIR"), "/../../data");

    let args: Vec<String> = vec![
        "fit-kr".into(),
        path_str(&spec).into(),
        "--data".into(),
        format!("30={data_dir}/resistance_dp1_30kpa.csv"),
        "--data".into(),
        format!("60={data_dir}/resistance_dp1_60kpa.csv"),
        "--data".into(),
        format!("90={data_dir}/resistance_dp1_90kpa.csv"),
        "--out".into(),
        path_str(&model_path).into(),
    ];
    let arg_refs: Vec<&str> = args.iter().map(String::as_str).collect();
    let out = muscle(&arg_refs);
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr_of(&out));

    let model = io::read_model_json(&model_path).unwrap();
    let samples = model.samples();
    assert_eq!(samples.len(), 3);
    let expected = [(30e3, 140.70), (60e3, 194.82), (90e3, 248.93)];
    for ((dp1, kr), (edp1, ekr)) in samples.iter().zip(expected) {
        assert_eq!(*dp1, edp1);
        assert!((kr - ekr).abs() < 0.01, "kr at {dp1} Pa: {kr} vs {ekr}");
    }

    let table = stdout_of(&out);
    assert!(table.contains("dp1_kpa"), "table header missing:\n{table}");
    assert!(table.contains("140.70"), "fit row missing:\n{table}");
}

// ============================================================================
// modes
// ============================================================================

#[test]
fn modes_listing_counts_filters_and_explains() {
    let out = muscle(&["modes", "--list"]);
    assert_eq!(exit_code(&out), 0);
    let lines: Vec<String> = stdout_of(&out).lines().map(str::to_string).collect();
    assert_eq!(lines.len(), 150);

    let out = muscle(&["modes", "--filter", "studied"]);
    let studied: Vec<String> = stdout_of(&out).lines().map(str::to_string).collect();
    assert_eq!(studied.len(), 6);
    for line in &studied {
        assert!(line.ends_with("studied"), "line: {line}");
    }

    let out = muscle(&["modes", "--list", "--json"]);
    let parsed: serde_json::Value = serde_json::from_str(&stdout_of(&out)).unwrap();
    assert_eq!(parsed.as_array().unwrap().len(), 150);

    let out = muscle(&["modes", "--explain", "IPC1-OV2-N"]);
    let text = stdout_of(&out);
    assert!(text.starts_with("IPC1-OV2-N:"), "text: {text}");
    assert!(text.contains("studied"), "text: {text}");
}

// ============================================================================
// --config merging
// ============================================================================

#[test]
fn config_file_supplies_flags_and_explicit_flags_win() {
    let dir = TempDir::new().unwrap();
    let spec = write_reference_spec(dir.path());
    let kr = write_kr_model(dir.path());

    let flag_prefix = dir.path().join("flags");
    let out = muscle(&[
        "curve",
        path_str(&spec),
        "--dp1",
        "90",
        "--dp2",
        "-60",
        "--kr-file",
        path_str(&kr),
        "--out",
        path_str(&flag_prefix),
    ]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr_of(&out));

    // The config alone reproduces the flag run byte for byte.
    let cfg_prefix = dir.path().join("from_config");
    let config = dir.path().join("curve.json");
    fs::write(
        &config,
        serde_json::json!({
            "spec": path_str(&spec),
            "dp1": 90.0,
            "dp2": -60.0,
            "kr_file": path_str(&kr),
            "out": path_str(&cfg_prefix),
        })
        .to_string(),
    )
    .unwrap();
    let out = muscle(&["curve", "--config", path_str(&config)]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr_of(&out));
    assert_eq!(
        fs::read(flag_prefix.with_extension("csv")).unwrap(),
        fs::read(cfg_prefix.with_extension("csv")).unwrap(),
        "config-driven run should match the flag-driven run"
    );

    // An explicit flag overrides the same key from the config.
    let override_prefix = dir.path().join("override");
    let stale = dir.path().join("stale.json");
    fs::write(
        &stale,
        serde_json::json!({
            "spec": path_str(&spec),
            "dp1": 30.0,
            "dp2": -10.0,
            "kr_file": path_str(&kr),
            "out": path_str(&override_prefix),
        })
        .to_string(),
    )
    .unwrap();
    let out = muscle(&[
        "curve",
        "--config",
        path_str(&stale),
        "--dp1",
        "90",
        "--dp2",
        "-60",
    ]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr_of(&out));
    assert_eq!(
        fs::read(flag_prefix.with_extension("csv")).unwrap(),
        fs::read(override_prefix.with_extension("csv")).unwrap(),
        "explicit flags should override config values"
    );

    let out = muscle(&["curve", "--config", path_str(&dir.path().join("absent.json"))]);
    assert_eq!(exit_code(&out), 2);

    let unknown_key = dir.path().join("unknown.json");
    fs::write(&unknown_key, r#"{"dp9": 1}"#).unwrap();
    let out = muscle(&["curve", "--config", path_str(&unknown_key)]);
    assert_eq!(exit_code(&out), 2);
    assert!(stderr_of(&out).contains("dp9"), "stderr: {}", stderr_of(&out));
}
