use std::path::Path;
use std::process::{Command, Output};

fn mpdoa(args: &[&str], out_dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mpdoa"))
        .args(args)
        .env("MPDOA_OUT_DIR", out_dir)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// Estimated angles from the `theta_deg,...` block of `estimate` output.
fn estimated_degrees(text: &str) -> Vec<f64> {
    text.lines()
        .skip_while(|l| !l.starts_with("theta_deg"))
        .skip(1)
        .filter_map(|l| l.split(',').next()?.parse().ok())
        .collect()
}

#[test]
fn generated_source_is_found() {
    let dir = tempfile::tempdir().unwrap();
    let o = mpdoa(&["estimate", "--generate", "--thetas", "30", "--snr", "30", "--T", "10"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let got = estimated_degrees(&stdout(&o));
    assert_eq!(got.len(), 1);
    assert!((got[0] - 30.0).abs() < 0.01);
}

#[test]
fn repeated_runs_print_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["estimate", "--generate", "--intervals=-60:-50,-20:-10,20:30", "--snr", "0", "--seed", "4"];
    let a = mpdoa(&args, dir.path());
    let b = mpdoa(&args, dir.path());
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn all_zero_input_reports_shortfall() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("zeros.txt");
    let mut text = String::from("M,T\n8,1\n");
    for _ in 0..8 {
        text.push_str("0,0\n");
    }
    std::fs::write(&file, text).unwrap();
    let o = mpdoa(&["estimate", "--in", file.to_str().unwrap(), "--K", "1", "--L", "3"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains("shortfall"));
}

#[test]
fn malformed_file_names_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("bad.txt");
    std::fs::write(&file, "M,T\n4,1\n0,0\n1,x\n0,0\n0,0\n").unwrap();
    let o = mpdoa(&["estimate", "--in", file.to_str().unwrap(), "--K", "1", "--L", "1"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(err.contains("line 4"), "{err}");
}

#[test]
fn simulate_then_estimate_uses_default_directory() {
    let dir = tempfile::tempdir().unwrap();
    let o = mpdoa(&["simulate", "--thetas=-20,25", "--snr", "20", "--T", "5", "--M", "64", "--seed", "9"], dir.path());
    assert!(o.status.success());
    let file = dir.path().join("snapshots_9.txt");
    assert!(file.exists());
    for method in ["mp", "dft", "ml"] {
        let o = mpdoa(&["estimate", "--in", file.to_str().unwrap(), "--method", method, "--L", "5"], dir.path());
        assert!(o.status.success(), "{method}");
        let mut got = estimated_degrees(&stdout(&o));
        got.sort_by(f64::total_cmp);
        assert!((got[0] + 20.0).abs() < 0.2 && (got[1] - 25.0).abs() < 0.2, "{method}: {got:?}");
    }
}

#[test]
fn sweep_writes_records_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let spec = r#"{
        "methods": ["mp", "dft", "crb"],
        "snr_list_db": [0, 10],
        "t_list": [3],
        "trials": 2,
        "base_seed": 1,
        "M": 32,
        "K": 1,
        "intervals": [{"lo": -30, "hi": 30}],
        "L": 5
    }"#;
    let spec_path = dir.path().join("spec.json");
    std::fs::write(&spec_path, spec).unwrap();
    let out = dir.path().join("sweep");
    let o = mpdoa(
        &["sweep", "--spec", spec_path.to_str().unwrap(), "--jobs", "2", "--out", out.to_str().unwrap()],
        dir.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let records = std::fs::read_to_string(out.join("records.csv")).unwrap();
    let data_rows = records.lines().filter(|l| !l.starts_with('#')).count() - 1;
    assert_eq!(data_rows, 2 * 2 * 2 + 2);
    assert!(out.join("summary.csv").exists());
}

#[test]
fn crb_prints_one_row_per_source() {
    let dir = tempfile::tempdir().unwrap();
    let o = mpdoa(&["crb", "--thetas=-10,20", "--M", "128", "--T", "10", "--snr", "0"], dir.path());
    assert!(o.status.success());
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 3);
    assert!(text.lines().nth(1).unwrap().starts_with("-10,"));
}
