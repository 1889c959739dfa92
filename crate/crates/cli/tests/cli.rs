use std::process::{Command, Output};

use serde_json::Value;

fn cvqkd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cvqkd"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json_rows(args: &[&str]) -> Vec<Value> {
    let mut all = args.to_vec();
    all.extend(["--format", "json"]);
    let out = cvqkd(&all);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice::<Vec<Value>>(&out.stdout).unwrap()
}

fn field(row: &Value, key: &str) -> f64 {
    row[key]
        .as_f64()
        .unwrap_or_else(|| panic!("no {key} in {row}"))
}

#[test]
fn gaussian_rate_positive_and_qpsk_vanishes() {
    let gauss = json_rows(&["rate", "-m", "gauss:5", "-d", "50", "--xi", "0.02"]);
    assert!(field(&gauss[0], "K") > 0.0);
    let qpsk = json_rows(&["rate", "-m", "qam-bin:2,5", "-d", "50", "--xi", "0.02"]);
    assert!(field(&qpsk[0], "K") <= 0.0);
}

#[test]
fn identity_channel_rate() {
    for va in [1.0f64, 5.0, 10.0] {
        let m = format!("gauss:{va}");
        let row = &json_rows(&["rate", "-m", &m, "-t", "1", "--xi", "0", "--beta", "1"])[0];
        assert!((field(row, "K") - (1.0 + va / 2.0).log2()).abs() < 1e-9);
    }
}

#[test]
fn rows_satisfy_key_rate_identity() {
    let rows = json_rows(&[
        "scan",
        "-m",
        "qam-bin:4,5",
        "-d",
        "0:100:10",
        "--xi",
        "0.02",
    ]);
    assert_eq!(rows.len(), 11);
    for (i, row) in rows.iter().enumerate() {
        assert!((field(row, "d_km") - 10.0 * i as f64).abs() < 1e-9);
        let k = 0.95 * field(row, "mutual_info") - field(row, "chi");
        assert!((field(row, "K") - k).abs() < 1e-12);
        assert!(field(row, "Z_low") <= field(row, "Z_high"));
    }
}

#[test]
fn scan_is_deterministic() {
    let args = ["scan", "-m", "psk:5,0.4", "-d", "0,20,40", "--xi", "0.01"];
    assert_eq!(cvqkd(&args).stdout, cvqkd(&args).stdout);
}

#[test]
fn csv_output_full_precision() {
    let out = cvqkd(&["scan", "-m", "gauss:5", "-t", "0.1,0.5", "--xi", "0.02"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(
        lines[0],
        "d_km,T,xi,V_A,K,chi,mutual_info,Z_low,Z_high,w,t1"
    );
    assert_eq!(lines.len(), 3);
    let t: f64 = lines[2].split(',').nth(1).unwrap().parse().unwrap();
    assert_eq!(t, 0.5);
}

#[test]
fn va_and_alpha_sweeps() {
    let rows = json_rows(&[
        "scan",
        "-m",
        "qam-bin:8,5",
        "-d",
        "50",
        "--xi",
        "0.02",
        "--va",
        "2,5,8",
    ]);
    assert_eq!(rows.len(), 3);
    assert!((field(&rows[1], "V_A") - 5.0).abs() < 1e-9);
    let rows = json_rows(&[
        "scan",
        "-m",
        "psk:4,0.3",
        "-d",
        "20",
        "--xi",
        "0.01",
        "--alpha",
        "0.2:0.6:0.2",
    ]);
    assert_eq!(rows.len(), 3);
    assert!((field(&rows[2], "V_A") - 2.0 * 0.36).abs() < 1e-6);
}

#[test]
fn optimize_va_gaussian() {
    let row = &json_rows(&["optimize-va", "-m", "gauss:5", "-d", "50", "--xi", "0.02"])[0];
    let va = field(row, "V_A");
    assert!((4.0..=6.0).contains(&va), "V_A_opt = {va}");
    for end in ["0.05", "20"] {
        let m = format!("gauss:{end}");
        let edge = &json_rows(&["rate", "-m", &m, "-d", "50", "--xi", "0.02"])[0];
        assert!(field(row, "K") >= field(edge, "K"));
    }
}

#[test]
fn xi_max_rows() {
    let rows = json_rows(&["xi-max", "-m", "gauss:5", "-d", "10,50"]);
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0]["status"], "bracketed");
    assert!(field(&rows[0], "xi_max") > field(&rows[1], "xi_max"));
}

#[test]
fn dump_binomial_qam() {
    let rows = json_rows(&["dump", "-m", "qam-bin:8,5"]);
    assert_eq!(rows.len(), 64);
    let total: f64 = rows.iter().map(|r| field(r, "prob")).sum();
    assert!((total - 1.0).abs() < 1e-12);
    let pmax = rows.iter().map(|r| field(r, "prob")).fold(0.0, f64::max);
    let central: Vec<&Value> = rows
        .iter()
        .filter(|r| (field(r, "prob") - pmax).abs() < 1e-15)
        .collect();
    assert_eq!(central.len(), 4);
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.json");
    std::fs::write(
        &path,
        r#"{"modulation": "gauss:5", "distance_km": [50], "xi": 0.5, "format": "json"}"#,
    )
    .unwrap();
    let p = path.to_str().unwrap();
    let from_file = cvqkd(&["rate", "--config", p]);
    let file_row: Vec<Value> = serde_json::from_slice(&from_file.stdout).unwrap();
    assert_eq!(field(&file_row[0], "xi"), 0.5);

    let overridden: Vec<Value> =
        serde_json::from_slice(&cvqkd(&["rate", "--config", p, "--xi", "0.02"]).stdout).unwrap();
    assert_eq!(field(&overridden[0], "xi"), 0.02);
    assert!(field(&overridden[0], "K") > 0.0);
}

#[test]
fn output_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("rows.csv");
    let out = cvqkd(&["dump", "-m", "psk:6,0.5", "--out", path.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(path).unwrap();
    assert_eq!(text.lines().count(), 7);
}

#[test]
fn estimate_needs_seed_and_kappa() {
    let base = [
        "estimate",
        "-m",
        "psk:4,0.35",
        "-t",
        "0.5",
        "--xi",
        "0.01",
        "--samples",
        "10000",
    ];
    let out = cvqkd(&base);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("--seed"));

    let mut args = base.to_vec();
    args.extend(["--seed", "3", "--worst-case"]);
    let out = cvqkd(&args);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("--kappa"));

    args.extend(["--kappa", "0"]);
    let wc = json_rows(&args);
    let plain = json_rows(
        &base
            .iter()
            .copied()
            .chain(["--seed", "3"])
            .collect::<Vec<_>>(),
    );
    assert_eq!(field(&wc[0], "K"), field(&plain[0], "K"));
    assert_eq!(field(&wc[0], "c1_used"), field(&wc[0], "c1_obs"));
}

#[test]
fn estimate_batch_export() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("batch.csv");
    let out = cvqkd(&[
        "estimate",
        "-m",
        "psk:4,0.35",
        "-t",
        "0.5",
        "--xi",
        "0.01",
        "--samples",
        "500",
        "--seed",
        "9",
        "--batch-out",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(path).unwrap();
    assert_eq!(text.lines().next().unwrap(), "k,re_beta,im_beta");
    assert_eq!(text.lines().count(), 501);
}

#[test]
fn actionable_errors() {
    let cases: [(&[&str], &str); 5] = [
        (&["rate", "-d", "50", "--xi", "0.02"], "--modulation"),
        (&["rate", "-m", "gauss:5", "--xi", "0.02"], "--distance-km"),
        (&["rate", "-m", "gauss:5", "-d", "50"], "--xi"),
        (
            &["rate", "-m", "ask:4,1", "-d", "50", "--xi", "0.02"],
            "unknown kind",
        ),
        (
            &[
                "rate",
                "-m",
                "gauss:5",
                "-d",
                "50",
                "--xi",
                "0.02",
                "--detection",
                "homodyne",
            ],
            "--mutual-info",
        ),
    ];
    for (args, needle) in cases {
        let out = cvqkd(args);
        assert!(!out.status.success(), "{args:?} should fail");
        let err = String::from_utf8_lossy(&out.stderr);
        assert!(err.contains(needle), "{args:?}: {err}");
    }
}

#[test]
fn homodyne_with_supplied_mutual_info() {
    let row = &json_rows(&[
        "rate",
        "-m",
        "gauss:5",
        "-d",
        "20",
        "--xi",
        "0.01",
        "--detection",
        "homodyne",
        "--mutual-info",
        "1.2",
    ])[0];
    assert_eq!(field(row, "mutual_info"), 1.2);
}
