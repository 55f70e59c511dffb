use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn ixy(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ixy"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn ep_table_reproduces_a_table_cell() {
    let dir = tempfile::tempdir().unwrap();
    let o = ixy(
        &[
            "ep-table",
            "--out",
            "run",
            "--set",
            "z_list=[2]",
            "--set",
            "alpha_list=[0.5]",
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(dir.path().join("run/ep_table.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("Z,alpha,gamma,N,h_e,iterations"));
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(&row[..4], &["2", "0.5", "0.5", "1024"]);
    let h_e: f64 = row[4].parse().unwrap();
    assert!((h_e - -1.105059766).abs() <= 1e-6, "h_e = {h_e}");
}

#[test]
fn identical_configs_give_identical_csv() {
    let dir = tempfile::tempdir().unwrap();
    let args = |out: &'static str| {
        vec![
            "qfi-dynamics",
            "--out",
            out,
            "--set",
            "n=128",
            "--set",
            r#"times={"log":[0.1,100,25]}"#,
            "--set",
            r#"z_list=[1,"N/2"]"#,
        ]
    };
    let a = ixy(&args("a"), dir.path());
    let b = ixy(&[args("b"), vec!["--threads", "1"]].concat(), dir.path());
    assert!(a.status.success() && b.status.success());
    for name in ["qfi_dynamics_z1.csv", "qfi_dynamics_zhalf.csv"] {
        let x = fs::read(dir.path().join("a").join(name)).unwrap();
        let y = fs::read(dir.path().join("b").join(name)).unwrap();
        assert_eq!(x, y, "{name} differs between runs");
        assert!(String::from_utf8(x).unwrap().starts_with("t,qfi\n"));
    }
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("a/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config"]["n"], 128);
    assert_eq!(manifest["config"]["mode_range"], "full");
    assert_eq!(manifest["outputs"].as_array().unwrap().len(), 2);
}

#[test]
fn bad_config_reports_line_and_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("unknown.json"), "{\n  \"n\": 64,\n  \"gama\": 0.3\n}\n").unwrap();
    let o = ixy(&["dispersion", "--config", "unknown.json"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("unknown.json:3:"), "{}", stderr(&o));

    fs::write(dir.path().join("odd.json"), "{\n  \"alpha\": 1.0,\n  \"n\": 63\n}\n").unwrap();
    let o = ixy(&["dispersion", "--config", "odd.json"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("odd.json:3: n:"), "{}", stderr(&o));

    let o = ixy(&["dispersion", "--set", "z=N/3"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn print_config_shows_resolved_values() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("c.json"),
        r#"{"experiment": "size-scaling", "alpha": 0.8}"#,
    )
    .unwrap();
    let o = ixy(&["--config", "c.json", "--set", "z=N/2", "--print-config"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let cfg: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(cfg["experiment"], "size-scaling");
    assert_eq!(cfg["alpha"], 0.8);
    assert_eq!(cfg["z"], "N/2");
    assert_eq!(cfg["sizes"], serde_json::json!([128, 256, 512, 1024, 2048, 4096]));
    assert!(!dir.path().join("out").exists());
}

#[test]
fn oracle_check_passes_and_fails_on_tolerance() {
    let dir = tempfile::tempdir().unwrap();
    let o = ixy(&["oracle-check", "--out", "ok"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).contains("oracle-check: PASS"));
    let csv = fs::read_to_string(dir.path().join("ok/oracle_check.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 2 * 3 * 2);

    let o = ixy(
        &[
            "oracle-check",
            "--out",
            "strict",
            "--set",
            "oracle_tolerance=1e-300",
            "--set",
            "oracle_times=[2.0]",
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn ratio_writes_summary_row() {
    let dir = tempfile::tempdir().unwrap();
    let o = ixy(
        &[
            "ratio",
            "--out",
            "r",
            "--set",
            "n=64",
            "--set",
            "ratio_window=[10,20]",
            "--set",
            "ratio_points=11",
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(dir.path().join("r/ratio.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "t,qfi_nh,qfi_h,ratio");
    assert_eq!(lines.len(), 1 + 11 + 1);
    assert!(lines[12].starts_with("mean,,,"));
}
