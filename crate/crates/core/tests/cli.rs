use std::process::{Command, Output};

fn qcs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qcs")).args(args).output().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn field(line: &str, name: &str) -> String {
    let header: Vec<&str> = qcs::report::CSV_HEADER.split(',').collect();
    let idx = header.iter().position(|h| *h == name).unwrap();
    line.split(',').nth(idx).unwrap().to_string()
}

#[test]
fn qfi_noon_example() {
    let out = qcs(&["qfi", "--probe", "noon", "--n", "4", "--omega", "1"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), qcs::report::CSV_HEADER);
    let row = lines.next().unwrap();
    assert_eq!(field(row, "qfi"), "64");
    assert_eq!(field(row, "crb"), "0.125");
    assert!(lines.next().unwrap().starts_with("qfi probe=noon"));
}

#[test]
fn wstate_example_within_three_sigma() {
    let out = qcs(&["wstate", "--d", "2", "--theta", "0", "--shots", "100000", "--seed", "7"]);
    assert!(out.status.success());
    let text = stdout(&out);
    for row in text.lines().skip(1).take(2) {
        let n: f64 = field(row, "shots").parse().unwrap();
        let dev: f64 = field(row, "empirical_dev").parse().unwrap();
        let p = 0.5 + 1.0 / 3.0;
        assert!(dev.abs() <= 3.0 * (p * (1.0 - p) / n).sqrt(), "{row}");
    }
}

#[test]
fn sweep_example_slope() {
    let out = qcs(&["sweep", "--probe", "noon", "--n", "1,2,4,8,16", "--shots", "1000", "--trials", "200", "--seed", "1"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let fit = text.lines().find(|l| l.starts_with("sweep-fit,")).unwrap();
    let slope: f64 = field(fit, "ratio").parse().unwrap();
    assert!((slope + 1.0).abs() <= 0.05, "slope {slope}");
    assert_eq!(text.lines().filter(|l| l.starts_with("sweep,")).count(), 5);
}

#[test]
fn compare_average_table() {
    let out = qcs(&["compare-average", "--d", "1,2,4,9,16", "--n", "1"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let rows: Vec<&str> = text.lines().skip(1).take(5).collect();
    for (row, d) in rows.iter().zip([1.0f64, 2.0, 4.0, 9.0, 16.0]) {
        let ratio: f64 = field(row, "ratio").parse().unwrap();
        assert!((ratio - d.sqrt()).abs() < 1e-11);
    }
    let d4 = rows[2];
    assert_eq!(field(d4, "crb"), "0.125");
    assert_eq!(field(d4, "mt_bound"), "0.25");
    assert_eq!(field(d4, "ren2012"), "0.285714285714");
    assert_eq!(field(d4, "ratio"), "2");
    assert_eq!(field(rows[0], "ratio"), "1");
}

#[test]
fn json_embeds_result() {
    let out = qcs(&["montecarlo", "--probe", "noon", "--n", "2", "--trials", "60", "--format", "json"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let json_end = text.rfind('}').unwrap() + 1;
    let v: serde_json::Value = serde_json::from_str(&text[..json_end]).unwrap();
    assert_eq!(v["experiment"], "montecarlo");
    assert_eq!(v["result"]["trials"], 60);
    assert_eq!(v["result"]["estimates"].as_array().unwrap().len(), 60);
    assert!(v["rows"][0]["crb"].as_f64().unwrap() > 0.0);
}

#[test]
fn config_file_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(
        &cfg,
        "experiment = \"sweep\"\nprobe = \"average\"\nd = [2, 3]\nn = 1\nshots = 400\ntrials = 80\nseed = 17\n",
    )
    .unwrap();
    let mut reports = Vec::new();
    for name in ["a.csv", "b.csv"] {
        let path = dir.path().join(name);
        let out = qcs(&["sweep", "--config", cfg.to_str().unwrap(), "--output", path.to_str().unwrap()]);
        assert!(out.status.success());
        assert_eq!(stdout(&out).lines().count(), 1);
        reports.push(std::fs::read(path).unwrap());
    }
    assert_eq!(reports[0], reports[1]);
    let text = String::from_utf8(reports[0].clone()).unwrap();
    assert!(text.lines().nth(1).unwrap().starts_with("sweep,average,2,1,4,1,0.01,400,80,"));

    let other = dir.path().join("c.csv");
    let out = qcs(&["sweep", "--config", cfg.to_str().unwrap(), "--seed", "18", "--output", other.to_str().unwrap()]);
    assert!(out.status.success());
    assert_ne!(std::fs::read(other).unwrap(), reports[0]);
}

#[test]
fn usage_and_config_errors_exit_2() {
    assert_eq!(qcs(&["teleport"]).status.code(), Some(2));
    assert_eq!(qcs(&["qfi", "--probe", "ghz"]).status.code(), Some(2));
    assert_eq!(qcs(&["qfi", "--n", "0"]).status.code(), Some(2));
    assert_eq!(qcs(&["montecarlo", "--probe", "noon", "--n", "16", "--theta", "0.2"]).status.code(), Some(2));
    assert_eq!(qcs(&["protocol", "--probe", "average", "--d", "3", "--theta", "0.1,0.2"]).status.code(), Some(2));
    assert_eq!(qcs(&["qfi", "--config", "/nonexistent/qcs.toml"]).status.code(), Some(2));
}

#[test]
fn oracle_check_and_protocol_succeed() {
    let out = qcs(&["oracle-check", "--probe", "average", "--d", "1,2,3", "--n", "1,2"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert_eq!(text.lines().count(), 8);
    for row in text.lines().skip(1).take(6) {
        let fid: f64 = field(row, "ratio").parse().unwrap();
        assert!(fid >= 1.0 - 1e-10);
    }
    let out = qcs(&["protocol", "--probe", "w", "--d", "3", "--theta", "0.2,0.5,-0.1", "--format", "json"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let json_end = text.rfind('}').unwrap() + 1;
    let v: serde_json::Value = serde_json::from_str(&text[..json_end]).unwrap();
    assert!(v["result"]["log"].as_str().unwrap().lines().any(|l| l.contains("\tconcentrate\t")));
}
