use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn ipvss(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ipvss"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn quick(out_dir: &Path, extra: &[&str]) -> Output {
    let dir = out_dir.to_str().unwrap();
    let mut args = vec!["--trials", "20", "--iterations", "400", "--out-dir", dir];
    args.extend_from_slice(extra);
    ipvss(&args)
}

fn read_csv(path: &Path) -> Vec<(usize, f64, f64)> {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("iteration,mse,mse_db"));
    lines
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            assert_eq!(f.len(), 3, "{l}");
            (
                f[0].parse().unwrap(),
                f[1].parse().unwrap(),
                f[2].parse().unwrap(),
            )
        })
        .collect()
}

#[test]
fn default_algorithms_write_three_curves_per_snr() {
    let tmp = TempDir::new().unwrap();
    let out = quick(tmp.path(), &["--snr-db", "10", "--snr-db", "15"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    for label in ["snr10db", "snr15db"] {
        let mut names: Vec<String> = fs::read_dir(tmp.path().join(label))
            .unwrap()
            .map(|e| e.unwrap().file_name().into_string().unwrap())
            .collect();
        names.sort();
        assert_eq!(
            names,
            [
                "ipvss-mu0.05-phi0.005.csv",
                "iss-mu0.005.csv",
                "iss-mu0.05.csv"
            ]
        );
        for name in &names {
            let rows = read_csv(&tmp.path().join(label).join(name));
            assert_eq!(rows.len(), 400);
            for (i, &(n, mse, db)) in rows.iter().enumerate() {
                assert_eq!(n, i + 1);
                assert!(mse.is_finite() && mse > 0.0);
                let want = 10.0 * mse.log10();
                assert!((db - want).abs() <= 1e-9 * want.abs().max(1e-300));
            }
        }
    }
    assert!(tmp.path().join("summary.json").is_file());
    assert!(tmp.path().join("provenance.json").is_file());
}

#[test]
fn summary_reports_gap_and_provenance_records_seed() {
    let tmp = TempDir::new().unwrap();
    let out = quick(tmp.path(), &["--snr-db", "15", "--seed", "7"]);
    assert_eq!(code(&out), 0);
    let summary: Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("summary.json")).unwrap())
            .unwrap();
    assert_eq!(summary["unstable"], false);
    let point = &summary["points"][0];
    assert_eq!(point["label"], "snr15db");
    let ss = |name: &str| {
        point["trajectories"]
            .as_array()
            .unwrap()
            .iter()
            .find(|t| t["algorithm"] == name)
            .unwrap()["steady_state_db"]
            .as_f64()
            .unwrap()
    };
    let gap = point["comparison"]["gaps"]
        .as_array()
        .unwrap()
        .iter()
        .find(|g| g["first"] == "iss-mu0.05" && g["second"] == "ipvss-mu0.05-phi0.005")
        .unwrap()["gap_db"]
        .as_f64()
        .unwrap();
    assert!((gap - (ss("iss-mu0.05") - ss("ipvss-mu0.05-phi0.005"))).abs() < 1e-9);

    let prov: Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("provenance.json")).unwrap())
            .unwrap();
    assert_eq!(prov["master_seed"], 7);
    assert_eq!(prov["spec"]["trials"], 20);
}

#[test]
fn rerun_is_byte_identical() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    assert_eq!(code(&quick(a.path(), &["--snr-db", "5"])), 0);
    assert_eq!(code(&quick(b.path(), &["--snr-db", "5"])), 0);
    for rel in [
        "summary.json",
        "snr5db/iss-mu0.05.csv",
        "snr5db/iss-mu0.005.csv",
        "snr5db/ipvss-mu0.05-phi0.005.csv",
    ] {
        assert_eq!(
            fs::read(a.path().join(rel)).unwrap(),
            fs::read(b.path().join(rel)).unwrap(),
            "{rel}"
        );
    }
}

#[test]
fn config_file_and_flag_override() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("run.toml");
    fs::write(
        &cfg,
        "snr_db = 20\ntrials = 5\niterations = 100\nalgorithms = [\"iss:mu=0.02\"]\nformat = \"json\"\n",
    )
    .unwrap();
    let out_dir = tmp.path().join("out");
    let out = ipvss(&[
        "--config",
        cfg.to_str().unwrap(),
        "--snr-db",
        "0",
        "--out-dir",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let curve: Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("snr0db/iss-mu0.02.json")).unwrap())
            .unwrap();
    assert_eq!(curve["mse"].as_array().unwrap().len(), 100);
    assert!(!out_dir.join("snr20db").exists());
}

#[test]
fn validation_errors_exit_1() {
    let tmp = TempDir::new().unwrap();
    for extra in [
        &["--algo", "iss:mu=1.5"][..],
        &["--algo", "ipvss:mu0=0.05,phi=0.1"],
        &["--taps", "0"],
        &["--seed", "9223372036854775808"],
        &["--no-such-flag"],
    ] {
        let out = quick(tmp.path(), extra);
        assert_eq!(code(&out), 1, "{extra:?}");
    }
    let cfg = tmp.path().join("bad.toml");
    fs::write(&cfg, "taps = 16\nbogus = 1\n").unwrap();
    assert_eq!(code(&ipvss(&["--config", cfg.to_str().unwrap()])), 1);
}

#[test]
fn io_errors_exit_2() {
    let tmp = TempDir::new().unwrap();
    let missing = tmp.path().join("missing.toml");
    assert_eq!(code(&ipvss(&["--config", missing.to_str().unwrap()])), 2);

    let blocker = tmp.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let out = quick(&blocker.join("out"), &["--snr-db", "15"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn divergent_run_exits_3() {
    let tmp = TempDir::new().unwrap();
    // mu = 0.5 grows ~0.6 decades per iteration and overflows near n = 520
    let out = ipvss(&[
        "--trials",
        "20",
        "--iterations",
        "1000",
        "--out-dir",
        tmp.path().to_str().unwrap(),
        "--snr-db",
        "15",
        "--algo",
        "iss:mu=0.5",
        "--algo",
        "iss:mu=0.05",
    ]);
    assert_eq!(code(&out), 3);
    let summary: Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("summary.json")).unwrap())
            .unwrap();
    assert_eq!(summary["unstable"], true);
}

#[test]
fn complexity_table() {
    let out = ipvss(&["--complexity", "--taps", "16"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<Vec<&str>> = text
        .lines()
        .skip(1)
        .map(|l| l.split_whitespace().collect())
        .collect();
    assert_eq!(rows.len(), 3);
    let counts: Vec<(&str, &str)> = rows.iter().map(|r| (r[1], r[2])).collect();
    assert_eq!(counts, [("32", "33"), ("102", "79"), ("33", "33")]);
}

#[test]
fn default_run_matches_committed_summary() {
    let tmp = TempDir::new().unwrap();
    let out = ipvss(&["--out-dir", tmp.path().to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let got = fs::read_to_string(tmp.path().join("summary.json")).unwrap();
    let want = include_str!("fixtures/expected_summary.json");
    assert!(
        got == want,
        "summary.json differs from tests/fixtures/expected_summary.json"
    );
}

#[test]
fn summary_gap_at_15db_is_about_3db() {
    let tmp = TempDir::new().unwrap();
    let out = ipvss(&[
        "--snr-db",
        "15",
        "--trials",
        "200",
        "--out-dir",
        tmp.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    let summary: Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("summary.json")).unwrap())
            .unwrap();
    let gap = summary["points"][0]["comparison"]["gaps"]
        .as_array()
        .unwrap()
        .iter()
        .find(|g| g["first"] == "iss-mu0.05" && g["second"] == "ipvss-mu0.05-phi0.005")
        .unwrap()["gap_db"]
        .as_f64()
        .unwrap();
    assert!((gap - 3.0).abs() <= 1.5, "gap {gap:.2} dB");
}
