//! Command-line behaviour: flags, exit codes, file handling.

use std::path::Path;
use std::process::{Command, Output};

fn randamp(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_randamp"))
        .env("RANDAMP_ARTIN_CACHE", dir.join("artin-cache.txt"))
        .current_dir(dir)
        .args(args)
        .output()
        .unwrap()
}

#[test]
fn missing_required_flag_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = randamp(dir.path(), &["simulate", "-o", "x.bin"]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    let out = randamp(dir.path(), &["simulate", "--rounds", "10", "-o", "x.bin", "--bogus"]);
    assert_eq!(out.status.code(), Some(2), "unknown flags must be rejected");
}

#[test]
fn simulate_prints_summary_and_analyze_reads_it() {
    let dir = tempfile::tempdir().unwrap();
    let out = randamp(
        dir.path(),
        &["simulate", "--rounds", "100000", "--visibility", "1.0", "--seed", "7", "-o", "log.bin"],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("M_obs=4.0"), "v=1 summary should show the maximum: {stdout}");

    let out = randamp(dir.path(), &["analyze", "log.bin", "--json", "report.json"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("M_obs"));
    assert!(stdout.contains("n_s"));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap())
            .unwrap();
    assert_eq!(report["rounds"], 100_000);
    assert!(report["certified"]["Certified"].is_object(), "{report}");
}

#[test]
fn analyze_corrupt_log_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.bin"), b"not a log at all").unwrap();
    let out = randamp(dir.path(), &["analyze", "bad.bin"]);
    assert_eq!(out.status.code(), Some(1));

    let out = randamp(dir.path(), &["analyze", "missing.bin"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn analyze_names_absent_settings() {
    let dir = tempfile::tempdir().unwrap();
    // a log whose rounds all use the same inputs
    let log = randamp::bitstore::RoundLog {
        rounds: vec![randamp::bitstore::RoundRecord::new(0, 0, 0, 1, 1, 1); 10],
        ..Default::default()
    };
    log.write_to(&dir.path().join("log.bin")).unwrap();
    let out = randamp(dir.path(), &["analyze", "log.bin"]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("(0,0,1)"), "absent setting must be named: {stderr}");
}

#[test]
fn run_aborts_with_exit_three_below_threshold() {
    let dir = tempfile::tempdir().unwrap();
    let out = randamp(
        dir.path(),
        &["run", "--rounds", "20000", "--visibility", "0.4", "--seed", "3", "-o", "weak"],
    );
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("below threshold"), "{stderr}");
    assert!(!dir.path().join("weak.out.bits").exists(), "aborted runs emit no output bits");
}

#[test]
fn run_rejects_the_sizing_only_extractor() {
    let dir = tempfile::tempdir().unwrap();
    let out = randamp(
        dir.path(),
        &["run", "--rounds", "1000", "--extractor", "raz", "-o", "x"],
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn recorded_run_reproduces_the_simulated_certificate() {
    let dir = tempfile::tempdir().unwrap();
    let base = &[
        "run",
        "--rounds",
        "30000",
        "--visibility",
        "0.9",
        "--eps-sv",
        "0.01",
        "--delta-f",
        "0.001",
        "--seed",
        "5",
    ];
    let mut sim_args = base.to_vec();
    sim_args.extend_from_slice(&["-o", "sim/demo"]);
    std::fs::create_dir(dir.path().join("sim")).unwrap();
    let out = randamp(dir.path(), &sim_args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    // replay from the recorded artifacts: the device log and the SV bit file
    // must reproduce the identical certificate
    std::fs::create_dir(dir.path().join("replay")).unwrap();
    let mut replay_args = base.to_vec();
    replay_args.extend_from_slice(&[
        "--log",
        "sim/demo.rounds.bin",
        "--sv-file",
        "sim/full-sv.bits",
        "-o",
        "replay/demo",
    ]);
    // the replayed SV stream must contain the input bits first, then the tail
    let log = randamp::bitstore::RoundLog::read_from(&dir.path().join("sim/demo.rounds.bin")).unwrap();
    let tail = randamp::bitstore::BitString::read_from(&dir.path().join("sim/demo.sv.bits")).unwrap();
    let full = log.input_bits().concat(&tail).unwrap();
    full.write_to(&dir.path().join("sim/full-sv.bits")).unwrap();

    let out = randamp(dir.path(), &replay_args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let sim_cert = std::fs::read(dir.path().join("sim/demo.cert.json")).unwrap();
    let replay_cert = std::fs::read(dir.path().join("replay/demo.cert.json")).unwrap();
    assert_eq!(sim_cert, replay_cert, "replayed artifacts must certify identically");
}

#[test]
fn rates_presets_are_exclusive_and_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let out = randamp(dir.path(), &["rates"]);
    assert_eq!(out.status.code(), Some(2), "a preset must be chosen");
    let out = randamp(dir.path(), &["rates", "--table1", "--fig7"]);
    assert_eq!(out.status.code(), Some(2), "presets are mutually exclusive");

    let a = randamp(dir.path(), &["rates", "--fig7", "--m-min", "3.0", "--m-max", "3.9"]);
    assert!(a.status.success());
    let b = randamp(dir.path(), &["rates", "--fig7", "--m-min", "3.0", "--m-max", "3.9"]);
    assert_eq!(a.stdout, b.stdout, "CSV output is deterministic");

    // the Raz curve is flat at the cap on [3.6, 3.9]
    let text = String::from_utf8_lossy(&a.stdout);
    let mut raz_region = Vec::new();
    for line in text.lines().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        let m_obs: f64 = fields[0].parse().unwrap();
        if fields[3] == "raz" && (3.6..=3.9).contains(&m_obs) {
            raz_region.push(fields[4].parse::<f64>().unwrap());
        }
    }
    assert!(raz_region.len() > 20);
    assert!(raz_region.iter().all(|e| (e - 0.2071).abs() <= 5e-4), "{raz_region:?}");
}

#[test]
fn rates_fig4_mbqa_never_beats_iid() {
    let dir = tempfile::tempdir().unwrap();
    let out = randamp(dir.path(), &["rates", "--fig4", "--eps-sv", "0.05", "-o", "fig4.csv"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.path().join("fig4.csv")).unwrap();
    let mut iid = std::collections::BTreeMap::new();
    let mut mbqa = std::collections::BTreeMap::new();
    for line in text.lines().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        let key = (fields[0].to_string(), fields[2].to_string());
        let eta: f64 = fields[5].parse().unwrap();
        match fields[3] {
            "iid" => {
                iid.insert(key, eta);
            }
            "mbqa" => {
                mbqa.insert(key, eta);
            }
            other => panic!("unexpected mode {other}"),
        }
    }
    assert!(!iid.is_empty());
    for (key, eta_mbqa) in &mbqa {
        let eta_iid = iid[key];
        assert!(
            *eta_mbqa <= eta_iid + 1e-12,
            "memory-attack accounting must not beat IID at {key:?}"
        );
    }
}

#[test]
fn verify_missing_artifact_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = randamp(
        dir.path(),
        &["run", "--rounds", "20000", "--seed", "9", "--delta-f", "0.001", "-o", "demo"],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    std::fs::remove_file(dir.path().join("demo.sv.bits")).unwrap();
    let out = randamp(dir.path(), &["verify", "demo.cert.json"]);
    assert_eq!(out.status.code(), Some(1));
}
