use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn sconsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sconsim"))
        .args(args)
        .env_remove("SCONSIM_OUTPUT_DIR")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn validate_reports_all_problems_with_exit_2() {
    let ok = sconsim(&["validate"]);
    assert_eq!(code(&ok), 0, "{}", stderr(&ok));

    let bad = sconsim(&[
        "validate",
        "--set",
        "update_distance=20",
        "--set",
        "replicates=0",
        "--set",
        "scenario.carrier_frequency_hz=200e9",
    ]);
    assert_eq!(code(&bad), 2);
    let msg = stderr(&bad);
    for path in ["update_distance", "replicates", "scenario.carrier_frequency_hz"] {
        assert!(msg.contains(path), "{msg}");
    }
}

#[test]
fn unknown_keys_and_malformed_files_are_config_errors() {
    assert_eq!(code(&sconsim(&["run", "--set", "scenario.not_a_key=1"])), 2);
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("broken.toml");
    fs::write(&cfg, "seed = [").unwrap();
    assert_eq!(code(&sconsim(&["run", "-c", cfg.to_str().unwrap()])), 2);
    assert_eq!(
        code(&sconsim(&[
            "run",
            "-c",
            dir.path().join("missing.toml").to_str().unwrap()
        ])),
        2
    );
}

#[test]
fn resolved_config_round_trips_through_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let printed = sconsim(&["config", "--set", "scenario.lambda_c=0.7", "--seed", "12"]);
    assert_eq!(code(&printed), 0);
    let path = dir.path().join("cfg.toml");
    fs::write(&path, &printed.stdout).unwrap();
    let again = sconsim(&["config", "-c", path.to_str().unwrap()]);
    assert_eq!(printed.stdout, again.stdout);
    let text = String::from_utf8(again.stdout).unwrap();
    assert!(text.contains("lambda_c = 0.7"));
    assert!(text.contains("seed = 12"));
}

#[test]
fn shipped_config_is_valid() {
    let cfg = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/street_canyon.toml");
    let o = sconsim(&["validate", "-c", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
}

#[test]
fn run_is_reproducible_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    // the header echoes output_dir, so reruns share the directory
    let out = dir.path().join("run");
    let log = |seed: &str| {
        let o = sconsim(&["run", "--seed", seed, "-o", out.to_str().unwrap()]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        fs::read_to_string(out.join("drive_log.jsonl")).unwrap()
    };
    let a = log("4");
    assert!(a == log("4"), "drive logs differ for the same seed");
    assert!(a != log("5"), "drive logs match across seeds");
}

#[test]
fn run_without_output_dir_streams_the_log() {
    let o = sconsim(&["run"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    // header plus one record per tick of the 75 m default route
    assert_eq!(lines.len(), 77);
    let header: serde_json::Value = serde_json::from_str(lines[0]).unwrap();
    assert_eq!(header["config"]["update_distance"], 1.0);
    let last: serde_json::Value = serde_json::from_str(lines[76]).unwrap();
    assert_eq!(last["index"], 75);
}

#[test]
fn output_dir_comes_from_flag_then_env() {
    let dir = tempfile::tempdir().unwrap();
    let env_dir = dir.path().join("env");
    let flag_dir = dir.path().join("flag");
    let status = Command::new(env!("CARGO_BIN_EXE_sconsim"))
        .args(["run"])
        .env("SCONSIM_OUTPUT_DIR", &env_dir)
        .output()
        .unwrap();
    assert!(status.status.success());
    assert!(env_dir.join("drive_log.jsonl").exists());

    let status = Command::new(env!("CARGO_BIN_EXE_sconsim"))
        .args(["run", "-o", flag_dir.to_str().unwrap()])
        .env("SCONSIM_OUTPUT_DIR", dir.path().join("unused"))
        .output()
        .unwrap();
    assert!(status.status.success());
    assert!(flag_dir.join("analysis_report.txt").exists());
    assert!(!dir.path().join("unused").exists());
}

#[test]
fn monte_carlo_summary_and_replicate_guard() {
    assert_eq!(code(&sconsim(&["mc", "--replicates", "1"])), 2);
    let o = sconsim(&["mc", "--replicates", "4", "--set", "monte_carlo.identical_seeds=true"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let summary: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(summary["replicates"], 4);
    for t in summary["per_tick"].as_array().unwrap() {
        assert_eq!(t["path_loss_db"]["std"], 0.0);
    }
}

#[test]
fn analyze_reads_simulated_pdps() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = sconsim(&[
        "run",
        "-o",
        out.to_str().unwrap(),
        "--set",
        "emit.pdps=true",
        "--set",
        "analysis.emit_directional=true",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let files: Vec<String> = (0..12)
        .map(|k| {
            out.join(format!("pdps/tick_{k:05}_directional.csv"))
                .to_string_lossy()
                .into_owned()
        })
        .collect();
    let mut args = vec!["analyze", "--spacing", "1"];
    args.extend(files.iter().map(String::as_str));
    let a = sconsim(&args);
    assert_eq!(code(&a), 0, "{}", stderr(&a));
    let text = String::from_utf8(a.stdout).unwrap();
    assert!(text.contains("locations = 12"));
    assert!(text.contains("location.11.time_clusters = "));
    assert!(text.contains("route.cluster_count.correlation_distance_m = "));

    // same counts as the simulator's own report for those ticks
    let report = fs::read_to_string(out.join("analysis_report.txt")).unwrap();
    for k in 0..12 {
        let key = format!("location.{k}.time_clusters = ");
        let pick = |t: &str| t.lines().find(|l| l.starts_with(&key)).map(str::to_owned);
        assert_eq!(pick(&text), pick(&report), "tick {k}");
    }
}

#[test]
fn analyze_errors_are_runtime_errors() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "bin_width_ns,first_bin_ns\n2,0\ndelay_ns,power_dbm\nabc,1\n").unwrap();
    let o = sconsim(&["analyze", bad.to_str().unwrap()]);
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("line"), "{}", stderr(&o));
    assert_eq!(
        code(&sconsim(&["analyze", dir.path().join("none.csv").to_str().unwrap()])),
        3
    );
    assert_eq!(
        code(&sconsim(&["analyze", "--threshold-db", "-3", bad.to_str().unwrap()])),
        2
    );
}
