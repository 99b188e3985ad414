use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn golden() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs/mo_example.json")
}

fn lpwus(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lpwus")).args(args).output().expect("spawn lpwus")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn kv(text: &str, key: &str) -> Option<String> {
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{key}=")).map(str::to_string))
}

/// Copy of the golden config with both thresholds set.
fn calibrated(dir: &Path) -> String {
    let path = dir.join("c.json");
    std::fs::copy(golden(), &path).unwrap();
    let p = path.to_str().unwrap().to_string();
    let o = lpwus(&["calibrate", "--config", &p, "--trials", "1000", "--seed", "5"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    p
}

#[test]
fn validate_accepts_golden_config() {
    let o = lpwus(&["validate", "--config", golden().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("ok"));
}

#[test]
fn validate_reports_violations_with_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(golden()).unwrap().replace("\"N_seq\": 2", "\"N_seq\": 16");
    let path = dir.path().join("bad.json");
    std::fs::write(&path, text).unwrap();
    let o = lpwus(&["validate", "--config", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("N_seq"));
}

#[test]
fn bad_arguments_exit_1() {
    assert_eq!(lpwus(&["simulate", "--config", "x.json", "--axis", "nope"]).status.code(), Some(1));
    assert_eq!(lpwus(&["validate", "--config", "/does/not/exist.json"]).status.code(), Some(1));
    assert_eq!(lpwus(&["--help"]).status.code(), Some(0));
}

#[test]
fn procedures_csv_has_table_and_schedule() {
    let o = lpwus(&["procedures", "--config", golden().to_str().unwrap(), "--format", "csv"]);
    assert!(o.status.success());
    let s = stdout(&o);
    assert!(s.starts_with("i_po,i_sg,codepoint\n0,0,0\n"));
    assert!(s.contains("0,all,7"));
    assert!(s.contains("mo,beam,state,span,symbols"));
    assert_eq!(s.matches(",dropped,").count(), 1);
}

#[test]
fn encode_formats() {
    let g = golden();
    let cfg = g.to_str().unwrap();
    let csv = stdout(&lpwus(&["encode", "--config", cfg, "--codepoint", "0"]));
    assert_eq!(csv.lines().count(), 13);
    let hex = stdout(&lpwus(&["encode", "--config", cfg, "--codepoint", "0", "--format", "hex"]));
    // Codepoint 0 has the all-zero codeword: every pair is "10".
    assert_eq!(kv(&hex, "g").as_deref(), Some("aaa"));
    assert_eq!(lpwus(&["encode", "--config", cfg, "--codepoint", "8"]).status.code(), Some(1));
}

#[test]
fn generate_then_decode_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = calibrated(dir.path());
    let iq = dir.path().join("w.iq");
    let iq = iq.to_str().unwrap();
    for cp in [0u8, 3, 7] {
        let o = lpwus(&["generate", "--config", &cfg, "--codepoint", &cp.to_string(), "--snr-db", "10", "--seed", "9", "--out", iq]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        for rx in ["ed", "cd"] {
            let d = stdout(&lpwus(&["decode", "--config", &cfg, "--iq", iq, "--receiver", rx]));
            assert_eq!(kv(&d, "detected").as_deref(), Some("1"), "{rx}: {d}");
            assert_eq!(kv(&d, "codepoint"), Some(cp.to_string()), "{rx}: {d}");
        }
    }
}

#[test]
fn decode_without_threshold_is_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let iq = dir.path().join("w.iq");
    let g = golden();
    let cfg = g.to_str().unwrap();
    assert!(lpwus(&["generate", "--config", cfg, "--codepoint", "1", "--out", iq.to_str().unwrap()]).status.success());
    let o = lpwus(&["decode", "--config", cfg, "--iq", iq.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("calibrate"));
}

#[test]
fn noise_file_is_not_detected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = calibrated(dir.path());
    let iq = dir.path().join("n.iq");
    let iq = iq.to_str().unwrap();
    assert!(lpwus(&["generate", "--config", &cfg, "--kind", "noise", "--snr-db", "0", "--seed", "2", "--out", iq]).status.success());
    let d = stdout(&lpwus(&["decode", "--config", &cfg, "--iq", iq, "--receiver", "cd"]));
    assert_eq!(kv(&d, "detected").as_deref(), Some("0"), "{d}");
    assert_eq!(kv(&d, "codepoint").as_deref(), Some(""));
}

#[test]
fn lpss_measurement_both_normalizations() {
    let dir = tempfile::tempdir().unwrap();
    let iq = dir.path().join("s.iq");
    let iq = iq.to_str().unwrap();
    let g = golden();
    let cfg = g.to_str().unwrap();
    assert!(lpwus(&["generate", "--config", cfg, "--kind", "lp-ss", "--out", iq]).status.success());
    let per_symbol = stdout(&lpwus(&["decode", "--config", cfg, "--iq", iq]));
    let rsrq: f64 = kv(&per_symbol, "lp_rsrq").unwrap().parse().unwrap();
    assert!((rsrq - 2.0).abs() < 1e-6);
    assert_eq!(per_symbol.matches("occasion_beam=").count(), 4);
    let per_on = stdout(&lpwus(&["decode", "--config", cfg, "--iq", iq, "--rssi-norm", "per-on-symbol"]));
    let rsrq: f64 = kv(&per_on, "lp_rsrq").unwrap().parse().unwrap();
    assert!(rsrq <= 1.0 + 1e-6);
}

#[test]
fn simulate_is_worker_independent() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = calibrated(dir.path());
    let run = |w: &str| {
        let o = lpwus(&[
            "simulate", "--config", &cfg, "--values", "-8,-4", "--trials", "200", "--workers", w, "--master-seed", "3",
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        stdout(&o)
    };
    let one = run("1");
    assert_eq!(one, run("4"));
    let mut lines = one.lines();
    assert_eq!(lines.next(), Some("scenario,axis,value,receiver,n_trials,events,mdr,far,sync_rmse,ci_low,ci_high,incomplete"));
    assert_eq!(lines.count(), 4);
}

#[test]
fn simulate_range_sync_to_file() {
    let g = golden();
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.csv");
    let o = lpwus(&[
        "simulate", "--config", g.to_str().unwrap(), "--scenario", "sync", "--from", "0", "--to", "10", "--step", "5",
        "--trials", "50", "--out", out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(out).unwrap();
    assert_eq!(csv.lines().count(), 4);
    assert!(csv.lines().skip(1).all(|l| l.starts_with("lpss_sync,snr_db,")));
}

#[test]
fn simulate_without_thresholds_is_input_error() {
    let o = lpwus(&["simulate", "--config", golden().to_str().unwrap(), "--values", "0", "--trials", "10"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn deadline_emits_partial_rows_and_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = calibrated(dir.path());
    let o = lpwus(&["simulate", "--config", &cfg, "--values", "0,1,2", "--trials", "100000000", "--max-seconds", "0.3"]);
    assert_eq!(o.status.code(), Some(2));
    let s = stdout(&o);
    assert!(s.lines().count() >= 2);
    assert!(s.lines().last().unwrap().ends_with(",1"), "{s}");
}

#[test]
fn calibrate_persists_thresholds() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = calibrated(dir.path());
    let text = std::fs::read_to_string(&cfg).unwrap();
    assert!(text.contains("\"ed_threshold\""));
    assert!(text.contains("\"cd_threshold\""));
    let o = lpwus(&["calibrate", "--config", &cfg, "--trials", "50", "--far", "0.01"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn vectors_round_trip_through_decode() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = calibrated(dir.path());
    let out = dir.path().join("vec");
    let o = lpwus(&["vectors", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    for cp in 0..8 {
        let iq = out.join(format!("cp{cp:02}.iq"));
        assert!(out.join(format!("cp{cp:02}_frame.csv")).exists());
        let d = stdout(&lpwus(&["decode", "--config", &cfg, "--iq", iq.to_str().unwrap()]));
        assert_eq!(kv(&d, "codepoint"), Some(cp.to_string()));
    }
}
