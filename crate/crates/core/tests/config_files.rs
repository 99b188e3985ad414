use lpwus::config::{config_to_string, load_config, mo_example, parse_config, save_config, validate, ConfigError};
use lpwus::procedures::resolve_mos;
use lpwus::config::SlotSymbol;
use std::path::PathBuf;

fn golden_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs/mo_example.json")
}

/// Set `LPWUS_BLESS=1` to rewrite the golden file after an intentional
/// schema change.
#[test]
fn golden_file_matches_builtin_example() {
    let (cfg, lpss) = mo_example();
    let text = config_to_string(&cfg, &lpss);
    if std::env::var_os("LPWUS_BLESS").is_some() {
        std::fs::write(golden_path(), &text).unwrap();
    }
    let on_disk = std::fs::read_to_string(golden_path()).unwrap();
    assert_eq!(on_disk, text);
}

#[test]
fn golden_file_describes_the_mo_scenario() {
    let (cfg, lpss) = load_config(golden_path()).unwrap();
    assert!(validate(&cfg, &lpss).is_ok());
    assert_eq!((cfg.l_mo, cfg.l, cfg.first_mo_offset_symbols), (10, 6, 28));
    let sched = resolve_mos(&cfg, SlotSymbol::new(0, 0));
    let dropped: Vec<bool> = sched.entries.iter().map(|e| e.dropped).collect();
    assert_eq!(dropped, [false, false, true, false]);
}

#[test]
fn minimal_file_fills_defaults() {
    let (cfg, lpss) = mo_example();
    let mut v: serde_json::Value = serde_json::from_str(&config_to_string(&cfg, &lpss)).unwrap();
    let wus = v["lp_wus"].as_object_mut().unwrap();
    for key in ["n_beams", "ssb_symbols", "ssb_period_slots", "fft_size", "detection"] {
        wus.remove(key);
    }
    let (c2, _) = parse_config(&v.to_string()).unwrap();
    assert_eq!(c2.n_beams, 1);
    assert_eq!(c2.fft_size, 256);
    assert_eq!(c2.ssb_period_slots, 40);
    assert!(c2.ssb_symbols.is_empty());
    assert_eq!(c2.detection.target_far, 0.01);
}

#[test]
fn out_of_domain_m_names_the_field() {
    let (cfg, lpss) = mo_example();
    let text = config_to_string(&cfg, &lpss).replace("\"M\": 2", "\"M\": 3");
    let err = parse_config(&text).unwrap_err();
    assert!(matches!(err, ConfigError::Parse(_)));
    assert!(err.to_string().contains("M"), "{err}");
}

#[test]
fn unknown_field_rejected() {
    let (cfg, lpss) = mo_example();
    let text = config_to_string(&cfg, &lpss).replace("\"L_MO\"", "\"L_M0\"");
    assert!(parse_config(&text).is_err());
}

#[test]
fn wrong_schema_version_rejected() {
    let (cfg, lpss) = mo_example();
    let text = config_to_string(&cfg, &lpss).replace("\"schema_version\": 1", "\"schema_version\": 9");
    assert!(matches!(parse_config(&text), Err(ConfigError::SchemaVersion { found: 9, .. })));
}

#[test]
fn save_then_load() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.json");
    let (mut cfg, lpss) = mo_example();
    cfg.detection.ed_threshold = Some(0.125);
    save_config(&path, &cfg, &lpss).unwrap();
    assert_eq!(load_config(&path).unwrap(), (cfg, lpss));
}
