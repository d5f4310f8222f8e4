use std::path::Path;

use rhythmic::config::{ControllerId, ExperimentConfig, Suite, PRESETS};

const MINIMAL: &str = r#"
version = 1
suite = "sweep"
name = "tiny"
controllers = ["RC-SPR"]

[network]
m = 2
n = 2

[scenario]
id = 1
demands_vph = [1000.0]
"#;

#[test]
fn every_preset_loads_and_validates() {
    for (name, _) in PRESETS {
        let cfg = ExperimentConfig::load(Path::new(name)).unwrap_or_else(|e| panic!("{name}: {e:#}"));
        cfg.validate().unwrap();
        assert_eq!(cfg.name.as_deref(), Some(*name));
    }
}

#[test]
fn named_presets_pick_their_suites() {
    let suite = |n: &str| ExperimentConfig::load(Path::new(n)).unwrap().suite;
    assert_eq!(suite("table1"), Suite::DetourTable);
    assert_eq!(suite("appendixB"), Suite::Polyhedral);
    assert_eq!(suite("scenario1_sweep"), Suite::Sweep);
}

#[test]
fn defaults_fill_omitted_sections() {
    let cfg = ExperimentConfig::parse(MINIMAL, "tiny.toml").unwrap();
    assert_eq!(cfg.seeds, vec![1]);
    assert_eq!(cfg.rhythm.lengths, vec![10.0]);
    assert_eq!(cfg.network.block_length, 150.0);
    assert_eq!(cfg.controller_ids().unwrap(), vec![ControllerId::RcSpr]);
}

#[test]
fn unknown_field_reports_line_and_column() {
    let text = MINIMAL.replace("n = 2\n", "n = 2\nblock_lenght = 100.0\n");
    let err = format!("{:#}", ExperimentConfig::parse(&text, "bad.toml").unwrap_err());
    assert!(err.starts_with("bad.toml:10:1:"), "{err}");
    assert!(err.contains("block_lenght"), "{err}");
}

#[test]
fn wrong_type_reports_location() {
    let text = MINIMAL.replace("m = 2", "m = \"two\"");
    let err = format!("{:#}", ExperimentConfig::parse(&text, "bad.toml").unwrap_err());
    assert!(err.starts_with("bad.toml:8:"), "{err}");
}

#[test]
fn version_mismatch_is_rejected() {
    let text = MINIMAL.replace("version = 1", "version = 2");
    let err = ExperimentConfig::parse(&text, "v.toml").and_then(|c| c.validate()).unwrap_err();
    assert!(format!("{err:#}").contains("version"), "{err:#}");
}

#[test]
fn empty_seed_list_is_rejected() {
    let text = MINIMAL.replace("controllers", "seeds = []\ncontrollers");
    assert!(ExperimentConfig::parse(&text, "s.toml").and_then(|c| c.validate()).is_err());
}

#[test]
fn unknown_controller_is_rejected() {
    let text = MINIMAL.replace("RC-SPR", "RC-XYZ");
    assert!(ExperimentConfig::parse(&text, "c.toml").and_then(|c| c.validate()).is_err());
}

#[test]
fn controller_labels_round_trip() {
    for c in ControllerId::ALL {
        assert_eq!(ControllerId::parse(c.label()), Some(c));
    }
}
