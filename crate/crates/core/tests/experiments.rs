//! Config parsing, cache round trips and report determinism.

use std::fs;

use aslab::cache::{FileStatus, TableCache};
use aslab::experiment::{self, ExperimentConfig};
use aslab::machine::EnumOrder;
use aslab::report::Format;
use aslab::{BitString, DescriptionMode, Lab, LabError, MachineConfig, Tvm1};

fn cached_lab(dir: &std::path::Path) -> Lab {
    Lab::new(Tvm1::default()).with_cache(TableCache::new(dir).unwrap())
}

#[test]
fn config_overrides_machine_defaults() {
    let cfg = ExperimentConfig::parse(
        "[machine]\nl_max = 15\nenum_order = \"length-lex\"\n[experiment]\nname = \"holographic\"\n[params]\nn = 3\nk = 2\n[output]\nformat = \"json\"\n",
    )
    .unwrap();
    let m = cfg.machine_config();
    assert_eq!(m.l_max, 15);
    assert_eq!(m.enum_order, EnumOrder::LengthLex);
    assert_eq!(m.budget, MachineConfig::default().budget);
    assert_eq!(cfg.format().unwrap(), Format::Json);
    assert_ne!(m.digest(), MachineConfig::default().digest());
}

#[test]
fn config_rejects_unknown_keys() {
    let err = ExperimentConfig::parse("[params]\nn = 3\nwidth = 9\n").unwrap_err();
    assert!(matches!(err, LabError::Config(_)));
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn config_requires_its_parameters() {
    let lab = Lab::default();
    let cfg = ExperimentConfig::parse("[experiment]\nname = \"reconstruct\"\n[params]\nn = 4\n").unwrap();
    assert!(matches!(cfg.run(&lab), Err(LabError::Config(_))));
    let cfg = ExperimentConfig::parse("[experiment]\nname = \"no-such-run\"\n").unwrap();
    assert!(cfg.run(&lab).is_err());
}

#[test]
fn config_run_matches_direct_builder() {
    let lab = Lab::default();
    let cfg = ExperimentConfig::parse("[experiment]\nname = \"holographic\"\n[params]\nn = 3\nk = 2\n").unwrap();
    let via_config = cfg.run(&lab).unwrap();
    let direct = experiment::holographic_report(&lab, 3, 2).unwrap();
    assert_eq!(via_config.len(), 1);
    assert_eq!(via_config[0].to_csv().unwrap(), direct.to_csv().unwrap());
}

#[test]
fn cached_tables_equal_fresh_builds() {
    let dir = tempfile::tempdir().unwrap();
    let fresh = Lab::default();
    let conditions: Vec<BitString> = BitString::all_up_to_len(3).collect();
    {
        let lab = cached_lab(dir.path());
        for y in &conditions {
            lab.table(y).unwrap();
        }
    }
    let reloaded = cached_lab(dir.path());
    for y in &conditions {
        let a = fresh.table(y).unwrap();
        let b = reloaded.table(y).unwrap();
        assert_eq!(a.digest(), b.digest(), "condition {y}");
        assert_eq!(a.iter().collect::<Vec<_>>(), b.iter().collect::<Vec<_>>());
    }
    let cache = TableCache::new(dir.path()).unwrap();
    assert_eq!(cache.files().unwrap().len(), conditions.len());
    assert!(cache.verify(&Tvm1::default()).unwrap().iter().all(|(_, s)| matches!(s, FileStatus::Ok { .. })));
}

#[test]
fn corrupted_cache_is_detected_and_invalidated() {
    let dir = tempfile::tempdir().unwrap();
    let lab = cached_lab(dir.path());
    let y: BitString = "01".parse().unwrap();
    lab.table(&y).unwrap();
    let cache = TableCache::new(dir.path()).unwrap();
    let path = cache.path_for(lab.mode().config(), &y);
    let mut bytes = fs::read(&path).unwrap();
    let mid = bytes.len() / 2;
    bytes[mid] ^= 0x40;
    fs::write(&path, bytes).unwrap();

    let err = cache.load(lab.mode().config(), &y).unwrap_err();
    assert!(matches!(err, LabError::CacheCorrupt { .. }), "{err}");
    assert_eq!(err.exit_code(), 3);
    assert!(matches!(cache.verify(&Tvm1::default()).unwrap()[0].1, FileStatus::Mismatch(_)));
    assert_eq!(cache.invalidate(&Tvm1::default()).unwrap(), vec![path]);
    assert!(cache.files().unwrap().is_empty());
}

#[test]
fn cache_from_another_machine_config_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let lab = cached_lab(dir.path());
    let y = BitString::EMPTY;
    lab.table(&y).unwrap();
    let cache = TableCache::new(dir.path()).unwrap();
    let src = cache.path_for(lab.mode().config(), &y);
    let other = MachineConfig { budget: 128, ..MachineConfig::default() };
    let dst = cache.path_for(&other, &y);
    fs::copy(&src, &dst).unwrap();
    let err = cache.load(&other, &y).unwrap_err();
    assert!(matches!(err, LabError::CacheVersion { .. }), "{err}");
    let removed = cache.invalidate(&Tvm1::new(other).unwrap()).unwrap();
    assert!(removed.contains(&dst));
}

#[test]
fn reports_are_identical_with_and_without_cache() {
    let dir = tempfile::tempdir().unwrap();
    let plain = Lab::default();
    let cached = cached_lab(dir.path());
    let a = experiment::construct_report(&plain, None, None).unwrap().to_csv().unwrap();
    let b = experiment::construct_report(&cached, None, None).unwrap().to_csv().unwrap();
    assert_eq!(a, b);
    let a = experiment::ct_report(&plain, 2, 2).unwrap().to_json().unwrap();
    let b = experiment::ct_report(&cached, 2, 2).unwrap().to_json().unwrap();
    assert_eq!(a, b);
}
