use std::path::Path;
use std::process::{Command, Output};

fn aslab(cache: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_aslab"))
        .arg("--cache-dir")
        .arg(cache)
        .args(args)
        .env_remove("ASLAB_CACHE_DIR")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn cache_files(dir: &Path) -> Vec<std::path::PathBuf> {
    let mut v: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "aslb"))
        .collect();
    v.sort();
    v
}

#[test]
fn construct_anti_prints_csv_with_provenance() {
    let dir = tempfile::tempdir().unwrap();
    let o = aslab(dir.path(), &["construct-anti", "--n", "3", "--k", "2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.starts_with("# report = construct-anti\n"));
    assert!(text.contains("# config_digest = "));
    let header = text.lines().find(|l| !l.starts_with('#')).unwrap();
    assert!(header.starts_with("config_digest,"));
}

#[test]
fn json_output_parses() {
    let dir = tempfile::tempdir().unwrap();
    let o = aslab(dir.path(), &["--format", "json", "holographic", "--n", "3", "--k", "2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["name"], "holographic");
    assert!(v["provenance"]["config_digest"].is_string());
    assert_eq!(v["rows"].as_array().unwrap().len(), 8);
}

#[test]
fn out_dir_receives_numbered_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = aslab(dir.path(), &["--out", out.to_str().unwrap(), "census-anti", "--n", "2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let mut names: Vec<String> =
        std::fs::read_dir(&out).unwrap().map(|e| e.unwrap().file_name().to_string_lossy().into_owned()).collect();
    names.sort();
    assert!(!names.is_empty());
    assert!(names[0].starts_with("00-") && names[0].ends_with(".csv"), "{names:?}");
}

#[test]
fn infeasible_profile_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = aslab(dir.path(), &["profile", "--x", "010011"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("infeasible"));
}

#[test]
fn bad_machine_config_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = aslab(dir.path(), &["--l-max", "30", "enumerate"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn cache_build_verify_invalidate() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache");
    let o = aslab(&cache, &["cache", "build"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let files = cache_files(&cache);
    assert_eq!(files.len(), 1);

    let o = aslab(&cache, &["cache", "verify"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains(",ok,"));

    let mut bytes = std::fs::read(&files[0]).unwrap();
    let last = bytes.len() - 1;
    bytes[last] ^= 1;
    std::fs::write(&files[0], bytes).unwrap();

    let o = aslab(&cache, &["cache", "verify"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("hint:"));

    let o = aslab(&cache, &["cache", "invalidate"]);
    assert!(o.status.success());
    assert!(cache_files(&cache).is_empty());
}

#[test]
fn corrupt_cache_fails_a_run() {
    let dir = tempfile::tempdir().unwrap();
    assert!(aslab(dir.path(), &["cache", "build"]).status.success());
    let file = &cache_files(dir.path())[0];
    std::fs::write(file, b"ASLB").unwrap();
    let o = aslab(dir.path(), &["enumerate"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn config_file_run_matches_subcommand() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.toml");
    std::fs::write(&cfg, "[experiment]\nname = \"holographic\"\n[params]\nn = 3\nk = 1\n").unwrap();
    let a = aslab(dir.path(), &["--config", cfg.to_str().unwrap(), "run"]);
    let b = aslab(dir.path(), &["holographic", "--n", "3", "--k", "1"]);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(stdout(&a), stdout(&b));
}

#[test]
fn run_without_config_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = aslab(dir.path(), &["run"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn codes_bounds_single_point() {
    let dir = tempfile::tempdir().unwrap();
    let o = aslab(dir.path(), &["codes", "bounds", "--n", "24", "--k", "10"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("# violations = 0"));
}
