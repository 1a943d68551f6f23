use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn polyfreq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_polyfreq")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

fn run_in(dir: &Path, config: &str, out: &str, extra: &[&str]) -> Output {
    let out = dir.join(out);
    let mut args = vec!["run", config, "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    polyfreq(&args)
}

#[test]
fn algebra_check_with_defaults_passes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "a.toml", "experiment = algebra-check\n[truncation]\nn_max = 4\n");
    let out = run_in(dir.path(), &cfg, "out", &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = fs::read_to_string(dir.path().join("out/report.txt")).unwrap();
    assert!(report.contains("overall: PASS"));
    assert!(dir.path().join("out/algebra-check.csv").exists());
}

#[test]
fn blackbody_writes_one_row_per_grid_point_and_curve() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "b.toml", "experiment = blackbody\n[thermal]\nmu = 0, -10\npoints = 200\n");
    let out = run_in(dir.path(), &cfg, "out", &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let mut rdr = csv::Reader::from_path(dir.path().join("out/blackbody.csv")).unwrap();
    let headers = rdr.headers().unwrap().clone();
    assert_eq!(headers.iter().collect::<Vec<_>>(), ["mu_over_kT", "omega_over_kT", "rho_new", "rho_planck", "rel_dev"]);
    let mut per_mu = std::collections::BTreeMap::<String, usize>::new();
    for rec in rdr.records() {
        *per_mu.entry(rec.unwrap()[0].to_string()).or_default() += 1;
    }
    assert_eq!(per_mu.len(), 2);
    assert!(per_mu.values().all(|&n| n == 200), "{per_mu:?}");
}

#[test]
fn missing_truncation_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "m.toml", "experiment = algebra-check\n");
    let out = run_in(dir.path(), &cfg, "out", &[]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("missing required field truncation.n_max"), "{err}");
}

#[test]
fn unknown_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "u.toml", "experiment = blackbody\n[thermal]\nbeat = 2\n");
    let out = run_in(dir.path(), &cfg, "out", &[]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("thermal.beat"));
}

#[test]
fn list_shows_every_experiment() {
    let out = polyfreq(&["list"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in ["algebra-check", "fields-check", "emission", "two-photon", "blackbody"] {
        assert_eq!(text.lines().filter(|l| l.starts_with(name)).count(), 1, "{name}");
    }
    assert_eq!(text, String::from_utf8(polyfreq(&["list"]).stdout).unwrap());
}

#[test]
fn same_seed_gives_identical_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "f.toml", "experiment = fields-check\n[truncation]\nn_max = 3\n");
    for out in ["one", "two"] {
        assert!(run_in(dir.path(), &cfg, out, &["--seed", "42"]).status.success());
    }
    let read = |d: &str| fs::read(dir.path().join(d).join("fields-check.csv")).unwrap();
    assert_eq!(read("one"), read("two"));
    assert!(run_in(dir.path(), &cfg, "three", &["--seed", "43"]).status.success());
    assert_ne!(read("one"), read("three"));
}

#[test]
fn two_photon_defaults_pass() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "t.toml", "experiment = two-photon\n");
    let out = run_in(dir.path(), &cfg, "out", &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let mut rdr = csv::Reader::from_path(dir.path().join("out/two-photon.csv")).unwrap();
    // three channels, three routes each
    assert_eq!(rdr.records().count(), 9);
}

#[test]
fn shipped_configs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        polyfreq_cli::load_config(&path, None).unwrap_or_else(|e| panic!("{}: {e:#}", path.display()));
        seen += 1;
    }
    assert_eq!(seen, 5);
}
