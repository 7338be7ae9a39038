use atomlight::config::{parse_config, parse_config_str};
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use tempfile::TempDir;

const SHORT: &str = r#"
[params]
omega23 = 1.5e8
r = 2.0

[grid]
x_min = -0.1e-3
x_max = 0.3e-3
n_points = 1024

[run]
duration = 0.004
atom_window = [1e-5, 4e-5]
detector_x = 8e-5
slot_width = 5e-4
eval_interval = 5e-4
snapshot_interval = 1e-3
"#;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_atomlight"));
    c.env_remove("ATOMLIGHT_OUT");
    c
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("terminated by signal")
}

fn run_short(tmp: &TempDir, out: &str) -> PathBuf {
    let cfg = write(tmp.path(), "short.toml", SHORT);
    let dir = tmp.path().join(out);
    let o = bin()
        .args(["--quiet", "--out"])
        .arg(&dir)
        .arg("run")
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    dir
}

#[test]
fn check_passes_and_a_perturbed_assembly_fails() {
    let o = bin().args(["check", "--quiet"]).output().unwrap();
    assert_eq!(code(&o), 0);
    let o = bin().args(["check", "--perturb-vacuum", "1e-6"]).output().unwrap();
    assert_eq!(code(&o), 3);
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("FAIL"));
}

#[test]
fn validation_and_usage_errors_exit_with_one() {
    let o = bin().args(["oracle", "--eta", "1.5", "--r", "2"]).output().unwrap();
    assert_eq!(code(&o), 1);
    let o = bin().arg("no-such-command").output().unwrap();
    assert_eq!(code(&o), 1);
    let tmp = TempDir::new().unwrap();
    let bad = write(tmp.path(), "bad.toml", &SHORT.replace("r = 2.0", "r = 2.0\nflux_capacitor = 1"));
    let o = bin().arg("run").arg(&bad).output().unwrap();
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 5"));
    let guard = write(tmp.path(), "guard.toml", &SHORT.replace("r = 2.0", "r = 2.0\ndelta = 1e6"));
    let o = bin().arg("run").arg(&guard).output().unwrap();
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("delta"));
}

#[test]
fn integration_failure_exits_with_two_and_keeps_outputs() {
    let tmp = TempDir::new().unwrap();
    let text = SHORT.replace("omega23 = 1.5e8", "omega23 = 1e14") + "\n[validity]\nadiabatic_factor = 1e-9\n";
    let cfg = write(tmp.path(), "blow.toml", &text);
    let dir = tmp.path().join("out");
    let o = bin().arg("--quiet").arg("--out").arg(&dir).arg("run").arg(&cfg).output().unwrap();
    assert_eq!(code(&o), 2);
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap();
    assert_eq!(json["status"], "integration-failure");
    assert!(json["error"].as_str().unwrap().contains("non-finite"));
    assert!(dir.join("snapshots").is_dir());
}

#[test]
fn environment_overrides_config_and_flag_overrides_environment() {
    let tmp = TempDir::new().unwrap();
    let text = format!("{SHORT}\n[output]\ndir = \"{}\"\n", tmp.path().join("from-config").display());
    let cfg = write(tmp.path(), "c.toml", &text);
    let env_dir = tmp.path().join("from-env");
    let o = bin()
        .env("ATOMLIGHT_OUT", &env_dir)
        .args(["--quiet", "run"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert!(env_dir.join("summary.json").exists());
    assert!(!tmp.path().join("from-config").exists());

    let flag_dir = tmp.path().join("from-flag");
    let o = bin()
        .env("ATOMLIGHT_OUT", &env_dir)
        .arg("--quiet")
        .arg("--out")
        .arg(&flag_dir)
        .arg("oracle")
        .args(["--eta", "0.5", "--r", "2"])
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    let o = bin()
        .env("ATOMLIGHT_OUT", &env_dir)
        .arg("--quiet")
        .arg("--out")
        .arg(&flag_dir)
        .arg("run")
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert!(flag_dir.join("summary.json").exists());
}

#[test]
fn identical_configs_give_identical_outputs() {
    let tmp = TempDir::new().unwrap();
    let a = run_short(&tmp, "a");
    let b = run_short(&tmp, "b");
    for name in ["summary.csv", "summary.json", "detector.csv", "ledger.csv", "snapshots/snapshot_0002.csv"] {
        let (x, y) = (std::fs::read(a.join(name)).unwrap(), std::fs::read(b.join(name)).unwrap());
        assert!(!x.is_empty());
        assert!(x == y, "{name} differs");
    }
}

#[test]
fn run_writes_the_documented_artifacts() {
    let tmp = TempDir::new().unwrap();
    let dir = run_short(&tmp, "out");
    for name in ["summary.csv", "summary.json", "timing.json", "detector.csv", "ledger.csv", "config.toml"] {
        assert!(dir.join(name).is_file(), "missing {name}");
    }
    for name in ["density.svg", "variances.svg", "products.svg"] {
        let svg = std::fs::read_to_string(dir.join(name)).unwrap();
        assert!(svg.starts_with("<svg") || svg.starts_with("<?xml"));
        assert!(!svg.contains("href=\"http"), "{name} is not self-contained");
    }
    let snaps = std::fs::read_dir(dir.join("snapshots")).unwrap().count();
    assert_eq!(snaps, 5);

    let mut rdr = csv::Reader::from_path(dir.join("summary.csv")).unwrap();
    let header = rdr.headers().unwrap().clone();
    assert!(header.iter().any(|h| h.starts_with('t')));
    let first = rdr.records().next().expect("at least one sample").unwrap();
    let digits = first[1]
        .trim_start_matches('-')
        .split(['e', 'E'])
        .next()
        .unwrap()
        .replace('.', "");
    assert_eq!(digits.len(), 17, "{}", &first[1]);

    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap();
    assert_eq!(json["status"], "ok");
    assert!(json["min_product"].as_f64().is_some());
}

#[test]
fn emitted_config_round_trips() {
    let tmp = TempDir::new().unwrap();
    let dir = run_short(&tmp, "out");
    let original = parse_config_str(SHORT).unwrap();
    let emitted = parse_config(&dir.join("config.toml")).unwrap();
    assert_eq!(original.scenario().unwrap(), emitted.scenario().unwrap());
}

#[test]
fn snapshot_flag_sets_the_count() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "short.toml", SHORT);
    let dir = tmp.path().join("out");
    let o = bin()
        .args(["--quiet", "--snapshots", "2", "--out"])
        .arg(&dir)
        .arg("run")
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert_eq!(std::fs::read_dir(dir.join("snapshots")).unwrap().count(), 3);
}

#[test]
fn sweep_rows_cover_every_point_and_metric_even_on_failure() {
    let tmp = TempDir::new().unwrap();
    let text = format!(
        "{SHORT}\n[sweep]\nmetrics = [\"min_product\", \"final_v_y_plus\"]\n\
         [[sweep.axis]]\nname = \"r\"\nvalues = [0.0, 2.0, -1.0]\n\
         [[sweep.axis]]\nname = \"omega23\"\nvalues = [0.75e8, 1.5e8]\n"
    );
    let cfg = write(tmp.path(), "sweep.toml", &text);
    let dir = tmp.path().join("out");
    let o = bin()
        .args(["--quiet", "--workers", "2", "--out"])
        .arg(&dir)
        .arg("sweep")
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let mut rdr = csv::Reader::from_path(dir.join("sweep.csv")).unwrap();
    let header: Vec<String> = rdr.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(header, ["run", "r", "omega23", "metric", "value", "status", "message"]);
    let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 3 * 2 * 2);
    let failed = rows.iter().filter(|r| &r[5] == "failed").count();
    assert_eq!(failed, 2 * 2);
    assert!(dir.join("sweep.svg").is_file());
}

#[test]
fn oracle_sweep_follows_the_closed_form() {
    let tmp = TempDir::new().unwrap();
    let text = "[params]\nomega23 = 0.75e8\nr = 2.0\n[run]\nduration = 0.0\n\
                [sweep]\nmode = \"oracle\"\nmetrics = [\"min_product\"]\n\
                [[sweep.axis]]\nname = \"r\"\nvalues = [0.0, 0.5, 1.0, 2.0, 3.0]\n";
    let cfg = write(tmp.path(), "oracle.toml", text);
    let dir = tmp.path().join("out");
    let o = bin().arg("--quiet").arg("--out").arg(&dir).arg("sweep").arg(&cfg).output().unwrap();
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let mut rdr = csv::Reader::from_path(dir.join("sweep.csv")).unwrap();
    for rec in rdr.records() {
        let rec = rec.unwrap();
        let r: f64 = rec[1].parse().unwrap();
        let v: f64 = rec[3].parse().unwrap();
        let x = (2.0 * r).exp();
        assert!((v - 4.0 / (2.0 + x + 1.0 / x)).abs() < 1e-12);
    }
}

#[test]
fn empty_sweep_is_rejected() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "s.toml", &format!("{SHORT}\n[sweep]\n"));
    let o = bin().arg("sweep").arg(&cfg).output().unwrap();
    assert_eq!(code(&o), 1);
}

#[test]
fn shipped_config_describes_the_reference_parameters() {
    let cfg = parse_config(&Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/paper.toml")).unwrap();
    let s = cfg.scenario().unwrap();
    let p = &s.params;
    assert_eq!(
        (p.m, p.g13, p.delta, p.n_atoms, p.omega_trap, p.probe_flux, p.r),
        (1.4e-25, 2.9e5, 1e11, 1e6, 5.0, 2.9e6, 2.0)
    );
    assert_eq!(p.omega23, 0.75e8);
    assert_eq!(s.duration, 0.04);
}
