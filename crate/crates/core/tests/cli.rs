use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_ocean-rays");

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn run(args: &[&str], out: &Path) -> Output {
    Command::new(BIN)
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("OCEAN_RAYS_CONFIG")
        .env_remove("OCEAN_RAYS_OUT")
        .env_remove("OCEAN_RAYS_THREADS")
        .env_remove("OCEAN_RAYS_SEED")
        .output()
        .expect("binary runs")
}

fn config_arg(name: &str) -> String {
    configs().join(name).to_string_lossy().into_owned()
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(String::from).collect())
        .collect();
    (header, rows)
}

fn column(rows: &[Vec<String>], i: usize) -> Vec<f64> {
    rows.iter().map(|r| r[i].parse().unwrap()).collect()
}

#[test]
fn every_csv_has_its_documented_header() {
    let dir = tempfile::tempdir().unwrap();
    let cases: &[(&str, &str, &str, &str)] = &[
        ("trace", "betaplane.toml", "trajectory.csv", "t,x1,xi1,x2,xi2,tau"),
        ("classify", "signed_zonal.toml", "classification.csv", "x1,xi1,x2,xi2,tau,class,T_or_x2inf,margin"),
        ("scan", "betaplane.toml", "scan.csv", "xi1,x2_0,xi2_0,tau,class,margin,drift,trapped,error"),
        ("surface", "betaplane.toml", "surface.csv", "x2,xi2_plus,xi2_minus,V"),
        ("eigs", "betaplane.toml", "eigs.csv", "n,lambda"),
        ("dispersion", "betaplane.toml", "dispersion.csv", "xi1,n,tau_minus,tau_R,tau_plus"),
        ("transport", "poincare.toml", "ensemble.csv", "t,x1,xi1,x2,xi2,weight,status"),
        ("transport", "poincare.toml", "mass.csv", "t,mass"),
        ("lambda-per", "jet.toml", "g_samples.csv", "xi1,G"),
        ("lambda-sing", "signed_zonal.toml", "lambda_sing.csv", "t,x1,xi1,x2,xi2,tau"),
    ];
    for (cmd, cfg, file, header) in cases {
        let out = dir.path().join(cmd);
        let o = run(&[cmd, "--config", &config_arg(cfg)], &out);
        assert!(o.status.success(), "{cmd}: {}", String::from_utf8_lossy(&o.stderr));
        let text = fs::read_to_string(out.join(file)).unwrap();
        assert_eq!(text.lines().next().unwrap(), *header, "{file}");
        assert!(out.join(format!("{file}.meta.json")).exists());
    }
}

#[test]
fn trace_of_the_trapped_circle_keeps_x1_fixed() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["trace", "--config", &config_arg("betaplane.toml")], dir.path());
    assert!(o.status.success());
    let (_, rows) = read_csv(&dir.path().join("trajectory.csv"));
    assert_eq!(rows.len(), 1001);
    let x1 = column(&rows, 1);
    let range = x1.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - x1.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(range < 1e-5, "{range}");
    assert_eq!(column(&rows, 0).last(), Some(&1000.0));
    // seventeen significant digits
    assert!(rows[1][3].trim_start_matches('-').split('e').next().unwrap().len() == 18);
}

#[test]
fn scan_emits_one_row_per_grid_point() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["scan", "--config", &config_arg("betaplane.toml")], dir.path());
    assert!(o.status.success());
    let (_, rows) = read_csv(&dir.path().join("scan.csv"));
    assert_eq!(rows.len(), 3 * 5 * 5);
    let meta: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("scan.csv.meta.json")).unwrap()).unwrap();
    assert_eq!(meta["command"], "scan");
    assert_eq!(meta["rows"], 75);
    assert_eq!(meta["config"]["scan"]["x2_0"]["count"], 5);
    assert!(meta["versions"]["ocean-rays"].is_string());
    assert!(meta["wall_time_seconds"].as_f64().unwrap() >= 0.0);
}

#[test]
fn malformed_config_exits_two_and_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    let out = dir.path().join("out");
    for text in ["treads = 2\n", "[trace\nhorizon = 1", "threads = 0\n", "[integrator]\nabs = -1.0\nrel = 1e-9\n"] {
        fs::write(&bad, text).unwrap();
        let o = run(&["trace", "--config", bad.to_str().unwrap()], &out);
        assert_eq!(o.status.code(), Some(2), "{text}");
        assert!(!out.exists());
    }
    let o = run(&["trace", "--config", "/nonexistent/config.toml"], &out);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn domain_errors_exit_one_and_name_the_module() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = run(&["lambda-sing", "--config", &config_arg("betaplane.toml")], &out);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("trapping:"));
    assert!(!out.exists() || fs::read_dir(&out).unwrap().next().is_none());
}

#[test]
fn outputs_are_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let mut files = Vec::new();
    for threads in ["1", "3"] {
        let out = dir.path().join(threads);
        for (cmd, cfg) in [("scan", "betaplane.toml"), ("transport", "poincare.toml")] {
            let o = run(&[cmd, "--config", &config_arg(cfg), "--threads", threads], &out);
            assert!(o.status.success());
        }
        files.push(out);
    }
    for name in ["scan.csv", "ensemble.csv", "mass.csv"] {
        assert_eq!(
            fs::read(files[0].join(name)).unwrap(),
            fs::read(files[1].join(name)).unwrap(),
            "{name}"
        );
    }
}

#[test]
fn environment_mirrors_flags() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("env");
    let o = Command::new(BIN)
        .arg("transport")
        .env("OCEAN_RAYS_CONFIG", config_arg("poincare.toml"))
        .env("OCEAN_RAYS_OUT", &out)
        .env("OCEAN_RAYS_SEED", "7")
        .env("OCEAN_RAYS_THREADS", "2")
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let meta: serde_json::Value =
        serde_json::from_slice(&fs::read(out.join("ensemble.csv.meta.json")).unwrap()).unwrap();
    assert_eq!(meta["config"]["seed"], 7);
    assert_eq!(meta["config"]["threads"], 2);
    assert!(meta["notes"][0].as_str().unwrap().contains("heuristic"));
}

#[test]
fn report_subcommands_write_json() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["critper", "--config", &config_arg("betaplane.toml")], dir.path());
    assert!(o.status.success());
    let v: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("critper.json")).unwrap()).unwrap();
    assert!((v["critper"].as_f64().unwrap() + 0.25 * std::f64::consts::PI).abs() < 1e-8);
    let o = run(&["modes", "--config", &config_arg("betaplane.toml")], dir.path());
    assert!(o.status.success());
    let v: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("modes.json")).unwrap()).unwrap();
    assert!(v["max_identity_defect"].as_f64().unwrap() < 1e-12);
}
