use std::path::Path;
use std::process::{Command, Output};

fn tcat(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tcat"))
        .arg("--out-dir")
        .arg(dir)
        .args(args)
        .env_remove("TCAT_OUT_DIR")
        .env_remove("TCAT_WORKERS")
        .output()
        .unwrap()
}

fn ok(out: Output) -> Output {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    out
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap()
}

fn csv_rows(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|x| x.unwrap().iter().map(String::from).collect()).collect();
    (header, rows)
}

#[test]
fn map_couplings_example() {
    let dir = tempfile::tempdir().unwrap();
    ok(tcat(dir.path(), &["map-couplings", "--noise", "rotation", "--R", "0.5", "--theta", "0", "--phi", "0"]));
    let v = json(&dir.path().join("map-couplings.json"));
    let c = &v["couplings"];
    assert!((c["j1"].as_f64().unwrap() - 1.0 / 3.0).abs() < 1e-15);
    assert!((c["j2"].as_f64().unwrap() + 1.0 / 3.0).abs() < 1e-15);
    assert!((c["k"].as_f64().unwrap() - 1.0).abs() < 1e-15);
    assert_eq!(v["provenance"]["command"], "map-couplings");
}

#[test]
fn coherent_info_example() {
    let dir = tempfile::tempdir().unwrap();
    ok(tcat(dir.path(), &["coherent-info", "--torus", "3x3", "--noise", "rotation", "--axis", "y", "--R", "0.0"]));
    let v = json(&dir.path().join("coherent-info.json"));
    let ic2 = v["ic2"].as_f64().unwrap();
    assert!((ic2 - 2.0 * std::f64::consts::LN_2).abs() < 1e-12, "{ic2}");
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let code = |args: &[&str]| tcat(dir.path(), args).status.code();
    assert_eq!(code(&["map-couplings", "--noise", "rotation", "--axis", "z", "--R", "1.5"]), Some(2));
    assert_eq!(code(&["no-such-command"]), Some(2));
    assert_eq!(code(&["coherent-info", "--torus", "12x2", "--noise", "ampdamp", "--gamma", "0.1"]), Some(2));
    assert_eq!(code(&["ctmrg-point", "--noise", "ampdamp", "--gamma", "0.1", "--D", "2"]), Some(2));
    assert_eq!(code(&["fit-beta"]), Some(2));
    assert_eq!(code(&["staggered-vertex", "--R", "0.5", "--lx", "4", "--ly", "4"]), Some(0));
}

#[test]
fn ampdamp_sweep_is_symmetric_and_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["--deterministic", "sweep", "--preset", "ampdamp-line", "--gamma", "0:1:11", "--D", "8", "--tol", "1e-9"];
    ok(tcat(dir.path(), &args));
    let csv_path = dir.path().join("sweep.csv");
    let first = std::fs::read(&csv_path).unwrap();
    let first_json = std::fs::read(dir.path().join("sweep.json")).unwrap();
    assert!(dir.path().join("sweep.dat").exists());

    let (header, rows) = csv_rows(&csv_path);
    assert_eq!(rows.len(), 11);
    let col = |name: &str| header.iter().position(|h| h == name).unwrap();
    let (ms_re, ms_im, mst_re, mst_im, xi) =
        (col("m_s_re"), col("m_s_im"), col("m_stau_re"), col("m_stau_im"), col("xi"));
    let f = |s: &String| s.parse::<f64>().unwrap();
    let abs = |row: &Vec<String>, re, im| f(&row[re]).hypot(f(&row[im]));
    for (a, b) in rows.iter().zip(rows.iter().rev()) {
        assert!((abs(a, ms_re, ms_im) - abs(b, mst_re, mst_im)).abs() < 1e-7, "{a:?} / {b:?}");
        if row_is_finite(&a[xi]) {
            assert!((f(&a[xi]) - f(&b[xi])).abs() < 1e-6 * (1.0 + f(&a[xi])));
        }
    }

    ok(tcat(dir.path(), &args));
    assert_eq!(std::fs::read(&csv_path).unwrap(), first);
    assert_eq!(std::fs::read(dir.path().join("sweep.json")).unwrap(), first_json);

    // the JSON provenance block is a config of its own
    let again = tempfile::tempdir().unwrap();
    let prov = dir.path().join("sweep.json");
    ok(tcat(again.path(), &["--config", prov.to_str().unwrap(), "sweep"]));
    assert_eq!(std::fs::read(again.path().join("sweep.csv")).unwrap(), first);
}

fn row_is_finite(s: &str) -> bool {
    s.parse::<f64>().map(f64::is_finite).unwrap_or(false)
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "[noise]\nnoise = \"rotation\"\naxis = \"z\"\nR = 0.25\n").unwrap();
    let cfg = cfg.to_str().unwrap();
    ok(tcat(dir.path(), &["--config", cfg, "map-couplings"]));
    let k = json(&dir.path().join("map-couplings.json"))["couplings"]["j1"].as_f64().unwrap();
    assert!((k - 0.25 / 1.75).abs() < 1e-15);
    ok(tcat(dir.path(), &["--config", cfg, "map-couplings", "--R", "0.5"]));
    let k = json(&dir.path().join("map-couplings.json"))["couplings"]["j1"].as_f64().unwrap();
    assert!((k - 0.5 / 1.5).abs() < 1e-15);
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "[noise]\nradius = 3\n").unwrap();
    assert_eq!(tcat(dir.path(), &["--config", bad.to_str().unwrap(), "map-couplings"]).status.code(), Some(2));
}

#[test]
fn output_directory_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_tcat"))
        .current_dir(dir.path())
        .env("TCAT_OUT_DIR", dir.path().join("results"))
        .args(["--name", "dual", "map-couplings", "--noise", "rotation", "--R", "0.3", "--theta", "1.5707963267948966", "--phi", "0.7853981633974483"])
        .output()
        .unwrap();
    let out = ok(out);
    assert!(dir.path().join("results/dual.json").exists(), "{}", String::from_utf8_lossy(&out.stdout));
    let v = json(&dir.path().join("results/dual.json"));
    assert!(v["self_duality_residual"].as_f64().unwrap() < 1e-12);
}
