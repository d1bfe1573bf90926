use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use loewner_lft::c64;
use loewner_lft::cli::formats::{load_realization, read_manifest, save_realization, GRID_HEADER};
use loewner_lft::evaluate::{EvalConfig, ParameterSlice};
use loewner_lft::loewner::{build_pencil, Partition};
use loewner_lft::models::builtin;
use serde_json::Value;

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_loewner-lft"))
        .args(args)
        .env_remove("LOEWNER_LFT_THREADS")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn value00(v: &Value) -> c64 {
    let z = &v["value"][0][0];
    c64::new(z[0].as_f64().unwrap(), z[1].as_f64().unwrap())
}

fn interpolate(dir: &Path, builtin_name: &str, uniform: &str) -> Value {
    let out = bin(&["interpolate", "--builtin", builtin_name, "--uniform", uniform, "-o", dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn interpolate_eval_and_true_eval() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("toy");
    let m = interpolate(&dir, "toy", "0,100,4");
    assert_eq!(m["r"], 6);
    assert_eq!(m["pencil_shape"], serde_json::json!([8, 8]));
    assert_eq!(m["partition"]["left_indices"], serde_json::json!([0, 2]));
    assert_eq!(m["singular_values_row"].as_array().unwrap().len(), 8);
    assert!(!m["warnings"].as_array().unwrap().is_empty());

    let d = dir.to_str().unwrap();
    let got = json(&bin(&["eval", "-r", d, "--s", "1i", "-p", "0"]));
    let want = json(&bin(&["true-eval", "--builtin", "toy", "--s", "1i", "-p", "0"]));
    assert!((value00(&got) - value00(&want)).norm() <= 1e-8 * value00(&want).norm());

    assert_eq!(json(&bin(&["eval", "-r", d, "--s", "0", "-p", "20"]))["formula"], "schur_zero");
    assert_eq!(json(&bin(&["eval", "-r", d, "--omega", "0.01", "-p", "20"]))["formula"], "precise");
    assert_eq!(json(&bin(&["eval", "-r", d, "--omega", "10000", "-p", "20"]))["formula"], "compact");
}

#[test]
fn polynomial_rank_eleven() {
    let tmp = tempfile::tempdir().unwrap();
    let m = interpolate(&tmp.path().join("poly"), "polynomial", "0,100,8");
    assert_eq!(m["r"], 11);
}

#[test]
fn grid_csv_contract_and_thread_independence() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("toy");
    interpolate(&dir, "toy", "0,100,4");
    let d = dir.to_str().unwrap();
    let mut csvs = Vec::new();
    for threads in ["1", "3"] {
        let path = tmp.path().join(format!("g{threads}.csv"));
        let out = bin(&[
            "grid", "-r", d, "--builtin", "toy", "--uniform", "5,95,10", "--omega-count", "50",
            "--threads", threads, "-o", path.to_str().unwrap(),
        ]);
        assert!(out.status.success());
        assert!(String::from_utf8_lossy(&out.stdout).contains("max delta"));
        csvs.push(fs::read_to_string(path).unwrap());
    }
    assert_eq!(csvs[0], csvs[1]);
    let lines: Vec<&str> = csvs[0].lines().collect();
    assert_eq!(lines[0], GRID_HEADER);
    assert_eq!(lines.len(), 1 + 50 * 10);
    let first: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(first.len(), 5);
    assert_eq!(first[0].parse::<f64>().unwrap(), 1e-2);
    assert_eq!(first[1].parse::<f64>().unwrap(), 5.0);
    assert_eq!(first[0].split('e').next().unwrap().len(), 18);
    // omega is the outer index
    assert_eq!(lines[2].split(',').next(), lines[1].split(',').next());
    let mut max_delta = 0.0f64;
    for l in &lines[1..] {
        let f: Vec<&str> = l.split(',').collect();
        max_delta = max_delta.max(f[2].parse().unwrap());
        assert!(["compact", "precise"].contains(&f[3]));
    }
    assert!(max_delta <= 1e-6 * 1.5);
}

#[test]
fn ranks_case_studies() {
    let toy = json(&bin(&["ranks", "--builtin", "toy", "--left", "0.5,1.5", "--right", "2,4"]));
    assert_eq!((toy["rank_L"].as_u64(), toy["rank_Ls"].as_u64(), toy["bound_Ls"].as_u64()), (Some(2), Some(6), Some(8)));
    assert_eq!(toy["holds"], serde_json::json!([true, true]));
    let m = json(&bin(&["ranks", "--builtin", "toy_modified", "--left", "0.5,1.5", "--right", "2,4"]));
    assert_eq!((m["rank_L"].as_u64(), m["bound_Ls"].as_u64()), (Some(3), Some(10)));
    let p = json(&bin(&["ranks", "--builtin", "polynomial", "--left", "0.5,1.5,2.5,3.5", "--right", "2,4,6,8"]));
    assert_eq!(
        (p["rank_L"].as_u64(), p["rank_Ls"].as_u64(), p["bound_L"].as_u64(), p["bound_Ls"].as_u64()),
        (Some(8), Some(11), Some(14), Some(25))
    );
}

#[test]
fn model_and_snapshot_files() {
    let tmp = tempfile::tempdir().unwrap();
    let model = tmp.path().join("toy.json");
    fs::write(
        &model,
        r#"{"n": 3, "n_i": 1, "n_o": 1, "degree": 1, "gamma": [
            {"csv": "-2,0,0,1; 0,-1,0,0; 0,0,-1,1; 1,0,1,0"},
            {"csv": "0,1,0,0; -1,0,0,0; 0,0,0,0; 0,0,0,0"}]}"#,
    )
    .unwrap();
    let r = json(&bin(&["ranks", "--model", model.to_str().unwrap(), "--left", "0.5,1.5", "--right", "2,4"]));
    assert_eq!(r["rank_Ls"], 6);

    let toy = builtin("toy").unwrap();
    let snaps: Vec<Value> = [0.0, 100.0 / 3.0, 200.0 / 3.0, 100.0]
        .iter()
        .enumerate()
        .map(|(k, &p)| {
            let file = format!("g{k}.bin");
            loewner_lft::cli::formats::write_matrix_bin(&tmp.path().join(&file), &toy.eval_g(p)).unwrap();
            serde_json::json!({"p": p, "g": {"file": file, "rows": 4, "cols": 4}})
        })
        .collect();
    let snap_file = tmp.path().join("snaps.json");
    fs::write(&snap_file, serde_json::json!({"n": 3, "n_i": 1, "n_o": 1, "snapshots": snaps}).to_string()).unwrap();
    let out_dir = tmp.path().join("from_snaps");
    let out = bin(&["interpolate", "--snapshots", snap_file.to_str().unwrap(), "-o", out_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(read_manifest(&out_dir).unwrap().r, 6);

    let out = bin(&["ranks", "--snapshots", snap_file.to_str().unwrap(), "--left", "0,66.66666666666667", "--right", "33.333333333333336,100"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("coefficients"));
}

#[test]
fn error_paths() {
    let tmp = tempfile::tempdir().unwrap();
    let o = tmp.path().join("x");
    let out = bin(&["interpolate", "--builtin", "toy", "--params", "3", "-o", o.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("need at least 2 distinct parameters"));
    let out = bin(&["interpolate", "--builtin", "toy", "--params", "1,2,1", "-o", o.to_str().unwrap()]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("duplicate"));
    let out = bin(&["interpolate", "--builtin", "nope", "--params", "1,2", "-o", o.to_str().unwrap()]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("penzl"));
    let out = bin(&["builtin-list"]);
    assert!(String::from_utf8_lossy(&out.stdout).lines().count() == 4);
}

#[test]
fn saved_realization_evaluates_bit_for_bit() {
    let toy = builtin("polynomial").unwrap();
    let params = loewner_lft::evaluate::linspace(0.0, 100.0, 8);
    let set = toy.snapshots(&params).unwrap();
    let pencil = build_pencil(&set, &Partition::alternating(&params).unwrap()).unwrap();
    let real = pencil.realize(11).unwrap();
    let tmp = tempfile::tempdir().unwrap();
    save_realization(tmp.path(), &real).unwrap();
    let back = load_realization(tmp.path()).unwrap();
    let cfg = EvalConfig::default();
    for (w, p) in [(0.0, 3.0), (0.05, 12.5), (30.0, 77.0), (1e4, 50.0)] {
        let s = c64::new(0.0, w);
        let a = ParameterSlice::new(&real, p).eval(s, &cfg).unwrap();
        let b = ParameterSlice::new(&back, p).eval(s, &cfg).unwrap();
        assert_eq!(a.formula, b.formula);
        assert_eq!(a.value[(0, 0)].re.to_bits(), b.value[(0, 0)].re.to_bits());
        assert_eq!(a.value[(0, 0)].im.to_bits(), b.value[(0, 0)].im.to_bits());
    }
}
