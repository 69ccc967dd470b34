use std::path::Path;
use std::process::{Command, Output};

fn levelset(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_levelset")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn status_of(table: &str, name: &str) -> String {
    table.lines().find(|l| l.starts_with(&format!("{name},"))).unwrap().split(',').nth(1).unwrap().to_string()
}

#[test]
fn sigma_prints_versioned_json() {
    let o = levelset(&["sigma", "--model", "gauss2d", "--alpha", "0.95", "--kernel", "box"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["command"], "sigma");
    assert_eq!(v["config"]["common"]["alpha"], 0.95);
    let s2 = v["result"]["sigma2"].as_f64().unwrap();
    assert!((s2 - 20.780_07).abs() < 1e-3, "{s2}");
    let mean_limit = &v["result"]["mean_limit_constant"];
    assert!((mean_limit["closed"].as_f64().unwrap() - mean_limit["general"].as_f64().unwrap()).abs() < 1e-9);
    assert!(v["result"]["norming_form"].is_string());
}

#[test]
fn sigma_reports_norming_for_a_sample_size() {
    let o = levelset(&["sigma", "--alpha", "0.9", "--n", "10000", "--h-volume", "0.01", "--weight", "excess:1"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let a = v["result"]["norming"].as_f64().unwrap();
    assert!((a - (1e6f64).powf(0.25) * 10.0).abs() < 1e-9 * a, "{a}");
    assert_eq!(v["resolved"]["gamma_source"], "proxy");
}

#[test]
fn sim_without_seed_is_a_usage_error() {
    let o = levelset(&["sim", "--n", "100"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("--seed"), "{}", stderr(&o));
}

#[test]
fn conflicting_level_flags_are_a_usage_error() {
    let o = levelset(&["sigma", "--alpha", "0.9", "--c", "0.05"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn unknown_flag_is_a_usage_error() {
    assert_eq!(levelset(&["check", "--bogus"]).status.code(), Some(1));
}

#[test]
fn three_column_data_against_a_planar_model_fails() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("pts.csv");
    std::fs::write(&path, "x,y,z\n0.1,0.2,0.3\n0.0,0.5,1.0\n").unwrap();
    let o = levelset(&["estimate", "--data", path.to_str().unwrap(), "--h-volume", "0.05"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).to_lowercase().contains("dimension"), "{}", stderr(&o));
}

#[test]
fn estimate_from_simulated_sample() {
    let o = levelset(&["estimate", "--n", "2000", "--seed", "4", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["resolved"]["integrator"], "scan");
    assert!(v["result"]["value"].as_f64().unwrap() > 0.0);
    assert_eq!(stdout(&o), stdout(&levelset(&["estimate", "--n", "2000", "--seed", "4", "--format", "json"])));
}

#[test]
fn check_tables() {
    let o = levelset(&["check", "--model", "gauss2d", "--alpha", "0.95"]);
    assert_eq!(o.status.code(), Some(0));
    let t = stdout(&o);
    assert!(t.starts_with("assumption,status,detail\n"));
    assert!(t.lines().skip(1).all(|l| l.split(',').nth(1) == Some("pass")), "{t}");

    let t = stdout(&levelset(&["check", "--n", "100", "--h-volume", "0.5", "--c", "0.05"]));
    assert_eq!(status_of(&t, "bandwidth gamma"), "warn");

    let o = levelset(&["check", "--c", "0.5"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(status_of(&stdout(&o), "level window"), "fail");
}

fn read_dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

#[test]
fn sim_outputs_do_not_depend_on_threads() {
    let runs: Vec<_> = ["1", "3"]
        .iter()
        .map(|t| {
            // same relative output path, since the configuration is embedded
            let dir = tempfile::tempdir().unwrap();
            let o = Command::new(env!("CARGO_BIN_EXE_levelset")).current_dir(dir.path()).args([
                "--threads",
                t,
                "sim",
                "--n",
                "1000,2000",
                "--reps",
                "12",
                "--seed",
                "3",
                "--mode",
                "both",
                "--alphas",
                "0.5",
                "--out-dir",
                "out",
            ])
            .output()
            .unwrap();
            assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
            read_dir_bytes(&dir.path().join("out"))
        })
        .collect();
    let names: Vec<&str> = runs[0].iter().map(|(n, _)| n.as_str()).collect();
    assert_eq!(names, ["records_fixed.csv", "records_poisson.csv", "summary.json"]);
    assert_eq!(runs[0], runs[1]);
    let header = String::from_utf8(runs[0][0].1.clone()).unwrap();
    assert!(header.starts_with("n,h,rep,seed,dG,std_dG,runtime_ms\n"));
}

#[test]
fn online_test_against_a_model() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("batch.csv");
    let mut text = String::from("x,y\n");
    let pts = levelset_clt::models::sample(&levelset_clt::models::make_gauss2d(), 3000, 12);
    for p in pts.iter() {
        text.push_str(&format!("{},{}\n", p[0], p[1]));
    }
    std::fs::write(&path, text).unwrap();
    let batch = format!("csv:{}", path.display());
    let args = ["test", "--reference", "model:gauss2d", "--batch", &batch, "--reps", "40", "--seed", "1"];
    let o = levelset(&args);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    for key in ["z", "reject", "c", "mean", "sigma"] {
        assert!(!v["result"][key].is_null(), "{key} missing");
    }
    assert_eq!(stdout(&o), stdout(&levelset(&args)));
}

#[test]
fn variance_reports_subsamples() {
    let o = levelset(&["variance", "--n", "5000", "--seed", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["result"]["m_n"], 389);
    assert_eq!(v["result"]["subsamples"], 12);
    assert!(v["result"]["estimate"].as_f64().unwrap() > 0.0);
}
