use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn srlb(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_srlb")).args(args).output().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn path(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_str().unwrap().to_owned()
}

fn read_json(path: impl AsRef<Path>) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn gen_plane_example() {
    let dir = TempDir::new().unwrap();
    let file = path(&dir, "i.json");
    let out = srlb(&["gen", "-d", "2", "-n", "16", "-t", "2", "--out", &file]);
    assert!(out.status.success(), "{}", stderr(&out));
    let summary: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(summary["params"]["m"], 8);
    assert_eq!(summary["bound"]["figure_of_merit"]["num"], 8);

    let inst = read_json(&file);
    assert_eq!(inst["params"]["A"], 2);
    assert_eq!(inst["params"]["B"], 4);
    assert_eq!(inst["points"].as_array().unwrap().len(), 16);
    let lines = inst["hyperplanes"].as_array().unwrap();
    assert_eq!(lines.len(), 8);
    assert_eq!(lines[0], serde_json::json!({"a": [1], "b": 1}));
}

#[test]
fn gen_space_example() {
    let dir = TempDir::new().unwrap();
    let file = path(&dir, "i.json");
    let out = srlb(&["gen", "-d", "3", "-n", "96", "-t", "4", "--out", &file]);
    assert!(out.status.success(), "{}", stderr(&out));
    let inst = read_json(&file);
    assert_eq!(inst["points"].as_array().unwrap().len(), 96);
    assert_eq!(inst["hyperplanes"].as_array().unwrap().len(), 128);
}

#[test]
fn gen_rejects_tight_range() {
    let dir = TempDir::new().unwrap();
    let out = srlb(&["gen", "-d", "2", "-n", "4", "-t", "4", "--out", &path(&dir, "x.json")]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("range too tight"), "{}", stderr(&out));
    assert!(!dir.path().join("x.json").exists());
}

#[test]
fn verify_clean_and_corrupted() {
    let dir = TempDir::new().unwrap();
    let file = path(&dir, "i.json");
    assert!(srlb(&["gen", "-d", "3", "-n", "96", "-t", "4", "--out", &file])
        .status
        .success());
    let out = srlb(&["verify", &file]);
    assert!(out.status.success(), "{}", stderr(&out));
    let report: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report["richness_exact"], true);
    assert_eq!(report["k2beta_free"], true);
    assert_eq!(report["beta_bound"], 4);
    assert_eq!(report["richness_histogram"], serde_json::json!({"4": 128}));

    let mut inst = read_json(&file);
    // (1, 1, 3) lies on x3 = 1 + x1 + x2
    assert_eq!(inst["points"][2], serde_json::json!([1, 1, 3]));
    inst["points"][2] = serde_json::json!([1, 1, 40]);
    let broken = path(&dir, "broken.json");
    fs::write(&broken, inst.to_string()).unwrap();
    let out = srlb(&["verify", &broken]);
    assert_eq!(out.status.code(), Some(2));
    let report: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report["richness_exact"], false);
    assert_eq!(report["grid_exact"], false);
}

#[test]
fn verify_params_only_file() {
    let dir = TempDir::new().unwrap();
    let file = path(&dir, "p.json");
    let out = srlb(&["gen", "-d", "2", "-n", "16", "-t", "2", "--params-only", "--out", &file]);
    assert!(out.status.success());
    assert!(read_json(&file).get("points").is_none());
    let report: Value = serde_json::from_str(&stdout(&srlb(&["verify", &file]))).unwrap();
    assert_eq!(report["max_pair_coverage"], 1);
}

#[test]
fn budget_env_var_limits_verify() {
    let dir = TempDir::new().unwrap();
    let file = path(&dir, "i.json");
    assert!(srlb(&["gen", "-d", "2", "-n", "16", "-t", "2", "--out", &file])
        .status
        .success());
    let out = Command::new(env!("CARGO_BIN_EXE_srlb"))
        .args(["verify", &file])
        .env("SRLB_BUDGET", "3")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
    let out = Command::new(env!("CARGO_BIN_EXE_srlb"))
        .args(["verify", &file, "--budget", "1000"])
        .env("SRLB_BUDGET", "3")
        .output()
        .unwrap();
    assert!(out.status.success());
}

#[test]
fn bench_is_reproducible_apart_from_banner() {
    let dir = TempDir::new().unwrap();
    let run = |name: &str| {
        let out = path(&dir, name);
        let res = srlb(&[
            "bench",
            "-d",
            "2",
            "--sizes",
            "1024,4096",
            "--seed",
            "3",
            "--sample-limit",
            "40",
            "--out",
            &out,
        ]);
        assert!(res.status.success(), "{}", stderr(&res));
        let stem = name.trim_end_matches(".csv");
        (
            fs::read_to_string(&out).unwrap(),
            fs::read_to_string(path(&dir, &format!("{stem}.summary.csv"))).unwrap(),
        )
    };
    let (a, a_sum) = run("a.csv");
    let (b, b_sum) = run("b.csv");
    for (x, y) in [(&a, &b), (&a_sum, &b_sum)] {
        assert!(x.starts_with("# "));
        let body = |s: &str| s.lines().skip(1).map(str::to_owned).collect::<Vec<_>>();
        assert_eq!(body(x), body(y));
    }
    let rows: Vec<&str> = a.lines().collect();
    assert_eq!(rows[1], "n,d,query_id,k,nodes_visited,leaves_scanned,points_tested");
    // 40 sampled queries per size, each reporting t points
    assert_eq!(rows.len(), 2 + 80);
    assert!(rows[2].starts_with("1024,2,"));
    assert_eq!(rows[2].split(',').nth(3), Some("16"));
}

#[test]
fn bench_with_query_batch() {
    let dir = TempDir::new().unwrap();
    let batch = path(&dir, "q.json");
    let queries = serde_json::json!([
        {"constraints": [{"normal": [1, 0], "offset": 1, "sense": "le"}]},
        {"constraints": [{"normal": [0, 1], "offset": 2, "sense": "ge"}, {"normal": [0, 1], "offset": 2, "sense": "le"}]}
    ]);
    fs::write(&batch, queries.to_string()).unwrap();
    let out = path(&dir, "s.csv");
    let res = srlb(&[
        "bench",
        "-d",
        "2",
        "--sizes",
        "1024",
        "--queries",
        &batch,
        "--out",
        &out,
    ]);
    assert!(res.status.success(), "{}", stderr(&res));
    let text = fs::read_to_string(&out).unwrap();
    let ks: Vec<&str> = text.lines().skip(2).map(|l| l.split(',').nth(3).unwrap()).collect();
    // x1 <= 1 keeps one column of the 16 × 64 grid; x2 = 2 keeps one row
    assert_eq!(ks, vec!["64", "16"]);
}

#[test]
fn bench_rejects_unsorted_sizes() {
    let dir = TempDir::new().unwrap();
    let res = srlb(&[
        "bench",
        "-d",
        "2",
        "--sizes",
        "4096,1024",
        "--out",
        &path(&dir, "x.csv"),
    ]);
    assert_eq!(res.status.code(), Some(2));
}

#[test]
fn fit_recovers_synthetic_power_law() {
    let dir = TempDir::new().unwrap();
    let file = path(&dir, "s.csv");
    let mut text = String::from(
        "# synthetic\nn,d,t,m,queries,mean_nodes_visited,max_nodes_visited,mean_points_tested,min_k,max_k\n",
    );
    for e in 10..=18 {
        let n = 1u64 << e;
        let y = 3.0 * (n as f64).powf(2.0 / 3.0);
        text.push_str(&format!("{n},3,1,1,1,{y},1,1,1,1\n"));
    }
    fs::write(&file, text).unwrap();
    let out = srlb(&["fit", &file]);
    assert!(out.status.success(), "{}", stderr(&out));
    let fit: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert!((fit["slope"].as_f64().unwrap() - 2.0 / 3.0).abs() < 1e-9);
    assert!((fit["intercept"].as_f64().unwrap() - 3f64.log2()).abs() < 1e-9);
    assert_eq!(fit["points_used"], 9);
}

#[test]
fn fit_needs_three_sizes() {
    let dir = TempDir::new().unwrap();
    let file = path(&dir, "s.csv");
    fs::write(
        &file,
        "n,d,query_id,k,nodes_visited,leaves_scanned,points_tested\n16,2,0,2,5,1,8\n64,2,0,4,9,2,16\n",
    )
    .unwrap();
    let out = srlb(&["fit", &file]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bound_worked_examples() {
    let out = srlb(&["bound", "-d", "3", "-n", "96", "-t", "4"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    let report: Value = serde_json::from_str(lines[0]).unwrap();
    assert_eq!(report["m"], 128);
    assert_eq!(report["beta"], 5);
    assert_eq!(report["exponent"], serde_json::json!({"num": 2, "den": 3}));
    assert_eq!(lines[1], "figure_of_merit = 512/5 (102.400)");
    assert_eq!(lines[2], "exponent = 2/3");
    assert_eq!(lines[3], "implied_query_bound(n = 96, S = 96.0000) = 20.9659");

    let text = stdout(&srlb(&["bound", "-d", "2", "-n", "16", "-t", "2", "--space", "64"]));
    assert!(text.contains("figure_of_merit = 8 (8.00000)"), "{text}");
    assert!(
        text.contains("implied_query_bound(n = 16, S = 64.0000) = 2.00000"),
        "{text}"
    );
}

#[test]
fn missing_file_is_io_error() {
    let out = srlb(&["verify", "/nonexistent/instance.json"]);
    assert_eq!(out.status.code(), Some(1));
}
