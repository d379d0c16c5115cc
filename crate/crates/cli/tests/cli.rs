use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> String {
    root().join("fixtures").join(format!("{name}.json")).display().to_string()
}

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cpdual")).args(args).output().expect("binary runs")
}

fn json(args: &[&str]) -> (Value, i32) {
    let out = run(args);
    let v = serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stderr)));
    (v, out.status.code().unwrap())
}

fn section<'a>(r: &'a Value, title: &str) -> &'a Value {
    r["sections"].as_array().unwrap().iter().find(|s| s["title"].as_str().unwrap().starts_with(title)).unwrap()
}

#[test]
fn kgroups_of_fixtures() {
    let (o2, code) = json(&["kgroups", &fixture("o2")]);
    assert_eq!(code, 0);
    for row in section(&o2, "K-groups")["data"]["k_theory"].as_array().unwrap() {
        assert_eq!((row["K0"].as_str(), row["K1"].as_str()), (Some("0"), Some("0")));
    }
    let (l, _) = json(&["kgroups", &fixture("loop")]);
    let d = &section(&l, "K-groups")["data"];
    for row in d["k_theory"].as_array().unwrap() {
        assert_eq!((row["K0"].as_str(), row["K1"].as_str()), (Some("Z"), Some("Z")));
    }
    assert_eq!(d["k_homology"][0]["K^0"], "Z");
    let (s, _) = json(&["kgroups", &fixture("suq2")]);
    assert_eq!(section(&s, "K-groups")["data"]["k_theory"][0]["K0"], "Z");
    assert_eq!(s["fixtures"][0]["sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn duality_reports() {
    let (b, code) = json(&["duality", &fixture("bridge")]);
    assert_eq!(code, 0);
    let duals = section(&b, "Duality")["data"]["duals"].as_array().unwrap();
    assert!(duals.iter().all(|d| d["theta"]["certified"] == true));
    let (o2, code) = json(&["duality", &fixture("o2"), "--dual", "eop"]);
    assert_eq!(code, 0);
    assert_eq!(section(&o2, "Duality")["data"]["duals"].as_array().unwrap().len(), 1);
    let (p, code) = json(&["duality", &fixture("bridge"), "--perturb-rung"]);
    assert_eq!(code, 1);
    let failing: Vec<&str> = section(&p, "Duality with")["checks"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["ok"] == false)
        .map(|c| c["name"].as_str().unwrap())
        .collect();
    assert!(failing.contains(&"Eop even rung square"), "{failing:?}");
}

#[test]
fn corrupted_fixture_names_the_problem() {
    let dir = std::env::temp_dir().join(format!("cpdual-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let bad = dir.join("bad.json");
    std::fs::write(&bad, r#"{"vertices":["v"],"edges":[{"name":"e","src":"v","dst":"nowhere"}]}"#).unwrap();
    let out = run(&["kgroups", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nowhere"));
    let source = dir.join("source.json");
    std::fs::write(&source, r#"{"vertices":["a","b"],"edges":[{"name":"e","src":"a","dst":"b"},{"name":"f","src":"b","dst":"b"}]}"#).unwrap();
    let out = run(&["duality", source.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("`a`"));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn assumptions_of_quantum_su2() {
    let (r, code) = json(&["assumptions", &fixture("suq2")]);
    assert_eq!(code, 0);
    let v = &section(&r, "Assumptions")["data"]["verdicts"];
    assert_eq!(v["assumption_one"], true);
    let x = v["min_poly_exponent"].as_f64().unwrap();
    assert!((0.8..=1.2).contains(&x));
    assert_eq!(v["super_strong"], false);
    assert_eq!(v["witness"]["vertex"], "w");
    assert_eq!(v["witness"]["first"][0], "f");
    assert_eq!(v["witness"]["second"][0], "g");
}

#[test]
fn fock_verify_decay_table() {
    let (r, code) = json(&["fock-verify", &fixture("o2"), "--level", "8"]);
    assert_eq!(code, 0, "{r}");
    let rows = section(&r, "Commutator decay")["data"]["rows"].as_array().unwrap();
    let ratios: Vec<f64> = rows.iter().map(|x| x["ratio"].as_f64().unwrap()).collect();
    assert_eq!(rows.last().unwrap()["l"], 6);
    assert!(ratios.windows(2).all(|w| w[1] > w[0]), "{ratios:?}");
    assert_eq!(r["config"]["truncation"]["fock_level"], 8);
    let (r2, _) = json(&["fock-verify", "--graph", &fixture("loop"), "--level", "5", "--tol", "1e-9"]);
    assert_eq!(r2["config"]["tolerances"]["float"], 1e-9);
}

#[test]
fn index_of_the_shift() {
    let (r, code) = json(&["index", "--theta", "0.3", "--window", "64", "U"]);
    assert_eq!(code, 0);
    let p = &section(&r, "Index pairing")["data"]["pairing"];
    assert_eq!(p["index"].as_i64().unwrap().abs(), 1);
    assert_eq!(p["stable"], true);
    let (r, _) = json(&["index", "--modes", "1", "U^2"]);
    assert_eq!(section(&r, "Index pairing")["data"]["pairing"]["index"].as_i64().unwrap().abs(), 2);
    let out = run(&["index", "Q"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn config_file_and_overrides() {
    let dir = std::env::temp_dir().join(format!("cpdual-cfg-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = dir.join("run.toml");
    std::fs::write(&cfg, "seed = 5\n[truncation]\nwindow = 16\nmodes = 2\ntheta = \"0.25\"\n").unwrap();
    let (r, _) = json(&["index", "--config", cfg.to_str().unwrap(), "--modes", "4", "W"]);
    assert_eq!(r["config"]["seed"], 5);
    assert_eq!(r["config"]["truncation"]["window"], 16);
    assert_eq!(r["config"]["truncation"]["modes"], 4);
    assert_eq!(r["config"]["truncation"]["theta"], "0.25");
    std::fs::write(&cfg, "[truncation]\nwindow = 0\n").unwrap();
    assert_eq!(run(&["index", "--config", cfg.to_str().unwrap(), "U"]).status.code(), Some(2));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn output_is_deterministic() {
    let args = ["assumptions", &fixture("fibonacci")];
    let a = run(&args).stdout;
    let b = run(&args).stdout;
    assert_eq!(a, b);
    let md = run(&["kgroups", &fixture("o3"), "--format", "md"]);
    let text = String::from_utf8(md.stdout).unwrap();
    assert!(text.starts_with("# cpdual kgroups"));
    assert!(text.contains("| O_E | Z/2 | 0 |"), "{text}");
}
