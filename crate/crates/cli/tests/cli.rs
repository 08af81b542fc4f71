use std::process::{Command, Output};

use serde_json::Value;

fn nilshift(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nilshift")).args(args).output().expect("binary runs")
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("stdout is not a report ({e}): {}\n{}", String::from_utf8_lossy(&out.stdout), String::from_utf8_lossy(&out.stderr))
    })
}

fn verdict<'a>(r: &'a Value, name: &str) -> &'a Value {
    r["verdicts"].as_array().unwrap().iter().find(|v| v["name"] == name).unwrap_or_else(|| panic!("no verdict {name}"))
}

const X1X2: &str = r#"{"n":2,"p":2,"group":{"p":2,"k":2,"factors":[{"m":2,"filt_exp":[0,0,1,2]}]},"table":[[0],[0],[0],[1]]}"#;
const IDENTITY: &str = r#"{"n":1,"p":2,"group":{"p":2,"k":2,"factors":[{"m":2,"filt_exp":[0,0,1,2]}]},"table":[[0],[1]]}"#;

#[test]
fn space_describes_levels() {
    let out = nilshift(&["space", "--group", "cf:2,2,1", "--rank", "3"]);
    assert!(out.status.success());
    let r = report(&out);
    assert_eq!(r["schema_version"], 1);
    let orders: Vec<&str> = r["results"]["levels"].as_array().unwrap().iter().map(|l| l["order"].as_str().unwrap()).collect();
    assert_eq!(orders, ["4", "4", "2", "1"]);
    assert_eq!(r["results"]["domain"]["size"], 8);
}

#[test]
fn cube_check_and_enumerate() {
    let ok = nilshift(&["cube", "check", "--group", "cf:2,2,1", "--cube", r#"{"n":2,"values":[[0],[1],[1],[2]]}"#]);
    assert!(ok.status.success());
    let bad = nilshift(&["cube", "check", "--group", "cf:2,2,1", "--cube", r#"{"n":2,"values":[[0],[0],[0],[1]]}"#]);
    assert_eq!(bad.status.code(), Some(1));
    assert_eq!(verdict(&report(&bad), "is_cube")["passed"], false);

    let out = nilshift(&["cube", "enumerate", "--group", "cf:2,2,1", "--dim", "3", "--limit", "2"]);
    let r = report(&out);
    assert_eq!(r["results"]["count"], "2048");
    assert_eq!(r["results"]["cubes"].as_array().unwrap().len(), 2);
}

#[test]
fn cube_completion() {
    let out = nilshift(&["cube", "complete", "--group", "cf:2,2,1", "--corner", r#"{"n":2,"values":[[0],[1],[1]]}"#]);
    assert!(out.status.success());
    assert_eq!(report(&out)["results"]["cube"][3], serde_json::json!([2]));
}

#[test]
fn poly_check_reports_witness() {
    let out = nilshift(&["poly", "check", "--poly", X1X2]);
    assert_eq!(out.status.code(), Some(1));
    let r = report(&out);
    assert_eq!(verdict(&r, "morphism_cubes")["passed"], false);
    assert_eq!(verdict(&r, "morphism_derivatives")["passed"], false);
    assert!(verdict(&r, "morphism_derivatives")["witness"].is_string());

    let ok = nilshift(&["poly", "check", "--poly", IDENTITY, "--exhaustive"]);
    assert!(ok.status.success());
    assert_eq!(verdict(&report(&ok), "morphism_cubes")["mode"], "exhaustive");
}

#[test]
fn poly_random_is_seeded_and_taylor_roundtrips() {
    let a = report(&nilshift(&["poly", "random", "--group", "cf:2,3,1", "--rank", "2", "--seed", "11"]));
    let b = report(&nilshift(&["poly", "random", "--group", "cf:2,3,1", "--rank", "2", "--seed", "11"]));
    assert_eq!(a["results"], b["results"]);
    let poly = a["results"]["poly"].to_string();
    let t = nilshift(&["poly", "taylor", "--poly", &poly]);
    assert!(t.status.success());
    assert!(report(&t)["results"]["taylor"]["coefficients"].is_array());
}

#[test]
fn poly_count_matches_known_hom_set() {
    let r = report(&nilshift(&["poly", "count", "--group", "cf:2,2,1", "--rank", "2"]));
    assert_eq!(r["results"]["maps"], 256);
    assert_eq!(r["results"]["morphisms"], 128);
}

#[test]
fn fibration_cover_verify_and_lift() {
    let target = r#"{"p":2,"k":1,"factors":[{"m":1,"filt_exp":[0,0,1]}]}"#;
    let cover = nilshift(&["fib", "cover", "--group", target, "--p", "2", "--k", "2"]);
    assert!(cover.status.success());
    let hom = report(&cover)["results"]["hom"].to_string();

    let verify = nilshift(&["fib", "verify", "--hom", &hom]);
    assert!(verify.status.success(), "{}", String::from_utf8_lossy(&verify.stdout));

    let f = format!(r#"{{"n":1,"p":2,"group":{target},"table":[[0],[1]]}}"#);
    let lift = nilshift(&["fib", "lift", "--hom", &hom, "--poly", &f]);
    assert!(lift.status.success());
    assert_eq!(report(&lift)["results"]["lift"]["table"], serde_json::json!([[0], [1]]));
}

#[test]
fn orbit_commands() {
    let r = report(&nilshift(&["orbit", "run", "--poly", IDENTITY, "--points"]));
    assert_eq!(r["results"]["size"], 2);
    assert_eq!(r["results"]["points"].as_array().unwrap().len(), 2);
    let m = nilshift(&["orbit", "minimal", "--poly", IDENTITY]);
    assert!(m.status.success());
    assert_eq!(report(&m)["results"]["ergodic_measures"].as_array().unwrap().len(), 1);
}

#[test]
fn abramov_with_explicit_observables() {
    let all = nilshift(&["abramov", "--poly", IDENTITY]);
    assert!(all.status.success());
    assert_eq!(report(&all)["results"]["rank"], 2);
    // The trivial character cannot separate the two orbit points.
    let trivial = nilshift(&["abramov", "--poly", IDENTITY, "--obs", "z=0,chi=0"]);
    assert_eq!(trivial.status.code(), Some(1));
    assert_eq!(report(&trivial)["results"]["rank"], 1);
}

#[test]
fn pipeline_and_verify_pass_and_write_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("pipeline.json");
    let status = nilshift(&["pipeline", "--out", out.to_str().unwrap()]);
    assert!(status.status.success());
    let r: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(r["command"], "pipeline");
    assert!(r["verdicts"].as_array().unwrap().iter().all(|v| v["passed"] == true));

    let v = nilshift(&["verify"]);
    assert!(v.status.success(), "{}", String::from_utf8_lossy(&v.stdout));
}

#[test]
fn sweep_from_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sweep.conf");
    std::fs::write(&cfg, "family = coordinate\nn_max = 5\n").unwrap();
    let csv = dir.path().join("sweep.csv");
    let out = nilshift(&["sweep", "--config", cfg.to_str().unwrap(), "--csv", csv.to_str().unwrap()]);
    assert!(out.status.success());
    let table = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(table.lines().next(), Some("n,orbit_size,observable_re,observable_im"));
    assert!(table.lines().skip(1).all(|l| l.split(',').nth(1) == Some("2")));
    assert_eq!(table.lines().count(), 6);
}

#[test]
fn bad_input_exits_with_two() {
    let out = nilshift(&["space", "--group", "cf:4,2,1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, r#"{"unknown_key": 1}"#).unwrap();
    assert_eq!(nilshift(&["pipeline", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
}
