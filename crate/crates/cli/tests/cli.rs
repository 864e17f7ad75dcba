//! Drives the `hwa-ldpc` binary end to end.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hwa-ldpc")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn write_params(dir: &Path) -> String {
    let path = dir.join("toy.params");
    fs::write(&path, "# small ensemble\np=127\nN0=2\ndc=5,5\nbq=2,1\n").unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn keygen_encrypt_decrypt_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let params = write_params(dir.path());
    let keys = dir.path().join("keys");
    let keys = keys.to_str().unwrap();
    ok(&["keygen", "--params", &params, "--seed", "4", "--out", keys]);
    let (private, public) = (format!("{keys}/private.key"), format!("{keys}/public.key"));

    let msg: String = (0..127).map(|i| if i % 3 == 0 { '1' } else { '0' }).collect();
    let msg_path = dir.path().join("msg.txt");
    fs::write(&msg_path, &msg).unwrap();
    let ct = dir.path().join("ct.txt");
    ok(&["encrypt", "--pub", &public, "--msg", msg_path.to_str().unwrap(), "--errors", "3", "--seed", "1", "--out", ct.to_str().unwrap()]);
    assert!(fs::read_to_string(&ct).unwrap().starts_with("e=3\n"));

    for (strategy, alg) in [("proto", "spa"), ("mdpc", "tmp"), ("basic", "spa")] {
        let out = ok(&["decrypt", "--priv", &private, "--pub", &public, "--ct", ct.to_str().unwrap(), "--strategy", strategy, "--alg", alg]);
        assert_eq!(out.trim(), msg, "{strategy}/{alg}");
    }
}

#[test]
fn wrong_message_length_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let params = write_params(dir.path());
    let keys = dir.path().join("k");
    ok(&["keygen", "--params", &params, "--out", keys.to_str().unwrap()]);
    let msg = dir.path().join("m");
    fs::write(&msg, "0101").unwrap();
    let out = run(&["encrypt", "--pub", keys.join("public.key").to_str().unwrap(), "--msg", msg.to_str().unwrap(), "--errors", "1"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("expected k = 127"));
}

#[test]
fn simulate_writes_reproducible_csv() {
    let dir = tempfile::tempdir().unwrap();
    let params = write_params(dir.path());
    let args = ["simulate", "--params", &params, "--strategy", "proto", "--e", "2:10:4", "--trials", "20", "--seed", "3", "--no-timing"];
    let first = ok(&args);
    assert_eq!(first, ok(&args));
    let mut lines = first.lines();
    assert_eq!(lines.next(), Some("ensemble,strategy,algorithm,n,p,e,trials,failures,undetected,fer,wall_ms,seed"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 3);
    assert!(rows[0].starts_with("toy,proto,spa,254,127,2,20,"));
}

#[test]
fn threshold_reports_scaled_value_and_trace() {
    let dir = tempfile::tempdir().unwrap();
    let base = dir.path().join("b.txt");
    fs::write(&base, "3 3\n").unwrap();
    let out = ok(&["threshold", "--base", base.to_str().unwrap(), "--alg", "tmp", "--n", "1000"]);
    let delta: f64 = out.lines().find_map(|l| l.strip_prefix("delta_star=")).unwrap().parse().unwrap();
    let nd: u64 = out.lines().find_map(|l| l.strip_prefix("n_delta=")).unwrap().parse().unwrap();
    assert!(delta > 0.0 && delta < 0.1);
    assert_eq!(nd, (delta * 1000.0).round() as u64);
    assert!(out.lines().any(|l| l.starts_with("tmp_threshold=")));
    assert!(out.contains("probe,delta,converged,iterations,error"));
}

#[test]
fn threshold_from_params_uses_the_strategy_base() {
    let dir = tempfile::tempdir().unwrap();
    let params = write_params(dir.path());
    let proto = ok(&["threshold", "--params", &params, "--strategy", "proto", "--alg", "tmp"]);
    let basic = ok(&["threshold", "--params", &params, "--strategy", "basic", "--alg", "tmp"]);
    let get = |s: &str| s.lines().find_map(|l| l.strip_prefix("n_delta=")).unwrap().parse::<u64>().unwrap();
    // The basic decoder sees d_Q = 3 times as many errors.
    assert!(get(&proto) > get(&basic) / 3);
}

#[test]
fn graph_lists_every_edge() {
    let dir = tempfile::tempdir().unwrap();
    let params = write_params(dir.path());
    let keys = dir.path().join("k");
    ok(&["keygen", "--params", &params, "--out", keys.to_str().unwrap()]);
    let edges = ok(&["graph", "--priv", keys.join("private.key").to_str().unwrap(), "--strategy", "basic"]);
    // H has row weight 10 over 127 rows.
    assert_eq!(edges.lines().count(), 127 * 10);
    assert!(edges.lines().all(|l| l.split(' ').count() == 2));
}
