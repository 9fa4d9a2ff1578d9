use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> String {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name);
    root.to_string_lossy().into_owned()
}

fn orgcx(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_orgcx"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(args: &[&str]) -> Value {
    let out = orgcx(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("json report")
}

#[test]
fn golden_mean_stationary() {
    let v = json(&["em", "stationary", "--machine", &fixture("gm.json")]);
    assert_eq!(v["pi"], serde_json::json!(["2/3", "1/3"]));
}

#[test]
fn exit_codes() {
    assert_eq!(orgcx(&["no-such-command"]).status.code(), Some(2));
    assert_eq!(orgcx(&["oc", "search"]).status.code(), Some(2));
    assert_eq!(
        orgcx(&["oc", "search", "--dist", "/nonexistent.json"]).status.code(),
        Some(2)
    );
    assert_eq!(
        orgcx(&["oc", "search", "--dist", &fixture("one.json"), "--delta", "x"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        orgcx(&["em", "stationary", "--machine", &fixture("disconnected.json")])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        orgcx(&["em", "compile", "--machine", &fixture("third.json"), "--t", "2"])
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn search_is_reproducible_across_workers() {
    let d = fixture("three_quarters.json");
    let run = |w: &str| orgcx(&["oc", "search", "--dist", &d, "--max-bits", "31", "--workers", w]);
    let (a, b) = (run("1"), run("4"));
    assert!(a.status.success());
    let strip = |o: &Output| {
        let mut v: Value = serde_json::from_slice(&o.stdout).unwrap();
        v["budget"]["workers"] = Value::Null;
        v
    };
    assert_eq!(strip(&a), strip(&b));
    assert_eq!(strip(&a)["status"], "ExactMinimum");
    assert_eq!(strip(&a)["oc_bits"], 31);
    assert_eq!(run("1").stdout, a.stdout, "same arguments give identical bytes");
}

#[test]
fn encode_decode_eval_round_trip() {
    let enc = json(&["oc", "encode", "--fixture", "coin", "--n", "3"]);
    let hex = enc["hex"].as_str().unwrap();
    let dec = json(&["oc", "decode", "--hex", hex]);
    assert_eq!(dec["kind"], "flat");
    let eval = json(&["oc", "eval", "--hex", hex]);
    let probs = eval["distribution"]["probs"].as_object().unwrap();
    assert_eq!(probs.len(), 8);
    assert!(probs.values().all(|p| p == "1/8"));
}

#[test]
fn process_report_feeds_search() {
    let dir = std::env::temp_dir().join(format!("orgcx-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("gm2.json");
    let out = orgcx(&[
        "em",
        "process",
        "--machine",
        &fixture("gm.json"),
        "--t",
        "2",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let v = json(&["oc", "search", "--dist", path.to_str().unwrap(), "--max-bits", "12"]);
    assert_eq!(v["status"], "UpperBoundOnly");
    std::fs::remove_dir_all(dir).ok();
}

#[test]
fn compare_growth_is_logarithmic() {
    let v = json(&["compare", "--ns", "4,8,16"]);
    let rows = v["rows"].as_array().expect("rows");
    for class in ["ones", "coin"] {
        let bits: Vec<u64> = rows
            .iter()
            .filter(|r| r["source"].as_str().unwrap().starts_with(class))
            .map(|r| {
                assert_eq!(r["status"], "ExactMinimum");
                r["oc_bits"].as_u64().unwrap()
            })
            .collect();
        assert_eq!(bits.len(), 3);
        assert!(
            bits.windows(2).all(|w| w[1] >= w[0] && w[1] - w[0] <= 2),
            "{class}: {bits:?}"
        );
    }
}

#[test]
fn tsv_flattens_report() {
    let out = orgcx(&["em", "stationary", "--machine", &fixture("gm.json"), "--format", "tsv"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().any(|l| l == "k\t2"), "{text}");
}
