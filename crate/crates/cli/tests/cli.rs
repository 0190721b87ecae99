use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_rank1-oe"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn families() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../families")
}

fn json(bytes: &[u8]) -> Value {
    serde_json::from_slice(bytes).expect("json output")
}

fn build(family: &str, dir: &Path, extra: &[&str]) -> Output {
    let params = families().join(format!("{family}.json"));
    let mut args = vec!["build", "--params", params.to_str().unwrap(), "--out", dir.to_str().unwrap()];
    args.extend_from_slice(extra);
    run(&args)
}

#[test]
fn gen_chacon() {
    let out = run(&["gen", "--class", "chacon", "--steps", "4", "--mode", "relaxed"]);
    assert!(out.status.success());
    let v = json(&out.stdout);
    assert_eq!(v["params"][0]["q"], 3);
    assert_eq!(v["params"][0]["spacers"], serde_json::json!([0, 0, 1, 0]));
    assert!(v["provenance"]["class"].as_str().unwrap().contains("chacon"));
}

#[test]
fn gen_bounded_rotation_rejected() {
    let out = run(&["gen", "--class", "rotation", "--theta-cf", "1,2,2,2,2,2,2,2,2"]);
    assert_eq!(out.status.code(), Some(2));
    let e = json(&out.stderr);
    assert!(e["error"]["message"].as_str().unwrap().contains("diverges"));
}

#[test]
fn gen_mixing_is_deterministic() {
    let args = [
        "gen", "--class", "mixing", "--seed", "7", "--mode", "relaxed", "--steps", "3", "--epsilon", "0.5",
        "--mixing-n", "6",
    ];
    let a = run(&args);
    let b = run(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let other = run(&[&args[..5], &["9"], &args[6..]].concat());
    assert_ne!(a.stdout, other.stdout);
}

#[test]
fn gen_strict_report_passes_envelopes() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.json");
    let out = run(&["gen", "--class", "odometer", "--steps", "8", "--report", report.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let r = json(&std::fs::read(report).unwrap());
    assert_eq!(r["qprime_envelope_passed"], true);
    for row in r["envelopes"].as_array().unwrap() {
        for key in ["delta", "delta_eps", "gamma3", "eps"] {
            assert_ne!(row[key], false, "{row}");
        }
    }
}

#[test]
fn build_tables_match_and_hash_is_stable() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let ra = build("odometer", a.path(), &["--depth-n", "3", "--depth-m", "4"]);
    let rb = build("odometer", b.path(), &["--depth-n", "3", "--depth-m", "4"]);
    assert!(ra.status.success(), "{}", String::from_utf8_lossy(&ra.stderr));
    let (ja, jb) = (json(&ra.stdout), json(&rb.stdout));
    assert_eq!(ja["state_hash"], jb["state_hash"]);
    assert_eq!(ja["state_hash"].as_str().unwrap().len(), 64);
    let ta = std::fs::read(a.path().join("tables.json")).unwrap();
    assert_eq!(ta, std::fs::read(b.path().join("tables.json")).unwrap());
    let tables = json(&ta);
    let seq = rank1_oe::params::ParamSeq::odometer(&[4; 4]);
    let expected = rank1_oe::engine::recurrence_tables(
        &seq.summaries(),
        &rank1_oe::engine::default_primes(3),
        3,
        4,
        rank1_oe::engine::StageOneRule::FullTower,
    )
    .unwrap();
    let qprime: Vec<String> = expected.qprime.iter().map(|q| q.to_string()).collect();
    assert_eq!(tables["qprime"], serde_json::json!(qprime));
    assert_eq!(ja["qprime"], serde_json::json!(qprime));
    let cells = tables["cells"].as_array().unwrap();
    assert_eq!(cells.len(), 4 + 3 + 2);
    for cell in cells {
        let (n, m) = (cell["n"].as_u64().unwrap() as usize, cell["m"].as_u64().unwrap() as usize);
        assert_eq!(cell["r"], expected.r(n, m).to_string());
        assert_eq!(cell["t"], expected.t(n, m).to_string());
    }
}

#[test]
fn ill_posed_build_names_criterion() {
    let dir = tempfile::tempdir().unwrap();
    let params = dir.path().join("bad.json");
    std::fs::write(&params, r#"{"params":[{"q":2,"spacers":[0,0,0]},{"q":2,"spacers":[0,0,0]}]}"#).unwrap();
    let out = run(&["build", "--params", params.to_str().unwrap(), "--primes", "2,3", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let e = json(&out.stderr);
    assert_eq!(e["error"]["kind"], "ill-posed");
    assert!(e["error"]["message"].as_str().unwrap().contains("q_n > max(p_n, q'_0"));
}

#[test]
fn verify_all_on_every_family() {
    for family in ["odometer", "chacon", "chacon-skip", "rotation", "mixing"] {
        let dir = tempfile::tempdir().unwrap();
        let b = build(family, dir.path(), &["--depth-n", "3"]);
        assert!(b.status.success(), "{family}: {}", String::from_utf8_lossy(&b.stderr));
        let state = dir.path().join("state.json");
        let out = run(&["verify", "--state", state.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0), "{family}: {}", String::from_utf8_lossy(&out.stdout));
        assert_eq!(json(&out.stdout)["passed"], true);
        assert!(dir.path().join("histogram.csv").exists());
        assert!(dir.path().join("gamma3.dat").exists());
    }
}

#[test]
fn verify_orbit_reports_k_and_bound() {
    let dir = tempfile::tempdir().unwrap();
    assert!(build("chacon", dir.path(), &["--depth-n", "3"]).status.success());
    let state = dir.path().join("state.json");
    let out = bin()
        .args(["verify", "--state", state.to_str().unwrap(), "--suite", "orbit"])
        .env("RANK1_OE_THREADS", "2")
        .output()
        .unwrap();
    assert!(out.status.success());
    let r = json(&out.stdout);
    let rows = r["sections"][0]["detail"]["orbits"].as_array().unwrap();
    assert_eq!(rows.len(), 3);
    for row in rows {
        assert!(row["max_abs_k"].as_u64().unwrap() <= row["bound"].as_u64().unwrap());
    }
}

#[test]
fn corrupted_state_gives_structured_error() {
    let dir = tempfile::tempdir().unwrap();
    assert!(build("odometer", dir.path(), &["--depth-n", "2", "--depth-m", "3"]).status.success());
    let state = dir.path().join("state.json");
    let text = std::fs::read_to_string(&state).unwrap();
    std::fs::write(&state, &text[..text.len() / 2]).unwrap();
    let out = run(&["verify", "--state", state.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let e = json(&out.stderr);
    assert_eq!(e["error"]["kind"], "parse");
    assert!(e["error"]["line"].as_u64().unwrap() > 1);

    std::fs::write(&state, text.replacen("\"4\"", "\"5\"", 1)).unwrap();
    let out = run(&["verify", "--state", state.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(json(&out.stderr)["error"]["message"].as_str().unwrap().contains("inconsistent"));
}

#[test]
fn bad_thread_count_is_input_error() {
    let dir = tempfile::tempdir().unwrap();
    assert!(build("odometer", dir.path(), &["--depth-n", "2", "--depth-m", "3"]).status.success());
    let state = dir.path().join("state.json");
    let bad_threads = bin()
        .args(["verify", "--state", state.to_str().unwrap()])
        .env("RANK1_OE_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(bad_threads.status.code(), Some(2));
}
