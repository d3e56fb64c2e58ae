use pdte_core::pdte::DecisionTreeModel;
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::process::{Command, Output, Stdio};

fn pdte(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pdte")).args(args).current_dir(dir).env("PDTE_SEED", "7").output().unwrap()
}

fn ok(args: &[&str], dir: &Path) -> String {
    let out = pdte(args, dir);
    assert!(out.status.success(), "pdte {args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn class_of(model: &Path, attrs: &[u64]) -> u64 {
    DecisionTreeModel::from_json_str(&fs::read_to_string(model).unwrap()).unwrap().eval_clear(attrs).unwrap()
}

#[test]
fn tree_gen_then_validate() {
    let d = tempfile::tempdir().unwrap();
    ok(&["tree-gen", "--depth", "4", "--precision", "8", "--attributes", "3", "--out", "t.json"], d.path());
    let s = ok(&["tree-validate", "--model", "t.json"], d.path());
    assert_eq!(s.trim(), "ok: 7 decision nodes, 8 leaves");

    let mut tree: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.path().join("t.json")).unwrap()).unwrap();
    tree["nodes"][0]["threshold"] = serde_json::json!(1u64 << 20);
    fs::write(d.path().join("bad.json"), tree.to_string()).unwrap();
    let out = pdte(&["tree-validate", "--model", "bad.json"], d.path());
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("threshold overflow"));
}

#[test]
fn offline_round_trip_matches_clear_evaluation() {
    let d = tempfile::tempdir().unwrap();
    for (protocol, extra) in [("rcc", vec!["--hamming-weight", "3"]), ("folklore", vec![]), ("xxcmp", vec![])] {
        let keys = format!("keys-{protocol}");
        let mut args = vec!["keygen", "--protocol", protocol, "--precision", "8", "--attributes", "4", "--keys", &keys];
        args.extend(extra);
        ok(&args, d.path());
        ok(&["tree-gen", "--depth", "4", "--precision", "8", "--attributes", "4", "--seed", "5", "--out", "m.json"], d.path());
        fs::write(d.path().join("x.csv"), "a,b,c,d\n200, 17, 0, 255\n").unwrap();
        let off = format!("off-{protocol}");
        ok(&["query", "--keys", &keys, "--attrs", "x.csv", "--offline-dir", &off], d.path());
        ok(&["serve", "--model", "m.json", "--keys", &keys, "--offline-dir", &off], d.path());
        let got: u64 = ok(&["query", "--keys", &keys, "--offline-dir", &off, "--decode"], d.path()).trim().parse().unwrap();
        assert_eq!(got, class_of(&d.path().join("m.json"), &[200, 17, 0, 255]), "{protocol}");
    }
}

#[test]
fn tcp_round_trip_uploads_keys_on_demand() {
    let d = tempfile::tempdir().unwrap();
    ok(&["tree-gen", "--depth", "6", "--precision", "12", "--attributes", "3", "--seed", "9", "--out", "m.json"], d.path());
    let mut child = Command::new(env!("CARGO_BIN_EXE_pdte"))
        .args(["serve", "--model", "m.json", "--protocol", "rcc", "--listen", "127.0.0.1:0"])
        .current_dir(d.path())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    let mut line = String::new();
    BufReader::new(child.stdout.take().unwrap()).read_line(&mut line).unwrap();
    let addr = line.trim().strip_prefix("listening on ").unwrap().to_string();
    fs::write(d.path().join("x.json"), "[4000, 12, 3071]").unwrap();
    // Keys are generated on first use from the flags and the attribute count.
    let out = pdte(&["query", "--protocol", "rcc", "--precision", "12", "--attrs", "x.json", "--server", &addr], d.path());
    child.kill().unwrap();
    child.wait().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let got: u64 = String::from_utf8(out.stdout).unwrap().trim().parse().unwrap();
    assert_eq!(got, class_of(&d.path().join("m.json"), &[4000, 12, 3071]));
    assert!(d.path().join("pdte-keys/secret.key").exists());
}

#[test]
fn seeded_simulator_queries_are_byte_identical() {
    let run = || {
        let d = tempfile::tempdir().unwrap();
        ok(&["keygen", "--protocol", "folklore", "--precision", "8", "--attributes", "2"], d.path());
        fs::write(d.path().join("x.csv"), "3,250").unwrap();
        ok(&["query", "--attrs", "x.csv", "--offline-dir", "off"], d.path());
        (fs::read(d.path().join("off/keys.bin")).unwrap(), fs::read(d.path().join("off/query.bin")).unwrap())
    };
    assert_eq!(run(), run());
}

#[test]
fn out_of_range_attribute_fails_before_connecting() {
    let d = tempfile::tempdir().unwrap();
    ok(&["keygen", "--protocol", "rcc", "--precision", "8", "--attributes", "2"], d.path());
    fs::write(d.path().join("x.csv"), "3,256").unwrap();
    // Port 9 (discard) has no listener here; the error must come from validation instead.
    let out = pdte(&["query", "--attrs", "x.csv", "--server", "127.0.0.1:9"], d.path());
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(!err.contains("network") && !err.contains("refused"), "{err}");
}

#[test]
fn keygen_refuses_to_overwrite_without_force() {
    let d = tempfile::tempdir().unwrap();
    let args = ["keygen", "--protocol", "xxcmp", "--precision", "8", "--attributes", "1"];
    ok(&args, d.path());
    let out = pdte(&args, d.path());
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("--force"));
    let mut forced = args.to_vec();
    forced.push("--force");
    ok(&forced, d.path());
}

#[test]
fn bench_writes_csv_and_summary() {
    let d = tempfile::tempdir().unwrap();
    let s = ok(
        &["bench", "--experiment", "cmp", "--protocol", "folklore,rcc", "--precision", "8", "--hamming-weight", "2", "--trials", "2", "--out", "b"],
        d.path(),
    );
    assert_eq!(s.lines().count(), 2);
    let csv = fs::read_to_string(d.path().join("b/cmp.csv")).unwrap();
    assert!(csv.starts_with("experiment,protocol,n,h,"));
    assert_eq!(csv.lines().count(), 1 + 4);
    assert!(d.path().join("b/cmp.summary.txt").exists());

    // external measurements ride along under their own labels
    let external = csv.replacen("\ncmp,folklore", "\nexternal,folklore", 1);
    fs::write(d.path().join("ext.csv"), external).unwrap();
    ok(&["bench", "--experiment", "cmp", "--protocol", "folklore", "--precision", "8", "--trials", "1", "--out", "c", "--merge", "ext.csv"], d.path());
    let merged = fs::read_to_string(d.path().join("c/cmp.csv")).unwrap();
    assert_eq!(merged.lines().count(), 1 + 1 + 4);
    assert!(merged.contains("\nexternal,folklore"));
}

#[test]
fn hamming_weight_needs_rcc_and_params_conflict_with_flags() {
    let d = tempfile::tempdir().unwrap();
    let out = pdte(&["keygen", "--protocol", "xxcmp", "--precision", "8", "--attributes", "1", "--hamming-weight", "2"], d.path());
    assert!(!out.status.success());
    let out = pdte(&["keygen", "--params", "p.json", "--protocol", "rcc"], d.path());
    assert_eq!(out.status.code(), Some(2));
}
