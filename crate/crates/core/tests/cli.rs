use std::path::PathBuf;
use std::process::Command;

use serde_json::Value;

fn corpus(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/corpus")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn mcfill(args: &[&str]) -> (i32, Value) {
    let out = Command::new(env!("CARGO_BIN_EXE_mcfill")).args(args).output().unwrap();
    let text = String::from_utf8(out.stdout).unwrap();
    let v = serde_json::from_str(&text).unwrap_or_else(|e| panic!("{e}: {text}"));
    (out.status.code().unwrap(), v)
}

/// The report without fields that legitimately vary between runs.
fn payload(mut v: Value) -> Value {
    let m = v.as_object_mut().unwrap();
    m.remove("wall_time_ms");
    m.remove("threads");
    v
}

#[test]
fn schreier_extract_prints_the_upper_half() {
    let (code, v) = mcfill(&["schreier-extract", "1,2,3,4"]);
    assert_eq!(code, 0);
    assert_eq!(v["member"], serde_json::json!([3, 4]));
}

#[test]
fn half_threshold_is_refuted_with_a_partition() {
    let (code, v) = mcfill(&[
        "check-mcfilling",
        "--model",
        &corpus("two.json"),
        "--family",
        &corpus("a-only.json"),
        "--epsilon",
        "1/2",
    ]);
    assert_eq!(code, 1);
    assert_eq!(v["holds"], false);
    assert_eq!(v["value"], "1/2");
    assert_eq!(v["certificate"]["kind"], "partition");
    assert_eq!(v["caps"]["max-points"], 10);
    assert_eq!(v["inputs"]["model"].as_str().unwrap().len(), 64);

    let (code, v) = mcfill(&[
        "check-mcfilling",
        "--model",
        &corpus("two.json"),
        "--family",
        &corpus("a-only.json"),
        "--epsilon",
        "1/3",
    ]);
    assert_eq!(code, 0);
    assert_eq!(v["holds"], true);
}

#[test]
fn malformed_input_exits_2_with_an_error_object() {
    let (code, v) = mcfill(&["check-mcfilling", "--no-such-flag"]);
    assert_eq!(code, 2);
    assert_eq!(v["error"]["kind"], "usage");

    let (code, v) = mcfill(&[
        "check-mcfilling",
        "--model",
        &corpus("a-only.json"),
        "--family",
        &corpus("a-only.json"),
        "--epsilon",
        "1/2",
    ]);
    assert_eq!(code, 2);
    assert_eq!(v["error"]["kind"], "parse");

    let (code, v) = mcfill(&[
        "check-mcfilling",
        "--model",
        &corpus("missing.json"),
        "--family",
        &corpus("a-only.json"),
        "--epsilon",
        "1/2",
    ]);
    assert_eq!(code, 2);
    assert!(v["error"]["message"].as_str().unwrap().contains("missing.json"));

    let (code, v) = mcfill(&[
        "check-mcfilling",
        "--model",
        &corpus("two.json"),
        "--family",
        &corpus("a-only.json"),
        "--epsilon",
        "0.5",
    ]);
    assert_eq!(code, 2);
    assert_eq!(v["error"]["kind"], "usage");

    let (code, v) = mcfill(&[
        "check-mcfilling",
        "--model",
        &corpus("two.json"),
        "--family",
        &corpus("all.json"),
        "--epsilon",
        "1/2",
        "--max-points",
        "1",
    ]);
    assert_eq!(code, 2);
    assert_eq!(v["error"]["kind"], "resource-limit");
}

#[test]
fn every_command_runs() {
    let cases: Vec<(Vec<String>, i32)> = vec![
        (
            vec![
                "check-filling",
                "--family",
                &corpus("schreier.json"),
                "--set",
                "1,2,3,4,5,6",
                "--epsilon",
                "1/2",
            ],
            0,
        ),
        (
            vec![
                "check-filling",
                "--family",
                &corpus("schreier.json"),
                "--set",
                "1,2,3,4,5,6",
                "--epsilon",
                "2/3",
            ],
            1,
        ),
        (
            vec![
                "check-mcfilling",
                "--model",
                &corpus("three-blocks.json"),
                "--family",
                &corpus("pairs.json"),
                "--epsilon",
                "1/4",
                "--covers",
            ],
            0,
        ),
        (
            vec![
                "decide-mc",
                "--model",
                &corpus("with-null.json"),
                "--functionals",
                &corpus("null-functionals.json"),
                "--epsilon",
                "1/2",
            ],
            1,
        ),
        (
            vec![
                "riemann",
                "--model",
                &corpus("three-blocks.json"),
                "--functionals",
                &corpus("three-functionals.json"),
                "--tagged",
                &corpus("tagged.json"),
            ],
            0,
        ),
        (vec!["dyadic-extract", &corpus("leaves.txt")], 0),
        (vec!["chain-extract", &corpus("nodes.txt")], 0),
        (
            vec![
                "pipeline-filling2mc",
                "--model",
                &corpus("grid3x40.json"),
                "--family",
                &corpus("all.json"),
                "--partition",
                &corpus("grid3x40-by-block.json"),
                "--epsilon",
                "1/2",
                "--eta1",
                "1/10",
            ],
            0,
        ),
        (
            vec![
                "greedy-select",
                "--model",
                &corpus("grid4x3.json"),
                "--transversal",
                &corpus("transversal.json"),
                "--partition",
                &corpus("grid4x3-by-block.json"),
                "--epsilon",
                "1/2",
            ],
            0,
        ),
        (
            vec![
                "gamma-select",
                "--model",
                &corpus("three-blocks.json"),
                "--classes",
                &corpus("gamma-classes.json"),
                "--partition",
                &corpus("by-block.json"),
                "--epsilon",
                "1/3",
            ],
            0,
        ),
        (
            vec![
                "cube-witness",
                "--cube",
                &corpus("cube6.json"),
                "--fix",
                "1=1",
                "--beta",
                "3",
            ],
            0,
        ),
        (
            vec![
                "uec-partition",
                "--model",
                &corpus("eight.json"),
                "--ortho",
                &corpus("ortho4.json"),
                "--epsilon",
                "1/2",
                "--refine",
            ],
            0,
        ),
        (
            vec![
                "uec-partition",
                "--model",
                &corpus("eight.json"),
                "--ortho",
                &corpus("ortho4.json"),
                "--epsilon",
                "1/2",
            ],
            2,
        ),
    ]
    .into_iter()
    .map(|(a, c)| (a.into_iter().map(String::from).collect(), c))
    .collect();
    for (args, expected) in cases {
        let refs: Vec<&str> = args.iter().map(String::as_str).collect();
        let (code, v) = mcfill(&refs);
        assert_eq!(code, expected, "{args:?}: {v}");
        if code != 2 {
            assert_eq!(v["command"], args[0].as_str());
            assert!(v["caps"].is_object() && v["inputs"].is_object() && v["wall_time_ms"].is_u64());
        }
    }
}

#[test]
fn specific_outputs() {
    let (_, v) = mcfill(&[
        "cube-witness",
        "--cube",
        &corpus("cube6.json"),
        "--fix",
        "1=1",
        "--beta",
        "3",
    ]);
    assert_eq!(v["x"], "101100");
    let (_, v) = mcfill(&[
        "greedy-select",
        "--model",
        &corpus("grid4x3.json"),
        "--transversal",
        &corpus("transversal.json"),
        "--partition",
        &corpus("grid4x3-by-block.json"),
        "--epsilon",
        "1/2",
    ]);
    assert_eq!(v["value"], "3/4");
    let (_, v) = mcfill(&["chain-extract", &corpus("nodes.txt")]);
    assert_eq!(v["chain"], serde_json::json!(["-", "0", "00"]));
    let (_, v) = mcfill(&[
        "riemann",
        "--model",
        &corpus("three-blocks.json"),
        "--functionals",
        &corpus("three-functionals.json"),
        "--tagged",
        &corpus("tagged.json"),
    ]);
    assert_eq!(v["value"], "3/4");
    assert_eq!(v["functional"], "F2");
}

#[test]
fn reports_are_reproducible_across_thread_counts() {
    let base = [
        "check-mcfilling",
        "--model",
        &corpus("three-blocks.json"),
        "--family",
        &corpus("bounded2.json"),
        "--epsilon",
        "1/2",
        "--covers",
        "--seed",
        "7",
    ];
    let (c1, one) = mcfill(&[&base[..], &["--threads", "1"]].concat());
    let (c4, four) = mcfill(&[&base[..], &["--threads", "4"]].concat());
    let (_, again) = mcfill(&[&base[..], &["--threads", "4"]].concat());
    assert_eq!(c1, c4);
    assert_eq!(payload(one.clone()), payload(four.clone()));
    assert_eq!(payload(four), payload(again));
    assert_eq!(one["cover_audit"]["seed"], 7);
}

#[test]
fn certificates_replay_and_tampering_is_caught() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("r.json");
    let report_s = report.to_string_lossy().into_owned();
    let args = [
        "check-mcfilling",
        "--model",
        &corpus("two.json"),
        "--family",
        &corpus("a-only.json"),
        "--epsilon",
        "1/2",
    ];
    let out = Command::new(env!("CARGO_BIN_EXE_mcfill"))
        .args(args)
        .args(["--report", &report_s])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(out.stdout.is_empty());
    let (code, v) = mcfill(&[&args[..], &["--verify-certificate", &report_s]].concat());
    assert_eq!(code, 0, "{v}");
    assert_eq!(v["verified"], true);
    assert_eq!(v["replayed"], "1/2");

    let mut r: Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    r["value"] = "1/1".into();
    std::fs::write(&report, r.to_string()).unwrap();
    let (code, v) = mcfill(&[&args[..], &["--verify-certificate", &report_s]].concat());
    assert_eq!(code, 1);
    assert_eq!(v["verified"], false);

    r["value"] = "1/2".into();
    r["certificate"]["member"] = serde_json::json!([1]);
    std::fs::write(&report, r.to_string()).unwrap();
    let (code, v) = mcfill(&[&args[..], &["--verify-certificate", &report_s]].concat());
    assert_eq!(code, 2, "{v}");
    assert_eq!(v["error"]["kind"], "invariant");
}
