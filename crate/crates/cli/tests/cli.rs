use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn data(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(name)
        .display()
        .to_string()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qexcl"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

struct Scratch {
    dir: TempDir,
}

impl Scratch {
    fn new() -> Self {
        Self {
            dir: tempfile::tempdir().unwrap(),
        }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn out(&self, name: &str) -> String {
        self.path(name).display().to_string()
    }

    fn write(&self, name: &str, text: &str) -> String {
        std::fs::write(self.path(name), text).unwrap();
        self.out(name)
    }

    fn json(&self, name: &str) -> Value {
        serde_json::from_slice(&std::fs::read(self.path(name)).unwrap()).unwrap()
    }
}

fn num(v: &Value) -> f64 {
    v.as_f64().unwrap_or_else(|| panic!("not a number: {v}"))
}

#[test]
fn solve_examples() {
    let s = Scratch::new();
    let out = run(&[
        "solve",
        "--ensemble",
        &data("orthogonal_pair.json"),
        "--variant",
        "min-error",
        "--out",
        &s.out("a.json"),
    ]);
    assert_eq!(code(&out), 0);
    assert!(num(&s.json("a.json")["solve"]["alpha"]).abs() <= 1e-8);

    let out = run(&[
        "solve",
        "--ensemble",
        &data("identical_pair.json"),
        "--variant",
        "min-error",
        "--out",
        &s.out("b.json"),
    ]);
    assert_eq!(code(&out), 0);
    assert!((num(&s.json("b.json")["solve"]["alpha"]) - 0.5).abs() <= 1e-8);

    let out = run(&[
        "solve",
        "--ensemble",
        &data("cusp_k3.json"),
        "--variant",
        "min-error",
        "--m",
        "1",
        "--out",
        &s.out("c.json"),
    ]);
    assert_eq!(code(&out), 0);
    let report = s.json("c.json");
    assert!(num(&report["solve"]["alpha"]).abs() <= 1e-7);
    assert_eq!(report["solve"]["status"], "optimal");
    assert_eq!(report["seed"], 0);
}

#[test]
fn unambiguous_report_carries_inconclusive_element() {
    let s = Scratch::new();
    let out = run(&[
        "solve",
        "--ensemble",
        &data("identical_pair.json"),
        "--variant",
        "unambiguous",
        "--out",
        &s.out("u.json"),
    ]);
    assert_eq!(code(&out), 0);
    let r = s.json("u.json");
    assert!((num(&r["solve"]["alpha"]) - 1.0).abs() <= 1e-7);
    assert!(r["solve"]["measurement"]["inconclusive"].is_array());
}

#[test]
fn certify_examples() {
    let s = Scratch::new();
    let out = run(&[
        "certify",
        "--ensemble",
        &data("cusp_k3.json"),
        "--measurement",
        &data("basis_k3.json"),
        "--out",
        &s.out("a.json"),
    ]);
    assert_eq!(code(&out), 0);
    assert!(num(&s.json("a.json")["certificate"]["trace_n"]).abs() <= 1e-12);

    let out = run(&[
        "certify",
        "--ensemble",
        &data("identical_pair.json"),
        "--measurement",
        &data("half_half.json"),
        "--out",
        &s.out("b.json"),
    ]);
    assert_eq!(code(&out), 0);
    assert!((num(&s.json("b.json")["certificate"]["trace_n"]) - 0.5).abs() <= 1e-12);

    // every measurement is optimal for identical states
    let out = run(&[
        "certify",
        "--ensemble",
        &data("identical_pair.json"),
        "--measurement",
        &data("all_first.json"),
        "--out",
        &s.out("c.json"),
    ]);
    assert_eq!(code(&out), 0);

    let out = run(&[
        "certify",
        "--ensemble",
        &data("orthogonal_pair.json"),
        "--measurement",
        &data("all_first.json"),
        "--out",
        &s.out("d.json"),
    ]);
    assert_eq!(code(&out), 1);
    let r = s.json("d.json");
    assert_eq!(r["certificate"]["is_optimal"], false);
    assert!((num(&r["certificate"]["alpha"]) - 0.5).abs() <= 1e-12);

    let out = run(&[
        "certify",
        "--ensemble",
        &data("cusp_k3.json"),
        "--measurement",
        &data("half_half.json"),
        "--out",
        &s.out("e.json"),
    ]);
    assert_eq!(code(&out), 3);
}

#[test]
fn bound_examples() {
    let s = Scratch::new();
    let out = run(&[
        "bound",
        "--ensemble",
        &data("cusp_k3.json"),
        "--which",
        "fidelity",
        "--out",
        &s.out("a.json"),
    ]);
    assert_eq!(code(&out), 0);
    let b = &s.json("a.json")["bound"];
    assert!((num(&b["value"]) - 3.0).abs() <= 1e-8);
    assert_eq!(num(&b["threshold"]), 3.0);
    assert_eq!(b["verdict"], "necessary condition met");

    let out = run(&[
        "bound",
        "--ensemble",
        &data("identical_pair.json"),
        "--which",
        "perm",
        "--out",
        &s.out("b.json"),
    ]);
    assert_eq!(code(&out), 0);
    assert!((num(&s.json("b.json")["bound"]["value"]) - 0.5).abs() <= 1e-10);

    let out = run(&[
        "bound",
        "--ensemble",
        &data("identical_pair.json"),
        "--which",
        "witness",
        "--out",
        &s.out("c.json"),
    ]);
    assert_eq!(code(&out), 5);
    assert!(!s.path("c.json").exists());

    let out = run(&[
        "bound",
        "--ensemble",
        &data("cusp_k3.json"),
        "--which",
        "witness",
        "--eps",
        "0.01",
        "--out",
        &s.out("d.json"),
    ]);
    assert_eq!(code(&out), 0);
    assert_eq!(num(&s.json("d.json")["bound"]["eps"]), 0.01);
}

#[test]
fn pbr_examples() {
    let s = Scratch::new();
    let boundary = 2.0 * (2f64.sqrt() - 1.0).atan();
    let out = run(&[
        "pbr",
        "--n",
        "2",
        "--theta",
        &boundary.to_string(),
        "--mode",
        "analytic",
        "--out",
        &s.out("a.json"),
    ]);
    assert_eq!(code(&out), 0);
    let a = &s.json("a.json")["pbr"]["analytic"];
    assert_eq!(a["criterion_met"], true);
    assert_eq!(num(&a["p_win_global"]), 1.0);

    let theta = 2.0 * 0.5f64.atan();
    let out = run(&[
        "pbr",
        "--n",
        "1",
        "--theta",
        &theta.to_string(),
        "--mode",
        "both",
        "--out",
        &s.out("b.json"),
    ]);
    assert_eq!(code(&out), 0);
    let p = &s.json("b.json")["pbr"];
    assert!((num(&p["analytic"]["p_win_global"]) - 0.9).abs() <= 1e-12);
    assert!(num(&p["consistency"]) <= 1e-6);

    let out = run(&[
        "pbr",
        "--n",
        "12",
        "--theta",
        "0.3",
        "--mode",
        "sdp",
        "--out",
        &s.out("c.json"),
    ]);
    assert_eq!(code(&out), 6);

    let out = run(&["pbr", "--n", "12", "--theta", "0.3", "--out", &s.out("d.json")]);
    assert_eq!(code(&out), 0);

    let out = run(&["pbr", "--n", "3", "--theta-deg", "90", "--out", &s.out("e.json")]);
    assert_eq!(code(&out), 0);
    assert_eq!(num(&s.json("e.json")["pbr"]["theta"]), std::f64::consts::FRAC_PI_2);

    let out = run(&["pbr", "--n", "2", "--theta", "2.0", "--out", &s.out("f.json")]);
    assert_eq!(code(&out), 3);
}

#[test]
fn convert_examples() {
    let s = Scratch::new();
    let out = run(&[
        "convert",
        "--ensemble",
        &data("orthogonal_pair.json"),
        "--to",
        "discrimination",
        "--out",
        &s.out("d.json"),
    ]);
    assert_eq!(code(&out), 0);
    let d = s.json("d.json");
    assert_eq!(d["subnormalized"], true);
    // k = 2: each discrimination operator is the other weighted state
    assert_eq!(num(&d["states"][0]["matrix"][1][1][0]), 0.5);
    assert_eq!(num(&d["states"][1]["matrix"][0][0][0]), 0.5);

    let out = run(&[
        "convert",
        "--ensemble",
        &data("cusp_k3.json"),
        "--to",
        "m-exclusion",
        "--m",
        "2",
        "--out",
        &s.out("m.json"),
    ]);
    assert_eq!(code(&out), 0);
    let m = s.json("m.json");
    let labels: Vec<&str> = m["states"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| x["label"].as_str().unwrap())
        .collect();
    assert_eq!(labels, ["{1,2}", "{1,3}", "{2,3}"]);

    let out = run(&[
        "convert",
        "--ensemble",
        &data("cusp_k3.json"),
        "--to",
        "m-exclusion",
        "--m",
        "0",
        "--out",
        &s.out("x.json"),
    ]);
    assert_eq!(code(&out), 5);
    let out = run(&[
        "convert",
        "--ensemble",
        &data("cusp_k3.json"),
        "--to",
        "m-exclusion",
        "--out",
        &s.out("x.json"),
    ]);
    assert_eq!(code(&out), 5);
}

#[test]
fn converted_file_solves_like_the_internal_reduction() {
    let s = Scratch::new();
    let e = s.write(
        "pair3.json",
        r#"{"dim": 2, "states": [
            {"label": "x", "prob": 0.2, "matrix": [[[1, 0], [0, 0]], [[0, 0], [0, 0]]]},
            {"label": "y", "prob": 0.3, "matrix": [[[0.5, 0], [0.5, 0]], [[0.5, 0], [0.5, 0]]]},
            {"label": "z", "prob": 0.5, "matrix": [[[0.5, 0], [0, -0.5]], [[0, 0.5], [0.5, 0]]]}
        ]}"#,
    );
    assert_eq!(
        code(&run(&[
            "convert",
            "--ensemble",
            &e,
            "--to",
            "m-exclusion",
            "--m",
            "2",
            "--out",
            &s.out("c.json")
        ])),
        0
    );
    assert_eq!(
        code(&run(&[
            "solve",
            "--ensemble",
            &s.out("c.json"),
            "--variant",
            "min-error",
            "--out",
            &s.out("a.json")
        ])),
        0
    );
    assert_eq!(
        code(&run(&[
            "solve",
            "--ensemble",
            &e,
            "--variant",
            "min-error",
            "--m",
            "2",
            "--out",
            &s.out("b.json")
        ])),
        0
    );
    let a = num(&s.json("a.json")["solve"]["alpha"]);
    let b = num(&s.json("b.json")["solve"]["alpha"]);
    assert!((a - b).abs() <= 1e-9, "{a} vs {b}");
}

#[test]
fn reports_are_reproducible_and_round_trip() {
    let s = Scratch::new();
    let cusp = data("cusp_k3.json");
    for (i, args) in [
        vec!["solve", "--ensemble", &cusp, "--variant", "worst-case"],
        vec!["bound", "--ensemble", &cusp, "--which", "perm", "--seed", "7"],
        vec!["pbr", "--n", "2", "--theta", "0.3", "--mode", "both"],
    ]
    .into_iter()
    .enumerate()
    {
        let first = s.out(&format!("r{i}.json"));
        let mut a = args.clone();
        a.extend(["--out", first.as_str()]);
        assert_eq!(code(&run(&a)), 0);
        let bytes1 = std::fs::read(&first).unwrap();
        let second = s.out(&format!("r{i}.json"));
        assert_eq!(code(&run(&a)), 0);
        assert_eq!(bytes1, std::fs::read(&second).unwrap(), "{args:?}");

        // every float is written with 17 significant digits and re-parses exactly
        let text = String::from_utf8(bytes1).unwrap();
        let value: Value = serde_json::from_str(&text).unwrap();
        let mut floats = Vec::new();
        collect_floats(&value, &mut floats);
        assert!(!floats.is_empty());
        for f in floats {
            assert!(text.contains(&format!("{f:.16e}")), "{f} not written losslessly");
        }
    }
    let r = s.json("r1.json");
    assert_eq!(r["seed"], 7);
    assert_eq!(r["args"][0], "bound");
}

fn collect_floats(v: &Value, out: &mut Vec<f64>) {
    match v {
        Value::Number(n) if n.is_f64() => out.push(n.as_f64().unwrap()),
        Value::Array(a) => a.iter().for_each(|x| collect_floats(x, out)),
        Value::Object(o) => o.values().for_each(|x| collect_floats(x, out)),
        _ => {}
    }
}

#[test]
fn timings_are_opt_in() {
    let s = Scratch::new();
    let e = data("orthogonal_pair.json");
    assert_eq!(
        code(&run(&[
            "solve",
            "--ensemble",
            &e,
            "--variant",
            "min-error",
            "--out",
            &s.out("a.json")
        ])),
        0
    );
    assert!(s.json("a.json").get("timings").is_none());
    assert_eq!(
        code(&run(&[
            "solve",
            "--ensemble",
            &e,
            "--variant",
            "min-error",
            "--timings",
            "--out",
            &s.out("b.json")
        ])),
        0
    );
    assert!(num(&s.json("b.json")["timings"]["elapsed_seconds"]) >= 0.0);
}

#[test]
fn parse_errors_name_file_line_and_field() {
    let s = Scratch::new();
    let bad = s.write(
        "bad.json",
        "{\n  \"dim\": 2,\n  \"states\": [\n    {\"label\": \"a\", \"prob\": \"half\", \"matrix\": []}\n  ]\n}\n",
    );
    let out = run(&[
        "solve",
        "--ensemble",
        &bad,
        "--variant",
        "min-error",
        "--out",
        &s.out("x.json"),
    ]);
    assert_eq!(code(&out), 3);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("bad.json"), "{err}");
    assert!(err.contains("states[0].prob"), "{err}");
    assert!(err.contains("line 4"), "{err}");

    let shape = s.write(
        "shape.json",
        r#"{"dim": 2, "states": [{"label": "a", "prob": 1.0, "matrix": [[[1, 0], [0, 0]]]}]}"#,
    );
    let out = run(&[
        "solve",
        "--ensemble",
        &shape,
        "--variant",
        "min-error",
        "--out",
        &s.out("x.json"),
    ]);
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("states[0].matrix"));

    let trace = s.write(
        "trace.json",
        r#"{"dim": 1, "states": [{"label": "a", "prob": 1.0, "matrix": [[[2, 0]]]}]}"#,
    );
    let out = run(&[
        "solve",
        "--ensemble",
        &trace,
        "--variant",
        "min-error",
        "--out",
        &s.out("x.json"),
    ]);
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("states[0]"));

    let out = run(&[
        "solve",
        "--ensemble",
        &s.out("missing.json"),
        "--variant",
        "min-error",
        "--out",
        &s.out("x.json"),
    ]);
    assert_eq!(code(&out), 3);
    let out = run(&[
        "solve",
        "--variant",
        "nonsense",
        "--ensemble",
        &bad,
        "--out",
        &s.out("x.json"),
    ]);
    assert_eq!(code(&out), 3);
    assert_eq!(code(&run(&["--help"])), 0);
}
