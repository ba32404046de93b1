use std::fs;
use std::path::Path;
use std::process::Command;

use serde_json::Value;
use tempfile::TempDir;

use powerlloyd::app::{lloyd_experiment, ProblemConfig};
use powerlloyd::geometry::Point2;

const SMALL: &str = r#"{"preset": "copolymer", "cost": {"lambda": 0.02},
    "init": {"n": 8, "restarts": 6}, "schedule": {"round_length": 20}, "seed": 4}"#;

fn powerlloyd(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_powerlloyd"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_owned()
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("out");
    let out = out.to_str().unwrap();

    assert_eq!(powerlloyd(&["lloyd"]).0, 2);
    assert_eq!(powerlloyd(&["no-such-command"]).0, 2);
    let unknown = write(
        dir.path(),
        "unknown.json",
        r#"{"preset": "cvt", "lamda": 1}"#,
    );
    assert_eq!(
        powerlloyd(&["lloyd", "--config", &unknown, "--out", out]).0,
        2
    );
    let concave = write(
        dir.path(),
        "concave.json",
        r#"{"domain": [[0,0],[1,0],[0.5,0.2],[1,1],[0,1]], "cost": {"f": "zero"}}"#,
    );
    let (code, err) = powerlloyd(&["lloyd", "--config", &concave, "--out", out]);
    assert_eq!(code, 2, "{err}");
    assert!(err.contains("reflex"), "{err}");
    let one_lambda = write(
        dir.path(),
        "sweep.json",
        r#"{"preset": "copolymer", "sweep": {"lambdas": [0.01]}}"#,
    );
    assert_eq!(
        powerlloyd(&["sweep", "--config", &one_lambda, "--out", out]).0,
        2
    );

    // a cell with no mass has no derivatives
    let cfg = write(dir.path(), "cp.json", r#"{"preset": "copolymer"}"#);
    let state = write(
        dir.path(),
        "state.json",
        r#"{"positions": [[0.3, 0.5], [0.7, 0.5]], "weights": [0, -10]}"#,
    );
    let (code, err) = powerlloyd(&["analyze", &state, "--config", &cfg, "--out", out]);
    assert_eq!(code, 3, "{err}");

    let ok = write(dir.path(), "ok.json", SMALL);
    assert_eq!(powerlloyd(&["lloyd", "--config", &ok, "--out", out]).0, 0);
}

#[test]
fn saved_state_reproduces_its_diagram() {
    let dir = TempDir::new().unwrap();
    let cfg_path = write(dir.path(), "small.json", SMALL);
    let run_dir = dir.path().join("run");
    let diag_dir = dir.path().join("diagram");
    let (code, err) = powerlloyd(&[
        "lloyd",
        "--config",
        &cfg_path,
        "--out",
        run_dir.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    let state = run_dir.join("final_state.json");
    let (code, err) = powerlloyd(&[
        "diagram",
        "--config",
        &cfg_path,
        "--state",
        state.to_str().unwrap(),
        "--out",
        diag_dir.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");

    // the same run in process, compared cell by cell
    let cfg = ProblemConfig::parse(SMALL, dir.path()).unwrap();
    let trace = lloyd_experiment(&cfg).unwrap().trace;
    let d = cfg
        .problem()
        .unwrap()
        .diagram(&trace.final_generators)
        .unwrap();
    let report = read_json(&diag_dir.join("diagram.json"));
    let cells = report["cells"].as_array().unwrap();
    assert_eq!(cells.len(), d.non_empty_indices().len());
    for cell in cells {
        let i = cell["index"].as_u64().unwrap() as usize;
        let verts: Vec<Point2> = serde_json::from_value(cell["vertices"].clone()).unwrap();
        let expected = d.cells[i].polygon.vertices();
        assert_eq!(verts.len(), expected.len());
        for (a, b) in verts.iter().zip(expected) {
            assert!(a.distance(*b) < 1e-9, "cell {i}: {a:?} vs {b:?}");
        }
    }
    let svg = fs::read_to_string(diag_dir.join("diagram.svg")).unwrap();
    assert!(svg.contains(r#"viewBox="0 0 1 1""#));
}

#[test]
fn results_do_not_depend_on_worker_count() {
    let dir = TempDir::new().unwrap();
    let cfg_path = write(dir.path(), "small.json", SMALL);
    let outputs: Vec<(String, String)> = ["1", "3"]
        .iter()
        .map(|w| {
            let out = dir.path().join(format!("w{w}"));
            let (code, err) = powerlloyd(&[
                "lloyd",
                "--config",
                &cfg_path,
                "--workers",
                w,
                "--out",
                out.to_str().unwrap(),
            ]);
            assert_eq!(code, 0, "{err}");
            (
                fs::read_to_string(out.join("final_state.json")).unwrap(),
                fs::read_to_string(out.join("summary.json")).unwrap(),
            )
        })
        .collect();
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn seed_flag_changes_the_run() {
    let dir = TempDir::new().unwrap();
    let cfg_path = write(dir.path(), "small.json", SMALL);
    let states: Vec<String> = ["4", "5"]
        .iter()
        .map(|s| {
            let out = dir.path().join(format!("s{s}"));
            let (code, err) = powerlloyd(&[
                "lloyd",
                "--config",
                &cfg_path,
                "--seed",
                s,
                "--out",
                out.to_str().unwrap(),
            ]);
            assert_eq!(code, 0, "{err}");
            fs::read_to_string(out.join("final_state.json")).unwrap()
        })
        .collect();
    assert_ne!(states[0], states[1]);
}
