use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ppgraph::field::PlanarField;
use ppgraph::graph::LineGraph;
use serde_json::Value;
use tempfile::TempDir;

fn ppgraph(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ppgraph"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout_json(o: &Output) -> Value {
    assert_eq!(code(o), 0, "stderr: {}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&o.stdout).expect("stdout is JSON")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const ANNOTATION: &str = r#"{"width":64,"height":48,"junctions":[[4,4],[30,4],[30,4.5],[60,4],[10,40],[50,10]],"segments":[[0,1],[2,3],[4,5]]}"#;

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn write_field(dir: &Path, name: &str, f: &PlanarField) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, f.to_ppgf().to_bytes()).unwrap();
    p
}

#[test]
fn canonicalize_file_round_trips() {
    let dir = TempDir::new().unwrap();
    let input = write(dir.path(), "a.json", ANNOTATION);
    let out = dir.path().join("a.graph.json");
    let o = ppgraph(&["canonicalize", s(&input), "-o", s(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    let g = LineGraph::from_json(&text).unwrap();
    assert_eq!(g.to_json(), text);
    // the split top line becomes one line through a shared junction
    assert_eq!(g.len(), 5);
}

#[test]
fn canonicalize_rejects_truncated_json() {
    let dir = TempDir::new().unwrap();
    let input = write(dir.path(), "bad.json", &ANNOTATION[..40]);
    let o = ppgraph(&["canonicalize", s(&input), "-o", s(&dir.path().join("out.json"))]);
    assert_eq!(code(&o), 2);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 1"), "{err}");
}

#[test]
fn canonicalize_missing_input_is_an_io_error() {
    let dir = TempDir::new().unwrap();
    let o = ppgraph(&["canonicalize", s(&dir.path().join("nope.json")), "-o", s(&dir.path().join("o.json"))]);
    assert_eq!(code(&o), 3);
}

#[test]
fn canonicalize_directory_writes_one_output_per_input() {
    let dir = TempDir::new().unwrap();
    let inputs = dir.path().join("in");
    std::fs::create_dir(&inputs).unwrap();
    for n in 0..4 {
        write(&inputs, &format!("f{n}.json"), ANNOTATION);
    }
    write(&inputs, "notes.txt", "ignored");
    let outputs = dir.path().join("out");
    let o = ppgraph(&["canonicalize", s(&inputs), "-o", s(&outputs), "--jobs", "2"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let mut names: Vec<String> = std::fs::read_dir(&outputs)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(names, ["f0.json", "f1.json", "f2.json", "f3.json"]);
}

#[test]
fn detect_on_empty_maps_prints_empty_graph() {
    let dir = TempDir::new().unwrap();
    let zeros = PlanarField::zeros(1, 16, 16, 4.0).unwrap();
    let jm = write_field(dir.path(), "j.ppgf", &zeros);
    let lm = write_field(dir.path(), "l.ppgf", &zeros);
    let v = stdout_json(&ppgraph(&["detect", "--junction-map", s(&jm), "--line-map", s(&lm)]));
    assert_eq!(v["junctions"].as_array().unwrap().len(), 0);
    assert_eq!(v["edges"].as_array().unwrap().len(), 0);
    assert_eq!(v["width"], 64);
}

#[test]
fn detect_caps_junctions() {
    let dir = TempDir::new().unwrap();
    // isolated peaks every third cell, well past the cap
    let peaks = PlanarField::heatmap_from_fn(96, 96, 4.0, |r, c| {
        if r % 3 == 1 && c % 3 == 1 {
            0.5 + ((r * 96 + c) % 97) as f32 / 200.0
        } else {
            0.0
        }
    })
    .unwrap();
    let jm = write_field(dir.path(), "j.ppgf", &peaks);
    let lm = write_field(dir.path(), "l.ppgf", &PlanarField::zeros(1, 96, 96, 4.0).unwrap());
    let v = stdout_json(&ppgraph(&["detect", "--junction-map", s(&jm), "--line-map", s(&lm)]));
    assert_eq!(v["junctions"].as_array().unwrap().len(), 512);
}

#[test]
fn detect_rejects_stride_mismatch() {
    let dir = TempDir::new().unwrap();
    let jm = write_field(dir.path(), "j.ppgf", &PlanarField::zeros(1, 16, 16, 4.0).unwrap());
    let lm = write_field(dir.path(), "l.ppgf", &PlanarField::zeros(1, 32, 32, 2.0).unwrap());
    assert_eq!(code(&ppgraph(&["detect", "--junction-map", s(&jm), "--line-map", s(&lm)])), 2);
}

fn synth(dir: &Path, n: &str, extra: &[&str]) -> Output {
    let mut args = vec!["synth", "--out-dir", s(dir), "-n", n, "--seed", "7"];
    args.extend_from_slice(extra);
    ppgraph(&args)
}

#[test]
fn eval_identical_and_tolerance_scaling() {
    let dir = TempDir::new().unwrap();
    assert_eq!(code(&synth(dir.path(), "1", &[])), 0);
    let gt = dir.path().join("scene_000007.graph.json");
    let one = stdout_json(&ppgraph(&["eval", s(&gt), s(&gt)]));
    assert_eq!(one["precision"], 1.0);
    assert_eq!(one["recall"], 1.0);
    let two = stdout_json(&ppgraph(&["eval", s(&gt), s(&gt), "--tolerance-frac", "0.02"]));
    let (t1, t2) = (one["tolerance_px"].as_f64().unwrap(), two["tolerance_px"].as_f64().unwrap());
    assert!((t1 - 512f64.hypot(512.0) * 0.01).abs() < 1e-6);
    assert!((t2 - 2.0 * t1).abs() < 1e-5);
}

#[test]
fn eval_rejects_frame_mismatch() {
    let dir = TempDir::new().unwrap();
    let a = write(dir.path(), "a.json", r#"{"version":1,"width":64,"height":64,"junctions":[[1,1],[40,1]],"edges":[[0,1]]}"#);
    let b = write(dir.path(), "b.json", r#"{"version":1,"width":32,"height":64,"junctions":[[1,1],[20,1]],"edges":[[0,1]]}"#);
    assert_eq!(code(&ppgraph(&["eval", s(&a), s(&b)])), 2);
}

#[test]
fn detect_then_eval_on_a_synthetic_scene() {
    let dir = TempDir::new().unwrap();
    assert_eq!(code(&synth(dir.path(), "1", &[])), 0);
    let stem = dir.path().join("scene_000007");
    let with = |ext: &str| PathBuf::from(format!("{}.{ext}", stem.display()));
    let pred = dir.path().join("pred.json");
    let o = ppgraph(&[
        "detect",
        "--junction-map",
        s(&with("junctions.ppgf")),
        "--line-map",
        s(&with("lines.ppgf")),
        "--threshold",
        "0.5",
        "-o",
        s(&pred),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(o.stdout.is_empty());
    let r = stdout_json(&ppgraph(&["eval", s(&with("graph.json")), s(&pred), "--pred-stride", "4"]));
    assert!(r["precision"].as_f64().unwrap() >= 0.95, "{r}");
    assert!(r["recall"].as_f64().unwrap() >= 0.95, "{r}");
}

#[test]
fn sweep_emits_one_curve_per_tau() {
    let dir = TempDir::new().unwrap();
    assert_eq!(code(&synth(dir.path(), "1", &[])), 0);
    let stem = format!("{}/scene_000007", s(dir.path()));
    let (gt, jm, lm) = (format!("{stem}.graph.json"), format!("{stem}.junctions.ppgf"), format!("{stem}.lines.ppgf"));
    let args = ["sweep", "--gt", &gt, "--junction-map", &jm, "--line-map", &lm, "--taus", "0.2,0.25,0.3"];
    let first = ppgraph(&args);
    let v = stdout_json(&first);
    let curves = v.as_array().unwrap();
    assert_eq!(curves.len(), 3);
    for (c, tau) in curves.iter().zip([0.2, 0.25, 0.3]) {
        assert_eq!(c["tau"].as_f64().unwrap(), tau);
        assert_eq!(c["points"].as_array().unwrap().len(), 10);
    }
    assert_eq!(ppgraph(&args).stdout, first.stdout);

    let single = stdout_json(&ppgraph(&[
        "sweep", "--gt", &gt, "--junction-map", &jm, "--line-map", &lm, "--thresholds", "0.5",
    ]));
    assert_eq!(single[0]["points"].as_array().unwrap().len(), 1);
}

#[test]
fn synth_writes_four_files_per_scene_reproducibly() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    assert_eq!(code(&synth(a.path(), "5", &[])), 0);
    assert_eq!(code(&synth(b.path(), "5", &["--jobs", "1"])), 0);
    let mut names: Vec<String> = std::fs::read_dir(a.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(names.len(), 20);
    assert_eq!(names[0], "scene_000007.graph.json");
    assert_eq!(names[19], "scene_000011.scene.json");
    for n in &names {
        assert_eq!(std::fs::read(a.path().join(n)).unwrap(), std::fs::read(b.path().join(n)).unwrap(), "{n}");
    }
    // truth graphs are already canonical
    let gt = a.path().join("scene_000009.graph.json");
    let again = a.path().join("again.json");
    assert_eq!(code(&ppgraph(&["canonicalize", s(&gt), "-o", s(&again)])), 0);
    assert_eq!(std::fs::read(&gt).unwrap(), std::fs::read(&again).unwrap());
}

#[test]
fn synth_overlay_is_a_png() {
    let dir = TempDir::new().unwrap();
    assert_eq!(code(&synth(dir.path(), "1", &["--overlay", "--width", "128", "--height", "96", "--segments", "3"])), 0);
    let bytes = std::fs::read(dir.path().join("scene_000007.overlay.png")).unwrap();
    assert_eq!(&bytes[1..4], b"PNG");
}

#[test]
fn import_wireframe_and_york() {
    let dir = TempDir::new().unwrap();
    let wf = write(
        dir.path(),
        "wf.json",
        r#"[{"filename":"00031546.jpg","width":320,"height":240,"lines":[[10,10,100,10],[5,5,5,5]],"junc":[]},
            {"filename":"00031811.jpg","width":320,"height":240,"lines":[[1,2,3,4]]}]"#,
    );
    let out = dir.path().join("wf");
    let o = ppgraph(&["import", "--format", "wireframe-json", s(&wf), "-o", s(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let first: Value = serde_json::from_str(&std::fs::read_to_string(out.join("00031546.json")).unwrap()).unwrap();
    assert_eq!(first["segments"].as_array().unwrap().len(), 1);
    assert!(out.join("00031811.json").exists());

    let york = write(dir.path(), "y.txt", "# x1 y1 x2 y2\n1 1 50 1\n10,20,10,60\n");
    let ann = dir.path().join("y.json");
    let o = ppgraph(&["import", "--format", "york", s(&york), "-o", s(&ann), "--width", "64", "--height", "64"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let canon = dir.path().join("y.graph.json");
    assert_eq!(code(&ppgraph(&["canonicalize", s(&ann), "-o", s(&canon)])), 0);

    let o = ppgraph(&["import", "--format", "york", s(&york), "-o", s(&ann)]);
    assert_eq!(code(&o), 2);
}

#[test]
fn bad_flags_exit_two_and_help_exits_zero() {
    assert_eq!(code(&ppgraph(&["detect", "--tau", "x"])), 2);
    assert_eq!(code(&ppgraph(&["frobnicate"])), 2);
    assert_eq!(code(&ppgraph(&["--help"])), 0);
}
