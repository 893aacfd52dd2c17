mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use common::files::{quadrants, synthetic_model};
use common::lit;
use visfocus::LogicExpr;

fn visfocus(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_visfocus"))
        .args(args)
        .output()
        .unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn one_and_two_or_three() -> LogicExpr {
    LogicExpr::and([lit(1), LogicExpr::or([lit(2), lit(3)])])
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn refine_writes_states_and_overlay() {
    let dir = tempfile::tempdir().unwrap();
    let (img, labels, _) = quadrants(dir.path(), "scene", &[1]);
    let model = synthetic_model(dir.path(), &one_and_two_or_three());
    let out = dir.path().join("out");
    let model_arg = format!("synthetic:{}", s(&model));
    let run = visfocus(&[
        "refine",
        "--image",
        s(&img),
        "--labels",
        s(&labels),
        "--model",
        &model_arg,
        "--out",
        s(&out),
    ]);
    assert!(
        run.status.success(),
        "{}",
        String::from_utf8_lossy(&run.stderr)
    );

    let states = json(&out.join("scene.states.json"));
    assert_eq!(states["states"], serde_json::json!([[1, 2], [1, 3]]));
    assert_eq!(states["reference_label"], "target");
    assert_eq!(states["beam_size"], serde_json::Value::Null);

    let original = image::open(&img).unwrap().to_rgb8();
    let overlay = image::open(out.join("scene.overlay.png"))
        .unwrap()
        .to_rgb8();
    let blend = |c: u8, t: u8| (0.55 * c as f64 + 0.45 * t as f64).round() as u8;
    let dim = |c: u8| (0.35 * c as f64).round() as u8;
    // region 1 top-left, 2 top-right, 3 bottom-left, 4 bottom-right
    let check = |x: u32, y: u32, f: &dyn Fn(u8, usize) -> u8| {
        let o = original.get_pixel(x, y).0;
        let got = overlay.get_pixel(x, y).0;
        let want = [f(o[0], 0), f(o[1], 1), f(o[2], 2)];
        assert_eq!(got, want, "pixel ({x}, {y})");
    };
    check(0, 0, &|c, ch| blend(c, [255, 0, 0][ch]));
    check(7, 0, &|c, _| blend(c, 255));
    check(0, 7, &|c, _| blend(c, 255));
    check(7, 7, &|c, _| dim(c));

    let translated = visfocus(&["translate", s(&out.join("scene.states.json"))]);
    assert!(translated.status.success());
    assert_eq!(
        String::from_utf8_lossy(&translated.stdout).trim(),
        "I1 & (I2 | I3)"
    );
    let as_json = visfocus(&["translate", "--json", s(&out.join("scene.states.json"))]);
    let expr: LogicExpr = serde_json::from_slice(&as_json.stdout).unwrap();
    assert_eq!(expr, one_and_two_or_three());
}

#[test]
fn beam_of_one_is_a_subset() {
    let dir = tempfile::tempdir().unwrap();
    let (img, labels, _) = quadrants(dir.path(), "scene", &[1]);
    let model = synthetic_model(dir.path(), &one_and_two_or_three());
    let out = dir.path().join("out");
    let model_arg = format!("synthetic:{}", s(&model));
    let run = visfocus(&[
        "refine",
        "--image",
        s(&img),
        "--labels",
        s(&labels),
        "--model",
        &model_arg,
        "--beam",
        "1",
        "--out",
        s(&out),
    ]);
    assert!(run.status.success());
    let states = json(&out.join("scene.states.json"));
    assert_eq!(states["beam_size"], 1);
    let got = states["states"].as_array().unwrap();
    assert_eq!(got.len(), 1);
    assert!(got[0] == serde_json::json!([1, 2]) || got[0] == serde_json::json!([1, 3]));
}

#[test]
fn analyze_perfect_focus() {
    let dir = tempfile::tempdir().unwrap();
    let (img, labels, gt) = quadrants(dir.path(), "scene", &[1, 2]);
    let model = synthetic_model(dir.path(), &LogicExpr::and([lit(1), lit(2)]));
    let out = dir.path().join("out");
    let model_arg = format!("synthetic:{}", s(&model));
    let run = visfocus(&[
        "analyze",
        "--image",
        s(&img),
        "--labels",
        s(&labels),
        "--gt",
        s(&gt),
        "--model",
        &model_arg,
        "--out",
        s(&out),
    ]);
    assert!(
        run.status.success(),
        "{}",
        String::from_utf8_lossy(&run.stderr)
    );
    let report = json(&out.join("scene.report.json"));
    assert_eq!(report["precision"], 1.0);
    assert_eq!(report["recall"], 1.0);
    assert_eq!(report["divergence"], 0.0);
    assert_eq!(report["behavior"], "Holistic");
    assert_eq!(report["logic"], "I1 & I2");
    assert_eq!(report["ground_truth"], serde_json::json!([1, 2]));
    assert_eq!(report["fill_mode"], "#808080");
    assert!(out.join("corpus.json").exists());
}

fn write_corpus(dir: &Path) -> std::path::PathBuf {
    let mut entries = Vec::new();
    for (stem, gt) in [("a", &[1u32, 2][..]), ("b", &[1][..]), ("c", &[2, 4][..])] {
        quadrants(dir, stem, gt);
        entries.push(serde_json::json!({
            "image": format!("{stem}.png"),
            "labels": format!("{stem}.labels.png"),
            "gt": [format!("{stem}.gt.png")],
        }));
    }
    let manifest = dir.join("corpus.json");
    fs::write(&manifest, serde_json::Value::Array(entries).to_string()).unwrap();
    manifest
}

#[test]
fn corpus_aggregate_is_the_mean() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = write_corpus(dir.path());
    let model = synthetic_model(dir.path(), &one_and_two_or_three());
    let out = dir.path().join("out");
    let model_arg = format!("synthetic:{}", s(&model));
    let run = visfocus(&[
        "analyze",
        "--corpus",
        s(&manifest),
        "--model",
        &model_arg,
        "--jobs",
        "2",
        "--out",
        s(&out),
    ]);
    assert!(
        run.status.success(),
        "{}",
        String::from_utf8_lossy(&run.stderr)
    );
    let corpus = json(&out.join("corpus.json"));
    let images = corpus["images"].as_array().unwrap();
    assert_eq!(images.len(), 3);
    for key in ["precision", "recall", "divergence"] {
        let mean = images.iter().map(|r| r[key].as_f64().unwrap()).sum::<f64>() / 3.0;
        assert!(
            (corpus["aggregate"][key].as_f64().unwrap() - mean).abs() < 1e-12,
            "{key}"
        );
    }
    assert_eq!(corpus["aggregate"]["images"], 3);
    for stem in ["a", "b", "c"] {
        assert!(out.join(format!("{stem}.report.json")).exists());
        assert!(out.join(format!("{stem}.overlay.png")).exists());
    }
}

fn error_kind(out: &Output) -> String {
    let line = String::from_utf8_lossy(&out.stderr);
    let last = line.lines().last().unwrap_or_default().to_string();
    let v: serde_json::Value =
        serde_json::from_str(&last).unwrap_or_else(|_| panic!("not JSON: {line}"));
    v["error"].as_str().unwrap().to_string()
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let (img, labels, _) = quadrants(dir.path(), "scene", &[1]);
    let model = synthetic_model(dir.path(), &one_and_two_or_three());
    let out = dir.path().join("out");
    let model_arg = format!("synthetic:{}", s(&model));
    let base = [
        "--labels",
        s(&labels),
        "--model",
        &model_arg,
        "--out",
        s(&out),
    ];

    let missing = dir.path().join("missing.png");
    let mut args = vec!["refine", "--image", s(&missing)];
    args.extend(base);
    let run = visfocus(&args);
    assert_eq!(run.status.code(), Some(1));
    assert_eq!(error_kind(&run), "input");

    let mut args = vec!["refine", "--image", s(&img), "--beam", "0"];
    args.extend(base);
    assert_eq!(visfocus(&args).status.code(), Some(2));

    let mut args = vec!["analyze", "--image", s(&img)];
    args.extend(base);
    let run = visfocus(&args);
    assert_eq!(run.status.code(), Some(2), "analyze without --gt");
    assert_eq!(error_kind(&run), "config");

    let run = visfocus(&[
        "refine",
        "--image",
        s(&img),
        "--labels",
        s(&labels),
        "--model",
        "exec:/nonexistent/model",
        "--out",
        s(&out),
    ]);
    assert_eq!(run.status.code(), Some(3));
    assert_eq!(error_kind(&run), "predictor");

    let mut args = vec!["refine", "--image", s(&img), "--max-queries", "2"];
    args.extend(base);
    let run = visfocus(&args);
    assert_eq!(run.status.code(), Some(4));
    assert_eq!(error_kind(&run), "budget");
    let partial = json(&out.join("scene.states.json"));
    assert_eq!(partial["partial"], true);

    assert_eq!(visfocus(&["refine"]).status.code(), Some(2));
    assert_eq!(visfocus(&["--help"]).status.code(), Some(0));
}
