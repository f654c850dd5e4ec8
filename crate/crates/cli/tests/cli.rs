use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use swathfill::raster::{load_mask, load_raster, save_raster, Raster};
use swathfill::synth::{synthetic_corpus, write_corpus, DEFAULT_CLASSES};
use tempfile::TempDir;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_swathfill"));
    c.env_remove("SWATHFILL_SEED");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn swathfill")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn corpus(dir: &Path, per_class: usize, size: u32) -> PathBuf {
    let root = dir.join("corpus");
    write_corpus(&root, &synthetic_corpus(&DEFAULT_CLASSES, per_class, size, size, 99)).unwrap();
    root
}

fn json(out: &Output) -> serde_json::Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("json on stdout")
}

#[test]
fn empty_input_is_config_error() {
    let tmp = TempDir::new().unwrap();
    let empty = tmp.path().join("empty");
    fs::create_dir(&empty).unwrap();
    let out = run(&["simulate", "--input", s(&empty), "--out", s(&tmp.path().join("o"))]);
    assert_eq!(code(&out), 2);
}

#[test]
fn bad_flags_are_config_errors() {
    let tmp = TempDir::new().unwrap();
    let root = corpus(tmp.path(), 1, 32);
    let o = tmp.path().join("o");
    for extra in [&["--area-fraction", "0.3"][..], &["--split", "1.5"], &["--jobs", "0"]] {
        let mut args = vec!["simulate", "--input", s(&root), "--out", s(&o)];
        args.extend_from_slice(extra);
        assert_eq!(code(&run(&args)), 2, "{extra:?}");
    }
    // Unknown policy is rejected by the argument parser, also with 2.
    assert_eq!(code(&run(&["fill", "--input", "x.png", "--out", "y.png", "--policy", "smear"])), 2);
}

#[test]
fn missing_file_is_io_error() {
    let tmp = TempDir::new().unwrap();
    let out = run(&["detect", "--input", s(&tmp.path().join("nope.png"))]);
    assert_eq!(code(&out), 3);
    let jpg = tmp.path().join("a.jpg");
    fs::write(&jpg, b"\xff\xd8\xff\xe0 not really").unwrap();
    assert_eq!(code(&run(&["detect", "--input", s(&jpg)])), 3);
}

#[test]
fn all_gap_fill_is_degenerate() {
    let tmp = TempDir::new().unwrap();
    let black = tmp.path().join("black.png");
    save_raster(&Raster::filled(16, 16, [0, 0, 0]), &black).unwrap();
    for policy in ["pixel", "neighbor"] {
        let out = run(&["fill", "--input", s(&black), "--out", s(&tmp.path().join("f.png")), "--policy", policy]);
        assert_eq!(code(&out), 4, "{policy}");
    }
    // Random needs no sources.
    let out = run(&["fill", "--input", s(&black), "--out", s(&tmp.path().join("f.png")), "--policy", "random"]);
    assert_eq!(code(&out), 0);
}

#[test]
fn fill_is_byte_identical_across_runs() {
    let tmp = TempDir::new().unwrap();
    let root = corpus(tmp.path(), 1, 64);
    let src = root.join("beach/beach00.png");
    let gapped = tmp.path().join("g.png");
    assert_eq!(code(&run(&["inject", "--input", s(&src), "--out", s(&gapped), "--position", "lr"])), 0);
    for policy in ["random", "pixel", "neighbor"] {
        let a = tmp.path().join(format!("{policy}_a.png"));
        let b = tmp.path().join(format!("{policy}_b.png"));
        for p in [&a, &b] {
            let out = run(&["fill", "--input", s(&gapped), "--out", s(p), "--policy", policy, "--seed", "5"]);
            assert!(out.status.success());
        }
        assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap(), "{policy}");
        assert!(a.with_extension("json").exists());
    }
    // The env var stands in for --seed.
    let c = tmp.path().join("c.png");
    let out = bin()
        .env("SWATHFILL_SEED", "5")
        .args(["fill", "--input", s(&gapped), "--out", s(&c), "--policy", "pixel"])
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(fs::read(&c).unwrap(), fs::read(tmp.path().join("pixel_a.png")).unwrap());
}

#[test]
fn neighbor_fill_leaves_no_sentinel() {
    let tmp = TempDir::new().unwrap();
    let root = corpus(tmp.path(), 1, 96);
    let gapped = tmp.path().join("g.png");
    let mask = tmp.path().join("m.png");
    let out = run(&[
        "inject", "--input", s(&root.join("river/river00.png")), "--out", s(&gapped), "--mask-out", s(&mask),
        "--position", "ur",
    ]);
    assert!(out.status.success());
    let filled = tmp.path().join("f.png");
    let radii = tmp.path().join("r.png");
    let report = json(&run(&["fill", "--input", s(&gapped), "--out", s(&filled), "--radii", s(&radii)]));
    let m = load_mask(&mask).unwrap();
    assert_eq!(report["pixels_filled"], m.gap_count());
    let f = load_raster(&filled).unwrap();
    let sentinels = f
        .pixels()
        .iter()
        .zip(m.as_slice())
        .filter(|(p, v)| !**v && **p == [0, 0, 0])
        .count();
    assert_eq!(sentinels, 0);
    assert!(radii.exists());

    let detected = json(&run(&["detect", "--input", s(&filled)]));
    assert_eq!(detected["gap_fraction"], 0.0);
    assert_eq!(detected["components"], 0);
}

#[test]
fn detect_usability() {
    let tmp = TempDir::new().unwrap();
    let clean = tmp.path().join("clean.png");
    save_raster(&Raster::filled(40, 40, [5, 80, 9]), &clean).unwrap();
    let v = json(&run(&["detect", "--input", s(&clean)]));
    assert_eq!(v["usable"], true);
    assert_eq!(v["components"], 0);

    for (rows, usable) in [(8, true), (10, false), (12, false)] {
        let p = tmp.path().join(format!("g{rows}.png"));
        let r = Raster::from_fn(40, 40, |_, y| if y < rows { [0, 0, 0] } else { [5, 80, 9] });
        save_raster(&r, &p).unwrap();
        let v = json(&run(&["detect", "--input", s(&p)]));
        assert_eq!(v["usable"], usable, "rows {rows}");
        assert_eq!(v["gap_fraction"], rows as f64 / 40.0);
    }
}

#[test]
fn custom_sentinel_round_trip() {
    let tmp = TempDir::new().unwrap();
    let root = corpus(tmp.path(), 1, 48);
    let src = root.join("forest/forest00.png");
    let gapped = tmp.path().join("g.png");
    let sentinel = "0,255,0";
    let out = run(&[
        "inject", "--input", s(&src), "--out", s(&gapped), "--sentinel", sentinel, "--area-fraction", "0.1",
    ]);
    let stats = json(&out);
    let v = json(&run(&["detect", "--input", s(&gapped), "--sentinel", sentinel]));
    assert_eq!(v["gap_fraction"], stats["gap_fraction"]);
    let filled = tmp.path().join("f.png");
    json(&run(&["fill", "--input", s(&gapped), "--out", s(&filled), "--sentinel", sentinel]));
    let rec = json(&run(&[
        "evaluate", "--original", s(&src), "--filled", s(&filled), "--gapped", s(&gapped), "--sentinel", sentinel,
        "--policy", "neighbor", "--seed", "0",
    ]));
    assert_eq!(rec["gap_fraction"], stats["gap_fraction"]);
    assert_eq!(rec["policy"], "neighbor");
    let d = rec["histogram_divergence"].as_f64().unwrap();
    assert!((0.0..=std::f64::consts::LN_2).contains(&d));
}

#[test]
fn simulate_manifest_is_deterministic() {
    let tmp = TempDir::new().unwrap();
    let root = corpus(tmp.path(), 2, 32);
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    for (o, jobs) in [(&a, "1"), (&b, "3")] {
        let out = run(&["simulate", "--input", s(&root), "--out", s(o), "--seed", "17", "--jobs", jobs]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let ma = fs::read_to_string(a.join("manifest.jsonl")).unwrap();
    let mb = fs::read_to_string(b.join("manifest.jsonl")).unwrap();
    assert_eq!(ma.lines().count(), 7 * 2 * 5);
    assert_eq!(ma.replace(s(&a), ""), mb.replace(s(&b), ""));
    for line in ma.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        for key in ["source", "class", "position", "output", "seed"] {
            assert!(v.get(key).is_some(), "{key} missing in {line}");
        }
        assert!(Path::new(v["output"].as_str().unwrap()).exists());
    }
    assert_eq!(
        fs::read(a.join("harbor/harbor00_ll.png")).unwrap(),
        fs::read(b.join("harbor/harbor00_ll.png")).unwrap()
    );
}

#[test]
fn batch_writes_all_artifacts() {
    let tmp = TempDir::new().unwrap();
    let root = corpus(tmp.path(), 5, 40);
    let out_dir = tmp.path().join("out");
    let out = run(&["batch", "--input", s(&root), "--out", s(&out_dir), "--seed", "3", "--jobs", "2"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let manifest = fs::read_to_string(out_dir.join("manifest.jsonl")).unwrap();
    assert_eq!(manifest.lines().count(), 175);
    let mut rdr = csv::Reader::from_path(out_dir.join("summary.csv")).unwrap();
    let headers = rdr.headers().unwrap().clone();
    assert_eq!(
        headers.iter().collect::<Vec<_>>(),
        ["class", "image", "position", "policy", "seed", "boundary_gradient_ratio", "histogram_divergence"]
    );
    assert_eq!(rdr.records().count(), 420);
    assert_eq!(fs::read_to_string(out_dir.join("fills.jsonl")).unwrap().lines().count(), 420);

    let split = out_dir.join("split");
    let count = |name: &str| fs::read_to_string(split.join(name)).unwrap().lines().count();
    assert_eq!((count("train.txt"), count("val.txt")), (158, 17));
    for p in ["random", "pixel", "neighbor"] {
        assert_eq!(count(&format!("{p}_train.txt")) + count(&format!("{p}_val.txt")), 175);
        for line in fs::read_to_string(split.join(format!("{p}_val.txt"))).unwrap().lines() {
            assert!(Path::new(line).exists(), "{line}");
        }
    }
    assert!(!out_dir.join("summary.csv.partial").exists());
}

#[test]
fn batch_selects_classes_and_counts() {
    let tmp = TempDir::new().unwrap();
    let root = corpus(tmp.path(), 3, 24);
    let out_dir = tmp.path().join("out");
    let out = run(&[
        "batch", "--input", s(&root), "--out", s(&out_dir), "--classes", "beach,river", "--images-per-class", "2",
        "--policy", "pixel",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = csv::Reader::from_path(out_dir.join("summary.csv")).unwrap().records().count();
    assert_eq!(rows, 2 * 2 * 4);
    assert!(out_dir.join("filled_pixel").is_dir());
    assert!(!out_dir.join("filled_random").exists());
}
