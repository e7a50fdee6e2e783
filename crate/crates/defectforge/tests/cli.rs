use std::path::Path;
use std::process::{Command, Output};

use defectforge::dataset::read_patch_set;
use defectforge::load_checkpoint;
use defectforge_core::nn::desk_preset;
use defectforge_core::Model;

fn cli(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_defectforge"));
    cmd.args(args).env_remove("DEFECTFORGE_THREADS");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// synth + extract into `root`; returns the patch directory.
fn small_patches(root: &Path, per_class: &str) -> std::path::PathBuf {
    let data = root.join("data");
    assert_eq!(code(&cli(&["synth", "--out", p(&data), "--per-class", per_class, "--seed", "3"], &[])), 0);
    let patches = root.join("patches");
    let images = data.join("images");
    let ann = data.join("annotations");
    let o = cli(&["extract", "--images", p(&images), "--annotations", p(&ann), "--out", p(&patches), "--height", "20", "--width", "30"], &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    patches
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(code(&cli(&["synth", "--per-class", "3"], &[])), 2);
    assert_eq!(code(&cli(&["synth", "--out", "x", "--bogus"], &[])), 2);
    assert_eq!(code(&cli(&["frobnicate"], &[])), 2);
    assert_eq!(code(&cli(&[], &[])), 2);
    assert_eq!(code(&cli(&["train", "--patches", "x", "--out", "y", "--epochs", "0"], &[])), 2);
    assert_eq!(code(&cli(&["train", "--patches", "x", "--out", "y", "--lr", "-1"], &[])), 2);
    assert_eq!(code(&cli(&["extract", "--images", "a", "--annotations", "b", "--out", "c", "--margin", "-0.5"], &[])), 2);
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&cli(&["synth", "--out", p(dir.path()), "--width", "20"], &[])), 2);
    assert_eq!(code(&cli(&["synth", "--out", p(dir.path()), "--max-defects", "9"], &[])), 2);
    assert_eq!(code(&cli(&["--help"], &[])), 0);
}

#[test]
fn synth_with_zero_per_class() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("d");
    assert_eq!(code(&cli(&["synth", "--out", p(&out), "--per-class", "0"], &[])), 0);
    assert_eq!(std::fs::read_to_string(out.join("manifest.csv")).unwrap(), "file,label,count\n");
}

#[test]
fn validate_outcomes() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d");
    assert_eq!(code(&cli(&["synth", "--out", p(&data), "--per-class", "3", "--seed", "1"], &[])), 0);
    let (images, ann) = (data.join("images"), data.join("annotations"));
    let ok = cli(&["validate", "--images", p(&images), "--annotations", p(&ann)], &[]);
    assert_eq!(code(&ok), 0);
    assert!(stdout(&ok).contains("12 files, 0 findings"));

    std::fs::write(ann.join("0002.xml"), "<annotation><filename>0002.pgm</filename>").unwrap();
    let bad = cli(&["validate", "--images", p(&images), "--annotations", p(&ann)], &[]);
    assert_eq!(code(&bad), 1);
    assert!(stdout(&bad).contains("0002.xml: "));

    let empty_a = dir.path().join("ea");
    let empty_b = dir.path().join("eb");
    std::fs::create_dir_all(&empty_a).unwrap();
    std::fs::create_dir_all(&empty_b).unwrap();
    let none = cli(&["validate", "--images", p(&empty_a), "--annotations", p(&empty_b)], &[]);
    assert_eq!(code(&none), 0);
    assert!(stdout(&none).contains("0 files"));

    assert_eq!(code(&cli(&["validate", "--images", "/nonexistent", "--annotations", "/nonexistent"], &[])), 1);
}

#[test]
fn extract_counts_sizes_and_strictness() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d");
    assert_eq!(code(&cli(&["synth", "--out", p(&data), "--per-class", "5", "--seed", "2"], &[])), 0);
    let (images, ann) = (data.join("images"), data.join("annotations"));
    let out = dir.path().join("p");
    assert_eq!(code(&cli(&["extract", "--images", p(&images), "--annotations", p(&ann), "--out", p(&out)], &[])), 0);
    let set = read_patch_set(&out).unwrap();
    assert_eq!(set.records.len(), 20);
    assert!(set.pixels.iter().all(|t| t.shape() == [80, 120, 1]));
    let mut per_class = [0; 4];
    set.labels().iter().for_each(|&l| per_class[l] += 1);
    assert_eq!(per_class, [5; 4]);

    let partial = dir.path().join("q");
    let args = ["extract", "--images", p(&images), "--annotations", p(&ann), "--out", p(&partial), "--classes", "Crack,Hole"];
    let lax = cli(&args, &[]);
    assert_eq!(code(&lax), 0);
    assert!(String::from_utf8_lossy(&lax.stderr).contains("warning"));
    assert_eq!(read_patch_set(&partial).unwrap().records.len(), 10);
    let mut strict = args.to_vec();
    strict.push("--strict");
    assert_eq!(code(&cli(&strict, &[])), 1);

    let full = dir.path().join("f");
    let o = cli(&["extract", "--images", p(&images), "--annotations", p(&ann), "--out", p(&full), "--full-image"], &[]);
    assert_eq!(code(&o), 0);
    assert_eq!(read_patch_set(&full).unwrap().records.len(), 20);
}

#[test]
fn zero_learning_rate_writes_initial_parameters() {
    let dir = tempfile::tempdir().unwrap();
    let patches = small_patches(dir.path(), "3");
    let ckpt = dir.path().join("run/m.cnck");
    let o = cli(&["train", "--patches", p(&patches), "--epochs", "2", "--lr", "0", "--seed", "5", "--out", p(&ckpt)], &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let loaded = load_checkpoint(&ckpt).unwrap();
    let initial = Model::new(&desk_preset(4), &[20, 30, 1], 5).unwrap();
    assert_eq!(loaded.model.params(), initial.params());
    assert!(dir.path().join("run/epochs.csv").exists());
    assert!(dir.path().join("run/m.best.cnck").exists());
}

#[test]
fn thread_count_does_not_change_results() {
    let dir = tempfile::tempdir().unwrap();
    let patches = small_patches(dir.path(), "4");
    let mut outputs = Vec::new();
    for (tag, env) in [("seq", "0"), ("pool", "3")] {
        let ckpt = dir.path().join(tag).join("m.cnck");
        let args = ["train", "--patches", p(&patches), "--epochs", "2", "--seed", "9", "--batch", "5", "--augment", "--out", p(&ckpt)];
        assert_eq!(code(&cli(&args, &[("DEFECTFORGE_THREADS", env)])), 0);
        outputs.push((std::fs::read(&ckpt).unwrap(), std::fs::read(ckpt.with_file_name("epochs.csv")).unwrap()));
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(code(&cli(&["train", "--patches", p(&patches), "--out", "x"], &[("DEFECTFORGE_THREADS", "many")])), 2);
}

#[test]
fn eval_and_predict() {
    let dir = tempfile::tempdir().unwrap();
    let patches = small_patches(dir.path(), "3");
    let ckpt = dir.path().join("m.cnck");
    let o = cli(&["train", "--patches", p(&patches), "--epochs", "2", "--binary", "--out", p(&ckpt)], &[]);
    assert_eq!(code(&o), 0);
    let metrics = dir.path().join("metrics.csv");
    let e = cli(&["eval", "--ckpt", p(&ckpt), "--patches", p(&patches), "--csv", p(&metrics)], &[]);
    assert_eq!(code(&e), 0);
    let table = stdout(&e);
    assert!(table.contains("NonCrack") && table.contains("Weighted Ave"));
    let csv = std::fs::read_to_string(&metrics).unwrap();
    assert!(csv.starts_with("label,precision,recall,f1,support\nCrack,"));
    assert!(csv.lines().any(|l| l.starts_with("accuracy,,,") && l.ends_with(",12")));

    let pr = cli(&["predict", "--ckpt", p(&ckpt), "--image", p(&patches.join("00000.pgm"))], &[]);
    assert_eq!(code(&pr), 0);
    let text = stdout(&pr);
    let first = text.lines().next().unwrap();
    assert!(first.starts_with("Crack ") || first.starts_with("NonCrack "));
    let total: f64 = text.lines().skip(1).map(|l| l.split_whitespace().nth(1).unwrap().parse::<f64>().unwrap()).sum();
    assert!((total - 1.0).abs() < 1e-5);

    assert_eq!(code(&cli(&["predict", "--ckpt", p(&ckpt), "--image", p(&dir.path().join("nope.pgm"))], &[])), 1);
    assert_eq!(code(&cli(&["eval", "--ckpt", p(&dir.path().join("nope.cnck")), "--patches", p(&patches)], &[])), 1);
}
