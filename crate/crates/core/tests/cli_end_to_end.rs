use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use saliency_lab::attribution::load_map;
use saliency_lab::data::{synthetic_digits, write_idx};

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_saliency-lab"))
        .args(args)
        .env_remove("SF_SEED")
        .output()
        .unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn tree(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    out.sort();
    out
}

#[test]
fn train_then_attribute() {
    let tmp = tempfile::tempdir().unwrap();
    let images = tmp.path().join("images.idx");
    let labels = tmp.path().join("labels.idx");
    write_idx(&synthetic_digits(300, 1), &images, &labels).unwrap();
    let model_dir = tmp.path().join("model");
    let out = bin(&[
        "train", "--images", p(&images), "--labels", p(&labels), "--epochs", "3", "--out", p(&model_dir),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let net = model_dir.join("net.sfn");
    assert!(net.exists());

    let maps = tmp.path().join("maps");
    let out = bin(&[
        "attribute", "--net", p(&net), "--image", p(&images), "--index", "0", "--method", "cgi", "--out", p(&maps),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let names: Vec<String> = tree(&maps).into_iter().map(|(n, _)| n).collect();
    let sfm = names.iter().find(|n| n.starts_with("cgi_img0") && n.ends_with(".sfm")).expect("map file");
    assert!(names.iter().any(|n| n.starts_with("cgi_img0") && n.ends_with(".ppm")));
    let map = load_map(maps.join(sfm)).unwrap();
    assert_eq!(map.shape(), &[16, 16]);

    let rendered = tmp.path().join("rendered");
    let out = bin(&["render", "--map", p(&maps.join(sfm)), "--style", "absolute", "--out", p(&rendered)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn theory_writes_a_finite_row() {
    let tmp = tempfile::tempdir().unwrap();
    let out = bin(&["theory", "--delta", "0.15", "--trials", "100", "--n", "10000", "--out", p(tmp.path())]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(tmp.path().join("theory.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("delta,c1_mean,c1_stderr,c2_mean,c2_stderr"));
    let row: Vec<f64> = lines.next().unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    assert_eq!(row.len(), 5);
    assert!(row.iter().all(|v| v.is_finite()));
    assert_eq!(row[0], 0.15);
}

#[test]
fn usage_errors_exit_with_two() {
    let out = bin(&[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
    let out = bin(&["theory", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no-such-flag"));
}

#[test]
fn runtime_errors_exit_with_one() {
    let tmp = tempfile::tempdir().unwrap();
    let out = bin(&["render", "--map", p(&tmp.path().join("missing.sfm")), "--out", p(tmp.path())]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn identical_runs_write_identical_trees() {
    let tmp = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let dir = tmp.path().join(name);
        let args = ["train", "--synthetic", "200", "--epochs", "2", "--seed", "7", "--out", p(&dir)];
        assert_eq!(bin(&args).status.code(), Some(0));
        let args = ["theory", "--grid", "0.1,0.2", "--trials", "10", "--n", "2000", "--seed", "7", "--out", p(&dir)];
        assert_eq!(bin(&args).status.code(), Some(0));
        tree(&dir)
    };
    assert_eq!(run("a"), run("b"));
}
