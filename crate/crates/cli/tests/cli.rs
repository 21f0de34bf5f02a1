use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use tempfile::TempDir;

fn dsmn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dsmn")).args(args).env_remove("DSMN_DATA_ROOT").output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn ok(o: Output) -> String {
    assert!(o.status.success(), "status {:?}\nstdout:\n{}\nstderr:\n{}", o.status, stdout(&o), stderr(&o));
    stdout(&o)
}

fn s(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

fn generate(dir: &Path, kind: &str, n: usize, seed: u64, res: usize) -> PathBuf {
    let out = dir.join(format!("{kind}-{n}-{seed}-{res}"));
    ok(dsmn(&["generate", kind, s(&out), "-n", &n.to_string(), "-s", &seed.to_string(), "-r", &res.to_string()]));
    out
}

fn header(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("header.json")).unwrap()).unwrap()
}

/// One-epoch, one-run training of a small model.
fn quick_train(data: &Path, out: &Path, extra: &[&str]) -> String {
    let mut args = vec!["train", s(data), s(out), "runs=1", "max_epochs=2", "patience=2", "dim=8"];
    args.extend_from_slice(extra);
    ok(dsmn(&args))
}

#[test]
fn generate_default_count_is_38400() {
    let help = ok(dsmn(&["generate", "--help"]));
    assert!(help.contains("38400"), "{help}");
}

#[test]
fn generate_splits_evenly_and_records_header() {
    let t = TempDir::new().unwrap();
    let d = generate(t.path(), "floorplan", 48, 3, 8);
    let h = header(&d);
    for split in ["train", "val", "test"] {
        assert_eq!(h["splits"][split], 16);
        assert!(d.join(format!("{split}.jsonl")).exists());
        assert!(d.join(format!("{split}.visual.bin")).exists());
    }
    assert_eq!(h["seed"], 3);
    assert_eq!(h["generator_version"], 1);
    let d = generate(t.path(), "shapes", 30, 3, 8);
    assert!(header(&d)["k"].as_u64().is_some());
}

#[test]
fn same_seed_reproduces_hashes() {
    let t = TempDir::new().unwrap();
    let a = generate(t.path(), "floorplan", 24, 9, 8);
    let b = t.path().join("again");
    ok(dsmn(&["generate", "floorplan", s(&b), "-n", "24", "-s", "9", "-r", "8"]));
    assert_eq!(header(&a)["files"], header(&b)["files"]);
    for f in ["train.jsonl", "val.visual.bin", "header.json"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn indivisible_count_is_a_usage_error() {
    let t = TempDir::new().unwrap();
    let o = dsmn(&["generate", "floorplan", s(&t.path().join("x")), "-n", "100", "-r", "8"]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    let o = dsmn(&["generate", "floorplan", s(&t.path().join("y")), "-n", "30", "-r", "8"]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    let o = dsmn(&["generate", "mazes", s(&t.path().join("z")), "-n", "24"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn generate_refuses_to_overwrite() {
    let t = TempDir::new().unwrap();
    let d = generate(t.path(), "floorplan", 24, 0, 8);
    let before = std::fs::read(d.join("header.json")).unwrap();
    let o = dsmn(&["generate", "floorplan", s(&d), "-n", "24", "-s", "1", "-r", "8"]);
    assert!(!o.status.success());
    assert_eq!(std::fs::read(d.join("header.json")).unwrap(), before);
}

#[test]
fn train_eval_inspect_floorplan() {
    let t = TempDir::new().unwrap();
    let d = generate(t.path(), "floorplan", 600, 1, 8);
    let ck = t.path().join("ck");
    let out = quick_train(&d, &ck, &["model=dmnplus", "--limit", "200"]);
    assert!(out.contains("val accuracy:"), "{out}");
    assert!(out.contains("test accuracy:"), "{out}");
    for f in ["model.bin", "manifest.json", "run0.log.jsonl"] {
        assert!(ck.join(f).exists(), "{f}");
    }
    let log = std::fs::read_to_string(ck.join("run0.log.jsonl")).unwrap();
    assert_eq!(log.lines().count(), 2);

    let out = ok(dsmn(&["eval", s(&ck), s(&d)]));
    assert!(out.starts_with("accuracy: "), "{out}");
    let record: serde_json::Value = serde_json::from_str(out.lines().nth(1).unwrap()).unwrap();
    assert_eq!(record["metric"], "accuracy");
    assert_eq!(record["split"], "test");
    assert_eq!(record["samples"], 200);

    let out = ok(dsmn(&["inspect", s(&ck)]));
    assert!(out.contains("checkpoint dmnplus"), "{out}");
    let out = ok(dsmn(&["inspect", s(&d)]));
    assert!(out.contains("train: 200 samples"), "{out}");
    let out = ok(dsmn(&["inspect", s(&ck.join("model.bin"))]));
    assert!(out.starts_with("tensor container"), "{out}");
}

#[test]
fn eval_shapes_prints_rmse() {
    let t = TempDir::new().unwrap();
    let d = generate(t.path(), "shapes", 60, 2, 8);
    let ck = t.path().join("ck");
    let out = quick_train(&d, &ck, &["model=lstm1"]);
    assert!(out.contains("test rmse:"), "{out}");
    let out = ok(dsmn(&["eval", s(&ck), s(&d), "--split", "val"]));
    assert!(out.starts_with("rmse: "), "{out}");
}

#[test]
fn config_file_and_overrides() {
    let t = TempDir::new().unwrap();
    let d = generate(t.path(), "floorplan", 24, 0, 8);
    let cfg = t.path().join("run.cfg");
    std::fs::write(&cfg, "# small\nmodel = lstm1\ndim=8\nruns=1\nmax_epochs=3\npatience=3\n").unwrap();
    let ck = t.path().join("ck");
    ok(dsmn(&["train", s(&d), s(&ck), "-c", s(&cfg), "max_epochs=1", "patience=1"]));
    let m: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(ck.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["config"]["model"], "lstm1");
    assert_eq!(m["config"]["max_epochs"], "1");
    assert_eq!(std::fs::read_to_string(ck.join("run0.log.jsonl")).unwrap().lines().count(), 1);
}

#[test]
fn invalid_key_lists_valid_keys() {
    let t = TempDir::new().unwrap();
    let d = generate(t.path(), "floorplan", 24, 0, 8);
    let o = dsmn(&["train", s(&d), s(&t.path().join("ck")), "learning_rate=0.1"]);
    assert_eq!(o.status.code(), Some(1));
    let e = stderr(&o);
    assert!(e.contains("learning_rate") && e.contains("valid keys") && e.contains("lambda_vi"), "{e}");
}

#[test]
fn missing_dataset_is_a_data_error() {
    let t = TempDir::new().unwrap();
    let missing = t.path().join("nowhere");
    let o = dsmn(&["train", s(&missing), s(&t.path().join("ck"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("nowhere"), "{}", stderr(&o));
}

#[test]
fn tampered_checkpoint_is_rejected() {
    let t = TempDir::new().unwrap();
    let d = generate(t.path(), "floorplan", 24, 0, 8);
    let ck = t.path().join("ck");
    quick_train(&d, &ck, &["model=lstm1"]);
    let path = ck.join("model.bin");
    let mut bytes = std::fs::read(&path).unwrap();
    let last = bytes.len() - 1;
    bytes[last] ^= 0x40;
    std::fs::write(&path, bytes).unwrap();
    let o = dsmn(&["eval", s(&ck), s(&d)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("integrity"), "{}", stderr(&o));
}

#[test]
fn visualize_three_hop_dsmn_star() {
    let t = TempDir::new().unwrap();
    let d = generate(t.path(), "floorplan", 24, 4, 8);
    let ck = t.path().join("ck");
    quick_train(&d, &ck, &["model=dsmn_star", "hops=3"]);
    let out_dir = t.path().join("viz");
    ok(dsmn(&["visualize", s(&ck), s(&d), "test-000003", s(&out_dir)]));
    let tsv = std::fs::read_to_string(out_dir.join("gates.tsv")).unwrap();
    let mut per_hop = std::collections::BTreeMap::<u32, (usize, f64)>::new();
    for line in tsv.lines().skip(1) {
        let f: Vec<&str> = line.split('\t').collect();
        let e = per_hop.entry(f[1].parse().unwrap()).or_default();
        e.0 += 1;
        e.1 += f[2].parse::<f64>().unwrap();
    }
    assert_eq!(per_hop.len(), 3);
    let n = per_hop[&1].0;
    for (_, (count, sum)) in per_hop {
        assert_eq!(count, n);
        assert!((sum - 1.0).abs() < 1e-5, "{sum}");
    }
    let table = std::fs::read_to_string(out_dir.join("gates.txt")).unwrap();
    assert!(table.contains("darker") || table.contains("dark"), "{table}");
    for i in 1..=n {
        for prefix in ["s", "truth", "pair"] {
            assert!(out_dir.join(format!("{prefix}{i:02}.pgm")).exists(), "{prefix}{i:02}");
        }
    }
    for t in 1..=3 {
        assert!(out_dir.join(format!("memory{t}.pgm")).exists());
    }
    let pgm = std::fs::read(out_dir.join("pair01.pgm")).unwrap();
    assert!(pgm.starts_with(b"P5\n17 8\n"), "{:?}", &pgm[..12]);

    let o = dsmn(&["visualize", s(&ck), s(&d), "test-999999", s(&out_dir)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("unknown sample id"));
}

#[test]
fn data_root_resolves_relative_paths() {
    let t = TempDir::new().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_dsmn"))
        .args(["generate", "floorplan", "rel", "-n", "24", "-r", "8"])
        .env("DSMN_DATA_ROOT", t.path())
        .output()
        .unwrap();
    ok(o);
    assert!(t.path().join("rel").join("header.json").exists());
}
