use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::{Duration, Instant};

use mblq_cli::RunManifest;

fn mblq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mblq")).args(args).output().expect("spawn mblq")
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path
}

fn run(kind: &str, config: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![kind, "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    mblq(&args)
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Every non-manifest file below `dir`, relative path to bytes.
fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    fn walk(root: &Path, dir: &Path, out: &mut Vec<(String, Vec<u8>)>) {
        for entry in fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                walk(root, &path, out);
            } else if path.file_name().unwrap() != "manifest.json" {
                let rel = path.strip_prefix(root).unwrap().to_string_lossy().into_owned();
                out.push((rel, fs::read(&path).unwrap()));
            }
        }
    }
    let mut out = Vec::new();
    walk(dir, dir, &mut out);
    out.sort();
    out
}

const SUPREMACY: &str = "kind = \"supremacy-curve\"\nseed = 5\nrealizations = 3\n\n[chain]\nL = 4\n\n[quench]\nM = 20\n";

#[test]
fn same_seed_gives_byte_identical_outputs_for_any_worker_count() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), "run.toml", SUPREMACY);
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    assert!(run("supremacy-curve", &config, &a, &["--workers", "1"]).status.success());
    let second = run("supremacy-curve", &config, &b, &["--workers", "3", "--emit-plots"]);
    assert!(second.status.success(), "{}", stderr(&second));
    let fa = files(&a);
    let fb: Vec<_> = files(&b).into_iter().filter(|(p, _)| !p.ends_with(".svg")).collect();
    assert!(fa.iter().any(|(p, _)| p.ends_with(".csv")));
    assert_eq!(fa, fb);
    assert!(files(&b).iter().any(|(p, _)| p == "supremacy.svg"));

    let c = tmp.path().join("c");
    assert!(run("supremacy-curve", &config, &c, &["--seed", "6"]).status.success());
    assert_ne!(fa, files(&c));
}

#[test]
fn manifest_records_checksums_and_replays() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(
        tmp.path(),
        "train.toml",
        "kind = \"train\"\nseed = 2\n[chain]\nL = 3\nF = 2.5\nW = [1.0, 20.0]\n[training]\nM = 6\nD = 4\ndatasets = 2\ndataset_size = 300\n",
    );
    let first = tmp.path().join("first");
    assert!(run("train", &config, &first, &[]).status.success());
    let manifest = RunManifest::read(&first.join("manifest.json")).unwrap();
    assert_eq!(manifest.status, mblq_cli::RunStatus::Complete);
    assert_eq!(manifest.config.master_seed, 2);
    assert_eq!(manifest.derived_seeds.len(), 4);
    for record in &manifest.outputs {
        let bytes = fs::read(first.join(&record.path)).unwrap();
        assert_eq!(bytes.len() as u64, record.bytes);
        assert_eq!(mblq_cli::output::sha256_hex(&bytes), record.sha256);
    }
    assert!(manifest.outputs.iter().any(|r| r.path == "schedule_F2.5_W20_d1.txt"));

    let replay = tmp.path().join("replay");
    let out = run("train", &first.join("manifest.json"), &replay, &[]);
    assert!(out.status.success(), "{}", stderr(&out));
    let again = RunManifest::read(&replay.join("manifest.json")).unwrap();
    assert_eq!(manifest.outputs, again.outputs);
}

#[test]
fn two_site_smoke_run_is_fast() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(
        tmp.path(),
        "smoke.toml",
        "kind = \"level-stats\"\nrealizations = 1\n[chain]\nL = 2\n",
    );
    let start = Instant::now();
    let out = run("level-stats", &config, &tmp.path().join("out"), &[]);
    let elapsed = start.elapsed();
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(elapsed < Duration::from_secs(1), "{elapsed:?}");
    let summary = fs::read_to_string(tmp.path().join("out/level_stats_summary.csv")).unwrap();
    assert!(summary.starts_with("# schema: mblq/level-stats-summary/v1\nF_J,W_J,"));
    assert_eq!(summary.lines().count(), 6);
}

#[test]
fn every_kind_runs_at_toy_scale() {
    let tmp = tempfile::tempdir().unwrap();
    let body = "seed = 1\nrealizations = 2\n[chain]\nL = 3\n\
                [quench]\nM = 16\nwindow_start = 5\nwindow_len = 4\ndm_max = 3\ncheckpoint_every = 5\n\
                [training]\nM = 5\nD = 3\ndatasets = 2\ndataset_size = 100\nratio_realizations = 2\n";
    for kind in ["level-stats", "cue-check", "supremacy-curve", "memory", "make-dataset", "train", "w-sweep"] {
        let config = write_config(tmp.path(), &format!("{kind}.toml"), &format!("kind = \"{kind}\"\n{body}"));
        let out_dir = tmp.path().join(kind);
        let out = run(kind, &config, &out_dir, &["--emit-plots"]);
        assert!(out.status.success(), "{kind}: {}", stderr(&out));
        let manifest = RunManifest::read(&out_dir.join("manifest.json")).unwrap();
        assert!(!manifest.outputs.is_empty(), "{kind}");
        assert!(!out_dir.join("checkpoints").exists(), "{kind}");
        for record in &manifest.outputs {
            if record.path.ends_with(".csv") {
                let text = fs::read_to_string(out_dir.join(&record.path)).unwrap();
                assert!(text.starts_with("# schema: mblq/"), "{}", record.path);
            }
        }
    }
    let sidecar = fs::read_to_string(tmp.path().join("make-dataset/datasets/dataset_1.json")).unwrap();
    assert!(sidecar.contains("\"model_id\": \"boltzmann-1\""));
    let data = fs::read_to_string(tmp.path().join("make-dataset/datasets/dataset_1.txt")).unwrap();
    assert_eq!(data.lines().count(), 100);
}

#[test]
fn config_errors_exit_with_code_one() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let cases = [
        ("seed = 1\n", "kind"),
        ("kind = \"\"\n", "kind"),
        ("kind = \"memory\"\n[chain]\nW = -1.0\n", "chain.W"),
        ("kind = \"memory\"\n\n[chain]\nsize = 3\n", "line 4"),
        ("kind = \"memory\"\n[chain\n", "line 2"),
        ("kind = \"train\"\n", "config says"),
    ];
    for (k, (body, needle)) in cases.iter().enumerate() {
        let config = write_config(tmp.path(), &format!("bad{k}.toml"), body);
        let result = run("memory", &config, &out, &[]);
        assert_eq!(result.status.code(), Some(1), "{body}");
        assert!(stderr(&result).contains(needle), "{body}: {}", stderr(&result));
    }
    assert!(!out.exists());

    let missing = run("memory", &tmp.path().join("absent.toml"), &out, &[]);
    assert_eq!(missing.status.code(), Some(1));
    assert_eq!(mblq(&["no-such-kind", "--config", "x.toml"]).status.code(), Some(1));
    let good = write_config(tmp.path(), "good.toml", "kind = \"memory\"\n");
    assert_eq!(run("memory", &good, &out, &["--workers", "0"]).status.code(), Some(1));
}

#[test]
fn runtime_failures_exit_with_code_two() {
    let tmp = tempfile::tempdir().unwrap();
    let blocker = tmp.path().join("file");
    fs::write(&blocker, "not a directory").unwrap();
    let config = write_config(tmp.path(), "ok.toml", "kind = \"level-stats\"\nrealizations = 1\n[chain]\nL = 2\n");
    let result = run("level-stats", &config, &blocker.join("out"), &[]);
    assert_eq!(result.status.code(), Some(2), "{}", stderr(&result));
}

#[test]
fn mid_run_failure_leaves_a_failed_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    fs::create_dir_all(&out).unwrap();
    // a plain file where the checkpoint directory should go
    fs::write(out.join("checkpoints"), "").unwrap();
    let config = write_config(
        tmp.path(),
        "cue.toml",
        "kind = \"cue-check\"\nrealizations = 1\n[chain]\nL = 2\n[quench]\nM = 10\ncheckpoint_every = 3\n",
    );
    let result = run("cue-check", &config, &out, &[]);
    assert_eq!(result.status.code(), Some(2));
    assert!(stderr(&result).contains("partial results"), "{}", stderr(&result));
    let manifest = RunManifest::read(&out.join("manifest.json")).unwrap();
    assert!(matches!(manifest.status, mblq_cli::RunStatus::Failed { .. }));
}
