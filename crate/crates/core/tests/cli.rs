//! End-to-end runs of the `cbt` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn cbt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cbt")).args(args).output().unwrap()
}

fn fixture() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/toy_books")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn build_fixture(out: &Path) -> Output {
    cbt(&[
        "build",
        "--books",
        fixture().to_str().unwrap(),
        "--stride",
        "1",
        "--seed",
        "7",
        "--out",
        out.to_str().unwrap(),
    ])
}

#[test]
fn fixture_build_has_a_frozen_dataset_hash() {
    let dir = tempfile::tempdir().unwrap();
    let o = build_fixture(dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout(&o).trim(), "dataset ad9b0136a488c8fb");
    assert!(o.stderr.is_empty(), "{}", String::from_utf8_lossy(&o.stderr));
    let meta = std::fs::read_to_string(dir.path().join("build_meta.txt")).unwrap();
    assert!(meta.contains("cbtest_NE_train.txt=790dd8fab143348d questions=9"), "{meta}");
}

#[test]
fn training_twice_gives_identical_checkpoints() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    assert_eq!(build_fixture(&data).status.code(), Some(0));
    let mut files = Vec::new();
    for i in 0..2 {
        let out = dir.path().join(format!("m{i}.ckpt"));
        let o = cbt(&[
            "train",
            "--model",
            "memnn-window",
            "--data",
            data.to_str().unwrap(),
            "--set",
            "epochs=2",
            "--set",
            "p=8",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        files.push(std::fs::read(&out).unwrap());
    }
    assert_eq!(files[0], files[1]);

    let ckpt = dir.path().join("m0.ckpt");
    let csv = dir.path().join("eval.csv");
    let o = cbt(&[
        "eval",
        ckpt.to_str().unwrap(),
        "word-distance",
        "--data",
        data.to_str().unwrap(),
        "--format",
        "csv",
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let o = cbt(&["report", csv.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let table = stdout(&o);
    assert!(table.contains("word-distance"), "{table}");
}

#[test]
fn command_line_overrides_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# toy run\nseed = 3\nstride=2\n").unwrap();
    let out = dir.path().join("data");
    let o = cbt(&[
        "--config",
        cfg.to_str().unwrap(),
        "--set",
        "seed=5",
        "build",
        "--books",
        fixture().to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let meta = std::fs::read_to_string(out.join("build_meta.txt")).unwrap();
    assert!(meta.contains("\nseed=5\n"), "{meta}");
    assert!(meta.contains("\nstride=2\n"), "{meta}");
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x");
    let out = out.to_str().unwrap();
    let books = fixture();
    let books = books.to_str().unwrap();
    // Usage errors.
    assert_eq!(cbt(&[]).status.code(), Some(2));
    assert_eq!(cbt(&["build", "--frobnicate"]).status.code(), Some(2));
    assert_eq!(cbt(&["build", "--books", books, "--synthetic", "--out", out]).status.code(), Some(2));
    assert_eq!(
        cbt(&["--set", "no_such_key=1", "build", "--books", books, "--out", out]).status.code(),
        Some(2)
    );
    let data = dir.path().join("data");
    assert_eq!(build_fixture(&data).status.code(), Some(0));
    let data = data.to_str().unwrap();
    assert_eq!(cbt(&["eval", "nonsense-model", "--data", data]).status.code(), Some(2));
    assert_eq!(cbt(&["eval", "random", "--data", data, "--split", "holdout"]).status.code(), Some(2));
    // Validation failures.
    let missing = dir.path().join("missing");
    assert_eq!(
        cbt(&["build", "--books", missing.to_str().unwrap(), "--out", out]).status.code(),
        Some(1)
    );
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "not,a,report\n").unwrap();
    assert_eq!(cbt(&["report", bad.to_str().unwrap()]).status.code(), Some(1));
    // Success.
    assert_eq!(cbt(&["--help"]).status.code(), Some(0));
}
