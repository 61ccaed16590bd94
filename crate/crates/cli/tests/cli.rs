use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use gavg_core::io::{self, FieldDoc, RepDoc};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

fn gavg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gavg")).args(args).output().expect("spawn gavg")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path).unwrap().lines().skip(1).map(|l| l.split(',').map(str::to_owned).collect()).collect()
}

#[test]
fn iterate_z2_reaches_tolerance_quickly() {
    let dir = tempfile::tempdir().unwrap();
    let g = fixture("z2.groupoid.json");
    let r = fixture("z2_tau1.5.rep.json");
    let out = gavg(&["--mode", "iterate", "--groupoid", s(&g), "--rep", s(&r), "--out", s(dir.path())]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let rows = csv_rows(&dir.path().join("trace.csv"));
    let last = rows.last().unwrap();
    let iter: usize = last[0].parse().unwrap();
    let c: f64 = last[2].parse().unwrap();
    assert!(iter <= 6 && c <= 1e-12, "{last:?}");

    // the emitted representation re-parses to the values the run produced
    let doc: RepDoc = io::read_json(&dir.path().join("rep.json")).unwrap();
    let rep = doc.build(&io::read_groupoid(&g).unwrap()).unwrap();
    assert_eq!(RepDoc::from(&rep), doc);
    assert!((rep.mat(1)[(0, 0)] - 1.0).abs() < 1e-15);
}

#[test]
fn strict_iterate_refuses_an_uncertified_start() {
    let dir = tempfile::tempdir().unwrap();
    let out = gavg(&[
        "--mode",
        "iterate",
        "--strict",
        "--groupoid",
        s(&fixture("z2.groupoid.json")),
        "--rep",
        s(&fixture("z2_tau1.5.rep.json")),
        "--out",
        s(dir.path()),
    ]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("certificate"));
}

#[test]
fn lemma_extremal_table_passes() {
    let dir = tempfile::tempdir().unwrap();
    let c0 = format!("{:e}", 1.0f64 / 9.0);
    let out = gavg(&["--mode", "lemma", "--b0", "1", "--c0", &c0, "--len", "10", "--out", s(dir.path())]);
    assert_eq!(code(&out), 0);
    let rows = csv_rows(&dir.path().join("lemma.csv"));
    assert_eq!(rows.len(), 11);
    assert!(rows.iter().all(|r| r[6] == "true" && r[7] == "true"));

    let out = gavg(&["--mode", "lemma", "--b0", "1", "--c0", "0.2", "--out", s(dir.path())]);
    assert_eq!(code(&out), 2);
}

#[test]
fn corrupted_table_names_the_witness() {
    let dir = tempfile::tempdir().unwrap();
    let g = fixture("z2_corrupted.groupoid.json");
    let out = gavg(&["--mode", "validate", "--groupoid", s(&g), "--out", s(dir.path())]);
    assert_eq!(code(&out), 1);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("inverse law violated at [1, 1]"), "{err}");
    let report: serde_json::Value = io::read_json(&dir.path().join("validation.json")).unwrap();
    assert!(!report["groupoid"]["violations"].as_array().unwrap().is_empty());

    let out = gavg(&["--mode", "validate", "--groupoid", s(&fixture("s3.groupoid.json")), "--out", s(dir.path())]);
    assert_eq!(code(&out), 0);
}

#[test]
fn input_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{ not json").unwrap();
    let out = gavg(&["--mode", "certify", "--groupoid", s(&bad), "--rep", s(&bad), "--out", s(dir.path())]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("malformed JSON"));

    assert_eq!(code(&gavg(&["--mode", "teleport"])), 1);
    assert_eq!(code(&gavg(&["--mode", "lemma", "--b0", "1", "--c0", "0", "--tol", "0"])), 1);
    // a rep that does not fit the groupoid
    let out = gavg(&[
        "--mode",
        "average",
        "--groupoid",
        s(&fixture("s3.groupoid.json")),
        "--rep",
        s(&fixture("z2_tau1.5.rep.json")),
        "--out",
        s(dir.path()),
    ]);
    assert_eq!(code(&out), 1);
}

#[test]
fn certify_writes_a_certificate() {
    let dir = tempfile::tempdir().unwrap();
    let args = |rep: &str| {
        gavg(&[
            "--mode",
            "certify",
            "--groupoid",
            s(&fixture("z2.groupoid.json")),
            "--rep",
            s(&fixture(rep)),
            "--out",
            s(dir.path()),
        ])
    };
    assert_eq!(code(&args("z2_tau1.5.rep.json")), 2);
    let cert: serde_json::Value = io::read_json(&dir.path().join("certificate.json")).unwrap();
    assert_eq!(cert["pass"], false);
    let out = gavg(&[
        "--mode",
        "certify",
        "--groupoid",
        s(&fixture("s3.groupoid.json")),
        "--rep",
        s(&fixture("s3_perturbed.rep.json")),
        "--out",
        s(dir.path()),
    ]);
    assert_eq!(code(&out), 0);
}

#[test]
fn connection_iteration_and_determinism() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let field = fixture("circle_degree_two.field.json");
    let run = |dir: &Path, threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_gavg"))
            .args(["--mode", "conn-iterate", "--field", s(&field), "--seed", "4", "--out", s(dir)])
            .env("GAVG_THREADS", threads)
            .output()
            .unwrap()
    };
    assert_eq!(code(&run(a.path(), "1")), 0);
    assert_eq!(code(&run(b.path(), "3")), 0);
    let ta = fs::read(a.path().join("trace.csv")).unwrap();
    assert_eq!(ta, fs::read(b.path().join("trace.csv")).unwrap());
    let rows = csv_rows(&a.path().join("trace.csv"));
    let last: f64 = rows.last().unwrap()[5].parse().unwrap();
    assert!(last <= 1e-12);

    let doc: FieldDoc = io::read_json(&a.path().join("field.json")).unwrap();
    let text = fs::read_to_string(a.path().join("field.json")).unwrap();
    assert_eq!(serde_json::to_string_pretty(&doc).unwrap() + "\n", text);

    assert_eq!(code(&run(a.path(), "many")), 1);
}

#[test]
fn random_haar_runs_are_reproducible() {
    let outs: Vec<Vec<u8>> = (0..2)
        .map(|_| {
            let dir = tempfile::tempdir().unwrap();
            let out = gavg(&[
                "--mode",
                "iterate",
                "--groupoid",
                s(&fixture("s3.groupoid.json")),
                "--rep",
                s(&fixture("s3_perturbed.rep.json")),
                "--haar",
                "random",
                "--seed",
                "17",
                "--out",
                s(dir.path()),
            ]);
            assert_eq!(code(&out), 0);
            fs::read(dir.path().join("trace.csv")).unwrap()
        })
        .collect();
    assert_eq!(outs[0], outs[1]);
}

#[test]
fn segment_and_average_modes() {
    let dir = tempfile::tempdir().unwrap();
    let g = fixture("pair.groupoid.json");
    let r = fixture("pair.rep.json");
    let h = fixture("pair_haar_0.3.json");
    let out = gavg(&[
        "--mode",
        "segment",
        "--groupoid",
        s(&g),
        "--rep",
        s(&r),
        "--haar",
        s(&h),
        "--steps",
        "4",
        "--out",
        s(dir.path()),
    ]);
    assert_eq!(code(&out), 0);
    let rows = csv_rows(&dir.path().join("segment.csv"));
    assert_eq!(rows.len(), 5);
    assert_eq!(rows[0][0].parse::<f64>().unwrap(), 0.0);

    let out =
        gavg(&["--mode", "average", "--groupoid", s(&g), "--rep", s(&r), "--haar", s(&h), "--out", s(dir.path())]);
    assert_eq!(code(&out), 0);
    let doc: RepDoc = io::read_json(&dir.path().join("averaged.json")).unwrap();
    let avg = doc.build(&io::read_groupoid(&g).unwrap()).unwrap();
    assert!(avg.unital_deviation(&io::read_groupoid(&g).unwrap()) <= 1e-12);

    let field = fixture("circle_degree_two.field.json");
    let out = gavg(&["--mode", "segment", "--field", s(&field), "--steps", "2", "--out", s(dir.path())]);
    assert_eq!(code(&out), 0);
    assert_eq!(csv_rows(&dir.path().join("segment.csv")).len(), 3);
}
