use std::process::{Command, Output};

fn outfn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_outfn"))
        .args(args)
        .env_remove("OUTFN_CACHE_DIR")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn homology_rank_four() {
    let o = outfn(&["homology", "--n", "4"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("dims: 1,0,0,0,1,0"), "{}", stdout(&o));
}

#[test]
fn homology_json_parses() {
    let o = outfn(&["--format", "json", "homology", "--n", "3"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["dims"], serde_json::json!([1, 0, 0, 0]));
}

#[test]
fn trivalent_count_rank_seven() {
    let o = outfn(&["graphs", "--n", "7", "--trivalent", "--count-only"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "365");
}

#[test]
fn oracle_check_passes() {
    for n in ["2", "3"] {
        let o = outfn(&["check", "--n", n]);
        assert_eq!(
            o.status.code(),
            Some(0),
            "{}",
            String::from_utf8_lossy(&o.stderr)
        );
    }
}

#[test]
fn thread_count_does_not_change_output() {
    let one = outfn(&["--threads", "1", "homology", "--n", "4"]);
    let four = outfn(&["--threads", "4", "homology", "--n", "4"]);
    assert_eq!(one.stdout, four.stdout);
    let one = outfn(&[
        "--threads",
        "1",
        "basis",
        "--n",
        "4",
        "--p-max",
        "5",
        "--count-only",
    ]);
    let four = outfn(&[
        "--threads",
        "4",
        "basis",
        "--n",
        "4",
        "--p-max",
        "5",
        "--count-only",
    ]);
    assert_eq!(one.stdout, four.stdout);
}

#[test]
fn resource_cap_exits_with_two() {
    let o = outfn(&["--max-basis", "10", "homology", "--n", "4"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains("hole"), "{}", stdout(&o));
}

#[test]
fn bad_input_exits_with_one() {
    let o = outfn(&["homology", "--n", "1"]);
    assert_eq!(o.status.code(), Some(1));

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("theta.txt");
    std::fs::write(&path, "1 [0+1 0-1 0-1]\n").unwrap();
    let o = outfn(&[
        "verify-cycle",
        path.to_str().unwrap(),
        "--n",
        "2",
        "--p",
        "1",
    ]);
    assert_eq!(o.status.code(), Some(1));

    std::fs::write(&path, "1 [0+1 0-1\n").unwrap();
    let o = outfn(&[
        "verify-cycle",
        path.to_str().unwrap(),
        "--n",
        "2",
        "--p",
        "1",
    ]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn cache_directory_is_reused() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let first = outfn(&["--cache-dir", d, "homology", "--n", "4"]);
    assert!(dir.path().join("report-n4.json").exists());
    let second = outfn(&["--cache-dir", d, "homology", "--n", "4"]);
    assert_eq!(first.stdout, second.stdout);
}
