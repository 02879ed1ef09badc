use std::fs;
use std::process::{Command, Output};

fn gridcube(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gridcube")).args(args).output().expect("binary runs")
}

fn data(name: &str) -> String {
    format!("{}/tests/data/{name}", env!("CARGO_MANIFEST_DIR"))
}

#[test]
fn embed_writes_file_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("g.txt");
    let o = gridcube(&["embed", "3", "7", "4", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let summary = String::from_utf8(o.stdout).unwrap();
    assert!(summary.contains("n 7"));
    assert!(summary.contains("u 21 3"));
    let text = fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 4 + 84);
    assert_eq!(text.lines().nth(2), Some("7 2 5 7"));

    let o = gridcube(&["audit", "--from", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8(o.stdout).unwrap().contains("hk_injective: PASS"));
}

#[test]
fn embed_to_stdout() {
    let o = gridcube(&["embed", "2", "2"]);
    assert!(o.status.success());
    let file = String::from_utf8(o.stdout).unwrap();
    assert_eq!(file.lines().count(), 8);
    assert!(String::from_utf8(o.stderr).unwrap().contains("dilation 1"));
}

#[test]
fn output_is_deterministic() {
    let a = gridcube(&["embed", "5", "6", "7", "--windows", "3,0,3"]);
    let b = gridcube(&["embed", "5", "6", "7", "--windows", "3,0,3", "--threads", "1"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn seeded_stage_dump() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("g.txt");
    let o = gridcube(&[
        "embed", "3", "7", "4", "3", "--seed", &data("table1bc.txt"), "--dump-stage", "4", "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.starts_with("STAGE 4 2\n"));
    // vertex (3,2,2,1) has rank 2 + 3*1 + 21*1 = 26 and sits at the bottom
    // of stack (3,1,2)
    assert!(text.contains("\n26: (3,1,2,1)\n"), "{}", &text[..200]);
}

#[test]
fn audit_exit_codes() {
    let o = gridcube(&["audit", "8", "8"]);
    assert_eq!(o.status.code(), Some(0));
    let o = gridcube(&["audit", "5", "5", "5", "5"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8(o.stdout).unwrap().contains("cube.coord_diff_max: REPORTED("));
    assert_eq!(gridcube(&["audit", "1000", "1000", "1000"]).status.code(), Some(2));
    assert_eq!(gridcube(&["audit", "7"]).status.code(), Some(2));
    assert_eq!(gridcube(&["embed", "3", "x"]).status.code(), Some(2));
    assert_eq!(gridcube(&["audit", "4", "4", "--cap", "10"]).status.code(), Some(2));
}

#[test]
fn corrupted_file_fails_audit() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("g.txt");
    assert!(gridcube(&["embed", "3", "4", "--out", out.to_str().unwrap()]).status.success());
    let text = fs::read_to_string(&out).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    let bits = lines[4].rsplit(' ').next().unwrap().to_string();
    let head = lines[5].rsplit_once(' ').unwrap().0.to_string();
    lines[5] = format!("{head} {bits}");
    fs::write(&out, lines.join("\n")).unwrap();
    let o = gridcube(&["audit", "--from", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    fs::write(&out, "GRIDCUBE 9\n").unwrap();
    assert_eq!(gridcube(&["audit", "--from", out.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn caterpillar_cache() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let o = gridcube(&["cat", "3", "1", "--cache-dir", d]);
    assert!(o.status.success());
    let s = String::from_utf8(o.stdout).unwrap();
    assert!(s.contains("Cat(4,1)") && s.contains("window 3: verified"));
    assert!(dir.path().join("cat-3-1.txt").exists());

    let o = gridcube(&["cat", "4", "1", "--from", "3", "--cache-dir", d]);
    assert!(String::from_utf8(o.stdout).unwrap().contains("Cat(8,1) in Q_4"));

    let o = gridcube(&["cat", "6", "3", "--cache-dir", d]);
    let s = String::from_utf8(o.stdout).unwrap();
    assert!(s.contains("Cat(16,3)") && s.contains("window 5: verified") && s.contains("window 6: counterexample"));

    assert_eq!(gridcube(&["cat", "4", "3", "--cache-dir", d]).status.code(), Some(2));
    assert_eq!(gridcube(&["cat", "3", "1", "--from", "5", "--cache-dir", d]).status.code(), Some(2));
}
