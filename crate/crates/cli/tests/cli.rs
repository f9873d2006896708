use std::process::Command;

fn hqopt(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_hqopt")).args(args).output().unwrap()
}

#[test]
fn gen_cargo_emits_the_instance() {
    let out = hqopt(&["gen-cargo"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["objective"].as_array().unwrap().len(), 6);
}

#[test]
fn bad_assignment_is_an_input_error() {
    let out = hqopt(&["solve", "--assign", "FOO"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("FOO"));
}

#[test]
fn solve_writes_a_trace() {
    let dir = std::env::temp_dir().join(format!("hqopt-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("trace.csv");
    let out = hqopt(&["solve", "--max-iters", "3", "--out", path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("iter,gamma_1,beta_1,expected_cost"));
    assert!(text.lines().count() >= 2);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn baseline_sa_runs() {
    let out = hqopt(&["baseline-sa", "--seed", "1"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}
