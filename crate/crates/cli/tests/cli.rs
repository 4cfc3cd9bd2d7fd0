use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_tss3dkp"));
    cmd.env_remove("TSS3DKP_TIME_LIMIT");
    cmd
}

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../instances").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr_json(out: &Output) -> Vec<serde_json::Value> {
    String::from_utf8(out.stderr.clone())
        .unwrap()
        .lines()
        .map(|line| serde_json::from_str(line).expect("stderr lines are JSON"))
        .collect()
}

#[test]
fn bound_on_example_two() {
    let path = fixture("example2.json");
    let out = run(&["bound", "--instance", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("U=3 Z=2"), "{text}");
    assert!(text.contains("per_scenario=2,3"));
    assert!(text.contains("caps=2,4"));
}

#[test]
fn solve_example_one_both_ways() {
    let path = fixture("example1.json");
    let out = run(&["solve", "--instance", path.to_str().unwrap(), "--gap", "0"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("objective: 1.04 (26/25)"), "{text}");
    assert!(text.contains("first_stage: a=0,0 a_p=1 a_b=2"), "{text}");

    let out = run(&["solve", "--instance", path.to_str().unwrap(), "--gap", "0", "--no-printers"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("objective: 0.7 (7/10)"));
}

#[test]
fn eval_strategy_two() {
    let path = fixture("example1.json");
    let out = run(&["eval", "--instance", path.to_str().unwrap(), "--first-stage", "0,1,0,0"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("expected_reward: 0.6 (3/5)"), "{}", stdout(&out));
}

#[test]
fn solution_and_mps_files() {
    let dir = tempfile::tempdir().unwrap();
    let solution = dir.path().join("s.json");
    let mps = dir.path().join("m.mps");
    let path = fixture("example1.json");
    let out = run(&[
        "solve",
        "--instance",
        path.to_str().unwrap(),
        "--gap",
        "0",
        "--out-solution",
        solution.to_str().unwrap(),
        "--export-mps",
        mps.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let instance = tss3dkp::io::read_instance(&path).unwrap();
    let loaded = tss3dkp::io::load_solution(&solution, &instance).unwrap();
    assert_eq!(loaded.decision.printers, 1);
    let text = std::fs::read_to_string(&mps).unwrap();
    assert!(text.contains("OBJSENSE"));
    assert!(tss3dkp::io::parse_mps(&mps).is_ok());
}

#[test]
fn gen_is_reproducible_and_records_seed() {
    let args = ["gen", "--items", "6", "--demand-limit", "5", "--scenarios", "3", "--seed", "11"];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    assert!(text.contains("\"seed\": 11"));
    let instance = tss3dkp::io::parse_instance(&text).unwrap();
    assert_eq!(instance.num_items(), 6);
    assert_eq!(instance.num_scenarios(), 3);
}

#[test]
fn oracle_check_small() {
    let out = run(&["oracle-check", "--count", "15", "--seed", "4"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.starts_with("# seed=4 count=15"));
    assert!(text.contains("15/15 match"), "{text}");
}

#[test]
fn sweep_writes_csv_with_seed_header() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("out.csv");
    let out = run(&[
        "sweep",
        "--aspect",
        "m",
        "--grid",
        "0",
        "--per-value",
        "2",
        "--seed",
        "5",
        "--gap",
        "0.1",
        "--out-csv",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{:?}", stderr_json(&out));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("# aspect=m seed=5"), "{text}");
    assert!(text.lines().nth(1).unwrap().starts_with("value,n,fails"));
}

#[test]
fn unknown_flags_and_missing_instance_are_rejected() {
    for args in [&["solve", "--bogus"][..], &["solve"][..], &["bound"][..]] {
        let out = run(args);
        assert_eq!(out.status.code(), Some(1), "{args:?}");
        let diags = stderr_json(&out);
        assert_eq!(diags[0]["code"], "usage");
    }
}

#[test]
fn invalid_input_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"format_version\": 1}").unwrap();
    let out = run(&["bound", "--instance", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stderr_json(&out)[0]["code"], "parse_error");

    let path = fixture("example1.json");
    let out = run(&["eval", "--instance", path.to_str().unwrap(), "--first-stage", "1,1,1,1"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stderr_json(&out)[0]["code"], "infeasible_decision");
}

#[test]
fn solver_limit_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("i.json");
    let out = run(&[
        "gen",
        "--items",
        "15",
        "--demand-limit",
        "20",
        "--scenarios",
        "10",
        "--seed",
        "3",
        "--out",
        inst.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let out = run(&["solve", "--instance", inst.to_str().unwrap(), "--gap", "0", "--node-limit", "2"]);
    assert_eq!(out.status.code(), Some(2));
    let diags = stderr_json(&out);
    assert_eq!(diags.last().unwrap()["code"], "solver_limit");
    assert!(stdout(&out).contains("status: node_limit"));
}

#[test]
fn time_limit_env_is_validated() {
    let path = fixture("example1.json");
    let out = bin()
        .args(["solve", "--instance", path.to_str().unwrap()])
        .env("TSS3DKP_TIME_LIMIT", "soon")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stderr_json(&out)[0]["code"], "invalid_argument");

    let out = bin()
        .args(["solve", "--instance", path.to_str().unwrap(), "--gap", "0"])
        .env("TSS3DKP_TIME_LIMIT", "30")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn repeated_solves_write_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let path = fixture("example1.json");
    let mut texts = Vec::new();
    for k in 0..2 {
        let file = dir.path().join(format!("s{k}.json"));
        let out = run(&[
            "solve",
            "--instance",
            path.to_str().unwrap(),
            "--gap",
            "0",
            "--out-solution",
            file.to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0));
        texts.push((out.stdout, std::fs::read(&file).unwrap()));
    }
    assert_eq!(texts[0], texts[1]);
}
