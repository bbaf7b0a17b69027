use std::path::Path;
use std::process::{Command, Output};

fn bestarm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bestarm"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write_instance(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn gen_then_stats() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = bestarm(&[
        "gen",
        "--kind",
        "discrete-random",
        "--params",
        "counts=1:2,3:1",
        "--out",
        out,
    ]);
    assert!(o.status.success(), "{o:?}");
    let file = dir.path().join("discrete-k1x2-k3x1.txt");
    let o = bestarm(&[
        "stats",
        "--instance",
        file.to_str().unwrap(),
        "--delta",
        "0.01",
    ]);
    assert!(o.status.success());
    let s = stdout(&o);
    assert!(s.contains("H         72"), "{s}");
    assert!(s.contains("r_max     3"));
    assert!(s.contains("bound"));
}

#[test]
fn gen_kinds() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = bestarm(&[
        "gen", "--kind", "two-arm", "--params", "gap=0.5", "--out", out,
    ]);
    assert!(o.status.success());
    let text = std::fs::read_to_string(dir.path().join("two-arm-gap0.5.txt")).unwrap();
    let means: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(means, vec!["1", "0.5"]);
    let o = bestarm(&["gen", "--kind", "equal-h-varying-ent", "--out", out]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().count(), 2);
    let o = bestarm(&[
        "gen",
        "--kind",
        "equal-h-varying-ent",
        "--params",
        "h=16",
        "--out",
        out,
    ]);
    assert_eq!(o.status.code(), Some(1));
    let o = bestarm(&[
        "gen",
        "--kind",
        "two-arm",
        "--params",
        "colour=red",
        "--out",
        out,
    ]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn run_prints_json_and_trace() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write_instance(dir.path(), "i.txt", "1.0\n0.5\n0.75\n");
    let o = bestarm(&[
        "run",
        "--instance",
        &inst,
        "--algo",
        "guess",
        "--delta",
        "0.01",
        "--seed",
        "3",
        "--trace",
    ]);
    assert!(o.status.success(), "{o:?}");
    let lines: Vec<serde_json::Value> = stdout(&o)
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    let last = lines.last().unwrap();
    assert_eq!(last["answer"]["Arm"], 0);
    let per_arm: u64 = last["per_arm_samples"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_u64().unwrap())
        .sum();
    assert_eq!(per_arm, last["total_samples"].as_u64().unwrap());
    assert!(lines.iter().any(|l| l["event"] == "round"));
    assert!(lines.iter().any(|l| l["event"] == "rejected"));

    let again = bestarm(&[
        "run",
        "--instance",
        &inst,
        "--algo",
        "guess",
        "--delta",
        "0.01",
        "--seed",
        "3",
        "--trace",
    ]);
    assert_eq!(o.stdout, again.stdout);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write_instance(dir.path(), "i.txt", "1.0\n0.5\n");
    let o = bestarm(&[
        "run",
        "--instance",
        &inst,
        "--algo",
        "known",
        "--delta",
        "0.01",
        "--budget",
        "1000",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains("BudgetExceeded"));
    let o = bestarm(&[
        "run",
        "--instance",
        &inst,
        "--algo",
        "lucb",
        "--delta",
        "0.01",
    ]);
    assert_eq!(o.status.code(), Some(1));
    let o = bestarm(&[
        "run",
        "--instance",
        &inst,
        "--algo",
        "known",
        "--delta",
        "1.5",
    ]);
    assert_eq!(o.status.code(), Some(1));
    let bad = write_instance(dir.path(), "bad.txt", "1.0\n1.0\n");
    let o = bestarm(&["stats", "--instance", &bad]);
    assert_eq!(o.status.code(), Some(1));
    let o = bestarm(&["run", "--instance"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(bestarm(&["--help"]).status.success());
}

#[test]
fn bench_appends_rows() {
    let dir = tempfile::tempdir().unwrap();
    let insts = dir.path().join("insts");
    std::fs::create_dir(&insts).unwrap();
    write_instance(&insts, "a.txt", "1.0\n0.5\n");
    write_instance(&insts, "b.txt", "1.0\n0.75\n0.5\n");
    let csv = dir.path().join("out.csv");
    let args = |algo: &'static str| {
        vec![
            "bench".to_string(),
            "--algo".into(),
            algo.into(),
            "--instances".into(),
            insts.to_string_lossy().into_owned(),
            "--trials".into(),
            "5".into(),
            "--out".into(),
            csv.to_string_lossy().into_owned(),
        ]
    };
    for algo in ["known", "baseline"] {
        let a = args(algo);
        let o = bestarm(&a.iter().map(String::as_str).collect::<Vec<_>>());
        assert!(o.status.success(), "{o:?}");
    }
    let text = std::fs::read_to_string(&csv).unwrap();
    // header + 2 algorithms x 2 instances x 3 default deltas
    assert_eq!(text.lines().count(), 1 + 12);
    assert_eq!(text.matches("algorithm,instance").count(), 1);
}

#[test]
fn signxi_writes_profile() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("loss.csv");
    let o = bestarm(&[
        "signxi",
        "--m",
        "2",
        "--delta",
        "0.05",
        "--trials",
        "30",
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{o:?}");
    let text = std::fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "k,p_k,alpha_k,mean_samples");
    assert_eq!(lines.len(), 4);
    assert!(lines[3].starts_with("summary,"));
    let o = bestarm(&[
        "signxi",
        "--m",
        "5",
        "--delta",
        "0.05",
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
}
