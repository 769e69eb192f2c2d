use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn simctl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_simctl")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn gen(dir: &Path, pattern: &str, count: u32) -> PathBuf {
    let trace = dir.join(format!("{pattern}.trace"));
    let o = simctl(&[
        "gen",
        "--pattern",
        pattern,
        "--count",
        &count.to_string(),
        "--seed",
        "3",
        "--bubbles",
        "1",
        "-o",
        trace.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    trace
}

/// One of the shipped example configs, pointed at `trace`.
fn example_config(dir: &Path, name: &str, trace: &Path) -> PathBuf {
    let shipped = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name);
    let text = std::fs::read_to_string(shipped).unwrap();
    let text = text.replace("traces/random.trace", trace.to_str().unwrap());
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn gen_writes_the_requested_number_of_lines() {
    let dir = tempfile::tempdir().unwrap();
    let trace = gen(dir.path(), "stream", 500);
    let text = std::fs::read_to_string(trace).unwrap();
    assert_eq!(text.lines().count(), 500);
    assert!(text.lines().all(|l| l.starts_with("1 R ") || l.starts_with("1 W ")));
}

#[test]
fn run_then_verify_passes() {
    let dir = tempfile::tempdir().unwrap();
    let trace = gen(dir.path(), "random", 5000);
    for (name, spec) in [("ddr4-default.yaml", "DDR4"), ("ddr5-default.yaml", "DDR5")] {
        let cfg = example_config(dir.path(), name, &trace);
        let out = dir.path().join(spec);
        let o = simctl(&["run", "-c", cfg.to_str().unwrap(), "-o", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", stderr(&o));
        assert!(stdout(&o).contains("cycles"));
        assert!(out.join("stats.yaml").exists());
        assert!(out.join("effective-config.yaml").exists());

        let cmds = out.join("cmdtrace.csv");
        let o = simctl(&["verify", "--spec", spec, "-c", cfg.to_str().unwrap(), "--trace", cmds.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}{}", stdout(&o), stderr(&o));
        assert!(stdout(&o).contains(" 0 violations"));
    }
}

#[test]
fn verify_exits_one_on_violations() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    std::fs::write(
        &bad,
        "clk,cmd,channel,rank,bankgroup,bank,row,column\n0,ACT,0,0,0,0,1,-1\n1,RD,0,0,0,0,1,0\n",
    )
    .unwrap();
    let o = simctl(&["verify", "--spec", "DDR4", "--trace", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("nRCD"), "{}", stdout(&o));
}

#[test]
fn usage_and_config_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(simctl(&["run"]).status.code(), Some(2));
    assert_eq!(simctl(&["frobnicate"]).status.code(), Some(2));

    let missing = dir.path().join("nope.yaml");
    assert_eq!(simctl(&["run", "-c", missing.to_str().unwrap()]).status.code(), Some(2));

    let trace = gen(dir.path(), "random", 10);
    let cfg = example_config(dir.path(), "ddr4-default.yaml", &trace);
    let text = std::fs::read_to_string(&cfg).unwrap().replace("impl: FRFCFS", "impl: Lottery");
    std::fs::write(&cfg, text).unwrap();
    let o = simctl(&["run", "-c", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("Lottery"), "{}", stderr(&o));

    let o = simctl(&["verify", "--spec", "DDR4", "--trace", missing.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn runtime_failure_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("broken.trace");
    std::fs::write(&trace, "0 R 0x40\nnot a line\n").unwrap();
    let cfg = example_config(dir.path(), "ddr4-default.yaml", &trace);
    let o = simctl(&["run", "-c", cfg.to_str().unwrap(), "-o", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));
}

#[test]
fn sweep_reports_every_cell() {
    let dir = tempfile::tempdir().unwrap();
    let trace = gen(dir.path(), "random", 2000);
    let cfg = example_config(dir.path(), "ddr4-default.yaml", &trace);
    let csv = dir.path().join("sweep.csv");
    let o = simctl(&[
        "sweep",
        "-c",
        cfg.to_str().unwrap(),
        "--mitigations",
        "PARA,Graphene",
        "--thresholds",
        "1000,100",
        "-j",
        "2",
        "--csv",
        csv.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let table = std::fs::read_to_string(csv).unwrap();
    assert_eq!(table, stdout(&o));
    let mut lines = table.lines();
    assert_eq!(lines.next(), Some("mitigation,t_rh,cycles,slowdown,error"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 6, "{table}");
    assert!(rows[..2].iter().all(|r| r.starts_with("none,") && r.contains(",1.000000,")));
}
