use std::path::Path;
use std::process::{Command, Output};

fn relabel(args: &[&str], dir: &Path) -> Output {
    let out = Command::new(env!("CARGO_BIN_EXE_relabel")).args(args).current_dir(dir).output().unwrap();
    assert!(out.status.success(), "relabel {args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out
}

const SHORT: [&str; 8] = [
    "--set",
    "total_env_steps=600",
    "--set",
    "pretrain_iters=20",
    "--set",
    "random_warmup=200",
    "--set",
    "hidden=16,16",
];

#[test]
fn gen_demos_writes_a_readable_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = relabel(&["gen-demos", "--env", "button2d", "--count", "7", "--seed", "3", "--out", "d.jsonl"], dir.path());
    assert!(String::from_utf8_lossy(&out.stdout).contains("7 demonstrations"));
    let f = std::io::BufReader::new(std::fs::File::open(dir.path().join("d.jsonl")).unwrap());
    let (header, demos) = relabel::transitions::codec::read_demo_set::<f64, _>(f).unwrap();
    assert_eq!((header.env_name.as_str(), demos.len()), ("button2d", 7));
}

#[test]
fn train_then_eval_from_a_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec!["train", "--variant", "r2", "--seed", "2", "--out", "m.jsonl", "--checkpoint", "c.json"];
    args.extend(SHORT);
    relabel(&args, dir.path());
    let f = std::io::BufReader::new(std::fs::File::open(dir.path().join("m.jsonl")).unwrap());
    let (header, records) = relabel::harness::read_metrics(f).unwrap();
    assert_eq!((header.variant.as_str(), header.seed), ("r2", 2));
    assert!(records.last().unwrap().env_step >= 600);
    let out = relabel(&["eval", "--checkpoint", "c.json", "--episodes", "5"], dir.path());
    assert!(String::from_utf8_lossy(&out.stdout).contains("5 episodes on reach2d"));
}

#[test]
fn config_file_and_overrides_combine() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("run.cfg"), "# short run\ntotal_env_steps = 300\nalgo = ddpg\n").unwrap();
    let mut args = vec!["train", "--config", "run.cfg", "--out", "m.jsonl"];
    args.extend(&SHORT[2..]);
    relabel(&args, dir.path());
    let f = std::io::BufReader::new(std::fs::File::open(dir.path().join("m.jsonl")).unwrap());
    let cfg = relabel::harness::read_metrics(f).unwrap().0.run_config().unwrap();
    assert_eq!(cfg.total_env_steps, 300);
    assert_eq!(cfg.agent.algo.to_string(), "ddpg");
    assert_eq!(cfg.pretrain_iters, 20);
}

#[test]
fn matrix_and_sweep_write_summaries() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec!["matrix", "--variants", "demo,no-demo", "--out", "grid", "--set", "seeds=0"];
    args.extend(SHORT);
    relabel(&args, dir.path());
    let summary = std::fs::read_to_string(dir.path().join("grid/summary.jsonl")).unwrap();
    assert_eq!(summary.lines().count(), 2 * 2 * 2);

    let mut args = vec!["sweep-b", "--values", "0,3", "--out", "sweep", "--set", "seeds=1"];
    args.extend(SHORT);
    let out = relabel(&args, dir.path());
    assert!(String::from_utf8_lossy(&out.stdout).contains("b=3"));
    assert!(dir.path().join("sweep/b3_seed1.jsonl").exists());
}

#[test]
fn bad_input_fails_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        vec!["train", "--variant", "nope", "--out", "m.jsonl"],
        vec!["train", "--set", "gamma=2", "--out", "m.jsonl"],
        vec!["train", "--set", "unknown_key=1", "--out", "m.jsonl"],
        vec!["gen-demos", "--env", "moon", "--count", "1", "--out", "d.jsonl"],
    ] {
        let out = Command::new(env!("CARGO_BIN_EXE_relabel")).args(&args).current_dir(dir.path()).output().unwrap();
        assert!(!out.status.success(), "{args:?}");
        assert!(!out.stderr.is_empty());
    }
}
