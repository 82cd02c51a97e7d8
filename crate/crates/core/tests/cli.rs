use std::path::Path;
use std::process::{Command, Output};

const FOUR_VOTERS: &str = "0,1,2,3,4\n4,0,2,3,1\n2,3,1,0,4\n0,1,3,2,4\n";

fn privrank(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_privrank")).args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn oracle_on_four_voters() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "t1.csv", FOUR_VOTERS);
    let out = privrank(&["oracle", "--input", &input]);
    assert!(out.status.success());
    assert_eq!(stdout(&out), "ranking: 0,1,2,3,4\nopt: 3\n");
}

#[test]
fn guard_and_validation_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let big = dir.path().join("big.csv");
    let gen = privrank(&["gen", "--model", "uniform", "--m", "11", "--n", "3", "--seed", "1", "--output", big.to_str().unwrap()]);
    assert!(gen.status.success());
    assert_eq!(privrank(&["oracle", "--input", big.to_str().unwrap()]).status.code(), Some(3));
    assert_eq!(
        privrank(&["aggregate", "--input", big.to_str().unwrap(), "--algorithm", "exact"]).status.code(),
        Some(3)
    );

    let bad = write(dir.path(), "bad.csv", "0,1,2\n0,0,1\n");
    let out = privrank(&["oracle", "--input", &bad]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));

    let good = write(dir.path(), "t1.csv", FOUR_VOTERS);
    for args in [
        vec!["aggregate", "--input", &good, "--model", "local", "--algorithm", "dpkwiksort"],
        vec!["aggregate", "--input", &good, "--model", "central", "--algorithm", "noiseall", "--epsilon", "-1"],
        vec!["aggregate", "--input", &good, "--model", "central", "--algorithm", "noiseall", "--mechanism", "gaussian"],
        vec!["aggregate", "--input", &good, "--model", "local", "--algorithm", "ldpkwiksort", "--budget-constant", "2"],
    ] {
        assert_eq!(privrank(&args).status.code(), Some(2), "{args:?}");
    }
    assert_eq!(privrank(&["oracle", "--input", "/nonexistent/file.csv"]).status.code(), Some(2));
}

#[test]
fn aggregate_outputs_ranking_and_cost() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "t1.csv", FOUR_VOTERS);
    let out = privrank(&["aggregate", "--input", &input, "--algorithm", "borda"]);
    assert_eq!(stdout(&out), "ranking: 0,2,1,3,4\ncost: 3\nqueries_used: 10\nfallback_used: false\n");

    let transcript = dir.path().join("tr.jsonl");
    let out = privrank(&[
        "aggregate", "--input", &input, "--model", "local", "--algorithm", "ldpkwiksort", "--epsilon", "2",
        "--seed", "9", "--transcript", transcript.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let lines = std::fs::read_to_string(&transcript).unwrap();
    let queries: usize = stdout(&out)
        .lines()
        .find_map(|l| l.strip_prefix("queries_used: "))
        .unwrap()
        .parse()
        .unwrap();
    assert_eq!(lines.lines().count(), queries);
    let first: serde_json::Value = serde_json::from_str(lines.lines().next().unwrap()).unwrap();
    assert!(first.get("partition").is_some());
}

#[test]
fn gen_then_oracle_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("p.csv");
    let p = path.to_str().unwrap();
    let out = privrank(&["gen", "--model", "mallows", "--m", "6", "--n", "40", "--phi", "1e-9", "--seed", "3", "--output", p]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("# m=6\n"));
    assert_eq!(text.lines().count(), 41);
    assert_eq!(stdout(&privrank(&["oracle", "--input", p])), "ranking: 0,1,2,3,4,5\nopt: 0\n");
}

#[test]
fn experiment_from_json_and_toml() {
    let dir = tempfile::tempdir().unwrap();
    let json = write(
        dir.path(),
        "exp.json",
        r#"{"m": 4, "n_grid": [30], "epsilon_grid": [1.0, 2.0], "model": "central",
            "algorithms": ["dpkwiksort", "exact"], "trials": 2, "seed": 1}"#,
    );
    let out = privrank(&["experiment", "--config", &json]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = stdout(&out);
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "m,n,epsilon,delta,model,algorithm,trial,cost,opt,additive_error,ratio,queries_used,fallback_used,seed"
    );
    assert_eq!(lines.count(), 2 * 2 * 2);

    let output = dir.path().join("rows.csv");
    let toml = write(
        dir.path(),
        "exp.toml",
        &format!(
            "m = 4\nn_grid = [30]\nepsilon_grid = [1.0]\nmodel = \"none\"\nalgorithms = [\"kwiksort\"]\ntrials = 3\nseed = 2\noutput = {:?}\n",
            output.to_str().unwrap()
        ),
    );
    let out = privrank(&["experiment", "--config", &toml]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    assert_eq!(std::fs::read_to_string(&output).unwrap().lines().count(), 4);

    let bad = write(dir.path(), "bad.toml", "m = 4\nn_grid = []\nepsilon_grid = [1.0]\nmodel = \"none\"\nalgorithms = [\"exact\"]\ntrials = 1\nseed = 0\n");
    assert_eq!(privrank(&["experiment", "--config", &bad]).status.code(), Some(2));
}

#[test]
fn lowerbound_report_is_json_lines() {
    let out = privrank(&["lowerbound-check", "--d", "2", "--t", "1", "--trials", "50", "--seed", "4"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let last: serde_json::Value = serde_json::from_str(text.lines().last().unwrap()).unwrap();
    assert_eq!(last["trials"], 50);
    assert_eq!(last["lower_violations"], 0);
}
