use std::path::Path;
use std::process::{Command, Output};

use saag::parse_csv;

fn saag(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_saag"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap()
}

fn data_rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn run_on_libsvm_file_writes_one_row_per_epoch() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("a.libsvm");
    let mut text = String::new();
    for i in 0..60 {
        let x = (i as f64 * 0.37).sin();
        let y = if x + 0.1 * (i as f64).cos() > 0.0 { "+1" } else { "-1" };
        text.push_str(&format!("{y} 1:{x} 3:{}\n", (i as f64 * 0.11).cos()));
    }
    std::fs::write(&data, text).unwrap();
    let out = dir.path().join("t.csv");
    let o = saag(&[
        "run",
        "--solver",
        "saag4",
        "--dataset",
        data.to_str().unwrap(),
        "--b",
        "32",
        "--epochs",
        "30",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = parse_csv(&read(&out)).unwrap();
    assert_eq!(rows.len(), 31);
    assert!(rows.iter().all(|r| r.suboptimality > 0.0 && r.solver == "saag4"));
    assert!(stdout(&o).contains("alpha = 0.1"));
}

#[test]
fn unknown_solver_is_a_usage_error() {
    let o = saag(&["run", "--solvers", "saag9", "--epochs", "1"]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(
        err.contains("saag9") && err.contains("saag1, saag2, saag3, saag4, svrg, vrsgd, gd, sgd"),
        "{err}"
    );
}

#[test]
fn comparison_protocol_on_synthetic_data() {
    let o = saag(&[
        "run",
        "--synthetic",
        "n=200,d=10",
        "--solvers",
        "saag3,saag4,svrg,vrsgd",
        "--epochs",
        "3",
        "--workers",
        "2",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = parse_csv(&stdout(&o)).unwrap();
    let mut solvers: Vec<&str> = rows.iter().map(|r| r.solver.as_str()).collect();
    solvers.dedup();
    assert_eq!(solvers, vec!["saag3", "saag4", "svrg", "vrsgd"]);
    assert_eq!(rows.len(), 4 * 4);
    assert!(stderr(&o).contains("best subopt"));
}

#[test]
fn batch_sweep_cardinality() {
    let o = saag(&[
        "sweep",
        "--axis",
        "batch",
        "--synthetic",
        "n=300,d=5",
        "--solvers",
        "saag2,svrg",
        "--epochs",
        "1",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = stdout(&o);
    assert!(csv.lines().any(|l| l.ends_with(",b") && l.starts_with("solver,")));
    let rows = parse_csv(&csv).unwrap();
    let mut traces: Vec<(String, u64)> = rows
        .iter()
        .map(|r| (r.solver.clone(), r.axis.unwrap() as u64))
        .collect();
    traces.dedup();
    assert_eq!(traces.len(), 6);
    let mut axis: Vec<u64> = traces.iter().map(|t| t.1).collect();
    axis.sort_unstable();
    axis.dedup();
    assert_eq!(axis, vec![32, 64, 128]);
}

#[test]
fn lambda_sweep_default_grid_and_empty_list() {
    let o = saag(&["sweep", "--axis", "lambda", "--solvers", "saag3", "--epochs", "1"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = stdout(&o);
    assert!(csv.contains("# sweep: lambda in 0.001,0.00001,0.0000001"), "{csv}");
    assert_eq!(csv.matches("# f_star: l2").count(), 3);

    let o = saag(&["sweep", "--axis", "lambda", "--values", "", "--epochs", "1"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    let o = saag(&["sweep", "--axis", "momentum"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn echoed_config_reproduces_the_csv() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first.csv");
    let o = saag(&[
        "run",
        "--synthetic",
        "n=120,d=6,flip=0.1,seed=4",
        "--solvers",
        "saag1,saag4,sgd",
        "--l1",
        "1e-3",
        "--b",
        "10",
        "--epochs",
        "4",
        "--seeds",
        "3,5",
        "--out",
        first.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));

    // the plain-text echo as a config file
    let cfg = dir.path().join("run.cfg");
    let echo: String = read(&first)
        .lines()
        .filter_map(|l| l.strip_prefix("# "))
        .filter(|l| l.contains(" = "))
        .map(|l| format!("{l}\n"))
        .collect();
    std::fs::write(&cfg, echo).unwrap();
    let second = dir.path().join("second.csv");
    let o = saag(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        second.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));

    // and the emitted CSV itself
    let third = dir.path().join("third.csv");
    let o = saag(&[
        "run",
        "--config",
        first.to_str().unwrap(),
        "--out",
        third.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));

    let strip = |rows: Vec<Vec<String>>| -> Vec<Vec<String>> {
        rows.into_iter()
            .map(|mut r| {
                r[3].clear();
                r
            })
            .collect()
    };
    let a = strip(data_rows(&read(&first)));
    assert_eq!(a.len(), 3 * 2 * 5);
    assert_eq!(a, strip(data_rows(&read(&second))));
    assert_eq!(a, strip(data_rows(&read(&third))));
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# comment\nsolvers = saag2\nepochs = 5\nsynthetic = n=80,d=4\n").unwrap();
    let o = saag(&["run", "--config", cfg.to_str().unwrap(), "--epochs", "2"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = parse_csv(&stdout(&o)).unwrap();
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| r.solver == "saag2"));

    std::fs::write(&cfg, "epochs: 5\n").unwrap();
    let o = saag(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 1"), "{}", stderr(&o));
}

#[test]
fn missing_dataset_is_reported_with_its_path() {
    let o = saag(&["run", "--dataset", "/nonexistent/data.libsvm", "--epochs", "1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("/nonexistent/data.libsvm"), "{}", stderr(&o));
}

#[test]
fn verify_default_suite_passes() {
    let o = saag(&["verify"]);
    assert!(o.status.success(), "{}", stdout(&o));
    let out = stdout(&o);
    for name in [
        "bias-identity",
        "unbiasedness",
        "variance-bound",
        "prox-oracle",
        "gradient-fd",
        "rate-constants",
    ] {
        assert!(out.lines().any(|l| l.starts_with("PASS") && l.contains(name)), "{out}");
    }
}

#[test]
fn verify_detects_wrong_snap_scaling() {
    let o = saag(&["verify", "--mutate-snap-scaling"]);
    assert_eq!(o.status.code(), Some(1));
    let out = stdout(&o);
    assert!(
        out.lines()
            .any(|l| l.starts_with("FAIL") && l.contains("bias-identity")),
        "{out}"
    );
}

#[test]
fn verify_skips_enumeration_above_cap() {
    let o = saag(&["verify", "--n", "100"]);
    assert!(o.status.success(), "{}", stdout(&o));
    let out = stdout(&o);
    assert!(
        out.lines()
            .any(|l| l.starts_with("SKIP") && l.contains("bias-identity") && l.contains("cap")),
        "{out}"
    );
}
