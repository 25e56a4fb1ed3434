use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn mbsvm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mbsvm"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &TempDir, name: &str, text: &str) -> String {
    let p = dir.path().join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn data_rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn body(path: &Path) -> String {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .collect::<Vec<_>>()
        .join("\n")
}

const TOY: &str = "+1 1:1\n+1 1:1\n";

#[test]
fn naive_toy_misses_target_with_exit_2() {
    let dir = TempDir::new().unwrap();
    let train = write(&dir, "toy.svm", TOY);
    let out = mbsvm(&[
        "solve",
        "--train",
        &train,
        "--solver",
        "sdca_naive",
        "--batch",
        "2",
        "--iters",
        "10",
        "--lambda",
        "0.5",
        "--stop-on-target",
        "--epsilon",
        "1e-3",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let csv = String::from_utf8(out.stdout).unwrap();
    let last = data_rows(&csv).pop().unwrap();
    assert_eq!(last[0], "10");
    assert_eq!(last[3].parse::<f64>().unwrap(), 0.0);
    assert_eq!(last[4].parse::<f64>().unwrap(), 1.0);
}

#[test]
fn safe_toy_converges_in_one_iteration() {
    let dir = TempDir::new().unwrap();
    let train = write(&dir, "toy.svm", TOY);
    let trace = dir.path().join("trace.csv");
    let out = mbsvm(&[
        "solve",
        "--train",
        &train,
        "--solver",
        "sdca_safe",
        "--batch",
        "2",
        "--lambda",
        "0.5",
        "--stop-on-target",
        "--epsilon",
        "1e-12",
        "--out",
        trace.to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = fs::read_to_string(&trace).unwrap();
    for key in [
        "# version:",
        "# generator:",
        "# seed:",
        "# sigma_sq:",
        "# beta_b:",
        "# checkpoint_every:",
    ] {
        assert!(csv.contains(key), "header lacks {key}");
    }
    let rows = data_rows(&csv);
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[1][0], "1");
    assert!(rows[1][4].parse::<f64>().unwrap() <= 1e-12);
    assert!(String::from_utf8(out.stderr)
        .unwrap()
        .contains("target reached at iter 1"));
}

#[test]
fn deterministic_runs_write_identical_bodies() {
    let dir = TempDir::new().unwrap();
    let data = dir.path().join("g.svm");
    let status = mbsvm(&[
        "synth",
        "--kind",
        "gaussian",
        "--n",
        "120",
        "--dim",
        "10",
        "--sigma-target",
        "0.2",
        "--seed",
        "3",
        "--out",
        data.to_str().unwrap(),
    ]);
    assert!(
        status.status.success(),
        "{}",
        String::from_utf8_lossy(&status.stderr)
    );
    let mut paths = Vec::new();
    for k in 0..2 {
        let p = dir.path().join(format!("run{k}.csv"));
        let out = mbsvm(&[
            "solve",
            "--train",
            data.to_str().unwrap(),
            "--solver",
            "sdca_aggressive",
            "--batch",
            "8",
            "--lambda",
            "0.01",
            "--iters",
            "300",
            "--averaging",
            "decaying",
            "--seed",
            "9",
            "--deterministic-reduction",
            "--out",
            p.to_str().unwrap(),
        ]);
        assert!(out.status.success());
        paths.push(p);
    }
    let (a, b) = (body(&paths[0]), body(&paths[1]));
    assert_eq!(a, b);
    for row in data_rows(&a) {
        let (p, d, g): (f64, f64, f64) = (
            row[2].parse().unwrap(),
            row[3].parse().unwrap(),
            row[4].parse().unwrap(),
        );
        assert_eq!(g, p - d);
        assert!(g >= -1e-9);
    }
}

#[test]
fn sigma_reports_extreme_cases() {
    let dir = TempDir::new().unwrap();
    for (kind, expect) in [("orthogonal", 0.125), ("duplicated", 1.0)] {
        let data = dir.path().join(format!("{kind}.svm"));
        assert!(mbsvm(&[
            "synth",
            "--kind",
            kind,
            "--n",
            "8",
            "--out",
            data.to_str().unwrap()
        ])
        .status
        .success());
        let out = mbsvm(&[
            "sigma",
            "--train",
            data.to_str().unwrap(),
            "--exact-sigma",
            "--batch-list",
            "1,4,8",
        ]);
        assert!(out.status.success());
        let text = String::from_utf8(out.stdout).unwrap();
        assert!(text.contains("n: 8"));
        let exact: f64 = text
            .lines()
            .find_map(|l| l.strip_prefix("sigma_sq_exact: "))
            .unwrap()
            .parse()
            .unwrap();
        assert!((exact - expect).abs() < 1e-12, "{kind}: {exact}");
        assert!(text.contains("b,beta_b,beta_b_over_b"));
        assert_eq!(text.lines().filter(|l| l.starts_with("8,")).count(), 1);
    }
}

#[test]
fn sweep_writes_one_row_per_cell() {
    let dir = TempDir::new().unwrap();
    let data = dir.path().join("dup.svm");
    assert!(mbsvm(&[
        "synth",
        "--kind",
        "duplicated",
        "--n",
        "8",
        "--dim",
        "1",
        "--out",
        data.to_str().unwrap()
    ])
    .status
    .success());
    let summary = dir.path().join("sweep.csv");
    let out = mbsvm(&[
        "sweep",
        "--train",
        data.to_str().unwrap(),
        "--solver",
        "sdca_naive,sdca_safe",
        "--batch-list",
        "1,8",
        "--lambda",
        "0.125",
        "--iters",
        "2000",
        "--target",
        "gap",
        "--averaging",
        "final",
        "--exact-sigma",
        "--out",
        summary.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = fs::read_to_string(&summary).unwrap();
    let rows = data_rows(&csv);
    assert_eq!(rows.len(), 4);
    let naive_full = rows
        .iter()
        .find(|r| r[0] == "sdca_naive" && r[1] == "8")
        .unwrap();
    assert_eq!(naive_full[4], "not_reached");
    let safe_full = rows
        .iter()
        .find(|r| r[0] == "sdca_safe" && r[1] == "8")
        .unwrap();
    assert!(safe_full[4].parse::<usize>().is_ok());
    // beta_b/b = 1 on fully duplicated data
    assert!((safe_full[3].parse::<f64>().unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn test_set_fills_test_error() {
    let dir = TempDir::new().unwrap();
    let train = write(&dir, "train.svm", "+1 1:2\n-1 2:2\n+1 1:1 2:-1\n");
    let test = write(&dir, "test.svm", "+1 1:4\n-1 2:4 3:1\n");
    let out = mbsvm(&[
        "solve",
        "--train",
        &train,
        "--test",
        &test,
        "--solver",
        "sdca_serial",
        "--lambda",
        "rcv1",
        "--iters",
        "30",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = String::from_utf8(out.stdout).unwrap();
    assert!(csv.contains("# lambda: 1.0000000000000000e-4"));
    assert!(csv.contains("# test: "));
    let last = data_rows(&csv).pop().unwrap();
    assert_eq!(last[5].parse::<f64>().unwrap(), 0.0);
}

#[test]
fn bad_input_exits_1() {
    let dir = TempDir::new().unwrap();
    let train = write(&dir, "toy.svm", TOY);
    let bad = write(&dir, "bad.svm", "+1 2:1 2:3\n");

    let missing = mbsvm(&["solve", "--train", "/nonexistent/x.svm", "--lambda", "0.1"]);
    assert_eq!(missing.status.code(), Some(1));

    let parse = mbsvm(&["solve", "--train", &bad, "--lambda", "0.1"]);
    assert_eq!(parse.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&parse.stderr).contains("line 1"));

    let batch = mbsvm(&[
        "solve", "--train", &train, "--lambda", "0.1", "--batch", "3",
    ]);
    assert_eq!(batch.status.code(), Some(1));

    let serial = mbsvm(&[
        "sweep",
        "--train",
        &train,
        "--lambda",
        "0.1",
        "--solver",
        "sdca_serial",
        "--batch-list",
        "2",
    ]);
    assert_eq!(serial.status.code(), Some(1));

    let usage = mbsvm(&["solve", "--train", &train, "--lambda", "nope"]);
    assert_eq!(usage.status.code(), Some(1));

    assert_eq!(mbsvm(&["--help"]).status.code(), Some(0));
}

#[test]
fn pegasos_solve_targets_primal_suboptimality() {
    let dir = TempDir::new().unwrap();
    let data = dir.path().join("o.svm");
    assert!(mbsvm(&[
        "synth",
        "--kind",
        "orthogonal",
        "--n",
        "16",
        "--out",
        data.to_str().unwrap()
    ])
    .status
    .success());
    let out = mbsvm(&[
        "solve",
        "--train",
        data.to_str().unwrap(),
        "--solver",
        "pegasos",
        "--batch",
        "4",
        "--lambda",
        "0.1",
        "--iters",
        "5000",
        "--averaging",
        "tail",
        "--epsilon",
        "0.05",
        "--stop-on-target",
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = String::from_utf8(out.stdout).unwrap();
    assert!(csv.contains("# target: primal"));
    assert!(csv.contains("# reference_primal:"));
    // no dual for pegasos: dual and gap columns stay empty
    for row in data_rows(&csv) {
        assert!(row[3].is_empty() && row[4].is_empty());
    }
}
