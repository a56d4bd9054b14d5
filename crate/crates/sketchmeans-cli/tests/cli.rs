//! End-to-end tests of the experiment driver: flag handling, report layout,
//! sidecar cross-checks, and manifest reproducibility.

use std::collections::HashMap;
use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sketchmeans"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name))
        .unwrap_or_else(|e| panic!("reading {name}: {e}"))
}

fn parse_tsv(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut lines = text.lines();
    let headers: Vec<String> = lines
        .next()
        .expect("header row")
        .split('\t')
        .map(str::to_owned)
        .collect();
    let rows = lines
        .map(|l| l.split('\t').map(str::to_owned).collect())
        .collect();
    (headers, rows)
}

fn row_map(headers: &[String], row: &[String]) -> HashMap<String, String> {
    headers
        .iter()
        .cloned()
        .zip(row.iter().cloned())
        .collect()
}

#[test]
fn baselines_on_singleton_clusters_are_zero() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("points.csv");
    std::fs::write(&csv, "0,0\n5,0\n0,5\n").unwrap();
    let out = dir.path().join("out");
    let output = run(&[
        "--input",
        csv.to_str().unwrap(),
        "--task",
        "baselines",
        "--k",
        "3",
        "--trials",
        "5",
        "--epsilon",
        "0.1",
        "--seed",
        "7",
        "--out-dir",
        out.to_str().unwrap(),
    ]);
    assert!(output.status.success(), "{output:?}");
    let (headers, rows) = parse_tsv(&read(&out, "bounds.tsv"));
    assert_eq!(
        headers,
        vec![
            "dataset", "k", "min_vi", "avg_Li", "L_H", "L_M", "B_H", "B_M", "T_init", "T_kpp",
            "T_SDP"
        ]
    );
    let row = row_map(&headers, &rows[0]);
    assert_eq!(row["min_vi"], "0.00e0");
    assert_eq!(row["avg_Li"], "0.00e0");
    assert_eq!(row["L_H"], "0.00e0");
    assert_eq!(row["L_M"], "0.00e0");
    assert_eq!(row["B_H"], "nan");
}

#[test]
fn markov_bound_recomputable_from_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let output = run(&[
        "--synth",
        "sbm",
        "--n",
        "60",
        "--delta",
        "4",
        "--task",
        "hoeffding,markov",
        "--k",
        "2",
        "--sketch-size",
        "8",
        "--trials",
        "6",
        "--epsilon",
        "0.05",
        "--seed",
        "11",
        "--out-dir",
        out.to_str().unwrap(),
    ]);
    assert!(output.status.success(), "{output:?}");

    let (bh288, rows) = parse_tsv(&read(&out, "bounds.tsv"));
    let bounds = row_map(&bh288, &rows[0]);
    let (theaders, trows) = parse_tsv(&read(&out, "trials.tsv"));
    let mut markov_values = Vec::new();
    let mut hoeffding_count = 0usize;
    for row in &trows {
        let map = row_map(&theaders, row);
        if map["method"] == "markov" {
            markov_values.push(map["trial_value"].parse::<f64>().unwrap());
        }
        if map["method"] == "hoeffding" {
            hoeffding_count += 1;
        }
    }
    assert_eq!(markov_values.len(), 6);
    assert_eq!(hoeffding_count, 6);

    // B_M column must equal eps^(1/l) * min trial value, re-formatted
    let min = markov_values.iter().cloned().fold(f64::INFINITY, f64::min);
    let recomputed = 0.05f64.powf(1.0 / 6.0) * min;
    let formatted = format!("{recomputed:.2e}");
    assert_eq!(bounds["B_M"], formatted);
}

#[test]
fn ragged_csv_fails_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("bad.csv");
    std::fs::write(&csv, "1,2\n3\n").unwrap();
    let output = run(&[
        "--input",
        csv.to_str().unwrap(),
        "--task",
        "baselines",
        "--k",
        "2",
    ]);
    assert!(!output.status.success());
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("row 2"), "stderr: {stderr}");
}

#[test]
fn missing_task_is_an_error() {
    let output = run(&["--synth", "norm10"]);
    assert!(!output.status.success());
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("task"), "stderr: {stderr}");
}

#[test]
fn header_row_is_skipped() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("points.csv");
    std::fs::write(&csv, "x,y\n0,0\n1,0\n4,0\n5,0\n").unwrap();
    let out = dir.path().join("out");
    let output = run(&[
        "--input",
        csv.to_str().unwrap(),
        "--has-header",
        "--task",
        "sketch_solve",
        "--k",
        "2",
        "--bernoulli-p",
        "1.0",
        "--seed",
        "3",
        "--out-dir",
        out.to_str().unwrap(),
    ]);
    assert!(output.status.success(), "{output:?}");
    let (_, labels) = parse_tsv(&read(&out, "labels.tsv"));
    assert_eq!(labels.len(), 4); // header was not treated as a point
}

#[test]
fn manifest_rerun_reproduces_results() {
    let dir = tempfile::tempdir().unwrap();
    let out1 = dir.path().join("run1");
    let output = run(&[
        "--synth",
        "sbm",
        "--n",
        "40",
        "--delta",
        "3.5",
        "--task",
        "markov,baselines",
        "--k",
        "2",
        "--sketch-size",
        "6",
        "--trials",
        "4",
        "--epsilon",
        "0.1",
        "--seed",
        "23",
        "--out-dir",
        out1.to_str().unwrap(),
    ]);
    assert!(output.status.success(), "{output:?}");

    let out2 = dir.path().join("run2");
    let manifest = out1.join("manifest.txt");
    let output = run(&[
        "--config",
        manifest.to_str().unwrap(),
        "--out-dir",
        out2.to_str().unwrap(),
    ]);
    assert!(output.status.success(), "{output:?}");

    // all value columns must agree bit-for-bit; wall-clock columns may not
    let timing_cols = ["T_init", "T_kpp", "T_SDP", "wall_seconds"];
    for file in ["bounds.tsv", "trials.tsv"] {
        let (h1, rows1) = parse_tsv(&read(&out1, file));
        let (h2, rows2) = parse_tsv(&read(&out2, file));
        assert_eq!(h1, h2);
        assert_eq!(rows1.len(), rows2.len(), "{file}");
        for (r1, r2) in rows1.iter().zip(rows2.iter()) {
            for (col, (a, b)) in h1.iter().zip(r1.iter().zip(r2.iter())) {
                if timing_cols.contains(&col.as_str()) {
                    continue;
                }
                assert_eq!(a, b, "{file} column {col}");
            }
        }
    }
}

#[test]
fn phase_diagram_recovery_improves_with_separation() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let output = run(&[
        "--task",
        "phase_diagram",
        "--delta-min",
        "2",
        "--delta-max",
        "4",
        "--delta-step",
        "0.1",
        "--sketch-grid",
        "30",
        "--trials",
        "50",
        "--n",
        "2000",
        "--seed",
        "31",
        "--out-dir",
        out.to_str().unwrap(),
    ]);
    assert!(output.status.success(), "{output:?}");
    let (headers, rows) = parse_tsv(&read(&out, "phase_diagram.tsv"));
    assert_eq!(headers, vec!["delta", "sketch_size", "recovery_rate"]);
    assert_eq!(rows.len(), 21);
    let pairs: Vec<(f64, f64)> = rows
        .iter()
        .map(|r| {
            let m = row_map(&headers, r);
            (
                m["delta"].parse::<f64>().unwrap(),
                m["recovery_rate"].parse::<f64>().unwrap(),
            )
        })
        .collect();
    let deltas: Vec<f64> = pairs.iter().map(|&(d, _)| d).collect();
    let rates: Vec<f64> = pairs.iter().map(|&(_, r)| r).collect();
    let rho = spearman(&deltas, &rates);
    assert!(rho > 0.8, "Spearman rho = {rho}, rates {rates:?}");
}

/// Spearman rank correlation with average ranks for ties.
fn spearman(a: &[f64], b: &[f64]) -> f64 {
    let ra = average_ranks(a);
    let rb = average_ranks(b);
    pearson(&ra, &rb)
}

fn average_ranks(v: &[f64]) -> Vec<f64> {
    let n = v.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| v[i].total_cmp(&v[j]));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && v[order[j + 1]] == v[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = avg;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for (&x, &y) in a.iter().zip(b.iter()) {
        cov += (x - ma) * (y - mb);
        va += (x - ma) * (x - ma);
        vb += (y - mb) * (y - mb);
    }
    cov / (va.sqrt() * vb.sqrt()).max(1e-300)
}

#[test]
fn runtime_curve_covers_grid() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let output = run(&[
        "--task",
        "runtime_curve",
        "--n-grid",
        "64,256",
        "--trials",
        "3",
        "--seed",
        "37",
        "--out-dir",
        out.to_str().unwrap(),
    ]);
    assert!(output.status.success(), "{output:?}");
    let (headers, rows) = parse_tsv(&read(&out, "runtime_curve.tsv"));
    assert_eq!(headers, vec!["n", "method", "seconds"]);
    assert_eq!(rows.len(), 4); // two sizes x two methods
    for row in &rows {
        let map = row_map(&headers, row);
        assert!(map["seconds"].parse::<f64>().unwrap() >= 0.0);
        assert!(["sketch_solve", "kmeanspp"].contains(&map["method"].as_str()));
    }
}

#[test]
fn export_data_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let output = run(&[
        "--synth",
        "gmm",
        "--n",
        "50",
        "--dim",
        "3",
        "--k",
        "2",
        "--task",
        "baselines",
        "--trials",
        "3",
        "--seed",
        "41",
        "--export-data",
        "--out-dir",
        out.to_str().unwrap(),
    ]);
    assert!(output.status.success(), "{output:?}");
    let text = read(&out, "dataset.csv");
    assert_eq!(text.lines().count(), 50);
    assert!(text.lines().all(|l| l.split(',').count() == 3));
}
