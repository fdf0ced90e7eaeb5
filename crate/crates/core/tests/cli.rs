use serde_json::Value;
use sicopula::cli::{index_grid, link_data, read_dataset, RunConfig, EXIT_ESTIMATION, EXIT_OK, EXIT_USAGE};
use sicopula::copulas::{CopulaModel, Family};
use sicopula::estimator::{fit, EstimationConfig};
use sicopula::simulate::{generate, replication_columns, DGPSpec};
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn sicop(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sicop")).args(args).output().expect("run sicop")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn simulate(dir: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["simulate", "--out", dir.to_str().unwrap()];
    args.extend_from_slice(extra);
    sicop(&args)
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn simulate_writes_the_documented_files() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    let o = simulate(&a, &["--n", "100", "--seed", "4", "--set", "link=constant:0.3"]);
    assert_eq!(code(&o), EXIT_OK, "{}", stderr(&o));
    let text = fs::read_to_string(a.join("dataset.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 101);
    assert_eq!(lines[0], "x1,x2,z1,z2");
    assert!(lines[1..].iter().all(|l| l.split(',').count() == 4));
    let cfg = read_json(&a.join("simulation.json"));
    assert_eq!(cfg["n"], 100);
    assert_eq!(cfg["estimation"]["seed"], 4);

    let b = tmp.path().join("b");
    assert_eq!(code(&simulate(&b, &["--n", "100", "--seed", "4", "--set", "link=constant:0.3"])), EXIT_OK);
    assert_eq!(fs::read(a.join("dataset.csv")).unwrap(), fs::read(b.join("dataset.csv")).unwrap());
    let c = tmp.path().join("c");
    assert_eq!(code(&simulate(&c, &["--n", "100", "--seed", "5"])), EXIT_OK);
    assert_ne!(fs::read(a.join("dataset.csv")).unwrap(), fs::read(c.join("dataset.csv")).unwrap());
}

#[test]
fn replication_table_schema() {
    let tmp = tempfile::tempdir().unwrap();
    let o = simulate(tmp.path(), &["--n", "150", "--replications", "2", "--set", "starts=2"]);
    assert_eq!(code(&o), EXIT_OK, "{}", stderr(&o));
    let text = fs::read_to_string(tmp.path().join("replications.tsv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), replication_columns(1).join("\t"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r.split('\t').count() == replication_columns(1).len()));
    let summary = fs::read_to_string(tmp.path().join("replication_summary.txt")).unwrap();
    assert!(summary.starts_with("beta2: true 1 "));
}

#[test]
fn fit_matches_library_bit_for_bit() {
    let tmp = tempfile::tempdir().unwrap();
    let data_dir = tmp.path().join("data");
    assert_eq!(code(&simulate(&data_dir, &["--n", "1000", "--seed", "1"])), EXIT_OK);
    let csv = data_dir.join("dataset.csv");
    let run = |out: &Path| {
        let o = sicop(&[
            "fit",
            "--input",
            csv.to_str().unwrap(),
            "--x-cols",
            "x1,x2",
            "--z-cols",
            "z1,z2",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(code(&o), EXIT_OK, "{}", stderr(&o));
    };
    // The report embeds the output directory, so both runs write to the same place.
    let r1 = tmp.path().join("r1");
    let files = ["fit_report.json", "fit_summary.txt", "link_curve.tsv"];
    run(&r1);
    let first: Vec<Vec<u8>> = files.iter().map(|f| fs::read(r1.join(f)).unwrap()).collect();
    run(&r1);
    for (f, bytes) in files.iter().zip(&first) {
        assert!(fs::read(r1.join(f)).unwrap() == *bytes, "{f} differs between runs");
    }

    let sim = generate(&DGPSpec::tanh_gaussian(1000, 1)).unwrap();
    let lib = fit(&sim.data, &CopulaModel::new(Family::Gaussian, 2).unwrap(), &EstimationConfig::default()).unwrap();
    let report = read_json(&r1.join("fit_report.json"));
    assert_eq!(report["status"], "ok");
    assert_eq!(report["fit"], serde_json::to_value(&lib).unwrap());
    let b = report["beta_hat"][1].as_f64().unwrap();
    assert_eq!(b.to_bits(), lib.beta_hat.beta()[1].to_bits());
    assert_eq!(report["config"]["estimation"], serde_json::to_value(EstimationConfig::default()).unwrap());

    let curve = fs::read_to_string(r1.join("link_curve.tsv")).unwrap();
    let lines: Vec<&str> = curve.lines().collect();
    assert_eq!(lines[0], "y\ttau_hat\ttheta_hat\tclamped");
    assert_eq!(lines.len(), 102);
    let data = read_dataset(&csv, &["x1".into(), "x2".into()], &["z1".into(), "z2".into()]).unwrap();
    let proj = link_data(&data, &EstimationConfig::default()).unwrap().index(&lib.beta_hat.beta()).unwrap();
    let grid = index_grid(&proj, 101);
    let first: f64 = lines[1].split('\t').next().unwrap().parse().unwrap();
    let last: f64 = lines[101].split('\t').next().unwrap().parse().unwrap();
    assert_eq!(first, grid[0]);
    assert_eq!(last, grid[100]);
}

#[test]
fn usage_errors_exit_two() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(code(&simulate(tmp.path(), &["--n", "200"])), EXIT_OK);
    let csv = tmp.path().join("dataset.csv");
    let csv = csv.to_str().unwrap();
    let out = tmp.path().join("o");
    let out = out.to_str().unwrap();

    let o = sicop(&["fit", "--input", csv, "--x-cols", "x1,x2", "--z-cols", "z1,z9", "--out", out]);
    assert_eq!(code(&o), EXIT_USAGE);
    assert!(stderr(&o).contains("'z9'"), "{}", stderr(&o));

    let o = sicop(&["tau-curve", "--input", csv, "--x-cols", "x1,x2", "--z-cols", "z1,z2", "--beta", "1,2,3", "--out", out]);
    assert_eq!(code(&o), EXIT_USAGE);

    let o = sicop(&["fit", "--bogus"]);
    assert_eq!(code(&o), EXIT_USAGE);
    assert_eq!(code(&sicop(&["--help"])), EXIT_OK);

    let cfg = tmp.path().join("run.cfg");
    fs::write(&cfg, "# settings\nfamily = gaussian\n\nstarts = three\n").unwrap();
    let o = sicop(&["fit", "--config", cfg.to_str().unwrap(), "--input", csv, "--x-cols", "x1,x2", "--z-cols", "z1,z2"]);
    assert_eq!(code(&o), EXIT_USAGE);
    assert!(stderr(&o).contains("line 4"), "{}", stderr(&o));

    fs::write(&cfg, "family gaussian\n").unwrap();
    let o = sicop(&["fit", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), EXIT_USAGE);
    assert!(stderr(&o).contains("line 1"));

    let bad = tmp.path().join("bad.csv");
    fs::write(&bad, "x1,x2,z1,z2\n1,2,3,4\n1,oops,3,4\n").unwrap();
    let o = sicop(&["fit", "--input", bad.to_str().unwrap(), "--x-cols", "x1,x2", "--z-cols", "z1,z2", "--out", out]);
    assert_eq!(code(&o), EXIT_USAGE);
    assert!(stderr(&o).contains("line 3") && stderr(&o).contains("'x2'"), "{}", stderr(&o));
}

#[test]
fn config_file_and_flag_precedence() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("sim.cfg");
    let out_a = tmp.path().join("a");
    fs::write(&cfg, format!("n = 60\nseed = 2\nout = {}\n", out_a.display())).unwrap();
    let o = sicop(&["simulate", "--config", cfg.to_str().unwrap(), "--seed", "3"]);
    assert_eq!(code(&o), EXIT_OK, "{}", stderr(&o));
    let js = read_json(&out_a.join("simulation.json"));
    assert_eq!(js["n"], 60);
    assert_eq!(js["estimation"]["seed"], 3);

    let mut rc = RunConfig::new("fit");
    assert!(rc.set("nope", "1").is_err());
    rc.set("nu", "auto").unwrap();
    rc.set("margin_bandwidth", "0.3,0.4").unwrap();
    assert_eq!(rc.estimation.margin_bandwidth, Some(vec![0.3, 0.4]));
}

#[test]
fn estimation_failure_exits_three() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(code(&simulate(tmp.path(), &["--n", "60"])), EXIT_OK);
    let csv = tmp.path().join("dataset.csv");
    let out = tmp.path().join("o");
    let o = sicop(&[
        "fit",
        "--input",
        csv.to_str().unwrap(),
        "--x-cols",
        "x1,x2",
        "--z-cols",
        "z1,z2",
        "--set",
        "nu=0.49",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), EXIT_ESTIMATION, "{}", stderr(&o));
    let report = read_json(&out.join("fit_report.json"));
    assert_eq!(report["status"], "error");
    assert_eq!(report["error"]["name"], "InsufficientData");
}

#[test]
fn tau_curve_on_constant_link() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(code(&simulate(tmp.path(), &["--n", "5000", "--seed", "8", "--set", "link=constant:0.4"])), EXIT_OK);
    let csv = tmp.path().join("dataset.csv");
    let out = tmp.path().join("o");
    let o = sicop(&[
        "tau-curve",
        "--input",
        csv.to_str().unwrap(),
        "--x-cols",
        "x1,x2",
        "--z-cols",
        "z1,z2",
        "--beta",
        "1,1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), EXIT_OK, "{}", stderr(&o));
    let text = fs::read_to_string(out.join("tau_curve.tsv")).unwrap();
    let rows: Vec<Vec<f64>> =
        text.lines().skip(1).map(|l| l.split('\t').map(|v| v.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 101);
    let taus: Vec<f64> = rows.iter().map(|r| r[1]).collect();
    let mean = taus.iter().sum::<f64>() / taus.len() as f64;
    let spread = taus.iter().map(|t| (t - mean).abs()).fold(0.0, f64::max);
    assert!(spread < 0.05, "spread {spread}");

    let data = read_dataset(&csv, &["x1".into(), "x2".into()], &["z1".into(), "z2".into()]).unwrap();
    let proj = link_data(&data, &EstimationConfig::default()).unwrap().index(&[1.0, 1.0]).unwrap();
    assert_eq!(rows[0][0], sicopula::stats::percentile(&proj, 5.0));
    assert_eq!(rows[100][0], sicopula::stats::percentile(&proj, 95.0));
}

#[test]
fn selftest_passes() {
    let o = Command::new(env!("CARGO_BIN_EXE_sicop")).arg("selftest").env("SICOP_THREADS", "1").output().unwrap();
    assert_eq!(code(&o), EXIT_OK);
    let out = String::from_utf8_lossy(&o.stdout);
    assert!(out.lines().count() >= 5 && out.lines().all(|l| l.starts_with("PASS")), "{out}");
}
