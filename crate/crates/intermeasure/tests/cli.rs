use std::path::Path;
use std::process::{Command, Output};

use intermeasure::run::{run, InputSource, OutputFormat, RunConfig};
use intermeasure::simulate_parallel;
use intermeasure_core::model::{covariate_distribution, expand_dataset, Link};
use intermeasure_core::simci::{CovarianceChoice, SimulationConfig};
use intermeasure_core::{fit, fixtures, parse_formula, simulate};

const FULL_MODEL: &str = "y ~ z1 + z2 + z1:z2 + x1 + x2 + x3 + z1:x2";
const REDUCED_MODEL: &str = "y ~ z1 + z2 + z1:z2 + x1 + x2 + x3";

fn cli(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_intermeasure"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn point_column(json: &serde_json::Value) -> Vec<f64> {
    json["measures"]
        .as_array()
        .unwrap()
        .iter()
        .map(|m| m["point"].as_f64().unwrap())
        .collect()
}

#[test]
fn fixture_runs_reproduce_point_columns() {
    let tmp = tempfile::tempdir().unwrap();
    for (formula, expected) in [
        (FULL_MODEL, [8.85, 1.60, 8.62, 1.58, 0.34]),
        (REDUCED_MODEL, [6.05, 1.47, 5.47, 1.41, 0.27]),
    ] {
        let out = tmp.path().join(formula.len().to_string());
        let o = cli(&["--fixture", "nguyen2008", "--formula", formula, "--draws", "200"], &out);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let stdout = String::from_utf8(o.stdout).unwrap();
        assert!(stdout.contains("RCOR"));
        let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
        for (got, want) in point_column(&json).iter().zip(expected) {
            assert!((got - want).abs() <= 0.02, "{got} vs {want}");
        }
        for name in ["report.txt", "coefficients.csv", "measures.csv", "draws.csv", "hist_rcor.csv", "hist_dmrd.csv"] {
            assert!(out.join(name).is_file(), "{name} missing");
        }
    }
}

#[test]
fn dcrd_row_equals_dmrd() {
    let tmp = tempfile::tempdir().unwrap();
    let o = cli(&["--fixture", "nguyen2008", "--formula", FULL_MODEL, "--draws", "100", "--quiet"], tmp.path());
    assert!(o.status.success());
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(tmp.path().join("report.json")).unwrap()).unwrap();
    let c = &json["collapsibility"];
    assert!((c["dcrd"].as_f64().unwrap() - c["dmrd"].as_f64().unwrap()).abs() < 1e-12);
    let dmrd = json["measures"].as_array().unwrap().iter().find(|m| m["id"] == "DMRD").unwrap();
    assert_eq!(dmrd["label"], "DMRD (=DCRD)");
}

#[test]
fn malformed_csv_reports_line_number() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("bad.csv");
    std::fs::write(&path, "x1,z1,z2,successes,totals\n0,0,0,1,2\n0,1,0,five,6\n").unwrap();
    let o = cli(&["--input", path.to_str().unwrap(), "--formula", "y ~ z1 + z2 + z1:z2"], &tmp.path().join("out"));
    assert_eq!(o.status.code(), Some(3));
    let stderr = String::from_utf8(o.stderr).unwrap();
    assert!(stderr.contains("line 3"), "{stderr}");
}

#[test]
fn failure_classes_have_distinct_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");

    let o = cli(&["--fixture", "nguyen2008", "--formula", "y ~ z1 + z2 + z1:z2 + x9"], &out);
    assert_eq!(o.status.code(), Some(4));
    let o = cli(&["--fixture", "nguyen2008", "--formula", "y ~ z1 + z2 + z1:z2 + z1:x1:x2"], &out);
    assert_eq!(o.status.code(), Some(4));

    let collinear = tmp.path().join("collinear.csv");
    std::fs::write(
        &collinear,
        "x1,z1,z2,successes,totals\n0,0,0,1,4\n0,0,1,2,4\n1,1,0,3,4\n1,1,1,2,4\n",
    )
    .unwrap();
    let o = cli(&["--input", collinear.to_str().unwrap(), "--formula", "y ~ z1 + z2 + z1:z2 + x1"], &out);
    assert_eq!(o.status.code(), Some(5), "{}", String::from_utf8_lossy(&o.stderr));

    let separated = tmp.path().join("separated.csv");
    std::fs::write(&separated, "z1,z2,successes,totals\n0,0,1,4\n0,1,2,4\n1,0,4,4\n1,1,4,4\n").unwrap();
    let o = cli(&["--input", separated.to_str().unwrap(), "--formula", "y ~ z1 + z2 + z1:z2"], &out);
    assert_eq!(o.status.code(), Some(6), "{}", String::from_utf8_lossy(&o.stderr));

    let o = cli(&["--fixture", "nguyen2008", "--formula", FULL_MODEL, "--covariance", "bogus"], &out);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn parallel_simulation_is_bit_identical_to_serial() {
    let data = fixtures::nguyen2008();
    let spec = parse_formula(FULL_MODEL, data.covariate_names()).unwrap();
    let g = expand_dataset(&data, &spec).unwrap();
    let f = fit(&g.design, &g.successes, &g.totals, Link::Logit).unwrap();
    let dist = covariate_distribution(&data).unwrap();
    for covariance in [CovarianceChoice::Robust, CovarianceChoice::Sandwich, CovarianceChoice::ModelBased] {
        let config = SimulationConfig::new(2000, 11, vec![0.5, 0.9, 0.95], covariance).unwrap();
        let serial = simulate(&f, &spec, &dist, &config).unwrap();
        let parallel = simulate_parallel(&f, &spec, &dist, &config).unwrap();
        assert_eq!(serial, parallel);
    }
}

#[test]
fn library_run_matches_cli_files() {
    let tmp = tempfile::tempdir().unwrap();
    let config = RunConfig {
        input: InputSource::Fixture("nguyen2008".into()),
        formula: FULL_MODEL.into(),
        simulation: SimulationConfig::new(300, 3, vec![0.5, 0.95], CovarianceChoice::Robust).unwrap(),
        histogram_bins: 50,
        out_dir: tmp.path().join("lib"),
        formats: vec![OutputFormat::Json, OutputFormat::Csv],
    };
    let summary = run(&config).unwrap();
    assert!(summary.written.iter().all(|p| p.is_file()));
    let o = cli(
        &["--fixture", "nguyen2008", "--formula", FULL_MODEL, "--draws", "300", "--seed", "3", "--quiet"],
        &tmp.path().join("bin"),
    );
    assert!(o.status.success());
    for name in ["report.json", "measures.csv", "draws.csv", "coefficients.csv"] {
        let a = std::fs::read(tmp.path().join("lib").join(name)).unwrap();
        let b = std::fs::read(tmp.path().join("bin").join(name)).unwrap();
        assert_eq!(a, b, "{name}");
    }
}
