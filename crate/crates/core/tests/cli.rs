use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_polyshrink");

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .current_dir(dir)
        .env_remove("POLYSHRINK_OUTPUT_DIR")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn records(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    let mut rows = vec![r.headers().unwrap().iter().map(String::from).collect()];
    rows.extend(r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()));
    rows
}

fn parse(s: &str) -> f64 {
    s.parse().unwrap()
}

#[test]
fn risk_row_for_james_stein() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["risk", "--p", "14", "--omega", "0.1", "--lambda", "1.2418", "--degree", "JS", "--method", "exact"];
    let o = run(dir.path(), &args);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "p,omega,lambda,degree,convention,method,risk,ratio,stderr");
    let fields: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(&fields[..6], &["14", "0.1", "1.2418", "JS", "SIMULATION", "exact"]);
    assert!((parse(fields[7]) - 0.2920).abs() < 1e-4);
    assert_eq!(fields[8], "");
    assert!(!text.contains('\r'));

    let again = run(dir.path(), &args);
    assert_eq!(o.stdout, again.stdout);
    assert!(dir.path().join("out/risk.manifest").exists());
}

#[test]
fn risk_central_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["risk", "--p", "8", "--omega", "0", "--lambda", "0", "--degree", "JS"]);
    let row = stdout(&o).lines().nth(1).unwrap().to_string();
    let ratio = parse(row.split(',').nth(7).unwrap());
    assert!((ratio - 0.25).abs() < 1e-12);
}

#[test]
fn threshold_violations_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["risk", "--p", "8", "--lambda", "1", "--degree", "3"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("degree 3 requires p > 10"));
    for bad in [
        vec!["risk", "--p", "14", "--lambda", "-1"],
        vec!["risk", "--p", "14", "--lambda", "1", "--omega", "1"],
        vec!["risk", "--lambda", "1"],
        vec!["risk", "--p", "14", "--lambda", "1", "--degree", "7"],
        vec!["curve", "--p", "8", "--lambda-max", "0"],
        vec!["curve", "--p", "8", "--steps", "0"],
        vec!["table", "--paper-table", "9"],
        vec!["table", "--p", "4", "--omega", "0", "--lambda", "1", "--degrees", "3"],
        vec!["frobnicate"],
    ] {
        assert_eq!(run(dir.path(), &bad).status.code(), Some(2), "{bad:?}");
    }
}

#[test]
fn risk_by_simulation_reports_stderr() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["risk", "--p", "14", "--lambda", "5", "--degree", "2", "--method", "mc", "--replications", "20000", "--seed", "4"];
    let o = run(dir.path(), &args);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let fields: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(fields[5], "mc");
    assert!(parse(fields[8]) > 0.0);
    assert_eq!(run(dir.path(), &args).stdout, o.stdout);
}

#[test]
fn paper_table_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["table", "--paper-table", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rows = records(&dir.path().join("out/table1.csv"));
    assert_eq!(rows[0], ["lambda", "omega", "ratio_JS", "ratio_deg2", "ratio_deg3"]);
    assert_eq!(rows.len(), 31);
    assert_eq!(&rows[1][..2], &["1.2418", "0"]);
    for (got, printed) in rows[1][2..].iter().zip([0.2134, 0.2010, 0.1973]) {
        assert!((parse(got) - printed).abs() < 2e-3);
    }
    let long = records(&dir.path().join("out/table1_long.csv"));
    assert_eq!(long.len(), 91);
    let manifest = std::fs::read_to_string(dir.path().join("out/table1.manifest")).unwrap();
    for key in ["command=table", "paper-table=1", "convention=SIMULATION", "version=", "timestamp=", "method=exact"] {
        assert!(manifest.contains(key), "manifest lacks {key}");
    }
}

#[test]
fn paper_table_three_last_row() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(dir.path(), &["table", "--paper-table", "3"]).status.code(), Some(0));
    let rows = records(&dir.path().join("out/table3.csv"));
    assert_eq!(rows[0], ["lambda", "omega", "ratio_deg3", "ratio_deg4"]);
    let row = rows.iter().find(|r| r[0] == "20" && r[1] == "0.2").unwrap();
    assert!((parse(&row[2]) - 0.6464).abs() < 2e-3);
    assert!((parse(&row[3]) - 0.6463).abs() < 2e-3);
}

#[test]
fn minimal_custom_grid() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("grid/one.csv");
    let o = run(
        dir.path(),
        &["table", "--p", "10", "--omega", "0.3", "--lambda", "2", "--degrees", "JS", "--output", out.to_str().unwrap()],
    );
    assert_eq!(o.status.code(), Some(0));
    let rows = records(&out);
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0], ["lambda", "omega", "ratio_JS"]);
    assert!(dir.path().join("grid/one_long.csv").exists());
    assert!(dir.path().join("grid/one.manifest").exists());
}

#[test]
fn multi_dimension_grid_skips_inadmissible_pairs() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["table", "--p", "8,14", "--omega", "0,0.5", "--lambda", "1", "--degrees", "JS,3"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stderr(&o).contains("degree 3 requires p > 10"));
    let rows = records(&dir.path().join("out/table.csv"));
    assert_eq!(rows[0], ["p", "lambda", "omega", "ratio_JS", "ratio_deg3"]);
    assert_eq!(rows.len(), 5);
    assert_eq!(rows[1][4], "");
    assert!(!rows[3][4].is_empty());
    let manifest = std::fs::read_to_string(dir.path().join("out/table.manifest")).unwrap();
    assert!(manifest.contains("skipped=3@p=8"));
}

#[test]
fn figure_curves_respect_domination() {
    let dir = tempfile::tempdir().unwrap();
    for (fig, lower, upper) in [("1", "ratio_deg2", "ratio_JS"), ("5", "ratio_deg3", "ratio_deg2")] {
        assert_eq!(run(dir.path(), &["curve", "--figure", fig, "--steps", "60"]).status.code(), Some(0));
        let rows = records(&dir.path().join(format!("out/figure{fig}.csv")));
        let col = |name: &str| rows[0].iter().position(|h| h == name).unwrap();
        let (lo, hi) = (col(lower), col(upper));
        assert_eq!(rows.len(), 62);
        for r in &rows[1..] {
            assert!(parse(&r[lo]) <= parse(&r[hi]) + 1e-6, "figure {fig} at lambda {}", r[0]);
            assert!(parse(&r[lo]) < 1.0 && parse(&r[hi]) < 1.0);
        }
    }
}

#[test]
fn one_step_curve_has_both_endpoints() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["curve", "--p", "12", "--omega", "0.4", "--lambda-max", "25", "--steps", "1"]);
    assert_eq!(o.status.code(), Some(0));
    let rows = records(&dir.path().join("out/curve.csv"));
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[1][0], "0");
    assert_eq!(rows[2][0], "25");
}

#[test]
fn simulate_rows_per_estimator() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        dir.path(),
        &["simulate", "--p", "14", "--lambda", "3", "--omega", "0.2", "--replications", "5000", "--degrees", "MLE,JS,3"],
    );
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 4);
    assert_eq!(lines[0], "p,omega,lambda,degree,convention,method,risk,ratio,stderr");
    let degrees: Vec<&str> = lines[1..].iter().map(|l| l.split(',').nth(3).unwrap()).collect();
    assert_eq!(degrees, ["MLE", "JS", "3"]);
}

#[test]
fn config_file_with_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# risk query\np = 14\nomega = 0.1\nlambda = 1.2418\ndegree = JS\noutput-dir = results\n").unwrap();
    let o = run(dir.path(), &["risk", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("14,0.1,1.2418,JS"));
    assert!(dir.path().join("results/risk.manifest").exists());

    let o = run(dir.path(), &["risk", "--config", cfg.to_str().unwrap(), "--omega", "0.5"]);
    assert!(stdout(&o).contains("14,0.5,1.2418,JS"));

    std::fs::write(&cfg, "bogus = 1\n").unwrap();
    assert_eq!(run(dir.path(), &["risk", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn output_directory_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(BIN)
        .args(["curve", "--figure", "2", "--steps", "4"])
        .current_dir(dir.path())
        .env("POLYSHRINK_OUTPUT_DIR", "elsewhere")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(dir.path().join("elsewhere/figure2.csv").exists());
    assert!(!dir.path().join("out").exists());
}

#[test]
fn quick_verify_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["verify", "--quick"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let text = stdout(&o);
    assert!(text.contains("convention adjudication"));
    assert!(text.contains("table 1 (p = 14)"));
    for f in ["verify_report.txt", "verify_checks.csv", "verify_tables.csv", "verify.manifest"] {
        assert!(dir.path().join("out").join(f).exists(), "missing {f}");
    }
    let cells = records(&dir.path().join("out/verify_tables.csv"));
    assert_eq!(cells.len(), 1 + 90 + 90 + 60 + 60);
}

#[test]
fn injected_fault_fails_verification() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["verify", "--quick", "--inject-fault", "negate-gamma2"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("domination_chain"));
    assert!(stdout(&o).contains("FAIL domination_chain"));
}
