use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::config::{parse_list, Config};
use super::output::{self, Manifest};
use super::{report, CliError, Cli, Command, DegreeArg, FaultArg, McArgs, Method};
use crate::estimators::{by_degree, CoefficientConvention, ShrinkagePolynomial};
use crate::montecarlo::{simulate_risk, SimulationPlan};
use crate::ncx2::SeriesControl;
use crate::reference;
use crate::risk::{exact_risk_general, RiskReport};
use crate::verify::{self, Fault, VerifyOptions};

const DEFAULT_CONVENTION: CoefficientConvention = CoefficientConvention::Simulation;
const DEFAULT_REPLICATIONS: u64 = 100_000;
const DEFAULT_LAMBDA_MAX: f64 = 40.0;
const DEFAULT_STEPS: usize = 200;
const RISK_HEADER: [&str; 9] = ["p", "omega", "lambda", "degree", "convention", "method", "risk", "ratio", "stderr"];

type CliResult<T = ()> = Result<T, CliError>;

struct Ctx {
    config: Config,
    output_dir: PathBuf,
}

impl Ctx {
    fn manifest_path(&self, name: &str) -> PathBuf {
        self.output_dir.join(format!("{name}.manifest"))
    }
}

pub(super) fn dispatch(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> CliResult {
    let config = match &cli.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    let output_dir = cli
        .output_dir
        .or_else(|| config.raw("output-dir").map(PathBuf::from))
        .or_else(|| std::env::var_os(super::OUTPUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(super::DEFAULT_OUTPUT_DIR));
    let ctx = Ctx { config, output_dir };
    match cli.command {
        Command::Risk(a) => cmd_risk(&ctx, a, out),
        Command::Table(a) => cmd_table(&ctx, a, out, err),
        Command::Curve(a) => cmd_curve(&ctx, a, out, err),
        Command::Simulate(a) => cmd_simulate(&ctx, a, out),
        Command::Verify(a) => cmd_verify(&ctx, a, out),
    }
}

fn required<T>(value: Option<T>, flag: &str) -> CliResult<T> {
    value.ok_or_else(|| CliError::Usage(format!("missing required --{flag}")))
}

fn check_omega(omega: f64) -> CliResult {
    if (0.0..1.0).contains(&omega) {
        Ok(())
    } else {
        Err(CliError::Usage(format!("omega must lie in [0, 1), got {omega}")))
    }
}

fn check_lambda(lambda: f64) -> CliResult {
    if lambda.is_finite() && lambda >= 0.0 {
        Ok(())
    } else {
        Err(CliError::Usage(format!("lambda must be finite and >= 0, got {lambda}")))
    }
}

fn estimator(d: DegreeArg, p: usize, omega: f64, conv: CoefficientConvention) -> CliResult<ShrinkagePolynomial> {
    Ok(by_degree(d.0, p, omega, conv)?)
}

fn degree_list(ctx: &Ctx, flag: Option<String>, key: &str) -> CliResult<Option<Vec<DegreeArg>>> {
    ctx.config
        .pick(flag, key)?
        .map(|s| parse_list::<DegreeArg>("degree", &s))
        .transpose()
}

fn list<T: std::str::FromStr>(ctx: &Ctx, flag: Option<String>, key: &str) -> CliResult<Option<Vec<T>>>
where
    T::Err: std::fmt::Display,
{
    ctx.config.pick(flag, key)?.map(|s| parse_list::<T>(key, &s)).transpose()
}

struct McSettings {
    replications: u64,
    seed: u64,
    chunk_size: usize,
}

fn mc_settings(ctx: &Ctx, a: McArgs) -> CliResult<McSettings> {
    let s = McSettings {
        replications: ctx.config.pick(a.replications, "replications")?.unwrap_or(DEFAULT_REPLICATIONS),
        seed: ctx.config.pick(a.seed, "seed")?.unwrap_or(0),
        chunk_size: ctx
            .config
            .pick(a.chunk_size, "chunk-size")?
            .unwrap_or(SimulationPlan::DEFAULT_CHUNK_SIZE),
    };
    if s.replications == 0 {
        return Err(CliError::Usage("replications must be >= 1".into()));
    }
    if s.chunk_size == 0 {
        return Err(CliError::Usage("chunk-size must be >= 1".into()));
    }
    Ok(s)
}

impl McSettings {
    fn record(&self, m: &mut Manifest) {
        m.set("replications", self.replications)
            .set("seed", self.seed)
            .set("chunk-size", self.chunk_size);
    }

    fn run(&self, p: usize, lambda: f64, omega: f64, ests: &[ShrinkagePolynomial]) -> CliResult<Vec<RiskReport>> {
        let plan = SimulationPlan::new(p, lambda, omega, ests.to_vec(), self.replications, self.seed)
            .with_chunk_size(self.chunk_size);
        let estimates = simulate_risk(&plan)?;
        Ok(estimates.iter().zip(ests).map(|(m, e)| m.to_report(&plan, e)).collect())
    }
}

fn exact_all(p: usize, lambda: f64, ests: &[ShrinkagePolynomial]) -> CliResult<Vec<RiskReport>> {
    let ctrl = SeriesControl::default();
    ests.iter()
        .map(|e| Ok(exact_risk_general(e, p, lambda, &ctrl)?))
        .collect()
}

fn risk_row(r: &RiskReport, d: DegreeArg, conv: CoefficientConvention, method: Method) -> Vec<String> {
    vec![
        r.p.to_string(),
        output::real(r.omega),
        output::real(r.lambda),
        d.label().to_string(),
        conv.as_str().to_string(),
        method.as_str().to_string(),
        output::risk(r.risk),
        output::ratio(r.ratio_to_mle),
        r.stderr.map(|s| output::sig(s, 6)).unwrap_or_default(),
    ]
}

fn write_risk_rows(out: &mut dyn Write, rows: &[Vec<String>]) -> CliResult {
    let mut w = output::csv_writer(out);
    w.write_record(RISK_HEADER)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

fn cmd_risk(ctx: &Ctx, a: super::RiskArgs, out: &mut dyn Write) -> CliResult {
    let cfg = &ctx.config;
    let p = required(cfg.pick(a.p, "p")?, "p")?;
    let lambda = required(cfg.pick(a.lambda, "lambda")?, "lambda")?;
    let omega = cfg.pick(a.omega, "omega")?.unwrap_or(0.0);
    let degree = cfg.pick(a.degree, "degree")?.unwrap_or(DegreeArg(1));
    let conv = cfg.pick(a.convention, "convention")?.unwrap_or(DEFAULT_CONVENTION);
    let method = cfg.pick(a.method, "method")?.unwrap_or(Method::Exact);
    check_omega(omega)?;
    check_lambda(lambda)?;
    let mc = mc_settings(ctx, a.mc)?;

    let est = estimator(degree, p, omega, conv)?;
    let report = match method {
        Method::Exact => exact_all(p, lambda, &[est])?,
        Method::Mc => mc.run(p, lambda, omega, &[est])?,
    };
    write_risk_rows(out, &[risk_row(&report[0], degree, conv, method)])?;

    let mut m = Manifest::new("risk");
    m.set("p", p)
        .set("omega", output::real(omega))
        .set("lambda", output::real(lambda))
        .set("degree", degree)
        .set("convention", conv.as_str())
        .set("method", method.as_str());
    if method == Method::Mc {
        mc.record(&mut m);
    }
    m.save(&ctx.manifest_path("risk"))
}

fn admissible(p: usize) -> Vec<DegreeArg> {
    (0..=4)
        .filter(|&d| by_degree(d, p, 0.0, DEFAULT_CONVENTION).is_ok())
        .map(DegreeArg)
        .collect()
}

fn cmd_simulate(ctx: &Ctx, a: super::SimulateArgs, out: &mut dyn Write) -> CliResult {
    let cfg = &ctx.config;
    let p = required(cfg.pick(a.p, "p")?, "p")?;
    let lambda = required(cfg.pick(a.lambda, "lambda")?, "lambda")?;
    let omega = cfg.pick(a.omega, "omega")?.unwrap_or(0.0);
    let conv = cfg.pick(a.convention, "convention")?.unwrap_or(DEFAULT_CONVENTION);
    check_omega(omega)?;
    check_lambda(lambda)?;
    let degrees = match degree_list(ctx, a.degrees, "degrees")? {
        Some(d) => d,
        None => admissible(p),
    };
    let mc = mc_settings(ctx, a.mc)?;

    let ests = degrees
        .iter()
        .map(|&d| estimator(d, p, omega, conv))
        .collect::<CliResult<Vec<_>>>()?;
    let reports = mc.run(p, lambda, omega, &ests)?;
    let rows: Vec<_> = reports
        .iter()
        .zip(&degrees)
        .map(|(r, &d)| risk_row(r, d, conv, Method::Mc))
        .collect();
    write_risk_rows(out, &rows)?;

    let mut m = Manifest::new("simulate");
    m.set("p", p)
        .set("omega", output::real(omega))
        .set("lambda", output::real(lambda))
        .set("degrees", output::join(&degrees, |d| d.to_string()))
        .set("convention", conv.as_str())
        .set("method", Method::Mc.as_str());
    mc.record(&mut m);
    m.save(&ctx.manifest_path("simulate"))
}

/// Splits `degrees` into columns admissible at some `p` and warns about
/// every skipped `(degree, p)` pair.
fn plan_columns(
    degrees: &[DegreeArg],
    ps: &[usize],
    conv: CoefficientConvention,
    err: &mut dyn Write,
) -> CliResult<(Vec<DegreeArg>, Vec<String>)> {
    let mut columns = Vec::new();
    let mut skipped = Vec::new();
    for &d in degrees {
        let mut any = false;
        for &p in ps {
            match by_degree(d.0, p, 0.0, conv) {
                Ok(_) => any = true,
                Err(e) => {
                    writeln!(err, "skipped: {} at p = {p}: {e}", d.column())?;
                    skipped.push(format!("{}@p={p}", d.label()));
                }
            }
        }
        if any && !columns.contains(&d) {
            columns.push(d);
        }
    }
    if columns.is_empty() {
        let reason = degrees
            .iter()
            .filter_map(|d| ps.iter().find_map(|&p| by_degree(d.0, p, 0.0, conv).err()))
            .map(|e| e.to_string())
            .next()
            .unwrap_or_else(|| "no estimators requested".into());
        return Err(CliError::Usage(format!("no admissible estimator in the grid: {reason}")));
    }
    Ok((columns, skipped))
}

fn cmd_table(ctx: &Ctx, a: super::TableArgs, out: &mut dyn Write, err: &mut dyn Write) -> CliResult {
    let cfg = &ctx.config;
    let preset = match cfg.pick(a.paper_table, "paper-table")? {
        Some(n) => Some(
            reference::table(n)
                .ok_or_else(|| CliError::Usage(format!("unknown paper table {n} (expected 1 to 4)")))?,
        ),
        None => None,
    };
    let ps: Vec<usize> = match (list(ctx, a.p, "p")?, preset) {
        (Some(v), _) => v,
        (None, Some(t)) => vec![t.p],
        (None, None) => return Err(CliError::Usage("missing --p (or --paper-table)".into())),
    };
    let omegas: Vec<f64> = match (list(ctx, a.omega, "omega")?, preset) {
        (Some(v), _) => v,
        (None, Some(_)) => reference::TABLE_OMEGAS.to_vec(),
        (None, None) => return Err(CliError::Usage("missing --omega (or --paper-table)".into())),
    };
    let lambdas: Vec<f64> = match (list(ctx, a.lambda, "lambda")?, preset) {
        (Some(v), _) => v,
        (None, Some(_)) => reference::TABLE_LAMBDAS.to_vec(),
        (None, None) => return Err(CliError::Usage("missing --lambda (or --paper-table)".into())),
    };
    let degrees: Vec<DegreeArg> = match (degree_list(ctx, a.degrees, "degrees")?, preset) {
        (Some(v), _) => v,
        (None, Some(t)) => t.degrees.iter().map(|&d| DegreeArg(d)).collect(),
        (None, None) => vec![DegreeArg(1), DegreeArg(2), DegreeArg(3)],
    };
    let conv = cfg.pick(a.convention, "convention")?.unwrap_or(DEFAULT_CONVENTION);
    let method = cfg.pick(a.method, "method")?.unwrap_or(Method::Exact);
    let mc = mc_settings(ctx, a.mc)?;
    omegas.iter().try_for_each(|&w| check_omega(w))?;
    lambdas.iter().try_for_each(|&l| check_lambda(l))?;

    let (columns, skipped) = plan_columns(&degrees, &ps, conv, err)?;

    let mut grid: Vec<(usize, f64, f64)> = Vec::new();
    for &p in &ps {
        for &l in &lambdas {
            grid.extend(omegas.iter().map(|&w| (p, l, w)));
        }
    }
    let cells: Vec<Vec<Option<RiskReport>>> = grid
        .par_iter()
        .map(|&(p, lambda, omega)| {
            let slots: Vec<Option<ShrinkagePolynomial>> = columns
                .iter()
                .map(|&d| by_degree(d.0, p, omega, conv).ok())
                .collect();
            let ests: Vec<ShrinkagePolynomial> = slots.iter().flatten().cloned().collect();
            let mut reports = match method {
                Method::Exact => exact_all(p, lambda, &ests)?,
                Method::Mc => mc.run(p, lambda, omega, &ests)?,
            }
            .into_iter();
            Ok(slots.iter().map(|s| s.as_ref().and_then(|_| reports.next())).collect())
        })
        .collect::<CliResult<_>>()?;

    let default_name = match preset {
        Some(t) => format!("table{}.csv", t.number),
        None => "table.csv".into(),
    };
    let wide_path = cfg
        .pick(a.output, "output")?
        .unwrap_or_else(|| ctx.output_dir.join(default_name));
    let long_path = output::sibling(&wide_path, "_long.csv");
    let manifest_path = output::sibling(&wide_path, ".manifest");
    let with_p = ps.len() > 1;

    let mut wide = output::csv_file(&wide_path)?;
    let mut header: Vec<String> = Vec::new();
    if with_p {
        header.push("p".into());
    }
    header.extend(["lambda".to_string(), "omega".to_string()]);
    header.extend(columns.iter().map(DegreeArg::column));
    wide.write_record(&header)?;
    for (&(p, lambda, omega), reports) in grid.iter().zip(&cells) {
        let mut row = Vec::new();
        if with_p {
            row.push(p.to_string());
        }
        row.push(output::real(lambda));
        row.push(output::real(omega));
        row.extend(
            reports
                .iter()
                .map(|r| r.as_ref().map(|r| output::ratio(r.ratio_to_mle)).unwrap_or_default()),
        );
        wide.write_record(&row)?;
    }
    wide.flush()?;

    let mut long = output::csv_file(&long_path)?;
    long.write_record(RISK_HEADER)?;
    for reports in &cells {
        for (r, &d) in reports.iter().zip(&columns) {
            if let Some(r) = r {
                long.write_record(risk_row(r, d, conv, method))?;
            }
        }
    }
    long.flush()?;

    let mut m = Manifest::new("table");
    if let Some(t) = preset {
        m.set("paper-table", t.number);
    }
    m.set("p", output::join(&ps, |p| p.to_string()))
        .set("omega", output::join(&omegas, |w| output::real(*w)))
        .set("lambda", output::join(&lambdas, |l| output::real(*l)))
        .set("degrees", output::join(&columns, |d| d.to_string()))
        .set("skipped", skipped.join(","))
        .set("convention", conv.as_str())
        .set("method", method.as_str());
    if method == Method::Mc {
        mc.record(&mut m);
    }
    m.set("output", wide_path.display()).set("long-output", long_path.display());
    m.save(&manifest_path)?;
    report_written(out, &[&wide_path, &long_path, &manifest_path])
}

fn report_written(out: &mut dyn Write, paths: &[&Path]) -> CliResult {
    for p in paths {
        writeln!(out, "wrote {}", p.display())?;
    }
    Ok(())
}

fn cmd_curve(ctx: &Ctx, a: super::CurveArgs, out: &mut dyn Write, err: &mut dyn Write) -> CliResult {
    let cfg = &ctx.config;
    let preset = match cfg.pick(a.figure, "figure")? {
        Some(n) => Some(
            reference::figure(n)
                .ok_or_else(|| CliError::Usage(format!("unknown figure {n} (expected 1 to 8)")))?,
        ),
        None => None,
    };
    let p = required(cfg.pick(a.p, "p")?.or(preset.map(|f| f.p)), "p (or --figure)")?;
    let omega = cfg.pick(a.omega, "omega")?.or(preset.map(|f| f.omega)).unwrap_or(0.0);
    let degrees = match (degree_list(ctx, a.degrees, "degrees")?, preset) {
        (Some(v), _) => v,
        (None, Some(f)) => f.degrees.iter().map(|&d| DegreeArg(d)).collect(),
        (None, None) => vec![DegreeArg(1), DegreeArg(2)],
    };
    let lambda_max = cfg.pick(a.lambda_max, "lambda-max")?.unwrap_or(DEFAULT_LAMBDA_MAX);
    let steps = cfg.pick(a.steps, "steps")?.unwrap_or(DEFAULT_STEPS);
    let conv = cfg.pick(a.convention, "convention")?.unwrap_or(DEFAULT_CONVENTION);
    check_omega(omega)?;
    if !(lambda_max.is_finite() && lambda_max > 0.0) {
        return Err(CliError::Usage(format!("lambda-max must be finite and > 0, got {lambda_max}")));
    }
    if steps == 0 {
        return Err(CliError::Usage("steps must be >= 1".into()));
    }

    let (columns, skipped) = plan_columns(&degrees, &[p], conv, err)?;
    let ests = columns
        .iter()
        .map(|&d| estimator(d, p, omega, conv))
        .collect::<CliResult<Vec<_>>>()?;
    let lambdas: Vec<f64> = (0..=steps)
        .map(|i| if i == steps { lambda_max } else { lambda_max * i as f64 / steps as f64 })
        .collect();
    let rows: Vec<Vec<RiskReport>> = lambdas
        .par_iter()
        .map(|&l| exact_all(p, l, &ests))
        .collect::<CliResult<_>>()?;

    let default_name = match preset {
        Some(f) => format!("figure{}.csv", f.number),
        None => "curve.csv".into(),
    };
    let path = cfg
        .pick(a.output, "output")?
        .unwrap_or_else(|| ctx.output_dir.join(default_name));
    let manifest_path = output::sibling(&path, ".manifest");
    let mut w = output::csv_file(&path)?;
    let mut header = vec!["lambda".to_string()];
    header.extend(columns.iter().map(DegreeArg::column));
    w.write_record(&header)?;
    for (&l, reports) in lambdas.iter().zip(&rows) {
        let mut row = vec![output::real(l)];
        row.extend(reports.iter().map(|r| output::ratio(r.ratio_to_mle)));
        w.write_record(&row)?;
    }
    w.flush()?;

    let mut m = Manifest::new("curve");
    if let Some(f) = preset {
        m.set("figure", f.number);
    }
    m.set("p", p)
        .set("omega", output::real(omega))
        .set("degrees", output::join(&columns, |d| d.to_string()))
        .set("skipped", skipped.join(","))
        .set("lambda-max", output::real(lambda_max))
        .set("steps", steps)
        .set("convention", conv.as_str())
        .set("method", Method::Exact.as_str())
        .set("output", path.display());
    m.save(&manifest_path)?;
    report_written(out, &[&path, &manifest_path])
}

fn cmd_verify(ctx: &Ctx, a: super::VerifyArgs, out: &mut dyn Write) -> CliResult {
    let quick = ctx.config.flag(a.quick, "quick")?;
    let seed = ctx.config.pick(a.seed, "seed")?.unwrap_or(0);
    let fault = a.inject_fault.map(|f| match f {
        FaultArg::NegateGamma2 => Fault::NegateGamma2,
    });
    let opts = VerifyOptions { quick, fault, seed };
    let result = verify::run(&opts)?;

    let text = report::render(&result, &opts);
    out.write_all(text.as_bytes())?;
    let dir = &ctx.output_dir;
    let report_path = dir.join("verify_report.txt");
    let checks_path = dir.join("verify_checks.csv");
    let cells_path = dir.join("verify_tables.csv");
    output::create(&report_path)?.write_all(text.as_bytes())?;
    report::write_checks(&result, output::csv_file(&checks_path)?)?;
    report::write_cells(&result, output::csv_file(&cells_path)?)?;

    let mut m = Manifest::new("verify");
    m.set("quick", quick)
        .set("seed", seed)
        .set("fault", if fault.is_some() { "negate-gamma2" } else { "none" })
        .set("passed", result.passed())
        .set("report", report_path.display())
        .set("checks", checks_path.display())
        .set("tables", cells_path.display());
    m.save(&ctx.manifest_path("verify"))?;

    if result.passed() {
        Ok(())
    } else {
        let names: Vec<&str> = result.failures().iter().map(|c| c.name).collect();
        Err(CliError::Verification(format!(
            "{} check(s) failed: {}",
            names.len(),
            names.join(", ")
        )))
    }
}
