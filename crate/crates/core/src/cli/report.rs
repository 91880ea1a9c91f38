use std::fmt::Write as _;
use std::io::Write;

use super::output;
use super::CliError;
use crate::estimators::CoefficientConvention;
use crate::verify::{VerifyOptions, VerifyReport, TABLE_TOL};

fn estimator_label(degree: usize) -> String {
    match degree {
        0 => "MLE".into(),
        1 => "JS".into(),
        d => format!("deg{d}"),
    }
}

pub fn render(report: &VerifyReport, opts: &VerifyOptions) -> String {
    let mut s = String::new();
    let mode = if opts.quick { "quick" } else { "full" };
    let _ = writeln!(s, "polyshrink {} verification ({mode}, seed {})", crate::VERSION, opts.seed);
    if opts.fault.is_some() {
        let _ = writeln!(s, "fault injected: negate-gamma2");
    }
    let _ = writeln!(s);
    let _ = writeln!(s, "checks");
    for c in &report.checks {
        let _ = writeln!(
            s,
            "  {} {:<40} observed {:<11.3e} tolerance {:<9.2e} {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.observed,
            c.tolerance,
            c.target
        );
    }
    let _ = writeln!(s);
    let _ = writeln!(s, "convention adjudication (max |ratio - printed|, tolerance {TABLE_TOL})");
    for t in &report.tables {
        let errs = CoefficientConvention::ALL.map(|c| format!("{:.3e}", t.max_error(c)));
        let verdict = match t.reproducing_convention() {
            Some(c) => format!("reproduced under {c}"),
            None => format!(
                "not reproduced by either convention; closest {}, {} flagged entries",
                t.best_convention(),
                t.flagged().len()
            ),
        };
        let _ = writeln!(
            s,
            "  table {} (p = {}): THEOREM {}, SIMULATION {} -> {verdict}",
            t.table, t.p, errs[0], errs[1]
        );
        for c in t.flagged() {
            let _ = writeln!(
                s,
                "    flagged lambda {} omega {} {}: printed {} THEOREM {} SIMULATION {}",
                output::real(c.lambda),
                output::real(c.omega),
                estimator_label(c.degree),
                output::real(c.printed),
                output::ratio(c.computed[0]),
                output::ratio(c.computed[1]),
            );
        }
    }
    let _ = writeln!(s);
    let failed = report.failures().len();
    if failed == 0 {
        let _ = writeln!(s, "all {} checks passed", report.checks.len());
    } else {
        let _ = writeln!(s, "{failed} of {} checks failed", report.checks.len());
    }
    s
}

pub fn write_checks<W: Write>(report: &VerifyReport, mut w: csv::Writer<W>) -> Result<(), CliError> {
    w.write_record(["check", "target", "tolerance", "observed", "passed"])?;
    for c in &report.checks {
        w.write_record([
            c.name.to_string(),
            c.target.clone(),
            output::real(c.tolerance),
            output::real(c.observed),
            c.passed.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_cells<W: Write>(report: &VerifyReport, mut w: csv::Writer<W>) -> Result<(), CliError> {
    w.write_record([
        "table",
        "p",
        "lambda",
        "omega",
        "estimator",
        "printed",
        "ratio_THEOREM",
        "error_THEOREM",
        "ratio_SIMULATION",
        "error_SIMULATION",
        "flagged",
    ])?;
    for t in &report.tables {
        let best = t.best_convention();
        for c in &t.cells {
            w.write_record([
                t.table.to_string(),
                t.p.to_string(),
                output::real(c.lambda),
                output::real(c.omega),
                estimator_label(c.degree),
                output::real(c.printed),
                output::ratio(c.computed[0]),
                output::sig(c.error(CoefficientConvention::Theorem), 3),
                output::ratio(c.computed[1]),
                output::sig(c.error(CoefficientConvention::Simulation), 3),
                (c.error(best) > TABLE_TOL).to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}
