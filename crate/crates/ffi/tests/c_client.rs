//! Compiles a small C program against the generated header and the static
//! library. Skipped when no C compiler is on PATH.

use std::path::{Path, PathBuf};
use std::process::Command;

const PROGRAM: &str = r#"
#include <math.h>
#include <stdio.h>
#include "polyshrink.h"

int main(void) {
    PsRiskReport r;
    if (ps_exact_risk_js(14, 0.1, 1.2418, &r) != PS_STATUS_OK) return 1;
    if (fabs(r.ratio_to_mle - 0.2920) > 1e-3) return 2;

    PsEstimator *est = NULL;
    if (ps_estimator_poly(3, 8, 0.0, PS_CONVENTION_THEOREM, &est) != PS_STATUS_DIMENSION_TOO_SMALL) return 3;
    if (ps_last_error_message() == NULL) return 4;

    if (ps_estimator_poly(2, 14, 0.1, PS_CONVENTION_SIMULATION, &est) != PS_STATUS_OK) return 5;
    double x[14] = {0};
    x[0] = 3.0;
    double out[14];
    if (ps_estimator_apply(est, x, 14, out) != PS_STATUS_OK) return 6;
    ps_estimator_free(est);
    printf("%s %.4f\n", ps_version(), r.ratio_to_mle);
    return 0;
}
"#;

fn target_dir() -> PathBuf {
    // target/<profile>/deps/<test binary>
    let exe = std::env::current_exe().unwrap();
    exe.parent().and_then(Path::parent).unwrap().to_path_buf()
}

#[test]
fn c_program_links_and_runs() {
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    if Command::new(&cc).arg("--version").output().is_err() {
        eprintln!("skipping: no C compiler ({cc})");
        return;
    }
    let lib = target_dir().join("libpolyshrink_ffi.a");
    if !lib.exists() {
        eprintln!("skipping: {} not built", lib.display());
        return;
    }
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("client.c");
    let bin = dir.path().join("client");
    std::fs::write(&src, PROGRAM).unwrap();

    let build = Command::new(&cc)
        .args(["-std=c99", "-Wall", "-Werror", "-o"])
        .arg(&bin)
        .arg(&src)
        .arg("-I")
        .arg(&include)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm"])
        .output()
        .unwrap();
    assert!(
        build.status.success(),
        "compile failed: {}",
        String::from_utf8_lossy(&build.stderr)
    );
    let run = Command::new(&bin).output().unwrap();
    assert!(run.status.success(), "client exited with {:?}", run.status.code());
    let stdout = String::from_utf8(run.stdout).unwrap();
    assert!(stdout.starts_with(env!("CARGO_PKG_VERSION")));
    assert!(stdout.trim_end().ends_with("0.2920"));
}

#[test]
fn header_declares_every_entry_point() {
    let header = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("include/polyshrink.h")).unwrap();
    for name in [
        "ps_estimator_mle",
        "ps_estimator_james_stein",
        "ps_estimator_poly",
        "ps_estimator_custom",
        "ps_estimator_free",
        "ps_estimator_degree",
        "ps_estimator_coeffs",
        "ps_estimator_omega",
        "ps_estimator_apply",
        "ps_shrinkage_factor",
        "ps_exact_risk_general",
        "ps_exact_risk_js",
        "ps_exact_risk_chained",
        "ps_simulate_risk",
        "ps_ncx2_moment",
        "ps_ncx2_inverse_moment",
        "ps_ncx2_moment_derivative",
        "ps_moment_ratio",
        "ps_sup_inverse_ratio",
        "ps_last_error_message",
        "ps_version",
        "typedef struct PsEstimator PsEstimator",
    ] {
        assert!(header.contains(name), "header lacks {name}");
    }
}
