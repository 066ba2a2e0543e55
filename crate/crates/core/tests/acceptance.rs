//! Acceptance run: one PASS/FAIL line per criterion at the reference
//! parameters. Set CARDYLAB_ACCEPT=1,5 to run a subset.

use std::time::Instant;

use cardylab::experiments::*;
use cardylab::Result;

fn selected(id: u32) -> bool {
    match std::env::var("CARDYLAB_ACCEPT") {
        Ok(s) if !s.trim().is_empty() => s.split(',').any(|t| t.trim().parse() == Ok(id)),
        _ => true,
    }
}

fn line(r: &Report, secs: f64) {
    println!("[{}] #{:<2} {:<34} {}  ({secs:.1}s)", if r.passed { "PASS" } else { "FAIL" }, r.id, r.name, r.summary);
}

fn timed<F: FnOnce() -> Result<Vec<Report>>>(f: F, failed: &mut Vec<u32>) {
    let t = Instant::now();
    match f() {
        Ok(rs) => {
            let secs = t.elapsed().as_secs_f64() / rs.len() as f64;
            for r in &rs {
                line(r, secs);
                if !r.passed {
                    failed.push(r.id);
                }
            }
        }
        Err(e) => {
            println!("[FAIL] error: {e}");
            failed.push(0);
        }
    }
}

fn main() {
    let mut failed = Vec::new();

    // Tolerances: 99% of triples within 4σ, N = 1e5.
    if selected(1) {
        timed(|| Ok(vec![exact_oracle_embedding(&OracleConfig::default())?]), &mut failed);
    }
    // sup discrepancy strictly decreasing, ≤ 0.06 at δ = 1/40; defect drops by more than 3σ.
    if selected(2) || selected(4) {
        timed(
            || {
                let cfg = TriangleConfig::default();
                let levels = triangle_levels(&cfg)?;
                let mut out = Vec::new();
                if selected(2) {
                    out.push(smirnov_triangle(&cfg, &levels));
                }
                if selected(4) {
                    out.push(sum_defect(&cfg, &levels));
                }
                Ok(out)
            },
            &mut failed,
        );
    }
    // |p̂ − 1/2| ≤ 3σ at δ = 1/64, N = 1e5.
    if selected(3) {
        timed(|| Ok(vec![rhombus_crossing(&RhombusConfig::default())?]), &mut failed);
    }
    // slope −1.25 ± 0.15.
    if selected(5) {
        timed(|| Ok(vec![four_arm_exponent(&FourArmConfig::default())?.0]), &mut failed);
    }
    // residuals ≤ 1e-12.
    if selected(6) {
        timed(|| Ok(vec![ctmc_stationarity(&CtmcConfig::default())?]), &mut failed);
    }
    // slope 1 ± 5%.
    if selected(7) {
        timed(|| Ok(vec![gff_circle_law(&GffConfig::default())?]), &mut failed);
    }
    // relative error ≤ 1e-12.
    if selected(8) {
        timed(|| Ok(vec![gmc_shift(&GmcShiftConfig::default())?]), &mut failed);
    }
    // zero failures.
    if selected(9) {
        timed(|| Ok(vec![roundtrip_involution(&RoundTripConfig::default())?]), &mut failed);
    }
    // p > 0.01.
    if selected(10) {
        timed(|| Ok(vec![sampler_chi_square(&SamplerConfig::default())?]), &mut failed);
    }
    // zero violations.
    if selected(11) {
        timed(|| Ok(vec![pivotal_containment(&ContainmentConfig::default())?]), &mut failed);
    }

    if failed.is_empty() {
        println!("acceptance: all selected criteria passed");
    } else {
        println!("acceptance: failed {failed:?}");
        std::process::exit(1);
    }
}
