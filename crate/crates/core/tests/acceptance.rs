//! One line per acceptance criterion. Every tolerance is pinned here rather
//! than taken from library defaults, so a change in the defaults cannot
//! silently loosen the suite.

use innercalc::selftest::{run_all, SelftestConfig, Tolerances};

fn pinned() -> SelftestConfig {
    SelftestConfig {
        seed: 20240601,
        truncation: 6,
        tolerances: Tolerances {
            residual: 1e-10,
            exact: 1e-12,
            conservativity: 0.0,
            trotter: 1e-6,
            order_band: 0.1,
            halving_low: 0.45,
            halving_high: 0.55,
        },
    }
}

#[test]
fn acceptance() {
    let started = std::time::Instant::now();
    let reports = run_all(&pinned());
    assert_eq!(reports.len(), 11);
    let mut failed = Vec::new();
    for r in &reports {
        println!("{r}");
        if !r.passed() {
            for c in r.checks.iter().filter(|c| !c.passed) {
                println!("      {} = {:e} (want {})", c.name, c.value, c.band);
            }
            failed.push(r.id);
        }
    }
    println!(
        "acceptance: {} of {} criteria pass in {:.1?}",
        reports.len() - failed.len(),
        reports.len(),
        started.elapsed()
    );
    assert!(failed.is_empty(), "failing criteria: {failed:?}");
}
