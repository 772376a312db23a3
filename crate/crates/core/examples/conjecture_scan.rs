//! Closed-loop extremal scans over (ϑ, b_x(0)) for several control strengths.
//!
//! For each γ the earliest time at which F₊ or F₋ reaches 1 should sit on the L = 0 edges of the
//! grid. Usage: `conjecture_scan [grid]`.

use qswap::cli::scan_summary;
use qswap::costate::SystemParams;
use qswap::extremals::all_candidates;
use qswap::optimizer::solve;
use qswap::scan::{run_scan, ScanConfig};
use qswap::su2::TargetSpec;

fn main() -> qswap::Result<()> {
    let grid: usize = std::env::args().nth(1).map_or(41, |s| s.parse().expect("grid must be an integer"));
    for gamma in [0.5, 1.0, 1.5, 2.0, 3.0] {
        let p = SystemParams::new(1.0, gamma)?;
        let best = solve(&p, TargetSpec::new(0.0)?)?;
        let fastest_bang = all_candidates(&p)
            .into_iter()
            .filter(|c| !c.family.is_singular())
            .map(|c| c.t_f)
            .fold(f64::INFINITY, f64::min);
        let horizon = fastest_bang.min(best.t_opt + 2.0) + 0.5;
        let cfg = ScanConfig::new(p, horizon, grid)?.with_candidate_probes();
        let field = run_scan(&cfg)?;
        println!("gamma = {gamma}: optimum {:.6} ({}), horizon {horizon:.3}", best.t_opt, best.winner.family);
        println!("  {}", scan_summary(&field));
        if field.argmin().is_some_and(|r| !r.on_boundary()) {
            println!("  red flag: earliest hit is off the L = 0 boundary");
        }
    }
    Ok(())
}
