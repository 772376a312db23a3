//! Randomized search for laws faster than the analytic optimum.

use std::time::Instant;

use qswap::costate::SystemParams;
use qswap::optimizer::{brute_force_check, solve};
use qswap::su2::TargetSpec;

fn main() -> qswap::Result<()> {
    let spec = TargetSpec::new(0.0)?;
    for gamma in [1.0, 2.0] {
        let p = SystemParams::new(1.0, gamma)?;
        let s = solve(&p, spec)?;
        println!("gamma = {gamma}: t_opt = {:.6} ({})", s.t_opt, s.winner.family);
        for (label, budget) in [("below", s.t_opt - 0.05), ("above", s.t_opt + 0.1)] {
            let t0 = Instant::now();
            let hit = brute_force_check(&p, spec, budget, 100_000, 0)?;
            match hit {
                Some(h) => println!(
                    "  {label} budget {budget:.4}: found t = {:.6}, err = {:.2e}, {} segments ({:.1?})",
                    h.t,
                    h.err,
                    h.law.len(),
                    t0.elapsed()
                ),
                None => println!("  {label} budget {budget:.4}: nothing found ({:.1?})", t0.elapsed()),
            }
        }
    }
    Ok(())
}
