//! Fastest control law to a SWAP-equivalent gate for a few control strengths and phases.

use qswap::costate::SystemParams;
use qswap::optimizer::solve;
use qswap::propagate::{propagate_closed, verify_target, DEFAULT_VERIFY_TOL};
use qswap::su2::TargetSpec;

fn main() -> qswap::Result<()> {
    for (gamma, phi) in [(1.0, 0.0), (0.5, 0.0), (2.0, 1.0), (3.0, 2.5)] {
        let p = SystemParams::new(1.0, gamma)?;
        let spec = TargetSpec::new(phi)?;
        let sol = solve(&p, spec)?;
        let v = verify_target(&propagate_closed(&sol.law, &p)?, spec, DEFAULT_VERIFY_TOL);
        println!(
            "gamma = {gamma}, phi = {phi}: t_opt = {:.9} via {} (certified {}), error {:.1e}",
            sol.t_opt, sol.winner.family, sol.certified, v.err
        );
        let mut t = 0.0;
        for s in sol.law.segments() {
            println!("  [{t:8.5}, {:8.5}]  u = ({:+.4}, {:+.4}, {:+.4})", t + s.duration, s.u[0], s.u[1], s.u[2]);
            t += s.duration;
        }
        if let Some(next) = sol.runners_up.first() {
            println!("  next best: {} at {:.6}", next.family, next.t_f);
        }
    }
    Ok(())
}
