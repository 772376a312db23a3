//! Closed-loop scans reach the target first on the L = 0 edges, at the analytic time whenever the
//! optimum is bang-bang.

use qswap::costate::SystemParams;
use qswap::optimizer::solve;
use qswap::scan::{run_scan, ScanConfig};
use qswap::su2::TargetSpec;

#[test]
fn earliest_hit_is_on_the_boundary() {
    for gamma in [0.5, 1.0, 1.5, 2.0, 3.0] {
        let p = SystemParams::new(1.0, gamma).unwrap();
        let best = solve(&p, TargetSpec::new(0.0).unwrap()).unwrap();
        let horizon = if best.winner.family.is_singular() { 4.7 } else { best.t_opt + 0.5 };
        let cfg = ScanConfig::new(p, horizon, 21).unwrap().with_candidate_probes();
        let field = run_scan(&cfg).unwrap();
        let r = field.argmin().unwrap_or_else(|| panic!("gamma = {gamma}: nothing reached"));
        assert!(r.on_boundary(), "gamma = {gamma}: argmin at theta = {}, bx0 = {}", r.theta, r.bx0);
        assert!(field.max_f() <= 1.0 + 1e-9);
        assert!(field.max_invariant_drift < 1e-7, "gamma = {gamma}: drift {}", field.max_invariant_drift);
        for rec in field.records.iter().filter(|r| !r.on_boundary()) {
            assert!(rec.first_hit.is_none(), "gamma = {gamma}: interior hit at {rec:?}");
        }
        if !best.winner.family.is_singular() {
            let hit = r.first_hit.unwrap();
            assert!((hit - best.t_opt).abs() <= 2.0 * cfg.step, "gamma = {gamma}: {hit} vs {}", best.t_opt);
        }
    }
}
