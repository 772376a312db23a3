//! Rotating every control about z by φ′ conjugates both blocks by the same frame rotation, so a
//! law for one target phase serves all of them in the same time.

use qswap::costate::SystemParams;
use qswap::optimizer::solve;
use qswap::propagate::{propagate_closed, verify_target};
use qswap::su2::{adjoint_so3, frame_rotation, TargetSpec};

fn main() -> qswap::Result<()> {
    let p = SystemParams::new(1.0, 1.3)?;
    let base = solve(&p, TargetSpec::new(0.0)?)?;
    println!("base law: {} in {:.9}", base.winner.family, base.t_opt);
    for phi in [0.3, 1.0, 2.0, 4.0] {
        let law = base.law.rotated(phi);
        let v = verify_target(&propagate_closed(&law, &p)?, TargetSpec::new(phi)?, 1e-8);
        let r = adjoint_so3(&frame_rotation(phi));
        let axis = r.apply([1.0, 0.0, 0.0]);
        println!(
            "phi' = {phi}: reached {} (err {:.1e}) in {:.9}; frame maps x to ({:+.4}, {:+.4}, {:+.4})",
            v.reached,
            v.err,
            law.total_duration(),
            axis[0],
            axis[1],
            axis[2]
        );
    }
    Ok(())
}
