//! The three-arc extremal with a zero-control middle arc, available once γ ≥ ω₀.

use std::f64::consts::PI;

use qswap::costate::SystemParams;
use qswap::extremals::{candidate_schedule, singular_candidate, singular_candidate_dominated};
use qswap::propagate::propagate_closed;
use qswap::su2::{matches_up_to_sign, TargetSpec};

fn main() -> qswap::Result<()> {
    let spec = TargetSpec::new(0.0)?;
    for gamma in [0.9, 1.0, 1.5, 2.0, 4.0] {
        let p = SystemParams::new(1.0, gamma)?;
        let Some(c) = singular_candidate(&p) else {
            println!("gamma = {gamma}: no singular extremal");
            continue;
        };
        let r = 1.0 / gamma;
        let closed = 2.0 / p.omega() * (PI - (r * r).acos()) + (PI - 2.0 * r.asin());
        let law = candidate_schedule(&c, spec, &p)?;
        let pair = propagate_closed(&law, &p)?;
        let xf = spec.matrix();
        let m1 = matches_up_to_sign(&pair.x1, &xf, 1e-8);
        let m2 = matches_up_to_sign(&pair.x2, &xf, 1e-8);
        println!(
            "gamma = {gamma}: t~ = {:.6}, t' = {:.6}, t_f = {:.9} (closed form {closed:.9}), {} arcs, signs ({:?}, {:?})",
            c.t_tilde,
            c.t_prime,
            c.t_f,
            law.len(),
            m1.sign,
            m2.sign
        );
        if let Some(d) = singular_candidate_dominated(&p) {
            println!("  B0 > 0 branch: t_f = {:.6}", d.t_f);
        }
    }
    Ok(())
}
