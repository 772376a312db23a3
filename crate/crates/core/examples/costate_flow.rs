//! Integrates an L = 0 extremal, compares the located switches with the closed-form times and
//! tracks the constants of motion.

use qswap::costate::{constants_of_motion, integrate_costate, pontryagin_h, switching_times, SystemParams};
use qswap::scan::initial_costate;
use qswap::su2::Sign;

fn main() -> qswap::Result<()> {
    let p = SystemParams::new(1.0, 1.5)?;
    let bx0 = 0.4;
    let s0 = initial_costate(std::f64::consts::PI, bx0, &p)?;
    let st = switching_times(bx0, Sign::Minus, &p)?;
    println!("predicted: first switch {:.9}, then every {:.9}", st.t_tilde, st.t_bar);

    let traj = integrate_costate(s0, &p, 10.0, 0.01 / p.omega())?;
    let mut switches = Vec::new();
    for w in traj.windows(2) {
        if w[0].control[0] * w[1].control[0] < 0.0 {
            // linear interpolation of b_x between the samples
            let (a, b) = (w[0].state.b[0], w[1].state.b[0]);
            switches.push(w[0].t + (w[1].t - w[0].t) * a / (a - b));
        }
    }
    println!("located:   {switches:.9?}");

    let c0 = constants_of_motion(&s0, &p);
    let h0 = pontryagin_h(&s0, traj[0].control, &p);
    let last = traj.last().unwrap();
    let c1 = constants_of_motion(&last.state, &p);
    println!(
        "E {:.3e} -> drift {:.1e}, L {:.3e} -> drift {:.1e}, H {:.6} -> drift {:.1e}",
        c0.energy,
        c1.energy - c0.energy,
        c0.angular_momentum,
        c1.angular_momentum - c0.angular_momentum,
        h0,
        pontryagin_h(&last.state, last.control, &p) - h0
    );
    Ok(())
}
