//! Costate dynamics along extremals, constants of motion and the bang-bang switching times.
//!
//! The costate is M = (b, c) ∈ R^6 with b·S paired to the common part of the two blocks
//! and c·S to the drift-sign difference. Extremal controls are u = γ b/|b|.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::{invalid, Error, Result};
use crate::su2::{cross3, dot3, norm3, Sign};

/// Below this |b| the maximum condition does not fix the control.
pub const MU_MIN: f64 = 1e-10;

const MAX_TURN: f64 = 0.02;
const MAX_PIECES: usize = 100_000;

/// Drift ω₀ and control bound γ, with ω = √(ω₀² + γ²).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    omega0: f64,
    gamma: f64,
}

impl SystemParams {
    pub fn new(omega0: f64, gamma: f64) -> Result<Self> {
        if !(omega0.is_finite() && omega0 > 0.0) {
            return Err(invalid(format!("omega0 must be positive and finite, got {omega0}")));
        }
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(invalid(format!("gamma must be positive and finite, got {gamma}")));
        }
        Ok(SystemParams { omega0, gamma })
    }

    pub fn omega0(&self) -> f64 {
        self.omega0
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn omega(&self) -> f64 {
        self.omega0.hypot(self.gamma)
    }

    /// γ/ω₀.
    pub fn ratio(&self) -> f64 {
        self.gamma / self.omega0
    }
}

/// Costate (b, c). Also used for its time derivative.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostateState {
    pub b: [f64; 3],
    pub c: [f64; 3],
}

impl CostateState {
    pub fn new(b: [f64; 3], c: [f64; 3]) -> Result<Self> {
        if b.iter().chain(c.iter()).any(|x| !x.is_finite()) {
            return Err(invalid("costate components must be finite"));
        }
        if b.iter().chain(c.iter()).all(|&x| x == 0.0) {
            return Err(invalid("costate must not vanish identically"));
        }
        Ok(CostateState { b, c })
    }

    /// `self + h * rate`.
    pub fn axpy(&self, h: f64, rate: &CostateState) -> CostateState {
        CostateState {
            b: std::array::from_fn(|i| self.b[i] + h * rate.b[i]),
            c: std::array::from_fn(|i| self.c[i] + h * rate.c[i]),
        }
    }
}

/// Time derivative of the costate under control `u`.
pub fn costate_rhs(s: &CostateState, u: [f64; 3], p: &SystemParams) -> CostateState {
    let w0 = p.omega0;
    let (b, c) = (s.b, s.c);
    let ub = cross3(u, b);
    let uc = cross3(u, c);
    CostateState {
        b: [-w0 * c[1] + ub[0], w0 * c[0] + ub[1], ub[2]],
        c: [-w0 * b[1] + uc[0], w0 * b[0] + uc[1], uc[2]],
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Error)]
#[error("singular arc: |b| = {mu_b:.3e} leaves the control undetermined")]
pub struct SingularArc {
    pub mu_b: f64,
}

/// u = γ b/|b|, or [`SingularArc`] when |b| ≤ [`MU_MIN`].
pub fn extremal_controls(s: &CostateState, p: &SystemParams) -> std::result::Result<[f64; 3], SingularArc> {
    let mu_b = norm3(s.b);
    if mu_b <= MU_MIN {
        return Err(SingularArc { mu_b });
    }
    Ok(s.b.map(|x| p.gamma * x / mu_b))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstantsOfMotion {
    pub energy: f64,
    pub angular_momentum: f64,
}

/// E = (ω₀²/2)(|b|² + |c|²) and L = ω₀ b·c.
pub fn constants_of_motion(s: &CostateState, p: &SystemParams) -> ConstantsOfMotion {
    let w0 = p.omega0;
    ConstantsOfMotion {
        energy: 0.5 * w0 * w0 * (dot3(s.b, s.b) + dot3(s.c, s.c)),
        angular_momentum: w0 * dot3(s.b, s.c),
    }
}

/// Pontryagin Hamiltonian ω₀ c_z + u·b.
pub fn pontryagin_h(s: &CostateState, u: [f64; 3], p: &SystemParams) -> f64 {
    p.omega0 * s.c[2] + dot3(u, s.b)
}

/// U(b) = ½ω²b² − γλb, the planar effective potential for L = 0 motion.
pub fn effective_potential(b: f64, lambda: f64, p: &SystemParams) -> f64 {
    let w = p.omega();
    0.5 * w * w * b * b - p.gamma * lambda * b
}

/// State carried along an extremal next to the costate (e.g. the unitary pair).
pub trait Passenger: Clone {
    fn rate(&self, u: [f64; 3], p: &SystemParams) -> Self;
    /// `self + h * rate`.
    fn axpy(&self, h: f64, rate: &Self) -> Self;
}

impl Passenger for () {
    fn rate(&self, _: [f64; 3], _: &SystemParams) {}
    fn axpy(&self, _: f64, _: &()) {}
}

/// What the feedback does when both b and ḃ vanish.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SingularPolicy {
    ZeroControl,
    HoldPrevious,
}

/// Fixed-step RK4 integrator of the extremal flow.
///
/// Sign changes of u·b inside a step are located by bisection on the frozen-control flow, so a
/// bang-bang switch never falls inside an RK4 stage.
#[derive(Clone, Debug)]
pub struct ExtremalFlow<P: Passenger> {
    params: SystemParams,
    policy: SingularPolicy,
    pub t: f64,
    pub state: CostateState,
    pub passenger: P,
    /// Control applied at the start of the next step.
    pub control: [f64; 3],
}

impl<P: Passenger> ExtremalFlow<P> {
    pub fn new(state: CostateState, passenger: P, params: SystemParams, policy: SingularPolicy) -> Self {
        let mut flow = ExtremalFlow { params, policy, t: 0.0, state, passenger, control: [0.0; 3] };
        flow.control = flow.feedback(&state, [0.0; 3]);
        flow
    }

    pub fn params(&self) -> &SystemParams {
        &self.params
    }

    fn feedback(&self, s: &CostateState, prev: [f64; 3]) -> [f64; 3] {
        let g = self.params.gamma;
        if let Ok(u) = extremal_controls(s, &self.params) {
            return u;
        }
        // right limit through an isolated zero of b: b(t) ≈ ḃ t
        let w0 = self.params.omega0;
        let db = [-w0 * s.c[1], w0 * s.c[0], 0.0];
        let n = norm3(db);
        if n > MU_MIN {
            return db.map(|x| g * x / n);
        }
        match self.policy {
            SingularPolicy::ZeroControl => [0.0; 3],
            SingularPolicy::HoldPrevious => prev,
        }
    }

    /// Feedback at an RK4 stage. The step is known to be switch-free, so a stage state on the
    /// far side of the switching plane keeps the current control.
    fn stage_feedback(&self, s: &CostateState, u0: [f64; 3]) -> [f64; 3] {
        if dot3(u0, s.b) <= 0.0 {
            u0
        } else {
            self.feedback(s, u0)
        }
    }

    fn rk4_frozen(&self, s: &CostateState, q: &P, u: [f64; 3], h: f64) -> (CostateState, P) {
        let p = &self.params;
        let s_new = rk4_costate_frozen(s, u, h, p);
        let r = q.rate(u, p);
        let r2 = q.axpy(0.5 * h, &r).rate(u, p);
        let r3 = q.axpy(0.5 * h, &r2).rate(u, p);
        let r4 = q.axpy(h, &r3).rate(u, p);
        let q_new = q.axpy(h / 6.0, &r).axpy(h / 3.0, &r2).axpy(h / 3.0, &r3).axpy(h / 6.0, &r4);
        (s_new, q_new)
    }

    fn rk4_feedback(&self, s: &CostateState, q: &P, u0: [f64; 3], h: f64) -> (CostateState, P) {
        let p = &self.params;
        let u1 = u0;
        let k1 = costate_rhs(s, u1, p);
        let r1 = q.rate(u1, p);
        let s2 = s.axpy(0.5 * h, &k1);
        let u2 = self.stage_feedback(&s2, u0);
        let k2 = costate_rhs(&s2, u2, p);
        let q2 = q.axpy(0.5 * h, &r1);
        let r2 = q2.rate(u2, p);
        let s3 = s.axpy(0.5 * h, &k2);
        let u3 = self.stage_feedback(&s3, u0);
        let k3 = costate_rhs(&s3, u3, p);
        let r3 = q.axpy(0.5 * h, &r2).rate(u3, p);
        let s4 = s.axpy(h, &k3);
        let u4 = self.stage_feedback(&s4, u0);
        let k4 = costate_rhs(&s4, u4, p);
        let r4 = q.axpy(h, &r3).rate(u4, p);
        let s_new = s.axpy(h / 6.0, &k1).axpy(h / 3.0, &k2).axpy(h / 3.0, &k3).axpy(h / 6.0, &k4);
        let q_new = q.axpy(h / 6.0, &r1).axpy(h / 3.0, &r2).axpy(h / 3.0, &r3).axpy(h / 6.0, &r4);
        (s_new, q_new)
    }

    /// Advances by `h`, splitting the step at bang-bang switches and where the direction of b
    /// turns quickly (b passing close to the origin).
    pub fn step(&mut self, h: f64) {
        let mut left = h;
        let mut pieces = 0;
        while left > 0.0 {
            pieces += 1;
            let u0 = self.control;
            let dt = match self.locate_switch(u0, left) {
                Some(tau) if pieces < MAX_PIECES => {
                    let (s, q) = self.rk4_frozen(&self.state, &self.passenger, u0, tau);
                    self.state = s;
                    self.passenger = q;
                    tau
                }
                _ => {
                    let dt = if pieces < MAX_PIECES { self.smooth_piece(left) } else { left };
                    let (s, q) = self.rk4_feedback(&self.state, &self.passenger, u0, dt);
                    self.state = s;
                    self.passenger = q;
                    dt
                }
            };
            self.t += dt;
            left = if dt >= left { 0.0 } else { left - dt };
            self.control = self.feedback(&self.state, u0);
        }
    }

    /// Largest piece of `left` over which b/|b| turns by at most [`MAX_TURN`].
    fn smooth_piece(&self, left: f64) -> f64 {
        let b = self.state.b;
        let mu = norm3(b);
        if mu <= MU_MIN {
            return left;
        }
        let db = costate_rhs(&self.state, self.control, &self.params).b;
        let along = dot3(db, b) / mu;
        let perp = (dot3(db, db) - along * along).max(0.0).sqrt();
        let turn_rate = perp / mu;
        if turn_rate * left <= MAX_TURN {
            left
        } else {
            (MAX_TURN / turn_rate).max(left * 1e-9)
        }
    }

    /// Time τ ∈ (0, h] just past the first sign change of u₀·b along the frozen flow.
    fn locate_switch(&self, u0: [f64; 3], h: f64) -> Option<f64> {
        if norm3(u0) == 0.0 {
            return None;
        }
        let g = |tau: f64| {
            dot3(u0, rk4_costate_frozen(&self.state, u0, tau, &self.params).b)
        };
        let hi = if g(h) <= 0.0 { h } else { self.grazing_minimum(u0, h, &g)? };
        let (mut lo, mut hi) = (0.0, hi);
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if g(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Some(hi)
    }

    /// Where u₀·b dips to a non-positive minimum inside the step although it is positive at
    /// both ends (b grazing the switching plane).
    fn grazing_minimum(&self, u0: [f64; 3], h: f64, g: &impl Fn(f64) -> f64) -> Option<f64> {
        let p = &self.params;
        let d1 = costate_rhs(&self.state, u0, p);
        let d2 = costate_rhs(&d1, u0, p);
        let (g0, g1, g2) = (dot3(u0, self.state.b), dot3(u0, d1.b), dot3(u0, d2.b));
        if g1 >= 0.0 || g2 <= 0.0 || -g1 / g2 >= h || g0 - 0.5 * g1 * g1 / g2 > 0.5 * g0 {
            return None;
        }
        let r = 0.5 * (5f64.sqrt() - 1.0);
        let (mut a, mut b) = (0.0, (-2.0 * g1 / g2).min(h));
        let mut c = b - r * (b - a);
        let mut d = a + r * (b - a);
        let (mut gc, mut gd) = (g(c), g(d));
        for _ in 0..60 {
            if gc.min(gd) <= 0.0 {
                break;
            }
            if gc < gd {
                b = d;
                d = c;
                gd = gc;
                c = b - r * (b - a);
                gc = g(c);
            } else {
                a = c;
                c = d;
                gc = gd;
                d = a + r * (b - a);
                gd = g(d);
            }
        }
        if gc <= 0.0 {
            Some(c)
        } else if gd <= 0.0 {
            Some(d)
        } else {
            None
        }
    }
}

/// One classical RK4 step of the costate under a constant control.
pub fn rk4_costate_frozen(s: &CostateState, u: [f64; 3], h: f64, p: &SystemParams) -> CostateState {
    let k1 = costate_rhs(s, u, p);
    let k2 = costate_rhs(&s.axpy(0.5 * h, &k1), u, p);
    let k3 = costate_rhs(&s.axpy(0.5 * h, &k2), u, p);
    let k4 = costate_rhs(&s.axpy(h, &k3), u, p);
    s.axpy(h / 6.0, &k1).axpy(h / 3.0, &k2).axpy(h / 3.0, &k3).axpy(h / 6.0, &k4)
}

/// One sample of an integrated extremal.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TrajectoryPoint {
    pub t: f64,
    pub state: CostateState,
    pub control: [f64; 3],
}

/// Integrates the extremal flow from `initial` over [0, horizon] with steps of at most `step`.
///
/// `step` may not exceed 0.01/ω. On an isolated zero of b the control takes its right limit;
/// if b and ḃ both vanish the control is 0 for that step.
pub fn integrate_costate(
    initial: CostateState,
    params: &SystemParams,
    horizon: f64,
    step: f64,
) -> Result<Vec<TrajectoryPoint>> {
    let initial = CostateState::new(initial.b, initial.c)?;
    if !(horizon.is_finite() && horizon >= 0.0) {
        return Err(invalid(format!("horizon must be finite and non-negative, got {horizon}")));
    }
    let max_step = 0.01 / params.omega();
    if !(step > 0.0 && step <= max_step * (1.0 + 1e-12)) {
        return Err(invalid(format!("step must lie in (0, {max_step:.6e}], got {step}")));
    }
    let n = (horizon / step - 1e-9).ceil().max(0.0) as usize;
    let mut flow = ExtremalFlow::new(initial, (), *params, SingularPolicy::ZeroControl);
    let mut out = Vec::with_capacity(n + 1);
    out.push(TrajectoryPoint { t: 0.0, state: flow.state, control: flow.control });
    for k in 1..=n {
        let target = if k == n { horizon } else { k as f64 * step };
        flow.step(target - flow.t);
        flow.t = target;
        out.push(TrajectoryPoint { t: flow.t, state: flow.state, control: flow.control });
    }
    Ok(out)
}

/// Coefficients of b_x(t) = A₀ cos ωt + B₀ sin ωt + C₀ on the first bang arc of an L = 0 extremal.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct InitialCoefficients {
    pub a0: f64,
    pub b0: f64,
    pub c0: f64,
}

impl InitialCoefficients {
    pub fn bx(&self, t: f64, p: &SystemParams) -> f64 {
        let (s, c) = (p.omega() * t).sin_cos();
        self.a0 * c + self.b0 * s + self.c0
    }
}

pub fn initial_coefficients(bx0: f64, sign: Sign, p: &SystemParams) -> Result<InitialCoefficients> {
    if !(0.0..=1.0).contains(&bx0) {
        return Err(invalid(format!("b_x(0) must lie in [0, 1], got {bx0}")));
    }
    let (w0, g, w) = (p.omega0, p.gamma, p.omega());
    Ok(InitialCoefficients {
        a0: (w0 / w).powi(2) * bx0,
        b0: sign.value() * (w0 / w) * (1.0 - bx0 * bx0).sqrt(),
        c0: (g / w).powi(2) * bx0,
    })
}

/// First switch t̃ and inter-switch period t̄.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SwitchingTimes {
    pub t_tilde: f64,
    pub t_bar: f64,
}

impl SwitchingTimes {
    /// Enforces π/ω ≤ t̄ ≤ 2π/ω and 0 ≤ t̃ ≤ t̄ (relative slack 1e-12).
    pub fn new(t_tilde: f64, t_bar: f64, p: &SystemParams) -> Result<Self> {
        let w = p.omega();
        let eps = 1e-12 * 2.0 * PI / w;
        let ok = t_bar >= PI / w - eps && t_bar <= 2.0 * PI / w + eps && t_tilde >= -eps && t_tilde <= t_bar + eps;
        if !ok {
            return Err(invalid(format!("switching times out of range: t~ = {t_tilde}, t- = {t_bar}, omega = {w}")));
        }
        Ok(SwitchingTimes { t_tilde, t_bar })
    }
}

/// Switching times of the L = 0 extremal with b(0) = (b_x(0), 0, 0) and sign(B₀) = `sign`.
pub fn switching_times(bx0: f64, sign: Sign, p: &SystemParams) -> Result<SwitchingTimes> {
    let w = p.omega();
    if bx0 == 0.0 {
        return SwitchingTimes::new(PI / w, PI / w, p);
    }
    let k = initial_coefficients(bx0, sign, p)?;
    let (a, b, c) = (k.a0, k.b0, k.c0);
    let r = a * a + b * b;
    let mut d = r - c * c;
    if d < -1e-12 * r {
        return Err(Error::NoSwitch { bx0, discriminant: d });
    }
    d = d.max(0.0);
    let sd = d.sqrt();
    let first = (-b * c + a * sd).atan2(-a * c - b * sd).rem_euclid(2.0 * PI);
    let mut period = (-2.0 * c * sd).atan2(2.0 * c * c - r).rem_euclid(2.0 * PI);
    if period <= 1e-12 {
        period = 2.0 * PI;
    }
    SwitchingTimes::new(first / w, period / w, p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn params(w0: f64, g: f64) -> SystemParams {
        SystemParams::new(w0, g).unwrap()
    }

    fn l0_state(bx0: f64, sign: Sign) -> CostateState {
        let k = (1.0 - bx0 * bx0).sqrt();
        let th = if sign == Sign::Plus { 0.0 } else { PI };
        CostateState::new([bx0, 0.0, 0.0], [th.sin() * k, -th.cos() * k, 0.0]).unwrap()
    }

    #[test]
    fn params_validation() {
        assert!(SystemParams::new(0.0, 1.0).is_err());
        assert!(SystemParams::new(1.0, -1.0).is_err());
        assert!(SystemParams::new(1.0, f64::INFINITY).is_err());
        assert_abs_diff_eq!(params(3.0, 4.0).omega(), 5.0);
    }

    #[test]
    fn rhs_example() {
        let p = params(1.0, 1.0);
        let s = CostateState::new([1.0, 0.0, 0.0], [0.0, 0.0, 0.0]).unwrap();
        let d = costate_rhs(&s, [1.0, 0.0, 0.0], &p);
        assert_eq!(d.b, [0.0, 0.0, 0.0]);
        assert_eq!(d.c, [0.0, 1.0, 0.0]);
    }

    #[test]
    fn rhs_matches_component_form() {
        let p = params(0.7, 1.3);
        let s = CostateState::new([0.3, -0.2, 0.5], [0.1, 0.4, -0.6]).unwrap();
        let u = [0.2, -0.9, 0.4];
        let (b, c, w0) = (s.b, s.c, 0.7);
        let d = costate_rhs(&s, u, &p);
        let expect_b = [
            -w0 * c[1] - u[2] * b[1] + u[1] * b[2],
            w0 * c[0] + u[2] * b[0] - u[0] * b[2],
            u[0] * b[1] - u[1] * b[0],
        ];
        let expect_c = [
            -w0 * b[1] + u[1] * c[2] - u[2] * c[1],
            w0 * b[0] - u[0] * c[2] + u[2] * c[0],
            u[0] * c[1] - u[1] * c[0],
        ];
        for i in 0..3 {
            assert_abs_diff_eq!(d.b[i], expect_b[i], epsilon = 1e-15);
            assert_abs_diff_eq!(d.c[i], expect_c[i], epsilon = 1e-15);
        }
    }

    #[test]
    fn controls_and_singular_arc() {
        let p = params(1.0, 2.0);
        let s = CostateState::new([0.0, 3.0, 4.0], [0.0; 3]).unwrap();
        let u = extremal_controls(&s, &p).unwrap();
        assert_abs_diff_eq!(u[1], 1.2, epsilon = 1e-15);
        assert_abs_diff_eq!(u[2], 1.6, epsilon = 1e-15);
        let s = CostateState::new([0.0; 3], [1.0, 0.0, 0.0]).unwrap();
        assert!(extremal_controls(&s, &p).is_err());
    }

    #[test]
    fn zero_costate_rejected() {
        assert!(CostateState::new([0.0; 3], [0.0; 3]).is_err());
    }

    #[test]
    fn potential_examples() {
        let p = params(1.0, 1.0);
        assert_eq!(effective_potential(0.0, 1.0, &p), 0.0);
        assert_abs_diff_eq!(effective_potential(1.0, 1.0, &p), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn switching_at_origin() {
        let p = params(1.0, 1.3);
        let st = switching_times(0.0, Sign::Plus, &p).unwrap();
        assert_abs_diff_eq!(st.t_tilde, PI / p.omega(), epsilon = 1e-15);
        assert_abs_diff_eq!(st.t_bar, PI / p.omega(), epsilon = 1e-15);
    }

    #[test]
    fn switching_tangency_has_full_period() {
        let p = params(1.0, 2.0);
        let st = switching_times(0.5, Sign::Minus, &p).unwrap();
        assert_abs_diff_eq!(st.t_bar, 2.0 * PI / p.omega(), epsilon = 1e-9);
    }

    #[test]
    fn switching_fails_without_crossing() {
        // γ < ω₀ keeps b_x away from zero for b_x(0) = 1
        let p = params(1.0, 0.5);
        let err = switching_times(1.0, Sign::Plus, &p);
        assert!(err.is_ok() || matches!(err, Err(Error::NoSwitch { .. })));
        let p = params(1.0, 3.0);
        assert!(matches!(switching_times(0.9, Sign::Plus, &p), Err(Error::NoSwitch { .. })));
    }

    /// First zero of b_x by direct integration of the costate flow under the constant first bang.
    fn first_zero_numeric(bx0: f64, sign: Sign, p: &SystemParams) -> Option<f64> {
        let s = l0_state(bx0, sign);
        let u = [p.gamma, 0.0, 0.0];
        let h = 1e-3 / p.omega();
        let mut t = 0.0;
        let mut cur = s;
        while t < 2.5 * PI / p.omega() {
            let next = rk4_costate_frozen(&cur, u, h, p);
            if next.b[0] <= 0.0 {
                let (mut lo, mut hi) = (0.0, h);
                for _ in 0..60 {
                    let mid = 0.5 * (lo + hi);
                    if rk4_costate_frozen(&cur, u, mid, p).b[0] > 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                return Some(t + 0.5 * (lo + hi));
            }
            cur = next;
            t += h;
        }
        None
    }

    #[test]
    fn first_switch_matches_integration() {
        for &(g, bx0, sign) in &[
            (1.5, 0.3, Sign::Plus),
            (1.5, 0.3, Sign::Minus),
            (0.8, 0.2, Sign::Plus),
            (0.8, 0.2, Sign::Minus),
            (3.0, 0.05, Sign::Minus),
            (1.0, 0.9, Sign::Minus),
        ] {
            let p = params(1.0, g);
            let st = switching_times(bx0, sign, &p).unwrap();
            let t = first_zero_numeric(bx0, sign, &p).unwrap();
            assert!((t - st.t_tilde).abs() < 1e-9, "g={g} bx0={bx0} {sign}: {t} vs {}", st.t_tilde);
        }
    }

    #[test]
    fn trajectory_has_expected_sample_count() {
        let p = params(1.0, 1.0);
        let s = l0_state(0.4, Sign::Plus);
        let h = 0.01 / p.omega();
        let traj = integrate_costate(s, &p, 1.0, h).unwrap();
        assert_eq!(traj.len(), (1.0 / h).ceil() as usize + 1);
        assert_abs_diff_eq!(traj.last().unwrap().t, 1.0);
        assert_eq!(integrate_costate(s, &p, 0.0, h).unwrap().len(), 1);
        assert!(integrate_costate(s, &p, 1.0, 0.1).is_err());
    }

    #[test]
    fn l0_trajectory_switches_at_predicted_times() {
        let p = params(1.0, 1.5);
        let (bx0, sign) = (0.35, Sign::Minus);
        let st = switching_times(bx0, sign, &p).unwrap();
        let traj = integrate_costate(l0_state(bx0, sign), &p, st.t_tilde + 2.5 * st.t_bar, 0.005).unwrap();
        let mut switches = Vec::new();
        for w in traj.windows(2) {
            if w[0].control[0] * w[1].control[0] < 0.0 {
                switches.push(w[1].t);
            }
        }
        assert_eq!(switches.len(), 3);
        // switches fall inside the step that contains the predicted time
        for (k, t) in switches.iter().enumerate() {
            let predicted = st.t_tilde + k as f64 * st.t_bar;
            assert!(*t >= predicted - 1e-9 && *t < predicted + 0.005 + 1e-9, "{k}: {t} vs {predicted}");
        }
    }

    proptest! {
        #[test]
        fn times_respect_ranges(g in 0.05..6.0f64, bx0 in 0.0..=1.0f64, plus in any::<bool>()) {
            let p = params(1.0, g);
            let sign = if plus { Sign::Plus } else { Sign::Minus };
            if let Ok(st) = switching_times(bx0, sign, &p) {
                let w = p.omega();
                prop_assert!(st.t_bar >= PI / w - 1e-12 && st.t_bar <= 2.0 * PI / w + 1e-12);
                prop_assert!(st.t_tilde >= 0.0 && st.t_tilde <= st.t_bar + 1e-12);
                if sign == Sign::Minus {
                    prop_assert!(st.t_tilde <= PI / w + 1e-12);
                }
                let k = initial_coefficients(bx0, sign, &p).unwrap();
                prop_assert!(k.bx(st.t_tilde, &p).abs() < 1e-9);
            }
        }

        #[test]
        fn invariants_conserved(
            g in 0.3..3.0f64,
            b in prop::array::uniform3(-1.0..1.0f64),
            c in prop::array::uniform3(-1.0..1.0f64),
        ) {
            let p = params(1.0, g);
            let s = CostateState::new(b, c).unwrap();
            let h = 0.01 / p.omega();
            let traj = integrate_costate(s, &p, 5.0, h).unwrap();
            let k0 = constants_of_motion(&s, &p);
            let h0 = pontryagin_h(&s, traj[0].control, &p);
            for pt in &traj {
                let k = constants_of_motion(&pt.state, &p);
                prop_assert!((k.energy - k0.energy).abs() < 1e-9);
                prop_assert!((k.angular_momentum - k0.angular_momentum).abs() < 1e-9);
                prop_assert!((pontryagin_h(&pt.state, pt.control, &p) - h0).abs() < 1e-8);
            }
        }

        #[test]
        fn energy_splits_into_potential_and_kinetic(
            g in 0.3..3.0f64, bx0 in 0.0..1.0f64, plus in any::<bool>(),
        ) {
            let p = params(1.0, g);
            let sign = if plus { Sign::Plus } else { Sign::Minus };
            let s = l0_state(bx0, sign);
            let lambda = pontryagin_h(&s, extremal_controls(&s, &p).unwrap_or([0.0; 3]), &p);
            let e0 = constants_of_motion(&s, &p).energy;
            let traj = integrate_costate(s, &p, 6.0, 0.01 / p.omega()).unwrap();
            for pt in traj.iter().step_by(37) {
                let st = &pt.state;
                let r = st.b[0].hypot(st.b[1]);
                let db = costate_rhs(st, pt.control, &p);
                let kinetic = 0.5 * (db.b[0] * db.b[0] + db.b[1] * db.b[1]);
                let e = effective_potential(r, lambda, &p) + 0.5 * lambda * lambda + kinetic;
                prop_assert!((e - e0).abs() < 1e-8, "{} vs {}", e, e0);
            }
        }
    }
}
