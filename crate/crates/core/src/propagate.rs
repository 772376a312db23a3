//! Evolution of the block pair (X₁, X₂) under piecewise-constant controls.

use serde::{Deserialize, Serialize};

use crate::costate::SystemParams;
use crate::error::{invalid, Result};
use crate::su2::{exp_spin, matches_up_to_sign, pauli_dot, Mat2, Sign, Su2Matrix, TargetSpec, C64};

/// Default tolerance of [`verify_target`].
pub const DEFAULT_VERIFY_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub duration: f64,
    pub u: [f64; 3],
}

/// Ordered list of constant-control segments.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ControlLaw {
    segments: Vec<Segment>,
}

impl ControlLaw {
    /// Rejects non-positive or non-finite durations and non-finite controls.
    pub fn new(segments: Vec<Segment>) -> Result<Self> {
        for (i, s) in segments.iter().enumerate() {
            if !(s.duration.is_finite() && s.duration > 0.0) {
                return Err(invalid(format!("segment {i}: duration must be positive and finite, got {}", s.duration)));
            }
            if s.u.iter().any(|x| !x.is_finite()) {
                return Err(invalid(format!("segment {i}: control must be finite")));
            }
        }
        Ok(ControlLaw { segments })
    }

    pub fn empty() -> Self {
        ControlLaw::default()
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn total_duration(&self) -> f64 {
        self.segments.iter().map(|s| s.duration).sum()
    }

    /// Checks |u| ≤ γ (relative slack 1e-12) on every segment.
    pub fn validate(&self, p: &SystemParams) -> Result<()> {
        let bound = p.gamma() * (1.0 + 1e-12);
        for (i, s) in self.segments.iter().enumerate() {
            let n = s.u.iter().map(|x| x * x).sum::<f64>().sqrt();
            if n > bound {
                return Err(invalid(format!("segment {i}: |u| = {n} exceeds gamma = {}", p.gamma())));
            }
        }
        Ok(())
    }

    /// The law followed by `other`.
    pub fn concat(&self, other: &ControlLaw) -> ControlLaw {
        let mut segments = self.segments.clone();
        segments.extend_from_slice(&other.segments);
        ControlLaw { segments }
    }

    /// Rotates every control about z so a law reaching X_f(φ) reaches X_f(φ + φ′).
    pub fn rotated(&self, phi_prime: f64) -> ControlLaw {
        let (s, c) = phi_prime.sin_cos();
        let segments = self
            .segments
            .iter()
            .map(|seg| {
                let [ux, uy, uz] = seg.u;
                Segment { duration: seg.duration, u: [ux * c + uy * s, -ux * s + uy * c, uz] }
            })
            .collect();
        ControlLaw { segments }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UnitaryPair {
    pub x1: Su2Matrix,
    pub x2: Su2Matrix,
}

impl UnitaryPair {
    pub fn identity() -> Self {
        UnitaryPair { x1: Su2Matrix::identity(), x2: Su2Matrix::identity() }
    }

    /// max of the two Frobenius distances.
    pub fn distance(&self, other: &UnitaryPair) -> f64 {
        self.x1.distance(&other.x1).max(self.x2.distance(&other.x2))
    }
}

pub(crate) fn generators(u: [f64; 3], p: &SystemParams) -> ([f64; 3], [f64; 3]) {
    let w0 = p.omega0();
    ([u[0], u[1], u[2] + w0], [u[0], u[1], u[2] - w0])
}

/// Exact composition of segment exponentials.
pub fn propagate_closed(law: &ControlLaw, p: &SystemParams) -> Result<UnitaryPair> {
    law.validate(p)?;
    let mut pair = UnitaryPair::identity();
    for s in law.segments() {
        let (h1, h2) = generators(s.u, p);
        pair.x1 = exp_spin(h1, s.duration) * pair.x1;
        pair.x2 = exp_spin(h2, s.duration) * pair.x2;
    }
    Ok(pair)
}

/// RK4 on Ẋ = −i(±ω₀S_z + u·S)X without re-unitarization.
pub fn integrate_pair_raw(law: &ControlLaw, p: &SystemParams, step: f64) -> Result<(Mat2, Mat2)> {
    law.validate(p)?;
    if !(step.is_finite() && step > 0.0) {
        return Err(invalid(format!("step must be positive and finite, got {step}")));
    }
    let mut x1 = Mat2::IDENTITY;
    let mut x2 = Mat2::IDENTITY;
    for s in law.segments() {
        let (h1, h2) = generators(s.u, p);
        // −i(h·S) = −(i/2) h·σ
        let a1 = pauli_dot(h1).scale(C64::new(0.0, -0.5));
        let a2 = pauli_dot(h2).scale(C64::new(0.0, -0.5));
        let n = (s.duration / step).ceil().max(1.0) as usize;
        let h = s.duration / n as f64;
        for _ in 0..n {
            x1 = rk4_linear(&a1, &x1, h);
            x2 = rk4_linear(&a2, &x2, h);
        }
    }
    Ok((x1, x2))
}

fn rk4_linear(a: &Mat2, x: &Mat2, h: f64) -> Mat2 {
    let k1 = *a * *x;
    let k2 = *a * x.axpy(0.5 * h, &k1);
    let k3 = *a * x.axpy(0.5 * h, &k2);
    let k4 = *a * x.axpy(h, &k3);
    x.axpy(h / 6.0, &k1).axpy(h / 3.0, &k2).axpy(h / 3.0, &k3).axpy(h / 6.0, &k4)
}

/// Fixed-step RK4 oracle, projected back onto SU(2) once at the end.
pub fn propagate_numeric(law: &ControlLaw, p: &SystemParams, step: f64) -> Result<UnitaryPair> {
    let (x1, x2) = integrate_pair_raw(law, p, step)?;
    Ok(UnitaryPair { x1: x1.polar_su2()?, x2: x2.polar_su2()? })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Verdict {
    pub reached: bool,
    pub sign1: Option<Sign>,
    pub sign2: Option<Sign>,
    /// Larger of the two distances to the nearest of ±X_f.
    pub err: f64,
}

pub fn verify_target(pair: &UnitaryPair, spec: TargetSpec, tol: f64) -> Verdict {
    let xf = spec.matrix();
    let m1 = matches_up_to_sign(&pair.x1, &xf, tol);
    let m2 = matches_up_to_sign(&pair.x2, &xf, tol);
    Verdict {
        reached: m1.sign.is_some() && m2.sign.is_some(),
        sign1: m1.sign,
        sign2: m2.sign,
        err: m1.distance.max(m2.distance),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::su2::{spin, Axis};
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn params(w0: f64, g: f64) -> SystemParams {
        SystemParams::new(w0, g).unwrap()
    }

    fn seg(duration: f64, u: [f64; 3]) -> Segment {
        Segment { duration, u }
    }

    fn random_law(p: &SystemParams, raw: &[(f64, f64, f64, f64)]) -> ControlLaw {
        let w = p.omega();
        let segs = raw
            .iter()
            .map(|&(d, th, ph, r)| {
                let n = p.gamma() * r;
                seg(d * 2.0 * PI / w, [n * th.sin() * ph.cos(), n * th.sin() * ph.sin(), n * th.cos()])
            })
            .collect();
        ControlLaw::new(segs).unwrap()
    }

    #[test]
    fn empty_law_is_identity() {
        let p = params(1.0, 1.0);
        assert_eq!(propagate_closed(&ControlLaw::empty(), &p).unwrap(), UnitaryPair::identity());
        let n = propagate_numeric(&ControlLaw::empty(), &p, 1e-3).unwrap();
        assert!(n.distance(&UnitaryPair::identity()) < 1e-15);
    }

    #[test]
    fn zero_duration_rejected() {
        assert!(ControlLaw::new(vec![seg(0.0, [0.0; 3])]).is_err());
        assert!(ControlLaw::new(vec![seg(-1.0, [0.0; 3])]).is_err());
    }

    #[test]
    fn over_bound_control_rejected() {
        let p = params(1.0, 1.0);
        let law = ControlLaw::new(vec![seg(1.0, [1.0, 0.5, 0.0])]).unwrap();
        assert!(propagate_closed(&law, &p).is_err());
    }

    #[test]
    fn single_segment_matches_rotated_spin() {
        let (w0, g, t) = (0.7, 1.3, 0.9);
        let p = params(w0, g);
        let law = ControlLaw::new(vec![seg(t, [g, 0.0, 0.0])]).unwrap();
        let pair = propagate_closed(&law, &p).unwrap();
        // Y₊(t) = exp(−iωt S₊), S₊ = (γS_x + ω₀S_z)/ω, by power series
        let w = p.omega();
        let s_plus = (spin(Axis::X).scale_re(g) + spin(Axis::Z).scale_re(w0)).scale_re(1.0 / w);
        let a = s_plus.scale(C64::new(0.0, -w * t));
        let mut term = Mat2::IDENTITY;
        let mut sum = Mat2::IDENTITY;
        for k in 1..40 {
            term = (term * a).scale_re(1.0 / k as f64);
            sum = sum + term;
        }
        assert!((*pair.x1.matrix() - sum).frobenius_norm() < 1e-14);
    }

    #[test]
    fn verify_examples() {
        let spec = TargetSpec::new(0.0).unwrap();
        let y = spec.matrix();
        let v = verify_target(&UnitaryPair { x1: y, x2: -y }, spec, 1e-9);
        assert!(v.reached);
        assert_eq!((v.sign1, v.sign2), (Some(Sign::Plus), Some(Sign::Minus)));
        assert!(!verify_target(&UnitaryPair::identity(), spec, 1e-9).reached);
    }

    #[test]
    fn law_json_shape() {
        let law = ControlLaw::new(vec![seg(0.5, [1.0, 0.0, 0.0])]).unwrap();
        let s = serde_json::to_string(&law).unwrap();
        assert_eq!(s, r#"[{"duration":0.5,"u":[1.0,0.0,0.0]}]"#);
        let back: ControlLaw = serde_json::from_str(&s).unwrap();
        assert_eq!(back, law);
    }

    #[test]
    fn numeric_drift_is_small() {
        let p = params(1.0, 1.0);
        let law = ControlLaw::new(vec![seg(5.0, [1.0, 0.0, 0.0]), seg(5.0, [0.0, -0.6, 0.8])]).unwrap();
        let (x1, x2) = integrate_pair_raw(&law, &p, 1e-4 / p.omega()).unwrap();
        assert!(x1.unitarity_defect() < 1e-7);
        assert!(x2.unitarity_defect() < 1e-7);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn closed_form_stays_special_unitary(
            g in 0.2..4.0f64,
            raw in prop::collection::vec((0.01..1.0f64, 0.0..PI, 0.0..2.0 * PI, 0.0..=1.0f64), 0..8),
        ) {
            let p = params(1.0, g);
            let pair = propagate_closed(&random_law(&p, &raw), &p).unwrap();
            prop_assert!(pair.x1.unitarity_defect() < 1e-12 * (raw.len().max(1) as f64));
            prop_assert!(pair.x2.unitarity_defect() < 1e-12 * (raw.len().max(1) as f64));
        }

        #[test]
        fn concatenation_composes(
            g in 0.2..4.0f64,
            a in prop::collection::vec((0.01..1.0f64, 0.0..PI, 0.0..2.0 * PI, 0.0..=1.0f64), 0..5),
            b in prop::collection::vec((0.01..1.0f64, 0.0..PI, 0.0..2.0 * PI, 0.0..=1.0f64), 0..5),
        ) {
            let p = params(1.0, g);
            let (la, lb) = (random_law(&p, &a), random_law(&p, &b));
            let pa = propagate_closed(&la, &p).unwrap();
            let pb = propagate_closed(&lb, &p).unwrap();
            let pab = propagate_closed(&la.concat(&lb), &p).unwrap();
            let composed = UnitaryPair { x1: pb.x1 * pa.x1, x2: pb.x2 * pa.x2 };
            prop_assert!(pab.distance(&composed) < 1e-12);
        }

        #[test]
        fn numeric_oracle_agrees(
            g in 0.2..4.0f64,
            raw in prop::collection::vec((0.01..1.0f64, 0.0..PI, 0.0..2.0 * PI, 0.0..=1.0f64), 1..6),
        ) {
            let p = params(1.0, g);
            let law = random_law(&p, &raw);
            let c = propagate_closed(&law, &p).unwrap();
            let n = propagate_numeric(&law, &p, 1e-3 / p.omega()).unwrap();
            prop_assert!(c.distance(&n) < 1e-6);
        }

        #[test]
        fn rotation_conjugates_by_z(
            g in 0.2..4.0f64,
            phi in 0.0..2.0 * PI,
            raw in prop::collection::vec((0.01..1.0f64, 0.0..PI, 0.0..2.0 * PI, 0.0..=1.0f64), 0..6),
        ) {
            let p = params(1.0, g);
            let law = random_law(&p, &raw);
            let base = propagate_closed(&law, &p).unwrap();
            let rot = propagate_closed(&law.rotated(phi), &p).unwrap();
            let f = crate::su2::frame_rotation(phi);
            let expected = UnitaryPair { x1: f * base.x1 * f.adjoint(), x2: f * base.x2 * f.adjoint() };
            prop_assert!(rot.distance(&expected) < 1e-12);
            prop_assert!((law.rotated(phi).total_duration() - law.total_duration()).abs() < 1e-15);
        }
    }
}
