//! Closed-form extremal families: bang-bang schedules reaching ±iσ_y (odd switch counts),
//! ±iσ_x (even switch counts), and the singular three-arc schedule.
//!
//! Every family is produced from its closed-form switching data and then kept only if it
//! satisfies its constraint system, has an admissible b_x(0), and the switching times are
//! reproduced by [`switching_times`] for that b_x(0).

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::costate::{switching_times, SystemParams};
use crate::error::{invalid, Result};
use crate::propagate::{ControlLaw, Segment};
use crate::su2::{Sign, TargetSpec};

/// Tolerance on constraint-system residuals.
pub const RESIDUAL_TOL: f64 = 1e-9;
/// Relative tolerance for the γ = ω₀ family.
pub const EQUALITY_RTOL: f64 = 1e-9;
/// Agreement (in units of ωt) between closed-form and recomputed switching times.
const SWITCH_MATCH_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Branch {
    Only,
    Upper,
    Lower,
    /// n = 2, σ_y: sign of the quartic solution (Upper/Lower) and of its inner root.
    UpperPlus,
    UpperMinus,
    LowerPlus,
    LowerMinus,
    /// n = 1, σ_x: positive roots of the upper-sign cubic in increasing order.
    UpperRoot(u8),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FamilyId {
    SigmaY { n: u8, branch: Branch },
    SigmaX { n: u8, branch: Branch },
    Singular { b0_sign: Sign },
}

impl FamilyId {
    pub const SY0: FamilyId = FamilyId::SigmaY { n: 0, branch: Branch::Only };
    pub const SX0: FamilyId = FamilyId::SigmaX { n: 0, branch: Branch::Only };
    pub const SINGULAR: FamilyId = FamilyId::Singular { b0_sign: Sign::Minus };
    pub const SINGULAR_DOMINATED: FamilyId = FamilyId::Singular { b0_sign: Sign::Plus };

    /// Every family, in table order.
    pub const ALL: [FamilyId; 13] = [
        FamilyId::SY0,
        FamilyId::SigmaY { n: 1, branch: Branch::Upper },
        FamilyId::SigmaY { n: 1, branch: Branch::Lower },
        FamilyId::SigmaY { n: 2, branch: Branch::UpperPlus },
        FamilyId::SigmaY { n: 2, branch: Branch::UpperMinus },
        FamilyId::SigmaY { n: 2, branch: Branch::LowerPlus },
        FamilyId::SigmaY { n: 2, branch: Branch::LowerMinus },
        FamilyId::SX0,
        FamilyId::SigmaX { n: 1, branch: Branch::Lower },
        FamilyId::SigmaX { n: 1, branch: Branch::UpperRoot(1) },
        FamilyId::SigmaX { n: 1, branch: Branch::UpperRoot(2) },
        FamilyId::SINGULAR,
        FamilyId::SINGULAR_DOMINATED,
    ];

    pub fn label(&self) -> &'static str {
        use Branch::*;
        match *self {
            FamilyId::SigmaY { n: 0, .. } => "sy0",
            FamilyId::SigmaY { n: 1, branch: Upper } => "sy1u",
            FamilyId::SigmaY { n: 1, .. } => "sy1l",
            FamilyId::SigmaY { branch: UpperPlus, .. } => "sy2_up",
            FamilyId::SigmaY { branch: UpperMinus, .. } => "sy2_um",
            FamilyId::SigmaY { branch: LowerPlus, .. } => "sy2_lp",
            FamilyId::SigmaY { .. } => "sy2_lm",
            FamilyId::SigmaX { n: 0, .. } => "sx0",
            FamilyId::SigmaX { branch: UpperRoot(1), .. } => "sx1_u1",
            FamilyId::SigmaX { branch: UpperRoot(_), .. } => "sx1_u2",
            FamilyId::SigmaX { .. } => "sx1_l",
            FamilyId::Singular { b0_sign: Sign::Minus } => "sing",
            FamilyId::Singular { b0_sign: Sign::Plus } => "sing_b0pos",
        }
    }

    pub fn is_singular(&self) -> bool {
        matches!(self, FamilyId::Singular { .. })
    }

    pub fn is_dominated(&self) -> bool {
        *self == FamilyId::SINGULAR_DOMINATED
    }

    /// Number of switches s of a bang-bang family (None for singular ones).
    pub fn switches(&self) -> Option<usize> {
        match *self {
            FamilyId::SigmaY { n, .. } => Some(2 * n as usize + 1),
            FamilyId::SigmaX { n, .. } => Some(2 * n as usize + 2),
            FamilyId::Singular { .. } => None,
        }
    }

    /// Phase of the target reached by the φ = 0 law along +x̂.
    pub fn frame_phase(&self) -> f64 {
        match self {
            FamilyId::SigmaX { .. } => 0.5 * PI,
            _ => 0.0,
        }
    }

    pub fn sign_pattern(&self) -> SignPattern {
        match self {
            FamilyId::SigmaX { .. } => SignPattern::X1EqX2,
            _ => SignPattern::X1EqNegX2,
        }
    }
}

impl fmt::Display for FamilyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for FamilyId {
    type Err = crate::error::Error;
    fn from_str(s: &str) -> Result<Self> {
        FamilyId::ALL
            .into_iter()
            .find(|f| f.label() == s)
            .ok_or_else(|| invalid(format!("unknown family label {s:?}")))
    }
}

impl Serialize for FamilyId {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.label())
    }
}

impl<'de> Deserialize<'de> for FamilyId {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SignPattern {
    X1EqX2,
    X1EqNegX2,
}

impl SignPattern {
    pub fn x2_relative(self) -> Sign {
        match self {
            SignPattern::X1EqX2 => Sign::Plus,
            SignPattern::X1EqNegX2 => Sign::Minus,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ExtremalCandidate {
    pub family: FamilyId,
    pub omega0: f64,
    pub gamma: f64,
    pub bx0: f64,
    /// Sign of B₀, i.e. of ḃ_x(0).
    pub b0_sign: Sign,
    pub t_tilde: f64,
    pub t_bar: f64,
    /// Duration of the singular arc; 0 for bang-bang families.
    pub t_prime: f64,
    /// Number of control discontinuities.
    pub switches: usize,
    pub t_f: f64,
    pub sign_pattern: SignPattern,
    /// X₁(t_f) = target_sign·X_f for the law whose first arc is +γ along the family axis.
    pub target_sign: Sign,
    /// Constraint-system residual at admission (0 for families without one).
    pub residual: f64,
}

impl ExtremalCandidate {
    pub fn is_dominated(&self) -> bool {
        self.family.is_dominated()
    }

    fn belongs_to(&self, p: &SystemParams) -> bool {
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * b.abs();
        close(self.omega0, p.omega0()) && close(self.gamma, p.gamma())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AlphaBeta {
    pub alpha: f64,
    pub beta: f64,
}

/// α, β of the two-period product Y₊(t̄)Y₋†(t̄) = cos 2α·I + i sin 2α(cos β σ_y + sin β σ_z).
pub fn alpha_beta(t_bar: f64, p: &SystemParams) -> AlphaBeta {
    let (w0, g, w) = (p.omega0(), p.gamma(), p.omega());
    let (s, c) = (0.5 * w * t_bar).sin_cos();
    let sa = (w0 / w) * s;
    let ca = (1.0 - sa * sa).max(0.0).sqrt();
    let sb = -c / ca;
    let cb = (g / w) * s / ca;
    AlphaBeta { alpha: sa.atan2(ca), beta: sb.atan2(cb) }
}

/// Real roots of z³ + pz + q, ascending, with repeated roots reported once.
pub fn cardano_roots(p: f64, q: f64) -> Vec<f64> {
    let disc = -27.0 * q * q - 4.0 * p * p * p;
    let scale = 27.0 * q * q + 4.0 * (p * p * p).abs();
    let mut roots = if p == 0.0 && q == 0.0 {
        vec![0.0]
    } else if disc.abs() <= 1e-14 * scale {
        // one simple and one double root
        vec![3.0 * q / p, -1.5 * q / p]
    } else if disc > 0.0 {
        let m = 2.0 * (-p / 3.0).sqrt();
        let arg = ((3.0 * q / (2.0 * p)) * (-3.0 / p).sqrt()).clamp(-1.0, 1.0);
        let theta = arg.acos() / 3.0;
        (0..3).map(|k| m * (theta - 2.0 * PI * k as f64 / 3.0).cos()).collect()
    } else {
        let r = (q * q / 4.0 + p * p * p / 27.0).sqrt();
        vec![(-0.5 * q + r).cbrt() + (-0.5 * q - r).cbrt()]
    };
    for z in roots.iter_mut() {
        for _ in 0..3 {
            let f = *z * *z * *z + p * *z + q;
            let df = 3.0 * *z * *z + p;
            if df.abs() > 1e-12 {
                *z -= f / df;
            }
        }
    }
    roots.sort_by(f64::total_cmp);
    roots.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * (1.0 + b.abs()));
    roots
}

fn asin_clamped(x: f64) -> Option<f64> {
    if (-1.0 - 1e-12..=1.0 + 1e-12).contains(&x) {
        Some(x.clamp(-1.0, 1.0).asin())
    } else {
        None
    }
}

/// Residual of the σ_y (k = 2n) or σ_x (k = 2n+1) constraint system for sign choice `sign`.
fn system_residual_raw(k: u32, ab: AlphaBeta, wtt: f64, sign: Sign, p: &SystemParams) -> f64 {
    let (w0, g, w) = (p.omega0(), p.gamma(), p.omega());
    let sg = sign.value();
    let s2 = wtt.sin().powi(2);
    let (ka, (sb, cb)) = (k as f64 * ab.alpha, ab.beta.sin_cos());
    let mixed = 2.0 * w0 * g / (w * w) * s2;
    let axial = 1.0 - 2.0 * (g / w).powi(2) * s2;
    let transverse = (g / w) * (2.0 * wtt).sin();
    let r = if k % 2 == 0 {
        [
            ka.cos() + sg * mixed,
            ka.sin() * cb - sg * axial,
            ka.sin() * sb - sg * transverse,
        ]
    } else {
        [
            ka.cos() * sb - sg * transverse,
            ka.cos() * cb - sg * axial,
            ka.sin() - sg * mixed,
        ]
    };
    r.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Residual of the candidate's constraint system, recomputed from its switching times.
pub fn system_residual(c: &ExtremalCandidate, p: &SystemParams) -> Option<f64> {
    let k = match c.family {
        FamilyId::SigmaY { n, .. } => 2 * n as u32,
        FamilyId::SigmaX { n, .. } => 2 * n as u32 + 1,
        FamilyId::Singular { .. } => return None,
    };
    let ab = alpha_beta(c.t_bar, p);
    let wtt = 0.5 * p.omega() * c.t_tilde;
    Some(system_residual_raw(k, ab, wtt, c.target_sign, p))
}

/// Residual of the quartic (σ_y, n = 2) or cubic (σ_x, n = 1) satisfied by sin α.
pub fn polynomial_residual(c: &ExtremalCandidate, p: &SystemParams) -> Option<f64> {
    let (w0, g) = (p.omega0(), p.gamma());
    let s = alpha_beta(c.t_bar, p).alpha.sin();
    match c.family {
        FamilyId::SigmaY { n: 2, branch } => {
            let sg = if matches!(branch, Branch::UpperPlus | Branch::UpperMinus) { 1.0 } else { -1.0 };
            let s2 = s * s;
            Some((s2 * s2 - 0.75 * s2 + (g + sg * w0) / (16.0 * g)).abs())
        }
        FamilyId::SigmaX { n: 1, branch } => {
            let q = if branch == Branch::Lower { -w0 / (8.0 * g) } else { w0 / (8.0 * g) };
            Some((s * s * s - 0.5 * s + q).abs())
        }
        _ => None,
    }
}

struct Draft {
    family: FamilyId,
    sign: Sign,
    sin_tb: f64,
    sin_tt: f64,
}

fn bx0_from_alpha(alpha: f64, p: &SystemParams) -> Option<f64> {
    let (w0, g, w) = (p.omega0(), p.gamma(), p.omega());
    let v = (w0 * w0 - w * w * alpha.sin().powi(2)) / (g * g * alpha.cos().powi(2));
    (v >= 0.0).then(|| v.sqrt())
}

/// Turns closed-form switching data into admitted candidates (both t̃ branches are tried).
fn admit(d: Draft, bx0_rule: impl Fn(f64) -> Option<f64>, p: &SystemParams, out: &mut Vec<ExtremalCandidate>) {
    let w = p.omega();
    let (Some(a_tb), Some(a_tt)) = (asin_clamped(d.sin_tb), asin_clamped(d.sin_tt)) else {
        return;
    };
    if d.sin_tb < 0.0 || d.sin_tt < 0.0 {
        return;
    }
    let t_bar = 2.0 * (PI - a_tb) / w;
    let ab = alpha_beta(t_bar, p);
    let k = match d.family {
        FamilyId::SigmaY { n, .. } => 2 * n as u32,
        FamilyId::SigmaX { n, .. } => 2 * n as u32 + 1,
        FamilyId::Singular { .. } => unreachable!(),
    };
    for wtt in [a_tt, PI - a_tt] {
        let residual = system_residual_raw(k, ab, wtt, d.sign, p);
        if !(residual < RESIDUAL_TOL) {
            continue;
        }
        let t_tilde = 2.0 * wtt / w;
        if t_tilde < 1e-9 / w {
            continue;
        }
        let Some(bx0) = bx0_rule(ab.alpha) else { continue };
        if !(0.0..=1.0 + 1e-12).contains(&bx0) {
            continue;
        }
        let bx0 = bx0.min(1.0);
        let b0_sign = [Sign::Minus, Sign::Plus].into_iter().find(|&s| {
            switching_times(bx0, s, p).is_ok_and(|st| {
                (st.t_tilde - t_tilde).abs() * w < SWITCH_MATCH_TOL && (st.t_bar - t_bar).abs() * w < SWITCH_MATCH_TOL
            })
        });
        let Some(b0_sign) = b0_sign else { continue };
        let t_f = 2.0 * t_tilde + k as f64 * t_bar;
        let cand = ExtremalCandidate {
            family: d.family,
            omega0: p.omega0(),
            gamma: p.gamma(),
            bx0,
            b0_sign,
            t_tilde,
            t_bar,
            t_prime: 0.0,
            switches: k as usize + 1,
            t_f,
            sign_pattern: d.family.sign_pattern(),
            target_sign: d.sign,
            residual,
        };
        if !out.iter().any(|o| o.family == cand.family && (o.t_f - cand.t_f).abs() < 1e-9 * cand.t_f) {
            out.push(cand);
        }
    }
}

/// Bang-bang families with odd switch counts s ∈ {1, 3, 5}, reaching ±iσ_y at φ = 0.
pub fn sigma_y_candidates(p: &SystemParams) -> Vec<ExtremalCandidate> {
    let (w0, g, w) = (p.omega0(), p.gamma(), p.omega());
    let mut out = Vec::new();

    if (g - w0).abs() <= EQUALITY_RTOL * w0 {
        let t_tilde = PI / w;
        out.push(ExtremalCandidate {
            family: FamilyId::SY0,
            omega0: w0,
            gamma: g,
            bx0: 1.0,
            b0_sign: Sign::Minus,
            t_tilde,
            t_bar: 2.0 * PI / w,
            t_prime: 0.0,
            switches: 1,
            t_f: 2.0 * t_tilde,
            sign_pattern: SignPattern::X1EqNegX2,
            target_sign: Sign::Minus,
            residual: system_residual_raw(0, alpha_beta(2.0 * PI / w, p), 0.5 * PI, Sign::Minus, p),
        });
    }

    for (sign, branch) in [(Sign::Plus, Branch::Upper), (Sign::Minus, Branch::Lower)] {
        let pm = sign.value();
        let a = (g + pm * w0) / g;
        let b = (w0 - pm * g) / w0;
        let v = (w0 / g).powi(2) - (g + pm * w0) / (3.0 * g - pm * w0);
        if a < 0.0 || b < 0.0 {
            continue;
        }
        let draft = Draft {
            family: FamilyId::SigmaY { n: 1, branch },
            sign,
            sin_tb: w / (2.0 * w0) * a.sqrt(),
            sin_tt: w / (2.0 * g) * b.sqrt(),
        };
        admit(draft, |_| (v >= 0.0).then(|| v.sqrt()), p, &mut out);
    }

    for sign in [Sign::Plus, Sign::Minus] {
        // quartic sin⁴α − ¾sin²α + (γ ± ω₀)/16γ = 0
        let rad = 1.25 - sign.value() * w0 / g;
        if rad < 0.0 {
            continue;
        }
        for inner in [Sign::Plus, Sign::Minus] {
            let x = 1.5 + inner.value() * rad.sqrt();
            if x < 0.0 {
                continue;
            }
            let sa = 0.5 * x.sqrt();
            if sa > 1.0 {
                continue;
            }
            let cos4a = 1.0 - 8.0 * sa * sa * (1.0 - sa * sa);
            let arg = -sign.value() * w * w / (2.0 * w0 * g) * cos4a;
            if arg < 0.0 {
                continue;
            }
            let branch = match (sign, inner) {
                (Sign::Plus, Sign::Plus) => Branch::UpperPlus,
                (Sign::Plus, Sign::Minus) => Branch::UpperMinus,
                (Sign::Minus, Sign::Plus) => Branch::LowerPlus,
                (Sign::Minus, Sign::Minus) => Branch::LowerMinus,
            };
            let draft =
                Draft { family: FamilyId::SigmaY { n: 2, branch }, sign, sin_tb: (w / w0) * sa, sin_tt: arg.sqrt() };
            admit(draft, |al| bx0_from_alpha(al, p), p, &mut out);
        }
    }
    out
}

/// Bang-bang families with even switch counts s ∈ {2, 4}, reaching ±iσ_x along +x̂.
pub fn sigma_x_candidates(p: &SystemParams) -> Vec<ExtremalCandidate> {
    let (w0, g, w) = (p.omega0(), p.gamma(), p.omega());
    let mut out = Vec::new();

    let s0 = w / (2.0 * g);
    let bx0 = (3.0 * g * g - w0 * w0) / (4.0 * g * g - w0 * w0);
    let draft = Draft { family: FamilyId::SX0, sign: Sign::Plus, sin_tb: s0, sin_tt: s0 };
    admit(draft, |_| (bx0 >= 0.0).then(|| (w0 / g) * bx0.sqrt()), p, &mut out);

    for sign in [Sign::Minus, Sign::Plus] {
        let q = sign.value() * w0 / (8.0 * g);
        let mut rank = 0u8;
        for sa in cardano_roots(-0.5, q) {
            if !(0.0..=1.0).contains(&sa) {
                continue;
            }
            let sin3a = sa * (3.0 - 4.0 * sa * sa);
            let arg = sign.value() * w * w / (2.0 * w0 * g) * sin3a;
            if arg < 0.0 {
                continue;
            }
            let branch = match sign {
                Sign::Minus => Branch::Lower,
                Sign::Plus => {
                    rank += 1;
                    Branch::UpperRoot(rank)
                }
            };
            let before = out.len();
            let draft = Draft { family: FamilyId::SigmaX { n: 1, branch }, sign, sin_tb: (w / w0) * sa, sin_tt: arg.sqrt() };
            admit(draft, |al| bx0_from_alpha(al, p), p, &mut out);
            if out.len() == before && sign == Sign::Plus {
                rank -= 1;
            }
        }
    }
    out
}

fn singular_with(p: &SystemParams, b0_sign: Sign) -> Option<ExtremalCandidate> {
    let (w0, g, w) = (p.omega0(), p.gamma(), p.omega());
    if g < w0 {
        return None;
    }
    let r = w0 / g;
    let eta = r.asin();
    let (t_tilde, t_prime, target_sign) = match b0_sign {
        Sign::Minus => ((PI - (r * r).acos()) / w, (PI - 2.0 * eta) / w0, Sign::Minus),
        Sign::Plus => ((PI + (r * r).acos()) / w, (PI + 2.0 * eta) / w0, Sign::Plus),
    };
    Some(ExtremalCandidate {
        family: FamilyId::Singular { b0_sign },
        omega0: w0,
        gamma: g,
        bx0: r,
        b0_sign,
        t_tilde,
        t_bar: 2.0 * PI / w,
        t_prime,
        switches: 2,
        t_f: 2.0 * t_tilde + t_prime,
        sign_pattern: SignPattern::X1EqNegX2,
        target_sign,
        residual: 0.0,
    })
}

/// Three-arc schedule (bang, drift only, bang) with b_x(0) = ω₀/γ and B₀ ≤ 0; needs γ ≥ ω₀.
pub fn singular_candidate(p: &SystemParams) -> Option<ExtremalCandidate> {
    singular_with(p, Sign::Minus)
}

/// The B₀ > 0 singular branch; always slower than [`singular_candidate`].
pub fn singular_candidate_dominated(p: &SystemParams) -> Option<ExtremalCandidate> {
    singular_with(p, Sign::Plus)
}

/// All families for `p`, including the dominated singular branch.
pub fn all_candidates(p: &SystemParams) -> Vec<ExtremalCandidate> {
    let mut out = sigma_y_candidates(p);
    out.extend(sigma_x_candidates(p));
    out.extend(singular_candidate(p));
    out.extend(singular_candidate_dominated(p));
    out
}

/// Control law realizing `c` for the target phase of `spec`, oriented so X₁(t_f) = +X_f(φ).
///
/// The φ = 0 law of a family is rotated by φ minus the family's own phase; when the +γ-first
/// law lands on −X_f, all controls are negated (a half-turn, which flips both blocks).
pub fn candidate_schedule(c: &ExtremalCandidate, spec: TargetSpec, p: &SystemParams) -> Result<ControlLaw> {
    if !c.belongs_to(p) {
        return Err(invalid(format!(
            "candidate was built for omega0 = {}, gamma = {} but params are omega0 = {}, gamma = {}",
            c.omega0,
            c.gamma,
            p.omega0(),
            p.gamma()
        )));
    }
    let theta = spec.phi() - c.family.frame_phase();
    let g = p.gamma() * c.target_sign.value();
    let d = [g * theta.cos(), -g * theta.sin(), 0.0];
    let neg = d.map(|x| -x);
    let mut segs = vec![Segment { duration: c.t_tilde, u: d }];
    if c.family.is_singular() {
        if c.t_prime > 0.0 {
            segs.push(Segment { duration: c.t_prime, u: [0.0; 3] });
        }
        segs.push(Segment { duration: c.t_tilde, u: neg });
    } else {
        let mut cur = neg;
        for _ in 1..c.switches {
            segs.push(Segment { duration: c.t_bar, u: cur });
            cur = cur.map(|x| -x);
        }
        segs.push(Segment { duration: c.t_tilde, u: cur });
    }
    ControlLaw::new(segs)
}
