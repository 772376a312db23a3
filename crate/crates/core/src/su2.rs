//! 2x2 complex matrices, SU(2), its adjoint action on R^3 and the SWAP-equivalent targets.

use std::f64::consts::PI;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

pub type C64 = Complex64;

/// Unitarity tolerance for matrices built from closed forms.
pub const TOL_CONSTRUCTED: f64 = 1e-12;
/// Unitarity tolerance for matrices produced by propagation.
pub const TOL_PROPAGATED: f64 = 1e-9;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }

    pub fn unit(self) -> [f64; 3] {
        let mut v = [0.0; 3];
        v[self.index()] = 1.0;
        v
    }
}

/// A general complex 2x2 matrix, row major.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat2(pub [[C64; 2]; 2]);

impl Mat2 {
    pub const ZERO: Mat2 = Mat2([[ZERO, ZERO], [ZERO, ZERO]]);
    pub const IDENTITY: Mat2 = Mat2([[ONE, ZERO], [ZERO, ONE]]);

    pub fn adjoint(&self) -> Mat2 {
        let m = &self.0;
        Mat2([[m[0][0].conj(), m[1][0].conj()], [m[0][1].conj(), m[1][1].conj()]])
    }

    pub fn trace(&self) -> C64 {
        self.0[0][0] + self.0[1][1]
    }

    pub fn det(&self) -> C64 {
        self.0[0][0] * self.0[1][1] - self.0[0][1] * self.0[1][0]
    }

    pub fn scale(&self, s: C64) -> Mat2 {
        let m = &self.0;
        Mat2([[m[0][0] * s, m[0][1] * s], [m[1][0] * s, m[1][1] * s]])
    }

    pub fn scale_re(&self, s: f64) -> Mat2 {
        self.scale(C64::new(s, 0.0))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.iter().flatten().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// ‖M M† − I‖_F.
    pub fn unitarity_defect(&self) -> f64 {
        (*self * self.adjoint() - Mat2::IDENTITY).frobenius_norm()
    }

    /// `self + h * other`.
    pub fn axpy(&self, h: f64, other: &Mat2) -> Mat2 {
        *self + other.scale_re(h)
    }

    /// Unitary factor of the polar decomposition, rescaled to unit determinant.
    ///
    /// Uses √(M†M) = (M†M + √det·I) / √(tr + 2√det) for 2x2 positive matrices.
    pub fn polar_su2(&self) -> Result<Su2Matrix> {
        let a = self.adjoint() * *self;
        let sdet = a.det().re.max(0.0).sqrt();
        let denom = (a.trace().re + 2.0 * sdet).sqrt();
        if !(sdet > 0.0) || !denom.is_finite() {
            return Err(invalid("polar decomposition of a singular matrix"));
        }
        let p = (a + Mat2::IDENTITY.scale_re(sdet)).scale_re(1.0 / denom);
        let pdet = p.det();
        let p_inv = Mat2([[p.0[1][1], -p.0[0][1]], [-p.0[1][0], p.0[0][0]]]).scale(pdet.inv());
        let u = *self * p_inv;
        let phase = u.det().sqrt();
        Su2Matrix::new(u.scale(phase.inv()))
    }
}

impl Add for Mat2 {
    type Output = Mat2;
    fn add(self, r: Mat2) -> Mat2 {
        let (a, b) = (&self.0, &r.0);
        Mat2([
            [a[0][0] + b[0][0], a[0][1] + b[0][1]],
            [a[1][0] + b[1][0], a[1][1] + b[1][1]],
        ])
    }
}

impl Sub for Mat2 {
    type Output = Mat2;
    fn sub(self, r: Mat2) -> Mat2 {
        self + (-r)
    }
}

impl Neg for Mat2 {
    type Output = Mat2;
    fn neg(self) -> Mat2 {
        self.scale_re(-1.0)
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    fn mul(self, r: Mat2) -> Mat2 {
        let (a, b) = (&self.0, &r.0);
        Mat2([
            [
                a[0][0] * b[0][0] + a[0][1] * b[1][0],
                a[0][0] * b[0][1] + a[0][1] * b[1][1],
            ],
            [
                a[1][0] * b[0][0] + a[1][1] * b[1][0],
                a[1][0] * b[0][1] + a[1][1] * b[1][1],
            ],
        ])
    }
}

/// Pauli matrix σ_axis.
pub fn pauli(axis: Axis) -> Mat2 {
    match axis {
        Axis::X => Mat2([[ZERO, ONE], [ONE, ZERO]]),
        Axis::Y => Mat2([[ZERO, -I], [I, ZERO]]),
        Axis::Z => Mat2([[ONE, ZERO], [ZERO, -ONE]]),
    }
}

/// Spin-½ operator S_axis = σ_axis / 2.
pub fn spin(axis: Axis) -> Mat2 {
    pauli(axis).scale_re(0.5)
}

/// `v · σ` for a real 3-vector.
pub fn pauli_dot(v: [f64; 3]) -> Mat2 {
    pauli(Axis::X).scale_re(v[0]) + pauli(Axis::Y).scale_re(v[1]) + pauli(Axis::Z).scale_re(v[2])
}

/// An element of SU(2).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Su2Matrix(Mat2);

impl Su2Matrix {
    pub fn identity() -> Self {
        Su2Matrix(Mat2::IDENTITY)
    }

    /// Checks unitarity and unit determinant within [`TOL_PROPAGATED`].
    pub fn new(m: Mat2) -> Result<Self> {
        Self::with_tolerance(m, TOL_PROPAGATED)
    }

    pub fn with_tolerance(m: Mat2, tol: f64) -> Result<Self> {
        let defect = m.unitarity_defect();
        let det = m.det();
        if !(defect <= tol) || !((det - ONE).norm() <= tol) {
            return Err(Error::NotSpecialUnitary { defect, det_re: det.re, det_im: det.im });
        }
        Ok(Su2Matrix(m))
    }

    /// U = q0·I − i q·σ for a unit quaternion (q0, q).
    pub fn from_quaternion(q0: f64, q: [f64; 3]) -> Result<Self> {
        let m = Mat2::IDENTITY.scale_re(q0) + pauli_dot(q).scale(-I);
        Self::with_tolerance(m, TOL_CONSTRUCTED)
    }

    /// Inverse of [`Su2Matrix::from_quaternion`].
    pub fn quaternion(&self) -> (f64, [f64; 3]) {
        let q0 = 0.5 * self.0.trace().re;
        let q = Axis::ALL.map(|a| -0.5 * (self.0 * pauli(a)).trace().im);
        (q0, q)
    }

    pub fn matrix(&self) -> &Mat2 {
        &self.0
    }

    pub fn adjoint(&self) -> Su2Matrix {
        Su2Matrix(self.0.adjoint())
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }

    pub fn det(&self) -> C64 {
        self.0.det()
    }

    /// Frobenius distance ‖self − other‖_F.
    pub fn distance(&self, other: &Su2Matrix) -> f64 {
        (self.0 - other.0).frobenius_norm()
    }

    pub fn unitarity_defect(&self) -> f64 {
        self.0.unitarity_defect()
    }
}

impl Mul for Su2Matrix {
    type Output = Su2Matrix;
    fn mul(self, r: Su2Matrix) -> Su2Matrix {
        Su2Matrix(self.0 * r.0)
    }
}

impl Neg for Su2Matrix {
    type Output = Su2Matrix;
    fn neg(self) -> Su2Matrix {
        Su2Matrix(-self.0)
    }
}

/// exp(−i·angle·(axis·σ)/2); `axis` must be a unit vector.
pub fn su2_exp(axis: [f64; 3], angle: f64) -> Result<Su2Matrix> {
    let n = norm3(axis);
    if !angle.is_finite() || !n.is_finite() || (n - 1.0).abs() > TOL_PROPAGATED {
        return Err(invalid(format!("su2_exp needs a unit axis and finite angle, got |axis| = {n}")));
    }
    Ok(exp_unit(axis.map(|x| x / n), angle))
}

fn exp_unit(n: [f64; 3], angle: f64) -> Su2Matrix {
    let (s, c) = (0.5 * angle).sin_cos();
    Su2Matrix(Mat2::IDENTITY.scale_re(c) + pauli_dot(n).scale(C64::new(0.0, -s)))
}

/// exp(−i t (h·S)) for an arbitrary real generator h.
pub fn exp_spin(h: [f64; 3], t: f64) -> Su2Matrix {
    let n = norm3(h);
    if n == 0.0 {
        return Su2Matrix::identity();
    }
    exp_unit(h.map(|x| x / n), n * t)
}

/// e^{iφS_z}, the frame rotation that maps the target of phase ψ to phase ψ + φ.
pub fn frame_rotation(phi: f64) -> Su2Matrix {
    exp_spin([0.0, 0.0, 1.0], -phi)
}

/// A real 3x3 matrix, row major.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct So3Matrix(pub [[f64; 3]; 3]);

impl So3Matrix {
    pub const IDENTITY: So3Matrix = So3Matrix([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);

    pub fn transpose(&self) -> So3Matrix {
        let m = &self.0;
        So3Matrix(std::array::from_fn(|i| std::array::from_fn(|j| m[j][i])))
    }

    pub fn det(&self) -> f64 {
        let m = &self.0;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    pub fn apply(&self, v: [f64; 3]) -> [f64; 3] {
        std::array::from_fn(|i| (0..3).map(|j| self.0[i][j] * v[j]).sum())
    }

    /// max |RᵀR − I|.
    pub fn orthogonality_defect(&self) -> f64 {
        let p = self.transpose() * *self;
        let mut worst = 0.0f64;
        for i in 0..3 {
            for j in 0..3 {
                let e = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((p.0[i][j] - e).abs());
            }
        }
        worst
    }

    pub fn max_abs_diff(&self, other: &So3Matrix) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..3 {
            for j in 0..3 {
                worst = worst.max((self.0[i][j] - other.0[i][j]).abs());
            }
        }
        worst
    }
}

impl Mul for So3Matrix {
    type Output = So3Matrix;
    fn mul(self, r: So3Matrix) -> So3Matrix {
        So3Matrix(std::array::from_fn(|i| {
            std::array::from_fn(|j| (0..3).map(|k| self.0[i][k] * r.0[k][j]).sum())
        }))
    }
}

/// Rotation matrix 𝓧 with U S_l U† = Σ_k 𝓧_kl S_k.
pub fn adjoint_so3(u: &Su2Matrix) -> So3Matrix {
    let m = u.matrix();
    let ud = m.adjoint();
    So3Matrix(std::array::from_fn(|k| {
        std::array::from_fn(|l| {
            0.5 * (pauli(Axis::ALL[k]) * *m * pauli(Axis::ALL[l]) * ud).trace().re
        })
    }))
}

/// Phase φ of a SWAP-equivalent target, kept in [0, 2π).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TargetSpec {
    phi: f64,
}

impl TargetSpec {
    pub fn new(phi: f64) -> Result<Self> {
        if !phi.is_finite() {
            return Err(invalid(format!("target phase must be finite, got {phi}")));
        }
        let mut phi = phi.rem_euclid(2.0 * PI);
        if phi >= 2.0 * PI {
            phi = 0.0;
        }
        Ok(TargetSpec { phi })
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn matrix(&self) -> Su2Matrix {
        swap_equivalent(*self)
    }
}

/// X_f(φ) = i(cos φ σ_y + sin φ σ_x).
pub fn swap_equivalent(spec: TargetSpec) -> Su2Matrix {
    let (s, c) = spec.phi.sin_cos();
    Su2Matrix(pauli_dot([s, c, 0.0]).scale(I))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "i8", try_from = "i8")]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn flip(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }

    pub fn of(x: f64) -> Sign {
        if x < 0.0 {
            Sign::Minus
        } else {
            Sign::Plus
        }
    }
}

impl From<Sign> for i8 {
    fn from(s: Sign) -> i8 {
        match s {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }
}

impl TryFrom<i8> for Sign {
    type Error = String;
    fn try_from(v: i8) -> std::result::Result<Sign, String> {
        match v {
            1 => Ok(Sign::Plus),
            -1 => Ok(Sign::Minus),
            _ => Err(format!("sign must be 1 or -1, got {v}")),
        }
    }
}

impl Mul for Sign {
    type Output = Sign;
    fn mul(self, r: Sign) -> Sign {
        if self == r {
            Sign::Plus
        } else {
            Sign::Minus
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sign::Plus => "+1",
            Sign::Minus => "-1",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SignMatch {
    pub sign: Option<Sign>,
    /// min over s of ‖u − s·v‖_F.
    pub distance: f64,
}

/// Decides whether u = ±v within `tol` (Frobenius).
pub fn matches_up_to_sign(u: &Su2Matrix, v: &Su2Matrix, tol: f64) -> SignMatch {
    let plus = u.distance(v);
    let minus = u.distance(&-*v);
    let (sign, distance) = if plus <= minus { (Sign::Plus, plus) } else { (Sign::Minus, minus) };
    SignMatch { sign: (distance <= tol).then_some(sign), distance }
}

pub(crate) fn norm3(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

pub(crate) fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn cross3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}
