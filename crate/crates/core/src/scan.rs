//! Grid scan of closed-loop extremals over the initial costate (ϑ, b_x(0)).
//!
//! Each grid point fixes b(0) = (b_x(0), 0, 0) and ḃ(0) = ω₀√(1 − b_x(0)²)(cos ϑ, sin ϑ, 0),
//! so E = ω₀²/2 and L = ω₀ b_x(0) sin ϑ √(1 − b_x(0)²). The costate and both unitary blocks
//! are co-integrated under u = γ b/|b| and the target-hit functions F± are tracked.

use std::f64::consts::PI;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::costate::{constants_of_motion, CostateState, ExtremalFlow, Passenger, SingularPolicy, SystemParams};
use crate::error::{invalid, Error, Result};
use crate::extremals::all_candidates;
use crate::propagate::{generators, UnitaryPair};
use crate::su2::{pauli, pauli_dot, Axis, Mat2, C64};
use crate::worker_pool;

/// F± at or above this value counts as reaching the target.
pub const HIT_THRESHOLD: f64 = 1.0 - 1e-6;
/// Sampled maxima above this level are refined between steps.
const REFINE_LEVEL: f64 = 0.99;

#[derive(Clone, Debug, PartialEq)]
pub struct ScanConfig {
    pub p: SystemParams,
    pub horizon: f64,
    pub n_theta: usize,
    pub n_bx0: usize,
    pub step: f64,
    /// Extra b_x(0) values scanned on the ϑ = 0 and ϑ = π edges.
    pub probes: Vec<f64>,
}

impl ScanConfig {
    /// `grid` × `grid` points, step 0.01/ω, no probes.
    pub fn new(p: SystemParams, horizon: f64, grid: usize) -> Result<Self> {
        let cfg = ScanConfig { p, horizon, n_theta: grid, n_bx0: grid, step: 0.01 / p.omega(), probes: Vec::new() };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_step(mut self, step: f64) -> Result<Self> {
        self.step = step;
        self.validate()?;
        Ok(self)
    }

    /// Adds the b_x(0) of every analytic candidate as a probe.
    pub fn with_candidate_probes(mut self) -> Self {
        for c in all_candidates(&self.p) {
            if !self.probes.iter().any(|&x| (x - c.bx0).abs() < 1e-12) {
                self.probes.push(c.bx0);
            }
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(invalid(format!("horizon must be positive and finite, got {}", self.horizon)));
        }
        if self.n_theta < 2 || self.n_bx0 < 2 {
            return Err(invalid(format!("grid counts must be at least 2, got {} x {}", self.n_theta, self.n_bx0)));
        }
        let max_step = 0.01 / self.p.omega();
        if !(self.step.is_finite() && self.step > 0.0 && self.step <= max_step * (1.0 + 1e-12)) {
            return Err(invalid(format!("step must lie in (0, {max_step}], got {}", self.step)));
        }
        if let Some(x) = self.probes.iter().find(|x| !(0.0..=1.0).contains(*x)) {
            return Err(invalid(format!("probe b_x(0) = {x} outside [0, 1]")));
        }
        Ok(())
    }

    fn points(&self) -> Vec<(f64, f64)> {
        let mut pts = Vec::with_capacity(self.n_theta * self.n_bx0 + 2 * self.probes.len());
        for i in 0..self.n_theta {
            let theta = PI * i as f64 / (self.n_theta - 1) as f64;
            for j in 0..self.n_bx0 {
                pts.push((theta, j as f64 / (self.n_bx0 - 1) as f64));
            }
        }
        for &x in &self.probes {
            pts.push((0.0, x));
            pts.push((PI, x));
        }
        pts
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanRecord {
    pub theta: f64,
    pub bx0: f64,
    #[serde(rename = "L")]
    pub l: f64,
    #[serde(rename = "maxFplus")]
    pub max_f_plus: f64,
    #[serde(rename = "maxFminus")]
    pub max_f_minus: f64,
    #[serde(rename = "firstHit")]
    pub first_hit: Option<f64>,
}

impl ScanRecord {
    /// ϑ ∈ {0, π} or b_x(0) ∈ {0, 1}, where L = 0.
    pub fn on_boundary(&self) -> bool {
        let near = |a: f64, b: f64| (a - b).abs() <= 1e-12;
        near(self.theta, 0.0) || near(self.theta, PI) || near(self.bx0, 0.0) || near(self.bx0, 1.0)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScanField {
    /// Grid points, row-major in ϑ.
    pub records: Vec<ScanRecord>,
    /// Probe points, ϑ = 0 then ϑ = π for each probe value.
    pub probes: Vec<ScanRecord>,
    pub n_theta: usize,
    pub n_bx0: usize,
    /// Largest |ΔE| or |ΔL| seen on any trajectory.
    pub max_invariant_drift: f64,
}

impl ScanField {
    pub fn all(&self) -> impl Iterator<Item = &ScanRecord> {
        self.records.iter().chain(&self.probes)
    }

    /// Grid or probe record with the smallest first-hit time (grid first on ties).
    pub fn argmin(&self) -> Option<&ScanRecord> {
        self.all()
            .filter(|r| r.first_hit.is_some())
            .min_by(|a, b| a.first_hit.unwrap().total_cmp(&b.first_hit.unwrap()))
    }

    pub fn max_f(&self) -> f64 {
        self.all().map(|r| r.max_f_plus.max(r.max_f_minus)).fold(0.0, f64::max)
    }
}

/// The state does not depend on ω₀ and γ; `_p` is kept for symmetry with the other constructors.
pub fn initial_costate(theta: f64, bx0: f64, _p: &SystemParams) -> Result<CostateState> {
    if !(0.0..=PI).contains(&theta) {
        return Err(invalid(format!("theta must lie in [0, pi], got {theta}")));
    }
    if !(0.0..=1.0).contains(&bx0) {
        return Err(invalid(format!("b_x(0) must lie in [0, 1], got {bx0}")));
    }
    let r = (1.0 - bx0 * bx0).sqrt();
    let (s, c) = theta.sin_cos();
    CostateState::new([bx0, 0.0, 0.0], [s * r, -c * r, 0.0])
}

fn f_pair(x1: &Mat2, x2: &Mat2) -> (f64, f64) {
    let sx = pauli(Axis::X);
    let sy = pauli(Axis::Y);
    let f = |d: Mat2| ((d * sx).trace().norm_sqr() + (d * sy).trace().norm_sqr()) / 16.0;
    (f(*x1 - *x2), f(*x1 + *x2))
}

/// (F₊, F₋) = ¹⁄₁₆ Σ_{k=x,y} |Tr((X₁ ∓ X₂)σ_k)|². F₊ = 1 exactly when X₁ = −X₂ is
/// SWAP-equivalent, F₋ = 1 when X₁ = X₂ is.
pub fn f_plus_minus(pair: &UnitaryPair) -> (f64, f64) {
    f_pair(pair.x1.matrix(), pair.x2.matrix())
}

#[derive(Clone, Copy, Debug)]
struct Blocks(Mat2, Mat2);

impl Passenger for Blocks {
    fn rate(&self, u: [f64; 3], p: &SystemParams) -> Self {
        let (h1, h2) = generators(u, p);
        let k = C64::new(0.0, -0.5);
        Blocks(pauli_dot(h1).scale(k) * self.0, pauli_dot(h2).scale(k) * self.1)
    }

    fn axpy(&self, h: f64, rate: &Self) -> Self {
        Blocks(self.0.axpy(h, &rate.0), self.1.axpy(h, &rate.1))
    }
}

type Flow = ExtremalFlow<Blocks>;

fn g(flow: &Flow) -> f64 {
    let (a, b) = f_pair(&flow.passenger.0, &flow.passenger.1);
    a.max(b)
}

fn advanced(from: &Flow, tau: f64) -> Flow {
    let mut f = from.clone();
    if tau > 0.0 {
        f.step(tau);
    }
    f
}

/// Smallest t in (lo, hi] with g ≥ threshold, given g(lo) < threshold ≤ g(hi).
fn first_crossing(start: &Flow, lo: f64, hi: f64) -> f64 {
    let (mut a, mut b) = (lo, hi);
    for _ in 0..60 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        if g(&advanced(start, m - start.t)) >= HIT_THRESHOLD {
            b = m;
        } else {
            a = m;
        }
    }
    b
}

/// Golden-section maximum of g on [lo, hi]; returns (t, g).
fn peak(start: &Flow, lo: f64, hi: f64) -> (f64, f64, f64, f64) {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let eval = |t: f64| {
        let f = advanced(start, t - start.t);
        let (a, b) = f_pair(&f.passenger.0, &f.passenger.1);
        (a, b)
    };
    let (mut a, mut b) = (lo, hi);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (eval(c), eval(d));
    while b - a > 1e-10 * (1.0 + hi) {
        if fc.0.max(fc.1) > fd.0.max(fd.1) {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = eval(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = eval(d);
        }
    }
    let t = 0.5 * (a + b);
    let (fp, fm) = eval(t);
    (t, fp.max(fm), fp, fm)
}

fn run_point(cfg: &ScanConfig, theta: f64, bx0: f64) -> Result<(ScanRecord, f64)> {
    let p = cfg.p;
    let s0 = initial_costate(theta, bx0, &p)?;
    let c0 = constants_of_motion(&s0, &p);
    let mut flow = ExtremalFlow::new(s0, Blocks(Mat2::IDENTITY, Mat2::IDENTITY), p, SingularPolicy::HoldPrevious);
    let (mut max_p, mut max_m) = f_pair(&flow.passenger.0, &flow.passenger.1);
    let mut first_hit = None;
    let mut drift: f64 = 0.0;
    // the two previous samples, oldest first
    let mut prev: Option<Flow> = None;
    let mut last = flow.clone();
    let n = (cfg.horizon / cfg.step).ceil() as usize;
    for k in 1..=n {
        let t_next = if k == n { cfg.horizon } else { k as f64 * cfg.step };
        flow.step(t_next - flow.t);
        flow.t = t_next;
        let (fp, fm) = f_pair(&flow.passenger.0, &flow.passenger.1);
        max_p = max_p.max(fp);
        max_m = max_m.max(fm);
        let c = constants_of_motion(&flow.state, &p);
        drift = drift.max((c.energy - c0.energy).abs()).max((c.angular_momentum - c0.angular_momentum).abs());

        let g_now = fp.max(fm);
        let g_last = g(&last);
        if first_hit.is_none() && g_now >= HIT_THRESHOLD && g_last < HIT_THRESHOLD {
            first_hit = Some(first_crossing(&last, last.t, flow.t));
        }
        // sampled local maximum at `last`: refine on [prev, flow]
        if let Some(pv) = &prev {
            if g_last > REFINE_LEVEL && g_last >= g(pv) && g_last >= g_now {
                let (tp, gp, fpp, fmp) = peak(pv, pv.t, flow.t);
                max_p = max_p.max(fpp);
                max_m = max_m.max(fmp);
                if gp >= HIT_THRESHOLD && g(pv) < HIT_THRESHOLD {
                    let t_hit = first_crossing(pv, pv.t, tp);
                    if first_hit.is_none_or(|h| t_hit < h) {
                        first_hit = Some(t_hit);
                    }
                }
            }
        }
        prev = Some(std::mem::replace(&mut last, flow.clone()));
    }
    let l = c0.angular_momentum;
    Ok((ScanRecord { theta, bx0, l, max_f_plus: max_p, max_f_minus: max_m, first_hit }, drift))
}

pub fn run_scan(cfg: &ScanConfig) -> Result<ScanField> {
    cfg.validate()?;
    let pts = cfg.points();
    let out: Vec<(ScanRecord, f64)> =
        worker_pool()?.install(|| pts.par_iter().map(|&(th, x)| run_point(cfg, th, x)).collect::<Result<_>>())?;
    let max_invariant_drift = out.iter().map(|(_, d)| *d).fold(0.0, f64::max);
    let mut records: Vec<ScanRecord> = out.into_iter().map(|(r, _)| r).collect();
    let probes = records.split_off(cfg.n_theta * cfg.n_bx0);
    Ok(ScanField {
        records,
        probes,
        n_theta: cfg.n_theta,
        n_bx0: cfg.n_bx0,
        max_invariant_drift,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExportFormat {
    Csv,
    Json,
}

/// Writes the grid records; probes are not exported.
pub fn write_field<W: Write>(field: &ScanField, format: ExportFormat, w: W) -> Result<()> {
    match format {
        ExportFormat::Json => {
            let mut w = w;
            serde_json::to_writer_pretty(&mut w, &field.records)?;
            writeln!(w).map_err(|e| Error::Io { path: "<scan json>".into(), source: e })?;
        }
        ExportFormat::Csv => {
            let mut wr = csv::Writer::from_writer(w);
            for r in &field.records {
                wr.serialize(r)?;
            }
            wr.flush().map_err(|e| Error::Io { path: "<scan csv>".into(), source: e })?;
        }
    }
    Ok(())
}

pub fn export_field(field: &ScanField, path: impl AsRef<Path>, format: ExportFormat) -> Result<()> {
    let path = path.as_ref();
    let io = |e| Error::Io { path: path.to_path_buf(), source: e };
    let file = File::create(path).map_err(io)?;
    let mut w = BufWriter::new(file);
    write_field(field, format, &mut w).map_err(|e| match e {
        Error::Io { source, .. } => io(source),
        other => other,
    })?;
    w.flush().map_err(io)
}
