//! Minimum-time selection among the extremal families, γ sweeps, and a randomized
//! cross-check that searches for faster laws directly.

use std::f64::consts::PI;
use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::costate::SystemParams;
use crate::error::{invalid, Error, Result};
use crate::extremals::{all_candidates, candidate_schedule, ExtremalCandidate, FamilyId};
use crate::propagate::{propagate_closed, ControlLaw, Segment, UnitaryPair};
use crate::su2::{Sign, TargetSpec};
use crate::worker_pool;

/// Approximate γ/ω₀ below which the analytic families stop certifying optimality.
pub const ANALYTIC_COVERAGE: f64 = 0.325;
/// Error threshold of [`brute_force_check`].
pub const BRUTE_FORCE_TOL: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RunnerUp {
    pub family: FamilyId,
    pub t_f: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OptimalSolution {
    pub winner: ExtremalCandidate,
    pub law: ControlLaw,
    pub t_opt: f64,
    /// t_opt ≤ 5π/ω, below the lower bound of every law with six or more switches.
    pub certified: bool,
    pub runners_up: Vec<RunnerUp>,
}

/// 5π/ω.
pub fn certification_bound(p: &SystemParams) -> f64 {
    5.0 * PI / p.omega()
}

fn rank(a: &ExtremalCandidate, b: &ExtremalCandidate) -> std::cmp::Ordering {
    let tie = (a.t_f - b.t_f).abs() <= 1e-9 * a.t_f.max(b.t_f);
    if tie {
        a.family.is_singular().cmp(&b.family.is_singular()).then(a.switches.cmp(&b.switches))
    } else {
        a.t_f.total_cmp(&b.t_f)
    }
}

/// Fastest non-dominated candidate and its schedule for the target phase of `spec`.
pub fn solve(p: &SystemParams, spec: TargetSpec) -> Result<OptimalSolution> {
    let mut cands: Vec<_> = all_candidates(p).into_iter().filter(|c| !c.is_dominated()).collect();
    if cands.is_empty() {
        return Err(Error::NoAnalyticSolution { ratio: p.ratio(), coverage: ANALYTIC_COVERAGE });
    }
    cands.sort_by(rank);
    let winner = cands[0];
    let law = candidate_schedule(&winner, spec, p)?;
    Ok(OptimalSolution {
        winner,
        law,
        t_opt: winner.t_f,
        certified: winner.t_f <= certification_bound(p) * (1.0 + 1e-12),
        runners_up: cands[1..].iter().map(|c| RunnerUp { family: c.family, t_f: c.t_f }).collect(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub gamma: f64,
    /// Fastest t_f of every admitted non-dominated family.
    pub times: Vec<(FamilyId, f64)>,
    pub t_opt: Option<f64>,
    pub winner: Option<FamilyId>,
    pub certified: bool,
}

impl SweepRow {
    pub fn time(&self, family: FamilyId) -> Option<f64> {
        self.times.iter().find(|(f, _)| *f == family).map(|(_, t)| *t)
    }
}

/// Families with a sweep column, in column order.
pub fn sweep_families() -> impl Iterator<Item = FamilyId> {
    FamilyId::ALL.into_iter().filter(|f| !f.is_dominated())
}

pub fn sweep_header() -> Vec<String> {
    let mut h = vec!["gamma".to_string()];
    h.extend(sweep_families().map(|f| format!("t_{}", f.label())));
    h.extend(["t_opt", "winner", "certified"].map(String::from));
    h
}

fn sweep_row(omega0: f64, gamma: f64) -> Result<SweepRow> {
    let p = SystemParams::new(omega0, gamma)?;
    let mut times: Vec<(FamilyId, f64)> = Vec::new();
    for c in all_candidates(&p).into_iter().filter(|c| !c.is_dominated()) {
        match times.iter_mut().find(|(f, _)| *f == c.family) {
            Some(slot) => slot.1 = slot.1.min(c.t_f),
            None => times.push((c.family, c.t_f)),
        }
    }
    times.sort_by_key(|(f, _)| FamilyId::ALL.iter().position(|g| g == f));
    let (t_opt, winner, certified) = match solve(&p, TargetSpec::new(0.0)?) {
        Ok(s) => (Some(s.t_opt), Some(s.winner.family), s.certified),
        Err(Error::NoAnalyticSolution { .. }) => (None, None, false),
        Err(e) => return Err(e),
    };
    Ok(SweepRow { gamma, times, t_opt, winner, certified })
}

/// Solves on a uniform γ grid; rows without any candidate carry `t_opt = None`.
pub fn sweep(omega0: f64, gamma_lo: f64, gamma_hi: f64, points: usize) -> Result<Vec<SweepRow>> {
    if !(gamma_lo.is_finite() && gamma_hi.is_finite() && gamma_lo > 0.0 && gamma_lo < gamma_hi) {
        return Err(invalid(format!("need 0 < gamma_lo < gamma_hi, got [{gamma_lo}, {gamma_hi}]")));
    }
    if points < 2 {
        return Err(invalid(format!("need at least 2 sweep points, got {points}")));
    }
    SystemParams::new(omega0, gamma_lo)?;
    let grid: Vec<f64> =
        (0..points).map(|i| gamma_lo + (gamma_hi - gamma_lo) * i as f64 / (points - 1) as f64).collect();
    worker_pool()?.install(|| grid.par_iter().map(|&g| sweep_row(omega0, g)).collect())
}

/// Soft diagnostics: places where t_opt increases with γ.
pub fn sweep_warnings(rows: &[SweepRow]) -> Vec<String> {
    let mut out = Vec::new();
    for w in rows.windows(2) {
        if let (Some(a), Some(b)) = (w[0].t_opt, w[1].t_opt) {
            if w[0].certified && w[1].certified && b > a * (1.0 + 1e-9) {
                out.push(format!("t_opt increases from {a:.9} to {b:.9} between gamma = {} and {}", w[0].gamma, w[1].gamma));
            }
        }
    }
    out
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(sweep_header())?;
    for r in rows {
        let mut rec = vec![r.gamma.to_string()];
        rec.extend(sweep_families().map(|f| r.time(f).map(|t| t.to_string()).unwrap_or_default()));
        rec.push(r.t_opt.map(|t| t.to_string()).unwrap_or_default());
        rec.push(r.winner.map(|f| f.label().to_string()).unwrap_or_default());
        rec.push(r.certified.to_string());
        wr.write_record(rec)?;
    }
    wr.flush().map_err(|e| Error::Io { path: "<sweep csv>".into(), source: e })?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct BruteForceHit {
    pub t: f64,
    pub law: ControlLaw,
    pub err: f64,
}

const BF_MAX_SEGMENTS: usize = 6;
const BF_KEEP: usize = 12;
const BF_CHUNK: usize = 4096;

/// Search point: m segments with durations B·zᵢ²/(Σz² + z_slack²) and controls
/// γ(cos χᵢ·e + sin χᵢ·ẑ), e = (cos(φ − α), −sin(φ − α), 0) shared by all segments.
#[derive(Clone, Debug)]
struct Trial {
    z: Vec<f64>,
    chi: Vec<f64>,
    alpha: f64,
}

struct Search<'a> {
    p: &'a SystemParams,
    spec: TargetSpec,
    budget: f64,
}

impl Search<'_> {
    fn law(&self, t: &Trial) -> ControlLaw {
        let m = t.chi.len();
        let norm: f64 = t.z.iter().map(|z| z * z).sum();
        let g = self.p.gamma();
        let (sp, cp) = (self.spec.phi() - t.alpha).sin_cos();
        let segs = (0..m)
            .map(|i| {
                let (s, c) = t.chi[i].sin_cos();
                Segment { duration: self.budget * t.z[i] * t.z[i] / norm, u: [g * c * cp, -g * c * sp, g * s] }
            })
            .filter(|s| s.duration > 0.0)
            .collect();
        ControlLaw::new(segs).unwrap_or_default()
    }

    fn pair(&self, t: &Trial) -> UnitaryPair {
        propagate_closed(&self.law(t), self.p).unwrap_or_else(|_| UnitaryPair::identity())
    }

    fn err_with(&self, pair: &UnitaryPair, s1: Sign, s2: Sign) -> f64 {
        let xf = self.spec.matrix();
        let t1 = if s1 == Sign::Plus { xf } else { -xf };
        let t2 = if s2 == Sign::Plus { xf } else { -xf };
        pair.x1.distance(&t1).max(pair.x2.distance(&t2))
    }

    fn best_signs(&self, pair: &UnitaryPair) -> (Sign, Sign, f64) {
        let mut best = (Sign::Plus, Sign::Plus, f64::INFINITY);
        for s1 in [Sign::Plus, Sign::Minus] {
            for s2 in [Sign::Plus, Sign::Minus] {
                let e = self.err_with(pair, s1, s2);
                if e < best.2 {
                    best = (s1, s2, e);
                }
            }
        }
        best
    }

    fn residual(&self, t: &Trial, s1: Sign, s2: Sign) -> DVector<f64> {
        let pair = self.pair(t);
        let xf = *self.spec.matrix().matrix();
        let d1 = *pair.x1.matrix() - xf.scale_re(s1.value());
        let d2 = *pair.x2.matrix() - xf.scale_re(s2.value());
        DVector::from_iterator(16, d1.0.iter().chain(d2.0.iter()).flatten().flat_map(|z| [z.re, z.im]))
    }

    fn flatten(t: &Trial) -> Vec<f64> {
        t.z.iter().chain(t.chi.iter()).chain([&t.alpha]).copied().collect()
    }

    fn unflatten(x: &[f64], m: usize) -> Trial {
        Trial { z: x[..m + 1].to_vec(), chi: x[m + 1..2 * m + 1].to_vec(), alpha: x[2 * m + 1] }
    }

    fn random_trial(&self, rng: &mut ChaCha8Rng) -> Trial {
        let m = rng.gen_range(2..=BF_MAX_SEGMENTS);
        let mut z: Vec<f64> = (0..m).map(|_| rng.gen_range(0.05..1.0)).collect();
        z.push(rng.gen_range(0.0..0.6));
        let chi = if rng.gen_bool(0.5) {
            let start = if rng.gen_bool(0.5) { 0.0 } else { PI };
            (0..m).map(|i| start + PI * i as f64).collect()
        } else {
            (0..m).map(|_| rng.gen_range(-PI..PI)).collect()
        };
        let alpha = match rng.gen_range(0..3) {
            0 => 0.0,
            1 => PI / 2.0,
            _ => rng.gen_range(-PI..PI),
        };
        Trial { z, chi, alpha }
    }

    /// Levenberg–Marquardt on the 16 real residuals for fixed target signs.
    fn refine(&self, start: &Trial) -> (Trial, f64) {
        let m = start.chi.len();
        let (s1, s2, _) = self.best_signs(&self.pair(start));
        let mut x = Self::flatten(start);
        let mut r = self.residual(start, s1, s2);
        let mut cost = r.norm_squared();
        let mut lambda = 1e-3;
        for _ in 0..300 {
            let n = x.len();
            let mut jac = DMatrix::<f64>::zeros(16, n);
            for j in 0..n {
                let h = 1e-7 * (1.0 + x[j].abs());
                let mut xp = x.clone();
                xp[j] += h;
                let mut xm = x.clone();
                xm[j] -= h;
                let col = (self.residual(&Self::unflatten(&xp, m), s1, s2) - self.residual(&Self::unflatten(&xm, m), s1, s2))
                    / (2.0 * h);
                jac.set_column(j, &col);
            }
            let jt = jac.transpose();
            let jtj = &jt * &jac;
            let grad = &jt * &r;
            let mut improved = false;
            for _ in 0..12 {
                let mut a = jtj.clone();
                for i in 0..n {
                    a[(i, i)] += lambda * (1.0 + jtj[(i, i)]);
                }
                let Some(step) = a.lu().solve(&(-&grad)) else {
                    lambda *= 10.0;
                    continue;
                };
                let xn: Vec<f64> = x.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
                let rn = self.residual(&Self::unflatten(&xn, m), s1, s2);
                let cn = rn.norm_squared();
                if cn < cost {
                    x = xn;
                    r = rn;
                    cost = cn;
                    lambda = (lambda / 3.0).max(1e-12);
                    improved = true;
                    break;
                }
                lambda *= 10.0;
            }
            if !improved || cost < 1e-26 {
                break;
            }
        }
        let t = Self::unflatten(&x, m);
        let err = self.err_with(&self.pair(&t), s1, s2);
        (t, err)
    }
}

/// Randomized multi-start search for a law of total duration ≤ `t_budget` that reaches ±X_f
/// in both blocks within [`BRUTE_FORCE_TOL`]. Deterministic for a given seed.
///
/// `samples` random laws (2 to 6 segments, controls of norm γ in a vertical plane through
/// ẑ, usually (cos φ, −sin φ, 0) or its quarter-turn) are screened; the best of each segment count are then polished
/// by Levenberg–Marquardt. Returns the shortest law found, if any.
pub fn brute_force_check(
    p: &SystemParams,
    spec: TargetSpec,
    t_budget: f64,
    samples: usize,
    seed: u64,
) -> Result<Option<BruteForceHit>> {
    if !(t_budget.is_finite() && t_budget > 0.0) {
        return Err(invalid(format!("budget must be positive and finite, got {t_budget}")));
    }
    if samples == 0 {
        return Err(invalid("need at least one sample"));
    }
    let search = Search { p, spec, budget: t_budget };
    let chunks = samples.div_ceil(BF_CHUNK);
    let pool = worker_pool()?;
    let screened: Vec<Vec<(f64, usize, Trial)>> = pool.install(|| {
        (0..chunks)
            .into_par_iter()
            .map(|c| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(c as u64);
                let n = BF_CHUNK.min(samples - c * BF_CHUNK);
                let mut best: Vec<(f64, usize, Trial)> = Vec::new();
                for k in 0..n {
                    let t = search.random_trial(&mut rng);
                    let (_, _, e) = search.best_signs(&search.pair(&t));
                    best.push((e, c * BF_CHUNK + k, t));
                    if best.len() > 4 * BF_KEEP * BF_MAX_SEGMENTS {
                        keep_best(&mut best);
                    }
                }
                keep_best(&mut best);
                best
            })
            .collect()
    });
    let mut starts: Vec<(f64, usize, Trial)> = screened.into_iter().flatten().collect();
    keep_best(&mut starts);
    let refined: Vec<(Trial, f64)> = pool.install(|| starts.par_iter().map(|(_, _, t)| search.refine(t)).collect());
    let mut best: Option<BruteForceHit> = None;
    for (t, err) in refined {
        if err >= BRUTE_FORCE_TOL {
            continue;
        }
        let law = search.law(&t);
        let total = law.total_duration();
        if best.as_ref().is_none_or(|b| total < b.t) {
            best = Some(BruteForceHit { t: total, law, err });
        }
    }
    Ok(best)
}

/// Keeps the [`BF_KEEP`] lowest-error trials of every segment count, in a deterministic order.
fn keep_best(v: &mut Vec<(f64, usize, Trial)>) {
    v.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut counts = [0usize; BF_MAX_SEGMENTS + 1];
    v.retain(|(_, _, t)| {
        let m = t.chi.len();
        counts[m] += 1;
        counts[m] <= BF_KEEP
    });
}
