//! Command-line front end: `solve`, `sweep`, `scan` and `verify`.
//!
//! Exit status is 0 on success, 2 when the answer is uncertified or no analytic solution
//! exists, and 1 on usage or input errors.

use std::f64::consts::PI;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::costate::SystemParams;
use crate::error::{Error, Result};
use crate::extremals::FamilyId;
use crate::optimizer::{brute_force_check, solve, sweep, sweep_warnings, write_sweep_csv, OptimalSolution, RunnerUp};
use crate::propagate::{propagate_closed, propagate_numeric, verify_target, ControlLaw, Segment, DEFAULT_VERIFY_TOL};
use crate::scan::{run_scan, write_field, ExportFormat, ScanConfig, ScanField, ScanRecord};
use crate::su2::{Sign, TargetSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INCOMPLETE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "qswap", version, about = "Minimum-time SWAP-equivalent gates for two qubits with opposite drifts")]
pub struct Cli {
    /// Seed for randomized searches.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fastest analytic control law for one target phase.
    Solve(SolveArgs),
    /// Family transition times and the optimum over a range of control strengths.
    Sweep(SweepArgs),
    /// Closed-loop extremal scan over the initial costate.
    Scan(ScanArgs),
    /// Checks that a control law file reaches the target.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Human,
}

#[derive(Debug, Args)]
pub struct Output {
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long, value_parser = positive)]
    pub omega0: f64,
    #[arg(long, value_parser = positive)]
    pub gamma: f64,
    #[arg(long, value_parser = finite, allow_hyphen_values = true)]
    pub phi: f64,
    /// Also run a randomized search with this many samples for a law faster than the optimum.
    #[arg(long, value_name = "SAMPLES")]
    pub brute_force: Option<usize>,
    /// Duration budget of that search; defaults to t_opt − 0.05/ω₀.
    #[arg(long, value_parser = positive, requires = "brute_force")]
    pub budget: Option<f64>,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long, value_parser = positive)]
    pub omega0: f64,
    #[arg(long, value_parser = positive)]
    pub gamma_lo: f64,
    #[arg(long, value_parser = positive)]
    pub gamma_hi: f64,
    #[arg(long)]
    pub points: usize,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    #[arg(long, value_parser = positive)]
    pub omega0: f64,
    #[arg(long, value_parser = positive)]
    pub gamma: f64,
    #[arg(long, value_parser = positive)]
    pub horizon: f64,
    /// Points per axis of the (ϑ, b_x(0)) grid.
    #[arg(long, default_value_t = 61)]
    pub grid: usize,
    /// Integration step; defaults to 0.01/ω.
    #[arg(long, value_parser = positive)]
    pub step: Option<f64>,
    /// Skip the extra trajectories started at the analytic candidates' b_x(0).
    #[arg(long)]
    pub no_probes: bool,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, value_parser = positive)]
    pub omega0: f64,
    #[arg(long, value_parser = positive)]
    pub gamma: f64,
    #[arg(long, value_parser = finite, allow_hyphen_values = true)]
    pub phi: f64,
    /// JSON list of {"duration": t, "u": [ux, uy, uz]}.
    #[arg(long)]
    pub law: PathBuf,
    #[arg(long, value_parser = positive, default_value_t = DEFAULT_VERIFY_TOL)]
    pub tol: f64,
}

fn finite(s: &str) -> std::result::Result<f64, String> {
    let x: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if x.is_finite() {
        Ok(x)
    } else {
        Err(format!("{s} is not a finite number"))
    }
}

fn positive(s: &str) -> std::result::Result<f64, String> {
    let x = finite(s)?;
    if x > 0.0 {
        Ok(x)
    } else {
        Err(format!("{s} is not positive"))
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { write!(stderr, "{text}") } else { write!(stdout, "{text}") };
            return code;
        }
    };
    let result = match &cli.command {
        Command::Solve(a) => cmd_solve(a, cli.seed, stdout, stderr),
        Command::Sweep(a) => cmd_sweep(a, stdout, stderr),
        Command::Scan(a) => cmd_scan(a, stdout, stderr),
        Command::Verify(a) => cmd_verify(a, stdout, stderr),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            match e {
                Error::NoAnalyticSolution { .. } => EXIT_INCOMPLETE,
                _ => EXIT_USAGE,
            }
        }
    }
}

fn with_output(out: &Option<PathBuf>, stdout: &mut dyn Write, f: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    match out {
        None => f(stdout),
        Some(path) => {
            let io = |e| Error::Io { path: path.clone(), source: e };
            let mut w = BufWriter::new(File::create(path).map_err(io)?);
            f(&mut w)?;
            w.flush().map_err(io)
        }
    }
}

fn io_err(e: io::Error) -> Error {
    Error::Io { path: "<output>".into(), source: e }
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct SolveReport {
    omega0: f64,
    gamma: f64,
    phi: f64,
    t_opt: f64,
    family: FamilyId,
    t_tilde: f64,
    t_bar: f64,
    t_prime: f64,
    switches: usize,
    certified: bool,
    verify_err: f64,
    signs: [Option<Sign>; 2],
    law: ControlLaw,
    runners_up: Vec<RunnerUp>,
    #[serde(skip_serializing_if = "Option::is_none")]
    brute_force: Option<BruteForceReport>,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct BruteForceReport {
    budget: f64,
    samples: usize,
    seed: u64,
    found: Option<f64>,
    err: Option<f64>,
}

fn schedule_rows(law: &ControlLaw) -> Vec<(f64, f64, [f64; 3])> {
    let mut t = 0.0;
    law.segments()
        .iter()
        .map(|s| {
            // + 0.0 turns −0 into 0
            let row = (t, t + s.duration, s.u.map(|x| x + 0.0));
            t += s.duration;
            row
        })
        .collect()
}

fn cmd_solve(a: &SolveArgs, seed: u64, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32> {
    let p = SystemParams::new(a.omega0, a.gamma)?;
    let spec = TargetSpec::new(a.phi)?;
    let sol: OptimalSolution = solve(&p, spec)?;
    let verdict = verify_target(&propagate_closed(&sol.law, &p)?, spec, DEFAULT_VERIFY_TOL);
    let brute_force = match a.brute_force {
        None => None,
        Some(samples) => {
            let budget = a.budget.unwrap_or(sol.t_opt - 0.05 / a.omega0);
            let hit = brute_force_check(&p, spec, budget, samples, seed)?;
            Some(BruteForceReport {
                budget,
                samples,
                seed,
                found: hit.as_ref().map(|h| h.t),
                err: hit.as_ref().map(|h| h.err),
            })
        }
    };
    let w = &sol.winner;
    let report = SolveReport {
        omega0: a.omega0,
        gamma: a.gamma,
        phi: spec.phi(),
        t_opt: sol.t_opt,
        family: w.family,
        t_tilde: w.t_tilde,
        t_bar: w.t_bar,
        t_prime: w.t_prime,
        switches: w.switches,
        certified: sol.certified,
        verify_err: verdict.err,
        signs: [verdict.sign1, verdict.sign2],
        law: sol.law.clone(),
        runners_up: sol.runners_up.clone(),
        brute_force,
    };
    with_output(&a.output.out, stdout, |out| match a.output.format.unwrap_or(Format::Human) {
        Format::Json => {
            serde_json::to_writer_pretty(&mut *out, &report)?;
            writeln!(out).map_err(io_err)
        }
        Format::Csv => {
            let mut wr = csv::Writer::from_writer(out);
            wr.write_record(["start", "end", "u_x", "u_y", "u_z"])?;
            for (t0, t1, u) in schedule_rows(&report.law) {
                wr.write_record([t0, t1, u[0], u[1], u[2]].map(|x| x.to_string()))?;
            }
            wr.flush().map_err(io_err)
        }
        Format::Human => write_solve_human(&report, out).map_err(io_err),
    })?;
    if !sol.certified {
        writeln!(stderr, "warning: t_opt exceeds 5π/ω = {:.6}; optimality is not certified", 5.0 * PI / p.omega())
            .map_err(io_err)?;
        return Ok(EXIT_INCOMPLETE);
    }
    Ok(EXIT_OK)
}

fn sign_str(s: Option<Sign>) -> String {
    s.map_or_else(|| "none".to_string(), |s| s.to_string())
}

fn write_solve_human(r: &SolveReport, out: &mut dyn Write) -> io::Result<()> {
    writeln!(out, "omega0 = {}, gamma = {}, phi = {}", r.omega0, r.gamma, r.phi)?;
    writeln!(out, "t_opt      {:.9}", r.t_opt)?;
    writeln!(out, "family     {}", r.family)?;
    writeln!(out, "switches   {}", r.switches)?;
    writeln!(out, "t_tilde    {:.9}", r.t_tilde)?;
    writeln!(out, "t_bar      {:.9}", r.t_bar)?;
    if r.family.is_singular() {
        writeln!(out, "t_prime    {:.9}", r.t_prime)?;
    }
    writeln!(out, "certified  {}", r.certified)?;
    writeln!(out, "verify     err = {:.3e}, signs ({}, {})", r.verify_err, sign_str(r.signs[0]), sign_str(r.signs[1]))?;
    writeln!(out)?;
    writeln!(out, "{:>12} {:>12} {:>12} {:>12} {:>12}", "start", "end", "u_x", "u_y", "u_z")?;
    for (t0, t1, u) in schedule_rows(&r.law) {
        writeln!(out, "{t0:>12.6} {t1:>12.6} {:>12.6} {:>12.6} {:>12.6}", u[0], u[1], u[2])?;
    }
    if let Some(b) = &r.brute_force {
        writeln!(out)?;
        match b.found {
            Some(t) => writeln!(out, "search     found a law of duration {t:.6} within budget {:.6}", b.budget)?,
            None => writeln!(out, "search     no law within budget {:.6} ({} samples, seed {})", b.budget, b.samples, b.seed)?,
        }
    }
    Ok(())
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct SweepJsonRow {
    gamma: f64,
    times: serde_json::Map<String, serde_json::Value>,
    t_opt: Option<f64>,
    winner: Option<FamilyId>,
    certified: bool,
}

fn cmd_sweep(a: &SweepArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32> {
    let rows = sweep(a.omega0, a.gamma_lo, a.gamma_hi, a.points)?;
    for w in sweep_warnings(&rows) {
        writeln!(stderr, "warning: {w}").map_err(io_err)?;
    }
    with_output(&a.output.out, stdout, |out| match a.output.format.unwrap_or(Format::Csv) {
        Format::Csv => write_sweep_csv(&rows, out),
        Format::Json => {
            let js: Vec<SweepJsonRow> = rows
                .iter()
                .map(|r| SweepJsonRow {
                    gamma: r.gamma,
                    times: r.times.iter().map(|(f, t)| (f.label().to_string(), (*t).into())).collect(),
                    t_opt: r.t_opt,
                    winner: r.winner,
                    certified: r.certified,
                })
                .collect();
            serde_json::to_writer_pretty(&mut *out, &js)?;
            writeln!(out).map_err(io_err)
        }
        Format::Human => {
            writeln!(out, "{:>10} {:>12} {:>12} {:>10}", "gamma", "t_opt", "winner", "certified").map_err(io_err)?;
            for r in &rows {
                let t = r.t_opt.map_or("-".to_string(), |t| format!("{t:.6}"));
                let f = r.winner.map_or("-".to_string(), |f| f.to_string());
                writeln!(out, "{:>10.6} {t:>12} {f:>12} {:>10}", r.gamma, r.certified).map_err(io_err)?;
            }
            Ok(())
        }
    })?;
    Ok(EXIT_OK)
}

/// One-line description of where the scan first reaches the target.
pub fn scan_summary(field: &ScanField) -> String {
    let interior_max = field
        .records
        .iter()
        .filter(|r| !r.on_boundary())
        .map(|r| r.max_f_plus.max(r.max_f_minus))
        .fold(0.0, f64::max);
    match field.argmin() {
        None => format!("no trajectory reaches the target; max F = {:.9}", field.max_f()),
        Some(r) => {
            let kind = if field.probes.iter().any(|p| std::ptr::eq(p, r)) { "probe" } else { "grid" };
            format!(
                "argmin first hit {:.6} at theta = {:.6}, bx0 = {:.6} ({kind}); on L = 0 boundary: {}; interior max F = {:.9}",
                r.first_hit.unwrap_or(f64::NAN),
                r.theta,
                r.bx0,
                r.on_boundary(),
                interior_max
            )
        }
    }
}

fn write_scan_human(records: &[ScanRecord], out: &mut dyn Write) -> io::Result<()> {
    writeln!(out, "{:>10} {:>10} {:>12} {:>12} {:>12} {:>12}", "theta", "bx0", "L", "maxFplus", "maxFminus", "firstHit")?;
    for r in records {
        let hit = r.first_hit.map_or("-".to_string(), |t| format!("{t:.6}"));
        writeln!(
            out,
            "{:>10.6} {:>10.6} {:>12.4e} {:>12.9} {:>12.9} {hit:>12}",
            r.theta, r.bx0, r.l, r.max_f_plus, r.max_f_minus
        )?;
    }
    Ok(())
}

fn cmd_scan(a: &ScanArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32> {
    let p = SystemParams::new(a.omega0, a.gamma)?;
    let mut cfg = ScanConfig::new(p, a.horizon, a.grid)?;
    if let Some(step) = a.step {
        cfg = cfg.with_step(step)?;
    }
    if !a.no_probes {
        cfg = cfg.with_candidate_probes();
    }
    let field = run_scan(&cfg)?;
    let format = a.output.format.unwrap_or(Format::Csv);
    with_output(&a.output.out, stdout, |out| match format {
        Format::Csv => write_field(&field, ExportFormat::Csv, out),
        Format::Json => write_field(&field, ExportFormat::Json, out),
        Format::Human => write_scan_human(&field.records, out).map_err(io_err),
    })?;
    let summary = scan_summary(&field);
    // keep the data stream clean when it goes to standard output
    if a.output.out.is_none() && format != Format::Human {
        writeln!(stderr, "{summary}").map_err(io_err)?;
    } else {
        writeln!(stdout, "{summary}").map_err(io_err)?;
    }
    Ok(EXIT_OK)
}

#[derive(Deserialize)]
#[serde(untagged)]
enum LawFile {
    Bare(Vec<Segment>),
    Segments { segments: Vec<Segment> },
    Solution { law: Vec<Segment> },
}

/// Reads a law from a JSON file holding a segment list, or an object with a `segments` or
/// `law` field (such as `solve --format json` output).
pub fn read_law(path: &Path) -> Result<ControlLaw> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io { path: path.to_path_buf(), source: e })?;
    let segments = match serde_json::from_str::<LawFile>(&text) {
        Ok(LawFile::Bare(s) | LawFile::Segments { segments: s } | LawFile::Solution { law: s }) => s,
        // untagged errors carry no position; reparse as a bare list to report one
        Err(_) => serde_json::from_str::<Vec<Segment>>(&text).map_err(|e| {
            Error::InvalidArgument(format!("{}: malformed law at line {}, column {}: {e}", path.display(), e.line(), e.column()))
        })?,
    };
    ControlLaw::new(segments)
}

fn cmd_verify(a: &VerifyArgs, stdout: &mut dyn Write, _stderr: &mut dyn Write) -> Result<i32> {
    let p = SystemParams::new(a.omega0, a.gamma)?;
    let spec = TargetSpec::new(a.phi)?;
    let law = read_law(&a.law)?;
    law.validate(&p)?;
    let closed = verify_target(&propagate_closed(&law, &p)?, spec, a.tol);
    let numeric = verify_target(&propagate_numeric(&law, &p, 1e-4 / p.omega())?, spec, a.tol.max(1e-6));
    writeln!(stdout, "closed form  err = {:.3e}, signs ({}, {})", closed.err, sign_str(closed.sign1), sign_str(closed.sign2))
        .map_err(io_err)?;
    writeln!(stdout, "numeric      err = {:.3e}, signs ({}, {})", numeric.err, sign_str(numeric.sign1), sign_str(numeric.sign2))
        .map_err(io_err)?;
    writeln!(stdout, "duration     {:.9}", law.total_duration()).map_err(io_err)?;
    writeln!(stdout, "{}", if closed.reached { "target reached" } else { "target not reached" }).map_err(io_err)?;
    Ok(if closed.reached { EXIT_OK } else { EXIT_USAGE })
}
