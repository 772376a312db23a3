//! Transition times of every family and the optimum over γ ∈ [lo, hi], as CSV on stdout.
//! Usage: `sweep_table [lo hi points]`.

use qswap::optimizer::{sweep, sweep_warnings, write_sweep_csv};

fn main() -> qswap::Result<()> {
    let args: Vec<f64> = std::env::args().skip(1).map(|s| s.parse().expect("numeric argument")).collect();
    let (lo, hi, n) = match args[..] {
        [lo, hi, n] => (lo, hi, n as usize),
        _ => (0.2, 4.0, 96),
    };
    let rows = sweep(1.0, lo, hi, n)?;
    for w in sweep_warnings(&rows) {
        eprintln!("warning: {w}");
    }
    write_sweep_csv(&rows, std::io::stdout().lock())
}
