//! Writes a hand-made law to JSON, reads it back and checks it against both propagators.

use qswap::cli::read_law;
use qswap::costate::SystemParams;
use qswap::propagate::{propagate_closed, propagate_numeric, verify_target, ControlLaw, Segment};
use qswap::su2::TargetSpec;

fn main() -> qswap::Result<()> {
    let p = SystemParams::new(1.0, 1.0)?;
    let t = std::f64::consts::PI / 2f64.sqrt();
    let law = ControlLaw::new(vec![
        Segment { duration: t, u: [-1.0, 0.0, 0.0] },
        Segment { duration: t, u: [1.0, 0.0, 0.0] },
    ])?;
    let path = std::env::temp_dir().join("qswap_example_law.json");
    std::fs::write(&path, serde_json::to_string_pretty(&law)?).map_err(|e| qswap::Error::Io { path: path.clone(), source: e })?;
    let back = read_law(&path)?;
    back.validate(&p)?;

    let spec = TargetSpec::new(0.0)?;
    let closed = verify_target(&propagate_closed(&back, &p)?, spec, 1e-8);
    let numeric = verify_target(&propagate_numeric(&back, &p, 1e-4)?, spec, 1e-6);
    println!("{}", std::fs::read_to_string(&path).unwrap_or_default());
    println!("closed form: reached {} err {:.1e} signs {:?} {:?}", closed.reached, closed.err, closed.sign1, closed.sign2);
    println!("numeric:     reached {} err {:.1e}", numeric.reached, numeric.err);

    let too_strong = ControlLaw::new(vec![Segment { duration: 1.0, u: [2.0, 0.0, 0.0] }])?;
    println!("over the bound: {}", too_strong.validate(&p).unwrap_err());
    Ok(())
}
