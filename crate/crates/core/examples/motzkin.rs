// The Motzkin polynomial over the unit ball: bounds that creep up to the
// minimum 0 but never reach it, with a verified certificate at every level.

use polyopt::gallery::entry;
use polyopt::Result;

pub fn run_example() -> Result<()> {
    let e = entry("motzkin-ball").expect("bundled");
    println!("{}", e.description);
    let run = e.run()?;
    let mut prev = f64::NEG_INFINITY;
    for l in &run.levels {
        let f = l.f_k.expect("solved");
        println!(
            "k = {}: f_k = {f:.6e}  flat = {}  certificate {:?} (residual {:.1e})",
            l.k,
            l.is_flat(),
            l.certificate_status.expect("emitted"),
            l.certificate_residual.unwrap_or(f64::NAN)
        );
        assert!(f < 0.0 && f > prev);
        prev = f;
    }
    println!("stop reason: {:?}", run.stop_reason);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example()
}
