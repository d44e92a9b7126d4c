// A small random ensemble: how often are the local conditions and flat
// truncation observed on generic instances?

use polyopt::ensemble::{run_ensemble, EnsembleConfig};
use polyopt::Result;

pub fn run_example() -> Result<()> {
    let cfg = EnsembleConfig {
        count: 25,
        seed: 7,
        ..Default::default()
    };
    let summary = run_ensemble(&cfg);
    print!("{}", summary.table());
    for r in summary.failures() {
        println!("instance {} did not pass everything: bounds {:?}", r.index, r.bounds);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example()
}
