// Local optimality audits at closed-form points: KKT, CQC, SCC, SONC, SOSC.

use polyopt::localopt::{audit, AuditOptions};
use polyopt::polyring::parse_polynomial as poly;
use polyopt::{PopInstance, Result};

pub fn run_example() -> Result<()> {
    let opts = AuditOptions::default();

    // min x1^2 + x2^2 on x1 + x2 = 1: minimizer (1/2, 1/2), lambda = 1.
    let eq = PopInstance::new(poly("x1^2 + x2^2", 2)?, vec![poly("x1 + x2 - 1", 2)?], vec![])?;
    let r = audit(&eq, &[0.5, 0.5], &opts)?;
    println!("equality-constrained quadratic:\n{r}\n");

    // x1^4 at 0: stationary, Hessian zero, so SONC holds but SOSC fails.
    let quartic = PopInstance::unconstrained(poly("x1^4", 1)?);
    let r = audit(&quartic, &[0.0], &opts)?;
    println!("x1^4 at 0:\n{r}\n");

    // x1 over the unit disk: boundary minimizer (-1, 0) with mu = 1/2.
    let lin = PopInstance::new(poly("x1", 2)?, vec![], vec![poly("1 - x1^2 - x2^2", 2)?])?;
    let r = audit(&lin, &[-1.0, 0.0], &opts)?;
    println!("linear objective on the disk:\n{r}\n");
    assert!(r.all_hold());

    let r = audit(&lin, &[0.0, 0.0], &opts)?;
    println!("interior non-critical point: {}", r.summary());
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example()
}
