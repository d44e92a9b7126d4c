// A global optimality certificate: extraction, JSON round trip, exact
// re-verification, and what a tampered certificate looks like.

use polyopt::certify::{extract_certificate, verify_certificate, Certificate};
use polyopt::polyring::parse_polynomial as poly;
use polyopt::relaxation::build_sos_relaxation;
use polyopt::sdp::{solve, SolverOptions};
use polyopt::{PopInstance, Result};

pub fn run_example() -> Result<()> {
    // x1^2 + x2^2 - x1 x2 - x1 on the unit disk, with x1 = x2 enforced.
    let inst = PopInstance::new(
        poly("x1^2 + x2^2 - x1 * x2 - x1", 2)?,
        vec![poly("x1 - x2", 2)?],
        vec![poly("1 - x1^2 - x2^2", 2)?],
    )?;
    let rel = build_sos_relaxation(&inst, 1)?;
    let sol = solve(&rel.problem, &SolverOptions::default())?;
    let cert = extract_certificate(&rel, &sol, &inst)?;
    println!("gamma = {:.9}, phi_1 = {}", cert.gamma, cert.phi[0]);
    for (block, squares) in cert.grams.iter().zip(&cert.sos_decompositions) {
        println!("sigma_{} = sum of {} squares", block.constraint, squares.len());
    }
    println!("identity residual {:.2e}, status {:?}", cert.identity_residual, cert.status);

    let path = std::env::temp_dir().join(format!("polyopt-certificate-{}.json", std::process::id()));
    cert.write(&path)?;
    let back = Certificate::read(&path)?;
    let v = verify_certificate(&back, &back.instance()?);
    println!("re-read from {}: passed = {}, residual {:.2e}", path.display(), v.passed, v.residual);
    std::fs::remove_file(&path)?;

    let mut bad = back.clone();
    bad.grams[0].matrix[0][1] += 0.1;
    bad.grams[0].matrix[1][0] += 0.1;
    let v = verify_certificate(&bad, &inst);
    println!("tampered: passed = {}, Gram residual {:.3}", v.passed, v.gram_residual);
    assert!(!v.passed);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example()
}
