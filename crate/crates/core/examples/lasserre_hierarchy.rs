// The SOS and moment relaxations of one level, and the hierarchy loop.

use polyopt::hierarchy::{run_hierarchy, HierarchyOptions};
use polyopt::polyring::parse_polynomial as poly;
use polyopt::relaxation::{augment_archimedean, build_moment_relaxation, build_sos_relaxation};
use polyopt::sdp::{solve, SolverOptions};
use polyopt::{PopInstance, Result};

pub fn run_example() -> Result<()> {
    // A nonconvex quartic on the disk of radius 2.
    let f = poly("x1^4 + x2^4 - 3 * x1^2 + x1 * x2 - x2^2", 2)?;
    let inst = augment_archimedean(&PopInstance::unconstrained(f), 4.0)?;

    let sos = build_sos_relaxation(&inst, 2)?;
    let mom = build_moment_relaxation(&inst, 2)?;
    println!(
        "level 2: Gram blocks {:?}, {} rows; moment form has {} pseudo-moments",
        sos.problem.block_sizes,
        sos.problem.num_rows(),
        mom.moment_basis.len()
    );
    let s = solve(&sos.problem, &SolverOptions::default())?;
    let m = solve(&mom.problem, &SolverOptions::default())?;
    println!("f_2 from SOS    = {:.9}", sos.value(&s));
    println!("f_2 from moment = {:.9}", mom.value(&m));

    let run = run_hierarchy(&inst, &HierarchyOptions { k_max: 4, ..Default::default() })?;
    for l in &run.levels {
        println!("k = {}: f_k = {:?}, flat = {}", l.k, l.f_k, l.is_flat());
    }
    println!("stop reason {:?}, minimizer {:?}", run.stop_reason, run.minimizer);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example()
}
