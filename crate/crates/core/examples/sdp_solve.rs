// The embedded interior-point solver on a small SDP, through the text format.

use polyopt::sdp::{read_sdp, solve, trace_csv, write_sdp, BlockEntry, ConstraintRow, SdpProblem, SolverOptions};
use polyopt::Result;

pub fn run_example() -> Result<()> {
    // min X11 + X22 s.t. X12 = 1, X PSD (optimum 2 at X = [[1,1],[1,1]]).
    let mut prob = SdpProblem::new(vec![2], 0);
    prob.c_blocks.push(BlockEntry { block: 0, i: 0, j: 0, v: 1.0 });
    prob.c_blocks.push(BlockEntry { block: 0, i: 1, j: 1, v: 1.0 });
    prob.rows.push(ConstraintRow {
        blocks: vec![BlockEntry { block: 0, i: 0, j: 1, v: 0.5 }],
        free: vec![],
        rhs: 1.0,
    });

    let text = write_sdp(&prob);
    println!("{text}");
    let again = read_sdp(&text)?;

    let sol = solve(&again, &SolverOptions::default())?;
    println!(
        "status {:?} after {} iterations, objective {:.9} (dual {:.9})",
        sol.status, sol.iterations, sol.primal_objective, sol.dual_objective
    );
    println!("X = {:.6}", sol.x[0]);
    println!("first trace rows:");
    for line in trace_csv(&sol.trace).lines().take(4) {
        println!("  {line}");
    }
    assert!((sol.primal_objective - 2.0).abs() < 1e-6);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example()
}
