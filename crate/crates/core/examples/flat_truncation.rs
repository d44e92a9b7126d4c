// Flat truncation on explicit moment sequences, and rank-one extraction.

use polyopt::certify::{extract_minimizer_rank1, flat_truncation, MomentVector};
use polyopt::polyring::{ball_polynomial, Polynomial};
use polyopt::{PopInstance, Result};

pub fn run_example() -> Result<()> {
    let inst = PopInstance::new(Polynomial::var(2, 0), vec![], vec![ball_polynomial(2, 10.0)])?;

    let dirac = MomentVector::dirac(&[1.0, -2.0], 2);
    let r = flat_truncation(&dirac, &inst, 2);
    let ranks: Vec<usize> = r.ranks.iter().map(|x| x.rank).collect();
    println!("point mass at (1, -2): ranks {ranks:?}; {}", r.note);
    println!("extracted {:?}", extract_minimizer_rank1(&dirac, 2));

    let two = MomentVector::atomic(&[(0.5, vec![1.0, 0.0]), (0.5, vec![-1.0, 2.0])], 2);
    let r = flat_truncation(&two, &inst, 2);
    let ranks: Vec<usize> = r.ranks.iter().map(|x| x.rank).collect();
    println!("two atoms: ranks {ranks:?}; {}", r.note);
    println!("extraction: {:?}", extract_minimizer_rank1(&two, 2));
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example()
}
