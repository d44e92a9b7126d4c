mod common;

use polyopt::hierarchy::{run_hierarchy, HierarchyOptions};
use polyopt::polyring::{ball_polynomial, binomial, motzkin, parse_polynomial, Monomial};
use polyopt::relaxation::{
    augment_archimedean, build_moment_relaxation, build_sos_relaxation, min_level,
};
use polyopt::sdp::{solve, write_sdp, SolverOptions};
use polyopt::PopInstance;

fn pp(s: &str, n: usize) -> polyopt::Polynomial {
    parse_polynomial(s, n).unwrap()
}

fn sos_value(inst: &PopInstance, k: usize) -> f64 {
    let rel = build_sos_relaxation(inst, k).unwrap();
    let sol = solve(&rel.problem, &SolverOptions::default()).unwrap();
    assert!(sol.status.is_usable(), "{:?}", sol.status);
    rel.value(&sol)
}

fn moment_value(inst: &PopInstance, k: usize) -> f64 {
    let rel = build_moment_relaxation(inst, k).unwrap();
    let sol = solve(&rel.problem, &SolverOptions::default()).unwrap();
    assert!(sol.status.is_usable(), "{:?}", sol.status);
    rel.value(&sol)
}

#[test]
fn augmentation_examples() {
    let empty = PopInstance::unconstrained(pp("x1 + x2", 2));
    let a = augment_archimedean(&empty, 1.0).unwrap();
    assert_eq!(a.g, vec![pp("1 - x1^2 - x2^2", 2)]);
    assert_eq!(a.f, empty.f);
    let b = augment_archimedean(&a, 2.0).unwrap();
    assert_eq!(b.g.len(), 2);
    assert_eq!(b.g[1], ball_polynomial(2, 2.0));
    assert!(augment_archimedean(&empty, 0.0).is_err());

    let line = augment_archimedean(&PopInstance::unconstrained(pp("x1", 1)), 1.0).unwrap();
    assert!((sos_value(&line, 1) + 1.0).abs() < 1e-6);
}

#[test]
fn sos_layout_examples() {
    let sq = PopInstance::unconstrained(pp("x1^2", 1));
    let rel = build_sos_relaxation(&sq, 1).unwrap();
    assert_eq!(rel.problem.block_sizes, vec![2]);
    assert_eq!(rel.problem.rows.len(), 3);
    assert!(sos_value(&sq, 1).abs() < 1e-7);

    let m = PopInstance::new(motzkin(), vec![], vec![ball_polynomial(3, 1.0)]).unwrap();
    let rel = build_sos_relaxation(&m, 3).unwrap();
    assert_eq!(rel.problem.block_sizes, vec![20, 10]);
    assert_eq!(rel.problem.rows.len(), binomial(3 + 6, 3));

    for n in 1..=3 {
        let f = common::random_poly(&mut common::rng(n as u64), n, 4);
        let h = common::random_poly(&mut common::rng(10 + n as u64), n, 2);
        let inst = PopInstance::new(f, vec![h], vec![]).unwrap();
        let rel = build_sos_relaxation(&inst, 2).unwrap();
        assert_eq!(rel.layout.multiplier_bases[0].len(), binomial(n + 2, n));
        assert_eq!(rel.problem.num_free, 1 + binomial(n + 2, n));
        assert_eq!(rel.problem.rows.len(), binomial(n + 4, n));
    }
}

#[test]
fn rows_follow_the_graded_order() {
    let inst = common::random_archimedean(&mut common::rng(3), 2, 4, 1.0, true);
    let rel = build_sos_relaxation(&inst, 3).unwrap();
    let rows = &rel.layout.row_monomials;
    assert_eq!(rows[0], Monomial::one(2));
    assert!(rows.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn level_below_minimum_names_it() {
    let inst = PopInstance::unconstrained(pp("x1^6 + x2", 2));
    assert_eq!(min_level(&inst), 3);
    for err in [
        build_sos_relaxation(&inst, 2).unwrap_err(),
        build_moment_relaxation(&inst, 2).unwrap_err(),
    ] {
        assert!(err.to_string().contains('3'), "{err}");
    }
}

#[test]
fn moment_examples() {
    let sq = PopInstance::unconstrained(pp("x1^2", 1));
    let rel = build_moment_relaxation(&sq, 1).unwrap();
    // The normalization y_0 = 1 is always among the rows.
    assert!(rel
        .problem
        .rows
        .iter()
        .any(|r| r.blocks.is_empty() && r.free == vec![(0, 1.0)] && r.rhs == 1.0));
    assert!(moment_value(&sq, 1).abs() < 1e-7);
}

#[test]
fn builds_are_deterministic() {
    let inst = common::random_archimedean(&mut common::rng(9), 3, 4, 2.0, true);
    for k in 2..=3 {
        let a = build_sos_relaxation(&inst, k).unwrap();
        let b = build_sos_relaxation(&inst, k).unwrap();
        assert_eq!(write_sdp(&a.problem), write_sdp(&b.problem));
        let a = build_moment_relaxation(&inst, k).unwrap();
        let b = build_moment_relaxation(&inst, k).unwrap();
        assert_eq!(write_sdp(&a.problem), write_sdp(&b.problem));
    }
}

#[test]
fn sos_and_moment_values_agree() {
    for seed in 0..20u64 {
        let mut r = common::rng(500 + seed);
        let n = 1 + (seed as usize % 3);
        let deg = if seed % 2 == 0 { 2 } else { 4 };
        let inst = common::random_archimedean(&mut r, n, deg, 1.0, seed % 3 == 0);
        let k = min_level(&inst);
        let sos = sos_value(&inst, k);
        let mom = moment_value(&inst, k);
        let tol = 1e-6 * (1.0 + sos.abs().max(mom.abs()));
        assert!(sos <= mom + tol, "seed {seed}: sos {sos} > moment {mom}");
        assert!(mom - sos <= tol, "seed {seed}: gap {}", mom - sos);
    }
}

#[test]
fn bounds_are_monotone_and_below_the_minimum() {
    for seed in 0..6u64 {
        let mut r = common::rng(800 + seed);
        let n = 1 + (seed as usize % 2);
        let inst = common::random_archimedean(&mut r, n, 4, 1.0, seed % 2 == 1);
        let (f_min, _) = common::brute_force_min(&inst, 1.0, if n == 1 { 20_001 } else { 401 });
        let opts = HierarchyOptions { k_max: min_level(&inst) + 2, ..Default::default() };
        let run = run_hierarchy(&inst, &opts).unwrap();
        let b = run.bounds();
        assert!(!b.is_empty());
        for w in b.windows(2) {
            assert!(w[0].1 <= w[1].1 + 1e-7, "seed {seed}: {b:?}");
        }
        for &(_, f) in &b {
            assert!(f <= f_min + 1e-6, "seed {seed}: {f} > {f_min}");
        }
    }
}
