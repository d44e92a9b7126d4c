//! Independent oracles for the integration tests. Nothing here calls the
//! relaxation builders or the interior-point solver.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use num_rational::BigRational;
use num_traits::{One, Zero};
use polyopt::polyring::{ball_polynomial, Monomial, MonomialBasis, Polynomial};
use polyopt::sdp::{BlockEntry, ConstraintRow, SdpProblem, SdpSolution};
use polyopt::PopInstance;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

pub fn random_poly(rng: &mut ChaCha8Rng, n: usize, d: u32) -> Polynomial {
    let basis = MonomialBasis::new(n, d);
    Polynomial::from_terms(n, basis.entries().iter().map(|m| (m.clone(), normal(rng))))
}

/// Random objective of degree `d` over the ball `|x|^2 <= r`, optionally with
/// one extra quadratic inequality that holds at the origin.
pub fn random_archimedean(rng: &mut ChaCha8Rng, n: usize, d: u32, r: f64, extra: bool) -> PopInstance {
    let f = random_poly(rng, n, d);
    let mut g = vec![ball_polynomial(n, r)];
    if extra {
        let mut p = random_poly(rng, n, 2);
        let c0 = p.coeff(&Monomial::one(n)).abs() + 0.5;
        p = &p - &Polynomial::constant(n, p.coeff(&Monomial::one(n)));
        p = &p + &Polynomial::constant(n, c0);
        g.push(p);
    }
    PopInstance::new(f, vec![], g).unwrap()
}

pub fn feasible(inst: &PopInstance, x: &[f64]) -> bool {
    inst.g.iter().all(|g| g.eval(x) >= 0.0) && inst.h.iter().all(|h| h.eval(x) == 0.0)
}

/// Best value over a dense grid of the box `[-r, r]^n` (inequality-only
/// instances), refined by feasibility-preserving gradient descent from the
/// best grid points. Every returned value is attained at a feasible point, so
/// it is an upper bound on the true minimum.
pub fn brute_force_min(inst: &PopInstance, half_width: f64, per_dim: usize) -> (f64, Vec<f64>) {
    assert!(inst.h.is_empty(), "grid oracle handles inequalities only");
    let n = inst.nvars();
    let total = per_dim.pow(n as u32);
    assert!(total <= 1_000_000);
    let step = 2.0 * half_width / (per_dim - 1) as f64;
    let mut best: Vec<(f64, Vec<f64>)> = Vec::new();
    let mut x = vec![0.0; n];
    for idx in 0..total {
        let mut rest = idx;
        for xi in x.iter_mut() {
            *xi = -half_width + step * (rest % per_dim) as f64;
            rest /= per_dim;
        }
        if !feasible(inst, &x) {
            continue;
        }
        let v = inst.f.eval(&x);
        if best.len() < 16 || v < best[best.len() - 1].0 {
            best.push((v, x.clone()));
            best.sort_by(|a, b| a.0.total_cmp(&b.0));
            best.truncate(16);
        }
    }
    let mut out = best[0].clone();
    for (v0, x0) in best {
        let (v, x) = descend(inst, x0, v0, step);
        if v < out.0 {
            out = (v, x);
        }
    }
    out
}

/// Gradient descent with backtracking that only accepts feasible points.
pub fn descend(inst: &PopInstance, mut x: Vec<f64>, mut v: f64, mut t: f64) -> (f64, Vec<f64>) {
    let grad = inst.f.gradient();
    for _ in 0..5000 {
        let gr: Vec<f64> = grad.iter().map(|p| p.eval(&x)).collect();
        let gn = gr.iter().map(|a| a * a).sum::<f64>().sqrt();
        if gn == 0.0 {
            break;
        }
        let mut moved = false;
        while t > 1e-14 {
            let y: Vec<f64> = x.iter().zip(&gr).map(|(a, g)| a - t * g / gn).collect();
            if feasible(inst, &y) {
                let w = inst.f.eval(&y);
                if w < v {
                    x = y;
                    v = w;
                    moved = true;
                    t *= 1.5;
                    break;
                }
            }
            t *= 0.5;
        }
        if !moved {
            break;
        }
    }
    (v, x)
}

/// `count` points sampled uniformly from the box and kept when feasible.
pub fn sample_feasible(inst: &PopInstance, half_width: f64, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut r = rng(seed);
    let n = inst.nvars();
    let mut out = Vec::with_capacity(count);
    let mut tries = 0usize;
    while out.len() < count && tries < 1000 * count {
        tries += 1;
        let x: Vec<f64> = (0..n).map(|_| r.random_range(-half_width..=half_width)).collect();
        if feasible(inst, &x) {
            out.push(x);
        }
    }
    out
}

/// `count` points of `K` for instances whose equalities are affine: box
/// samples are projected onto `{h = 0}` by least squares and kept when every
/// inequality holds.
pub fn sample_on_k(inst: &PopInstance, half_width: f64, count: usize, seed: u64) -> Vec<Vec<f64>> {
    if inst.h.is_empty() {
        return sample_feasible(inst, half_width, count, seed);
    }
    let n = inst.nvars();
    assert!(inst.h.iter().all(|h| h.degree_or_zero() <= 1), "affine equalities only");
    let a = DMatrix::from_fn(inst.h.len(), n, |i, j| inst.h[i].coeff(&Monomial::var(n, j)));
    let b = DVector::from_fn(inst.h.len(), |i, _| -inst.h[i].coeff(&Monomial::one(n)));
    let aat = (&a * a.transpose()).cholesky().expect("independent equalities");
    let mut r = rng(seed);
    let mut out = Vec::with_capacity(count);
    let mut tries = 0usize;
    while out.len() < count && tries < 1000 * count {
        tries += 1;
        let x = DVector::from_fn(n, |_, _| r.random_range(-half_width..=half_width));
        let x = &x - a.transpose() * aat.solve(&(&a * &x - &b));
        let x: Vec<f64> = x.iter().copied().collect();
        if inst.g.iter().all(|g| g.eval(&x) >= 0.0) {
            out.push(x);
        }
    }
    out
}

/// Exact evaluation of a polynomial with rational coefficients at a rational
/// point, for polynomials given as (coefficient, exponents) pairs.
pub fn eval_rational(terms: &[(i64, Vec<u32>)], x: &[BigRational]) -> BigRational {
    let mut acc = BigRational::zero();
    for (c, e) in terms {
        let mut t = BigRational::from_integer((*c).into());
        for (xi, &k) in x.iter().zip(e) {
            for _ in 0..k {
                t *= xi;
            }
        }
        acc += t;
    }
    acc
}

pub fn motzkin_terms() -> Vec<(i64, Vec<u32>)> {
    vec![(1, vec![4, 2, 0]), (1, vec![2, 4, 0]), (-3, vec![2, 2, 2]), (1, vec![0, 0, 6])]
}

/// Motzkin at `(1/sqrt 3, 1/sqrt 3, 1/sqrt 3)`. All exponents are even, so the
/// value is a polynomial in `t = x^2 = 1/3` and can be computed exactly.
pub fn motzkin_at_inverse_sqrt3() -> BigRational {
    let t = BigRational::new(1.into(), 3.into());
    let halved: Vec<(i64, Vec<u32>)> = motzkin_terms()
        .into_iter()
        .map(|(c, e)| (c, e.iter().map(|k| k / 2).collect()))
        .collect();
    eval_rational(&halved, &[t.clone(), t.clone(), t])
}

pub fn is_one(r: &BigRational) -> bool {
    r.is_one()
}

// ---------------------------------------------------------------------------
// SDP oracles

/// Dense description of a random SDP with a planted strictly complementary
/// optimal pair.
pub struct PlantedSdp {
    pub problem: SdpProblem,
    pub optimum: f64,
    pub a: Vec<Vec<DMatrix<f64>>>,
    pub b_free: DMatrix<f64>,
    pub c: Vec<DMatrix<f64>>,
    pub c_free: DVector<f64>,
    pub b: DVector<f64>,
}

fn random_orthogonal(r: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let m = DMatrix::from_fn(n, n, |_, _| normal(r));
    m.qr().q()
}

fn to_entries(block: usize, m: &DMatrix<f64>, out: &mut Vec<BlockEntry>) {
    for i in 0..m.nrows() {
        for j in i..m.ncols() {
            if m[(i, j)] != 0.0 {
                out.push(BlockEntry { block, i, j, v: m[(i, j)] });
            }
        }
    }
}

/// Blocks of the given sizes, `m` dense random constraint matrices, `nfree`
/// free variables. `X* = Q diag(l) Q'`, `S* = Q diag(s) Q'` with
/// complementary supports, so both are optimal and strictly complementary.
pub fn planted_sdp(seed: u64, sizes: &[usize], m: usize, nfree: usize) -> PlantedSdp {
    let mut r = rng(seed);
    let mut xs = Vec::new();
    let mut ss = Vec::new();
    // Ranks are kept small enough that `sum r(r+1)/2 + nfree <= m` where
    // possible, which makes the optimal X (and z) generically unique.
    let mut budget = m.saturating_sub(nfree);
    for &n in sizes {
        let q = random_orthogonal(&mut r, n);
        let cap = (1..=n).rev().find(|r| r * (r + 1) / 2 <= budget).unwrap_or(1);
        let rank = r.random_range(1..=cap);
        budget = budget.saturating_sub(rank * (rank + 1) / 2);
        let l = DVector::from_fn(n, |i, _| if i < rank { 0.5 + r.random::<f64>() } else { 0.0 });
        let s = DVector::from_fn(n, |i, _| if i < rank { 0.0 } else { 0.5 + r.random::<f64>() });
        xs.push(&q * DMatrix::from_diagonal(&l) * q.transpose());
        ss.push(&q * DMatrix::from_diagonal(&s) * q.transpose());
    }
    let a: Vec<Vec<DMatrix<f64>>> = (0..m)
        .map(|_| {
            sizes
                .iter()
                .map(|&n| {
                    let g = DMatrix::from_fn(n, n, |_, _| normal(&mut r));
                    (&g + g.transpose()) * 0.5
                })
                .collect()
        })
        .collect();
    let b_free = DMatrix::from_fn(m, nfree, |_, _| normal(&mut r));
    let y = DVector::from_fn(m, |_, _| normal(&mut r));
    let z = DVector::from_fn(nfree, |_, _| normal(&mut r));
    let b = DVector::from_fn(m, |i, _| {
        a[i].iter().zip(&xs).map(|(ai, x)| ai.dot(x)).sum::<f64>() + (b_free.row(i) * &z)[(0, 0)]
    });
    let c: Vec<DMatrix<f64>> = (0..sizes.len())
        .map(|bk| {
            let mut cb = ss[bk].clone();
            for i in 0..m {
                cb += &a[i][bk] * y[i];
            }
            cb
        })
        .collect();
    let c_free = b_free.transpose() * &y;
    let optimum = c.iter().zip(&xs).map(|(c, x)| c.dot(x)).sum::<f64>() + c_free.dot(&z);

    let mut problem = SdpProblem::new(sizes.to_vec(), nfree);
    for (bk, cb) in c.iter().enumerate() {
        to_entries(bk, cb, &mut problem.c_blocks);
    }
    problem.c_free = c_free.iter().copied().collect();
    for i in 0..m {
        let mut blocks = Vec::new();
        for (bk, ab) in a[i].iter().enumerate() {
            to_entries(bk, ab, &mut blocks);
        }
        problem.rows.push(ConstraintRow {
            blocks,
            free: (0..nfree).map(|l| (l, b_free[(i, l)])).collect(),
            rhs: b[i],
        });
    }
    PlantedSdp { problem, optimum, a, b_free, c, c_free, b }
}

fn svec(m: &DMatrix<f64>, out: &mut Vec<f64>) {
    // Orthonormal packing: diagonal as is, off-diagonal times sqrt(2).
    let s2 = 2f64.sqrt();
    for j in 0..m.ncols() {
        for i in 0..=j {
            out.push(if i == j { m[(i, i)] } else { s2 * m[(i, j)] });
        }
    }
}

fn smat(v: &[f64], n: usize) -> DMatrix<f64> {
    let s2 = 2f64.sqrt();
    let mut m = DMatrix::zeros(n, n);
    let mut k = 0;
    for j in 0..n {
        for i in 0..=j {
            let val = if i == j { v[k] } else { v[k] / s2 };
            m[(i, j)] = val;
            m[(j, i)] = val;
            k += 1;
        }
    }
    m
}

fn psd_projection(m: &DMatrix<f64>) -> DMatrix<f64> {
    let e = m.clone().symmetric_eigen();
    let l = e.eigenvalues.map(|v| v.max(0.0));
    &e.eigenvectors * DMatrix::from_diagonal(&l) * e.eigenvectors.transpose()
}

/// Optimal value by alternating projections onto the optimality conditions:
/// the affine set `{A(X) + Bz = b, C - A*(y) = S, B'y = c, <C,X> + c'z = b'y}`
/// and the cone `{X, S PSD}` (with `y`, `z` free). The affine projection is a
/// dense least-norm correction. Returns `(value, affine-to-cone distance)`.
pub fn alternating_projections(p: &PlantedSdp, max_iter: usize, tol: f64) -> (f64, f64) {
    let sizes = &p.problem.block_sizes;
    let m = p.b.len();
    let nfree = p.c_free.len();
    let tri: Vec<usize> = sizes.iter().map(|n| n * (n + 1) / 2).collect();
    let nx: usize = tri.iter().sum();
    // Variable layout: [svec X | svec S | y | z].
    let nv = 2 * nx + m + nfree;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut rhs: Vec<f64> = Vec::new();
    let svec_blocks = |ms: &[DMatrix<f64>]| {
        let mut v = Vec::new();
        for mb in ms {
            svec(mb, &mut v);
        }
        v
    };
    // A(X) + B z = b
    for i in 0..m {
        let mut row = vec![0.0; nv];
        let ai = svec_blocks(&p.a[i]);
        row[..nx].copy_from_slice(&ai);
        for l in 0..nfree {
            row[2 * nx + m + l] = p.b_free[(i, l)];
        }
        rows.push(row);
        rhs.push(p.b[i]);
    }
    // S + sum y_i A_i = C, entrywise in svec coordinates.
    let c_vec = svec_blocks(&p.c);
    let a_vecs: Vec<Vec<f64>> = (0..m).map(|i| svec_blocks(&p.a[i])).collect();
    for k in 0..nx {
        let mut row = vec![0.0; nv];
        row[nx + k] = 1.0;
        for i in 0..m {
            row[2 * nx + i] = a_vecs[i][k];
        }
        rows.push(row);
        rhs.push(c_vec[k]);
    }
    // B' y = c
    for l in 0..nfree {
        let mut row = vec![0.0; nv];
        for i in 0..m {
            row[2 * nx + i] = p.b_free[(i, l)];
        }
        rows.push(row);
        rhs.push(p.c_free[l]);
    }
    // Zero gap: <C,X> + c'z - b'y = 0
    let mut row = vec![0.0; nv];
    row[..nx].copy_from_slice(&c_vec);
    for i in 0..m {
        row[2 * nx + i] = -p.b[i];
    }
    for l in 0..nfree {
        row[2 * nx + m + l] = p.c_free[l];
    }
    rows.push(row);
    rhs.push(0.0);

    let k = DMatrix::from_fn(rows.len(), nv, |i, j| rows[i][j]);
    let r = DVector::from_vec(rhs);
    // Projection v -> v - K' (K K')^+ (K v - r). Tiny instances can make the
    // optimality rows dependent; then the pseudo-inverse takes over.
    let kt = k.transpose();
    let kk = &k * &kt;
    let solve_gram: Box<dyn Fn(&DVector<f64>) -> DVector<f64>> = match kk.clone().cholesky() {
        Some(ch) => Box::new(move |v| ch.solve(v)),
        None => {
            let eps = 1e-12 * kk.diagonal().max();
            let pinv = kk.pseudo_inverse(eps).expect("pseudo-inverse");
            Box::new(move |v| &pinv * v)
        }
    };
    let project_affine = |v: &DVector<f64>| v - &kt * solve_gram(&(&k * v - &r));
    let project_cone = |v: &DVector<f64>| {
        let mut out = v.clone();
        for half in 0..2 {
            let mut off = half * nx;
            for (&n, &t) in sizes.iter().zip(&tri) {
                let mb = smat(&v.as_slice()[off..off + t], n);
                let mut packed = Vec::with_capacity(t);
                svec(&psd_projection(&mb), &mut packed);
                out.rows_mut(off, t).copy_from_slice(&packed);
                off += t;
            }
        }
        out
    };
    // Projections alternate in reflected (Douglas-Rachford) form, which
    // keeps linear convergence on the tangential intersections that the
    // optimality face produces; plain alternation is sublinear there.
    let mut w = DVector::zeros(nv);
    let mut v = project_affine(&w);
    let mut dist = f64::INFINITY;
    for _ in 0..max_iter {
        let c = project_cone(&w);
        let a = project_affine(&(&c * 2.0 - &w));
        dist = (&a - &c).norm();
        w += &a - &c;
        v = a;
        if dist < tol {
            break;
        }
    }
    let value = c_vec.iter().zip(v.iter()).map(|(c, x)| c * x).sum::<f64>()
        + (0..nfree).map(|l| p.c_free[l] * v[2 * nx + m + l]).sum::<f64>();
    (value, dist)
}

/// Independent KKT check of a solution against the dense planted data:
/// primal and dual feasibility and complementarity, each relative to the
/// size of the data it involves.
pub fn kkt_residual(p: &PlantedSdp, sol: &SdpSolution) -> f64 {
    let m = p.b.len();
    let mut primal: f64 = 0.0;
    for i in 0..m {
        let ax: f64 = p.a[i].iter().zip(&sol.x).map(|(a, x)| a.dot(x)).sum();
        let bz: f64 = (0..p.c_free.len()).map(|l| p.b_free[(i, l)] * sol.z[l]).sum();
        primal = primal.max((ax + bz - p.b[i]).abs());
    }
    let primal = primal / (1.0 + p.b.amax());
    let mut dual: f64 = 0.0;
    for (bk, c) in p.c.iter().enumerate() {
        let mut r = c - &sol.s[bk];
        for i in 0..m {
            r -= &p.a[i][bk] * sol.y[i];
        }
        dual = dual.max(r.amax() / (1.0 + c.amax()));
    }
    for l in 0..p.c_free.len() {
        let by: f64 = (0..m).map(|i| p.b_free[(i, l)] * sol.y[i]).sum();
        dual = dual.max((by - p.c_free[l]).abs() / (1.0 + p.c_free.amax()));
    }
    let xs: f64 = sol.x.iter().zip(&sol.s).map(|(x, s)| x.dot(s)).sum();
    let comp = xs.abs() / (1.0 + sol.primal_objective.abs());
    primal.max(dual).max(comp)
}

