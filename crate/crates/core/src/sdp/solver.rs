//! Infeasible primal-dual path-following method for [`SdpProblem`].
//!
//! Search direction is HKM (`dX = mu S^-1 - X - sym(X dS S^-1)`) with a
//! Mehrotra predictor-corrector step. Free variables enter the Newton system
//! as an extra block of the augmented matrix
//!
//! ```text
//! [ M    B     ] [dy]   [r_p - A(Q)]
//! [ B'  -eps I ] [dz] = [r_f       ]
//! ```
//!
//! with `M_rs = tr(A_r X A_s S^-1)`, solved by LU with one step of iterative
//! refinement. Step lengths are computed exactly from the Cholesky factor of
//! the current iterate and damped by a fraction-to-boundary factor.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::problem::SdpProblem;
use crate::error::Result;

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SolverOptions {
    pub tol_gap: f64,
    pub tol_feas: f64,
    pub max_iter: usize,
    /// Fraction of the distance to the PSD boundary taken per step.
    pub step_fraction: f64,
    /// Diagonal regularization on the free-variable block of the Newton system.
    pub free_regularization: f64,
    /// Relative accuracy accepted as `NearOptimal` when the method stalls.
    pub near_optimal_tol: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol_gap: 1e-8,
            tol_feas: 1e-8,
            max_iter: 200,
            step_fraction: 0.98,
            free_regularization: 1e-10,
            near_optimal_tol: 1e-6,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    NearOptimal,
    /// The primal problem has no feasible point.
    Infeasible,
    /// The primal objective is unbounded below.
    Unbounded,
    MaxIter,
}

impl SolveStatus {
    /// `Optimal` or `NearOptimal`.
    pub fn is_usable(self) -> bool {
        matches!(self, SolveStatus::Optimal | SolveStatus::NearOptimal)
    }
}

/// Relative residuals: primal and dual infeasibility, duality gap.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    pub primal: f64,
    pub dual: f64,
    pub gap: f64,
}

impl Residuals {
    pub fn max(&self) -> f64 {
        self.primal.max(self.dual).max(self.gap)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationLog {
    pub iter: usize,
    pub mu: f64,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub primal_infeasibility: f64,
    pub dual_infeasibility: f64,
    pub gap: f64,
    pub step_primal: f64,
    pub step_dual: f64,
}

/// Per-iteration log as CSV with a header row.
pub fn trace_csv(trace: &[IterationLog]) -> String {
    let mut s = String::from("iter,mu,pobj,dobj,pinf,dinf,gap,step_p,step_d\n");
    for t in trace {
        s.push_str(&format!(
            "{},{:e},{:e},{:e},{:e},{:e},{:e},{},{}\n",
            t.iter,
            t.mu,
            t.primal_objective,
            t.dual_objective,
            t.primal_infeasibility,
            t.dual_infeasibility,
            t.gap,
            t.step_primal,
            t.step_dual
        ));
    }
    s
}

#[derive(Clone, Debug)]
pub struct SdpSolution {
    /// Primal PSD blocks `X_b`.
    pub x: Vec<DMatrix<f64>>,
    /// Dual slack blocks `S_b`.
    pub s: Vec<DMatrix<f64>>,
    /// Free variables.
    pub z: Vec<f64>,
    /// One multiplier per equality row.
    pub y: Vec<f64>,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub status: SolveStatus,
    pub iterations: usize,
    pub residuals: Residuals,
    pub trace: Vec<IterationLog>,
    pub message: Option<String>,
}

type Entries = Vec<(usize, usize, f64)>;

struct Operator<'a> {
    prob: &'a SdpProblem,
    /// For each block, the rows touching it with their entries.
    by_block: Vec<Vec<(usize, Entries)>>,
    c_mats: Vec<DMatrix<f64>>,
    c_free: DVector<f64>,
    b: DVector<f64>,
}

fn inner(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

fn sym(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

fn entries_dot(ents: &[(usize, usize, f64)], m: &DMatrix<f64>) -> f64 {
    ents.iter()
        .map(|&(i, j, v)| {
            if i == j {
                v * m[(i, i)]
            } else {
                v * (m[(i, j)] + m[(j, i)])
            }
        })
        .sum()
}

impl<'a> Operator<'a> {
    fn new(prob: &'a SdpProblem) -> Self {
        let nb = prob.block_sizes.len();
        let mut by_block: Vec<Vec<(usize, Entries)>> = vec![Vec::new(); nb];
        for (r, row) in prob.rows.iter().enumerate() {
            let mut per: Vec<Entries> = vec![Vec::new(); nb];
            for e in &row.blocks {
                if e.v != 0.0 {
                    per[e.block].push((e.i, e.j, e.v));
                }
            }
            for (b, ents) in per.into_iter().enumerate() {
                if !ents.is_empty() {
                    by_block[b].push((r, ents));
                }
            }
        }
        let mut c_mats: Vec<DMatrix<f64>> =
            prob.block_sizes.iter().map(|&n| DMatrix::zeros(n, n)).collect();
        for e in &prob.c_blocks {
            c_mats[e.block][(e.i, e.j)] += e.v;
            if e.i != e.j {
                c_mats[e.block][(e.j, e.i)] += e.v;
            }
        }
        Operator {
            prob,
            by_block,
            c_mats,
            c_free: DVector::from_column_slice(&prob.c_free),
            b: DVector::from_vec(prob.rhs()),
        }
    }

    fn rows(&self) -> usize {
        self.prob.rows.len()
    }

    fn nfree(&self) -> usize {
        self.prob.num_free
    }

    /// `A(X)`.
    fn apply_a(&self, x: &[DMatrix<f64>]) -> DVector<f64> {
        let mut out = DVector::zeros(self.rows());
        for (b, rows) in self.by_block.iter().enumerate() {
            for (r, ents) in rows {
                out[*r] += entries_dot(ents, &x[b]);
            }
        }
        out
    }

    /// `A*(y)`, one dense symmetric matrix per block.
    fn apply_at(&self, y: &DVector<f64>) -> Vec<DMatrix<f64>> {
        let mut out: Vec<DMatrix<f64>> = self
            .prob
            .block_sizes
            .iter()
            .map(|&n| DMatrix::zeros(n, n))
            .collect();
        for (b, rows) in self.by_block.iter().enumerate() {
            for (r, ents) in rows {
                let yr = y[*r];
                if yr == 0.0 {
                    continue;
                }
                for &(i, j, v) in ents {
                    out[b][(i, j)] += yr * v;
                    if i != j {
                        out[b][(j, i)] += yr * v;
                    }
                }
            }
        }
        out
    }

    fn apply_b(&self, z: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(
            self.rows(),
            self.prob
                .rows
                .iter()
                .map(|row| row.free.iter().map(|&(l, v)| v * z[l]).sum::<f64>()),
        )
    }

    fn apply_bt(&self, y: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.nfree());
        for (r, row) in self.prob.rows.iter().enumerate() {
            for &(l, v) in &row.free {
                out[l] += v * y[r];
            }
        }
        out
    }

    /// Schur complement `M_rs = sum_b tr(A_rb X_b A_sb S_b^-1)`.
    fn schur(&self, x: &[DMatrix<f64>], sinv: &[DMatrix<f64>]) -> DMatrix<f64> {
        let m = self.rows();
        let mut out = DMatrix::zeros(m, m);
        for (b, rows) in self.by_block.iter().enumerate() {
            let n = self.prob.block_sizes[b];
            let xs = x[b].as_slice();
            let ss = sinv[b].as_slice();
            let mut w = vec![0.0; n * n];
            for (ri, (r, ents_r)) in rows.iter().enumerate() {
                // W = X A_r S^-1 as a sum of outer products X[:, i] S^-1[j, :].
                w.iter_mut().for_each(|v| *v = 0.0);
                for &(i, j, v) in ents_r {
                    add_outer(&mut w, n, &xs[i * n..(i + 1) * n], ss, j, v);
                    if i != j {
                        add_outer(&mut w, n, &xs[j * n..(j + 1) * n], ss, i, v);
                    }
                }
                for (s, ents_s) in &rows[ri..] {
                    let val: f64 = ents_s
                        .iter()
                        .map(|&(k, l, v)| {
                            if k == l {
                                v * w[k * n + k]
                            } else {
                                v * (w[l * n + k] + w[k * n + l])
                            }
                        })
                        .sum();
                    out[(*r, *s)] += val;
                    if r != s {
                        out[(*s, *r)] += val;
                    }
                }
            }
        }
        out
    }
}

// w[:, c] += v * xcol * sinv[j, c] for all c (column-major, sinv symmetric).
fn add_outer(w: &mut [f64], n: usize, xcol: &[f64], sinv: &[f64], j: usize, v: f64) {
    let srow = &sinv[j * n..(j + 1) * n];
    for c in 0..n {
        let sc = v * srow[c];
        if sc == 0.0 {
            continue;
        }
        let wc = &mut w[c * n..(c + 1) * n];
        for (wa, xa) in wc.iter_mut().zip(xcol) {
            *wa += xa * sc;
        }
    }
}

fn cholesky_inverse(m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let chol = m.clone().cholesky()?;
    Some(sym(chol.inverse()))
}

/// Largest `alpha` with `X + alpha dX` PSD (infinite if any step is safe).
fn max_step(x: &DMatrix<f64>, dx: &DMatrix<f64>) -> f64 {
    let Some(chol) = x.clone().cholesky() else {
        return 0.0;
    };
    let l = chol.l();
    let Some(y) = l.solve_lower_triangular(dx) else {
        return 0.0;
    };
    let Some(z) = l.solve_lower_triangular(&y.transpose()) else {
        return 0.0;
    };
    let min = SymmetricEigen::new(sym(z)).eigenvalues.min();
    if min >= 0.0 {
        f64::INFINITY
    } else {
        -1.0 / min
    }
}

struct Iterate {
    x: Vec<DMatrix<f64>>,
    s: Vec<DMatrix<f64>>,
    y: DVector<f64>,
    z: DVector<f64>,
}

struct Measures {
    rp: DVector<f64>,
    rd: Vec<DMatrix<f64>>,
    rf: DVector<f64>,
    pobj: f64,
    dobj: f64,
    mu: f64,
    res: Residuals,
}

struct Newton {
    dx: Vec<DMatrix<f64>>,
    ds: Vec<DMatrix<f64>>,
    dy: DVector<f64>,
    dz: DVector<f64>,
}

/// Solves `prob`. The objective is scaled to unit Frobenius norm before the
/// iterations start, so scaling it by `c > 0` scales the returned objective
/// values, `y` and `S` by `c` and leaves `X`, `z`, the residuals and the
/// iteration count unchanged. Residuals refer to the scaled problem.
pub fn solve(prob: &SdpProblem, opts: &SolverOptions) -> Result<SdpSolution> {
    prob.validate()?;
    let op = Operator::new(prob);
    let norm_c = (op.c_mats.iter().map(|c| c.norm_squared()).sum::<f64>()
        + op.c_free.norm_squared())
    .sqrt();
    if norm_c == 0.0 || norm_c == 1.0 || !norm_c.is_finite() {
        return solve_scaled(prob, opts);
    }
    let mut scaled = prob.clone();
    scaled.scale_objective(1.0 / norm_c);
    // The gap test is relative to the objective size, which the scaling
    // shrinks; tighten it so the bound holds in the caller's units.
    let tight = SolverOptions {
        tol_gap: (opts.tol_gap / norm_c.max(1.0)).max(1e-13),
        ..opts.clone()
    };
    let mut sol = solve_scaled(&scaled, &tight)?;
    for s in &mut sol.s {
        *s *= norm_c;
    }
    for y in &mut sol.y {
        *y *= norm_c;
    }
    sol.primal_objective *= norm_c;
    sol.dual_objective *= norm_c;
    for log in &mut sol.trace {
        log.primal_objective *= norm_c;
        log.dual_objective *= norm_c;
        log.mu *= norm_c;
    }
    Ok(sol)
}

fn solve_scaled(prob: &SdpProblem, opts: &SolverOptions) -> Result<SdpSolution> {
    let op = Operator::new(prob);
    let nb = prob.block_sizes.len();
    let total_dim: usize = prob.block_sizes.iter().sum();
    let m = op.rows();
    let nf = op.nfree();

    let norm_b = op.b.norm();
    let norm_c = (op.c_mats.iter().map(|c| c.norm_squared()).sum::<f64>()
        + op.c_free.norm_squared())
    .sqrt();

    let mut it = initial_point(&op);
    let mut trace = Vec::new();
    let mut best: Option<(f64, Iterate, Measures, usize)> = None;
    let mut stall = 0usize;
    let mut message = None;
    let mut status = SolveStatus::MaxIter;
    let mut iterations = 0;

    for iter in 0..=opts.max_iter {
        iterations = iter;
        let meas = measure(&op, &it, norm_b, norm_c, total_dim);
        let score = meas.res.max();
        let mut log = IterationLog {
            iter,
            mu: meas.mu,
            primal_objective: meas.pobj,
            dual_objective: meas.dobj,
            primal_infeasibility: meas.res.primal,
            dual_infeasibility: meas.res.dual,
            gap: meas.res.gap,
            step_primal: 0.0,
            step_dual: 0.0,
        };
        if meas.res.primal <= opts.tol_feas
            && meas.res.dual <= opts.tol_feas
            && meas.res.gap <= opts.tol_gap
        {
            trace.push(log);
            status = SolveStatus::Optimal;
            best = Some((score, clone_iterate(&it), meas, iter));
            break;
        }
        if best.as_ref().is_none_or(|(s, ..)| score <= *s) {
            best = Some((score, clone_iterate(&it), clone_measures(&meas), iter));
        }
        if let Some(st) = detect_infeasibility(&it, &meas, opts) {
            trace.push(log);
            status = st;
            best = Some((score, clone_iterate(&it), meas, iter));
            break;
        }
        if iter == opts.max_iter {
            trace.push(log);
            break;
        }

        let Some(sinv) = it.s.iter().map(cholesky_inverse).collect::<Option<Vec<_>>>() else {
            trace.push(log);
            message = Some(format!("dual slack lost definiteness at iteration {iter}"));
            break;
        };
        let mut kkt = DMatrix::zeros(m + nf, m + nf);
        kkt.view_mut((0, 0), (m, m)).copy_from(&op.schur(&it.x, &sinv));
        for (r, row) in prob.rows.iter().enumerate() {
            for &(l, v) in &row.free {
                kkt[(r, m + l)] += v;
                kkt[(m + l, r)] += v;
            }
        }
        for l in 0..nf {
            kkt[(m + l, m + l)] -= opts.free_regularization;
        }
        let lu = kkt.clone().lu();

        // Predictor: affine-scaling direction.
        let q_aff: Vec<DMatrix<f64>> = (0..nb)
            .map(|b| -&it.x[b] - sym(&it.x[b] * &meas.rd[b] * &sinv[b]))
            .collect();
        let Some(aff) = newton_direction(&op, &kkt, &lu, &it, &meas, &sinv, q_aff) else {
            trace.push(log);
            message = Some(format!("Newton system singular at iteration {iter}"));
            break;
        };
        let ap = step_length(&it.x, &aff.dx).min(1.0);
        let ad = step_length(&it.s, &aff.ds).min(1.0);
        let mu_aff = (0..nb)
            .map(|b| inner(&(&it.x[b] + &aff.dx[b] * ap), &(&it.s[b] + &aff.ds[b] * ad)))
            .sum::<f64>()
            / total_dim as f64;
        let sigma = if meas.mu > 0.0 {
            (mu_aff / meas.mu).clamp(0.0, 1.0).powi(3)
        } else {
            0.0
        };

        // Corrector with the second-order term.
        let target = sigma * meas.mu;
        let q_cor: Vec<DMatrix<f64>> = (0..nb)
            .map(|b| {
                &sinv[b] * target
                    - &it.x[b]
                    - sym(&it.x[b] * &meas.rd[b] * &sinv[b])
                    - sym(&aff.dx[b] * &aff.ds[b] * &sinv[b])
            })
            .collect();
        let Some(dir) = newton_direction(&op, &kkt, &lu, &it, &meas, &sinv, q_cor) else {
            trace.push(log);
            message = Some(format!("Newton system singular at iteration {iter}"));
            break;
        };
        let ap = (opts.step_fraction * step_length(&it.x, &dir.dx)).min(1.0);
        let ad = (opts.step_fraction * step_length(&it.s, &dir.ds)).min(1.0);
        log.step_primal = ap;
        log.step_dual = ad;
        trace.push(log);

        for b in 0..nb {
            it.x[b] += &dir.dx[b] * ap;
            it.s[b] += &dir.ds[b] * ad;
        }
        it.z += &dir.dz * ap;
        it.y += &dir.dy * ad;

        if ap < 1e-8 && ad < 1e-8 {
            stall += 1;
            if stall >= 3 {
                message = Some(format!("step lengths collapsed at iteration {iter}"));
                break;
            }
        } else {
            stall = 0;
        }
    }

    let (_, it, meas, best_iter) = best.expect("at least one iterate is measured");
    if status == SolveStatus::MaxIter && meas.res.max() <= opts.near_optimal_tol {
        status = SolveStatus::NearOptimal;
    }
    if status == SolveStatus::MaxIter && message.is_none() {
        message = Some(format!("iteration limit {} reached", opts.max_iter));
    }
    if best_iter != iterations && status == SolveStatus::NearOptimal {
        let note = format!("returned iterate {best_iter} (best residuals)");
        message = Some(match message {
            Some(m) => format!("{m}; {note}"),
            None => note,
        });
    }
    Ok(SdpSolution {
        x: it.x,
        s: it.s,
        z: it.z.iter().copied().collect(),
        y: it.y.iter().copied().collect(),
        primal_objective: meas.pobj,
        dual_objective: meas.dobj,
        status,
        iterations,
        residuals: meas.res,
        trace,
        message,
    })
}

fn clone_iterate(it: &Iterate) -> Iterate {
    Iterate {
        x: it.x.clone(),
        s: it.s.clone(),
        y: it.y.clone(),
        z: it.z.clone(),
    }
}

fn clone_measures(m: &Measures) -> Measures {
    Measures {
        rp: m.rp.clone(),
        rd: m.rd.clone(),
        rf: m.rf.clone(),
        pobj: m.pobj,
        dobj: m.dobj,
        mu: m.mu,
        res: m.res,
    }
}

fn step_length(x: &[DMatrix<f64>], dx: &[DMatrix<f64>]) -> f64 {
    x.iter()
        .zip(dx)
        .map(|(x, dx)| max_step(x, dx))
        .fold(f64::INFINITY, f64::min)
}

fn initial_point(op: &Operator<'_>) -> Iterate {
    let prob = op.prob;
    let nb = prob.block_sizes.len();
    let mut x = Vec::with_capacity(nb);
    let mut s = Vec::with_capacity(nb);
    for b in 0..nb {
        let n = prob.block_sizes[b] as f64;
        let mut ratio: f64 = 0.0;
        let mut amax: f64 = 0.0;
        for (r, ents) in &op.by_block[b] {
            let fro = ents
                .iter()
                .map(|&(i, j, v)| if i == j { v * v } else { 2.0 * v * v })
                .sum::<f64>()
                .sqrt();
            ratio = ratio.max((1.0 + op.b[*r].abs()) / (1.0 + fro));
            amax = amax.max(fro);
        }
        let rho_p = 10f64.max(n.sqrt()).max(n * ratio);
        let rho_d = 10f64.max(n.sqrt()).max(amax).max(op.c_mats[b].norm());
        x.push(DMatrix::identity(prob.block_sizes[b], prob.block_sizes[b]) * rho_p);
        s.push(DMatrix::identity(prob.block_sizes[b], prob.block_sizes[b]) * rho_d);
    }
    Iterate {
        x,
        s,
        y: DVector::zeros(op.rows()),
        z: DVector::zeros(op.nfree()),
    }
}

fn measure(op: &Operator<'_>, it: &Iterate, norm_b: f64, norm_c: f64, total_dim: usize) -> Measures {
    let ax = op.apply_a(&it.x);
    let bz = op.apply_b(&it.z);
    let rp = &op.b - ax - bz;
    let aty = op.apply_at(&it.y);
    let rd: Vec<DMatrix<f64>> = (0..it.x.len())
        .map(|b| &op.c_mats[b] - &aty[b] - &it.s[b])
        .collect();
    let rf = &op.c_free - op.apply_bt(&it.y);
    let pobj = (0..it.x.len()).map(|b| inner(&op.c_mats[b], &it.x[b])).sum::<f64>()
        + op.c_free.dot(&it.z);
    let dobj = op.b.dot(&it.y);
    let xs: f64 = (0..it.x.len()).map(|b| inner(&it.x[b], &it.s[b])).sum();
    let mu = xs / total_dim.max(1) as f64;
    let dnorm = (rd.iter().map(|r| r.norm_squared()).sum::<f64>() + rf.norm_squared()).sqrt();
    let denom = 1.0 + pobj.abs() + dobj.abs();
    let res = Residuals {
        primal: rp.norm() / (1.0 + norm_b),
        dual: dnorm / (1.0 + norm_c),
        gap: (pobj - dobj).abs().max(xs.abs()) / denom,
    };
    Measures {
        rp,
        rd,
        rf,
        pobj,
        dobj,
        mu,
        res,
    }
}

fn detect_infeasibility(it: &Iterate, meas: &Measures, opts: &SolverOptions) -> Option<SolveStatus> {
    const BIG: f64 = 1e10;
    let xnorm = it.x.iter().map(|x| x.norm()).sum::<f64>() + it.z.norm();
    let snorm = it.s.iter().map(|s| s.norm()).sum::<f64>() + it.y.norm();
    let loose = opts.near_optimal_tol.max(opts.tol_feas);
    if xnorm > BIG && meas.res.primal <= loose && meas.pobj < -BIG.sqrt() {
        return Some(SolveStatus::Unbounded);
    }
    if snorm > BIG && meas.res.dual <= loose && meas.dobj > BIG.sqrt() {
        return Some(SolveStatus::Infeasible);
    }
    None
}

#[allow(clippy::too_many_arguments)]
fn newton_direction(
    op: &Operator<'_>,
    kkt: &DMatrix<f64>,
    lu: &nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    it: &Iterate,
    meas: &Measures,
    sinv: &[DMatrix<f64>],
    q: Vec<DMatrix<f64>>,
) -> Option<Newton> {
    let m = op.rows();
    let nf = op.nfree();
    let aq = op.apply_a(&q);
    let mut rhs = DVector::zeros(m + nf);
    rhs.rows_mut(0, m).copy_from(&(&meas.rp - aq));
    rhs.rows_mut(m, nf).copy_from(&meas.rf);
    let mut sol = lu.solve(&rhs)?;
    let refine = &rhs - kkt * &sol;
    if let Some(corr) = lu.solve(&refine) {
        sol += corr;
    }
    if sol.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let dy = sol.rows(0, m).into_owned();
    let dz = sol.rows(m, nf).into_owned();
    let atdy = op.apply_at(&dy);
    let ds: Vec<DMatrix<f64>> = (0..it.x.len()).map(|b| &meas.rd[b] - &atdy[b]).collect();
    let dx: Vec<DMatrix<f64>> = q
        .into_iter()
        .enumerate()
        .map(|(b, qb)| qb + sym(&it.x[b] * &atdy[b] * &sinv[b]))
        .collect();
    Some(Newton { dx, ds, dy, dz })
}
