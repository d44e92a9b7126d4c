//! Audit of the classical local optimality conditions at a candidate point:
//! first-order (KKT) stationarity, constraint qualification (linear
//! independence of active gradients), strict complementarity, and the
//! second-order necessary and sufficient conditions on the null space of the
//! active Jacobian.
//!
//! Every threshold is relative to the scale of the data, so multiplying `f`,
//! all `h_i` and all `g_j` by one positive constant leaves every verdict
//! unchanged.

use std::fmt;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::PopInstance;
use crate::polyring::Polynomial;

/// Thresholds used by the audit. All are relative; see each field.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct AuditOptions {
    /// `g_j` is active when `|g_j(u)| <= active * |g_j|_coeff`.
    pub active: f64,
    /// Feasibility band, relative to each constraint's coefficient norm.
    pub feasibility: f64,
    /// Full rank when `sigma_min > rank * sigma_max`.
    pub rank: f64,
    /// Stationarity accepted when the defect is below `stationarity * |grad f(u)|`.
    pub stationarity: f64,
    /// Strictness of `mu_j > 0`, relative to `|grad f(u)| / |grad g_j(u)|`.
    pub scc: f64,
    /// Eigenvalue threshold relative to the spectral norm of the Lagrangian Hessian.
    pub eig: f64,
}

impl Default for AuditOptions {
    fn default() -> Self {
        AuditOptions {
            active: 1e-6,
            feasibility: 1e-6,
            rank: 1e-8,
            stationarity: 1e-6,
            scc: 1e-6,
            eig: 1e-7,
        }
    }
}

/// Three-valued outcome for conditions that are undefined when CQC fails.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Holds,
    Fails,
    Inconclusive,
}

impl Verdict {
    pub fn holds(self) -> bool {
        self == Verdict::Holds
    }

    fn from_bool(b: bool) -> Self {
        if b {
            Verdict::Holds
        } else {
            Verdict::Fails
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Holds => "holds",
            Verdict::Fails => "fails",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

/// Indices (zero-based) of the inequality constraints active at a point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActiveSet {
    pub indices: Vec<usize>,
    pub tolerance: f64,
}

impl ActiveSet {
    pub fn contains(&self, j: usize) -> bool {
        self.indices.binary_search(&j).is_ok()
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MultiplierFit {
    pub lambda: Vec<f64>,
    /// One entry per inequality; zero off the active set.
    pub mu: Vec<f64>,
    /// `|grad f(u) - sum lambda_i grad h_i(u) - sum mu_j grad g_j(u)|`.
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CqcCheck {
    pub holds: bool,
    /// Smallest singular value of the active Jacobian; `None` when nothing is active.
    pub sigma_min: Option<f64>,
    pub sigma_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SccCheck {
    pub holds: bool,
    /// `min_j (mu_j + g_j(u))`; `None` when there are no inequalities.
    pub min_margin: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SecondOrderCheck {
    pub sonc: Verdict,
    pub sosc: Verdict,
    /// Eigenvalues of the Lagrangian Hessian restricted to the null space of
    /// the active Jacobian, ascending.
    pub eigenvalues: Vec<f64>,
    pub null_space_dim: usize,
    pub threshold: f64,
}

/// Full audit of a candidate point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalReport {
    pub u: Vec<f64>,
    pub f_value: f64,
    pub lambda: Vec<f64>,
    pub mu: Vec<f64>,
    pub active: ActiveSet,
    pub stationarity_residual: f64,
    /// Stationary with `mu_j >= -tol` on the active set.
    pub kkt: bool,
    pub cqc: CqcCheck,
    pub scc: SccCheck,
    pub second_order: SecondOrderCheck,
}

impl LocalReport {
    /// CQC, SCC and SOSC all hold at a KKT point.
    pub fn all_hold(&self) -> bool {
        self.kkt && self.cqc.holds && self.scc.holds && self.second_order.sosc.holds()
    }

    pub fn summary(&self) -> String {
        if !self.kkt {
            return format!(
                "not a KKT point (stationarity residual {:.3e})",
                self.stationarity_residual
            );
        }
        format!(
            "KKT point: CQC {}, SCC {}, SONC {}, SOSC {}",
            Verdict::from_bool(self.cqc.holds),
            Verdict::from_bool(self.scc.holds),
            self.second_order.sonc,
            self.second_order.sosc
        )
    }
}

impl fmt::Display for LocalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "point u           = {:?}", self.u)?;
        writeln!(f, "f(u)              = {}", self.f_value)?;
        let active: Vec<String> = self.active.indices.iter().map(|j| format!("g{}", j + 1)).collect();
        writeln!(f, "active set J(u)   = {{{}}}", active.join(", "))?;
        writeln!(f, "lambda            = {:?}", self.lambda)?;
        writeln!(f, "mu                = {:?}", self.mu)?;
        writeln!(f, "stationarity      = {:.3e}", self.stationarity_residual)?;
        match self.cqc.sigma_min {
            Some(s) => writeln!(f, "CQC               : {} (sigma_min = {s:.3e})", Verdict::from_bool(self.cqc.holds))?,
            None => writeln!(f, "CQC               : holds (no active constraints)")?,
        }
        if let Some(note) = &self.cqc.note {
            writeln!(f, "                    {note}")?;
        }
        match self.scc.min_margin {
            Some(m) => writeln!(f, "SCC               : {} (min mu_j + g_j(u) = {m:.3e})", Verdict::from_bool(self.scc.holds))?,
            None => writeln!(f, "SCC               : holds (no inequalities)")?,
        }
        writeln!(
            f,
            "SONC / SOSC       : {} / {} (projected Hessian eigenvalues {:?})",
            self.second_order.sonc, self.second_order.sosc, self.second_order.eigenvalues
        )?;
        write!(f, "verdict           : {}", self.summary())
    }
}

fn poly_scale(p: &Polynomial) -> f64 {
    p.max_abs_coeff()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn check_point(inst: &PopInstance, u: &[f64]) -> Result<()> {
    if u.len() != inst.nvars() {
        return Err(Error::DimensionMismatch {
            expected: inst.nvars(),
            got: u.len(),
        });
    }
    Ok(())
}

/// Indices of the inequalities active at `u`, after checking feasibility.
///
/// Both checks use `tol` relative to each constraint's coefficient norm.
pub fn active_set(inst: &PopInstance, u: &[f64], tol: f64) -> Result<ActiveSet> {
    check_point(inst, u)?;
    let mut worst: Option<(String, f64)> = None;
    let mut note = |name: String, viol: f64| {
        if worst.as_ref().is_none_or(|(_, w)| viol > *w) {
            worst = Some((name, viol));
        }
    };
    for (i, h) in inst.h.iter().enumerate() {
        let v = h.eval(u).abs();
        if v > tol * poly_scale(h) {
            note(format!("h{} = 0", i + 1), v);
        }
    }
    for (j, g) in inst.g.iter().enumerate() {
        let v = g.eval(u);
        if v < -tol * poly_scale(g) {
            note(format!("g{} >= 0", j + 1), -v);
        }
    }
    if let Some((constraint, violation)) = worst {
        return Err(Error::Infeasible {
            constraint,
            violation,
        });
    }
    let indices = inst
        .g
        .iter()
        .enumerate()
        .filter(|(_, g)| g.eval(u).abs() <= tol * poly_scale(g))
        .map(|(j, _)| j)
        .collect();
    Ok(ActiveSet {
        indices,
        tolerance: tol,
    })
}

/// Rows are the gradients of `h_1..h_m1` followed by the active `g_j`.
fn active_jacobian(inst: &PopInstance, u: &[f64], active: &ActiveSet) -> DMatrix<f64> {
    let n = inst.nvars();
    let rows: Vec<Vec<f64>> = inst
        .h
        .iter()
        .chain(active.indices.iter().map(|&j| &inst.g[j]))
        .map(|p| p.eval_gradient(u))
        .collect();
    DMatrix::from_fn(rows.len(), n, |r, c| rows[r][c])
}

/// Least-squares multipliers for `grad f = sum lambda grad h + sum_{J} mu grad g`.
pub fn fit_multipliers(inst: &PopInstance, u: &[f64], active: &ActiveSet) -> Result<MultiplierFit> {
    check_point(inst, u)?;
    let n = inst.nvars();
    let m1 = inst.h.len();
    let grad_f = DVector::from_vec(inst.f.eval_gradient(u));
    let jac = active_jacobian(inst, u, active);
    let mut mu = vec![0.0; inst.g.len()];
    let mut lambda = vec![0.0; m1];
    let coeffs = if jac.nrows() == 0 {
        DVector::zeros(0)
    } else {
        // Columns are the constraint gradients.
        let a = jac.transpose();
        let svd = a.clone().svd(true, true);
        let smax = svd.singular_values.max();
        let eps = (smax * 1e-12).max(f64::MIN_POSITIVE);
        svd.solve(&grad_f, eps)
            .map_err(|e| Error::Solver(format!("multiplier least squares: {e}")))?
    };
    for i in 0..m1 {
        lambda[i] = coeffs[i];
    }
    for (k, &j) in active.indices.iter().enumerate() {
        mu[j] = coeffs[m1 + k];
    }
    let mut defect = grad_f.clone();
    if jac.nrows() > 0 {
        defect -= jac.transpose() * &coeffs;
    }
    debug_assert_eq!(defect.len(), n);
    Ok(MultiplierFit {
        lambda,
        mu,
        residual: defect.norm(),
    })
}

/// Linear independence of the active constraint gradients.
pub fn check_cqc(inst: &PopInstance, u: &[f64], active: &ActiveSet, opts: &AuditOptions) -> CqcCheck {
    let jac = active_jacobian(inst, u, active);
    let rows = jac.nrows();
    if rows == 0 {
        return CqcCheck {
            holds: true,
            sigma_min: None,
            sigma_max: None,
            note: None,
        };
    }
    let sv = jac.svd(false, false).singular_values;
    let smax = sv.max();
    let smin = if rows > inst.nvars() { 0.0 } else { sv.min() };
    let mut note = None;
    let holds = if rows > inst.nvars() {
        note = Some(format!(
            "{rows} active constraints exceed the {} variables",
            inst.nvars()
        ));
        false
    } else {
        smax > 0.0 && smin > opts.rank * smax
    };
    CqcCheck {
        holds,
        sigma_min: Some(smin),
        sigma_max: Some(smax),
        note,
    }
}

fn gradient_scale(inst: &PopInstance, u: &[f64]) -> f64 {
    norm(&inst.f.eval_gradient(u)).max(1e-8 * inst.f.max_abs_coeff())
}

/// Strict complementarity: `mu_j > 0` on the active set.
pub fn check_scc(
    inst: &PopInstance,
    u: &[f64],
    mu: &[f64],
    active: &ActiveSet,
    opts: &AuditOptions,
) -> SccCheck {
    if inst.g.is_empty() {
        return SccCheck {
            holds: true,
            min_margin: None,
        };
    }
    let min_margin = inst
        .g
        .iter()
        .zip(mu)
        .map(|(g, m)| m + g.eval(u))
        .fold(f64::INFINITY, f64::min);
    let scale = gradient_scale(inst, u);
    let holds = active.indices.iter().all(|&j| {
        let gnorm = norm(&inst.g[j].eval_gradient(u));
        mu[j] * gnorm > opts.scc * scale
    });
    SccCheck {
        holds,
        min_margin: Some(min_margin),
    }
}

/// Hessian of `L = f - sum lambda_i h_i - sum_{j in J} mu_j g_j` at `u`.
pub fn lagrangian_hessian(
    inst: &PopInstance,
    u: &[f64],
    lambda: &[f64],
    mu: &[f64],
    active: &ActiveSet,
) -> DMatrix<f64> {
    let n = inst.nvars();
    let to_mat = |p: &Polynomial| {
        let h = p.eval_hessian(u);
        DMatrix::from_fn(n, n, |i, j| h[i][j])
    };
    let mut hess = to_mat(&inst.f);
    for (h, l) in inst.h.iter().zip(lambda) {
        if *l != 0.0 {
            hess -= to_mat(h) * *l;
        }
    }
    for &j in &active.indices {
        if mu[j] != 0.0 {
            hess -= to_mat(&inst.g[j]) * mu[j];
        }
    }
    hess
}

/// Orthonormal basis (as columns) of the null space of `jac`.
fn null_space(jac: &DMatrix<f64>, n: usize, rank_tol: f64) -> DMatrix<f64> {
    if jac.nrows() == 0 {
        return DMatrix::identity(n, n);
    }
    // Pad to at least n rows so the SVD returns a full set of right vectors.
    let rows = jac.nrows().max(n);
    let padded = DMatrix::from_fn(rows, n, |r, c| if r < jac.nrows() { jac[(r, c)] } else { 0.0 });
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let smax = svd.singular_values.max();
    let cols: Vec<DVector<f64>> = (0..n)
        .filter(|&i| svd.singular_values[i] <= rank_tol * smax || smax == 0.0)
        .map(|i| v_t.row(i).transpose())
        .collect();
    if cols.is_empty() {
        DMatrix::zeros(n, 0)
    } else {
        DMatrix::from_columns(&cols)
    }
}

/// Second-order conditions on the null space of the active Jacobian.
///
/// Both verdicts are `Inconclusive` when CQC fails (`cqc_holds == false`).
pub fn check_second_order(
    inst: &PopInstance,
    u: &[f64],
    lambda: &[f64],
    mu: &[f64],
    active: &ActiveSet,
    cqc_holds: bool,
    opts: &AuditOptions,
) -> SecondOrderCheck {
    let n = inst.nvars();
    let hess = lagrangian_hessian(inst, u, lambda, mu, active);
    let jac = active_jacobian(inst, u, active);
    let basis = null_space(&jac, n, opts.rank);
    let hnorm = SymmetricEigen::new(hess.clone())
        .eigenvalues
        .iter()
        .fold(0.0f64, |a, e| a.max(e.abs()));
    let threshold = opts.eig * hnorm;
    let mut eigenvalues: Vec<f64> = if basis.ncols() == 0 {
        Vec::new()
    } else {
        let proj = basis.transpose() * &hess * &basis;
        let proj = (&proj + proj.transpose()) * 0.5;
        SymmetricEigen::new(proj).eigenvalues.iter().copied().collect()
    };
    eigenvalues.sort_by(f64::total_cmp);
    let (sonc, sosc) = if !cqc_holds {
        (Verdict::Inconclusive, Verdict::Inconclusive)
    } else {
        let min = eigenvalues.first().copied().unwrap_or(f64::INFINITY);
        (
            Verdict::from_bool(min >= -threshold),
            Verdict::from_bool(min > threshold),
        )
    };
    SecondOrderCheck {
        sonc,
        sosc,
        eigenvalues,
        null_space_dim: basis.ncols(),
        threshold,
    }
}

/// Result of polishing an approximate KKT point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Refinement {
    pub u: Vec<f64>,
    pub lambda: Vec<f64>,
    /// Multipliers of all `g_j`; zero off the identified active set.
    pub mu: Vec<f64>,
    pub active: Vec<usize>,
    pub steps: usize,
    /// Euclidean distance from the starting point.
    pub displacement: f64,
    /// Final norm of the KKT defect.
    pub defect: f64,
}

/// Newton's method on the KKT equations of the constraints active at `u`
/// (identified with the relative tolerance `active_tol`):
/// `grad f = sum lambda grad h + sum_J mu grad g`, `h = 0`, `g_J = 0`.
///
/// Meant for points read off a relaxation, whose accuracy is limited by the
/// SDP solve. Returns `None` when the Newton system is singular, the
/// iteration does not converge, or the point moves farther than `max_move`.
/// The active set and sign pattern are not changed.
pub fn refine_kkt_point(
    inst: &PopInstance,
    u: &[f64],
    active_tol: f64,
    max_move: f64,
) -> Option<Refinement> {
    check_point(inst, u).ok()?;
    let n = inst.nvars();
    let m1 = inst.h.len();
    let active: Vec<usize> = inst
        .g
        .iter()
        .enumerate()
        .filter(|(_, g)| g.eval(u).abs() <= active_tol * poly_scale(g))
        .map(|(j, _)| j)
        .collect();
    let aset = ActiveSet {
        indices: active.clone(),
        tolerance: active_tol,
    };
    let cons: Vec<&Polynomial> = inst.h.iter().chain(active.iter().map(|&j| &inst.g[j])).collect();
    let mc = cons.len();
    let fit = fit_multipliers(inst, u, &aset).ok()?;
    let mut x = DVector::from_column_slice(u);
    let mut mult = DVector::from_iterator(
        mc,
        fit.lambda.iter().copied().chain(active.iter().map(|&j| fit.mu[j])),
    );
    let defect = |x: &DVector<f64>, mult: &DVector<f64>| {
        let xs = x.as_slice();
        let mut r = DVector::from_vec(inst.f.eval_gradient(xs));
        for (c, p) in cons.iter().enumerate() {
            r -= DVector::from_vec(p.eval_gradient(xs)) * mult[c];
        }
        let vals = DVector::from_iterator(mc, cons.iter().map(|p| p.eval(xs)));
        (r, vals)
    };
    let scale = gradient_scale(inst, u).max(f64::MIN_POSITIVE);
    let mut steps = 0;
    let mut last = f64::INFINITY;
    for _ in 0..30 {
        let (r, vals) = defect(&x, &mult);
        let size = (r.norm_squared() + vals.norm_squared()).sqrt();
        if size <= 1e-14 * scale || (steps > 0 && size >= last) {
            break;
        }
        last = size;
        let xs = x.as_slice();
        let mut lam = vec![0.0; inst.g.len()];
        for (k, &j) in active.iter().enumerate() {
            lam[j] = mult[m1 + k];
        }
        let hess = lagrangian_hessian(inst, xs, &mult.as_slice()[..m1], &lam, &aset);
        let jac = active_jacobian(inst, xs, &aset);
        let mut kkt = DMatrix::zeros(n + mc, n + mc);
        kkt.view_mut((0, 0), (n, n)).copy_from(&hess);
        kkt.view_mut((0, n), (n, mc)).copy_from(&(-jac.transpose()));
        kkt.view_mut((n, 0), (mc, n)).copy_from(&jac);
        let mut rhs = DVector::zeros(n + mc);
        rhs.rows_mut(0, n).copy_from(&(-r));
        rhs.rows_mut(n, mc).copy_from(&(-vals));
        let step = kkt.lu().solve(&rhs)?;
        x += step.rows(0, n);
        mult += step.rows(n, mc);
        steps += 1;
    }
    let (r, vals) = defect(&x, &mult);
    let size = (r.norm_squared() + vals.norm_squared()).sqrt();
    let displacement = (&x - DVector::from_column_slice(u)).norm();
    if !(size <= 1e-9 * scale) || !(displacement <= max_move) {
        return None;
    }
    let mut mu = vec![0.0; inst.g.len()];
    for (k, &j) in active.iter().enumerate() {
        mu[j] = mult[m1 + k];
    }
    Some(Refinement {
        u: x.iter().copied().collect(),
        lambda: mult.as_slice()[..m1].to_vec(),
        mu,
        active,
        steps,
        displacement,
        defect: size,
    })
}

/// Runs the whole audit at `u`.
pub fn audit(inst: &PopInstance, u: &[f64], opts: &AuditOptions) -> Result<LocalReport> {
    let active = active_set_with(inst, u, opts)?;
    let fit = fit_multipliers(inst, u, &active)?;
    let cqc = check_cqc(inst, u, &active, opts);
    let scc = check_scc(inst, u, &fit.mu, &active, opts);
    let second_order = check_second_order(inst, u, &fit.lambda, &fit.mu, &active, cqc.holds, opts);
    let scale = gradient_scale(inst, u);
    let stationary = fit.residual <= opts.stationarity * scale;
    let dual_feasible = active.indices.iter().all(|&j| {
        let gnorm = norm(&inst.g[j].eval_gradient(u));
        fit.mu[j] * gnorm >= -opts.scc * scale
    });
    Ok(LocalReport {
        u: u.to_vec(),
        f_value: inst.f.eval(u),
        lambda: fit.lambda,
        mu: fit.mu,
        active,
        stationarity_residual: fit.residual,
        kkt: stationary && dual_feasible,
        cqc,
        scc,
        second_order,
    })
}

fn active_set_with(inst: &PopInstance, u: &[f64], opts: &AuditOptions) -> Result<ActiveSet> {
    if opts.feasibility != opts.active {
        // Feasibility first with its own band, then activity.
        active_set(inst, u, opts.feasibility)?;
    }
    active_set(inst, u, opts.active)
}
