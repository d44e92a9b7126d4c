use serde::{Deserialize, Serialize};

use super::MomentVector;
use crate::instance::PopInstance;
use crate::polyring::{Monomial, MonomialBasis};
use crate::relaxation::half_degree;

/// Singular values below `RANK_TOL * sigma_max` count as zero.
pub const RANK_TOL: f64 = 1e-6;
/// Tolerance of `y_alpha ~ u^alpha`, relative to `max(1, |y_alpha|)`.
pub const MOMENT_TOL: f64 = 1e-5;
pub const FEASIBILITY_TOL: f64 = 1e-6;
pub const VALUE_TOL: f64 = 1e-5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankAt {
    pub t: usize,
    pub rank: usize,
    pub singular_values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlatTruncationReport {
    pub k: usize,
    /// Window `d = max(1, ceil(deg g_j / 2), ceil(deg h_i / 2))`.
    pub d: usize,
    /// Smallest `t` tested: `max(d, ceil(deg f / 2))`.
    pub t_min: usize,
    /// Numerical ranks of `M_t(y)` for `t = 0..=k`.
    pub ranks: Vec<RankAt>,
    pub flat_at: Option<usize>,
    pub note: String,
}

impl FlatTruncationReport {
    pub fn rank_at(&self, t: usize) -> Option<usize> {
        self.ranks.get(t).map(|r| r.rank)
    }

    pub fn is_flat(&self) -> bool {
        self.flat_at.is_some()
    }
}

pub fn numerical_rank(singular_values: &[f64]) -> usize {
    let smax = singular_values.iter().copied().fold(0.0, f64::max);
    if smax == 0.0 {
        return 0;
    }
    singular_values.iter().filter(|&&s| s > RANK_TOL * smax).count()
}

/// Looks for the smallest `t` in `[t_min, k]` with
/// `rank M_{t-d}(y) = rank M_t(y)`.
///
/// The window `d` is a convention (the usual one); `M_0(y) = [y_0]` is allowed
/// as the smaller matrix, so a rank-one `M_t` is flat as soon as `t >= t_min`.
pub fn flat_truncation(y: &MomentVector, inst: &PopInstance, k: usize) -> FlatTruncationReport {
    let d = inst
        .g
        .iter()
        .chain(&inst.h)
        .map(half_degree)
        .max()
        .unwrap_or(0)
        .max(1);
    let t_min = d.max(half_degree(&inst.f));
    let ranks: Vec<RankAt> = (0..=k)
        .map(|t| {
            let m = y.moment_matrix(t);
            let mut sv: Vec<f64> = m.singular_values().iter().copied().collect();
            sv.sort_by(|a, b| b.total_cmp(a));
            RankAt {
                t,
                rank: numerical_rank(&sv),
                singular_values: sv,
            }
        })
        .collect();
    let flat_at = (t_min..=k).find(|&t| ranks[t - d].rank == ranks[t].rank);
    let note = if k < t_min {
        format!("level too low to test (need k >= {t_min})")
    } else if let Some(t) = flat_at {
        format!(
            "flat at t = {t}: rank M_{} = rank M_{t} = {} (window d = {d}, a convention)",
            t - d,
            ranks[t].rank
        )
    } else {
        format!("no rank stabilization for t in {t_min}..={k} (window d = {d}, a convention)")
    };
    FlatTruncationReport {
        k,
        d,
        t_min,
        ranks,
        flat_at,
        note,
    }
}

/// Reads `u_i = y_{e_i} / y_0` when `M_t(y)` has rank one, and checks
/// `y_alpha ~ u^alpha` for every `deg alpha <= 2t`.
pub fn extract_minimizer_rank1(y: &MomentVector, t: usize) -> Result<Vec<f64>, String> {
    let n = y.nvars;
    let y0 = y.y0();
    if !(y0.abs() > 0.0) {
        return Err("y_0 = 0".into());
    }
    let sv = y.moment_matrix(t).singular_values();
    let sv: Vec<f64> = sv.iter().copied().collect();
    let rank = numerical_rank(&sv);
    if rank != 1 {
        return Err(format!("moment matrix M_{t} has numerical rank {rank}, not 1"));
    }
    let u: Vec<f64> = (0..n).map(|i| y.get(&Monomial::var(n, i)) / y0).collect();
    let mut worst = (0.0, None);
    for m in MonomialBasis::new(n, (2 * t) as u32).entries() {
        let ya = y.get(m) / y0;
        let defect = (ya - m.eval(&u)).abs() / ya.abs().max(1.0);
        if defect > worst.0 {
            worst = (defect, Some(m.clone()));
        }
    }
    if worst.0 > MOMENT_TOL {
        let m = worst.1.expect("set with defect");
        return Err(format!(
            "moment of {m} differs from u^alpha by {:.3e} (relative)",
            worst.0
        ));
    }
    Ok(u)
}

/// A rank-one extraction together with the checks against the instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinimizerCheck {
    pub point: Option<Vec<f64>>,
    pub violation: Option<f64>,
    pub value_gap: Option<f64>,
    pub diagnostic: Option<String>,
}

impl MinimizerCheck {
    pub fn accepted(&self) -> bool {
        self.point.is_some() && self.diagnostic.is_none()
    }
}

/// Extracts at level `t` and checks feasibility and `f(u) ~ f_k`.
pub fn extract_minimizer(y: &MomentVector, inst: &PopInstance, f_k: f64, t: usize) -> MinimizerCheck {
    let u = match extract_minimizer_rank1(y, t) {
        Ok(u) => u,
        Err(msg) => {
            return MinimizerCheck {
                point: None,
                violation: None,
                value_gap: None,
                diagnostic: Some(msg),
            }
        }
    };
    let violation = inst.max_violation(&u);
    let value_gap = (inst.f.eval(&u) - f_k).abs();
    let diagnostic = if !(violation <= FEASIBILITY_TOL) {
        Some(format!("extracted point violates constraints by {violation:.3e}"))
    } else if !(value_gap <= VALUE_TOL) {
        Some(format!("|f(u) - f_k| = {value_gap:.3e}"))
    } else {
        None
    };
    MinimizerCheck {
        point: diagnostic.is_none().then_some(u),
        violation: Some(violation),
        value_gap: Some(value_gap),
        diagnostic,
    }
}
