//! The level loop: solve `k = k_min, k_min + 1, ...`, test flat truncation,
//! extract a minimizer and emit a certificate at every level.

use std::path::PathBuf;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::certify::{
    extract_certificate, extract_minimizer, flat_truncation, Certificate, CertificateStatus,
    FlatTruncationReport, MinimizerCheck,
};
use crate::error::Result;
use crate::instance::PopInstance;
use crate::relaxation::{build_sos_relaxation, check_level, min_level};
use crate::sdp::{solve, Residuals, SolveStatus, SolverOptions};

/// Relative change below which a level counts as stagnant.
pub const STAGNATION_TOL: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct HierarchyOptions {
    /// First level; defaults to the minimum admissible one.
    pub k_min: Option<usize>,
    pub k_max: usize,
    pub solver: SolverOptions,
    /// Write `certificate_k{k}.json` files here.
    pub certificate_dir: Option<PathBuf>,
}

impl Default for HierarchyOptions {
    fn default() -> Self {
        HierarchyOptions {
            k_min: None,
            k_max: 6,
            solver: SolverOptions::default(),
            certificate_dir: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Flat,
    LevelCap,
    Stagnation,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LevelRecord {
    pub k: usize,
    /// The bound `f_k`; absent when the solve was unusable.
    pub f_k: Option<f64>,
    pub status: Option<SolveStatus>,
    pub iterations: usize,
    pub residuals: Option<Residuals>,
    pub wall_time_s: f64,
    pub flat: Option<FlatTruncationReport>,
    pub minimizer: Option<MinimizerCheck>,
    pub certificate_status: Option<CertificateStatus>,
    pub certificate_residual: Option<f64>,
    pub certificate_path: Option<PathBuf>,
    pub error: Option<String>,
}

impl LevelRecord {
    fn failed(k: usize, wall: f64, status: Option<SolveStatus>, msg: String) -> Self {
        LevelRecord {
            k,
            f_k: None,
            status,
            iterations: 0,
            residuals: None,
            wall_time_s: wall,
            flat: None,
            minimizer: None,
            certificate_status: None,
            certificate_residual: None,
            certificate_path: None,
            error: Some(msg),
        }
    }

    pub fn is_flat(&self) -> bool {
        self.flat.as_ref().is_some_and(FlatTruncationReport::is_flat)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HierarchyRun {
    pub min_k: usize,
    pub levels: Vec<LevelRecord>,
    pub stop_reason: StopReason,
    /// Accepted rank-one minimizer of the last flat level.
    pub minimizer: Option<Vec<f64>>,
    #[serde(skip)]
    pub certificates: Vec<Certificate>,
}

impl HierarchyRun {
    /// `(k, f_k)` of the usable levels.
    pub fn bounds(&self) -> Vec<(usize, f64)> {
        self.levels.iter().filter_map(|l| l.f_k.map(|f| (l.k, f))).collect()
    }

    pub fn last_bound(&self) -> Option<f64> {
        self.bounds().last().map(|b| b.1)
    }

    pub fn flat_level(&self) -> Option<usize> {
        self.levels.iter().find(|l| l.is_flat()).map(|l| l.k)
    }

    pub fn all_certificates_verified(&self) -> bool {
        self.levels
            .iter()
            .filter(|l| l.f_k.is_some())
            .all(|l| l.certificate_status == Some(CertificateStatus::Verified))
    }

    /// `k,f_k,status,flat` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,f_k,status,flat,wall_time_s\n");
        for l in &self.levels {
            out.push_str(&format!(
                "{},{},{},{},{:.3}\n",
                l.k,
                l.f_k.map(|f| format!("{f:e}")).unwrap_or_default(),
                l.status.map(|s| format!("{s:?}")).unwrap_or_default(),
                l.is_flat(),
                l.wall_time_s
            ));
        }
        out
    }
}

/// Solves one level and fills everything but the stop decision.
pub fn solve_level(
    inst: &PopInstance,
    k: usize,
    opts: &HierarchyOptions,
) -> Result<(LevelRecord, Option<Certificate>)> {
    let started = Instant::now();
    let rel = build_sos_relaxation(inst, k)?;
    let sol = match solve(&rel.problem, &opts.solver) {
        Ok(s) => s,
        Err(e) => {
            let wall = started.elapsed().as_secs_f64();
            return Ok((LevelRecord::failed(k, wall, None, e.to_string()), None));
        }
    };
    if !sol.status.is_usable() {
        let wall = started.elapsed().as_secs_f64();
        let msg = sol
            .message
            .clone()
            .unwrap_or_else(|| format!("solver stopped with status {:?}", sol.status));
        return Ok((LevelRecord::failed(k, wall, Some(sol.status), msg), None));
    }
    let f_k = rel.value(&sol);
    let mut error = None;
    let (flat, minimizer) = match rel.moments(&sol) {
        Ok(y) => {
            let report = flat_truncation(&y, inst, k);
            let minimizer = report.flat_at.map(|t| extract_minimizer(&y, inst, f_k, t));
            (Some(report), minimizer)
        }
        Err(e) => {
            error = Some(e.to_string());
            (None, None)
        }
    };
    let cert = extract_certificate(&rel, &sol, inst)?;
    let mut certificate_path = None;
    if let Some(dir) = &opts.certificate_dir {
        std::fs::create_dir_all(dir)?;
        let path = dir.join(format!("certificate_k{k}.json"));
        cert.write(&path)?;
        certificate_path = Some(path);
    }
    let record = LevelRecord {
        k,
        f_k: Some(f_k),
        status: Some(sol.status),
        iterations: sol.iterations,
        residuals: Some(sol.residuals),
        wall_time_s: started.elapsed().as_secs_f64(),
        flat,
        minimizer,
        certificate_status: Some(cert.status),
        certificate_residual: Some(cert.identity_residual),
        certificate_path,
        error,
    };
    Ok((record, Some(cert)))
}

/// Runs the hierarchy until flat truncation, stagnation or `k_max`.
///
/// A flat level stops the loop when its moment matrix has rank above one
/// or when the rank-one minimizer passes its checks; a flat rank-one level
/// whose extraction fails moves on to the next level. Solver failures are
/// recorded and the loop continues.
pub fn run_hierarchy(inst: &PopInstance, opts: &HierarchyOptions) -> Result<HierarchyRun> {
    let min_k = min_level(inst);
    let k_min = opts.k_min.unwrap_or(min_k);
    check_level(inst, k_min)?;
    let mut levels: Vec<LevelRecord> = Vec::new();
    let mut certificates = Vec::new();
    let mut stop_reason = StopReason::LevelCap;
    let mut minimizer = None;
    let mut stagnant = 0;
    for k in k_min..=opts.k_max.max(k_min) {
        let (record, cert) = solve_level(inst, k, opts)?;
        certificates.extend(cert);
        let prev = levels.iter().rev().find_map(|l| l.f_k);
        if let (Some(a), Some(b)) = (prev, record.f_k) {
            if (b - a).abs() < STAGNATION_TOL * (1.0 + a.abs()) {
                stagnant += 1;
            } else {
                stagnant = 0;
            }
        }
        let stop_flat = record.flat.as_ref().and_then(|r| r.flat_at).is_some_and(|t| {
            let rank = record.flat.as_ref().and_then(|r| r.rank_at(t)).unwrap_or(0);
            rank > 1 || record.minimizer.as_ref().is_some_and(MinimizerCheck::accepted)
        });
        if stop_flat {
            minimizer = record.minimizer.as_ref().and_then(|m| m.point.clone());
        }
        levels.push(record);
        if stop_flat {
            stop_reason = StopReason::Flat;
            break;
        }
        if stagnant >= 2 {
            stop_reason = StopReason::Stagnation;
            break;
        }
    }
    Ok(HierarchyRun {
        min_k,
        levels,
        stop_reason,
        minimizer,
        certificates,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polyring::parse_polynomial as pp;
    use crate::relaxation::augment_archimedean;

    #[test]
    fn convex_quadratic_stops_at_first_level() {
        let inst = PopInstance::unconstrained(pp("x1^2 - 2 * x1 + x2^2 + 4 * x2 + 5", 2).unwrap());
        let inst = augment_archimedean(&inst, 10.0).unwrap();
        let run = run_hierarchy(&inst, &HierarchyOptions::default()).unwrap();
        assert_eq!(run.stop_reason, StopReason::Flat);
        assert_eq!(run.levels.len(), 1);
        assert!(run.last_bound().unwrap().abs() < 1e-6);
        let u = run.minimizer.clone().unwrap();
        assert!((u[0] - 1.0).abs() < 1e-5 && (u[1] + 2.0).abs() < 1e-5);
        assert!(run.all_certificates_verified());
    }

    #[test]
    fn level_below_minimum_rejected() {
        let inst = PopInstance::unconstrained(pp("x1^4", 1).unwrap());
        let opts = HierarchyOptions {
            k_min: Some(1),
            ..Default::default()
        };
        let err = run_hierarchy(&inst, &opts).unwrap_err();
        assert!(err.to_string().contains("minimum admissible level 2"));
    }
}
