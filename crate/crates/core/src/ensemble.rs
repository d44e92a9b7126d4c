//! Random-instance experiment: how often do the local optimality conditions
//! and finite convergence of the hierarchy hold for generic data?

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::hierarchy::{run_hierarchy, HierarchyOptions, StopReason};
use crate::instance::{InstanceFile, InstanceMetadata, PopInstance};
use crate::localopt::{audit, refine_kkt_point, AuditOptions, LocalReport, Refinement};
use crate::polyring::{MonomialBasis, Polynomial};
use crate::relaxation::{augment_archimedean, min_level};
use crate::sdp::SolverOptions;

/// Constraints within this relative band of zero at an extracted minimizer
/// are treated as active when polishing it.
pub const REFINE_ACTIVE_TOL: f64 = 1e-4;
/// Largest move the polish may make.
pub const REFINE_MAX_MOVE: f64 = 1e-3;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub nvars: usize,
    /// Degree of the random objective.
    pub degree: u32,
    /// Number of random affine equalities.
    pub equalities: usize,
    /// Ball constant `R` of `R - |x|^2 >= 0`.
    pub ball_r: f64,
    pub count: usize,
    pub seed: u64,
    /// Levels tried: `min_k ..= min_k + level_slack`.
    pub level_slack: usize,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        EnsembleConfig {
            nvars: 2,
            degree: 2,
            equalities: 1,
            ball_r: 1.0,
            count: 200,
            seed: 0,
            level_slack: 2,
        }
    }
}

/// Outcome for one sampled instance.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EnsembleRecord {
    pub index: usize,
    pub instance: InstanceFile,
    pub min_k: usize,
    pub bounds: Vec<(usize, f64)>,
    pub stop_reason: Option<StopReason>,
    pub flat_level: Option<usize>,
    pub minimizer: Option<Vec<f64>>,
    pub certificates_verified: bool,
    /// Newton polish of the extracted minimizer; the audit runs at the
    /// polished point when this succeeds.
    pub refined: Option<Refinement>,
    pub audit: Option<LocalReport>,
    pub error: Option<String>,
}

impl EnsembleRecord {
    pub fn cqc(&self) -> bool {
        self.audit.as_ref().is_some_and(|a| a.kkt && a.cqc.holds)
    }

    pub fn scc(&self) -> bool {
        self.audit.as_ref().is_some_and(|a| a.kkt && a.scc.holds)
    }

    pub fn sosc(&self) -> bool {
        self.audit.as_ref().is_some_and(|a| a.kkt && a.second_order.sosc.holds())
    }

    /// Flat, with a minimizer whose audit passes every condition.
    pub fn all_good(&self) -> bool {
        self.flat_level.is_some() && self.cqc() && self.scc() && self.sosc()
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EnsembleSummary {
    pub config: EnsembleConfig,
    pub count: usize,
    /// Fractions over all `count` instances; a missing minimizer counts as
    /// a failure of every local condition.
    pub flat_fraction: f64,
    pub minimizer_fraction: f64,
    pub cqc_fraction: f64,
    pub scc_fraction: f64,
    pub sosc_fraction: f64,
    pub certificate_fraction: f64,
    pub max_level_used: Option<usize>,
    pub records: Vec<EnsembleRecord>,
}

impl EnsembleSummary {
    /// Instances where something did not hold, for inspection.
    pub fn failures(&self) -> impl Iterator<Item = &EnsembleRecord> {
        self.records.iter().filter(|r| !r.all_good())
    }

    pub fn table(&self) -> String {
        let c = &self.config;
        let mut s = format!(
            "random ensemble: n = {}, deg f = {}, {} equalit{}, ball R = {}, count = {}, seed = {}\n",
            c.nvars,
            c.degree,
            c.equalities,
            if c.equalities == 1 { "y" } else { "ies" },
            c.ball_r,
            self.count,
            c.seed
        );
        let rows = [
            ("flat truncation", self.flat_fraction),
            ("minimizer extracted", self.minimizer_fraction),
            ("CQC", self.cqc_fraction),
            ("SCC", self.scc_fraction),
            ("SOSC", self.sosc_fraction),
            ("certificates verified", self.certificate_fraction),
        ];
        for (name, v) in rows {
            s.push_str(&format!("  {name:<22} {v:.4}\n"));
        }
        s.push_str(&format!(
            "  {:<22} {}\n",
            "max level used",
            self.max_level_used.map(|k| k.to_string()).unwrap_or("-".into())
        ));
        s
    }
}

fn gaussian_poly(rng: &mut ChaCha8Rng, nvars: usize, degree: u32) -> Polynomial {
    let basis = MonomialBasis::new(nvars, degree);
    Polynomial::from_terms(
        nvars,
        basis
            .entries()
            .iter()
            .map(|m| (m.clone(), rng.sample::<f64, _>(StandardNormal))),
    )
}

/// Samples instance `index`: standard normal objective coefficients, and
/// affine equalities resampled until their hyperplane meets the open ball,
/// so that every instance is feasible.
pub fn sample_instance(cfg: &EnsembleConfig, index: usize) -> PopInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(index as u64);
    let f = gaussian_poly(&mut rng, cfg.nvars, cfg.degree);
    let mut h = Vec::new();
    while h.len() < cfg.equalities {
        let p = gaussian_poly(&mut rng, cfg.nvars, 1);
        let a: f64 = (0..cfg.nvars)
            .map(|i| p.coeff(&crate::polyring::Monomial::var(cfg.nvars, i)).powi(2))
            .sum::<f64>()
            .sqrt();
        let b = p.coeff(&crate::polyring::Monomial::one(cfg.nvars));
        if a > 0.0 && b.abs() / a < cfg.ball_r.sqrt() {
            h.push(p);
        }
    }
    let inst = PopInstance::new(f, h, vec![]).expect("shared nvars");
    augment_archimedean(&inst, cfg.ball_r).expect("positive radius")
}

fn run_one(cfg: &EnsembleConfig, index: usize) -> EnsembleRecord {
    let inst = sample_instance(cfg, index);
    let min_k = min_level(&inst);
    let instance = InstanceFile::from_instance(
        &inst,
        InstanceMetadata {
            name: Some(format!("ensemble-{}-{index}", cfg.seed)),
            ball_r: Some(cfg.ball_r),
            ..Default::default()
        },
    );
    let opts = HierarchyOptions {
        k_min: Some(min_k),
        k_max: min_k + cfg.level_slack,
        solver: SolverOptions::default(),
        certificate_dir: None,
    };
    let mut record = EnsembleRecord {
        index,
        instance,
        min_k,
        bounds: Vec::new(),
        stop_reason: None,
        flat_level: None,
        minimizer: None,
        certificates_verified: false,
        refined: None,
        audit: None,
        error: None,
    };
    let run = match run_hierarchy(&inst, &opts) {
        Ok(r) => r,
        Err(e) => {
            record.error = Some(e.to_string());
            return record;
        }
    };
    record.bounds = run.bounds();
    record.stop_reason = Some(run.stop_reason);
    record.flat_level = run.flat_level();
    record.certificates_verified = run.all_certificates_verified();
    record.minimizer = run.minimizer.clone();
    if let Some(u) = &run.minimizer {
        record.refined = refine_kkt_point(&inst, u, REFINE_ACTIVE_TOL, REFINE_MAX_MOVE);
        let at = record.refined.as_ref().map_or(u, |r| &r.u);
        match audit(&inst, at, &AuditOptions::default()) {
            Ok(a) => record.audit = Some(a),
            Err(e) => record.error = Some(e.to_string()),
        }
    }
    record
}

/// Runs the experiment on a worker pool; records are ordered by index and
/// do not depend on the number of threads.
pub fn run_ensemble(cfg: &EnsembleConfig) -> EnsembleSummary {
    let records: Vec<EnsembleRecord> = (0..cfg.count)
        .into_par_iter()
        .map(|i| run_one(cfg, i))
        .collect();
    let frac = |pred: &dyn Fn(&EnsembleRecord) -> bool| {
        if records.is_empty() {
            0.0
        } else {
            records.iter().filter(|r| pred(r)).count() as f64 / records.len() as f64
        }
    };
    EnsembleSummary {
        config: cfg.clone(),
        count: records.len(),
        flat_fraction: frac(&|r| r.flat_level.is_some()),
        minimizer_fraction: frac(&|r| r.minimizer.is_some()),
        cqc_fraction: frac(&EnsembleRecord::cqc),
        scc_fraction: frac(&EnsembleRecord::scc),
        sosc_fraction: frac(&EnsembleRecord::sosc),
        certificate_fraction: frac(&|r| r.certificates_verified),
        max_level_used: records.iter().filter_map(|r| r.bounds.last().map(|b| b.0)).max(),
        records,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sampling_is_reproducible_and_feasible() {
        let cfg = EnsembleConfig::default();
        for i in 0..20 {
            let a = sample_instance(&cfg, i);
            assert_eq!(a, sample_instance(&cfg, i));
            assert_eq!(a.h.len(), 1);
            assert_eq!(a.g.len(), 1);
        }
        assert_ne!(sample_instance(&cfg, 0), sample_instance(&cfg, 1));
    }

    #[test]
    fn empty_request() {
        let cfg = EnsembleConfig {
            count: 0,
            ..Default::default()
        };
        let s = run_ensemble(&cfg);
        assert_eq!(s.count, 0);
        assert!(s.records.is_empty());
        assert_eq!(s.max_level_used, None);
    }
}
