use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::polyring::{Monomial, MonomialBasis, Polynomial};
use crate::sdp::SdpSolution;

/// Truncated pseudo-moment sequence `y_alpha`, `deg alpha <= 2k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentVector {
    pub nvars: usize,
    pub k: usize,
    #[serde(with = "moment_map")]
    pub y: BTreeMap<Monomial, f64>,
}

impl MomentVector {
    pub fn new(nvars: usize, k: usize, y: impl IntoIterator<Item = (Monomial, f64)>) -> Self {
        MomentVector {
            nvars,
            k,
            y: y.into_iter().collect(),
        }
    }

    /// Moments of the point mass at `u`, up to degree `2k`.
    pub fn dirac(u: &[f64], k: usize) -> Self {
        Self::atomic(&[(1.0, u.to_vec())], k)
    }

    /// Moments of `sum w_i delta_{u_i}`.
    pub fn atomic(atoms: &[(f64, Vec<f64>)], k: usize) -> Self {
        let n = atoms[0].1.len();
        let basis = MonomialBasis::new(n, (2 * k) as u32);
        let y = basis.entries().iter().map(|m| {
            let v = atoms.iter().map(|(w, u)| w * m.eval(u)).sum();
            (m.clone(), v)
        });
        Self::new(n, k, y)
    }

    pub fn get(&self, m: &Monomial) -> f64 {
        self.y.get(m).copied().unwrap_or(0.0)
    }

    pub fn y0(&self) -> f64 {
        self.get(&Monomial::one(self.nvars))
    }

    /// `L_y(p) = sum_alpha p_alpha y_alpha`.
    pub fn apply(&self, p: &Polynomial) -> f64 {
        p.terms().map(|(m, c)| c * self.get(m)).sum()
    }

    /// `M_t(y)` indexed by the monomials of degree at most `t`.
    pub fn moment_matrix(&self, t: usize) -> DMatrix<f64> {
        let basis = MonomialBasis::new(self.nvars, t as u32);
        let b = basis.entries();
        DMatrix::from_fn(b.len(), b.len(), |p, q| self.get(&b[p].mul(&b[q])))
    }

    /// Localizing matrix `(M_t(g y))_{pq} = sum_d g_d y_{b_p + b_q + d}`.
    pub fn localizing_matrix(&self, g: &Polynomial, t: usize) -> DMatrix<f64> {
        let basis = MonomialBasis::new(self.nvars, t as u32);
        let b = basis.entries();
        DMatrix::from_fn(b.len(), b.len(), |p, q| {
            let bpq = b[p].mul(&b[q]);
            g.terms().map(|(d, c)| c * self.get(&bpq.mul(d))).sum()
        })
    }
}

/// Reads the equality-row multipliers of a sum-of-squares solve as
/// pseudo-moments, normalized so that `y_0 = 1`.
///
/// `row_monomials[r]` is the monomial whose coefficient row `r` matches.
pub fn extract_dual_moments(
    sol: &SdpSolution,
    row_monomials: &[Monomial],
    k: usize,
) -> Result<MomentVector> {
    let Some(first) = row_monomials.first() else {
        return Err(Error::DegenerateDual(0.0));
    };
    let nvars = first.nvars();
    let r0 = row_monomials
        .iter()
        .position(Monomial::is_one)
        .ok_or(Error::DegenerateDual(0.0))?;
    let y0 = sol.y[r0];
    let ymax = sol.y.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if !(y0.abs() > 1e-12 * ymax.max(f64::MIN_POSITIVE)) {
        return Err(Error::DegenerateDual(y0));
    }
    let mut y: BTreeMap<Monomial, f64> = row_monomials
        .iter()
        .cloned()
        .zip(sol.y.iter().map(|v| v / y0))
        .collect();
    y.insert(Monomial::one(nvars), 1.0);
    Ok(MomentVector { nvars, k, y })
}

mod moment_map {
    use super::*;
    use serde::{Deserializer, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Entry {
        exponents: Vec<u32>,
        value: f64,
    }

    pub fn serialize<S: Serializer>(y: &BTreeMap<Monomial, f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
        let v: Vec<Entry> = y
            .iter()
            .map(|(m, &value)| Entry {
                exponents: m.exponents().to_vec(),
                value,
            })
            .collect();
        v.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<BTreeMap<Monomial, f64>, D::Error> {
        let v: Vec<Entry> = Vec::deserialize(d)?;
        Ok(v.into_iter().map(|e| (Monomial::new(e.exponents), e.value)).collect())
    }
}
