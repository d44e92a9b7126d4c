use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::exact::{Dyadic, ExactPoly};
use crate::error::{Error, Result};
use crate::instance::PopInstance;
use crate::polyring::{Monomial, Polynomial};
use crate::relaxation::SosRelaxation;
use crate::sdp::SdpSolution;

/// Relative tolerance of certificate verification.
pub const CERT_TOL: f64 = 1e-6;

/// Gram matrix of one SOS multiplier `sigma_j = b' G b`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GramBlock {
    /// Index into `g`, with 0 standing for the constant `g_0 = 1`.
    pub constraint: usize,
    pub basis: Vec<Monomial>,
    pub matrix: Vec<Vec<f64>>,
}

impl GramBlock {
    pub fn to_matrix(&self) -> DMatrix<f64> {
        let n = self.basis.len();
        DMatrix::from_fn(n, n, |i, j| self.matrix[i][j])
    }

    /// `b' G b` in floating point.
    pub fn sigma(&self, nvars: usize) -> Polynomial {
        let mut terms = Vec::new();
        for (p, bp) in self.basis.iter().enumerate() {
            for (q, bq) in self.basis.iter().enumerate() {
                terms.push((bp.mul(bq), self.matrix[p][q]));
            }
        }
        Polynomial::from_terms(nvars, terms)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum CertificateStatus {
    Verified,
    Unverified,
}

/// `f - gamma = sum_i phi_i h_i + sum_j sigma_j g_j`, with each `sigma_j`
/// given both as a Gram matrix and as an explicit sum of squares.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub nvars: usize,
    pub level: usize,
    pub gamma: f64,
    pub f: Polynomial,
    pub h: Vec<Polynomial>,
    pub g: Vec<Polynomial>,
    pub phi: Vec<Polynomial>,
    pub grams: Vec<GramBlock>,
    /// Per block, polynomials `p_l` with `sigma_j = sum_l p_l^2`.
    pub sos_decompositions: Vec<Vec<Polynomial>>,
    /// Sum of the negative Gram eigenvalues removed per block.
    pub clipped_mass: Vec<f64>,
    pub identity_residual: f64,
    pub tolerance: f64,
    pub status: CertificateStatus,
}

/// Outcome of an exact re-expansion.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verification {
    pub passed: bool,
    /// Largest of the two residuals below.
    pub residual: f64,
    /// Max coefficient of `f - gamma - sum phi h - sum (b'Gb) g`.
    pub gram_residual: f64,
    /// Same with `sigma_j` replaced by its stored squares.
    pub decomposition_residual: f64,
    pub min_gram_eigenvalue: f64,
    pub threshold: f64,
}

impl Certificate {
    pub fn instance(&self) -> Result<PopInstance> {
        PopInstance::new(self.f.clone(), self.h.clone(), self.g.clone())
    }

    pub fn is_verified(&self) -> bool {
        self.status == CertificateStatus::Verified
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("certificate serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Eigen-decomposes a symmetric matrix, clipping negative eigenvalues.
/// Returns the repaired matrix, the factors `sqrt(lambda_l) v_l` and the
/// clipped mass.
fn clip_psd(x: &DMatrix<f64>) -> (DMatrix<f64>, Vec<Vec<f64>>, f64) {
    let sym = (x + x.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let n = x.nrows();
    let mut repaired = DMatrix::zeros(n, n);
    let mut factors = Vec::new();
    let mut clipped = 0.0;
    for l in 0..n {
        let lam = eig.eigenvalues[l];
        if lam <= 0.0 {
            clipped -= lam;
            continue;
        }
        let v = eig.eigenvectors.column(l);
        repaired += v * v.transpose() * lam;
        let s = lam.sqrt();
        factors.push(v.iter().map(|c| c * s).collect());
    }
    (repaired, factors, clipped)
}

/// Reads a certificate off a solved SOS relaxation and verifies it.
pub fn extract_certificate(
    rel: &SosRelaxation,
    sol: &SdpSolution,
    inst: &PopInstance,
) -> Result<Certificate> {
    if !sol.status.is_usable() {
        return Err(Error::Solver(format!(
            "no certificate from a solve with status {:?}",
            sol.status
        )));
    }
    let n = inst.nvars();
    let phi = (0..inst.h.len()).map(|i| rel.multiplier(sol, i)).collect();
    let mut grams = Vec::new();
    let mut sos_decompositions = Vec::new();
    let mut clipped_mass = Vec::new();
    for (j, basis) in rel.layout.gram_bases.iter().enumerate() {
        let (g, factors, clipped) = clip_psd(&sol.x[j]);
        let b = basis.entries();
        let squares = factors
            .iter()
            .map(|v| Polynomial::from_terms(n, b.iter().cloned().zip(v.iter().copied())))
            .filter(|p| !p.is_zero())
            .collect();
        grams.push(GramBlock {
            constraint: j,
            basis: b.to_vec(),
            matrix: (0..g.nrows())
                .map(|p| (0..g.ncols()).map(|q| g[(p, q)]).collect())
                .collect(),
        });
        sos_decompositions.push(squares);
        clipped_mass.push(clipped);
    }
    let mut cert = Certificate {
        nvars: n,
        level: rel.layout.k,
        gamma: rel.value(sol),
        f: inst.f.clone(),
        h: inst.h.clone(),
        g: inst.g.clone(),
        phi,
        grams,
        sos_decompositions,
        clipped_mass,
        identity_residual: f64::NAN,
        tolerance: CERT_TOL,
        status: CertificateStatus::Unverified,
    };
    let v = verify_certificate(&cert, inst);
    cert.identity_residual = v.residual;
    cert.status = if v.passed {
        CertificateStatus::Verified
    } else {
        CertificateStatus::Unverified
    };
    Ok(cert)
}

fn add_product(acc: &mut ExactPoly, a: &[(Monomial, Dyadic)], b: &[(Monomial, Dyadic)], sign: &Dyadic) {
    for (ma, ca) in a {
        let sa = ca.mul(sign);
        for (mb, cb) in b {
            acc.add_term(ma.mul(mb), &sa.mul(cb));
        }
    }
}

fn exact_terms(p: &Polynomial) -> Vec<(Monomial, Dyadic)> {
    p.terms().map(|(m, c)| (m.clone(), Dyadic::from_f64(c))).collect()
}

fn constraint_poly(cert_g: &[Polynomial], nvars: usize, j: usize) -> Option<Polynomial> {
    if j == 0 {
        Some(Polynomial::constant(nvars, 1.0))
    } else {
        cert_g.get(j - 1).cloned()
    }
}

/// Re-expands the certificate identity with exact dyadic arithmetic on the
/// stored `f64` values and compares against `f - gamma` of `inst`.
///
/// Passes iff both the Gram and the square-decomposition residuals are at
/// most `tolerance * (1 + max|f_alpha|)`, every Gram matrix is PSD to the same
/// threshold, and the certificate's constraints match `inst`.
pub fn verify_certificate(cert: &Certificate, inst: &PopInstance) -> Verification {
    let n = inst.nvars();
    let threshold = cert.tolerance * (1.0 + inst.f.max_abs_coeff());
    let fail = |msg_residual: f64| Verification {
        passed: false,
        residual: msg_residual,
        gram_residual: msg_residual,
        decomposition_residual: msg_residual,
        min_gram_eigenvalue: f64::NAN,
        threshold,
    };
    let shapes_ok = cert.nvars == n
        && cert.phi.len() == inst.h.len()
        && cert.phi.iter().all(|p| p.nvars() == n)
        && cert.grams.len() == cert.sos_decompositions.len()
        && cert.grams.iter().all(|b| {
            b.constraint <= inst.g.len()
                && b.matrix.len() == b.basis.len()
                && b.matrix.iter().all(|r| r.len() == b.basis.len())
                && b.basis.iter().all(|m| m.nvars() == n)
                && b.matrix.iter().flatten().all(|v| v.is_finite())
        })
        && cert.gamma.is_finite();
    if !shapes_ok {
        return fail(f64::INFINITY);
    }

    let minus = Dyadic::from_f64(-1.0);
    let mut base = ExactPoly::new();
    for (m, c) in inst.f.terms() {
        base.add_term(m.clone(), &Dyadic::from_f64(c));
    }
    base.add_term(Monomial::one(n), &Dyadic::from_f64(-cert.gamma));
    for (phi, h) in cert.phi.iter().zip(&inst.h) {
        add_product(&mut base, &exact_terms(phi), &exact_terms(h), &minus);
    }

    let mut gram_side = base.clone();
    let mut decomp_side = base;
    let mut min_eig = f64::INFINITY;
    for (block, squares) in cert.grams.iter().zip(&cert.sos_decompositions) {
        let g = constraint_poly(&inst.g, n, block.constraint).expect("checked above");
        let gt = exact_terms(&g);

        let mut sigma = Vec::new();
        for (p, bp) in block.basis.iter().enumerate() {
            for (q, bq) in block.basis.iter().enumerate() {
                sigma.push((bp.mul(bq), Dyadic::from_f64(block.matrix[p][q])));
            }
        }
        add_product(&mut gram_side, &sigma, &gt, &minus);
        if !block.matrix.is_empty() {
            let eig = block.to_matrix().symmetric_eigenvalues();
            min_eig = min_eig.min(eig.min());
        }

        let mut sq = ExactPoly::new();
        for p in squares {
            let pt = exact_terms(p);
            add_product(&mut sq, &pt, &pt, &Dyadic::from_f64(1.0));
        }
        let sq: Vec<_> = sq.terms().map(|(m, c)| (m.clone(), c.clone())).collect();
        add_product(&mut decomp_side, &sq, &gt, &minus);
    }
    // Asymmetric stored Gram matrices are not PSD certificates.
    let asym = cert
        .grams
        .iter()
        .flat_map(|b| {
            let m = &b.matrix;
            (0..m.len()).flat_map(move |p| (0..p).map(move |q| (m[p][q] - m[q][p]).abs()))
        })
        .fold(0.0, f64::max);

    let gram_residual = gram_side.max_abs_coeff().max(asym);
    let decomposition_residual = decomp_side.max_abs_coeff();
    let residual = gram_residual.max(decomposition_residual);
    let min_gram_eigenvalue = if min_eig.is_finite() { min_eig } else { 0.0 };
    Verification {
        passed: residual <= threshold && min_gram_eigenvalue >= -threshold,
        residual,
        gram_residual,
        decomposition_residual,
        min_gram_eigenvalue,
        threshold,
    }
}
