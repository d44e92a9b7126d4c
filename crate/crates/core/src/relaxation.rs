//! Level-`k` Lasserre relaxations as block-diagonal SDPs.
//!
//! The sum-of-squares form maximizes `gamma` subject to
//! `f - gamma = sum_i phi_i h_i + sum_j sigma_j g_j` with `g_0 = 1`,
//! `deg(phi_i h_i) <= 2k` and `deg(sigma_j g_j) <= 2k`. Each `sigma_j` is a
//! Gram form `b_j' G_j b_j` over the monomials of degree at most
//! `k - ceil(deg g_j / 2)`, and every monomial of degree at most `2k` gives one
//! coefficient-matching row. The moment form is its dual, built separately
//! over pseudo-moments `y_alpha`.

use crate::certify::MomentVector;
use crate::error::{Error, Result};
use crate::instance::PopInstance;
use crate::polyring::{ball_polynomial, Monomial, MonomialBasis, Polynomial};
use crate::sdp::{BlockEntry, ConstraintRow, SdpProblem, SdpSolution};

/// `ceil(deg / 2)`, with the zero polynomial counted as degree 0.
pub fn half_degree(p: &Polynomial) -> usize {
    (p.degree_or_zero() as usize).div_ceil(2)
}

/// Smallest admissible level: `ceil(max degree / 2)`, and at least 1.
pub fn min_level(inst: &PopInstance) -> usize {
    (inst.max_degree() as usize).div_ceil(2).max(1)
}

pub fn check_level(inst: &PopInstance, k: usize) -> Result<()> {
    let min_k = min_level(inst);
    if k < min_k {
        return Err(Error::LevelTooLow { k, min_k });
    }
    Ok(())
}

/// Appends the ball constraint `r - |x|^2 >= 0`.
pub fn augment_archimedean(inst: &PopInstance, r: f64) -> Result<PopInstance> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "ball constant must be positive, got {r}"
        )));
    }
    let mut g = inst.g.clone();
    g.push(ball_polynomial(inst.nvars(), r));
    PopInstance::new(inst.f.clone(), inst.h.clone(), g)
}

/// Where each piece of a level-`k` relaxation lives.
#[derive(Clone, Debug)]
pub struct TruncatedModuleLayout {
    pub k: usize,
    /// Gram bases, one per `g_j` with `g_0 = 1` first.
    pub gram_bases: Vec<MonomialBasis>,
    /// Bases of the free multipliers `phi_i`.
    pub multiplier_bases: Vec<MonomialBasis>,
    /// Offset of each `phi_i` among the free variables (`gamma` is variable 0).
    pub multiplier_offsets: Vec<usize>,
    /// Monomial matched by each kept equality row.
    pub row_monomials: Vec<Monomial>,
}

impl TruncatedModuleLayout {
    pub fn new(inst: &PopInstance, k: usize) -> Result<Self> {
        check_level(inst, k)?;
        let n = inst.nvars();
        let mut gram_bases = vec![MonomialBasis::new(n, k as u32)];
        for g in &inst.g {
            gram_bases.push(MonomialBasis::new(n, (k - half_degree(g)) as u32));
        }
        let mut multiplier_bases = Vec::new();
        let mut multiplier_offsets = Vec::new();
        let mut offset = 1;
        for h in &inst.h {
            let basis = MonomialBasis::new(n, (2 * k) as u32 - h.degree_or_zero());
            multiplier_offsets.push(offset);
            offset += basis.len();
            multiplier_bases.push(basis);
        }
        Ok(TruncatedModuleLayout {
            k,
            gram_bases,
            multiplier_bases,
            multiplier_offsets,
            row_monomials: Vec::new(),
        })
    }

    pub fn block_sizes(&self) -> Vec<usize> {
        self.gram_bases.iter().map(MonomialBasis::len).collect()
    }

    pub fn num_free(&self) -> usize {
        1 + self.multiplier_bases.iter().map(MonomialBasis::len).sum::<usize>()
    }
}

/// The sum-of-squares relaxation together with its layout.
#[derive(Clone, Debug)]
pub struct SosRelaxation {
    pub problem: SdpProblem,
    pub layout: TruncatedModuleLayout,
}

impl SosRelaxation {
    /// The bound `f_k`, i.e. the `gamma` of a solution.
    pub fn value(&self, sol: &SdpSolution) -> f64 {
        sol.z[0]
    }

    /// Pseudo-moments read from the row multipliers.
    pub fn moments(&self, sol: &SdpSolution) -> Result<MomentVector> {
        crate::sdp::extract_dual_moments(sol, &self.layout.row_monomials, self.layout.k)
    }

    /// Multiplier `phi_i` read from the free variables.
    pub fn multiplier(&self, sol: &SdpSolution, i: usize) -> Polynomial {
        let basis = &self.layout.multiplier_bases[i];
        let off = self.layout.multiplier_offsets[i];
        Polynomial::from_terms(
            basis.nvars(),
            basis
                .entries()
                .iter()
                .enumerate()
                .map(|(t, m)| (m.clone(), sol.z[off + t])),
        )
    }
}

/// Builds `max gamma s.t. f - gamma in <h>_2k + Q_k(g)` in the solver's
/// minimization form (objective `-gamma`).
pub fn build_sos_relaxation(inst: &PopInstance, k: usize) -> Result<SosRelaxation> {
    let mut layout = TruncatedModuleLayout::new(inst, k)?;
    let n = inst.nvars();
    let rows_basis = MonomialBasis::new(n, (2 * k) as u32);
    let mut rows: Vec<ConstraintRow> = rows_basis
        .entries()
        .iter()
        .map(|m| ConstraintRow {
            blocks: Vec::new(),
            free: Vec::new(),
            rhs: inst.f.coeff(m),
        })
        .collect();

    let one = Polynomial::constant(n, 1.0);
    for (block, basis) in layout.gram_bases.iter().enumerate() {
        let g = if block == 0 { &one } else { &inst.g[block - 1] };
        let b = basis.entries();
        for p in 0..b.len() {
            for q in p..b.len() {
                let bpq = b[p].mul(&b[q]);
                for (delta, c) in g.terms() {
                    let alpha = bpq.mul(delta);
                    let r = rows_basis.index_of(&alpha).expect("degree bounded by 2k");
                    rows[r].blocks.push(BlockEntry { block, i: p, j: q, v: c });
                }
            }
        }
    }
    for (i, h) in inst.h.iter().enumerate() {
        let off = layout.multiplier_offsets[i];
        for (t, beta) in layout.multiplier_bases[i].entries().iter().enumerate() {
            for (delta, c) in h.terms() {
                let r = rows_basis
                    .index_of(&beta.mul(delta))
                    .expect("degree bounded by 2k");
                rows[r].free.push((off + t, c));
            }
        }
    }
    rows[0].free.push((0, 1.0));

    let mut problem = SdpProblem::new(layout.block_sizes(), layout.num_free());
    problem.c_free[0] = -1.0;
    for (m, row) in rows_basis.entries().iter().zip(rows) {
        if row.is_structurally_zero() {
            continue;
        }
        for e in &row.blocks {
            debug_assert!(e.i <= e.j);
        }
        layout.row_monomials.push(m.clone());
        problem.rows.push(row);
    }
    Ok(SosRelaxation { problem, layout })
}

/// The moment relaxation and the index of each pseudo-moment.
#[derive(Clone, Debug)]
pub struct MomentRelaxation {
    pub problem: SdpProblem,
    /// Free variable `l` is the pseudo-moment `y` of `moment_basis[l]`.
    pub moment_basis: MonomialBasis,
    pub k: usize,
}

impl MomentRelaxation {
    pub fn value(&self, sol: &SdpSolution) -> f64 {
        sol.primal_objective
    }

    pub fn moments(&self, sol: &SdpSolution) -> MomentVector {
        MomentVector::new(
            self.moment_basis.nvars(),
            self.k,
            self.moment_basis
                .entries()
                .iter()
                .cloned()
                .zip(sol.z.iter().copied()),
        )
    }
}

/// Builds `min L_y(f) s.t. y_0 = 1, M_k(y) PSD, M_{k - d_j}(g_j y) PSD,
/// L_y(h_i x^a) = 0`.
///
/// Each PSD block `X_j` is tied to the pseudo-moments entry by entry:
/// `X_j[p][q] = sum_d g_d y_{b_p + b_q + d}`.
pub fn build_moment_relaxation(inst: &PopInstance, k: usize) -> Result<MomentRelaxation> {
    let layout = TruncatedModuleLayout::new(inst, k)?;
    let n = inst.nvars();
    let moment_basis = MonomialBasis::new(n, (2 * k) as u32);
    let mut problem = SdpProblem::new(layout.block_sizes(), moment_basis.len());
    for (m, c) in inst.f.terms() {
        let l = moment_basis.index_of(m).expect("deg f <= 2k");
        problem.c_free[l] = c;
    }
    let one = Polynomial::constant(n, 1.0);
    for (block, basis) in layout.gram_bases.iter().enumerate() {
        let g = if block == 0 { &one } else { &inst.g[block - 1] };
        let b = basis.entries();
        for p in 0..b.len() {
            for q in p..b.len() {
                let bpq = b[p].mul(&b[q]);
                let free = g
                    .terms()
                    .map(|(delta, c)| {
                        let l = moment_basis.index_of(&bpq.mul(delta)).expect("degree <= 2k");
                        (l, -c)
                    })
                    .collect();
                let v = if p == q { 1.0 } else { 0.5 };
                problem.rows.push(ConstraintRow {
                    blocks: vec![BlockEntry { block, i: p, j: q, v }],
                    free,
                    rhs: 0.0,
                });
            }
        }
    }
    problem.rows.push(ConstraintRow {
        blocks: Vec::new(),
        free: vec![(0, 1.0)],
        rhs: 1.0,
    });
    for h in &inst.h {
        let shifts = MonomialBasis::new(n, (2 * k) as u32 - h.degree_or_zero());
        for beta in shifts.entries() {
            let free = h
                .terms()
                .map(|(delta, c)| {
                    let l = moment_basis.index_of(&beta.mul(delta)).expect("degree <= 2k");
                    (l, c)
                })
                .collect();
            problem.rows.push(ConstraintRow {
                blocks: Vec::new(),
                free,
                rhs: 0.0,
            });
        }
    }
    Ok(MomentRelaxation {
        problem,
        moment_basis,
        k,
    })
}
