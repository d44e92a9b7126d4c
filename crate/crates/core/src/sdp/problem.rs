use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One stored entry of a symmetric matrix: `A[i][j] = A[j][i] = v`, `i <= j`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockEntry {
    pub block: usize,
    pub i: usize,
    pub j: usize,
    pub v: f64,
}

/// Equality constraint `sum_b <A_b, X_b> + sum_l B_l z_l = rhs`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ConstraintRow {
    pub blocks: Vec<BlockEntry>,
    pub free: Vec<(usize, f64)>,
    pub rhs: f64,
}

impl ConstraintRow {
    pub fn is_structurally_zero(&self) -> bool {
        self.blocks.iter().all(|e| e.v == 0.0) && self.free.iter().all(|(_, v)| *v == 0.0)
    }
}

/// Block-diagonal SDP with free variables, in the form
///
/// ```text
/// minimize    sum_b <C_b, X_b> + c' z
/// subject to  sum_b <A_rb, X_b> + (B z)_r = b_r   for every row r
///             X_b PSD,  z free
/// ```
///
/// Its dual is `maximize b'y  s.t.  C_b - sum_r y_r A_rb = S_b PSD, B'y = c`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SdpProblem {
    pub block_sizes: Vec<usize>,
    pub num_free: usize,
    /// Objective matrices, as upper-triangle entries tagged with their block.
    pub c_blocks: Vec<BlockEntry>,
    pub c_free: Vec<f64>,
    pub rows: Vec<ConstraintRow>,
}

impl SdpProblem {
    pub fn new(block_sizes: Vec<usize>, num_free: usize) -> Self {
        SdpProblem {
            block_sizes,
            num_free,
            c_blocks: Vec::new(),
            c_free: vec![0.0; num_free],
            rows: Vec::new(),
        }
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn rhs(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.rhs).collect()
    }

    /// Checks indices, triangle convention and finiteness.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidProblem(msg));
        if self.c_free.len() != self.num_free {
            return bad(format!(
                "objective has {} free coefficients for {} free variables",
                self.c_free.len(),
                self.num_free
            ));
        }
        if self.block_sizes.iter().any(|&s| s == 0) {
            return bad("zero-sized block".into());
        }
        let check_entry = |e: &BlockEntry, what: &str| -> Result<()> {
            let Some(&size) = self.block_sizes.get(e.block) else {
                return bad(format!("{what}: block {} out of range", e.block));
            };
            if e.i > e.j {
                return bad(format!("{what}: entry ({}, {}) below the diagonal", e.i, e.j));
            }
            if e.j >= size {
                return bad(format!("{what}: entry ({}, {}) outside block of size {size}", e.i, e.j));
            }
            if !e.v.is_finite() {
                return bad(format!("{what}: non-finite value"));
            }
            Ok(())
        };
        for e in &self.c_blocks {
            check_entry(e, "objective")?;
        }
        if self.c_free.iter().any(|v| !v.is_finite()) {
            return bad("non-finite free objective".into());
        }
        for (r, row) in self.rows.iter().enumerate() {
            for e in &row.blocks {
                check_entry(e, &format!("row {r}"))?;
            }
            for &(l, v) in &row.free {
                if l >= self.num_free || !v.is_finite() {
                    return bad(format!("row {r}: bad free entry ({l}, {v})"));
                }
            }
            if !row.rhs.is_finite() {
                return bad(format!("row {r}: non-finite right-hand side"));
            }
        }
        Ok(())
    }

    /// Multiplies the objective (both parts) by `s`.
    pub fn scale_objective(&mut self, s: f64) {
        for e in &mut self.c_blocks {
            e.v *= s;
        }
        for c in &mut self.c_free {
            *c *= s;
        }
    }
}
