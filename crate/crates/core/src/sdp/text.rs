//! Sparse text format for [`SdpProblem`].
//!
//! ```text
//! sdp 1
//! blocks 2 3 1          # number of blocks, then their sizes
//! free 1                # number of free variables
//! rows 4                # number of equality rows
//! cfree <l> <value>     # objective on a free variable
//! cblock <b> <i> <j> <value>
//! rhs <r> <value>
//! a <r> <b> <i> <j> <value>   # block coefficient of row r, i <= j
//! f <r> <l> <value>           # free coefficient of row r
//! ```
//!
//! Indices are zero-based, `#` starts a comment, and every value is written
//! in shortest round-trip form so that a write/read cycle is exact.

use std::fmt::Write as _;

use super::{BlockEntry, ConstraintRow, SdpProblem};
use crate::error::{Error, Result};
use crate::polyring::format_coeff;

pub fn write_sdp(p: &SdpProblem) -> String {
    let mut s = String::new();
    let sizes: Vec<String> = p.block_sizes.iter().map(|b| b.to_string()).collect();
    writeln!(s, "sdp 1").unwrap();
    writeln!(s, "blocks {} {}", p.block_sizes.len(), sizes.join(" ")).unwrap();
    writeln!(s, "free {}", p.num_free).unwrap();
    writeln!(s, "rows {}", p.rows.len()).unwrap();
    for (l, &c) in p.c_free.iter().enumerate() {
        if c != 0.0 {
            writeln!(s, "cfree {l} {}", format_coeff(c)).unwrap();
        }
    }
    for e in &p.c_blocks {
        writeln!(s, "cblock {} {} {} {}", e.block, e.i, e.j, format_coeff(e.v)).unwrap();
    }
    for (r, row) in p.rows.iter().enumerate() {
        if row.rhs != 0.0 {
            writeln!(s, "rhs {r} {}", format_coeff(row.rhs)).unwrap();
        }
    }
    for (r, row) in p.rows.iter().enumerate() {
        for e in &row.blocks {
            writeln!(s, "a {r} {} {} {} {}", e.block, e.i, e.j, format_coeff(e.v)).unwrap();
        }
        for &(l, v) in &row.free {
            writeln!(s, "f {r} {l} {}", format_coeff(v)).unwrap();
        }
    }
    s
}

pub fn read_sdp(text: &str) -> Result<SdpProblem> {
    let mut p = SdpProblem::default();
    let mut have = (false, false, false, false);
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |msg: &str| Error::Parse(format!("line {}: {msg}: '{raw}'", lineno + 1));
        let mut toks = line.split_whitespace();
        let key = toks.next().unwrap();
        let rest: Vec<&str> = toks.collect();
        let int = |i: usize| -> Result<usize> {
            rest.get(i)
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| err("expected a non-negative integer"))
        };
        let real = |i: usize| -> Result<f64> {
            rest.get(i)
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| err("expected a number"))
        };
        let need_header = |ok: bool| if ok { Ok(()) } else { Err(err("entry before header")) };
        match key {
            "sdp" => {
                if int(0)? != 1 {
                    return Err(err("unsupported version"));
                }
                have.0 = true;
            }
            "blocks" => {
                let nb = int(0)?;
                if rest.len() != nb + 1 {
                    return Err(err("block count does not match sizes"));
                }
                p.block_sizes = (1..=nb).map(int).collect::<Result<_>>()?;
                have.1 = true;
            }
            "free" => {
                p.num_free = int(0)?;
                p.c_free = vec![0.0; p.num_free];
                have.2 = true;
            }
            "rows" => {
                p.rows = vec![ConstraintRow::default(); int(0)?];
                have.3 = true;
            }
            "cfree" => {
                need_header(have.2)?;
                let l = int(0)?;
                *p.c_free.get_mut(l).ok_or_else(|| err("free index out of range"))? = real(1)?;
            }
            "cblock" => {
                need_header(have.1)?;
                p.c_blocks.push(BlockEntry {
                    block: int(0)?,
                    i: int(1)?,
                    j: int(2)?,
                    v: real(3)?,
                });
            }
            "rhs" => {
                need_header(have.3)?;
                let r = int(0)?;
                p.rows.get_mut(r).ok_or_else(|| err("row out of range"))?.rhs = real(1)?;
            }
            "a" => {
                need_header(have.1 && have.3)?;
                let r = int(0)?;
                let e = BlockEntry {
                    block: int(1)?,
                    i: int(2)?,
                    j: int(3)?,
                    v: real(4)?,
                };
                p.rows.get_mut(r).ok_or_else(|| err("row out of range"))?.blocks.push(e);
            }
            "f" => {
                need_header(have.2 && have.3)?;
                let r = int(0)?;
                let entry = (int(1)?, real(2)?);
                p.rows.get_mut(r).ok_or_else(|| err("row out of range"))?.free.push(entry);
            }
            _ => return Err(err("unknown record")),
        }
    }
    if !(have.0 && have.1 && have.2 && have.3) {
        return Err(Error::Parse("missing sdp/blocks/free/rows header".into()));
    }
    p.validate().map_err(|e| Error::Parse(e.to_string()))?;
    Ok(p)
}
