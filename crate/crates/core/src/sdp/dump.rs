//! SDPA sparse (`.dat-s`) export of the embedded real problem.
//!
//! The real standard form `min <C,X> s.t. <A_i,X> = b_i, X >= 0` is the SDPA
//! dual, so the file holds `c = b`, `F0 = -C` and `F_i = A_i`. Orthant
//! variables form one diagonal block with negative size.

use std::io::Write;

use super::ipm::RealSdp;
use super::{to_real, SdpProblem};
use crate::error::Result;

const ZERO_TOL: f64 = 0.0;

pub fn write_sdpa_sparse<W: Write>(problem: &SdpProblem, out: &mut W) -> Result<()> {
    problem.validate()?;
    let emb = to_real(problem);
    write_real(&emb.real, out)
}

pub(crate) fn write_real<W: Write>(p: &RealSdp, out: &mut W) -> Result<()> {
    let m = p.rows.len();
    let n_dense = p.dense_dims.len();
    let has_lin = p.n_lin > 0;
    let n_blocks = n_dense + usize::from(has_lin);
    writeln!(out, "* swipt embedded real SDP")?;
    writeln!(out, "{m}")?;
    writeln!(out, "{n_blocks}")?;
    let mut sizes: Vec<String> = p.dense_dims.iter().map(|d| d.to_string()).collect();
    if has_lin {
        sizes.push(format!("-{}", p.n_lin));
    }
    writeln!(out, "{}", sizes.join(" "))?;
    let cvec: Vec<String> = p.b.iter().map(|v| format!("{v:.17e}")).collect();
    writeln!(out, "{}", cvec.join(" "))?;

    let lin_block = n_dense + 1;
    for (blk, cm) in p.c_dense.iter().enumerate() {
        write_upper(out, 0, blk + 1, cm, -1.0)?;
    }
    for (k, v) in p.c_lin.iter().enumerate() {
        if v.abs() > ZERO_TOL {
            writeln!(out, "0 {lin_block} {} {} {:.17e}", k + 1, k + 1, -v)?;
        }
    }
    for (i, row) in p.rows.iter().enumerate() {
        for (blk, a) in &row.dense {
            write_upper(out, i + 1, blk + 1, a, 1.0)?;
        }
        for (k, v) in &row.lin {
            if v.abs() > ZERO_TOL {
                writeln!(out, "{} {lin_block} {} {} {:.17e}", i + 1, k + 1, k + 1, v)?;
            }
        }
    }
    Ok(())
}

fn write_upper<W: Write>(
    out: &mut W,
    mat: usize,
    blk: usize,
    a: &super::ipm::RMat,
    sign: f64,
) -> Result<()> {
    for r in 0..a.nrows() {
        for col in r..a.ncols() {
            let v = a[(r, col)];
            if v.abs() > ZERO_TOL {
                writeln!(out, "{mat} {blk} {} {} {:.17e}", r + 1, col + 1, sign * v)?;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::CMat;
    use crate::sdp::{Goal, LinearExpr, Sense};

    #[test]
    fn header_and_entries() {
        let mut p = SdpProblem::new(Goal::Minimize);
        let x = p.add_block("X", 1);
        let s = p.add_scalar("s");
        p.set_objective(LinearExpr::new().block(x, CMat::identity(1, 1)));
        p.add_constraint(
            "tr",
            LinearExpr::new()
                .block(x, CMat::identity(1, 1))
                .scalar(s, 1.0),
            Sense::Ge,
            1.0,
        );
        let mut buf = Vec::new();
        write_sdpa_sparse(&p, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[1], "1");
        assert_eq!(lines[2], "2");
        assert_eq!(lines[3], "2 -2");
        assert!(lines[4].starts_with("1.0"));
        // -C for the 2x2 embedding of the 1x1 identity (coefficient 1/2 per diagonal).
        assert!(lines.iter().any(|l| l.starts_with("0 1 1 1 -5.0")));
        assert!(lines.iter().any(|l| l.starts_with("1 2 2 2 -")));
    }
}
