//! Plain-text dump/load of [`SdpProblem`] for debugging regressions.
//!
//! Line-oriented format, whitespace-separated, `#` comments allowed:
//!
//! ```text
//! sdp 1
//! sense max            # or min
//! blocks 2 16 16       # count then dimensions
//! free 1
//! objective block <b>  # followed by dim*dim lines "re im" (row major)
//! objective free <i> <coeff>
//! constraint <sense> <rhs>   # sense in {<=, ==, >=}; starts a constraint
//! block <b>            # coefficient block, dim*dim lines "re im"
//! freecoef <i> <coeff>
//! end
//! ```

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{ConstraintSense, SdpConstraint, SdpError, SdpProblem};

impl SdpProblem {
    /// Serialize to the documented plain-text format.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        out.push_str("sdp 1\n");
        out.push_str(if self.maximize {
            "sense max\n"
        } else {
            "sense min\n"
        });
        out.push_str(&format!("blocks {}", self.block_dims.len()));
        for d in &self.block_dims {
            out.push_str(&format!(" {d}"));
        }
        out.push('\n');
        out.push_str(&format!("free {}\n", self.n_free));
        for (b, cb) in self.obj_blocks.iter().enumerate() {
            if let Some(mat) = cb {
                out.push_str(&format!("objective block {b}\n"));
                dump_matrix(&mut out, mat);
            }
        }
        for (i, g) in self.obj_free.iter().enumerate() {
            if *g != 0.0 {
                out.push_str(&format!("objective free {i} {g:e}\n"));
            }
        }
        for c in &self.constraints {
            out.push_str(&format!("constraint {} {:e}\n", c.sense.tag(), c.rhs));
            for (b, mat) in c.blocks.iter().enumerate() {
                if let Some(mat) = mat {
                    out.push_str(&format!("block {b}\n"));
                    dump_matrix(&mut out, mat);
                }
            }
            for (i, d) in c.free.iter().enumerate() {
                if *d != 0.0 {
                    out.push_str(&format!("freecoef {i} {d:e}\n"));
                }
            }
            out.push_str("end\n");
        }
        out
    }

    /// Parse the plain-text format produced by [`SdpProblem::dump`].
    pub fn parse(text: &str) -> Result<Self, SdpError> {
        let mut lines = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or("").trim())
            .filter(|l| !l.is_empty());
        let fail = |msg: &str| SdpError::Format(msg.to_string());

        let header = lines.next().ok_or_else(|| fail("empty input"))?;
        if header != "sdp 1" {
            return Err(fail("expected header 'sdp 1'"));
        }
        let sense_line = lines.next().ok_or_else(|| fail("missing sense"))?;
        let maximize = match sense_line {
            "sense max" => true,
            "sense min" => false,
            _ => return Err(fail("sense must be 'sense max' or 'sense min'")),
        };
        let blocks_line = lines.next().ok_or_else(|| fail("missing blocks"))?;
        let mut toks = blocks_line.split_whitespace();
        if toks.next() != Some("blocks") {
            return Err(fail("expected 'blocks'"));
        }
        let nb: usize = toks
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| fail("bad block count"))?;
        let dims: Vec<usize> = toks
            .map(|t| t.parse().map_err(|_| fail("bad block dimension")))
            .collect::<Result<_, _>>()?;
        if dims.len() != nb {
            return Err(fail("block count does not match dimensions"));
        }
        let free_line = lines.next().ok_or_else(|| fail("missing free"))?;
        let n_free: usize = free_line
            .strip_prefix("free ")
            .and_then(|t| t.trim().parse().ok())
            .ok_or_else(|| fail("bad free count"))?;

        let mut problem = SdpProblem::new(dims.clone(), n_free, maximize);
        let mut pending: Option<SdpConstraint> = None;

        let read_matrix = |lines: &mut dyn Iterator<Item = &str>,
                           dim: usize|
         -> Result<DMatrix<Complex64>, SdpError> {
            let mut mat = DMatrix::<Complex64>::zeros(dim, dim);
            for i in 0..dim {
                for j in 0..dim {
                    let line = lines.next().ok_or_else(|| fail("matrix data truncated"))?;
                    let mut t = line.split_whitespace();
                    let re: f64 = t
                        .next()
                        .and_then(|v| v.parse().ok())
                        .ok_or_else(|| fail("bad matrix entry"))?;
                    let im: f64 = t
                        .next()
                        .and_then(|v| v.parse().ok())
                        .ok_or_else(|| fail("bad matrix entry"))?;
                    mat[(i, j)] = Complex64::new(re, im);
                }
            }
            Ok(mat)
        };

        while let Some(line) = lines.next() {
            if let Some(rest) = line.strip_prefix("objective block ") {
                let b: usize = rest
                    .trim()
                    .parse()
                    .map_err(|_| fail("bad objective block"))?;
                let mat = read_matrix(&mut lines, dims[b])?;
                problem.set_objective_block(b, mat)?;
            } else if let Some(rest) = line.strip_prefix("objective free ") {
                let mut t = rest.split_whitespace();
                let i: usize = t
                    .next()
                    .and_then(|v| v.parse().ok())
                    .ok_or_else(|| fail("bad index"))?;
                let c: f64 = t
                    .next()
                    .and_then(|v| v.parse().ok())
                    .ok_or_else(|| fail("bad coeff"))?;
                problem.set_objective_free(i, c)?;
            } else if let Some(rest) = line.strip_prefix("constraint ") {
                if pending.is_some() {
                    return Err(fail("constraint without end"));
                }
                let mut t = rest.split_whitespace();
                let sense = match t.next() {
                    Some("<=") => ConstraintSense::Le,
                    Some("==") => ConstraintSense::Eq,
                    Some(">=") => ConstraintSense::Ge,
                    _ => return Err(fail("bad constraint sense")),
                };
                let rhs: f64 = t
                    .next()
                    .and_then(|v| v.parse().ok())
                    .ok_or_else(|| fail("bad rhs"))?;
                pending = Some(SdpConstraint {
                    blocks: vec![None; nb],
                    free: vec![0.0; n_free],
                    sense,
                    rhs,
                });
            } else if let Some(rest) = line.strip_prefix("block ") {
                let b: usize = rest.trim().parse().map_err(|_| fail("bad block index"))?;
                if b >= nb {
                    return Err(fail("block index out of range"));
                }
                let mat = read_matrix(&mut lines, dims[b])?;
                pending
                    .as_mut()
                    .ok_or_else(|| fail("block outside constraint"))?
                    .blocks[b] = Some(mat);
            } else if let Some(rest) = line.strip_prefix("freecoef ") {
                let mut t = rest.split_whitespace();
                let i: usize = t
                    .next()
                    .and_then(|v| v.parse().ok())
                    .ok_or_else(|| fail("bad index"))?;
                let c: f64 = t
                    .next()
                    .and_then(|v| v.parse().ok())
                    .ok_or_else(|| fail("bad coeff"))?;
                let con = pending
                    .as_mut()
                    .ok_or_else(|| fail("freecoef outside constraint"))?;
                if i >= con.free.len() {
                    return Err(fail("free index out of range"));
                }
                con.free[i] = c;
            } else if line == "end" {
                let con = pending
                    .take()
                    .ok_or_else(|| fail("end without constraint"))?;
                problem.add_constraint(con)?;
            } else {
                return Err(fail(&format!("unrecognized line: {line}")));
            }
        }
        if pending.is_some() {
            return Err(fail("unterminated constraint"));
        }
        Ok(problem)
    }
}

fn dump_matrix(out: &mut String, mat: &DMatrix<Complex64>) {
    for i in 0..mat.nrows() {
        for j in 0..mat.ncols() {
            out.push_str(&format!("{:e} {:e}\n", mat[(i, j)].re, mat[(i, j)].im));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::hermitian_part;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn dump_parse_roundtrip_preserves_solution() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let n = 3;
        let g = DMatrix::<Complex64>::from_fn(n, n, |_, _| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            Complex64::new(re, im)
        });
        let a = &g * g.adjoint();
        let c = hermitian_part(&g);

        let mut p = SdpProblem::new(vec![n], 1, true);
        p.set_objective_free(0, 1.0).unwrap();
        p.set_objective_block(0, c * Complex64::new(0.01, 0.0))
            .unwrap();
        p.add_constraint(SdpConstraint {
            blocks: vec![Some(DMatrix::identity(n, n))],
            free: vec![0.0],
            sense: ConstraintSense::Le,
            rhs: 2.0,
        })
        .unwrap();
        p.add_constraint(SdpConstraint {
            blocks: vec![Some(a)],
            free: vec![-1.0],
            sense: ConstraintSense::Ge,
            rhs: 0.0,
        })
        .unwrap();

        let text = p.dump();
        let q = SdpProblem::parse(&text).unwrap();
        assert_eq!(text, q.dump());

        let s1 = crate::sdp::solve(&p, 1e-9, 100).unwrap();
        let s2 = crate::sdp::solve(&q, 1e-9, 100).unwrap();
        assert!((s1.objective - s2.objective).abs() <= 1e-9 * s1.objective.abs().max(1.0));
    }

    #[test]
    fn parse_rejects_garbage() {
        assert!(SdpProblem::parse("nonsense").is_err());
        assert!(SdpProblem::parse("sdp 1\nsense max\nblocks 1 2\nfree 0\nblock 0\n").is_err());
    }
}
