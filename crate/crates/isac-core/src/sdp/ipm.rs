//! Primal-dual path-following interior-point method with Nesterov-Todd
//! scaling on the realized (real symmetric) form of an [`SdpProblem`].
//!
//! Realization steps: complex Hermitian blocks become real symmetric blocks
//! of twice the dimension (coefficients halved so real inner products equal
//! `Re tr(A X)`), `>=` rows are negated, every inequality gains a
//! nonnegative slack, each row is divided by its data norm, and the
//! objective is normalized and negated into minimization form. Free scalars
//! stay free; the Newton step eliminates them through the augmented system
//!
//! ```text
//! [ M   D ] [dy]   [h]
//! [ D^T 0 ] [df] = [r_free]
//! ```
//!
//! with `M` the usual Schur complement `M_ij = <A_i, W A_j W>` plus the
//! slack diagonal. Each iteration does one affine (predictor) solve to pick
//! the centering parameter and one combined solve, reusing the factorization.

use nalgebra::{DMatrix, DVector};

use super::{ConstraintSense, IterStats, KktReport, SdpError, SdpProblem, SdpSolution, SdpStatus};
use crate::linalg::min_eig_hermitian;
use crate::sdp::embed::{complex_embed, complex_extract};

struct RealForm {
    dims: Vec<usize>,
    nn: usize,
    k: usize,
    m: usize,
    a: Vec<Vec<Option<DMatrix<f64>>>>,
    slack_of_row: Vec<Option<usize>>,
    a_free: Vec<Vec<f64>>,
    b: DVector<f64>,
    c: Vec<DMatrix<f64>>,
    g: Vec<f64>,
    row_mult: Vec<f64>,
    c_norm: f64,
}

fn realize(p: &SdpProblem) -> Result<RealForm, SdpError> {
    if p.constraints.is_empty() {
        return Err(SdpError::Empty);
    }
    let nb = p.block_dims.len();
    let dims: Vec<usize> = p.block_dims.iter().map(|&n| 2 * n).collect();
    let obj_sign = if p.maximize { -1.0 } else { 1.0 };

    // objective data, halved-embedded
    let mut raw_c: Vec<DMatrix<f64>> = Vec::with_capacity(nb);
    for (b, cb) in p.obj_blocks.iter().enumerate() {
        let mat = match cb {
            Some(mat) => complex_embed(mat)? * 0.5,
            None => DMatrix::zeros(dims[b], dims[b]),
        };
        raw_c.push(mat);
    }
    let mut obj_scale = 1.0f64;
    for mat in &raw_c {
        obj_scale = obj_scale.max(mat.norm());
    }
    for gi in &p.obj_free {
        obj_scale = obj_scale.max(gi.abs());
    }
    let c: Vec<DMatrix<f64>> = raw_c
        .into_iter()
        .map(|m| m * (obj_sign / obj_scale))
        .collect();
    let g: Vec<f64> = p
        .obj_free
        .iter()
        .map(|&v| v * obj_sign / obj_scale)
        .collect();
    let c_norm = c.iter().map(|m| m.norm_squared()).sum::<f64>().sqrt()
        + g.iter().map(|v| v * v).sum::<f64>().sqrt();

    let m = p.constraints.len();
    let mut a = Vec::with_capacity(m);
    let mut a_free = Vec::with_capacity(m);
    let mut b_vec = DVector::zeros(m);
    let mut slack_of_row = vec![None; m];
    let mut row_mult = vec![0.0; m];
    let mut nn = 0usize;

    for (i, con) in p.constraints.iter().enumerate() {
        let sign = if con.sense == ConstraintSense::Ge {
            -1.0
        } else {
            1.0
        };
        let mut blocks_embedded: Vec<Option<DMatrix<f64>>> = Vec::with_capacity(nb);
        let mut norm2 = 0.0;
        for cb in &con.blocks {
            match cb {
                Some(mat) => {
                    let e = complex_embed(mat)? * (0.5 * sign);
                    norm2 += e.norm_squared();
                    blocks_embedded.push(Some(e));
                }
                None => blocks_embedded.push(None),
            }
        }
        let dvec: Vec<f64> = con.free.iter().map(|&v| v * sign).collect();
        norm2 += dvec.iter().map(|v| v * v).sum::<f64>();
        let scale = norm2.sqrt().max(1e-12);
        for blk in blocks_embedded.iter_mut().flatten() {
            *blk /= scale;
        }
        let dvec: Vec<f64> = dvec.into_iter().map(|v| v / scale).collect();
        b_vec[i] = sign * con.rhs / scale;
        if con.sense != ConstraintSense::Eq {
            slack_of_row[i] = Some(nn);
            nn += 1;
        }
        row_mult[i] = obj_sign * obj_scale * sign / scale;
        a.push(blocks_embedded);
        a_free.push(dvec);
    }

    Ok(RealForm {
        dims,
        nn,
        k: p.n_free,
        m,
        a,
        slack_of_row,
        a_free,
        b: b_vec,
        c,
        g,
        row_mult,
        c_norm,
    })
}

struct State {
    x: Vec<DMatrix<f64>>,
    xs: DVector<f64>,
    f: DVector<f64>,
    y: DVector<f64>,
    s: Vec<DMatrix<f64>>,
    ss: DVector<f64>,
}

struct Direction {
    dx: Vec<DMatrix<f64>>,
    dxs: DVector<f64>,
    df: DVector<f64>,
    dy: DVector<f64>,
    ds: Vec<DMatrix<f64>>,
    dss: DVector<f64>,
}

fn sym(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

fn inner(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

/// Largest step keeping `X + alpha dX` positive definite, via the
/// eigenvalues of `L^{-1} dX L^{-T}`.
fn max_step_dense(chol_l: &DMatrix<f64>, dx: &DMatrix<f64>) -> f64 {
    let a1 = chol_l
        .clone()
        .solve_lower_triangular(dx)
        .expect("triangular solve");
    let a2 = chol_l
        .clone()
        .solve_lower_triangular(&a1.transpose())
        .expect("triangular solve");
    let t = sym(&a2);
    let eig = t.symmetric_eigen();
    let lam_min = eig
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    if lam_min >= -1e-13 {
        f64::INFINITY
    } else {
        -1.0 / lam_min
    }
}

/// Cholesky with an escalating diagonal lift applied in place; `None` when
/// the block cannot be salvaged.
fn chol_with_lift(m: &mut DMatrix<f64>) -> Option<nalgebra::Cholesky<f64, nalgebra::Dyn>> {
    if let Some(c) = m.clone().cholesky() {
        return Some(c);
    }
    let n = m.nrows();
    let mut lift = 1e-14 * (m.trace() / n as f64).abs().max(1e-300);
    for _ in 0..3 {
        for d in 0..n {
            m[(d, d)] += lift;
        }
        if let Some(c) = m.clone().cholesky() {
            return Some(c);
        }
        lift *= 1e4;
    }
    None
}

fn max_step_vec(x: &DVector<f64>, dx: &DVector<f64>) -> f64 {
    let mut alpha = f64::INFINITY;
    for i in 0..x.len() {
        if dx[i] < 0.0 {
            alpha = alpha.min(-x[i] / dx[i]);
        }
    }
    alpha
}

pub(super) fn solve(p: &SdpProblem, tol: f64, max_iter: usize) -> Result<SdpSolution, SdpError> {
    let rf = realize(p)?;
    let nb = rf.dims.len();
    let n_total: usize = rf.dims.iter().sum::<usize>() + rf.nn;

    let b_inf = rf.b.amax().max(1.0);
    let tau_p = 10.0 * b_inf;
    let tau_d = 10.0 * rf.c.iter().map(|m| m.amax()).fold(1.0f64, f64::max);

    let mut st = State {
        x: rf
            .dims
            .iter()
            .map(|&d| DMatrix::identity(d, d) * tau_p)
            .collect(),
        xs: DVector::from_element(rf.nn, tau_p),
        f: DVector::zeros(rf.k),
        y: DVector::zeros(rf.m),
        s: rf
            .dims
            .iter()
            .map(|&d| DMatrix::identity(d, d) * tau_d)
            .collect(),
        ss: DVector::from_element(rf.nn, tau_d),
    };

    let mut trace: Vec<IterStats> = Vec::new();
    let mut status = SdpStatus::MaxIter;
    let mut iterations = max_iter;
    let mut stall_count = 0usize;
    let mut prev_score = f64::INFINITY;

    for iter in 0..max_iter {
        // residuals
        let mut rp = rf.b.clone();
        for (i, row) in rf.a.iter().enumerate() {
            let mut lhs = 0.0;
            for (bi, ab) in row.iter().enumerate() {
                if let Some(ab) = ab {
                    lhs += inner(ab, &st.x[bi]);
                }
            }
            if let Some(si) = rf.slack_of_row[i] {
                lhs += st.xs[si];
            }
            for (kk, d) in rf.a_free[i].iter().enumerate() {
                lhs += d * st.f[kk];
            }
            rp[i] -= lhs;
        }
        let rd: Vec<DMatrix<f64>> = (0..nb)
            .map(|bi| {
                let mut r = rf.c[bi].clone() - &st.s[bi];
                for (i, row) in rf.a.iter().enumerate() {
                    if let Some(ab) = &row[bi] {
                        r -= ab * st.y[i];
                    }
                }
                r
            })
            .collect();
        let mut rd_nn = DVector::zeros(rf.nn);
        for (i, slack) in rf.slack_of_row.iter().enumerate() {
            if let Some(si) = *slack {
                rd_nn[si] = -st.ss[si] - st.y[i];
            }
        }
        let mut r_free = DVector::from_column_slice(&rf.g);
        for (i, row) in rf.a_free.iter().enumerate() {
            for (kk, d) in row.iter().enumerate() {
                r_free[kk] -= d * st.y[i];
            }
        }

        let gap: f64 =
            (0..nb).map(|bi| inner(&st.x[bi], &st.s[bi])).sum::<f64>() + st.xs.dot(&st.ss);
        let mu = gap / n_total as f64;

        let pobj: f64 = (0..nb).map(|bi| inner(&rf.c[bi], &st.x[bi])).sum::<f64>()
            + rf.g
                .iter()
                .zip(st.f.iter())
                .map(|(g, f)| g * f)
                .sum::<f64>();
        let dobj = rf.b.dot(&st.y);
        let rp_rel = rp.norm() / (1.0 + rf.b.norm());
        let rd_norm = (rd.iter().map(|r| r.norm_squared()).sum::<f64>()
            + rd_nn.norm_squared()
            + r_free.norm_squared())
        .sqrt();
        let rd_rel = rd_norm / (1.0 + rf.c_norm);
        let gap_rel = (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs());

        trace.push(IterStats {
            iter,
            pobj,
            dobj,
            primal_residual: rp_rel,
            dual_residual: rd_rel,
            mu,
        });

        if rp_rel <= tol && rd_rel <= tol && gap_rel <= tol {
            status = SdpStatus::Optimal;
            iterations = iter;
            break;
        }
        if dobj > 1e12 * b_inf && rd_rel < 1e-6 {
            status = SdpStatus::Infeasible;
            iterations = iter;
            break;
        }
        // degenerate optimal faces can stall all three measures above
        // tolerance while the iterate is already excellent; stop burning
        // iterations once progress is dead.
        let score = rp_rel + rd_rel + gap_rel;
        if score > prev_score * 0.9999 {
            stall_count += 1;
        } else {
            stall_count = 0;
        }
        prev_score = score;
        if stall_count >= 12 {
            iterations = iter;
            break;
        }

        // NT scaling per dense block; a failed factorization gets a tiny
        // diagonal lift, and if the block is truly lost the loop ends with
        // the best iterate instead of aborting.
        let mut chol_x_l = Vec::with_capacity(nb);
        let mut chol_s_l = Vec::with_capacity(nb);
        let mut w_nt = Vec::with_capacity(nb);
        let mut s_inv = Vec::with_capacity(nb);
        let mut lost_cone = false;
        for bi in 0..nb {
            let cx = match chol_with_lift(&mut st.x[bi]) {
                Some(c) => c,
                None => {
                    lost_cone = true;
                    break;
                }
            };
            let cs = match chol_with_lift(&mut st.s[bi]) {
                Some(c) => c,
                None => {
                    lost_cone = true;
                    break;
                }
            };
            let lx = cx.l();
            let ls = cs.l();
            let svd = (ls.transpose() * &lx).svd(true, true);
            let u = svd.v_t.as_ref().unwrap().transpose(); // right singular vectors
            let mut gmat = &lx * u;
            for (ci, &sv) in svd.singular_values.iter().enumerate() {
                let scale = 1.0 / sv.max(1e-300).sqrt();
                for ri in 0..gmat.nrows() {
                    gmat[(ri, ci)] *= scale;
                }
            }
            let w = &gmat * gmat.transpose();
            s_inv.push(cs.inverse());
            w_nt.push(sym(&w));
            chol_x_l.push(lx);
            chol_s_l.push(ls);
        }
        if lost_cone {
            iterations = iter;
            break;
        }
        let w_nn: DVector<f64> = DVector::from_fn(rf.nn, |i, _| (st.xs[i] / st.ss[i]).max(1e-300));

        // Schur complement
        let mut schur = DMatrix::<f64>::zeros(rf.m, rf.m);
        let mut wa_w: Vec<Vec<Option<DMatrix<f64>>>> = Vec::with_capacity(rf.m);
        for row in rf.a.iter() {
            let mut per_block = Vec::with_capacity(nb);
            for (bi, ab) in row.iter().enumerate() {
                per_block.push(ab.as_ref().map(|ab| {
                    let t = &w_nt[bi] * ab * &w_nt[bi];
                    sym(&t)
                }));
            }
            wa_w.push(per_block);
        }
        for i in 0..rf.m {
            for j in i..rf.m {
                let mut v = 0.0;
                for (pi_b, aj_b) in wa_w[i].iter().zip(&rf.a[j]) {
                    if let (Some(pi), Some(aj)) = (pi_b, aj_b) {
                        v += inner(aj, pi);
                    }
                }
                schur[(i, j)] = v;
                schur[(j, i)] = v;
            }
        }
        for (i, slack) in rf.slack_of_row.iter().enumerate() {
            if let Some(si) = *slack {
                schur[(i, i)] += w_nn[si];
            }
        }

        // factor with escalating ridge
        let mut chol_m = None;
        let mut ridge = 1e-14 * schur.trace().max(1.0) / rf.m as f64;
        for _ in 0..4 {
            if let Some(ch) = schur.clone().cholesky() {
                chol_m = Some(ch);
                break;
            }
            for d in 0..rf.m {
                schur[(d, d)] += ridge;
            }
            ridge *= 1e3;
        }
        let chol_m = chol_m
            .ok_or_else(|| SdpError::Numerical("Schur complement not positive definite".into()))?;

        // free-variable elimination pieces
        let dmat = DMatrix::<f64>::from_fn(rf.m, rf.k, |i, kk| rf.a_free[i][kk]);
        let z = if rf.k > 0 {
            chol_m.solve(&dmat)
        } else {
            DMatrix::zeros(rf.m, 0)
        };
        let sff = if rf.k > 0 {
            dmat.transpose() * &z
        } else {
            DMatrix::zeros(0, 0)
        };
        let sff_lu = sff.clone().lu();

        let compute_direction = |sigma_mu: f64| -> Direction {
            // complementarity targets
            let e_blocks: Vec<DMatrix<f64>> = (0..nb)
                .map(|bi| {
                    let mut e = &s_inv[bi] * sigma_mu - &st.x[bi];
                    let wrw = &w_nt[bi] * &rd[bi] * &w_nt[bi];
                    e -= sym(&wrw);
                    e
                })
                .collect();
            let e_nn = DVector::from_fn(rf.nn, |j, _| {
                sigma_mu / st.ss[j] - st.xs[j] - w_nn[j] * rd_nn[j]
            });
            let mut h = rp.clone();
            for (i, row) in rf.a.iter().enumerate() {
                let mut v = 0.0;
                for (ab, e_b) in row.iter().zip(&e_blocks) {
                    if let Some(ab) = ab {
                        v += inner(ab, e_b);
                    }
                }
                if let Some(si) = rf.slack_of_row[i] {
                    v += e_nn[si];
                }
                h[i] -= v;
            }
            let (dy, df) = if rf.k > 0 {
                let rhs2 = z.transpose() * &h - &r_free;
                let df = sff_lu.solve(&rhs2).unwrap_or_else(|| DVector::zeros(rf.k));
                let dy = chol_m.solve(&(&h - &dmat * &df));
                (dy, df)
            } else {
                (chol_m.solve(&h), DVector::zeros(0))
            };
            let ds: Vec<DMatrix<f64>> = (0..nb)
                .map(|bi| {
                    let mut d = rd[bi].clone();
                    for (i, row) in rf.a.iter().enumerate() {
                        if let Some(ab) = &row[bi] {
                            d -= ab * dy[i];
                        }
                    }
                    d
                })
                .collect();
            let dss = DVector::from_fn(rf.nn, |j, _| {
                let mut v = rd_nn[j];
                for (i, slack) in rf.slack_of_row.iter().enumerate() {
                    if *slack == Some(j) {
                        v -= dy[i];
                    }
                }
                v
            });
            let dx: Vec<DMatrix<f64>> = (0..nb)
                .map(|bi| {
                    let mut u = DMatrix::<f64>::zeros(rf.dims[bi], rf.dims[bi]);
                    for (i, row) in rf.a.iter().enumerate() {
                        if let Some(ab) = &row[bi] {
                            u += ab * dy[i];
                        }
                    }
                    let wuw = &w_nt[bi] * u * &w_nt[bi];
                    sym(&(&e_blocks[bi] + sym(&wuw)))
                })
                .collect();
            let dxs = DVector::from_fn(rf.nn, |j, _| {
                let mut self_dy = 0.0;
                for (i, slack) in rf.slack_of_row.iter().enumerate() {
                    if *slack == Some(j) {
                        self_dy = dy[i];
                    }
                }
                e_nn[j] + w_nn[j] * self_dy
            });
            Direction {
                dx,
                dxs,
                df,
                dy,
                ds,
                dss,
            }
        };

        let step_lengths = |d: &Direction| -> (f64, f64) {
            let mut ap = max_step_vec(&st.xs, &d.dxs);
            let mut ad = max_step_vec(&st.ss, &d.dss);
            for bi in 0..nb {
                ap = ap.min(max_step_dense(&chol_x_l[bi], &d.dx[bi]));
                ad = ad.min(max_step_dense(&chol_s_l[bi], &d.ds[bi]));
            }
            (ap, ad)
        };

        // predictor: pure affine step to pick sigma
        let aff = compute_direction(0.0);
        let (ap_aff, ad_aff) = step_lengths(&aff);
        let ap_aff = ap_aff.min(1.0);
        let ad_aff = ad_aff.min(1.0);
        let mut gap_aff = 0.0;
        for bi in 0..nb {
            gap_aff += inner(
                &(&st.x[bi] + &aff.dx[bi] * ap_aff),
                &(&st.s[bi] + &aff.ds[bi] * ad_aff),
            );
        }
        gap_aff += (&st.xs + &aff.dxs * ap_aff).dot(&(&st.ss + &aff.dss * ad_aff));
        let mu_aff = gap_aff / n_total as f64;
        let sigma = (mu_aff / mu).powi(3).clamp(1e-6, 0.9);

        // combined centering step, backtracked until both cones verifiably
        // hold (the boundary formula is exact only in exact arithmetic)
        let dir = compute_direction(sigma * mu);
        let (ap0, ad0) = step_lengths(&dir);
        let mut ap = (0.98 * ap0).min(1.0);
        let mut ad = (0.98 * ad0).min(1.0);
        if !(ap > 0.0 && ad > 0.0) || !ap.is_finite() || !ad.is_finite() {
            iterations = iter;
            break;
        }
        let mut committed = false;
        for _ in 0..40 {
            let x_new: Vec<DMatrix<f64>> = (0..nb)
                .map(|bi| sym(&(&st.x[bi] + &dir.dx[bi] * ap)))
                .collect();
            let s_new: Vec<DMatrix<f64>> = (0..nb)
                .map(|bi| sym(&(&st.s[bi] + &dir.ds[bi] * ad)))
                .collect();
            let xs_new = &st.xs + &dir.dxs * ap;
            let ss_new = &st.ss + &dir.dss * ad;
            let pd_ok = x_new.iter().all(|m| m.clone().cholesky().is_some())
                && s_new.iter().all(|m| m.clone().cholesky().is_some())
                && xs_new.iter().all(|&v| v > 0.0)
                && ss_new.iter().all(|&v| v > 0.0);
            if pd_ok {
                st.x = x_new;
                st.s = s_new;
                st.xs = xs_new;
                st.ss = ss_new;
                st.f += &dir.df * ap;
                st.y += &dir.dy * ad;
                committed = true;
                break;
            }
            ap *= 0.5;
            ad *= 0.5;
        }
        if !committed {
            iterations = iter;
            break;
        }
    }

    // map back to the complex problem
    let blocks: Vec<DMatrix<num_complex::Complex64>> =
        st.x.iter().map(complex_extract).collect::<Result<_, _>>()?;
    let free: Vec<f64> = st.f.iter().copied().collect();
    let duals: Vec<f64> = (0..rf.m).map(|i| rf.row_mult[i] * st.y[i]).collect();
    let objective = p.objective_value(&blocks, &free);

    let last = trace.last().cloned().unwrap_or(IterStats {
        iter: 0,
        pobj: 0.0,
        dobj: 0.0,
        primal_residual: f64::INFINITY,
        dual_residual: f64::INFINITY,
        mu: f64::INFINITY,
    });
    let primal_residual = p
        .violations(&blocks, &free)
        .into_iter()
        .fold(0.0f64, |acc, v| acc.max(v.max(0.0)));
    let gap_rel = (last.pobj - last.dobj).abs() / (1.0 + last.pobj.abs() + last.dobj.abs());
    let kkt = KktReport {
        primal_residual,
        dual_residual: last.dual_residual,
        duality_gap: gap_rel,
        min_block_eigs: blocks.iter().map(min_eig_hermitian).collect(),
    };

    Ok(SdpSolution {
        blocks,
        free,
        duals,
        objective,
        status,
        iterations,
        kkt,
        trace,
    })
}
