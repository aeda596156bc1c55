//! Dense semidefinite programming over complex Hermitian blocks.
//!
//! Problems have a handful of Hermitian PSD matrix variables (the transmit
//! covariances), a few free scalars (epigraph variables), and affine
//! real-trace constraints:
//!
//! ```text
//! max/min   sum_b Re tr(C_b X_b) + g . f
//! s.t.      sum_b Re tr(A_ib X_b) + d_i . f  (<= | = | >=)  rhs_i
//!           X_b >= 0 (Hermitian PSD),  f free
//! ```
//!
//! The solver is a primal-dual path-following interior-point method with
//! Nesterov-Todd scaling and a Mehrotra-style adaptive centering parameter.
//! Complex blocks are embedded as real symmetric blocks, inequalities get
//! nonnegative slacks, free scalars are kept free and eliminated through an
//! augmented Schur system, and every constraint row is normalized by its
//! data norm so wildly different physical scales (watts vs. SNRs) do not
//! poison the Newton systems. Problem sizes here are tiny (blocks up to
//! ~32x32 complex, tens of constraints), so everything is dense.

mod embed;
mod ipm;
mod textio;

pub use embed::{complex_embed, complex_extract};

use nalgebra::DMatrix;
use num_complex::Complex64;
use thiserror::Error;

use crate::linalg::{hermitian_defect, hermitian_part, min_eig_hermitian, rank_one_defect};

#[derive(Debug, Error)]
pub enum SdpError {
    #[error("shape error: {0}")]
    Shape(String),
    #[error("coefficient matrix is not Hermitian (defect {0:.2e})")]
    NotHermitian(f64),
    #[error("problem has no constraints")]
    Empty,
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("dump/load format error: {0}")]
    Format(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintSense {
    Le,
    Eq,
    Ge,
}

impl ConstraintSense {
    pub(crate) fn tag(self) -> &'static str {
        match self {
            ConstraintSense::Le => "<=",
            ConstraintSense::Eq => "==",
            ConstraintSense::Ge => ">=",
        }
    }
}

/// One affine constraint: `sum_b Re tr(blocks[b] X_b) + free . f  sense  rhs`.
#[derive(Debug, Clone)]
pub struct SdpConstraint {
    pub blocks: Vec<Option<DMatrix<Complex64>>>,
    pub free: Vec<f64>,
    pub sense: ConstraintSense,
    pub rhs: f64,
}

/// Block-structured SDP with Hermitian matrix variables and free scalars.
#[derive(Debug, Clone)]
pub struct SdpProblem {
    pub(crate) block_dims: Vec<usize>,
    pub(crate) n_free: usize,
    pub(crate) maximize: bool,
    pub(crate) obj_blocks: Vec<Option<DMatrix<Complex64>>>,
    pub(crate) obj_free: Vec<f64>,
    pub(crate) constraints: Vec<SdpConstraint>,
}

impl SdpProblem {
    pub fn new(block_dims: Vec<usize>, n_free: usize, maximize: bool) -> Self {
        let nb = block_dims.len();
        Self {
            block_dims,
            n_free,
            maximize,
            obj_blocks: vec![None; nb],
            obj_free: vec![0.0; n_free],
            constraints: Vec::new(),
        }
    }

    pub fn block_dims(&self) -> &[usize] {
        &self.block_dims
    }

    pub fn n_free(&self) -> usize {
        self.n_free
    }

    pub fn constraints(&self) -> &[SdpConstraint] {
        &self.constraints
    }

    fn check_block(&self, b: usize, mat: &DMatrix<Complex64>) -> Result<(), SdpError> {
        let dim = *self
            .block_dims
            .get(b)
            .ok_or_else(|| SdpError::Shape(format!("block index {b} out of range")))?;
        if mat.nrows() != dim || mat.ncols() != dim {
            return Err(SdpError::Shape(format!(
                "block {b} expects {dim}x{dim}, got {}x{}",
                mat.nrows(),
                mat.ncols()
            )));
        }
        let defect = hermitian_defect(mat);
        if defect > 1e-10 {
            return Err(SdpError::NotHermitian(defect));
        }
        Ok(())
    }

    pub fn set_objective_block(
        &mut self,
        b: usize,
        mat: DMatrix<Complex64>,
    ) -> Result<(), SdpError> {
        self.check_block(b, &mat)?;
        self.obj_blocks[b] = Some(hermitian_part(&mat));
        Ok(())
    }

    pub fn set_objective_free(&mut self, i: usize, coeff: f64) -> Result<(), SdpError> {
        if i >= self.n_free {
            return Err(SdpError::Shape(format!("free index {i} out of range")));
        }
        self.obj_free[i] = coeff;
        Ok(())
    }

    pub fn add_constraint(&mut self, c: SdpConstraint) -> Result<usize, SdpError> {
        if c.blocks.len() != self.block_dims.len() {
            return Err(SdpError::Shape(format!(
                "constraint carries {} block slots, problem has {}",
                c.blocks.len(),
                self.block_dims.len()
            )));
        }
        if c.free.len() != self.n_free {
            return Err(SdpError::Shape(format!(
                "constraint carries {} free coefficients, problem has {}",
                c.free.len(),
                self.n_free
            )));
        }
        let mut c = c;
        for (b, slot) in c.blocks.iter_mut().enumerate() {
            if let Some(mat) = slot {
                self.check_block(b, mat)?;
                *mat = hermitian_part(mat);
            }
        }
        self.constraints.push(c);
        Ok(self.constraints.len() - 1)
    }

    /// Objective value of a candidate primal point, in the problem's own
    /// orientation and units.
    pub fn objective_value(&self, blocks: &[DMatrix<Complex64>], free: &[f64]) -> f64 {
        let mut v = 0.0;
        for (b, cb) in self.obj_blocks.iter().enumerate() {
            if let Some(cb) = cb {
                v += re_trace_prod(cb, &blocks[b]);
            }
        }
        for (i, g) in self.obj_free.iter().enumerate() {
            v += g * free[i];
        }
        v
    }

    /// Signed constraint violations of a candidate point (positive =
    /// violated), normalized by `1 + |rhs|`.
    pub fn violations(&self, blocks: &[DMatrix<Complex64>], free: &[f64]) -> Vec<f64> {
        self.constraints
            .iter()
            .map(|c| {
                let mut lhs = 0.0;
                for (b, ab) in c.blocks.iter().enumerate() {
                    if let Some(ab) = ab {
                        lhs += re_trace_prod(ab, &blocks[b]);
                    }
                }
                for (i, d) in c.free.iter().enumerate() {
                    lhs += d * free[i];
                }
                let raw = match c.sense {
                    ConstraintSense::Le => lhs - c.rhs,
                    ConstraintSense::Ge => c.rhs - lhs,
                    ConstraintSense::Eq => (lhs - c.rhs).abs(),
                };
                raw / (1.0 + c.rhs.abs())
            })
            .collect()
    }
}

/// `Re tr(A B)` for complex matrices of matching shape.
pub fn re_trace_prod(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    let n = a.nrows();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            // tr(AB) = sum_ij A_ij B_ji
            acc += a[(i, j)].re * b[(j, i)].re - a[(i, j)].im * b[(j, i)].im;
        }
    }
    acc
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SdpStatus {
    Optimal,
    Infeasible,
    MaxIter,
}

/// Convergence diagnostics of the returned iterate.
#[derive(Debug, Clone)]
pub struct KktReport {
    /// Worst normalized primal constraint violation (original data).
    pub primal_residual: f64,
    /// Relative dual residual of the internal scaled problem.
    pub dual_residual: f64,
    /// Relative duality gap of the internal scaled problem.
    pub duality_gap: f64,
    /// Minimum eigenvalue of each returned Hermitian block.
    pub min_block_eigs: Vec<f64>,
}

/// Objective/residual snapshot of one interior-point iterate.
#[derive(Debug, Clone, Copy)]
pub struct IterStats {
    pub iter: usize,
    /// Primal/dual objectives of the internal minimization (scaled units).
    pub pobj: f64,
    pub dobj: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub mu: f64,
}

#[derive(Debug, Clone)]
pub struct SdpSolution {
    pub blocks: Vec<DMatrix<Complex64>>,
    pub free: Vec<f64>,
    /// Multipliers scaled so that `sum_i duals[i] * rhs_i` approaches the
    /// objective at optimality.
    pub duals: Vec<f64>,
    pub objective: f64,
    pub status: SdpStatus,
    pub iterations: usize,
    pub kkt: KktReport,
    pub trace: Vec<IterStats>,
}

/// Numerical rank of a Hermitian PSD matrix by singular-value ratio.
pub fn numerical_rank(m: &DMatrix<Complex64>, ratio_tol: f64) -> usize {
    let svals = m.clone().singular_values();
    let mut v: Vec<f64> = svals.iter().copied().collect();
    v.sort_by(|a, b| b.partial_cmp(a).unwrap());
    if v.is_empty() || v[0] <= 0.0 {
        return 0;
    }
    v.iter().take_while(|&&s| s / v[0] > ratio_tol).count()
}

/// True when the matrix is numerically rank one (`sigma_2 / sigma_1 <= tol`).
pub fn is_rank_one(m: &DMatrix<Complex64>, ratio_tol: f64) -> bool {
    rank_one_defect(m) <= ratio_tol
}

/// Solve the problem to relative tolerance `tol` (duality gap and
/// residuals), with at most `max_iter` interior-point iterations.
pub fn solve(p: &SdpProblem, tol: f64, max_iter: usize) -> Result<SdpSolution, SdpError> {
    ipm::solve(p, tol, max_iter)
}

/// Solution sanity helper used across tests: worst PSD defect of the blocks.
pub fn min_block_eig(sol: &SdpSolution) -> f64 {
    sol.blocks
        .iter()
        .map(min_eig_hermitian)
        .fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{hermitian_eigen_desc, hermitian_part};
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn random_hermitian(n: usize, seed: u64) -> DMatrix<Complex64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = DMatrix::<Complex64>::from_fn(n, n, |_, _| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            Complex64::new(re, im)
        });
        hermitian_part(&g)
    }

    fn random_psd(n: usize, seed: u64) -> DMatrix<Complex64> {
        let g = random_hermitian(n, seed);
        &g * g.adjoint()
    }

    /// min tr(C X) s.t. tr(X) = 1, X >= 0  -->  lambda_min(C).
    fn eigmin_problem(c: &DMatrix<Complex64>) -> SdpProblem {
        let n = c.nrows();
        let mut p = SdpProblem::new(vec![n], 0, false);
        p.set_objective_block(0, c.clone()).unwrap();
        p.add_constraint(SdpConstraint {
            blocks: vec![Some(DMatrix::identity(n, n))],
            free: vec![],
            sense: ConstraintSense::Eq,
            rhs: 1.0,
        })
        .unwrap();
        p
    }

    #[test]
    fn eigenvalue_problem_small() {
        for seed in 0..6 {
            let n = 3 + (seed as usize % 3);
            let c = random_hermitian(n, 100 + seed);
            let p = eigmin_problem(&c);
            let sol = solve(&p, 1e-9, 100).unwrap();
            assert_eq!(sol.status, SdpStatus::Optimal);
            let expect = crate::linalg::hermitian_eigenvalues(&c)[0];
            assert_relative_eq!(sol.objective, expect, max_relative = 1e-6, epsilon = 1e-8);
            assert!(sol.kkt.primal_residual < 1e-7);
            // X should be (close to) the outer product of the bottom eigenvector
            let pairs = hermitian_eigen_desc(&c);
            let bottom = &pairs.last().unwrap().1;
            let xv = &sol.blocks[0] * bottom;
            let ray = bottom.dotc(&xv).re;
            assert!(ray > 0.999, "bottom eigenvector Rayleigh quotient {ray}");
        }
    }

    #[test]
    fn power_to_top_eigenvector_with_free_scalar() {
        // max t s.t. tr(X) <= P, tr(A X) >= t, X >= 0, A >= 0 --> P lmax(A)
        for seed in 0..6 {
            let n = 3 + (seed as usize % 4);
            let a = random_psd(n, 200 + seed);
            let pbudget = 2.0 + seed as f64 * 0.5;
            let mut p = SdpProblem::new(vec![n], 1, true);
            p.set_objective_free(0, 1.0).unwrap();
            p.add_constraint(SdpConstraint {
                blocks: vec![Some(DMatrix::identity(n, n))],
                free: vec![0.0],
                sense: ConstraintSense::Le,
                rhs: pbudget,
            })
            .unwrap();
            p.add_constraint(SdpConstraint {
                blocks: vec![Some(a.clone())],
                free: vec![-1.0],
                sense: ConstraintSense::Ge,
                rhs: 0.0,
            })
            .unwrap();
            let sol = solve(&p, 1e-9, 100).unwrap();
            assert_eq!(sol.status, SdpStatus::Optimal);
            let lmax = *crate::linalg::hermitian_eigenvalues(&a).last().unwrap();
            assert_relative_eq!(sol.objective, pbudget * lmax, max_relative = 1e-6);
            assert!(min_block_eig(&sol) > -1e-8 * sol.blocks[0].norm());
        }
    }

    #[test]
    fn random_problem_matches_projected_gradient_oracle() {
        // min tr(C X), tr(X) = 1, X >= 0 solved independently by projected
        // gradient on the trace-one PSD set (projection = eigenvalue
        // simplex projection).
        let n = 5;
        let c = random_hermitian(n, 42);
        let p = eigmin_problem(&c);
        let sol = solve(&p, 1e-9, 100).unwrap();

        let mut x = DMatrix::<Complex64>::identity(n, n) * Complex64::new(1.0 / n as f64, 0.0);
        let step = 0.5;
        for _ in 0..4000 {
            let grad = &c;
            let y = &x - grad * Complex64::new(step, 0.0);
            // project onto {X >= 0, tr X = 1}: eigen-decompose, project spectrum
            let pairs = hermitian_eigen_desc(&y);
            let evs: Vec<f64> = pairs.iter().map(|p| p.0).collect();
            let w = project_simplex(&evs);
            let mut xn = DMatrix::<Complex64>::zeros(n, n);
            for (k, (_, v)) in pairs.iter().enumerate() {
                if w[k] > 0.0 {
                    let vv = DMatrix::from_fn(n, n, |i, j| v[i] * v[j].conj());
                    xn += vv * Complex64::new(w[k], 0.0);
                }
            }
            x = xn;
        }
        let oracle = re_trace_prod(&c, &x);
        assert!(
            (sol.objective - oracle).abs() <= 0.01 * oracle.abs().max(0.01),
            "ipm {} vs oracle {}",
            sol.objective,
            oracle
        );
    }

    fn project_simplex(v: &[f64]) -> Vec<f64> {
        let mut u: Vec<f64> = v.to_vec();
        u.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let mut css = 0.0;
        let mut rho = 0;
        for (k, &val) in u.iter().enumerate() {
            css += val;
            if val - (css - 1.0) / (k as f64 + 1.0) > 0.0 {
                rho = k;
            }
        }
        let theta = (u[..=rho].iter().sum::<f64>() - 1.0) / (rho as f64 + 1.0);
        v.iter().map(|&x| (x - theta).max(0.0)).collect()
    }

    #[test]
    fn invariance_to_row_scaling() {
        let n = 4;
        let a = random_psd(n, 7);
        let build = |scale: f64| {
            let mut p = SdpProblem::new(vec![n], 1, true);
            p.set_objective_free(0, 1.0).unwrap();
            p.add_constraint(SdpConstraint {
                blocks: vec![Some(DMatrix::identity(n, n) * Complex64::new(scale, 0.0))],
                free: vec![0.0],
                sense: ConstraintSense::Le,
                rhs: 3.0 * scale,
            })
            .unwrap();
            p.add_constraint(SdpConstraint {
                blocks: vec![Some(a.clone() * Complex64::new(1.0 / scale, 0.0))],
                free: vec![-1.0 / scale],
                sense: ConstraintSense::Ge,
                rhs: 0.0,
            })
            .unwrap();
            p
        };
        let s1 = solve(&build(1.0), 1e-9, 100).unwrap();
        let s2 = solve(&build(3.7e4), 1e-9, 100).unwrap();
        assert_relative_eq!(s1.objective, s2.objective, max_relative = 1e-6);
        assert!((&s1.blocks[0] - &s2.blocks[0]).norm() < 1e-5 * s1.blocks[0].norm());
    }

    #[test]
    fn weak_duality_on_converged_iterates() {
        let c = random_hermitian(5, 9);
        let p = eigmin_problem(&c);
        let sol = solve(&p, 1e-10, 100).unwrap();
        for it in &sol.trace {
            if it.primal_residual < 1e-7 && it.dual_residual < 1e-7 {
                // internal minimization: dual objective <= primal objective
                assert!(
                    it.dobj <= it.pobj + 1e-6 * (1.0 + it.pobj.abs() + it.dobj.abs()),
                    "iter {}: dobj {} > pobj {}",
                    it.iter,
                    it.dobj,
                    it.pobj
                );
            }
        }
    }

    #[test]
    fn infeasible_problem_is_flagged() {
        // tr(X) <= 1 and tr(X) >= 2 cannot hold
        let n = 3;
        let mut p = SdpProblem::new(vec![n], 0, true);
        p.add_constraint(SdpConstraint {
            blocks: vec![Some(DMatrix::identity(n, n))],
            free: vec![],
            sense: ConstraintSense::Le,
            rhs: 1.0,
        })
        .unwrap();
        p.add_constraint(SdpConstraint {
            blocks: vec![Some(DMatrix::identity(n, n))],
            free: vec![],
            sense: ConstraintSense::Ge,
            rhs: 2.0,
        })
        .unwrap();
        let sol = solve(&p, 1e-8, 100).unwrap();
        assert_ne!(sol.status, SdpStatus::Optimal);
    }

    #[test]
    fn duals_close_the_gap() {
        let a = random_psd(4, 11);
        let mut p = SdpProblem::new(vec![4], 1, true);
        p.set_objective_free(0, 1.0).unwrap();
        p.add_constraint(SdpConstraint {
            blocks: vec![Some(DMatrix::identity(4, 4))],
            free: vec![0.0],
            sense: ConstraintSense::Le,
            rhs: 2.0,
        })
        .unwrap();
        p.add_constraint(SdpConstraint {
            blocks: vec![Some(a.clone())],
            free: vec![-1.0],
            sense: ConstraintSense::Ge,
            rhs: 0.0,
        })
        .unwrap();
        let sol = solve(&p, 1e-9, 100).unwrap();
        let dual_obj: f64 = sol
            .duals
            .iter()
            .zip(p.constraints())
            .map(|(y, c)| y * c.rhs)
            .sum();
        assert_relative_eq!(dual_obj, sol.objective, max_relative = 1e-5, epsilon = 1e-8);
    }
}
