//! Transmit designs: the SCA+SDR max-min detection-metric optimizer, the
//! Gaussian-only SDR design with randomization, the closed-form
//! single-point solution, and the benchmark transmit schemes.
//!
//! The joint design maximizes `min_q gamma_c_q^2 + 2 gamma_s_q` — the
//! monotone surrogate of the detection probability for long sensing
//! durations — over the beamformer `w` (lifted to `W = w w^H`) and the
//! deterministic covariance `R0`, subject to the user's SINR threshold and
//! the power budget. The quartic `gamma_c^2` term is handled by successive
//! convex approximation: each round linearizes `f_q(W) = tr^2(W A_q)` at
//! the previous iterate (a global lower bound, tight there), solves the
//! resulting SDP, and repeats; the true objective is non-decreasing along
//! the rounds. A rank-one solution is reconstructed at the end through the
//! channel-preserving map `w = W h / sqrt(h^H W h)`, `R0 += W - w w^H`,
//! which keeps the received communication power, the total power, and every
//! deterministic beam gain exactly.
//!
//! Reported detection probabilities are always recomputed through the exact
//! closed form on the reconstructed `(w, R0)`, never through the optimizer's
//! approximation.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{
    complex_gaussian_vector, dot_unconj, hermitian_eigen_desc, hermitian_part, psd_sqrt,
    steering_quadform,
};
use crate::scenario::{sensing_snrs, CommChannel, GridPoint, Scenario};
use crate::sdp::{
    is_rank_one, solve as sdp_solve, ConstraintSense, SdpConstraint, SdpError, SdpProblem,
    SdpStatus,
};
use crate::specfun::{gauss_q, gauss_q_inv};

#[derive(Debug, Error)]
pub enum BfError {
    #[error("SINR threshold infeasible: gamma0*sigma_c^2 = {required:.3e} exceeds P*||h||^2 = {available:.3e}")]
    InfeasibleSinr { required: f64, available: f64 },
    #[error("rate threshold {required:.3} exceeds the full-time rate {available:.3}")]
    InfeasibleRate { required: f64, available: f64 },
    #[error("no feasible randomization out of {tried} samples (relaxation bound {relaxation_bound:.3e})")]
    NoFeasibleRandomization { tried: usize, relaxation_bound: f64 },
    #[error("solver did not reach optimality (status {status:?})")]
    SolverFailed { status: SdpStatus },
    #[error("bad input: {0}")]
    BadInput(String),
    #[error(transparent)]
    Sdp(#[from] SdpError),
}

/// Knobs for the SDP/SCA machinery.
#[derive(Debug, Clone)]
pub struct SolverOptions {
    pub sdp_tol: f64,
    pub sdp_max_iter: usize,
    pub sca_tol: f64,
    pub sca_max_outer: usize,
    /// Singular-value ratio below which a lifted matrix counts as rank one.
    pub rank_one_ratio: f64,
    pub n_randomizations: usize,
    pub seed: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            sdp_tol: 1e-8,
            sdp_max_iter: 100,
            sca_tol: 1e-6,
            sca_max_outer: 50,
            rank_one_ratio: 1e-6,
            n_randomizations: 1000,
            seed: 1,
        }
    }
}

/// Per-grid-point SNRs and objective contribution of a returned design.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PerGridMetrics {
    pub index: usize,
    pub gamma_c: f64,
    pub gamma_s: f64,
    pub objective_term: f64,
}

/// A transmit design: beamformer, deterministic covariance, and the
/// metrics every consumer needs.
#[derive(Debug, Clone)]
pub struct BeamformingSolution {
    pub w: DVector<Complex64>,
    pub r0: DMatrix<Complex64>,
    pub achieved_sinr: f64,
    pub per_q: Vec<PerGridMetrics>,
    /// Scheme objective: `min_q gamma_c^2 + 2 gamma_s` for the joint
    /// design, `min_q |alpha|^2 |a^T w|^2` for the Gaussian-only design,
    /// scheme-specific for benchmarks (documented per constructor).
    pub objective: f64,
    /// Grid points attaining the minimum within 1e-6 relative.
    pub binding: Vec<usize>,
    pub iterations: usize,
    pub converged: bool,
    /// Objective after each outer round (relaxed iterates for SCA).
    pub objective_trace: Vec<f64>,
    /// Optimum of the convex relaxation when one was solved (upper bound
    /// on the extracted objective).
    pub relaxation_bound: Option<f64>,
}

impl BeamformingSolution {
    pub fn total_power(&self) -> f64 {
        self.w.norm_squared() + self.r0.trace().re
    }

    pub fn comm_power(&self) -> f64 {
        self.w.norm_squared()
    }

    pub fn sensing_power(&self) -> f64 {
        self.r0.trace().re
    }

    pub fn min_gamma_pair(&self) -> (f64, f64) {
        let q = self
            .per_q
            .iter()
            .min_by(|a, b| a.objective_term.partial_cmp(&b.objective_term).unwrap())
            .expect("non-empty grid");
        (q.gamma_c, q.gamma_s)
    }
}

fn sinr_of(w: &DVector<Complex64>, r0: &DMatrix<Complex64>, h: &CommChannel, sigma2_c: f64) -> f64 {
    let sig = h.h.dotc(w).norm_sqr();
    let interf = h.h.dotc(&(r0 * &h.h)).re.max(0.0);
    sig / (interf + sigma2_c)
}

fn conj_outer(a: &DVector<Complex64>) -> DMatrix<Complex64> {
    // a^* a^T, Hermitian PSD
    DMatrix::from_fn(a.len(), a.len(), |i, j| a[i].conj() * a[j])
}

fn channel_outer(h: &DVector<Complex64>) -> DMatrix<Complex64> {
    DMatrix::from_fn(h.len(), h.len(), |i, j| h[i] * h[j].conj())
}

/// Per-watt SNR slope of grid point q: `gamma = beta * (quadratic form)`.
fn beta(g: &GridPoint, sigma2_s: f64) -> f64 {
    g.alpha2 * g.mr() as f64 / sigma2_s
}

fn metrics_for(
    scn: &Scenario,
    w: &DVector<Complex64>,
    r0: &DMatrix<Complex64>,
) -> (Vec<PerGridMetrics>, f64, Vec<usize>) {
    let per_q: Vec<PerGridMetrics> = scn
        .grid
        .iter()
        .map(|g| {
            let (gamma_c, gamma_s) = sensing_snrs(g, w, r0, &scn.cfg);
            PerGridMetrics {
                index: g.index,
                gamma_c,
                gamma_s,
                objective_term: gamma_c * gamma_c + 2.0 * gamma_s,
            }
        })
        .collect();
    let min_obj = per_q
        .iter()
        .map(|m| m.objective_term)
        .fold(f64::INFINITY, f64::min);
    let binding = per_q
        .iter()
        .filter(|m| m.objective_term <= min_obj * (1.0 + 1e-6) + 1e-300)
        .map(|m| m.index)
        .collect();
    (per_q, min_obj, binding)
}

/// A solve is usable when optimal, or when the iteration cap hit with the
/// returned iterate already at engineering accuracy.
fn usable(sol: &crate::sdp::SdpSolution) -> bool {
    match sol.status {
        SdpStatus::Optimal => true,
        SdpStatus::MaxIter => {
            sol.kkt.primal_residual <= 1e-6
                && sol.kkt.duality_gap <= 1e-5
                && sol.kkt.dual_residual <= 1e-5
        }
        SdpStatus::Infeasible => false,
    }
}

fn check_sinr_feasible(scn: &Scenario, h: &CommChannel) -> Result<(), BfError> {
    let required = scn.cfg.gamma0 * scn.cfg.sigma2_c;
    let available = scn.cfg.p_max * h.norm_sqr();
    if required > available * (1.0 + 1e-9) {
        return Err(BfError::InfeasibleSinr {
            required,
            available,
        });
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// SCA surrogate
// ---------------------------------------------------------------------------

/// Affine lower bound of `f(W) = tr^2(W a^* a^T)` linearized at `W_k`:
/// `f~(W) = 2 c_k tr(W a^* a^T) - c_k^2` with `c_k = tr(W_k a^* a^T)`.
/// Tight at `W_k`, below `f` everywhere (convexity of the square).
#[derive(Debug, Clone)]
pub struct Surrogate {
    pub steer: DVector<Complex64>,
    /// Linearization value `c_k`.
    pub anchor: f64,
}

pub fn sca_surrogate(wk: &DMatrix<Complex64>, a: &DVector<Complex64>) -> Surrogate {
    Surrogate {
        steer: a.clone(),
        anchor: steering_quadform(a, wk),
    }
}

impl Surrogate {
    /// Coefficient of `tr(W a^* a^T)` in the affine bound.
    pub fn linear_coeff(&self) -> f64 {
        2.0 * self.anchor
    }

    /// Constant term of the affine bound.
    pub fn offset(&self) -> f64 {
        -self.anchor * self.anchor
    }

    pub fn eval(&self, w: &DMatrix<Complex64>) -> f64 {
        let t = steering_quadform(&self.steer, w);
        2.0 * self.anchor * t - self.anchor * self.anchor
    }

    pub fn exact(&self, w: &DMatrix<Complex64>) -> f64 {
        let t = steering_quadform(&self.steer, w);
        t * t
    }
}

// ---------------------------------------------------------------------------
// Rank-one reconstruction
// ---------------------------------------------------------------------------

/// Rank-one extraction that preserves the received communication power.
#[derive(Debug, Clone)]
pub struct RankOneReconstruction {
    pub w: DVector<Complex64>,
    pub r0: DMatrix<Complex64>,
    /// True when `h^H W h` was numerically zero and the dominant
    /// eigenvector had to be used instead of the channel-preserving map.
    pub fallback: bool,
}

/// Reconstruct a feasible `(w, r0)` from relaxed covariances:
/// `w = (h^H W h)^{-1/2} W h`, `r0 = R0 + W - w w^H`.
///
/// Preserves `|w^H h|^2 = h^H W h`, the total power, and
/// `a^T (w w^H + r0) a^*` for every direction, and `r0` stays PSD
/// (Schur-complement argument). Degenerate `h^H W h` falls back to the
/// dominant eigenvector, flagged.
pub fn rank_one_reconstruct(
    w_tilde: &DMatrix<Complex64>,
    r0_tilde: &DMatrix<Complex64>,
    h: &CommChannel,
) -> RankOneReconstruction {
    let n = w_tilde.nrows();
    let wh = w_tilde * &h.h;
    let hwh = h.h.dotc(&wh).re;
    let scale_ref = w_tilde.trace().re.max(0.0);
    if hwh <= 1e-14 * scale_ref.max(1e-300) * h.norm_sqr().max(1e-300) {
        // channel sees (numerically) nothing: dominant eigenvector
        let pairs = hermitian_eigen_desc(w_tilde);
        let (lam, u) = &pairs[0];
        let w = if *lam > 0.0 {
            u * Complex64::new(lam.sqrt(), 0.0)
        } else {
            DVector::zeros(n)
        };
        let ww = DMatrix::from_fn(n, n, |i, j| w[i] * w[j].conj());
        let r0 = hermitian_part(&(r0_tilde + w_tilde - ww));
        return RankOneReconstruction {
            w,
            r0,
            fallback: true,
        };
    }
    let w = wh / Complex64::new(hwh.sqrt(), 0.0);
    let ww = DMatrix::from_fn(n, n, |i, j| w[i] * w[j].conj());
    let r0 = hermitian_part(&(r0_tilde + w_tilde - ww));
    RankOneReconstruction {
        w,
        r0,
        fallback: false,
    }
}

// ---------------------------------------------------------------------------
// Joint design (SCA + SDR)
// ---------------------------------------------------------------------------

/// One SCA round: the convex subproblem at linearization point `wk`.
fn p2_subproblem(
    scn: &Scenario,
    h: &CommChannel,
    wk: &DMatrix<Complex64>,
) -> Result<SdpProblem, SdpError> {
    let mt = scn.cfg.mt;
    let mut p = SdpProblem::new(vec![mt, mt], 1, true);
    p.set_objective_free(0, 1.0)?;
    for g in &scn.grid {
        let a_q = conj_outer(&g.a_tx);
        let b_q = beta(g, scn.cfg.sigma2_s);
        let c_k = steering_quadform(&g.a_tx, wk);
        let coef_w = 2.0 * c_k * b_q * b_q;
        p.add_constraint(SdpConstraint {
            blocks: vec![
                Some(&a_q * Complex64::new(coef_w, 0.0)),
                Some(&a_q * Complex64::new(2.0 * b_q, 0.0)),
            ],
            free: vec![-1.0],
            sense: ConstraintSense::Ge,
            rhs: b_q * b_q * c_k * c_k,
        })?;
    }
    let hh = channel_outer(&h.h);
    p.add_constraint(SdpConstraint {
        blocks: vec![
            Some(hh.clone()),
            Some(&hh * Complex64::new(-scn.cfg.gamma0, 0.0)),
        ],
        free: vec![0.0],
        sense: ConstraintSense::Ge,
        rhs: scn.cfg.gamma0 * scn.cfg.sigma2_c,
    })?;
    p.add_constraint(SdpConstraint {
        blocks: vec![
            Some(DMatrix::identity(mt, mt)),
            Some(DMatrix::identity(mt, mt)),
        ],
        free: vec![0.0],
        sense: ConstraintSense::Le,
        rhs: scn.cfg.p_max,
    })?;
    Ok(p)
}

/// Relaxed-covariance objective `min_q (beta tr(W A_q))^2 + 2 beta tr(R0 A_q)`.
fn p2_relaxed_objective(scn: &Scenario, w: &DMatrix<Complex64>, r0: &DMatrix<Complex64>) -> f64 {
    scn.grid
        .iter()
        .map(|g| {
            let b = beta(g, scn.cfg.sigma2_s);
            let gc = b * steering_quadform(&g.a_tx, w).max(0.0);
            let gs = b * steering_quadform(&g.a_tx, r0).max(0.0);
            gc * gc + 2.0 * gs
        })
        .fold(f64::INFINITY, f64::min)
}

struct ScaRun {
    w_tilde: DMatrix<Complex64>,
    r0_tilde: DMatrix<Complex64>,
    best_obj: f64,
    trace: Vec<f64>,
    converged: bool,
}

fn run_sca(
    scn: &Scenario,
    h: &CommChannel,
    w_init: DMatrix<Complex64>,
    opts: &SolverOptions,
) -> Result<ScaRun, BfError> {
    let mut wk = w_init;
    let mut trace = Vec::new();
    let mut best: Option<(DMatrix<Complex64>, DMatrix<Complex64>)> = None;
    let mut best_obj = f64::NEG_INFINITY;
    let mut converged = false;
    for _ in 0..opts.sca_max_outer {
        let problem = p2_subproblem(scn, h, &wk)?;
        let sol = sdp_solve(&problem, opts.sdp_tol, opts.sdp_max_iter)?;
        if !usable(&sol) {
            return Err(BfError::SolverFailed { status: sol.status });
        }
        let w_new = sol.blocks[0].clone();
        let r0_new = sol.blocks[1].clone();
        let obj = p2_relaxed_objective(scn, &w_new, &r0_new);
        if obj >= best_obj {
            best_obj = obj;
            best = Some((w_new.clone(), r0_new.clone()));
        }
        let done = trace
            .last()
            .is_some_and(|&prev: &f64| (obj - prev).abs() <= opts.sca_tol * obj.abs().max(1e-300));
        trace.push(obj);
        wk = w_new;
        if done {
            converged = true;
            break;
        }
    }
    let (w_tilde, r0_tilde) = best.ok_or(BfError::BadInput("no SCA iterations ran".into()))?;
    Ok(ScaRun {
        w_tilde,
        r0_tilde,
        best_obj,
        trace,
        converged,
    })
}

/// Joint transmit design: maximize the minimum of
/// `gamma_c_q^2 + 2 gamma_s_q` subject to the SINR threshold and the power
/// budget, by SCA over SDP relaxations plus rank-one reconstruction.
///
/// `init` overrides the linearization start; by default two starts are run
/// (a beam at the grid midpoint and one along the channel) and the better
/// result wins, since SCA is a local method.
pub fn solve_p2(
    scn: &Scenario,
    h: &CommChannel,
    init: Option<DMatrix<Complex64>>,
    opts: &SolverOptions,
) -> Result<BeamformingSolution, BfError> {
    check_sinr_feasible(scn, h)?;
    let mt = scn.cfg.mt;
    let p = scn.cfg.p_max;
    let starts: Vec<DMatrix<Complex64>> = match init {
        Some(w0) => vec![w0],
        None => {
            let mid = &scn.grid[scn.grid.len() / 2];
            let s1 = conj_outer(&mid.a_tx) * Complex64::new(p / mt as f64, 0.0);
            let s2 = channel_outer(&h.h) * Complex64::new(p / h.norm_sqr(), 0.0);
            vec![s1, s2]
        }
    };
    let mut best: Option<(f64, ScaRun)> = None;
    for w0 in starts {
        let run = run_sca(scn, h, w0, opts)?;
        let score = run.best_obj;
        if best.as_ref().is_none_or(|(s, _)| score > *s) {
            best = Some((score, run));
        }
    }
    let (_, run) = best.expect("at least one start");
    let rec = rank_one_reconstruct(&run.w_tilde, &run.r0_tilde, h);
    let (per_q, objective, binding) = metrics_for(scn, &rec.w, &rec.r0);
    Ok(BeamformingSolution {
        achieved_sinr: sinr_of(&rec.w, &rec.r0, h, scn.cfg.sigma2_c),
        per_q,
        objective,
        binding,
        iterations: run.trace.len(),
        converged: run.converged,
        relaxation_bound: None,
        objective_trace: run.trace,
        w: rec.w,
        r0: rec.r0,
    })
}

// ---------------------------------------------------------------------------
// Gaussian-only design (SDR + randomization)
// ---------------------------------------------------------------------------

/// Gaussian-only transmit design: maximize `min_q |alpha_q|^2 |a_q^T w|^2`
/// under the SNR threshold and power budget via SDR; extract by
/// eigendecomposition when the relaxation lands rank one, otherwise by
/// Gaussian randomization with SNR-equality rescaling (the dominant
/// eigenvector is always evaluated as a candidate too).
pub fn solve_p3(
    scn: &Scenario,
    h: &CommChannel,
    opts: &SolverOptions,
) -> Result<BeamformingSolution, BfError> {
    check_sinr_feasible(scn, h)?;
    let mt = scn.cfg.mt;
    let mut p = SdpProblem::new(vec![mt], 1, true);
    p.set_objective_free(0, 1.0)?;
    for g in &scn.grid {
        let a_q = conj_outer(&g.a_tx);
        let b_q = beta(g, scn.cfg.sigma2_s);
        p.add_constraint(SdpConstraint {
            blocks: vec![Some(&a_q * Complex64::new(b_q, 0.0))],
            free: vec![-1.0],
            sense: ConstraintSense::Ge,
            rhs: 0.0,
        })?;
    }
    p.add_constraint(SdpConstraint {
        blocks: vec![Some(channel_outer(&h.h))],
        free: vec![0.0],
        sense: ConstraintSense::Ge,
        rhs: scn.cfg.gamma0 * scn.cfg.sigma2_c,
    })?;
    p.add_constraint(SdpConstraint {
        blocks: vec![Some(DMatrix::identity(mt, mt))],
        free: vec![0.0],
        sense: ConstraintSense::Le,
        rhs: scn.cfg.p_max,
    })?;
    let sol = sdp_solve(&p, opts.sdp_tol, opts.sdp_max_iter)?;
    if !usable(&sol) {
        return Err(BfError::SolverFailed { status: sol.status });
    }
    let w_star = &sol.blocks[0];
    // relaxation optimum in objective units (gamma_c at the worst point,
    // converted back through the common slope)
    let mr = scn.cfg.mr as f64;
    let relaxation_bound = sol.free[0] * scn.cfg.sigma2_s / mr;

    let objective_of = |w: &DVector<Complex64>| -> f64 {
        scn.grid
            .iter()
            .map(|g| g.alpha2 * dot_unconj(&g.a_tx, w).norm_sqr())
            .fold(f64::INFINITY, f64::min)
    };
    let snr_req = scn.cfg.gamma0 * scn.cfg.sigma2_c;
    // candidate acceptance works to half the solution invariants' slack
    // (power within P + 1e-8, SINR within gamma0 - 1e-8): at tight rate
    // points the extracted vector sits within solver tolerance of both
    // boundaries at once.
    let feasible = |w: &DVector<Complex64>| -> bool {
        w.norm_squared() <= scn.cfg.p_max + 5e-9 * scn.cfg.p_max.max(1.0)
            && h.h.dotc(w).norm_sqr() >= snr_req * (1.0 - 1e-9)
    };

    let mut candidates: Vec<DVector<Complex64>> = Vec::new();
    let pairs = hermitian_eigen_desc(w_star);
    let (lam1, u1) = &pairs[0];
    if *lam1 > 0.0 {
        // dominant eigenvector, raw and rescaled to SNR equality
        let w_evd = u1 * Complex64::new(lam1.sqrt(), 0.0);
        let have = h.h.dotc(&w_evd).norm_sqr();
        if feasible(&w_evd) {
            candidates.push(w_evd.clone());
        }
        if have > 0.0 {
            let s = (snr_req / have).sqrt();
            let scaled = &w_evd * Complex64::new(s, 0.0);
            if feasible(&scaled) {
                candidates.push(scaled);
            }
        }
    }
    let rank_one = is_rank_one(w_star, opts.rank_one_ratio);
    let tried = if rank_one {
        0
    } else {
        let f = psd_sqrt(w_star);
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        rng.set_stream(u64::MAX - 2);
        for _ in 0..opts.n_randomizations {
            let v = &f * complex_gaussian_vector(mt, &mut rng);
            let den = h.h.dotc(&v).norm_sqr();
            if den <= 0.0 {
                continue;
            }
            let cand = &v * Complex64::new((snr_req / den).sqrt(), 0.0);
            if feasible(&cand) {
                candidates.push(cand);
            }
        }
        opts.n_randomizations
    };
    let w = candidates
        .into_iter()
        .max_by(|a, b| objective_of(a).partial_cmp(&objective_of(b)).unwrap())
        .ok_or(BfError::NoFeasibleRandomization {
            tried,
            relaxation_bound,
        })?;

    let r0 = DMatrix::zeros(mt, mt);
    let (per_q, _, binding) = metrics_for(scn, &w, &r0);
    let objective = objective_of(&w);
    Ok(BeamformingSolution {
        achieved_sinr: sinr_of(&w, &r0, h, scn.cfg.sigma2_c),
        per_q,
        objective,
        binding,
        iterations: sol.iterations,
        converged: true,
        objective_trace: vec![objective],
        relaxation_bound: Some(relaxation_bound),
        w,
        r0,
    })
}

// ---------------------------------------------------------------------------
// Closed-form single-point design
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Q1Branch {
    /// Budget-limited regime: full power straight at the sensing point.
    SensingAligned,
    /// SNR-limited regime: the beam lives in span{h, a^*} with the SNR
    /// constraint tight and full power spent.
    SnrLimited,
}

/// Closed-form Gaussian-only design for a single hypothesized location.
///
/// If `gamma0 <= P |h^H a^*|^2 / (M_t sigma_c^2)` the sensing-aligned beam
/// `w = sqrt(P) a^* / ||a||` already satisfies the SNR constraint;
/// otherwise the optimum splits between the channel direction (to pin the
/// SNR) and the in-plane sensing residual.
pub fn closed_form_q1(
    scn: &Scenario,
    h: &CommChannel,
) -> Result<(BeamformingSolution, Q1Branch), BfError> {
    if scn.grid.len() != 1 {
        return Err(BfError::BadInput(format!(
            "closed form needs exactly one grid point, got {}",
            scn.grid.len()
        )));
    }
    check_sinr_feasible(scn, h)?;
    let g = &scn.grid[0];
    let mt = scn.cfg.mt as f64;
    let p = scn.cfg.p_max;
    let astar = g.a_tx.map(|z| z.conj());
    let h_a = h.h.dotc(&astar); // h^H a^*
    let hn2 = h.norm_sqr();
    let snr_req = scn.cfg.gamma0 * scn.cfg.sigma2_c;

    let (w, branch) = if scn.cfg.gamma0 <= p * h_a.norm_sqr() / (mt * scn.cfg.sigma2_c) {
        (
            astar.clone() * Complex64::new((p / mt).sqrt(), 0.0),
            Q1Branch::SensingAligned,
        )
    } else {
        let e1 = &h.h / Complex64::new(hn2.sqrt(), 0.0);
        let e1a = e1.dotc(&astar); // e1^H a^*
        let proj = &astar - &e1 * e1a;
        let pn = proj.norm();
        let x1_mag = (snr_req / hn2).sqrt();
        let x1 = Complex64::new(x1_mag, 0.0) * (e1a / Complex64::new(e1a.norm().max(1e-300), 0.0));
        let mut w = &e1 * x1;
        if pn > 1e-9 * mt.sqrt() {
            let e2 = proj / Complex64::new(pn, 0.0);
            let e2a = e2.dotc(&astar);
            let x2_mag = (p - snr_req / hn2).max(0.0).sqrt();
            let x2 =
                Complex64::new(x2_mag, 0.0) * (e2a / Complex64::new(e2a.norm().max(1e-300), 0.0));
            w += &e2 * x2;
        }
        (w, Q1Branch::SnrLimited)
    };

    let r0 = DMatrix::zeros(scn.cfg.mt, scn.cfg.mt);
    let (per_q, _, binding) = metrics_for(scn, &w, &r0);
    let objective = g.alpha2 * dot_unconj(&g.a_tx, &w).norm_sqr();
    Ok((
        BeamformingSolution {
            achieved_sinr: sinr_of(&w, &r0, h, scn.cfg.sigma2_c),
            per_q,
            objective,
            binding,
            iterations: 0,
            converged: true,
            objective_trace: vec![objective],
            relaxation_bound: None,
            w,
            r0,
        },
        branch,
    ))
}

/// Beampattern power `|a^T w|^2` of the closed-form design (the quantity
/// the detection probability of the single-point design depends on).
pub fn q1_beampattern_power(sol: &BeamformingSolution, g: &GridPoint) -> f64 {
    dot_unconj(&g.a_tx, &sol.w).norm_sqr()
}

// ---------------------------------------------------------------------------
// Benchmarks
// ---------------------------------------------------------------------------

/// Benchmark 1: both signal types are transmitted but the receiver only
/// correlates with the deterministic component, so the transmit design
/// maximizes the worst deterministic beam gain
/// `min_q |alpha_q|^2 a_q^T R0 a_q^*` under the SINR and power constraints.
/// The returned `objective` is that gain (watts); detection performance of
/// this scheme is a Monte-Carlo matched-filter quantity.
pub fn benchmark_deterministic_only(
    scn: &Scenario,
    h: &CommChannel,
    opts: &SolverOptions,
) -> Result<BeamformingSolution, BfError> {
    check_sinr_feasible(scn, h)?;
    let mt = scn.cfg.mt;
    let mut p = SdpProblem::new(vec![mt, mt], 1, true);
    p.set_objective_free(0, 1.0)?;
    // epigraph variable in gamma_s units so the problem is well scaled;
    // converted back to watts on the way out
    for g in &scn.grid {
        let a_q = conj_outer(&g.a_tx);
        let b_q = beta(g, scn.cfg.sigma2_s);
        p.add_constraint(SdpConstraint {
            blocks: vec![None, Some(&a_q * Complex64::new(b_q, 0.0))],
            free: vec![-1.0],
            sense: ConstraintSense::Ge,
            rhs: 0.0,
        })?;
    }
    let hh = channel_outer(&h.h);
    p.add_constraint(SdpConstraint {
        blocks: vec![
            Some(hh.clone()),
            Some(&hh * Complex64::new(-scn.cfg.gamma0, 0.0)),
        ],
        free: vec![0.0],
        sense: ConstraintSense::Ge,
        rhs: scn.cfg.gamma0 * scn.cfg.sigma2_c,
    })?;
    p.add_constraint(SdpConstraint {
        blocks: vec![
            Some(DMatrix::identity(mt, mt)),
            Some(DMatrix::identity(mt, mt)),
        ],
        free: vec![0.0],
        sense: ConstraintSense::Le,
        rhs: scn.cfg.p_max,
    })?;
    let sol = sdp_solve(&p, opts.sdp_tol, opts.sdp_max_iter)?;
    if !usable(&sol) {
        return Err(BfError::SolverFailed { status: sol.status });
    }
    let gamma_to_watts = scn.cfg.sigma2_s / scn.cfg.mr as f64;
    let rec = rank_one_reconstruct(&sol.blocks[0], &sol.blocks[1], h);
    let (per_q, _, _) = metrics_for(scn, &rec.w, &rec.r0);
    let objective = scn
        .grid
        .iter()
        .map(|g| g.alpha2 * steering_quadform(&g.a_tx, &rec.r0).max(0.0))
        .fold(f64::INFINITY, f64::min);
    let binding = scn
        .grid
        .iter()
        .filter(|g| {
            g.alpha2 * steering_quadform(&g.a_tx, &rec.r0).max(0.0)
                <= objective * (1.0 + 1e-6) + 1e-300
        })
        .map(|g| g.index)
        .collect();
    Ok(BeamformingSolution {
        achieved_sinr: sinr_of(&rec.w, &rec.r0, h, scn.cfg.sigma2_c),
        per_q,
        objective,
        binding,
        iterations: sol.iterations,
        converged: true,
        objective_trace: vec![objective],
        relaxation_bound: Some(sol.free[0] * gamma_to_watts),
        w: rec.w,
        r0: rec.r0,
    })
}

/// Benchmark 3: maximize the minimum beampattern gain
/// `min_q a_q^T (W + R0) a_q^*` under the same constraints; a single SDP
/// plus rank-one reconstruction (which preserves all beampattern gains
/// exactly). `objective` is the worst beampattern gain (watts).
pub fn benchmark_beampattern_gain(
    scn: &Scenario,
    h: &CommChannel,
    opts: &SolverOptions,
) -> Result<BeamformingSolution, BfError> {
    check_sinr_feasible(scn, h)?;
    let mt = scn.cfg.mt;
    let mut p = SdpProblem::new(vec![mt, mt], 1, true);
    p.set_objective_free(0, 1.0)?;
    for g in &scn.grid {
        let a_q = conj_outer(&g.a_tx);
        p.add_constraint(SdpConstraint {
            blocks: vec![Some(a_q.clone()), Some(a_q.clone())],
            free: vec![-1.0],
            sense: ConstraintSense::Ge,
            rhs: 0.0,
        })?;
    }
    let hh = channel_outer(&h.h);
    p.add_constraint(SdpConstraint {
        blocks: vec![
            Some(hh.clone()),
            Some(&hh * Complex64::new(-scn.cfg.gamma0, 0.0)),
        ],
        free: vec![0.0],
        sense: ConstraintSense::Ge,
        rhs: scn.cfg.gamma0 * scn.cfg.sigma2_c,
    })?;
    p.add_constraint(SdpConstraint {
        blocks: vec![
            Some(DMatrix::identity(mt, mt)),
            Some(DMatrix::identity(mt, mt)),
        ],
        free: vec![0.0],
        sense: ConstraintSense::Le,
        rhs: scn.cfg.p_max,
    })?;
    let sol = sdp_solve(&p, opts.sdp_tol, opts.sdp_max_iter)?;
    if !usable(&sol) {
        return Err(BfError::SolverFailed { status: sol.status });
    }
    let rec = rank_one_reconstruct(&sol.blocks[0], &sol.blocks[1], h);
    let (per_q, _, _) = metrics_for(scn, &rec.w, &rec.r0);
    let gain = |g: &GridPoint| -> f64 {
        let ww = channel_outer(&rec.w);
        steering_quadform(&g.a_tx, &ww).max(0.0) + steering_quadform(&g.a_tx, &rec.r0).max(0.0)
    };
    let objective = scn.grid.iter().map(gain).fold(f64::INFINITY, f64::min);
    let binding = scn
        .grid
        .iter()
        .filter(|g| gain(g) <= objective * (1.0 + 1e-6) + 1e-300)
        .map(|g| g.index)
        .collect();
    Ok(BeamformingSolution {
        achieved_sinr: sinr_of(&rec.w, &rec.r0, h, scn.cfg.sigma2_c),
        per_q,
        objective,
        binding,
        iterations: sol.iterations,
        converged: true,
        objective_trace: vec![objective],
        relaxation_bound: Some(sol.free[0]),
        w: rec.w,
        r0: rec.r0,
    })
}

/// Benchmark 2: time switching between a full-power sensing phase and a
/// full-power communication phase.
#[derive(Debug, Clone)]
pub struct TimeSwitchingSolution {
    pub l_sense: usize,
    pub l_comm: usize,
    pub comm_w: DVector<Complex64>,
    pub sensing_r0: DMatrix<Complex64>,
    pub rate_achieved: f64,
    pub rate_full_time: f64,
}

/// Smallest communication share meeting the average-rate requirement; the
/// rest of the frame carries a full-power deterministic beam at the grid
/// midpoint.
pub fn benchmark_time_switching(
    scn: &Scenario,
    h: &CommChannel,
    rate_req: f64,
) -> Result<TimeSwitchingSolution, BfError> {
    if rate_req < 0.0 {
        return Err(BfError::BadInput(
            "rate requirement must be non-negative".into(),
        ));
    }
    let l = scn.cfg.l_symbols;
    let rate_full = (1.0 + scn.cfg.p_max * h.norm_sqr() / scn.cfg.sigma2_c).log2();
    if rate_req > rate_full * (1.0 + 1e-12) {
        return Err(BfError::InfeasibleRate {
            required: rate_req,
            available: rate_full,
        });
    }
    let l_comm = if rate_req == 0.0 {
        0
    } else {
        ((l as f64 * rate_req / rate_full) - 1e-9).ceil().max(0.0) as usize
    };
    let l_comm = l_comm.min(l);
    let mid = &scn.grid[scn.grid.len() / 2];
    let sensing_r0 = conj_outer(&mid.a_tx) * Complex64::new(scn.cfg.p_max / scn.cfg.mt as f64, 0.0);
    let comm_w = &h.h * Complex64::new((scn.cfg.p_max / h.norm_sqr()).sqrt(), 0.0);
    Ok(TimeSwitchingSolution {
        l_sense: l - l_comm,
        l_comm,
        comm_w,
        sensing_r0,
        rate_achieved: l_comm as f64 / l as f64 * rate_full,
        rate_full_time: rate_full,
    })
}

impl TimeSwitchingSolution {
    /// Worst-case detection probability over the grid: a matched filter in
    /// pure noise over the sensing share of the frame,
    /// `Q( Qinv(pfa) - sqrt(2 L_s gamma_s) )`; chance level when no slots
    /// are left for sensing.
    pub fn min_pd(&self, scn: &Scenario, pfa: f64) -> Result<f64, BfError> {
        if self.l_sense == 0 {
            return Ok(pfa);
        }
        let w0 = DVector::zeros(scn.cfg.mt);
        let qinv = gauss_q_inv(pfa)
            .map_err(|e| BfError::BadInput(format!("bad pfa for time switching: {e}")))?;
        let mut worst = f64::INFINITY;
        for g in &scn.grid {
            let (_, gs) = sensing_snrs(g, &w0, &self.sensing_r0, &scn.cfg);
            let pd = gauss_q(qinv - (2.0 * self.l_sense as f64 * gs).sqrt());
            worst = worst.min(pd);
        }
        Ok(worst)
    }
}

// ---------------------------------------------------------------------------
// Serialization of solutions
// ---------------------------------------------------------------------------

/// JSON wire form: `w` as interleaved re/im, `r0` as its lower triangle
/// (row major, diagonal included), also interleaved.
#[derive(Debug, Serialize, Deserialize)]
struct SolutionWire {
    dim: usize,
    w_re_im: Vec<f64>,
    r0_lower_re_im: Vec<f64>,
    achieved_sinr: f64,
    objective: f64,
    per_q: Vec<PerGridMetrics>,
    binding: Vec<usize>,
    iterations: usize,
    converged: bool,
    objective_trace: Vec<f64>,
    relaxation_bound: Option<f64>,
}

impl BeamformingSolution {
    pub fn to_json(&self) -> String {
        let n = self.w.len();
        let mut w_re_im = Vec::with_capacity(2 * n);
        for z in self.w.iter() {
            w_re_im.push(z.re);
            w_re_im.push(z.im);
        }
        let mut r0_lower_re_im = Vec::with_capacity(n * (n + 1));
        for i in 0..n {
            for j in 0..=i {
                r0_lower_re_im.push(self.r0[(i, j)].re);
                r0_lower_re_im.push(self.r0[(i, j)].im);
            }
        }
        let wire = SolutionWire {
            dim: n,
            w_re_im,
            r0_lower_re_im,
            achieved_sinr: self.achieved_sinr,
            objective: self.objective,
            per_q: self.per_q.clone(),
            binding: self.binding.clone(),
            iterations: self.iterations,
            converged: self.converged,
            objective_trace: self.objective_trace.clone(),
            relaxation_bound: self.relaxation_bound,
        };
        serde_json::to_string_pretty(&wire).expect("solution serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, BfError> {
        let wire: SolutionWire =
            serde_json::from_str(text).map_err(|e| BfError::BadInput(e.to_string()))?;
        let n = wire.dim;
        if wire.w_re_im.len() != 2 * n || wire.r0_lower_re_im.len() != n * (n + 1) {
            return Err(BfError::BadInput(
                "wire lengths inconsistent with dim".into(),
            ));
        }
        let w = DVector::from_fn(n, |i, _| {
            Complex64::new(wire.w_re_im[2 * i], wire.w_re_im[2 * i + 1])
        });
        let mut r0 = DMatrix::<Complex64>::zeros(n, n);
        let mut k = 0;
        for i in 0..n {
            for j in 0..=i {
                let z = Complex64::new(wire.r0_lower_re_im[2 * k], wire.r0_lower_re_im[2 * k + 1]);
                r0[(i, j)] = z;
                r0[(j, i)] = z.conj();
                k += 1;
            }
        }
        Ok(Self {
            w,
            r0,
            achieved_sinr: wire.achieved_sinr,
            per_q: wire.per_q,
            objective: wire.objective,
            binding: wire.binding,
            iterations: wire.iterations,
            converged: wire.converged,
            objective_trace: wire.objective_trace,
            relaxation_bound: wire.relaxation_bound,
        })
    }
}
