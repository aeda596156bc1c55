//! Signal-level simulation of the two detection hypotheses and the
//! detectors themselves.
//!
//! Under target absence the sensing receiver sees pure noise; under
//! presence it sees the two-hop echo of the transmitted waveform,
//!
//! ```text
//! H0: y(l) = n(l)
//! H1: y(l) = alpha b a^T (w s(l) + x0(l)) + n(l)
//! ```
//!
//! with `s(l)` the unit-power Gaussian data symbol and `n(l)` circular
//! Gaussian noise of power `sigma_s^2` per antenna. The likelihood-ratio
//! detector reduces to a received-energy term plus a matched-filter
//! correlation with the known deterministic component; this module provides
//! that reduced statistic, the raw log-likelihood-ratio evaluated directly
//! from the two densities (kept deliberately naive, with dense per-slot
//! inverses, as an oracle), the energy-only and matched-filter-only
//! reductions, threshold calibration for a target false-alarm rate, and
//! reproducible Monte-Carlo estimation of both error probabilities.
//!
//! Every statistic depends on the array observation only through the
//! combiner output `z(l) = b^H y(l)`, so the Monte-Carlo paths simulate
//! that scalar process directly (`z` is a sufficient statistic; its law
//! under each hypothesis is written below). Trials are seeded counter-style
//! `(seed, trial, hypothesis)` on separate ChaCha8 streams, which makes the
//! estimates independent of evaluation order and safe to parallelize.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use thiserror::Error;

use crate::analysis::{AnalysisError, OperatingPoint};
use crate::linalg::{dot_unconj, hermitian_defect, hermitian_eigen_desc};
use crate::scenario::GridPoint;
use crate::specfun::{chi2_tail_inv, gauss_q_inv, ChiSqTail};

#[derive(Debug, Error)]
pub enum DetectionError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error(
        "joint detector needs gamma_c > 0; route deterministic-only setups to the matched filter"
    )]
    DegenerateContext,
    #[error("waveform synthesis needs L >= rank(R0): L = {l}, rank = {rank}")]
    WaveformRank { l: usize, rank: usize },
    #[error("covariance input must be Hermitian PSD (defect {0:.2e})")]
    NotHermitian(f64),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Hypothesis {
    H0,
    H1,
}

/// One simulated observation window: `L` received vectors of length `M_r`.
#[derive(Debug, Clone)]
pub struct EchoBatch {
    pub hypothesis: Hypothesis,
    pub samples: Vec<DVector<Complex64>>,
    pub seed: u64,
    pub trial: u64,
}

// ---------------------------------------------------------------------------
// Threshold calibration
// ---------------------------------------------------------------------------

/// Detection threshold achieving the operating point's false-alarm target:
/// `delta = gc / (2 (1+gc)) * ( Qinv_{chi2_2L(lambda1)}(pfa) - lambda1 )`.
pub fn threshold_for_pfa(op: &OperatingPoint) -> Result<f64, AnalysisError> {
    let t = ChiSqTail::new(2 * op.l_symbols, op.lambda1())?;
    let x = chi2_tail_inv(t, op.pfa)?;
    Ok(op.gamma_c / (2.0 * (1.0 + op.gamma_c)) * (x - op.lambda1()))
}

// ---------------------------------------------------------------------------
// Detector context
// ---------------------------------------------------------------------------

/// Everything the joint detector needs about one grid point: the physical
/// signature, the transmit design, the SNR pair it induces, and the
/// calibrated threshold.
///
/// The cascade coefficient is taken real non-negative (`alpha =
/// sqrt(alpha2)`); a phase on it rotates `z(l)` uniformly and changes no
/// statistic distribution.
#[derive(Debug, Clone)]
pub struct DetectorContext {
    pub point: GridPoint,
    pub w: DVector<Complex64>,
    pub x0: Vec<DVector<Complex64>>,
    pub sigma2_s: f64,
    pub pfa: f64,
    pub gamma_c: f64,
    pub gamma_s: f64,
    /// NP decision threshold calibrated to `pfa`.
    pub threshold: f64,
    /// alpha * a^T w (complex amplitude of the Gaussian echo at the combiner)
    atw_amp: Complex64,
    /// m(l) = alpha * a^T x0(l)
    m_seq: Vec<Complex64>,
}

impl DetectorContext {
    pub fn new(
        point: &GridPoint,
        w: DVector<Complex64>,
        x0: Vec<DVector<Complex64>>,
        sigma2_s: f64,
        pfa: f64,
    ) -> Result<Self, DetectionError> {
        let mt = point.mt();
        if w.len() != mt || x0.iter().any(|v| v.len() != mt) {
            return Err(DetectionError::Dimension(format!(
                "w and x0 slots must have length {mt}"
            )));
        }
        if x0.is_empty() {
            return Err(DetectionError::Dimension(
                "x0 must contain L >= 1 slots".into(),
            ));
        }
        let l = x0.len();
        let alpha = point.alpha2.sqrt();
        let mr = point.mr() as f64;
        let atw_amp = dot_unconj(&point.a_tx, &w) * Complex64::new(alpha, 0.0);
        let m_seq: Vec<Complex64> = x0
            .iter()
            .map(|slot| dot_unconj(&point.a_tx, slot) * Complex64::new(alpha, 0.0))
            .collect();
        let gamma_c = atw_amp.norm_sqr() * mr / sigma2_s;
        let gamma_s = m_seq.iter().map(|m| m.norm_sqr()).sum::<f64>() / l as f64 * mr / sigma2_s;
        if gamma_c <= 0.0 {
            return Err(DetectionError::DegenerateContext);
        }
        let op = OperatingPoint::new(gamma_c, gamma_s, l as u64, pfa)?;
        let threshold = threshold_for_pfa(&op)?;
        Ok(Self {
            point: point.clone(),
            w,
            x0,
            sigma2_s,
            pfa,
            gamma_c,
            gamma_s,
            threshold,
            atw_amp,
            m_seq,
        })
    }

    /// Canonical single-antenna context reproducing an operating point
    /// exactly: unit gain and noise, `w = sqrt(gamma_c)`, constant
    /// deterministic slot `sqrt(gamma_s)`. The statistic's law depends on
    /// the scenario only through `(gamma_c, gamma_s, L)`, so this context
    /// is the natural Monte-Carlo oracle for the closed forms.
    pub fn from_operating_point(op: &OperatingPoint) -> Result<Self, DetectionError> {
        let point = GridPoint {
            index: 0,
            phi: 0.0,
            theta: 0.0,
            alpha2: 1.0,
            a_tx: DVector::from_element(1, Complex64::new(1.0, 0.0)),
            b_rx: DVector::from_element(1, Complex64::new(1.0, 0.0)),
        };
        let w = DVector::from_element(1, Complex64::new(op.gamma_c.sqrt(), 0.0));
        let x0 = vec![
            DVector::from_element(1, Complex64::new(op.gamma_s.sqrt(), 0.0));
            op.l_symbols as usize
        ];
        Self::new(&point, w, x0, 1.0, op.pfa)
    }

    pub fn l_symbols(&self) -> usize {
        self.x0.len()
    }

    pub fn operating_point(&self) -> OperatingPoint {
        OperatingPoint::new(
            self.gamma_c,
            self.gamma_s,
            self.l_symbols() as u64,
            self.pfa,
        )
        .expect("context was validated")
    }

    /// Combiner-output sequence `z(l) = b^H y(l)` of a batch.
    pub fn project(&self, batch: &EchoBatch) -> Vec<Complex64> {
        batch
            .samples
            .iter()
            .map(|y| self.point.b_rx.dotc(y))
            .collect()
    }
}

// ---------------------------------------------------------------------------
// Deterministic waveform synthesis
// ---------------------------------------------------------------------------

/// Synthesize `L` deterministic slots whose sample covariance equals `r0`
/// exactly: eigen-decompose `r0` and spread the scaled eigenvectors over
/// orthogonal discrete-Fourier rows, one per retained eigenvalue. The seed
/// only randomizes a per-component phase, which leaves the covariance
/// untouched.
pub fn synth_deterministic_waveform(
    r0: &DMatrix<Complex64>,
    l: usize,
    seed: u64,
) -> Result<Vec<DVector<Complex64>>, DetectionError> {
    let n = r0.nrows();
    if r0.ncols() != n {
        return Err(DetectionError::Dimension("r0 must be square".into()));
    }
    if l == 0 {
        return Err(DetectionError::WaveformRank { l: 0, rank: 0 });
    }
    let defect = hermitian_defect(r0);
    if defect > 1e-8 {
        return Err(DetectionError::NotHermitian(defect));
    }
    let norm = r0.norm();
    if norm == 0.0 {
        return Ok(vec![DVector::zeros(n); l]);
    }
    let pairs = hermitian_eigen_desc(r0);
    let keep: Vec<(f64, DVector<Complex64>)> = pairs
        .into_iter()
        .filter(|(v, _)| *v > 1e-12 * norm)
        .collect();
    if keep.len() > l {
        return Err(DetectionError::WaveformRank {
            l,
            rank: keep.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(u64::MAX - 1);
    let phases: Vec<Complex64> = (0..keep.len())
        .map(|_| Complex64::from_polar(1.0, rng.random::<f64>() * 2.0 * std::f64::consts::PI))
        .collect();
    let mut slots = vec![DVector::<Complex64>::zeros(n); l];
    for (slot_idx, slot) in slots.iter_mut().enumerate() {
        for (i, (val, vec)) in keep.iter().enumerate() {
            // DFT row i: exp(j 2 pi i l / L), rows are orthogonal with norm L
            let tone = Complex64::from_polar(
                1.0,
                2.0 * std::f64::consts::PI * (i as f64) * (slot_idx as f64) / l as f64,
            );
            let coef = Complex64::new(val.max(0.0).sqrt(), 0.0) * phases[i] * tone;
            *slot += vec * coef;
        }
    }
    Ok(slots)
}

/// Sample covariance `(1/L) sum x(l) x(l)^H` of a slot sequence.
pub fn sample_covariance(slots: &[DVector<Complex64>]) -> DMatrix<Complex64> {
    let n = slots.first().map(|s| s.len()).unwrap_or(0);
    let mut acc = DMatrix::<Complex64>::zeros(n, n);
    for s in slots {
        acc += s * s.adjoint();
    }
    acc / Complex64::new(slots.len().max(1) as f64, 0.0)
}

// ---------------------------------------------------------------------------
// Echo simulation
// ---------------------------------------------------------------------------

fn trial_rng(seed: u64, trial: u64, hypothesis: Hypothesis) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = match hypothesis {
        Hypothesis::H0 => 0,
        Hypothesis::H1 => 1,
    };
    rng.set_stream(2 * trial + h);
    rng
}

fn cgauss<R: Rng + ?Sized>(var: f64, rng: &mut R) -> Complex64 {
    let s = (0.5 * var).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re * s, im * s)
}

/// Simulate one full-array observation window, deterministic per
/// `(seed, trial, hypothesis)`.
pub fn simulate_echo_batch(
    ctx: &DetectorContext,
    hypothesis: Hypothesis,
    seed: u64,
    trial: u64,
) -> EchoBatch {
    let mut rng = trial_rng(seed, trial, hypothesis);
    let mr = ctx.point.mr();
    let alpha = Complex64::new(ctx.point.alpha2.sqrt(), 0.0);
    let samples = (0..ctx.l_symbols())
        .map(|l| {
            let mut y = DVector::<Complex64>::zeros(mr);
            if hypothesis == Hypothesis::H1 {
                let s = cgauss(1.0, &mut rng);
                let atx = dot_unconj(&ctx.point.a_tx, &ctx.x0[l]);
                let atw = dot_unconj(&ctx.point.a_tx, &ctx.w);
                let amp = alpha * (atw * s + atx);
                y += ctx.point.b_rx.map(|b| b * amp);
            }
            for i in 0..mr {
                y[i] += cgauss(ctx.sigma2_s, &mut rng);
            }
            y
        })
        .collect();
    EchoBatch {
        hypothesis,
        samples,
        seed,
        trial,
    }
}

/// Simulate `trials` batches lazily under one hypothesis.
pub fn simulate_echoes<'a>(
    ctx: &'a DetectorContext,
    hypothesis: Hypothesis,
    trials: u64,
    seed: u64,
) -> impl Iterator<Item = EchoBatch> + 'a {
    (0..trials).map(move |t| simulate_echo_batch(ctx, hypothesis, seed, t))
}

// ---------------------------------------------------------------------------
// Test statistics
// ---------------------------------------------------------------------------

/// Joint NP statistic (energy + matched-filter correlation):
///
/// ```text
/// T = gc / (Mr s2 (1+gc)) * sum |z(l)|^2
///   + 2 / (s2 (1+gc)) * Re sum conj(m(l)) z(l),     z(l) = b^H y(l)
/// ```
pub fn np_statistic(ctx: &DetectorContext, batch: &EchoBatch) -> Result<f64, DetectionError> {
    if ctx.gamma_c <= 0.0 {
        return Err(DetectionError::DegenerateContext);
    }
    let z = ctx.project(batch);
    Ok(np_statistic_projected(ctx, &z))
}

/// Same statistic evaluated on a pre-combined sequence `z(l) = b^H y(l)`.
pub fn np_statistic_projected(ctx: &DetectorContext, z: &[Complex64]) -> f64 {
    let mr = ctx.point.mr() as f64;
    let s2 = ctx.sigma2_s;
    let gc = ctx.gamma_c;
    let mut energy = 0.0;
    let mut corr = Complex64::new(0.0, 0.0);
    for (zl, ml) in z.iter().zip(&ctx.m_seq) {
        energy += zl.norm_sqr();
        corr += ml.conj() * zl;
    }
    gc / (mr * s2 * (1.0 + gc)) * energy + 2.0 / (s2 * (1.0 + gc)) * corr.re
}

/// Energy-only reduction (the whole statistic when no deterministic
/// component is transmitted).
pub fn energy_statistic(ctx: &DetectorContext, batch: &EchoBatch) -> Result<f64, DetectionError> {
    if ctx.gamma_c <= 0.0 {
        return Err(DetectionError::DegenerateContext);
    }
    let mr = ctx.point.mr() as f64;
    let gc = ctx.gamma_c;
    let energy: f64 = ctx.project(batch).iter().map(|z| z.norm_sqr()).sum();
    Ok(gc / (mr * ctx.sigma2_s * (1.0 + gc)) * energy)
}

/// Per-slot observation covariance `sigma2 I + |alpha a^T w|^2 b b^H`.
pub fn slot_covariance(ctx: &DetectorContext) -> DMatrix<Complex64> {
    let mr = ctx.point.mr();
    let mut m = DMatrix::<Complex64>::identity(mr, mr) * Complex64::new(ctx.sigma2_s, 0.0);
    let g = ctx.atw_amp.norm_sqr();
    for i in 0..mr {
        for j in 0..mr {
            m[(i, j)] += ctx.point.b_rx[i] * ctx.point.b_rx[j].conj() * Complex64::new(g, 0.0);
        }
    }
    m
}

/// Rank-one-update closed form of the per-slot inverse covariance:
/// `(1/s2) (I - gc/(Mr (1+gc)) b b^H)`.
pub fn slot_covariance_inv_woodbury(ctx: &DetectorContext) -> DMatrix<Complex64> {
    let mr = ctx.point.mr();
    let gc = ctx.gamma_c;
    let coef = gc / (mr as f64 * (1.0 + gc));
    let mut m = DMatrix::<Complex64>::identity(mr, mr);
    for i in 0..mr {
        for j in 0..mr {
            m[(i, j)] -= ctx.point.b_rx[i] * ctx.point.b_rx[j].conj() * Complex64::new(coef, 0.0);
        }
    }
    m / Complex64::new(ctx.sigma2_s, 0.0)
}

/// Log-likelihood ratio evaluated straight from the two densities with a
/// dense per-slot inverse — the oracle form of the detector.
///
/// Deciding `llr >= ln(delta)` with `ln(delta) = threshold -
/// llr_threshold_offset(ctx)` reproduces the [`np_statistic`] decision
/// exactly.
pub fn llr_statistic(ctx: &DetectorContext, batch: &EchoBatch) -> Result<f64, DetectionError> {
    let m = slot_covariance(ctx);
    let minv = m
        .clone()
        .try_inverse()
        .ok_or_else(|| DetectionError::Numerical("slot covariance not invertible".into()))?;
    let chol = m
        .clone()
        .cholesky()
        .ok_or_else(|| DetectionError::Numerical("slot covariance not PD".into()))?;
    let ln_det: f64 = (0..ctx.point.mr())
        .map(|i| 2.0 * chol.l_dirty()[(i, i)].re.ln())
        .sum();
    let mr = ctx.point.mr() as f64;
    let s2 = ctx.sigma2_s;

    let mut acc = 0.0;
    for (l, y) in batch.samples.iter().enumerate() {
        let u2 = ctx.point.b_rx.map(|b| b * ctx.m_seq[l]);
        let d = y - u2;
        let quad = d.dotc(&(&minv * &d)).re;
        acc += y.norm_squared() / s2 - quad;
    }
    Ok(acc + batch.samples.len() as f64 * (mr * s2.ln() - ln_det))
}

/// Offset relating the reduced statistic to the raw log-likelihood ratio:
/// `T = llr + offset`, so the raw threshold is `ln(delta) = threshold - offset`.
pub fn llr_threshold_offset(ctx: &DetectorContext) -> Result<f64, DetectionError> {
    let m = slot_covariance(ctx);
    let minv = m
        .clone()
        .try_inverse()
        .ok_or_else(|| DetectionError::Numerical("slot covariance not invertible".into()))?;
    let chol = m
        .cholesky()
        .ok_or_else(|| DetectionError::Numerical("slot covariance not PD".into()))?;
    let ln_det: f64 = (0..ctx.point.mr())
        .map(|i| 2.0 * chol.l_dirty()[(i, i)].re.ln())
        .sum();
    let b = &ctx.point.b_rx;
    let bmb = b.dotc(&(&minv * b)).re;
    let msum: f64 = ctx.m_seq.iter().map(|m| m.norm_sqr()).sum();
    let l = ctx.l_symbols() as f64;
    let mr = ctx.point.mr() as f64;
    Ok(msum * bmb + l * (ln_det - mr * ctx.sigma2_s.ln()))
}

// ---------------------------------------------------------------------------
// Matched filter (deterministic-component-only receiver)
// ---------------------------------------------------------------------------

/// Matched-filter receiver context: correlates with the known deterministic
/// component and treats any Gaussian echo as extra noise. This is the
/// benchmark receiver, and the only detector defined at `gamma_c = 0`.
#[derive(Debug, Clone)]
pub struct MatchedFilterContext {
    pub point: GridPoint,
    pub sigma2_s: f64,
    pub pfa: f64,
    pub gamma_c: f64,
    pub gamma_s: f64,
    /// Threshold on the correlation statistic, exact under target absence
    /// (the statistic is Gaussian there).
    pub threshold: f64,
    atw_amp: Complex64,
    m_seq: Vec<Complex64>,
}

impl MatchedFilterContext {
    pub fn new(
        point: &GridPoint,
        w: &DVector<Complex64>,
        x0: &[DVector<Complex64>],
        sigma2_s: f64,
        pfa: f64,
    ) -> Result<Self, DetectionError> {
        if x0.is_empty() {
            return Err(DetectionError::Dimension(
                "x0 must contain L >= 1 slots".into(),
            ));
        }
        let alpha = Complex64::new(point.alpha2.sqrt(), 0.0);
        let atw_amp = dot_unconj(&point.a_tx, w) * alpha;
        let m_seq: Vec<Complex64> = x0
            .iter()
            .map(|s| dot_unconj(&point.a_tx, s) * alpha)
            .collect();
        let mr = point.mr() as f64;
        let gamma_c = atw_amp.norm_sqr() * mr / sigma2_s;
        let gamma_s =
            m_seq.iter().map(|m| m.norm_sqr()).sum::<f64>() / x0.len() as f64 * mr / sigma2_s;
        let msum: f64 = m_seq.iter().map(|m| m.norm_sqr()).sum();
        let var0 = msum * mr * sigma2_s / 2.0;
        let threshold = gauss_q_inv(pfa).map_err(AnalysisError::from)? * var0.sqrt();
        Ok(Self {
            point: point.clone(),
            sigma2_s,
            pfa,
            gamma_c,
            gamma_s,
            threshold,
            atw_amp,
            m_seq,
        })
    }

    /// `Re sum conj(m(l)) z(l)`, `z = b^H y`.
    pub fn statistic(&self, batch: &EchoBatch) -> f64 {
        let mut corr = Complex64::new(0.0, 0.0);
        for (y, ml) in batch.samples.iter().zip(&self.m_seq) {
            corr += ml.conj() * self.point.b_rx.dotc(y);
        }
        corr.re
    }
}

// ---------------------------------------------------------------------------
// Monte-Carlo estimation
// ---------------------------------------------------------------------------

/// Wilson score interval for a binomial proportion.
pub fn wilson_interval(hits: u64, trials: u64, z: f64) -> (f64, f64) {
    let n = trials as f64;
    let p = hits as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Monte-Carlo false-alarm/detection estimate with Wilson 3-sigma intervals.
#[derive(Debug, Clone, Copy)]
pub struct McEstimate {
    pub trials: u64,
    pub pfa_hat: f64,
    pub pd_hat: f64,
    pub pfa_ci: (f64, f64),
    pub pd_ci: (f64, f64),
}

impl McEstimate {
    pub fn pfa_radius(&self) -> f64 {
        (self.pfa_ci.1 - self.pfa_ci.0) / 2.0
    }

    pub fn pd_radius(&self) -> f64 {
        (self.pd_ci.1 - self.pd_ci.0) / 2.0
    }
}

/// Scalar observation model at the combiner output:
/// `z(l) ~ CN(0, Mr s2)` under H0 and
/// `z(l) ~ CN(Mr m(l), Mr s2 (1 + gc))` under H1.
struct CombinerModel {
    m: Vec<Complex64>,
    mr: f64,
    noise_var: f64,
    signal_var: f64,
}

impl CombinerModel {
    fn new(point: &GridPoint, atw_amp: Complex64, m_seq: &[Complex64], sigma2: f64) -> Self {
        let mr = point.mr() as f64;
        let noise_var = mr * sigma2;
        Self {
            m: m_seq.to_vec(),
            mr,
            noise_var,
            signal_var: mr * mr * atw_amp.norm_sqr() + noise_var,
        }
    }

    /// Draw z(l) sequentially and fold it into (energy, correlation).
    fn accumulate<R: Rng + ?Sized>(&self, hyp: Hypothesis, rng: &mut R) -> (f64, f64) {
        let mut energy = 0.0;
        let mut corr = Complex64::new(0.0, 0.0);
        match hyp {
            Hypothesis::H0 => {
                for ml in &self.m {
                    let z = cgauss(self.noise_var, rng);
                    energy += z.norm_sqr();
                    corr += ml.conj() * z;
                }
            }
            Hypothesis::H1 => {
                for ml in &self.m {
                    let z = ml * Complex64::new(self.mr, 0.0) + cgauss(self.signal_var, rng);
                    energy += z.norm_sqr();
                    corr += ml.conj() * z;
                }
            }
        }
        (energy, corr.re)
    }
}

fn mc_exceedance<F>(trials: u64, seed: u64, model: &CombinerModel, decide: F) -> (u64, u64)
where
    F: Fn(f64, f64) -> bool + Sync,
{
    let chunk: u64 = 1024;
    let n_chunks = trials.div_ceil(chunk);
    (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let lo = c * chunk;
            let hi = ((c + 1) * chunk).min(trials);
            let mut fa = 0u64;
            let mut det = 0u64;
            for t in lo..hi {
                let mut rng = trial_rng(seed, t, Hypothesis::H0);
                let (e, m) = model.accumulate(Hypothesis::H0, &mut rng);
                if decide(e, m) {
                    fa += 1;
                }
                let mut rng = trial_rng(seed, t, Hypothesis::H1);
                let (e, m) = model.accumulate(Hypothesis::H1, &mut rng);
                if decide(e, m) {
                    det += 1;
                }
            }
            (fa, det)
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1))
}

/// Monte-Carlo exceedance frequencies of the joint NP statistic at the
/// context's threshold, under both hypotheses.
pub fn mc_detect(ctx: &DetectorContext, trials: u64, seed: u64) -> McEstimate {
    let model = CombinerModel::new(&ctx.point, ctx.atw_amp, &ctx.m_seq, ctx.sigma2_s);
    let mr = ctx.point.mr() as f64;
    let gc = ctx.gamma_c;
    let s2 = ctx.sigma2_s;
    let ce = gc / (mr * s2 * (1.0 + gc));
    let cm = 2.0 / (s2 * (1.0 + gc));
    let thr = ctx.threshold;
    let (fa, det) = mc_exceedance(trials, seed, &model, move |energy, corr| {
        ce * energy + cm * corr >= thr
    });
    McEstimate {
        trials,
        pfa_hat: fa as f64 / trials as f64,
        pd_hat: det as f64 / trials as f64,
        pfa_ci: wilson_interval(fa, trials, 3.0),
        pd_ci: wilson_interval(det, trials, 3.0),
    }
}

/// Monte-Carlo for the canonical context of an operating point.
pub fn mc_detect_at(
    op: &OperatingPoint,
    trials: u64,
    seed: u64,
) -> Result<McEstimate, DetectionError> {
    let ctx = DetectorContext::from_operating_point(op)?;
    Ok(mc_detect(&ctx, trials, seed))
}

/// Monte-Carlo exceedance of the matched-filter statistic at its exact-H0
/// threshold; any Gaussian echo component inflates the H1 variance and is
/// treated as noise by the receiver.
pub fn mc_matched_filter(ctx: &MatchedFilterContext, trials: u64, seed: u64) -> McEstimate {
    let model = CombinerModel::new(&ctx.point, ctx.atw_amp, &ctx.m_seq, ctx.sigma2_s);
    let thr = ctx.threshold;
    let (fa, det) = mc_exceedance(trials, seed, &model, move |_, corr| corr >= thr);
    McEstimate {
        trials,
        pfa_hat: fa as f64 / trials as f64,
        pd_hat: det as f64 / trials as f64,
        pfa_ci: wilson_interval(fa, trials, 3.0),
        pd_ci: wilson_interval(det, trials, 3.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{pd_exact, pd_gaussian_only};
    use approx::assert_relative_eq;
    use rand::SeedableRng;

    fn test_point(mt: usize, mr: usize) -> GridPoint {
        GridPoint {
            index: 0,
            phi: 0.01,
            theta: 0.015,
            alpha2: 0.5,
            a_tx: crate::scenario::steering(mt, 0.5, 0.01),
            b_rx: crate::scenario::steering(mr, 0.5, 0.015),
        }
    }

    fn random_psd(n: usize, scale: f64, seed: u64) -> DMatrix<Complex64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = DMatrix::<Complex64>::from_fn(n, n, |_, _| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            Complex64::new(re, im)
        });
        (&g * g.adjoint()) * Complex64::new(scale / n as f64, 0.0)
    }

    fn test_ctx(mt: usize, mr: usize, l: usize, seed: u64) -> DetectorContext {
        let point = test_point(mt, mr);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = crate::linalg::complex_gaussian_vector(mt, &mut rng);
        let r0 = random_psd(mt, 1.5, seed + 1);
        let x0 = synth_deterministic_waveform(&r0, l, seed + 2).unwrap();
        DetectorContext::new(&point, w, x0, 0.8, 1e-2).unwrap()
    }

    #[test]
    fn waveform_covariance_exact() {
        // zero covariance -> zero waveform
        let z = DMatrix::<Complex64>::zeros(3, 3);
        let slots = synth_deterministic_waveform(&z, 5, 1).unwrap();
        assert!(slots.iter().all(|s| s.norm() == 0.0));

        // rank-one diagonal: all power on the first antenna
        let mut d = DMatrix::<Complex64>::zeros(3, 3);
        d[(0, 0)] = Complex64::new(2.5, 0.0);
        let slots = synth_deterministic_waveform(&d, 4, 2).unwrap();
        let ms: f64 = slots.iter().map(|s| s[0].norm_sqr()).sum::<f64>() / 4.0;
        assert_relative_eq!(ms, 2.5, max_relative = 1e-12);
        for s in &slots {
            assert!(s[1].norm() < 1e-14 && s[2].norm() < 1e-14);
        }

        // random PSD: sample covariance matches to 1e-10 Frobenius
        let r0 = random_psd(6, 3.0, 7);
        let slots = synth_deterministic_waveform(&r0, 16, 3).unwrap();
        let cov = sample_covariance(&slots);
        assert!((cov - &r0).norm() < 1e-10 * r0.norm().max(1.0));

        // L below rank fails
        let full = random_psd(6, 1.0, 8);
        assert!(matches!(
            synth_deterministic_waveform(&full, 4, 4),
            Err(DetectionError::WaveformRank { .. })
        ));
    }

    #[test]
    fn h0_noise_power_matches() {
        let ctx = test_ctx(4, 4, 64, 10);
        let trials = 400;
        let mut acc = 0.0;
        let mut count = 0usize;
        for batch in simulate_echoes(&ctx, Hypothesis::H0, trials, 99) {
            for y in &batch.samples {
                acc += y.norm_squared();
                count += y.len();
            }
        }
        let per_antenna = acc / count as f64;
        let se = ctx.sigma2_s / (count as f64).sqrt();
        assert!(
            (per_antenna - ctx.sigma2_s).abs() < 3.0 * se,
            "{per_antenna} vs {}",
            ctx.sigma2_s
        );
    }

    #[test]
    fn h1_noise_free_echo_is_rank_one() {
        // sigma -> 0, x0 = 0: every sample proportional to b
        let point = test_point(3, 5);
        let w = DVector::from_element(3, Complex64::new(0.4, 0.1));
        let x0 = vec![DVector::zeros(3); 8];
        let ctx = DetectorContext::new(&point, w, x0, 1e-12, 1e-2).unwrap();
        let batch = simulate_echo_batch(&ctx, Hypothesis::H1, 5, 0);
        for y in &batch.samples {
            // subtract projection onto b, remainder should be noise-tiny
            let b = &ctx.point.b_rx;
            let coef = b.dotc(y) / Complex64::new(b.norm_squared(), 0.0);
            let resid = y - b.map(|e| e * coef);
            assert!(resid.norm() < 1e-4 * y.norm().max(1e-12));
        }
    }

    #[test]
    fn h1_combiner_variance_matches_moment() {
        let ctx = test_ctx(4, 6, 32, 11);
        let mr = ctx.point.mr() as f64;
        let expect = mr * ctx.sigma2_s * (1.0 + ctx.gamma_c);
        let trials = 600u64;
        let mut acc = 0.0;
        let mut n = 0usize;
        for batch in simulate_echoes(&ctx, Hypothesis::H1, trials, 5) {
            let z = ctx.project(&batch);
            for (l, zl) in z.iter().enumerate() {
                let centered = zl - ctx.m_seq[l] * Complex64::new(mr, 0.0);
                acc += centered.norm_sqr();
                n += 1;
            }
        }
        let var = acc / n as f64;
        // variance of |CN|^2 has relative sd sqrt(1/n)-ish
        let tol = 3.0 * expect / (n as f64).sqrt() * 1.5;
        assert!((var - expect).abs() < tol, "{var} vs {expect}");
    }

    #[test]
    fn statistic_trivial_cases() {
        let ctx = test_ctx(3, 3, 16, 12);
        let zero_batch = EchoBatch {
            hypothesis: Hypothesis::H0,
            samples: vec![DVector::zeros(3); 16],
            seed: 0,
            trial: 0,
        };
        assert_eq!(np_statistic(&ctx, &zero_batch).unwrap(), 0.0);

        // x0 = 0 reduces the joint statistic to the energy statistic
        let point = test_point(3, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let w = crate::linalg::complex_gaussian_vector(3, &mut rng);
        let ctx0 = DetectorContext::new(&point, w, vec![DVector::zeros(3); 16], 0.7, 1e-2).unwrap();
        let batch = simulate_echo_batch(&ctx0, Hypothesis::H1, 3, 1);
        let t = np_statistic(&ctx0, &batch).unwrap();
        let e = energy_statistic(&ctx0, &batch).unwrap();
        assert_relative_eq!(t, e, max_relative = 1e-12);
    }

    #[test]
    fn completed_square_form_matches() {
        // T == gc/(Mr s2 (1+gc)) sum |z + (Mr/gc) m|^2 - L gs/((1+gc) gc)
        let ctx = test_ctx(4, 4, 32, 13);
        let mr = ctx.point.mr() as f64;
        let gc = ctx.gamma_c;
        let gs = ctx.gamma_s;
        let l = ctx.l_symbols() as f64;
        for trial in 0..20 {
            let batch = simulate_echo_batch(&ctx, Hypothesis::H1, 17, trial);
            let t = np_statistic(&ctx, &batch).unwrap();
            let z = ctx.project(&batch);
            let mut acc = 0.0;
            for (zl, ml) in z.iter().zip(&ctx.m_seq) {
                acc += (zl + ml * Complex64::new(mr / gc, 0.0)).norm_sqr();
            }
            let alt = gc / (mr * ctx.sigma2_s * (1.0 + gc)) * acc - l * gs / ((1.0 + gc) * gc);
            assert_relative_eq!(t, alt, max_relative = 1e-8);
        }
    }

    #[test]
    fn woodbury_inverse_matches_dense() {
        let ctx = test_ctx(5, 6, 8, 14);
        let m = slot_covariance(&ctx);
        let direct = m.clone().try_inverse().unwrap();
        let wood = slot_covariance_inv_woodbury(&ctx);
        let rel = (&direct - &wood).norm() / direct.norm();
        assert!(rel < 1e-8, "relative deviation {rel}");
    }

    #[test]
    fn llr_and_np_decisions_agree() {
        let ctx = test_ctx(4, 5, 24, 15);
        let offset = llr_threshold_offset(&ctx).unwrap();
        let ln_delta = ctx.threshold - offset;
        let mut h1_hits = 0;
        for trial in 0..500 {
            let hyp = if trial % 2 == 0 {
                Hypothesis::H0
            } else {
                Hypothesis::H1
            };
            let batch = simulate_echo_batch(&ctx, hyp, 33, trial);
            let t = np_statistic(&ctx, &batch).unwrap();
            let llr = llr_statistic(&ctx, &batch).unwrap();
            // value identity T = llr + offset
            assert_relative_eq!(t, llr + offset, max_relative = 1e-8, epsilon = 1e-10);
            // decision identity
            assert_eq!(t >= ctx.threshold, llr >= ln_delta);
            if t >= ctx.threshold && hyp == Hypothesis::H1 {
                h1_hits += 1;
            }
        }
        assert!(h1_hits > 0, "test should exercise both decision outcomes");
    }

    #[test]
    fn llr_separation_grows_with_duration() {
        let mut prev_gap = 0.0;
        for &l in &[8usize, 32, 128] {
            let ctx = test_ctx(3, 3, l, 16);
            let trials = 60;
            let mean = |hyp| {
                simulate_echoes(&ctx, hyp, trials, 7)
                    .map(|b| llr_statistic(&ctx, &b).unwrap())
                    .sum::<f64>()
                    / trials as f64
            };
            let gap = mean(Hypothesis::H1) - mean(Hypothesis::H0);
            assert!(gap > prev_gap, "L={l}: gap {gap} <= {prev_gap}");
            prev_gap = gap;
        }
    }

    #[test]
    fn energy_ranking_matches_llr_when_deterministic_absent() {
        let point = test_point(3, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let w = crate::linalg::complex_gaussian_vector(3, &mut rng);
        let ctx = DetectorContext::new(&point, w, vec![DVector::zeros(3); 12], 0.9, 1e-2).unwrap();
        let mut pairs: Vec<(f64, f64)> = (0..40)
            .map(|t| {
                let b = simulate_echo_batch(&ctx, Hypothesis::H1, 4, t);
                (
                    energy_statistic(&ctx, &b).unwrap(),
                    llr_statistic(&ctx, &b).unwrap(),
                )
            })
            .collect();
        pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        for win in pairs.windows(2) {
            assert!(win[1].1 >= win[0].1 - 1e-9, "llr must rank identically");
        }
    }

    #[test]
    fn threshold_special_case_and_roundtrip() {
        // gamma_s = 0: delta = gc/(2(1+gc)) Qinv_{chi2_2L(0)}(pfa)
        let op = OperatingPoint::new(0.4, 0.0, 64, 1e-3).unwrap();
        let d = threshold_for_pfa(&op).unwrap();
        let x = chi2_tail_inv(ChiSqTail::new(128, 0.0).unwrap(), 1e-3).unwrap();
        assert_relative_eq!(d, 0.4 / 2.8 * x, max_relative = 1e-12);
        let back = crate::analysis::pfa_at_threshold(&op, d).unwrap();
        assert_relative_eq!(back, 1e-3, max_relative = 1e-9);
    }

    #[test]
    fn projected_statistic_equals_full_batch() {
        let ctx = test_ctx(4, 7, 16, 18);
        for t in 0..10 {
            let batch = simulate_echo_batch(&ctx, Hypothesis::H1, 21, t);
            let z = ctx.project(&batch);
            let a = np_statistic(&ctx, &batch).unwrap();
            let b = np_statistic_projected(&ctx, &z);
            assert_eq!(a, b);
        }
    }

    #[test]
    fn normalized_statistic_moments() {
        // 2(1+gc)/gc T|H0 + lambda1 ~ chi2_2L(lambda1): mean 2L+l1, var 4L+4l1
        let op = OperatingPoint::new(0.5, 0.25, 128, 1e-2).unwrap();
        let ctx = DetectorContext::from_operating_point(&op).unwrap();
        let l1 = op.lambda1();
        let l2 = op.lambda2();
        let nu = 2.0 * op.l_symbols as f64;
        let trials = 20_000u64;
        let gc = op.gamma_c;

        let model = CombinerModel::new(&ctx.point, ctx.atw_amp, &ctx.m_seq, ctx.sigma2_s);
        let mr = ctx.point.mr() as f64;
        let s2 = ctx.sigma2_s;
        let ce = gc / (mr * s2 * (1.0 + gc));
        let cm = 2.0 / (s2 * (1.0 + gc));

        let stats = |hyp: Hypothesis, scale: f64, shift: f64| -> (f64, f64) {
            let mut m1 = 0.0;
            let mut m2 = 0.0;
            for t in 0..trials {
                let mut rng = trial_rng(77, t, hyp);
                let (e, c) = model.accumulate(hyp, &mut rng);
                let v = scale * (ce * e + cm * c) + shift;
                m1 += v;
                m2 += v * v;
            }
            let mean = m1 / trials as f64;
            (mean, m2 / trials as f64 - mean * mean)
        };

        let (mean0, var0) = stats(Hypothesis::H0, 2.0 * (1.0 + gc) / gc, l1);
        let exp_mean0 = nu + l1;
        let exp_var0 = 2.0 * nu + 4.0 * l1;
        assert!((mean0 - exp_mean0).abs() < 4.0 * (exp_var0 / trials as f64).sqrt());
        assert!((var0 - exp_var0).abs() < 0.1 * exp_var0);

        let (mean1, var1) = stats(Hypothesis::H1, 2.0 / gc, l1 / (1.0 + gc));
        let exp_mean1 = nu + l2;
        let exp_var1 = 2.0 * nu + 4.0 * l2;
        assert!((mean1 - exp_mean1).abs() < 4.0 * (exp_var1 / trials as f64).sqrt());
        assert!((var1 - exp_var1).abs() < 0.1 * exp_var1);
    }

    #[test]
    fn mc_detect_agrees_with_closed_forms() {
        // moderate point: pfa and pd both interior
        let op = OperatingPoint::new(10f64.powf(-0.5), 0.0, 1024, 1e-3).unwrap();
        let est = mc_detect_at(&op, 30_000, 123).unwrap();
        let pd = pd_exact(&op).unwrap();
        let pd_g = pd_gaussian_only(op.gamma_c, 1024, 1e-3).unwrap();
        assert_relative_eq!(pd, pd_g, max_relative = 1e-10);
        let se_fa = (op.pfa * (1.0 - op.pfa) / est.trials as f64).sqrt();
        let se_d = (pd * (1.0 - pd) / est.trials as f64).sqrt();
        assert!(
            (est.pfa_hat - op.pfa).abs() <= 3.0 * se_fa,
            "{} vs {}",
            est.pfa_hat,
            op.pfa
        );
        assert!(
            (est.pd_hat - pd).abs() <= 3.0 * se_d.max(1e-4),
            "{} vs {pd}",
            est.pd_hat
        );
    }

    #[test]
    fn mc_detect_degenerate_and_strong() {
        // hypotheses nearly coincide: pd ~ pfa
        let op = OperatingPoint::new(1e-6, 1e-7, 64, 0.05).unwrap();
        let est = mc_detect_at(&op, 20_000, 5).unwrap();
        assert!((est.pd_hat - est.pfa_hat).abs() < 0.02);

        // strong deterministic component: pd ~ 1
        let op = OperatingPoint::new(0.05, 1.0, 1024, 1e-3).unwrap();
        let est = mc_detect_at(&op, 2_000, 6).unwrap();
        assert!(est.pd_hat > 0.999);
    }

    #[test]
    fn mc_detect_deterministic_in_seed_and_order_free() {
        let op = OperatingPoint::new(0.3, 0.1, 64, 1e-2).unwrap();
        let a = mc_detect_at(&op, 4_000, 9).unwrap();
        let b = mc_detect_at(&op, 4_000, 9).unwrap();
        assert_eq!(a.pfa_hat, b.pfa_hat);
        assert_eq!(a.pd_hat, b.pd_hat);
    }

    #[test]
    fn matched_filter_threshold_is_exact_under_h0() {
        let point = test_point(4, 4);
        let r0 = random_psd(4, 2.0, 31);
        let x0 = synth_deterministic_waveform(&r0, 64, 5).unwrap();
        let w = DVector::zeros(4);
        let ctx = MatchedFilterContext::new(&point, &w, &x0, 0.6, 1e-2).unwrap();
        let est = mc_matched_filter(&ctx, 50_000, 44);
        let se = (1e-2f64 * 0.99 / 50_000.0).sqrt();
        assert!((est.pfa_hat - 1e-2).abs() <= 3.0 * se, "{}", est.pfa_hat);
    }

    #[test]
    fn matched_filter_pd_matches_gaussian_form() {
        // With a Gaussian echo present the statistic stays Gaussian:
        // pd = Q( (Qinv(pfa) - sqrt(2 L gs)) / sqrt(1 + gc) )
        let point = test_point(4, 4);
        let r0 = random_psd(4, 0.02, 32);
        let x0 = synth_deterministic_waveform(&r0, 128, 6).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let w = crate::linalg::complex_gaussian_vector(4, &mut rng) * Complex64::new(0.05, 0.0);
        let ctx = MatchedFilterContext::new(&point, &w, &x0, 0.7, 1e-2).unwrap();
        let est = mc_matched_filter(&ctx, 40_000, 45);
        let l = 128.0;
        let expect = crate::specfun::gauss_q(
            (gauss_q_inv(1e-2).unwrap() - (2.0 * l * ctx.gamma_s).sqrt())
                / (1.0 + ctx.gamma_c).sqrt(),
        );
        let se = (expect * (1.0 - expect) / 40_000.0).sqrt().max(1e-4);
        assert!(
            (est.pd_hat - expect).abs() <= 3.5 * se,
            "mc {} vs gaussian {expect}",
            est.pd_hat
        );
    }

    #[test]
    fn degenerate_gamma_c_is_rejected() {
        let point = test_point(3, 3);
        let w = DVector::zeros(3);
        let r0 = random_psd(3, 1.0, 33);
        let x0 = synth_deterministic_waveform(&r0, 8, 7).unwrap();
        assert!(matches!(
            DetectorContext::new(&point, w, x0, 1.0, 1e-2),
            Err(DetectionError::DegenerateContext)
        ));
    }
}
