//! Closed-form detection theory for the joint deterministic + Gaussian echo
//! detector.
//!
//! With received Gaussian-component SNR `gamma_c`, deterministic-component
//! SNR `gamma_s`, and `L` sensing symbols, the normalized test statistic is
//! non-central chi-squared with `2L` degrees of freedom under both
//! hypotheses:
//!
//! ```text
//! H0: lambda_1 = 2 L gamma_s / gamma_c^2
//! H1: lambda_2 = lambda_1 (1 + gamma_c)
//! ```
//!
//! which yields closed forms for the false-alarm and detection probability
//! at any threshold and, after eliminating the threshold, the detection
//! probability at a prescribed false-alarm rate. For long sensing durations
//! the central limit theorem collapses those chi-squared laws to Gaussians,
//! giving the two approximations used by the beamforming optimizer; the
//! simpler one is monotone in `gamma_c^2 + 2 gamma_s`, which is the design
//! objective.

use thiserror::Error;

use crate::specfun::{self, chi2_tail, chi2_tail_inv, gauss_q, gauss_q_inv, ChiSqTail};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("gamma_c must be > 0 for the joint detector, got {0}")]
    DegenerateGammaC(f64),
    #[error("gamma_s must be >= 0, got {0}")]
    BadGammaS(f64),
    #[error("sensing duration must be >= 1")]
    BadDuration,
    #[error("false-alarm target must be in (0,1), got {0}")]
    BadPfa(f64),
    #[error(transparent)]
    SpecFun(#[from] specfun::SpecFunError),
}

/// A sensing operating point: the SNR pair, the duration, and the
/// false-alarm target that every probability formula consumes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatingPoint {
    pub gamma_c: f64,
    pub gamma_s: f64,
    pub l_symbols: u64,
    pub pfa: f64,
}

impl OperatingPoint {
    pub fn new(
        gamma_c: f64,
        gamma_s: f64,
        l_symbols: u64,
        pfa: f64,
    ) -> Result<Self, AnalysisError> {
        if gamma_c <= 0.0 || !gamma_c.is_finite() {
            return Err(AnalysisError::DegenerateGammaC(gamma_c));
        }
        if gamma_s < 0.0 || !gamma_s.is_finite() {
            return Err(AnalysisError::BadGammaS(gamma_s));
        }
        if l_symbols == 0 {
            return Err(AnalysisError::BadDuration);
        }
        if !(pfa > 0.0 && pfa < 1.0) {
            return Err(AnalysisError::BadPfa(pfa));
        }
        Ok(Self {
            gamma_c,
            gamma_s,
            l_symbols,
            pfa,
        })
    }

    /// Non-centrality under target absence, `2 L gamma_s / gamma_c^2`.
    pub fn lambda1(&self) -> f64 {
        2.0 * self.l_symbols as f64 * self.gamma_s / (self.gamma_c * self.gamma_c)
    }

    /// Non-centrality under target presence, `lambda_1 (1 + gamma_c)`.
    pub fn lambda2(&self) -> f64 {
        self.lambda1() * (1.0 + self.gamma_c)
    }

    fn dof(&self) -> u64 {
        2 * self.l_symbols
    }
}

/// False-alarm probability at detection threshold `delta`:
/// `Q_{chi2_2L(lambda_1)}( 2(1+gc) delta / gc + lambda_1 )`.
pub fn pfa_at_threshold(op: &OperatingPoint, delta: f64) -> Result<f64, AnalysisError> {
    let t = ChiSqTail::new(op.dof(), op.lambda1())?;
    let arg = 2.0 * (1.0 + op.gamma_c) * delta / op.gamma_c + op.lambda1();
    Ok(chi2_tail(t, arg.max(0.0))?)
}

/// Detection probability at detection threshold `delta`:
/// `Q_{chi2_2L(lambda_2)}( 2 delta / gc + lambda_1 / (1+gc) )`.
pub fn pd_at_threshold(op: &OperatingPoint, delta: f64) -> Result<f64, AnalysisError> {
    let t = ChiSqTail::new(op.dof(), op.lambda2())?;
    let arg = 2.0 * delta / op.gamma_c + op.lambda1() / (1.0 + op.gamma_c);
    Ok(chi2_tail(t, arg.max(0.0))?)
}

/// Detection probability at the operating point's false-alarm target:
/// `Q_{chi2_2L(lambda_2)}( Q^{-1}_{chi2_2L(lambda_1)}(pfa) / (1+gc) )`.
pub fn pd_exact(op: &OperatingPoint) -> Result<f64, AnalysisError> {
    let t0 = ChiSqTail::new(op.dof(), op.lambda1())?;
    let t1 = ChiSqTail::new(op.dof(), op.lambda2())?;
    let x = chi2_tail_inv(t0, op.pfa)?;
    Ok(chi2_tail(t1, x / (1.0 + op.gamma_c))?)
}

/// Gaussian-signal-only special case (`gamma_s = 0`), valid for
/// `gamma_c >= 0` and monotone non-decreasing in `gamma_c`.
pub fn pd_gaussian_only(gamma_c: f64, l_symbols: u64, pfa: f64) -> Result<f64, AnalysisError> {
    if gamma_c < 0.0 || !gamma_c.is_finite() {
        return Err(AnalysisError::DegenerateGammaC(gamma_c));
    }
    if l_symbols == 0 {
        return Err(AnalysisError::BadDuration);
    }
    if !(pfa > 0.0 && pfa < 1.0) {
        return Err(AnalysisError::BadPfa(pfa));
    }
    let t = ChiSqTail::new(2 * l_symbols, 0.0)?;
    let x = chi2_tail_inv(t, pfa)?;
    Ok(chi2_tail(t, x / (1.0 + gamma_c))?)
}

/// Full central-limit approximation of [`pd_exact`]:
///
/// ```text
/// Q( [Q^{-1}(pfa) sqrt(gc^2 + 2 gs) - sqrt(L) (gc^2 + gs (2 + gc))]
///    / [(1 + gc) sqrt(gc^2 + 2 gs (1 + gc))] )
/// ```
pub fn pd_approx_full(op: &OperatingPoint) -> Result<f64, AnalysisError> {
    let gc = op.gamma_c;
    let gs = op.gamma_s;
    let l = op.l_symbols as f64;
    let s0 = gc * gc + 2.0 * gs;
    if s0 <= 0.0 {
        return Ok(op.pfa);
    }
    let num = gauss_q_inv(op.pfa)? * s0.sqrt() - l.sqrt() * (gc * gc + gs * (2.0 + gc));
    let den = (1.0 + gc) * (gc * gc + 2.0 * gs * (1.0 + gc)).sqrt();
    Ok(gauss_q(num / den))
}

/// Simplified central-limit approximation, the beamforming objective's
/// probability map: `Q( Q^{-1}(pfa) - sqrt(L) sqrt(gc^2 + 2 gs) )`.
/// Strictly increasing in `gc^2 + 2 gs`.
pub fn pd_approx_simple(op: &OperatingPoint) -> Result<f64, AnalysisError> {
    let s0 = op.gamma_c * op.gamma_c + 2.0 * op.gamma_s;
    if s0 <= 0.0 {
        return Ok(op.pfa);
    }
    Ok(gauss_q(
        gauss_q_inv(op.pfa)? - (op.l_symbols as f64).sqrt() * s0.sqrt(),
    ))
}

/// Gaussian approximation of the false-alarm probability at a threshold,
/// `Q( ((1+gc) delta / gc - L) / sqrt(L + lambda_1) )`.
pub fn pfa_approx_at_threshold(op: &OperatingPoint, delta: f64) -> f64 {
    let l = op.l_symbols as f64;
    let num = (1.0 + op.gamma_c) * delta / op.gamma_c - l;
    gauss_q(num / (l + op.lambda1()).sqrt())
}

/// Gaussian approximation of the detection probability at a threshold,
/// `Q( (((1+gc) delta - L gs (gc+2)) / (gc (1+gc)) - L) / sqrt(L + lambda_2) )`.
pub fn pd_approx_at_threshold(op: &OperatingPoint, delta: f64) -> f64 {
    let l = op.l_symbols as f64;
    let gc = op.gamma_c;
    let num = ((1.0 + gc) * delta - l * op.gamma_s * (gc + 2.0)) / (gc * (1.0 + gc)) - l;
    gauss_q(num / (l + op.lambda2()).sqrt())
}
