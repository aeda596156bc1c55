//! Bistatic integrated sensing and communication (ISAC) detection theory and
//! transmit beamforming.
//!
//! A base station radiates a superimposed waveform made of a deterministic
//! sensing component (known sample covariance `R0`) and a Gaussian
//! information-bearing component (beamformer `w`). A spatially separated
//! sensing receiver decides between target absence and presence from the
//! echo it collects over `L` symbols, knowing the deterministic waveform
//! exactly but only the statistics of the random one.
//!
//! The crate provides, bottom up:
//!
//! * [`specfun`] — non-central chi-squared right tails and inverses, Gaussian
//!   Q function and inverse; the probability kernel everything else uses.
//! * [`scenario`] — array steering vectors, cascade (two-hop) channel gains,
//!   Rician communication channels, and scenario configuration files.
//! * [`detection`] — echo simulation under both hypotheses, the joint
//!   likelihood-ratio detector and its energy/matched-filter reductions,
//!   threshold calibration, and seeded Monte-Carlo estimation.
//! * [`analysis`] — closed-form false-alarm/detection probabilities, the
//!   detection probability at a prescribed false-alarm rate, and large-`L`
//!   Gaussian approximations used as optimization surrogates.
//! * [`sdp`] — a dense primal-dual interior-point solver for the small
//!   Hermitian-block semidefinite programs the beamforming designs produce.
//! * [`beamforming`] — the SCA+SDR max-min detection design, the
//!   Gaussian-only SDR design with randomization, closed-form single-point
//!   solutions, and the benchmark transmit schemes.

pub mod analysis;
pub mod beamforming;
pub mod detection;
pub mod linalg;
pub mod scenario;
pub mod sdp;
pub mod specfun;

pub use num_complex::Complex64;
