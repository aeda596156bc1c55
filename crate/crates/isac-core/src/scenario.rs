//! Physical scenario construction: uniform-linear-array steering vectors,
//! two-hop cascade channel gains, the Rician communication channel, and the
//! scenario configuration file.
//!
//! Configuration files use TOML with explicit unit suffixes (`_dbm`, `_db`,
//! `_deg`, `_m`, `_hz`); everything is converted to linear/SI/radian units
//! once, at parse time. All randomness is drawn from ChaCha8 seeded by the
//! config's `rng_seed` so runs reproduce bit-for-bit; output metadata should
//! record the PRNG as `chacha8 (rand_chacha 0.9)`.
//!
//! # Config schema
//!
//! ```toml
//! tx_antennas = 16              # M_t
//! rx_antennas = 16              # M_r
//! symbols = 1024                # sensing duration L
//! power_dbm = 30.0              # transmit power budget P
//! noise_comm_dbm = -80.0        # communication receiver noise power
//! noise_sense_dbm = -80.0       # sensing receiver noise power (per antenna)
//! sinr_min_db = 10.0            # communication SINR threshold gamma_0
//! pfa = 1e-3                    # per-grid-point false-alarm target
//! carrier_hz = 800e6
//! rcs_m2 = 0.5                  # target radar cross section
//! dist_bs_grid_m = 300.0        # d_1
//! dist_grid_rx_m = 300.0        # d_2
//! antenna_spacing_wavelengths = 0.5
//! rician_k = 1.0
//! ue_angle_deg = 30.0           # communication user direction (see below)
//! ue_dist_m = 200.0
//! pathloss_ref_db = -30.0       # L_0 at the reference distance
//! pathloss_ref_dist_m = 1.0
//! pathloss_exponent = 2.5
//! rng_seed = 7
//!
//! [grid]
//! span_deg = [-2.25, 2.25]      # inclusive departure-angle span
//! points = 50
//! doa_offset_deg = 0.0          # arrival angle = departure angle + offset
//! # or instead of span/points:
//! # explicit_deg = [[-1.0, -1.0], [0.0, 0.0], [1.0, 1.0]]
//! ```
//!
//! The user position (`ue_angle_deg`, `ue_dist_m`) and the departure/arrival
//! mapping are modelling choices, not physics: the defaults place the user
//! 30 degrees off the grid center at 200 m and set arrival equal to
//! departure angles.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{complex_gaussian_vector, steering_quadform};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// PRNG identification recorded in experiment metadata.
pub const PRNG_NAME: &str = "chacha8 (rand_chacha 0.9)";

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("invalid config field {field}: {reason}")]
    Invalid { field: &'static str, reason: String },
}

fn invalid(field: &'static str, reason: impl Into<String>) -> ScenarioError {
    ScenarioError::Invalid {
        field,
        reason: reason.into(),
    }
}

// ---------------------------------------------------------------------------
// Unit conversions, centralized so dB conventions live in one place.
// ---------------------------------------------------------------------------

pub fn db_to_lin(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn lin_to_db(lin: f64) -> f64 {
    10.0 * lin.log10()
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(w: f64) -> f64 {
    10.0 * w.log10() + 30.0
}

// ---------------------------------------------------------------------------
// Config file (serde) and the parsed, linear-unit scenario config.
// ---------------------------------------------------------------------------

/// Grid section of the config file, degrees.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct GridFile {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub span_deg: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub doa_offset_deg: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub explicit_deg: Option<Vec<[f64; 2]>>,
}

/// On-disk scenario file, exactly as serialized.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub tx_antennas: usize,
    pub rx_antennas: usize,
    pub symbols: usize,
    pub power_dbm: f64,
    pub noise_comm_dbm: f64,
    pub noise_sense_dbm: f64,
    pub sinr_min_db: f64,
    pub pfa: f64,
    pub carrier_hz: f64,
    pub rcs_m2: f64,
    pub dist_bs_grid_m: f64,
    pub dist_grid_rx_m: f64,
    pub antenna_spacing_wavelengths: f64,
    pub rician_k: f64,
    pub ue_angle_deg: f64,
    pub ue_dist_m: f64,
    pub pathloss_ref_db: f64,
    pub pathloss_ref_dist_m: f64,
    pub pathloss_exponent: f64,
    pub rng_seed: u64,
    pub grid: GridFile,
}

impl ScenarioFile {
    pub fn from_toml_str(s: &str) -> Result<Self, ScenarioError> {
        toml::from_str(s).map_err(|e| ScenarioError::Parse(e.to_string()))
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scenario file serializes")
    }

    /// The baseline simulation setup: 16x16 antennas, 30 dBm, -80 dBm noise,
    /// 800 MHz, 0.5 m^2 target at 300 m + 300 m, 50 grid points over
    /// [-2.25, 2.25] degrees, L = 1024, pfa = 1e-3.
    pub fn baseline() -> Self {
        Self {
            tx_antennas: 16,
            rx_antennas: 16,
            symbols: 1024,
            power_dbm: 30.0,
            noise_comm_dbm: -80.0,
            noise_sense_dbm: -80.0,
            sinr_min_db: 10.0,
            pfa: 1e-3,
            carrier_hz: 800e6,
            rcs_m2: 0.5,
            dist_bs_grid_m: 300.0,
            dist_grid_rx_m: 300.0,
            antenna_spacing_wavelengths: 0.5,
            rician_k: 1.0,
            ue_angle_deg: 30.0,
            ue_dist_m: 200.0,
            pathloss_ref_db: -30.0,
            pathloss_ref_dist_m: 1.0,
            pathloss_exponent: 2.5,
            rng_seed: 7,
            grid: GridFile {
                span_deg: Some([-2.25, 2.25]),
                points: Some(50),
                doa_offset_deg: None,
                explicit_deg: None,
            },
        }
    }
}

/// Distance-power path-loss model `L(d) = l0 * (d / d0)^(-exponent)`,
/// linear units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathLossModel {
    pub l0: f64,
    pub d0: f64,
    pub exponent: f64,
}

impl PathLossModel {
    pub fn at(&self, d: f64) -> f64 {
        self.l0 * (d / self.d0).powf(-self.exponent)
    }
}

/// Parsed scenario configuration in linear/SI/radian units.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub mt: usize,
    pub mr: usize,
    pub l_symbols: usize,
    /// Transmit power budget P, watts.
    pub p_max: f64,
    /// Communication noise power, watts.
    pub sigma2_c: f64,
    /// Sensing noise power per receive antenna, watts.
    pub sigma2_s: f64,
    /// SINR threshold, linear.
    pub gamma0: f64,
    pub pfa: f64,
    pub f_carrier: f64,
    /// Target radar cross section, m^2.
    pub sigma_rcs: f64,
    pub d1: f64,
    pub d2: f64,
    /// Departure/arrival angle pairs, radians.
    pub grid_angles: Vec<(f64, f64)>,
    /// Antenna spacing over wavelength (0.5 = half wavelength).
    pub d_a_over_lambda: f64,
    pub rician_k: f64,
    pub ue_angle: f64,
    pub ue_distance: f64,
    pub pathloss: PathLossModel,
    pub rng_seed: u64,
}

impl ScenarioConfig {
    pub fn from_file(f: &ScenarioFile) -> Result<Self, ScenarioError> {
        if f.tx_antennas == 0 {
            return Err(invalid("tx_antennas", "must be >= 1"));
        }
        if f.rx_antennas == 0 {
            return Err(invalid("rx_antennas", "must be >= 1"));
        }
        if f.symbols == 0 {
            return Err(invalid("symbols", "must be >= 1"));
        }
        if !(f.pfa > 0.0 && f.pfa < 1.0) {
            return Err(invalid("pfa", format!("must be in (0,1), got {}", f.pfa)));
        }
        if f.carrier_hz <= 0.0 {
            return Err(invalid("carrier_hz", "must be positive"));
        }
        if f.dist_bs_grid_m <= 0.0 || f.dist_grid_rx_m <= 0.0 {
            return Err(invalid("dist_bs_grid_m", "distances must be positive"));
        }
        if f.rcs_m2 <= 0.0 {
            return Err(invalid("rcs_m2", "must be positive"));
        }
        if f.rician_k < 0.0 {
            return Err(invalid("rician_k", "must be non-negative"));
        }
        let deg = std::f64::consts::PI / 180.0;
        let grid_angles: Vec<(f64, f64)> =
            match (&f.grid.explicit_deg, f.grid.span_deg, f.grid.points) {
                (Some(pairs), _, _) => pairs.iter().map(|p| (p[0] * deg, p[1] * deg)).collect(),
                (None, Some(span), Some(points)) => {
                    if points == 0 {
                        return Err(invalid("grid.points", "must be >= 1"));
                    }
                    let off = f.grid.doa_offset_deg.unwrap_or(0.0) * deg;
                    (0..points)
                        .map(|q| {
                            let frac = if points == 1 {
                                0.5
                            } else {
                                q as f64 / (points - 1) as f64
                            };
                            let phi = (span[0] + frac * (span[1] - span[0])) * deg;
                            (phi, phi + off)
                        })
                        .collect()
                }
                _ => {
                    return Err(invalid(
                        "grid",
                        "provide either explicit_deg or span_deg with points",
                    ))
                }
            };
        if grid_angles.is_empty() {
            return Err(invalid("grid", "grid must contain at least one point"));
        }
        let cfg = Self {
            mt: f.tx_antennas,
            mr: f.rx_antennas,
            l_symbols: f.symbols,
            p_max: dbm_to_watts(f.power_dbm),
            sigma2_c: dbm_to_watts(f.noise_comm_dbm),
            sigma2_s: dbm_to_watts(f.noise_sense_dbm),
            gamma0: db_to_lin(f.sinr_min_db),
            pfa: f.pfa,
            f_carrier: f.carrier_hz,
            sigma_rcs: f.rcs_m2,
            d1: f.dist_bs_grid_m,
            d2: f.dist_grid_rx_m,
            grid_angles,
            d_a_over_lambda: f.antenna_spacing_wavelengths,
            rician_k: f.rician_k,
            ue_angle: f.ue_angle_deg * deg,
            ue_distance: f.ue_dist_m,
            pathloss: PathLossModel {
                l0: db_to_lin(f.pathloss_ref_db),
                d0: f.pathloss_ref_dist_m,
                exponent: f.pathloss_exponent,
            },
            rng_seed: f.rng_seed,
        };
        if cfg.p_max <= 0.0 || cfg.sigma2_c <= 0.0 || cfg.sigma2_s <= 0.0 {
            return Err(invalid("power_dbm", "powers and noise must be positive"));
        }
        Ok(cfg)
    }

    pub fn from_toml_str(s: &str) -> Result<Self, ScenarioError> {
        Self::from_file(&ScenarioFile::from_toml_str(s)?)
    }

    pub fn q_points(&self) -> usize {
        self.grid_angles.len()
    }
}

// ---------------------------------------------------------------------------
// Steering vectors, cascade gain, channels.
// ---------------------------------------------------------------------------

/// Uniform-linear-array steering vector: entry `k` is
/// `exp(j 2 pi k (d/lambda) sin(angle))`, `k = 0..m-1`.
pub fn steering(m: usize, spacing_over_lambda: f64, angle: f64) -> DVector<Complex64> {
    let phase = 2.0 * std::f64::consts::PI * spacing_over_lambda * angle.sin();
    DVector::from_fn(m, |k, _| Complex64::from_polar(1.0, phase * k as f64))
}

/// Two-hop cascade power gain `|alpha|^2 = eta * sigma_rcs / (d1^2 d2^2)`
/// with `eta = c^2 / (64 pi^3 f^2)`.
pub fn cascade_gain(cfg: &ScenarioConfig) -> Result<f64, ScenarioError> {
    if cfg.f_carrier <= 0.0 {
        return Err(invalid("carrier_hz", "must be positive"));
    }
    if cfg.d1 <= 0.0 || cfg.d2 <= 0.0 {
        return Err(invalid("dist_bs_grid_m", "must be positive"));
    }
    let c2 = SPEED_OF_LIGHT * SPEED_OF_LIGHT;
    let eta = c2 / (64.0 * std::f64::consts::PI.powi(3) * cfg.f_carrier * cfg.f_carrier);
    Ok(eta * cfg.sigma_rcs / (cfg.d1 * cfg.d1 * cfg.d2 * cfg.d2))
}

/// One hypothesized target location: angles, cascade gain, and the transmit
/// and receive steering vectors toward it.
#[derive(Debug, Clone)]
pub struct GridPoint {
    pub index: usize,
    pub phi: f64,
    pub theta: f64,
    /// Cascade power gain `|alpha_q|^2`, linear.
    pub alpha2: f64,
    pub a_tx: DVector<Complex64>,
    pub b_rx: DVector<Complex64>,
}

impl GridPoint {
    pub fn mt(&self) -> usize {
        self.a_tx.len()
    }

    pub fn mr(&self) -> usize {
        self.b_rx.len()
    }
}

/// Communication channel realization (path loss folded into the amplitude).
#[derive(Debug, Clone)]
pub struct CommChannel {
    pub h: DVector<Complex64>,
}

impl CommChannel {
    pub fn norm_sqr(&self) -> f64 {
        self.h.norm_squared()
    }
}

/// Rician communication channel draw:
/// `h = sqrt(pl) (sqrt(K/(K+1)) h_los + sqrt(1/(K+1)) h_nlos)` with the LOS
/// part a steering vector toward the user. Deterministic in `cfg.rng_seed`.
pub fn draw_comm_channel(cfg: &ScenarioConfig, ue_angle: f64, ue_distance: f64) -> CommChannel {
    let pl = cfg.pathloss.at(ue_distance);
    let k = cfg.rician_k;
    let los = steering(cfg.mt, cfg.d_a_over_lambda, ue_angle);
    // Dedicated stream so channel draws never collide with Monte-Carlo ones.
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    rng.set_stream(u64::MAX);
    let nlos = complex_gaussian_vector(cfg.mt, &mut rng);
    let c_los = Complex64::new((pl * k / (k + 1.0)).sqrt(), 0.0);
    let c_nlos = Complex64::new((pl / (k + 1.0)).sqrt(), 0.0);
    CommChannel {
        h: los * c_los + nlos * c_nlos,
    }
}

/// Received SNR pair at a grid point for a transmit design `(w, r0)`:
///
/// ```text
/// gamma_c = |alpha|^2 |a^T w|^2 M_r / sigma_s^2      (Gaussian component)
/// gamma_s = |alpha|^2 (a^T R0 a^*) M_r / sigma_s^2   (deterministic component)
/// ```
pub fn sensing_snrs(
    g: &GridPoint,
    w: &DVector<Complex64>,
    r0: &DMatrix<Complex64>,
    cfg: &ScenarioConfig,
) -> (f64, f64) {
    let mr = g.mr() as f64;
    let atw: Complex64 = crate::linalg::dot_unconj(&g.a_tx, w);
    let gamma_c = g.alpha2 * atw.norm_sqr() * mr / cfg.sigma2_s;
    let quad = steering_quadform(&g.a_tx, r0).max(0.0);
    let gamma_s = g.alpha2 * quad * mr / cfg.sigma2_s;
    (gamma_c, gamma_s)
}

/// A validated scenario: config plus the materialized grid.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub cfg: ScenarioConfig,
    pub grid: Vec<GridPoint>,
}

impl Scenario {
    pub fn new(cfg: ScenarioConfig) -> Result<Self, ScenarioError> {
        let alpha2 = cascade_gain(&cfg)?;
        if alpha2 <= 0.0 {
            return Err(invalid("rcs_m2", "cascade gain must be positive"));
        }
        let grid = cfg
            .grid_angles
            .iter()
            .enumerate()
            .map(|(index, &(phi, theta))| GridPoint {
                index,
                phi,
                theta,
                alpha2,
                a_tx: steering(cfg.mt, cfg.d_a_over_lambda, phi),
                b_rx: steering(cfg.mr, cfg.d_a_over_lambda, theta),
            })
            .collect();
        Ok(Self { cfg, grid })
    }

    pub fn from_toml_str(s: &str) -> Result<Self, ScenarioError> {
        Self::new(ScenarioConfig::from_toml_str(s)?)
    }

    /// Communication channel at the configured user position.
    pub fn comm_channel(&self) -> CommChannel {
        draw_comm_channel(&self.cfg, self.cfg.ue_angle, self.cfg.ue_distance)
    }
}
