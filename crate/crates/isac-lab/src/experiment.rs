//! Experiment kinds, one per reproducible curve-family study, plus the
//! dispatcher that evaluates every sweep point and assembles the table.
//!
//! Detection-theory kinds (`pd-*`, `pfa-tradeoff`, `qq-approx`,
//! `mc-validate`) evaluate closed forms or seeded Monte-Carlo at synthetic
//! operating points built from the scenario's duration and false-alarm
//! target. Design kinds (`tradeoff-curve`, `power-allocation`,
//! `detector-compare`, `bf-compare`) sweep the communication-rate threshold,
//! re-solve the transmit design per point, and report worst-case detection
//! probabilities over the grid — always through the exact closed form (or
//! Monte-Carlo for the matched-filter benchmark), never the optimizer's
//! surrogate. Rate points beyond the channel's full-time capacity are
//! legitimate outcomes and appear with `status = infeasible`; unexpected
//! solver failures are recorded per point (`status = error:*`) without
//! aborting the sweep and are counted for the process exit code.

use std::path::PathBuf;

use rayon::prelude::*;

use isac_core::analysis::{
    pd_approx_full, pd_approx_simple, pd_exact, pd_gaussian_only, OperatingPoint,
};
use isac_core::beamforming::{
    benchmark_beampattern_gain, benchmark_deterministic_only, benchmark_time_switching, solve_p2,
    solve_p3, BeamformingSolution, BfError, SolverOptions,
};
use isac_core::detection::{mc_detect_at, mc_matched_filter, MatchedFilterContext};
use isac_core::scenario::{db_to_lin, lin_to_db, Scenario, PRNG_NAME};
use isac_core::specfun::{gauss_q, gauss_q_inv};

use crate::sweep::SweepAxis;
use crate::table::{fmt_num, Table};
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ExperimentKind {
    /// Detection probability over a (gamma_c, gamma_s) grid.
    PdSurface,
    /// Gaussian-only detection probability vs gamma_c for several
    /// false-alarm targets.
    PdVsSnr,
    /// Gaussian-only detection probability vs sensing duration for several
    /// SNRs.
    PdVsL,
    /// Detection probability vs duration for several false-alarm targets
    /// at a fixed SNR.
    PfaTradeoff,
    /// Exact vs approximated detection probability over an SNR grid for
    /// several durations.
    QqApprox,
    /// Worst-case exact and approximated detection probability of the
    /// joint design vs the rate threshold.
    TradeoffCurve,
    /// Power split of the joint design vs the rate threshold.
    PowerAllocation,
    /// Joint design vs Gaussian-only and deterministic-only receivers.
    DetectorCompare,
    /// Joint design vs time-switching and beampattern benchmarks.
    BfCompare,
    /// Closed forms vs Monte-Carlo with confidence intervals.
    McValidate,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            Self::PdSurface => "pd-surface",
            Self::PdVsSnr => "pd-vs-snr",
            Self::PdVsL => "pd-vs-l",
            Self::PfaTradeoff => "pfa-tradeoff",
            Self::QqApprox => "qq-approx",
            Self::TradeoffCurve => "tradeoff-curve",
            Self::PowerAllocation => "power-allocation",
            Self::DetectorCompare => "detector-compare",
            Self::BfCompare => "bf-compare",
            Self::McValidate => "mc-validate",
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    pub scenario_path: PathBuf,
    pub out_path: PathBuf,
    pub trials: u64,
    pub seed: Option<u64>,
    pub sweeps: Vec<SweepAxis>,
}

pub struct RunOutput {
    pub table: Table,
    pub failed_points: usize,
}

/// Read the scenario file, run the experiment, write the CSV.
pub fn run(spec: &ExperimentSpec) -> Result<RunOutput, CliError> {
    let text = std::fs::read_to_string(&spec.scenario_path).map_err(|e| CliError::Io {
        path: spec.scenario_path.display().to_string(),
        msg: e.to_string(),
    })?;
    let mut scn = Scenario::from_toml_str(&text).map_err(|e| CliError::Config(e.to_string()))?;
    if let Some(seed) = spec.seed {
        scn.cfg.rng_seed = seed;
    }
    let out = run_on(spec.kind, &scn, &spec.sweeps, spec.trials)?;
    out.table.write_csv(&spec.out_path)?;
    Ok(out)
}

/// Run an experiment on an already-built scenario (no file IO).
pub fn run_on(
    kind: ExperimentKind,
    scn: &Scenario,
    sweeps: &[SweepAxis],
    trials: u64,
) -> Result<RunOutput, CliError> {
    let mut out = match kind {
        ExperimentKind::PdSurface => pd_surface(scn, sweeps),
        ExperimentKind::PdVsSnr => pd_vs_snr(scn, sweeps),
        ExperimentKind::PdVsL => pd_vs_l(scn, sweeps),
        ExperimentKind::PfaTradeoff => pfa_tradeoff(scn, sweeps),
        ExperimentKind::QqApprox => qq_approx(scn),
        ExperimentKind::TradeoffCurve => rate_sweep_kind(kind, scn, sweeps, trials),
        ExperimentKind::PowerAllocation => rate_sweep_kind(kind, scn, sweeps, trials),
        ExperimentKind::DetectorCompare => rate_sweep_kind(kind, scn, sweeps, trials),
        ExperimentKind::BfCompare => rate_sweep_kind(kind, scn, sweeps, trials),
        ExperimentKind::McValidate => mc_validate(scn, sweeps, trials),
    }?;
    let meta = vec![
        ("kind".to_string(), kind.name().to_string()),
        ("seed".to_string(), scn.cfg.rng_seed.to_string()),
        ("prng".to_string(), PRNG_NAME.to_string()),
        ("version".to_string(), env!("CARGO_PKG_VERSION").to_string()),
        ("l_symbols".to_string(), scn.cfg.l_symbols.to_string()),
        ("pfa_target".to_string(), fmt_num(scn.cfg.pfa)),
        ("trials".to_string(), trials.to_string()),
        ("sdp_tol".to_string(), "1e-8".to_string()),
        ("sca_tol".to_string(), "1e-6".to_string()),
    ];
    out.table.metadata.splice(0..0, meta);
    Ok(out)
}

fn axis_or(sweeps: &[SweepAxis], name: &str, default: &str) -> Result<SweepAxis, CliError> {
    match sweeps.iter().find(|a| a.param == name) {
        Some(a) => Ok(a.clone()),
        None => SweepAxis::parse(&format!("{name}={default}")),
    }
}

fn op_point(scn: &Scenario, gc: f64, gs: f64) -> Result<OperatingPoint, CliError> {
    OperatingPoint::new(gc, gs, scn.cfg.l_symbols as u64, scn.cfg.pfa)
        .map_err(|e| CliError::Config(e.to_string()))
}

// ---------------------------------------------------------------------------
// Closed-form kinds
// ---------------------------------------------------------------------------

fn pd_surface(scn: &Scenario, sweeps: &[SweepAxis]) -> Result<RunOutput, CliError> {
    let ax_c = axis_or(sweeps, "gamma_c_db", "-30:0:31:db")?;
    let ax_s = axis_or(sweeps, "gamma_s_db", "-30:0:31:db")?;
    let mut t = Table::new(vec!["gamma_c_db", "gamma_c", "gamma_s_db", "gamma_s", "pd"]);
    for &gc_db in &ax_c.values {
        for &gs_db in &ax_s.values {
            let gc = db_to_lin(gc_db);
            let gs = db_to_lin(gs_db);
            let pd =
                pd_exact(&op_point(scn, gc, gs)?).map_err(|e| CliError::Config(e.to_string()))?;
            t.push_row(vec![
                fmt_num(gc_db),
                fmt_num(gc),
                fmt_num(gs_db),
                fmt_num(gs),
                fmt_num(pd),
            ]);
        }
    }
    Ok(RunOutput {
        table: t,
        failed_points: 0,
    })
}

const PFA_SET: [f64; 4] = [1e-1, 1e-2, 1e-3, 1e-4];

fn pd_vs_snr(scn: &Scenario, sweeps: &[SweepAxis]) -> Result<RunOutput, CliError> {
    let ax = axis_or(sweeps, "gamma_c_db", "-15:5:41:db")?;
    let mut cols = vec!["gamma_c_db".to_string(), "gamma_c".to_string()];
    for pfa in PFA_SET {
        cols.push(format!("pd_pfa_{pfa:.0e}"));
    }
    let mut t = Table {
        metadata: vec![],
        columns: cols,
        rows: vec![],
    };
    for &gc_db in &ax.values {
        let gc = db_to_lin(gc_db);
        let mut row = vec![fmt_num(gc_db), fmt_num(gc)];
        for pfa in PFA_SET {
            let pd = pd_gaussian_only(gc, scn.cfg.l_symbols as u64, pfa)
                .map_err(|e| CliError::Config(e.to_string()))?;
            row.push(fmt_num(pd));
        }
        t.push_row(row);
    }
    Ok(RunOutput {
        table: t,
        failed_points: 0,
    })
}

const GC_DB_SET: [f64; 4] = [5.0, 0.0, -5.0, -10.0];

fn pd_vs_l(scn: &Scenario, sweeps: &[SweepAxis]) -> Result<RunOutput, CliError> {
    let ax = axis_or(sweeps, "l", "10:10000:31:log")?;
    let mut cols = vec!["l".to_string()];
    for gc_db in GC_DB_SET {
        cols.push(format!("pd_gamma_c_{gc_db}db"));
    }
    let mut t = Table {
        metadata: vec![],
        columns: cols,
        rows: vec![],
    };
    for l in ax.integer_values() {
        let mut row = vec![l.to_string()];
        for gc_db in GC_DB_SET {
            let pd = pd_gaussian_only(db_to_lin(gc_db), l, scn.cfg.pfa)
                .map_err(|e| CliError::Config(e.to_string()))?;
            row.push(fmt_num(pd));
        }
        t.push_row(row);
    }
    Ok(RunOutput {
        table: t,
        failed_points: 0,
    })
}

fn pfa_tradeoff(_scn: &Scenario, sweeps: &[SweepAxis]) -> Result<RunOutput, CliError> {
    let ax = axis_or(sweeps, "l", "32:4096:25:log")?;
    let gc = db_to_lin(-5.0);
    let mut cols = vec!["l".to_string()];
    for pfa in PFA_SET {
        cols.push(format!("pd_pfa_{pfa:.0e}"));
    }
    let mut t = Table {
        metadata: vec![],
        columns: cols,
        rows: vec![],
    };
    t.meta("gamma_c_db", -5.0);
    for l in ax.integer_values() {
        let mut row = vec![l.to_string()];
        for pfa in PFA_SET {
            let pd = pd_gaussian_only(gc, l, pfa).map_err(|e| CliError::Config(e.to_string()))?;
            row.push(fmt_num(pd));
        }
        t.push_row(row);
    }
    Ok(RunOutput {
        table: t,
        failed_points: 0,
    })
}

fn qq_approx(scn: &Scenario) -> Result<RunOutput, CliError> {
    let mut t = Table::new(vec![
        "l",
        "gamma_c_db",
        "gamma_s_db",
        "pd_exact",
        "pd_approx_full",
        "pd_approx_simple",
    ]);
    t.meta("grid", "gamma_c_db, gamma_s_db in [-40, 10] step 2.5");
    for l in [10u64, 50, 100, 1000] {
        for i in 0..21 {
            for j in 0..21 {
                let gc_db = -40.0 + 2.5 * i as f64;
                let gs_db = -40.0 + 2.5 * j as f64;
                let op = OperatingPoint::new(db_to_lin(gc_db), db_to_lin(gs_db), l, scn.cfg.pfa)
                    .map_err(|e| CliError::Config(e.to_string()))?;
                let exact = pd_exact(&op).map_err(|e| CliError::Config(e.to_string()))?;
                let full = pd_approx_full(&op).map_err(|e| CliError::Config(e.to_string()))?;
                let simple = pd_approx_simple(&op).map_err(|e| CliError::Config(e.to_string()))?;
                t.push_row(vec![
                    l.to_string(),
                    fmt_num(gc_db),
                    fmt_num(gs_db),
                    fmt_num(exact),
                    fmt_num(full),
                    fmt_num(simple),
                ]);
            }
        }
    }
    Ok(RunOutput {
        table: t,
        failed_points: 0,
    })
}

// ---------------------------------------------------------------------------
// Monte-Carlo validation
// ---------------------------------------------------------------------------

fn mc_validate(scn: &Scenario, sweeps: &[SweepAxis], trials: u64) -> Result<RunOutput, CliError> {
    let ax_c = axis_or(sweeps, "gamma_c_db", "-12:-3:4:db")?;
    let ax_s = axis_or(sweeps, "gamma_s_db", "-20:-10:2:db")?;
    let mut t = Table::new(vec![
        "gamma_c_db",
        "gamma_s_db",
        "pd_exact",
        "pfa_target",
        "pfa_hat",
        "pfa_lo",
        "pfa_hi",
        "pd_hat",
        "pd_lo",
        "pd_hi",
        "pfa_ok",
        "pd_ok",
    ]);
    let points: Vec<(f64, f64)> = ax_c
        .values
        .iter()
        .flat_map(|&gc| ax_s.values.iter().map(move |&gs| (gc, gs)))
        .collect();
    let rows: Vec<Result<Vec<String>, CliError>> = points
        .par_iter()
        .map(|&(gc_db, gs_db)| {
            let op = op_point(scn, db_to_lin(gc_db), db_to_lin(gs_db))?;
            let pd = pd_exact(&op).map_err(|e| CliError::Config(e.to_string()))?;
            let est = mc_detect_at(&op, trials, scn.cfg.rng_seed)
                .map_err(|e| CliError::Config(e.to_string()))?;
            let se_fa = (op.pfa * (1.0 - op.pfa) / trials as f64).sqrt();
            let se_d = (pd * (1.0 - pd) / trials as f64).sqrt();
            let pfa_ok = (est.pfa_hat - op.pfa).abs() <= 3.0 * se_fa;
            let pd_ok = (est.pd_hat - pd).abs() <= 3.0 * se_d.max(1e-6);
            Ok(vec![
                fmt_num(gc_db),
                fmt_num(gs_db),
                fmt_num(pd),
                fmt_num(op.pfa),
                fmt_num(est.pfa_hat),
                fmt_num(est.pfa_ci.0),
                fmt_num(est.pfa_ci.1),
                fmt_num(est.pd_hat),
                fmt_num(est.pd_ci.0),
                fmt_num(est.pd_ci.1),
                (pfa_ok as u8).to_string(),
                (pd_ok as u8).to_string(),
            ])
        })
        .collect();
    for row in rows {
        t.push_row(row?);
    }
    Ok(RunOutput {
        table: t,
        failed_points: 0,
    })
}

// ---------------------------------------------------------------------------
// Rate-threshold design sweeps
// ---------------------------------------------------------------------------

/// Worst-case exact detection probability of a design over the grid.
fn min_pd_exact(scn: &Scenario, sol: &BeamformingSolution) -> Result<f64, CliError> {
    let mut worst = f64::INFINITY;
    for m in &sol.per_q {
        let op = OperatingPoint::new(
            m.gamma_c.max(1e-12),
            m.gamma_s.max(0.0),
            scn.cfg.l_symbols as u64,
            scn.cfg.pfa,
        )
        .map_err(|e| CliError::Config(e.to_string()))?;
        worst = worst.min(pd_exact(&op).map_err(|e| CliError::Config(e.to_string()))?);
    }
    Ok(worst)
}

/// Worst-case simplified-approximation probability of a design.
fn min_pd_approx(scn: &Scenario, sol: &BeamformingSolution) -> Result<f64, CliError> {
    let qinv = gauss_q_inv(scn.cfg.pfa).map_err(|e| CliError::Config(e.to_string()))?;
    let mut worst = f64::INFINITY;
    for m in &sol.per_q {
        let s0 = m.gamma_c * m.gamma_c + 2.0 * m.gamma_s;
        worst = worst.min(gauss_q(
            qinv - (scn.cfg.l_symbols as f64).sqrt() * s0.sqrt(),
        ));
    }
    Ok(worst)
}

/// Matched-filter Monte-Carlo at the limiting grid point of a
/// deterministic-only design (the point with the worst Gaussian-form
/// prediction screens Q points down to one Monte-Carlo run).
fn det_only_min_pd_mc(
    scn: &Scenario,
    sol: &BeamformingSolution,
    trials: u64,
) -> Result<(f64, f64, f64), CliError> {
    let qinv = gauss_q_inv(scn.cfg.pfa).map_err(|e| CliError::Config(e.to_string()))?;
    let l = scn.cfg.l_symbols as f64;
    let worst_q = sol
        .per_q
        .iter()
        .min_by(|a, b| {
            let pa = gauss_q((qinv - (2.0 * l * a.gamma_s).sqrt()) / (1.0 + a.gamma_c).sqrt());
            let pb = gauss_q((qinv - (2.0 * l * b.gamma_s).sqrt()) / (1.0 + b.gamma_c).sqrt());
            pa.partial_cmp(&pb).unwrap()
        })
        .map(|m| m.index)
        .ok_or_else(|| CliError::Config("empty grid".into()))?;
    let g = &scn.grid[worst_q];
    let x0 = isac_core::detection::synth_deterministic_waveform(
        &sol.r0,
        scn.cfg.l_symbols,
        scn.cfg.rng_seed,
    )
    .map_err(|e| CliError::Config(e.to_string()))?;
    let ctx = MatchedFilterContext::new(g, &sol.w, &x0, scn.cfg.sigma2_s, scn.cfg.pfa)
        .map_err(|e| CliError::Config(e.to_string()))?;
    let est = mc_matched_filter(&ctx, trials, scn.cfg.rng_seed);
    Ok((est.pd_hat, est.pd_ci.0, est.pd_ci.1))
}

fn with_gamma0(scn: &Scenario, gamma0: f64) -> Result<Scenario, CliError> {
    let mut cfg = scn.cfg.clone();
    cfg.gamma0 = gamma0;
    Scenario::new(cfg).map_err(|e| CliError::Config(e.to_string()))
}

enum RatePoint {
    Ok(Vec<String>),
    Infeasible,
    Error(String),
}

fn rate_sweep_kind(
    kind: ExperimentKind,
    scn: &Scenario,
    sweeps: &[SweepAxis],
    trials: u64,
) -> Result<RunOutput, CliError> {
    let ax = axis_or(sweeps, "rate_bps", "0:14:8:lin")?;
    let opts = SolverOptions {
        seed: scn.cfg.rng_seed,
        ..SolverOptions::default()
    };
    let h = scn.comm_channel();
    let rate_full = (1.0 + scn.cfg.p_max * h.norm_sqr() / scn.cfg.sigma2_c).log2();

    let value_cols: Vec<&str> = match kind {
        ExperimentKind::TradeoffCurve => vec!["pd_min_exact", "pd_min_approx"],
        ExperimentKind::PowerAllocation => {
            vec![
                "comm_power_w",
                "sensing_power_w",
                "pd_min_exact",
                "sinr_achieved_db",
            ]
        }
        ExperimentKind::DetectorCompare => {
            vec![
                "pd_proposed",
                "pd_gaussian_only",
                "pd_det_only_mc",
                "pd_det_only_lo",
                "pd_det_only_hi",
            ]
        }
        ExperimentKind::BfCompare => vec!["pd_proposed", "pd_time_switching", "pd_beampattern"],
        _ => unreachable!("not a rate-sweep kind"),
    };
    let mut cols = vec!["rate_bps".to_string(), "gamma0_db".to_string()];
    cols.extend(value_cols.iter().map(|s| s.to_string()));
    cols.push("status".to_string());
    let mut t = Table {
        metadata: vec![],
        columns: cols,
        rows: vec![],
    };
    t.meta("rate_full_time_bps", fmt_num(rate_full));

    let eval_point = |rate: f64| -> RatePoint {
        let gamma0 = 2f64.powf(rate) - 1.0;
        if rate > rate_full {
            return RatePoint::Infeasible;
        }
        let scn_r = match with_gamma0(scn, gamma0) {
            Ok(s) => s,
            Err(e) => return RatePoint::Error(e.to_string()),
        };
        let joint = match solve_p2(&scn_r, &h, None, &opts) {
            Ok(s) => s,
            Err(BfError::InfeasibleSinr { .. }) => return RatePoint::Infeasible,
            Err(e) => return RatePoint::Error(e.to_string()),
        };
        let fill = |vals: Result<Vec<f64>, CliError>| -> RatePoint {
            match vals {
                Ok(v) => RatePoint::Ok(v.into_iter().map(fmt_num).collect()),
                Err(e) => RatePoint::Error(e.to_string()),
            }
        };
        match kind {
            ExperimentKind::TradeoffCurve => fill((|| {
                Ok(vec![
                    min_pd_exact(&scn_r, &joint)?,
                    min_pd_approx(&scn_r, &joint)?,
                ])
            })()),
            ExperimentKind::PowerAllocation => fill((|| {
                Ok(vec![
                    joint.comm_power(),
                    joint.sensing_power(),
                    min_pd_exact(&scn_r, &joint)?,
                    lin_to_db(joint.achieved_sinr.max(1e-300)),
                ])
            })()),
            ExperimentKind::DetectorCompare => fill((|| {
                let pd_joint = min_pd_exact(&scn_r, &joint)?;
                let gauss =
                    solve_p3(&scn_r, &h, &opts).map_err(|e| CliError::Config(e.to_string()))?;
                let min_gc = gauss
                    .per_q
                    .iter()
                    .map(|m| m.gamma_c)
                    .fold(f64::INFINITY, f64::min);
                let pd_gauss = pd_gaussian_only(min_gc, scn_r.cfg.l_symbols as u64, scn_r.cfg.pfa)
                    .map_err(|e| CliError::Config(e.to_string()))?;
                let det = benchmark_deterministic_only(&scn_r, &h, &opts)
                    .map_err(|e| CliError::Config(e.to_string()))?;
                let (pd_det, lo, hi) = det_only_min_pd_mc(&scn_r, &det, trials)?;
                Ok(vec![pd_joint, pd_gauss, pd_det, lo, hi])
            })()),
            ExperimentKind::BfCompare => fill((|| {
                let pd_joint = min_pd_exact(&scn_r, &joint)?;
                let ts = benchmark_time_switching(&scn_r, &h, rate)
                    .map_err(|e| CliError::Config(e.to_string()))?;
                let pd_ts = ts
                    .min_pd(&scn_r, scn_r.cfg.pfa)
                    .map_err(|e| CliError::Config(e.to_string()))?;
                let bp = benchmark_beampattern_gain(&scn_r, &h, &opts)
                    .map_err(|e| CliError::Config(e.to_string()))?;
                let pd_bp = min_pd_exact(&scn_r, &bp)?;
                Ok(vec![pd_joint, pd_ts, pd_bp])
            })()),
            _ => unreachable!(),
        }
    };

    let results: Vec<RatePoint> = ax.values.par_iter().map(|&r| eval_point(r)).collect();

    let mut failed = 0usize;
    for (rate, rp) in ax.values.iter().zip(results) {
        let gamma0 = 2f64.powf(*rate) - 1.0;
        let mut row = vec![fmt_num(*rate), fmt_num(lin_to_db(gamma0.max(1e-300)))];
        match rp {
            RatePoint::Ok(vals) => {
                row.extend(vals);
                row.push("ok".to_string());
            }
            RatePoint::Infeasible => {
                row.extend(std::iter::repeat_n(String::new(), value_cols.len()));
                row.push("infeasible".to_string());
            }
            RatePoint::Error(e) => {
                failed += 1;
                row.extend(std::iter::repeat_n(String::new(), value_cols.len()));
                row.push(format!("error: {}", e.replace([',', '\n'], ";")));
            }
        }
        t.push_row(row);
    }
    Ok(RunOutput {
        table: t,
        failed_points: failed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use isac_core::scenario::{ScenarioConfig, ScenarioFile};

    fn tiny_scenario() -> Scenario {
        let mut f = ScenarioFile::baseline();
        f.tx_antennas = 4;
        f.rx_antennas = 4;
        f.symbols = 64;
        f.grid.points = Some(3);
        f.sinr_min_db = 5.0;
        Scenario::new(ScenarioConfig::from_file(&f).unwrap()).unwrap()
    }

    #[test]
    fn pd_vs_l_reports_duration_scaling() {
        let scn = tiny_scenario();
        let ax = SweepAxis::parse("l=16:2048:8:log").unwrap();
        let out = run_on(ExperimentKind::PdVsL, &scn, &[ax], 0).unwrap();
        // monotone in L per column
        let col = out.table.column_index("pd_gamma_c_0db").unwrap();
        let vals: Vec<f64> = out
            .table
            .rows
            .iter()
            .map(|r| r[col].parse().unwrap())
            .collect();
        for w in vals.windows(2) {
            assert!(w[1] >= w[0] - 1e-12);
        }
    }

    #[test]
    fn probabilities_stay_in_unit_interval() {
        let scn = tiny_scenario();
        let out = run_on(ExperimentKind::PdSurface, &scn, &[], 0).unwrap();
        for row in &out.table.rows {
            let pd: f64 = row[4].parse().unwrap();
            assert!((0.0..=1.0).contains(&pd));
        }
    }

    #[test]
    fn rate_sweep_handles_infeasible_points() {
        let scn = tiny_scenario();
        let ax = SweepAxis::parse("rate_bps=1:20:4:lin").unwrap();
        let out = run_on(ExperimentKind::PowerAllocation, &scn, &[ax], 0).unwrap();
        assert_eq!(out.failed_points, 0);
        let status = out.table.column_index("status").unwrap();
        assert!(out.table.rows.iter().any(|r| r[status] == "ok"));
        assert!(out.table.rows.iter().any(|r| r[status] == "infeasible"));
        // emitted powers never exceed the budget
        let (ci, si) = (
            out.table.column_index("comm_power_w").unwrap(),
            out.table.column_index("sensing_power_w").unwrap(),
        );
        for row in out.table.rows.iter().filter(|r| r[status] == "ok") {
            let total: f64 = row[ci].parse::<f64>().unwrap() + row[si].parse::<f64>().unwrap();
            assert!(
                total <= scn.cfg.p_max * (1.0 + 1e-8),
                "power {total} over budget"
            );
        }
    }
}
