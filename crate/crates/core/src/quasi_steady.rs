//! Detection of the quasi-stationary (limit-cycle) regime and its
//! thermodynamic summary.
//!
//! Per kick cycle `n` the mean energy is `(E(tau_n+) + E(tau_n-)) / 2`. The
//! run is quasi-stationary once that mean changes by less than `tol` between
//! consecutive cycles for `window` consecutive cycles; all post-transient
//! averages are taken from the first cycle of that window onwards.

use std::collections::VecDeque;

use crate::evolution::{
    DensityMatrix, KickRecord, KickSpec, KickedEvolution, Liouvillian, SegmentMethod, Stepper,
    Trajectory,
};
use crate::observables::{log_negativity, purity};
use crate::{Error, Result};

/// Convergence settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QssConfig {
    /// Absolute tolerance on the cycle-to-cycle change of the mean energy.
    pub tol: f64,
    /// Number of consecutive cycles that must satisfy the tolerance.
    pub window: usize,
    pub max_kicks: usize,
}

impl Default for QssConfig {
    fn default() -> Self {
        QssConfig {
            tol: 1e-7,
            window: 20,
            max_kicks: 5000,
        }
    }
}

/// Outcome of [`detect_qss`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QssStatus {
    pub converged: bool,
    /// Cycles before the convergence window starts (all cycles when not converged).
    pub n_transient: usize,
}

fn check_window(records: &[KickRecord], window: usize) -> Result<()> {
    if window == 0 {
        return Err(Error::InvalidInput(
            "convergence window must be >= 1".into(),
        ));
    }
    if records.len() < window + 1 {
        return Err(Error::InsufficientData {
            needed: window + 1,
            have: records.len(),
        });
    }
    Ok(())
}

/// Scans `records` for the first run of `window` consecutive small changes.
pub fn detect_in_records(records: &[KickRecord], tol: f64, window: usize) -> Result<QssStatus> {
    check_window(records, window)?;
    let mut run = 0;
    for k in 1..records.len() {
        if (records[k].mean_energy() - records[k - 1].mean_energy()).abs() < tol {
            run += 1;
            if run == window {
                return Ok(QssStatus {
                    converged: true,
                    n_transient: k - window,
                });
            }
        } else {
            run = 0;
        }
    }
    Ok(QssStatus {
        converged: false,
        n_transient: records.len(),
    })
}

pub fn detect_qss(trajectory: &Trajectory, tol: f64, window: usize) -> Result<QssStatus> {
    detect_in_records(&trajectory.records, tol, window)
}

fn post_transient<'a>(records: &'a [KickRecord], status: &QssStatus) -> Result<&'a [KickRecord]> {
    if !status.converged {
        return Err(Error::NotConverged);
    }
    records
        .get(status.n_transient..)
        .filter(|r| !r.is_empty())
        .ok_or(Error::NotConverged)
}

/// Mean over post-transient cycles of `(E+ + E-) / 2`.
pub fn qss_energy(trajectory: &Trajectory, status: &QssStatus) -> Result<f64> {
    let recs = post_transient(&trajectory.records, status)?;
    Ok(mean(recs.iter().map(KickRecord::mean_energy)))
}

/// Mean over post-transient cycles of `(E(tau_n+) - E(tau_{n+1}-)) / tau_k`.
pub fn dissipated_power(trajectory: &Trajectory, status: &QssStatus) -> Result<f64> {
    let recs = post_transient(&trajectory.records, status)?;
    dissipated_power_of(recs, trajectory.tau_k)
}

fn dissipated_power_of(recs: &[KickRecord], tau_k: f64) -> Result<f64> {
    if recs.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            have: recs.len(),
        });
    }
    Ok(mean(
        recs.windows(2)
            .map(|w| (w[0].energy_post - w[1].energy_pre) / tau_k),
    ))
}

/// `e_qst / dq_per_tau`.
pub fn fourier_coefficient(e_qst: f64, dq_per_tau: f64) -> Result<f64> {
    if dq_per_tau == 0.0 || !dq_per_tau.is_finite() {
        return Err(Error::UndefinedCoefficient);
    }
    Ok(e_qst / dq_per_tau)
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        sum / n as f64
    }
}

fn std_dev(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let m = mean(values.iter().copied());
    (values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (values.len() - 1) as f64).sqrt()
}

/// Converged quasi-stationary quantities.
#[derive(Debug, Clone, PartialEq)]
pub struct QssReport {
    pub converged: bool,
    pub n_transient_kicks: usize,
    pub n_kicks_run: usize,
    pub e_qst: f64,
    /// Standard deviation of the per-cycle mean energy over the averaging cycles.
    pub e_qst_std: f64,
    pub dq_per_tau: f64,
    /// `None` when the dissipated power is below the resolution of the run.
    pub fourier_coeff: Option<f64>,
    pub purity_qst: f64,
    pub log_neg_qst: Vec<f64>,
    pub positivity_min_eig: f64,
    /// Largest `|E(tau_{n+1}-) - E(tau_n-)|` over the averaging cycles: the
    /// mismatch between kick input and dissipated output.
    pub balance_residual: f64,
}

/// Summarises averaging cycles `recs` with their states.
fn summarise(
    recs: &[KickRecord],
    states: &VecDeque<(DensityMatrix, DensityMatrix)>,
    status: QssStatus,
    n_kicks_run: usize,
    tau_k: f64,
    tol: f64,
    positivity_min_eig: f64,
) -> Result<QssReport> {
    let means: Vec<f64> = recs.iter().map(KickRecord::mean_energy).collect();
    let e_qst = mean(means.iter().copied());
    let dq_per_tau = dissipated_power_of(recs, tau_k)?;
    let fourier_coeff = if dq_per_tau.abs() * tau_k > tol {
        fourier_coefficient(e_qst, dq_per_tau).ok()
    } else {
        None
    };
    let n_qubits = states.front().map(|s| s.0.n_qubits()).unwrap_or(0);
    let purity_qst = mean(states.iter().map(|(a, b)| 0.5 * (purity(a) + purity(b))));
    let log_neg_qst = (0..n_qubits)
        .map(|j| {
            states
                .iter()
                .map(|(a, b)| Ok(0.5 * (log_negativity(a, j)? + log_negativity(b, j)?)))
                .sum::<Result<f64>>()
                .map(|s| s / states.len() as f64)
        })
        .collect::<Result<Vec<_>>>()?;
    let balance_residual = recs
        .windows(2)
        .map(|w| (w[1].energy_pre - w[0].energy_pre).abs())
        .fold(0.0, f64::max);
    Ok(QssReport {
        converged: status.converged,
        n_transient_kicks: status.n_transient,
        n_kicks_run,
        e_qst,
        e_qst_std: std_dev(&means),
        dq_per_tau,
        fourier_coeff,
        purity_qst,
        log_neg_qst,
        positivity_min_eig,
        balance_residual,
    })
}

/// Result of [`run_to_qss`].
#[derive(Debug, Clone)]
pub struct QssRun {
    pub report: QssReport,
    pub records: Vec<KickRecord>,
    /// Last pre-kick and post-kick states.
    pub last_pre: DensityMatrix,
    pub last_post: DensityMatrix,
}

/// Kicks the system until the quasi-stationary criterion holds (or
/// `max_kicks` is reached) and summarises the regime.
///
/// When the criterion never holds the report is built from the last
/// `window + 1` cycles and flagged `converged = false`.
pub fn run_to_qss(
    rho0: &DensityMatrix,
    tau_k: f64,
    spec: &KickSpec,
    liouv: &Liouvillian,
    stepper: &Stepper,
    cfg: &QssConfig,
) -> Result<QssRun> {
    if cfg.window == 0 || cfg.max_kicks < cfg.window + 1 {
        return Err(Error::InvalidInput(format!(
            "max_kicks ({}) must exceed the convergence window ({})",
            cfg.max_kicks, cfg.window
        )));
    }
    let mut evo = KickedEvolution::new(rho0, tau_k, spec, liouv, stepper, SegmentMethod::Auto)?;
    let keep = cfg.window + 1;
    let mut records: Vec<KickRecord> = Vec::new();
    let mut states: VecDeque<(DensityMatrix, DensityMatrix)> = VecDeque::with_capacity(keep + 1);
    let mut run = 0;
    let mut min_eig = f64::INFINITY;
    let mut status = None;
    while records.len() < cfg.max_kicks {
        let (rec, pre, post) = evo.record_cycle()?;
        min_eig = min_eig.min(rec.min_eigenvalue);
        if let Some(prev) = records.last() {
            if (rec.mean_energy() - prev.mean_energy()).abs() < cfg.tol {
                run += 1;
            } else {
                run = 0;
            }
        }
        records.push(rec);
        states.push_back((pre, post));
        if states.len() > keep {
            states.pop_front();
        }
        if run == cfg.window {
            status = Some(QssStatus {
                converged: true,
                n_transient: records.len() - keep,
            });
            break;
        }
    }
    let status = status.unwrap_or(QssStatus {
        converged: false,
        n_transient: records.len(),
    });
    let start = records.len() - keep;
    let report = summarise(
        &records[start..],
        &states,
        status,
        records.len(),
        tau_k,
        cfg.tol,
        min_eig,
    )?;
    let (last_pre, last_post) = states.back().cloned().expect("at least one cycle");
    Ok(QssRun {
        report,
        records,
        last_pre,
        last_post,
    })
}

/// Least-squares line `y = slope x + intercept` with coefficient of determination.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

impl LinearFit {
    pub fn fit(xs: &[f64], ys: &[f64]) -> Result<Self> {
        if xs.len() != ys.len() || xs.len() < 2 {
            return Err(Error::InvalidInput(format!(
                "need >= 2 paired points, got {} and {}",
                xs.len(),
                ys.len()
            )));
        }
        let n = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / n;
        let my = ys.iter().sum::<f64>() / n;
        let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
        let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
        if sxx == 0.0 {
            return Err(Error::InvalidInput("abscissae are all equal".into()));
        }
        let slope = sxy / sxx;
        let intercept = my - slope * mx;
        let ss_res: f64 = xs
            .iter()
            .zip(ys)
            .map(|(x, y)| (y - slope * x - intercept).powi(2))
            .sum();
        let r_squared = if syy == 0.0 { 1.0 } else { 1.0 - ss_res / syy };
        Ok(LinearFit {
            slope,
            intercept,
            r_squared,
        })
    }
}

/// Indices whose step to a neighbour exceeds `factor` times the typical
/// (median) step along the series. Used to flag resonance spikes in sweeps.
pub fn flag_jumps(values: &[f64], factor: f64) -> Vec<usize> {
    if values.len() < 3 {
        return Vec::new();
    }
    let steps: Vec<f64> = values.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    let mut sorted = steps.clone();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let median = sorted[sorted.len() / 2];
    steps
        .iter()
        .enumerate()
        .filter(|(_, &s)| s > factor * median && s > 0.0)
        .map(|(k, _)| k + 1)
        .collect()
}
