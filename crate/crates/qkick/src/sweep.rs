//! Grid runs (`qkick sweep`): one quasi-stationary report per
//! `(kick spec, tau_k, kappa)` point, computed on a bounded worker pool and
//! written in grid order.

use std::f64::consts::PI;
use std::str::FromStr;
use std::time::Instant;

use qkick_core::evolution::POSITIVITY_TOL;
use qkick_core::quasi_steady::run_to_qss;
use qkick_core::spin_chain::qubit_name;
use qkick_core::{LinearFit, Liouvillian};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ExperimentConfig, KickTemplate};
use crate::error::{HarnessError, Result};
use crate::output::{create_dir, fmt_f64, fmt_opt, out_path, write_csv, write_json};
use crate::run::{initial_density, stepper_for, QssSummary};

pub const THREADS_ENV: &str = "QKICK_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridKind {
    Kappa,
    TauK,
    Both,
}

impl FromStr for GridKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "kappa" => Ok(GridKind::Kappa),
            "tau_k" => Ok(GridKind::TauK),
            "both" => Ok(GridKind::Both),
            other => Err(format!(
                "unknown grid '{other}' (expected kappa, tau_k or both)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub kick: KickTemplate,
    pub q: f64,
    pub tau_k: f64,
    pub kappa: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub point: SweepPoint,
    pub outcome: std::result::Result<QssSummary, String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FitSummary {
    pub kick: String,
    pub q: f64,
    pub tau_k: f64,
    pub points: usize,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepSummary {
    pub name: String,
    pub config_hash: String,
    pub config: serde_json::Value,
    pub grid: String,
    pub points: usize,
    pub failed: usize,
    pub not_converged: usize,
    /// Least-squares `E_qst` against `dQ/tau_k` per kick spec and period
    /// (kappa sweeps only).
    pub fits: Vec<FitSummary>,
    pub warnings: Vec<String>,
    pub threads: usize,
    pub wall_time_s: f64,
}

/// Expands the configured grids in `kick -> q -> kappa` order.
pub fn grid_points(cfg: &ExperimentConfig, grid: GridKind) -> Result<Vec<SweepPoint>> {
    let qs: Vec<f64> = match grid {
        GridKind::TauK | GridKind::Both => cfg
            .q_grid
            .clone()
            .ok_or_else(|| HarnessError::config("q_grid", "needed for a tau_k sweep"))?,
        GridKind::Kappa => {
            let tau = cfg.tau_k.ok_or_else(|| {
                HarnessError::config("tau_k", "a kappa sweep needs 'tau_k' or 'q'")
            })?;
            vec![4.0 * PI / tau]
        }
    };
    let kappas: Vec<Option<f64>> = match grid {
        GridKind::Kappa | GridKind::Both => cfg
            .kappa_grid
            .clone()
            .ok_or_else(|| HarnessError::config("kappa_grid", "needed for a kappa sweep"))?
            .into_iter()
            .map(Some)
            .collect(),
        GridKind::TauK => vec![cfg.kappa],
    };
    let mut points = Vec::with_capacity(cfg.kicks.len() * qs.len() * kappas.len());
    for kick in &cfg.kicks {
        if kick.uses_kappa() && kappas.iter().any(Option::is_none) {
            return Err(HarnessError::config(
                "kappa",
                format!("kick '{}' needs 'kappa' or a kappa grid", kick.as_str()),
            ));
        }
        for &q in &qs {
            // Kappa sweeps keep the configured period exactly.
            let tau_k = match (grid, cfg.tau_k) {
                (GridKind::Kappa, Some(t)) => t,
                _ => 4.0 * PI / q,
            };
            for &kappa in &kappas {
                points.push(SweepPoint {
                    kick: kick.clone(),
                    q,
                    tau_k,
                    kappa,
                });
            }
        }
    }
    Ok(points)
}

/// Worker pool sized by `QKICK_THREADS` (all cores when unset).
pub fn worker_pool() -> Result<rayon::ThreadPool> {
    let threads = match std::env::var(THREADS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => n,
            _ => {
                return Err(HarnessError::config(
                    THREADS_ENV,
                    format!("expected a positive integer, got '{v}'"),
                ))
            }
        },
        Err(_) => 0,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| HarnessError::config(THREADS_ENV, e.to_string()))
}

fn run_point(
    cfg: &ExperimentConfig,
    liouv: &Liouvillian,
    p: &SweepPoint,
) -> std::result::Result<QssSummary, String> {
    let spec = p.kick.resolve(p.kappa).map_err(|e| e.to_string())?;
    let stepper = stepper_for(cfg, Some(p.tau_k)).map_err(|e| e.to_string())?;
    let rho0 = initial_density(cfg).map_err(|e| e.to_string())?;
    run_to_qss(&rho0, p.tau_k, &spec, liouv, &stepper, &cfg.qss)
        .map(|r| QssSummary::from(&r.report))
        .map_err(|e| e.to_string())
}

/// Evaluates every grid point; failures are kept as rows with their reason.
pub fn compute_sweep(
    cfg: &ExperimentConfig,
    grid: GridKind,
    pool: &rayon::ThreadPool,
) -> Result<Vec<SweepRow>> {
    let liouv = Liouvillian::new(&cfg.chain)?;
    let points = grid_points(cfg, grid)?;
    let rows: Vec<SweepRow> = pool.install(|| {
        points
            .into_par_iter()
            .map(|point| {
                let outcome = run_point(cfg, &liouv, &point);
                SweepRow { point, outcome }
            })
            .collect()
    });
    if let Some(first) = rows.first() {
        if rows.iter().all(|r| r.outcome.is_err()) {
            let reason = first.outcome.clone().err().unwrap_or_default();
            return Err(HarnessError::SweepFailed(rows.len(), reason));
        }
    }
    Ok(rows)
}

pub fn sweep_header(n_qubits: usize) -> Vec<String> {
    let mut h: Vec<String> = [
        "kick",
        "q",
        "tau_k",
        "kappa",
        "status",
        "converged",
        "n_transient_kicks",
        "n_kicks_run",
        "e_qst",
        "e_qst_std",
        "dq_per_tau",
        "fourier_coeff",
        "purity_qst",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    h.extend((0..n_qubits).map(|j| format!("log_neg_{}", qubit_name(j))));
    h.extend(
        ["positivity_min_eig", "balance_residual", "error"]
            .iter()
            .map(|s| s.to_string()),
    );
    h
}

pub fn sweep_record(row: &SweepRow, n_qubits: usize) -> Vec<String> {
    let p = &row.point;
    let mut r = vec![
        p.kick.as_str().to_string(),
        fmt_f64(p.q),
        fmt_f64(p.tau_k),
        fmt_opt(p.kappa),
    ];
    match &row.outcome {
        Ok(s) => {
            r.push("ok".into());
            r.push(s.converged.to_string());
            r.push(s.n_transient_kicks.to_string());
            r.push(s.n_kicks_run.to_string());
            r.extend([s.e_qst, s.e_qst_std, s.dq_per_tau].map(fmt_f64));
            r.push(fmt_opt(s.fourier_coeff));
            r.push(fmt_f64(s.purity_qst));
            r.extend(s.log_neg_qst.iter().map(|&x| fmt_f64(x)));
            r.push(fmt_f64(s.positivity_min_eig));
            r.push(fmt_f64(s.balance_residual));
            r.push(String::new());
        }
        Err(reason) => {
            r.push("failed".into());
            r.extend(std::iter::repeat_n(String::new(), 8 + n_qubits + 2));
            r.push(reason.clone());
        }
    }
    r
}

/// Linear fits over kappa for every `(kick, q)` block with at least 3 points.
pub fn kappa_fits(rows: &[SweepRow]) -> Vec<FitSummary> {
    let mut fits = Vec::new();
    let mut start = 0;
    while start < rows.len() {
        let key = (&rows[start].point.kick, rows[start].point.q);
        let end = rows[start..]
            .iter()
            .position(|r| (&r.point.kick, r.point.q) != key)
            .map_or(rows.len(), |k| start + k);
        let ok: Vec<&QssSummary> = rows[start..end]
            .iter()
            .filter_map(|r| r.outcome.as_ref().ok())
            .collect();
        if ok.len() >= 3 {
            let xs: Vec<f64> = ok.iter().map(|s| s.dq_per_tau).collect();
            let ys: Vec<f64> = ok.iter().map(|s| s.e_qst).collect();
            if let Ok(f) = LinearFit::fit(&xs, &ys) {
                fits.push(FitSummary {
                    kick: key.0.as_str().to_string(),
                    q: key.1,
                    tau_k: rows[start].point.tau_k,
                    points: ok.len(),
                    slope: f.slope,
                    intercept: f.intercept,
                    r_squared: f.r_squared,
                });
            }
        }
        start = end;
    }
    fits
}

/// Runs the sweep and writes `<name>_sweep.csv` and `<name>_sweep.json`.
pub fn run_sweep(cfg: &ExperimentConfig, grid: GridKind) -> Result<(SweepSummary, Vec<SweepRow>)> {
    let started = Instant::now();
    let pool = worker_pool()?;
    let rows = compute_sweep(cfg, grid, &pool)?;
    let n = cfg.chain.n_qubits();

    create_dir(&cfg.out_dir)?;
    let records: Vec<Vec<String>> = rows.iter().map(|r| sweep_record(r, n)).collect();
    write_csv(
        &out_path(&cfg.out_dir, &cfg.name, "sweep.csv"),
        &sweep_header(n),
        &records,
    )?;

    let failed = rows.iter().filter(|r| r.outcome.is_err()).count();
    let not_converged = rows
        .iter()
        .filter(|r| matches!(&r.outcome, Ok(s) if !s.converged))
        .count();
    let mut warnings = Vec::new();
    if failed > 0 {
        warnings.push(format!(
            "{failed} of {} points failed; see the error column",
            rows.len()
        ));
    }
    if not_converged > 0 {
        warnings.push(format!(
            "{not_converged} points did not reach the quasi-stationary criterion within {} kicks",
            cfg.qss.max_kicks
        ));
    }
    let worst = rows
        .iter()
        .filter_map(|r| r.outcome.as_ref().ok())
        .map(|s| s.positivity_min_eig)
        .fold(f64::INFINITY, f64::min);
    if worst < -POSITIVITY_TOL {
        warnings.push(format!(
            "positivity violated at some points: min eigenvalue {worst:e}"
        ));
    }
    let summary = SweepSummary {
        name: cfg.name.clone(),
        config_hash: cfg.content_hash(),
        config: serde_json::to_value(&cfg.resolved)?,
        grid: match grid {
            GridKind::Kappa => "kappa",
            GridKind::TauK => "tau_k",
            GridKind::Both => "both",
        }
        .into(),
        points: rows.len(),
        failed,
        not_converged,
        fits: if grid == GridKind::TauK {
            Vec::new()
        } else {
            kappa_fits(&rows)
        },
        warnings,
        threads: pool.current_num_threads(),
        wall_time_s: started.elapsed().as_secs_f64(),
    };
    write_json(&out_path(&cfg.out_dir, &cfg.name, "sweep.json"), &summary)?;
    Ok((summary, rows))
}
