//! Single-trajectory runs (`qkick evolve`).

use std::path::PathBuf;
use std::time::Instant;

use qkick_core::evolution::{integrate_sampled, step_refinement_error, POSITIVITY_TOL};
use qkick_core::observables::{gibbs_populations, log_negativity, populations, purity};
use qkick_core::quasi_steady::run_to_qss;
use qkick_core::spin_chain::{hamiltonian_diagonal, qubit_name};
use qkick_core::{
    apply_kick, kick_unitary, DensityMatrix, KickSpec, Liouvillian, QssReport, Stepper,
};
use serde::Serialize;

use crate::config::{ExperimentConfig, InitialState};
use crate::error::{HarnessError, Result};
use crate::output::{create_dir, fmt_f64, out_path, write_csv, write_json, write_matrix};

/// Serialisable mirror of [`QssReport`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QssSummary {
    pub converged: bool,
    pub n_transient_kicks: usize,
    pub n_kicks_run: usize,
    pub e_qst: f64,
    pub e_qst_std: f64,
    pub dq_per_tau: f64,
    pub fourier_coeff: Option<f64>,
    pub purity_qst: f64,
    pub log_neg_qst: Vec<f64>,
    pub positivity_min_eig: f64,
    pub balance_residual: f64,
}

impl From<&QssReport> for QssSummary {
    fn from(r: &QssReport) -> Self {
        QssSummary {
            converged: r.converged,
            n_transient_kicks: r.n_transient_kicks,
            n_kicks_run: r.n_kicks_run,
            e_qst: r.e_qst,
            e_qst_std: r.e_qst_std,
            dq_per_tau: r.dq_per_tau,
            fourier_coeff: r.fourier_coeff,
            purity_qst: r.purity_qst,
            log_neg_qst: r.log_neg_qst.clone(),
            positivity_min_eig: r.positivity_min_eig,
            balance_residual: r.balance_residual,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct StateSummary {
    pub energy: f64,
    pub purity: f64,
    pub populations: Vec<f64>,
    pub log_negativity: Vec<f64>,
    pub trace_error: f64,
    pub hermiticity_residual: f64,
    pub min_eigenvalue: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub name: String,
    pub config_hash: String,
    pub config: serde_json::Value,
    pub kick: String,
    pub tau_k: Option<f64>,
    pub initial_state: String,
    pub dt: f64,
    pub qss: Option<QssSummary>,
    pub final_state: StateSummary,
    /// Boltzmann weights of the bare spectrum (finite temperature only).
    pub gibbs_populations: Option<Vec<f64>>,
    pub step_refinement_error: f64,
    pub warnings: Vec<String>,
    pub wall_time_s: f64,
    pub files: Vec<PathBuf>,
}

/// Where a series row was taken.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Initial,
    Flow,
    PreKick,
    PostKick,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Initial => "initial",
            Phase::Flow => "flow",
            Phase::PreKick => "pre",
            Phase::PostKick => "post",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeriesRow {
    pub tau: f64,
    pub phase: Phase,
    /// Number of kicks applied so far.
    pub kick: usize,
    pub energy: f64,
    pub purity: f64,
    pub populations: Vec<f64>,
    pub coherences: Vec<f64>,
    pub log_negativity: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct Series {
    pub rows: Vec<SeriesRow>,
    pub final_state: DensityMatrix,
    /// Last pre-kick state of a kicked run, the final state otherwise.
    pub last_pre_kick: DensityMatrix,
    pub min_eigenvalue: f64,
}

pub fn initial_density(cfg: &ExperimentConfig) -> Result<DensityMatrix> {
    let n = cfg.chain.n_qubits();
    Ok(match cfg.initial_state {
        InitialState::Basis(label) => DensityMatrix::basis_state(label, n)?,
        InitialState::MaximallyMixed => DensityMatrix::maximally_mixed(n),
    })
}

/// Integrator settings: the configured `dt`, else `min(tau_k / 200, 0.01)`.
pub fn stepper_for(cfg: &ExperimentConfig, tau_k: Option<f64>) -> Result<Stepper> {
    match (cfg.dt, tau_k) {
        (Some(dt), _) => Ok(Stepper::new(dt)?),
        (None, Some(t)) => Ok(Stepper::for_period(t)),
        (None, None) => Ok(Stepper::default()),
    }
}

/// The kick spec and period of a single run, `None` for free evolution.
pub fn single_kick(cfg: &ExperimentConfig) -> Result<Option<(KickSpec, f64)>> {
    let template = cfg.kick();
    let spec = template
        .resolve(cfg.kappa)
        .map_err(|e| HarnessError::config("kappa", e.to_string()))?;
    if spec.is_empty() {
        return Ok(None);
    }
    let tau_k = cfg
        .tau_k
        .ok_or_else(|| HarnessError::config("tau_k", "kicked runs need 'tau_k' or 'q'"))?;
    Ok(Some((spec, tau_k)))
}

fn measure(
    cfg: &ExperimentConfig,
    liouv: &Liouvillian,
    rho: &DensityMatrix,
    tau: f64,
    phase: Phase,
    kick: usize,
) -> Result<SeriesRow> {
    let n = rho.n_qubits();
    let m = rho.matrix();
    Ok(SeriesRow {
        tau,
        phase,
        kick,
        energy: liouv.energy(m),
        purity: purity(rho),
        populations: populations(rho),
        coherences: cfg
            .coherences
            .iter()
            .map(|&(a, b)| m[(a - 1, b - 1)].norm())
            .collect(),
        log_negativity: (0..n)
            .map(|j| log_negativity(rho, j))
            .collect::<qkick_core::Result<_>>()?,
    })
}

/// Samples the trajectory every `sample_every` integrator steps, plus the
/// states on both sides of each kick.
pub fn compute_series(cfg: &ExperimentConfig) -> Result<Series> {
    let liouv = Liouvillian::new(&cfg.chain)?;
    let rho0 = initial_density(cfg)?;
    let kick = single_kick(cfg)?;
    let stepper = stepper_for(cfg, kick.as_ref().map(|k| k.1))?;
    let mut rows = vec![measure(cfg, &liouv, &rho0, 0.0, Phase::Initial, 0)?];
    let mut min_eig = rho0.min_eigenvalue();

    let (final_state, last_pre) = match kick {
        None => {
            let mut samples = Vec::new();
            let (n_steps, _) = stepper.steps_for(cfg.duration);
            let end = integrate_sampled(
                &rho0,
                cfg.duration,
                &liouv,
                &stepper,
                cfg.sample_every,
                |step, tau, m| {
                    if step < n_steps {
                        samples.push((tau, m.clone()));
                    }
                },
            )?;
            for (tau, m) in samples {
                rows.push(measure(
                    cfg,
                    &liouv,
                    &DensityMatrix::from_matrix_unchecked(m),
                    tau,
                    Phase::Flow,
                    0,
                )?);
            }
            rows.push(measure(cfg, &liouv, &end, cfg.duration, Phase::Flow, 0)?);
            min_eig = min_eig.min(end.min_eigenvalue());
            (end.clone(), end)
        }
        Some((spec, tau_k)) => {
            let u = kick_unitary(&spec, cfg.chain.n_qubits())?;
            let (n_steps, _) = stepper.steps_for(tau_k);
            let mut rho = rho0.clone();
            let mut last_pre = rho0.clone();
            for k in 0..cfg.n_kicks {
                let t0 = k as f64 * tau_k;
                let mut samples = Vec::new();
                let pre = integrate_sampled(
                    &rho,
                    tau_k,
                    &liouv,
                    &stepper,
                    cfg.sample_every,
                    |step, tau, m| {
                        if step < n_steps {
                            samples.push((t0 + tau, m.clone()));
                        }
                    },
                )?;
                for (tau, m) in samples {
                    let s = DensityMatrix::from_matrix_unchecked(m);
                    rows.push(measure(cfg, &liouv, &s, tau, Phase::Flow, k)?);
                }
                let t = (k + 1) as f64 * tau_k;
                rows.push(measure(cfg, &liouv, &pre, t, Phase::PreKick, k)?);
                min_eig = min_eig.min(pre.min_eigenvalue());
                let post = apply_kick(&pre, &u)?;
                rows.push(measure(cfg, &liouv, &post, t, Phase::PostKick, k + 1)?);
                last_pre = pre;
                rho = post;
            }
            (rho, last_pre)
        }
    };
    Ok(Series {
        rows,
        final_state,
        last_pre_kick: last_pre,
        min_eigenvalue: min_eig,
    })
}

pub fn series_header(cfg: &ExperimentConfig) -> Vec<String> {
    let n = cfg.chain.n_qubits();
    let mut h: Vec<String> = ["tau", "phase", "kick", "energy", "purity"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    h.extend((1..=cfg.chain.dim()).map(|l| format!("p{l}")));
    h.extend(
        cfg.coherences
            .iter()
            .map(|(a, b)| format!("abs_rho_{a}_{b}")),
    );
    h.extend((0..n).map(|j| format!("log_neg_{}", qubit_name(j))));
    h
}

pub fn series_record(row: &SeriesRow) -> Vec<String> {
    let mut r = vec![
        fmt_f64(row.tau),
        row.phase.as_str().to_string(),
        row.kick.to_string(),
        fmt_f64(row.energy),
        fmt_f64(row.purity),
    ];
    r.extend(row.populations.iter().map(|&x| fmt_f64(x)));
    r.extend(row.coherences.iter().map(|&x| fmt_f64(x)));
    r.extend(row.log_negativity.iter().map(|&x| fmt_f64(x)));
    r
}

fn state_summary(liouv: &Liouvillian, rho: &DensityMatrix) -> Result<StateSummary> {
    let d = rho.diagnostics();
    Ok(StateSummary {
        energy: liouv.energy(rho.matrix()),
        purity: purity(rho),
        populations: populations(rho),
        log_negativity: (0..rho.n_qubits())
            .map(|j| log_negativity(rho, j))
            .collect::<qkick_core::Result<_>>()?,
        trace_error: d.trace_error,
        hermiticity_residual: d.hermiticity_residual,
        min_eigenvalue: d.min_eigenvalue,
    })
}

/// Threshold on the halved-step comparison above which a run is flagged.
pub const REFINEMENT_WARN: f64 = 1e-6;

/// Runs one trajectory, writes `<name>_series.csv`, `<name>_summary.json`
/// and (optionally) `<name>_rho.csv` into the output directory.
pub fn run_single(cfg: &ExperimentConfig) -> Result<RunSummary> {
    let started = Instant::now();
    let liouv = Liouvillian::new(&cfg.chain)?;
    let series = compute_series(cfg)?;
    let kick = single_kick(cfg)?;
    let tau_k = kick.as_ref().map(|k| k.1);
    let stepper = stepper_for(cfg, tau_k)?;
    let mut warnings = Vec::new();

    let qss = match &kick {
        Some((spec, tau_k)) => {
            let r = run_to_qss(
                &initial_density(cfg)?,
                *tau_k,
                spec,
                &liouv,
                &stepper,
                &cfg.qss,
            )?;
            if !r.report.converged {
                warnings.push(format!(
                    "quasi-stationary state not reached within {} kicks (tol {:e}); averages use the last {} cycles",
                    cfg.qss.max_kicks,
                    cfg.qss.tol,
                    cfg.qss.window + 1
                ));
            }
            if r.report.positivity_min_eig < -POSITIVITY_TOL {
                warnings.push(format!(
                    "positivity violated during QSS run: min eigenvalue {:e}",
                    r.report.positivity_min_eig
                ));
            }
            Some(QssSummary::from(&r.report))
        }
        None => None,
    };
    if series.min_eigenvalue < -POSITIVITY_TOL {
        warnings.push(format!(
            "positivity violated along trajectory: min eigenvalue {:e}",
            series.min_eigenvalue
        ));
    }

    let probe = tau_k.unwrap_or(cfg.duration.min(10.0));
    let refinement = step_refinement_error(&initial_density(cfg)?, probe, &liouv, &stepper)?;
    if refinement > REFINEMENT_WARN {
        warnings.push(format!("halving dt changes the state by {refinement:e} over tau = {probe}; consider a smaller dt"));
    }

    let final_state = state_summary(&liouv, &series.final_state)?;
    if final_state.trace_error > qkick_core::evolution::TRACE_TOL {
        warnings.push(format!("trace drift {:e}", final_state.trace_error));
    }
    let gibbs = if cfg.chain.temperature() > 0.0 {
        Some(gibbs_populations(
            &hamiltonian_diagonal(&cfg.chain),
            cfg.chain.temperature(),
        )?)
    } else {
        None
    };

    create_dir(&cfg.out_dir)?;
    let mut files = Vec::new();
    let series_path = out_path(&cfg.out_dir, &cfg.name, "series.csv");
    let rows: Vec<Vec<String>> = series.rows.iter().map(series_record).collect();
    write_csv(&series_path, &series_header(cfg), &rows)?;
    files.push(series_path);
    if cfg.dump_matrix {
        let p = out_path(&cfg.out_dir, &cfg.name, "rho.csv");
        write_matrix(&p, series.last_pre_kick.matrix(), cfg.chain.n_qubits())?;
        files.push(p);
    }
    let summary_path = out_path(&cfg.out_dir, &cfg.name, "summary.json");
    files.push(summary_path.clone());

    let summary = RunSummary {
        name: cfg.name.clone(),
        config_hash: cfg.content_hash(),
        config: serde_json::to_value(&cfg.resolved)?,
        kick: cfg.kick().as_str().to_string(),
        tau_k,
        initial_state: cfg.initial_state.to_string(),
        dt: stepper.steps_for(tau_k.unwrap_or(cfg.duration)).1,
        qss,
        final_state,
        gibbs_populations: gibbs,
        step_refinement_error: refinement,
        warnings,
        wall_time_s: started.elapsed().as_secs_f64(),
        files,
    };
    write_json(&summary_path, &summary)?;
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::validate_config;

    #[test]
    fn kicked_series_layout() {
        let cfg = validate_config(
            "schema_version = 1\ntemperature = 0\nkick = \"C:x:pi/2\"\ntau_k = \"pi/2\"\nn_kicks = 3\nsample_every = 50\ncoherences = [[1, 2]]\n",
        )
        .unwrap();
        let s = compute_series(&cfg).unwrap();
        // tau_k = pi/2 -> 200 steps per period -> 3 flow samples + pre + post per kick
        assert_eq!(s.rows.len(), 1 + 3 * 5);
        let phases: Vec<&str> = s.rows[1..6].iter().map(|r| r.phase.as_str()).collect();
        assert_eq!(phases, ["flow", "flow", "flow", "pre", "post"]);
        let pre = &s.rows[4];
        let post = &s.rows[5];
        assert_eq!(pre.tau, post.tau);
        assert_eq!((pre.kick, post.kick), (0, 1));
        assert!(
            (pre.populations[7] - post.populations[7]).abs() > 1e-3,
            "kick must jump populations"
        );
        assert_eq!(series_header(&cfg).len(), series_record(pre).len());
        assert!(series_header(&cfg).contains(&"abs_rho_1_2".to_string()));
    }

    #[test]
    fn free_series_ends_at_duration() {
        let cfg = validate_config(
            "schema_version = 1\ntemperature = 1\nduration = 1.0\nsample_every = 25\n",
        )
        .unwrap();
        let s = compute_series(&cfg).unwrap();
        assert_eq!(s.rows.last().unwrap().tau, 1.0);
        assert_eq!(s.rows.len(), 1 + 3 + 1);
        assert!(s.rows.windows(2).all(|w| w[1].tau > w[0].tau));
    }

    #[test]
    fn kicks_need_a_period() {
        let cfg =
            validate_config("schema_version = 1\ntemperature = 0\nkick = \"A:x:pi\"\n").unwrap();
        match compute_series(&cfg) {
            Err(HarnessError::Config(v)) => assert_eq!(v[0].key, "tau_k"),
            other => panic!("{other:?}"),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct QssStateSummary {
    pub name: String,
    pub config_hash: String,
    pub kick: String,
    pub tau_k: f64,
    pub qss: QssSummary,
    /// Pre-kick state at the end of the run.
    pub state: StateSummary,
    pub warnings: Vec<String>,
    pub files: Vec<PathBuf>,
}

/// Kicks to the quasi-stationary regime and dumps the last pre-kick density
/// matrix as `<name>_rho.csv` with a `<name>_qss.json` summary.
pub fn run_qss_state(cfg: &ExperimentConfig) -> Result<QssStateSummary> {
    let liouv = Liouvillian::new(&cfg.chain)?;
    let (spec, tau_k) = single_kick(cfg)?
        .ok_or_else(|| HarnessError::config("kick", "a quasi-stationary run needs a kick"))?;
    let stepper = stepper_for(cfg, Some(tau_k))?;
    let r = run_to_qss(
        &initial_density(cfg)?,
        tau_k,
        &spec,
        &liouv,
        &stepper,
        &cfg.qss,
    )?;
    let mut warnings = Vec::new();
    if !r.report.converged {
        warnings.push(format!(
            "quasi-stationary state not reached within {} kicks",
            cfg.qss.max_kicks
        ));
    }
    if r.report.positivity_min_eig < -POSITIVITY_TOL {
        warnings.push(format!(
            "positivity violated: min eigenvalue {:e}",
            r.report.positivity_min_eig
        ));
    }
    create_dir(&cfg.out_dir)?;
    let rho_path = out_path(&cfg.out_dir, &cfg.name, "rho.csv");
    write_matrix(&rho_path, r.last_pre.matrix(), cfg.chain.n_qubits())?;
    let json_path = out_path(&cfg.out_dir, &cfg.name, "qss.json");
    let summary = QssStateSummary {
        name: cfg.name.clone(),
        config_hash: cfg.content_hash(),
        kick: cfg.kick().as_str().to_string(),
        tau_k,
        qss: QssSummary::from(&r.report),
        state: state_summary(&liouv, &r.last_pre)?,
        warnings,
        files: vec![rho_path, json_path.clone()],
    };
    write_json(&json_path, &summary)?;
    Ok(summary)
}
