//! Bundled experiment presets reproducing the data behind each figure.
//!
//! Every preset is an ordinary config document run through the same
//! validation path as user files, so each output carries a config echo and
//! hash. `figN_report.json` collects the cross-run analysis (fits, extrema).

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use qkick_core::observables::gibbs_populations;
use qkick_core::spin_chain::hamiltonian_diagonal;
use qkick_core::ChainConfig;
use serde::Serialize;
use serde_json::{json, Value};

use crate::analysis::{argmax, argmin, coinciding_extrema, local_maxima, local_minima};
use crate::config::{validate_config, ExperimentConfig};
use crate::error::{HarnessError, Result};
use crate::output::{out_path, write_json};
use crate::run::{run_qss_state, run_single, QssSummary};
use crate::sweep::{run_sweep, GridKind, SweepRow};

pub const FIGURES: &[u32] = &[1, 2, 3, 4, 5, 6, 7, 8, 9];

/// Default kick period of the matrix figure with simultaneous kicks.
pub const FIG7_DEFAULT_TAU_K: f64 = 4.0 * PI;

/// Periods scanned for the purity figure: q = 0.2, 0.4, ..., 20.
pub const FIG6_Q_GRID: &str = "0.2:20:100";
/// Periods scanned for the entanglement figures: q = 0.5, 1.0, ..., 20.
pub const ENTANGLEMENT_Q_GRID: &str = "0.5:20:40";

#[derive(Debug, Clone)]
pub enum Job {
    Evolve(ExperimentConfig),
    QssState(ExperimentConfig),
    Sweep(ExperimentConfig, GridKind),
}

impl Job {
    pub fn config(&self) -> &ExperimentConfig {
        match self {
            Job::Evolve(c) | Job::QssState(c) | Job::Sweep(c, _) => c,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FigurePreset {
    pub number: u32,
    pub title: &'static str,
    pub jobs: Vec<Job>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FigureReport {
    pub figure: u32,
    pub title: String,
    pub files: Vec<PathBuf>,
    pub analysis: Value,
    pub warnings: Vec<String>,
}

fn doc(name: &str, out: &Path, temperature: f64, body: &str) -> Result<ExperimentConfig> {
    let text = format!(
        "schema_version = 1\nname = \"{name}\"\nout_dir = {}\ntemperature = {temperature:?}\n{body}",
        toml::Value::String(out.display().to_string())
    );
    validate_config(&text)
}

const NEAR_DEGENERATE: &str = "delta = [1.0, 0.26, 0.25]\ncoupling = [[0.0, 0.011, 0.1], [0.011, 0.0, 0.15], [0.1, 0.15, 0.0]]\n";

fn d_tag(d: f64) -> &'static str {
    if d == 0.0 {
        "D0"
    } else {
        "D1"
    }
}

/// Single-qubit kick styles: `x pi/2`, and `x pi` followed by `y pi/2`.
fn styles(q: char) -> [String; 2] {
    [format!("{q}:x:pi/2"), format!("{q}:x:pi,{q}:y:pi/2")]
}

fn toml_list(items: &[String]) -> String {
    let quoted: Vec<String> = items.iter().map(|s| format!("\"{s}\"")).collect();
    format!("[{}]", quoted.join(", "))
}

/// Builds the job list of figure `n`. `tau_k` only applies to figure 7.
pub fn preset(n: u32, tau_k: Option<f64>, out: &Path) -> Result<FigurePreset> {
    if tau_k.is_some() && n != 7 {
        return Err(HarnessError::config(
            "--tau-k",
            format!("only figure 7 takes a kick period, not figure {n}"),
        ));
    }
    let mut jobs = Vec::new();
    let title = match n {
        1 => {
            for d in [0.0, 1.0] {
                let t = d_tag(d);
                jobs.push(Job::Evolve(doc(
                    &format!("fig1_{t}_free"),
                    out,
                    d,
                    "duration = 500.0\nsample_every = 100\n",
                )?));
                jobs.push(Job::Evolve(doc(
                    &format!("fig1_{t}_kick_C"),
                    out,
                    d,
                    "kick = \"C:x:pi/2\"\ntau_k = \"pi/2\"\nn_kicks = 320\nsample_every = 20\n",
                )?));
            }
            "Populations with and without kicks on C"
        }
        2 => {
            for d in [0.0, 1.0] {
                for q in ['C', 'B', 'A'] {
                    let body = format!("kick = \"{q}:x:pi/2\"\ntau_k = \"pi/2\"\n");
                    jobs.push(Job::QssState(doc(
                        &format!("fig2_{}_kick_{q}", d_tag(d)),
                        out,
                        d,
                        &body,
                    )?));
                }
            }
            "Quasi-stationary density matrices, single-qubit kicks"
        }
        3 => {
            for d in [0.0, 1.0] {
                let t = d_tag(d);
                jobs.push(Job::Evolve(doc(
                    &format!("fig3_{t}_free"),
                    out,
                    d,
                    "duration = 400.0\nsample_every = 50\n",
                )?));
                for q in ['A', 'B', 'C'] {
                    let body = format!(
                        "kick = \"{q}:x:pi/2\"\ntau_k = \"pi\"\nn_kicks = 128\nsample_every = 50\n"
                    );
                    jobs.push(Job::Evolve(doc(
                        &format!("fig3_{t}_kick_{q}"),
                        out,
                        d,
                        &body,
                    )?));
                }
            }
            "Energy relaxation to the quasi-stationary regime"
        }
        4 => {
            for d in [0.0, 1.0] {
                let body = "kick = \"A:x:kappa\"\nkappa_grid = \"0:2pi:33\"\nq_grid = [2.0, 4.0, 8.0, 16.0]\n";
                jobs.push(Job::Sweep(
                    doc(&format!("fig4_{}", d_tag(d)), out, d, body)?,
                    GridKind::Both,
                ));
            }
            "Average energy against dissipated power, kicks on A"
        }
        5 => {
            let body = "kicks = [\"B:x:kappa\", \"C:x:kappa\"]\nkappa_grid = \"0:2pi:33\"\nq_grid = [2.0, 4.0, 8.0, 16.0]\n";
            jobs.push(Job::Sweep(doc("fig5_D1", out, 1.0, body)?, GridKind::Both));
            "Average energy against dissipated power, kicks on B and C"
        }
        6 => {
            let kicks: Vec<String> = ['A', 'B', 'C'].into_iter().flat_map(styles).collect();
            for d in [0.0, 1.0] {
                let body = format!(
                    "kicks = {}\nq_grid = \"{FIG6_Q_GRID}\"\n",
                    toml_list(&kicks)
                );
                jobs.push(Job::Sweep(
                    doc(&format!("fig6_{}", d_tag(d)), out, d, &body)?,
                    GridKind::TauK,
                ));
            }
            "Quasi-stationary purity and energy against kick period"
        }
        7 => {
            let tau = tau_k.unwrap_or(FIG7_DEFAULT_TAU_K);
            if !(tau > 0.0 && tau.is_finite()) {
                return Err(HarnessError::config(
                    "--tau-k",
                    format!("kick period must be positive, got {tau}"),
                ));
            }
            for d in [0.0, 1.0] {
                for (a, b) in [('A', 'B'), ('A', 'C'), ('B', 'C')] {
                    let body = format!("kick = \"{a}:x:pi/2,{b}:x:pi/2\"\ntau_k = {tau:?}\n");
                    jobs.push(Job::QssState(doc(
                        &format!("fig7_{}_kick_{a}{b}", d_tag(d)),
                        out,
                        d,
                        &body,
                    )?));
                }
            }
            "Quasi-stationary density matrices, simultaneous kicks"
        }
        8 => {
            let mut kicks = Vec::new();
            for (a, b) in [('A', 'B'), ('A', 'C'), ('B', 'C')] {
                kicks.push(format!("{a}:x:pi/2,{b}:x:pi/2"));
                kicks.push(format!("{a}:x:pi,{a}:y:pi/2,{b}:x:pi/2"));
            }
            for d in [0.0, 1.0] {
                let body = format!(
                    "kicks = {}\nq_grid = \"{ENTANGLEMENT_Q_GRID}\"\n",
                    toml_list(&kicks)
                );
                jobs.push(Job::Sweep(
                    doc(&format!("fig8_{}", d_tag(d)), out, d, &body)?,
                    GridKind::TauK,
                ));
            }
            "Stationary entanglement from simultaneous kicks"
        }
        9 => {
            let kicks = vec![
                "B:x:pi/2,C:x:pi/2".to_string(),
                "B:x:pi,B:y:pi/2,C:x:pi/2".to_string(),
            ];
            let body = format!(
                "{NEAR_DEGENERATE}kicks = {}\nq_grid = \"{ENTANGLEMENT_Q_GRID}\"\n",
                toml_list(&kicks)
            );
            jobs.push(Job::Sweep(doc("fig9_D0", out, 0.0, &body)?, GridKind::TauK));
            "Entanglement and Fourier coefficient, near-degenerate B and C"
        }
        other => {
            return Err(HarnessError::config(
                "figure",
                format!("no preset for figure {other}; available: {FIGURES:?}"),
            ))
        }
    };
    Ok(FigurePreset {
        number: n,
        title,
        jobs,
    })
}

/// Splits sweep rows into contiguous blocks sharing one kick spec.
fn by_kick(rows: &[SweepRow]) -> Vec<(String, Vec<&SweepRow>)> {
    let mut out: Vec<(String, Vec<&SweepRow>)> = Vec::new();
    for r in rows {
        match out.last_mut() {
            Some((k, v)) if k == r.point.kick.as_str() => v.push(r),
            _ => out.push((r.point.kick.as_str().to_string(), vec![r])),
        }
    }
    out
}

fn field(rows: &[&SweepRow], f: impl Fn(&QssSummary) -> f64) -> Vec<f64> {
    rows.iter()
        .map(|r| r.outcome.as_ref().map(&f).unwrap_or(f64::NAN))
        .collect()
}

/// Purity minima that sit within one grid step of an energy maximum.
pub fn purity_resonances(rows: &[&SweepRow]) -> Value {
    let purity = field(rows, |s| s.purity_qst);
    let energy = field(rows, |s| s.e_qst);
    let minima = local_minima(&purity);
    let maxima = local_maxima(&energy);
    let tau = |i: usize| rows[i].point.tau_k;
    json!({
        "purity_minima_tau_k": minima.iter().map(|&i| tau(i)).collect::<Vec<_>>(),
        "energy_maxima_tau_k": maxima.iter().map(|&i| tau(i)).collect::<Vec<_>>(),
        "coinciding_tau_k": coinciding_extrema(&minima, &maxima, 1).iter().map(|&(i, _)| tau(i)).collect::<Vec<_>>(),
    })
}

/// Largest per-qubit log-negativity on the grid, and where F is smallest.
pub fn entanglement_vs_fourier(rows: &[&SweepRow]) -> Value {
    let ln = field(rows, |s| s.log_neg_qst.iter().cloned().fold(0.0, f64::max));
    let f = field(rows, |s| s.fourier_coeff.unwrap_or(f64::NAN));
    let at =
        |i: Option<usize>| i.map(|i| json!({"q": rows[i].point.q, "tau_k": rows[i].point.tau_k}));
    let max = ln
        .iter()
        .cloned()
        .filter(|x| !x.is_nan())
        .fold(0.0, f64::max);
    // An all-zero curve has no meaningful maximiser.
    let peak = if max > 0.0 { argmax(&ln) } else { None };
    json!({
        "max_log_negativity": max,
        "argmax_log_negativity": at(peak),
        "argmin_fourier_coeff": at(argmin(&f)),
        "grid_steps_apart": match (peak, argmin(&f)) {
            (Some(a), Some(b)) => Some(a.abs_diff(b)),
            _ => None,
        },
    })
}

fn gibbs_purity(chain: &ChainConfig) -> Result<f64> {
    if chain.temperature() == 0.0 {
        return Ok(1.0);
    }
    let p = gibbs_populations(&hamiltonian_diagonal(chain), chain.temperature())?;
    Ok(p.iter().map(|x| x * x).sum())
}

/// Runs every job of figure `n`, then writes `figN_report.json`.
pub fn run_figure(n: u32, tau_k: Option<f64>, out: &Path) -> Result<FigureReport> {
    let preset = preset(n, tau_k, out)?;
    let mut files = Vec::new();
    let mut warnings = Vec::new();
    let mut analysis = serde_json::Map::new();
    for job in &preset.jobs {
        let cfg = job.config();
        match job {
            Job::Evolve(c) => {
                let s = run_single(c)?;
                warnings.extend(s.warnings.iter().map(|w| format!("{}: {w}", c.name)));
                if let Some(q) = &s.qss {
                    analysis.insert(
                        c.name.clone(),
                        json!({"e_qst": q.e_qst, "purity_qst": q.purity_qst}),
                    );
                }
                files.extend(s.files);
            }
            Job::QssState(c) => {
                let s = run_qss_state(c)?;
                warnings.extend(s.warnings.iter().map(|w| format!("{}: {w}", c.name)));
                analysis.insert(
                    c.name.clone(),
                    json!({"log_neg_qst": s.qss.log_neg_qst, "purity_qst": s.qss.purity_qst}),
                );
                files.extend(s.files);
            }
            Job::Sweep(c, grid) => {
                let (s, rows) = run_sweep(c, *grid)?;
                warnings.extend(s.warnings.iter().map(|w| format!("{}: {w}", c.name)));
                files.push(out_path(&cfg.out_dir, &cfg.name, "sweep.csv"));
                files.push(out_path(&cfg.out_dir, &cfg.name, "sweep.json"));
                let entry = match n {
                    4 | 5 => json!({ "fits": s.fits }),
                    6 => {
                        let mut per_kick = serde_json::Map::new();
                        for (kick, block) in by_kick(&rows) {
                            per_kick.insert(kick, purity_resonances(&block));
                        }
                        json!({ "bath_only_purity": gibbs_purity(&c.chain)?, "kicks": per_kick })
                    }
                    8 | 9 => {
                        let mut per_kick = serde_json::Map::new();
                        for (kick, block) in by_kick(&rows) {
                            per_kick.insert(kick, entanglement_vs_fourier(&block));
                        }
                        Value::Object(per_kick)
                    }
                    _ => Value::Null,
                };
                analysis.insert(c.name.clone(), entry);
            }
        }
    }
    let report = FigureReport {
        figure: n,
        title: preset.title.to_string(),
        files,
        analysis: Value::Object(analysis),
        warnings,
    };
    write_json(&out.join(format!("fig{n}_report.json")), &report)?;
    Ok(report)
}
