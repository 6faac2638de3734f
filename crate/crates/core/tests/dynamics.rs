//! Whole-trajectory behaviour of the kicked chain.

use std::f64::consts::PI;

use qkick_core::evolution::{
    propagate, DensityMatrix, KickSchedule, KickSpec, Liouvillian, Stepper,
};
use qkick_core::observables::populations;
use qkick_core::oracle::propagate_exact;
use qkick_core::quasi_steady::{run_to_qss, QssConfig};
use qkick_core::spin_chain::{Axis, ChainConfig};
use qkick_core::{apply_kick, kick_unitary, max_norm};

fn canonical(d: f64) -> (ChainConfig, Liouvillian) {
    let c = ChainConfig::canonical(d);
    let l = Liouvillian::new(&c).unwrap();
    (c, l)
}

#[test]
fn kicked_trajectory_matches_exact_segments() {
    let (c, l) = canonical(1.0);
    let spec: KickSpec = "C:x:pi/2".parse().unwrap();
    let tau = PI / 2.0;
    let rho0 = DensityMatrix::basis_state(8, 3).unwrap();
    let traj = propagate(
        &rho0,
        &KickSchedule::new(tau, spec.clone(), 12).unwrap(),
        &l,
        &Stepper::for_period(tau),
    )
    .unwrap();

    let u = kick_unitary(&spec, 3).unwrap();
    let mut rho = rho0;
    for _ in 0..12 {
        let pre = DensityMatrix::from_matrix_unchecked(propagate_exact(&c, rho.matrix(), tau));
        rho = apply_kick(&pre, &u).unwrap();
    }
    assert!(max_norm(&(traj.final_state.matrix() - rho.matrix())) < 1e-8);
}

#[test]
fn kicked_c_at_zero_temperature_keeps_ground_and_c_excitation() {
    let (_, l) = canonical(0.0);
    let spec = KickSpec::single(2, Axis::X, PI / 2.0);
    let tau = PI / 2.0;
    let run = run_to_qss(
        &DensityMatrix::basis_state(8, 3).unwrap(),
        tau,
        &spec,
        &l,
        &Stepper::for_period(tau),
        &QssConfig::default(),
    )
    .unwrap();
    assert!(run.report.converged);
    let p = populations(&run.last_pre);
    // only qubit C is driven, so |000> and |001> carry the weight
    assert!(p[0] + p[1] > 0.99, "{p:?}");
    assert!(run.last_pre.matrix()[(0, 1)].norm() > 0.05);
}

#[test]
fn qss_balances_kick_work_against_dissipation() {
    for d in [0.0, 1.0] {
        let (_, l) = canonical(d);
        let spec = KickSpec::single(0, Axis::X, PI / 2.0);
        let cfg = QssConfig::default();
        let run = run_to_qss(
            &DensityMatrix::maximally_mixed(3),
            PI,
            &spec,
            &l,
            &Stepper::for_period(PI),
            &cfg,
        )
        .unwrap();
        let recs = &run.records[run.records.len() - cfg.window..];
        for w in recs.windows(2) {
            let work = w[0].energy_post - w[0].energy_pre;
            let loss = w[0].energy_post - w[1].energy_pre;
            assert!(
                (work - loss).abs() < 5.0 * cfg.tol,
                "D={d}: {work} vs {loss}"
            );
        }
        assert!(run.report.dq_per_tau > 0.0);
    }
}

#[test]
fn exact_propagation_also_leaves_the_positive_cone() {
    // the generator is not completely positive; the violation is physics of
    // the model rather than an integrator artifact
    let (c, _) = canonical(0.0);
    let u = kick_unitary(&KickSpec::single(2, Axis::X, PI / 2.0), 3).unwrap();
    let tau = PI;
    let mut rho = DensityMatrix::basis_state(8, 3).unwrap();
    let mut worst = f64::INFINITY;
    for _ in 0..300 {
        let pre = DensityMatrix::from_matrix_unchecked(propagate_exact(&c, rho.matrix(), tau));
        worst = worst.min(pre.min_eigenvalue());
        rho = apply_kick(&pre, &u).unwrap();
    }
    assert!(worst < -1e-4, "min eigenvalue {worst}");
}
