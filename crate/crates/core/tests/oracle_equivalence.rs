//! The fixed-step integrator against the matrix-exponential reference.

use qkick_core::evolution::{integrate, DensityMatrix, Liouvillian, PeriodMap, Stepper};
use qkick_core::oracle::{propagate_exact, vectorized_generator};
use qkick_core::spin_chain::ChainConfig;
use qkick_core::{max_norm, Matrix, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_config(rng: &mut ChaCha8Rng, temperature: f64) -> ChainConfig {
    let delta = vec![1.0, rng.random_range(0.3..1.0), rng.random_range(0.3..1.0)];
    let mut coupling = vec![vec![0.0; 3]; 3];
    for j in 0..3 {
        for l in j + 1..3 {
            let x = rng.random_range(0.0..0.2);
            coupling[j][l] = x;
            coupling[l][j] = x;
        }
    }
    ChainConfig::new(delta, coupling, 0.1, temperature).unwrap()
}

fn random_state(rng: &mut ChaCha8Rng, dim: usize) -> DensityMatrix {
    let a = Matrix::from_fn(dim, dim, |_, _| {
        C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    });
    let m = &a * a.adjoint();
    let tr = m.trace();
    DensityMatrix::new(m / tr).unwrap()
}

#[test]
fn superoperator_matches_kronecker_generator() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for temperature in [0.0, 1.0] {
        let c = random_config(&mut rng, temperature);
        let l = Liouvillian::new(&c).unwrap();
        assert!(max_norm(&(l.superoperator() - vectorized_generator(&c))) < 1e-13);
    }
}

#[test]
fn integrator_matches_exponential() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for k in 0..6 {
        let c = random_config(&mut rng, if k % 2 == 0 { 0.0 } else { 1.0 });
        let rho0 = random_state(&mut rng, 8);
        let l = Liouvillian::new(&c).unwrap();
        let rk = integrate(&rho0, 10.0, &l, &Stepper::default()).unwrap();
        let exact = propagate_exact(&c, rho0.matrix(), 10.0);
        let err = max_norm(&(rk.matrix() - &exact));
        assert!(err < 1e-6, "config {k}: {err:e}");
    }
}

#[test]
fn period_map_matches_exponential() {
    let c = ChainConfig::canonical(1.0);
    let l = Liouvillian::new(&c).unwrap();
    let rho0 = DensityMatrix::basis_state(8, 3).unwrap();
    let tau = std::f64::consts::PI;
    let map = PeriodMap::new(&l, tau, &Stepper::for_period(tau));
    let err = max_norm(&(map.apply(&rho0).matrix() - propagate_exact(&c, rho0.matrix(), tau)));
    assert!(err < 1e-9, "{err:e}");
}
