//! Independent reference propagator for tests: the master-equation generator
//! assembled from Kronecker products acting on `vec(rho)`, exponentiated by
//! scaling and squaring.
//!
//! Nothing here shares code with the integrator path; operators are built
//! from explicit 2x2 factors and the frequency/rate formulas are re-derived.

use nalgebra::DVector;

use crate::spin_chain::ChainConfig;
use crate::{Matrix, C64};

fn c(x: f64) -> C64 {
    C64::new(x, 0.0)
}

fn single(entries: [[f64; 2]; 2]) -> Matrix {
    Matrix::from_fn(2, 2, |r, col| c(entries[r][col]))
}

fn embed(local: &Matrix, slot: usize, n: usize) -> Matrix {
    let mut out = Matrix::identity(1, 1);
    for k in 0..n {
        out = if k == slot {
            out.kronecker(local)
        } else {
            out.kronecker(&Matrix::identity(2, 2))
        };
    }
    out
}

/// Dense generator `L` with `d vec(rho)/d tau = L vec(rho)` (column-major vec).
pub fn vectorized_generator(config: &ChainConfig) -> Matrix {
    let n = config.n_qubits();
    let dim = 1usize << n;
    let id = Matrix::identity(dim, dim);
    let sz = single([[1.0, 0.0], [0.0, -1.0]]);
    let raise = single([[0.0, 0.0], [1.0, 0.0]]);
    let lower = single([[0.0, 1.0], [0.0, 0.0]]);
    let z: Vec<Matrix> = (0..n).map(|j| embed(&sz, j, n)).collect();

    let mut h = Matrix::zeros(dim, dim);
    for j in 0..n {
        h -= &z[j] * c(0.5 * config.delta()[j]);
        for l in j + 1..n {
            h -= &z[j] * &z[l] * c(0.25 * config.coupling()[j][l]);
        }
    }
    let i = C64::new(0.0, 1.0);
    let mut gen = (id.kronecker(&h) - h.transpose().kronecker(&id)) * (-i);

    let d = config.temperature();
    for l in 0..n {
        let mut omega = id.clone() * c(config.delta()[l]);
        for m in (0..n).filter(|&m| m != l) {
            omega += &z[m] * c(config.coupling()[l][m] / 2.0);
        }
        let occupation = |w: f64| {
            if d == 0.0 {
                0.0
            } else {
                1.0 / ((w / d).exp() - 1.0)
            }
        };
        let emit = Matrix::from_fn(dim, dim, |r, col| {
            if r == col {
                let w = omega[(r, r)].re;
                c(w.powi(3) * (occupation(w) + 1.0))
            } else {
                c(0.0)
            }
        });
        let absorb = Matrix::from_fn(dim, dim, |r, col| {
            if r == col {
                let w = omega[(r, r)].re;
                c(w.powi(3) * occupation(w))
            } else {
                c(0.0)
            }
        });
        let sp = embed(&raise, l, n);
        let sm = embed(&lower, l, n);
        // [A x, y rho] + [rho x, y A] with (A, x, y) = (emit, s+, s-) and (absorb, s-, s+)
        for (a, x, y) in [(&emit, &sp, &sm), (&absorb, &sm, &sp)] {
            let axy = a * x * y;
            let xya = x * y * a;
            let term = id.kronecker(&axy) - (a * x).transpose().kronecker(y)
                + xya.transpose().kronecker(&id)
                - x.transpose().kronecker(&(y * a));
            gen -= term * c(config.betas()[l]);
        }
    }
    gen
}

/// `exp(a)` by scaling and squaring with a degree-24 Taylor polynomial.
pub fn expm(a: &Matrix) -> Matrix {
    let n = a.nrows();
    let norm1 = (0..n)
        .map(|col| a.column(col).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max);
    let mut squarings = 0;
    let mut scale = 1.0;
    while norm1 * scale > 0.25 {
        scale *= 0.5;
        squarings += 1;
    }
    let x = a * c(scale);
    let mut result = Matrix::identity(n, n);
    let mut term = Matrix::identity(n, n);
    for k in 1..=24 {
        term = &term * &x * c(1.0 / k as f64);
        result += &term;
    }
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}

/// `rho(tau)` from `exp(L tau) vec(rho0)`.
pub fn propagate_exact(config: &ChainConfig, rho0: &Matrix, tau: f64) -> Matrix {
    let dim = rho0.nrows();
    let prop = expm(&(vectorized_generator(config) * c(tau)));
    let v = prop * DVector::from_column_slice(rho0.as_slice());
    Matrix::from_column_slice(dim, dim, v.as_slice())
}
