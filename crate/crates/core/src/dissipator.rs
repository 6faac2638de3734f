//! Temperature-dependent emission/absorption rate operators and the
//! dissipative superoperator of the chain master equation.
//!
//! For every qubit `l` the superoperator is
//!
//! ```text
//! D[rho] = -sum_l beta_l ( [O1_l s+_l, s-_l rho] + [rho s+_l, s-_l O1_l]
//!                        + [O2_l s-_l, s+_l rho] + [rho s-_l, s+_l O2_l] )
//! ```
//!
//! with `O1 = W^3 (n(W, D) + 1)` (emission), `O2 = W^3 n(W, D)` (absorption)
//! and `W` the qubit's frequency operator. The generator is not of Lindblad
//! form; positivity is monitored by the integrator, not enforced.

use crate::spin_chain::{bit, frequency_diagonal, sigma_minus, sigma_plus, ChainConfig};
use crate::{Error, Matrix, Result, C64};

/// Exponent beyond which `e^x` is treated as infinite.
const OVERFLOW_EXPONENT: f64 = 700.0;

/// Planck occupation `1 / (e^(omega/d) - 1)`; exactly zero at `d = 0`.
pub fn thermal_occupation(omega: f64, d: f64) -> Result<f64> {
    if !(omega > 0.0) || !omega.is_finite() {
        return Err(Error::Domain(format!(
            "transition frequency must be positive, got {omega}"
        )));
    }
    if !(d >= 0.0) {
        return Err(Error::Domain(format!("temperature must be >= 0, got {d}")));
    }
    if d == 0.0 {
        return Ok(0.0);
    }
    let x = omega / d;
    if x > OVERFLOW_EXPONENT {
        Ok(0.0)
    } else {
        Ok(1.0 / x.exp_m1())
    }
}

/// Diagonals of the emission (`o1`) and absorption (`o2`) operators of one qubit.
#[derive(Debug, Clone, PartialEq)]
pub struct RateOperators {
    pub o1: Vec<f64>,
    pub o2: Vec<f64>,
}

impl RateOperators {
    pub fn o1_matrix(&self) -> Matrix {
        crate::spin_chain::diagonal_matrix(&self.o1)
    }

    pub fn o2_matrix(&self) -> Matrix {
        crate::spin_chain::diagonal_matrix(&self.o2)
    }
}

/// Rate operators of qubit `l`, evaluated eigenvalue-wise on the frequency operator.
pub fn rate_operators(config: &ChainConfig, l: usize) -> Result<RateOperators> {
    let omega = frequency_diagonal(config, l)?;
    let d = config.temperature();
    let mut o1 = Vec::with_capacity(omega.len());
    let mut o2 = Vec::with_capacity(omega.len());
    for w in omega {
        let n = thermal_occupation(w, d)?;
        let cube = w * w * w;
        o1.push(cube * (n + 1.0));
        o2.push(cube * n);
    }
    Ok(RateOperators { o1, o2 })
}

#[derive(Debug, Clone)]
struct QubitChannel {
    beta: f64,
    rates: RateOperators,
    mask: usize,
}

/// Precomputed dissipator for a fixed chain configuration.
#[derive(Debug, Clone)]
pub struct Dissipator {
    n_qubits: usize,
    dim: usize,
    channels: Vec<QubitChannel>,
    // sum over qubits of the diagonal loss rate felt by each basis state
    loss: Vec<f64>,
}

impl Dissipator {
    pub fn new(config: &ChainConfig) -> Result<Self> {
        let n = config.n_qubits();
        let dim = config.dim();
        let mut channels = Vec::with_capacity(n);
        let mut loss = vec![0.0; dim];
        for l in 0..n {
            let rates = rate_operators(config, l)?;
            let beta = config.betas()[l];
            for (a, slot) in loss.iter_mut().enumerate() {
                *slot += beta
                    * if bit(a, l, n) == 1 {
                        rates.o1[a]
                    } else {
                        rates.o2[a]
                    };
            }
            channels.push(QubitChannel {
                beta,
                rates,
                mask: 1 << (n - 1 - l),
            });
        }
        Ok(Dissipator {
            n_qubits: n,
            dim,
            channels,
            loss,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rates(&self, l: usize) -> &RateOperators {
        &self.channels[l].rates
    }

    /// Evaluates the commutator form term by term with dense matrix products.
    pub fn apply_literal(&self, rho: &Matrix) -> Result<Matrix> {
        check_shape(rho, self.dim)?;
        let n = self.n_qubits;
        let mut out = Matrix::zeros(self.dim, self.dim);
        for (l, ch) in self.channels.iter().enumerate() {
            let sp = sigma_plus(l, n)?;
            let sm = sigma_minus(l, n)?;
            let o1 = ch.rates.o1_matrix();
            let o2 = ch.rates.o2_matrix();
            let term = commutator(&(&o1 * &sp), &(&sm * rho))
                + commutator(&(rho * &sp), &(&sm * &o1))
                + commutator(&(&o2 * &sm), &(&sp * rho))
                + commutator(&(rho * &sm), &(&sp * &o2));
            out -= term * C64::new(ch.beta, 0.0);
        }
        Ok(out)
    }

    /// Adds `D[rho]` into `out` using the index structure of the ladder
    /// operators (no matrix products). Equivalent to [`Self::apply_literal`].
    pub fn accumulate(&self, rho: &Matrix, out: &mut Matrix) {
        let dim = self.dim;
        for b in 0..dim {
            for a in 0..dim {
                out[(a, b)] -= rho[(a, b)] * (self.loss[a] + self.loss[b]);
            }
        }
        for ch in &self.channels {
            let m = ch.mask;
            for b in 0..dim {
                let b_set = b & m != 0;
                for a in 0..dim {
                    let a_set = a & m != 0;
                    if !a_set && !b_set {
                        // decay into (a, b) from the pair with bit l raised
                        let (ua, ub) = (a | m, b | m);
                        out[(a, b)] +=
                            rho[(ua, ub)] * (ch.beta * (ch.rates.o1[ua] + ch.rates.o1[ub]));
                    } else if a_set && b_set {
                        let (da, db) = (a & !m, b & !m);
                        out[(a, b)] +=
                            rho[(da, db)] * (ch.beta * (ch.rates.o2[da] + ch.rates.o2[db]));
                    }
                }
            }
        }
    }

    /// `D[rho]` via the index-structured kernel.
    pub fn apply(&self, rho: &Matrix) -> Result<Matrix> {
        check_shape(rho, self.dim)?;
        let mut out = Matrix::zeros(self.dim, self.dim);
        self.accumulate(rho, &mut out);
        Ok(out)
    }
}

/// Dissipative contribution `D[rho]` for `config`, evaluated literally.
pub fn apply_dissipator(rho: &Matrix, config: &ChainConfig) -> Result<Matrix> {
    Dissipator::new(config)?.apply_literal(rho)
}

fn commutator(a: &Matrix, b: &Matrix) -> Matrix {
    a * b - b * a
}

pub(crate) fn check_shape(m: &Matrix, dim: usize) -> Result<()> {
    if m.nrows() != dim || m.ncols() != dim {
        return Err(Error::Shape {
            expected: dim,
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    Ok(())
}
