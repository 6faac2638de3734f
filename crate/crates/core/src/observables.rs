//! Scalar diagnostics of chain states.

use nalgebra::SymmetricEigen;

use crate::dissipator::check_shape;
use crate::evolution::DensityMatrix;
use crate::spin_chain::bit;
use crate::{Error, Matrix, Result, C64};

/// Eigenvalues of the partial transpose below this magnitude count as zero.
const EIGEN_CLAMP: f64 = 1e-12;

/// `Tr(H rho)`.
pub fn energy(rho: &DensityMatrix, h: &Matrix) -> Result<f64> {
    check_shape(h, rho.dim())?;
    let tr = (h * rho.matrix()).trace();
    if tr.im.abs() > 1e-10 {
        return Err(Error::InvalidInput(format!(
            "energy has imaginary part {:e}",
            tr.im
        )));
    }
    Ok(tr.re)
}

/// `Tr(rho^2)`.
pub fn purity(rho: &DensityMatrix) -> f64 {
    rho.matrix().iter().map(|z| z.norm_sqr()).sum()
}

/// Diagonal of `rho` in the computational basis.
pub fn populations(rho: &DensityMatrix) -> Vec<f64> {
    rho.matrix().diagonal().iter().map(|z| z.re).collect()
}

/// Boltzmann weights `exp(-E_k / d) / Z` of a diagonal Hamiltonian.
pub fn gibbs_populations(h_diag: &[f64], d: f64) -> Result<Vec<f64>> {
    if !(d > 0.0) {
        return Err(Error::Domain(format!(
            "Gibbs state needs temperature > 0, got {d}"
        )));
    }
    let e0 = h_diag.iter().cloned().fold(f64::INFINITY, f64::min);
    let w: Vec<f64> = h_diag.iter().map(|e| (-(e - e0) / d).exp()).collect();
    let z: f64 = w.iter().sum();
    Ok(w.into_iter().map(|x| x / z).collect())
}

/// `exp(-H/d) / Tr exp(-H/d)` for a Hamiltonian diagonal in the computational basis.
pub fn gibbs_state(h: &Matrix, d: f64) -> Result<DensityMatrix> {
    let dim = h.nrows();
    check_shape(h, dim)?;
    let offdiag = (0..dim)
        .flat_map(|a| (0..dim).map(move |b| (a, b)))
        .filter(|(a, b)| a != b);
    if offdiag.map(|(a, b)| h[(a, b)].norm()).fold(0.0, f64::max) > 0.0 {
        return Err(Error::InvalidInput(
            "Gibbs state requires a Hamiltonian diagonal in the computational basis".into(),
        ));
    }
    let diag: Vec<f64> = h.diagonal().iter().map(|z| z.re).collect();
    let p = gibbs_populations(&diag, d)?;
    Ok(DensityMatrix::from_matrix_unchecked(
        crate::spin_chain::diagonal_matrix(&p),
    ))
}

/// Transpose on the indices of qubit `j` only.
pub fn partial_transpose(rho: &DensityMatrix, j: usize) -> Result<Matrix> {
    let n = rho.n_qubits();
    if j >= n {
        return Err(Error::QubitIndex {
            index: j,
            n_qubits: n,
        });
    }
    let mask = 1usize << (n - 1 - j);
    let m = rho.matrix();
    Ok(Matrix::from_fn(rho.dim(), rho.dim(), |a, b| {
        if bit(a, j, n) == bit(b, j, n) {
            m[(a, b)]
        } else {
            m[(a ^ mask, b ^ mask)]
        }
    }))
}

/// Entries smaller than this fraction of the largest one are zeroed before
/// diagonalising: the QR sweeps square intermediate norms, and values near
/// 1e-160 underflow into inf/NaN eigenvalues otherwise.
const FLUSH_RELATIVE: f64 = 1e-60;

/// Eigenvalues of a Hermitian matrix (Hermitian part taken first).
pub fn hermitian_eigenvalues(m: &Matrix) -> Vec<f64> {
    let mut herm = (m + m.adjoint()) * C64::new(0.5, 0.0);
    let floor = crate::max_norm(&herm) * FLUSH_RELATIVE;
    herm.iter_mut()
        .filter(|z| z.norm() < floor)
        .for_each(|z| *z = C64::new(0.0, 0.0));
    SymmetricEigen::new(herm)
        .eigenvalues
        .iter()
        .cloned()
        .collect()
}

/// `sum_i (|l_i| - l_i) / 2` over the spectrum of the partial transpose on qubit `j`.
pub fn negativity(rho: &DensityMatrix, j: usize) -> Result<f64> {
    let pt = partial_transpose(rho, j)?;
    Ok(hermitian_eigenvalues(&pt)
        .into_iter()
        .map(|l| if l.abs() < EIGEN_CLAMP { 0.0 } else { l })
        .map(|l| (l.abs() - l) / 2.0)
        .sum())
}

/// `log2(2 N_j + 1)`.
pub fn log_negativity(rho: &DensityMatrix, j: usize) -> Result<f64> {
    negativity(rho, j).map(log_negativity_from)
}

pub fn log_negativity_from(negativity: f64) -> f64 {
    (2.0 * negativity + 1.0).log2()
}

/// Full set of observables for one state.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservableRecord {
    pub tau: f64,
    pub energy: f64,
    pub purity: f64,
    pub populations: Vec<f64>,
    pub log_negativity: Vec<f64>,
}

impl ObservableRecord {
    pub fn measure(tau: f64, rho: &DensityMatrix, h: &Matrix) -> Result<Self> {
        let n = rho.n_qubits();
        Ok(ObservableRecord {
            tau,
            energy: energy(rho, h)?,
            purity: purity(rho),
            populations: populations(rho),
            log_negativity: (0..n)
                .map(|j| log_negativity(rho, j))
                .collect::<Result<_>>()?,
        })
    }
}
