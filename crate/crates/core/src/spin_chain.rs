//! Computational basis, embedded Pauli and ladder operators, the Ising chain
//! Hamiltonian and the per-qubit transition-frequency operators.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;

use crate::{Error, Matrix, Result, C64};

/// Largest chain supported by the dense representation.
pub const MAX_QUBITS: usize = 12;

/// Rotation / Pauli axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub fn as_char(self) -> char {
        match self {
            Axis::X => 'x',
            Axis::Y => 'y',
            Axis::Z => 'z',
        }
    }

    fn single(self) -> [[C64; 2]; 2] {
        let o = C64::new(0.0, 0.0);
        let one = C64::new(1.0, 0.0);
        let i = C64::new(0.0, 1.0);
        match self {
            Axis::X => [[o, one], [one, o]],
            Axis::Y => [[o, -i], [i, o]],
            Axis::Z => [[one, o], [o, -one]],
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_char())
    }
}

impl FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "x" | "X" => Ok(Axis::X),
            "y" | "Y" => Ok(Axis::Y),
            "z" | "Z" => Ok(Axis::Z),
            other => Err(Error::InvalidInput(format!(
                "unknown axis '{other}' (expected x, y or z)"
            ))),
        }
    }
}

/// Letter name of a qubit: 0 -> 'A', 1 -> 'B', ...
pub fn qubit_name(j: usize) -> String {
    if j < 26 {
        char::from(b'A' + j as u8).to_string()
    } else {
        format!("q{j}")
    }
}

/// Parses a qubit given as a letter (`A`, `b`), a zero-based index, or the
/// `q27` form used for chains longer than the alphabet.
pub fn parse_qubit(s: &str) -> Result<usize> {
    let s = s.trim();
    if let Ok(j) = s.parse::<usize>() {
        return Ok(j);
    }
    if let Some(j) = s.strip_prefix('q').and_then(|d| d.parse::<usize>().ok()) {
        return Ok(j);
    }
    let mut chars = s.chars();
    match (chars.next(), chars.next()) {
        (Some(c), None) if c.is_ascii_alphabetic() => {
            Ok((c.to_ascii_uppercase() as u8 - b'A') as usize)
        }
        _ => Err(Error::InvalidInput(format!("cannot parse qubit '{s}'"))),
    }
}

/// Physical specification of the chain in dimensionless units.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainConfig {
    n_qubits: usize,
    delta: Vec<f64>,
    coupling: Vec<Vec<f64>>,
    beta: Vec<f64>,
    temperature: f64,
}

impl ChainConfig {
    /// Builds and validates a configuration with a full symmetric coupling
    /// matrix and equal bath coupling `beta` on every qubit.
    pub fn new(
        delta: Vec<f64>,
        coupling: Vec<Vec<f64>>,
        beta: f64,
        temperature: f64,
    ) -> Result<Self> {
        let n = delta.len();
        Self::with_qubit_betas(delta, coupling, vec![beta; n], temperature)
    }

    /// Like [`ChainConfig::new`] but with a per-qubit bath coupling.
    pub fn with_qubit_betas(
        delta: Vec<f64>,
        coupling: Vec<Vec<f64>>,
        beta: Vec<f64>,
        temperature: f64,
    ) -> Result<Self> {
        let config = ChainConfig {
            n_qubits: delta.len(),
            delta,
            coupling,
            beta,
            temperature,
        };
        config.validate()?;
        Ok(config)
    }

    /// Linear chain with nearest-neighbour coupling `chi` and
    /// next-nearest-neighbour coupling `chi_prime`.
    pub fn from_chain(
        delta: Vec<f64>,
        chi: f64,
        chi_prime: f64,
        beta: f64,
        temperature: f64,
    ) -> Result<Self> {
        let n = delta.len();
        let mut coupling = vec![vec![0.0; n]; n];
        for j in 0..n {
            if j + 1 < n {
                coupling[j][j + 1] = chi;
                coupling[j + 1][j] = chi;
            }
            if j + 2 < n {
                coupling[j][j + 2] = chi_prime;
                coupling[j + 2][j] = chi_prime;
            }
        }
        Self::new(delta, coupling, beta, temperature)
    }

    /// The three-qubit reference chain: `delta = (1, 0.5, 0.25)`,
    /// `chi = 0.15`, `chi' = 0.1`, `beta = 0.1`.
    pub fn canonical(temperature: f64) -> Self {
        Self::from_chain(vec![1.0, 0.5, 0.25], 0.15, 0.1, 0.1, temperature)
            .expect("canonical chain is valid")
    }

    /// Three-qubit chain with near-degenerate B and C and independent
    /// pairwise couplings (`chi_AB = 0.011`, `chi_AC = 0.1`, `chi_BC = 0.15`).
    pub fn near_degenerate_pair(temperature: f64) -> Self {
        let coupling = vec![
            vec![0.0, 0.011, 0.1],
            vec![0.011, 0.0, 0.15],
            vec![0.1, 0.15, 0.0],
        ];
        Self::new(vec![1.0, 0.26, 0.25], coupling, 0.1, temperature).expect("valid chain")
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    pub fn delta(&self) -> &[f64] {
        &self.delta
    }

    pub fn coupling(&self) -> &[Vec<f64>] {
        &self.coupling
    }

    pub fn betas(&self) -> &[f64] {
        &self.beta
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    /// Copy with a different bath temperature (revalidated).
    pub fn at_temperature(&self, temperature: f64) -> Result<Self> {
        let mut c = self.clone();
        c.temperature = temperature;
        c.validate()?;
        Ok(c)
    }

    /// Copy with equal bath coupling `beta` on all qubits.
    pub fn with_beta(&self, beta: f64) -> Result<Self> {
        let mut c = self.clone();
        c.beta = vec![beta; self.n_qubits];
        c.validate()?;
        Ok(c)
    }

    fn validate(&self) -> Result<()> {
        let n = self.n_qubits;
        if n == 0 || n > MAX_QUBITS {
            return Err(Error::InvalidInput(format!(
                "n_qubits must be in 1..={MAX_QUBITS}, got {n}"
            )));
        }
        for (j, &d) in self.delta.iter().enumerate() {
            if !d.is_finite() || d <= 0.0 || d > 1.0 + 1e-12 {
                return Err(Error::InvalidInput(format!(
                    "delta[{}] = {d} must lie in (0, 1]",
                    qubit_name(j)
                )));
            }
        }
        if !self.delta.iter().any(|&d| (d - 1.0).abs() <= 1e-12) {
            return Err(Error::InvalidInput(
                "no reference qubit: one delta must equal 1 (frequencies are scaled by the largest)".into(),
            ));
        }
        if self.coupling.len() != n || self.coupling.iter().any(|row| row.len() != n) {
            return Err(Error::InvalidInput(format!(
                "coupling must be a {n}x{n} matrix"
            )));
        }
        for j in 0..n {
            if self.coupling[j][j] != 0.0 {
                return Err(Error::InvalidInput(format!(
                    "coupling diagonal entry [{j}][{j}] must be zero"
                )));
            }
            for l in 0..n {
                let c = self.coupling[j][l];
                if !c.is_finite() {
                    return Err(Error::InvalidInput(format!(
                        "coupling[{j}][{l}] is not finite"
                    )));
                }
                if c != self.coupling[l][j] {
                    return Err(Error::InvalidInput(format!(
                        "coupling matrix not symmetric at [{j}][{l}]: {c} vs {}",
                        self.coupling[l][j]
                    )));
                }
            }
        }
        if self.beta.len() != n {
            return Err(Error::InvalidInput(format!(
                "expected {n} bath couplings, got {}",
                self.beta.len()
            )));
        }
        if let Some((j, b)) = self
            .beta
            .iter()
            .enumerate()
            .find(|(_, b)| !b.is_finite() || **b < 0.0)
        {
            return Err(Error::InvalidInput(format!(
                "beta[{}] = {b} must be >= 0",
                qubit_name(j)
            )));
        }
        if !self.temperature.is_finite() || self.temperature < 0.0 {
            return Err(Error::InvalidInput(format!(
                "temperature D = {} must be >= 0",
                self.temperature
            )));
        }
        for l in 0..n {
            frequency_diagonal(self, l)?;
        }
        Ok(())
    }
}

/// `sigma^z` eigenvalue of qubit `j` in basis state `index` (0-based).
#[inline]
pub fn z_sign(index: usize, j: usize, n_qubits: usize) -> f64 {
    if bit(index, j, n_qubits) == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Bit of qubit `j` in 0-based basis index `index`; qubit 0 is the most significant.
#[inline]
pub fn bit(index: usize, j: usize, n_qubits: usize) -> usize {
    (index >> (n_qubits - 1 - j)) & 1
}

/// Decimal label (1-based) of a computational basis state given as bits A→last.
pub fn basis_index(bits: &[u8]) -> Result<usize> {
    if bits.is_empty() || bits.len() > MAX_QUBITS {
        return Err(Error::InvalidInput(format!(
            "register length {} out of range",
            bits.len()
        )));
    }
    bits.iter()
        .try_fold(0usize, |acc, &b| match b {
            0 | 1 => Ok((acc << 1) | b as usize),
            other => Err(Error::InvalidInput(format!(
                "non-binary digit {other} in register"
            ))),
        })
        .map(|v| v + 1)
}

/// Inverse of [`basis_index`].
pub fn basis_bits(label: usize, n_qubits: usize) -> Result<Vec<u8>> {
    if n_qubits == 0 || n_qubits > MAX_QUBITS || label == 0 || label > (1 << n_qubits) {
        return Err(Error::InvalidInput(format!(
            "label {label} out of range for {n_qubits} qubits"
        )));
    }
    Ok((0..n_qubits)
        .map(|j| bit(label - 1, j, n_qubits) as u8)
        .collect())
}

/// Ket string of a 0-based index, e.g. `"101"`.
pub fn ket_string(index: usize, n_qubits: usize) -> String {
    (0..n_qubits)
        .map(|j| {
            if bit(index, j, n_qubits) == 1 {
                '1'
            } else {
                '0'
            }
        })
        .collect()
}

fn embed(j: usize, n_qubits: usize, single: [[C64; 2]; 2]) -> Result<Matrix> {
    if j >= n_qubits {
        return Err(Error::QubitIndex { index: j, n_qubits });
    }
    let local = DMatrix::from_fn(2, 2, |r, c| single[r][c]);
    let mut out = Matrix::identity(1, 1);
    for slot in 0..n_qubits {
        out = if slot == j {
            out.kronecker(&local)
        } else {
            out.kronecker(&Matrix::identity(2, 2))
        };
    }
    Ok(out)
}

/// `I ⊗ … ⊗ sigma^axis ⊗ … ⊗ I` with the Pauli matrix in slot `j`.
pub fn pauli_op(j: usize, axis: Axis, n_qubits: usize) -> Result<Matrix> {
    embed(j, n_qubits, axis.single())
}

/// Raising operator of qubit `j`: `|0> -> |1>`, unit matrix element.
pub fn sigma_plus(j: usize, n_qubits: usize) -> Result<Matrix> {
    let o = C64::new(0.0, 0.0);
    embed(j, n_qubits, [[o, o], [C64::new(1.0, 0.0), o]])
}

/// Lowering operator of qubit `j`: `|1> -> |0>`.
pub fn sigma_minus(j: usize, n_qubits: usize) -> Result<Matrix> {
    let o = C64::new(0.0, 0.0);
    embed(j, n_qubits, [[o, C64::new(1.0, 0.0)], [o, o]])
}

/// Diagonal of the chain Hamiltonian in the computational basis.
pub fn hamiltonian_diagonal(config: &ChainConfig) -> Vec<f64> {
    let n = config.n_qubits;
    (0..config.dim())
        .map(|a| {
            let mut e = 0.0;
            for j in 0..n {
                e -= 0.5 * config.delta[j] * z_sign(a, j, n);
                for l in j + 1..n {
                    e -= 0.25 * config.coupling[j][l] * z_sign(a, j, n) * z_sign(a, l, n);
                }
            }
            e
        })
        .collect()
}

/// `H = -1/2 sum_j delta_j sz_j - 1/4 sum_{j<l} chi_jl sz_j sz_l`.
pub fn build_hamiltonian(config: &ChainConfig) -> Matrix {
    diagonal_matrix(&hamiltonian_diagonal(config))
}

/// Eigenvalues of the transition-frequency operator of qubit `l`:
/// `delta_l + sum_{m != l} (chi_lm / 2) sz_m`.
///
/// Fails if any eigenvalue is not strictly positive.
pub fn frequency_diagonal(config: &ChainConfig, l: usize) -> Result<Vec<f64>> {
    let n = config.n_qubits;
    if l >= n {
        return Err(Error::QubitIndex {
            index: l,
            n_qubits: n,
        });
    }
    (0..config.dim())
        .map(|a| {
            let omega = config.delta[l]
                + (0..n)
                    .filter(|&m| m != l)
                    .map(|m| 0.5 * config.coupling[l][m] * z_sign(a, m, n))
                    .sum::<f64>();
            if omega > 0.0 {
                Ok(omega)
            } else {
                Err(Error::NonPositiveFrequency {
                    qubit: l,
                    state: ket_string(a, n),
                    label: a + 1,
                    value: omega,
                })
            }
        })
        .collect()
}

/// Frequency operator of qubit `l` as a (real diagonal) matrix.
pub fn frequency_operator(config: &ChainConfig, l: usize) -> Result<Matrix> {
    frequency_diagonal(config, l).map(|d| diagonal_matrix(&d))
}

pub(crate) fn diagonal_matrix(diag: &[f64]) -> Matrix {
    let n = diag.len();
    Matrix::from_fn(n, n, |r, c| {
        if r == c {
            C64::new(diag[r], 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn ket(label: usize, dim: usize) -> nalgebra::DVector<C64> {
        let mut v = nalgebra::DVector::zeros(dim);
        v[label - 1] = C64::new(1.0, 0.0);
        v
    }

    #[test]
    fn basis_labels() {
        assert_eq!(basis_index(&[0, 0, 0]).unwrap(), 1);
        assert_eq!(basis_index(&[1, 1, 1]).unwrap(), 8);
        assert_eq!(basis_index(&[1, 0, 0]).unwrap(), 5);
        assert_eq!(basis_index(&[0, 1, 1]).unwrap(), 4);
        assert!(matches!(
            basis_index(&[0, 2, 1]),
            Err(Error::InvalidInput(_))
        ));
        assert!(basis_index(&[]).is_err());
        assert_eq!(basis_bits(6, 3).unwrap(), vec![1, 0, 1]);
        assert!(basis_bits(9, 3).is_err());
        assert!(basis_bits(0, 3).is_err());
    }

    #[test]
    fn pauli_actions() {
        let z = pauli_op(0, Axis::Z, 1).unwrap();
        assert_eq!(&z * ket(2, 2), -ket(2, 2));
        let x = pauli_op(0, Axis::X, 1).unwrap();
        assert_eq!(&x * ket(1, 2), ket(2, 2));
        let zb = pauli_op(1, Axis::Z, 3).unwrap();
        let expected = [1.0, 1.0, -1.0, -1.0, 1.0, 1.0, -1.0, -1.0];
        for (k, e) in expected.iter().enumerate() {
            assert_eq!(zb[(k, k)], C64::new(*e, 0.0));
        }
        assert!(matches!(
            pauli_op(3, Axis::X, 3),
            Err(Error::QubitIndex {
                index: 3,
                n_qubits: 3
            })
        ));
    }

    #[test]
    fn pauli_algebra() {
        let n = 3;
        let id = Matrix::identity(8, 8);
        for j in 0..n {
            for ax in [Axis::X, Axis::Y, Axis::Z] {
                let p = pauli_op(j, ax, n).unwrap();
                assert_abs_diff_eq!((&p * &p - &id).norm(), 0.0, epsilon = 1e-14);
            }
            let x = pauli_op(j, Axis::X, n).unwrap();
            let z = pauli_op(j, Axis::Z, n).unwrap();
            assert_abs_diff_eq!((&x * &z + &z * &x).norm(), 0.0, epsilon = 1e-14);
            for l in 0..n {
                if l != j {
                    let y = pauli_op(l, Axis::Y, n).unwrap();
                    assert_abs_diff_eq!((&x * &y - &y * &x).norm(), 0.0, epsilon = 1e-14);
                }
            }
        }
    }

    #[test]
    fn ladder_convention() {
        let sp = sigma_plus(2, 3).unwrap();
        // |000> -> |001>
        assert_eq!(&sp * ket(1, 8), ket(2, 8));
        assert_eq!((&sp * ket(2, 8)).norm(), 0.0);
        let sm = sigma_minus(0, 3).unwrap();
        assert_eq!(&sm * ket(5, 8), ket(1, 8));
        assert_eq!(sm.adjoint(), sigma_plus(0, 3).unwrap());
    }

    #[test]
    fn canonical_hamiltonian_corners() {
        let h = hamiltonian_diagonal(&ChainConfig::canonical(1.0));
        assert_abs_diff_eq!(h[0], -0.975, epsilon = 1e-14);
        assert_abs_diff_eq!(h[7], 0.775, epsilon = 1e-14);
    }

    #[test]
    fn decoupled_pair_spectrum() {
        let c = ChainConfig::new(vec![1.0, 1.0], vec![vec![0.0; 2]; 2], 0.1, 0.0).unwrap();
        let mut h = hamiltonian_diagonal(&c);
        h.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(h, vec![-1.0, 0.0, 0.0, 1.0]);
        let expected = (pauli_op(0, Axis::Z, 2).unwrap() + pauli_op(1, Axis::Z, 2).unwrap())
            * C64::new(-0.5, 0.0);
        assert_eq!(build_hamiltonian(&c), expected);
    }

    /// Literal transcription of the three-qubit chain Hamiltonian with the
    /// reference qubit written separately, built from Pauli products.
    #[test]
    fn chain_hamiltonian_matches_literal_sum() {
        let (chi, chip) = (0.15, 0.1);
        let delta = [1.0, 0.5, 0.25];
        let c = ChainConfig::from_chain(delta.to_vec(), chi, chip, 0.1, 0.0).unwrap();
        let z = |j| pauli_op(j, Axis::Z, 3).unwrap();
        let r = |x: f64| C64::new(x, 0.0);
        let mut h = z(0) * r(-0.5);
        for j in 1..3 {
            h -= z(j) * r(0.5 * delta[j]);
        }
        for j in 0..2 {
            h -= z(j) * z(j + 1) * r(chi / 4.0);
        }
        h -= z(0) * z(2) * r(chip / 4.0);
        assert_abs_diff_eq!((build_hamiltonian(&c) - h).norm(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn canonical_spectrum_non_degenerate() {
        let mut h = hamiltonian_diagonal(&ChainConfig::canonical(0.0));
        h.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for w in h.windows(2) {
            assert!(w[1] - w[0] > 1e-6, "degenerate levels {w:?}");
        }
    }

    #[test]
    fn frequency_values() {
        let c = ChainConfig::canonical(1.0);
        let a = frequency_diagonal(&c, 0).unwrap();
        // |000> and |011> have B=C=0 resp. 1 ... qubit A sees B,C = 0 in labels 1 and 5
        assert_abs_diff_eq!(a[0], 1.125, epsilon = 1e-14);
        assert_abs_diff_eq!(a[4], 1.125, epsilon = 1e-14);
        let cq = frequency_diagonal(&c, 2).unwrap();
        // |110> and |111>
        assert_abs_diff_eq!(cq[6], 0.125, epsilon = 1e-14);
        assert_abs_diff_eq!(cq[7], 0.125, epsilon = 1e-14);

        let free = ChainConfig::new(vec![1.0, 0.4], vec![vec![0.0; 2]; 2], 0.1, 0.0).unwrap();
        let b = frequency_operator(&free, 1).unwrap();
        assert_eq!(b, Matrix::identity(4, 4) * C64::new(0.4, 0.0));
    }

    #[test]
    fn frequencies_commute_with_hamiltonian() {
        let c = ChainConfig::canonical(1.0);
        let h = build_hamiltonian(&c);
        for l in 0..3 {
            let w = frequency_operator(&c, l).unwrap();
            assert_eq!(&h * &w - &w * &h, Matrix::zeros(8, 8));
        }
    }

    #[test]
    fn strong_coupling_rejected() {
        // chi_BC = 0.6 > 2 delta_C pushes qubit C's frequency negative when B = 0
        let coupling = vec![
            vec![0.0, 0.0, 0.0],
            vec![0.0, 0.0, 0.6],
            vec![0.0, 0.6, 0.0],
        ];
        let err = ChainConfig::new(vec![1.0, 0.5, 0.25], coupling, 0.1, 0.0).unwrap_err();
        match err {
            Error::NonPositiveFrequency { qubit, value, .. } => {
                assert!(qubit == 2);
                assert!(value <= 0.0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn config_validation() {
        assert!(ChainConfig::new(
            vec![1.0, 0.5],
            vec![vec![0.0, 0.1], vec![0.2, 0.0]],
            0.1,
            0.0
        )
        .is_err());
        assert!(ChainConfig::new(
            vec![1.0, 0.5],
            vec![vec![0.1, 0.1], vec![0.1, 0.0]],
            0.1,
            0.0
        )
        .is_err());
        assert!(ChainConfig::new(vec![1.0, 0.5], vec![vec![0.0; 2]; 2], -0.1, 0.0).is_err());
        assert!(ChainConfig::new(vec![1.0, 0.5], vec![vec![0.0; 2]; 2], 0.1, -1.0).is_err());
        assert!(ChainConfig::new(vec![0.9, 0.5], vec![vec![0.0; 2]; 2], 0.1, 0.0).is_err());
        assert!(ChainConfig::new(vec![1.0, 1.5], vec![vec![0.0; 2]; 2], 0.1, 0.0).is_err());
        assert!(ChainConfig::new(vec![], vec![], 0.1, 0.0).is_err());
    }

    #[test]
    fn qubit_names() {
        assert_eq!(parse_qubit("A").unwrap(), 0);
        assert_eq!(parse_qubit("c").unwrap(), 2);
        assert_eq!(parse_qubit("1").unwrap(), 1);
        assert_eq!(parse_qubit(&qubit_name(30)).unwrap(), 30);
        assert!(parse_qubit("AB").is_err());
        assert_eq!(qubit_name(1), "B");
    }
}
