//! Dissipative evolution between kicks, kick unitaries, and the stroboscopic
//! alternation of the two maps.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;

use crate::dissipator::{check_shape, Dissipator};
use crate::spin_chain::{
    hamiltonian_diagonal, parse_qubit, pauli_op, qubit_name, Axis, ChainConfig,
};
use crate::{Error, Matrix, Result, C64};

/// Tolerances the state is checked against (see [`DensityMatrix::diagnostics`]).
pub const HERMITICITY_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-9;
pub const POSITIVITY_TOL: f64 = 1e-6;

/// Largest Hilbert-space dimension for which [`propagate`] caches the
/// one-period propagator as a dense superoperator.
pub const PERIOD_MAP_MAX_DIM: usize = 16;

/// Density matrix of the chain.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    m: Matrix,
}

/// Deviations of a state from the density-matrix invariants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateDiagnostics {
    pub trace_error: f64,
    pub hermiticity_residual: f64,
    pub min_eigenvalue: f64,
}

impl StateDiagnostics {
    pub fn is_valid(&self) -> bool {
        self.trace_error < TRACE_TOL && self.hermiticity_residual < HERMITICITY_TOL
    }

    pub fn positivity_violated(&self) -> bool {
        self.min_eigenvalue < -POSITIVITY_TOL
    }
}

impl DensityMatrix {
    /// Checks shape, Hermiticity and unit trace (within the module tolerances).
    pub fn new(m: Matrix) -> Result<Self> {
        if m.nrows() != m.ncols() || !m.nrows().is_power_of_two() || m.nrows() < 2 {
            return Err(Error::InvalidInput(format!(
                "density matrix must be 2^N x 2^N, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        let rho = DensityMatrix { m };
        let d = rho.hermiticity_residual();
        if !(d < HERMITICITY_TOL) {
            return Err(Error::InvalidInput(format!(
                "matrix is not Hermitian (residual {d:e})"
            )));
        }
        let t = rho.trace_error();
        if !(t < TRACE_TOL) {
            return Err(Error::InvalidInput(format!(
                "trace differs from 1 by {t:e}"
            )));
        }
        Ok(rho)
    }

    /// Wraps a matrix without validation (used for intermediate states).
    pub fn from_matrix_unchecked(m: Matrix) -> Self {
        DensityMatrix { m }
    }

    /// Projector onto the basis state with 1-based decimal `label`.
    pub fn basis_state(label: usize, n_qubits: usize) -> Result<Self> {
        let dim = 1usize << n_qubits;
        if label == 0 || label > dim {
            return Err(Error::InvalidInput(format!(
                "basis label {label} outside 1..={dim}"
            )));
        }
        let mut m = Matrix::zeros(dim, dim);
        m[(label - 1, label - 1)] = C64::new(1.0, 0.0);
        Ok(DensityMatrix { m })
    }

    /// `|psi><psi|` for a normalised state vector.
    pub fn pure(psi: &DVector<C64>) -> Result<Self> {
        let norm = psi.norm();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidInput(format!("state vector has norm {norm}")));
        }
        DensityMatrix::new(psi * psi.adjoint())
    }

    pub fn maximally_mixed(n_qubits: usize) -> Self {
        let dim = 1usize << n_qubits;
        DensityMatrix {
            m: Matrix::identity(dim, dim) * C64::new(1.0 / dim as f64, 0.0),
        }
    }

    pub fn matrix(&self) -> &Matrix {
        &self.m
    }

    pub fn into_matrix(self) -> Matrix {
        self.m
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn n_qubits(&self) -> usize {
        self.dim().trailing_zeros() as usize
    }

    pub fn hermitize(&mut self) {
        let adj = self.m.adjoint();
        self.m = (&self.m + adj) * C64::new(0.5, 0.0);
    }

    pub fn trace_error(&self) -> f64 {
        (self.m.trace() - C64::new(1.0, 0.0)).norm()
    }

    pub fn hermiticity_residual(&self) -> f64 {
        crate::max_norm(&(&self.m - self.m.adjoint()))
    }

    /// Smallest eigenvalue of the Hermitian part.
    pub fn min_eigenvalue(&self) -> f64 {
        crate::observables::hermitian_eigenvalues(&self.m)
            .into_iter()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn diagnostics(&self) -> StateDiagnostics {
        StateDiagnostics {
            trace_error: self.trace_error(),
            hermiticity_residual: self.hermiticity_residual(),
            min_eigenvalue: self.min_eigenvalue(),
        }
    }

    fn is_finite(&self) -> bool {
        self.m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

/// Generator of the dissipative dynamics, `d rho / d tau = -i [H, rho] + D[rho]`.
#[derive(Debug, Clone)]
pub struct Liouvillian {
    h_diag: Vec<f64>,
    dissipator: Dissipator,
}

impl Liouvillian {
    pub fn new(config: &ChainConfig) -> Result<Self> {
        Ok(Liouvillian {
            h_diag: hamiltonian_diagonal(config),
            dissipator: Dissipator::new(config)?,
        })
    }

    pub fn dim(&self) -> usize {
        self.h_diag.len()
    }

    pub fn hamiltonian_diagonal(&self) -> &[f64] {
        &self.h_diag
    }

    pub fn hamiltonian(&self) -> Matrix {
        crate::spin_chain::diagonal_matrix(&self.h_diag)
    }

    pub fn dissipator(&self) -> &Dissipator {
        &self.dissipator
    }

    /// `Tr(H rho)` using the diagonal Hamiltonian.
    pub fn energy(&self, rho: &Matrix) -> f64 {
        self.h_diag
            .iter()
            .enumerate()
            .map(|(k, e)| e * rho[(k, k)].re)
            .sum()
    }

    /// Right-hand side of the master equation.
    pub fn rhs(&self, rho: &Matrix) -> Matrix {
        let dim = self.dim();
        // -i [H, rho] with diagonal H: entry (a, b) picks up -i (E_a - E_b)
        let mut out = Matrix::from_fn(dim, dim, |a, b| {
            rho[(a, b)] * C64::new(0.0, -(self.h_diag[a] - self.h_diag[b]))
        });
        self.dissipator.accumulate(rho, &mut out);
        out
    }

    /// Dense `dim^2 x dim^2` superoperator acting on column-major `vec(rho)`.
    pub fn superoperator(&self) -> Matrix {
        let dim = self.dim();
        let n = dim * dim;
        let mut sup = Matrix::zeros(n, n);
        let mut basis = Matrix::zeros(dim, dim);
        for col in 0..n {
            let (a, b) = (col % dim, col / dim);
            basis[(a, b)] = C64::new(1.0, 0.0);
            let image = self.rhs(&basis);
            sup.column_mut(col).copy_from_slice(image.as_slice());
            basis[(a, b)] = C64::new(0.0, 0.0);
        }
        sup
    }
}

/// `-i [H, rho] + D[rho]` for an explicit Hamiltonian, with the dissipator
/// evaluated in commutator form.
pub fn liouville_rhs(rho: &Matrix, config: &ChainConfig, h: &Matrix) -> Result<Matrix> {
    let dim = config.dim();
    check_shape(rho, dim)?;
    check_shape(h, dim)?;
    let unitary = (h * rho - rho * h) * C64::new(0.0, -1.0);
    Ok(unitary + crate::dissipator::apply_dissipator(rho, config)?)
}

/// Fixed-step classical Runge-Kutta integrator settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stepper {
    /// Largest allowed step; each segment uses the largest uniform step not above it.
    pub dt_max: f64,
}

impl Stepper {
    pub const DEFAULT_DT: f64 = 0.01;
    pub const STEPS_PER_PERIOD: f64 = 200.0;

    pub fn new(dt_max: f64) -> Result<Self> {
        if !(dt_max > 0.0) || !dt_max.is_finite() {
            return Err(Error::InvalidInput(format!(
                "step size must be positive, got {dt_max}"
            )));
        }
        Ok(Stepper { dt_max })
    }

    /// `dt = min(tau_k / 200, 0.01)`.
    pub fn for_period(tau_k: f64) -> Self {
        Stepper {
            dt_max: (tau_k / Self::STEPS_PER_PERIOD).min(Self::DEFAULT_DT),
        }
    }

    /// Same stepper with half the step.
    pub fn halved(self) -> Self {
        Stepper {
            dt_max: self.dt_max / 2.0,
        }
    }

    /// Number of steps and uniform step size covering `duration`.
    pub fn steps_for(&self, duration: f64) -> (usize, f64) {
        if duration <= 0.0 {
            return (0, 0.0);
        }
        let n = (duration / self.dt_max - 1e-9).ceil().max(1.0) as usize;
        (n, duration / n as f64)
    }
}

impl Default for Stepper {
    fn default() -> Self {
        Stepper {
            dt_max: Self::DEFAULT_DT,
        }
    }
}

fn rk4_step(liouv: &Liouvillian, rho: &Matrix, dt: f64) -> Matrix {
    let half = C64::new(dt / 2.0, 0.0);
    let full = C64::new(dt, 0.0);
    let k1 = liouv.rhs(rho);
    let k2 = liouv.rhs(&(rho + &k1 * half));
    let k3 = liouv.rhs(&(rho + &k2 * half));
    let k4 = liouv.rhs(&(rho + &k3 * full));
    rho + (k1 + (k2 + k3) * C64::new(2.0, 0.0) + k4) * C64::new(dt / 6.0, 0.0)
}

/// Calls `sample(step, tau, rho)` after every `every`-th step (and at the end).
pub fn integrate_sampled<F>(
    rho0: &DensityMatrix,
    duration: f64,
    liouv: &Liouvillian,
    stepper: &Stepper,
    every: usize,
    mut sample: F,
) -> Result<DensityMatrix>
where
    F: FnMut(usize, f64, &Matrix),
{
    if !(duration >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "duration must be >= 0, got {duration}"
        )));
    }
    check_shape(rho0.matrix(), liouv.dim())?;
    let (n, dt) = stepper.steps_for(duration);
    let every = every.max(1);
    let mut rho = rho0.matrix().clone();
    for step in 1..=n {
        rho = rk4_step(liouv, &rho, dt);
        if (step % 64 == 0 || step == n)
            && !rho.iter().all(|z| z.re.is_finite() && z.im.is_finite())
        {
            return Err(Error::Divergence { step });
        }
        if step % every == 0 || step == n {
            sample(step, step as f64 * dt, &rho);
        }
    }
    let mut out = DensityMatrix::from_matrix_unchecked(rho);
    if n > 0 {
        out.hermitize();
    }
    Ok(out)
}

/// Propagates `rho0` for `duration` under the dissipative dynamics.
pub fn integrate(
    rho0: &DensityMatrix,
    duration: f64,
    liouv: &Liouvillian,
    stepper: &Stepper,
) -> Result<DensityMatrix> {
    integrate_sampled(rho0, duration, liouv, stepper, usize::MAX, |_, _, _| {})
}

/// Max-norm change of the final state when the step is halved.
pub fn step_refinement_error(
    rho0: &DensityMatrix,
    duration: f64,
    liouv: &Liouvillian,
    stepper: &Stepper,
) -> Result<f64> {
    let coarse = integrate(rho0, duration, liouv, stepper)?;
    let fine = integrate(rho0, duration, liouv, &stepper.halved())?;
    Ok(crate::max_norm(&(coarse.matrix() - fine.matrix())))
}

/// One rotation `exp(+i angle sigma^axis_qubit / 2)` of a single qubit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation {
    pub qubit: usize,
    pub axis: Axis,
    pub angle: f64,
}

impl Rotation {
    pub fn new(qubit: usize, axis: Axis, angle: f64) -> Self {
        Rotation { qubit, axis, angle }
    }

    /// `cos(angle/2) I + i sin(angle/2) sigma` on the full register.
    pub fn unitary(&self, n_qubits: usize) -> Result<Matrix> {
        let sigma = pauli_op(self.qubit, self.axis, n_qubits)?;
        let dim = 1usize << n_qubits;
        let (s, c) = (self.angle / 2.0).sin_cos();
        Ok(Matrix::identity(dim, dim) * C64::new(c, 0.0) + sigma * C64::new(0.0, s))
    }
}

impl fmt::Display for Rotation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", qubit_name(self.qubit), self.axis, self.angle)
    }
}

impl FromStr for Rotation {
    type Err = Error;

    /// `QUBIT:AXIS:ANGLE`, e.g. `C:x:pi/2` or `0:y:1.5708`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.trim().split(':').collect();
        if parts.len() != 3 {
            return Err(Error::InvalidInput(format!(
                "rotation '{s}' must look like QUBIT:AXIS:ANGLE"
            )));
        }
        Ok(Rotation {
            qubit: parse_qubit(parts[0])?,
            axis: parts[1].parse()?,
            angle: parse_angle(parts[2])?,
        })
    }
}

/// Parses angles such as `1.25`, `pi`, `pi/2`, `3pi/4`, `2*pi`, `π/2`.
pub fn parse_angle(s: &str) -> Result<f64> {
    let bad = || Error::InvalidInput(format!("cannot parse angle '{s}'"));
    let t: String = s
        .trim()
        .to_ascii_lowercase()
        .replace('π', "pi")
        .split_whitespace()
        .collect();
    if t.is_empty() {
        return Err(bad());
    }
    let (num, den) = match t.split_once('/') {
        Some((n, d)) => (n, Some(d)),
        None => (t.as_str(), None),
    };
    let numerator = match num.strip_suffix("pi") {
        Some(coef) => {
            let coef = coef.strip_suffix('*').unwrap_or(coef);
            let c = match coef {
                "" | "+" => 1.0,
                "-" => -1.0,
                c => c.parse::<f64>().map_err(|_| bad())?,
            };
            c * PI
        }
        None => num.parse::<f64>().map_err(|_| bad())?,
    };
    let value = match den {
        Some(d) => {
            let d = d.parse::<f64>().map_err(|_| bad())?;
            if d == 0.0 {
                return Err(bad());
            }
            numerator / d
        }
        None => numerator,
    };
    if value.is_finite() {
        Ok(value)
    } else {
        Err(bad())
    }
}

/// Ordered list of rotations applied at every kick, first listed applied first.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct KickSpec {
    pub rotations: Vec<Rotation>,
}

impl KickSpec {
    pub fn new(rotations: Vec<Rotation>) -> Self {
        KickSpec { rotations }
    }

    pub fn none() -> Self {
        KickSpec::default()
    }

    pub fn single(qubit: usize, axis: Axis, angle: f64) -> Self {
        KickSpec {
            rotations: vec![Rotation::new(qubit, axis, angle)],
        }
    }

    pub fn is_empty(&self) -> bool {
        self.rotations.is_empty()
    }

    /// Checks qubit indices against `n_qubits` and angles against `[0, 2 pi]`.
    pub fn validate(&self, n_qubits: usize) -> Result<()> {
        for r in &self.rotations {
            if r.qubit >= n_qubits {
                return Err(Error::QubitIndex {
                    index: r.qubit,
                    n_qubits,
                });
            }
            if !(r.angle >= -1e-12 && r.angle <= 2.0 * PI + 1e-12) {
                return Err(Error::InvalidInput(format!(
                    "kick angle {} outside [0, 2pi]",
                    r.angle
                )));
            }
        }
        Ok(())
    }
}

impl fmt::Display for KickSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.rotations.is_empty() {
            return write!(f, "none");
        }
        for (k, r) in self.rotations.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{r}")?;
        }
        Ok(())
    }
}

impl FromStr for KickSpec {
    type Err = Error;

    /// Comma-separated rotations, or `none`.
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        if t.is_empty() || t.eq_ignore_ascii_case("none") {
            return Ok(KickSpec::none());
        }
        t.split(',')
            .map(str::parse)
            .collect::<Result<Vec<_>>>()
            .map(KickSpec::new)
    }
}

/// Composite kick unitary `R_m ... R_2 R_1` for rotations listed `R_1, ..., R_m`.
pub fn kick_unitary(spec: &KickSpec, n_qubits: usize) -> Result<Matrix> {
    let dim = 1usize << n_qubits;
    spec.rotations
        .iter()
        .try_fold(Matrix::identity(dim, dim), |u, r| {
            Ok(r.unitary(n_qubits)? * u)
        })
}

/// `U rho U^dagger`.
pub fn apply_kick(rho: &DensityMatrix, u: &Matrix) -> Result<DensityMatrix> {
    check_shape(u, rho.dim())?;
    Ok(DensityMatrix::from_matrix_unchecked(
        u * rho.matrix() * u.adjoint(),
    ))
}

/// Kick period and content.
#[derive(Debug, Clone, PartialEq)]
pub struct KickSchedule {
    pub tau_k: f64,
    pub spec: KickSpec,
    pub n_kicks: usize,
}

impl KickSchedule {
    pub fn new(tau_k: f64, spec: KickSpec, n_kicks: usize) -> Result<Self> {
        if !(tau_k > 0.0) || !tau_k.is_finite() {
            return Err(Error::InvalidInput(format!(
                "kick period must be positive, got {tau_k}"
            )));
        }
        Ok(KickSchedule {
            tau_k,
            spec,
            n_kicks,
        })
    }

    /// Period `4 pi / q`, commensurate with the reference qubit's precession.
    pub fn from_q(q: f64, spec: KickSpec, n_kicks: usize) -> Result<Self> {
        if !(q > 0.0) || !q.is_finite() {
            return Err(Error::InvalidInput(format!(
                "q must be a positive number, got {q}"
            )));
        }
        Self::new(4.0 * PI / q, spec, n_kicks)
    }
}

/// Cached linear map of one dissipative segment on `vec(rho)`, identical to
/// running the fixed-step integrator over that segment.
#[derive(Debug, Clone)]
pub struct PeriodMap {
    dim: usize,
    map: Matrix,
}

impl PeriodMap {
    pub fn new(liouv: &Liouvillian, duration: f64, stepper: &Stepper) -> Self {
        let dim = liouv.dim();
        let n = dim * dim;
        let (steps, dt) = stepper.steps_for(duration);
        if steps == 0 {
            return PeriodMap {
                dim,
                map: Matrix::identity(n, n),
            };
        }
        // one RK4 step of a linear system is the degree-4 Taylor polynomial of exp(dt L)
        let hl = liouv.superoperator() * C64::new(dt, 0.0);
        let id = Matrix::identity(n, n);
        let mut step = id.clone();
        let mut term = id.clone();
        for k in 1..=4 {
            term = &term * &hl * C64::new(1.0 / k as f64, 0.0);
            step += &term;
        }
        PeriodMap {
            dim,
            map: matrix_power(step, steps),
        }
    }

    pub fn apply(&self, rho: &DensityMatrix) -> DensityMatrix {
        let v = DVector::from_column_slice(rho.matrix().as_slice());
        let out = &self.map * v;
        let mut r = DensityMatrix::from_matrix_unchecked(Matrix::from_column_slice(
            self.dim,
            self.dim,
            out.as_slice(),
        ));
        r.hermitize();
        r
    }

    pub fn matrix(&self) -> &Matrix {
        &self.map
    }
}

fn matrix_power(mut base: Matrix, mut exp: usize) -> Matrix {
    let n = base.nrows();
    let mut acc: Option<Matrix> = None;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = Some(match acc {
                Some(a) => &a * &base,
                None => base.clone(),
            });
        }
        exp >>= 1;
        if exp > 0 {
            base = &base * &base;
        }
    }
    acc.unwrap_or_else(|| Matrix::identity(n, n))
}

/// Observables recorded immediately before and after one kick.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KickRecord {
    /// 1-based kick number `n`.
    pub kick: usize,
    /// `tau_n = n tau_k`.
    pub tau: f64,
    pub energy_pre: f64,
    pub energy_post: f64,
    pub purity_pre: f64,
    pub purity_post: f64,
    /// Smallest eigenvalue of the pre-kick state.
    pub min_eigenvalue: f64,
}

impl KickRecord {
    /// `(E(tau_n+) + E(tau_n-)) / 2`.
    pub fn mean_energy(&self) -> f64 {
        0.5 * (self.energy_pre + self.energy_post)
    }
}

/// Stroboscopic record of a kicked run.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub tau_k: f64,
    pub initial_energy: f64,
    pub initial_purity: f64,
    pub records: Vec<KickRecord>,
    /// `(rho(tau_n-), rho(tau_n+))` per kick when state storage is enabled.
    pub states: Option<Vec<(DensityMatrix, DensityMatrix)>>,
    pub final_state: DensityMatrix,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Worst (smallest) eigenvalue seen across pre-kick states.
    pub fn positivity_min_eig(&self) -> f64 {
        self.records
            .iter()
            .map(|r| r.min_eigenvalue)
            .fold(f64::INFINITY, f64::min)
    }
}

/// How each dissipative segment is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SegmentMethod {
    /// Cached period map for small chains, direct stepping otherwise.
    #[default]
    Auto,
    Direct,
    PeriodMap,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PropagateOptions {
    pub store_states: bool,
    pub method: SegmentMethod,
}

/// Incremental driver for the alternating dissipate/kick maps.
pub struct KickedEvolution<'a> {
    liouv: &'a Liouvillian,
    stepper: Stepper,
    tau_k: f64,
    unitary: Matrix,
    period: Option<PeriodMap>,
    rho: DensityMatrix,
    kick: usize,
}

impl<'a> KickedEvolution<'a> {
    pub fn new(
        rho0: &DensityMatrix,
        tau_k: f64,
        spec: &KickSpec,
        liouv: &'a Liouvillian,
        stepper: &Stepper,
        method: SegmentMethod,
    ) -> Result<Self> {
        check_shape(rho0.matrix(), liouv.dim())?;
        let n_qubits = rho0.n_qubits();
        spec.validate(n_qubits)?;
        if !(tau_k > 0.0) {
            return Err(Error::InvalidInput(format!(
                "kick period must be positive, got {tau_k}"
            )));
        }
        let use_map = match method {
            SegmentMethod::Auto => liouv.dim() <= PERIOD_MAP_MAX_DIM,
            SegmentMethod::Direct => false,
            SegmentMethod::PeriodMap => true,
        };
        let period = use_map.then(|| PeriodMap::new(liouv, tau_k, stepper));
        Ok(KickedEvolution {
            liouv,
            stepper: *stepper,
            tau_k,
            unitary: kick_unitary(spec, n_qubits)?,
            period,
            rho: rho0.clone(),
            kick: 0,
        })
    }

    pub fn state(&self) -> &DensityMatrix {
        &self.rho
    }

    /// Runs one period and the following kick; returns `(rho-, rho+)`.
    pub fn cycle(&mut self) -> Result<(DensityMatrix, DensityMatrix)> {
        let pre = match &self.period {
            Some(map) => {
                let r = map.apply(&self.rho);
                if !r.is_finite() {
                    return Err(Error::Divergence {
                        step: (self.kick + 1) * self.stepper.steps_for(self.tau_k).0,
                    });
                }
                r
            }
            None => integrate(&self.rho, self.tau_k, self.liouv, &self.stepper).map_err(
                |e| match e {
                    Error::Divergence { step } => Error::Divergence {
                        step: self.kick * self.stepper.steps_for(self.tau_k).0 + step,
                    },
                    other => other,
                },
            )?,
        };
        let post = apply_kick(&pre, &self.unitary)?;
        self.rho = post.clone();
        self.kick += 1;
        Ok((pre, post))
    }

    /// Like [`Self::cycle`] but returns the recorded observables.
    pub fn record_cycle(&mut self) -> Result<(KickRecord, DensityMatrix, DensityMatrix)> {
        let (pre, post) = self.cycle()?;
        let rec = KickRecord {
            kick: self.kick,
            tau: self.kick as f64 * self.tau_k,
            energy_pre: self.liouv.energy(pre.matrix()),
            energy_post: self.liouv.energy(post.matrix()),
            purity_pre: crate::observables::purity(&pre),
            purity_post: crate::observables::purity(&post),
            min_eigenvalue: pre.min_eigenvalue(),
        };
        Ok((rec, pre, post))
    }
}

/// Repeats `[evolve tau_k, record rho-, kick, record rho+]` `n_kicks` times,
/// starting with a full dissipative period.
pub fn propagate(
    rho0: &DensityMatrix,
    schedule: &KickSchedule,
    liouv: &Liouvillian,
    stepper: &Stepper,
) -> Result<Trajectory> {
    propagate_with(rho0, schedule, liouv, stepper, &PropagateOptions::default())
}

pub fn propagate_with(
    rho0: &DensityMatrix,
    schedule: &KickSchedule,
    liouv: &Liouvillian,
    stepper: &Stepper,
    options: &PropagateOptions,
) -> Result<Trajectory> {
    let mut evo = KickedEvolution::new(
        rho0,
        schedule.tau_k,
        &schedule.spec,
        liouv,
        stepper,
        options.method,
    )?;
    let mut records = Vec::with_capacity(schedule.n_kicks);
    let mut states = options
        .store_states
        .then(|| Vec::with_capacity(schedule.n_kicks));
    for _ in 0..schedule.n_kicks {
        let (rec, pre, post) = evo.record_cycle()?;
        records.push(rec);
        if let Some(s) = states.as_mut() {
            s.push((pre, post));
        }
    }
    Ok(Trajectory {
        tau_k: schedule.tau_k,
        initial_energy: liouv.energy(rho0.matrix()),
        initial_purity: crate::observables::purity(rho0),
        records,
        states,
        final_state: evo.state().clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn ket(bits: &[C64]) -> DVector<C64> {
        DVector::from_column_slice(bits)
    }

    const R: fn(f64) -> C64 = |x| C64::new(x, 0.0);

    #[test]
    fn angle_parsing() {
        assert_abs_diff_eq!(parse_angle("pi/2").unwrap(), PI / 2.0);
        assert_abs_diff_eq!(parse_angle("3pi/4").unwrap(), 0.75 * PI);
        assert_abs_diff_eq!(parse_angle("2*pi").unwrap(), 2.0 * PI);
        assert_abs_diff_eq!(parse_angle(" π ").unwrap(), PI);
        assert_abs_diff_eq!(parse_angle("1.5").unwrap(), 1.5);
        assert_abs_diff_eq!(parse_angle("1/4").unwrap(), 0.25);
        for bad in ["", "pi/0", "x", "pi/", "1e400", "nan*pi"] {
            assert!(parse_angle(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn kick_spec_parsing() {
        let spec: KickSpec = "C:x:pi, C:y:pi/2,A:x:pi/2".parse().unwrap();
        assert_eq!(spec.rotations.len(), 3);
        assert_eq!(spec.rotations[0], Rotation::new(2, Axis::X, PI));
        assert_eq!(spec.rotations[2].qubit, 0);
        assert_eq!("none".parse::<KickSpec>().unwrap(), KickSpec::none());
        assert!("C:q:pi".parse::<KickSpec>().is_err());
        assert!("C:x".parse::<KickSpec>().is_err());
        let round: KickSpec = spec.to_string().parse().unwrap();
        assert_eq!(round, spec);
        assert!(KickSpec::single(3, Axis::X, 1.0).validate(3).is_err());
        assert!(KickSpec::single(0, Axis::X, 7.0).validate(3).is_err());
    }

    #[test]
    fn zero_angle_is_identity() {
        let u = kick_unitary(&KickSpec::single(1, Axis::Y, 0.0), 3).unwrap();
        assert_eq!(u, Matrix::identity(8, 8));
    }

    #[test]
    fn half_pi_x_on_ground() {
        let u = kick_unitary(&KickSpec::single(0, Axis::X, PI / 2.0), 1).unwrap();
        let out = u * ket(&[R(1.0), R(0.0)]);
        let s = 1.0 / 2f64.sqrt();
        assert_abs_diff_eq!((out[0] - C64::new(s, 0.0)).norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!((out[1] - C64::new(0.0, s)).norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn composite_pi_x_then_half_pi_y() {
        let spec = KickSpec::new(vec![
            Rotation::new(0, Axis::X, PI),
            Rotation::new(0, Axis::Y, PI / 2.0),
        ]);
        let out = kick_unitary(&spec, 1).unwrap() * ket(&[R(1.0), R(0.0)]);
        let s = 1.0 / 2f64.sqrt();
        for k in 0..2 {
            assert_abs_diff_eq!((out[k] - C64::new(0.0, s)).norm(), 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn full_turn_is_minus_identity() {
        let u = kick_unitary(&KickSpec::single(2, Axis::X, 2.0 * PI), 3).unwrap();
        assert!(crate::max_norm(&(u + Matrix::identity(8, 8))) < 1e-15);
    }

    #[test]
    fn pi_flip_on_c() {
        let rho = DensityMatrix::basis_state(1, 3).unwrap();
        let u = kick_unitary(&KickSpec::single(2, Axis::X, PI), 3).unwrap();
        let out = apply_kick(&rho, &u).unwrap();
        let expected = DensityMatrix::basis_state(2, 3).unwrap();
        assert!(crate::max_norm(&(out.matrix() - expected.matrix())) < 1e-15);
        assert!(apply_kick(&rho, &Matrix::identity(4, 4)).is_err());
    }

    #[test]
    fn rhs_trivial_cases() {
        let c = ChainConfig::canonical(0.0);
        let l = Liouvillian::new(&c).unwrap();
        let g = DensityMatrix::basis_state(1, 3).unwrap();
        assert_eq!(l.rhs(g.matrix()), Matrix::zeros(8, 8));
        let lit = liouville_rhs(g.matrix(), &c, &l.hamiltonian()).unwrap();
        assert_eq!(lit, Matrix::zeros(8, 8));

        let closed = c.with_beta(0.0).unwrap();
        let l0 = Liouvillian::new(&closed).unwrap();
        let diag = Matrix::from_diagonal(&DVector::from_fn(8, |k, _| R((k + 1) as f64 / 36.0)));
        assert_eq!(l0.rhs(&diag), Matrix::zeros(8, 8));
    }

    #[test]
    fn coherence_rotation_rate() {
        let c = ChainConfig::canonical(0.0).with_beta(0.0).unwrap();
        let l = Liouvillian::new(&c).unwrap();
        let e = l.hamiltonian_diagonal().to_vec();
        // |+> on A with B = C = 0: equal weight on labels 1 and 5
        let mut rho = Matrix::zeros(8, 8);
        for (a, b) in [(0, 0), (0, 4), (4, 0), (4, 4)] {
            rho[(a, b)] = R(0.5);
        }
        let d = l.rhs(&rho);
        assert_abs_diff_eq!(d[(0, 4)].norm(), (e[0] - e[4]).abs() * 0.5, epsilon = 1e-15);
        let lit = liouville_rhs(&rho, &c, &l.hamiltonian()).unwrap();
        assert!(crate::max_norm(&(lit - d)) < 1e-15);
    }

    #[test]
    fn fast_rhs_matches_literal_rhs() {
        let c = ChainConfig::canonical(1.0);
        let l = Liouvillian::new(&c).unwrap();
        let h = l.hamiltonian();
        let rho = Matrix::from_fn(8, 8, |a, b| {
            C64::new((a * 3 + b) as f64 / 50.0, (a as f64 - b as f64) / 20.0)
        });
        let rho = (&rho + rho.adjoint()) * R(0.5);
        assert!(crate::max_norm(&(l.rhs(&rho) - liouville_rhs(&rho, &c, &h).unwrap())) < 1e-14);
    }

    #[test]
    fn zero_duration_is_identity() {
        let c = ChainConfig::canonical(1.0);
        let l = Liouvillian::new(&c).unwrap();
        let rho = DensityMatrix::basis_state(8, 3).unwrap();
        assert_eq!(integrate(&rho, 0.0, &l, &Stepper::default()).unwrap(), rho);
        assert!(integrate(&rho, -1.0, &l, &Stepper::default()).is_err());
    }

    #[test]
    fn step_counts() {
        assert_abs_diff_eq!(Stepper::for_period(4.0 * PI).dt_max, 0.01);
        assert_abs_diff_eq!(Stepper::for_period(PI / 2.0).dt_max, PI / 400.0);
        let s = Stepper::for_period(1.0);
        assert_abs_diff_eq!(s.dt_max, 0.005);
        assert_eq!(s.steps_for(1.0).0, 200);
        let (n, dt) = Stepper::default().steps_for(PI);
        assert_eq!(n, 315);
        assert_abs_diff_eq!(dt * n as f64, PI, epsilon = 1e-14);
    }

    #[test]
    fn divergence_is_reported() {
        // an absurd step makes RK4 blow up on the fast qubit-A decay
        let c = ChainConfig::from_chain(vec![1.0, 0.5, 0.25], 0.15, 0.1, 1e3, 0.0).unwrap();
        let l = Liouvillian::new(&c).unwrap();
        let rho = DensityMatrix::basis_state(8, 3).unwrap();
        let err = integrate(&rho, 1e4, &l, &Stepper::new(1.0).unwrap()).unwrap_err();
        assert!(matches!(err, Error::Divergence { step } if step > 0));
    }

    #[test]
    fn period_map_matches_direct_stepping() {
        let c = ChainConfig::canonical(1.0);
        let l = Liouvillian::new(&c).unwrap();
        let stepper = Stepper::for_period(PI);
        let map = PeriodMap::new(&l, PI, &stepper);
        let rho = DensityMatrix::basis_state(8, 3).unwrap();
        let u = kick_unitary(&KickSpec::single(0, Axis::X, PI / 2.0), 3).unwrap();
        let mut a = rho.clone();
        let mut b = rho;
        for _ in 0..5 {
            a = apply_kick(&map.apply(&a), &u).unwrap();
            b = apply_kick(&integrate(&b, PI, &l, &stepper).unwrap(), &u).unwrap();
        }
        assert!(crate::max_norm(&(a.matrix() - b.matrix())) < 1e-12);
    }

    #[test]
    fn propagate_records() {
        let c = ChainConfig::canonical(0.0);
        let l = Liouvillian::new(&c).unwrap();
        let rho = DensityMatrix::basis_state(8, 3).unwrap();
        let sched = KickSchedule::new(PI / 2.0, KickSpec::single(2, Axis::X, PI / 2.0), 0).unwrap();
        let t = propagate(&rho, &sched, &l, &Stepper::for_period(sched.tau_k)).unwrap();
        assert!(t.is_empty());
        assert_eq!(t.final_state, rho);

        let sched = KickSchedule {
            n_kicks: 4,
            ..sched
        };
        let opts = PropagateOptions {
            store_states: true,
            method: SegmentMethod::Direct,
        };
        let t = propagate_with(&rho, &sched, &l, &Stepper::for_period(sched.tau_k), &opts).unwrap();
        assert_eq!(t.len(), 4);
        assert_abs_diff_eq!(t.records[0].tau, PI / 2.0);
        assert_abs_diff_eq!(t.records[3].tau, 2.0 * PI);
        let u = kick_unitary(&sched.spec, 3).unwrap();
        for (pre, post) in t.states.as_ref().unwrap() {
            let expect = apply_kick(pre, &u).unwrap();
            assert_eq!(expect.matrix(), post.matrix());
        }
        assert!(KickSchedule::from_q(0.0, KickSpec::none(), 1).is_err());
        assert_abs_diff_eq!(
            KickSchedule::from_q(4.0, KickSpec::none(), 1)
                .unwrap()
                .tau_k,
            PI
        );
    }

    #[test]
    fn density_matrix_validation() {
        assert!(DensityMatrix::new(Matrix::identity(8, 8)).is_err());
        assert!(DensityMatrix::new(Matrix::identity(3, 3) / R(3.0)).is_err());
        let mut m = Matrix::identity(2, 2) * R(0.5);
        m[(0, 1)] = C64::new(0.1, 0.1);
        assert!(DensityMatrix::new(m.clone()).is_err());
        m[(1, 0)] = C64::new(0.1, -0.1);
        let rho = DensityMatrix::new(m).unwrap();
        assert!(rho.diagnostics().is_valid());
        assert!(DensityMatrix::basis_state(9, 3).is_err());
        assert_eq!(DensityMatrix::maximally_mixed(3).n_qubits(), 3);
    }
}
