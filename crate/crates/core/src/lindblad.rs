//! Rotating-frame master equation for a driven spin limit cycle and its
//! steady state.
//!
//! Superoperators act on column-stacked density matrices, which is exactly
//! nalgebra's column-major storage: `vec(A X B) = (Bᵀ ⊗ A) vec(X)`.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spin::{build_operators, ladder_or_zero, HalfInt, Ladder, SpinNumber};

/// Singular values below this fraction of the largest count as zero.
pub const NULL_SPACE_RTOL: f64 = 1e-8;

/// Largest coherence tolerated in an undriven steady state.
pub const LIMIT_CYCLE_DIAGONAL_TOL: f64 = 1e-12;

/// Parameters of the driven, dissipatively stabilized spin.
///
/// Rates are in units where only ratios matter; [`ModelSpec::new`] fixes
/// `γ_d = γ_g = 1`, `Δ = ε = 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelSpec {
    pub spin: SpinNumber,
    /// Detuning Δ between the natural frequency and the signal.
    pub delta: f64,
    /// Signal amplitude ε.
    pub epsilon: f64,
    pub gamma_g: f64,
    pub gamma_d: f64,
    /// Shift M of the jump operators `S_±(S_z - M)`; zero is the
    /// gain-loss-symmetric scheme.
    pub shift: HalfInt,
}

impl ModelSpec {
    pub fn new(spin: SpinNumber, shift: HalfInt) -> Self {
        ModelSpec {
            spin,
            delta: 0.0,
            epsilon: 0.0,
            gamma_g: 1.0,
            gamma_d: 1.0,
            shift,
        }
    }

    /// Rates with `γ_d = 1` and `γ_g = ratio`.
    pub fn with_ratio(self, ratio: f64) -> Self {
        self.with_rates(ratio, 1.0)
    }

    pub fn with_rates(mut self, gamma_g: f64, gamma_d: f64) -> Self {
        self.gamma_g = gamma_g;
        self.gamma_d = gamma_d;
        self
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = delta;
        self
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn ratio(&self) -> f64 {
        self.gamma_g / self.gamma_d
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma_g > 0.0 && self.gamma_g.is_finite()) {
            return Err(Error::Domain {
                name: "gamma_g",
                value: self.gamma_g,
                reason: "must be positive and finite",
            });
        }
        if !(self.gamma_d > 0.0 && self.gamma_d.is_finite()) {
            return Err(Error::Domain {
                name: "gamma_d",
                value: self.gamma_d,
                reason: "must be positive and finite",
            });
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::Domain {
                name: "epsilon",
                value: self.epsilon,
                reason: "must be nonnegative and finite",
            });
        }
        if !self.delta.is_finite() {
            return Err(Error::Domain {
                name: "delta",
                value: self.delta,
                reason: "must be finite",
            });
        }
        Ok(())
    }

    /// True when `|S,M>` is a non-extremal level of the ladder, so the
    /// undriven steady state is the pure state `|S,M>` for any rates.
    pub fn has_pure_limit_cycle(&self) -> bool {
        self.spin.contains(self.shift)
            && self.shift.twice().abs() < self.spin.two_s() as i32
    }

    /// True when `M` is not congruent to `S`: no level is trapped and the
    /// limit cycle depends on `γ_g/γ_d`.
    pub fn is_rate_dependent(&self) -> bool {
        (self.spin.two_s() as i32 - self.shift.twice()) % 2 != 0
    }

    /// `M` is congruent to `S` but sits at or beyond the ends of the ladder.
    pub fn targets_extremal_state(&self) -> bool {
        !self.is_rate_dependent() && !self.has_pure_limit_cycle()
    }
}

/// `Ĥ = Δ Ŝ_z + ε Ŝ_y`.
pub fn hamiltonian(spec: &ModelSpec) -> DMatrix<Complex64> {
    let ops = build_operators(spec.spin);
    ops.sz * Complex64::from(spec.delta) + ops.sy * Complex64::from(spec.epsilon)
}

/// Gain and loss jump operators `Ŝ_+(Ŝ_z - M)` and `Ŝ_-(Ŝ_z - M)`.
pub fn jump_operators(spec: &ModelSpec) -> (DMatrix<Complex64>, DMatrix<Complex64>) {
    let s = spec.spin;
    let dim = s.dim();
    let mut gain = DMatrix::zeros(dim, dim);
    let mut damp = DMatrix::zeros(dim, dim);
    let shift = spec.shift.value();
    for (i, m) in s.m_values().enumerate() {
        let lever = m.value() - shift;
        if i > 0 {
            gain[(i - 1, i)] = Complex64::from(ladder_or_zero(s, m, Ladder::Raise) * lever);
        }
        if i + 1 < dim {
            damp[(i + 1, i)] = Complex64::from(ladder_or_zero(s, m, Ladder::Lower) * lever);
        }
    }
    (gain, damp)
}

/// `𝒟[Ô]ρ = ÔρÔ† - ½{Ô†Ô, ρ}` evaluated directly on a matrix.
pub fn dissipator(op: &DMatrix<Complex64>, rho: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let op_dag = op.adjoint();
    let number = &op_dag * op;
    op * rho * &op_dag - (&number * rho + rho * &number) * Complex64::from(0.5)
}

/// Right-hand side of the master equation, evaluated without superoperators.
pub fn master_equation_rhs(spec: &ModelSpec, rho: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let h = hamiltonian(spec);
    let (gain, damp) = jump_operators(spec);
    (&h * rho - rho * &h) * Complex64::new(0.0, -1.0)
        + dissipator(&gain, rho) * Complex64::from(spec.gamma_g)
        + dissipator(&damp, rho) * Complex64::from(spec.gamma_d)
}

#[derive(Clone, Debug)]
pub struct Liouvillian {
    pub spin: SpinNumber,
    pub matrix: DMatrix<Complex64>,
}

impl Liouvillian {
    pub fn apply(&self, rho: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let dim = self.spin.dim();
        let v = &self.matrix * DMatrix::from_column_slice(dim * dim, 1, rho.as_slice());
        DMatrix::from_column_slice(dim, dim, v.as_slice())
    }

    /// Largest |d tr(ρ)/dt| produced by any basis matrix; zero for a
    /// trace-preserving generator.
    pub fn trace_residual(&self) -> f64 {
        let dim = self.spin.dim();
        (0..self.matrix.ncols())
            .map(|col| {
                (0..dim)
                    .map(|i| self.matrix[(i * (dim + 1), col)])
                    .sum::<Complex64>()
                    .norm()
            })
            .fold(0.0, f64::max)
    }
}

fn lindblad_term(op: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let dim = op.nrows();
    let id = DMatrix::<Complex64>::identity(dim, dim);
    let number = op.adjoint() * op;
    op.conjugate().kronecker(op)
        - (id.kronecker(&number) + number.transpose().kronecker(&id)) * Complex64::from(0.5)
}

pub fn liouvillian(spec: &ModelSpec) -> Liouvillian {
    let dim = spec.spin.dim();
    let id = DMatrix::<Complex64>::identity(dim, dim);
    let h = hamiltonian(spec);
    let (gain, damp) = jump_operators(spec);
    let coherent = (id.kronecker(&h) - h.transpose().kronecker(&id)) * Complex64::new(0.0, -1.0);
    let matrix = coherent
        + lindblad_term(&gain) * Complex64::from(spec.gamma_g)
        + lindblad_term(&damp) * Complex64::from(spec.gamma_d);
    Liouvillian {
        spin: spec.spin,
        matrix,
    }
}

/// Hermitian, unit-trace density matrix in the descending `|S,m>` basis.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    spin: SpinNumber,
    rho: DMatrix<Complex64>,
}

impl DensityMatrix {
    /// Wraps a matrix without checking the density-matrix invariants; see
    /// [`DensityMatrix::validate`].
    pub fn from_matrix(spin: SpinNumber, rho: DMatrix<Complex64>) -> Self {
        assert_eq!(rho.shape(), (spin.dim(), spin.dim()), "density matrix shape");
        DensityMatrix { spin, rho }
    }

    pub fn diagonal(spin: SpinNumber, populations: &[f64]) -> Self {
        assert_eq!(populations.len(), spin.dim());
        let rho = DMatrix::from_fn(spin.dim(), spin.dim(), |i, j| {
            if i == j {
                Complex64::from(populations[i])
            } else {
                Complex64::from(0.0)
            }
        });
        DensityMatrix { spin, rho }
    }

    pub fn pure_level(spin: SpinNumber, m: HalfInt) -> Result<Self> {
        let idx = spin.index(m).ok_or(Error::OutOfRange {
            s: spin.as_half_int(),
            m,
        })?;
        let mut pops = vec![0.0; spin.dim()];
        pops[idx] = 1.0;
        Ok(Self::diagonal(spin, &pops))
    }

    pub fn maximally_mixed(spin: SpinNumber) -> Self {
        Self::diagonal(spin, &vec![1.0 / spin.dim() as f64; spin.dim()])
    }

    pub fn spin(&self) -> SpinNumber {
        self.spin
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.rho
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.rho
    }

    /// `ρ_{n,m} = <S,n|ρ|S,m>`; zero when either label is off the ladder.
    pub fn element(&self, n: HalfInt, m: HalfInt) -> Complex64 {
        match (self.spin.index(n), self.spin.index(m)) {
            (Some(i), Some(j)) => self.rho[(i, j)],
            _ => Complex64::from(0.0),
        }
    }

    pub fn population(&self, m: HalfInt) -> f64 {
        self.element(m, m).re
    }

    /// Populations `P(m)` in basis order.
    pub fn populations(&self) -> Vec<f64> {
        self.rho.diagonal().iter().map(|z| z.re).collect()
    }

    pub fn trace(&self) -> Complex64 {
        self.rho.trace()
    }

    /// Hilbert–Schmidt norm `sqrt(tr(A†A))`.
    pub fn hs_norm(&self) -> f64 {
        self.rho.norm()
    }

    pub fn max_coherence(&self) -> f64 {
        let dim = self.spin.dim();
        (0..dim)
            .flat_map(|i| (0..dim).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| self.rho[(i, j)].norm())
            .fold(0.0, f64::max)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        SymmetricEigen::new(self.rho.clone())
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    /// Checks Hermiticity (1e-12), unit trace (1e-12) and positivity
    /// (smallest eigenvalue >= -1e-10).
    pub fn validate(&self) -> Result<()> {
        let skew = (&self.rho - self.rho.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if skew > 1e-12 {
            return Err(Error::Domain {
                name: "rho",
                value: skew,
                reason: "not Hermitian",
            });
        }
        let trace = self.trace();
        if (trace - Complex64::from(1.0)).norm() > 1e-12 {
            return Err(Error::Domain {
                name: "trace",
                value: trace.re,
                reason: "not unit trace",
            });
        }
        let min_eig = self.min_eigenvalue();
        if min_eig < -1e-10 {
            return Err(Error::Domain {
                name: "min_eigenvalue",
                value: min_eig,
                reason: "not positive semidefinite",
            });
        }
        Ok(())
    }
}

/// Unique steady state from the null vector of the Liouvillian.
pub fn steady_state(spec: &ModelSpec) -> Result<DensityMatrix> {
    spec.validate()?;
    null_state(&liouvillian(spec))
}

/// Normalized density matrix spanning the one-dimensional null space of
/// `generator`.
pub fn null_state(generator: &Liouvillian) -> Result<DensityMatrix> {
    let dim = generator.spin.dim();
    let svd = generator.matrix.clone().svd(false, true);
    let sigma = &svd.singular_values;
    let n = sigma.len();
    let threshold = NULL_SPACE_RTOL * sigma[0];
    if sigma[n - 2] <= threshold {
        let dimension = sigma.iter().filter(|&&x| x <= threshold).count();
        return Err(Error::DegenerateNullSpace { dimension });
    }
    let v_t = svd.v_t.expect("right singular vectors requested");
    // Row of Vᴴ is the conjugate of the null vector.
    let null = v_t.row(n - 1).map(|z| z.conj());
    let mut rho = DMatrix::from_iterator(dim, dim, null.iter().copied());

    let trace = rho.trace();
    if trace.norm() < 1e-12 * rho.norm() {
        return Err(Error::NonNormalizable { trace: trace.norm() });
    }
    rho /= trace;
    rho = (&rho + rho.adjoint()) * Complex64::from(0.5);
    let trace = rho.trace();
    rho /= trace;
    Ok(DensityMatrix::from_matrix(generator.spin, rho))
}

/// Undriven (`ε = 0`) steady state; must be diagonal.
pub fn limit_cycle(spec: &ModelSpec) -> Result<DensityMatrix> {
    let rho = steady_state(&spec.with_epsilon(0.0))?;
    let max_offdiag = rho.max_coherence();
    if max_offdiag > LIMIT_CYCLE_DIAGONAL_TOL {
        return Err(Error::NonDiagonalLimitCycle { max_offdiag });
    }
    let pops = rho.populations();
    Ok(DensityMatrix::diagonal(spec.spin, &pops))
}
