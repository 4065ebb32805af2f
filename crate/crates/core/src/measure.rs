//! Husimi Q function and the marginal phase distribution `S(φ)`.
//!
//! Integrating the Husimi function over the polar angle leaves a
//! trigonometric polynomial in φ whose harmonics are weighted coherences:
//!
//! ```text
//! S(φ) = Σ_{m,m'} e^{-i(m-m')φ} d^S_{m,m'} ρ_{m',m}
//! ```
//!
//! The weights `d^S` depend only on `S` and are tabulated once per spin.

use std::collections::HashMap;
use std::f64::consts::{PI, TAU};
use std::sync::{Arc, OnceLock, RwLock};

use nalgebra::DMatrix;
use num_complex::Complex64;
use statrs::function::factorial::ln_factorial;

use crate::error::Result;
use crate::lindblad::DensityMatrix;
use crate::numeric::golden_section_max;
use crate::spin::{coherent_state, ln_gamma_half, HalfInt, SpinNumber};

/// Grid used to seed the search for `max_φ S(φ)`.
pub const PHASE_GRID_POINTS: usize = 1024;

/// Closed-form θ-integrated Husimi weights `c^S_{m,m'}`, indexed by basis
/// position (`m` descending).
#[derive(Clone, Debug)]
pub struct QCoefficientTable {
    spin: SpinNumber,
    c: DMatrix<f64>,
}

impl QCoefficientTable {
    pub fn new(spin: SpinNumber) -> Self {
        let dim = spin.dim();
        let c = DMatrix::from_fn(dim, dim, |i, j| c_unchecked(spin, spin.m_at(i), spin.m_at(j)));
        QCoefficientTable { spin, c }
    }

    pub fn spin(&self) -> SpinNumber {
        self.spin
    }

    pub fn c_matrix(&self) -> &DMatrix<f64> {
        &self.c
    }

    pub fn c(&self, m: HalfInt, m_prime: HalfInt) -> Result<f64> {
        self.spin.check(m)?;
        self.spin.check(m_prime)?;
        Ok(self.c_at(self.spin.index(m).unwrap(), self.spin.index(m_prime).unwrap()))
    }

    pub fn d(&self, m: HalfInt, m_prime: HalfInt) -> Result<f64> {
        self.spin.check(m)?;
        self.spin.check(m_prime)?;
        Ok(self.d_at(self.spin.index(m).unwrap(), self.spin.index(m_prime).unwrap()))
    }

    pub(crate) fn c_at(&self, i: usize, j: usize) -> f64 {
        self.c[(i, j)]
    }

    pub(crate) fn d_at(&self, i: usize, j: usize) -> f64 {
        if i == j {
            0.0
        } else {
            self.c[(i, j)]
        }
    }
}

/// Shared, write-once table per spin.
pub fn coefficient_table(spin: SpinNumber) -> Arc<QCoefficientTable> {
    static CACHE: OnceLock<RwLock<HashMap<u32, Arc<QCoefficientTable>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(table) = cache.read().expect("coefficient cache poisoned").get(&spin.two_s()) {
        return Arc::clone(table);
    }
    let mut guard = cache.write().expect("coefficient cache poisoned");
    Arc::clone(
        guard
            .entry(spin.two_s())
            .or_insert_with(|| Arc::new(QCoefficientTable::new(spin))),
    )
}

pub fn c_coefficient(spin: SpinNumber, m: HalfInt, m_prime: HalfInt) -> Result<f64> {
    spin.check(m)?;
    spin.check(m_prime)?;
    Ok(c_unchecked(spin, m, m_prime))
}

pub fn d_coefficient(spin: SpinNumber, m: HalfInt, m_prime: HalfInt) -> Result<f64> {
    let c = c_coefficient(spin, m, m_prime)?;
    Ok(if m == m_prime { 0.0 } else { c })
}

fn c_unchecked(spin: SpinNumber, m: HalfInt, m_prime: HalfInt) -> f64 {
    let two_s = spin.two_s() as i32;
    // (m + m')/2 in twice units; m and m' share parity so this is exact.
    let half_sum = (m.twice() + m_prime.twice()) / 2;
    // Terms are summed in a canonical order so that the symmetries
    // (m,m') -> (m',m) and (m,m') -> (-m',-m) hold bit for bit.
    let mut gammas = [
        ln_gamma_half(2 + two_s - half_sum),
        ln_gamma_half(2 + two_s + half_sum),
    ];
    gammas.sort_by(f64::total_cmp);
    let mut facts = [
        ln_factorial(((two_s - m.twice()) / 2) as u64),
        ln_factorial(((two_s + m.twice()) / 2) as u64),
        ln_factorial(((two_s - m_prime.twice()) / 2) as u64),
        ln_factorial(((two_s + m_prime.twice()) / 2) as u64),
    ];
    facts.sort_by(f64::total_cmp);
    let ln_ratio = 2f64.ln() + ln_factorial(two_s as u64) + (gammas[0] + gammas[1])
        - 0.5 * (((facts[0] + facts[1]) + facts[2]) + facts[3])
        - ln_factorial(two_s as u64 + 1);
    (f64::from(two_s) + 1.0) / (4.0 * PI) * ln_ratio.exp()
}

/// `Q(θ,φ) = (2S+1)/(4π) <θ,φ|ρ|θ,φ>`.
pub fn husimi_q(rho: &DensityMatrix, theta: f64, phi: f64) -> f64 {
    let spin = rho.spin();
    let psi = coherent_state(spin, theta, phi);
    let overlap = (psi.adjoint() * rho.matrix() * &psi)[(0, 0)];
    (f64::from(spin.two_s()) + 1.0) / (4.0 * PI) * overlap.re
}

/// `S(φ) = Σ_k a_k e^{-ikφ}` with wavenumbers `k = m - m'` in `[-2S, 2S]`.
#[derive(Clone, Debug, PartialEq)]
pub struct PhasePolynomial {
    spin: SpinNumber,
    amplitudes: Vec<Complex64>,
}

/// Location and height of the global maximum of `S(φ)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseMaximum {
    pub phi_star: f64,
    pub value: f64,
}

impl PhasePolynomial {
    pub fn spin(&self) -> SpinNumber {
        self.spin
    }

    pub fn degree(&self) -> i32 {
        self.spin.two_s() as i32
    }

    /// Amplitude of `e^{-ikφ}`; zero outside `[-2S, 2S]`.
    pub fn amplitude(&self, k: i32) -> Complex64 {
        let offset = k + self.degree();
        if (0..self.amplitudes.len() as i32).contains(&offset) {
            self.amplitudes[offset as usize]
        } else {
            Complex64::from(0.0)
        }
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn evaluate(&self, phi: f64) -> f64 {
        (-self.degree()..=self.degree())
            .map(|k| (self.amplitude(k) * Complex64::from_polar(1.0, -f64::from(k) * phi)).re)
            .sum()
    }

    pub fn is_zero(&self) -> bool {
        self.amplitudes.iter().all(|a| a.norm() == 0.0)
    }

    /// Global maximum over φ: a uniform scan seeds golden-section refinement
    /// of every grid-local maximum.
    pub fn maximum(&self) -> PhaseMaximum {
        if self.is_zero() {
            return PhaseMaximum {
                phi_star: 0.0,
                value: 0.0,
            };
        }
        let n = PHASE_GRID_POINTS;
        let step = TAU / n as f64;
        let samples: Vec<f64> = (0..n).map(|i| self.evaluate(i as f64 * step)).collect();
        let mut peaks: Vec<usize> = (0..n)
            .filter(|&i| {
                let prev = samples[(i + n - 1) % n];
                let next = samples[(i + 1) % n];
                samples[i] >= prev && samples[i] >= next
            })
            .collect();
        peaks.sort_by(|&a, &b| samples[b].total_cmp(&samples[a]));
        // At most 2S genuine maxima; extra entries only come from plateaus.
        peaks.truncate(2 * self.degree() as usize + 2);

        let mut best = PhaseMaximum {
            phi_star: 0.0,
            value: f64::NEG_INFINITY,
        };
        for i in peaks {
            let centre = i as f64 * step;
            let (phi, value) =
                golden_section_max(|x| self.evaluate(x), centre - step, centre + step, 1e-12);
            let (phi, value) = if value >= samples[i] { (phi, value) } else { (centre, samples[i]) };
            if value > best.value {
                best = PhaseMaximum {
                    phi_star: phi.rem_euclid(TAU),
                    value,
                };
            }
        }
        best
    }
}

/// Harmonic decomposition of `S(φ)` for the state `rho`.
pub fn phase_distribution(rho: &DensityMatrix) -> PhasePolynomial {
    let spin = rho.spin();
    let table = coefficient_table(spin);
    let degree = spin.two_s() as i32;
    let mut amplitudes = vec![Complex64::from(0.0); 2 * degree as usize + 1];
    let matrix = rho.matrix();
    for (i, m) in spin.m_values().enumerate() {
        for (j, m_prime) in spin.m_values().enumerate() {
            if i == j {
                continue;
            }
            let k = (m.twice() - m_prime.twice()) / 2;
            // ρ_{m',m} sits at row j, column i.
            amplitudes[(k + degree) as usize] += matrix[(j, i)] * table.d_at(i, j);
        }
    }
    PhasePolynomial { spin, amplitudes }
}

pub fn max_phase(rho: &DensityMatrix) -> PhaseMaximum {
    phase_distribution(rho).maximum()
}
