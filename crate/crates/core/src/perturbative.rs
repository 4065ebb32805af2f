//! Leading-order response of the limit cycle to a weak signal.
//!
//! To first order in ε the signal only builds up coherences between adjacent
//! levels. Each one is driven by the population difference of the two levels
//! it connects, damped by the jump operators acting on both, and fed by its
//! neighbours `ρ_{n∓1,n-1∓1}` through the gain and loss channels:
//!
//! ```text
//! D_n c_n = G_n c_{n-1} + L_n c_{n+1} + A⁻_n (ρ_{n,n} - ρ_{n-1,n-1})
//! ```
//!
//! Dropping the feed terms gives the decoupled closed form, which is exact
//! whenever `G_n c_{n-1}` and `L_n c_{n+1}` vanish (pure limit cycles with the
//! shift on the populated level).
//!
//! Synchronization blockade is the vanishing of the resulting first harmonic
//! of `S(φ)`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lindblad::{limit_cycle, DensityMatrix, ModelSpec};
use crate::measure::coefficient_table;
use crate::numeric::bisect;
use crate::spin::{ladder_or_zero, HalfInt, Ladder, SpinNumber};

/// Amplitudes at or below this fraction of the curve maximum are treated as
/// exact zeros of the first harmonic.
const ZERO_AMPLITUDE_RTOL: f64 = 1e-12;

/// Relative bracket width at which root refinement stops.
const ROOT_REL_WIDTH: f64 = 1e-13;

/// Adjacent coherences `ρ_{n,n-1}/ε` for `n = -S+1, ..., S`.
#[derive(Clone, Debug, PartialEq)]
pub struct FirstOrderCoherences {
    spin: SpinNumber,
    entries: Vec<Complex64>,
}

impl FirstOrderCoherences {
    /// Solves the coupled first-order equations around the limit cycle `lc`.
    pub fn compute(spec: &ModelSpec, lc: &DensityMatrix) -> Result<Self> {
        let spin = spec.spin;
        let labels: Vec<HalfInt> = lower_labels(spin).collect();
        let dim = labels.len();
        let mut system = DMatrix::<Complex64>::zeros(dim, dim);
        let mut rhs = DVector::<Complex64>::zeros(dim);
        for (i, &n) in labels.iter().enumerate() {
            let below = n.step(-1);
            let c = Coefficients::new(spec, n, below);
            system[(i, i)] = c.denominator;
            if i > 0 {
                system[(i, i - 1)] = -Complex64::from(c.gain_feed);
            }
            if i + 1 < dim {
                system[(i, i + 1)] = -Complex64::from(c.loss_feed);
            }
            let drive = ladder_or_zero(spin, n, Ladder::Lower) * (lc.population(n) - lc.population(below));
            rhs[i] = Complex64::from(drive);
        }
        let lu = system.lu();
        let entries = match lu.solve(&rhs) {
            Some(x) if x.iter().all(|v| v.re.is_finite() && v.im.is_finite()) => x.iter().copied().collect(),
            _ => {
                let worst = labels
                    .iter()
                    .copied()
                    .find(|&n| Coefficients::new(spec, n, n.step(-1)).denominator.norm() == 0.0)
                    .unwrap_or(labels[0]);
                return Err(Error::Singular { n: worst });
            }
        };
        Ok(FirstOrderCoherences { spin, entries })
    }

    pub fn spin(&self) -> SpinNumber {
        self.spin
    }

    /// `ρ_{n,n-1}/ε`, or `None` when `n` is not in `-S+1..=S`.
    pub fn get(&self, n: HalfInt) -> Option<Complex64> {
        let offset = (n.twice() + self.spin.two_s() as i32 - 2) / 2;
        if self.spin.contains(n) && n.twice() > -(self.spin.two_s() as i32) {
            self.entries.get(offset as usize).copied()
        } else {
            None
        }
    }

    /// `(n, ρ_{n,n-1}/ε)` in ascending `n`.
    pub fn iter(&self) -> impl Iterator<Item = (HalfInt, Complex64)> + '_ {
        lower_labels(self.spin).zip(self.entries.iter().copied())
    }

    pub fn max_norm(&self) -> f64 {
        self.entries.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }
}

fn lower_labels(spin: SpinNumber) -> impl Iterator<Item = HalfInt> {
    let two_s = spin.two_s() as i32;
    (0..two_s).map(move |i| HalfInt::from_twice(-two_s + 2 + 2 * i))
}

fn check_upper_label(s: SpinNumber, n: HalfInt) -> Result<()> {
    s.check(n)?;
    if n.twice() == -(s.two_s() as i32) {
        return Err(Error::OutOfRange {
            s: s.as_half_int(),
            m: n,
        });
    }
    Ok(())
}

/// Coefficients of the steady-state equation for `ρ_{n,m}`:
/// `D ρ_{n,m} = G ρ_{n-1,m-1} + L ρ_{n+1,m+1} + ε(...)`.
struct Coefficients {
    denominator: Complex64,
    gain_feed: f64,
    loss_feed: f64,
}

impl Coefficients {
    fn new(spec: &ModelSpec, n: HalfInt, m: HalfInt) -> Self {
        let s = spec.spin;
        let shift = spec.shift.value();
        let lever = |x: HalfInt| x.value() - shift;
        let am = |x: HalfInt| ladder_or_zero(s, x, Ladder::Lower);
        let ap = |x: HalfInt| ladder_or_zero(s, x, Ladder::Raise);
        let (gg, gd) = (spec.gamma_g, spec.gamma_d);
        let damping = gd * (lever(m).powi(2) * am(m).powi(2) + lever(n).powi(2) * am(n).powi(2))
            + gg * (lever(m).powi(2) * ap(m).powi(2) + lever(n).powi(2) * ap(n).powi(2));
        let (n_dn, n_up, m_dn, m_up) = (n.step(-1), n.step(1), m.step(-1), m.step(1));
        Coefficients {
            denominator: Complex64::new(damping, 2.0 * (n.value() - m.value()) * spec.delta),
            gain_feed: 2.0 * gg * lever(n_dn) * lever(m_dn) * am(m) * ap(n_dn),
            loss_feed: 2.0 * gd * lever(n_up) * lever(m_up) * ap(m) * am(n_up),
        }
    }
}

/// `ρ_{n,n-1}/ε` to leading order, from the full coupled first-order solution
/// around the undriven limit cycle `lc`.
pub fn first_order_coherence(spec: &ModelSpec, lc: &DensityMatrix, n: HalfInt) -> Result<Complex64> {
    check_upper_label(spec.spin, n)?;
    let all = FirstOrderCoherences::compute(spec, lc)?;
    Ok(all.get(n).expect("label validated"))
}

/// `ρ_{n,n-1}/ε` with the feed from neighbouring coherences dropped:
///
/// ```text
/// A⁻_n (ρ_{n,n} - ρ_{n-1,n-1}) / (2iΔ + γ_d[(n-M-1)²(A⁻_{n-1})² + (n-M)²(A⁻_n)²]
///                                      + γ_g[(n-M-1)²(A⁺_{n-1})² + (n-M)²(A⁺_n)²])
/// ```
pub fn decoupled_coherence(spec: &ModelSpec, lc: &DensityMatrix, n: HalfInt) -> Result<Complex64> {
    let s = spec.spin;
    check_upper_label(s, n)?;
    let below = n.step(-1);
    let denominator = Coefficients::new(spec, n, below).denominator;
    if denominator.norm() == 0.0 {
        return Err(Error::Singular { n });
    }
    let drive = ladder_or_zero(s, n, Ladder::Lower) * (lc.population(n) - lc.population(below));
    Ok(Complex64::from(drive) / denominator)
}

/// `|ρ_{n,m} - RHS|` of the exact steady-state recursion for one matrix
/// element, obtained by projecting the master equation on `<n|·|m>`.
///
/// Where the recursion's own prefactor vanishes (a trapped population) the
/// equation degenerates to `0 = RHS numerator`, and that numerator's modulus
/// is returned instead.
pub fn recursion_residual(spec: &ModelSpec, rho: &DensityMatrix, n: HalfInt, m: HalfInt) -> Result<f64> {
    let s = spec.spin;
    s.check(n)?;
    s.check(m)?;
    let am = |x: HalfInt| ladder_or_zero(s, x, Ladder::Lower);
    let ap = |x: HalfInt| ladder_or_zero(s, x, Ladder::Raise);
    let el = |a: HalfInt, b: HalfInt| rho.element(a, b);
    let c = Coefficients::new(spec, n, m);

    let (n_dn, n_up, m_dn, m_up) = (n.step(-1), n.step(1), m.step(-1), m.step(1));
    let numerator = el(n_dn, m_dn) * c.gain_feed
        + el(n_up, m_up) * c.loss_feed
        + (el(n, m_up) * am(m_up) + el(n_up, m) * am(n_up)
            - el(n_dn, m) * ap(n_dn)
            - el(n, m_dn) * ap(m_dn))
            * spec.epsilon;

    let scale = spec.gamma_g + spec.gamma_d;
    if c.denominator.norm() <= 1e-14 * scale {
        Ok(numerator.norm())
    } else {
        Ok((el(n, m) - numerator / c.denominator).norm())
    }
}

/// Largest recursion residual over all matrix elements.
pub fn max_recursion_residual(spec: &ModelSpec, rho: &DensityMatrix) -> Result<f64> {
    let s = spec.spin;
    let mut worst: f64 = 0.0;
    for n in s.m_values() {
        for m in s.m_values() {
            worst = worst.max(recursion_residual(spec, rho, n, m)?);
        }
    }
    Ok(worst)
}

/// First-harmonic amplitude of `S(φ)` per unit ε,
/// `Σ_n d^S_{n-1,n} ρ_{n,n-1}/ε`, at `γ_g/γ_d = ratio` with `γ_d = 1`.
///
/// This is the coefficient of `e^{iφ}` (wavenumber `k = -1`); its conjugate
/// multiplies `e^{-iφ}`.
pub fn first_order_amplitude(spin: SpinNumber, shift: HalfInt, delta: f64, ratio: f64) -> Result<Complex64> {
    let spec = ModelSpec::new(spin, shift).with_ratio(ratio).with_delta(delta);
    spec.validate()?;
    let lc = limit_cycle(&spec)?;
    let coherences = FirstOrderCoherences::compute(&spec, &lc)?;
    let table = coefficient_table(spin);
    Ok(coherences
        .iter()
        .map(|(n, rho)| {
            let weight = table.d(n.step(-1), n).expect("n-1 on ladder");
            rho * weight
        })
        .sum())
}

/// Ratios `γ_g/γ_d` at which the first-order phase amplitude vanishes.
#[derive(Clone, Debug)]
pub struct BlockadeReport {
    pub spin: SpinNumber,
    pub shift: HalfInt,
    pub delta: f64,
    /// Refined roots, ascending. Only searched for at resonance.
    pub roots: Vec<f64>,
    /// Grid-local minima of `|C(r)|`; the only output off resonance.
    pub minima: Vec<f64>,
    /// `(r, C(r))` on the input grid.
    pub amplitude_curve: Vec<(f64, Complex64)>,
}

impl BlockadeReport {
    pub fn max_amplitude(&self) -> f64 {
        self.amplitude_curve.iter().map(|(_, c)| c.norm()).fold(0.0, f64::max)
    }
}

/// Scans `grid` for sign changes of the (real, at Δ = 0) first-order
/// amplitude and refines each by bisection.
///
/// `grid` must be ascending and cover at least `[1e-3, 1e3]`.
pub fn blockade_ratios(spin: SpinNumber, shift: HalfInt, delta: f64, grid: &[f64]) -> Result<BlockadeReport> {
    let (first, last) = match (grid.first(), grid.last()) {
        (Some(&a), Some(&b)) if grid.len() >= 2 => (a, b),
        _ => {
            return Err(Error::Domain {
                name: "grid",
                value: grid.len() as f64,
                reason: "needs at least two ratios",
            })
        }
    };
    if !(first > 0.0 && first <= 1e-3 && last >= 1e3) || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Domain {
            name: "grid",
            value: first,
            reason: "must be ascending, positive and span [1e-3, 1e3]",
        });
    }

    let curve = grid
        .iter()
        .map(|&r| first_order_amplitude(spin, shift, delta, r).map(|c| (r, c)))
        .collect::<Result<Vec<_>>>()?;
    let max_abs = curve.iter().map(|(_, c)| c.norm()).fold(0.0, f64::max);
    let is_zero = |c: Complex64| c.norm() <= ZERO_AMPLITUDE_RTOL * max_abs;

    let mut roots = Vec::new();
    let mut minima = Vec::new();
    if delta == 0.0 {
        let mut i = 0;
        while i < curve.len() {
            let (r, c) = curve[i];
            if is_zero(c) {
                roots.push(r);
                i += 1;
                continue;
            }
            if let Some(&(r_next, c_next)) = curve.get(i + 1) {
                if !is_zero(c_next) && (c.re > 0.0) != (c_next.re > 0.0) {
                    let mut failure = None;
                    let root = bisect(
                        |x| match first_order_amplitude(spin, shift, delta, x) {
                            Ok(v) => v.re,
                            Err(e) => {
                                failure.get_or_insert(e);
                                0.0
                            }
                        },
                        r,
                        r_next,
                        ROOT_REL_WIDTH,
                    );
                    if let Some(e) = failure {
                        return Err(e);
                    }
                    roots.push(root);
                }
            }
            i += 1;
        }
    } else {
        for w in curve.windows(3) {
            let (a, b, c) = (w[0].1.norm(), w[1].1.norm(), w[2].1.norm());
            if b <= a && b <= c {
                minima.push(w[1].0);
            }
        }
    }

    Ok(BlockadeReport {
        spin,
        shift,
        delta,
        roots,
        minima,
        amplitude_curve: curve,
    })
}
