//! Spin-S angular momentum algebra in the `|S, m>` basis.
//!
//! Half-integers are carried as twice their value so that index arithmetic
//! and congruence tests stay exact. The basis is always ordered with `m`
//! descending, `(S, S-1, ..., -S)`, so basis index 0 is the north pole.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use statrs::function::factorial::ln_factorial;

use crate::error::{Error, Result};

/// A half-integer stored as twice its value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct HalfInt(i32);

impl HalfInt {
    pub const ZERO: HalfInt = HalfInt(0);

    pub const fn from_twice(twice: i32) -> Self {
        HalfInt(twice)
    }

    pub const fn from_int(value: i32) -> Self {
        HalfInt(2 * value)
    }

    pub const fn twice(self) -> i32 {
        self.0
    }

    pub fn value(self) -> f64 {
        f64::from(self.0) / 2.0
    }

    pub const fn is_integer(self) -> bool {
        self.0 % 2 == 0
    }

    /// Shift by an integer number of ladder steps.
    pub const fn step(self, steps: i32) -> Self {
        HalfInt(self.0 + 2 * steps)
    }

    pub const fn neg(self) -> Self {
        HalfInt(-self.0)
    }
}

impl fmt::Display for HalfInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_integer() {
            write!(f, "{}", self.0 / 2)
        } else {
            write!(f, "{}/2", self.0)
        }
    }
}

/// Spin quantum number `S >= 1`, stored as `2S`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct SpinNumber {
    two_s: u32,
}

impl SpinNumber {
    pub fn new(two_s: u32) -> Result<Self> {
        if two_s < 2 {
            return Err(Error::InvalidSpin { two_s });
        }
        Ok(SpinNumber { two_s })
    }

    pub const fn two_s(self) -> u32 {
        self.two_s
    }

    pub fn value(self) -> f64 {
        f64::from(self.two_s) / 2.0
    }

    pub fn as_half_int(self) -> HalfInt {
        HalfInt(self.two_s as i32)
    }

    pub const fn dim(self) -> usize {
        self.two_s as usize + 1
    }

    pub const fn is_integer(self) -> bool {
        self.two_s.is_multiple_of(2)
    }

    /// `m` lies on this ladder: `|m| <= S` and `m` congruent to `S` mod 1.
    pub fn contains(self, m: HalfInt) -> bool {
        let s = self.two_s as i32;
        m.0.abs() <= s && (s - m.0) % 2 == 0
    }

    pub fn check(self, m: HalfInt) -> Result<()> {
        if self.contains(m) {
            Ok(())
        } else {
            Err(Error::OutOfRange {
                s: self.as_half_int(),
                m,
            })
        }
    }

    /// Basis index of `m` (0 for `m = S`).
    pub fn index(self, m: HalfInt) -> Option<usize> {
        self.contains(m)
            .then(|| ((self.two_s as i32 - m.0) / 2) as usize)
    }

    pub fn m_at(self, index: usize) -> HalfInt {
        debug_assert!(index < self.dim());
        HalfInt(self.two_s as i32 - 2 * index as i32)
    }

    /// `m = S, S-1, ..., -S`.
    pub fn m_values(self) -> impl DoubleEndedIterator<Item = HalfInt> + ExactSizeIterator {
        (0..self.dim()).map(move |i| self.m_at(i))
    }
}

impl TryFrom<u32> for SpinNumber {
    type Error = Error;

    fn try_from(two_s: u32) -> Result<Self> {
        SpinNumber::new(two_s)
    }
}

impl From<SpinNumber> for u32 {
    fn from(s: SpinNumber) -> u32 {
        s.two_s
    }
}

impl fmt::Display for SpinNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.as_half_int().fmt(f)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Ladder {
    Raise,
    Lower,
}

/// `A^±_m = sqrt(S(S+1) - m(m±1))`, the matrix element of `S_±` on `|S,m>`.
pub fn ladder_element(s: SpinNumber, m: HalfInt, direction: Ladder) -> Result<f64> {
    s.check(m)?;
    Ok(ladder_unchecked(s, m, direction))
}

/// Like [`ladder_element`] but returns 0 for `m` off the ladder, which is what
/// the master-equation projections need at the boundaries.
pub(crate) fn ladder_or_zero(s: SpinNumber, m: HalfInt, direction: Ladder) -> f64 {
    if s.contains(m) {
        ladder_unchecked(s, m, direction)
    } else {
        0.0
    }
}

fn ladder_unchecked(s: SpinNumber, m: HalfInt, direction: Ladder) -> f64 {
    // 4(S(S+1) - m(m±1)) in integer arithmetic.
    let two_s = s.two_s as i64;
    let two_m = m.0 as i64;
    let shift = match direction {
        Ladder::Raise => 2,
        Ladder::Lower => -2,
    };
    let four_a2 = two_s * (two_s + 2) - two_m * (two_m + shift);
    (four_a2.max(0) as f64).sqrt() / 2.0
}

#[derive(Clone, Debug)]
pub struct SpinOperators {
    pub sx: DMatrix<Complex64>,
    pub sy: DMatrix<Complex64>,
    pub sz: DMatrix<Complex64>,
    pub s_plus: DMatrix<Complex64>,
    pub s_minus: DMatrix<Complex64>,
}

pub fn build_operators(s: SpinNumber) -> SpinOperators {
    let dim = s.dim();
    let mut sz = DMatrix::zeros(dim, dim);
    let mut s_plus = DMatrix::zeros(dim, dim);
    for (i, m) in s.m_values().enumerate() {
        sz[(i, i)] = Complex64::from(m.value());
        if i > 0 {
            // <m+1| S_+ |m> sits one row above the diagonal.
            s_plus[(i - 1, i)] = Complex64::from(ladder_unchecked(s, m, Ladder::Raise));
        }
    }
    let s_minus = s_plus.adjoint();
    let sx = (&s_plus + &s_minus) * Complex64::from(0.5);
    let sy = (&s_plus - &s_minus) * Complex64::new(0.0, -0.5);
    SpinOperators {
        sx,
        sy,
        sz,
        s_plus,
        s_minus,
    }
}

/// `d^S_{m,S}(θ)` for every `m` in basis order.
pub fn wigner_d_column(s: SpinNumber, theta: f64) -> DVector<f64> {
    let (sin_half, cos_half) = (theta / 2.0).sin_cos();
    let two_s = s.two_s as i32;
    let ln_fact_2s = ln_factorial(two_s as u64);
    DVector::from_iterator(
        s.dim(),
        s.m_values().map(|m| {
            let up = (two_s + m.0) / 2; // S + m
            let down = (two_s - m.0) / 2; // S - m
            let ln_binom =
                0.5 * (ln_fact_2s - ln_factorial(up as u64) - ln_factorial(down as u64));
            ln_binom.exp() * cos_half.powi(up) * sin_half.powi(down)
        }),
    )
}

/// `ln Γ(x)` for `x = twice / 2 > 0`, exact up to table rounding for the
/// integer and half-integer arguments that occur in spin formulas.
pub(crate) fn ln_gamma_half(twice: i32) -> f64 {
    assert!(twice > 0, "ln_gamma_half needs a positive argument");
    if twice % 2 == 0 {
        ln_factorial((twice / 2 - 1) as u64)
    } else {
        // Γ(n + 1/2) = (2n)! √π / (4ⁿ n!)
        let n = ((twice - 1) / 2) as u64;
        ln_factorial(2 * n) - ln_factorial(n) - (n as f64) * 4f64.ln()
            + 0.5 * std::f64::consts::PI.ln()
    }
}

/// Spin-coherent state `|θ,φ> = Σ_m e^{-imφ} d^S_{m,S}(θ) |S,m>`.
pub fn coherent_state(s: SpinNumber, theta: f64, phi: f64) -> DVector<Complex64> {
    let column = wigner_d_column(s, theta);
    DVector::from_iterator(
        s.dim(),
        s.m_values()
            .zip(column.iter())
            .map(|(m, &d)| Complex64::from_polar(d, -m.value() * phi)),
    )
}

#[cfg(test)]
mod tests {
    use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};

    use super::*;

    fn spin(two_s: u32) -> SpinNumber {
        SpinNumber::new(two_s).unwrap()
    }

    fn max_abs(m: &DMatrix<Complex64>) -> f64 {
        m.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn ln_gamma_half_values() {
        assert_eq!(ln_gamma_half(2), 0.0);
        assert!((ln_gamma_half(10) - 24f64.ln()).abs() < 1e-15);
        assert!((ln_gamma_half(1) - 0.5 * PI.ln()).abs() < 1e-15);
        // Γ(7/2) = 15√π/8
        assert!((ln_gamma_half(7).exp() - 15.0 * PI.sqrt() / 8.0).abs() < 1e-14);
    }

    #[test]
    fn spin_half_rejected() {
        assert_eq!(SpinNumber::new(1), Err(Error::InvalidSpin { two_s: 1 }));
        assert!(SpinNumber::new(0).is_err());
    }

    #[test]
    fn basis_is_descending() {
        let s = spin(3);
        let ms: Vec<i32> = s.m_values().map(HalfInt::twice).collect();
        assert_eq!(ms, vec![3, 1, -1, -3]);
        assert_eq!(s.index(HalfInt::from_twice(-1)), Some(2));
        assert_eq!(s.index(HalfInt::from_twice(0)), None);
        assert_eq!(s.index(HalfInt::from_twice(5)), None);
    }

    #[test]
    fn ladder_examples() {
        let one = spin(2);
        assert_eq!(ladder_element(one, HalfInt::from_int(1), Ladder::Raise).unwrap(), 0.0);
        assert!((ladder_element(one, HalfInt::ZERO, Ladder::Raise).unwrap() - SQRT_2).abs() < 1e-15);
        let three_halves = spin(3);
        assert_eq!(
            ladder_element(three_halves, HalfInt::from_twice(1), Ladder::Lower).unwrap(),
            2.0
        );
        assert!(matches!(
            ladder_element(one, HalfInt::from_int(2), Ladder::Lower),
            Err(Error::OutOfRange { .. })
        ));
        assert!(ladder_element(one, HalfInt::from_twice(1), Ladder::Lower).is_err());
    }

    #[test]
    fn ladder_identities() {
        for two_s in 2..=6 {
            let s = spin(two_s);
            for m in s.m_values() {
                // A+_{m-1} = A-_m
                assert_eq!(
                    ladder_or_zero(s, m.step(-1), Ladder::Raise),
                    ladder_or_zero(s, m, Ladder::Lower)
                );
            }
            // A+_{S-m} = A-_{-S+m} for integer steps k = S - m'
            for k in 0..=two_s as i32 {
                let top = HalfInt::from_twice(two_s as i32 - 2 * k);
                assert_eq!(
                    ladder_or_zero(s, top, Ladder::Raise),
                    ladder_or_zero(s, top.neg(), Ladder::Lower)
                );
            }
        }
    }

    #[test]
    fn operators_satisfy_algebra() {
        let i = Complex64::i();
        for two_s in 2..=6 {
            let s = spin(two_s);
            let ops = build_operators(s);
            let comm = |a: &DMatrix<Complex64>, b: &DMatrix<Complex64>| a * b - b * a;
            assert!(max_abs(&(comm(&ops.sx, &ops.sy) - &ops.sz * i)) < 1e-14);
            assert!(max_abs(&(comm(&ops.sy, &ops.sz) - &ops.sx * i)) < 1e-14);
            assert!(max_abs(&(comm(&ops.sz, &ops.sx) - &ops.sy * i)) < 1e-14);
            let casimir = &ops.sx * &ops.sx + &ops.sy * &ops.sy + &ops.sz * &ops.sz;
            let sv = s.value();
            let expected = DMatrix::<Complex64>::identity(s.dim(), s.dim()) * Complex64::from(sv * (sv + 1.0));
            assert!(max_abs(&(casimir - expected)) < 1e-13);
            assert!(max_abs(&(ops.s_plus.adjoint() - &ops.s_minus)) == 0.0);
        }
    }

    #[test]
    fn sz_diagonals() {
        let ops = build_operators(spin(2));
        let diag: Vec<f64> = ops.sz.diagonal().iter().map(|z| z.re).collect();
        assert_eq!(diag, vec![1.0, 0.0, -1.0]);
        let ops = build_operators(spin(3));
        let diag: Vec<f64> = ops.sz.diagonal().iter().map(|z| z.re).collect();
        assert_eq!(diag, vec![1.5, 0.5, -0.5, -1.5]);
    }

    #[test]
    fn wigner_column_examples() {
        let one = spin(2);
        let north = wigner_d_column(one, 0.0);
        assert_eq!(north.as_slice(), &[1.0, 0.0, 0.0]);
        let equator = wigner_d_column(one, PI / 2.0);
        let expected = [0.5, FRAC_1_SQRT_2, 0.5];
        for (a, b) in equator.iter().zip(expected) {
            assert!((a - b).abs() < 1e-14);
        }
        for two_s in 2..=6 {
            let south = wigner_d_column(spin(two_s), PI);
            let last = south.len() - 1;
            assert!((south[last] - 1.0).abs() < 1e-15);
            assert!(south.rows(0, last).iter().all(|x| x.abs() < 1e-15));
        }
    }

    #[test]
    fn coherent_state_equator_phase() {
        let psi = coherent_state(spin(2), PI / 2.0, PI);
        let expected = [
            Complex64::from(-0.5),
            Complex64::from(FRAC_1_SQRT_2),
            Complex64::from(-0.5),
        ];
        for (a, b) in psi.iter().zip(expected) {
            assert!((a - b).norm() < 1e-14);
        }
        // At the pole the state is |S,S> up to the global phase e^{-iSφ}.
        let north = coherent_state(spin(2), 0.0, 1.234);
        assert!((north[0] - Complex64::from_polar(1.0, -1.234)).norm() < 1e-15);
        assert!(north[1].norm() == 0.0 && north[2].norm() == 0.0);
    }

    proptest::proptest! {
        #[test]
        fn wigner_column_unit_norm(two_s in 2u32..=12, theta in 0.0..=PI) {
            let d = wigner_d_column(spin(two_s), theta);
            proptest::prop_assert!((d.norm_squared() - 1.0).abs() < 1e-14);
            proptest::prop_assert!(d.iter().all(|&x| x >= 0.0));
        }

        #[test]
        fn coherent_state_unit_norm(two_s in 2u32..=6, theta in 0.0..=PI, phi in 0.0..2.0 * PI) {
            let psi = coherent_state(spin(two_s), theta, phi);
            proptest::prop_assert!((psi.norm() - 1.0).abs() < 1e-14);
        }
    }
}
