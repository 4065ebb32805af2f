//! Signal strengths that count as "weak".
//!
//! `ε₁ = η·min(γ_g, γ_d)` ties the signal to the slower dissipative channel.
//! `ε₂` is defined implicitly: the signal that deforms the limit cycle by a
//! relative Hilbert–Schmidt distance `η`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lindblad::{limit_cycle, steady_state, DensityMatrix, ModelSpec};
use crate::numeric::illinois;

/// Largest admissible target deformation.
pub const MAX_ETA: f64 = 0.2;

/// Bracket expansion gives up beyond `ε = EPSILON_CEILING·max(γ_g, γ_d)`.
pub const EPSILON_CEILING: f64 = 1e3;

const DEFORMATION_RTOL: f64 = 1e-12;
const EPSILON_RTOL: f64 = 1e-13;
const MONOTONE_SAMPLES: usize = 9;

/// `η·min(γ_g, γ_d)`.
pub fn epsilon1(eta: f64, gamma_g: f64, gamma_d: f64) -> Result<f64> {
    for (name, value) in [("eta", eta), ("gamma_g", gamma_g), ("gamma_d", gamma_d)] {
        if !(value > 0.0 && value.is_finite()) {
            return Err(Error::Domain {
                name,
                value,
                reason: "must be positive and finite",
            });
        }
    }
    Ok(eta * gamma_g.min(gamma_d))
}

/// `‖ρ(ε) − ρ⁰‖ / ‖ρ⁰‖` in the Hilbert–Schmidt norm, with `ρ⁰` the
/// undriven limit cycle of `spec`. The `epsilon` field of `spec` is ignored.
pub fn deformation(spec: &ModelSpec, epsilon: f64) -> Result<f64> {
    let reference = limit_cycle(spec)?;
    Deformation::new(spec, reference).eval(epsilon)
}

struct Deformation {
    spec: ModelSpec,
    reference: DensityMatrix,
    norm: f64,
}

impl Deformation {
    fn new(spec: &ModelSpec, reference: DensityMatrix) -> Self {
        let norm = reference.hs_norm();
        Deformation {
            spec: spec.with_epsilon(0.0),
            reference,
            norm,
        }
    }

    fn eval(&self, epsilon: f64) -> Result<f64> {
        if epsilon == 0.0 {
            return Ok(0.0);
        }
        let rho = steady_state(&self.spec.with_epsilon(epsilon))?;
        Ok((rho.matrix() - self.reference.matrix()).norm() / self.norm)
    }
}

/// Solution of `deformation(ε) = η`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CalibrationResult {
    pub eta: f64,
    pub epsilon: f64,
    pub achieved_deformation: f64,
    /// Deformation evaluations spent, bracketing included.
    pub iterations: usize,
    /// Whether the deformation was increasing at every sample of the final
    /// bracket. When false the smallest sampled crossing was refined.
    pub monotone: bool,
}

/// Signal strength `ε₂` whose steady state sits at relative distance `eta`
/// from the limit cycle.
///
/// Brackets by doubling (or halving) from `ε₁`, then refines with regula
/// falsi.
pub fn epsilon2(spec: &ModelSpec, eta: f64) -> Result<CalibrationResult> {
    if !(eta > 0.0 && eta <= MAX_ETA) {
        return Err(Error::Domain {
            name: "eta",
            value: eta,
            reason: "must lie in (0, 0.2]",
        });
    }
    spec.validate()?;
    let target = Deformation::new(spec, limit_cycle(spec)?);
    let mut evaluations = 0usize;
    let mut eval = |eps: f64| {
        evaluations += 1;
        target.eval(eps)
    };

    let ceiling = EPSILON_CEILING * spec.gamma_g.max(spec.gamma_d);
    let start = epsilon1(eta, spec.gamma_g, spec.gamma_d)?;
    let (mut lo, mut hi) = (start, start);
    let d_start = eval(start)?;
    let (mut d_lo, mut d_hi) = (d_start, d_start);
    if d_start < eta {
        while d_hi < eta {
            lo = hi;
            d_lo = d_hi;
            hi *= 2.0;
            if hi > ceiling {
                return Err(Error::Calibration(format!(
                    "deformation {d_lo:.3e} below eta = {eta} at epsilon = {lo:.3e}; ceiling {ceiling:.3e} reached"
                )));
            }
            d_hi = eval(hi)?;
        }
    } else {
        while d_lo >= eta {
            hi = lo;
            d_hi = d_lo;
            lo *= 0.5;
            if lo < f64::MIN_POSITIVE * 1e10 {
                return Err(Error::Calibration(format!(
                    "deformation stays at or above eta = {eta} as epsilon -> 0"
                )));
            }
            d_lo = eval(lo)?;
        }
    }

    let samples: Vec<(f64, f64)> = {
        let mut out = vec![(lo, d_lo)];
        for i in 1..MONOTONE_SAMPLES - 1 {
            let x = lo + (hi - lo) * i as f64 / (MONOTONE_SAMPLES - 1) as f64;
            out.push((x, eval(x)?));
        }
        out.push((hi, d_hi));
        out
    };
    let monotone = samples.windows(2).all(|w| w[1].1 > w[0].1);
    if !monotone {
        let first = samples
            .iter()
            .position(|&(_, d)| d >= eta)
            .expect("upper end reaches eta");
        (lo, d_lo) = samples[first - 1];
        (hi, d_hi) = samples[first];
    }

    if d_hi == eta {
        return Ok(CalibrationResult {
            eta,
            epsilon: hi,
            achieved_deformation: d_hi,
            iterations: evaluations,
            monotone,
        });
    }
    let root = illinois(
        |eps| eval(eps).map(|d| (d - eta, d)),
        lo,
        hi,
        d_lo - eta,
        d_hi - eta,
        DEFORMATION_RTOL * eta,
        EPSILON_RTOL,
    )?;
    Ok(CalibrationResult {
        eta,
        epsilon: root.x,
        achieved_deformation: root.value,
        iterations: evaluations,
        monotone,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::max_phase;
    use crate::spin::{HalfInt, SpinNumber};

    fn spin(two_s: u32) -> SpinNumber {
        SpinNumber::new(two_s).unwrap()
    }

    #[test]
    fn epsilon1_examples() {
        assert_eq!(epsilon1(0.01, 1.0, 1.0).unwrap(), 0.01);
        assert!((epsilon1(0.01, 0.1, 1.0).unwrap() - 0.001).abs() < 1e-18);
        assert_eq!(epsilon1(0.03, 0.4, 2.5).unwrap(), epsilon1(0.03, 2.5, 0.4).unwrap());
        assert!(epsilon1(0.0, 1.0, 1.0).is_err());
        assert!(epsilon1(0.01, -1.0, 1.0).is_err());
        assert!(epsilon1(0.01, 1.0, f64::NAN).is_err());
    }

    #[test]
    fn deformation_vanishes_without_signal() {
        let spec = ModelSpec::new(spin(3), HalfInt::ZERO).with_ratio(0.2);
        assert_eq!(deformation(&spec, 0.0).unwrap(), 0.0);
        assert!(deformation(&spec, 1e-3).unwrap() > 0.0);
    }

    #[test]
    fn pure_limit_cycle_has_unit_norm() {
        let spec = ModelSpec::new(spin(3), HalfInt::from_twice(-1)).with_ratio(3.0);
        assert!((limit_cycle(&spec).unwrap().hs_norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn spin_one_reaches_target() {
        let spec = ModelSpec::new(spin(2), HalfInt::ZERO);
        let r = epsilon2(&spec, 0.01).unwrap();
        assert!((r.achieved_deformation - 0.01).abs() <= 1e-8);
        assert!((deformation(&spec, r.epsilon).unwrap() - 0.01).abs() <= 1e-8);
        assert!(r.monotone);
        assert!(r.epsilon > 0.0);
    }

    #[test]
    fn residual_small_across_schemes() {
        for (two_s, shift, ratio) in [(3u32, 0, 1e-2), (3, -1, 6.0), (4, 0, 30.0), (5, -3, 0.05), (6, 0, 1.0)] {
            let spec = ModelSpec::new(spin(two_s), HalfInt::from_twice(shift)).with_ratio(ratio);
            let r = epsilon2(&spec, 0.01).unwrap();
            assert!((r.achieved_deformation - 0.01).abs() <= 1e-6 * 0.01, "{r:?}");
        }
    }

    #[test]
    fn small_eta_is_linear() {
        for (two_s, ratio) in [(2u32, 0.3), (3, 1e-2), (4, 5.0)] {
            let spec = ModelSpec::new(spin(two_s), HalfInt::ZERO).with_ratio(ratio);
            for eta in [0.01, 0.005, 0.001] {
                let a = epsilon2(&spec, eta).unwrap().epsilon;
                let b = epsilon2(&spec, 2.0 * eta).unwrap().epsilon;
                let q = b / a;
                assert!((1.9..=2.1).contains(&q), "S={two_s}/2 r={ratio} eta={eta}: {q}");
            }
        }
    }

    #[test]
    fn rescaling_rates_rescales_epsilon() {
        let spec = ModelSpec::new(spin(3), HalfInt::ZERO).with_rates(0.3, 1.1).with_delta(0.2);
        let base = epsilon2(&spec, 0.01).unwrap().epsilon;
        for lambda in [0.25, 4.0, 37.0] {
            let scaled = spec.with_rates(0.3 * lambda, 1.1 * lambda).with_delta(0.2 * lambda);
            let e = epsilon2(&scaled, 0.01).unwrap().epsilon;
            assert!((e / (lambda * base) - 1.0).abs() <= 1e-8, "lambda={lambda}");
        }
    }

    #[test]
    fn eta_out_of_range() {
        let spec = ModelSpec::new(spin(2), HalfInt::ZERO);
        assert!(epsilon2(&spec, 0.0).is_err());
        assert!(epsilon2(&spec, 0.25).is_err());
        assert!(epsilon2(&spec, f64::NAN).is_err());
    }

    fn sync_under(spec: &ModelSpec, eps: f64, eta: f64) -> f64 {
        max_phase(&steady_state(&spec.with_epsilon(eps)).unwrap()).value / eta
    }

    #[test]
    fn epsilon2_beats_epsilon1_when_imbalanced() {
        let eta = 0.01;
        let spec = ModelSpec::new(spin(3), HalfInt::ZERO).with_ratio(1e-2);
        let e1 = epsilon1(eta, spec.gamma_g, spec.gamma_d).unwrap();
        let e2 = epsilon2(&spec, eta).unwrap().epsilon;
        assert!(sync_under(&spec, e2, eta) > sync_under(&spec, e1, eta));
    }

    #[test]
    fn epsilon2_lifts_suppression_at_extreme_ratio() {
        let eta = 0.01;
        let extreme = ModelSpec::new(spin(3), HalfInt::ZERO).with_ratio(1e-3);
        let moderate = extreme.with_ratio(1e-2);
        let e1 = epsilon1(eta, 1e-3, 1.0).unwrap();
        let with_e1 = sync_under(&extreme, e1, eta);
        let with_e2 = sync_under(&extreme, epsilon2(&extreme, eta).unwrap().epsilon, eta);
        let plateau = sync_under(&moderate, epsilon2(&moderate, eta).unwrap().epsilon, eta);
        assert!(with_e2 > 10.0 * with_e1, "{with_e2} vs {with_e1}");
        assert!(with_e2 > 0.5 * plateau, "{with_e2} vs {plateau}");
    }
}
