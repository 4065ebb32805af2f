//! Small one-dimensional numerical routines shared by the analysis modules.

use std::f64::consts::PI;

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section search for a maximum of a unimodal `f` on `[a, b]`.
///
/// Returns the best abscissa seen and its value. Iterates until the bracket
/// is narrower than `tol` (absolute) or stops shrinking in floating point.
pub fn golden_section_max<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64) -> (f64, f64) {
    let (mut lo, mut hi) = if a <= b { (a, b) } else { (b, a) };
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..200 {
        if hi - lo <= tol {
            break;
        }
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        }
        if !(x1 > lo && x2 < hi) {
            break;
        }
    }
    if f1 >= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Bisection on a sign change of `f` over `[lo, hi]`.
///
/// `f(lo)` and `f(hi)` must have opposite signs. Stops when
/// `hi - lo <= rel_width * max(|lo|, |hi|)` or `f` hits an exact zero.
pub fn bisect<F: FnMut(f64) -> f64>(mut f: F, mut lo: f64, mut hi: f64, rel_width: f64) -> f64 {
    let mut f_lo = f(lo);
    for _ in 0..300 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= rel_width * lo.abs().max(hi.abs()) || mid <= lo || mid >= hi {
            break;
        }
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return mid;
        }
        if (f_mid > 0.0) == (f_lo > 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Outcome of [`illinois`].
#[derive(Clone, Copy, Debug)]
pub struct BracketedRoot<T> {
    pub x: f64,
    pub value: T,
    pub residual: f64,
    pub iterations: usize,
}

/// Illinois-modified regula falsi for a root of `residual(f(x))` in
/// `[lo, hi]`, with `f(lo) < 0 < f(hi)` in the residual.
///
/// `f` returns an arbitrary payload alongside the residual so callers can
/// keep the quantity evaluated at the accepted root. Stops once
/// `|residual| <= ftol` or the bracket is narrower than `xtol * |x|`.
pub fn illinois<T: Clone, E, F>(
    mut f: F,
    mut lo: f64,
    mut hi: f64,
    f_lo: f64,
    f_hi: f64,
    ftol: f64,
    xtol: f64,
) -> Result<BracketedRoot<T>, E>
where
    F: FnMut(f64) -> Result<(f64, T), E>,
{
    let (mut g_lo, mut g_hi) = (f_lo, f_hi);
    let mut side = 0i8;
    let mut best: Option<BracketedRoot<T>> = None;
    for iterations in 1..=200 {
        let mut x = (lo * g_hi - hi * g_lo) / (g_hi - g_lo);
        if !(x > lo && x < hi) {
            x = 0.5 * (lo + hi);
        }
        let (g, payload) = f(x)?;
        let candidate = BracketedRoot {
            x,
            value: payload,
            residual: g,
            iterations,
        };
        if best.as_ref().is_none_or(|b| g.abs() < b.residual.abs()) {
            best = Some(candidate);
        }
        if g.abs() <= ftol || (hi - lo) <= xtol * x.abs() {
            break;
        }
        if g < 0.0 {
            lo = x;
            g_lo = g;
            if side == -1 {
                g_hi *= 0.5;
            }
            side = -1;
        } else {
            hi = x;
            g_hi = g;
            if side == 1 {
                g_lo *= 0.5;
            }
            side = 1;
        }
    }
    Ok(best.expect("at least one iteration"))
}

/// Gauss–Legendre nodes and weights on `[a, b]`.
pub fn gauss_legendre(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    for i in 0..n.div_ceil(2) {
        // Newton from the Tricomi initial guess.
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = mid - half * x;
        nodes[n - 1 - i] = mid + half * x;
        weights[i] = half * w;
        weights[n - 1 - i] = half * w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let n = n as f64;
    (p1, n * (x * p1 - p0) / (x * x - 1.0))
}

/// `n` log-spaced points from `min` to `max` inclusive.
pub fn logspace(min: f64, max: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2 && min > 0.0 && max > min);
    let (a, b) = (min.log10(), max.log10());
    (0..n)
        .map(|i| {
            if i == 0 {
                min
            } else if i == n - 1 {
                max
            } else {
                10f64.powf(a + (b - a) * i as f64 / (n - 1) as f64)
            }
        })
        .collect()
}
