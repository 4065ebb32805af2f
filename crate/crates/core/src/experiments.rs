//! Dissipation-ratio sweeps, ratio optimization, blockade scans and Husimi
//! grids, plus the configuration and CSV plumbing behind the command line.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::io::{self, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calibration::{epsilon1, epsilon2, MAX_ETA};
use crate::error::{Error, Result};
use crate::lindblad::{steady_state, ModelSpec};
use crate::measure::{husimi_q, max_phase};
use crate::numeric::{gauss_legendre, golden_section_max, logspace};
use crate::perturbative::{blockade_ratios, BlockadeReport};
use crate::spin::{HalfInt, SpinNumber};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Smallest accepted Husimi grid resolution per axis.
pub const MIN_HUSIMI_RESOLUTION: usize = 16;

/// How the signal strength is fixed at each ratio.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Signal {
    Eps1,
    Eps2,
}

impl Signal {
    pub fn name(self) -> &'static str {
        match self {
            Signal::Eps1 => "eps1",
            Signal::Eps2 => "eps2",
        }
    }
}

impl std::str::FromStr for Signal {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "eps1" => Ok(Signal::Eps1),
            "eps2" => Ok(Signal::Eps2),
            other => Err(format!("unknown signal '{other}', expected eps1 or eps2")),
        }
    }
}

/// Jump-operator shift, either fixed (as `2M`) or `"edge"` for `M = -S+1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ShiftSpec {
    Fixed(i32),
    Edge(EdgeToken),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeToken {
    Edge,
}

impl ShiftSpec {
    pub const EDGE: ShiftSpec = ShiftSpec::Edge(EdgeToken::Edge);

    pub fn resolve(self, spin: SpinNumber) -> HalfInt {
        match self {
            ShiftSpec::Fixed(two_m) => HalfInt::from_twice(two_m),
            ShiftSpec::Edge(_) => HalfInt::from_twice(2 - spin.two_s() as i32),
        }
    }
}

impl std::str::FromStr for ShiftSpec {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s == "edge" {
            return Ok(ShiftSpec::EDGE);
        }
        s.parse::<i32>()
            .map(ShiftSpec::Fixed)
            .map_err(|_| format!("invalid shift '{s}', expected an integer 2M or 'edge'"))
    }
}

/// One stabilization scheme as written in a config file.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeEntry {
    /// `2S`.
    pub spin: u32,
    pub shift: ShiftSpec,
}

/// A resolved `(S, M)` pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Scheme {
    pub spin: SpinNumber,
    pub shift: HalfInt,
}

impl Scheme {
    pub fn new(spin: SpinNumber, shift: HalfInt) -> Self {
        Scheme { spin, shift }
    }

    pub fn model(&self, ratio: f64, delta: f64) -> ModelSpec {
        ModelSpec::new(self.spin, self.shift).with_ratio(ratio).with_delta(delta)
    }

    /// File-name stem such as `S3-2_M-1-2`.
    pub fn tag(&self) -> String {
        fn half(x: HalfInt) -> String {
            if x.is_integer() {
                format!("{}", x.twice() / 2)
            } else {
                format!("{}-2", x.twice())
            }
        }
        format!("S{}_M{}", half(self.spin.as_half_int()), half(self.shift))
    }
}

/// Log-spaced grid of `γ_g/γ_d` values.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RatioGrid {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl Default for RatioGrid {
    fn default() -> Self {
        RatioGrid {
            min: 1e-3,
            max: 1e3,
            points: 241,
        }
    }
}

impl RatioGrid {
    pub fn validate(&self) -> Result<()> {
        if !(self.min > 0.0 && self.min.is_finite()) {
            return Err(config_error("grid.min", self.min, "must be positive and finite"));
        }
        if !(self.max > self.min && self.max.is_finite()) {
            return Err(config_error("grid.max", self.max, "must be finite and exceed grid.min"));
        }
        if self.points < 2 {
            return Err(config_error("grid.points", self.points as f64, "must be at least 2"));
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        logspace(self.min, self.max, self.points)
    }
}

fn config_error(name: &'static str, value: f64, reason: &'static str) -> Error {
    Error::Domain { name, value, reason }
}

/// Everything a sweep, optimization or blockade scan needs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub schemes: Vec<SchemeEntry>,
    pub signals: Vec<Signal>,
    pub eta: f64,
    pub delta: f64,
    pub grid: RatioGrid,
    pub out: Option<String>,
    pub threads: Option<usize>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            schemes: vec![SchemeEntry {
                spin: 2,
                shift: ShiftSpec::Fixed(0),
            }],
            signals: vec![Signal::Eps1],
            eta: 0.01,
            delta: 0.0,
            grid: RatioGrid::default(),
            out: None,
            threads: None,
        }
    }
}

impl SweepConfig {
    pub fn from_json(text: &str) -> std::result::Result<Self, String> {
        let config: SweepConfig = serde_json::from_str(text).map_err(|e| e.to_string())?;
        Ok(config)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    /// Bundled configuration by name (`fig3` ... `fig6`).
    pub fn preset(name: &str) -> Option<Self> {
        let text = match name {
            "fig3" => include_str!("../presets/fig3.json"),
            "fig4" => include_str!("../presets/fig4.json"),
            "fig5" => include_str!("../presets/fig5.json"),
            "fig6" => include_str!("../presets/fig6.json"),
            _ => return None,
        };
        Some(Self::from_json(text).expect("bundled preset parses"))
    }

    pub fn validate(&self) -> Result<()> {
        if self.schemes.is_empty() {
            return Err(config_error("schemes", 0.0, "at least one scheme is required"));
        }
        if self.signals.is_empty() {
            return Err(config_error("signals", 0.0, "at least one signal is required"));
        }
        if !(self.eta > 0.0 && self.eta <= MAX_ETA) {
            return Err(config_error("eta", self.eta, "must lie in (0, 0.2]"));
        }
        if !self.delta.is_finite() {
            return Err(config_error("delta", self.delta, "must be finite"));
        }
        if self.threads == Some(0) {
            return Err(config_error("threads", 0.0, "must be positive"));
        }
        self.grid.validate()?;
        self.resolved_schemes().map(|_| ())
    }

    /// Schemes with `"edge"` resolved against each spin.
    pub fn resolved_schemes(&self) -> Result<Vec<Scheme>> {
        self.schemes
            .iter()
            .map(|entry| {
                let spin = SpinNumber::new(entry.spin)?;
                let shift = entry.shift.resolve(spin);
                Ok(Scheme::new(spin, shift))
            })
            .collect()
    }
}

/// One grid point of a sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub ratio: f64,
    pub gamma_g: f64,
    pub gamma_d: f64,
    pub epsilon: f64,
    pub max_s_phi: f64,
    pub max_s_phi_over_eta: f64,
    pub phi_star: f64,
    /// Relative limit-cycle deformation reached by an `eps2` calibration.
    pub deformation: Option<f64>,
    /// Whether the `eps2` deformation was monotone on its final bracket.
    pub monotone: bool,
    pub error: Option<String>,
}

impl SweepRow {
    fn failed(ratio: f64, error: Error) -> Self {
        SweepRow {
            ratio,
            gamma_g: ratio,
            gamma_d: 1.0,
            epsilon: f64::NAN,
            max_s_phi: f64::NAN,
            max_s_phi_over_eta: f64::NAN,
            phi_star: f64::NAN,
            deformation: None,
            monotone: true,
            error: Some(error.to_string()),
        }
    }

    pub fn is_ok(&self) -> bool {
        self.error.is_none()
    }
}

/// Full-solver synchronization measure at one ratio (`γ_d = 1`).
pub fn evaluate_point(scheme: Scheme, signal: Signal, eta: f64, delta: f64, ratio: f64) -> Result<SweepRow> {
    let spec = scheme.model(ratio, delta);
    spec.validate()?;
    let (epsilon, deformation, monotone) = match signal {
        Signal::Eps1 => (epsilon1(eta, spec.gamma_g, spec.gamma_d)?, None, true),
        Signal::Eps2 => {
            let c = epsilon2(&spec, eta)?;
            (c.epsilon, Some(c.achieved_deformation), c.monotone)
        }
    };
    let rho = steady_state(&spec.with_epsilon(epsilon))?;
    let peak = max_phase(&rho);
    Ok(SweepRow {
        ratio,
        gamma_g: spec.gamma_g,
        gamma_d: spec.gamma_d,
        epsilon,
        max_s_phi: peak.value,
        max_s_phi_over_eta: peak.value / eta,
        phi_star: peak.phi_star,
        deformation,
        monotone,
        error: None,
    })
}

/// Sweep of one `(scheme, signal)` pair.
#[derive(Clone, Debug)]
pub struct SweepResult {
    pub scheme: Scheme,
    pub signal: Signal,
    pub eta: f64,
    pub delta: f64,
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    /// Largest `max S(φ)/η` over successful rows.
    pub fn max_value(&self) -> f64 {
        self.rows
            .iter()
            .filter(|r| r.is_ok())
            .map(|r| r.max_s_phi_over_eta)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Ratios at which `max S(φ)` has an interior local minimum on the grid.
    pub fn local_minima(&self) -> Vec<f64> {
        self.rows
            .windows(3)
            .filter(|w| w.iter().all(|r| r.is_ok()))
            .filter(|w| w[1].max_s_phi <= w[0].max_s_phi && w[1].max_s_phi <= w[2].max_s_phi)
            .map(|w| w[1].ratio)
            .collect()
    }

    pub fn errors(&self) -> usize {
        self.rows.iter().filter(|r| !r.is_ok()).count()
    }

    /// Count of `eps2` rows whose calibration bracket was not monotone.
    pub fn non_monotone(&self) -> usize {
        self.rows.iter().filter(|r| !r.monotone).count()
    }

    pub fn file_name(&self) -> String {
        format!("sweep_{}_{}.csv", self.scheme.tag(), self.signal.name())
    }
}

/// Evaluates every grid point, in parallel, keeping grid order.
pub fn sweep_scheme(scheme: Scheme, signal: Signal, eta: f64, delta: f64, grid: &[f64]) -> SweepResult {
    let rows = grid
        .par_iter()
        .map(|&r| evaluate_point(scheme, signal, eta, delta, r).unwrap_or_else(|e| SweepRow::failed(r, e)))
        .collect();
    SweepResult {
        scheme,
        signal,
        eta,
        delta,
        rows,
    }
}

/// One sweep per `(scheme, signal)` pair of `config`, in config order.
pub fn run_sweep(config: &SweepConfig) -> Result<Vec<SweepResult>> {
    config.validate()?;
    let grid = config.grid.values();
    let mut out = Vec::new();
    for scheme in config.resolved_schemes()? {
        for &signal in &config.signals {
            out.push(sweep_scheme(scheme, signal, config.eta, config.delta, &grid));
        }
    }
    Ok(out)
}

/// Comment block shared by every CSV: tool version, the full config and the
/// table's own scheme.
fn header_block(config: &SweepConfig, lines: &[String]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# spinsync {VERSION}");
    let _ = writeln!(s, "# config: {}", config.to_json());
    for line in lines {
        let _ = writeln!(s, "# {line}");
    }
    s
}

fn scheme_line(scheme: Scheme) -> String {
    format!("spin: {}, shift: {}", scheme.spin.as_half_int(), scheme.shift)
}

fn csv_float(x: f64) -> String {
    if x.is_nan() {
        String::new()
    } else {
        format!("{x}")
    }
}

fn csv_text(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\"").replace('\n', " "))
    } else {
        s.to_string()
    }
}

pub const SWEEP_COLUMNS: &str = "ratio,gamma_g,gamma_d,epsilon,max_S_phi,max_S_phi_over_eta,phi_star,error";

pub fn write_sweep_csv<W: Write>(result: &SweepResult, config: &SweepConfig, mut w: W) -> io::Result<()> {
    let meta = [
        scheme_line(result.scheme),
        format!("signal: {}, eta: {}, delta: {}", result.signal.name(), result.eta, result.delta),
    ];
    w.write_all(header_block(config, &meta).as_bytes())?;
    writeln!(w, "{SWEEP_COLUMNS}")?;
    for r in &result.rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            csv_float(r.ratio),
            csv_float(r.gamma_g),
            csv_float(r.gamma_d),
            csv_float(r.epsilon),
            csv_float(r.max_s_phi),
            csv_float(r.max_s_phi_over_eta),
            csv_float(r.phi_star),
            csv_text(r.error.as_deref().unwrap_or("")),
        )?;
    }
    Ok(())
}

/// Best ratio for one scheme and signal.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Optimum {
    pub ratio: f64,
    pub value: f64,
    pub epsilon: f64,
    pub phi_star: f64,
}

/// Grid maximum of `max S(φ)/η`, refined by golden-section search in
/// `log10 r` between the neighbouring grid points.
pub fn optimize_ratio(scheme: Scheme, signal: Signal, eta: f64, delta: f64, grid: &[f64]) -> Result<Optimum> {
    let sweep = sweep_scheme(scheme, signal, eta, delta, grid);
    optimize_from_sweep(&sweep)
}

/// As [`optimize_ratio`], reusing an existing sweep.
pub fn optimize_from_sweep(sweep: &SweepResult) -> Result<Optimum> {
    let rows = &sweep.rows;
    let best = rows
        .iter()
        .enumerate()
        .filter(|(_, r)| r.is_ok())
        .max_by(|a, b| a.1.max_s_phi_over_eta.total_cmp(&b.1.max_s_phi_over_eta))
        .map(|(i, _)| i)
        .ok_or_else(|| {
            let first = rows.iter().find_map(|r| r.error.clone()).unwrap_or_default();
            Error::Calibration(format!("every grid point failed: {first}"))
        })?;
    let to_optimum = |r: &SweepRow| Optimum {
        ratio: r.ratio,
        value: r.max_s_phi_over_eta,
        epsilon: r.epsilon,
        phi_star: r.phi_star,
    };
    let mut optimum = to_optimum(&rows[best]);
    let lo = rows[best.saturating_sub(1)].ratio.log10();
    let hi = rows[(best + 1).min(rows.len() - 1)].ratio.log10();
    if hi > lo {
        let eval = |x: f64| evaluate_point(sweep.scheme, sweep.signal, sweep.eta, sweep.delta, 10f64.powf(x));
        let (x, _) = golden_section_max(
            |x| eval(x).map(|r| r.max_s_phi_over_eta).unwrap_or(f64::NEG_INFINITY),
            lo,
            hi,
            1e-6,
        );
        if let Ok(row) = eval(x) {
            if row.max_s_phi_over_eta > optimum.value {
                optimum = to_optimum(&row);
            }
        }
    }
    Ok(optimum)
}

/// Analytic root checked against the full-solver sweep.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RootCheck {
    pub root: f64,
    /// Numerical local minimum within one grid cell of the root, if any.
    pub nearest_dip: Option<f64>,
    /// `max S(φ)/η` of the full solver evaluated at the root itself.
    pub value_at_root: f64,
    /// Sweep maximum divided by `value_at_root`.
    pub suppression: f64,
}

/// Blockade report with its numerical cross-check.
#[derive(Clone, Debug)]
pub struct BlockadeScan {
    pub report: BlockadeReport,
    pub sweep: SweepResult,
    pub checks: Vec<RootCheck>,
    pub warnings: Vec<String>,
}

/// Analytic blockade ratios of `scheme`, each compared with the dips of a
/// full-solver sweep under `signal` on the same grid.
pub fn run_blockade_scan(
    scheme: Scheme,
    signal: Signal,
    eta: f64,
    delta: f64,
    grid: &[f64],
) -> Result<BlockadeScan> {
    let report = blockade_ratios(scheme.spin, scheme.shift, delta, grid)?;
    let sweep = sweep_scheme(scheme, signal, eta, delta, grid);
    let dips = sweep.local_minima();
    let sweep_max = sweep.max_value();
    let cell = grid
        .windows(2)
        .map(|w| (w[1] / w[0]).ln())
        .fold(0.0, f64::max);

    let mut warnings = Vec::new();
    let mut checks = Vec::new();
    let candidates = if delta == 0.0 { &report.roots } else { &report.minima };
    for &root in candidates {
        let nearest_dip = dips
            .iter()
            .copied()
            .filter(|d| (d / root).ln().abs() <= cell * (1.0 + 1e-9))
            .min_by(|a, b| (a / root).ln().abs().total_cmp(&(b / root).ln().abs()));
        if nearest_dip.is_none() {
            warnings.push(format!("no numerical dip within one grid cell of analytic root {root}"));
        }
        let value_at_root = match evaluate_point(scheme, signal, eta, delta, root) {
            Ok(row) => row.max_s_phi_over_eta,
            Err(e) => {
                warnings.push(format!("full solver failed at root {root}: {e}"));
                f64::NAN
            }
        };
        checks.push(RootCheck {
            root,
            nearest_dip,
            value_at_root,
            suppression: sweep_max / value_at_root,
        });
    }
    if sweep.errors() > 0 {
        warnings.push(format!("{} sweep points failed", sweep.errors()));
    }
    Ok(BlockadeScan {
        report,
        sweep,
        checks,
        warnings,
    })
}

pub fn write_blockade_csv<W: Write>(scan: &BlockadeScan, config: &SweepConfig, mut w: W) -> io::Result<()> {
    let mut meta = vec![
        scheme_line(scan.sweep.scheme),
        format!(
            "signal: {}, eta: {}, delta: {}",
            scan.sweep.signal.name(),
            scan.sweep.eta,
            scan.sweep.delta
        ),
    ];
    for c in &scan.checks {
        meta.push(format!(
            "root: {}, nearest_dip: {}, value_at_root: {}, suppression: {}",
            c.root,
            c.nearest_dip.map_or("none".to_string(), |d| d.to_string()),
            c.value_at_root,
            c.suppression
        ));
    }
    for warning in &scan.warnings {
        meta.push(format!("warning: {warning}"));
    }
    w.write_all(header_block(config, &meta).as_bytes())?;
    writeln!(w, "ratio,amplitude_re,amplitude_im,amplitude_abs,max_S_phi_over_eta,error")?;
    for ((r, c), row) in scan.report.amplitude_curve.iter().zip(&scan.sweep.rows) {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            r,
            c.re,
            c.im,
            c.norm(),
            csv_float(row.max_s_phi_over_eta),
            csv_text(row.error.as_deref().unwrap_or(""))
        )?;
    }
    Ok(())
}

/// `Q(θ, φ)` on a Gauss–Legendre (in `cos θ`) by uniform-φ product grid.
#[derive(Clone, Debug)]
pub struct HusimiGrid {
    pub theta: Vec<f64>,
    pub phi: Vec<f64>,
    /// Solid-angle quadrature weight of each `θ` node times `2π/N_φ`.
    pub weights: Vec<f64>,
    /// Row-major in `(θ, φ)`.
    pub q: Vec<f64>,
    /// `(m, P(m))`, descending `m`.
    pub populations: Vec<(HalfInt, f64)>,
}

impl HusimiGrid {
    pub fn integral(&self) -> f64 {
        let n_phi = self.phi.len();
        self.q
            .iter()
            .enumerate()
            .map(|(k, q)| q * self.weights[k / n_phi])
            .sum()
    }

    pub fn q_at(&self, i: usize, j: usize) -> f64 {
        self.q[i * self.phi.len() + j]
    }
}

/// Samples the Husimi function of the steady state of `spec` on
/// `resolution × resolution` points.
pub fn emit_husimi_grid(spec: &ModelSpec, resolution: usize) -> Result<HusimiGrid> {
    if resolution < MIN_HUSIMI_RESOLUTION {
        return Err(config_error("resolution", resolution as f64, "must be at least 16"));
    }
    let rho = steady_state(spec)?;
    let (x, w) = gauss_legendre(resolution, -1.0, 1.0);
    // Descending cos θ gives ascending θ.
    let theta: Vec<f64> = x.iter().rev().map(|c| c.acos()).collect();
    let d_phi = 2.0 * PI / resolution as f64;
    let weights: Vec<f64> = w.iter().rev().map(|w| w * d_phi).collect();
    let phi: Vec<f64> = (0..resolution).map(|j| j as f64 * d_phi).collect();
    let q = theta
        .iter()
        .flat_map(|&t| phi.iter().map(move |&p| (t, p)))
        .map(|(t, p)| husimi_q(&rho, t, p))
        .collect();
    let populations = spec.spin.m_values().map(|m| (m, rho.population(m))).collect();
    Ok(HusimiGrid {
        theta,
        phi,
        weights,
        q,
        populations,
    })
}

pub fn write_husimi_csv<W: Write>(grid: &HusimiGrid, spec: &ModelSpec, mut w: W) -> io::Result<()> {
    writeln!(w, "# spinsync {VERSION}")?;
    writeln!(
        w,
        "# spin: {}, shift: {}, gamma_g: {}, gamma_d: {}, delta: {}, epsilon: {}",
        spec.spin.as_half_int(),
        spec.shift,
        spec.gamma_g,
        spec.gamma_d,
        spec.delta,
        spec.epsilon
    )?;
    writeln!(w, "theta,phi,weight,q")?;
    for (i, t) in grid.theta.iter().enumerate() {
        for (j, p) in grid.phi.iter().enumerate() {
            writeln!(w, "{},{},{},{}", t, p, grid.weights[i], grid.q_at(i, j))?;
        }
    }
    Ok(())
}

pub fn write_populations_csv<W: Write>(grid: &HusimiGrid, mut w: W) -> io::Result<()> {
    writeln!(w, "m,population")?;
    for (m, p) in &grid.populations {
        writeln!(w, "{},{}", m.value(), p)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scheme(two_s: u32, two_m: i32) -> Scheme {
        Scheme::new(SpinNumber::new(two_s).unwrap(), HalfInt::from_twice(two_m))
    }

    #[test]
    fn edge_shift_resolves_per_spin() {
        for two_s in 2..=6u32 {
            let spin = SpinNumber::new(two_s).unwrap();
            assert_eq!(ShiftSpec::EDGE.resolve(spin).twice(), 2 - two_s as i32);
        }
        assert_eq!("edge".parse::<ShiftSpec>().unwrap(), ShiftSpec::EDGE);
        assert_eq!("-1".parse::<ShiftSpec>().unwrap(), ShiftSpec::Fixed(-1));
        assert!("half".parse::<ShiftSpec>().is_err());
    }

    #[test]
    fn config_round_trip_and_defaults() {
        let c = SweepConfig::from_json(r#"{"schemes":[{"spin":3,"shift":"edge"},{"spin":4,"shift":0}],"signals":["eps2"]}"#).unwrap();
        assert_eq!(c.eta, 0.01);
        assert_eq!(c.grid, RatioGrid::default());
        assert_eq!(c.schemes[0].shift, ShiftSpec::EDGE);
        assert_eq!(SweepConfig::from_json(&c.to_json()).unwrap(), c);
        let schemes = c.resolved_schemes().unwrap();
        assert_eq!(schemes[0].shift.twice(), -1);
        assert!(SweepConfig::from_json(r#"{"bogus":1}"#).is_err());
    }

    #[test]
    fn config_validation() {
        let mut c = SweepConfig::default();
        assert!(c.validate().is_ok());
        c.eta = 0.3;
        assert!(c.validate().is_err());
        c = SweepConfig::default();
        c.grid.points = 1;
        assert!(c.validate().is_err());
        c = SweepConfig::default();
        c.schemes[0].spin = 1;
        assert!(c.validate().is_err());
        c = SweepConfig::default();
        c.threads = Some(0);
        assert!(c.validate().is_err());
    }

    #[test]
    fn presets_are_valid() {
        for name in ["fig3", "fig4", "fig5", "fig6"] {
            SweepConfig::preset(name).unwrap().validate().unwrap();
        }
        assert!(SweepConfig::preset("fig7").is_none());
    }

    #[test]
    fn scheme_tags() {
        assert_eq!(scheme(3, -1).tag(), "S3-2_M-1-2");
        assert_eq!(scheme(4, -2).tag(), "S2_M-1");
    }

    #[test]
    fn spin_one_sweep_dips_at_balance() {
        let grid = logspace(1e-2, 1e2, 21);
        let sweep = sweep_scheme(scheme(2, 0), Signal::Eps1, 0.01, 0.0, &grid);
        assert_eq!(sweep.rows.len(), 21);
        assert_eq!(sweep.errors(), 0);
        let centre = sweep.rows[10].max_s_phi_over_eta;
        assert!((sweep.rows[10].ratio - 1.0).abs() < 1e-14);
        assert!(centre < 1e-2 * sweep.max_value());
        // Symmetric recovery.
        for k in 1..=10 {
            let (a, b) = (sweep.rows[10 - k].max_s_phi_over_eta, sweep.rows[10 + k].max_s_phi_over_eta);
            assert!((a - b).abs() < 1e-6 * a.max(b), "k={k}");
            assert!(a > centre);
        }
        assert_eq!(sweep.local_minima(), vec![sweep.rows[10].ratio]);
    }

    #[test]
    fn max_phase_never_negative() {
        let grid = logspace(1e-3, 1e3, 13);
        for s in [scheme(3, 0), scheme(4, -2)] {
            let sweep = sweep_scheme(s, Signal::Eps2, 0.01, 0.0, &grid);
            assert!(sweep.errors() <= 2);
            for row in sweep.rows.iter().filter(|r| r.is_ok()) {
                assert!(row.max_s_phi >= -1e-12, "{row:?}");
            }
        }
    }

    #[test]
    fn optimum_is_at_least_grid_best() {
        let grid = logspace(1e-3, 1e3, 25);
        let s = scheme(3, -1);
        let sweep = sweep_scheme(s, Signal::Eps2, 0.01, 0.0, &grid);
        let opt = optimize_from_sweep(&sweep).unwrap();
        assert!(opt.value >= sweep.max_value());
        assert!(opt.ratio >= grid[0] && opt.ratio <= grid[24]);
    }

    #[test]
    fn sweep_csv_layout() {
        let config = SweepConfig::default();
        let grid = logspace(1e-1, 1e1, 3);
        let sweep = sweep_scheme(scheme(2, 0), Signal::Eps1, 0.01, 0.0, &grid);
        let mut buf = Vec::new();
        write_sweep_csv(&sweep, &config, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[0].starts_with("# spinsync "));
        assert!(lines[1].starts_with("# config: {"));
        let header = lines.iter().position(|l| !l.starts_with('#')).unwrap();
        assert_eq!(lines[header], SWEEP_COLUMNS);
        assert_eq!(lines.len() - header - 1, 3);
        let fields: Vec<&str> = lines[header + 2].split(',').collect();
        assert_eq!(fields.len(), 8);
        assert_eq!(fields[0].parse::<f64>().unwrap(), 1.0);
        assert_eq!(fields[7], "");
    }

    #[test]
    fn failed_points_are_recorded() {
        let row = evaluate_point(scheme(2, 0), Signal::Eps1, 0.01, 0.0, -1.0);
        assert!(row.is_err());
        let sweep = sweep_scheme(scheme(2, 0), Signal::Eps1, 0.01, 0.0, &[-1.0, 1.0]);
        assert_eq!(sweep.errors(), 1);
        assert!(sweep.rows[1].is_ok());
        assert_eq!(csv_text("a, \"b\""), "\"a, \"\"b\"\"\"");
    }

    #[test]
    fn husimi_grid_normalized() {
        for (two_s, r) in [(3u32, 1.0), (3, 0.1), (6, 2.0)] {
            let spec = ModelSpec::new(SpinNumber::new(two_s).unwrap(), HalfInt::ZERO)
                .with_ratio(r)
                .with_epsilon(0.05);
            let grid = emit_husimi_grid(&spec, 16).unwrap();
            assert!((grid.integral() - 1.0).abs() < 1e-12);
            assert!(grid.theta.windows(2).all(|p| p[0] < p[1]));
            let total: f64 = grid.populations.iter().map(|p| p.1).sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
        let spec = ModelSpec::new(SpinNumber::new(3).unwrap(), HalfInt::ZERO);
        assert!(emit_husimi_grid(&spec, 15).is_err());
    }

    #[test]
    fn husimi_band_and_pole() {
        let spin = SpinNumber::new(3).unwrap();
        // Balanced: φ-uniform, peaked at the equator.
        let grid = emit_husimi_grid(&ModelSpec::new(spin, HalfInt::ZERO), 32).unwrap();
        for i in 0..32 {
            let row: Vec<f64> = (0..32).map(|j| grid.q_at(i, j)).collect();
            let spread = row.iter().cloned().fold(f64::MIN, f64::max) - row.iter().cloned().fold(f64::MAX, f64::min);
            assert!(spread < 1e-14);
        }
        let marginal = |g: &HusimiGrid, i: usize| g.q_at(i, 0);
        let peak = (0..32).max_by(|&a, &b| marginal(&grid, a).total_cmp(&marginal(&grid, b))).unwrap();
        assert!((grid.theta[peak] - PI / 2.0).abs() < 0.2);
        // Loss-dominated: weight near the south pole.
        let grid = emit_husimi_grid(&ModelSpec::new(spin, HalfInt::ZERO).with_ratio(0.1), 32).unwrap();
        let south: f64 = (16..32).map(|i| grid.weights[i] * grid.q_at(i, 0) * 32.0).sum();
        assert!(south > 0.75, "{south}");
    }
}
