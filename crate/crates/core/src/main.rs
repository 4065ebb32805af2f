use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use spinsync::calibration::{epsilon1, epsilon2};
use spinsync::experiments::{
    emit_husimi_grid, optimize_from_sweep, run_blockade_scan, run_sweep, sweep_scheme, write_blockade_csv,
    write_husimi_csv, write_populations_csv, write_sweep_csv, RatioGrid, SchemeEntry, ShiftSpec, Signal,
    SweepConfig,
};
use spinsync::lindblad::ModelSpec;
use spinsync::Error;

#[derive(Parser)]
#[command(name = "spinsync", version, about = "Synchronization of driven spin-S limit-cycle oscillators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep max S(φ)/η over the dissipation ratio and write one CSV per scheme and signal.
    Sweep(Common),
    /// Find the ratio maximizing max S(φ)/η for every scheme and signal.
    Optimize(Common),
    /// Locate first-order blockade ratios and cross-check them against a full sweep.
    Blockades(Common),
    /// Write the Husimi function of one steady state on a θ × φ grid.
    Husimi {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1.0)]
        ratio: f64,
        #[arg(long, default_value_t = 0.0)]
        epsilon: f64,
        #[arg(long, default_value_t = 64)]
        resolution: usize,
    },
    /// Print ε₁ and the calibrated ε₂ for one scheme and ratio.
    Calibrate {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1.0)]
        ratio: f64,
    },
}

#[derive(Args)]
struct Common {
    /// JSON configuration file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Bundled configuration: fig3, fig4, fig5 or fig6.
    #[arg(long, conflicts_with = "config")]
    preset: Option<String>,
    /// Twice the spin, 2S (repeatable).
    #[arg(long = "spin", value_name = "2S")]
    spins: Vec<u32>,
    /// Twice the shift, 2M, or "edge" for M = -S+1 (repeatable).
    #[arg(long = "shift", value_name = "2M|edge", allow_hyphen_values = true)]
    shifts: Vec<ShiftSpec>,
    /// eps1 or eps2 (repeatable).
    #[arg(long = "signal")]
    signals: Vec<Signal>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    delta: Option<f64>,
    #[arg(long)]
    ratio_min: Option<f64>,
    #[arg(long)]
    ratio_max: Option<f64>,
    #[arg(long)]
    points: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
    /// Exit with status 3 when warnings were raised.
    #[arg(long)]
    strict: bool,
}

enum Failure {
    Config(String),
    Solver(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 1,
            Failure::Solver(_) => 2,
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Config(format!("i/o: {e}"))
    }
}

fn solver(e: Error) -> Failure {
    Failure::Solver(e.to_string())
}

impl Common {
    fn config(&self) -> Result<SweepConfig, Failure> {
        let mut config = match (&self.config, &self.preset) {
            (Some(path), _) => {
                let text = fs::read_to_string(path)
                    .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
                SweepConfig::from_json(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?
            }
            (None, Some(name)) => {
                SweepConfig::preset(name).ok_or_else(|| Failure::Config(format!("unknown preset '{name}'")))?
            }
            (None, None) => SweepConfig::default(),
        };
        if !self.spins.is_empty() || !self.shifts.is_empty() {
            let spins = if self.spins.is_empty() {
                dedup(config.schemes.iter().map(|s| s.spin))
            } else {
                self.spins.clone()
            };
            let shifts = if self.shifts.is_empty() {
                dedup(config.schemes.iter().map(|s| s.shift))
            } else {
                self.shifts.clone()
            };
            config.schemes = spins
                .iter()
                .flat_map(|&spin| shifts.iter().map(move |&shift| SchemeEntry { spin, shift }))
                .collect();
        }
        if !self.signals.is_empty() {
            config.signals = self.signals.clone();
        }
        config.eta = self.eta.unwrap_or(config.eta);
        config.delta = self.delta.unwrap_or(config.delta);
        config.grid = RatioGrid {
            min: self.ratio_min.unwrap_or(config.grid.min),
            max: self.ratio_max.unwrap_or(config.grid.max),
            points: self.points.unwrap_or(config.grid.points),
        };
        if let Some(out) = &self.out {
            config.out = Some(out.display().to_string());
        }
        if self.threads.is_some() {
            config.threads = self.threads;
        }
        config.validate().map_err(|e| Failure::Config(e.to_string()))?;
        Ok(config)
    }
}

fn dedup<T: PartialEq>(items: impl Iterator<Item = T>) -> Vec<T> {
    let mut out = Vec::new();
    for item in items {
        if !out.contains(&item) {
            out.push(item);
        }
    }
    out
}

fn out_dir(config: &SweepConfig) -> Result<PathBuf, Failure> {
    let dir = PathBuf::from(config.out.as_deref().unwrap_or("out"));
    fs::create_dir_all(&dir).map_err(|e| Failure::Config(format!("{}: {e}", dir.display())))?;
    Ok(dir)
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
}

fn with_pool<T>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, Failure>
where
    T: Send,
{
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| Failure::Config(e.to_string()))?;
    Ok(pool.install(f))
}

/// Returns the number of warnings raised.
fn sweep(common: &Common) -> Result<usize, Failure> {
    let config = common.config()?;
    let dir = out_dir(&config)?;
    let results = with_pool(config.threads, || run_sweep(&config))?.map_err(solver)?;
    let mut warnings = 0;
    for result in &results {
        let path = dir.join(result.file_name());
        let mut w = create(&path)?;
        write_sweep_csv(result, &config, &mut w)?;
        w.flush()?;
        println!(
            "{}  max S/eta = {:.6e}  failed points = {}",
            path.display(),
            result.max_value(),
            result.errors()
        );
        if result.errors() > 0 {
            eprintln!("warning: {} grid points failed in {}", result.errors(), path.display());
            warnings += 1;
        }
        if result.non_monotone() > 0 {
            eprintln!(
                "warning: {} eps2 calibrations saw a non-monotone deformation in {}",
                result.non_monotone(),
                path.display()
            );
            warnings += 1;
        }
    }
    Ok(warnings)
}

fn optimize(common: &Common) -> Result<usize, Failure> {
    let config = common.config()?;
    let grid = config.grid.values();
    let mut lines = vec!["spin,shift,signal,ratio,max_S_phi_over_eta,epsilon,phi_star".to_string()];
    for scheme in config.resolved_schemes().map_err(|e| Failure::Config(e.to_string()))? {
        for &signal in &config.signals {
            let sweep = with_pool(config.threads, || sweep_scheme(scheme, signal, config.eta, config.delta, &grid))?;
            let best = with_pool(config.threads, || optimize_from_sweep(&sweep))?.map_err(solver)?;
            lines.push(format!(
                "{},{},{},{},{},{},{}",
                scheme.spin.as_half_int(),
                scheme.shift,
                signal.name(),
                best.ratio,
                best.value,
                best.epsilon,
                best.phi_star
            ));
        }
    }
    for line in &lines {
        println!("{line}");
    }
    if config.out.is_some() {
        let path = out_dir(&config)?.join("optimize.csv");
        let mut w = create(&path)?;
        writeln!(w, "# spinsync {}", spinsync::experiments::VERSION)?;
        writeln!(w, "# config: {}", config.to_json())?;
        for line in &lines {
            writeln!(w, "{line}")?;
        }
        w.flush()?;
    }
    Ok(0)
}

fn blockades(common: &Common) -> Result<usize, Failure> {
    let config = common.config()?;
    let dir = out_dir(&config)?;
    let grid = config.grid.values();
    let signal = config.signals[0];
    let mut warnings = 0;
    for scheme in config.resolved_schemes().map_err(|e| Failure::Config(e.to_string()))? {
        let scan = with_pool(config.threads, || {
            run_blockade_scan(scheme, signal, config.eta, config.delta, &grid)
        })?
        .map_err(solver)?;
        let path = dir.join(format!("blockades_{}_{}.csv", scheme.tag(), signal.name()));
        let mut w = create(&path)?;
        write_blockade_csv(&scan, &config, &mut w)?;
        w.flush()?;
        println!("{}  S = {}, M = {}", path.display(), scheme.spin.as_half_int(), scheme.shift);
        if config.delta != 0.0 {
            println!("  |C| minima: {:?}", scan.report.minima);
        }
        for c in &scan.checks {
            println!(
                "  root {:.6}  nearest dip {}  suppression {:.1}",
                c.root,
                c.nearest_dip.map_or("none".to_string(), |d| format!("{d:.6}")),
                c.suppression
            );
        }
        for warning in &scan.warnings {
            eprintln!("warning: {warning}");
        }
        warnings += scan.warnings.len();
    }
    Ok(warnings)
}

fn single_spec(config: &SweepConfig, ratio: f64) -> Result<ModelSpec, Failure> {
    let schemes = config.resolved_schemes().map_err(|e| Failure::Config(e.to_string()))?;
    if schemes.len() != 1 {
        return Err(Failure::Config(format!(
            "exactly one scheme expected, got {}",
            schemes.len()
        )));
    }
    let spec = schemes[0].model(ratio, config.delta);
    spec.validate().map_err(|e| Failure::Config(e.to_string()))?;
    Ok(spec)
}

fn husimi(common: &Common, ratio: f64, epsilon: f64, resolution: usize) -> Result<usize, Failure> {
    let config = common.config()?;
    let spec = single_spec(&config, ratio)?.with_epsilon(epsilon);
    spec.validate().map_err(|e| Failure::Config(e.to_string()))?;
    let grid = emit_husimi_grid(&spec, resolution).map_err(|e| match e {
        Error::Domain { .. } => Failure::Config(e.to_string()),
        other => solver(other),
    })?;
    let dir = out_dir(&config)?;
    let stem = format!("husimi_{}_r{}", spinsync::experiments::Scheme::new(spec.spin, spec.shift).tag(), ratio);
    let q_path = dir.join(format!("{stem}.csv"));
    let mut w = create(&q_path)?;
    write_husimi_csv(&grid, &spec, &mut w)?;
    w.flush()?;
    let p_path = dir.join(format!("{stem}_populations.csv"));
    let mut w = create(&p_path)?;
    write_populations_csv(&grid, &mut w)?;
    w.flush()?;
    println!("{}\n{}\nintegral = {:.15}", q_path.display(), p_path.display(), grid.integral());
    Ok(0)
}

fn calibrate(common: &Common, ratio: f64) -> Result<usize, Failure> {
    let config = common.config()?;
    let spec = single_spec(&config, ratio)?;
    let eps1 = epsilon1(config.eta, spec.gamma_g, spec.gamma_d).map_err(|e| Failure::Config(e.to_string()))?;
    let eps2 = epsilon2(&spec, config.eta).map_err(solver)?;
    let report = serde_json::json!({
        "spin": spec.spin.value(),
        "shift": spec.shift.value(),
        "ratio": ratio,
        "delta": spec.delta,
        "eps1": eps1,
        "eps2": eps2,
    });
    println!("{}", serde_json::to_string_pretty(&report).expect("json"));
    Ok(usize::from(!eps2.monotone))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let (strict, outcome) = match &cli.command {
        Command::Sweep(c) => (c.strict, sweep(c)),
        Command::Optimize(c) => (c.strict, optimize(c)),
        Command::Blockades(c) => (c.strict, blockades(c)),
        Command::Husimi {
            common,
            ratio,
            epsilon,
            resolution,
        } => (common.strict, husimi(common, *ratio, *epsilon, *resolution)),
        Command::Calibrate { common, ratio } => (common.strict, calibrate(common, *ratio)),
    };
    match outcome {
        Ok(warnings) if strict && warnings > 0 => {
            eprintln!("{warnings} warning(s) promoted to failure by --strict");
            ExitCode::from(3)
        }
        Ok(_) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Config(m) => eprintln!("configuration error: {m}"),
                Failure::Solver(m) => eprintln!("solver failure: {m}"),
            }
            ExitCode::from(f.code())
        }
    }
}
