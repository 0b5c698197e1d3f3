//! Command-line interface.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use nmrdeco_core::analysis::{Experiment, SpectrumMode};
use nmrdeco_core::engine::SimState;
use nmrdeco_core::pulseq::{parse, Builtin, Sequence};

use crate::config::{self, ConfigError, Loaded};
use crate::output::{self, FitReport, PaperExperiment};
use crate::report::{sig4, state_report};
use crate::scan::{reference_phase, run_scan, spectrum_at};
use crate::spectrum::{find_doublet, find_lines};
use crate::verify;

/// The bundled trichloroethylene configuration.
pub const TCE_CONFIG: &str = include_str!("../assets/tce.cfg");

#[derive(Debug, Parser)]
#[command(
    name = "nmrdeco",
    version,
    about = "Exact simulation of an NMR decoherence experiment: an entangled spin pair coupled to environment spins",
    after_help = "Exit codes: 0 success, 1 configuration or usage error, 2 script parse error, \
                  3 runtime error, 4 verification failure.\n\
                  Without --config the bundled trichloroethylene configuration is used."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a pulse sequence from equilibrium and report the final state.
    State(StateArgs),
    /// Sweep the evolution time, fit the decoherence curve.
    Scan(ScanArgs),
    /// Write the spectrum after an evolution time t.
    Spectrum(SpectrumArgs),
    /// Check the engine against the brute-force oracle and analytic laws.
    Verify(CommonArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Experiment configuration (TOML).
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct StateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Sequence script; defaults to the configured or built-in preparation.
    #[arg(long, value_name = "PATH")]
    pub script: Option<PathBuf>,
    /// Output directory for state.txt.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Start with the environment coupled (by default it is decoupled).
    #[arg(long)]
    pub coupled: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    /// |X(f)|.
    Magnitude,
    /// Re X(f) after zero-order phasing on the t = 0 peak; keeps sign.
    Real,
}

impl From<ModeArg> for SpectrumMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Magnitude => SpectrumMode::Magnitude,
            ModeArg::Real => SpectrumMode::Real,
        }
    }
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Output directory for curve.csv, envelope.csv and fit.json.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, value_name = "N")]
    pub jobs: Option<usize>,
    /// Peak read-out mode (default: from the configuration).
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    /// Peak window in Hz (default: upper line of spin 1's doublet).
    #[arg(long, value_name = "LO_HZ:HI_HZ", value_parser = parse_window, allow_hyphen_values = true)]
    pub window: Option<(f64, f64)>,
}

#[derive(Debug, Args)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Evolution time in seconds.
    #[arg(long = "t", value_name = "SECONDS", default_value_t = 0.0, allow_hyphen_values = true)]
    pub t: f64,
    /// Output directory for spectrum.csv.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    /// Window used to pick the zero-order phase in real mode.
    #[arg(long, value_name = "LO_HZ:HI_HZ", value_parser = parse_window, allow_hyphen_values = true)]
    pub window: Option<(f64, f64)>,
}

fn parse_window(s: &str) -> Result<(f64, f64), String> {
    let (lo, hi) = s
        .split_once(':')
        .ok_or_else(|| "expected LO_HZ:HI_HZ".to_string())?;
    let lo: f64 = lo.trim().parse().map_err(|e| format!("bad LO_HZ: {e}"))?;
    let hi: f64 = hi.trim().parse().map_err(|e| format!("bad HI_HZ: {e}"))?;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err("window needs finite LO_HZ < HI_HZ".into());
    }
    Ok((lo, hi))
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Parse(String),
    #[error("{0}")]
    Runtime(String),
    #[error("{0}")]
    Verify(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(_) => 1,
            CliError::Parse(_) => 2,
            CliError::Runtime(_) => 3,
            CliError::Verify(_) => 4,
        }
    }

    pub fn code(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Config(_) => "config",
            CliError::Parse(_) => "parse",
            CliError::Runtime(_) => "runtime",
            CliError::Verify(_) => "verify",
        }
    }

    /// Single-line diagnostic, `error[code]: message`.
    pub fn diagnostic(&self) -> String {
        let msg = self.to_string().replace('\n', " ");
        format!("error[{}]: {msg}", self.code())
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.to_string())
    }
}

fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

fn load_config(common: &CommonArgs) -> Result<(Loaded, bool), CliError> {
    match &common.config {
        Some(p) => Ok((config::load(p)?, false)),
        None => Ok((
            config::parse(TCE_CONFIG, Path::new("<bundled tce.cfg>"), PathBuf::new())?,
            true,
        )),
    }
}

fn read_script(path: &Path, loaded: &Loaded) -> Result<Sequence, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    parse(&text, &loaded.system).map_err(|e| CliError::Parse(format!("{}:{e}", path.display())))
}

/// The configured script for `which`, or the built-in one when the
/// configuration is the bundled one or names no path.
fn sequence(loaded: &Loaded, bundled: bool, which: Builtin) -> Result<Sequence, CliError> {
    let configured = match which {
        Builtin::Prep => &loaded.config.paths.prep,
        Builtin::Entangle => &loaded.config.paths.entangle,
    };
    match configured {
        Some(p) if !bundled => read_script(&loaded.resolve(p), loaded),
        _ => parse(which.script(), &loaded.system)
            .map_err(|e| CliError::Parse(format!("<builtin {which}>:{e}"))),
    }
}

fn experiment(loaded: &Loaded, bundled: bool) -> Result<(Experiment, Sequence, Sequence), CliError> {
    let prep = sequence(loaded, bundled, Builtin::Prep)?;
    let entangle = sequence(loaded, bundled, Builtin::Entangle)?;
    let mut exp =
        Experiment::with_sequences(loaded.system.clone(), &prep, &entangle).map_err(runtime)?;
    exp.fid = loaded.fid;
    Ok((exp, prep, entangle))
}

fn out_dir(arg: &Option<PathBuf>, loaded: &Loaded, bundled: bool) -> PathBuf {
    match (arg, &loaded.config.paths.output) {
        (Some(p), _) => p.clone(),
        (None, Some(p)) if !bundled => loaded.resolve(p),
        _ => PathBuf::from("out"),
    }
}

fn write_out(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, CliError> {
    output::write(dir, name, contents)
        .map_err(|e| CliError::Runtime(format!("{}: {e}", dir.join(name).display())))?;
    Ok(dir.join(name))
}

/// Parses `args` (including the program name) and runs the command,
/// writing the human-readable report to `out`.
pub fn run<I, T>(args: I, out: &mut dyn Write) -> Result<(), CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = write!(out, "{e}");
            return Ok(());
        }
        Err(e) => {
            let first = e.to_string().lines().next().unwrap_or("").to_string();
            let first = first.trim_start_matches("error: ").to_string();
            return Err(CliError::Usage(first));
        }
    };
    let io = |e: std::io::Error| CliError::Runtime(e.to_string());
    match cli.command {
        Command::State(a) => cmd_state(&a, out)?,
        Command::Scan(a) => cmd_scan(&a, out)?,
        Command::Spectrum(a) => cmd_spectrum(&a, out)?,
        Command::Verify(a) => cmd_verify(&a, out)?,
    }
    out.flush().map_err(io)
}

fn cmd_state(a: &StateArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let (loaded, bundled) = load_config(&a.common)?;
    let seq = match &a.script {
        Some(p) => read_script(p, &loaded)?,
        None => sequence(&loaded, bundled, Builtin::Prep)?,
    };
    let sys = loaded.system.clone();
    let decoupled = if a.coupled {
        nmrdeco_core::SpinSet::EMPTY
    } else {
        sys.env_spins()
    };
    let start = SimState::equilibrium(sys.clone())
        .and_then(|s| s.with_decoupled(decoupled))
        .map_err(runtime)?;
    let end = start.run(&seq).map_err(runtime)?;
    let mut text = format!(
        "spins: {}\nevents: {}\ndecoupled at start: {{{}}}\n\n",
        sys.labels().join(", "),
        seq.len(),
        decoupled
    );
    text.push_str(&state_report(end.rho(), sys.n()).map_err(runtime)?);
    let path = write_out(&out_dir(&a.out, &loaded, bundled), "state.txt", &text)?;
    write!(out, "{text}\nwritten: {}\n", path.display()).map_err(runtime)
}

fn theory_period(loaded: &Loaded) -> Option<f64> {
    match loaded.system.environment_couplings().as_slice() {
        [(a, b)] if a + b != 0.0 => Some(2.0 / (a + b).abs()),
        _ => None,
    }
}

fn cmd_scan(a: &ScanArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let (loaded, bundled) = load_config(&a.common)?;
    let scan = loaded
        .config
        .scan
        .ok_or_else(|| CliError::Config("configuration has no [scan] block".into()))?;
    let (exp, _, _) = experiment(&loaded, bundled)?;
    let mode = a.mode.map(SpectrumMode::from).unwrap_or(loaded.mode);
    let window = a.window.unwrap_or_else(|| loaded.window());
    let times = scan.times();
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(j) = a.jobs {
        if j == 0 {
            return Err(CliError::Usage("--jobs must be at least 1".into()));
        }
        pool = pool.num_threads(j);
    }
    let pool = pool.build().map_err(runtime)?;
    let result = pool
        .install(|| run_scan(&exp, &times, mode, window))
        .map_err(runtime)?;

    let dir = out_dir(&a.out, &loaded, bundled);
    let theory = theory_period(&loaded);
    let report = FitReport::new(&result.fit, theory, result.phase);
    let files = [
        write_out(&dir, "curve.csv", &output::curve_csv(&result.points))?,
        write_out(&dir, "envelope.csv", &output::envelope_csv(&result.points))?,
        write_out(&dir, "fit.json", &report.to_json())?,
    ];

    let mut text = format!(
        "scan: {} points, t = {} .. {} s, window [{}, {}] Hz, mode {mode}\n",
        times.len(),
        sig4(scan.t_start),
        sig4(scan.t_stop),
        sig4(window.0),
        sig4(window.1)
    );
    match &result.fit {
        Ok(f) => text.push_str(&format!(
            "fit: A = {}, T = {} ms, rms residual = {}\n",
            sig4(f.amplitude),
            format_ms(f.period),
            sig4(f.rms_residual)
        )),
        Err(e) => eprintln!("warning: fit failed: {e}"),
    }
    if let Some(t) = theory {
        text.push_str(&format!("theory: T = 2/(J1k+J2k) = {} ms", format_ms(t)));
        if let Some(r) = report.relative_error_vs_theory {
            text.push_str(&format!(", fitted T differs by {} %", sig4(100.0 * r)));
        }
        text.push('\n');
    }
    let paper = PaperExperiment::bundled();
    text.push_str(&format!(
        "paper experiment (informational, not reproducible here): A = {}, T = {} ms vs theoretical {} ms, \
         discrepancy {} % from pulse imperfection and uncontrolled decoherence, which are not simulated\n",
        paper.amplitude,
        format_ms(paper.period_s),
        format_ms(paper.theory_period_s),
        sig4(100.0 * paper.discrepancy())
    ));
    for f in &files {
        text.push_str(&format!("written: {}\n", f.display()));
    }
    write!(out, "{text}").map_err(runtime)
}

fn format_ms(seconds: f64) -> String {
    format!("{:.4}", seconds * 1e3)
}

fn cmd_spectrum(a: &SpectrumArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let (loaded, bundled) = load_config(&a.common)?;
    if !(a.t.is_finite() && a.t >= 0.0) {
        return Err(CliError::Usage("--t must be a non-negative number of seconds".into()));
    }
    let (exp, _, _) = experiment(&loaded, bundled)?;
    let mode = a.mode.map(SpectrumMode::from).unwrap_or(loaded.mode);
    let window = a.window.unwrap_or_else(|| loaded.window());
    let phase = match mode {
        SpectrumMode::Real => reference_phase(&exp, window).map_err(runtime)?,
        SpectrumMode::Magnitude => 0.0,
    };
    let spec = spectrum_at(&exp, a.t, mode, phase).map_err(runtime)?;
    let to_ppm = loaded.config.spectrometer.map(|s| move |hz: f64| s.hz_to_ppm(hz));
    let csv = output::spectrum_csv(&spec, to_ppm.as_ref().map(|f| f as &dyn Fn(f64) -> f64));
    let path = write_out(&out_dir(&a.out, &loaded, bundled), "spectrum.csv", &csv)?;

    let bin = spec.freq_hz[1] - spec.freq_hz[0];
    let mut text = format!(
        "spectrum at t = {} s: {} points, bin {} Hz, mode {mode}\nlines (>= 5 % of the tallest):\n",
        sig4(a.t),
        spec.len(),
        sig4(bin)
    );
    let lines = find_lines(&spec, 0.05);
    for l in &lines {
        let ppm = loaded
            .ppm_axis(l.freq_hz)
            .map(|p| format!("  {:>9.4} ppm", p))
            .unwrap_or_default();
        text.push_str(&format!("  {:>10.3} Hz{ppm}  |X| = {}\n", l.freq_hz, sig4(l.magnitude)));
    }
    let sys = &loaded.system;
    for k in sys.system_spins().iter() {
        let nu = sys.offsets_hz()[k - 1];
        let freqs: Vec<f64> = lines.iter().map(|l| l.freq_hz).collect();
        if let Some((centre, split)) = find_doublet(&freqs, nu, sys.j(1, 2).abs()) {
            let ppm = loaded
                .ppm_axis(centre)
                .map(|p| format!(" ({:.4} ppm)", p))
                .unwrap_or_default();
            text.push_str(&format!(
                "{}: doublet centred at {:.3} Hz{ppm}, splitting {:.3} Hz\n",
                sys.labels()[k - 1],
                centre,
                split
            ));
        }
    }
    text.push_str(&format!("written: {}\n", path.display()));
    write!(out, "{text}").map_err(runtime)
}

fn cmd_verify(a: &CommonArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let (loaded, bundled) = load_config(a)?;
    let (exp, prep, entangle) = experiment(&loaded, bundled)?;
    let times = match loaded.config.scan {
        Some(s) => s.times(),
        None => (0..41).map(|i| i as f64 * 0.5e-3).collect(),
    };
    let suite = verify::run_all(&exp, &prep, &entangle, &times).map_err(runtime)?;
    for c in &suite.checks {
        writeln!(out, "{}", c.line()).map_err(runtime)?;
    }
    let failed = suite
        .checks
        .iter()
        .filter(|c| !c.passed && !c.informational)
        .count();
    if failed > 0 {
        return Err(CliError::Verify(format!("{failed} check(s) failed")));
    }
    writeln!(out, "all checks passed").map_err(runtime)
}
