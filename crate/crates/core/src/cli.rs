//! The `dicke` command line.
//!
//! Physical parameters come from flags, then from an optional flat
//! `key = value` config file, then from built-in defaults. Exit codes: 0 on
//! success, 1 for usage errors, 2 for analytic requests at the critical point,
//! 3 when the exact oracle does not converge.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::Value;

use crate::echo::{validate_times, EchoCurve};
use crate::error::{Error, Result};
use crate::io::{
    format_float, write_comparison_csv, write_decoherence_csv, write_echo_csv, write_json, write_sweep_csv,
};
use crate::model::{critical_coupling, dispersive_shift, DickeParams, PhaseLabel, ProbeAtom};
use crate::oracle::{
    build_hamiltonian, echo_exact_from_ground, ground_state, photon_statistics, EchoOptions, GroundStateOptions,
    OracleReport, PropagationMethod,
};
use crate::polariton::{analytic_variance, frame, loschmidt_echo_gaussian, VarianceReport};
use crate::sweep::{
    compare_engines, presets, run_sweep_with, Axis, AxisParam, Engine, Execution, Spacing, SweepSpec,
    DEFAULT_EXACT_BUDGET, DEFAULT_SKIP_BAND,
};

pub const THREADS_ENV: &str = "DICKE_THREADS";

const DEFAULT_OMEGA: f64 = 1.0;
const DEFAULT_OMEGA0: f64 = presets::OMEGA0;
const DEFAULT_N_ATOMS: u32 = presets::N_ATOMS;
const DEFAULT_DELTA_TILDE: f64 = presets::DELTA_TILDE;

#[derive(Debug, Parser)]
#[command(
    name = "dicke",
    version,
    about = "Loschmidt echo of the Dicke model near its superradiant transition"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// Cavity frequency; the unit of every other frequency.
    #[arg(long, global = true)]
    pub omega: Option<f64>,
    /// Atomic transition frequency [default: 1.44]
    #[arg(long, global = true)]
    pub omega0: Option<f64>,
    /// Collective coupling [default: 0]
    #[arg(long, global = true)]
    pub g: Option<f64>,
    /// Number of atoms [default: 100]
    #[arg(long = "n-atoms", global = true)]
    pub n_atoms: Option<u32>,
    /// Dispersive shift of the cavity [default: 0.001]. Excludes the probe flags.
    #[arg(long = "delta-tilde", global = true, allow_negative_numbers = true)]
    pub delta_tilde: Option<f64>,
    /// Probe coupling; with --delta-s, sets the shift to g_s^2/delta_s.
    #[arg(long = "g-s", global = true)]
    pub g_s: Option<f64>,
    /// Probe detuning.
    #[arg(long = "delta-s", global = true, allow_negative_numbers = true)]
    pub delta_s: Option<f64>,
    /// Probe transition frequency [default: omega + delta_s]
    #[arg(long = "omega-s", global = true)]
    pub omega_s: Option<f64>,
    /// Write to this file instead of stdout.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Worker threads for sweeps.
    #[arg(long, global = true, env = THREADS_ENV)]
    pub threads: Option<usize>,
    /// Flat `key = value` file with defaults for the flags above.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Leave run-dependent metadata (timestamps) out of the output.
    #[arg(long, global = true)]
    pub reproducible: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    Fig2,
    Fig3,
    Fig4,
    Custom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EngineArg {
    Analytic,
    Exact,
    Both,
}

impl From<EngineArg> for Engine {
    fn from(e: EngineArg) -> Self {
        match e {
            EngineArg::Analytic => Engine::Analytic,
            EngineArg::Exact => Engine::Exact,
            EngineArg::Both => Engine::Both,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Auto,
    Spectral,
    Krylov,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SpacingArg {
    Linear,
    Log,
}

#[derive(Debug, Clone, Args)]
pub struct TimeArgs {
    #[arg(long = "t-start")]
    pub t_start: Option<f64>,
    #[arg(long = "t-stop")]
    pub t_stop: Option<f64>,
    #[arg(long = "t-count")]
    pub t_count: Option<usize>,
    /// Explicit comma-separated times instead of a range.
    #[arg(long, value_delimiter = ',', conflicts_with_all = ["t_start", "t_stop", "t_count"])]
    pub times: Option<Vec<f64>>,
}

impl TimeArgs {
    fn given(&self) -> bool {
        self.t_start.is_some() || self.t_stop.is_some() || self.t_count.is_some() || self.times.is_some()
    }

    /// Times on `[0, 100]` with 101 points unless overridden.
    fn grid(&self) -> Result<Vec<f64>> {
        if let Some(times) = &self.times {
            validate_times(times)?;
            return Ok(times.clone());
        }
        let axis = Axis::range(
            AxisParam::T,
            self.t_start.unwrap_or(0.0),
            self.t_stop.unwrap_or(presets::CROSS_SECTION_TIME),
            self.t_count.unwrap_or(101),
            Spacing::Linear,
        )?;
        Ok(axis.values)
    }
}

#[derive(Debug, Clone, Args)]
pub struct GridArgs {
    #[arg(long = "g-start")]
    pub g_start: Option<f64>,
    #[arg(long = "g-stop")]
    pub g_stop: Option<f64>,
    #[arg(long = "g-count", default_value_t = 50)]
    pub g_count: usize,
    #[arg(long = "g-spacing", value_enum, default_value_t = SpacingArg::Linear)]
    pub g_spacing: SpacingArg,
    /// Explicit comma-separated couplings instead of a range.
    #[arg(long = "g-values", value_delimiter = ',', conflicts_with_all = ["g_start", "g_stop"])]
    pub g_values: Option<Vec<f64>>,
    /// Sweep the atom number (at --time) instead of time.
    #[arg(long = "n-values", value_delimiter = ',')]
    pub n_values: Option<Vec<u32>>,
    /// Evaluation time for atom-number sweeps.
    #[arg(long, default_value_t = presets::CROSS_SECTION_TIME)]
    pub time: f64,
    #[command(flatten)]
    pub t: TimeArgs,
}

impl GridArgs {
    fn coupling_axis(&self) -> Result<Axis> {
        if let Some(values) = &self.g_values {
            return Axis::list(AxisParam::G, values.clone());
        }
        match (self.g_start, self.g_stop) {
            (Some(start), Some(stop)) => {
                let spacing = match self.g_spacing {
                    SpacingArg::Linear => Spacing::Linear,
                    SpacingArg::Log => Spacing::Log,
                };
                Axis::range(AxisParam::G, start, stop, self.g_count, spacing)
            }
            _ => Err(Error::InvalidParams(
                "a custom grid needs --g-values or both --g-start and --g-stop".into(),
            )),
        }
    }

    fn second_axis(&self) -> Result<Axis> {
        match &self.n_values {
            Some(ns) => {
                if self.t.given() {
                    return Err(Error::InvalidParams(
                        "--n-values cannot be combined with a time grid".into(),
                    ));
                }
                Axis::list(AxisParam::N, ns.iter().map(|&n| f64::from(n)).collect())
            }
            None => Axis::list(AxisParam::T, self.t.grid()?),
        }
    }

    fn spec(&self, base: DickeParams, engine: Engine, budget: u32, skip_band: f64) -> Result<SweepSpec> {
        Ok(SweepSpec {
            base,
            axis1: self.coupling_axis()?,
            axis2: self.second_axis()?,
            fixed_time: self.time,
            engine,
            skip_band,
            exact_budget: budget,
        })
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Polariton frequencies, mixing angle and photon coefficients.
    Spectrum,
    /// Ground-state photon-number variance gamma.
    Variance,
    /// Short-time Gaussian echo exp(-4 gamma delta^2 t^2), columns t,L.
    Echo {
        #[command(flatten)]
        times: TimeArgs,
        /// Use this variance instead of the analytic one.
        #[arg(long)]
        gamma: Option<f64>,
    },
    /// Exact finite-N ground state, photon statistics and optional exact echo.
    Oracle {
        #[command(flatten)]
        times: TimeArgs,
        /// Run even when N exceeds the exact budget.
        #[arg(long)]
        force: bool,
        #[arg(long, default_value_t = DEFAULT_EXACT_BUDGET)]
        budget: u32,
        #[arg(long, value_enum, default_value_t = MethodArg::Auto)]
        method: MethodArg,
        /// Keep the probe's constant energy +-(omega_s + delta)/2 in H_e/H_g.
        #[arg(long = "keep-offset")]
        keep_offset: bool,
        /// Also write the t,L,ReD,ImD table here.
        #[arg(long = "echo-output")]
        echo_output: Option<PathBuf>,
    },
    /// Figure surfaces over (g, t) or (g, N); columns g,t|N,L,gamma,phase,flags.
    Sweep {
        #[arg(long, value_enum, default_value_t = Preset::Custom)]
        preset: Preset,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long, value_enum)]
        engine: Option<EngineArg>,
        /// Relative half-width around g_c left out of analytic sweeps.
        #[arg(long = "skip-band")]
        skip_band: Option<f64>,
        #[arg(long, default_value_t = DEFAULT_EXACT_BUDGET)]
        budget: u32,
    },
    /// Analytic against exact engine on a small-N grid.
    Compare {
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long, default_value_t = DEFAULT_EXACT_BUDGET)]
        budget: u32,
    },
}

/// Global flags after merging the config file and defaults.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub params: DickeParams,
    pub probe: Option<ProbeAtom>,
    pub output: Option<PathBuf>,
    pub format: Option<Format>,
    pub threads: Option<usize>,
    pub reproducible: bool,
}

const CONFIG_KEYS: [&str; 11] = [
    "omega",
    "omega0",
    "g",
    "n-atoms",
    "delta-tilde",
    "g-s",
    "delta-s",
    "omega-s",
    "threads",
    "format",
    "reproducible",
];

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::InvalidParams(format!("config line {}: expected key = value", i + 1)))?;
        let key = key.trim().replace('_', "-");
        if !CONFIG_KEYS.contains(&key.as_str()) {
            return Err(Error::InvalidParams(format!(
                "config line {}: unknown key '{key}'",
                i + 1
            )));
        }
        if map.insert(key.clone(), value.trim().to_string()).is_some() {
            return Err(Error::InvalidParams(format!(
                "config line {}: duplicate key '{key}'",
                i + 1
            )));
        }
    }
    Ok(map)
}

fn config_value<T: std::str::FromStr>(map: &BTreeMap<String, String>, key: &str) -> Result<Option<T>> {
    map.get(key)
        .map(|v| {
            v.parse()
                .map_err(|_| Error::InvalidParams(format!("config key '{key}': cannot parse '{v}'")))
        })
        .transpose()
}

impl RunConfig {
    pub fn resolve(args: &GlobalArgs) -> Result<Self> {
        let file = match &args.config {
            Some(path) => parse_config(&std::fs::read_to_string(path)?)?,
            None => BTreeMap::new(),
        };
        let pick = |flag: Option<f64>, key: &str| -> Result<Option<f64>> { Ok(flag.or(config_value(&file, key)?)) };

        let flag_probe = args.g_s.is_some() || args.delta_s.is_some() || args.omega_s.is_some();
        if flag_probe && args.delta_tilde.is_some() {
            return Err(Error::InvalidParams(
                "--delta-tilde and the probe flags (--g-s, --delta-s, --omega-s) are mutually exclusive".into(),
            ));
        }
        // A source that names the probe replaces the other source's shift entirely.
        let (delta_tilde, g_s, delta_s, omega_s) = if flag_probe {
            (None, args.g_s, args.delta_s, args.omega_s)
        } else if args.delta_tilde.is_some() {
            (args.delta_tilde, None, None, None)
        } else {
            let file_probe = ["g-s", "delta-s", "omega-s"].iter().any(|k| file.contains_key(*k));
            if file_probe && file.contains_key("delta-tilde") {
                return Err(Error::InvalidParams(
                    "config sets both delta-tilde and probe keys".into(),
                ));
            }
            (
                config_value(&file, "delta-tilde")?,
                config_value(&file, "g-s")?,
                config_value(&file, "delta-s")?,
                config_value(&file, "omega-s")?,
            )
        };

        let omega = pick(args.omega, "omega")?.unwrap_or(DEFAULT_OMEGA);
        let probe = match (g_s, delta_s) {
            (Some(g_s), Some(delta_s)) => {
                let omega_s = omega_s.unwrap_or(omega + delta_s);
                let amp = num_complex::Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
                Some(ProbeAtom::new(omega_s, g_s, delta_s, amp, amp)?)
            }
            (None, None) if omega_s.is_none() => None,
            _ => return Err(Error::InvalidParams("the probe needs both --g-s and --delta-s".into())),
        };
        // Only delta^2 and the H_g <-> H_e labelling depend on the sign of
        // the shift, and swapping the labels conjugates D; store |delta|.
        let delta_tilde = match &probe {
            Some(probe) => dispersive_shift(probe)?.abs(),
            None => delta_tilde.unwrap_or(DEFAULT_DELTA_TILDE),
        };
        let params = DickeParams::new(
            omega,
            pick(args.omega0, "omega0")?.unwrap_or(DEFAULT_OMEGA0),
            pick(args.g, "g")?.unwrap_or(0.0),
            args.n_atoms
                .or(config_value(&file, "n-atoms")?)
                .unwrap_or(DEFAULT_N_ATOMS),
            delta_tilde,
        )?;
        let format = match (args.format, file.get("format").map(String::as_str)) {
            (Some(f), _) => Some(f),
            (None, Some("csv")) => Some(Format::Csv),
            (None, Some("json")) => Some(Format::Json),
            (None, Some(other)) => {
                return Err(Error::InvalidParams(format!(
                    "config key 'format': unknown format '{other}'"
                )))
            }
            (None, None) => None,
        };
        let threads = args.threads.or(config_value(&file, "threads")?);
        if threads == Some(0) {
            return Err(Error::InvalidParams("--threads must be at least 1".into()));
        }
        Ok(RunConfig {
            params,
            probe,
            output: args.output.clone(),
            format,
            threads,
            reproducible: args.reproducible || config_value(&file, "reproducible")?.unwrap_or(false),
        })
    }

    fn execution(&self) -> Execution {
        Execution::with_threads(self.threads)
    }

    fn timestamp(&self) -> Option<u64> {
        if self.reproducible {
            None
        } else {
            SystemTime::now().duration_since(UNIX_EPOCH).ok().map(|d| d.as_secs())
        }
    }
}

/// Process exit code for an error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::CriticalPoint { .. } => 2,
        Error::NoConvergence { .. } | Error::StepTooLarge { .. } => 3,
        _ => 1,
    }
}

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

/// One-row CSV of a flat JSON object; arrays expand to `key1..keyN`.
fn object_csv<W: Write>(value: &Value, out: W) -> Result<()> {
    fn cell(v: &Value) -> String {
        match v {
            Value::Null => String::new(),
            Value::Number(n) if n.is_f64() => format_float(n.as_f64().unwrap_or(f64::NAN)),
            Value::String(s) => s.clone(),
            other => other.to_string(),
        }
    }
    let mut header = Vec::new();
    let mut row = Vec::new();
    if let Value::Object(map) = value {
        for (key, v) in map {
            match v {
                Value::Array(items) => {
                    for (i, item) in items.iter().enumerate() {
                        header.push(format!("{key}{}", i + 1));
                        row.push(cell(item));
                    }
                }
                Value::Object(_) => {}
                v => {
                    header.push(key.clone());
                    row.push(cell(v));
                }
            }
        }
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(&header)?;
    w.write_record(&row)?;
    w.flush()?;
    Ok(())
}

fn emit_object<T: Serialize>(cfg: &RunConfig, value: &T) -> Result<()> {
    let mut out = open_output(cfg.output.as_deref())?;
    match cfg.format.unwrap_or(Format::Json) {
        Format::Json => write_json(value, &mut out)?,
        Format::Csv => object_csv(&serde_json::to_value(value)?, &mut out)?,
    }
    out.flush()?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct SpectrumOutput {
    phase: PhaseLabel,
    g: f64,
    g_c: f64,
    omega_minus: f64,
    omega_plus: f64,
    theta: f64,
    f: [f64; 4],
    mu: Option<f64>,
    alpha: f64,
    beta: f64,
    near_critical: bool,
    condition: f64,
    symplectic_residual: f64,
}

fn cmd_spectrum(cfg: &RunConfig) -> Result<()> {
    let p = &cfg.params;
    let fr = frame(p)?;
    emit_object(
        cfg,
        &SpectrumOutput {
            phase: fr.phase,
            g: p.g(),
            g_c: critical_coupling(p),
            omega_minus: fr.omega_minus,
            omega_plus: fr.omega_plus,
            theta: fr.theta,
            f: fr.f,
            mu: fr.mu,
            alpha: fr.alpha_disp,
            beta: fr.beta_disp,
            near_critical: fr.near_critical,
            condition: fr.condition,
            symplectic_residual: fr.symplectic_residual(),
        },
    )
}

#[derive(Debug, Serialize)]
struct VarianceOutput {
    g: f64,
    g_c: f64,
    n_atoms: u32,
    #[serde(flatten)]
    report: VarianceReport,
}

fn cmd_variance(cfg: &RunConfig) -> Result<()> {
    let p = &cfg.params;
    let report = analytic_variance(p)?;
    emit_object(
        cfg,
        &VarianceOutput {
            g: p.g(),
            g_c: critical_coupling(p),
            n_atoms: p.n_atoms(),
            report,
        },
    )
}

fn emit_curve(cfg: &RunConfig, curve: &EchoCurve) -> Result<()> {
    let mut out = open_output(cfg.output.as_deref())?;
    match cfg.format.unwrap_or(Format::Csv) {
        Format::Csv => write_echo_csv(curve, &mut out)?,
        Format::Json => write_json(curve, &mut out)?,
    }
    out.flush()?;
    Ok(())
}

fn cmd_echo(cfg: &RunConfig, times: &TimeArgs, gamma: Option<f64>) -> Result<()> {
    let gamma = match gamma {
        Some(g) => g,
        None => analytic_variance(&cfg.params)?.gamma,
    };
    let curve = loschmidt_echo_gaussian(&cfg.params, gamma, &times.grid()?)?;
    emit_curve(cfg, &curve)
}

#[derive(Debug, Serialize)]
struct ExactEchoOutput {
    times: Vec<f64>,
    values: Vec<f64>,
    re_d: Vec<f64>,
    im_d: Vec<f64>,
    constant_offset: f64,
    max_norm_error: f64,
    max_step_error: f64,
    clamp_violations: usize,
}

#[derive(Debug, Serialize)]
struct OracleOutput {
    #[serde(flatten)]
    report: OracleReport,
    gamma_exact: f64,
    /// Couplings out of the top Fock level left out by the truncation.
    dropped_couplings: usize,
    echo: Option<ExactEchoOutput>,
}

struct OracleArgs<'a> {
    times: &'a TimeArgs,
    force: bool,
    budget: u32,
    method: MethodArg,
    keep_offset: bool,
    echo_output: Option<&'a Path>,
}

fn cmd_oracle(cfg: &RunConfig, args: OracleArgs<'_>) -> Result<()> {
    let p = &cfg.params;
    if p.n_atoms() > args.budget && !args.force {
        return Err(Error::BudgetExceeded {
            n_atoms: p.n_atoms(),
            budget: args.budget,
        });
    }
    let format = cfg.format.unwrap_or(Format::Json);
    let want_echo = args.times.given() || args.echo_output.is_some() || format == Format::Csv;
    let constant_offset = if args.keep_offset {
        let probe = cfg
            .probe
            .as_ref()
            .ok_or_else(|| Error::InvalidParams("--keep-offset needs the probe flags --g-s and --delta-s".into()))?;
        probe.constant_offset(p.delta_tilde())
    } else {
        0.0
    };
    let opts = EchoOptions {
        method: match args.method {
            MethodArg::Auto => PropagationMethod::Auto,
            MethodArg::Spectral => PropagationMethod::Spectral,
            MethodArg::Krylov => PropagationMethod::Krylov,
        },
        constant_offset,
        ..EchoOptions::default()
    };
    let gs = ground_state(p, &GroundStateOptions::default())?;
    let stats = photon_statistics(&gs);
    let echo = if want_echo {
        let times = args.times.grid()?;
        Some(echo_exact_from_ground(p, &gs, &times, &opts)?)
    } else {
        None
    };

    if let (Some(path), Some(e)) = (args.echo_output, &echo) {
        let mut w = BufWriter::new(File::create(path)?);
        write_decoherence_csv(&e.curve.times, &e.curve.values, &e.decoherence, &mut w)?;
        w.flush()?;
    }
    let mut out = open_output(cfg.output.as_deref())?;
    match (format, &echo) {
        (Format::Csv, Some(e)) => {
            write_decoherence_csv(&e.curve.times, &e.curve.values, &e.decoherence, &mut out)?;
        }
        _ => {
            let output = OracleOutput {
                report: OracleReport::new(&gs, &stats),
                gamma_exact: stats.variance,
                dropped_couplings: build_hamiltonian(p, &gs.basis)?.dropped_couplings(),
                echo: echo.map(|e| ExactEchoOutput {
                    re_d: e.decoherence.iter().map(|d| d.re).collect(),
                    im_d: e.decoherence.iter().map(|d| d.im).collect(),
                    times: e.curve.times,
                    values: e.curve.values,
                    constant_offset,
                    max_norm_error: e.max_norm_error,
                    max_step_error: e.max_step_error,
                    clamp_violations: e.clamp_violations,
                }),
            };
            write_json(&output, &mut out)?;
        }
    }
    out.flush()?;
    Ok(())
}

fn cmd_sweep(
    cfg: &RunConfig,
    preset: Preset,
    grid: &GridArgs,
    engine: Option<EngineArg>,
    skip_band: Option<f64>,
    budget: u32,
) -> Result<()> {
    let mut spec = match preset {
        Preset::Fig2 => presets::fig2(),
        Preset::Fig3 => presets::fig3(),
        Preset::Fig4 => presets::fig4(),
        Preset::Custom => grid.spec(cfg.params, Engine::Analytic, budget, DEFAULT_SKIP_BAND)?,
    };
    if let Some(e) = engine {
        spec.engine = e.into();
    }
    if let Some(band) = skip_band {
        spec.skip_band = band;
    }
    spec.exact_budget = budget;
    let mut result = run_sweep_with(&spec, cfg.execution())?;
    result.provenance.timestamp = cfg.timestamp();

    let mut out = open_output(cfg.output.as_deref())?;
    match cfg.format.unwrap_or(Format::Csv) {
        Format::Csv => write_sweep_csv(&result, &mut out)?,
        Format::Json => write_json(&result, &mut out)?,
    }
    out.flush()?;
    Ok(())
}

fn cmd_compare(cfg: &RunConfig, grid: &GridArgs, budget: u32) -> Result<()> {
    let spec = grid.spec(cfg.params, Engine::Both, budget, DEFAULT_SKIP_BAND)?;
    let cmp = compare_engines(&spec, cfg.execution())?;
    let mut out = open_output(cfg.output.as_deref())?;
    match cfg.format.unwrap_or(Format::Json) {
        Format::Json => write_json(&cmp, &mut out)?,
        Format::Csv => write_comparison_csv(&cmp, &mut out)?,
    }
    out.flush()?;
    Ok(())
}

pub fn execute(cli: &Cli) -> Result<()> {
    let cfg = RunConfig::resolve(&cli.global)?;
    match &cli.command {
        Command::Spectrum => cmd_spectrum(&cfg),
        Command::Variance => cmd_variance(&cfg),
        Command::Echo { times, gamma } => cmd_echo(&cfg, times, *gamma),
        Command::Oracle {
            times,
            force,
            budget,
            method,
            keep_offset,
            echo_output,
        } => cmd_oracle(
            &cfg,
            OracleArgs {
                times,
                force: *force,
                budget: *budget,
                method: *method,
                keep_offset: *keep_offset,
                echo_output: echo_output.as_deref(),
            },
        ),
        Command::Sweep {
            preset,
            grid,
            engine,
            skip_band,
            budget,
        } => cmd_sweep(&cfg, *preset, grid, *engine, *skip_band, *budget),
        Command::Compare { grid, budget } => cmd_compare(&cfg, grid, *budget),
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
