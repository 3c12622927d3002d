//! Parameter grids over `(g, t)` and `(g, N)`.
//!
//! Rows of constant `g` are independent and are evaluated in parallel when the
//! `parallel` feature is enabled. Results are gathered by row index, so the
//! output never depends on scheduling.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::echo::clamp_echo;
use crate::error::{Error, Result};
use crate::model::{classify_phase, critical_coupling, DickeParams, PhaseLabel, CRITICAL_TOLERANCE};
use crate::oracle::{echo_exact, photon_statistics, EchoOptions, GroundStateResult};
use crate::polariton::{analytic_variance, VarianceReport};

/// Relative half-width around `g_c` left out of analytic sweeps.
pub const DEFAULT_SKIP_BAND: f64 = 1e-3;

/// Largest N the exact engine accepts by default.
pub const DEFAULT_EXACT_BUDGET: u32 = 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    Linear,
    Log,
}

impl FromStr for Spacing {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" | "lin" => Ok(Spacing::Linear),
            "log" => Ok(Spacing::Log),
            other => Err(Error::InvalidGrid(format!("unknown spacing '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AxisParam {
    G,
    T,
    N,
}

impl AxisParam {
    pub fn column(&self) -> &'static str {
        match self {
            AxisParam::G => "g",
            AxisParam::T => "t",
            AxisParam::N => "N",
        }
    }
}

/// A named, strictly increasing list of grid values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub param: AxisParam,
    pub values: Vec<f64>,
}

fn range(start: f64, stop: f64, count: usize, spacing: Spacing) -> Result<Vec<f64>> {
    if count < 2 {
        return Err(Error::InvalidGrid(format!(
            "range needs at least 2 points, got {count}"
        )));
    }
    if !(start.is_finite() && stop.is_finite() && start < stop) {
        return Err(Error::InvalidGrid(format!("range [{start}, {stop}] is not ordered")));
    }
    let last = (count - 1) as f64;
    Ok(match spacing {
        Spacing::Linear => (0..count).map(|i| start + (stop - start) * (i as f64 / last)).collect(),
        Spacing::Log => {
            if start <= 0.0 {
                return Err(Error::InvalidGrid(format!(
                    "log spacing needs a positive start, got {start}"
                )));
            }
            let (a, b) = (start.ln(), stop.ln());
            (0..count).map(|i| (a + (b - a) * (i as f64 / last)).exp()).collect()
        }
    })
}

impl Axis {
    /// Evenly spaced values; atom numbers are rounded to integers.
    pub fn range(param: AxisParam, start: f64, stop: f64, count: usize, spacing: Spacing) -> Result<Self> {
        let mut values = range(start, stop, count, spacing)?;
        if param == AxisParam::N {
            values.iter_mut().for_each(|v| *v = v.round());
        }
        Axis::list(param, values)
    }

    /// Concatenation of ordered, non-overlapping ranges.
    pub fn union(param: AxisParam, segments: &[(f64, f64, usize, Spacing)]) -> Result<Self> {
        let mut values = Vec::new();
        for &(start, stop, count, spacing) in segments {
            values.extend(range(start, stop, count, spacing)?);
        }
        Axis::list(param, values)
    }

    pub fn list(param: AxisParam, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidGrid(format!("{} axis is empty", param.column())));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidGrid(format!(
                "{} axis values must be finite and non-negative",
                param.column()
            )));
        }
        if values.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidGrid(format!(
                "{} axis must be strictly increasing",
                param.column()
            )));
        }
        if param == AxisParam::N
            && values
                .iter()
                .any(|v| v.fract() != 0.0 || *v < 1.0 || *v > f64::from(u32::MAX))
        {
            return Err(Error::InvalidGrid("N axis values must be positive integers".into()));
        }
        Ok(Axis { param, values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Engine {
    Analytic,
    Exact,
    Both,
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Engine::Analytic => "analytic",
            Engine::Exact => "exact",
            Engine::Both => "both",
        })
    }
}

impl FromStr for Engine {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "analytic" => Ok(Engine::Analytic),
            "exact" => Ok(Engine::Exact),
            "both" => Ok(Engine::Both),
            other => Err(Error::InvalidParams(format!("unknown engine '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    /// Everything but the swept parameters.
    pub base: DickeParams,
    /// Always the coupling `g`.
    pub axis1: Axis,
    /// Time or atom number.
    pub axis2: Axis,
    /// Evaluation time when `axis2` is the atom number.
    pub fixed_time: f64,
    pub engine: Engine,
    pub skip_band: f64,
    pub exact_budget: u32,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.axis1.param != AxisParam::G {
            return Err(Error::InvalidGrid("axis1 must sweep g".into()));
        }
        if self.axis2.param == AxisParam::G {
            return Err(Error::InvalidGrid("axis2 must sweep t or N".into()));
        }
        if !(self.skip_band.is_finite() && self.skip_band >= CRITICAL_TOLERANCE) {
            return Err(Error::InvalidGrid(format!(
                "skip band {} must be at least {CRITICAL_TOLERANCE:e}",
                self.skip_band
            )));
        }
        if !(self.fixed_time.is_finite() && self.fixed_time >= 0.0) {
            return Err(Error::InvalidGrid(format!("fixed time {} is invalid", self.fixed_time)));
        }
        for &g in &self.axis1.values {
            self.base.with_g(g)?;
        }
        Ok(())
    }

    /// Cells on the full grid, before skipping.
    pub fn grid_size(&self) -> usize {
        self.axis1.len() * self.axis2.len()
    }

    fn in_skip_band(&self, g: f64) -> bool {
        self.engine != Engine::Exact && (g / critical_coupling(&self.base) - 1.0).abs() < self.skip_band
    }
}

/// The figure presets: `omega0 = 1.44 omega`, `delta = 0.001 omega`, `N = 100`.
pub mod presets {
    use super::*;

    pub const OMEGA0: f64 = 1.44;
    pub const DELTA_TILDE: f64 = 0.001;
    pub const N_ATOMS: u32 = 100;
    pub const CROSS_SECTION_TIME: f64 = 100.0;

    fn base() -> DickeParams {
        DickeParams::new(1.0, OMEGA0, 0.0, N_ATOMS, DELTA_TILDE).expect("preset parameters are valid")
    }

    /// 60 + 60 couplings on either side of `g_c = 0.6`.
    pub fn coupling_axis() -> Axis {
        Axis::union(
            AxisParam::G,
            &[(0.01, 0.59, 60, Spacing::Linear), (0.61, 1.2, 60, Spacing::Linear)],
        )
        .expect("preset axis is valid")
    }

    /// `(g, t)` surface, `t` in `[0, 100]`.
    pub fn fig2() -> SweepSpec {
        SweepSpec {
            base: base(),
            axis1: coupling_axis(),
            axis2: Axis::range(AxisParam::T, 0.0, CROSS_SECTION_TIME, 101, Spacing::Linear)
                .expect("preset axis is valid"),
            fixed_time: CROSS_SECTION_TIME,
            engine: Engine::Analytic,
            skip_band: DEFAULT_SKIP_BAND,
            exact_budget: DEFAULT_EXACT_BUDGET,
        }
    }

    /// The `t = 100` cross-section of [`fig2`].
    pub fn fig3() -> SweepSpec {
        SweepSpec {
            axis2: Axis::list(AxisParam::T, vec![CROSS_SECTION_TIME]).expect("preset axis is valid"),
            ..fig2()
        }
    }

    /// Super-radiant couplings at `t = 100` for `N` in `{100, 1000, 10000}`.
    pub fn fig4() -> SweepSpec {
        SweepSpec {
            axis1: Axis::range(AxisParam::G, 0.61, 1.2, 60, Spacing::Linear).expect("preset axis is valid"),
            axis2: Axis::list(AxisParam::N, vec![100.0, 1000.0, 10000.0]).expect("preset axis is valid"),
            ..fig2()
        }
    }

    pub fn by_name(name: &str) -> Option<SweepSpec> {
        match name {
            "fig2" => Some(fig2()),
            "fig3" => Some(fig3()),
            "fig4" => Some(fig4()),
            _ => None,
        }
    }
}

/// JSON has no NaN; failed cells carry `null` instead.
mod nan_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        if x.is_nan() {
            s.serialize_none()
        } else {
            s.serialize_f64(*x)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Flag {
    NearCritical,
    /// `L` left `[0, 1]` by more than the clamp slack before clamping.
    Clamped,
    Error(String),
}

impl fmt::Display for Flag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Flag::NearCritical => f.write_str("near_critical"),
            Flag::Clamped => f.write_str("clamped"),
            Flag::Error(msg) => write!(f, "error:{msg}"),
        }
    }
}

impl FromStr for Flag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "near_critical" => Ok(Flag::NearCritical),
            "clamped" => Ok(Flag::Clamped),
            _ => s
                .strip_prefix("error:")
                .map(|m| Flag::Error(m.to_string()))
                .ok_or_else(|| Error::InvalidParams(format!("unknown cell flag '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub g: f64,
    /// `t` or `N`, depending on the second axis.
    pub x: f64,
    /// Echo of the primary engine (the analytic one for [`Engine::Both`]).
    #[serde(with = "nan_as_null")]
    pub l: f64,
    #[serde(with = "nan_as_null")]
    pub gamma: f64,
    pub phase: PhaseLabel,
    pub flags: Vec<Flag>,
    /// Exact `(L, gamma)` for [`Engine::Both`].
    pub exact: Option<(f64, f64)>,
}

impl Cell {
    pub fn is_error(&self) -> bool {
        self.flags.iter().any(|f| matches!(f, Flag::Error(_)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub engine: Engine,
    pub version: String,
    /// Seconds since the Unix epoch; absent in reproducible runs.
    pub timestamp: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub spec: SweepSpec,
    /// Row-major in `(g, x)`, skipped rows left out.
    pub cells: Vec<Cell>,
    /// Couplings left out because they fall inside the skip band.
    pub skipped: Vec<f64>,
    pub provenance: Provenance,
}

impl SweepResult {
    pub fn cell(&self, g: f64, x: f64) -> Option<&Cell> {
        self.cells.iter().find(|c| c.g == g && c.x == x)
    }

    /// Cells at one value of the second axis, in order of `g`.
    pub fn cross_section(&self, x: f64) -> Vec<&Cell> {
        self.cells.iter().filter(|c| c.x == x).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    /// `None` uses the global rayon pool.
    Parallel {
        threads: Option<usize>,
    },
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel { threads: None }
        } else {
            Execution::Sequential
        }
    }
}

impl Execution {
    pub fn with_threads(threads: Option<usize>) -> Self {
        match threads {
            Some(1) => Execution::Sequential,
            threads if cfg!(feature = "parallel") => Execution::Parallel { threads },
            _ => Execution::Sequential,
        }
    }
}

/// `(0..n).map(f)` with the results in index order whatever the execution.
pub fn ordered_map<T, F>(n: usize, exec: Execution, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match exec {
        Execution::Sequential => (0..n).map(f).collect(),
        #[cfg(feature = "parallel")]
        Execution::Parallel { threads } => {
            use rayon::prelude::*;
            let run = || (0..n).into_par_iter().map(&f).collect();
            match threads {
                None => run(),
                Some(k) => match rayon::ThreadPoolBuilder::new().num_threads(k).build() {
                    Ok(pool) => pool.install(run),
                    Err(_) => (0..n).map(&f).collect(),
                },
            }
        }
        #[cfg(not(feature = "parallel"))]
        Execution::Parallel { .. } => (0..n).map(f).collect(),
    }
}

fn error_cell(g: f64, x: f64, phase: PhaseLabel, err: &Error) -> Cell {
    Cell {
        g,
        x,
        l: f64::NAN,
        gamma: f64::NAN,
        phase,
        flags: vec![Flag::Error(err.to_string())],
        exact: None,
    }
}

fn gaussian(gamma: f64, delta: f64, t: f64) -> (f64, bool) {
    clamp_echo((-4.0 * gamma * delta * delta * t * t).exp())
}

/// Analytic `(L, gamma, flags)` at one point.
fn analytic_point(report: &VarianceReport, delta: f64, t: f64) -> (f64, f64, Vec<Flag>) {
    let (l, clamped) = gaussian(report.gamma, delta, t);
    let mut flags = Vec::new();
    if report.near_critical {
        flags.push(Flag::NearCritical);
    }
    if clamped {
        flags.push(Flag::Clamped);
    }
    (l, report.gamma, flags)
}

/// `(L, clamped)` per time, `gamma_exact`, and the ground state.
type ExactRow = (Vec<(f64, bool)>, f64, GroundStateResult);

/// Exact echo of one parameter point at the given times, with the variance.
fn exact_row(p: &DickeParams, times: &[f64], budget: u32) -> Result<ExactRow> {
    if p.n_atoms() > budget {
        return Err(Error::BudgetExceeded {
            n_atoms: p.n_atoms(),
            budget,
        });
    }
    let (echo, gs) = echo_exact(p, times, &EchoOptions::default())?;
    let gamma = photon_statistics(&gs).variance;
    let clamped = echo.clamp_violations > 0;
    let values = echo.curve.values.iter().map(|&l| (l, clamped)).collect();
    Ok((values, gamma, gs))
}

/// Cells for one coupling across the whole second axis.
fn evaluate_row(spec: &SweepSpec, g: f64) -> Vec<Cell> {
    let xs = &spec.axis2.values;
    let base = match spec.base.with_g(g) {
        Ok(p) => p,
        Err(e) => return xs.iter().map(|&x| error_cell(g, x, PhaseLabel::Normal, &e)).collect(),
    };
    let phase = classify_phase(&base);
    // (params, times) for each x; a time axis shares one parameter point.
    let points: Vec<(DickeParams, Vec<f64>)> = match spec.axis2.param {
        AxisParam::T => vec![(base, xs.clone())],
        _ => xs
            .iter()
            .map(|&n| {
                (
                    base.with_n_atoms(n as u32).expect("validated N axis"),
                    vec![spec.fixed_time],
                )
            })
            .collect(),
    };

    let mut cells = Vec::with_capacity(xs.len());
    for (p, times) in points {
        let analytic = if spec.engine == Engine::Exact {
            None
        } else {
            Some(analytic_variance(&p))
        };
        let exact = if spec.engine == Engine::Analytic {
            None
        } else {
            Some(exact_row(&p, &times, spec.exact_budget))
        };
        for (k, &t) in times.iter().enumerate() {
            let x = if spec.axis2.param == AxisParam::T {
                t
            } else {
                f64::from(p.n_atoms())
            };
            let cell = match (&analytic, &exact) {
                (Some(Err(e)), _) => error_cell(g, x, phase, e),
                (Some(Ok(report)), exact) => {
                    debug_assert_eq!(report.phase, phase);
                    let (l, gamma, mut flags) = analytic_point(report, p.delta_tilde(), t);
                    let exact = match exact {
                        Some(Ok((values, gamma_exact, _))) => {
                            if values[k].1 {
                                flags.push(Flag::Clamped);
                            }
                            Some((values[k].0, *gamma_exact))
                        }
                        Some(Err(e)) => {
                            flags.push(Flag::Error(e.to_string()));
                            None
                        }
                        None => None,
                    };
                    Cell {
                        g,
                        x,
                        l,
                        gamma,
                        phase,
                        flags,
                        exact,
                    }
                }
                (None, Some(Ok((values, gamma, _)))) => Cell {
                    g,
                    x,
                    l: values[k].0,
                    gamma: *gamma,
                    phase,
                    flags: if values[k].1 { vec![Flag::Clamped] } else { Vec::new() },
                    exact: None,
                },
                (None, Some(Err(e))) => error_cell(g, x, phase, e),
                (None, None) => unreachable!("at least one engine runs"),
            };
            cells.push(cell);
        }
    }
    cells
}

pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    run_sweep_with(spec, Execution::default())
}

pub fn run_sweep_with(spec: &SweepSpec, exec: Execution) -> Result<SweepResult> {
    spec.validate()?;
    let (kept, skipped): (Vec<f64>, Vec<f64>) = spec.axis1.values.iter().partition(|&&g| !spec.in_skip_band(g));
    let rows = ordered_map(kept.len(), exec, |i| evaluate_row(spec, kept[i]));
    Ok(SweepResult {
        spec: spec.clone(),
        cells: rows.into_iter().flatten().collect(),
        skipped,
        provenance: Provenance {
            engine: spec.engine,
            version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: None,
        },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub g: f64,
    pub x: f64,
    pub phase: PhaseLabel,
    #[serde(with = "nan_as_null")]
    pub gamma_analytic: f64,
    #[serde(with = "nan_as_null")]
    pub gamma_exact: f64,
    #[serde(with = "nan_as_null")]
    pub l_gaussian: f64,
    #[serde(with = "nan_as_null")]
    pub l_exact: f64,
    #[serde(with = "nan_as_null")]
    pub gamma_deviation: f64,
    #[serde(with = "nan_as_null")]
    pub l_deviation: f64,
    pub near_critical: bool,
    pub error: Option<String>,
}

/// Order statistics of one deviation column over the rows that enter the summary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quantiles {
    pub min: f64,
    pub median: f64,
    pub p90: f64,
    pub max: f64,
}

impl Quantiles {
    fn of(mut values: Vec<f64>) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        values.sort_by(f64::total_cmp);
        // Nearest-rank quantile.
        let q = |p: f64| values[((p * values.len() as f64).ceil() as usize).clamp(1, values.len()) - 1];
        Some(Quantiles {
            min: values[0],
            median: q(0.5),
            p90: q(0.9),
            max: values[values.len() - 1],
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonSummary {
    pub included: usize,
    /// Near-critical or failed rows.
    pub excluded: usize,
    pub gamma_deviation: Option<Quantiles>,
    pub l_deviation: Option<Quantiles>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub spec: SweepSpec,
    pub rows: Vec<ComparisonRow>,
    pub summary: ComparisonSummary,
}

/// `|a - e| / |e|`, or the absolute difference when `e` vanishes.
pub fn relative_deviation(approx: f64, exact: f64) -> f64 {
    let diff = (approx - exact).abs();
    if exact == 0.0 {
        diff
    } else {
        diff / exact.abs()
    }
}

fn comparison_row(cell: &Cell, g_c: f64) -> ComparisonRow {
    let near =
        cell.flags.contains(&Flag::NearCritical) || (cell.g / g_c - 1.0).abs() < crate::polariton::NEAR_CRITICAL_BAND;
    let error = cell.flags.iter().find_map(|f| match f {
        Flag::Error(m) => Some(m.clone()),
        _ => None,
    });
    let (l_exact, gamma_exact) = cell.exact.unwrap_or((f64::NAN, f64::NAN));
    ComparisonRow {
        g: cell.g,
        x: cell.x,
        phase: cell.phase,
        gamma_analytic: cell.gamma,
        gamma_exact,
        l_gaussian: cell.l,
        l_exact,
        gamma_deviation: relative_deviation(cell.gamma, gamma_exact),
        l_deviation: relative_deviation(cell.l, l_exact),
        near_critical: near,
        error,
    }
}

/// Analytic against exact on every cell of a small-N grid.
pub fn compare_engines(spec: &SweepSpec, exec: Execution) -> Result<Comparison> {
    let max_n = match spec.axis2.param {
        AxisParam::N => spec.axis2.values.iter().fold(0.0f64, |a, &b| a.max(b)) as u32,
        _ => spec.base.n_atoms(),
    };
    if max_n > spec.exact_budget {
        return Err(Error::BudgetExceeded {
            n_atoms: max_n,
            budget: spec.exact_budget,
        });
    }
    let spec = SweepSpec {
        engine: Engine::Both,
        ..spec.clone()
    };
    let sweep = run_sweep_with(&spec, exec)?;
    let g_c = critical_coupling(&spec.base);
    let rows: Vec<ComparisonRow> = sweep.cells.iter().map(|c| comparison_row(c, g_c)).collect();
    let kept: Vec<&ComparisonRow> = rows.iter().filter(|r| !r.near_critical && r.error.is_none()).collect();
    let summary = ComparisonSummary {
        included: kept.len(),
        excluded: rows.len() - kept.len(),
        gamma_deviation: Quantiles::of(kept.iter().map(|r| r.gamma_deviation).collect()),
        l_deviation: Quantiles::of(kept.iter().map(|r| r.l_deviation).collect()),
    };
    Ok(Comparison { spec, rows, summary })
}
