//! Configuration files, experiment commands and their text/CSV outputs.
//!
//! Configuration values are physical. When `ell` or `k` differ from one the
//! commands nondimensionalise first; the trajectory CSV is then in rescaled
//! variables while equilibrium reports are converted back to physical units.

use std::collections::HashMap;
use std::fmt::{self, Write as _};
use std::io::{self, BufRead, Write};
use std::path::PathBuf;

use crate::error::Error;
use crate::grid::{Field, Grid1D};
use crate::ineqlab::{
    duality_margin, estimate_k_eed, homogeneous_scan, verify_ck, verify_sqrt_distance, Locator,
    RatioReport, SamplerConfig,
};
use crate::model::{
    compute_equilibrium, equilibrium_residual, rescale_params, Equilibrium, MassPair,
    ReactionParams, RescaleReport,
};
use crate::solver::{run, State, StepConfig, Trajectory};

/// Trajectory CSV header, in column order.
pub const CSV_HEADER: &str =
    "t,dt,mass1,mass2,E,E_rel,D,fisher_u,fisher_v,fisher_w,reaction_term,l1_u,l1_v,l1_w,min_conc";

/// Every configuration key with its default, as shown by `--help`.
pub const CONFIG_KEYS: &str = "\
config keys (key = value, # starts a comment):
  alpha, beta, gamma   stoichiometric coefficients ≥ 1      [1, 1, 1]
  ell, k               forward / backward rate constants > 0 [1, 1]
  d1, d2, d3           diffusivities > 0                     [1, 1, 1]
  n                    number of grid cells ≥ 2              [100]
  t_end                final time                            [10]
  dt_init, dt_min      initial / minimal time step           [1e-3, 1e-12]
  safety               max relative change per reaction step [0.2]
  record_every         accepted steps between CSV rows       [1]
  u0, v0, w0           initial profiles: homogeneous A | cosine-bump A | two-blocks A B
                                                             [cosine-bump 2, homogeneous 2, homogeneous 0]
  m1, m2               conserved masses (default: from the initial profiles)
  seed                 sampler seed                          [0]
  samples              admissible samples per verification   [1000]
  n_grid               points of the homogeneous scan        [10001]
  k1                   first constant of the square-root estimate [2 x scan constant]
  threads              sampler threads (results are identical for any value) [1]
  output               trajectory CSV path                   [stdout]
  report               report path for verification commands [stdout]";

// ---------------------------------------------------------------------------
// Errors

/// Configuration error, tied to a line when it came from a file.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

fn cfg_err(line: Option<usize>, message: impl Into<String>) -> ConfigError {
    ConfigError {
        line,
        message: message.into(),
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(#[from] ConfigError),
    #[error("usage error: {0}")]
    Usage(String),
    #[error(transparent)]
    Domain(#[from] Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

impl CliError {
    /// 1 for domain and I/O failures, 2 for usage and configuration errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Usage(_) => 2,
            CliError::Domain(_) | CliError::Io { .. } => 1,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}

// ---------------------------------------------------------------------------
// Initial data

/// Named initial profile on `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Profile {
    /// `A`.
    Homogeneous(f64),
    /// `A (1 − cos 2πx)`, mean `A` under midpoint quadrature.
    CosineBump(f64),
    /// `A` on `x < 1/2`, `B` on `x ≥ 1/2`.
    TwoBlocks(f64, f64),
}

impl Profile {
    pub fn field(&self, g: &Grid1D) -> Field {
        match *self {
            Profile::Homogeneous(a) => Field::constant(g, a),
            Profile::CosineBump(a) => {
                Field::from_fn(g, |x| a * (1.0 - (2.0 * std::f64::consts::PI * x).cos()))
            }
            Profile::TwoBlocks(a, b) => Field::from_fn(g, |x| if x < 0.5 { a } else { b }),
        }
    }

    fn amplitudes(&self) -> Vec<f64> {
        match *self {
            Profile::Homogeneous(a) | Profile::CosineBump(a) => vec![a],
            Profile::TwoBlocks(a, b) => vec![a, b],
        }
    }

    fn scaled(&self, factor: f64) -> Self {
        match *self {
            Profile::Homogeneous(a) => Profile::Homogeneous(a * factor),
            Profile::CosineBump(a) => Profile::CosineBump(a * factor),
            Profile::TwoBlocks(a, b) => Profile::TwoBlocks(a * factor, b * factor),
        }
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Profile::Homogeneous(a) => write!(f, "homogeneous {a}"),
            Profile::CosineBump(a) => write!(f, "cosine-bump {a}"),
            Profile::TwoBlocks(a, b) => write!(f, "two-blocks {a} {b}"),
        }
    }
}

impl std::str::FromStr for Profile {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let mut parts = s.split_whitespace();
        let name = parts.next().ok_or("empty profile")?;
        let nums = parts
            .map(|t| t.parse::<f64>().map_err(|_| format!("bad amplitude `{t}`")))
            .collect::<Result<Vec<_>, _>>()?;
        let profile = match (name, nums.as_slice()) {
            ("homogeneous", &[a]) => Profile::Homogeneous(a),
            ("cosine-bump", &[a]) => Profile::CosineBump(a),
            ("two-blocks", &[a, b]) => Profile::TwoBlocks(a, b),
            ("homogeneous" | "cosine-bump", _) => {
                return Err(format!("`{name}` takes one amplitude"))
            }
            ("two-blocks", _) => return Err("`two-blocks` takes two amplitudes".into()),
            _ => {
                return Err(format!(
                    "unknown profile `{name}` (expected homogeneous, cosine-bump or two-blocks)"
                ))
            }
        };
        if profile
            .amplitudes()
            .iter()
            .any(|a| !(*a >= 0.0) || !a.is_finite())
        {
            return Err("amplitudes must be finite and ≥ 0".into());
        }
        Ok(profile)
    }
}

// ---------------------------------------------------------------------------
// Configuration

/// Everything needed to reproduce a run or a verification.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// Physical parameters.
    pub params: ReactionParams,
    pub n_cells: usize,
    pub step: StepConfig,
    pub u0: Profile,
    pub v0: Profile,
    pub w0: Profile,
    /// Explicit masses; otherwise taken from the initial profiles.
    pub masses: Option<MassPair>,
    pub seed: u64,
    pub samples: usize,
    pub n_grid: usize,
    pub k1: Option<f64>,
    pub threads: usize,
    pub output: Option<PathBuf>,
    pub report: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            params: ReactionParams::new(1.0, 1.0, 1.0, [1.0; 3]).expect("valid defaults"),
            n_cells: 100,
            step: StepConfig::default(),
            u0: Profile::CosineBump(2.0),
            v0: Profile::Homogeneous(2.0),
            w0: Profile::Homogeneous(0.0),
            masses: None,
            seed: 0,
            samples: 1000,
            n_grid: 10001,
            k1: None,
            threads: 1,
            output: None,
            report: None,
        }
    }
}

fn positive(key: &str, v: f64) -> Result<f64, String> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("{key} must be > 0, got {v}"))
    }
}

impl RunConfig {
    /// Set one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        let num = || -> Result<f64, String> {
            value
                .parse::<f64>()
                .map_err(|_| format!("{key}: expected a number, got `{value}`"))
        };
        let int = || -> Result<u64, String> {
            value
                .parse::<u64>()
                .map_err(|_| format!("{key}: expected a nonnegative integer, got `{value}`"))
        };
        let p = &mut self.params;
        match key {
            "alpha" | "beta" | "gamma" => {
                let v = num()?;
                if !(v >= 1.0) || !v.is_finite() {
                    return Err(format!("{key} must be ≥ 1, got {v}"));
                }
                match key {
                    "alpha" => p.alpha = v,
                    "beta" => p.beta = v,
                    _ => p.gamma = v,
                }
            }
            "ell" => p.ell = positive(key, num()?)?,
            "k" => p.k = positive(key, num()?)?,
            "d1" => p.d1 = positive(key, num()?)?,
            "d2" => p.d2 = positive(key, num()?)?,
            "d3" => p.d3 = positive(key, num()?)?,
            "n" => {
                let n = int()?;
                if n < 2 {
                    return Err(format!("n must be ≥ 2, got {n}"));
                }
                self.n_cells = n as usize;
            }
            "t_end" => self.step.t_end = positive(key, num()?)?,
            "dt_init" => self.step.dt_init = positive(key, num()?)?,
            "dt_min" => self.step.dt_min = positive(key, num()?)?,
            "safety" => {
                let v = num()?;
                if !(v > 0.0 && v <= 1.0) {
                    return Err(format!("safety must lie in (0, 1], got {v}"));
                }
                self.step.safety = v;
            }
            "record_every" => {
                let v = int()?;
                if v == 0 {
                    return Err("record_every must be ≥ 1".into());
                }
                self.step.record_every = v as usize;
            }
            "u0" => self.u0 = value.parse().map_err(|e| format!("u0: {e}"))?,
            "v0" => self.v0 = value.parse().map_err(|e| format!("v0: {e}"))?,
            "w0" => self.w0 = value.parse().map_err(|e| format!("w0: {e}"))?,
            "m1" | "m2" => {
                let v = positive(key, num()?)?;
                let m = self.masses.get_or_insert(MassPair {
                    m1: f64::NAN,
                    m2: f64::NAN,
                });
                if key == "m1" {
                    m.m1 = v;
                } else {
                    m.m2 = v;
                }
            }
            "seed" => self.seed = int()?,
            "samples" => {
                let v = int()?;
                if v == 0 {
                    return Err("samples must be ≥ 1".into());
                }
                self.samples = v as usize;
            }
            "n_grid" => {
                let v = int()?;
                if v < 100 {
                    return Err(format!("n_grid must be ≥ 100, got {v}"));
                }
                self.n_grid = v as usize;
            }
            "k1" => self.k1 = Some(positive(key, num()?)?),
            "threads" => {
                let v = int()?;
                if v == 0 {
                    return Err("threads must be ≥ 1".into());
                }
                self.threads = v as usize;
            }
            "output" => self.output = Some(PathBuf::from(value)),
            "report" => self.report = Some(PathBuf::from(value)),
            _ => return Err(format!("unknown key `{key}`")),
        }
        Ok(())
    }

    /// Cross-key checks that cannot be made one key at a time.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let keyed = |e: Error| cfg_err(None, e.to_string());
        self.params.validate().map_err(keyed)?;
        self.step.validate().map_err(keyed)?;
        if let Some(m) = self.masses {
            if m.m1.is_nan() || m.m2.is_nan() {
                return Err(cfg_err(None, "m1 and m2 must be given together"));
            }
        }
        let g = Grid1D::new(self.n_cells).map_err(keyed)?;
        let masses = self.initial_masses(&g);
        if self.masses.is_none() && !(masses.m1 > 0.0 && masses.m2 > 0.0) {
            return Err(cfg_err(
                None,
                "initial profiles must give positive masses m1 and m2",
            ));
        }
        Ok(())
    }

    /// Serialise to the configuration format; parsing it back gives `self`.
    pub fn to_config_text(&self) -> String {
        let p = &self.params;
        let s = &self.step;
        let mut out = String::new();
        for (k, v) in [
            ("alpha", p.alpha),
            ("beta", p.beta),
            ("gamma", p.gamma),
            ("ell", p.ell),
            ("k", p.k),
            ("d1", p.d1),
            ("d2", p.d2),
            ("d3", p.d3),
            ("t_end", s.t_end),
            ("dt_init", s.dt_init),
            ("dt_min", s.dt_min),
            ("safety", s.safety),
        ] {
            let _ = writeln!(out, "{k} = {v:?}");
        }
        let _ = writeln!(out, "n = {}", self.n_cells);
        let _ = writeln!(out, "record_every = {}", s.record_every);
        let _ = writeln!(out, "u0 = {}", self.u0);
        let _ = writeln!(out, "v0 = {}", self.v0);
        let _ = writeln!(out, "w0 = {}", self.w0);
        if let Some(m) = self.masses {
            let _ = writeln!(out, "m1 = {:?}\nm2 = {:?}", m.m1, m.m2);
        }
        let _ = writeln!(out, "seed = {}", self.seed);
        let _ = writeln!(out, "samples = {}", self.samples);
        let _ = writeln!(out, "n_grid = {}", self.n_grid);
        if let Some(k1) = self.k1 {
            let _ = writeln!(out, "k1 = {k1:?}");
        }
        let _ = writeln!(out, "threads = {}", self.threads);
        if let Some(o) = &self.output {
            let _ = writeln!(out, "output = {}", o.display());
        }
        if let Some(r) = &self.report {
            let _ = writeln!(out, "report = {}", r.display());
        }
        out
    }

    /// Masses of the physical initial profiles.
    fn initial_masses(&self, g: &Grid1D) -> MassPair {
        let mean = |pr: &Profile| pr.field(g).iter().sum::<f64>() * g.dx();
        self.params
            .masses_from_integrals(mean(&self.u0), mean(&self.v0), mean(&self.w0))
    }

    pub fn sampler(&self) -> SamplerConfig {
        SamplerConfig {
            threads: self.threads,
            ..SamplerConfig::default()
        }
    }

    /// Nondimensionalised problem described by this configuration.
    pub fn problem(&self) -> Result<Problem, CliError> {
        self.validate()?;
        let grid = Grid1D::new(self.n_cells)?;
        let physical_masses = match self.masses {
            Some(m) => m,
            None => self.initial_masses(&grid),
        };
        let scaling = if self.params.is_rescaled() {
            None
        } else {
            Some(rescale_params(&self.params, 1.0)?)
        };
        let (params, cf, wf, tf) = match &scaling {
            None => (self.params, 1.0, 1.0, 1.0),
            Some(r) => (
                r.rescaled,
                r.concentration_factor,
                r.w_concentration_factor(),
                r.time_factor,
            ),
        };
        let u = self.u0.scaled(1.0 / cf).field(&grid);
        let v = self.v0.scaled(1.0 / cf).field(&grid);
        let w = self.w0.scaled(1.0 / wf).field(&grid);
        let mut step = self.step;
        step.t_end /= tf;
        step.dt_init /= tf;
        step.dt_min /= tf;
        Ok(Problem {
            grid,
            params,
            masses: MassPair::new(physical_masses.m1 / cf, physical_masses.m2 / cf)?,
            initial: State::new(0.0, u, v, w),
            step,
            scaling,
        })
    }
}

/// A configuration after nondimensionalisation.
#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    pub grid: Grid1D,
    /// Rescaled parameters (`ell = k = 1`).
    pub params: ReactionParams,
    /// Rescaled masses.
    pub masses: MassPair,
    pub initial: State,
    pub step: StepConfig,
    /// `None` when the configuration was already rescaled.
    pub scaling: Option<RescaleReport>,
}

impl Problem {
    /// Equilibrium in physical units.
    pub fn physical_equilibrium(&self, e: &Equilibrium) -> Equilibrium {
        match &self.scaling {
            None => *e,
            Some(r) => Equilibrium {
                a_inf: e.a_inf * r.concentration_factor,
                b_inf: e.b_inf * r.concentration_factor,
                c_inf: e.c_inf * r.w_concentration_factor(),
                residual: e.residual,
            },
        }
    }
}

/// Parse a `key = value` configuration; unset keys keep their defaults.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let mut cfg = RunConfig::default();
    let mut seen: HashMap<String, usize> = HashMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            cfg_err(
                Some(line_no),
                format!("expected `key = value`, got `{line}`"),
            )
        })?;
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() {
            return Err(cfg_err(Some(line_no), "missing key before `=`"));
        }
        if value.is_empty() {
            return Err(cfg_err(Some(line_no), format!("missing value for `{key}`")));
        }
        if let Some(first) = seen.insert(key.to_string(), line_no) {
            return Err(cfg_err(
                Some(line_no),
                format!("duplicate key `{key}` (lines {first} and {line_no})"),
            ));
        }
        cfg.set(key, value).map_err(|m| cfg_err(Some(line_no), m))?;
    }
    cfg.validate()?;
    Ok(cfg)
}

// ---------------------------------------------------------------------------
// Outputs

/// Result of a verification command.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub passed: bool,
    /// `key: value` lines ending in `result: PASS|FAIL`.
    pub report: String,
    /// One line for standard output.
    pub summary: String,
}

fn verdict(passed: bool) -> &'static str {
    if passed {
        "PASS"
    } else {
        "FAIL"
    }
}

struct ReportBuilder {
    name: &'static str,
    text: String,
}

impl ReportBuilder {
    fn new(name: &'static str) -> Self {
        let mut text = String::new();
        let _ = writeln!(text, "command: {name}");
        Self { name, text }
    }

    fn kv(&mut self, key: &str, value: impl fmt::Display) -> &mut Self {
        let _ = writeln!(self.text, "{key}: {value}");
        self
    }

    fn params(&mut self, p: &ReactionParams, m: &MassPair) -> &mut Self {
        self.kv("alpha", p.alpha)
            .kv("beta", p.beta)
            .kv("gamma", p.gamma)
            .kv("d", format!("{} {} {}", p.d1, p.d2, p.d3))
            .kv("w_scale", p.w_scale)
            .kv("m1", m.m1)
            .kv("m2", m.m2)
    }

    fn ratios(&mut self, r: &RatioReport) -> &mut Self {
        self.kv("n_samples", r.n_samples)
            .kv("min_ratio", r.min_ratio)
            .kv("max_ratio", r.max_ratio)
            .kv("argmin", locator(&r.argmin))
            .kv("argmax", locator(&r.argmax))
            .kv("constant_estimate", r.constant_estimate)
    }

    fn finish(mut self, passed: bool, headline: String) -> Outcome {
        let v = verdict(passed);
        self.kv("result", v);
        Outcome {
            passed,
            report: self.text,
            summary: format!("{v} {} {headline}", self.name),
        }
    }
}

fn locator(l: &Locator) -> String {
    match l {
        Locator::Sample(i) => format!("sample {i}"),
        Locator::Mu(m) => format!("mu_c {m}"),
        Locator::Time(t) => format!("t {t}"),
    }
}

/// Write one trajectory row in the CSV schema.
pub fn write_csv<W: Write>(traj: &Trajectory, out: &mut W) -> io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for d in traj.diagnostics() {
        let cols = [
            d.t,
            d.dt,
            d.mass1,
            d.mass2,
            d.entropy,
            d.relative_entropy,
            d.dissipation,
            d.fisher_u,
            d.fisher_v,
            d.fisher_w,
            d.reaction_term,
            d.l1_u,
            d.l1_v,
            d.l1_w,
            d.min_conc,
        ];
        let mut line = String::with_capacity(cols.len() * 24);
        for (i, c) in cols.iter().enumerate() {
            if i > 0 {
                line.push(',');
            }
            let _ = write!(line, "{c:?}");
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

/// Parsed trajectory CSV: the columns of [`CSV_HEADER`] row by row.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl CsvTable {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let idx = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[idx]).collect())
    }

    /// `(t, column)` pairs.
    pub fn series(&self, name: &str) -> Option<Vec<(f64, f64)>> {
        let t = self.column("t")?;
        Some(t.into_iter().zip(self.column(name)?).collect())
    }
}

pub fn read_csv<R: BufRead>(input: R) -> Result<CsvTable, CliError> {
    let bad = |line: usize, msg: String| CliError::Usage(format!("csv line {line}: {msg}"));
    let mut lines = input.lines();
    let header = lines
        .next()
        .ok_or_else(|| CliError::Usage("empty csv".into()))?
        .map_err(|e| CliError::io("<csv>", e))?;
    let columns: Vec<String> = header.trim().split(',').map(str::to_string).collect();
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line.map_err(|e| CliError::io("<csv>", e))?;
        if line.trim().is_empty() {
            continue;
        }
        let row = line
            .trim()
            .split(',')
            .map(|c| {
                c.parse::<f64>()
                    .map_err(|_| bad(i + 2, format!("bad number `{c}`")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        if row.len() != columns.len() {
            return Err(bad(
                i + 2,
                format!("{} fields, header has {}", row.len(), columns.len()),
            ));
        }
        rows.push(row);
    }
    Ok(CsvTable { columns, rows })
}

// ---------------------------------------------------------------------------
// Rate fitting

/// Least-squares decay fit of `ln(value)` against `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFit {
    /// `−slope`.
    pub rate: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub n_points: usize,
}

/// Smallest value kept by [`fit_rate`].
pub const FIT_FLOOR: f64 = 1e-14;

/// Fit `value ≈ exp(intercept − rate·t)` on the tail of the series.
///
/// The tail starts at the first point with `value ≤ value₀/10` and keeps
/// points with `value > 1e-14`. A series that never drops that far is
/// fitted in full.
pub fn fit_rate(series: &[(f64, f64)]) -> crate::Result<RateFit> {
    if series.windows(2).any(|w| !(w[1].0 > w[0].0)) {
        return Err(crate::error::invalid(
            "series",
            "times must be strictly increasing",
        ));
    }
    let v0 = series.first().map_or(f64::NAN, |p| p.1);
    let start = series.iter().position(|&(_, v)| v <= 0.1 * v0).unwrap_or(0);
    let pts: Vec<(f64, f64)> = series[start..]
        .iter()
        .filter(|&&(_, v)| v > FIT_FLOOR && v.is_finite())
        .map(|&(t, v)| (t, v.ln()))
        .collect();
    if pts.len() < 3 {
        return Err(Error::TooFewPoints(pts.len()));
    }
    if pts.iter().all(|p| p.1 == pts[0].1) {
        return Ok(RateFit {
            rate: 0.0,
            intercept: pts[0].1,
            r_squared: 1.0,
            n_points: pts.len(),
        });
    }
    let n = pts.len() as f64;
    let t_mean = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let y_mean = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut stt, mut sty, mut syy) = (0.0, 0.0, 0.0);
    for &(t, y) in &pts {
        let (dt, dy) = (t - t_mean, y - y_mean);
        stt += dt * dt;
        sty += dt * dy;
        syy += dy * dy;
    }
    let slope = sty / stt;
    let intercept = y_mean - slope * t_mean;
    let ss_res: f64 = pts
        .iter()
        .map(|&(t, y)| (y - intercept - slope * t).powi(2))
        .sum();
    let r_squared = 1.0 - ss_res / syy;
    Ok(RateFit {
        rate: -slope,
        intercept,
        r_squared,
        n_points: pts.len(),
    })
}

// ---------------------------------------------------------------------------
// Commands

/// Run the configured simulation and write its CSV to `out`.
pub fn cmd_simulate<W: Write>(
    cfg: &RunConfig,
    out: &mut W,
) -> Result<(Trajectory, String), CliError> {
    let prob = cfg.problem()?;
    if cfg.masses.is_some() {
        let from_profiles = prob.initial.masses(&prob.grid, &prob.params)?;
        let dev = prob.masses.relative_deviation(&from_profiles);
        if dev > 1e-10 {
            return Err(CliError::Usage(format!(
                "m1/m2 disagree with the initial profiles (relative deviation {dev:e})"
            )));
        }
    }
    let traj = run(&prob.params, &prob.grid, &prob.initial, &prob.step)?;
    write_csv(&traj, out).map_err(|e| CliError::io("<output>", e))?;
    let last = traj.last().diagnostics;
    let summary = format!(
        "rows={} accepted={} rejected={} t_end={} E_rel={:e} l1={:e} max_mass_deviation={:e}",
        traj.records.len(),
        traj.stats.accepted,
        traj.stats.rejected,
        last.t,
        last.relative_entropy,
        last.l1_total(),
        traj.stats.max_mass_deviation
    );
    Ok((traj, summary))
}

/// Equilibrium for the configured masses, in physical units.
pub fn cmd_equilibrium(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let prob = cfg.problem()?;
    let e = compute_equilibrium(&prob.params, &prob.masses)?;
    let bound = Equilibrium::residual_bound(&prob.params, &prob.masses);
    let residual = equilibrium_residual(&e, &prob.params);
    let phys = prob.physical_equilibrium(&e);
    let passed = residual <= bound;
    let mut r = ReportBuilder::new("equilibrium");
    r.kv("a_inf", phys.a_inf)
        .kv("b_inf", phys.b_inf)
        .kv("c_inf", phys.c_inf)
        .kv("residual", format!("{residual:e}"))
        .kv("residual_bound", format!("{bound:e}"));
    let mut out = r.finish(passed, String::new());
    let res = if residual <= 1e-12 {
        "residual<=1e-12".to_string()
    } else if passed {
        format!("residual<={bound:e}")
    } else {
        format!("residual={residual:e}>{bound:e}")
    };
    out.summary = format!(
        "a_inf={} b_inf={} c_inf={} {res}",
        phys.a_inf, phys.b_inf, phys.c_inf
    );
    Ok(out)
}

/// Homogeneous ratio scan.
pub fn cmd_homogeneous_scan(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let prob = cfg.problem()?;
    let scan = homogeneous_scan(&prob.params, &prob.masses, cfg.n_grid)?;
    let c = scan.report.constant_estimate;
    let passed = c.is_finite() && c > 0.0;
    let mut r = ReportBuilder::new("homogeneous-scan");
    r.params(&prob.params, &prob.masses)
        .kv("n_grid", cfg.n_grid)
        .kv("mu_max", scan.mu_max)
        .kv("lower_end", scan.lower_end)
        .kv("upper_end", scan.upper_end)
        .kv("central_limit", scan.central_limit)
        .kv("central_limit_left", scan.central_limit_left)
        .kv("central_limit_right", scan.central_limit_right)
        .ratios(&scan.report);
    Ok(r.finish(passed, format!("constant_estimate={c}")))
}

/// Entropy–entropy-dissipation constant over admissible samples.
pub fn cmd_verify_eed(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let prob = cfg.problem()?;
    let rep = estimate_k_eed(
        &prob.params,
        &prob.masses,
        &prob.grid,
        cfg.samples,
        cfg.seed,
        &cfg.sampler(),
    )?;
    let passed = rep.min_ratio > 0.0 && rep.min_ratio.is_finite();
    let mut r = ReportBuilder::new("verify-eed");
    r.params(&prob.params, &prob.masses)
        .kv("n", prob.grid.n_cells())
        .kv("seed", cfg.seed)
        .ratios(&rep);
    Ok(r.finish(passed, format!("K={}", rep.min_ratio)))
}

/// Csiszár–Kullback constant and the classical pointwise bound.
pub fn cmd_verify_ck(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let prob = cfg.problem()?;
    let rep = verify_ck(
        &prob.params,
        &prob.masses,
        &prob.grid,
        cfg.samples,
        cfg.seed,
        &cfg.sampler(),
    )?;
    let passed = rep.report.min_ratio > 0.0 && rep.ckp_violations == 0;
    let mut r = ReportBuilder::new("verify-ck");
    r.params(&prob.params, &prob.masses)
        .kv("n", prob.grid.n_cells())
        .kv("seed", cfg.seed)
        .ratios(&rep.report)
        .kv("ckp_checked", rep.ckp_checked)
        .kv("ckp_violations", rep.ckp_violations)
        .kv("ckp_min_margin", rep.ckp_min_margin);
    Ok(r.finish(
        passed,
        format!(
            "C={} ckp_violations={}",
            rep.report.min_ratio, rep.ckp_violations
        ),
    ))
}

/// Square-root distance estimate with `k1` from the config or twice the
/// homogeneous scan constant.
pub fn cmd_verify_sqrt_distance(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let prob = cfg.problem()?;
    let k1 = match cfg.k1 {
        Some(k) => k,
        None => {
            2.0 * homogeneous_scan(&prob.params, &prob.masses, cfg.n_grid)?
                .report
                .constant_estimate
        }
    };
    let rep = verify_sqrt_distance(
        &prob.params,
        &prob.masses,
        &prob.grid,
        cfg.samples,
        k1,
        cfg.seed,
        &cfg.sampler(),
    )?;
    let passed = rep.k2.is_finite() && rep.uncovered == 0;
    let mut r = ReportBuilder::new("verify-sqrt-distance");
    r.params(&prob.params, &prob.masses)
        .kv("n", prob.grid.n_cells())
        .kv("seed", cfg.seed)
        .kv("k1", k1)
        .kv("k2", rep.k2)
        .kv("uncovered", rep.uncovered);
    if let Some(rr) = &rep.report {
        r.ratios(rr);
    }
    Ok(r.finish(passed, format!("k1={k1} k2={}", rep.k2)))
}

/// Exponential fit of one CSV column.
pub fn cmd_fit_rate(table: &CsvTable, column: &str, min_r2: f64) -> Result<Outcome, CliError> {
    let series = table
        .series(column)
        .ok_or_else(|| CliError::Usage(format!("csv has no column `{column}`")))?;
    let fit = fit_rate(&series)?;
    let passed = fit.rate > 0.0 && fit.r_squared >= min_r2;
    let mut r = ReportBuilder::new("fit-rate");
    r.kv("column", column)
        .kv("n_points", fit.n_points)
        .kv("rate", fit.rate)
        .kv("intercept", fit.intercept)
        .kv("r_squared", fit.r_squared)
        .kv("min_r_squared", min_r2);
    Ok(r.finish(
        passed,
        format!("rate={} r_squared={}", fit.rate, fit.r_squared),
    ))
}

/// Duality margin of two diffusivities.
pub fn cmd_duality(d_a: f64, d_b: f64) -> Result<Outcome, CliError> {
    let margin = duality_margin(d_a, d_b)?;
    let passed = margin < 1.0;
    let cond = if passed { "SATISFIED" } else { "VIOLATED" };
    let mut r = ReportBuilder::new("duality");
    r.kv("d_a", d_a)
        .kv("d_b", d_b)
        .kv("margin", margin)
        .kv("condition_p2", cond);
    let mut out = r.finish(passed, String::new());
    out.summary = format!("margin={margin} condition_p2={cond}");
    Ok(out)
}

/// Re-read a trajectory CSV and check its invariants row by row.
pub fn cmd_validate(table: &CsvTable, mass_tol: f64) -> Result<Outcome, CliError> {
    let header: Vec<&str> = CSV_HEADER.split(',').collect();
    if table.columns != header {
        return Err(CliError::Usage(format!(
            "unexpected csv header `{}`",
            table.columns.join(",")
        )));
    }
    if table.rows.is_empty() {
        return Err(CliError::Usage("csv has no rows".into()));
    }
    let col = |name| table.column(name).expect("header checked");
    let (t, m1, m2, min_conc) = (col("t"), col("mass1"), col("mass2"), col("min_conc"));
    let reference = MassPair {
        m1: m1[0],
        m2: m2[0],
    };
    let mut worst_mass = 0.0f64;
    let mut mass_violations = 0;
    let mut negative_rows = 0;
    let mut time_violations = 0;
    for i in 0..t.len() {
        let dev = reference.relative_deviation(&MassPair {
            m1: m1[i],
            m2: m2[i],
        });
        worst_mass = worst_mass.max(dev);
        if !(dev <= mass_tol) {
            mass_violations += 1;
        }
        if !(min_conc[i] >= 0.0) {
            negative_rows += 1;
        }
        if i > 0 && !(t[i] > t[i - 1]) {
            time_violations += 1;
        }
    }
    let passed = mass_violations == 0 && negative_rows == 0 && time_violations == 0;
    let mut r = ReportBuilder::new("validate");
    r.kv("rows", t.len())
        .kv("mass_tolerance", format!("{mass_tol:e}"))
        .kv("max_mass_deviation", format!("{worst_mass:e}"))
        .kv("mass_violations", mass_violations)
        .kv("negative_rows", negative_rows)
        .kv("time_order_violations", time_violations);
    Ok(r.finish(
        passed,
        format!("rows={} max_mass_deviation={worst_mass:e}", t.len()),
    ))
}
