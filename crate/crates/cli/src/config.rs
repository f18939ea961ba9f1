//! Experiment configuration: flat `key = value` text with `#` comments.
//!
//! ```text
//! preset = star        # star | grid | file
//! D = 10
//! grid_size = 10
//! modes = overlap, no_overlap, oracle, random
//! runs = 10
//! beta = 0.5*log(2t)
//! ```
//!
//! Keys are case-sensitive. Unknown and repeated keys are errors.

use std::fmt;
use std::path::{Path, PathBuf};

use addbo_core::bo::{BetaSchedule, Mode};
use addbo_core::structure::LearningMode;

/// Upper bounds on numeric fields, so a typo cannot request an absurd run.
pub const MAX_DIM: usize = 64;
pub const MAX_GRID_SIZE: usize = 1000;
pub const MAX_RUNS: usize = 10_000;
pub const MAX_ITERATIONS: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    /// 1-based line, or 0 when the problem is not tied to a line.
    pub line: usize,
    pub message: String,
}

impl ConfigError {
    fn at(line: usize, message: impl Into<String>) -> Self {
        ConfigError {
            line,
            message: message.into(),
        }
    }

    pub fn global(message: impl Into<String>) -> Self {
        ConfigError::at(0, message)
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line == 0 {
            write!(f, "config: {}", self.message)
        } else {
            write!(f, "config line {}: {}", self.line, self.message)
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Star,
    /// A `rows × cols` lattice, 4-neighbour edges.
    Grid,
    /// Edge list read from `graph_file`.
    File,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub preset: Preset,
    pub graph_file: Option<PathBuf>,
    /// Number of variables. Derived from the lattice for the grid preset and
    /// from the header for the file preset when not given.
    pub dim: Option<usize>,
    pub grid_rows: usize,
    pub grid_cols: usize,
    pub grid_size: usize,
    pub grid_min: f64,
    /// Defaults to `grid_min + grid_size − 1` (unit spacing).
    pub grid_max: Option<f64>,
    /// Lengthscale of the synthetic functions.
    pub lengthscale: f64,
    /// Candidate lengthscales for learning; derived from the grid span when
    /// empty.
    pub lengthscale_grid: Vec<f64>,
    pub modes: Vec<Mode>,
    pub runs: usize,
    pub seed: u64,
    /// Observation noise variance η².
    pub noise: f64,
    /// η² assumed by the surrogate; defaults to `noise`.
    pub model_noise: Option<f64>,
    pub n_init: usize,
    pub n_iter: usize,
    pub n_cyc: usize,
    pub n_gibbs: usize,
    pub gibbs_max_steps: Option<usize>,
    pub edge_prior: f64,
    pub beta: BetaSchedule,
    pub max_treewidth: usize,
    pub max_table_size: usize,
    pub max_eval: Option<usize>,
    pub out: PathBuf,
    // learn
    pub data: Option<PathBuf>,
    pub init_graph: Option<PathBuf>,
    pub learn_mode: LearningMode,
    // analyze
    pub observations: usize,
    pub scan_points: usize,
    pub info_t: usize,
    pub info_grid_size: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            preset: Preset::Star,
            graph_file: None,
            dim: None,
            grid_rows: 3,
            grid_cols: 3,
            grid_size: 10,
            grid_min: 0.0,
            grid_max: None,
            lengthscale: 1.0 / 0.2f64.sqrt(),
            lengthscale_grid: Vec::new(),
            modes: Mode::ALL.to_vec(),
            runs: 10,
            seed: 0,
            noise: 0.01,
            model_noise: None,
            n_init: 10,
            n_iter: 100,
            n_cyc: 30,
            n_gibbs: 200,
            gibbs_max_steps: None,
            edge_prior: 0.5,
            beta: BetaSchedule::default(),
            max_treewidth: addbo_core::graph::DEFAULT_MAX_TREEWIDTH,
            max_table_size: addbo_core::acquisition::DEFAULT_MAX_TABLE_SIZE,
            max_eval: Some(1000),
            out: PathBuf::from("out"),
            data: None,
            init_graph: None,
            learn_mode: LearningMode::Overlap,
            observations: 200,
            scan_points: 1000,
            info_t: 20,
            info_grid_size: 2,
        }
    }
}

impl ExperimentConfig {
    /// The star preset defaults to ten variables.
    pub fn resolved_dim(&self) -> Option<usize> {
        match self.preset {
            Preset::Star => Some(self.dim.unwrap_or(10)),
            Preset::Grid => Some(self.grid_rows * self.grid_cols),
            Preset::File => self.dim,
        }
    }

    pub fn resolved_grid_max(&self) -> f64 {
        self.grid_max.unwrap_or(self.grid_min + (self.grid_size - 1) as f64)
    }

    pub fn model_noise(&self) -> f64 {
        self.model_noise.unwrap_or(self.noise)
    }

    /// Cross-field checks, run after command-line overrides.
    pub fn validate(&self) -> Result<(), ConfigError> {
        match self.preset {
            Preset::File if self.graph_file.is_none() => {
                return Err(ConfigError::global("preset = file needs graph_file"));
            }
            Preset::Grid => {
                if let Some(d) = self.dim {
                    if d != self.grid_rows * self.grid_cols {
                        return Err(ConfigError::global(format!(
                            "D = {d} does not match the {}x{} lattice",
                            self.grid_rows, self.grid_cols
                        )));
                    }
                }
                if self.grid_rows * self.grid_cols > MAX_DIM {
                    return Err(ConfigError::global(format!(
                        "lattice has more than {MAX_DIM} variables"
                    )));
                }
            }
            _ => {}
        }
        if self.resolved_grid_max() <= self.grid_min && self.grid_size > 1 {
            return Err(ConfigError::global("grid_max must exceed grid_min"));
        }
        if self.modes.is_empty() {
            return Err(ConfigError::global("modes is empty"));
        }
        if self.runs == 0 {
            return Err(ConfigError::global("runs must be at least 1"));
        }
        if self.info_t == 0 {
            return Err(ConfigError::global("info_T must be at least 1"));
        }
        Ok(())
    }

    /// Resolves relative paths against `base` and checks that every input
    /// file exists.
    pub fn resolve_files(&mut self, base: &Path) -> Result<(), ConfigError> {
        for path in [&mut self.graph_file, &mut self.data, &mut self.init_graph]
            .into_iter()
            .flatten()
        {
            if path.is_relative() {
                *path = base.join(&*path);
            }
            if !path.is_file() {
                return Err(ConfigError::global(format!("file not found: {}", path.display())));
            }
        }
        Ok(())
    }
}

/// Parses configuration text. Only per-value range checks happen here;
/// see [`ExperimentConfig::validate`] for the rest.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let mut cfg = ExperimentConfig::default();
    let mut seen: Vec<String> = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(ConfigError::at(
                line,
                format!("expected 'key = value', found '{content}'"),
            ));
        };
        let (key, value) = (key.trim(), value.trim());
        if seen.iter().any(|s| s == key) {
            return Err(ConfigError::at(line, format!("'{key}' is set twice")));
        }
        set(&mut cfg, key, value).map_err(|m| ConfigError::at(line, format!("{key}: {m}")))?;
        seen.push(key.to_string());
    }
    Ok(cfg)
}

fn set(cfg: &mut ExperimentConfig, key: &str, value: &str) -> Result<(), String> {
    match key {
        "preset" => {
            cfg.preset = match value {
                "star" => Preset::Star,
                "grid" => Preset::Grid,
                "file" => Preset::File,
                _ => return Err(format!("unknown preset '{value}' (expected star, grid or file)")),
            }
        }
        "graph_file" => cfg.graph_file = Some(path(value)?),
        "D" => cfg.dim = Some(int(value, 1, MAX_DIM)?),
        "grid_rows" => cfg.grid_rows = int(value, 1, MAX_DIM)?,
        "grid_cols" => cfg.grid_cols = int(value, 1, MAX_DIM)?,
        "grid_size" => cfg.grid_size = int(value, 1, MAX_GRID_SIZE)?,
        "grid_min" => cfg.grid_min = real(value)?,
        "grid_max" => cfg.grid_max = Some(real(value)?),
        "lengthscale" => cfg.lengthscale = positive(value)?,
        "lengthscale_grid" => {
            cfg.lengthscale_grid = list(value)?.iter().map(|v| positive(v)).collect::<Result<_, _>>()?
        }
        "modes" => cfg.modes = parse_modes(value)?,
        "runs" => cfg.runs = int(value, 1, MAX_RUNS)?,
        "seed" => {
            cfg.seed = value
                .parse()
                .map_err(|_| format!("'{value}' is not a non-negative integer"))?
        }
        "noise" => cfg.noise = positive(value)?,
        "model_noise" => cfg.model_noise = Some(positive(value)?),
        "N_init" => cfg.n_init = int(value, 1, MAX_ITERATIONS)?,
        "N_iter" => cfg.n_iter = int(value, 1, MAX_ITERATIONS)?,
        "N_cyc" => cfg.n_cyc = int(value, 1, MAX_ITERATIONS)?,
        "N_Gibbs" => cfg.n_gibbs = int(value, 1, 1_000_000)?,
        "gibbs_max_steps" => cfg.gibbs_max_steps = Some(int(value, 1, 100_000_000)?),
        "edge_prior" => {
            let p = real(value)?;
            if !(p > 0.0 && p < 1.0) {
                return Err("must lie strictly between 0 and 1".into());
            }
            cfg.edge_prior = p;
        }
        "beta" => {
            let b: BetaSchedule = value.parse().map_err(|e: addbo_core::Error| e.to_string())?;
            b.validate().map_err(|e| e.to_string())?;
            cfg.beta = b;
        }
        "max_treewidth" => cfg.max_treewidth = int(value, 1, MAX_DIM)?,
        "max_table_size" => cfg.max_table_size = int(value, 1, 1 << 30)?,
        "max_eval" => {
            cfg.max_eval = match value {
                "none" => None,
                _ => Some(int(value, 1, usize::MAX)?),
            }
        }
        "out" => cfg.out = path(value)?,
        "data" => cfg.data = Some(path(value)?),
        "init_graph" => cfg.init_graph = Some(path(value)?),
        "learn_mode" => {
            cfg.learn_mode = match value {
                "overlap" => LearningMode::Overlap,
                "no_overlap" => LearningMode::NoOverlap,
                _ => {
                    return Err(format!(
                        "unknown learning mode '{value}' (expected overlap or no_overlap)"
                    ))
                }
            }
        }
        "observations" => cfg.observations = int(value, 0, 100_000)?,
        "scan_points" => cfg.scan_points = int(value, 1, 10_000_000)?,
        "info_T" => cfg.info_t = int(value, 1, 100_000)?,
        "info_grid_size" => cfg.info_grid_size = int(value, 1, MAX_GRID_SIZE)?,
        _ => return Err("unknown key".into()),
    }
    Ok(())
}

/// Parses a comma-separated mode list, rejecting duplicates.
pub fn parse_modes(value: &str) -> Result<Vec<Mode>, String> {
    let mut modes = Vec::new();
    for item in list(value)? {
        let mode: Mode = item.parse().map_err(|e: addbo_core::Error| e.to_string())?;
        if modes.contains(&mode) {
            return Err(format!("mode '{mode}' listed twice"));
        }
        modes.push(mode);
    }
    Ok(modes)
}

fn list(value: &str) -> Result<Vec<&str>, String> {
    let items: Vec<&str> = value.split([',', ' ', '\t']).filter(|s| !s.is_empty()).collect();
    if items.is_empty() {
        return Err("empty list".into());
    }
    Ok(items)
}

fn int(value: &str, lo: usize, hi: usize) -> Result<usize, String> {
    match value.parse::<usize>() {
        Ok(v) if (lo..=hi).contains(&v) => Ok(v),
        _ => Err(format!("'{value}' is not an integer in {lo}..={hi}")),
    }
}

fn real(value: &str) -> Result<f64, String> {
    match value.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(format!("'{value}' is not a finite number")),
    }
}

fn positive(value: &str) -> Result<f64, String> {
    match real(value)? {
        v if v > 0.0 => Ok(v),
        _ => Err(format!("'{value}' must be positive")),
    }
}

fn path(value: &str) -> Result<PathBuf, String> {
    if value.is_empty() {
        return Err("empty path".into());
    }
    Ok(PathBuf::from(value))
}
