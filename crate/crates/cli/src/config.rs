//! Experiment configuration: a flat `key = value` file plus command-line
//! overrides.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use semgp_core::decomp::{Scalarizer, DEFAULT_THETA};
use semgp_core::engine::{EngineConfig, ParentSelection};
use semgp_core::gp::GpParams;
use thiserror::Error;

pub const OUT_DIR_ENV: &str = "SEMGP_OUT";
pub const DEFAULT_OUT_DIR: &str = "semgp-out";

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("cannot read config {path}: {message}")]
    Io { path: String, message: String },
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("invalid value `{value}` for `{key}`")]
    BadValue { key: String, value: String },
    #[error("no dataset path given")]
    MissingDataset,
    #[error("no minority label given")]
    MissingMinority,
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Wgt,
    Tch,
    Pbi,
}

impl Method {
    pub fn scalarizer(self, theta: f64) -> Scalarizer {
        match self {
            Method::Wgt => Scalarizer::WeightedSum,
            Method::Tch => Scalarizer::Tchebycheff,
            Method::Pbi => Scalarizer::Pbi { theta },
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Wgt => "wgt",
            Method::Tch => "tch",
            Method::Pbi => "pbi",
        })
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "wgt" | "ws" => Ok(Method::Wgt),
            "tch" => Ok(Method::Tch),
            "pbi" => Ok(Method::Pbi),
            other => Err(format!("unknown method `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SemanticSetting {
    On,
    Off,
    Both,
}

impl SemanticSetting {
    /// Flags to run, canonical first.
    pub fn flags(self) -> &'static [bool] {
        match self {
            SemanticSetting::On => &[true],
            SemanticSetting::Off => &[false],
            SemanticSetting::Both => &[false, true],
        }
    }
}

impl FromStr for SemanticSetting {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "on" | "true" => Ok(SemanticSetting::On),
            "off" | "false" => Ok(SemanticSetting::Off),
            "both" => Ok(SemanticSetting::Both),
            other => Err(format!("unknown semantic setting `{other}`")),
        }
    }
}

/// Fully resolved experiment settings.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub dataset_path: PathBuf,
    pub minority_label: String,
    pub methods: Vec<Method>,
    pub semantic: SemanticSetting,
    pub runs: usize,
    pub base_seed: u64,
    /// Seed of the train/test split shared by every run.
    pub split_seed: u64,
    pub population: usize,
    pub generations: usize,
    pub neighborhood_size: usize,
    pub ubss: f64,
    pub theta: f64,
    pub crossover_rate: f64,
    pub mutation_rate: f64,
    pub max_depth: usize,
    pub max_length: usize,
    /// Tournament size for mating selection within a neighbourhood; 0 picks
    /// two distinct neighbours uniformly.
    pub tournament: usize,
    pub out_dir: PathBuf,
    pub emit_svg: bool,
    /// Generations drawn in the duplication plot.
    pub svg_generations: Vec<usize>,
    /// Parallel engine runs; 0 means one per available core.
    pub jobs: usize,
}

impl ExperimentConfig {
    /// Engine settings for one run.
    pub fn engine(&self, method: Method, semantic: bool, seed: u64) -> EngineConfig {
        let defaults = GpParams::default();
        EngineConfig {
            gp: GpParams {
                population_size: self.population,
                generations: self.generations,
                crossover_rate: self.crossover_rate,
                mutation_rate: self.mutation_rate,
                max_depth: self.max_depth,
                max_length: self.max_length,
                init_depth_max: defaults.init_depth_max.min(self.max_depth),
                init_depth_min: defaults.init_depth_min.min(self.max_depth),
                ..defaults
            },
            scalarizer: method.scalarizer(self.theta),
            neighborhood_size: self.neighborhood_size,
            semantic_ordering: semantic,
            ubss: self.ubss,
            seed,
            replacement: None,
            parent_selection: match self.tournament {
                0 => ParentSelection::Random,
                k => ParentSelection::Tournament(k),
            },
        }
    }

    /// Seed of run `run_index`: `base_seed XOR run_index`. Canonical and
    /// semantic runs with the same index therefore start from the same
    /// initial population.
    pub fn run_seed(&self, run_index: usize) -> u64 {
        self.base_seed ^ run_index as u64
    }

    fn validate(&self) -> Result<(), ConfigError> {
        if self.runs == 0 {
            return Err(ConfigError::Invalid("runs must be at least 1".into()));
        }
        if self.methods.is_empty() {
            return Err(ConfigError::Invalid("at least one method required".into()));
        }
        for m in &self.methods {
            self.engine(*m, true, 0)
                .validate()
                .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        }
        Ok(())
    }
}

/// Values that may come from the config file or from flags. Flags win.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub dataset: Option<PathBuf>,
    pub minority: Option<String>,
    pub methods: Vec<Method>,
    pub semantic: Option<SemanticSetting>,
    pub runs: Option<usize>,
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    pub out: Option<PathBuf>,
    pub svg: bool,
    pub population: Option<usize>,
    pub generations: Option<usize>,
    pub neighborhood: Option<usize>,
    pub ubss: Option<f64>,
    pub theta: Option<f64>,
    pub tournament: Option<usize>,
}

const KEYS: &[&str] = &[
    "dataset",
    "minority",
    "methods",
    "semantic",
    "runs",
    "seed",
    "split_seed",
    "population",
    "generations",
    "neighborhood",
    "ubss",
    "theta",
    "crossover_rate",
    "mutation_rate",
    "max_depth",
    "max_length",
    "tournament",
    "out",
    "svg",
    "svg_generations",
    "jobs",
];

/// Parses `key = value` lines. Blank lines and `#` comments are skipped.
pub fn parse_config_text(text: &str) -> Result<Vec<(String, String)>, ConfigError> {
    let mut pairs = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or(ConfigError::Syntax { line: i + 1 })?;
        let key = key.trim().to_ascii_lowercase();
        if !KEYS.contains(&key.as_str()) {
            return Err(ConfigError::UnknownKey(key));
        }
        pairs.push((key, value.trim().to_string()));
    }
    Ok(pairs)
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigError> {
    value.parse().map_err(|_| ConfigError::BadValue {
        key: key.to_string(),
        value: value.to_string(),
    })
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>, ConfigError> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_value(key, s))
        .collect()
}

fn parse_bool(key: &str, value: &str) -> Result<bool, ConfigError> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(ConfigError::BadValue {
            key: key.to_string(),
            value: value.to_string(),
        }),
    }
}

/// Builds the configuration from file pairs, flag overrides and the value of
/// `SEMGP_OUT` (used only when neither file nor flags name an output
/// directory). Unset keys take the benchmark defaults.
pub fn resolve(
    file: &[(String, String)],
    flags: &Overrides,
    env_out: Option<String>,
) -> Result<ExperimentConfig, ConfigError> {
    let gp = GpParams::default();
    let mut dataset: Option<PathBuf> = None;
    let mut minority: Option<String> = None;
    let mut out: Option<PathBuf> = None;
    let mut split_seed: Option<u64> = None;
    let mut cfg = ExperimentConfig {
        dataset_path: PathBuf::new(),
        minority_label: String::new(),
        methods: vec![Method::Wgt, Method::Tch, Method::Pbi],
        semantic: SemanticSetting::Both,
        runs: 30,
        base_seed: 0,
        split_seed: 0,
        population: gp.population_size,
        generations: gp.generations,
        neighborhood_size: 20,
        ubss: 0.5,
        theta: DEFAULT_THETA,
        crossover_rate: gp.crossover_rate,
        mutation_rate: gp.mutation_rate,
        max_depth: gp.max_depth,
        max_length: gp.max_length,
        tournament: 0,
        out_dir: PathBuf::new(),
        emit_svg: false,
        svg_generations: vec![1, 10, 20, 30, 40, 50],
        jobs: 0,
    };

    for (key, value) in file {
        let v = value.as_str();
        match key.as_str() {
            "dataset" => dataset = Some(PathBuf::from(v)),
            "minority" => minority = Some(v.to_string()),
            "methods" => cfg.methods = parse_list(key, v)?,
            "semantic" => cfg.semantic = parse_value(key, v)?,
            "runs" => cfg.runs = parse_value(key, v)?,
            "seed" => cfg.base_seed = parse_value(key, v)?,
            "split_seed" => split_seed = Some(parse_value(key, v)?),
            "population" => cfg.population = parse_value(key, v)?,
            "generations" => cfg.generations = parse_value(key, v)?,
            "neighborhood" => cfg.neighborhood_size = parse_value(key, v)?,
            "ubss" => cfg.ubss = parse_value(key, v)?,
            "theta" => cfg.theta = parse_value(key, v)?,
            "crossover_rate" => cfg.crossover_rate = parse_value(key, v)?,
            "mutation_rate" => cfg.mutation_rate = parse_value(key, v)?,
            "max_depth" => cfg.max_depth = parse_value(key, v)?,
            "max_length" => cfg.max_length = parse_value(key, v)?,
            "tournament" => cfg.tournament = parse_value(key, v)?,
            "out" => out = Some(PathBuf::from(v)),
            "svg" => cfg.emit_svg = parse_bool(key, v)?,
            "svg_generations" => cfg.svg_generations = parse_list(key, v)?,
            "jobs" => cfg.jobs = parse_value(key, v)?,
            other => return Err(ConfigError::UnknownKey(other.to_string())),
        }
    }

    if let Some(d) = &flags.dataset {
        dataset = Some(d.clone());
    }
    if let Some(m) = &flags.minority {
        minority = Some(m.clone());
    }
    if !flags.methods.is_empty() {
        cfg.methods = flags.methods.clone();
    }
    cfg.semantic = flags.semantic.unwrap_or(cfg.semantic);
    cfg.runs = flags.runs.unwrap_or(cfg.runs);
    cfg.base_seed = flags.seed.unwrap_or(cfg.base_seed);
    cfg.jobs = flags.jobs.unwrap_or(cfg.jobs);
    cfg.emit_svg |= flags.svg;
    cfg.population = flags.population.unwrap_or(cfg.population);
    cfg.generations = flags.generations.unwrap_or(cfg.generations);
    cfg.neighborhood_size = flags.neighborhood.unwrap_or(cfg.neighborhood_size);
    cfg.ubss = flags.ubss.unwrap_or(cfg.ubss);
    cfg.theta = flags.theta.unwrap_or(cfg.theta);
    cfg.tournament = flags.tournament.unwrap_or(cfg.tournament);
    if let Some(o) = &flags.out {
        out = Some(o.clone());
    }

    cfg.dataset_path = dataset.ok_or(ConfigError::MissingDataset)?;
    cfg.minority_label = minority.ok_or(ConfigError::MissingMinority)?;
    cfg.out_dir = out
        .or_else(|| env_out.filter(|s| !s.is_empty()).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR));
    cfg.split_seed = split_seed.unwrap_or(cfg.base_seed);
    cfg.methods.sort();
    cfg.methods.dedup();
    cfg.validate()?;
    Ok(cfg)
}

/// Reads the optional config file and applies flags on top.
pub fn parse_config(path: Option<&std::path::Path>, flags: &Overrides) -> Result<ExperimentConfig, ConfigError> {
    let pairs = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| ConfigError::Io {
                path: p.display().to_string(),
                message: e.to_string(),
            })?;
            parse_config_text(&text)?
        }
        None => Vec::new(),
    };
    resolve(&pairs, flags, std::env::var(OUT_DIR_ENV).ok())
}
