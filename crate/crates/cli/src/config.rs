//! Run configuration: defaults, then a `key = value` file, then flags.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use gmwb::asian::Orientation;
use gmwb::hedging::Behaviour;
use gmwb::lattice::Measure;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EngineKind {
    Tree,
    Paths,
    Asian,
    Mc,
}

/// What `hedge-sim` and `lapse-value` print.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Detail {
    Summary,
    Paths,
    Cdf,
    Region,
}

/// A configuration key, spelled as its flag, with its help text and whether it is a switch.
pub struct Key {
    pub name: &'static str,
    pub help: &'static str,
    pub switch: bool,
}

const fn key(name: &'static str, help: &'static str) -> Key {
    Key { name, help, switch: false }
}

const fn switch(name: &'static str, help: &'static str) -> Key {
    Key { name, help, switch: true }
}

pub const KEYS: &[Key] = &[
    key("premium", "initial premium P"),
    key("g", "guaranteed withdrawal rate per year, decimal"),
    key("r", "risk-free rate, decimal"),
    key("sigma", "volatility, decimal"),
    key("mu", "physical drift, decimal"),
    key("alpha", "fee rate per year, decimal"),
    switch("solve-fee", "charge the fair fee instead of alpha"),
    key("n", "time steps per year"),
    key("engine", "tree | paths | asian | mc"),
    key("orientation", "representative sets for the asian engine: highest | lowest"),
    key("schedule", "surrender charges: annual percentages `9,8,...,0` or `flat:3`"),
    key("gamma", "tail level for VaR and TVaR"),
    key("epsilon", "fair-fee tolerance on |V_0 - P|"),
    key("measure", "trigger-dist measure: real-world | risk-neutral"),
    key("behaviour", "surrender behaviour: optimal | hold | at:<step>"),
    key("detail", "summary | paths | cdf | region"),
    key("sample-paths", "sample this many tree paths instead of enumerating"),
    key("seed", "random seed"),
    key("paths", "Monte Carlo pricing paths"),
    switch("antithetic", "antithetic pricing paths"),
    key("outer-paths", "physical paths in the hedge study"),
    key("inner-paths", "paths behind each Monte Carlo hedge ratio"),
    switch("inner-antithetic", "antithetic inner paths"),
    key("rebalance-per-year", "hedge rebalances per year"),
    key("bump", "account bump for the hedge ratio"),
    key("bootstrap", "bootstrap resamples for standard errors"),
    key("output", "write to this file instead of stdout"),
    key("threads", "worker threads (default: all cores)"),
];

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub premium: f64,
    pub g: f64,
    pub r: f64,
    pub sigma: f64,
    pub mu: Option<f64>,
    pub alpha: f64,
    pub solve_fee: bool,
    pub n: u32,
    pub engine: EngineKind,
    pub orientation: Orientation,
    pub schedule: Option<String>,
    pub gamma: f64,
    pub epsilon: f64,
    pub measure: Measure,
    pub behaviour: Behaviour,
    pub detail: Detail,
    pub sample_paths: Option<usize>,
    pub seed: u64,
    pub paths: usize,
    pub antithetic: bool,
    pub outer_paths: usize,
    pub inner_paths: usize,
    pub inner_antithetic: bool,
    pub rebalance_per_year: usize,
    pub bump: f64,
    pub bootstrap: usize,
    pub output: Option<PathBuf>,
    pub threads: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let mc = gmwb::continuous::McConfig::default();
        RunConfig {
            premium: 100.0,
            g: 0.10,
            r: 0.05,
            sigma: 0.20,
            mu: None,
            alpha: 0.0,
            solve_fee: false,
            n: 1,
            engine: EngineKind::Tree,
            orientation: Orientation::HighestFirst,
            schedule: None,
            gamma: 0.10,
            epsilon: gmwb::fair_fee::DEFAULT_EPSILON,
            measure: Measure::RealWorld,
            behaviour: Behaviour::Optimal,
            detail: Detail::Summary,
            sample_paths: None,
            seed: mc.seed,
            paths: mc.n_paths,
            antithetic: mc.antithetic,
            outer_paths: mc.outer_paths,
            inner_paths: mc.inner_paths,
            inner_antithetic: mc.inner_antithetic,
            rebalance_per_year: mc.rebalance_per_year,
            bump: mc.bump,
            bootstrap: mc.bootstrap,
            output: None,
            threads: None,
        }
    }
}

fn number<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, String> {
    value.parse().map_err(|_| format!("`{key}`: cannot parse `{value}`"))
}

fn boolean(key: &str, value: &str) -> Result<bool, String> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(format!("`{key}`: expected true or false, got `{value}`")),
    }
}

fn optional(value: &str) -> Option<&str> {
    match value {
        "" | "none" => None,
        v => Some(v),
    }
}

impl RunConfig {
    /// Sets one key; `-` and `_` are interchangeable in key names.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        let key = key.replace('-', "_");
        let v = value.trim();
        match key.as_str() {
            "premium" => self.premium = number(&key, v)?,
            "g" => self.g = number(&key, v)?,
            "r" => self.r = number(&key, v)?,
            "sigma" => self.sigma = number(&key, v)?,
            "mu" => self.mu = optional(v).map(|v| number(&key, v)).transpose()?,
            "alpha" => self.alpha = number(&key, v)?,
            "solve_fee" => self.solve_fee = boolean(&key, v)?,
            "n" => self.n = number(&key, v)?,
            "engine" => {
                self.engine = match v {
                    "tree" => EngineKind::Tree,
                    "paths" => EngineKind::Paths,
                    "asian" => EngineKind::Asian,
                    "mc" => EngineKind::Mc,
                    _ => return Err(format!("`engine`: expected tree, paths, asian or mc, got `{v}`")),
                }
            }
            "orientation" => {
                self.orientation = match v {
                    "highest" => Orientation::HighestFirst,
                    "lowest" => Orientation::LowestFirst,
                    _ => return Err(format!("`orientation`: expected highest or lowest, got `{v}`")),
                }
            }
            "schedule" => self.schedule = optional(v).map(str::to_string),
            "gamma" => self.gamma = number(&key, v)?,
            "epsilon" => self.epsilon = number(&key, v)?,
            "measure" => {
                self.measure = match v {
                    "real-world" => Measure::RealWorld,
                    "risk-neutral" => Measure::RiskNeutral,
                    _ => return Err(format!("`measure`: expected real-world or risk-neutral, got `{v}`")),
                }
            }
            "behaviour" => {
                self.behaviour = match v {
                    "optimal" => Behaviour::Optimal,
                    "hold" => Behaviour::HoldToMaturity,
                    _ => match v.strip_prefix("at:") {
                        Some(step) => Behaviour::SurrenderAt(number(&key, step)?),
                        None => return Err(format!("`behaviour`: expected optimal, hold or at:<step>, got `{v}`")),
                    },
                }
            }
            "detail" => {
                self.detail = match v {
                    "summary" => Detail::Summary,
                    "paths" => Detail::Paths,
                    "cdf" => Detail::Cdf,
                    "region" => Detail::Region,
                    _ => return Err(format!("`detail`: expected summary, paths, cdf or region, got `{v}`")),
                }
            }
            "sample_paths" => self.sample_paths = optional(v).map(|v| number(&key, v)).transpose()?,
            "seed" => self.seed = number(&key, v)?,
            "paths" => self.paths = number(&key, v)?,
            "antithetic" => self.antithetic = boolean(&key, v)?,
            "outer_paths" => self.outer_paths = number(&key, v)?,
            "inner_paths" => self.inner_paths = number(&key, v)?,
            "inner_antithetic" => self.inner_antithetic = boolean(&key, v)?,
            "rebalance_per_year" => self.rebalance_per_year = number(&key, v)?,
            "bump" => self.bump = number(&key, v)?,
            "bootstrap" => self.bootstrap = number(&key, v)?,
            "output" => self.output = optional(v).map(PathBuf::from),
            "threads" => self.threads = optional(v).map(|v| number(&key, v)).transpose()?,
            _ => return Err(format!("unknown key `{key}`")),
        }
        Ok(())
    }

    /// Applies a config file: one `key = value` per line, `#` starts a comment.
    pub fn apply_file(&mut self, path: &Path) -> Result<(), String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        self.apply_text(&text).map_err(|e| format!("{}: {e}", path.display()))
    }

    pub fn apply_text(&mut self, text: &str) -> Result<(), String> {
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| format!("line {}: expected key = value", idx + 1))?;
            self.set(k.trim(), v).map_err(|e| format!("line {}: {e}", idx + 1))?;
        }
        Ok(())
    }

    /// Every key with its effective value, one `# key=value` line each.
    pub fn echo(&self) -> String {
        let mut out = String::new();
        for k in KEYS {
            let _ = writeln!(out, "# {}={}", k.name, self.get(&k.name.replace('-', "_")));
        }
        out
    }

    fn get(&self, key: &str) -> String {
        let opt = |v: Option<String>| v.unwrap_or_else(|| "none".to_string());
        match key {
            "premium" => self.premium.to_string(),
            "g" => self.g.to_string(),
            "r" => self.r.to_string(),
            "sigma" => self.sigma.to_string(),
            "mu" => opt(self.mu.map(|v| v.to_string())),
            "alpha" => self.alpha.to_string(),
            "solve_fee" => self.solve_fee.to_string(),
            "n" => self.n.to_string(),
            "engine" => match self.engine {
                EngineKind::Tree => "tree",
                EngineKind::Paths => "paths",
                EngineKind::Asian => "asian",
                EngineKind::Mc => "mc",
            }
            .to_string(),
            "orientation" => match self.orientation {
                Orientation::HighestFirst => "highest",
                Orientation::LowestFirst => "lowest",
            }
            .to_string(),
            "schedule" => opt(self.schedule.clone()),
            "gamma" => self.gamma.to_string(),
            "epsilon" => self.epsilon.to_string(),
            "measure" => match self.measure {
                Measure::RealWorld => "real-world",
                Measure::RiskNeutral => "risk-neutral",
            }
            .to_string(),
            "behaviour" => match self.behaviour {
                Behaviour::Optimal => "optimal".to_string(),
                Behaviour::HoldToMaturity => "hold".to_string(),
                Behaviour::SurrenderAt(i) => format!("at:{i}"),
            },
            "detail" => match self.detail {
                Detail::Summary => "summary",
                Detail::Paths => "paths",
                Detail::Cdf => "cdf",
                Detail::Region => "region",
            }
            .to_string(),
            "sample_paths" => opt(self.sample_paths.map(|v| v.to_string())),
            "seed" => self.seed.to_string(),
            "paths" => self.paths.to_string(),
            "antithetic" => self.antithetic.to_string(),
            "outer_paths" => self.outer_paths.to_string(),
            "inner_paths" => self.inner_paths.to_string(),
            "inner_antithetic" => self.inner_antithetic.to_string(),
            "rebalance_per_year" => self.rebalance_per_year.to_string(),
            "bump" => self.bump.to_string(),
            "bootstrap" => self.bootstrap.to_string(),
            "output" => opt(self.output.as_ref().map(|p| p.display().to_string())),
            "threads" => opt(self.threads.map(|v| v.to_string())),
            _ => unreachable!("unknown key {key}"),
        }
    }
}
