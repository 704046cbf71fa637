//! Run configuration, presets and command-line flags.

use std::path::PathBuf;

use clap::{Parser, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::discrete::BoundKind;
use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    GaussianSweep,
    GaussianPoint,
    Discrete,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Units {
    #[default]
    Nats,
    Bits,
}

impl Units {
    /// Convert a value in nats.
    pub fn convert(self, nats: f64) -> f64 {
        match self {
            Units::Nats => nats,
            Units::Bits => nats / std::f64::consts::LN_2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Units::Nats => "nats",
            Units::Bits => "bits",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepVar {
    Rho0,
    Rho1,
    Rate,
}

/// `steps` values of one parameter between `min` and `max`. With `exclusive`
/// the endpoints themselves are left out.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub variable: SweepVar,
    pub min: f64,
    pub max: f64,
    pub steps: usize,
    #[serde(default)]
    pub exclusive: bool,
}

impl SweepSpec {
    pub fn points(&self) -> CliResult<Vec<f64>> {
        if self.steps < 2 {
            return Err(CliError::Validation(format!("a sweep needs at least 2 steps, got {}", self.steps)));
        }
        if !(self.min.is_finite() && self.max.is_finite() && self.min < self.max) {
            return Err(CliError::Validation(format!(
                "sweep range needs min < max, got {}:{}",
                self.min, self.max
            )));
        }
        let span = self.max - self.min;
        Ok(if self.exclusive {
            (1..=self.steps)
                .map(|i| self.min + span * i as f64 / (self.steps + 1) as f64)
                .collect()
        } else {
            (0..self.steps)
                .map(|i| {
                    if i + 1 == self.steps {
                        self.max
                    } else {
                        self.min + span * i as f64 / (self.steps - 1) as f64
                    }
                })
                .collect()
        })
    }

    /// Parse `a:b:n`.
    pub fn parse_range(variable: SweepVar, text: &str) -> CliResult<Self> {
        let parts: Vec<&str> = text.split(':').collect();
        let bad = || CliError::Validation(format!("range must look like a:b:n, got `{text}`"));
        if parts.len() != 3 {
            return Err(bad());
        }
        Ok(SweepSpec {
            variable,
            min: parts[0].trim().parse().map_err(|_| bad())?,
            max: parts[1].trim().parse().map_err(|_| bad())?,
            steps: parts[2].trim().parse().map_err(|_| bad())?,
            exclusive: false,
        })
    }
}

/// Everything a run needs.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mode: Mode,
    pub sweep: Option<SweepSpec>,
    pub rho0: Option<f64>,
    pub rho1: Option<f64>,
    pub rate: Option<f64>,
    pub bounds: Vec<BoundKind>,
    pub seed: u64,
    pub units: Units,
    pub normalize: bool,
    pub out: Option<PathBuf>,
    pub plot_out: Option<PathBuf>,
    pub scenario: Option<PathBuf>,
    pub oracle: bool,
    pub starts: Option<usize>,
    pub max_iters: Option<usize>,
}

impl RunConfig {
    pub fn new(mode: Mode) -> Self {
        RunConfig {
            mode,
            sweep: None,
            rho0: None,
            rho1: None,
            rate: None,
            bounds: BoundKind::ALL.to_vec(),
            seed: 0,
            units: Units::Nats,
            normalize: false,
            out: None,
            plot_out: None,
            scenario: None,
            oracle: false,
            starts: None,
            max_iters: None,
        }
    }

    /// Optimiser settings with this run's seed and overrides.
    pub fn optimizer(&self) -> dhtbound::optim::OptimizerConfig {
        let mut c = dhtbound::optim::OptimizerConfig {
            seed: self.seed,
            ..Default::default()
        };
        if let Some(s) = self.starts {
            c.starts = s;
        }
        if let Some(m) = self.max_iters {
            c.max_iters = m;
        }
        c
    }

    pub fn from_preset(name: &str) -> CliResult<Self> {
        let text = match name {
            "fig2" => include_str!("../presets/fig2.toml"),
            "fig3" => include_str!("../presets/fig3.toml"),
            other => return Err(CliError::Validation(format!("unknown preset `{other}` (known: fig2, fig3)"))),
        };
        let p: Preset = toml::from_str(text).map_err(|e| CliError::Validation(format!("preset `{name}`: {e}")))?;
        let mut c = RunConfig::new(p.mode);
        c.sweep = p.sweep;
        c.rho0 = p.rho0;
        c.rho1 = p.rho1;
        c.rate = p.rate;
        c.normalize = p.normalize;
        Ok(c)
    }

    /// One-line description used in data-file headers.
    pub fn describe(&self) -> String {
        let mut parts = vec![format!("mode={}", self.mode.to_possible_value().expect("named").get_name())];
        if let Some(s) = &self.sweep {
            parts.push(format!(
                "sweep={:?}:{}:{}:{}{}",
                s.variable,
                s.min,
                s.max,
                s.steps,
                if s.exclusive { ":exclusive" } else { "" }
            ));
        }
        for (k, v) in [("rho0", self.rho0), ("rho1", self.rho1), ("R", self.rate)] {
            if let Some(v) = v {
                parts.push(format!("{k}={v}"));
            }
        }
        parts.push(format!("units={}", self.units.as_str()));
        parts.push(format!("normalize={}", self.normalize));
        parts.push(format!("seed={}", self.seed));
        parts.join(" ")
    }
}

/// A shipped parameter set.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct Preset {
    mode: Mode,
    #[serde(default)]
    sweep: Option<SweepSpec>,
    #[serde(default)]
    rho0: Option<f64>,
    #[serde(default)]
    rho1: Option<f64>,
    #[serde(default)]
    rate: Option<f64>,
    #[serde(default)]
    normalize: bool,
}

/// Error-exponent bounds for distributed hypothesis testing.
#[derive(Debug, Parser)]
#[command(name = "dhtbound", version)]
pub struct Cli {
    /// Run mode; defaults to the preset's mode, else gaussian-point.
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    /// Shipped parameter set: fig2 or fig3.
    #[arg(long)]
    pub preset: Option<String>,
    #[arg(long)]
    pub rho0: Option<f64>,
    #[arg(long)]
    pub rho1: Option<f64>,
    /// Communication rate in nats.
    #[arg(long)]
    pub rate: Option<f64>,
    /// Sweep of rho0 as a:b:n, endpoints included.
    #[arg(long)]
    pub rho0_range: Option<String>,
    /// Comma list of g, addsub, rw, corollary1, ac, centralized, chain, jaug.
    #[arg(long, value_delimiter = ',')]
    pub bounds: Option<Vec<String>>,
    #[arg(long, value_enum)]
    pub units: Option<Units>,
    /// Add columns divided by (rho0 - rho1)^2.
    #[arg(long)]
    pub normalize: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Scenario file for discrete mode.
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    /// CSV output path; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Whitespace-delimited data file for plotting (sweeps only).
    #[arg(long)]
    pub plot_out: Option<PathBuf>,
    /// Verify every inner value of a discrete run against a grid scan.
    #[arg(long)]
    pub oracle: bool,
    /// Number of optimiser starts.
    #[arg(long)]
    pub starts: Option<usize>,
    /// Iteration cap per optimiser stage.
    #[arg(long)]
    pub max_iters: Option<usize>,
}

impl Cli {
    pub fn into_config(self) -> CliResult<RunConfig> {
        let mut c = match &self.preset {
            Some(p) => RunConfig::from_preset(p)?,
            None => RunConfig::new(if self.scenario.is_some() { Mode::Discrete } else { Mode::GaussianPoint }),
        };
        if let Some(m) = self.mode {
            c.mode = m;
        }
        if let Some(r) = &self.rho0_range {
            c.sweep = Some(SweepSpec::parse_range(SweepVar::Rho0, r)?);
            if self.mode.is_none() {
                c.mode = Mode::GaussianSweep;
            }
        }
        c.rho0 = self.rho0.or(c.rho0);
        c.rho1 = self.rho1.or(c.rho1);
        c.rate = self.rate.or(c.rate);
        if let Some(list) = &self.bounds {
            c.bounds = list.iter().map(|s| BoundKind::parse(s)).collect::<CliResult<_>>()?;
        }
        if let Some(u) = self.units {
            c.units = u;
        }
        c.normalize |= self.normalize;
        c.seed = self.seed;
        c.scenario = self.scenario;
        c.out = self.out;
        c.plot_out = self.plot_out;
        c.oracle = self.oracle;
        c.starts = self.starts;
        c.max_iters = self.max_iters;
        Ok(c)
    }
}
