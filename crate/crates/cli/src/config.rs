//! Line-based `key = value` experiment configuration.

use hsdelay::{Gains, History, Profile, SystemParams, TimeScheme};
use std::collections::HashSet;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },
    #[error("{0}")]
    Invalid(String),
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Linear,
    Nonlinear,
    Picard,
}

/// Data used by the observability estimate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SampleData {
    /// Seeded random unit-norm data.
    Random,
    /// The configured `u0`, `v0`, `z0` for every sample.
    Configured,
}

/// Evenly spaced values `min, ..., max`; zero steps is an empty range.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Range {
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

impl Range {
    pub fn values(&self) -> Vec<f64> {
        match self.steps {
            0 => Vec::new(),
            1 => vec![self.min],
            n => (0..n)
                .map(|i| self.min + (self.max - self.min) * i as f64 / (n - 1) as f64)
                .collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub alpha: f64,
    pub beta: f64,
    pub length: f64,
    pub delay: f64,
    pub nodes: usize,
    pub cells: usize,
    pub horizon: f64,
    pub u0: Profile,
    pub v0: Profile,
    pub z0: History,
    /// Rescale the initial data to this `H` norm.
    pub data_norm: Option<f64>,
    pub mu1: f64,
    pub mu2: f64,
    pub mode: Mode,
    pub scheme: TimeScheme,
    pub verdict: bool,
    /// Radius of the decay certificate; defaults to the data norm.
    pub radius: Option<f64>,
    pub fit_start: Option<f64>,
    pub fit_end: Option<f64>,
    pub seed: u64,
    pub energy_csv: PathBuf,
    pub trace_csv: PathBuf,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepConfig {
    pub alpha: Range,
    pub beta: Range,
    pub simulate: bool,
    pub abscissa: bool,
    pub csv: PathBuf,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ObservabilityConfig {
    pub samples: usize,
    /// Defaults to twice the delay.
    pub horizon: Option<f64>,
    pub data: SampleData,
    pub csv: PathBuf,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Config {
    pub run: RunConfig,
    pub sweep: SweepConfig,
    pub observability: ObservabilityConfig,
    pub spectrum_csv: Option<PathBuf>,
}

pub const DEFAULT_SEED: u64 = 1;

impl Default for Config {
    fn default() -> Self {
        Self {
            run: RunConfig {
                alpha: 0.1,
                beta: 0.1,
                length: 1.0,
                delay: 1.0,
                nodes: 128,
                cells: 64,
                horizon: 10.0,
                u0: Profile::SineModes(vec![1.0, 0.5]),
                v0: Profile::SineModes(vec![0.3, 0.0, 0.2]),
                z0: History::Sine {
                    amplitude: 0.5,
                    frequency: 1.0,
                },
                data_norm: None,
                mu1: 0.1,
                mu2: 0.1,
                mode: Mode::Linear,
                scheme: TimeScheme::LobattoIIIC,
                verdict: false,
                radius: None,
                fit_start: None,
                fit_end: None,
                seed: DEFAULT_SEED,
                energy_csv: "energy.csv".into(),
                trace_csv: "trace.csv".into(),
            },
            sweep: SweepConfig {
                alpha: Range {
                    min: 0.0,
                    max: 0.0,
                    steps: 0,
                },
                beta: Range {
                    min: 0.1,
                    max: 0.1,
                    steps: 0,
                },
                simulate: true,
                abscissa: false,
                csv: "sweep.csv".into(),
            },
            observability: ObservabilityConfig {
                samples: 100,
                horizon: None,
                data: SampleData::Random,
                csv: "quotients.csv".into(),
            },
            spectrum_csv: None,
        }
    }
}

impl RunConfig {
    /// Physical parameters; the gains are not checked here.
    pub fn params(&self) -> SystemParams {
        SystemParams {
            length: self.length,
            delay: self.delay,
            gains: Gains::unchecked(self.alpha, self.beta),
        }
    }

    /// Data radius for the theoretical rate. The linear system needs no
    /// smallness, so linear runs default to zero; otherwise the data norm.
    pub fn theory_radius(&self, data_norm: f64) -> f64 {
        match (self.radius, self.mode) {
            (Some(r), _) => r,
            (None, Mode::Linear) => 0.0,
            (None, _) => data_norm,
        }
    }

    pub fn fit_window(&self, horizon: f64) -> Option<(f64, f64)> {
        match (self.fit_start, self.fit_end) {
            (None, None) => None,
            (start, end) => Some((start.unwrap_or(0.2 * horizon), end.unwrap_or(horizon))),
        }
    }
}

fn parse_number(value: &str) -> Result<f64, String> {
    let x: f64 = value
        .parse()
        .map_err(|_| format!("expected a number, got '{value}'"))?;
    if x.is_finite() {
        Ok(x)
    } else {
        Err(format!("expected a finite number, got '{value}'"))
    }
}

fn parse_count(value: &str) -> Result<usize, String> {
    value
        .parse()
        .map_err(|_| format!("expected a non-negative integer, got '{value}'"))
}

fn parse_bool(value: &str) -> Result<bool, String> {
    match value {
        "true" | "yes" | "on" => Ok(true),
        "false" | "no" | "off" => Ok(false),
        _ => Err(format!("expected true or false, got '{value}'")),
    }
}

fn numbers(words: &[&str]) -> Result<Vec<f64>, String> {
    words.iter().map(|w| parse_number(w)).collect()
}

fn fixed<const K: usize>(kind: &str, words: &[&str]) -> Result<[f64; K], String> {
    let v = numbers(words)?;
    v.try_into()
        .map_err(|_| format!("'{kind}' takes {K} numbers"))
}

/// `zero`, `sine c1 c2 ...` or `bump center width amplitude`.
pub fn parse_profile(value: &str) -> Result<Profile, String> {
    let words: Vec<&str> = value.split_whitespace().collect();
    match words.split_first() {
        Some((&"zero", [])) => Ok(Profile::Zero),
        Some((&"sine", rest)) if !rest.is_empty() => Ok(Profile::SineModes(numbers(rest)?)),
        Some((&"bump", rest)) => {
            let [center, width, amplitude] = fixed::<3>("bump", rest)?;
            if !(width > 0.0) {
                return Err("bump width must be positive".into());
            }
            Ok(Profile::Bump {
                center,
                width,
                amplitude,
            })
        }
        _ => Err(format!(
            "unknown profile '{value}' (expected zero, sine c1 c2 ..., or bump center width amplitude)"
        )),
    }
}

/// `zero`, `constant c`, `linear start end` or `sine amplitude frequency`.
pub fn parse_history(value: &str) -> Result<History, String> {
    let words: Vec<&str> = value.split_whitespace().collect();
    match words.split_first() {
        Some((&"zero", [])) => Ok(History::Zero),
        Some((&"constant", rest)) => Ok(History::Constant(fixed::<1>("constant", rest)?[0])),
        Some((&"linear", rest)) => {
            let [start, end] = fixed::<2>("linear", rest)?;
            Ok(History::Linear { start, end })
        }
        Some((&"sine", rest)) => {
            let [amplitude, frequency] = fixed::<2>("sine", rest)?;
            Ok(History::Sine {
                amplitude,
                frequency,
            })
        }
        _ => Err(format!(
            "unknown history '{value}' (expected zero, constant c, linear a b, or sine amplitude frequency)"
        )),
    }
}

fn parse_scheme(value: &str) -> Result<TimeScheme, String> {
    let words: Vec<&str> = value.split_whitespace().collect();
    match words.as_slice() {
        ["lobatto"] => Ok(TimeScheme::LobattoIIIC),
        ["crank-nicolson"] => Ok(TimeScheme::Theta(0.5)),
        ["theta", t] => {
            let theta = parse_number(t)?;
            if !(0.5..=1.0).contains(&theta) {
                return Err(format!("theta must lie in [0.5, 1], got {theta}"));
            }
            Ok(TimeScheme::Theta(theta))
        }
        _ => Err(format!(
            "unknown scheme '{value}' (expected lobatto, crank-nicolson, or theta <value>)"
        )),
    }
}

fn parse_mode(value: &str) -> Result<Mode, String> {
    match value {
        "linear" => Ok(Mode::Linear),
        "nonlinear" => Ok(Mode::Nonlinear),
        "picard" => Ok(Mode::Picard),
        _ => Err(format!(
            "unknown mode '{value}' (expected linear, nonlinear or picard)"
        )),
    }
}

fn positive(x: f64) -> Result<f64, String> {
    if x > 0.0 {
        Ok(x)
    } else {
        Err(format!("expected a positive value, got {x}"))
    }
}

impl Config {
    fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        let run = &mut self.run;
        match key {
            "alpha" => run.alpha = parse_number(value)?,
            "beta" => run.beta = parse_number(value)?,
            "length" => run.length = positive(parse_number(value)?)?,
            "delay" => run.delay = positive(parse_number(value)?)?,
            "nodes" => run.nodes = parse_count(value)?,
            "cells" => run.cells = parse_count(value)?,
            "horizon" => run.horizon = positive(parse_number(value)?)?,
            "u0" => run.u0 = parse_profile(value)?,
            "v0" => run.v0 = parse_profile(value)?,
            "z0" => run.z0 = parse_history(value)?,
            "data_norm" => run.data_norm = Some(parse_number(value)?),
            "mu1" => run.mu1 = parse_number(value)?,
            "mu2" => run.mu2 = parse_number(value)?,
            "mode" => run.mode = parse_mode(value)?,
            "scheme" => run.scheme = parse_scheme(value)?,
            "verdict" => run.verdict = parse_bool(value)?,
            "radius" => run.radius = Some(parse_number(value)?),
            "fit_start" => run.fit_start = Some(parse_number(value)?),
            "fit_end" => run.fit_end = Some(parse_number(value)?),
            "seed" => {
                run.seed = value
                    .parse()
                    .map_err(|_| format!("invalid seed '{value}'"))?
            }
            "energy_csv" => run.energy_csv = value.into(),
            "trace_csv" => run.trace_csv = value.into(),
            "alpha_min" => self.sweep.alpha.min = parse_number(value)?,
            "alpha_max" => self.sweep.alpha.max = parse_number(value)?,
            "alpha_steps" => self.sweep.alpha.steps = parse_count(value)?,
            "beta_min" => self.sweep.beta.min = parse_number(value)?,
            "beta_max" => self.sweep.beta.max = parse_number(value)?,
            "beta_steps" => self.sweep.beta.steps = parse_count(value)?,
            "simulate" => self.sweep.simulate = parse_bool(value)?,
            "abscissa" => self.sweep.abscissa = parse_bool(value)?,
            "sweep_csv" => self.sweep.csv = value.into(),
            "samples" => self.observability.samples = parse_count(value)?,
            "obs_horizon" => self.observability.horizon = Some(positive(parse_number(value)?)?),
            "obs_data" => {
                self.observability.data = match value {
                    "random" => SampleData::Random,
                    "config" => SampleData::Configured,
                    _ => {
                        return Err(format!(
                            "unknown obs_data '{value}' (expected random or config)"
                        ))
                    }
                }
            }
            "quotient_csv" => self.observability.csv = value.into(),
            "spectrum_csv" => self.spectrum_csv = Some(value.into()),
            _ => return Err(format!("unknown key '{key}'")),
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut config = Config::default();
        let mut seen = HashSet::new();
        for (index, raw) in text.lines().enumerate() {
            let line = index + 1;
            let fail = |message: String| ConfigError::Line { line, message };
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| fail(format!("expected 'key = value', got '{content}'")))?;
            let (key, value) = (key.trim(), value.trim());
            if key.is_empty() || value.is_empty() {
                return Err(fail(format!("expected 'key = value', got '{content}'")));
            }
            if !seen.insert(key.to_string()) {
                return Err(fail(format!("duplicate key '{key}'")));
            }
            config.set(key, value).map_err(fail)?;
        }
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::parse(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_overrides() {
        let c = Config::parse(
            "# reference run\nalpha = 0.2   # gain\n\nmode = nonlinear\nscheme = theta 0.6\n",
        )
        .unwrap();
        assert_eq!(c.run.alpha, 0.2);
        assert_eq!(c.run.beta, 0.1);
        assert_eq!(c.run.mode, Mode::Nonlinear);
        assert_eq!(c.run.scheme, TimeScheme::Theta(0.6));
        assert_eq!(c.run.seed, DEFAULT_SEED);
    }

    #[test]
    fn descriptors() {
        assert_eq!(
            parse_profile("sine 1 0.5").unwrap(),
            Profile::SineModes(vec![1.0, 0.5])
        );
        assert_eq!(
            parse_profile("bump 0.5 0.1 2").unwrap(),
            Profile::Bump {
                center: 0.5,
                width: 0.1,
                amplitude: 2.0
            }
        );
        assert_eq!(parse_profile("zero").unwrap(), Profile::Zero);
        assert!(parse_profile("bump 0.5 0.1").is_err());
        assert!(parse_profile("sine").is_err());
        assert_eq!(
            parse_history("linear 1 2").unwrap(),
            History::Linear {
                start: 1.0,
                end: 2.0
            }
        );
        assert_eq!(parse_history("constant 3").unwrap(), History::Constant(3.0));
        assert!(parse_history("square 1").is_err());
    }

    #[test]
    fn errors_carry_line_numbers() {
        let err = Config::parse("alpha = 0.1\n\nbogus = 3\n").unwrap_err();
        assert_eq!(
            err,
            ConfigError::Line {
                line: 3,
                message: "unknown key 'bogus'".into()
            }
        );
        assert!(matches!(
            Config::parse("nodes = many").unwrap_err(),
            ConfigError::Line { line: 1, .. }
        ));
        assert!(matches!(
            Config::parse("a\nalpha 0.1").unwrap_err(),
            ConfigError::Line { line: 1, .. }
        ));
        assert!(matches!(
            Config::parse("alpha = 1\nalpha = 2").unwrap_err(),
            ConfigError::Line { line: 2, .. }
        ));
        assert!(matches!(
            Config::parse("horizon = -1").unwrap_err(),
            ConfigError::Line { line: 1, .. }
        ));
    }

    #[test]
    fn ranges() {
        let r = Range {
            min: 0.0,
            max: 0.2,
            steps: 3,
        };
        assert_eq!(r.values(), vec![0.0, 0.1, 0.2]);
        assert!(Range { steps: 0, ..r }.values().is_empty());
        assert_eq!(Range { steps: 1, ..r }.values(), vec![0.0]);
    }
}
