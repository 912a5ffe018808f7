//! Experiment configuration: named presets and a flat `key = value` format.
//!
//! ```text
//! # Table 1 (a), first block
//! scenario = table1-a
//! decoder  = l1-pdasc
//! m = 500
//! n = 1000
//! s = 5
//! nu = 0.1
//! sigma = 0.1
//! flip = 0.01
//! seed = 1
//! reps = 100
//! sweep = sigma
//! values = 0:0.05:0.5
//! ```
//!
//! Keys: `scenario`, `decoder` (`ls` or `l1-pdasc`), `m`, `n`, `s`, `nu`,
//! `sigma`, `flip` (or `flip_prob`), `seed`, `reps`, `sweep` (one of `m`,
//! `n`, `s`, `nu`, `sigma`, `flip_prob`), `values` (comma list or
//! `start:step:stop`), `signal` (`equal` or `normal`), `rho`, `max_grid`,
//! `max_iter`, `refit`, `negate_estimate`, `timing`, `threads`, `large`.
//! Blank lines and `#` comments are ignored; unknown keys are errors.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::path::PathOptions;
use crate::sensing::{ModelParams, SignalShape};

pub const DEFAULT_SEED: u64 = 20_160_101;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decoder {
    Ls,
    L1Pdasc,
}

impl FromStr for Decoder {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ls" => Ok(Self::Ls),
            "l1-pdasc" | "l1" | "pdasc" => Ok(Self::L1Pdasc),
            other => Err(Error::InvalidParams(format!(
                "unknown decoder {other:?}, expected ls or l1-pdasc"
            ))),
        }
    }
}

impl fmt::Display for Decoder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Ls => "ls",
            Self::L1Pdasc => "l1-pdasc",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    M,
    N,
    S,
    Nu,
    Sigma,
    FlipProb,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            Self::M => "m",
            Self::N => "n",
            Self::S => "s",
            Self::Nu => "nu",
            Self::Sigma => "sigma",
            Self::FlipProb => "flip_prob",
        }
    }

    pub fn apply(self, params: &ModelParams, value: f64) -> Result<ModelParams> {
        let count = || -> Result<usize> {
            if value >= 0.0 && value.fract() == 0.0 && value < 1e15 {
                Ok(value as usize)
            } else {
                Err(Error::InvalidParams(format!(
                    "sweep value {value} is not a count for {}",
                    self.name()
                )))
            }
        };
        let mut p = *params;
        match self {
            Self::M => p.m = count()?,
            Self::N => p.n = count()?,
            Self::S => p.s = count()?,
            Self::Nu => p.nu = value,
            Self::Sigma => p.sigma = value,
            Self::FlipProb => p.flip_prob = value,
        }
        Ok(p)
    }
}

impl FromStr for SweepParam {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "m" => Self::M,
            "n" => Self::N,
            "s" => Self::S,
            "nu" => Self::Nu,
            "sigma" => Self::Sigma,
            "flip" | "flip_prob" => Self::FlipProb,
            other => {
                return Err(Error::InvalidParams(format!(
                    "cannot sweep {other:?}; expected one of m, n, s, nu, sigma, flip_prob"
                )))
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub param: SweepParam,
    pub values: Vec<f64>,
}

/// Parses `a:step:b` (inclusive of `b` up to rounding) or a comma list.
pub fn parse_values(text: &str) -> Result<Vec<f64>> {
    let bad = || Error::InvalidParams(format!("bad value list {text:?}"));
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad());
    let parts: Vec<&str> = text.split(':').collect();
    let values = match parts.as_slice() {
        [a, step, b] => {
            let (a, step, b) = (num(a)?, num(step)?, num(b)?);
            if !(step > 0.0) || b < a || !a.is_finite() || !b.is_finite() {
                return Err(bad());
            }
            let count = ((b - a) / step + 1e-9).floor() as usize + 1;
            // snap to 12 decimals so 0.1·3 prints as 0.3
            (0..count)
                .map(|k| ((a + k as f64 * step) * 1e12).round() / 1e12)
                .collect()
        }
        [single] => single.split(',').map(num).collect::<Result<Vec<_>>>()?,
        _ => return Err(bad()),
    };
    if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
        return Err(bad());
    }
    Ok(values)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub scenario: String,
    pub params: ModelParams,
    pub reps: usize,
    pub decoder: Decoder,
    pub sweep: Option<Sweep>,
    pub signal: SignalShape,
    pub path: PathOptions,
    /// Replace the ℓ1 estimate by least squares on its support.
    pub refit: bool,
    /// Score `−x̂` instead of `x̂` (sign-reversal regime).
    pub negate_estimate: bool,
    /// Emit a `wall_time` column; off by default so output is reproducible.
    pub timing: bool,
    /// Worker threads; 0 picks the rayon default.
    pub threads: usize,
    /// Allow the 5000 × 20000 presets.
    pub large: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            scenario: "custom".into(),
            params: ModelParams {
                m: 500,
                n: 1000,
                s: 5,
                nu: 0.1,
                sigma: 0.1,
                flip_prob: 0.01,
                seed: DEFAULT_SEED,
            },
            reps: 100,
            decoder: Decoder::L1Pdasc,
            sweep: None,
            signal: SignalShape::default(),
            path: PathOptions::default(),
            refit: false,
            negate_estimate: false,
            timing: false,
            threads: 0,
            large: false,
        }
    }
}

/// Names accepted by [`ExperimentConfig::preset`].
pub const PRESETS: &[&str] = &[
    "table1-a",
    "table1-b",
    "table1-c",
    "table1-800-a",
    "table1-800-b",
    "table1-800-c",
    "table1-5000-a",
    "table1-5000-b",
    "table1-5000-c",
    "fig1",
    "fig2",
    "fig3-left",
    "fig3-right",
    "fig4a",
    "fig4b",
    "fig4c",
    "fig4d",
];

fn p(m: usize, n: usize, s: usize, nu: f64, sigma: f64, flip_prob: f64) -> ModelParams {
    ModelParams {
        m,
        n,
        s,
        nu,
        sigma,
        flip_prob,
        seed: DEFAULT_SEED,
    }
}

impl ExperimentConfig {
    pub fn preset(name: &str, large: bool) -> Result<Self> {
        use Decoder::*;
        use SweepParam::*;
        let sweep = |param, text: &str| {
            Some(Sweep {
                param,
                values: parse_values(text).expect("preset ranges are valid"),
            })
        };
        let (params, decoder, sweep, negate) = match name {
            "table1-a" => (p(500, 1000, 5, 0.1, 0.1, 0.01), L1Pdasc, None, false),
            "table1-b" => (p(500, 1000, 5, 0.3, 0.3, 0.05), L1Pdasc, None, false),
            "table1-c" => (p(500, 1000, 5, 0.1, 0.5, 0.10), L1Pdasc, None, false),
            "table1-800-a" => (p(800, 2000, 10, 0.1, 0.1, 0.01), L1Pdasc, None, false),
            "table1-800-b" => (p(800, 2000, 10, 0.3, 0.2, 0.03), L1Pdasc, None, false),
            "table1-800-c" => (p(800, 2000, 10, 0.5, 0.3, 0.05), L1Pdasc, None, false),
            "table1-5000-a" => (p(5000, 20000, 50, 0.0, 0.1, 0.01), L1Pdasc, None, false),
            "table1-5000-b" => (p(5000, 20000, 50, 0.0, 0.2, 0.03), L1Pdasc, None, false),
            "table1-5000-c" => (p(5000, 20000, 50, 0.0, 0.3, 0.05), L1Pdasc, None, false),
            "fig1" => (p(400, 1000, 5, 0.5, 0.01, 0.025), L1Pdasc, None, false),
            "fig2" => (
                p(1000, 10, 10, 0.3, 0.0, 0.025),
                Ls,
                sweep(Sigma, "0:0.05:0.5"),
                false,
            ),
            "fig3-left" => (
                p(1000, 10, 10, 0.3, 0.01, 0.0),
                Ls,
                sweep(FlipProb, "0:0.01:0.1"),
                false,
            ),
            "fig3-right" => (
                p(1000, 10, 10, 0.3, 0.01, 0.9),
                Ls,
                sweep(FlipProb, "0.9:0.01:1"),
                true,
            ),
            "fig4a" => (
                p(500, 1000, 1, 0.1, 0.05, 0.01),
                L1Pdasc,
                sweep(S, "1:2:12"),
                false,
            ),
            "fig4b" => (
                p(500, 1000, 5, 0.3, 0.0, 0.05),
                L1Pdasc,
                sweep(Sigma, "0:0.1:0.6"),
                false,
            ),
            "fig4c" => (
                p(500, 1000, 5, 0.1, 0.01, 0.0),
                L1Pdasc,
                sweep(FlipProb, "0:0.03:0.15"),
                false,
            ),
            "fig4d" => (
                p(500, 1000, 5, 0.1, 0.01, 0.85),
                L1Pdasc,
                sweep(FlipProb, "0.85:0.03:1"),
                false,
            ),
            other => {
                return Err(Error::InvalidParams(format!(
                    "unknown scenario {other:?}; known: {}",
                    PRESETS.join(", ")
                )))
            }
        };
        if name.starts_with("table1-5000") && !large {
            return Err(Error::InvalidParams(format!(
                "scenario {name} is 5000 x 20000; pass --large to run it"
            )));
        }
        Ok(Self {
            scenario: name.into(),
            params,
            decoder,
            sweep,
            negate_estimate: negate,
            large,
            ..Self::default()
        })
    }

    /// Reads `key = value` lines on top of the defaults, or on top of the
    /// preset named by a `scenario` key when that name is known.
    pub fn parse(text: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for (k, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::InvalidParams(format!("line {}: expected key = value, got {raw:?}", k + 1))
            })?;
            pairs.push((k + 1, key.trim().to_string(), value.trim().to_string()));
        }
        let large = pairs
            .iter()
            .find(|(_, k, _)| k == "large")
            .map(|(l, _, v)| parse_bool(*l, v))
            .transpose()?
            .unwrap_or(false);
        let mut cfg = match pairs.iter().find(|(_, k, _)| k == "scenario") {
            Some((_, _, name)) if PRESETS.contains(&name.as_str()) => Self::preset(name, large)?,
            Some((_, _, name)) => Self {
                scenario: name.clone(),
                ..Self::default()
            },
            None => Self::default(),
        };
        let mut sweep_param = cfg.sweep.as_ref().map(|s| s.param);
        let mut sweep_values = cfg.sweep.as_ref().map(|s| s.values.clone());
        for (line, key, value) in &pairs {
            let err = |what: &str| {
                Error::InvalidParams(format!("line {line}: bad {what} value {value:?}"))
            };
            let int = |what: &str| value.parse::<usize>().map_err(|_| err(what));
            let real = |what: &str| value.parse::<f64>().map_err(|_| err(what));
            match key.as_str() {
                "scenario" | "large" => {}
                "decoder" => cfg.decoder = value.parse()?,
                "m" => cfg.params.m = int("m")?,
                "n" => cfg.params.n = int("n")?,
                "s" => cfg.params.s = int("s")?,
                "nu" => cfg.params.nu = real("nu")?,
                "sigma" => cfg.params.sigma = real("sigma")?,
                "flip" | "flip_prob" => cfg.params.flip_prob = real("flip")?,
                "seed" => cfg.params.seed = value.parse().map_err(|_| err("seed"))?,
                "reps" => cfg.reps = int("reps")?,
                "sweep" => sweep_param = Some(value.parse()?),
                "values" => sweep_values = Some(parse_values(value)?),
                "signal" => cfg.signal = value.parse()?,
                "rho" => cfg.path.rho = real("rho")?,
                "max_grid" => cfg.path.max_grid = int("max_grid")?,
                "max_iter" => cfg.path.max_iter = int("max_iter")?,
                "refit" => cfg.refit = parse_bool(*line, value)?,
                "negate_estimate" => cfg.negate_estimate = parse_bool(*line, value)?,
                "timing" => cfg.timing = parse_bool(*line, value)?,
                "threads" => cfg.threads = int("threads")?,
                other => {
                    return Err(Error::InvalidParams(format!(
                        "line {line}: unknown key {other:?}"
                    )))
                }
            }
        }
        cfg.large = large;
        cfg.sweep = match (sweep_param, sweep_values) {
            (Some(param), Some(values)) => Some(Sweep { param, values }),
            (None, None) => None,
            _ => {
                return Err(Error::InvalidParams(
                    "sweep and values must be given together".into(),
                ))
            }
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.reps == 0 {
            return Err(Error::InvalidParams("reps must be at least 1".into()));
        }
        if !(self.path.rho > 0.0 && self.path.rho < 1.0) {
            return Err(Error::InvalidParams(format!(
                "rho = {} must lie in (0, 1)",
                self.path.rho
            )));
        }
        if self.path.max_grid == 0 || self.path.max_iter == 0 {
            return Err(Error::InvalidParams(
                "max_grid and max_iter must be positive".into(),
            ));
        }
        for params in self.grid()? {
            params.validate()?;
        }
        Ok(())
    }

    /// Parameters at every sweep value (just the base parameters without a sweep).
    pub fn grid(&self) -> Result<Vec<ModelParams>> {
        match &self.sweep {
            None => Ok(vec![self.params]),
            Some(sw) => sw
                .values
                .iter()
                .map(|&v| sw.param.apply(&self.params, v))
                .collect(),
        }
    }
}

fn parse_bool(line: usize, value: &str) -> Result<bool> {
    match value {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(Error::InvalidParams(format!(
            "line {line}: bad boolean {value:?}"
        ))),
    }
}
