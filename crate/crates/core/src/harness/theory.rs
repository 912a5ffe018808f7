//! Monte-Carlo checks of the estimation theory.
//!
//! * `lemma21`: `Σ⁻¹E[yψ]/c = x*`, estimated from 10⁵ fresh samples.
//! * `scaling-ls`: least-squares error should shrink like `√(n/m)`, so
//!   quadrupling `m` should halve the mean descaled error.
//! * `scaling-l1`: the ℓ1 error rate `√(s log n / m)` predicts the same
//!   halving for the mean optimally-scaled error.
//!
//! The two scaling checks pass when the ratio lies in `[0.35, 0.65]`.

use std::fmt;
use std::str::FromStr;

use super::config::{Decoder, ExperimentConfig, DEFAULT_SEED};
use super::experiment::run_experiment;
use crate::error::{Error, Result};
use crate::sensing::{verify_population_identity, ModelParams};

pub const LEMMA_SAMPLES: usize = 100_000;
pub const LEMMA_TOL: f64 = 0.05;
pub const RATIO_BAND: (f64, f64) = (0.35, 0.65);
pub const SCALING_REPS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TheoryCheck {
    Lemma21,
    ScalingLs,
    ScalingL1,
}

impl TheoryCheck {
    pub const ALL: [TheoryCheck; 3] = [Self::Lemma21, Self::ScalingLs, Self::ScalingL1];

    pub fn name(self) -> &'static str {
        match self {
            Self::Lemma21 => "lemma21",
            Self::ScalingLs => "scaling-ls",
            Self::ScalingL1 => "scaling-l1",
        }
    }
}

impl FromStr for TheoryCheck {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| {
                Error::InvalidParams(format!(
                    "unknown check {s:?}; expected lemma21, scaling-ls or scaling-l1"
                ))
            })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TheoryReport {
    pub check: TheoryCheck,
    /// Distance for `lemma21`, error ratio for the scaling checks.
    pub value: f64,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for TheoryReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {}: {:.4} ({})",
            if self.passed { "PASS" } else { "FAIL" },
            self.check.name(),
            self.value,
            self.detail
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoryOptions {
    pub seed: u64,
    pub reps: usize,
    pub mc_samples: usize,
    pub threads: usize,
}

impl Default for TheoryOptions {
    fn default() -> Self {
        Self {
            seed: DEFAULT_SEED,
            reps: SCALING_REPS,
            mc_samples: LEMMA_SAMPLES,
            threads: 0,
        }
    }
}

pub fn lemma_params(seed: u64) -> ModelParams {
    ModelParams {
        m: 1,
        n: 5,
        s: 5,
        nu: 0.3,
        sigma: 0.1,
        flip_prob: 0.05,
        seed,
    }
}

/// Base scenario and the two sample sizes compared by a scaling check.
pub fn scaling_setup(check: TheoryCheck) -> Option<(ModelParams, Decoder, usize, usize)> {
    match check {
        TheoryCheck::Lemma21 => None,
        TheoryCheck::ScalingLs => Some((
            ModelParams {
                m: 1000,
                n: 10,
                s: 10,
                nu: 0.3,
                sigma: 0.01,
                flip_prob: 0.025,
                seed: 0,
            },
            Decoder::Ls,
            1000,
            4000,
        )),
        TheoryCheck::ScalingL1 => Some((
            ModelParams {
                m: 400,
                n: 1000,
                s: 5,
                nu: 0.1,
                sigma: 0.1,
                flip_prob: 0.01,
                seed: 0,
            },
            Decoder::L1Pdasc,
            400,
            1600,
        )),
    }
}

pub fn check_theory(check: TheoryCheck, opts: &TheoryOptions) -> Result<TheoryReport> {
    let Some((base, decoder, m_small, m_large)) = scaling_setup(check) else {
        let dist = verify_population_identity(&lemma_params(opts.seed), opts.mc_samples)?;
        return Ok(TheoryReport {
            check,
            value: dist,
            passed: dist <= LEMMA_TOL,
            detail: format!(
                "distance over {} samples, need <= {LEMMA_TOL}",
                opts.mc_samples
            ),
        });
    };
    let mut means = [0.0; 2];
    for (slot, m) in means.iter_mut().zip([m_small, m_large]) {
        let cfg = ExperimentConfig {
            scenario: check.name().into(),
            params: ModelParams {
                m,
                seed: opts.seed,
                ..base
            },
            reps: opts.reps,
            decoder,
            threads: opts.threads,
            ..ExperimentConfig::default()
        };
        let res = run_experiment(&cfg)?;
        let agg = &res.summaries[0];
        if agg.failed > 0 {
            return Err(Error::InvalidParams(format!(
                "{}: {} of {} replications failed at m = {m}",
                check.name(),
                agg.failed,
                opts.reps
            )));
        }
        let s = agg.summary.expect("at least one replication succeeded");
        *slot = match decoder {
            Decoder::Ls => s.mean_err_descaled.ok_or(Error::DegenerateScale)?,
            Decoder::L1Pdasc => s.mean_err_optscale,
        };
    }
    let ratio = means[1] / means[0];
    let (lo, hi) = RATIO_BAND;
    Ok(TheoryReport {
        check,
        value: ratio,
        passed: (lo..=hi).contains(&ratio),
        detail: format!(
            "mean error {:.4e} at m = {m_small}, {:.4e} at m = {m_large}, need ratio in [{lo}, {hi}]",
            means[0], means[1]
        ),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for c in TheoryCheck::ALL {
            assert_eq!(c.name().parse::<TheoryCheck>().unwrap(), c);
        }
        assert!("lemma".parse::<TheoryCheck>().is_err());
    }

    #[test]
    fn lemma_check_passes_and_reports() {
        let r = check_theory(TheoryCheck::Lemma21, &TheoryOptions::default()).unwrap();
        assert!(r.passed, "{r}");
        assert!(r.to_string().starts_with("PASS lemma21"));
    }

    #[test]
    fn lemma_check_fails_with_few_samples() {
        let opts = TheoryOptions {
            mc_samples: 20,
            ..TheoryOptions::default()
        };
        let r = check_theory(TheoryCheck::Lemma21, &opts).unwrap();
        assert!(!r.passed, "{r}");
    }
}
