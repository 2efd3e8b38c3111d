//! Monte-Carlo estimate of the observability constant.

use super::setup;
use crate::config::{Config, SampleData};
use crate::error::CliError;
use crate::output::{num, write_csv, QUOTIENT_HEADER};
use hsdelay::diagnostics::{observability_decay, observability_quotient};
use hsdelay::initial::random_unit_data;
use hsdelay::{simulate_data, Error, Gains};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Debug, PartialEq)]
pub struct ObservabilityEstimate {
    pub quotients: Vec<f64>,
    pub constant: f64,
    pub delta: f64,
    pub mu0: f64,
    pub horizon: f64,
}

pub fn estimate(cfg: &Config) -> Result<ObservabilityEstimate, CliError> {
    let run = &cfg.run;
    let obs = &cfg.observability;
    let s = setup(run, Gains::new(run.alpha, run.beta)?)?;
    let horizon = obs.horizon.unwrap_or(2.0 * run.delay);
    if !(horizon > run.delay) {
        return Err(Error::HorizonTooShort {
            horizon,
            delay: run.delay,
        }
        .into());
    }
    if obs.samples == 0 {
        return Err(Error::InvalidParameter {
            name: "samples",
            value: 0.0,
        }
        .into());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(run.seed);
    let mut quotients = Vec::with_capacity(obs.samples);
    for _ in 0..obs.samples {
        let data = match obs.data {
            SampleData::Random => random_unit_data(&s.params, &s.grid, run.cells, &mut rng)?,
            SampleData::Configured => s.data.clone(),
        };
        let rec = simulate_data(&s.params, s.grid, &data, horizon, &s.opts, false, None)?;
        quotients.push(observability_quotient(&rec, horizon)?);
    }
    let constant = quotients.iter().copied().fold(0.0, f64::max);
    let (delta, mu0) = observability_decay(constant, horizon)?;
    Ok(ObservabilityEstimate {
        quotients,
        constant,
        delta,
        mu0,
        horizon,
    })
}

pub fn execute(cfg: &Config) -> Result<String, CliError> {
    let est = estimate(cfg)?;
    write_csv(
        &cfg.observability.csv,
        &QUOTIENT_HEADER,
        est.quotients
            .iter()
            .enumerate()
            .map(|(i, q)| [i.to_string(), num(*q)]),
    )?;
    Ok(format!(
        "samples: {}, T = {:?}\nC_emp = {:?}\ndelta = {:?}, mu0 = {:?}\n",
        est.quotients.len(),
        est.horizon,
        est.constant,
        est.delta,
        est.mu0
    ))
}
