//! Gain sweep over an `(alpha, beta)` grid.

use super::setup;
use crate::config::{Config, Mode};
use crate::error::CliError;
use crate::output::{num, opt, write_csv, SWEEP_HEADER};
use hsdelay::diagnostics::fit_decay;
use hsdelay::params::{theoretical_decay_rate, validate_gains};
use hsdelay::spectral::{assemble_generator, spectral_abscissa};
use hsdelay::{picard_solve, simulate_data, Gains, LyapunovWeights};

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SweepRow {
    pub alpha: f64,
    pub beta: f64,
    pub admissible: bool,
    pub lambda_theory: Option<f64>,
    pub kappa_theory: Option<f64>,
    pub lambda_emp: Option<f64>,
    pub kappa_emp: Option<f64>,
    pub abscissa: Option<f64>,
    pub errors: Vec<String>,
}

impl SweepRow {
    fn cells(&self) -> [String; 9] {
        [
            num(self.alpha),
            num(self.beta),
            self.admissible.to_string(),
            opt(self.lambda_theory),
            opt(self.kappa_theory),
            opt(self.lambda_emp),
            opt(self.kappa_emp),
            opt(self.abscissa),
            self.errors.join("; "),
        ]
    }
}

/// Grid points in lexicographic `(alpha, beta)` order.
pub fn points(cfg: &Config) -> Vec<(f64, f64)> {
    let betas = cfg.sweep.beta.values();
    let mut pts: Vec<(f64, f64)> = cfg
        .sweep
        .alpha
        .values()
        .into_iter()
        .flat_map(|a| betas.iter().map(move |&b| (a, b)))
        .collect();
    pts.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.total_cmp(&y.1)));
    pts
}

fn evaluate(cfg: &Config, gains: Gains, row: &mut SweepRow) -> Result<(), CliError> {
    let run = &cfg.run;
    let s = setup(run, gains)?;
    let norm = s.data.norm(&s.params, &s.grid);
    match LyapunovWeights::new(gains, run.length, run.mu1, run.mu2)
        .and_then(|w| theoretical_decay_rate(&s.params, w, run.theory_radius(norm)))
    {
        Ok(b) => {
            row.lambda_theory = Some(b.lambda);
            row.kappa_theory = Some(b.kappa);
        }
        Err(e) => row.errors.push(format!("theory: {e}")),
    }
    if cfg.sweep.simulate {
        let record = match run.mode {
            Mode::Linear => simulate_data(
                &s.params,
                s.grid,
                &s.data,
                run.horizon,
                &s.opts,
                false,
                None,
            ),
            Mode::Nonlinear => {
                simulate_data(&s.params, s.grid, &s.data, run.horizon, &s.opts, true, None)
            }
            Mode::Picard => {
                picard_solve(&s.params, s.grid, &s.data, run.horizon, &s.opts).map(|o| o.record)
            }
        };
        match record.and_then(|r| {
            let end = *r.times.last().unwrap_or(&0.0);
            fit_decay(&r.energies, &r.times, run.fit_window(end))
        }) {
            Ok(fit) => {
                row.lambda_emp = Some(fit.lambda_emp);
                row.kappa_emp = Some(fit.kappa_emp);
            }
            Err(e) => row.errors.push(format!("simulation: {e}")),
        }
    }
    if cfg.sweep.abscissa {
        match assemble_generator(s.grid, &s.params, run.cells)
            .and_then(|gm| spectral_abscissa(gm.matrix()))
        {
            Ok(a) => row.abscissa = Some(a),
            Err(e) => row.errors.push(format!("spectrum: {e}")),
        }
    }
    Ok(())
}

/// Admissibility is decided for every point before any simulation runs.
/// Failures at one point are recorded in its row and the sweep goes on.
pub fn sweep(cfg: &Config) -> Vec<SweepRow> {
    let mut rows: Vec<SweepRow> = points(cfg)
        .into_iter()
        .map(|(alpha, beta)| {
            let check = validate_gains(alpha, beta);
            SweepRow {
                alpha,
                beta,
                admissible: check.is_ok(),
                errors: check.err().map(|e| e.to_string()).into_iter().collect(),
                ..SweepRow::default()
            }
        })
        .collect();
    for row in rows.iter_mut().filter(|r| r.admissible) {
        let gains = Gains::unchecked(row.alpha, row.beta);
        if let Err(e) = evaluate(cfg, gains, row) {
            row.errors.push(e.to_string());
        }
    }
    rows
}

pub fn execute(cfg: &Config) -> Result<String, CliError> {
    let rows = sweep(cfg);
    write_csv(
        &cfg.sweep.csv,
        &SWEEP_HEADER,
        rows.iter().map(|r| r.cells()),
    )?;
    let admissible = rows.iter().filter(|r| r.admissible).count();
    Ok(format!(
        "{} points ({admissible} admissible) written to {}\n",
        rows.len(),
        cfg.sweep.csv.display()
    ))
}
