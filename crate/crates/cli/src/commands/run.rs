//! Single simulation with energy and trace output.

use super::setup;
use crate::config::{Config, Mode};
use crate::error::CliError;
use crate::output::{num, write_csv, ENERGY_HEADER, TRACE_HEADER};
use hsdelay::diagnostics::{
    check_decay, dissipation_rhs, fit_decay, verify_decay_bound, DecayVerdict,
};
use hsdelay::params::theoretical_decay_rate;
use hsdelay::{picard_solve, simulate_data, DecayBound, Gains, LyapunovWeights, SimulationRecord};
use std::fmt::Write;

pub struct RunOutcome {
    pub record: SimulationRecord,
    pub bound: Option<DecayBound>,
    pub verdict: Option<Result<DecayVerdict, String>>,
    pub report: String,
}

impl RunOutcome {
    pub fn passed(&self) -> bool {
        !matches!(
            self.verdict,
            Some(Err(_)) | Some(Ok(DecayVerdict { passed: false, .. }))
        )
    }
}

pub fn simulate(cfg: &Config) -> Result<RunOutcome, CliError> {
    let run = &cfg.run;
    let gains = Gains::new(run.alpha, run.beta)?;
    let s = setup(run, gains)?;
    let record = match run.mode {
        Mode::Linear => simulate_data(
            &s.params,
            s.grid,
            &s.data,
            run.horizon,
            &s.opts,
            false,
            None,
        )?,
        Mode::Nonlinear => {
            simulate_data(&s.params, s.grid, &s.data, run.horizon, &s.opts, true, None)?
        }
        Mode::Picard => picard_solve(&s.params, s.grid, &s.data, run.horizon, &s.opts)?.record,
    };
    let norm = (2.0 * record.energies[0]).sqrt();
    let mut bound = None;
    let mut verdict = None;
    if run.verdict {
        let w = LyapunovWeights::new(gains, run.length, run.mu1, run.mu2)?;
        let radius = run.theory_radius(norm);
        match theoretical_decay_rate(&s.params, w, radius) {
            Ok(b) => {
                bound = Some(b);
                verdict = Some(if record.is_linear() {
                    Ok(check_decay(&record, w, b.lambda, b.kappa))
                } else {
                    verify_decay_bound(&record, w, radius).map_err(|e| e.to_string())
                });
            }
            Err(e) => verdict = Some(Err(e.to_string())),
        }
    }

    let mut report = String::new();
    let last = record.energies.len() - 1;
    let _ = writeln!(report, "mode: {:?}, scheme: {:?}", run.mode, run.scheme);
    let _ = writeln!(
        report,
        "grid: N = {}, M = {}, dt = {}, steps = {last}",
        run.nodes, run.cells, record.dt
    );
    let _ = writeln!(report, "data norm: {norm:?}");
    let _ = writeln!(
        report,
        "E(0) = {:?}, E(T) = {:?}",
        record.energies[0], record.energies[last]
    );
    match fit_decay(
        &record.energies,
        &record.times,
        run.fit_window(record.times[last]),
    ) {
        Ok(fit) => {
            let _ = writeln!(
                report,
                "fitted decay: lambda_emp = {:?}, kappa_emp = {:?} on [{:?}, {:?}]",
                fit.lambda_emp, fit.kappa_emp, fit.window.0, fit.window.1
            );
        }
        Err(e) => {
            let _ = writeln!(report, "fitted decay: unavailable ({e})");
        }
    }
    match &verdict {
        None => {}
        Some(Ok(v)) => {
            let _ = writeln!(
                report,
                "verdict: {} (lambda = {:?}, kappa = {:?}, max E/bound = {:?}, V e^(lambda t) monotone = {:?})",
                if v.passed { "pass" } else { "fail" },
                v.lambda,
                v.kappa,
                v.max_envelope_ratio,
                v.lyapunov_monotone
            );
        }
        Some(Err(e)) => {
            let _ = writeln!(report, "verdict: fail ({e})");
        }
    }
    Ok(RunOutcome {
        record,
        bound,
        verdict,
        report,
    })
}

pub fn execute(cfg: &Config) -> Result<String, CliError> {
    let out = simulate(cfg)?;
    let rec = &out.record;
    let run = &cfg.run;
    let lyapunov = rec.lyapunov_series(run.mu1, run.mu2);
    let e0 = rec.energies[0];
    write_csv(
        &run.energy_csv,
        &ENERGY_HEADER,
        rec.times.iter().enumerate().map(|(k, &t)| {
            let bound = out
                .bound
                .map(|b| num(b.kappa * e0 * (-b.lambda * t).exp()))
                .unwrap_or_default();
            [num(t), num(rec.energies[k]), num(lyapunov[k]), bound]
        }),
    )?;
    let gains = rec.params.gains;
    write_csv(
        &run.trace_csv,
        &TRACE_HEADER,
        rec.traces.iter().map(|tr| {
            [
                num(tr.t),
                num(tr.ux_l),
                num(tr.ux_delayed),
                num(tr.vx_0),
                num(dissipation_rhs(gains, tr)),
            ]
        }),
    )?;
    if out.passed() {
        Ok(out.report)
    } else {
        print!("{}", out.report);
        let reason = match out.verdict {
            Some(Err(e)) => e,
            _ => "energy bound or Lyapunov monotonicity violated".into(),
        };
        Err(CliError::Verdict(reason))
    }
}
