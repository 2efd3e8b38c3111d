//! Energy and Lyapunov functionals, the energy-rate identity, decay
//! fitting, smoothing and observability checks, and decay verdicts.

use crate::delayline::DelayLine;
pub use crate::discretization::TraceSample;
use crate::discretization::{gradient_norm_sq, Grid};
use crate::error::{Error, Result};
use crate::integrator::{SimulationRecord, State};
use crate::params::{
    kato_constant, phi_matrix, smallness_radius, theoretical_decay_rate, Gains, LyapunovWeights,
    SystemParams,
};

/// Energy of fields and delay line. The delay part averages the two nodes
/// of each cell before squaring, which makes the discrete energy exactly
/// non-increasing under the shift.
pub fn energy_parts(p: &SystemParams, grid: &Grid, u: &[f64], v: &[f64], line: &DelayLine) -> f64 {
    let fields = grid.integrate(u, |_, w| w * w) + grid.integrate(v, |_, w| w * w);
    0.5 * fields + 0.5 * p.gains.beta() * p.delay * line.cell_l2_norm_rho_sq()
}

/// `E = (1/2) int (u^2 + v^2) + (beta h / 2) int_0^1 z^2`.
pub fn energy(p: &SystemParams, grid: &Grid, s: &State) -> f64 {
    energy_parts(p, grid, &s.u, &s.v, &s.line)
}

/// `V1 = (1/2) int ((L - x) u^2 + x v^2)`.
pub fn morawetz_parts(grid: &Grid, u: &[f64], v: &[f64]) -> f64 {
    let l = grid.length();
    0.5 * (grid.integrate(u, |x, w| (l - x) * w * w) + grid.integrate(v, |x, w| x * w * w))
}

/// `V2 = (beta h / 2) int_0^1 (1 - rho) z^2`, cell quadrature.
pub fn delay_lyapunov_parts(p: &SystemParams, line: &DelayLine) -> f64 {
    0.5 * p.gains.beta() * p.delay * line.cell_weighted_lyapunov_rho()
}

/// `V = E + mu1 V1 + mu2 V2`.
pub fn lyapunov(p: &SystemParams, grid: &Grid, s: &State, w: LyapunovWeights) -> Result<f64> {
    LyapunovWeights::new(p.gains, p.length, w.mu1, w.mu2)?;
    Ok(energy(p, grid, s)
        + w.mu1 * morawetz_parts(grid, &s.u, &s.v)
        + w.mu2 * delay_lyapunov_parts(p, &s.line))
}

/// `(1/2) (a, z) Phi (a, z)^T - (1/2) b^2` for traces `a = u_x(L)`,
/// `z = u_x(t - h, L)`, `b = v_x(0)`.
pub fn dissipation_rhs(g: Gains, tr: &TraceSample) -> f64 {
    0.5 * phi_matrix(g).quadratic([tr.ux_l, tr.ux_delayed]) - 0.5 * tr.vx_0 * tr.vx_0
}

#[derive(Clone, Debug, PartialEq)]
pub struct IdentityCheck {
    pub max_residual: f64,
    pub per_step: Vec<f64>,
}

/// Compares the discrete energy rate with the boundary quadratic form at
/// step midpoints.
pub fn check_energy_identity(rec: &SimulationRecord) -> Result<IdentityCheck> {
    if !rec.is_linear() {
        return Err(Error::NotLinearRun);
    }
    let g = rec.params.gains;
    let per_step: Vec<f64> = (0..rec.energies.len().saturating_sub(1))
        .map(|k| {
            let (a, b) = (&rec.traces[k], &rec.traces[k + 1]);
            let mid = TraceSample {
                t: 0.5 * (a.t + b.t),
                ux_l: 0.5 * (a.ux_l + b.ux_l),
                ux_delayed: 0.5 * (a.ux_delayed + b.ux_delayed),
                vx_0: 0.5 * (a.vx_0 + b.vx_0),
            };
            let rate = (rec.energies[k + 1] - rec.energies[k]) / rec.dt;
            (rate - dissipation_rhs(g, &mid)).abs()
        })
        .collect();
    let max_residual = per_step.iter().copied().fold(0.0, f64::max);
    Ok(IdentityCheck {
        max_residual,
        per_step,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecayEstimate {
    pub lambda_emp: f64,
    pub kappa_emp: f64,
    /// Root-mean-square residual of `ln E` about the fitted line.
    pub residual: f64,
    /// Window actually used after clipping.
    pub window: (f64, f64),
}

/// Least-squares fit of `ln E = ln(kappa E(0)) - lambda t` over a window,
/// by default `[0.2 T, T]`.
///
/// The window is cut at the first sample that is not a positive normal
/// float; logarithms of subnormal or zero energies carry no information.
pub fn fit_decay(
    energies: &[f64],
    times: &[f64],
    window: Option<(f64, f64)>,
) -> Result<DecayEstimate> {
    assert_eq!(energies.len(), times.len());
    let (Some(&t0), Some(&t_end)) = (times.first(), times.last()) else {
        return Err(Error::EmptyWindow {
            start: 0.0,
            end: 0.0,
        });
    };
    let (start, end) = window.unwrap_or((t0 + 0.2 * (t_end - t0), t_end));
    let e0 = energies[0];
    if !(e0 > 0.0) {
        return Err(Error::NonPositiveEnergy { time: t0 });
    }
    let slack = 1e-9 * (t_end - t0).abs().max(1.0);
    let mut points = Vec::new();
    for (&t, &e) in times.iter().zip(energies) {
        if t < start - slack || t > end + slack {
            continue;
        }
        if !(e >= f64::MIN_POSITIVE) || !e.is_finite() {
            if points.is_empty() {
                return Err(Error::NonPositiveEnergy { time: t });
            }
            break;
        }
        points.push((t, e.ln()));
    }
    if points.len() < 2 {
        return Err(Error::EmptyWindow { start, end });
    }
    let n = points.len() as f64;
    let mt = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mt) * (p.0 - mt)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mt;
    let residual = (points
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    Ok(DecayEstimate {
        lambda_emp: -slope,
        kappa_emp: (intercept - e0.ln()).exp(),
        residual,
        window: (points[0].0, points[points.len() - 1].0),
    })
}

/// Relative allowance on the energy envelope.
pub const ENVELOPE_SLACK: f64 = 1.05;
/// Allowed increase of `V e^{lambda t}` per step, relative to `V(0)`.
pub const LYAPUNOV_SLACK: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecayVerdict {
    pub lambda: f64,
    pub kappa: f64,
    /// Largest `E(t_k) / (kappa E(0) e^{-lambda t_k})`.
    pub max_envelope_ratio: f64,
    pub envelope_holds: bool,
    /// Largest one-step increase of `V e^{lambda t}`, relative to `V(0)`.
    pub max_lyapunov_increase: f64,
    pub lyapunov_monotone: bool,
    pub passed: bool,
}

/// Checks `E(t) <= 1.05 kappa E(0) e^{-lambda t}` and that
/// `V(t) e^{lambda t}` does not increase, for given `(lambda, kappa)`.
pub fn check_decay(
    rec: &SimulationRecord,
    w: LyapunovWeights,
    lambda: f64,
    kappa: f64,
) -> DecayVerdict {
    let e0 = rec.energies[0];
    let mut max_ratio: f64 = 0.0;
    let mut envelope_holds = true;
    for (&t, &e) in rec.times.iter().zip(&rec.energies) {
        let bound = kappa * e0 * (-lambda * t).exp();
        if e > ENVELOPE_SLACK * bound {
            envelope_holds = false;
        }
        if bound > 0.0 {
            max_ratio = max_ratio.max(e / bound);
        }
    }
    let v = rec.lyapunov_series(w.mu1, w.mu2);
    let v0 = v[0];
    let mut max_increase: f64 = f64::NEG_INFINITY;
    let mut monotone = true;
    for k in 0..v.len().saturating_sub(1) {
        // Scaled by e^{-lambda t_k} to avoid overflow on long runs.
        let step = v[k + 1] * (lambda * (rec.times[k + 1] - rec.times[k])).exp() - v[k];
        let increase = step * (lambda * rec.times[k]).exp();
        if v0 > 0.0 {
            max_increase = max_increase.max(increase / v0);
        }
        if increase > LYAPUNOV_SLACK * v0 {
            monotone = false;
        }
    }
    DecayVerdict {
        lambda,
        kappa,
        max_envelope_ratio: max_ratio,
        envelope_holds,
        max_lyapunov_increase: if v0 > 0.0 { max_increase } else { 0.0 },
        lyapunov_monotone: monotone,
        passed: envelope_holds && monotone,
    }
}

/// Exponential decay verdict with the certified `(lambda, kappa)` for data
/// of norm at most `radius`.
pub fn verify_decay_bound(
    rec: &SimulationRecord,
    w: LyapunovWeights,
    radius: f64,
) -> Result<DecayVerdict> {
    let p = &rec.params;
    if !p.gains.is_admissible() {
        return Err(Error::PreconditionViolated(
            "gains are not admissible".into(),
        ));
    }
    let r_max = smallness_radius(p.length);
    if !(radius < r_max) {
        return Err(Error::PreconditionViolated(format!(
            "radius {radius} is not below {r_max}"
        )));
    }
    let norm = (2.0 * rec.energies[0]).sqrt();
    if norm > radius * (1.0 + 1e-9) {
        return Err(Error::PreconditionViolated(format!(
            "data norm {norm} exceeds radius {radius}"
        )));
    }
    let bound = theoretical_decay_rate(p, w, radius)
        .map_err(|e| Error::PreconditionViolated(e.to_string()))?;
    Ok(check_decay(rec, w, bound.lambda, bound.kappa))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KatoCheck {
    pub lhs: f64,
    pub bound: f64,
    pub ratio: f64,
}

/// `int_0^T int_0^L (u_x^2 + v_x^2)` against
/// `C (||(u0, v0)||^2 + ||z0||^2_{L2(0,1)})`.
///
/// The time integral uses the right-endpoint rule of the implicit stepper.
/// Rough data lose their steep gradients within a fraction of a step, so the
/// `t = 0` term of a trapezoid rule would add a spurious `dt/2 ||u0_x||^2`.
pub fn kato_check(rec: &SimulationRecord) -> Result<KatoCheck> {
    if !rec.is_linear() {
        return Err(Error::NotLinearRun);
    }
    let lhs: f64 = rec
        .times
        .windows(2)
        .zip(&rec.gradients[1..])
        .map(|(t, g)| (t[1] - t[0]) * g)
        .sum();
    let s = &rec.initial;
    let g = &rec.grid;
    let data = g.integrate(&s.u, |_, w| w * w)
        + g.integrate(&s.v, |_, w| w * w)
        + s.line.cell_l2_norm_rho_sq();
    let bound = kato_constant(rec.params.length, rec.params.gains) * data;
    let ratio = if bound > 0.0 { lhs / bound } else { 0.0 };
    Ok(KatoCheck { lhs, bound, ratio })
}

fn trapezoid_in_time(times: &[f64], values: &[f64]) -> f64 {
    times
        .windows(2)
        .zip(values.windows(2))
        .map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1]))
        .sum()
}

/// `||(u0, v0, z0)||_H^2 / int_0^T (u_x(t,L)^2 + u_x(t-h,L)^2 + v_x(t,0)^2) dt`.
pub fn observability_quotient(rec: &SimulationRecord, horizon: f64) -> Result<f64> {
    if !rec.is_linear() {
        return Err(Error::NotLinearRun);
    }
    let h = rec.params.delay;
    if !(horizon > h) {
        return Err(Error::HorizonTooShort { horizon, delay: h });
    }
    let last = *rec.times.last().unwrap_or(&0.0);
    if last < horizon - 1e-9 * horizon {
        return Err(Error::PreconditionViolated(format!(
            "record ends at {last}, before T = {horizon}"
        )));
    }
    let numerator = 2.0 * rec.energies[0];
    if numerator == 0.0 {
        return Err(Error::NotDefined);
    }
    let count = rec
        .times
        .iter()
        .take_while(|&&t| t <= horizon + 1e-9 * horizon)
        .count();
    let observed: Vec<f64> = rec.traces[..count]
        .iter()
        .map(|tr| tr.ux_l * tr.ux_l + tr.ux_delayed * tr.ux_delayed + tr.vx_0 * tr.vx_0)
        .collect();
    let denominator = trapezoid_in_time(&rec.times[..count], &observed);
    if denominator < 1e-300 {
        return Ok(f64::INFINITY);
    }
    Ok(numerator / denominator)
}

/// `(delta, mu0) = (C / (1 + C), ln(1 + 1/C) / T)`.
pub fn observability_decay(c: f64, horizon: f64) -> Result<(f64, f64)> {
    if !(c > 0.0) || !(horizon > 0.0) {
        return Err(Error::PreconditionViolated(
            "C and T must be positive".into(),
        ));
    }
    if c.is_infinite() {
        return Ok((1.0, 0.0));
    }
    Ok((c / (1.0 + c), (1.0 / c).ln_1p() / horizon))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SmallnessReport {
    pub data_norm: f64,
    pub radius: f64,
    pub r_max: f64,
    /// `norm <= r` and `r < r_max`.
    pub within_radius: bool,
    /// `int u^3`.
    pub cubic_lhs: f64,
    /// `L^{3/2} r ||u_x||^2`.
    pub cubic_rhs: f64,
    /// `3 int (L - 2x) u v v_x`.
    pub coupling_lhs: f64,
    /// `3 L^{3/2} r ||v_x||^2`.
    pub coupling_rhs: f64,
    pub passed: bool,
}

/// Compares the data norm with `r` and `r_max` and evaluates the two
/// trilinear estimates on the initial fields.
pub fn smallness_check(p: &SystemParams, grid: &Grid, s: &State, radius: f64) -> SmallnessReport {
    let l = p.length;
    let r_max = smallness_radius(l);
    let data_norm = (2.0 * energy(p, grid, s)).sqrt();
    let scale = l.powf(1.5) * radius;
    let cubic_lhs = grid.integrate(&s.u, |_, w| w * w * w);
    let cubic_rhs = scale * gradient_norm_sq(grid, &s.u);
    let vx = crate::discretization::centered_gradient(grid, &s.v);
    let coupling_lhs = 3.0
        * grid.dx()
        * (0..grid.nodes())
            .map(|j| (l - 2.0 * grid.x(j)) * s.u[j] * s.v[j] * vx[j])
            .sum::<f64>();
    let coupling_rhs = 3.0 * scale * gradient_norm_sq(grid, &s.v);
    let within_radius = data_norm <= radius && radius < r_max;
    SmallnessReport {
        data_norm,
        radius,
        r_max,
        within_radius,
        cubic_lhs,
        cubic_rhs,
        coupling_lhs,
        coupling_rhs,
        passed: within_radius && cubic_lhs <= cubic_rhs && coupling_lhs <= coupling_rhs,
    }
}
