//! Named initial-data and delay-history families.

use crate::delayline::DelayLine;
use crate::diagnostics::energy_parts;
use crate::discretization::{outflow_trace, Grid};
use crate::error::{Error, Result};
use crate::params::SystemParams;
use rand::Rng;
use std::f64::consts::PI;

/// Initial profile for one field.
#[derive(Clone, Debug, PartialEq)]
pub enum Profile {
    Zero,
    /// `sum_k c_k sin(k pi x / L)`, `k = 1, 2, ...`.
    SineModes(Vec<f64>),
    /// `amplitude exp(-((x - center) / width)^2)`.
    Bump {
        center: f64,
        width: f64,
        amplitude: f64,
    },
}

impl Profile {
    pub fn eval(&self, x: f64, length: f64) -> f64 {
        match self {
            Profile::Zero => 0.0,
            Profile::SineModes(c) => c
                .iter()
                .enumerate()
                .map(|(k, ck)| ck * ((k + 1) as f64 * PI * x / length).sin())
                .sum(),
            Profile::Bump {
                center,
                width,
                amplitude,
            } => {
                let s = (x - center) / width;
                amplitude * (-s * s).exp()
            }
        }
    }

    pub fn sample(&self, grid: &Grid) -> Vec<f64> {
        grid.sample(|x| self.eval(x, grid.length()))
    }
}

/// Delay history `z0` as a function of `rho` in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub enum History {
    Zero,
    Constant(f64),
    /// `start + (end - start) rho`.
    Linear {
        start: f64,
        end: f64,
    },
    /// `amplitude sin(frequency pi rho)`.
    Sine {
        amplitude: f64,
        frequency: f64,
    },
    /// Linear interpolation of equally spaced knot values on `[0, 1]`.
    PiecewiseLinear(Vec<f64>),
}

impl History {
    pub fn eval(&self, rho: f64) -> f64 {
        match self {
            History::Zero => 0.0,
            History::Constant(c) => *c,
            History::Linear { start, end } => start + (end - start) * rho,
            History::Sine {
                amplitude,
                frequency,
            } => amplitude * (frequency * PI * rho).sin(),
            History::PiecewiseLinear(knots) => match knots.len() {
                0 => 0.0,
                1 => knots[0],
                n => {
                    let s = rho.clamp(0.0, 1.0) * (n - 1) as f64;
                    let i = (s.floor() as usize).min(n - 2);
                    let f = s - i as f64;
                    knots[i] * (1.0 - f) + knots[i + 1] * f
                }
            },
        }
    }
}

/// Sampled initial data `(u0, v0, z0)` on a grid and delay line.
///
/// The newest delay sample is replaced by the one-sided `u_x(0, L)` of
/// `u0`, so the line always starts consistent with the field.
#[derive(Clone, Debug, PartialEq)]
pub struct InitialData {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub line: DelayLine,
}

impl InitialData {
    pub fn new(grid: &Grid, u: Vec<f64>, v: Vec<f64>, mut line: DelayLine) -> Result<Self> {
        if u.len() != grid.nodes() || v.len() != grid.nodes() {
            return Err(Error::PreconditionViolated(format!(
                "initial fields must have {} values",
                grid.nodes()
            )));
        }
        line.set_newest(outflow_trace(grid, &u));
        Ok(Self { u, v, line })
    }

    pub fn from_families(
        p: &SystemParams,
        grid: &Grid,
        cells: usize,
        u: &Profile,
        v: &Profile,
        z: &History,
    ) -> Result<Self> {
        let line = DelayLine::init_from_history(|r| z.eval(r), cells, p.delay)?;
        Self::new(grid, u.sample(grid), v.sample(grid), line)
    }

    /// `||(u0, v0, z0)||_H`, the square root of twice the discrete energy.
    pub fn norm(&self, p: &SystemParams, grid: &Grid) -> f64 {
        (2.0 * energy_parts(p, grid, &self.u, &self.v, &self.line)).sqrt()
    }

    /// Multiplies all components by `factor`; the newest delay sample is
    /// recomputed from the scaled field.
    pub fn scale(&mut self, grid: &Grid, factor: f64) {
        self.u.iter_mut().for_each(|x| *x *= factor);
        self.v.iter_mut().for_each(|x| *x *= factor);
        self.line.scale(factor);
        self.line.set_newest(outflow_trace(grid, &self.u));
    }

    /// Rescales to the given `H` norm. Zero data are left untouched.
    pub fn with_norm(mut self, p: &SystemParams, grid: &Grid, target: f64) -> Self {
        let n = self.norm(p, grid);
        if n > 0.0 {
            self.scale(grid, target / n);
        }
        self
    }

    /// The history as a function of `rho`, read back from the line.
    pub fn history_fn(&self) -> impl Fn(f64) -> f64 + '_ {
        move |rho| {
            let m = self.line.cells();
            let j = (rho * m as f64).round().clamp(0.0, m as f64) as usize;
            self.line.sample(j)
        }
    }
}

/// Number of sine modes in the random family.
pub const RANDOM_MODES: usize = 10;
/// Number of knots in the random piecewise-linear histories.
pub const RANDOM_KNOTS: usize = 5;

/// Random sine series for `u0`, `v0` with uniform coefficients on
/// `[-1, 1]` and a random piecewise-linear history, scaled to unit `H` norm.
pub fn random_unit_data<R: Rng + ?Sized>(
    p: &SystemParams,
    grid: &Grid,
    cells: usize,
    rng: &mut R,
) -> Result<InitialData> {
    let mut coeffs = || -> Vec<f64> {
        (0..RANDOM_MODES)
            .map(|_| rng.gen_range(-1.0..=1.0))
            .collect()
    };
    let u = Profile::SineModes(coeffs());
    let v = Profile::SineModes(coeffs());
    let knots = (0..RANDOM_KNOTS)
        .map(|_| rng.gen_range(-1.0..=1.0))
        .collect();
    let data =
        InitialData::from_families(p, grid, cells, &u, &v, &History::PiecewiseLinear(knots))?;
    Ok(data.with_norm(p, grid, 1.0))
}
