//! Time stepping for the linear, forced and nonlinear systems, and a
//! Picard fixed-point solver for the nonlinear problem.
//!
//! The time step is locked to the delay line, `dt = h / M`, so the delayed
//! trace needed at any stage is an exact stored sample.

use crate::banded::{BandLu, BandMatrix};
use crate::delayline::DelayLine;
use crate::diagnostics::{delay_lyapunov_parts, energy_parts, morawetz_parts};
use crate::discretization::{
    boundary_traces, build_linear_operator, gradient_norm_sq, nonlinear_rhs, outflow_trace, Grid,
    SpatialOperator, TraceSample,
};
use crate::error::{Error, Result};
use crate::initial::InitialData;
use crate::params::SystemParams;

/// Time discretization of the linear part.
#[derive(Clone, Copy, Debug, PartialEq)]
#[derive(Default)]
pub enum TimeScheme {
    /// Two-stage Lobatto IIIC: second order, L-stable, stiffly accurate.
    #[default]
    LobattoIIIC,
    /// One-step theta method; `Theta(0.5)` is Crank-Nicolson.
    Theta(f64),
}


#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverOptions {
    pub dt: f64,
    pub scheme: TimeScheme,
    /// Keep every `snapshot_stride`-th state (and the last); 0 keeps none.
    pub snapshot_stride: usize,
    pub picard_tol: f64,
    pub picard_maxiter: usize,
}

impl SolverOptions {
    /// Defaults for a delay `h` resolved by `cells` steps.
    pub fn new(delay: f64, cells: usize) -> Self {
        Self {
            dt: delay / cells as f64,
            scheme: TimeScheme::default(),
            snapshot_stride: 0,
            picard_tol: 1e-10,
            picard_maxiter: 60,
        }
    }

    pub fn with_scheme(mut self, scheme: TimeScheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn with_snapshot_stride(mut self, stride: usize) -> Self {
        self.snapshot_stride = stride;
        self
    }

    /// Number of delay cells implied by `dt`.
    pub fn cells_for(&self, delay: f64) -> Result<usize> {
        let m = (delay / self.dt).round();
        if m < 1.0 || ((m * self.dt) - delay).abs() > 1e-12 * delay {
            return Err(Error::StepMismatch {
                dt: self.dt,
                line_dt: delay / m.max(1.0),
            });
        }
        Ok(m as usize)
    }
}

/// One point of the discrete flow.
#[derive(Clone, Debug, PartialEq)]
pub struct State {
    pub t: f64,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub line: DelayLine,
}

impl State {
    pub fn from_data(data: &InitialData) -> Self {
        Self {
            t: 0.0,
            u: data.u.clone(),
            v: data.v.clone(),
            line: data.line.clone(),
        }
    }

    pub fn zeros(grid: &Grid, cells: usize, delay: f64) -> Result<Self> {
        Ok(Self {
            t: 0.0,
            u: vec![0.0; grid.nodes()],
            v: vec![0.0; grid.nodes()],
            line: DelayLine::zeros(cells, delay)?,
        })
    }

    fn is_finite(&self) -> bool {
        self.u.iter().chain(&self.v).all(|x| x.is_finite())
    }
}

/// How sampled sources are applied within a step.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SourceHold {
    /// Values at `t_k` and `t_{k+1}` feed the corresponding stages.
    Nodal,
    /// The value at `t_k` is held over `[t_k, t_{k+1})`.
    Held,
}

/// Forcing `(f1, f2)` sampled at the time levels `t_k = k dt`.
#[derive(Clone, Debug, PartialEq)]
pub struct SourcePair {
    pub f1: Vec<Vec<f64>>,
    pub f2: Vec<Vec<f64>>,
    pub hold: SourceHold,
}

impl SourcePair {
    /// Samples `f(t, x) -> (f1, f2)` at `steps + 1` levels.
    pub fn sample(grid: &Grid, dt: f64, steps: usize, f: impl Fn(f64, f64) -> (f64, f64)) -> Self {
        let (mut f1, mut f2) = (Vec::with_capacity(steps + 1), Vec::with_capacity(steps + 1));
        for k in 0..=steps {
            let t = k as f64 * dt;
            let (a, b): (Vec<f64>, Vec<f64>) = (0..grid.nodes()).map(|j| f(t, grid.x(j))).unzip();
            f1.push(a);
            f2.push(b);
        }
        Self {
            f1,
            f2,
            hold: SourceHold::Nodal,
        }
    }

    /// The nonlinear terms of a completed run, held constant over each step.
    /// Feeding these to a linear run reproduces the nonlinear run.
    pub fn from_states(grid: &Grid, states: &[State]) -> Self {
        let (f1, f2) = states
            .iter()
            .map(|s| nonlinear_rhs(grid, &s.u, &s.v))
            .unzip();
        Self {
            f1,
            f2,
            hold: SourceHold::Held,
        }
    }

    pub fn levels(&self) -> usize {
        self.f1.len()
    }

    fn step(&self, k: usize) -> StepSources {
        let at = |i: usize| (self.f1[i].clone(), self.f2[i].clone());
        match self.hold {
            SourceHold::Nodal => StepSources {
                start: at(k),
                end: at(k + 1),
            },
            SourceHold::Held => StepSources {
                start: at(k),
                end: at(k),
            },
        }
    }
}

/// Sources for one step: `start` feeds the `t_k` stage, `end` the `t_{k+1}` stage.
#[derive(Clone, Debug, PartialEq)]
pub struct StepSources {
    pub start: (Vec<f64>, Vec<f64>),
    pub end: (Vec<f64>, Vec<f64>),
}

impl StepSources {
    pub fn zeros(n: usize) -> Self {
        Self {
            start: (vec![0.0; n], vec![0.0; n]),
            end: (vec![0.0; n], vec![0.0; n]),
        }
    }

    /// Explicit nonlinear terms of the current state for both stages.
    pub fn nonlinear(grid: &Grid, s: &State) -> Self {
        let f = nonlinear_rhs(grid, &s.u, &s.v);
        Self {
            start: f.clone(),
            end: f,
        }
    }
}

/// Factored step matrices for one operator and time step.
#[derive(Clone, Debug)]
pub struct Stepper {
    op: SpatialOperator,
    scheme: TimeScheme,
    dt: f64,
    u_solver: BandLu,
    v_solver: BandLu,
}

fn factor(m: &BandMatrix) -> Result<BandLu> {
    BandLu::factor(m).map_err(|e| Error::SingularSystem { column: e.column })
}

/// Interleaved two-stage system `[[I - hB, hB], [-hB, I - hB]]`, `h = dt/2`.
fn lobatto_matrix(block: &BandMatrix, half_dt: f64) -> BandMatrix {
    let n = block.dim();
    let reach = 2 * block.lower().max(block.upper()) + 1;
    let mut m = BandMatrix::zeros(2 * n, reach, reach);
    for i in 0..n {
        for j in block.row_span(i) {
            let b = half_dt * block.get(i, j);
            let id = if i == j { 1.0 } else { 0.0 };
            m.set(2 * i, 2 * j, id - b);
            m.set(2 * i, 2 * j + 1, b);
            m.set(2 * i + 1, 2 * j, -b);
            m.set(2 * i + 1, 2 * j + 1, id - b);
        }
    }
    m
}

fn theta_matrix(block: &BandMatrix, weight: f64) -> BandMatrix {
    let n = block.dim();
    let mut m = BandMatrix::identity(n, block.lower(), block.upper());
    for i in 0..n {
        for j in block.row_span(i) {
            m.add(i, j, -weight * block.get(i, j));
        }
    }
    m
}

impl Stepper {
    pub fn new(op: SpatialOperator, scheme: TimeScheme, dt: f64) -> Result<Self> {
        let (u_matrix, v_matrix) = match scheme {
            TimeScheme::LobattoIIIC => (
                lobatto_matrix(op.u_block(), 0.5 * dt),
                lobatto_matrix(op.v_block(), 0.5 * dt),
            ),
            TimeScheme::Theta(theta) => {
                if !(0.0..=1.0).contains(&theta) {
                    return Err(Error::InvalidParameter {
                        name: "theta",
                        value: theta,
                    });
                }
                (
                    theta_matrix(op.u_block(), theta * dt),
                    theta_matrix(op.v_block(), theta * dt),
                )
            }
        };
        Ok(Self {
            u_solver: factor(&u_matrix)?,
            v_solver: factor(&v_matrix)?,
            op,
            scheme,
            dt,
        })
    }

    pub fn operator(&self) -> &SpatialOperator {
        &self.op
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Advances `s` by one step and pushes the new outflow trace.
    pub fn advance(&self, s: &mut State, src: &StepSources) -> Result<()> {
        let line_dt = s.line.dt();
        if (line_dt - self.dt).abs() > 1e-12 * self.dt {
            return Err(Error::StepMismatch {
                dt: self.dt,
                line_dt,
            });
        }
        let m = s.line.cells();
        let z_start = s.line.sample(m);
        let z_end = s.line.sample(m - 1);
        let (u, v) = match self.scheme {
            TimeScheme::LobattoIIIC => self.lobatto(s, src, z_start, z_end),
            TimeScheme::Theta(theta) => self.theta(s, src, theta, z_start, z_end),
        };
        s.u = u;
        s.v = v;
        s.t += self.dt;
        let trace = outflow_trace(&self.op.grid(), &s.u);
        s.line.push(trace);
        if !s.is_finite() || !trace.is_finite() {
            return Err(Error::NonFiniteState { time: s.t });
        }
        Ok(())
    }

    fn feedback(&self, u: &[f64], z: f64) -> f64 {
        let g = self.op.gains();
        g.alpha() * outflow_trace(&self.op.grid(), u) + g.beta() * z
    }

    fn lobatto(&self, s: &State, src: &StepSources, z1: f64, z2: f64) -> (Vec<f64>, Vec<f64>) {
        let n = s.u.len();
        let h = 0.5 * self.dt;
        let solve_pair = |solver: &BandLu, w: &[f64], s1: &[f64], s2: &[f64]| {
            let mut rhs = vec![0.0; 2 * n];
            for i in 0..n {
                rhs[2 * i] = w[i] + h * (s1[i] - s2[i]);
                rhs[2 * i + 1] = w[i] + h * (s1[i] + s2[i]);
            }
            solver.solve_in_place(&mut rhs);
            let y1: Vec<f64> = (0..n).map(|i| rhs[2 * i]).collect();
            let y2: Vec<f64> = (0..n).map(|i| rhs[2 * i + 1]).collect();
            (y1, y2)
        };
        let (u1, u2) = solve_pair(&self.u_solver, &s.u, &src.start.0, &src.end.0);
        let mut s1 = src.start.1.clone();
        let mut s2 = src.end.1.clone();
        let (b1, b2) = (self.feedback(&u1, z1), self.feedback(&u2, z2));
        for &(row, w) in self.op.boundary_data() {
            s1[row] += w * b1;
            s2[row] += w * b2;
        }
        let (_, v2) = solve_pair(&self.v_solver, &s.v, &s1, &s2);
        (u2, v2)
    }

    fn theta(
        &self,
        s: &State,
        src: &StepSources,
        theta: f64,
        z0: f64,
        z1: f64,
    ) -> (Vec<f64>, Vec<f64>) {
        let n = s.u.len();
        let dt = self.dt;
        let explicit = (1.0 - theta) * dt;
        let mut work = vec![0.0; n];

        let mut u = s.u.clone();
        self.op.u_block().mul_vec(&s.u, &mut work);
        for i in 0..n {
            u[i] +=
                explicit * work[i] + dt * (theta * src.end.0[i] + (1.0 - theta) * src.start.0[i]);
        }
        self.u_solver.solve_in_place(&mut u);

        let mut v = s.v.clone();
        self.op.v_block().mul_vec(&s.v, &mut work);
        for i in 0..n {
            v[i] +=
                explicit * work[i] + dt * (theta * src.end.1[i] + (1.0 - theta) * src.start.1[i]);
        }
        let b = theta * self.feedback(&u, z1) + (1.0 - theta) * self.feedback(&s.u, z0);
        for &(row, w) in self.op.boundary_data() {
            v[row] += dt * w * b;
        }
        self.v_solver.solve_in_place(&mut v);
        (u, v)
    }
}

/// One linear step. Factorizes the step matrices on every call; use a
/// [`Stepper`] for repeated steps.
pub fn step_linear(s: &State, op: &SpatialOperator, opts: &SolverOptions) -> Result<State> {
    let stepper = Stepper::new(op.clone(), opts.scheme, opts.dt)?;
    let mut next = s.clone();
    stepper.advance(&mut next, &StepSources::zeros(s.u.len()))?;
    Ok(next)
}

/// One IMEX step: linear part implicit, nonlinear terms from the current state.
pub fn step_nonlinear(s: &State, op: &SpatialOperator, opts: &SolverOptions) -> Result<State> {
    let stepper = Stepper::new(op.clone(), opts.scheme, opts.dt)?;
    let mut next = s.clone();
    stepper.advance(&mut next, &StepSources::nonlinear(&op.grid(), s))?;
    Ok(next)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RunMode {
    Linear,
    Nonlinear,
    Picard,
}

/// Time series of a completed run. All per-level sequences have one entry
/// per time level `t_k = k dt`, `k = 0..=steps`.
#[derive(Clone, Debug)]
pub struct SimulationRecord {
    pub params: SystemParams,
    pub grid: Grid,
    pub dt: f64,
    pub delay_cells: usize,
    pub mode: RunMode,
    pub forced: bool,
    pub scheme: TimeScheme,
    pub times: Vec<f64>,
    pub traces: Vec<TraceSample>,
    pub energies: Vec<f64>,
    /// `(1/2) int ((L - x) u^2 + x v^2)`.
    pub morawetz: Vec<f64>,
    /// `(beta h / 2) int (1 - rho) z^2`.
    pub delay_moment: Vec<f64>,
    /// `int (u_x^2 + v_x^2)`.
    pub gradients: Vec<f64>,
    pub snapshots: Vec<State>,
    pub initial: State,
}

impl SimulationRecord {
    /// True for unforced linear runs.
    pub fn is_linear(&self) -> bool {
        self.mode == RunMode::Linear && !self.forced
    }

    /// `V = E + mu1 V1 + mu2 V2` at every level.
    pub fn lyapunov_series(&self, mu1: f64, mu2: f64) -> Vec<f64> {
        (0..self.energies.len())
            .map(|k| self.energies[k] + mu1 * self.morawetz[k] + mu2 * self.delay_moment[k])
            .collect()
    }

    pub fn final_state(&self) -> Option<&State> {
        self.snapshots.last()
    }
}

struct Recorder {
    record: SimulationRecord,
    stride: usize,
}

impl Recorder {
    fn observe(&mut self, k: usize, last: usize, s: &State) {
        let r = &mut self.record;
        let (p, grid) = (&r.params, &r.grid);
        r.times.push(s.t);
        r.traces
            .push(boundary_traces(grid, s.t, &s.u, &s.v, &s.line));
        r.energies.push(energy_parts(p, grid, &s.u, &s.v, &s.line));
        r.morawetz.push(morawetz_parts(grid, &s.u, &s.v));
        r.delay_moment.push(delay_lyapunov_parts(p, &s.line));
        r.gradients
            .push(gradient_norm_sq(grid, &s.u) + gradient_norm_sq(grid, &s.v));
        if self.stride > 0 && (k.is_multiple_of(self.stride) || k == last) {
            r.snapshots.push(s.clone());
        }
    }
}

fn step_count(horizon: f64, dt: f64) -> Result<usize> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "T",
            value: horizon,
        });
    }
    Ok(((horizon / dt) - 1e-9).ceil().max(1.0) as usize)
}

#[allow(clippy::too_many_arguments)]
fn drive(
    p: &SystemParams,
    grid: Grid,
    data: &InitialData,
    steps: usize,
    opts: &SolverOptions,
    mode: RunMode,
    forced: bool,
    mut sources: impl FnMut(usize, &State) -> StepSources,
) -> Result<SimulationRecord> {
    let cells = opts.cells_for(p.delay)?;
    if data.line.cells() != cells {
        return Err(Error::StepMismatch {
            dt: opts.dt,
            line_dt: data.line.dt(),
        });
    }
    let stepper = Stepper::new(build_linear_operator(grid, p.gains), opts.scheme, opts.dt)?;
    let mut state = State::from_data(data);
    let mut rec = Recorder {
        record: SimulationRecord {
            params: *p,
            grid,
            dt: opts.dt,
            delay_cells: cells,
            mode,
            forced,
            scheme: opts.scheme,
            times: Vec::with_capacity(steps + 1),
            traces: Vec::with_capacity(steps + 1),
            energies: Vec::with_capacity(steps + 1),
            morawetz: Vec::with_capacity(steps + 1),
            delay_moment: Vec::with_capacity(steps + 1),
            gradients: Vec::with_capacity(steps + 1),
            snapshots: Vec::new(),
            initial: state.clone(),
        },
        stride: opts.snapshot_stride,
    };
    rec.observe(0, steps, &state);
    for k in 0..steps {
        let src = sources(k, &state);
        stepper.advance(&mut state, &src)?;
        // Recompute the time from the index so it carries no rounding drift.
        state.t = (k + 1) as f64 * opts.dt;
        rec.observe(k + 1, steps, &state);
    }
    Ok(rec.record)
}

/// Runs from sampled initial data up to the first level `t >= horizon`.
pub fn simulate_data(
    p: &SystemParams,
    grid: Grid,
    data: &InitialData,
    horizon: f64,
    opts: &SolverOptions,
    nonlinear: bool,
    sources: Option<&SourcePair>,
) -> Result<SimulationRecord> {
    let steps = step_count(horizon, opts.dt)?;
    let n = grid.nodes();
    if data.u.len() != n || data.v.len() != n {
        return Err(Error::PreconditionViolated(format!(
            "initial fields must have {n} values"
        )));
    }
    if let Some(src) = sources {
        let needed = match src.hold {
            SourceHold::Nodal => steps + 1,
            SourceHold::Held => steps,
        };
        if src.levels() < needed || src.f1.iter().chain(&src.f2).any(|f| f.len() != n) {
            return Err(Error::PreconditionViolated(format!(
                "sources must cover {needed} time levels of {n} values"
            )));
        }
    }
    let mode = if nonlinear {
        RunMode::Nonlinear
    } else {
        RunMode::Linear
    };
    drive(
        p,
        grid,
        data,
        steps,
        opts,
        mode,
        sources.is_some(),
        |k, s| {
            let mut step = match sources {
                Some(src) => src.step(k),
                None => StepSources::zeros(n),
            };
            if nonlinear {
                let (fu, fv) = nonlinear_rhs(&grid, &s.u, &s.v);
                for i in 0..n {
                    step.start.0[i] += fu[i];
                    step.start.1[i] += fv[i];
                    step.end.0[i] += fu[i];
                    step.end.1[i] += fv[i];
                }
            }
            step
        },
    )
}

/// Runs from fields `u0`, `v0` and a history `z0(rho)`, `rho in [0, 1]`.
#[allow(clippy::too_many_arguments)]
pub fn simulate(
    p: &SystemParams,
    grid: Grid,
    u0: &[f64],
    v0: &[f64],
    z0: &dyn Fn(f64) -> f64,
    horizon: f64,
    opts: &SolverOptions,
    nonlinear: bool,
    sources: Option<&SourcePair>,
) -> Result<SimulationRecord> {
    let cells = opts.cells_for(p.delay)?;
    let line = DelayLine::init_from_history(z0, cells, p.delay)?;
    let data = InitialData::new(&grid, u0.to_vec(), v0.to_vec(), line)?;
    simulate_data(p, grid, &data, horizon, opts, nonlinear, sources)
}

/// Result of [`picard_solve`].
#[derive(Clone, Debug)]
pub struct PicardOutcome {
    pub record: SimulationRecord,
    pub iterations: usize,
    /// Ratios of successive iterate differences.
    pub contraction_factors: Vec<f64>,
    /// Norm of each iterate's change.
    pub differences: Vec<f64>,
}

/// Discrete B-norm of a trajectory difference: max over time of the
/// spatial L2 norm plus the root of the time-integrated squared gradient.
pub fn trajectory_distance(grid: &Grid, dt: f64, a: &[State], b: &[State]) -> f64 {
    assert_eq!(a.len(), b.len());
    let mut sup: f64 = 0.0;
    let mut grad = 0.0;
    let last = a.len().saturating_sub(1);
    for (k, (x, y)) in a.iter().zip(b).enumerate() {
        let du: Vec<f64> = x.u.iter().zip(&y.u).map(|(p, q)| p - q).collect();
        let dv: Vec<f64> = x.v.iter().zip(&y.v).map(|(p, q)| p - q).collect();
        let l2 = grid.integrate(&du, |_, w| w * w) + grid.integrate(&dv, |_, w| w * w);
        sup = sup.max(l2.sqrt());
        let w = if k == 0 || k == last { 0.5 } else { 1.0 };
        grad += w * dt * (gradient_norm_sq(grid, &du) + gradient_norm_sq(grid, &dv));
    }
    sup + grad.sqrt()
}

/// Iterates `Gamma`: solve the linear system forced by the nonlinear
/// terms of the previous iterate, starting from the zero trajectory.
pub fn picard_solve(
    p: &SystemParams,
    grid: Grid,
    data: &InitialData,
    horizon: f64,
    opts: &SolverOptions,
) -> Result<PicardOutcome> {
    let steps = step_count(horizon, opts.dt)?;
    let cells = opts.cells_for(p.delay)?;
    let inner = SolverOptions {
        snapshot_stride: 1,
        ..*opts
    };
    let mut previous: Vec<State> = (0..=steps)
        .map(|k| {
            let mut s = State::zeros(&grid, cells, p.delay)?;
            s.t = k as f64 * opts.dt;
            Ok(s)
        })
        .collect::<Result<_>>()?;
    let mut factors = Vec::new();
    let mut differences: Vec<f64> = Vec::new();
    for iteration in 1..=opts.picard_maxiter {
        let forcing = SourcePair::from_states(&grid, &previous);
        let run = drive(
            p,
            grid,
            data,
            steps,
            &inner,
            RunMode::Picard,
            false,
            |k, _| forcing.step(k),
        );
        let mut record = match run {
            Ok(r) => r,
            Err(Error::NonFiniteState { .. }) => {
                factors.push(f64::INFINITY);
                return Err(Error::NoConvergence {
                    iterations: iteration,
                    last_difference: f64::INFINITY,
                    contraction_factors: factors,
                });
            }
            Err(e) => return Err(e),
        };
        let diff = trajectory_distance(&grid, opts.dt, &record.snapshots, &previous);
        if let Some(&last) = differences.last() {
            factors.push(if last > 0.0 { diff / last } else { 0.0 });
        }
        differences.push(diff);
        if !diff.is_finite() {
            return Err(Error::NoConvergence {
                iterations: iteration,
                last_difference: diff,
                contraction_factors: factors,
            });
        }
        if diff < opts.picard_tol {
            record.snapshots = thin(record.snapshots, opts.snapshot_stride);
            return Ok(PicardOutcome {
                record,
                iterations: iteration,
                contraction_factors: factors,
                differences,
            });
        }
        previous = record.snapshots;
    }
    Err(Error::NoConvergence {
        iterations: opts.picard_maxiter,
        last_difference: differences.last().copied().unwrap_or(f64::NAN),
        contraction_factors: factors,
    })
}

fn thin(states: Vec<State>, stride: usize) -> Vec<State> {
    if stride == 0 {
        return Vec::new();
    }
    let last = states.len().saturating_sub(1);
    states
        .into_iter()
        .enumerate()
        .filter(|(k, _)| k % stride == 0 || *k == last)
        .map(|(_, s)| s)
        .collect()
}
