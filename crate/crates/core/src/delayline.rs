//! Shift-register realization of the delayed boundary trace.
//!
//! `samples[j]` holds `u_x(t - j dt, L)`, so `samples[0]` is the newest
//! trace and `samples[M]` is `z(t, 1) = u_x(t - h, L)`.

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct DelayLine {
    cells: usize,
    dt: f64,
    ring: Vec<f64>,
    head: usize,
}

impl DelayLine {
    /// Samples `z0` at `rho_j = j / M`, `j = 0..=M`, with `dt = delay / M`.
    pub fn init_from_history(z0: impl Fn(f64) -> f64, cells: usize, delay: f64) -> Result<Self> {
        if cells == 0 {
            return Err(Error::InvalidCellCount);
        }
        if !(delay > 0.0 && delay.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "h",
                value: delay,
            });
        }
        let ring = (0..=cells).map(|j| z0(j as f64 / cells as f64)).collect();
        Ok(Self {
            cells,
            dt: delay / cells as f64,
            ring,
            head: 0,
        })
    }

    pub fn zeros(cells: usize, delay: f64) -> Result<Self> {
        Self::init_from_history(|_| 0.0, cells, delay)
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn delay(&self) -> f64 {
        self.dt * self.cells as f64
    }

    /// Value at node `rho_j = j / M`.
    pub fn sample(&self, j: usize) -> f64 {
        assert!(j <= self.cells, "sample index {j} beyond {}", self.cells);
        self.ring[(self.head + j) % (self.cells + 1)]
    }

    pub fn samples(&self) -> Vec<f64> {
        (0..=self.cells).map(|j| self.sample(j)).collect()
    }

    pub fn newest(&self) -> f64 {
        self.sample(0)
    }

    /// `z(t, 1)`, the trace from one full delay ago.
    pub fn delayed_value(&self) -> f64 {
        self.sample(self.cells)
    }

    /// Shifts every sample one node toward `rho = 1` and stores the new trace at `rho = 0`.
    pub fn push(&mut self, new_trace: f64) {
        self.head = (self.head + self.cells) % (self.cells + 1);
        self.ring[self.head] = new_trace;
    }

    /// Overwrites the newest sample without shifting.
    pub fn set_newest(&mut self, value: f64) {
        self.ring[self.head] = value;
    }

    pub fn scale(&mut self, factor: f64) {
        self.ring.iter_mut().for_each(|x| *x *= factor);
    }

    /// Trapezoid approximation of `int_0^1 z^2 d rho`.
    pub fn l2_norm_rho_sq(&self) -> f64 {
        self.trapezoid(|_, z| z * z)
    }

    /// Trapezoid approximation of `int_0^1 (1 - rho) z^2 d rho`.
    pub fn weighted_lyapunov_rho(&self) -> f64 {
        self.trapezoid(|rho, z| (1.0 - rho) * z * z)
    }

    /// Cell-midpoint approximation of `int_0^1 z^2 d rho`, using the mean of
    /// the two nodes of each cell. This is the quadrature the discrete energy uses.
    pub fn cell_l2_norm_rho_sq(&self) -> f64 {
        self.cell_sum(|_, m| m * m)
    }

    /// Cell-midpoint approximation of `int_0^1 (1 - rho) z^2 d rho`.
    pub fn cell_weighted_lyapunov_rho(&self) -> f64 {
        self.cell_sum(|rho, m| (1.0 - rho) * m * m)
    }

    fn trapezoid(&self, f: impl Fn(f64, f64) -> f64) -> f64 {
        let m = self.cells as f64;
        let total: f64 = (0..=self.cells)
            .map(|j| {
                let w = if j == 0 || j == self.cells { 0.5 } else { 1.0 };
                w * f(j as f64 / m, self.sample(j))
            })
            .sum();
        total / m
    }

    fn cell_sum(&self, f: impl Fn(f64, f64) -> f64) -> f64 {
        let m = self.cells as f64;
        let mut prev = self.sample(0);
        let mut total = 0.0;
        for j in 1..=self.cells {
            let next = self.sample(j);
            total += f((j as f64 - 0.5) / m, 0.5 * (prev + next));
            prev = next;
        }
        total / m
    }
}
