//! Uniform grid, third-derivative operators with energy-stable boundary
//! closures, boundary traces and the quadratic nonlinearity.
//!
//! Unknowns are the interior values `u_1..u_N`, `v_1..v_N` at `x_j = j dx`;
//! the Dirichlet end values are zero. Interior rows use the fourth-order
//! centered stencil for `d^3/dx^3`. The three rows next to each end use a
//! closure whose symmetric part is negative semidefinite, so the discrete
//! operator is dissipative in the `dx`-weighted inner product.

use crate::banded::BandMatrix;
use crate::delayline::DelayLine;
use crate::error::{Error, Result};
use crate::params::Gains;
use nalgebra::DMatrix;

/// Smallest supported number of interior nodes.
pub const MIN_NODES: usize = 8;

/// Number of rows replaced by the boundary closure at each end.
pub const CLOSURE_ROWS: usize = 3;

/// Half-width of the interior stencil.
pub const STENCIL_REACH: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    nodes: usize,
    dx: f64,
    length: f64,
}

impl Grid {
    pub fn new(length: f64, nodes: usize) -> Result<Self> {
        if nodes < MIN_NODES {
            return Err(Error::GridTooCoarse(nodes));
        }
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "L",
                value: length,
            });
        }
        Ok(Self {
            nodes,
            dx: length / (nodes + 1) as f64,
            length,
        })
    }

    /// Interior node count `N`.
    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    /// Coordinate of interior node `j` (0-based).
    pub fn x(&self, j: usize) -> f64 {
        (j + 1) as f64 * self.dx
    }

    pub fn coordinates(&self) -> Vec<f64> {
        (0..self.nodes).map(|j| self.x(j)).collect()
    }

    /// Samples `f` at the interior nodes.
    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        (0..self.nodes).map(|j| f(self.x(j))).collect()
    }

    /// Composite trapezoid of `f(x, w)` with zero end values.
    pub fn integrate(&self, w: &[f64], f: impl Fn(f64, f64) -> f64) -> f64 {
        assert_eq!(w.len(), self.nodes);
        self.dx * (0..self.nodes).map(|j| f(self.x(j), w[j])).sum::<f64>()
    }
}

/// Coefficient of `w_{i+offset}` in `dx^3 (d^3 w/dx^3)_i`.
pub fn interior_stencil(offset: isize) -> f64 {
    match offset {
        -3 => 1.0 / 8.0,
        -2 => -1.0,
        -1 => 13.0 / 8.0,
        1 => -13.0 / 8.0,
        2 => 1.0,
        3 => -1.0 / 8.0,
        _ => 0.0,
    }
}

/// Boundary closure flavors in local coordinates `k = distance / dx`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Closure {
    /// Approximates `-d^3/dk^3` with the first derivative left free.
    Free,
    /// Approximates `+d^3/dk^3` with the first derivative supplied as data.
    Data,
}

const TRACE_WEIGHTS: [f64; 3] = [2.0, -0.5, 0.0];
const SKEW: [[f64; 3]; 3] = [
    [0.0, 7.0 / 4.0, -1.0],
    [-7.0 / 4.0, 0.0, 13.0 / 8.0],
    [1.0, -13.0 / 8.0, 0.0],
];
const CUBIC_MODE: [f64; 3] = [3.0, -3.0, 1.0];

impl Closure {
    fn sign(self) -> f64 {
        match self {
            Closure::Free => -1.0,
            Closure::Data => 1.0,
        }
    }

    /// The 3x3 corner block.
    fn corner(self) -> [[f64; 3]; 3] {
        let damping = match self {
            Closure::Free => 15.0 / 152.0,
            Closure::Data => 5.0 / 152.0,
        };
        let mut k = [[0.0; 3]; 3];
        for a in 0..3 {
            for b in 0..3 {
                k[a][b] = -self.sign() * SKEW[a][b]
                    - 0.5 * TRACE_WEIGHTS[a] * TRACE_WEIGHTS[b]
                    - damping * CUBIC_MODE[a] * CUBIC_MODE[b];
            }
        }
        k
    }

    /// Weight of the local data `-dw/dk` at the boundary.
    fn data_weights(self) -> [f64; 3] {
        match self {
            Closure::Free => [0.0; 3],
            Closure::Data => TRACE_WEIGHTS.map(|e| -e),
        }
    }
}

/// `dx^3` times the operator on one field: interior stencil scaled by
/// `interior_sign`, corners from the closures.
fn third_derivative_block(
    nodes: usize,
    interior_sign: f64,
    left: Closure,
    right: Closure,
) -> BandMatrix {
    let mut m = BandMatrix::zeros(nodes, STENCIL_REACH, STENCIL_REACH);
    for i in 0..nodes {
        for j in m.row_span(i) {
            m.set(
                i,
                j,
                interior_sign * interior_stencil(j as isize - i as isize),
            );
        }
    }
    let (kl, kr) = (left.corner(), right.corner());
    for a in 0..CLOSURE_ROWS {
        for b in 0..CLOSURE_ROWS {
            m.set(a, b, kl[a][b]);
            m.set(nodes - 1 - a, nodes - 1 - b, kr[a][b]);
        }
    }
    m
}

/// Boundary traces `u_x(t,L)`, `z(t,1) = u_x(t-h,L)` and `v_x(t,0)`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct TraceSample {
    pub t: f64,
    pub ux_l: f64,
    pub ux_delayed: f64,
    pub vx_0: f64,
}

/// Linear part of the semi-discrete system.
///
/// For stacked interior values `w = (u, v)` and delayed trace `z`,
/// `dw/dt = interior * w + delay_coupling * z`. The interior matrix is
/// block lower triangular: `u` evolves on its own and feeds `v` through
/// the boundary law.
#[derive(Clone, Debug)]
pub struct SpatialOperator {
    grid: Grid,
    gains: Gains,
    u_block: BandMatrix,
    v_block: BandMatrix,
    /// `(v row, weight)`: `dv[row] += weight * v_x(t, L)`.
    boundary_data: Vec<(usize, f64)>,
}

/// Builds the operator for `u_t = u_xxx / 2`, `v_t = -v_xxx` with
/// `u = 0` at both ends, `u_x(0) = 0`, `v = 0` at both ends and
/// `v_x(L) = alpha u_x(L) + beta z`.
pub fn build_linear_operator(grid: Grid, g: Gains) -> SpatialOperator {
    let n = grid.nodes();
    let dx = grid.dx();
    let dx3 = dx * dx * dx;
    let mut u_block = third_derivative_block(n, 1.0, Closure::Data, Closure::Free);
    u_block.scale(0.5 / dx3);
    let mut v_block = third_derivative_block(n, -1.0, Closure::Free, Closure::Data);
    v_block.scale(1.0 / dx3);
    // The local data is dx * v_x(L) at the right end.
    let weights = Closure::Data.data_weights();
    let boundary_data = (0..CLOSURE_ROWS)
        .filter(|&a| weights[a] != 0.0)
        .map(|a| (n - 1 - a, weights[a] / (dx * dx)))
        .collect();
    SpatialOperator {
        grid,
        gains: g,
        u_block,
        v_block,
        boundary_data,
    }
}

impl SpatialOperator {
    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn gains(&self) -> Gains {
        self.gains
    }

    /// Operator acting on `u` alone.
    pub fn u_block(&self) -> &BandMatrix {
        &self.u_block
    }

    /// Operator acting on `v` alone, without the boundary data.
    pub fn v_block(&self) -> &BandMatrix {
        &self.v_block
    }

    /// Rows of `v` that receive the boundary value `v_x(t, L)`, with weights.
    pub fn boundary_data(&self) -> &[(usize, f64)] {
        &self.boundary_data
    }

    /// Vector of length `2N` multiplying `z(t, 1)`.
    pub fn delay_coupling(&self) -> Vec<f64> {
        let n = self.grid.nodes();
        let mut c = vec![0.0; 2 * n];
        for &(row, w) in &self.boundary_data {
            c[n + row] = w * self.gains.beta();
        }
        c
    }

    /// Dense `2N x 2N` interior matrix, including the `alpha` feedback.
    pub fn interior(&self) -> DMatrix<f64> {
        let n = self.grid.nodes();
        let mut a = DMatrix::zeros(2 * n, 2 * n);
        a.view_mut((0, 0), (n, n))
            .copy_from(&self.u_block.to_dense());
        a.view_mut((n, n), (n, n))
            .copy_from(&self.v_block.to_dense());
        for (col, wt) in outflow_trace_weights(&self.grid) {
            for &(row, w) in &self.boundary_data {
                a[(n + row, col)] += w * self.gains.alpha() * wt;
            }
        }
        a
    }

    /// `(du, dv) = interior * (u, v) + delay_coupling * z`.
    pub fn apply(&self, u: &[f64], v: &[f64], z: f64, du: &mut [f64], dv: &mut [f64]) {
        self.u_block.mul_vec(u, du);
        self.v_block.mul_vec(v, dv);
        let feedback = self.gains.alpha() * outflow_trace(&self.grid, u) + self.gains.beta() * z;
        for &(row, w) in &self.boundary_data {
            dv[row] += w * feedback;
        }
    }
}

/// Stencil of the one-sided `u_x(L)` using `u(L) = 0`.
pub fn outflow_trace_weights(grid: &Grid) -> [(usize, f64); 2] {
    let n = grid.nodes();
    let dx = grid.dx();
    [
        (n - 1, -TRACE_WEIGHTS[0] / dx),
        (n - 2, -TRACE_WEIGHTS[1] / dx),
    ]
}

/// Second-order one-sided `u_x(L)`.
pub fn outflow_trace(grid: &Grid, u: &[f64]) -> f64 {
    outflow_trace_weights(grid)
        .iter()
        .map(|&(j, w)| w * u[j])
        .sum()
}

/// Second-order one-sided `v_x(0)`.
pub fn inflow_trace(grid: &Grid, v: &[f64]) -> f64 {
    (TRACE_WEIGHTS[0] * v[0] + TRACE_WEIGHTS[1] * v[1]) / grid.dx()
}

pub fn boundary_traces(grid: &Grid, t: f64, u: &[f64], v: &[f64], line: &DelayLine) -> TraceSample {
    TraceSample {
        t,
        ux_l: outflow_trace(grid, u),
        ux_delayed: line.delayed_value(),
        vx_0: inflow_trace(grid, v),
    }
}

/// Centered first differences with zero end values.
pub fn centered_gradient(grid: &Grid, w: &[f64]) -> Vec<f64> {
    let n = w.len();
    let inv = 0.5 / grid.dx();
    (0..n)
        .map(|j| {
            let right = if j + 1 < n { w[j + 1] } else { 0.0 };
            let left = if j > 0 { w[j - 1] } else { 0.0 };
            (right - left) * inv
        })
        .collect()
}

/// `(3 u u_x + 3 v v_x, -3 u v_x)` by centered differences.
///
/// `3 u u_x` is taken in the split form `u D u + D(u^2)`, so that
/// `sum_j (u_j fu_j + v_j fv_j) = 0` exactly, as in the continuous system.
pub fn nonlinear_rhs(grid: &Grid, u: &[f64], v: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let ux = centered_gradient(grid, u);
    let vx = centered_gradient(grid, v);
    let squared: Vec<f64> = u.iter().map(|x| x * x).collect();
    let sq_x = centered_gradient(grid, &squared);
    let fu = (0..u.len())
        .map(|j| u[j] * ux[j] + sq_x[j] + 3.0 * v[j] * vx[j])
        .collect();
    let fv = (0..u.len()).map(|j| -3.0 * u[j] * vx[j]).collect();
    (fu, fv)
}

/// `int (w_x)^2 dx`: centered differences inside, one-sided at the ends.
pub fn gradient_norm_sq(grid: &Grid, w: &[f64]) -> f64 {
    let n = w.len();
    let dx = grid.dx();
    let interior: f64 = centered_gradient(grid, w)
        .iter()
        .map(|g| g * g)
        .sum::<f64>()
        * dx;
    let left = (TRACE_WEIGHTS[0] * w[0] + TRACE_WEIGHTS[1] * w[1]) / dx;
    let right = -(TRACE_WEIGHTS[0] * w[n - 1] + TRACE_WEIGHTS[1] * w[n - 2]) / dx;
    interior + 0.5 * dx * (left * left + right * right)
}
