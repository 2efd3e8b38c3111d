//! Full linear generator with delay degrees of freedom, weighted
//! dissipativity and spectral abscissa.
//!
//! The delay variable is discretized by finite volumes on the nodes
//! `rho_j = j / M` with trapezoid weights `omega_j`:
//! `dz_j/dt = -(M / (h omega_j)) (z_j - z_{j-1})`, where `z_{-1}` is the
//! discrete `u_x(t, L)`. With the mass `beta h omega_j / M` this block is
//! exactly dissipative, so the generator inherits the energy estimate.

use crate::diagnostics::{fit_decay, DecayEstimate};
use crate::discretization::{build_linear_operator, outflow_trace_weights, Grid};
use crate::error::{Error, Result};
use crate::integrator::SimulationRecord;
use crate::params::SystemParams;
use nalgebra::{Complex, DMatrix, Schur, SymmetricEigen};
use petgraph::algo::tarjan_scc;
use petgraph::graph::Graph;

/// Dense generator acting on `(u, v, z_0..z_M)`.
#[derive(Clone, Debug)]
pub struct GeneratorMatrix {
    matrix: DMatrix<f64>,
    grid: Grid,
    cells: usize,
    weights: Vec<f64>,
}

impl GeneratorMatrix {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    /// Diagonal of the mass matrix of the `H` inner product.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Infinity norm of the generator.
    pub fn norm(&self) -> f64 {
        self.matrix
            .row_iter()
            .map(|r| r.iter().map(|x| x.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Copy with the delay feedback and the inflow coupling removed.
    pub fn without_feedback(&self) -> GeneratorMatrix {
        let mut out = self.clone();
        let pde = 2 * self.grid.nodes();
        let n = self.dim();
        for i in 0..pde {
            for j in pde..n {
                out.matrix[(i, j)] = 0.0;
            }
        }
        for i in pde..n {
            for j in 0..pde {
                out.matrix[(i, j)] = 0.0;
            }
        }
        out
    }
}

/// Trapezoid weights on `M + 1` nodes.
fn trapezoid_weights(cells: usize) -> Vec<f64> {
    (0..=cells)
        .map(|j| if j == 0 || j == cells { 0.5 } else { 1.0 })
        .collect()
}

pub fn assemble_generator(grid: Grid, p: &SystemParams, cells: usize) -> Result<GeneratorMatrix> {
    if cells < 4 {
        return Err(Error::PreconditionViolated(format!(
            "generator needs at least 4 delay cells, got {cells}"
        )));
    }
    let n = grid.nodes();
    let pde = 2 * n;
    let size = pde + cells + 1;
    let op = build_linear_operator(grid, p.gains);
    let mut a = DMatrix::zeros(size, size);
    a.view_mut((0, 0), (pde, pde)).copy_from(&op.interior());
    let z_last = pde + cells;
    for (i, c) in op.delay_coupling().into_iter().enumerate() {
        a[(i, z_last)] = c;
    }
    let omega = trapezoid_weights(cells);
    let m = cells as f64;
    for j in 0..=cells {
        let rate = m / (p.delay * omega[j]);
        let row = pde + j;
        a[(row, row)] = -rate;
        if j == 0 {
            for (col, w) in outflow_trace_weights(&grid) {
                a[(row, col)] = rate * w;
            }
        } else {
            a[(row, row - 1)] = rate;
        }
    }
    let mut weights = vec![grid.dx(); pde];
    weights.extend(omega.iter().map(|w| p.gains.beta() * p.delay * w / m));
    Ok(GeneratorMatrix {
        matrix: a,
        grid,
        cells,
        weights,
    })
}

/// All eigenvalues, computed block by block.
///
/// The rows and columns are grouped into the strongly connected components
/// of the sparsity graph, which puts the matrix in block triangular form.
/// Each diagonal block is solved by a real Schur decomposition and
/// `1 x 1` blocks are read off directly. The delay chain of the generator
/// splits into such scalar blocks, which keeps its highly defective
/// eigenvalue out of the iterative solver.
pub fn eigenvalues(m: &DMatrix<f64>) -> Result<Vec<Complex<f64>>> {
    let n = m.nrows();
    let mut graph = Graph::<(), ()>::with_capacity(n, 0);
    let nodes: Vec<_> = (0..n).map(|_| graph.add_node(())).collect();
    for i in 0..n {
        for j in 0..n {
            if i != j && m[(i, j)] != 0.0 {
                graph.add_edge(nodes[i], nodes[j], ());
            }
        }
    }
    let mut ev = Vec::with_capacity(n);
    for component in tarjan_scc(&graph) {
        let idx: Vec<usize> = component.iter().map(|v| v.index()).collect();
        if idx.len() == 1 {
            ev.push(Complex::new(m[(idx[0], idx[0])], 0.0));
            continue;
        }
        let block = DMatrix::from_fn(idx.len(), idx.len(), |r, c| m[(idx[r], idx[c])]);
        let k = block.nrows();
        let schur =
            Schur::try_new(block, f64::EPSILON, 100 * k.max(10)).ok_or(Error::EigensolveFailure)?;
        ev.extend(schur.complex_eigenvalues().iter().copied());
    }
    if ev.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::EigensolveFailure);
    }
    Ok(ev)
}

/// Largest real part of the spectrum.
pub fn spectral_abscissa(m: &DMatrix<f64>) -> Result<f64> {
    Ok(eigenvalues(m)?
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max))
}

/// Largest eigenvalue of the symmetric pencil `((W A + A^T W) / 2, W)`
/// with `W` the diagonal mass of the `H` inner product. Non-positive
/// values certify `<A U, U>_H <= 0`.
pub fn dissipativity_check(gm: &GeneratorMatrix) -> Result<f64> {
    let n = gm.dim();
    let sqrt_w: Vec<f64> = gm.weights.iter().map(|w| w.sqrt()).collect();
    let s = DMatrix::from_fn(n, n, |i, j| {
        let wa = gm.weights[i] * gm.matrix[(i, j)] + gm.weights[j] * gm.matrix[(j, i)];
        0.5 * wa / (sqrt_w[i] * sqrt_w[j])
    });
    let eig = SymmetricEigen::try_new(s, f64::EPSILON, 0).ok_or(Error::EigensolveFailure)?;
    Ok(eig
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max))
}

#[derive(Clone, Debug)]
pub struct SpectrumReport {
    pub eigenvalues: Vec<Complex<f64>>,
    pub abscissa: f64,
    pub dissipativity_max: f64,
}

pub fn spectrum_report(gm: &GeneratorMatrix) -> Result<SpectrumReport> {
    let eigenvalues = eigenvalues(gm.matrix())?;
    let abscissa = eigenvalues
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(SpectrumReport {
        eigenvalues,
        abscissa,
        dissipativity_max: dissipativity_check(gm)?,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RateComparison {
    pub abscissa: f64,
    /// `2 |abscissa|`, the energy decay rate implied by the spectrum.
    pub predicted_rate: f64,
    pub estimate: DecayEstimate,
    pub relative_gap: f64,
}

pub fn compare_rates(abscissa: f64, estimate: DecayEstimate) -> RateComparison {
    let predicted_rate = 2.0 * abscissa.abs();
    RateComparison {
        abscissa,
        predicted_rate,
        estimate,
        relative_gap: (estimate.lambda_emp - predicted_rate).abs() / predicted_rate,
    }
}

/// Fits the record's energy decay and compares it with twice the abscissa.
pub fn abscissa_vs_decay(
    gm: &GeneratorMatrix,
    rec: &SimulationRecord,
    window: Option<(f64, f64)>,
) -> Result<RateComparison> {
    if rec.grid != gm.grid {
        return Err(Error::GridMismatch(format!(
            "record has N = {}, generator has N = {}",
            rec.grid.nodes(),
            gm.grid.nodes()
        )));
    }
    if !rec.is_linear() {
        return Err(Error::NotLinearRun);
    }
    let estimate = fit_decay(&rec.energies, &rec.times, window)?;
    let abscissa = spectral_abscissa(gm.matrix())?;
    Ok(compare_rates(abscissa, estimate))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::delayline::DelayLine;
    use crate::initial::InitialData;
    use crate::integrator::{simulate_data, SolverOptions};
    use crate::params::Gains;
    use approx::assert_abs_diff_eq;

    fn params(alpha: f64, beta: f64) -> SystemParams {
        SystemParams {
            length: 1.0,
            delay: 1.0,
            gains: Gains::unchecked(alpha, beta),
        }
    }

    #[test]
    fn generator_shape_and_pde_block() {
        let grid = Grid::new(1.0, 12).unwrap();
        let p = params(0.1, 0.1);
        let gm = assemble_generator(grid, &p, 6).unwrap();
        assert_eq!(gm.dim(), 2 * 12 + 6 + 1);
        let interior = build_linear_operator(grid, p.gains).interior();
        for i in 0..24 {
            for j in 0..24 {
                assert_eq!(gm.matrix()[(i, j)], interior[(i, j)]);
            }
        }
        let zero = nalgebra::DVector::zeros(gm.dim());
        assert!((gm.matrix() * zero).iter().all(|&x| x == 0.0));
        // Lower bidiagonal delay block.
        for i in 24..gm.dim() {
            for j in 24..gm.dim() {
                if j > i || j + 1 < i {
                    assert_eq!(gm.matrix()[(i, j)], 0.0);
                }
            }
        }
        assert!(assemble_generator(grid, &p, 3).is_err());
    }

    #[test]
    fn abscissa_of_diagonal() {
        let m = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![-1.0, -2.0]));
        assert_abs_diff_eq!(spectral_abscissa(&m).unwrap(), -1.0, epsilon = 1e-14);
    }

    #[test]
    fn decoupled_delay_block_is_stable() {
        let grid = Grid::new(1.0, 16).unwrap();
        let gm = assemble_generator(grid, &params(0.1, 0.1), 8)
            .unwrap()
            .without_feedback();
        let ev = eigenvalues(gm.matrix()).unwrap();
        assert!(ev.iter().all(|z| z.re <= 0.0));
        assert!(ev.iter().any(|z| (z.re + 16.0).abs() < 1e-8));
    }

    #[test]
    fn admissible_generator_is_dissipative_and_stable() {
        let grid = Grid::new(1.0, 32).unwrap();
        for &(a, b) in &[(0.1, 0.1), (0.0, 0.3), (-0.4, 0.05), (0.3, 0.1)] {
            let gm = assemble_generator(grid, &params(a, b), 16).unwrap();
            let d = dissipativity_check(&gm).unwrap();
            assert!(d <= 1e-8 * gm.norm(), "({a}, {b}): {d}");
            assert!(spectral_abscissa(gm.matrix()).unwrap() < 0.0);
        }
    }

    #[test]
    fn abscissa_invariant_under_diagonal_scaling() {
        let grid = Grid::new(1.0, 16).unwrap();
        let gm = assemble_generator(grid, &params(0.1, 0.1), 8).unwrap();
        let n = gm.dim();
        let d: Vec<f64> = (0..n).map(|i| 1.0 + 0.1 * i as f64).collect();
        let scaled = DMatrix::from_fn(n, n, |i, j| d[i] * gm.matrix()[(i, j)] / d[j]);
        let (a, b) = (
            spectral_abscissa(gm.matrix()).unwrap(),
            spectral_abscissa(&scaled).unwrap(),
        );
        assert!((a - b).abs() < 1e-8 * a.abs(), "{a} {b}");
    }

    #[test]
    fn delay_chain_eigenvalues_are_exact() {
        let grid = Grid::new(1.0, 64).unwrap();
        let gm = assemble_generator(grid, &params(0.1, 0.1), 32).unwrap();
        let ev = eigenvalues(gm.matrix()).unwrap();
        let at_rate = ev.iter().filter(|z| z.re == -32.0 && z.im == 0.0).count();
        assert_eq!(at_rate, 31);
        assert!(spectral_abscissa(gm.matrix()).unwrap() >= -32.0);
    }

    #[test]
    fn pde_block_without_feedback_is_dissipative() {
        let grid = Grid::new(1.0, 32).unwrap();
        let a = build_linear_operator(grid, Gains::unchecked(0.0, 0.0)).interior();
        let sym = (&a + a.transpose()) * 0.5;
        let max = SymmetricEigen::new(sym).eigenvalues.max();
        assert!(max <= 1e-10 * a.abs().max());
    }

    #[test]
    fn rate_comparison_examples() {
        let times: Vec<f64> = (0..50).map(|k| k as f64 * 0.01).collect();
        let e: Vec<f64> = times.iter().map(|t| (-6.0 * t).exp()).collect();
        let est = fit_decay(&e, &times, None).unwrap();
        assert!(compare_rates(-3.0, est).relative_gap < 1e-12);

        let grid = Grid::new(1.0, 16).unwrap();
        let p = params(0.1, 0.1);
        let gm = assemble_generator(grid, &p, 8).unwrap();
        let data = InitialData::new(
            &grid,
            vec![0.0; 16],
            vec![0.0; 16],
            DelayLine::zeros(8, 1.0).unwrap(),
        )
        .unwrap();
        let rec = simulate_data(
            &p,
            grid,
            &data,
            1.0,
            &SolverOptions::new(1.0, 8),
            false,
            None,
        )
        .unwrap();
        assert!(matches!(
            abscissa_vs_decay(&gm, &rec, None),
            Err(Error::NonPositiveEnergy { .. })
        ));
        let other = assemble_generator(Grid::new(1.0, 18).unwrap(), &p, 8).unwrap();
        assert!(matches!(
            abscissa_vs_decay(&other, &rec, None),
            Err(Error::GridMismatch(_))
        ));
    }
}
