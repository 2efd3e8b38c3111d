//! End-to-end acceptance criteria. Each test writes one status line.

use hsdelay::diagnostics::{
    check_decay, check_energy_identity, fit_decay, kato_check, observability_decay,
    observability_quotient, verify_decay_bound,
};
use hsdelay::initial::random_unit_data;
use hsdelay::integrator::trajectory_distance;
use hsdelay::params::{
    is_negative_definite, mu_bounds, phi_matrix, phi_star_matrix, psi_matrix, smallness_radius,
    theoretical_decay_rate,
};
use hsdelay::spectral::{
    abscissa_vs_decay, assemble_generator, dissipativity_check, spectral_abscissa,
};
use hsdelay::{
    picard_solve, simulate_data, DelayLine, Error, Gains, Grid, History, InitialData,
    LyapunovWeights, Profile, SimulationRecord, SolverOptions, SourcePair, SystemParams,
    TimeScheme,
};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::io::Write;
use std::time::Instant;

fn report(id: u32, passed: bool, detail: String) {
    let status = if passed { "PASS" } else { "FAIL" };
    let mut err = std::io::stderr().lock();
    let _ = writeln!(err, "criterion {id:>2}: {status}  {detail}");
    assert!(passed, "criterion {id} failed: {detail}");
}

fn reference_params() -> SystemParams {
    SystemParams::new(1.0, 1.0, Gains::new(0.1, 0.1).unwrap()).unwrap()
}

fn sine_data(p: &SystemParams, grid: &Grid, cells: usize) -> InitialData {
    InitialData::from_families(
        p,
        grid,
        cells,
        &Profile::SineModes(vec![1.0, 0.5]),
        &Profile::SineModes(vec![0.3, 0.0, 0.2]),
        &History::Sine {
            amplitude: 0.5,
            frequency: 1.0,
        },
    )
    .unwrap()
}

fn random_gains(rng: &mut impl Rng) -> Gains {
    loop {
        let alpha = rng.gen_range(-0.5..0.5);
        let beta = rng.gen_range(0.0..1.0 / 3.0);
        if let Ok(g) = Gains::new(alpha, beta) {
            return g;
        }
    }
}

fn relative_max_diff(a: &[f64], b: &[f64], scale: f64) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
        / scale
}

#[test]
fn criterion_01_matrix_certification() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst_phi: f64 = f64::INFINITY;
    let mut psi_failures = 0;
    let mut psi_samples = 0;
    let mut phi_failures = 0;
    for _ in 0..1000 {
        let g = random_gains(&mut rng);
        for m in [phi_matrix(g), phi_star_matrix(g)] {
            let (m1, m2) = m.leading_minors();
            worst_phi = worst_phi.min((-m1).min(m2));
            if !is_negative_definite(&m) {
                phi_failures += 1;
            }
        }
        let bounds = mu_bounds(g, 1.0, None).unwrap();
        let mu1 = rng.gen_range(0.0..1.0) * bounds.mu1_max.min(1e3);
        if mu1 <= 0.0 {
            continue;
        }
        let mu2_max = mu_bounds(g, 1.0, Some(mu1)).unwrap().mu2_max.unwrap();
        if mu2_max <= 0.0 {
            continue;
        }
        let mu2 = rng.gen_range(0.0..1.0) * mu2_max;
        if mu2 <= 0.0 {
            continue;
        }
        psi_samples += 1;
        if !is_negative_definite(&psi_matrix(g, LyapunovWeights::unchecked(mu1, mu2), 1.0)) {
            psi_failures += 1;
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    let passed = phi_failures == 0 && psi_failures == 0 && psi_samples > 0 && elapsed < 1.0;
    report(
        1,
        passed,
        format!(
            "1000 gain samples, smallest minor margin {worst_phi:.3e}, {psi_samples} weight samples, \
             {phi_failures}+{psi_failures} failures, {elapsed:.3}s"
        ),
    );
}

#[test]
fn criterion_02_delay_transport() {
    let mut runner = TestRunner::new(Config {
        cases: 512,
        ..Config::default()
    });
    let strategy = (
        prop::collection::vec(-10.0f64..10.0, 2..40),
        prop::collection::vec(-10.0f64..10.0, 0..120),
    );
    let outcome = runner.run(&strategy, |(history, pushes)| {
        let cells = history.len() - 1;
        let h = history.clone();
        let mut line = DelayLine::init_from_history(
            move |r| h[(r * cells as f64).round() as usize],
            cells,
            1.0,
        )
        .unwrap();
        for (k, &value) in pushes.iter().enumerate() {
            line.push(value);
            let done = k + 1;
            for j in 0..=cells {
                let expected = if j < done {
                    pushes[done - 1 - j]
                } else {
                    history[j - done]
                };
                prop_assert_eq!(line.sample(j).to_bits(), expected.to_bits());
            }
            // After M pushes the delayed slot holds the trace that was current
            // when pushing began; one step later it holds the first push.
            if done == cells {
                prop_assert_eq!(line.delayed_value().to_bits(), history[0].to_bits());
            }
            if done == cells + 1 {
                prop_assert_eq!(line.delayed_value().to_bits(), pushes[0].to_bits());
            }
        }
        Ok(())
    });
    let detail = match &outcome {
        Ok(()) => "512 random histories and push sequences transported bit-for-bit".to_string(),
        Err(e) => format!("{e}"),
    };
    report(2, outcome.is_ok(), detail);
}

fn identity_residual(nodes: usize, cells: usize) -> (f64, f64) {
    let p = reference_params();
    let grid = Grid::new(1.0, nodes).unwrap();
    let opts = SolverOptions::new(1.0, cells).with_scheme(TimeScheme::Theta(0.5));
    let data = sine_data(&p, &grid, cells);
    let rec = simulate_data(&p, grid, &data, 2.0, &opts, false, None).unwrap();
    let check = check_energy_identity(&rec).unwrap();
    (check.max_residual, rec.energies[0])
}

#[test]
fn criterion_03_energy_identity() {
    let (coarse, e0) = identity_residual(128, 64);
    let (fine, _) = identity_residual(256, 128);
    let ratio = coarse / fine;
    let passed = coarse <= 1e-4 * e0 && ratio >= 3.0;
    report(
        3,
        passed,
        format!(
            "residual/E(0) = {:.3e} at (128, 64), {:.3e} at (256, 128), reduction {ratio:.2} (order {:.2})",
            coarse / e0,
            fine / e0,
            ratio.log2()
        ),
    );
}

fn max_relative_increase(rec: &SimulationRecord) -> f64 {
    let e0 = rec.energies[0];
    rec.energies
        .windows(2)
        .map(|w| (w[1] - w[0]) / e0)
        .fold(f64::NEG_INFINITY, f64::max)
}

#[test]
fn criterion_04_energy_monotonicity() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let grid = Grid::new(1.0, 128).unwrap();
    let cells = 64;
    let opts = SolverOptions::new(1.0, cells);
    let mut worst_linear: f64 = f64::NEG_INFINITY;
    for _ in 0..10 {
        let p = SystemParams::new(1.0, 1.0, random_gains(&mut rng)).unwrap();
        let data = random_unit_data(&p, &grid, cells, &mut rng).unwrap();
        let rec = simulate_data(&p, grid, &data, 3.0, &opts, false, None).unwrap();
        worst_linear = worst_linear.max(max_relative_increase(&rec));
    }
    let mut worst_nonlinear: f64 = f64::NEG_INFINITY;
    let half_radius = 0.5 * smallness_radius(1.0);
    for _ in 0..10 {
        let p = SystemParams::new(1.0, 1.0, random_gains(&mut rng)).unwrap();
        let data = random_unit_data(&p, &grid, cells, &mut rng)
            .unwrap()
            .with_norm(&p, &grid, half_radius);
        let rec = simulate_data(&p, grid, &data, 3.0, &opts, true, None).unwrap();
        worst_nonlinear = worst_nonlinear.max(max_relative_increase(&rec));
    }
    let passed = worst_linear <= 1e-10 && worst_nonlinear <= 1e-8;
    report(
        4,
        passed,
        format!(
            "largest step increase / E(0): linear {worst_linear:.3e} (10 runs), \
             nonlinear {worst_nonlinear:.3e} (10 runs at 0.5 r_max)"
        ),
    );
}

fn reference_data(p: &SystemParams, grid: &Grid, cells: usize) -> InitialData {
    sine_data(p, grid, cells).with_norm(p, grid, 0.5 * smallness_radius(1.0))
}

#[test]
fn criterion_05_decay_envelope() {
    let p = reference_params();
    let w = LyapunovWeights::new(p.gains, 1.0, 0.1, 0.1).unwrap();
    let grid = Grid::new(1.0, 128).unwrap();
    let cells = 64;
    let radius = 0.5 * smallness_radius(1.0);
    let data = reference_data(&p, &grid, cells);
    let opts = SolverOptions::new(1.0, cells);
    let rec = simulate_data(&p, grid, &data, 50.0, &opts, true, None).unwrap();
    let bound = theoretical_decay_rate(&p, w, radius).unwrap();
    let verdict = verify_decay_bound(&rec, w, radius).unwrap();
    let fit = fit_decay(&rec.energies, &rec.times, Some((2.0, 50.0))).unwrap();
    let control = check_decay(&rec, w, 2.0 * bound.lambda, bound.kappa);
    let passed = verdict.passed && fit.lambda_emp >= bound.lambda && !control.passed;
    report(
        5,
        passed,
        format!(
            "lambda = {:.5}, kappa = {:.3}: envelope ratio {:.3}, V e^(lambda t) monotone = {}, \
             lambda_emp = {:.2}; 2 lambda control rejected = {} (max V increase {:.2e})",
            bound.lambda,
            bound.kappa,
            verdict.max_envelope_ratio,
            verdict.lyapunov_monotone,
            fit.lambda_emp,
            !control.passed,
            control.max_lyapunov_increase
        ),
    );
}

#[test]
fn criterion_06_kato_smoothing() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let grid = Grid::new(1.0, 128).unwrap();
    let cells = 64;
    let opts = SolverOptions::new(1.0, cells);
    let mut worst_ratio: f64 = 0.0;
    let mut worst_drift: f64 = 0.0;
    for _ in 0..20 {
        let p = SystemParams::new(1.0, 1.0, random_gains(&mut rng)).unwrap();
        let data = random_unit_data(&p, &grid, cells, &mut rng).unwrap();
        let rec = simulate_data(&p, grid, &data, 2.0, &opts, false, None).unwrap();
        let base = kato_check(&rec).unwrap();
        let mut scaled = data.clone();
        scaled.scale(&grid, 10.0);
        let rec10 = simulate_data(&p, grid, &scaled, 2.0, &opts, false, None).unwrap();
        let big = kato_check(&rec10).unwrap();
        worst_ratio = worst_ratio.max(base.ratio);
        worst_drift = worst_drift.max((big.ratio - base.ratio).abs() / base.ratio);
    }
    let passed = worst_ratio <= 1.05 && worst_drift <= 1e-10;
    report(
        6,
        passed,
        format!("20 runs: max ratio {worst_ratio:.4}, max relative change under x10 scaling {worst_drift:.2e}"),
    );
}

#[test]
fn criterion_07_superposition() {
    let p = reference_params();
    let grid = Grid::new(1.0, 64).unwrap();
    let cells = 32;
    let opts = SolverOptions::new(1.0, cells).with_snapshot_stride(1);
    let horizon = 2.0;
    let steps = 64;
    let src = SourcePair::sample(&grid, opts.dt, steps, |t, x| {
        (
            (std::f64::consts::PI * x).sin() * (3.0 * t).cos(),
            x * (1.0 - x) * (1.0 + t),
        )
    });
    let data = sine_data(&p, &grid, cells);
    let zero = InitialData::new(
        &grid,
        vec![0.0; 64],
        vec![0.0; 64],
        DelayLine::zeros(cells, 1.0).unwrap(),
    )
    .unwrap();
    let both = simulate_data(&p, grid, &data, horizon, &opts, false, Some(&src)).unwrap();
    let free = simulate_data(&p, grid, &data, horizon, &opts, false, None).unwrap();
    let forced = simulate_data(&p, grid, &zero, horizon, &opts, false, Some(&src)).unwrap();
    let mut worst: f64 = 0.0;
    for ((a, b), c) in both
        .snapshots
        .iter()
        .zip(&free.snapshots)
        .zip(&forced.snapshots)
    {
        let sum_u: Vec<f64> = b.u.iter().zip(&c.u).map(|(x, y)| x + y).collect();
        let sum_v: Vec<f64> = b.v.iter().zip(&c.v).map(|(x, y)| x + y).collect();
        let sum_z: Vec<f64> = b
            .line
            .samples()
            .iter()
            .zip(c.line.samples())
            .map(|(x, y)| x + y)
            .collect();
        let scale =
            a.u.iter()
                .chain(&a.v)
                .map(|x| x.abs())
                .fold(0.0, f64::max)
                .max(1e-300);
        worst = worst
            .max(relative_max_diff(&a.u, &sum_u, scale))
            .max(relative_max_diff(&a.v, &sum_v, scale))
            .max(relative_max_diff(&a.line.samples(), &sum_z, scale));
    }
    let passed = both.snapshots.len() == steps + 1 && worst <= 1e-10;
    report(
        7,
        passed,
        format!(
            "{} levels compared, max relative field error {worst:.2e}",
            both.snapshots.len()
        ),
    );
}

#[test]
fn criterion_08_picard() {
    let p = reference_params();
    let grid = Grid::new(1.0, 64).unwrap();
    let cells = 32;
    let opts = SolverOptions::new(1.0, cells).with_snapshot_stride(1);
    let r_max = smallness_radius(1.0);
    let small = sine_data(&p, &grid, cells).with_norm(&p, &grid, 0.25 * r_max);
    let outcome = picard_solve(&p, grid, &small, 1.0, &opts).unwrap();
    let imex = simulate_data(&p, grid, &small, 1.0, &opts, true, None).unwrap();
    let distance = trajectory_distance(&grid, opts.dt, &outcome.record.snapshots, &imex.snapshots);
    let max_factor = outcome
        .contraction_factors
        .iter()
        .copied()
        .fold(0.0, f64::max);
    let small_ok = max_factor < 1.0 && distance <= 10.0 * opts.picard_tol;

    let large = sine_data(&p, &grid, cells).with_norm(&p, &grid, 20.0 * r_max);
    let (large_ok, large_detail) = match picard_solve(&p, grid, &large, 2.0, &opts) {
        Err(Error::NoConvergence {
            iterations,
            contraction_factors,
            ..
        }) => (
            true,
            format!(
                "NoConvergence after {iterations} iterations, last factor {:.3}",
                contraction_factors.last().copied().unwrap_or(f64::NAN)
            ),
        ),
        Ok(o) => {
            let worst = o.contraction_factors.iter().copied().fold(0.0, f64::max);
            (
                worst >= 1.0,
                format!("converged with max factor {worst:.3}"),
            )
        }
        Err(e) => (false, format!("unexpected error {e}")),
    };
    report(
        8,
        small_ok && large_ok,
        format!(
            "0.25 r_max: {} iterations, max factor {max_factor:.3}, distance to IMEX {distance:.2e}; 20 r_max: {large_detail}",
            outcome.iterations
        ),
    );
}

#[test]
fn criterion_09_spectral_dissipativity() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let grid = Grid::new(1.0, 64).unwrap();
    let mut worst_diss = f64::NEG_INFINITY;
    let mut worst_abscissa = f64::NEG_INFINITY;
    for _ in 0..50 {
        let p = SystemParams::new(1.0, 1.0, random_gains(&mut rng)).unwrap();
        let gm = assemble_generator(grid, &p, 32).unwrap();
        worst_diss = worst_diss.max(dissipativity_check(&gm).unwrap() / gm.norm());
        worst_abscissa = worst_abscissa.max(spectral_abscissa(gm.matrix()).unwrap());
    }
    let p = reference_params();
    let fine = Grid::new(1.0, 128).unwrap();
    let cells = 64;
    let data = reference_data(&p, &fine, cells);
    let rec = simulate_data(
        &p,
        fine,
        &data,
        6.0,
        &SolverOptions::new(1.0, cells),
        false,
        None,
    )
    .unwrap();
    let gm = assemble_generator(fine, &p, cells).unwrap();
    let cmp = abscissa_vs_decay(&gm, &rec, Some((2.0, 6.0))).unwrap();
    let passed = worst_diss <= 1e-8 && worst_abscissa < 0.0 && cmp.relative_gap <= 0.15;
    report(
        9,
        passed,
        format!(
            "50 gain points: max scaled dissipativity {worst_diss:.2e}, max abscissa {worst_abscissa:.3}; \
             2|abscissa| = {:.2}, lambda_emp = {:.2}, gap {:.3}",
            cmp.predicted_rate, cmp.estimate.lambda_emp, cmp.relative_gap
        ),
    );
}

fn observability_runs(nodes: usize, cells: usize) -> (Vec<f64>, Vec<SimulationRecord>) {
    let p = reference_params();
    let grid = Grid::new(1.0, nodes).unwrap();
    let opts = SolverOptions::new(1.0, cells);
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let horizon = 2.0 * p.delay;
    (0..100)
        .map(|_| {
            let data = random_unit_data(&p, &grid, cells, &mut rng).unwrap();
            let rec = simulate_data(&p, grid, &data, horizon, &opts, false, None).unwrap();
            (observability_quotient(&rec, horizon).unwrap(), rec)
        })
        .unzip()
}

#[test]
fn criterion_10_observability() {
    let horizon = 2.0;
    let (coarse, records) = observability_runs(128, 64);
    let (fine, _) = observability_runs(256, 128);
    let finite = coarse.iter().chain(&fine).all(|q| q.is_finite());
    let max_coarse = coarse.iter().copied().fold(0.0, f64::max);
    let max_fine = fine.iter().copied().fold(0.0, f64::max);
    let change = (max_fine / max_coarse).max(max_coarse / max_fine);
    let (delta, mu0) = observability_decay(max_coarse, horizon).unwrap();
    let mut worst: f64 = 0.0;
    for rec in &records {
        let e0 = rec.energies[0];
        for (&t, &e) in rec.times.iter().zip(&rec.energies) {
            worst = worst.max(e / (e0 * (-mu0 * t).exp() / delta));
        }
    }
    let passed = finite && change < 2.0 && delta < 1.0 && mu0 > 0.0 && worst <= 1.05;
    report(
        10,
        passed,
        format!(
            "max quotient {max_coarse:.4} at (128, 64), {max_fine:.4} at (256, 128); \
             delta = {delta:.4}, mu0 = {mu0:.4}; max E / bound {worst:.4}"
        ),
    );
}
