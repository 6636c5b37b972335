//! Central finite differences as the gradient oracle: the analytic phase,
//! amplitude, and temporal gradients must track the numerical derivative of
//! the transfer objective on a spread of random configurations.

use ndarray::Array1;
use qcontrol_core::gradient_flow::{
    amplitude_gradient, phase_gradient, temporal_gradient, PhaseControlProblem,
};
use qcontrol_core::pulse::synthesize;
use qcontrol_core::quantum::propagate;
use qcontrol_core::{Observable64, SpectralField64, StateTransferProblem64, StateVector64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const CONFIGS: u64 = 20;
const TIME_POINTS: usize = 4096;

/// A random smooth spectral phase: a handful of low-order Fourier modes.
fn random_phase(n: usize, rng: &mut ChaCha8Rng) -> Array1<f64> {
    let mut modes = Vec::new();
    for k in 1..=6usize {
        let a: f64 = rng.gen_range(-0.6..0.6);
        let theta: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        modes.push((k as f64, a, theta));
    }
    Array1::from_shape_fn(n, |j| {
        let x = j as f64 / n as f64;
        modes
            .iter()
            .map(|&(k, a, theta)| a * (std::f64::consts::TAU * k * x + theta).sin())
            .sum()
    })
}

struct Setup {
    problem: StateTransferProblem64,
    phase: Array1<f64>,
    target: usize,
}

fn setup(seed: u64) -> Setup {
    let target = 1 + (seed % 2) as usize;
    let problem = StateTransferProblem64::benchmark(target, TIME_POINTS).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let phase = random_phase(problem.frequency_grid().n_points(), &mut rng);
    Setup {
        problem,
        phase,
        target,
    }
}

#[test]
fn phase_gradient_matches_central_differences_on_random_configurations() {
    for seed in 0..CONFIGS {
        let s = setup(seed);
        let grid = s.problem.frequency_grid().clone();
        let dw = grid.spacing();
        let density = s.problem.phase_gradient_density(&s.phase).unwrap();
        // Relative error is measured against the gradient's largest
        // component; tiny components carry scheme-consistency residuals.
        let gscale = (0..grid.n_points())
            .map(|j| (density[j] * grid.weight(j) * dw).abs())
            .fold(0.0f64, f64::max);

        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xA5A5);
        let h = 1e-4;
        for _ in 0..2 {
            // Bins inside the amplitude support, where the gradient lives.
            let j = rng.gen_range(100..412);
            let mut up = s.phase.clone();
            up[j] += h;
            let mut down = s.phase.clone();
            down[j] -= h;
            let fd = (s.problem.objective(&up).unwrap() - s.problem.objective(&down).unwrap())
                / (2.0 * h);
            let analytic = density[j] * grid.weight(j) * dw;
            let rel = (fd - analytic).abs() / gscale;
            assert!(
                rel < 1e-3,
                "config {seed} phase bin {j}: fd {fd} vs analytic {analytic} (rel {rel})"
            );
        }
    }
}

#[test]
fn amplitude_gradient_matches_central_differences_on_random_configurations() {
    for seed in 0..CONFIGS {
        let s = setup(seed);
        let grid = s.problem.frequency_grid().clone();
        let tgrid = s.problem.time_grid();
        let dw = grid.spacing();
        let field = s.problem.field(&s.phase).unwrap();
        let result = s.problem.evaluate_transfer(&s.phase).unwrap();
        let psi0 = StateVector64::basis_state(3, 0).unwrap();
        let proj = Observable64::projector(3, s.target).unwrap();
        let density = temporal_gradient(s.problem.system(), &result, &psi0, &proj).unwrap();
        let ag = amplitude_gradient(&field, &density, tgrid);
        let gscale = (0..grid.n_points())
            .map(|j| (ag[j] * grid.weight(j) * dw).abs())
            .fold(0.0f64, f64::max);

        let amp_max = field.amplitude().iter().fold(0.0f64, |m, &v| m.max(v));
        let objective = |amp: Array1<f64>| -> f64 {
            let f = SpectralField64::new(grid.clone(), amp, s.phase.clone()).unwrap();
            let samples = synthesize(&f, tgrid);
            propagate(s.problem.system(), &samples, tgrid)
                .unwrap()
                .final_populations()[s.target]
        };

        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5A5A);
        let h = 1e-3 * amp_max;
        for _ in 0..2 {
            let j = rng.gen_range(120..392);
            let mut up = field.amplitude().clone();
            up[j] += h;
            let mut down = field.amplitude().clone();
            down[j] -= h;
            let fd = (objective(up) - objective(down)) / (2.0 * h);
            let analytic = ag[j] * grid.weight(j) * dw;
            let rel = (fd - analytic).abs() / gscale;
            assert!(
                rel < 1e-3,
                "config {seed} amplitude bin {j}: fd {fd} vs analytic {analytic} (rel {rel})"
            );
        }
    }
}

#[test]
fn temporal_gradient_matches_per_sample_differences_on_random_configurations() {
    for seed in 0..CONFIGS {
        let s = setup(seed);
        let tgrid = s.problem.time_grid();
        let dt = tgrid.spacing();
        let field = s.problem.field(&s.phase).unwrap();
        let samples = synthesize(&field, tgrid);
        let result = s.problem.evaluate_transfer(&s.phase).unwrap();
        let psi0 = StateVector64::basis_state(3, 0).unwrap();
        let proj = Observable64::projector(3, s.target).unwrap();
        let g = temporal_gradient(s.problem.system(), &result, &psi0, &proj).unwrap();
        let scale = g.iter().fold(0.0f64, |m, &v| m.max(v.abs())) * dt;

        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x3C3C);
        let h = 1e-3 * field.envelope_peak();
        for _ in 0..2 {
            let i = rng.gen_range(300..TIME_POINTS - 300);
            let mut plus = samples.clone();
            plus[i] += h;
            let mut minus = samples.clone();
            minus[i] -= h;
            let jp = propagate(s.problem.system(), &plus, tgrid)
                .unwrap()
                .final_populations()[s.target];
            let jm = propagate(s.problem.system(), &minus, tgrid)
                .unwrap()
                .final_populations()[s.target];
            let fd = (jp - jm) / (2.0 * h);
            let analytic = g[i] * tgrid.weight(i) * dt;
            assert!(
                (fd - analytic).abs() < 1e-4 * scale,
                "config {seed} node {i}: fd {fd} vs analytic {analytic}"
            );
        }
    }
}

#[test]
fn phase_gradient_assembly_matches_the_problem_trait() {
    // The trait's density must be the pullback of the temporal density
    // through the synthesis map; spot-check the composition end to end.
    let s = setup(3);
    let tgrid = s.problem.time_grid();
    let field = s.problem.field(&s.phase).unwrap();
    let result = s.problem.evaluate_transfer(&s.phase).unwrap();
    let psi0 = StateVector64::basis_state(3, 0).unwrap();
    let proj = Observable64::projector(3, s.target).unwrap();
    let density = temporal_gradient(s.problem.system(), &result, &psi0, &proj).unwrap();
    let assembled = phase_gradient(&field, &density, tgrid);
    let from_trait = s.problem.phase_gradient_density(&s.phase).unwrap();
    for j in 0..assembled.len() {
        assert_eq!(
            assembled[j], from_trait[j],
            "bin {j}: assembly differs from the trait path"
        );
    }
}
