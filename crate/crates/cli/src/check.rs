//! Fast invariant suite: exercises the numerical core end to end and prints
//! one line per check. Returns the number of failures.

use anyhow::Result;
use ndarray::Array1;
use qcontrol_core::gradient_flow::{
    run_gradient_flow, ConstraintSet, FlowOptions, GammaMatrix, PhaseControlProblem,
};
use qcontrol_core::msde::run_msde;
use qcontrol_core::quantum::{propagate, rb_benchmark_system};
use qcontrol_core::{
    CoreError, FilterFunction64, SearchSpace64, StateTransferProblem64, TimeGrid64, UnitSystem64,
};
use std::time::Instant;

// Converged final populations under the flat-phase benchmark pulse, frozen
// from two independent propagation schemes.
const TL_P2: f64 = 0.251892517;
const TL_P3: f64 = 0.011459991;
// The benchmark carrier, 12698 cm^-1, in rad/fs.
const CARRIER_RADFS: f64 = 2.391860760168782;

type Check = (&'static str, fn() -> Result<(), String>);

const CHECKS: &[Check] = &[
    ("unit-conversions", unit_conversions),
    ("transform-limited-populations", transform_limited_populations),
    ("propagator-unitarity", propagator_unitarity),
    ("time-step-halving", time_step_halving),
    ("phase-gradient-spot-check", phase_gradient_spot_check),
    ("filter-limits", filter_limits),
    ("gamma-symmetry", gamma_symmetry),
    ("population-determinism", population_determinism),
    ("constrained-flow-feasibility", constrained_flow_feasibility),
];

/// Runs every check, printing `ok`/`FAIL` lines; returns the failure count.
pub fn run_checks() -> usize {
    let mut failures = 0;
    for (name, check) in CHECKS {
        let started = Instant::now();
        match check() {
            Ok(()) => println!("ok   {name} ({} ms)", started.elapsed().as_millis()),
            Err(msg) => {
                failures += 1;
                println!("FAIL {name}: {msg}");
            }
        }
    }
    if failures == 0 {
        println!("all {} checks passed", CHECKS.len());
    } else {
        println!("{failures} of {} checks failed", CHECKS.len());
    }
    failures
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn unit_conversions() -> Result<(), String> {
    let u = UnitSystem64::default();
    let w = u.wavenumber_to_angular_frequency(12698.0);
    ensure((w - CARRIER_RADFS).abs() < 1e-12 * CARRIER_RADFS, || {
        format!("12698 cm^-1 converted to {w} rad/fs, expected {CARRIER_RADFS}")
    })?;
    let back = u.angular_frequency_to_wavenumber(w);
    ensure((back - 12698.0).abs() < 1e-9, || {
        format!("wavenumber round trip drifted to {back}")
    })?;
    let f = u.field_to_internal(3.6e6);
    let f_back = u.field_to_vcm(f);
    ensure((f_back - 3.6e6).abs() < 1e-3, || {
        format!("field round trip drifted to {f_back} V/cm")
    })
}

fn benchmark_problem(time_points: usize) -> Result<StateTransferProblem64, String> {
    StateTransferProblem64::benchmark(1, time_points).map_err(|e| e.to_string())
}

fn transform_limited_populations() -> Result<(), String> {
    let problem = benchmark_problem(8192)?;
    let flat = Array1::zeros(problem.frequency_grid().n_points());
    let pops = problem
        .evaluate_transfer(&flat)
        .map_err(|e| e.to_string())?
        .final_populations();
    let total: f64 = pops.iter().sum();
    ensure((total - 1.0).abs() < 1e-10, || {
        format!("populations sum to {total}")
    })?;
    ensure((pops[1] - TL_P2).abs() < 5e-6, || {
        format!("flat-phase p2 = {}, expected {TL_P2}", pops[1])
    })?;
    ensure((pops[2] - TL_P3).abs() < 5e-6, || {
        format!("flat-phase p3 = {}, expected {TL_P3}", pops[2])
    })
}

fn structured_phase(n: usize) -> Array1<f64> {
    Array1::from_shape_fn(n, |j| 0.3 * (0.11 * j as f64).sin())
}

fn propagator_unitarity() -> Result<(), String> {
    let problem = benchmark_problem(8192)?;
    let phase = structured_phase(problem.frequency_grid().n_points());
    let result = problem.evaluate_transfer(&phase).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for u in &result.trajectory {
        worst = worst.max(u.unitarity_defect());
    }
    ensure(worst < 1e-8, || format!("worst unitarity defect {worst}"))
}

fn time_step_halving() -> Result<(), String> {
    let sys = rb_benchmark_system::<f64>();
    let u = UnitSystem64::default();
    let tau0 = 1.0 / u.wavenumber_to_angular_frequency(177.0);
    let peak = u.field_to_internal(3.6e6);
    let tl = |grid: &TimeGrid64| -> Array1<f64> {
        let mid = grid.midpoint();
        Array1::from_shape_fn(grid.n_points(), |i| {
            let x = grid.value(i) - mid;
            peak * (-x * x / (2.0 * tau0 * tau0)).exp() * (CARRIER_RADFS * x).cos()
        })
    };
    let coarse = TimeGrid64::new(0.0, 200.0, 4096).map_err(|e| e.to_string())?;
    // 2n-1 nodes halve the step exactly while keeping the end time.
    let fine = TimeGrid64::new(0.0, 200.0, 8191).map_err(|e| e.to_string())?;
    let p_coarse = propagate(&sys, &tl(&coarse), &coarse)
        .map_err(|e| e.to_string())?
        .final_populations();
    let p_fine = propagate(&sys, &tl(&fine), &fine)
        .map_err(|e| e.to_string())?
        .final_populations();
    let worst = (0..3).fold(0.0f64, |m, i| m.max((p_fine[i] - p_coarse[i]).abs()));
    ensure(worst < 1e-5, || {
        format!("halving the step moved populations by {worst}")
    })
}

fn phase_gradient_spot_check() -> Result<(), String> {
    let problem = benchmark_problem(2048)?;
    let grid = problem.frequency_grid().clone();
    let phase = structured_phase(grid.n_points());
    let density = problem
        .phase_gradient_density(&phase)
        .map_err(|e| e.to_string())?;
    let scale = density.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
    let dw = grid.spacing();
    let h = 1e-4;
    for &j in &[170usize, 256, 341] {
        let mut up = phase.clone();
        up[j] += h;
        let mut down = phase.clone();
        down[j] -= h;
        let fd = (problem.objective(&up).map_err(|e| e.to_string())?
            - problem.objective(&down).map_err(|e| e.to_string())?)
            / (2.0 * h);
        let analytic = density[j] * grid.weight(j) * dw;
        ensure(
            (fd - analytic).abs() < 1e-3 * scale * grid.weight(j) * dw,
            || format!("phase bin {j}: finite difference {fd} vs gradient {analytic}"),
        )?;
    }
    Ok(())
}

fn filter_limits() -> Result<(), String> {
    let problem = benchmark_problem(256)?;
    let grid = problem.frequency_grid();
    let n = grid.n_points();
    let dw = grid.spacing();
    let density = Array1::from_shape_fn(n, |j| (0.2 * j as f64).cos());

    // A width far below the grid spacing reduces the kernel sum to its own
    // node: the quadrature-weighted identity.
    let narrow = FilterFunction64::new(1e-6 * dw, grid).map_err(|e| e.to_string())?;
    let out = narrow.smooth(&density);
    for j in 0..n {
        let expected = density[j] * grid.weight(j) * dw;
        ensure((out[j] - expected).abs() <= 1e-12 * expected.abs().max(1e-300), || {
            format!("narrow filter at bin {j}: {} vs {expected}", out[j])
        })?;
    }

    // A width far above the grid span flattens the output to the integral.
    let wide = FilterFunction64::new(1e9, grid).map_err(|e| e.to_string())?;
    let flat = wide.smooth(&density);
    let mean = flat.sum() / n as f64;
    let spread = flat.iter().fold(0.0f64, |m, &v| m.max((v - mean).abs()));
    ensure(spread <= 1e-10 * mean.abs().max(1e-12), || {
        format!("wide filter output varies by {spread} around {mean}")
    })
}

fn gamma_symmetry() -> Result<(), String> {
    let problem = benchmark_problem(256)?;
    let grid = problem.frequency_grid();
    let n = grid.n_points();
    let filter = FilterFunction64::from_wavenumber(500.0, grid).map_err(|e| e.to_string())?;
    let c1 = Array1::from_shape_fn(n, |j| (0.05 * j as f64).sin());
    let c2 = Array1::from_shape_fn(n, |j| (0.03 * j as f64 + 0.4).cos());
    let raw = [c1.clone(), c2.clone()];
    let filtered = [filter.smooth(&c1), filter.smooth(&c2)];
    let gamma = GammaMatrix::assemble(&raw, &filtered, grid.spacing());
    let m = gamma.matrix();
    let scale = m[[0, 0]].abs().max(m[[1, 1]].abs());
    ensure((m[[0, 1]] - m[[1, 0]]).abs() <= 1e-12 * scale, || {
        format!("gamma asymmetry {} at scale {scale}", (m[[0, 1]] - m[[1, 0]]).abs())
    })?;
    ensure(m[[0, 0]] >= -1e-15 && m[[1, 1]] >= -1e-15, || {
        format!("negative diagonal: {} / {}", m[[0, 0]], m[[1, 1]])
    })
}

fn population_determinism() -> Result<(), String> {
    let space = SearchSpace64::uniform_box(5, -3.0, 3.0).map_err(|e| e.to_string())?;
    let sphere = |v: ndarray::ArrayView1<f64>| {
        Ok::<f64, CoreError>(-v.iter().map(|x| x * x).sum::<f64>())
    };
    let a = run_msde(sphere, &space, 12, 25, 3).map_err(|e| e.to_string())?;
    let b = run_msde(sphere, &space, 12, 25, 3).map_err(|e| e.to_string())?;
    ensure(a.trace.len() == b.trace.len(), || {
        "reruns produced different trace lengths".into()
    })?;
    for (ra, rb) in a.trace.iter().zip(&b.trace) {
        ensure(
            ra.best == rb.best && ra.average == rb.average && ra.best_vector == rb.best_vector,
            || format!("reruns diverge at generation {}", ra.generation),
        )?;
    }
    for w in a.trace.windows(2) {
        ensure(w[1].best >= w[0].best, || {
            format!("best fitness dropped at generation {}", w[1].generation)
        })?;
    }
    Ok(())
}

fn constrained_flow_feasibility() -> Result<(), String> {
    let problem = benchmark_problem(2048)?;
    let constraints = ConstraintSet::endpoint_pair(problem.time_grid());
    let filter =
        FilterFunction64::from_wavenumber(50.0, problem.frequency_grid()).map_err(|e| e.to_string())?;
    let options = FlowOptions {
        max_iterations: 12,
        ..FlowOptions::default()
    };
    let state =
        run_gradient_flow(&problem, &constraints, &filter, &options).map_err(|e| e.to_string())?;
    let cap = 1e-3 * state.field.envelope_peak();
    for pair in state.history.windows(2) {
        ensure(pair[1].objective >= pair[0].objective, || {
            format!("objective dropped at iteration {}", pair[1].iteration)
        })?;
    }
    for record in &state.history {
        for &r in &record.constraint_residuals {
            ensure(r.abs() <= cap, || {
                format!("iteration {} residual {r} exceeds {cap}", record.iteration)
            })?;
        }
    }
    let first = state.history.first().expect("history is never empty").objective;
    let last = state.final_objective();
    ensure(last > first, || {
        format!("no progress: started at {first}, ended at {last}")
    })
}
