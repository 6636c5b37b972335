//! Pilot: benchmark gradient-flow convergence for both filter widths and
//! both target levels.

use ndarray::Array1;
use qcontrol_core::gradient_flow::{
    run_gradient_flow, ConstraintSet, FilterFunction, FlowOptions, PhaseControlProblem,
};
use qcontrol_core::objectives::StateTransferProblem;
use qcontrol_core::pulse::fit_quadratic_phase;
use qcontrol_core::units::UnitSystem;
use std::time::Instant;

fn main() {
    let u = UnitSystem::<f64>::default();
    for &(sigma_invcm, max_iters) in &[(5000.0, 200usize), (50.0, 2000usize)] {
        for target in [1usize, 2] {
            let t0 = Instant::now();
            let problem = StateTransferProblem::<f64>::benchmark(target, 8192).unwrap();
            let constraints = ConstraintSet::endpoint_pair(problem.time_grid());
            let filter =
                FilterFunction::from_wavenumber(sigma_invcm, problem.frequency_grid()).unwrap();
            let options = FlowOptions {
                max_iterations: max_iters,
                target_gap: 1e-3,
                ..FlowOptions::default()
            };
            let state = run_gradient_flow(&problem, &constraints, &filter, &options).unwrap();
            let elapsed = t0.elapsed().as_secs_f64();
            let fit = fit_quadratic_phase(&state.field, true).unwrap();
            let reg_count = state.history.iter().filter(|r| r.regularized).count();
            let worst_align = state
                .history
                .iter()
                .flat_map(|r| r.constraint_alignments.iter())
                .fold(0.0f64, |m, &a| m.max(a.abs()));
            let worst_resid = state
                .history
                .iter()
                .flat_map(|r| r.constraint_residuals.iter())
                .fold(0.0f64, |m, &r| m.max(r.abs()));
            let peak = problem
                .field(&Array1::zeros(problem.frequency_grid().n_points()))
                .unwrap()
                .envelope_peak();
            println!(
                "sigma={sigma_invcm:6} target={target}  J={:.6}  iters={:3}  {:?}  {elapsed:.1}s",
                state.final_objective(),
                state.iteration,
                state.termination
            );
            println!(
                "    beta0={:+.1} fs^2  omega_c={:.1} cm^-1  r2={:.4}  reg={}  align_max={:.2e}  resid_max/peak={:.2e}",
                fit.beta0,
                u.angular_frequency_to_wavenumber(fit.omega_c),
                fit.r_squared,
                reg_count,
                worst_align,
                worst_resid / peak
            );
            if std::env::var("PILOT_TRACE").is_ok() {
                for r in state.history.iter().take(40) {
                    println!(
                        "      it {:3}  J={:.6}  step={:.3e}  rate={:.3e}  reg={}",
                        r.iteration, r.objective, r.step_size, r.objective_rate, r.regularized
                    );
                }
            }
        }
    }
}
