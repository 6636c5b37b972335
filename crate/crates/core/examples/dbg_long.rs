//! Diagnostic: long-budget wide-filter runs, both targets.
use qcontrol_core::gradient_flow::{
    run_gradient_flow, ConstraintSet, FilterFunction, FlowOptions, PhaseControlProblem,
};
use qcontrol_core::objectives::StateTransferProblem;
use qcontrol_core::pulse::fit_quadratic_phase;

fn main() {
    for target in [1usize, 2] {
        let problem = StateTransferProblem::<f64>::benchmark(target, 8192).unwrap();
        let constraints = ConstraintSet::endpoint_pair(problem.time_grid());
        let filter = FilterFunction::from_wavenumber(5000.0, problem.frequency_grid()).unwrap();
        let options = FlowOptions { max_iterations: 2000, target_gap: 1e-4, ..FlowOptions::default() };
        let state = run_gradient_flow(&problem, &constraints, &filter, &options).unwrap();
        let fit = fit_quadratic_phase(&state.field, true).unwrap();
        println!("target={target} J={:.6} iters={} {:?} beta0={:+.1} r2={:.4}",
            state.final_objective(), state.iteration, state.termination, fit.beta0, fit.r_squared);
    }
}
