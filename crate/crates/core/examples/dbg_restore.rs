//! Debug: rotation + Newton restoration from the symmetric flat-phase start.

use ndarray::Array1;
use qcontrol_core::gradient_flow::{ConstraintSet, FilterFunction, GammaMatrix, PhaseControlProblem};
use qcontrol_core::linalg::eigh_symmetric;
use qcontrol_core::objectives::StateTransferProblem;

fn residuals(
    problem: &StateTransferProblem<f64>,
    constraints: &ConstraintSet<f64>,
    phase: &Array1<f64>,
) -> Vec<f64> {
    constraints.residuals(&problem.field(phase).unwrap())
}

fn main() {
    for &sigma in &[5000.0f64, 50.0] {
        println!("sigma = {sigma}");
        let problem = StateTransferProblem::<f64>::benchmark(1, 8192).unwrap();
        let constraints = ConstraintSet::endpoint_pair(problem.time_grid());
        let filter = FilterFunction::from_wavenumber(sigma, problem.frequency_grid()).unwrap();
        let n = problem.frequency_grid().n_points();
        let spacing = problem.frequency_grid().spacing();
        let mut phase = Array1::zeros(n);

        let target = 2.894e-5 * 1e-6;
        for round in 0..12 {
            let r = residuals(&problem, &constraints, &phase);
            let worst = r.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
            println!("  round {round}: f = [{:+.4e}, {:+.4e}]", r[0], r[1]);
            if worst <= target {
                break;
            }
            // Newton in the filtered constraint-gradient span with a
            // pseudo-inverse (drop tiny eigendirections).
            let field = problem.field(&phase).unwrap();
            let densities = constraints.coefficients(&field);
            let filtered: Vec<Array1<f64>> = densities.iter().map(|c| filter.smooth(c)).collect();
            let gamma = GammaMatrix::assemble(&densities, &filtered, spacing);
            let (vals, vecs) = eigh_symmetric(gamma.matrix()).unwrap();
            let vmax = vals.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
            let mut alpha = vec![0.0; 2];
            for e in 0..2 {
                if vals[e] <= 1e-10 * vmax {
                    continue;
                }
                let mut proj = 0.0;
                for i in 0..2 {
                    proj += vecs[[i, e]] * (-r[i]);
                }
                proj /= vals[e];
                for i in 0..2 {
                    alpha[i] += proj * vecs[[i, e]];
                }
            }
            // Stall escape: the residual is orthogonal to the reachable
            // span; a quarter-circle carrier offset restores full rank.
            let reachable: f64 = (0..2)
                .map(|k| alpha[0] * gamma.matrix()[[k, 0]] + alpha[1] * gamma.matrix()[[k, 1]] + r[k])
                .fold(0.0, |m, v| m.max(v.abs()));
            if reachable > 0.5 * worst {
                for v in phase.iter_mut() {
                    *v += std::f64::consts::FRAC_PI_4;
                }
                println!("    stalled (unreachable {reachable:.2e}), offset by pi/4");
                continue;
            }
            // Damped step: halve until the worst residual does not grow.
            let mut scale = 1.0;
            for _ in 0..8 {
                let mut trial = phase.clone();
                for j in 0..n {
                    let d = scale * (alpha[0] * filtered[0][j] + alpha[1] * filtered[1][j]);
                    trial[j] += d;
                }
                let rt = residuals(&problem, &constraints, &trial);
                let wt = rt.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
                if wt < worst {
                    phase = trial;
                    println!("    newton scale {scale:.3} -> worst {wt:.3e}");
                    break;
                }
                scale *= 0.5;
            }
        }
        let r = residuals(&problem, &constraints, &phase);
        println!("  final f = [{:+.4e}, {:+.4e}]  (cap 2.89e-5)", r[0], r[1]);
    }
}
