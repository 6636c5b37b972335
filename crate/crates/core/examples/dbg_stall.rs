//! Diagnostic: dissect the wide-filter direction solve at a stalled iterate.

use ndarray::Array1;
use qcontrol_core::gradient_flow::{
    constrained_update_direction, run_gradient_flow, ConstraintSet, FilterFunction, FlowOptions,
    GammaMatrix, PhaseControlProblem,
};
use qcontrol_core::objectives::StateTransferProblem;

fn winner(a: &Array1<f64>, b: &Array1<f64>, dw: f64) -> f64 {
    let n = a.len();
    let mut acc = 0.0;
    for j in 0..n {
        let w = if j == 0 || j == n - 1 { 0.5 } else { 1.0 };
        acc += a[j] * b[j] * w * dw;
    }
    acc
}

fn main() {
    for target in [1usize, 2] {
        println!("=== target {target} ===");
        let problem = StateTransferProblem::<f64>::benchmark(target, 8192).unwrap();
        let constraints = ConstraintSet::endpoint_pair(problem.time_grid());
        let filter = FilterFunction::from_wavenumber(5000.0, problem.frequency_grid()).unwrap();
        let options = FlowOptions {
            max_iterations: 200,
            target_gap: 1e-3,
            ..FlowOptions::default()
        };
        let state = run_gradient_flow(&problem, &constraints, &filter, &options).unwrap();
        let phase = state.field.phase().clone();
        let dw = problem.frequency_grid().spacing();
        println!("stalled J = {:.6} after {} iters", state.final_objective(), state.iteration);

        let field = problem.field(&phase).unwrap();
        let g = problem.phase_gradient_density(&phase).unwrap();
        let sg = filter.smooth(&g);
        let dens = constraints.coefficients(&field);
        let filt: Vec<Array1<f64>> = dens.iter().map(|c| filter.smooth(c)).collect();

        let norm = |v: &Array1<f64>| winner(v, v, dw).sqrt();
        println!("|g|={:.3e}  |Sg|={:.3e}", norm(&g), norm(&sg));
        for k in 0..2 {
            println!(
                "|c{k}|={:.3e}  |Sc{k}|={:.3e}  ratio={:.3e}",
                norm(&dens[k]),
                norm(&filt[k]),
                norm(&filt[k]) / norm(&dens[k])
            );
        }

        // S-weighted constraint Gram: entries, eigenvalues, angle.
        let gamma = GammaMatrix::assemble(&dens, &filt, dw);
        let m = gamma.matrix();
        let (g11, g12, g22) = (m[[0, 0]], m[[0, 1]], m[[1, 1]]);
        let tr = g11 + g22;
        let disc = ((g11 - g22).powi(2) + 4.0 * g12 * g12).sqrt();
        let (l1, l2) = ((tr + disc) / 2.0, (tr - disc) / 2.0);
        println!(
            "Gram: [{:.6e} {:.6e}; . {:.6e}]  eig=({:.3e}, {:.3e})  ratio={:.3e}  cos(angle)={:+.9}",
            g11, g12, g22, l1, l2, l2 / l1, g12 / (g11 * g22).sqrt()
        );

        // Parity basis: c+ = (c1+c2)/2, c- = (c1-c2)/2.
        let cp = (&dens[0] + &dens[1]) * 0.5;
        let cm = (&dens[0] - &dens[1]) * 0.5;
        let (scp, scm) = (filter.smooth(&cp), filter.smooth(&cm));
        println!(
            "|c+|={:.3e} |Sc+|={:.3e}   |c-|={:.3e} |Sc-|={:.3e}",
            norm(&cp),
            norm(&scp),
            norm(&cm),
            norm(&scm)
        );
        println!(
            "align(c+, Sg)={:+.3e}  align(c-, Sg)={:+.3e}",
            winner(&cp, &sg, dw) / (norm(&cp) * norm(&sg)),
            winner(&cm, &sg, dw) / (norm(&cm) * norm(&sg))
        );

        // Current solve at the stall.
        let upd = constrained_update_direction(&g, &constraints, &filter, &field).unwrap();
        println!(
            "impl direction: rate={:+.3e}  align=({:+.3e}, {:+.3e})  reg={}",
            upd.objective_rate, upd.constraint_alignments[0], upd.constraint_alignments[1], upd.regularized
        );

        // Candidate directions, each normalised to max-abs 1, then a J line
        // scan at a 0.05 rad cap around the stall.
        let mut scans: Vec<(&str, Array1<f64>)> = Vec::new();
        scans.push(("impl   ", upd.direction.clone()));
        scans.push(("Sg     ", sg.clone()));
        // c- projection only (analytic parity regularisation).
        let coeff = winner(&dens[0], &sg, dw) - winner(&dens[1], &sg, dw);
        let denom = winner(&dens[0], &scm, dw) - winner(&dens[1], &scm, dw);
        let dminus = &sg - &(&scm * (coeff / denom));
        println!(
            "parity direction: rate={:+.3e}  align=({:+.3e}, {:+.3e})",
            winner(&g, &dminus, dw),
            winner(&dens[0], &dminus, dw) / (norm(&dens[0]) * norm(&dminus)),
            winner(&dens[1], &dminus, dw) / (norm(&dens[1]) * norm(&dminus))
        );
        scans.push(("parity ", dminus));
        scans.push(("raw g  ", g.clone()));
        let j0 = state.final_objective();
        for (name, dir) in &scans {
            let mx = dir.iter().fold(0.0f64, |m, &x| m.max(x.abs()));
            if mx == 0.0 {
                println!("{name}: zero direction");
                continue;
            }
            let unit = dir / mx;
            print!("scan {name}:");
            for gamma in [-0.05, -0.01, 0.01, 0.05, 0.2, 1.0] {
                let ph = &phase + &(&unit * gamma);
                let j = problem.objective(&ph).unwrap();
                print!("  {gamma:+.2}:{:+.2e}", j - j0);
            }
            println!();
        }
    }
}
