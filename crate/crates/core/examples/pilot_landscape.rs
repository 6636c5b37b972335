//! Pilot: objective landscape along the pure-chirp phase family.
//!
//! For each curvature beta0 the spectral phase is `beta0 (w - w0)^2` plus a
//! constant-plus-linear correction `a + b (w - w0)` chosen so both
//! window-endpoint field values vanish. The correction never changes the
//! fitted curvature, so this walks the feasible chirp family directly.

use ndarray::Array1;
use qcontrol_core::gradient_flow::PhaseControlProblem;
use qcontrol_core::objectives::StateTransferProblem;
use qcontrol_core::pulse::field_endpoint;

const CAP_FRACTION: f64 = 1e-3;

/// Newton's method in (a, b) from one start; returns the corrected phase and
/// its worst endpoint residual, or None if it fails to reach the cap.
fn pin_from(
    problem: &StateTransferProblem<f64>,
    base: &Array1<f64>,
    cap: f64,
    mut a: f64,
    mut b: f64,
) -> Option<(f64, f64)> {
    let grid = problem.frequency_grid();
    let w0 = grid.value(grid.n_points() / 2);
    let (t0, t1) = (problem.time_grid().start(), problem.time_grid().end());
    let residuals = |a: f64, b: f64| -> (f64, f64) {
        let ph = Array1::from_shape_fn(base.len(), |j| {
            base[j] + a + b * (grid.value(j) - w0)
        });
        let f = problem.field(&ph).unwrap();
        (field_endpoint(&f, t0), field_endpoint(&f, t1))
    };
    for _ in 0..60 {
        let (r0, r1) = residuals(a, b);
        if r0.abs().max(r1.abs()) <= 0.02 * cap {
            return Some((a, b));
        }
        let (ha, hb) = (1e-4, 1e-3);
        let (r0a, r1a) = residuals(a + ha, b);
        let (r0b, r1b) = residuals(a, b + hb);
        let j00 = (r0a - r0) / ha;
        let j01 = (r0b - r0) / hb;
        let j10 = (r1a - r1) / ha;
        let j11 = (r1b - r1) / hb;
        let det = j00 * j11 - j01 * j10;
        if det.abs() < 1e-30 {
            return None;
        }
        let da = (-r0 * j11 + r1 * j01) / det;
        let db = (-r1 * j00 + r0 * j10) / det;
        let scale = (0.5 / da.abs().max(1e-300)).min(5.0 / db.abs().max(1e-300)).min(1.0);
        a += scale * da;
        b += scale * db;
    }
    None
}

fn main() {
    let betas: Vec<f64> = std::env::var("BETAS")
        .map(|s| s.split(',').map(|x| x.parse().unwrap()).collect())
        .unwrap_or_else(|_| (-18..=18).map(|k| 500.0 * k as f64).collect());
    for target in [1usize, 2] {
        let problem = StateTransferProblem::<f64>::benchmark(target, 8192).unwrap();
        let grid = problem.frequency_grid().clone();
        let w0 = grid.value(grid.n_points() / 2);
        let peak = problem
            .field(&Array1::zeros(grid.n_points()))
            .unwrap()
            .envelope_peak();
        let cap = CAP_FRACTION * peak;
        println!("target={target}");
        for &beta0 in &betas {
            let base = Array1::from_shape_fn(grid.n_points(), |j| {
                let d = grid.value(j) - w0;
                beta0 * d * d
            });
            // Multi-start pinning: distinct (a, b) roots shift the carrier
            // phase and the window cut differently, so keep the best J.
            // UNPINNED=1 drops the endpoint conditions and scans the delay
            // knob directly instead.
            let mut roots: Vec<(f64, f64)> = Vec::new();
            if std::env::var("UNPINNED").is_ok() {
                for k in -10..=10 {
                    roots.push((0.0, 10.0 * k as f64));
                }
            } else {
                for bi in [-40.0, -20.0, 0.0, 20.0, 40.0] {
                    for ai in [0.0, 1.57, 3.14, 4.71] {
                        if let Some((a, b)) = pin_from(&problem, &base, cap, ai, bi) {
                            let an = a.rem_euclid(std::f64::consts::TAU);
                            if !roots.iter().any(|&(ra, rb)| {
                                (ra - an).abs() < 1e-3 && (rb - b).abs() < 1e-2
                            }) {
                                roots.push((an, b));
                            }
                        }
                    }
                }
            }
            if roots.is_empty() {
                println!("  beta0={beta0:+8.0}  (pinning failed)");
                continue;
            }
            if std::env::var("UNPINNED").is_err() {
                roots.truncate(6);
            }
            let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
            for &(a, b) in &roots {
                let ph = Array1::from_shape_fn(grid.n_points(), |j| {
                    base[j] + a + b * (grid.value(j) - w0)
                });
                let j = problem.objective(&ph).unwrap();
                if j > best.0 {
                    best = (j, a, b);
                }
            }
            println!(
                "  beta0={beta0:+8.0}  J={:.6}  roots={}  a={:+.3}  b={:+7.2} fs",
                best.0,
                roots.len(),
                best.1,
                best.2
            );
        }
    }
}
