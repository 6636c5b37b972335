//! Pilot: finite-difference agreement of the adjoint gradients vs grid size.

use ndarray::{Array1, Array2};
use qcontrol_core::gradient_flow::{amplitude_gradient, phase_gradient, temporal_gradient};
use qcontrol_core::grid::{make_grids, GridSpec};
use qcontrol_core::pulse::{gaussian_benchmark_amplitude, synthesize, SpectralField};
use qcontrol_core::quantum::{propagate, Observable, QuantumSystem, StateVector};
use qcontrol_core::units::{benchmark, UnitSystem};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

fn rb_system() -> QuantumSystem<f64> {
    let u = UnitSystem::<f64>::default();
    let energies = Array1::from(vec![
        u.energy_to_internal(benchmark::E1_INVCM),
        u.energy_to_internal(benchmark::E2_INVCM),
        u.energy_to_internal(benchmark::E3_INVCM),
    ]);
    let mut dipole = Array2::zeros((3, 3));
    let mu12 = u.dipole_to_internal(benchmark::MU12_AU);
    let mu13 = u.dipole_to_internal(benchmark::MU13_AU);
    dipole[[0, 1]] = mu12;
    dipole[[1, 0]] = mu12;
    dipole[[0, 2]] = mu13;
    dipole[[2, 0]] = mu13;
    QuantumSystem::new(energies, dipole).unwrap()
}

fn main() {
    let u = UnitSystem::<f64>::default();
    let system = rb_system();
    let psi0 = StateVector::<f64>::basis_state(3, 0).unwrap();
    let proj2 = Observable::<f64>::projector(3, 1).unwrap();

    let mut rng = ChaCha8Rng::seed_from_u64(77);

    for &n_t in &[8192usize, 16384, 32768] {
        let mut spec = GridSpec::with_defaults(
            u.wavenumber_to_angular_frequency(benchmark::CARRIER_INVCM),
            u.wavenumber_to_angular_frequency(benchmark::WIDTH_INVCM),
            benchmark::HORIZON_FS,
        );
        spec.time_points = n_t;
        let (tgrid, fgrid) = make_grids(&spec).unwrap();
        let base = gaussian_benchmark_amplitude(&fgrid);
        // Mildly structured phase so the gradient is generic.
        let phase = Array1::from_shape_fn(fgrid.n_points(), |j| {
            let w = fgrid.value(j) - u.wavenumber_to_angular_frequency(benchmark::CARRIER_INVCM);
            0.8 * (9.0 * w).sin() + 150.0 * w * w
        });
        let field = SpectralField::new(fgrid.clone(), base.amplitude().clone(), phase).unwrap();
        let samples = synthesize(&field, &tgrid);
        let result = propagate(&system, &samples, &tgrid).unwrap();
        let j0 = result.final_populations()[1];
        let tg = temporal_gradient(&system, &result, &psi0, &proj2).unwrap();

        let peak = field.envelope_peak();
        let dt = tgrid.spacing();
        // Temporal FD at interior samples inside the envelope support.
        let mut worst_t: f64 = 0.0;
        let gscale = tg.iter().fold(0.0f64, |m, &v| m.max(v.abs())) * dt;
        for _ in 0..8 {
            let frac = 0.25 + 0.5 * rng.gen::<f64>();
            let i = (frac * n_t as f64) as usize;
            let h = 1e-3 * peak;
            let mut plus = samples.clone();
            plus[i] += h;
            let mut minus = samples.clone();
            minus[i] -= h;
            let jp = propagate(&system, &plus, &tgrid).unwrap().final_populations()[1];
            let jm = propagate(&system, &minus, &tgrid).unwrap().final_populations()[1];
            let fd = (jp - jm) / (2.0 * h);
            let analytic = tg[i] * tgrid.weight(i) * dt;
            let rel = (fd - analytic).abs() / gscale;
            worst_t = worst_t.max(rel);
        }

        // Phase / amplitude FD at random bins with meaningful amplitude.
        let pg = phase_gradient(&field, &tg, &tgrid);
        let ag = amplitude_gradient(&field, &tg, &tgrid);
        let dw = fgrid.spacing();
        let pscale = pg.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
        let ascale = ag.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
        let mut worst_p: f64 = 0.0;
        let mut worst_a: f64 = 0.0;
        let amp_max = field.amplitude().iter().fold(0.0f64, |m, &v| m.max(v));
        for _ in 0..6 {
            let j = (fgrid.n_points() as f64 * (0.2 + 0.6 * rng.gen::<f64>())) as usize;
            let hp = 1e-4;
            let mut phi_p = field.phase().clone();
            phi_p[j] += hp;
            let mut phi_m = field.phase().clone();
            phi_m[j] -= hp;
            let fp = field.with_phase(phi_p).unwrap();
            let fm = field.with_phase(phi_m).unwrap();
            let jp = propagate(&system, &synthesize(&fp, &tgrid), &tgrid)
                .unwrap()
                .final_populations()[1];
            let jm = propagate(&system, &synthesize(&fm, &tgrid), &tgrid)
                .unwrap()
                .final_populations()[1];
            let fd = (jp - jm) / (2.0 * hp);
            let analytic = pg[j] * fgrid.weight(j) * dw;
            worst_p = worst_p.max((fd - analytic).abs() / (pscale * fgrid.weight(j) * dw));

            let ha = (1e-3 * amp_max).min(0.9 * field.amplitude()[j]).max(1e-6 * amp_max);
            let mut amp_p = field.amplitude().clone();
            amp_p[j] += ha;
            let mut amp_m = field.amplitude().clone();
            amp_m[j] -= ha;
            let fpa =
                SpectralField::new(fgrid.clone(), amp_p, field.phase().clone()).unwrap();
            let fma =
                SpectralField::new(fgrid.clone(), amp_m, field.phase().clone()).unwrap();
            let jpa = propagate(&system, &synthesize(&fpa, &tgrid), &tgrid)
                .unwrap()
                .final_populations()[1];
            let jma = propagate(&system, &synthesize(&fma, &tgrid), &tgrid)
                .unwrap()
                .final_populations()[1];
            let fda = (jpa - jma) / (2.0 * ha);
            let analytic_a = ag[j] * fgrid.weight(j) * dw;
            worst_a = worst_a.max((fda - analytic_a).abs() / (ascale * fgrid.weight(j) * dw));
        }
        println!(
            "n_t={n_t:6}  J={j0:.9}  temporal_rel={worst_t:.3e}  phase_rel={worst_p:.3e}  amp_rel={worst_a:.3e}"
        );
    }
}
