//! Pilot: differential-evolution efficacy on the sphere, the TPA shaper,
//! and the nested-box surrogate sweep.

use ndarray::ArrayView1;
use qcontrol_core::msde::{run_msde, SearchSpace};
use qcontrol_core::objectives::{ShaperProblem, SurrogateRatio};
use std::time::Instant;

fn main() {
    let mode = std::env::args().nth(1).unwrap_or_else(|| "sphere".into());
    match mode.as_str() {
        "sphere" => sphere(),
        "tpa" => tpa(),
        "boxes" => boxes(),
        other => eprintln!("unknown mode {other}"),
    }
}

fn sphere() {
    let space = SearchSpace::<f64>::uniform_box(10, -5.0, 5.0).unwrap();
    for seed in [1u64, 7, 42, 2024] {
        let t0 = Instant::now();
        let out = run_msde(
            |x: ArrayView1<f64>| Ok(-x.dot(&x)),
            &space,
            30,
            300,
            seed,
        )
        .unwrap();
        println!(
            "sphere seed={seed:4}  best={:+.3e}  gen50={:+.3e}  gen150={:+.3e}  {:.2}s",
            out.best_fitness,
            out.trace[50].best,
            out.trace[150].best,
            t0.elapsed().as_secs_f64()
        );
    }
}

fn tpa() {
    let shaper = ShaperProblem::<f64>::benchmark().unwrap();
    let flat = shaper.flat_tpa();
    let space = SearchSpace::<f64>::uniform_box(shaper.groups(), 0.0, std::f64::consts::TAU).unwrap();
    let t0 = Instant::now();
    let out = run_msde(
        |x: ArrayView1<f64>| shaper.evaluate_tpa(&x.to_owned()),
        &space,
        30,
        1000,
        7,
    )
    .unwrap();
    for g in [0usize, 100, 300, 500, 700, 1000] {
        println!(
            "tpa gen {g:4}: best/flat = {:.6}",
            out.trace[g].best / flat
        );
    }
    println!(
        "tpa final best/flat = {:.6}  elapsed {:.1}s",
        out.best_fitness / flat,
        t0.elapsed().as_secs_f64()
    );
}

fn boxes() {
    let t0 = Instant::now();
    for &(hi, label) in &[
        (std::f64::consts::TAU, "2pi "),
        (std::f64::consts::PI, "pi  "),
        (std::f64::consts::FRAC_PI_2, "pi/2"),
        (std::f64::consts::FRAC_PI_4, "pi/4"),
    ] {
        let shaper = ShaperProblem::<f64>::benchmark().unwrap();
        let surrogate = SurrogateRatio::new(shaper, 99);
        let space = SearchSpace::<f64>::uniform_box(80, 0.0, hi).unwrap();
        let out = run_msde(
            |x: ArrayView1<f64>| surrogate.evaluate(&x.to_owned()),
            &space,
            30,
            400,
            7,
        )
        .unwrap();
        println!(
            "box [0, {label}]  best = {:.4}  gen100 = {:.4}  {:.0}s",
            out.best_fitness,
            out.trace[100].best,
            t0.elapsed().as_secs_f64()
        );
    }
}
