use ndarray::{Array1, Array2};
use num_complex::Complex;
use qcontrol_core::linalg::eigh_symmetric;
use qcontrol_core::quantum::rb_benchmark_system;

const W177: f64 = 0.033340632741366703;
const W0: f64 = 2.391860760168782;
const E0: f64 = 0.028942621602223227;

fn field(t: f64, tc: f64) -> f64 {
    let tau0 = 1.0 / W177;
    let x = t - tc;
    E0 * (-x * x / (2.0 * tau0 * tau0)).exp() * (W0 * x).cos()
}

fn expm(h: &Array2<f64>, dt: f64) -> Array2<Complex<f64>> {
    let (vals, vecs) = eigh_symmetric(h).unwrap();
    let dim = vals.len();
    let mut out = Array2::from_elem((dim, dim), Complex::new(0.0, 0.0));
    for k in 0..dim {
        let phase = Complex::from_polar(1.0, -vals[k] * dt);
        for r in 0..dim {
            for c in 0..dim {
                out[[r, c]] += phase * vecs[[r, k]] * vecs[[c, k]];
            }
        }
    }
    out
}

fn hmat(sys: &qcontrol_core::quantum::QuantumSystem<f64>, e: f64) -> Array2<f64> {
    let dim = sys.dim();
    let mut h = Array2::zeros((dim, dim));
    for r in 0..dim {
        for c in 0..dim {
            h[[r, c]] = -sys.dipole()[[r, c]] * e;
        }
        h[[r, r]] += sys.energies()[r];
    }
    h
}

fn run(n: usize, scheme: u8) -> [f64; 3] {
    let sys = rb_benchmark_system::<f64>();
    let t_end = 200.0;
    let dt = t_end / ((n - 1) as f64);
    let tc = 100.0;
    let mut u = Array2::from_elem((3, 3), Complex::new(0.0, 0.0));
    for i in 0..3 {
        u[[i, i]] = Complex::new(1.0, 0.0);
    }
    for i in 0..n - 1 {
        let t = dt * (i as f64);
        let step = match scheme {
            0 => {
                // node-averaged field
                let em = 0.5 * (field(t, tc) + field(t + dt, tc));
                expm(&hmat(&sys, em), dt)
            }
            1 => {
                // true midpoint field
                let em = field(t + 0.5 * dt, tc);
                expm(&hmat(&sys, em), dt)
            }
            _ => {
                // commutator-free 4th order, two Gauss points
                let c1 = 0.5 - 3f64.sqrt() / 6.0;
                let c2 = 0.5 + 3f64.sqrt() / 6.0;
                let a1 = (3.0 - 2.0 * 3f64.sqrt()) / 12.0;
                let a2 = (3.0 + 2.0 * 3f64.sqrt()) / 12.0;
                let h1 = hmat(&sys, field(t + c1 * dt, tc));
                let h2 = hmat(&sys, field(t + c2 * dt, tc));
                let g1 = &(&h1 * a1) + &(&h2 * a2);
                let g2 = &(&h1 * a2) + &(&h2 * a1);
                expm(&g1, dt).dot(&expm(&g2, dt))
            }
        };
        u = step.dot(&u);
    }
    [u[[0, 0]].norm_sqr(), u[[1, 0]].norm_sqr(), u[[2, 0]].norm_sqr()]
}

// 6-point Lagrange row for abscissa s measured from stencil base, nodes 0..=5.
fn lagrange6(s: f64) -> [f64; 6] {
    let mut w = [0.0; 6];
    for j in 0..6 {
        let mut num = 1.0;
        let mut den = 1.0;
        for m in 0..6 {
            if m != j {
                num *= s - m as f64;
                den *= j as f64 - m as f64;
            }
        }
        w[j] = num / den;
    }
    w
}

fn run_interp(n: usize) -> [f64; 3] {
    let sys = rb_benchmark_system::<f64>();
    let t_end = 200.0;
    let dt = t_end / ((n - 1) as f64);
    let tc = 100.0;
    let samples: Vec<f64> = (0..n).map(|i| field(dt * i as f64, tc)).collect();
    let c1 = 0.5 - 3f64.sqrt() / 6.0;
    let c2 = 0.5 + 3f64.sqrt() / 6.0;
    let a1 = (3.0 - 2.0 * 3f64.sqrt()) / 12.0;
    let a2 = (3.0 + 2.0 * 3f64.sqrt()) / 12.0;
    let gauss_at = |i: usize, c: f64| -> f64 {
        let b = (i as isize - 2).clamp(0, n as isize - 6) as usize;
        let s = (i - b) as f64 + c;
        let w = lagrange6(s);
        (0..6).map(|j| w[j] * samples[b + j]).sum()
    };
    let mut u = Array2::from_elem((3, 3), Complex::new(0.0, 0.0));
    for i in 0..3 {
        u[[i, i]] = Complex::new(1.0, 0.0);
    }
    for i in 0..n - 1 {
        let h1 = hmat(&sys, gauss_at(i, c1));
        let h2 = hmat(&sys, gauss_at(i, c2));
        let g1 = &(&h1 * a1) + &(&h2 * a2);
        let g2 = &(&h1 * a2) + &(&h2 * a1);
        u = expm(&g1, dt).dot(&expm(&g2, dt)).dot(&u);
    }
    [u[[0, 0]].norm_sqr(), u[[1, 0]].norm_sqr(), u[[2, 0]].norm_sqr()]
}

fn main() {
    println!("scheme cf4-interp (node samples, 6-pt Lagrange)");
    let mut prev: Option<[f64; 3]> = None;
    for n in [1024usize, 2048, 4096, 8192, 16384] {
        let t0 = std::time::Instant::now();
        let p = run_interp(n);
        let el = t0.elapsed().as_secs_f64();
        let d = prev
            .map(|q| (0..3).map(|i| (p[i] - q[i]).abs()).fold(0.0f64, f64::max))
            .unwrap_or(f64::NAN);
        println!("  n={n:6} p2={:.9} p3={:.9} D={d:.3e} ({el:.3}s)", p[1], p[2]);
        prev = Some(p);
    }
    for (scheme, name) in [(0u8, "node-avg"), (1, "midpoint"), (2, "cf4-gauss")] {
        println!("scheme {name}");
        let mut prev: Option<[f64; 3]> = None;
        for n in [1024usize, 2048, 4096, 8192, 16384] {
            let t0 = std::time::Instant::now();
            let p = run(n, scheme);
            let el = t0.elapsed().as_secs_f64();
            let d = prev
                .map(|q| (0..3).map(|i| (p[i] - q[i]).abs()).fold(0.0f64, f64::max))
                .unwrap_or(f64::NAN);
            println!("  n={n:6} p2={:.9} p3={:.9} D={d:.3e} ({el:.3}s)", p[1], p[2]);
            prev = Some(p);
        }
    }
}
