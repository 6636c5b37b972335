//! Spectral pulse representation and time-domain synthesis.
//!
//! A field is stored as a non-negative amplitude `A(omega)` and a phase
//! `phi(omega)` on a frequency grid; the temporal field is the real part of
//! the one-sided sum `sum_j A_j exp(-i(phi_j + omega_j t)) dw` with
//! trapezoidal weights. A flat spectral phase therefore peaks at t = 0, so
//! control windows are symmetric about zero: the transform-limited pulse
//! sits at the window center and both window endpoints carry meaningful
//! turn-on/turn-off constraints.

use crate::error::CoreError;
use crate::grid::{FrequencyGrid, TimeGrid};
use crate::linalg::solve_dense;
use crate::scalar::Float;
use crate::units::{benchmark, UnitSystem};
use ndarray::{Array1, Array2};
use num_complex::Complex;

/// A spectral-domain field: amplitude and phase samples on a frequency grid.
#[derive(Debug, Clone)]
pub struct SpectralField<T: Float> {
    grid: FrequencyGrid<T>,
    amplitude: Array1<T>,
    phase: Array1<T>,
}

impl<T: Float> SpectralField<T> {
    /// Validates lengths, non-negative amplitude, and finiteness.
    pub fn new(
        grid: FrequencyGrid<T>,
        amplitude: Array1<T>,
        phase: Array1<T>,
    ) -> Result<Self, CoreError> {
        let n = grid.n_points();
        if amplitude.len() != n || phase.len() != n {
            return Err(CoreError::DimensionMismatch(format!(
                "amplitude/phase lengths {}/{} do not match {} grid points",
                amplitude.len(),
                phase.len(),
                n
            )));
        }
        if amplitude.iter().any(|a| !a.is_finite()) || phase.iter().any(|p| !p.is_finite()) {
            return Err(CoreError::NonFinite("field samples must be finite".into()));
        }
        if amplitude.iter().any(|&a| a < T::zero()) {
            return Err(CoreError::InvalidParameter(
                "amplitude must be non-negative".into(),
            ));
        }
        Ok(SpectralField {
            grid,
            amplitude,
            phase,
        })
    }

    pub fn grid(&self) -> &FrequencyGrid<T> {
        &self.grid
    }

    pub fn amplitude(&self) -> &Array1<T> {
        &self.amplitude
    }

    pub fn phase(&self) -> &Array1<T> {
        &self.phase
    }

    /// The same amplitude with a replacement phase.
    pub fn with_phase(&self, phase: Array1<T>) -> Result<Self, CoreError> {
        SpectralField::new(self.grid.clone(), self.amplitude.clone(), phase)
    }

    /// Quadrature-weighted peak of the envelope: `sum_j A_j w_j dw`, the
    /// temporal field reached at t = 0 under a flat phase.
    pub fn envelope_peak(&self) -> T {
        let dw = self.grid.spacing();
        let mut acc = T::zero();
        for j in 0..self.grid.n_points() {
            acc += self.amplitude[j] * self.grid.weight(j) * dw;
        }
        acc
    }
}

/// Result of a least-squares fit of the phase to `c + beta0 (omega - omega_c)^2`.
#[derive(Debug, Clone, Copy)]
pub struct ChirpFit<T: Float> {
    /// Quadratic chirp rate in fs^2.
    pub beta0: T,
    /// Center frequency of the fitted parabola, rad/fs.
    pub omega_c: T,
    /// Constant phase offset at the parabola vertex, radians.
    pub constant_shift: T,
    /// Weighted coefficient of determination, clamped to [0, 1].
    pub r_squared: T,
}

/// The Gaussian benchmark spectrum: peak field 3.6e6 V/cm, carrier
/// 12698 cm^-1, width 177 cm^-1, flat zero phase, all in internal units.
/// The amplitude is normalized so its frequency integral equals the peak
/// field.
pub fn gaussian_benchmark_amplitude<T: Float>(grid: &FrequencyGrid<T>) -> SpectralField<T> {
    let units = UnitSystem::<T>::default();
    let e0 = units.field_to_internal(T::of(benchmark::PEAK_FIELD_VCM));
    let w0 = units.wavenumber_to_angular_frequency(T::of(benchmark::CARRIER_INVCM));
    let dw = units.wavenumber_to_angular_frequency(T::of(benchmark::WIDTH_INVCM));
    let half = T::of(0.5);
    let norm = e0 / ((T::of(2.0) * T::PI()).sqrt() * dw);
    let amplitude = grid.values().mapv(|w| {
        let x = (w - w0) / dw;
        norm * (-half * x * x).exp()
    });
    let phase = Array1::zeros(grid.n_points());
    SpectralField::new(grid.clone(), amplitude, phase).expect("benchmark amplitude is valid")
}

/// Complex one-sided synthesis on a time grid: the analytic signal whose
/// real part is the physical field and whose modulus is the envelope.
pub fn synthesize_analytic<T: Float>(
    field: &SpectralField<T>,
    grid: &TimeGrid<T>,
) -> Array1<Complex<T>> {
    let n_t = grid.n_points();
    let n_w = field.grid.n_points();
    let dw = field.grid.spacing();
    let dt = grid.spacing();
    let mut out = Array1::from_elem(n_t, Complex::new(T::zero(), T::zero()));
    for j in 0..n_w {
        let w = field.grid.value(j);
        let weight = field.amplitude[j] * field.grid.weight(j) * dw;
        if weight == T::zero() {
            continue;
        }
        // Phasor at t_0, advanced by a fixed rotation per node. The
        // recurrence costs one complex multiply per sample and drifts only
        // by rounding, far below the quadrature error.
        let mut z = Complex::from_polar(weight, -(field.phase[j] + w * grid.start()));
        let step = Complex::from_polar(T::one(), -w * dt);
        for i in 0..n_t {
            out[i] += z;
            z *= step;
        }
    }
    out
}

/// Temporal field samples on a time grid (real part of the one-sided sum).
pub fn synthesize<T: Float>(field: &SpectralField<T>, grid: &TimeGrid<T>) -> Array1<T> {
    synthesize_analytic(field, grid).mapv(|z| z.re)
}

/// The temporal field at a single time, with the same quadrature as
/// [`synthesize`].
pub fn field_endpoint<T: Float>(field: &SpectralField<T>, t: T) -> T {
    let dw = field.grid.spacing();
    let mut acc = T::zero();
    for j in 0..field.grid.n_points() {
        let w = field.grid.value(j);
        acc += field.amplitude[j]
            * field.grid.weight(j)
            * dw
            * (field.phase[j] + w * t).cos();
    }
    acc
}

/// Weighted least-squares fit of the phase to `c + beta0 (omega - omega_c)^2`.
///
/// With `weight_by_amplitude` set, each sample is weighted by `A(omega)^2`,
/// so the fit reflects the phase only where the spectrum has support. The
/// fit solves for a general quadratic polynomial on a centered, scaled
/// frequency axis and maps the coefficients back; a vanishing quadratic
/// coefficient reports `beta0 = 0` with the weighted mean frequency as the
/// center.
pub fn fit_quadratic_phase<T: Float>(
    field: &SpectralField<T>,
    weight_by_amplitude: bool,
) -> Result<ChirpFit<T>, CoreError> {
    let n = field.grid.n_points();
    if field.amplitude.iter().all(|&a| a == T::zero()) {
        return Err(CoreError::InvalidParameter(
            "cannot fit the phase of an identically zero amplitude".into(),
        ));
    }
    let weights: Vec<T> = (0..n)
        .map(|j| {
            if weight_by_amplitude {
                field.amplitude[j] * field.amplitude[j]
            } else {
                T::one()
            }
        })
        .collect();
    let effective = weights.iter().filter(|&&w| w > T::zero()).count();
    if effective < 3 {
        return Err(CoreError::InvalidParameter(format!(
            "quadratic fit needs at least 3 weighted samples, got {effective}"
        )));
    }

    let total: T = weights.iter().copied().sum();
    let mean_w: T = (0..n)
        .map(|j| weights[j] * field.grid.value(j))
        .sum::<T>()
        / total;
    let var_w: T = (0..n)
        .map(|j| {
            let d = field.grid.value(j) - mean_w;
            weights[j] * d * d
        })
        .sum::<T>()
        / total;
    let scale = var_w.sqrt().max(T::epsilon());

    // Normal equations for phi ~ p0 + p1 x + p2 x^2 on x = (w - mean)/scale.
    let mut m = Array2::<T>::zeros((3, 3));
    let mut rhs = Array1::<T>::zeros(3);
    for j in 0..n {
        if weights[j] == T::zero() {
            continue;
        }
        let x = (field.grid.value(j) - mean_w) / scale;
        let basis = [T::one(), x, x * x];
        for r in 0..3 {
            for c in 0..3 {
                m[[r, c]] += weights[j] * basis[r] * basis[c];
            }
            rhs[r] += weights[j] * basis[r] * field.phase[j];
        }
    }
    let p = solve_dense(m, rhs)?;

    // Back to phi = a w^2 + b w + d, then to vertex form.
    let a = p[2] / (scale * scale);
    let b = p[1] / scale - T::of(2.0) * a * mean_w;
    let d = p[0] - p[1] * mean_w / scale + p[2] * mean_w * mean_w / (scale * scale);

    // A curvature this far below the phase scale over the window is noise,
    // not chirp; report a flat fit centered at the weighted mean.
    let phase_scale = (0..n)
        .map(|j| field.phase[j].abs())
        .fold(T::one(), |acc, v| acc.max(v));
    let curvature_floor = T::epsilon() * T::of(1e3) * phase_scale / (var_w + T::epsilon());
    let (beta0, omega_c, constant_shift) = if a.abs() <= curvature_floor {
        (T::zero(), mean_w, rhs_mean(&weights, &field.phase, total))
    } else {
        let omega_c = -b / (T::of(2.0) * a);
        (a, omega_c, d - b * b / (T::of(4.0) * a))
    };

    // Weighted r^2 against the fitted parabola.
    let mut ss_res = T::zero();
    let mut ss_tot = T::zero();
    let phase_mean = rhs_mean(&weights, &field.phase, total);
    for j in 0..n {
        if weights[j] == T::zero() {
            continue;
        }
        let w = field.grid.value(j);
        let dev = w - omega_c;
        let fitted = constant_shift + beta0 * dev * dev;
        let r = field.phase[j] - fitted;
        let c = field.phase[j] - phase_mean;
        ss_res += weights[j] * r * r;
        ss_tot += weights[j] * c * c;
    }
    // Phase variation at the rounding floor means a constant phase, which
    // the constant term fits perfectly.
    let tot_floor = T::epsilon() * T::of(64.0) * total * phase_scale * phase_scale;
    let r_squared = if ss_tot > tot_floor {
        (T::one() - ss_res / ss_tot).max(T::zero()).min(T::one())
    } else {
        T::one()
    };

    Ok(ChirpFit {
        beta0,
        omega_c,
        constant_shift,
        r_squared,
    })
}

fn rhs_mean<T: Float>(weights: &[T], phase: &Array1<T>, total: T) -> T {
    let mut acc = T::zero();
    for j in 0..weights.len() {
        acc += weights[j] * phase[j];
    }
    acc / total
}
