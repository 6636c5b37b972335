//! Uniform time and frequency grids with trapezoidal quadrature.
//!
//! All integrals in this crate are trapezoidal sums on these grids. The
//! frequency window for the pulse benchmark covers the carrier +- 5 spectral
//! widths so a Gaussian amplitude decays below 1e-5 of its peak at the edges,
//! and the time spacing must resolve the fastest spectral component (spacing
//! <= pi / omega_max).

use crate::error::CoreError;
use crate::scalar::Float;
use ndarray::Array1;

/// Default number of time samples on the control window.
pub const DEFAULT_TIME_POINTS: usize = 8192;
/// Default number of frequency samples across the spectral window.
pub const DEFAULT_FREQ_POINTS: usize = 512;
/// Default half-width of the spectral window in units of the spectral width.
pub const DEFAULT_HALFWIDTH_FACTOR: f64 = 5.0;

/// Uniform time grid on `[start, end]` with `n_points` samples.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid<T: Float> {
    start: T,
    end: T,
    n_points: usize,
}

/// Uniform angular-frequency grid on `[omega_min, omega_max]` (rad/fs).
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyGrid<T: Float> {
    omega_min: T,
    omega_max: T,
    n_points: usize,
}

impl<T: Float> TimeGrid<T> {
    /// Builds a grid; requires `end > start` and at least two samples.
    pub fn new(start: T, end: T, n_points: usize) -> Result<Self, CoreError> {
        if n_points < 2 {
            return Err(CoreError::InvalidGrid(format!(
                "time grid needs at least 2 points, got {n_points}"
            )));
        }
        if !(end > start) || !start.is_finite() || !end.is_finite() {
            return Err(CoreError::InvalidGrid(format!(
                "time grid needs finite end > start, got [{start}, {end}]"
            )));
        }
        Ok(TimeGrid { start, end, n_points })
    }

    pub fn start(&self) -> T {
        self.start
    }

    pub fn end(&self) -> T {
        self.end
    }

    /// Midpoint of the window.
    pub fn midpoint(&self) -> T {
        (self.start + self.end) / T::of(2.0)
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn spacing(&self) -> T {
        (self.end - self.start) / T::of_usize(self.n_points - 1)
    }

    pub fn value(&self, i: usize) -> T {
        self.start + self.spacing() * T::of_usize(i)
    }

    pub fn values(&self) -> Array1<T> {
        Array1::from_shape_fn(self.n_points, |i| self.value(i))
    }

    /// Trapezoidal weight of sample `i` (1/2 at the ends, 1 inside).
    pub fn weight(&self, i: usize) -> T {
        trapezoid_weight(i, self.n_points)
    }
}

impl<T: Float> FrequencyGrid<T> {
    /// Builds a grid; requires `omega_max > omega_min >= 0` and two samples.
    pub fn new(omega_min: T, omega_max: T, n_points: usize) -> Result<Self, CoreError> {
        if n_points < 2 {
            return Err(CoreError::InvalidGrid(format!(
                "frequency grid needs at least 2 points, got {n_points}"
            )));
        }
        if !(omega_max > omega_min) || omega_min < T::zero() {
            return Err(CoreError::InvalidGrid(format!(
                "frequency grid needs omega_max > omega_min >= 0, got [{omega_min}, {omega_max}]"
            )));
        }
        Ok(FrequencyGrid { omega_min, omega_max, n_points })
    }

    pub fn omega_min(&self) -> T {
        self.omega_min
    }

    pub fn omega_max(&self) -> T {
        self.omega_max
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn spacing(&self) -> T {
        (self.omega_max - self.omega_min) / T::of_usize(self.n_points - 1)
    }

    pub fn value(&self, i: usize) -> T {
        self.omega_min + self.spacing() * T::of_usize(i)
    }

    pub fn values(&self) -> Array1<T> {
        Array1::from_shape_fn(self.n_points, |i| self.value(i))
    }

    pub fn weight(&self, i: usize) -> T {
        trapezoid_weight(i, self.n_points)
    }
}

fn trapezoid_weight<T: Float>(i: usize, n: usize) -> T {
    if i == 0 || i + 1 == n {
        T::of(0.5)
    } else {
        T::one()
    }
}

/// Trapezoidal quadrature of uniformly sampled values.
pub fn trapezoid<T: Float>(values: &Array1<T>, spacing: T) -> T {
    let n = values.len();
    if n < 2 {
        return T::zero();
    }
    let mut acc = (values[0] + values[n - 1]) * T::of(0.5);
    for i in 1..n - 1 {
        acc += values[i];
    }
    acc * spacing
}

/// Trapezoid-weighted inner product of two sampled functions.
pub fn weighted_inner<T: Float>(a: &Array1<T>, b: &Array1<T>, spacing: T) -> T {
    debug_assert_eq!(a.len(), b.len());
    let n = a.len();
    let mut acc = T::zero();
    for i in 0..n {
        acc += trapezoid_weight::<T>(i, n) * a[i] * b[i];
    }
    acc * spacing
}

/// Parameters from which the benchmark grids are derived.
#[derive(Debug, Clone)]
pub struct GridSpec<T: Float> {
    /// Carrier angular frequency, rad/fs.
    pub carrier: T,
    /// Spectral width, rad/fs.
    pub width: T,
    /// Control horizon, fs; the time window is `[-horizon/2, +horizon/2]`,
    /// symmetric about the synthesis time origin.
    pub horizon: T,
    /// Number of time samples.
    pub time_points: usize,
    /// Number of frequency samples.
    pub freq_points: usize,
    /// Spectral window half-width in units of `width` (>= 5).
    pub halfwidth_factor: T,
}

impl<T: Float> GridSpec<T> {
    /// Benchmark defaults for a given carrier/width/horizon.
    pub fn with_defaults(carrier: T, width: T, horizon: T) -> Self {
        GridSpec {
            carrier,
            width,
            horizon,
            time_points: DEFAULT_TIME_POINTS,
            freq_points: DEFAULT_FREQ_POINTS,
            halfwidth_factor: T::of(DEFAULT_HALFWIDTH_FACTOR),
        }
    }
}

/// Builds the time and frequency grids for a control problem.
///
/// The frequency window is `carrier +- halfwidth_factor * width`, clipped
/// requirements: the half-width factor must be at least 5 (so a Gaussian
/// amplitude decays below 1e-5 at the edges) and the time spacing must
/// satisfy the sampling bound `spacing <= pi / omega_max`.
pub fn make_grids<T: Float>(spec: &GridSpec<T>) -> Result<(TimeGrid<T>, FrequencyGrid<T>), CoreError> {
    if spec.halfwidth_factor < T::of(5.0) {
        return Err(CoreError::InvalidGrid(format!(
            "spectral half-width factor must be >= 5, got {}",
            spec.halfwidth_factor
        )));
    }
    if !(spec.width > T::zero()) || !(spec.carrier > T::zero()) {
        return Err(CoreError::InvalidGrid(format!(
            "carrier and width must be positive, got carrier={} width={}",
            spec.carrier, spec.width
        )));
    }
    let halfwidth = spec.halfwidth_factor * spec.width;
    let omega_min = spec.carrier - halfwidth;
    let omega_max = spec.carrier + halfwidth;
    if omega_min < T::zero() {
        return Err(CoreError::InvalidGrid(format!(
            "spectral window extends below zero frequency (omega_min = {omega_min})"
        )));
    }
    let half_horizon = spec.horizon * T::of(0.5);
    let time = TimeGrid::new(-half_horizon, half_horizon, spec.time_points)?;
    let freq = FrequencyGrid::new(omega_min, omega_max, spec.freq_points)?;
    let nyquist = T::PI() / omega_max;
    if time.spacing() > nyquist {
        return Err(CoreError::InvalidGrid(format!(
            "time spacing {} exceeds sampling bound pi/omega_max = {}",
            time.spacing(),
            nyquist
        )));
    }
    Ok((time, freq))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::{benchmark, UnitSystem};

    fn benchmark_spec() -> GridSpec<f64> {
        let u = UnitSystem::<f64>::default();
        GridSpec::with_defaults(
            u.wavenumber_to_angular_frequency(benchmark::CARRIER_INVCM),
            u.wavenumber_to_angular_frequency(benchmark::WIDTH_INVCM),
            benchmark::HORIZON_FS,
        )
    }

    // pi / (omega0 + 5*width), frozen from independent 30-digit arithmetic.
    const ORACLE_NYQUIST_FS: f64 = 1.2278734270711627;
    // Mass of a unit Gaussian outside +-5 sigma: erfc(5/sqrt(2)).
    const ORACLE_TAIL_MASS: f64 = 5.7330314375838782e-7;

    #[test]
    fn default_grids_satisfy_sampling_bound() {
        let (time, freq) = make_grids(&benchmark_spec()).unwrap();
        assert!((1.0 / (freq.omega_max() / std::f64::consts::PI) - ORACLE_NYQUIST_FS).abs() < 1e-12);
        assert!(time.spacing() <= ORACLE_NYQUIST_FS);
        assert_eq!(time.n_points(), DEFAULT_TIME_POINTS);
        assert_eq!(freq.n_points(), DEFAULT_FREQ_POINTS);
    }

    #[test]
    fn single_point_grid_is_rejected() {
        assert!(TimeGrid::<f64>::new(0.0, 200.0, 1).is_err());
        assert!(FrequencyGrid::<f64>::new(1.0, 2.0, 1).is_err());
    }

    #[test]
    fn nyquist_violation_is_rejected() {
        let mut spec = benchmark_spec();
        spec.time_points = 16; // spacing 13.3 fs >> 1.23 fs
        let err = make_grids(&spec).err().unwrap();
        assert!(matches!(err, CoreError::InvalidGrid(_)));
    }

    #[test]
    fn narrow_spectral_window_is_rejected() {
        let mut spec = benchmark_spec();
        spec.halfwidth_factor = 3.0;
        assert!(make_grids(&spec).is_err());
    }

    #[test]
    fn gaussian_quadrature_matches_analytic_integral() {
        // Unit-integral Gaussian over the +-5 sigma window: the trapezoid sum
        // must match the analytic value 1 - tail to relative error < 1e-6.
        let spec = benchmark_spec();
        let (_, freq) = make_grids(&spec).unwrap();
        let w0 = spec.carrier;
        let dw = spec.width;
        let norm = 1.0 / ((2.0 * std::f64::consts::PI).sqrt() * dw);
        let g = freq.values().mapv(|w| norm * (-((w - w0) / dw).powi(2) / 2.0).exp());
        let sum = trapezoid(&g, freq.spacing());
        let analytic = 1.0 - ORACLE_TAIL_MASS;
        assert!(
            (sum - analytic).abs() / analytic < 1e-6,
            "quadrature {sum} vs analytic {analytic}"
        );
    }

    #[test]
    fn gaussian_edge_amplitude_below_1e5_of_peak() {
        let spec = benchmark_spec();
        let (_, freq) = make_grids(&spec).unwrap();
        let w0 = spec.carrier;
        let dw = spec.width;
        let edge = (-((freq.omega_min() - w0) / dw).powi(2) / 2.0).exp();
        assert!(edge < 1e-5, "edge/peak = {edge}");
    }

    #[test]
    fn trapezoid_weights_sum_to_span() {
        let grid = TimeGrid::<f64>::new(0.0, 200.0, 101).unwrap();
        let total: f64 = (0..grid.n_points()).map(|i| grid.weight(i)).sum::<f64>() * grid.spacing();
        assert!((total - 200.0).abs() < 1e-12);
        assert_eq!(grid.weight(0), 0.5);
        assert_eq!(grid.weight(100), 0.5);
        assert_eq!(grid.weight(50), 1.0);
    }

    #[test]
    fn weighted_inner_matches_trapezoid() {
        let grid = TimeGrid::<f64>::new(0.0, 1.0, 64).unwrap();
        let a = grid.values().mapv(|t| (2.0 * t).sin());
        let b = grid.values().mapv(|t| (0.5 * t).cos());
        let prod = &a * &b;
        let left = weighted_inner(&a, &b, grid.spacing());
        let right = trapezoid(&prod, grid.spacing());
        assert!((left - right).abs() < 1e-14);
    }

    #[test]
    fn benchmark_window_is_symmetric_about_zero() {
        let (time, _) = make_grids(&benchmark_spec()).unwrap();
        assert!((time.start() + 100.0).abs() < 1e-12);
        assert!((time.end() - 100.0).abs() < 1e-12);
        assert!(time.midpoint().abs() < 1e-12);
    }
}
