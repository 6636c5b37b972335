//! Numerical toolkit for designing shaped ultrafast laser fields that steer
//! small quantum systems.
//!
//! Two optimization engines are provided:
//!
//! * [`gradient_flow`] — a frequency-domain gradient flow over the spectral
//!   phase of a fixed-amplitude pulse, for systems with a known Hamiltonian.
//!   Updates are smoothed by a Gaussian spectral filter and projected so that
//!   equality constraints on the temporal field (for example, zero field at
//!   the window edges) are preserved while the objective never decreases.
//! * [`msde`] — a mixed-strategy differential evolution optimizer for
//!   black-box objectives, drawing one of four classic mutation strategies
//!   per target vector with stochastic control parameters.
//!
//! Supporting modules: [`units`] (input unit conversions and the three-level
//! benchmark constants), [`grid`] (uniform time/frequency grids and
//! trapezoidal quadrature), [`quantum`] (states, observables, and a unitary
//! exponential-split propagator), [`pulse`] (spectral fields, synthesis,
//! and quadratic-phase fitting), and [`objectives`] (state-transfer,
//! two-photon-absorption, and surrogate-ratio objectives, including a
//! simulated grouped-pixel pulse shaper).
//!
//! All numerical code is generic over the scalar type through the
//! [`scalar::Float`] trait; `f64` aliases for the main types are exported at
//! the crate root.

pub mod error;
pub mod gradient_flow;
pub mod grid;
pub mod linalg;
pub mod msde;
pub mod objectives;
pub mod pulse;
pub mod quantum;
pub mod scalar;
pub mod units;

pub use error::CoreError;
pub use scalar::Float;

/// Default-precision aliases for the main data types.
pub type UnitSystem64 = units::UnitSystem<f64>;
pub type TimeGrid64 = grid::TimeGrid<f64>;
pub type FrequencyGrid64 = grid::FrequencyGrid<f64>;
pub type QuantumSystem64 = quantum::QuantumSystem<f64>;
pub type StateVector64 = quantum::StateVector<f64>;
pub type Observable64 = quantum::Observable<f64>;
pub type PropagationResult64 = quantum::PropagationResult<f64>;
pub type SpectralField64 = pulse::SpectralField<f64>;
pub type ChirpFit64 = pulse::ChirpFit<f64>;
pub type FilterFunction64 = gradient_flow::FilterFunction<f64>;
pub type GradientFlowState64 = gradient_flow::GradientFlowState<f64>;
pub type Population64 = msde::Population<f64>;
pub type SearchSpace64 = msde::SearchSpace<f64>;
pub type StateTransferProblem64 = objectives::StateTransferProblem<f64>;
pub type ShaperProblem64 = objectives::ShaperProblem<f64>;

/// Single-precision aliases, demonstrating the generic scalar.
pub type SpectralField32 = pulse::SpectralField<f32>;
pub type QuantumSystem32 = quantum::QuantumSystem<f32>;
