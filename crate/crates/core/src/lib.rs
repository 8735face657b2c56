//! Walsh reconstruction of time-varying fields with a dynamically decoupled
//! qubit sensor.
//!
//! A sequence of π-pulses applied at the zero crossings of a Walsh function
//! turns the sensor's free evolution into a ±1 digital filter, so the phase
//! it accumulates over a period `T` is proportional to one Walsh coefficient
//! of the field: `φ_m(T) = γ_e·T·b̂(m)`. Measuring the first `N = 2ⁿ`
//! coefficients and applying the inverse Walsh transform yields an `N`-point
//! piecewise-constant estimate of the field with a quantifiable truncation
//! error and shot-noise-limited amplitude resolution.
//!
//! The crate provides the pieces of that pipeline:
//!
//! * [`walsh`] — Walsh/Rademacher functions, sequency/Paley/Hadamard
//!   orderings, switching (π-pulse) times, the fast Walsh-Hadamard transform,
//!   quadrature Walsh coefficients, and the truncation-error bound.
//! * [`waveform`] — parametric and sampled field models, including the
//!   skew-normal action-potential impulse and the waveguide conversion
//!   `b = −c·dΦ/dt`.
//! * [`sensor`] — phase accumulation, decoherence-limited visibility, and
//!   Monte-Carlo photon-counting readout for amplitude and read-out-phase
//!   sweeps.
//! * [`estimation`] — weighted nonlinear least-squares coefficient fits with
//!   confidence intervals, sensitivity formulas, and the comparison against
//!   sequential (Ramsey) acquisition.
//! * [`reconstruct`] — inverse-transform reconstruction, l2 error, top-k
//!   compression, and CPMG/PDD subset analysis.
//!
//! All operations are pure functions of their inputs; simulations draw from
//! per-task [`rng`] streams, so runs are reproducible for a fixed seed and
//! safely parallelizable.

pub mod error;
pub mod estimation;
pub mod reconstruct;
pub mod rng;
pub mod sensor;
pub mod walsh;
pub mod waveform;

pub use error::{Error, Result};
pub use estimation::{
    amplitude_resolution, compare_sequential, fit_cosine_phase, fit_slope_origin,
    CoefficientEstimate, ComparisonOptions, SequenceSensitivity, SequentialComparison,
};
pub use reconstruct::{l2_error, reconstruct, Reconstruction, SubsetTag};
pub use sensor::{
    accumulated_phase, acquire_curve, signal_expectation, simulate_readout, MeasurementCurve,
    ReadoutMode, Repetitions, SensorModel, SweepVariable, GAMMA_E_RAD_PER_US_NT,
};
pub use walsh::{
    convert_index, fwht, hadamard_matrix, inverse_walsh, rademacher, switching_times,
    truncation_bound, walsh, walsh_cells, walsh_cells_in_order, walsh_coefficient,
    walsh_in_order, walsh_spectrum_of, DigitalFilter, Ordering, WalshIndex, WalshSpectrum,
};
pub use waveform::{
    max_abs_derivative, radiated_field, skew_normal_phi, NeuronConversion, Tone, Waveform,
};
