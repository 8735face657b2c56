//! Time-varying field models on an acquisition period `[0, T)`.
//!
//! Units follow the measurement chain throughout: time in µs, magnetic field
//! in nT, tone frequencies in kHz, electric impulse amplitude in Vpp. The
//! waveguide conversion `b(t) = −c·dΦ/dt` uses `c` in µT·(Vpp·kHz)⁻¹ with the
//! bookkeeping µT·10³ = nT and kHz·µs = 1, so numerically
//! `b[nT] = −c·10³·dΦ/dt[Vpp/µs]`.

use crate::error::{Error, Result};

/// One tone of a polychromatic field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tone {
    pub rel_amplitude: f64,
    pub frequency_khz: f64,
    pub phase_rad: f64,
}

/// Waveguide conversion factor from an electric impulse to the radiated
/// magnetic field, `b(t) = −c·dΦ/dt`. The response is linear in frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeuronConversion {
    pub coefficient_ut_per_vpp_khz: f64,
}

impl Default for NeuronConversion {
    fn default() -> Self {
        NeuronConversion { coefficient_ut_per_vpp_khz: 25.4 }
    }
}

impl NeuronConversion {
    /// Numeric factor applied to `dΦ/dt` in Vpp/µs to obtain nT.
    fn nt_per_vpp_us(&self) -> f64 {
        self.coefficient_ut_per_vpp_khz * 1e3
    }
}

/// A time-varying field on `[0, T)`.
#[derive(Debug, Clone, PartialEq)]
pub enum Waveform {
    /// `b·sin(2πνt + α)`.
    Sinusoid { amplitude_nt: f64, frequency_khz: f64, phase_rad: f64 },
    /// `b·Σᵢ aᵢ·sin(2πνᵢt + αᵢ)`.
    Polychromatic { amplitude_nt: f64, components: Vec<Tone> },
    /// Skew-normal action-potential impulse `Φ(t)` in Vpp (location ξ,
    /// scale ω, shape α).
    SkewNormalAp { amplitude_vpp: f64, location_us: f64, scale_us: f64, shape: f64 },
    /// Uniformly sampled trace; linear interpolation between nodes, end
    /// values held at the edges.
    Sampled { times_us: Vec<f64>, values: Vec<f64> },
    /// Field radiated by a source impulse through the waveguide conversion.
    Derived { source: Box<Waveform>, conversion: NeuronConversion },
}

const TAU: f64 = std::f64::consts::TAU;

/// Standard normal density.
fn phi_std(x: f64) -> f64 {
    (-0.5 * x * x).exp() / TAU.sqrt()
}

/// Standard normal distribution function.
fn cdf_std(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Skew-normal impulse
/// `Φ(t) = A·(2/ω)·φ((t−ξ)/ω)·CDF(α·(t−ξ)/ω)`:
/// smooth and single-peaked, reducing to a Gaussian impulse at `α = 0`.
pub fn skew_normal_phi(
    t_us: f64,
    amplitude_vpp: f64,
    location_us: f64,
    scale_us: f64,
    shape: f64,
) -> Result<f64> {
    if scale_us <= 0.0 {
        return Err(Error::NonPositive { what: "scale", value: scale_us });
    }
    let z = (t_us - location_us) / scale_us;
    Ok(amplitude_vpp * (2.0 / scale_us) * phi_std(z) * cdf_std(shape * z))
}

/// d/dt of [`skew_normal_phi`].
fn skew_normal_phi_derivative(
    t_us: f64,
    amplitude_vpp: f64,
    location_us: f64,
    scale_us: f64,
    shape: f64,
) -> f64 {
    let z = (t_us - location_us) / scale_us;
    amplitude_vpp * (2.0 / (scale_us * scale_us))
        * (-z * phi_std(z) * cdf_std(shape * z) + shape * phi_std(z) * phi_std(shape * z))
}

impl Waveform {
    pub fn sinusoid(amplitude_nt: f64, frequency_khz: f64, phase_rad: f64) -> Self {
        Waveform::Sinusoid { amplitude_nt, frequency_khz, phase_rad }
    }

    pub fn polychromatic(amplitude_nt: f64, components: Vec<Tone>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::EmptyInput("polychromatic components"));
        }
        Ok(Waveform::Polychromatic { amplitude_nt, components })
    }

    pub fn skew_normal_ap(
        amplitude_vpp: f64,
        location_us: f64,
        scale_us: f64,
        shape: f64,
    ) -> Result<Self> {
        if scale_us <= 0.0 {
            return Err(Error::NonPositive { what: "scale", value: scale_us });
        }
        Ok(Waveform::SkewNormalAp { amplitude_vpp, location_us, scale_us, shape })
    }

    /// A uniformly sampled trace. Times must start near zero and be strictly
    /// increasing with uniform spacing; the implied period is `len·Δt`.
    pub fn sampled(times_us: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times_us.len() < 2 {
            return Err(Error::EmptyInput("sampled trace"));
        }
        if times_us.len() != values.len() {
            return Err(Error::LengthMismatch { left: times_us.len(), right: values.len() });
        }
        let dt = times_us[1] - times_us[0];
        if dt <= 0.0 {
            return Err(Error::NonPositive { what: "sample spacing", value: dt });
        }
        let tol = 1e-6 * dt;
        if times_us[0].abs() > tol {
            return Err(Error::TimeOutOfDomain { t: times_us[0], limit: tol });
        }
        for (i, w) in times_us.windows(2).enumerate() {
            if ((w[1] - w[0]) - dt).abs() > tol {
                return Err(Error::TimeOutOfDomain { t: times_us[i + 1], limit: dt });
            }
        }
        Ok(Waveform::Sampled { times_us, values })
    }

    /// Field value at `t` (µs → nT; the skew-normal arm yields Vpp).
    /// Parametric families evaluate analytically; sampled traces are linearly
    /// interpolated and held constant at the edges.
    pub fn evaluate(&self, t_us: f64) -> f64 {
        match self {
            Waveform::Sinusoid { amplitude_nt, frequency_khz, phase_rad } => {
                amplitude_nt * (TAU * frequency_khz * 1e-3 * t_us + phase_rad).sin()
            }
            Waveform::Polychromatic { amplitude_nt, components } => {
                amplitude_nt
                    * components
                        .iter()
                        .map(|c| {
                            c.rel_amplitude
                                * (TAU * c.frequency_khz * 1e-3 * t_us + c.phase_rad).sin()
                        })
                        .sum::<f64>()
            }
            Waveform::SkewNormalAp { amplitude_vpp, location_us, scale_us, shape } => {
                skew_normal_phi(t_us, *amplitude_vpp, *location_us, *scale_us, *shape)
                    .unwrap_or(f64::NAN)
            }
            Waveform::Sampled { times_us, values } => {
                let dt = times_us[1] - times_us[0];
                let u = (t_us - times_us[0]) / dt;
                if u <= 0.0 {
                    return values[0];
                }
                let i = u.floor() as usize;
                if i + 1 >= values.len() {
                    return *values.last().unwrap();
                }
                let frac = u - i as f64;
                values[i] * (1.0 - frac) + values[i + 1] * frac
            }
            Waveform::Derived { source, conversion } => {
                -conversion.nt_per_vpp_us() * source.derivative(t_us)
            }
        }
    }

    /// Time derivative at `t`. Analytic for the parametric families; for
    /// sampled traces the slope of the interpolant (a grid-spacing
    /// difference); derived fields differentiate their source numerically.
    pub fn derivative(&self, t_us: f64) -> f64 {
        match self {
            Waveform::Sinusoid { amplitude_nt, frequency_khz, phase_rad } => {
                let omega = TAU * frequency_khz * 1e-3;
                amplitude_nt * omega * (omega * t_us + phase_rad).cos()
            }
            Waveform::Polychromatic { amplitude_nt, components } => {
                amplitude_nt
                    * components
                        .iter()
                        .map(|c| {
                            let omega = TAU * c.frequency_khz * 1e-3;
                            c.rel_amplitude * omega * (omega * t_us + c.phase_rad).cos()
                        })
                        .sum::<f64>()
            }
            Waveform::SkewNormalAp { amplitude_vpp, location_us, scale_us, shape } => {
                skew_normal_phi_derivative(t_us, *amplitude_vpp, *location_us, *scale_us, *shape)
            }
            Waveform::Sampled { times_us, values } => {
                let dt = times_us[1] - times_us[0];
                let u = (t_us - times_us[0]) / dt;
                let i = (u.floor().max(0.0) as usize).min(values.len().saturating_sub(2));
                (values[i + 1] - values[i]) / dt
            }
            Waveform::Derived { source, conversion } => {
                // second derivative of the source, by central differences on
                // the source's own first derivative
                let h = source.natural_step();
                -conversion.nt_per_vpp_us()
                    * (source.derivative(t_us + h) - source.derivative(t_us - h))
                    / (2.0 * h)
            }
        }
    }

    /// A step small against the waveform's fastest feature, for numeric
    /// differentiation fallbacks.
    fn natural_step(&self) -> f64 {
        match self {
            Waveform::Sinusoid { frequency_khz, .. } => 1e-3 / (frequency_khz.abs().max(1e-9)),
            Waveform::Polychromatic { components, .. } => {
                let nu_max = components
                    .iter()
                    .map(|c| c.frequency_khz.abs())
                    .fold(1e-9, f64::max);
                1e-3 / nu_max
            }
            Waveform::SkewNormalAp { scale_us, .. } => scale_us * 1e-3,
            Waveform::Sampled { times_us, .. } => (times_us[1] - times_us[0]) * 0.5,
            Waveform::Derived { source, .. } => source.natural_step(),
        }
    }
}

/// Radiated field of a source impulse: `b(t) = −c·dΦ/dt` in nT.
pub fn radiated_field(phi: Waveform, conversion: NeuronConversion) -> Waveform {
    Waveform::Derived { source: Box::new(phi), conversion }
}

/// Max of `|db/dt|` over a midpoint grid of at least 2¹⁰ points, by central
/// differences of the evaluated waveform. For a sinusoid this recovers the
/// analytic `2πνb` to better than 0.1%.
pub fn max_abs_derivative(w: &Waveform, period_us: f64, grid: usize) -> f64 {
    max_abs_derivative_of(|t| w.evaluate(t), period_us, grid)
}

/// Closure version of [`max_abs_derivative`].
pub fn max_abs_derivative_of<F: Fn(f64) -> f64>(f: F, period_us: f64, grid: usize) -> f64 {
    let grid = grid.max(1 << 10);
    let dt = period_us / grid as f64;
    let h = 0.25 * dt;
    let mut max = 0.0f64;
    for j in 0..grid {
        let t = (j as f64 + 0.5) * dt;
        let d = (f(t + h) - f(t - h)) / (2.0 * h);
        max = max.max(d.abs());
    }
    max
}

/// `T·max|∂_t b|`: the slope of the field rescaled to the unit interval, the
/// quantity the truncation bound is stated for.
pub fn max_unit_derivative(w: &Waveform, period_us: f64, grid: usize) -> f64 {
    period_us * max_abs_derivative(w, period_us, grid)
}
