//! Qubit-sensor acquisition model: phase accumulation under a Walsh digital
//! filter, decoherence-limited visibility, and shot-noise-limited photon
//! counting readout.
//!
//! One repetition of the protocol prepares the sensor, lets it acquire the
//! filtered phase `φ_m(T) = γ_e·T·b̂(m)` over the period, and reads it out
//! twice with opposite final-pulse phases. Each readout projects the qubit
//! (distinguishability contracted by the efficiency parameter `C`) and then
//! draws a photon count with state-dependent Poisson rates `S0`/`S1`. The
//! two summed counts are combined with the common-mode normalization
//! `(S_{x̄y} − S_{xy})/(S_{x̄y} + S_{xy})·(S0 + S1)/(S0 − S1)`, which makes the
//! estimator converge to the ideal normalized signal as the number of
//! repetitions grows.

use rand_chacha::ChaCha12Rng;
use rand_distr::{Binomial, Distribution, Poisson};

use crate::error::{Error, Result};
use crate::walsh::{walsh_coefficient, WalshIndex};

/// NV electronic-spin gyromagnetic ratio, 2π·28 Hz/nT, in rad·µs⁻¹·nT⁻¹.
pub const GAMMA_E_RAD_PER_US_NT: f64 = 2.0 * std::f64::consts::PI * 28.0e-6;

/// Qubit-sensor parameters.
///
/// The decoherence law is `T₂(m) = T₂_base·max(m, 1)^s` with a constant
/// stretch exponent `p(m) = p_base`; both are scenario inputs, not claims.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorModel {
    /// Interaction strength γ_e, rad·µs⁻¹·nT⁻¹.
    pub gamma_e_rad_per_us_nt: f64,
    /// Measurement efficiency parameter C ∈ (0, 1].
    pub efficiency_c: f64,
    /// Photon count rate per readout for m_s = 0.
    pub s0_counts: f64,
    /// Photon count rate per readout for m_s = 1. Must satisfy S0 > S1 ≥ 0.
    pub s1_counts: f64,
    /// Base coherence time T₂_base, µs. May be infinite (ideal visibility).
    pub t2_base_us: f64,
    /// Stretch exponent p(m) = p_base.
    pub p_base: f64,
    /// Pulse-number scaling exponent s in T₂(m) = T₂_base·max(m,1)^s.
    pub t2_scaling_exponent: f64,
    /// Ensemble size multiplier N_NV ≥ 1; sensitivities improve by 1/√N_NV.
    pub n_nv: f64,
    /// π-pulse duration, µs; bounds the usable bandwidth by τ = T/N ≥ t_π.
    pub pi_pulse_us: f64,
    /// Dephasing time T₂*, µs; admissibility limit for the sequential
    /// (Ramsey) baseline.
    pub t2_star_us: Option<f64>,
}

impl Default for SensorModel {
    fn default() -> Self {
        SensorModel {
            gamma_e_rad_per_us_nt: GAMMA_E_RAD_PER_US_NT,
            efficiency_c: 1.0,
            s0_counts: 0.03,
            s1_counts: 0.02,
            t2_base_us: 300.0,
            p_base: 1.5,
            t2_scaling_exponent: 2.0 / 3.0,
            n_nv: 1.0,
            pi_pulse_us: 0.02,
            t2_star_us: Some(3.0),
        }
    }
}

impl SensorModel {
    pub fn validate(&self) -> Result<()> {
        if self.gamma_e_rad_per_us_nt <= 0.0 {
            return Err(Error::NonPositive { what: "gamma_e", value: self.gamma_e_rad_per_us_nt });
        }
        if !(self.efficiency_c > 0.0 && self.efficiency_c <= 1.0) {
            return Err(Error::NonPositive { what: "efficiency C", value: self.efficiency_c });
        }
        if self.s1_counts < 0.0 {
            return Err(Error::NonPositive { what: "S1", value: self.s1_counts });
        }
        if self.s0_counts <= self.s1_counts {
            return Err(Error::DegenerateCountRates);
        }
        if self.t2_base_us <= 0.0 {
            return Err(Error::NonPositive { what: "T2_base", value: self.t2_base_us });
        }
        if self.p_base <= 0.0 {
            return Err(Error::NonPositive { what: "p_base", value: self.p_base });
        }
        if self.n_nv < 1.0 {
            return Err(Error::NonPositive { what: "n_NV - 1", value: self.n_nv - 1.0 });
        }
        Ok(())
    }

    /// Coherence time under the sequency-`m` sequence.
    pub fn t2_us(&self, index: WalshIndex) -> f64 {
        self.t2_base_us * f64::from(index.sequency().max(1)).powf(self.t2_scaling_exponent)
    }

    /// Signal visibility `v_m = exp(−(T/T₂(m))^p)`; 1 as T → 0,
    /// non-increasing in T, and (for s > 0) non-decreasing in m at fixed T.
    pub fn visibility(&self, index: WalshIndex, period_us: f64) -> f64 {
        (-(period_us / self.t2_us(index)).powf(self.p_base)).exp()
    }

    /// Bandwidth feasibility: the inter-pulse spacing τ = T/2ⁿ must not fall
    /// below the π-pulse duration.
    pub fn bandwidth_allows(&self, order: u32, period_us: f64) -> bool {
        period_us / (1u64 << order) as f64 >= self.pi_pulse_us
    }
}

/// Phase acquired under the sequency-`m` filter:
/// `φ_m(T) = γ_e·T·b̂(m)`, linear in the field amplitude.
pub fn accumulated_phase<F>(
    model: &SensorModel,
    field: F,
    index: WalshIndex,
    period_us: f64,
    grid_points: usize,
) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let coeff = walsh_coefficient(field, index, period_us, grid_points)?;
    Ok(model.gamma_e_rad_per_us_nt * period_us * coeff)
}

/// Read-out convention for converting the accumulated phase to a normalized
/// signal in [−1, 1].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ReadoutMode {
    /// Amplitude-sweep convention: `S = v·sin(φ)`.
    Amplitude,
    /// Phase-sweep convention: `1 − 2S_m(θ)` recast as `v·cos(φ − θ)`.
    Phase { theta_rad: f64 },
}

/// Ideal normalized signal for visibility `v` and accumulated phase `φ`.
/// The two conventions agree at their crossing point θ = π/2.
pub fn expected_signal(visibility: f64, phase_rad: f64, mode: ReadoutMode) -> f64 {
    match mode {
        ReadoutMode::Amplitude => visibility * phase_rad.sin(),
        ReadoutMode::Phase { theta_rad } => visibility * (phase_rad - theta_rad).cos(),
    }
}

/// Expected signal for a field under the sequency-`m` filter.
pub fn signal_expectation<F>(
    model: &SensorModel,
    field: F,
    index: WalshIndex,
    period_us: f64,
    grid_points: usize,
    mode: ReadoutMode,
) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let phase = accumulated_phase(model, field, index, period_us, grid_points)?;
    Ok(expected_signal(model.visibility(index, period_us), phase, mode))
}

/// Measurement repetitions; `Infinite` returns the exact expectation with
/// zero standard error (the noiseless limit).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Repetitions {
    Finite(u64),
    Infinite,
}

fn draw_poisson(rng: &mut ChaCha12Rng, rate: f64) -> f64 {
    if rate <= 0.0 {
        0.0
    } else {
        Poisson::new(rate).expect("positive finite rate").sample(rng)
    }
}

/// Summed photon count of `reps` readouts whose ideal signal is `s`.
fn readout_counts(model: &SensorModel, s: f64, reps: u64, rng: &mut ChaCha12Rng) -> f64 {
    let p0 = 0.5 * (1.0 + (model.efficiency_c * s).clamp(-1.0, 1.0));
    let k0 = Binomial::new(reps, p0).expect("probability in [0,1]").sample(rng) as f64;
    let k1 = reps as f64 - k0;
    draw_poisson(rng, k0 * model.s0_counts) + draw_poisson(rng, k1 * model.s1_counts)
}

/// Per-readout count mean and variance at ideal signal `s` (projection
/// mixture of the two Poisson count rates).
fn count_moments(model: &SensorModel, s: f64) -> (f64, f64) {
    let p0 = 0.5 * (1.0 + (model.efficiency_c * s).clamp(-1.0, 1.0));
    let mean = model.s1_counts + (model.s0_counts - model.s1_counts) * p0;
    let var = mean + p0 * (1.0 - p0) * (model.s0_counts - model.s1_counts).powi(2);
    (mean, var)
}

/// Simulate `reps` repetitions of the two-readout protocol at ideal signal
/// `p_signal` and return the normalized estimate and its standard error.
///
/// The estimate is unbiased in the large-`reps` limit and the standard error
/// scales as `1/√reps`. If the counts are completely dark the estimate is
/// flagged with an infinite standard error.
pub fn simulate_readout(
    model: &SensorModel,
    p_signal: f64,
    reps: Repetitions,
    rng: &mut ChaCha12Rng,
) -> Result<(f64, f64)> {
    model.validate()?;
    let m = match reps {
        Repetitions::Infinite => return Ok((p_signal, 0.0)),
        Repetitions::Finite(0) => {
            return Err(Error::NonPositive { what: "repetitions", value: 0.0 })
        }
        Repetitions::Finite(m) => m,
    };
    let n_a = readout_counts(model, p_signal, m, rng);
    let n_b = readout_counts(model, -p_signal, m, rng);
    let total = n_a + n_b;
    let norm = (model.s0_counts + model.s1_counts)
        / ((model.s0_counts - model.s1_counts) * model.efficiency_c);
    if total <= 0.0 {
        return Ok((0.0, f64::INFINITY));
    }
    let ratio = (n_a - n_b) / total;
    let mean = ratio * norm;

    // delta-method standard error at the plug-in signal estimate
    let s_hat = mean.clamp(-1.0, 1.0);
    let (lam_a, var_a) = count_moments(model, s_hat);
    let (lam_b, var_b) = count_moments(model, -s_hat);
    let lam_sum = lam_a + lam_b;
    let var_ratio =
        4.0 * (lam_b * lam_b * var_a + lam_a * lam_a * var_b) / (m as f64 * lam_sum.powi(4));
    Ok((mean, var_ratio.sqrt() * norm))
}

/// The variable swept while estimating one Walsh coefficient.
#[derive(Debug, Clone, PartialEq)]
pub enum SweepVariable {
    AmplitudeNt(Vec<f64>),
    ReadoutPhaseRad(Vec<f64>),
}

/// Simulated normalized signal versus the swept variable, with per-point
/// shot-noise standard errors.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementCurve {
    pub index: WalshIndex,
    pub swept: SweepVariable,
    pub mean_signal: Vec<f64>,
    pub std_err: Vec<f64>,
    pub repetitions: Repetitions,
}

/// Acquire the measurement curve for one Walsh index.
///
/// In amplitude mode `field` is the normalized shape `f(t)` (its coefficient
/// `f̂(m)` is dimensionless) and the sweep scales the field amplitude in nT.
/// In phase mode `field` is the full field `b(t)` in nT and the read-out
/// phase θ is swept. Each sweep point owns an RNG stream derived from
/// `(master_seed, mode, m, point)`, so distinct points may be simulated
/// concurrently and repeated runs with the same seed are identical.
pub fn acquire_curve<F>(
    model: &SensorModel,
    field: F,
    index: WalshIndex,
    period_us: f64,
    sweep: SweepVariable,
    reps: Repetitions,
    master_seed: u64,
    grid_points: usize,
) -> Result<MeasurementCurve>
where
    F: Fn(f64) -> f64,
{
    model.validate()?;
    let coeff = walsh_coefficient(&field, index, period_us, grid_points)?;
    let vis = model.visibility(index, period_us);
    let gamma_t = model.gamma_e_rad_per_us_nt * period_us;
    let m_seq = u64::from(index.sequency());

    let expectations: Vec<f64> = match &sweep {
        SweepVariable::AmplitudeNt(amps) => {
            if amps.is_empty() {
                return Err(Error::EmptyInput("amplitude sweep"));
            }
            amps.iter()
                .map(|&b| expected_signal(vis, gamma_t * b * coeff, ReadoutMode::Amplitude))
                .collect()
        }
        SweepVariable::ReadoutPhaseRad(phases) => {
            if phases.is_empty() {
                return Err(Error::EmptyInput("phase sweep"));
            }
            let phase_m = gamma_t * coeff;
            phases
                .iter()
                .map(|&th| expected_signal(vis, phase_m, ReadoutMode::Phase { theta_rad: th }))
                .collect()
        }
    };
    let mode_id = match &sweep {
        SweepVariable::AmplitudeNt(_) => 0u64,
        SweepVariable::ReadoutPhaseRad(_) => 1u64,
    };

    let mut mean_signal = Vec::with_capacity(expectations.len());
    let mut std_err = Vec::with_capacity(expectations.len());
    for (i, &p) in expectations.iter().enumerate() {
        let mut rng = crate::rng::stream(master_seed, &[mode_id, m_seq, i as u64]);
        let (mean, err) = simulate_readout(model, p, reps, &mut rng)?;
        mean_signal.push(mean);
        std_err.push(err);
    }
    Ok(MeasurementCurve { index, swept: sweep, mean_signal, std_err, repetitions: reps })
}
