//! Walsh-coefficient estimation from measurement curves, sensitivity
//! formulas, and the comparison against sequential (Ramsey) acquisition.
//!
//! Both fits use weighted nonlinear least squares (Gauss-Newton with
//! Levenberg damping, weights `1/σ²`), converging when the relative parameter
//! change drops below 1e-9 or after 100 iterations. Parameter uncertainties
//! come from the curvature of the weighted normal equations; when the curve
//! carries no per-point errors (noiseless limit) the covariance is scaled by
//! the reduced chi-square instead.
//!
//! Sensitivities are quoted in nT·Hz^(-1/2). The per-sequence sensitivity is
//! `η_m = v_m⁻¹/(γ_e·C·√T·|f̂(m)|)` and the reconstruction sensitivity
//! `η_N = √(N·Σ_m v_m⁻²)/(γ_e·C·√T·√n_NV)`; both relate to resolvable field
//! steps through `δb = η/√(M·T)`.

use crate::error::{Error, Result};
use crate::rng::stream;
use crate::sensor::{simulate_readout, Repetitions, SensorModel, SweepVariable, MeasurementCurve};
use crate::walsh::{walsh_spectrum_of, WalshIndex};

/// Seconds per microsecond; converts √µs sensitivities to nT·Hz^(-1/2).
const SQRT_US_TO_SQRT_S: f64 = 1e-3;

/// Validity flags attached to a coefficient estimate.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EstimateFlags {
    /// The fit design carries no information (e.g. all swept amplitudes zero).
    pub non_identifiable: bool,
    /// |γ·b̂·T| close to π/2, where the phase-sweep inversion wraps.
    pub phase_wrap_risk: bool,
}

/// An estimated Walsh coefficient with its standard uncertainty and 95%
/// confidence interval.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientEstimate {
    pub index: WalshIndex,
    /// `f̂(m)` (dimensionless) from amplitude sweeps, `b̂(m)` (nT) from phase
    /// sweeps.
    pub value: f64,
    /// Standard uncertainty; infinite for flagged non-identifiable fits.
    pub sigma: f64,
    pub ci95: (f64, f64),
    pub flags: EstimateFlags,
}

impl CoefficientEstimate {
    pub fn ci95_covers(&self, truth: f64) -> bool {
        truth >= self.ci95.0 && truth <= self.ci95.1
    }
}

struct FitOutcome {
    value: f64,
    sigma: f64,
    identifiable: bool,
}

/// Weighted one-parameter Gauss-Newton with Levenberg damping.
///
/// `model(p, i)` returns the model value and its derivative in `p` at point
/// `i`. Weights are `1/σᵢ²`; if any σ is non-finite or non-positive the fit
/// falls back to unweighted least squares with the covariance scaled by the
/// reduced chi-square.
fn fit_one_param<M>(y: &[f64], sigma: &[f64], model: M, p0: f64) -> FitOutcome
where
    M: Fn(f64, usize) -> (f64, f64),
{
    let n = y.len();
    let weighted = sigma.iter().all(|s| s.is_finite() && *s > 0.0);
    let weights: Vec<f64> =
        if weighted { sigma.iter().map(|s| 1.0 / (s * s)).collect() } else { vec![1.0; n] };

    let chi_sq = |p: f64| -> f64 {
        (0..n).map(|i| {
            let (m, _) = model(p, i);
            let r = y[i] - m;
            weights[i] * r * r
        }).sum()
    };

    let mut p = p0;
    let mut chi = chi_sq(p);
    let mut lambda = 1e-3;
    let mut curvature = 0.0;
    for _ in 0..100 {
        let mut h = 0.0;
        let mut g = 0.0;
        for i in 0..n {
            let (m, dm) = model(p, i);
            h += weights[i] * dm * dm;
            g += weights[i] * dm * (y[i] - m);
        }
        curvature = h;
        if h <= f64::MIN_POSITIVE * 1e10 {
            return FitOutcome { value: p, sigma: f64::INFINITY, identifiable: false };
        }
        let mut step = 0.0;
        let mut accepted = false;
        for _ in 0..40 {
            step = g / (h * (1.0 + lambda));
            let trial = chi_sq(p + step);
            if trial <= chi + 1e-30 {
                p += step;
                chi = trial;
                lambda = (lambda / 3.0).max(1e-12);
                accepted = true;
                break;
            }
            lambda *= 10.0;
        }
        if !accepted || step.abs() <= 1e-9 * p.abs().max(1.0) {
            break;
        }
    }

    let variance = if weighted {
        1.0 / curvature
    } else {
        // residual-scaled covariance for the noiseless path
        let dof = (n as f64 - 1.0).max(1.0);
        chi / dof / curvature
    };
    FitOutcome { value: p, sigma: variance.max(0.0).sqrt(), identifiable: true }
}

/// Estimate the normalized coefficient `f̂(m)` from an amplitude-sweep curve
/// by fitting `S(b) = v·sin(γ_e·b·f̂·T)`; the slope at the origin divided by
/// `γ_e·T` is `f̂(m)`.
///
/// `visibility` is the known signal contraction of the curve (1 for an ideal
/// sensor). The sweep should stay in the linear window |γ_e·b·f̂·T| ≲ 0.5 rad,
/// where the slope extraction is well conditioned.
pub fn fit_slope_origin(
    curve: &MeasurementCurve,
    gamma_e_rad_per_us_nt: f64,
    period_us: f64,
    visibility: f64,
) -> Result<CoefficientEstimate> {
    let amps = match &curve.swept {
        SweepVariable::AmplitudeNt(a) => a,
        SweepVariable::ReadoutPhaseRad(_) => {
            return Err(Error::SweptVariableMismatch { expected: "field amplitude" })
        }
    };
    if amps.len() < 4 {
        return Err(Error::InsufficientPoints { have: amps.len(), need: 4 });
    }
    let kappa = gamma_e_rad_per_us_nt * period_us;
    let y = &curve.mean_signal;
    let sig = &curve.std_err;

    // linearized start: weighted regression of y on v·κ·b through the origin
    let weights: Vec<f64> = sig
        .iter()
        .map(|s| if s.is_finite() && *s > 0.0 { 1.0 / (s * s) } else { 1.0 })
        .collect();
    let sxy: f64 =
        (0..amps.len()).map(|i| weights[i] * y[i] * visibility * kappa * amps[i]).sum();
    let sxx: f64 =
        (0..amps.len()).map(|i| weights[i] * (visibility * kappa * amps[i]).powi(2)).sum();
    let p0 = if sxx > 0.0 { sxy / sxx } else { 0.0 };

    let fit = fit_one_param(y, sig, |f, i| {
        let arg = kappa * f * amps[i];
        (visibility * arg.sin(), visibility * kappa * amps[i] * arg.cos())
    }, p0);

    let sigma = fit.sigma;
    Ok(CoefficientEstimate {
        index: curve.index,
        value: fit.value,
        sigma,
        ci95: (fit.value - 1.96 * sigma, fit.value + 1.96 * sigma),
        flags: EstimateFlags { non_identifiable: !fit.identifiable, phase_wrap_risk: false },
    })
}

/// Estimate the absolute coefficient `b̂(m)` in nT from a read-out phase
/// sweep by fitting `y(θ) = v·cos(φ − θ)` and inverting `φ = γ_e·b̂·T`.
///
/// Valid only while |φ| < π/2; estimates near the edge are flagged with
/// `phase_wrap_risk`. The sweep must span at least 2π/3.
pub fn fit_cosine_phase(
    curve: &MeasurementCurve,
    gamma_e_rad_per_us_nt: f64,
    period_us: f64,
    visibility: f64,
) -> Result<CoefficientEstimate> {
    let thetas = match &curve.swept {
        SweepVariable::ReadoutPhaseRad(t) => t,
        SweepVariable::AmplitudeNt(_) => {
            return Err(Error::SweptVariableMismatch { expected: "read-out phase" })
        }
    };
    if thetas.len() < 4 {
        return Err(Error::InsufficientPoints { have: thetas.len(), need: 4 });
    }
    let span = thetas.iter().cloned().fold(f64::MIN, f64::max)
        - thetas.iter().cloned().fold(f64::MAX, f64::min);
    let need = 2.0 * std::f64::consts::PI / 3.0;
    if span < need - 1e-9 {
        return Err(Error::SweepSpanTooSmall { span_rad: span, need_rad: need });
    }
    let y = &curve.mean_signal;

    // phase start from the quadrature projections y ≈ a·cosθ + b·sinθ
    let n = thetas.len();
    let (mut scc, mut sss, mut scs, mut syc, mut sys) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for i in 0..n {
        let (c, s) = (thetas[i].cos(), thetas[i].sin());
        scc += c * c;
        sss += s * s;
        scs += c * s;
        syc += y[i] * c;
        sys += y[i] * s;
    }
    let det = scc * sss - scs * scs;
    let p0 = if det.abs() > 1e-12 {
        let a = (syc * sss - sys * scs) / det;
        let b = (sys * scc - syc * scs) / det;
        b.atan2(a)
    } else {
        0.0
    };

    let fit = fit_one_param(y, &curve.std_err, |phi, i| {
        let arg = phi - thetas[i];
        (visibility * arg.cos(), -visibility * arg.sin())
    }, p0);

    // wrap into (−π, π] before inverting
    let mut phi = fit.value.rem_euclid(std::f64::consts::TAU);
    if phi > std::f64::consts::PI {
        phi -= std::f64::consts::TAU;
    }
    let kappa = gamma_e_rad_per_us_nt * period_us;
    let value = phi / kappa;
    let sigma = fit.sigma / kappa;
    let wrap_risk = phi.abs() >= 0.98 * std::f64::consts::FRAC_PI_2;
    Ok(CoefficientEstimate {
        index: curve.index,
        value,
        sigma,
        ci95: (value - 1.96 * sigma, value + 1.96 * sigma),
        flags: EstimateFlags { non_identifiable: !fit.identifiable, phase_wrap_risk: wrap_risk },
    })
}

/// Sensitivity of a single Walsh sequence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SequenceSensitivity {
    pub visibility: f64,
    /// Field-independent part `η̂_m = v_m⁻¹/(γ_e·C·√T·√n_NV)`, nT·Hz^(-1/2).
    pub eta_hat_nt_per_sqrt_hz: f64,
    /// `η_m = η̂_m/|f̂(m)|`; undefined (None) when `f̂(m) = 0`.
    pub eta_nt_per_sqrt_hz: Option<f64>,
}

/// Per-sequence measurement sensitivity: minimum field amplitude per unit
/// √bandwidth that the sequency-`m` measurement resolves.
pub fn sensitivity_sequence(
    model: &SensorModel,
    index: WalshIndex,
    period_us: f64,
    f_hat: f64,
) -> SequenceSensitivity {
    let v = model.visibility(index, period_us);
    let eta_hat = (1.0 / v)
        / (model.gamma_e_rad_per_us_nt
            * model.efficiency_c
            * period_us.sqrt()
            * model.n_nv.sqrt())
        * SQRT_US_TO_SQRT_S;
    let eta = if f_hat != 0.0 { Some(eta_hat / f_hat.abs()) } else { None };
    SequenceSensitivity { visibility: v, eta_hat_nt_per_sqrt_hz: eta_hat, eta_nt_per_sqrt_hz: eta }
}

/// Smallest resolvable coefficient step from `reps` measurements:
/// `δb̂_m = η̂_m/√(M·T)`.
pub fn coefficient_resolution(eta_hat_nt_per_sqrt_hz: f64, reps: u64, period_us: f64) -> f64 {
    eta_hat_nt_per_sqrt_hz / (reps as f64 * period_us * 1e-6).sqrt()
}

/// Sensitivity of the full N-coefficient reconstruction,
/// `η_N = √(N·Σ_m v_m⁻²)/(γ_e·C·√T·√n_NV)` in nT·Hz^(-1/2). With ideal
/// visibilities this reduces to `N/(γ_e·C·√T·√n_NV)`.
pub fn sensitivity_reconstruction(
    model: &SensorModel,
    period_us: f64,
    visibilities: &[f64],
) -> f64 {
    let n = visibilities.len() as f64;
    let sum_inv_sq: f64 = visibilities.iter().map(|v| 1.0 / (v * v)).sum();
    (n * sum_inv_sq).sqrt()
        / (model.gamma_e_rad_per_us_nt
            * model.efficiency_c
            * period_us.sqrt()
            * model.n_nv.sqrt())
        * SQRT_US_TO_SQRT_S
}

/// Amplitude resolution of a reconstruction: `δb_N = √(Σ_m δb̂_m²)`. This is
/// also the (time-constant) pointwise uncertainty of the reconstructed
/// trace. Any infinite input propagates to an infinite (flagged) result.
pub fn amplitude_resolution(sigmas: &[f64]) -> Result<f64> {
    if sigmas.is_empty() {
        return Err(Error::EmptyInput("coefficient uncertainties"));
    }
    Ok(sigmas.iter().map(|s| s * s).sum::<f64>().sqrt())
}

/// Options for the Walsh-vs-sequential Monte-Carlo comparison.
#[derive(Debug, Clone, Copy)]
pub struct ComparisonOptions {
    /// Monte-Carlo trials per arm.
    pub trials: usize,
    /// Repetitions per Walsh coefficient (the sequential arm gets N× as many
    /// per point, so both arms spend the same total acquisition time).
    pub walsh_repetitions: u64,
    pub seed: u64,
    /// Include each arm's visibility penalty instead of the pure shot-noise
    /// comparison.
    pub include_visibility: bool,
    /// Quadrature refinement for the reference coefficients.
    pub grid_multiplier: usize,
}

impl Default for ComparisonOptions {
    fn default() -> Self {
        ComparisonOptions {
            trials: 400,
            walsh_repetitions: 4000,
            seed: 1,
            include_visibility: false,
            grid_multiplier: 64,
        }
    }
}

/// Outcome of the fixed-total-time comparison between Walsh reconstruction
/// and sequential (Ramsey) sampling of `N` sub-intervals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SequentialComparison {
    pub n_points: usize,
    /// Expected resolution gain at fixed total time: √N.
    pub analytic_sensitivity_ratio: f64,
    /// Expected acquisition-time ratio at fixed resolution: N.
    pub analytic_time_ratio: f64,
    /// Monte-Carlo (δb_N)_sequential/(δb_N)_walsh at equal total time.
    pub measured_sensitivity_ratio: f64,
    /// Monte-Carlo acquisition-time ratio at fixed resolution, derived from
    /// the same measured per-√shot amplitudes (= measured ratio squared).
    pub measured_time_ratio: f64,
    pub walsh_resolution_nt: f64,
    pub sequential_resolution_nt: f64,
}

/// root-sum-square of per-column standard deviations over trial rows
fn rss_column_std(rows: &[Vec<f64>]) -> f64 {
    let trials = rows.len() as f64;
    let cols = rows[0].len();
    let mut total = 0.0;
    for c in 0..cols {
        let mean: f64 = rows.iter().map(|r| r[c]).sum::<f64>() / trials;
        let var: f64 =
            rows.iter().map(|r| (r[c] - mean).powi(2)).sum::<f64>() / (trials - 1.0);
        total += var;
    }
    total.sqrt()
}

/// Monte-Carlo comparison of reconstruction resolution: `N` Walsh
/// measurements over the full period versus `N` sequential Ramsey
/// measurements over sub-intervals `τ = T/N`, at the same total acquisition
/// time. Shot-noise-limited by default ("ideal visibility" in both arms).
///
/// The sequential baseline is admissible only while `τ ≤ T₂*` and
/// `τ ≥ t_π`; otherwise the comparison reports the violated constraint.
pub fn compare_sequential<F>(
    model: &SensorModel,
    field: F,
    order: u32,
    period_us: f64,
    opts: &ComparisonOptions,
) -> Result<SequentialComparison>
where
    F: Fn(f64) -> f64,
{
    model.validate()?;
    let n = 1usize << order;
    let tau = period_us / n as f64;
    if let Some(t2_star) = model.t2_star_us {
        if tau > t2_star {
            return Err(Error::InfeasibleBaseline {
                tau_us: tau,
                limit_us: t2_star,
                constraint: "the dephasing time T2* >=",
            });
        }
    }
    if tau < model.pi_pulse_us {
        return Err(Error::InfeasibleBaseline {
            tau_us: tau,
            limit_us: model.pi_pulse_us,
            constraint: "the minimum readout/pulse time <=",
        });
    }
    if opts.trials < 2 {
        return Err(Error::InsufficientPoints { have: opts.trials, need: 2 });
    }

    // reference values: Walsh coefficients and the matching cell averages
    let spectrum = walsh_spectrum_of(&field, order, period_us, opts.grid_multiplier)?;
    let cell_averages = spectrum.synthesize();
    let gamma = model.gamma_e_rad_per_us_nt;

    let vis_walsh: Vec<f64> = (0..n)
        .map(|m| {
            if opts.include_visibility {
                model.visibility(WalshIndex::new(m as u32), period_us)
            } else {
                1.0
            }
        })
        .collect();
    let vis_seq = if opts.include_visibility {
        let t2_star = model.t2_star_us.unwrap_or(f64::INFINITY);
        (-(tau / t2_star)).exp()
    } else {
        1.0
    };

    let m_walsh = opts.walsh_repetitions;
    let m_seq = m_walsh * n as u64; // same total time: M₁·T = N·M₂·T/N · N

    let mut walsh_rows = Vec::with_capacity(opts.trials);
    let mut seq_rows = Vec::with_capacity(opts.trials);
    for trial in 0..opts.trials {
        let mut walsh_est = Vec::with_capacity(n);
        for (m, &coeff) in spectrum.coeffs.iter().enumerate() {
            let p = vis_walsh[m] * (gamma * coeff * period_us).sin();
            let mut rng = stream(opts.seed, &[0, trial as u64, m as u64]);
            let (mean, _) = simulate_readout(model, p, Repetitions::Finite(m_walsh), &mut rng)?;
            let s = (mean / vis_walsh[m]).clamp(-1.0, 1.0);
            walsh_est.push(s.asin() / (gamma * period_us));
        }
        walsh_rows.push(walsh_est);

        let mut seq_est = Vec::with_capacity(n);
        for (j, &avg) in cell_averages.iter().enumerate() {
            let p = vis_seq * (gamma * avg * tau).sin();
            let mut rng = stream(opts.seed, &[1, trial as u64, j as u64]);
            let (mean, _) = simulate_readout(model, p, Repetitions::Finite(m_seq), &mut rng)?;
            let s = (mean / vis_seq).clamp(-1.0, 1.0);
            seq_est.push(s.asin() / (gamma * tau));
        }
        seq_rows.push(seq_est);
    }

    let walsh_res = rss_column_std(&walsh_rows);
    let seq_res = rss_column_std(&seq_rows);
    let ratio = seq_res / walsh_res;
    Ok(SequentialComparison {
        n_points: n,
        analytic_sensitivity_ratio: (n as f64).sqrt(),
        analytic_time_ratio: n as f64,
        measured_sensitivity_ratio: ratio,
        measured_time_ratio: ratio * ratio,
        walsh_resolution_nt: walsh_res,
        sequential_resolution_nt: seq_res,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sensor::acquire_curve;

    const TAU: f64 = std::f64::consts::TAU;
    const PI: f64 = std::f64::consts::PI;

    fn ideal_model() -> SensorModel {
        SensorModel { t2_base_us: f64::INFINITY, ..SensorModel::default() }
    }

    fn noiseless_amp_curve(f_hat_scale: f64, m: u32) -> MeasurementCurve {
        let model = ideal_model();
        let period = 10.0;
        let field = move |t: f64| f_hat_scale * (TAU * t / period).sin();
        let amps: Vec<f64> = (-4..=4).map(|k| k as f64 * 100.0).collect();
        acquire_curve(
            &model,
            field,
            WalshIndex::new(m),
            period,
            SweepVariable::AmplitudeNt(amps),
            Repetitions::Infinite,
            0,
            1 << 14,
        )
        .unwrap()
    }

    #[test]
    fn slope_fit_recovers_spin_echo_coefficient() {
        let model = ideal_model();
        let curve = noiseless_amp_curve(1.0, 1);
        let est = fit_slope_origin(&curve, model.gamma_e_rad_per_us_nt, 10.0, 1.0).unwrap();
        let expect = 2.0 / PI;
        assert!((est.value - expect).abs() < 1e-6 * expect, "got {}", est.value);
        assert!(!est.flags.non_identifiable);
    }

    #[test]
    fn slope_fit_of_orthogonal_filter_is_consistent_with_zero() {
        // the sine has no w₂ component, so the fit must sit on zero
        let model = SensorModel::default();
        let period = 10.0;
        let field = move |t: f64| (TAU * t / period).sin();
        let amps: Vec<f64> = (-4..=4).map(|k| k as f64 * 100.0).collect();
        let curve = acquire_curve(
            &model, field, WalshIndex::new(2), period,
            SweepVariable::AmplitudeNt(amps), Repetitions::Finite(200_000), 31, 1 << 12,
        )
        .unwrap();
        let v = model.visibility(WalshIndex::new(2), period);
        let est = fit_slope_origin(&curve, model.gamma_e_rad_per_us_nt, period, v).unwrap();
        assert!(est.ci95_covers(0.0), "estimate {} ± {}", est.value, est.sigma);
    }

    #[test]
    fn slope_fit_sigma_scales_inverse_sqrt_reps() {
        let model = SensorModel::default();
        let period = 10.0;
        let field = move |t: f64| (TAU * t / period).sin();
        let amps: Vec<f64> = (-4..=4).map(|k| k as f64 * 100.0).collect();
        let v = model.visibility(WalshIndex::new(1), period);
        let mut sigmas = [0.0f64; 2];
        for (slot, reps) in [(0usize, 100_000u64), (1, 400_000)] {
            let mut acc = 0.0;
            let trials = 16;
            for k in 0..trials {
                let curve = acquire_curve(
                    &model, field, WalshIndex::new(1), period,
                    SweepVariable::AmplitudeNt(amps.clone()),
                    Repetitions::Finite(reps), 1000 + k, 1 << 12,
                )
                .unwrap();
                let est =
                    fit_slope_origin(&curve, model.gamma_e_rad_per_us_nt, period, v).unwrap();
                acc += est.sigma;
            }
            sigmas[slot] = acc / trials as f64;
        }
        let ratio = sigmas[0] / sigmas[1];
        assert!((ratio - 2.0).abs() < 0.2, "ratio {ratio}");
    }

    #[test]
    fn slope_fit_rejects_thin_or_degenerate_input() {
        let model = ideal_model();
        let mut curve = noiseless_amp_curve(1.0, 1);
        match &mut curve.swept {
            SweepVariable::AmplitudeNt(a) => a.truncate(3),
            _ => unreachable!(),
        }
        curve.mean_signal.truncate(3);
        curve.std_err.truncate(3);
        assert!(matches!(
            fit_slope_origin(&curve, model.gamma_e_rad_per_us_nt, 10.0, 1.0),
            Err(Error::InsufficientPoints { .. })
        ));

        // all-zero amplitudes carry no information about the slope
        let zero_curve = MeasurementCurve {
            index: WalshIndex::new(1),
            swept: SweepVariable::AmplitudeNt(vec![0.0; 6]),
            mean_signal: vec![0.0; 6],
            std_err: vec![0.1; 6],
            repetitions: Repetitions::Finite(100),
        };
        let est =
            fit_slope_origin(&zero_curve, model.gamma_e_rad_per_us_nt, 10.0, 1.0).unwrap();
        assert!(est.flags.non_identifiable);
        assert!(est.sigma.is_infinite());
    }

    #[test]
    fn phase_fit_recovers_known_coefficient() {
        let model = ideal_model();
        let period = 10.0;
        // w₀ of a constant field: b̂(0) = 10 nT
        let field = |_t: f64| 10.0;
        let thetas: Vec<f64> = (0..12).map(|k| k as f64 * TAU / 12.0).collect();
        let curve = acquire_curve(
            &model, field, WalshIndex::new(0), period,
            SweepVariable::ReadoutPhaseRad(thetas), Repetitions::Infinite, 0, 64,
        )
        .unwrap();
        let est = fit_cosine_phase(&curve, model.gamma_e_rad_per_us_nt, period, 1.0).unwrap();
        assert!((est.value - 10.0).abs() < 1e-6 * 10.0, "got {}", est.value);
        assert!(!est.flags.phase_wrap_risk);
    }

    #[test]
    fn phase_fit_zero_coefficient() {
        let model = ideal_model();
        let thetas: Vec<f64> = (0..12).map(|k| k as f64 * TAU / 12.0).collect();
        let curve = acquire_curve(
            &model, |_| 0.0, WalshIndex::new(0), 10.0,
            SweepVariable::ReadoutPhaseRad(thetas), Repetitions::Infinite, 0, 64,
        )
        .unwrap();
        let est = fit_cosine_phase(&curve, model.gamma_e_rad_per_us_nt, 10.0, 1.0).unwrap();
        assert!(est.value.abs() < 1e-9, "got {}", est.value);
    }

    #[test]
    fn phase_fit_rejects_narrow_span_and_flags_wrap() {
        let model = ideal_model();
        let narrow: Vec<f64> = (0..8).map(|k| k as f64 * 0.2).collect();
        let curve = acquire_curve(
            &model, |_| 10.0, WalshIndex::new(0), 10.0,
            SweepVariable::ReadoutPhaseRad(narrow), Repetitions::Infinite, 0, 64,
        )
        .unwrap();
        assert!(matches!(
            fit_cosine_phase(&curve, model.gamma_e_rad_per_us_nt, 10.0, 1.0),
            Err(Error::SweepSpanTooSmall { .. })
        ));

        // |γ b̂ T| right at the π/2 edge must be flagged
        let kappa = model.gamma_e_rad_per_us_nt * 10.0;
        let near_wrap = 0.99 * std::f64::consts::FRAC_PI_2 / kappa;
        let thetas: Vec<f64> = (0..12).map(|k| k as f64 * TAU / 12.0).collect();
        let curve = acquire_curve(
            &model, move |_| near_wrap, WalshIndex::new(0), 10.0,
            SweepVariable::ReadoutPhaseRad(thetas), Repetitions::Infinite, 0, 64,
        )
        .unwrap();
        let est = fit_cosine_phase(&curve, model.gamma_e_rad_per_us_nt, 10.0, 1.0).unwrap();
        assert!(est.flags.phase_wrap_risk);
    }

    #[test]
    fn spin_echo_sensitivity_matches_arithmetic_oracle() {
        // v = 1, C = 1, f̂ = 2/π, T = 10 µs:
        // η₁ = π/(2·γ_e·√T) = 2823.5 nT·√µs = 2.8235 nT·Hz^(-1/2)
        let model = ideal_model();
        let s = sensitivity_sequence(&model, WalshIndex::new(1), 10.0, 2.0 / PI);
        let expect_us = PI / (2.0 * model.gamma_e_rad_per_us_nt * 10.0f64.sqrt());
        let expect = expect_us * 1e-3;
        let eta = s.eta_nt_per_sqrt_hz.unwrap();
        assert!((eta - expect).abs() < 1e-12 * expect, "eta {eta} vs {expect}");
        assert!((eta - 2.8235).abs() < 1e-3, "eta {eta}");
        // and the round trip through δb = η/√(M·T)
        let reps = 100_000u64;
        let db = coefficient_resolution(s.eta_hat_nt_per_sqrt_hz, reps, 10.0);
        let eta_back = db * (reps as f64 * 10.0 * 1e-6).sqrt();
        assert!((eta_back - s.eta_hat_nt_per_sqrt_hz).abs() < 1e-12 * eta_back.abs());
    }

    #[test]
    fn sensitivity_algebra() {
        let base = ideal_model();
        let s1 = sensitivity_sequence(&base, WalshIndex::new(1), 10.0, 0.5);
        let doubled_c = SensorModel { efficiency_c: 0.5, ..base.clone() };
        let s2 = sensitivity_sequence(&doubled_c, WalshIndex::new(1), 10.0, 0.5);
        assert!((s2.eta_nt_per_sqrt_hz.unwrap() / s1.eta_nt_per_sqrt_hz.unwrap() - 2.0).abs() < 1e-12);

        // halved visibility doubles η
        let degraded = SensorModel { t2_base_us: 10.0 / (2.0f64.ln()), p_base: 1.0, t2_scaling_exponent: 0.0, ..base.clone() };
        let s3 = sensitivity_sequence(&degraded, WalshIndex::new(1), 10.0, 0.5);
        assert!((s3.visibility - 0.5).abs() < 1e-12);
        assert!((s3.eta_nt_per_sqrt_hz.unwrap() / s1.eta_nt_per_sqrt_hz.unwrap() - 2.0).abs() < 1e-9);

        // f̂ = 0 leaves only the field-independent part
        let s4 = sensitivity_sequence(&base, WalshIndex::new(2), 10.0, 0.0);
        assert!(s4.eta_nt_per_sqrt_hz.is_none());
        assert!(s4.eta_hat_nt_per_sqrt_hz.is_finite());
    }

    #[test]
    fn reconstruction_sensitivity_identities() {
        let model = ideal_model();
        let t = 10.0;
        let eta_1 = sensitivity_reconstruction(&model, t, &[1.0]);
        let base = 1.0 / (model.gamma_e_rad_per_us_nt * t.sqrt()) * 1e-3;
        assert!((eta_1 - base).abs() < 1e-12 * base);

        let n = 16usize;
        let eta_n = sensitivity_reconstruction(&model, t, &vec![1.0; n]);
        assert!((eta_n - n as f64 * base).abs() < 1e-9 * eta_n);

        // identity: δb_N·√(M·N·T) = η_N given δb̂_m = η̂_m/√(M·T)
        let reps = 50_000u64;
        let etas_hat: Vec<f64> = (0..n)
            .map(|m| {
                sensitivity_sequence(&model, WalshIndex::new(m as u32), t, 1.0)
                    .eta_hat_nt_per_sqrt_hz
            })
            .collect();
        let dbs: Vec<f64> =
            etas_hat.iter().map(|&e| coefficient_resolution(e, reps, t)).collect();
        let db_n = amplitude_resolution(&dbs).unwrap();
        let eta_back = db_n * (reps as f64 * n as f64 * t * 1e-6).sqrt();
        assert!((eta_back - eta_n).abs() < 1e-10 * eta_n, "{eta_back} vs {eta_n}");
    }

    #[test]
    fn amplitude_resolution_basics() {
        assert!((amplitude_resolution(&[0.3]).unwrap() - 0.3).abs() < 1e-15);
        let sig = vec![0.2; 9];
        assert!((amplitude_resolution(&sig).unwrap() - 0.6).abs() < 1e-12);
        assert!(amplitude_resolution(&[]).is_err());
        assert!(amplitude_resolution(&[1.0, f64::INFINITY]).unwrap().is_infinite());
    }

    #[test]
    fn comparison_analytic_values_and_feasibility() {
        let model = SensorModel {
            t2_base_us: f64::INFINITY,
            s0_counts: 0.05,
            s1_counts: 0.0,
            t2_star_us: Some(3.0),
            ..SensorModel::default()
        };
        let period = 10.0;
        let field = move |t: f64| 20.0 * (TAU * t / period).sin();
        let opts = ComparisonOptions { trials: 60, walsh_repetitions: 2000, ..Default::default() };
        let cmp = compare_sequential(&model, field, 2, period, &opts).unwrap();
        assert_eq!(cmp.n_points, 4);
        assert!((cmp.analytic_sensitivity_ratio - 2.0).abs() < 1e-12);
        assert!((cmp.analytic_time_ratio - 4.0).abs() < 1e-12);
        assert!(cmp.measured_sensitivity_ratio > 1.0);

        // τ = T/N above T2* makes the baseline inadmissible
        let slow = SensorModel { t2_star_us: Some(0.1), ..model.clone() };
        assert!(matches!(
            compare_sequential(&slow, field, 2, period, &opts),
            Err(Error::InfeasibleBaseline { .. })
        ));
        // τ below the pulse length is likewise infeasible
        let fat_pulse = SensorModel { pi_pulse_us: 5.0, ..model };
        assert!(matches!(
            compare_sequential(&fat_pulse, field, 2, period, &opts),
            Err(Error::InfeasibleBaseline { .. })
        ));
    }
}
