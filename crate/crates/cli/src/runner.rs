//! End-to-end scenario execution: acquisition simulation, coefficient
//! estimation, reconstruction, and artifact emission.

use std::path::{Path, PathBuf};

use serde_json::json;
use walsh_recon::estimation::{
    compare_sequential, fit_cosine_phase, fit_slope_origin, CoefficientEstimate,
    ComparisonOptions,
};
use walsh_recon::reconstruct::{
    l2_error, reconstruct, subset_reconstruct, Reconstruction, SubsetReport, SubsetTag,
};
use walsh_recon::sensor::{acquire_curve, MeasurementCurve, Repetitions, SweepVariable};
use walsh_recon::walsh::{truncation_bound, walsh_spectrum_of, DEFAULT_GRID_MULTIPLIER};
use walsh_recon::waveform::{max_abs_derivative_of, Waveform};
use walsh_recon::{Error as CoreError, SequentialComparison, WalshIndex, WalshSpectrum};

use crate::config::{Config, OrderingName, Protocol};
use crate::output;
use crate::CliError;

/// Command-line overrides applied on top of the scenario file.
#[derive(Debug, Clone, Default)]
pub struct RunOverrides {
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    pub grid_multiplier: Option<usize>,
    pub ordering: Option<OrderingName>,
}

/// Everything a scenario run produced, for callers that want the values as
/// well as the files.
#[derive(Debug, Clone)]
pub struct ScenarioArtifacts {
    pub out_dir: PathBuf,
    /// Measured (or noiseless) spectrum, sequency-ordered, in nT.
    pub spectrum: WalshSpectrum,
    pub reconstruction: Reconstruction,
    pub l2_error_nt: f64,
    pub truncation_bound_nt: f64,
    pub subset_reports: Vec<SubsetReport>,
}

fn runtime(e: CoreError) -> CliError {
    match e {
        CoreError::InfeasibleBaseline { .. } => CliError::Infeasible(e.to_string()),
        other => CliError::Runtime(other.to_string()),
    }
}

struct Effective {
    seed: u64,
    grid_multiplier: usize,
    ordering: OrderingName,
    out_dir: PathBuf,
}

fn effective(config: &Config, overrides: &RunOverrides) -> Result<Effective, CliError> {
    let grid_multiplier = overrides
        .grid_multiplier
        .or(config.scenario.grid_multiplier)
        .unwrap_or(DEFAULT_GRID_MULTIPLIER);
    if grid_multiplier == 0 || !grid_multiplier.is_power_of_two() {
        return Err(CliError::Config(format!(
            "--grid-multiplier must be a power of two, got {grid_multiplier}"
        )));
    }
    let out_dir = overrides
        .out_dir
        .clone()
        .or_else(|| {
            config
                .outputs
                .as_ref()
                .and_then(|o| o.directory.as_ref())
                .map(PathBuf::from)
        })
        .unwrap_or_else(|| PathBuf::from("out"));
    Ok(Effective {
        seed: overrides.seed.or(config.scenario.seed).unwrap_or(0),
        grid_multiplier,
        ordering: overrides
            .ordering
            .or(config.scenario.ordering)
            .unwrap_or(OrderingName::Sequency),
        out_dir,
    })
}

fn check_sampled_covers_period(waveform: &Waveform, period_us: f64) -> Result<(), CliError> {
    if let Waveform::Sampled { times_us, .. } = waveform {
        let dt = times_us[1] - times_us[0];
        let trace_period = dt * times_us.len() as f64;
        if trace_period < period_us * (1.0 - 1e-9) {
            return Err(CliError::Config(format!(
                "sampled trace covers {trace_period} us but scenario.period_us is {period_us} us"
            )));
        }
    }
    Ok(())
}

/// Peak |b| of the field; the normalization scale for amplitude sweeps when
/// the waveform has no explicit amplitude parameter.
fn amplitude_scale(waveform: &Waveform, period_us: f64) -> f64 {
    match waveform {
        Waveform::Sinusoid { amplitude_nt, .. }
        | Waveform::Polychromatic { amplitude_nt, .. } => amplitude_nt.abs(),
        _ => {
            let grid = 1 << 14;
            let mut peak = 0.0f64;
            for j in 0..grid {
                let t = (j as f64 + 0.5) * period_us / grid as f64;
                peak = peak.max(waveform.evaluate(t).abs());
            }
            peak
        }
    }
}

fn auto_amplitude_sweep(
    max_phase_rad: f64,
    points: usize,
    gamma_t: f64,
    f_hat_peak: f64,
) -> Vec<f64> {
    let points = if points % 2 == 0 { points + 1 } else { points };
    let b_max = max_phase_rad / (gamma_t * f_hat_peak.max(1e-12));
    let half = (points / 2) as i64;
    (-half..=half).map(|i| i as f64 * b_max / half as f64).collect()
}

fn auto_phase_sweep(span_rad: f64, points: usize) -> Vec<f64> {
    (0..points).map(|i| i as f64 * span_rad / points as f64).collect()
}

/// Run a scenario config end to end and write its artifacts:
/// `spectrum.json`, `reconstruction.csv`, `error_report.json`, and (for noisy
/// protocols) `curves/m_*.csv`. Idempotent for a fixed seed.
pub fn run_scenario(config_path: &Path, overrides: &RunOverrides) -> Result<ScenarioArtifacts, CliError> {
    let (config, base_dir) = Config::load(config_path)?;
    let eff = effective(&config, overrides)?;
    let model = config.sensor.build();
    let waveform = config.build_waveform(&base_dir)?;
    let period = config.scenario.period_us;
    let order = config.scenario.order_n;
    let n_coeffs = 1usize << order;
    check_sampled_covers_period(&waveform, period)?;

    let field = |t: f64| waveform.evaluate(t);
    let truth = walsh_spectrum_of(&field, order, period, eff.grid_multiplier).map_err(runtime)?;
    let grid_points = n_coeffs * eff.grid_multiplier;

    let mut curves: Vec<MeasurementCurve> = Vec::new();
    let measured = match config.scenario.protocol {
        Protocol::Noiseless => truth
            .clone()
            .with_sigmas(vec![0.0; n_coeffs])
            .map_err(runtime)?,
        Protocol::AmplitudeSweep => {
            let reps = Repetitions::Finite(config.scenario.repetitions_m.unwrap_or(1));
            let scale = amplitude_scale(&waveform, period);
            let scale = if scale > 0.0 { scale } else { 1.0 };
            let shape = |t: f64| waveform.evaluate(t) / scale;
            let gamma_t = model.gamma_e_rad_per_us_nt * period;
            let f_hat_peak =
                truth.coeffs.iter().map(|c| (c / scale).abs()).fold(0.0, f64::max);
            let sweep_cfg = config.sweep.as_ref();
            let amplitudes = match sweep_cfg.and_then(|s| s.amplitudes_nt.clone()) {
                Some(a) => a,
                None => auto_amplitude_sweep(
                    sweep_cfg.and_then(|s| s.max_phase_rad).unwrap_or(0.4),
                    sweep_cfg.and_then(|s| s.points).unwrap_or(9),
                    gamma_t,
                    f_hat_peak,
                ),
            };
            let mut estimates: Vec<CoefficientEstimate> = Vec::with_capacity(n_coeffs);
            for m in 0..n_coeffs as u32 {
                let index = WalshIndex::new(m);
                let curve = acquire_curve(
                    &model,
                    &shape,
                    index,
                    period,
                    SweepVariable::AmplitudeNt(amplitudes.clone()),
                    reps,
                    eff.seed,
                    grid_points,
                )
                .map_err(runtime)?;
                let vis = model.visibility(index, period);
                let est = fit_slope_origin(&curve, model.gamma_e_rad_per_us_nt, period, vis)
                    .map_err(runtime)?;
                curves.push(curve);
                estimates.push(est);
            }
            let coeffs: Vec<f64> = estimates.iter().map(|e| e.value * scale).collect();
            let sigmas: Vec<f64> = estimates.iter().map(|e| e.sigma * scale).collect();
            WalshSpectrum::new(period, walsh_recon::Ordering::Sequency, coeffs)
                .and_then(|s| s.with_sigmas(sigmas))
                .map_err(runtime)?
        }
        Protocol::PhaseSweep => {
            let reps = Repetitions::Finite(config.scenario.repetitions_m.unwrap_or(1));
            let sweep_cfg = config.sweep.as_ref();
            let thetas = match sweep_cfg.and_then(|s| s.phases_rad.clone()) {
                Some(p) => p,
                None => auto_phase_sweep(
                    sweep_cfg.and_then(|s| s.span_rad).unwrap_or(std::f64::consts::TAU),
                    sweep_cfg.and_then(|s| s.points).unwrap_or(12),
                ),
            };
            let mut estimates: Vec<CoefficientEstimate> = Vec::with_capacity(n_coeffs);
            for m in 0..n_coeffs as u32 {
                let index = WalshIndex::new(m);
                let curve = acquire_curve(
                    &model,
                    &field,
                    index,
                    period,
                    SweepVariable::ReadoutPhaseRad(thetas.clone()),
                    reps,
                    eff.seed,
                    grid_points,
                )
                .map_err(runtime)?;
                let vis = model.visibility(index, period);
                let est = fit_cosine_phase(&curve, model.gamma_e_rad_per_us_nt, period, vis)
                    .map_err(runtime)?;
                curves.push(curve);
                estimates.push(est);
            }
            let coeffs: Vec<f64> = estimates.iter().map(|e| e.value).collect();
            let sigmas: Vec<f64> = estimates.iter().map(|e| e.sigma).collect();
            WalshSpectrum::new(period, walsh_recon::Ordering::Sequency, coeffs)
                .and_then(|s| s.with_sigmas(sigmas))
                .map_err(runtime)?
        }
    };

    let reconstruction = reconstruct(&measured).map_err(runtime)?;
    let error_nt = l2_error(&reconstruction, &field, eff.grid_multiplier);
    let unit_derivative =
        period * max_abs_derivative_of(&field, period, grid_points.max(1 << 14));
    let bound_nt = truncation_bound(unit_derivative, order).map_err(runtime)?;

    let mut subset_reports = Vec::new();
    if let Some(budget) = config.scenario.subset_budget {
        for subset in [SubsetTag::Cpmg, SubsetTag::Pdd, SubsetTag::CpmgPdd] {
            let (_, report) =
                subset_reconstruct(&field, subset, budget, order, period, eff.grid_multiplier)
                    .map_err(runtime)?;
            subset_reports.push(report);
        }
    }

    // artifacts
    let out_dir = &eff.out_dir;
    let out_spectrum = measured.to_ordering(eff.ordering.to_ordering());
    output::write_spectrum(&out_dir.join("spectrum.json"), &out_spectrum, "nT")?;
    output::write_reconstruction(&out_dir.join("reconstruction.csv"), &reconstruction)?;
    let report = json!({
        "order_n": order,
        "period_us": output::json_num(period),
        "protocol": match config.scenario.protocol {
            Protocol::AmplitudeSweep => "amplitude_sweep",
            Protocol::PhaseSweep => "phase_sweep",
            Protocol::Noiseless => "noiseless",
        },
        "l2_error_nt": output::json_num(error_nt),
        "truncation_bound_nt": output::json_num(bound_nt),
        "max_unit_derivative_nt": output::json_num(unit_derivative),
        "amplitude_resolution_nt": output::json_num(reconstruction.sigma_nt),
        "subsets": subset_reports.iter().map(output::subset_report_to_json).collect::<Vec<_>>(),
    });
    output::write_json(&out_dir.join("error_report.json"), &report)?;
    for curve in &curves {
        let name = format!("m_{:03}.csv", curve.index.sequency());
        output::write_curve(&out_dir.join("curves").join(name), curve)?;
    }

    Ok(ScenarioArtifacts {
        out_dir: eff.out_dir,
        spectrum: measured,
        reconstruction,
        l2_error_nt: error_nt,
        truncation_bound_nt: bound_nt,
        subset_reports,
    })
}

/// Results of the `compare` verb.
#[derive(Debug, Clone)]
pub struct ComparisonArtifacts {
    pub out_dir: PathBuf,
    pub sequential: Vec<SequentialComparison>,
    pub subset_reports: Vec<SubsetReport>,
}

/// Run the Walsh-vs-sequential sensitivity comparison (and, when configured,
/// the decoupling-subset error comparison) and write `comparison.json`.
pub fn run_comparison(config_path: &Path, overrides: &RunOverrides) -> Result<ComparisonArtifacts, CliError> {
    let (config, base_dir) = Config::load(config_path)?;
    let compare = config.compare.clone().ok_or_else(|| {
        CliError::Config("compare verb needs a [compare] section in the config".into())
    })?;
    let eff = effective(&config, overrides)?;
    let model = config.sensor.build();
    let waveform = config.build_waveform(&base_dir)?;
    let period = config.scenario.period_us;
    check_sampled_covers_period(&waveform, period)?;
    let field = |t: f64| waveform.evaluate(t);

    let mut sequential = Vec::new();
    for &order in &compare.orders {
        let opts = ComparisonOptions {
            trials: compare.trials.unwrap_or(400),
            walsh_repetitions: compare.walsh_repetitions_m.unwrap_or(4000),
            seed: eff.seed ^ (u64::from(order) << 32),
            include_visibility: compare.include_visibility.unwrap_or(false),
            grid_multiplier: eff.grid_multiplier,
        };
        let cmp = compare_sequential(&model, &field, order, period, &opts).map_err(runtime)?;
        sequential.push(cmp);
    }

    let mut subset_reports = Vec::new();
    if let Some(budget) = compare.subset_budget {
        for subset in [SubsetTag::Cpmg, SubsetTag::Pdd, SubsetTag::CpmgPdd] {
            let (_, report) = subset_reconstruct(
                &field,
                subset,
                budget,
                config.scenario.order_n,
                period,
                eff.grid_multiplier,
            )
            .map_err(runtime)?;
            subset_reports.push(report);
        }
    }

    let doc = json!({
        "period_us": output::json_num(period),
        "sequential": sequential.iter().map(output::comparison_to_json).collect::<Vec<_>>(),
        "subsets": subset_reports.iter().map(output::subset_report_to_json).collect::<Vec<_>>(),
    });
    output::write_json(&eff.out_dir.join("comparison.json"), &doc)?;

    Ok(ComparisonArtifacts { out_dir: eff.out_dir, sequential, subset_reports })
}

/// `transform` verb: sampled CSV → Walsh spectrum file.
pub fn run_transform(
    input: &Path,
    order: u32,
    period_us: Option<f64>,
    overrides: &RunOverrides,
) -> Result<PathBuf, CliError> {
    let waveform = output::read_waveform_csv(input)?;
    let trace_period = match &waveform {
        Waveform::Sampled { times_us, .. } => {
            (times_us[1] - times_us[0]) * times_us.len() as f64
        }
        _ => unreachable!("csv reader returns sampled waveforms"),
    };
    let period = period_us.unwrap_or(trace_period);
    if period > trace_period * (1.0 + 1e-9) {
        return Err(CliError::Config(format!(
            "--period-us {period} exceeds the sampled trace length {trace_period} us"
        )));
    }
    let q = overrides.grid_multiplier.unwrap_or(DEFAULT_GRID_MULTIPLIER);
    if q == 0 || !q.is_power_of_two() {
        return Err(CliError::Config(format!(
            "--grid-multiplier must be a power of two, got {q}"
        )));
    }
    let ordering = overrides.ordering.unwrap_or(OrderingName::Sequency);
    let spectrum = walsh_spectrum_of(|t| waveform.evaluate(t), order, period, q)
        .map_err(runtime)?
        .to_ordering(ordering.to_ordering());
    let out_dir = overrides.out_dir.clone().unwrap_or_else(|| PathBuf::from("."));
    let path = out_dir.join("spectrum.json");
    output::write_spectrum(&path, &spectrum, "nT")?;
    Ok(path)
}

/// `reconstruct` verb: spectrum file → piecewise-constant trace CSV.
pub fn run_reconstruct(spectrum_path: &Path, overrides: &RunOverrides) -> Result<PathBuf, CliError> {
    let (spectrum, _units) = output::read_spectrum(spectrum_path)?;
    let rec = reconstruct(&spectrum).map_err(runtime)?;
    let out_dir = overrides.out_dir.clone().unwrap_or_else(|| PathBuf::from("."));
    let path = out_dir.join("reconstruction.csv");
    output::write_reconstruction(&path, &rec)?;
    Ok(path)
}

/// `bound` verb: waveform + order → truncation-error bound, as a JSON value.
pub fn run_bound(
    config: Option<&Path>,
    input: Option<&Path>,
    order: Option<u32>,
    period_us: Option<f64>,
) -> Result<serde_json::Value, CliError> {
    let (waveform, period, order) = match (config, input) {
        (Some(cfg_path), None) => {
            let (config, base_dir) = Config::load(cfg_path)?;
            let waveform = config.build_waveform(&base_dir)?;
            let period = period_us.unwrap_or(config.scenario.period_us);
            (waveform, period, order.unwrap_or(config.scenario.order_n))
        }
        (None, Some(csv_path)) => {
            let waveform = output::read_waveform_csv(csv_path)?;
            let trace_period = match &waveform {
                Waveform::Sampled { times_us, .. } => {
                    (times_us[1] - times_us[0]) * times_us.len() as f64
                }
                _ => unreachable!(),
            };
            let order = order.ok_or_else(|| {
                CliError::Config("bound with --input needs --order".into())
            })?;
            (waveform, period_us.unwrap_or(trace_period), order)
        }
        _ => {
            return Err(CliError::Config(
                "bound needs exactly one of --config or --input".into(),
            ))
        }
    };
    if !(period > 0.0) {
        return Err(CliError::Config(format!("period must be positive, got {period}")));
    }
    let unit_derivative =
        period * max_abs_derivative_of(|t| waveform.evaluate(t), period, 1 << 16);
    let bound = truncation_bound(unit_derivative, order).map_err(runtime)?;
    Ok(json!({
        "order_n": order,
        "period_us": output::json_num(period),
        "max_unit_derivative_nt": output::json_num(unit_derivative),
        "truncation_bound_nt": output::json_num(bound),
    }))
}
