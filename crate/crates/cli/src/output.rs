//! Deterministic artifact I/O.
//!
//! All numeric output is decimal text with 12 significant digits, JSON keys
//! are sorted, and nothing time- or host-dependent is written, so a scenario
//! re-run with the same seed produces byte-identical files.

use std::fs;
use std::path::Path;

use serde::Deserialize;
use serde_json::{json, Value};
use walsh_recon::reconstruct::{Reconstruction, SubsetReport, SubsetTag};
use walsh_recon::sensor::{MeasurementCurve, SweepVariable};
use walsh_recon::waveform::Waveform;
use walsh_recon::{Ordering, SequentialComparison, WalshSpectrum};

use crate::config::OrderingName;
use crate::CliError;

/// Round to 12 significant digits (the output precision contract).
pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}

/// 12-significant-digit decimal text for CSV columns.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.11e}")
    } else {
        // CSV carries the IEEE names; JSON uses null instead
        format!("{x}")
    }
}

/// JSON number rounded to the output precision; non-finite becomes null.
pub fn json_num(x: f64) -> Value {
    if x.is_finite() {
        json!(round_sig(x))
    } else {
        Value::Null
    }
}

pub fn ordering_name(ordering: Ordering) -> &'static str {
    match ordering {
        Ordering::Sequency => OrderingName::Sequency.as_str(),
        Ordering::Paley => OrderingName::Paley.as_str(),
        Ordering::Hadamard => OrderingName::Hadamard.as_str(),
    }
}

pub fn subset_name(tag: SubsetTag) -> String {
    match tag {
        SubsetTag::FullWalsh => "full_walsh".into(),
        SubsetTag::TopK(k) => format!("top_{k}"),
        SubsetTag::Cpmg => "cpmg".into(),
        SubsetTag::Pdd => "pdd".into(),
        SubsetTag::CpmgPdd => "cpmg_pdd".into(),
    }
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)
            .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", parent.display())))?;
    }
    fs::write(path, text)
        .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))
}

pub fn write_json(path: &Path, value: &Value) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Runtime(format!("cannot encode {}: {e}", path.display())))?;
    text.push('\n');
    write_text(path, &text)
}

pub fn spectrum_to_json(spectrum: &WalshSpectrum, units: &str) -> Value {
    json!({
        "order_n": spectrum.order(),
        "ordering": ordering_name(spectrum.ordering),
        "period_us": json_num(spectrum.period_us),
        "units": units,
        "coefficients": spectrum.coeffs.iter().map(|&c| json_num(c)).collect::<Vec<_>>(),
        "sigmas": match &spectrum.sigmas {
            Some(s) => Value::Array(s.iter().map(|&v| json_num(v)).collect()),
            None => Value::Null,
        },
    })
}

pub fn write_spectrum(path: &Path, spectrum: &WalshSpectrum, units: &str) -> Result<(), CliError> {
    write_json(path, &spectrum_to_json(spectrum, units))
}

#[derive(Debug, Deserialize)]
struct SpectrumFile {
    ordering: String,
    period_us: f64,
    #[serde(default)]
    units: Option<String>,
    coefficients: Vec<f64>,
    #[serde(default)]
    sigmas: Option<Vec<Option<f64>>>,
}

/// Read a spectrum written by [`write_spectrum`]; returns the spectrum and
/// its units label.
pub fn read_spectrum(path: &Path) -> Result<(WalshSpectrum, String), CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read spectrum {}: {e}", path.display())))?;
    let file: SpectrumFile = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("invalid spectrum {}: {e}", path.display())))?;
    let ordering = OrderingName::parse(&file.ordering)?.to_ordering();
    let mut spectrum = WalshSpectrum::new(file.period_us, ordering, file.coefficients)
        .map_err(|e| CliError::Config(format!("invalid spectrum {}: {e}", path.display())))?;
    if let Some(sigmas) = file.sigmas {
        let sigmas: Vec<f64> = sigmas.into_iter().map(|s| s.unwrap_or(f64::INFINITY)).collect();
        spectrum = spectrum
            .with_sigmas(sigmas)
            .map_err(|e| CliError::Config(format!("invalid spectrum {}: {e}", path.display())))?;
    }
    Ok((spectrum, file.units.unwrap_or_else(|| "nT".into())))
}

/// `time_us,field_nT,sigma_nT` rows at the cell midpoints of the trace.
pub fn write_reconstruction(path: &Path, rec: &Reconstruction) -> Result<(), CliError> {
    let n = rec.values_nt.len();
    let dt = rec.period_us / n as f64;
    let mut text = String::from("time_us,field_nT,sigma_nT\n");
    for (j, &v) in rec.values_nt.iter().enumerate() {
        let t = (j as f64 + 0.5) * dt;
        text.push_str(&format!("{},{},{}\n", fmt_f64(t), fmt_f64(v), fmt_f64(rec.sigma_nt)));
    }
    write_text(path, &text)
}

/// Per-coefficient measurement curve; the first column matches the swept
/// variable.
pub fn write_curve(path: &Path, curve: &MeasurementCurve) -> Result<(), CliError> {
    let (header, xs): (&str, &[f64]) = match &curve.swept {
        SweepVariable::AmplitudeNt(a) => ("amplitude_nT,mean_signal,std_err\n", a),
        SweepVariable::ReadoutPhaseRad(p) => ("theta_rad,mean_signal,std_err\n", p),
    };
    let mut text = String::from(header);
    for i in 0..xs.len() {
        text.push_str(&format!(
            "{},{},{}\n",
            fmt_f64(xs[i]),
            fmt_f64(curve.mean_signal[i]),
            fmt_f64(curve.std_err[i])
        ));
    }
    write_text(path, &text)
}

pub fn subset_report_to_json(report: &SubsetReport) -> Value {
    json!({
        "subset": subset_name(report.subset),
        "budget": report.budget_requested,
        "budget_used": report.budget_used,
        "truncated": report.truncated,
        "e_n_nt": json_num(report.error_nt),
        "full_walsh_e_n_nt": json_num(report.full_walsh_error_nt),
        "bound_nt": json_num(report.bound_nt),
    })
}

pub fn comparison_to_json(cmp: &SequentialComparison) -> Value {
    json!({
        "n_points": cmp.n_points,
        "analytic_sensitivity_ratio": json_num(cmp.analytic_sensitivity_ratio),
        "measured_sensitivity_ratio": json_num(cmp.measured_sensitivity_ratio),
        "analytic_time_ratio": json_num(cmp.analytic_time_ratio),
        "measured_time_ratio": json_num(cmp.measured_time_ratio),
        "walsh_resolution_nt": json_num(cmp.walsh_resolution_nt),
        "sequential_resolution_nt": json_num(cmp.sequential_resolution_nt),
    })
}

/// Read a two-column `time_us,field_nT` CSV into a sampled waveform.
pub fn read_waveform_csv(path: &Path) -> Result<Waveform, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read waveform {}: {e}", path.display())))?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim_start().starts_with("time_us") => {}
        _ => {
            return Err(CliError::Config(format!(
                "{}:1: expected header `time_us,field_nT`",
                path.display()
            )))
        }
    }
    let mut times = Vec::new();
    let mut values = Vec::new();
    for (idx, line) in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut cols = line.split(',');
        let (t, v) = match (cols.next(), cols.next()) {
            (Some(t), Some(v)) => (t, v),
            _ => {
                return Err(CliError::Config(format!(
                    "{}:{}: expected two comma-separated columns",
                    path.display(),
                    idx + 1
                )))
            }
        };
        let parse = |s: &str, what: &str| {
            s.trim().parse::<f64>().map_err(|e| {
                CliError::Config(format!("{}:{}: bad {what} `{s}`: {e}", path.display(), idx + 1))
            })
        };
        times.push(parse(t, "time_us")?);
        values.push(parse(v, "field_nT")?);
    }
    Waveform::sampled(times, values)
        .map_err(|e| CliError::Config(format!("{}: invalid sampled trace: {e}", path.display())))
}
