//! Scenario configuration: one TOML file per scenario, with explicit unit
//! suffixes on every physical key (`period_us`, `amplitude_nt`, ...).

use std::path::{Path, PathBuf};

use serde::Deserialize;
use walsh_recon::sensor::SensorModel;
use walsh_recon::waveform::{NeuronConversion, Tone, Waveform};
use walsh_recon::Ordering;

use crate::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub scenario: ScenarioSection,
    pub waveform: WaveformSection,
    #[serde(default)]
    pub sensor: SensorSection,
    #[serde(default)]
    pub sweep: Option<SweepSection>,
    #[serde(default)]
    pub compare: Option<CompareSection>,
    #[serde(default)]
    pub outputs: Option<OutputsSection>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    pub period_us: f64,
    pub order_n: u32,
    pub protocol: Protocol,
    #[serde(default)]
    pub repetitions_m: Option<u64>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub grid_multiplier: Option<usize>,
    #[serde(default)]
    pub ordering: Option<OrderingName>,
    /// When set, the error report also compares CPMG/PDD subset
    /// reconstructions at this coefficient budget.
    #[serde(default)]
    pub subset_budget: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Protocol {
    AmplitudeSweep,
    PhaseSweep,
    Noiseless,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrderingName {
    Sequency,
    Paley,
    Hadamard,
}

impl OrderingName {
    pub fn to_ordering(self) -> Ordering {
        match self {
            OrderingName::Sequency => Ordering::Sequency,
            OrderingName::Paley => Ordering::Paley,
            OrderingName::Hadamard => Ordering::Hadamard,
        }
    }

    pub fn parse(name: &str) -> Result<Self, CliError> {
        match name {
            "sequency" => Ok(OrderingName::Sequency),
            "paley" => Ok(OrderingName::Paley),
            "hadamard" => Ok(OrderingName::Hadamard),
            other => Err(CliError::Config(format!(
                "unknown ordering `{other}` (expected sequency, paley, or hadamard)"
            ))),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            OrderingName::Sequency => "sequency",
            OrderingName::Paley => "paley",
            OrderingName::Hadamard => "hadamard",
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum WaveformSection {
    Sinusoid {
        amplitude_nt: f64,
        frequency_khz: f64,
        #[serde(default)]
        phase_rad: f64,
    },
    Polychromatic {
        amplitude_nt: f64,
        components: Vec<ToneSection>,
    },
    /// Skew-normal action-potential impulse radiated through the waveguide
    /// conversion `b = −c·dΦ/dt`.
    NeuronAp {
        amplitude_vpp: f64,
        location_us: f64,
        scale_us: f64,
        shape: f64,
        #[serde(default)]
        conversion_ut_per_vpp_khz: Option<f64>,
    },
    /// Two-column CSV `time_us,field_nT` with header, resolved relative to
    /// the config file.
    SampledCsv { path: String },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToneSection {
    pub rel_amplitude: f64,
    pub frequency_khz: f64,
    #[serde(default)]
    pub phase_rad: f64,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensorSection {
    /// γ_e/2π in Hz/nT (NV default 28).
    pub gamma_e_hz_per_nt: Option<f64>,
    pub efficiency_c: Option<f64>,
    pub s0_counts_per_readout: Option<f64>,
    pub s1_counts_per_readout: Option<f64>,
    pub t2_base_us: Option<f64>,
    pub p_base: Option<f64>,
    pub t2_scaling_exponent: Option<f64>,
    pub n_nv: Option<f64>,
    pub pi_pulse_us: Option<f64>,
    pub t2_star_us: Option<f64>,
}

impl SensorSection {
    pub fn build(&self) -> SensorModel {
        let mut model = SensorModel::default();
        if let Some(v) = self.gamma_e_hz_per_nt {
            model.gamma_e_rad_per_us_nt = 2.0 * std::f64::consts::PI * v * 1e-6;
        }
        if let Some(v) = self.efficiency_c {
            model.efficiency_c = v;
        }
        if let Some(v) = self.s0_counts_per_readout {
            model.s0_counts = v;
        }
        if let Some(v) = self.s1_counts_per_readout {
            model.s1_counts = v;
        }
        if let Some(v) = self.t2_base_us {
            model.t2_base_us = v;
        }
        if let Some(v) = self.p_base {
            model.p_base = v;
        }
        if let Some(v) = self.t2_scaling_exponent {
            model.t2_scaling_exponent = v;
        }
        if let Some(v) = self.n_nv {
            model.n_nv = v;
        }
        if let Some(v) = self.pi_pulse_us {
            model.pi_pulse_us = v;
        }
        if let Some(v) = self.t2_star_us {
            model.t2_star_us = Some(v);
        }
        model
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    /// Explicit amplitude sweep points (amplitude protocol).
    #[serde(default)]
    pub amplitudes_nt: Option<Vec<f64>>,
    /// Auto amplitude sweep: symmetric range reaching this phase at the
    /// largest normalized coefficient. Default 0.4 rad.
    #[serde(default)]
    pub max_phase_rad: Option<f64>,
    /// Explicit read-out phase sweep points (phase protocol).
    #[serde(default)]
    pub phases_rad: Option<Vec<f64>>,
    /// Auto phase sweep span, default 2π.
    #[serde(default)]
    pub span_rad: Option<f64>,
    /// Points for auto-generated sweeps. Default 9 (amplitude) or 12 (phase).
    #[serde(default)]
    pub points: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareSection {
    /// Orders n to compare; each runs at N = 2ⁿ points.
    pub orders: Vec<u32>,
    #[serde(default)]
    pub trials: Option<usize>,
    #[serde(default)]
    pub walsh_repetitions_m: Option<u64>,
    #[serde(default)]
    pub include_visibility: Option<bool>,
    /// When set, also compare CPMG/PDD subset reconstructions at this budget
    /// (uses the scenario order).
    #[serde(default)]
    pub subset_budget: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputsSection {
    pub directory: Option<String>,
}

impl Config {
    /// Parse and validate a scenario file.
    pub fn load(path: &Path) -> Result<(Config, PathBuf), CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::Config(format!("cannot read config {}: {e}", path.display()))
        })?;
        let config: Config = toml::from_str(&text).map_err(|e| {
            CliError::Config(format!("invalid config {}: {e}", path.display()))
        })?;
        config.validate()?;
        let base = path.parent().unwrap_or_else(|| Path::new(".")).to_path_buf();
        Ok((config, base))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let s = &self.scenario;
        if !(s.period_us > 0.0) {
            return Err(CliError::Config(format!(
                "scenario.period_us must be positive, got {}",
                s.period_us
            )));
        }
        if s.order_n > 20 {
            return Err(CliError::Config(format!(
                "scenario.order_n = {} is out of range (max 20)",
                s.order_n
            )));
        }
        if let Some(q) = s.grid_multiplier {
            if q == 0 || !q.is_power_of_two() {
                return Err(CliError::Config(format!(
                    "scenario.grid_multiplier must be a power of two, got {q}"
                )));
            }
        }
        match s.protocol {
            Protocol::Noiseless => {}
            Protocol::AmplitudeSweep | Protocol::PhaseSweep => {
                match s.repetitions_m {
                    None => {
                        return Err(CliError::Config(
                            "scenario.repetitions_m is required for noisy protocols".into(),
                        ))
                    }
                    Some(0) => {
                        return Err(CliError::Config(
                            "scenario.repetitions_m must be at least 1".into(),
                        ))
                    }
                    Some(_) => {}
                }
                if let Some(sweep) = &self.sweep {
                    let empty = match s.protocol {
                        Protocol::AmplitudeSweep => {
                            sweep.amplitudes_nt.as_ref().is_some_and(|a| a.is_empty())
                        }
                        _ => sweep.phases_rad.as_ref().is_some_and(|p| p.is_empty()),
                    };
                    if empty {
                        return Err(CliError::Config("sweep points must not be empty".into()));
                    }
                    if let Some(p) = sweep.points {
                        if p < 4 {
                            return Err(CliError::Config(format!(
                                "sweep.points must be at least 4, got {p}"
                            )));
                        }
                    }
                }
            }
        }
        // bandwidth cap τ = T/N ≥ t_π is checked against the sensor model
        let model = self.sensor.build();
        model
            .validate()
            .map_err(|e| CliError::Config(format!("sensor parameters invalid: {e}")))?;
        if !model.bandwidth_allows(s.order_n, s.period_us) {
            let tau = s.period_us / (1u64 << s.order_n) as f64;
            return Err(CliError::Infeasible(format!(
                "infeasible bandwidth: sampling time tau = T/2^n = {tau} us is shorter than \
                 the pi-pulse duration {} us",
                model.pi_pulse_us
            )));
        }
        if let Some(budget) = s.subset_budget {
            let n_coeffs = 1usize << s.order_n;
            if budget == 0 || budget > n_coeffs {
                return Err(CliError::Config(format!(
                    "scenario.subset_budget must be in 1..={n_coeffs}, got {budget}"
                )));
            }
        }
        if let Some(cmp) = &self.compare {
            if cmp.orders.is_empty() {
                return Err(CliError::Config("compare.orders must not be empty".into()));
            }
            if let Some(t) = cmp.trials {
                if t < 2 {
                    return Err(CliError::Config("compare.trials must be at least 2".into()));
                }
            }
        }
        Ok(())
    }

    /// Build the field model; sampled traces resolve relative to `base_dir`.
    pub fn build_waveform(&self, base_dir: &Path) -> Result<Waveform, CliError> {
        match &self.waveform {
            WaveformSection::Sinusoid { amplitude_nt, frequency_khz, phase_rad } => Ok(
                Waveform::sinusoid(*amplitude_nt, *frequency_khz, *phase_rad),
            ),
            WaveformSection::Polychromatic { amplitude_nt, components } => {
                let tones: Vec<Tone> = components
                    .iter()
                    .map(|c| Tone {
                        rel_amplitude: c.rel_amplitude,
                        frequency_khz: c.frequency_khz,
                        phase_rad: c.phase_rad,
                    })
                    .collect();
                Waveform::polychromatic(*amplitude_nt, tones)
                    .map_err(|e| CliError::Config(format!("waveform invalid: {e}")))
            }
            WaveformSection::NeuronAp {
                amplitude_vpp,
                location_us,
                scale_us,
                shape,
                conversion_ut_per_vpp_khz,
            } => {
                let phi =
                    Waveform::skew_normal_ap(*amplitude_vpp, *location_us, *scale_us, *shape)
                        .map_err(|e| CliError::Config(format!("waveform invalid: {e}")))?;
                let conversion = conversion_ut_per_vpp_khz
                    .map(|c| NeuronConversion { coefficient_ut_per_vpp_khz: c })
                    .unwrap_or_default();
                Ok(walsh_recon::radiated_field(phi, conversion))
            }
            WaveformSection::SampledCsv { path } => {
                let resolved = base_dir.join(path);
                crate::output::read_waveform_csv(&resolved)
            }
        }
    }
}
