//! Named end-to-end measurement campaigns described by TOML files.
//!
//! A scenario wires the trap model, the RF amplitude loop, the Ramsey
//! tracker, and the stability analytics into one reproducible run. The TOML
//! schema is strict: unknown keys are rejected, every omitted field falls
//! back to the standard operating point of the reference trap, and the fully
//! resolved configuration is echoed into the run manifest so an artifact can
//! always be traced back to the numbers that produced it.
//!
//! All config fields carry their unit in the name (`_v`, `_hz`, `_s`,
//! `_ppm`, `_c`); the conversion to SI/angular quantities happens exactly
//! once, when the tables are lowered into the core types.

mod pipeline;

pub use pipeline::{
    run_scenario, CheckResult, GammaPoint, Metrics, ScenarioOutcome, SeriesMetrics,
};

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::servo::{
    ComponentChain, NoiseSuite, ResonatorModel, ServoConfig, SourceTone, TemperatureSet,
    TemperatureTrace,
};
use crate::spectroscopy::RamseyConfig;
use crate::stability::AdevMode;
use crate::trap::{DriveParams, IonSpecies, TrapConfig, TrapGeometry};
use crate::units::angular_from_hz;

/// What a scenario measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    /// Track the transverse COM frequency of a single ion under the RF loop.
    Transverse,
    /// Track the axial COM frequency under scripted endcap-supply noise.
    Axial,
    /// Track zigzag and both COM modes of a chain parked near the critical
    /// point.
    Zigzag,
    /// Ramp the detector temperature under lock and recover the imprinted
    /// temperature coefficient.
    TemperatureRamp,
    /// Contrast-decay rates on the zigzag mode, locked against unlocked,
    /// swept over zigzag frequencies.
    Decoherence,
}

impl ScenarioKind {
    pub fn label(&self) -> &'static str {
        match self {
            ScenarioKind::Transverse => "transverse",
            ScenarioKind::Axial => "axial",
            ScenarioKind::Zigzag => "zigzag",
            ScenarioKind::TemperatureRamp => "temperature_ramp",
            ScenarioKind::Decoherence => "decoherence",
        }
    }

    /// The series an unqualified expectation refers to.
    pub fn primary_series(&self) -> &'static str {
        match self {
            ScenarioKind::Transverse | ScenarioKind::TemperatureRamp => "transverse_com",
            ScenarioKind::Axial => "axial_com",
            ScenarioKind::Zigzag => "zigzag",
            ScenarioKind::Decoherence => "zigzag",
        }
    }

    fn known_series(&self) -> &'static [&'static str] {
        match self {
            ScenarioKind::Transverse | ScenarioKind::TemperatureRamp => &["transverse_com"],
            ScenarioKind::Axial => &["axial_com"],
            ScenarioKind::Zigzag => &["transverse_com", "axial_com", "zigzag"],
            ScenarioKind::Decoherence => &[],
        }
    }
}

/// Trap electrode and calibration table, `[trap]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrapTable {
    pub rf_voltage_v: f64,
    pub drive_frequency_hz: f64,
    pub endcap_voltage_v: f64,
    pub rod_bias_v: f64,
    pub effective_radius_m: f64,
    pub half_endcap_distance_m: f64,
    pub kappa: f64,
    pub c22: f64,
    pub c20: f64,
    pub include_rod_axial_leak: bool,
}

impl Default for TrapTable {
    fn default() -> Self {
        TrapTable {
            rf_voltage_v: 600.0,
            drive_frequency_hz: 16.9e6,
            endcap_voltage_v: 78.0,
            rod_bias_v: 0.0,
            effective_radius_m: 6.498287356233826e-4,
            half_endcap_distance_m: 1.25e-3,
            kappa: 0.07399373463273864,
            c22: 0.889,
            c20: 0.0106,
            include_rod_axial_leak: false,
        }
    }
}

impl TrapTable {
    pub fn to_config(&self) -> TrapConfig {
        TrapConfig {
            species: IonSpecies::yb171(),
            geometry: TrapGeometry {
                effective_radius: self.effective_radius_m,
                half_endcap_distance: self.half_endcap_distance_m,
                c22: self.c22,
                c20: self.c20,
                kappa: self.kappa,
                include_rod_axial_leak: self.include_rod_axial_leak,
            },
            drive: DriveParams {
                rf_amplitude: self.rf_voltage_v,
                rf_angular_frequency: angular_from_hz(self.drive_frequency_hz),
                rod_dc: self.rod_bias_v,
                endcap_dc: self.endcap_voltage_v,
            },
        }
    }
}

/// RF amplitude stabilization table, `[loop]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ControlTable {
    pub locked: bool,
    pub sample_period_s: f64,
    /// Keep every n-th servo sample in the recorded trace.
    pub record_stride: usize,
    pub proportional_gain: f64,
    pub integrator_gain_per_s: f64,
    pub setpoint_v: f64,
    pub setpoint_resolution_bits: u32,
    pub setpoint_stability_ppm: f64,
    pub reference_span_v: f64,
    pub loaded_q: f64,
    pub step_gain_v: f64,
    pub divider_fraction: f64,
    pub chain_ratio: f64,
    pub detector_tempco_per_c: f64,
    pub divider_tempco_per_c: f64,
    pub reference_temperature_c: f64,
}

impl Default for ControlTable {
    fn default() -> Self {
        ControlTable {
            locked: true,
            sample_period_s: 1e-3,
            record_stride: 100,
            proportional_gain: 0.02,
            integrator_gain_per_s: 62.5,
            setpoint_v: 2.4,
            setpoint_resolution_bits: 20,
            setpoint_stability_ppm: 0.25,
            reference_span_v: 5.0,
            loaded_q: 180.0,
            step_gain_v: 1200.0,
            divider_fraction: 0.02,
            chain_ratio: 0.004,
            detector_tempco_per_c: 1400e-6,
            divider_tempco_per_c: 17e-6,
            reference_temperature_c: 23.0,
        }
    }
}

impl ControlTable {
    pub fn servo_config(&self) -> ServoConfig {
        ServoConfig {
            proportional_gain: self.proportional_gain,
            integrator_gain: self.integrator_gain_per_s,
            setpoint: self.setpoint_v,
            setpoint_resolution_bits: self.setpoint_resolution_bits,
            setpoint_stability_ppm: self.setpoint_stability_ppm,
            actuator_limits: (0.0, 1.0),
            sample_period: self.sample_period_s,
            reference_span: self.reference_span_v,
        }
    }

    pub fn resonator(&self, drive_frequency_hz: f64) -> ResonatorModel {
        ResonatorModel {
            loaded_q: self.loaded_q,
            center_frequency: angular_from_hz(drive_frequency_hz),
            step_gain: self.step_gain_v,
        }
    }

    pub fn component_chain(&self) -> ComponentChain {
        ComponentChain {
            divider_fraction: self.divider_fraction,
            chain_ratio: self.chain_ratio,
            detector_tempco: self.detector_tempco_per_c,
            divider_tempco: self.divider_tempco_per_c,
            reference_temperature: self.reference_temperature_c,
        }
    }
}

/// RF source noise and component temperatures, `[noise]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseTable {
    pub white_ppm: f64,
    pub random_walk_ppm: f64,
    pub tone: Option<SourceTone>,
    pub temperatures: TemperatureSet,
}

impl Default for NoiseTable {
    fn default() -> Self {
        NoiseTable {
            white_ppm: 1.5,
            random_walk_ppm: 4.0,
            tone: None,
            temperatures: TemperatureSet::default(),
        }
    }
}

impl NoiseTable {
    pub fn to_suite(&self, seed: u64) -> NoiseSuite {
        NoiseSuite {
            amplitude: crate::servo::AmplitudeNoise {
                white_ppm: self.white_ppm,
                random_walk_ppm: self.random_walk_ppm,
            },
            temperatures: self.temperatures.clone(),
            tone: self.tone,
            seed,
        }
    }
}

/// Ion chain table, `[chain]`; required for the zigzag and decoherence
/// kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainTable {
    pub ion_count: usize,
}

/// Fractional frequency noise of the axial confinement, `[axial_noise]`.
///
/// The endcap supply is outside the RF loop, so its drift reaches the axial
/// mode unsuppressed; the conventions match the RF amplitude noise
/// (`white_ppm` is the one-second-average deviation, `random_walk_ppm` is
/// per square-root second).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AxialNoiseTable {
    pub white_ppm: f64,
    pub random_walk_ppm: f64,
    pub tone: Option<SourceTone>,
    pub sample_period_s: f64,
}

impl Default for AxialNoiseTable {
    fn default() -> Self {
        AxialNoiseTable {
            white_ppm: 1.0,
            random_walk_ppm: 0.0,
            tone: None,
            sample_period_s: 0.1,
        }
    }
}

/// Ramsey tracking protocol, `[measurement]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MeasurementTable {
    /// Free-evolution delay; defaults to 1 ms for transverse and zigzag
    /// protocols, 10 ms for the slower axial mode.
    pub delay_s: Option<f64>,
    pub contrast: f64,
    pub phase_offset_rad: f64,
    pub offset: f64,
    pub shots_per_point: u64,
    pub detection_error: f64,
    /// Time between tracker updates; defaults to the two-point acquisition
    /// time, at least one second.
    pub cadence_s: Option<f64>,
}

impl Default for MeasurementTable {
    fn default() -> Self {
        MeasurementTable {
            delay_s: None,
            contrast: 0.4,
            phase_offset_rad: 0.0,
            offset: 0.5,
            shots_per_point: 100,
            detection_error: 0.0,
            cadence_s: None,
        }
    }
}

impl MeasurementTable {
    fn default_delay(kind: ScenarioKind) -> f64 {
        match kind {
            ScenarioKind::Axial => 10e-3,
            _ => 1e-3,
        }
    }

    pub fn ramsey(&self, kind: ScenarioKind) -> RamseyConfig {
        RamseyConfig {
            delay: self.delay_s.unwrap_or_else(|| Self::default_delay(kind)),
            contrast: self.contrast,
            phase_offset: self.phase_offset_rad,
            offset: self.offset,
            shots_per_point: self.shots_per_point,
            detection_error: self.detection_error,
        }
    }

    pub fn cadence(&self, kind: ScenarioKind) -> f64 {
        self.cadence_s.unwrap_or_else(|| {
            let delay = self.delay_s.unwrap_or_else(|| Self::default_delay(kind));
            (2.0 * self.shots_per_point as f64 * delay).max(1.0)
        })
    }
}

/// Stability analysis settings, `[analysis]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisTable {
    /// Defaults to fractional for the single-ion transverse scenarios and
    /// absolute everywhere a comparison in hertz is the point.
    pub mode: Option<AdevMode>,
    /// Averaging time quoted in the run report; defaults per kind.
    pub report_tau_s: Option<f64>,
}

impl Default for AnalysisTable {
    fn default() -> Self {
        AnalysisTable {
            mode: None,
            report_tau_s: None,
        }
    }
}

impl AnalysisTable {
    pub fn adev_mode(&self, kind: ScenarioKind) -> AdevMode {
        self.mode.unwrap_or(match kind {
            ScenarioKind::Transverse | ScenarioKind::TemperatureRamp => AdevMode::Fractional,
            _ => AdevMode::Absolute,
        })
    }

    pub fn report_tau(&self, kind: ScenarioKind) -> f64 {
        self.report_tau_s.unwrap_or(match kind {
            ScenarioKind::Transverse | ScenarioKind::TemperatureRamp => 200.0,
            ScenarioKind::Axial => 300.0,
            _ => 100.0,
        })
    }
}

/// Contrast-decay sweep, `[decoherence]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecoherenceTable {
    /// Zigzag frequencies to park the chain at, Hz.
    pub zz_frequencies_hz: Vec<f64>,
    /// Ramsey delays probed at each point, s.
    pub delays_s: Vec<f64>,
    #[serde(default = "default_points_per_fringe")]
    pub points_per_fringe: usize,
    /// Wall-clock cost of one shot (state preparation + delay + readout).
    #[serde(default = "default_shot_duration")]
    pub shot_duration_s: f64,
}

fn default_points_per_fringe() -> usize {
    12
}

fn default_shot_duration() -> f64 {
    5e-3
}

/// One acceptance bound evaluated after the run; any failed check turns the
/// process exit code to 3.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ExpectCheck {
    /// Bound the Allan deviation at one averaging time, in hertz and/or ppm
    /// of the series mean.
    Adev {
        #[serde(default)]
        series: Option<String>,
        tau_s: f64,
        #[serde(default)]
        min_hz: Option<f64>,
        #[serde(default)]
        max_hz: Option<f64>,
        #[serde(default)]
        min_ppm: Option<f64>,
        #[serde(default)]
        max_ppm: Option<f64>,
    },
    /// Bound the fitted linear drift accumulated over the whole run.
    TotalDrift {
        #[serde(default)]
        series: Option<String>,
        max_hz: f64,
    },
    /// The zigzag mode's deviation exceeds both COM modes' at this
    /// averaging time.
    ZigzagExceedsCom { tau_s: f64 },
    /// The temperature coefficient recovered from the ramp, ppm/degC.
    RecoveredTempco {
        min_ppm_per_c: f64,
        max_ppm_per_c: f64,
    },
    /// Every sweep point decoheres slower locked than unlocked.
    GammaOrdering {},
    /// Unlocked decay rates divided by the squared sensitivity
    /// amplification agree across the sweep within this max/min factor.
    GammaScaling { max_spread_factor: f64 },
    /// The servo stayed inside its actuation range.
    LockHolds {},
}

impl ExpectCheck {
    fn series(&self) -> Option<&str> {
        match self {
            ExpectCheck::Adev { series, .. } | ExpectCheck::TotalDrift { series, .. } => {
                series.as_deref()
            }
            _ => None,
        }
    }
}

/// A complete, loadable measurement campaign.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub kind: ScenarioKind,
    pub seed: u64,
    pub duration_s: f64,
    #[serde(default)]
    pub trap: TrapTable,
    #[serde(rename = "loop", default)]
    pub control: ControlTable,
    #[serde(default)]
    pub noise: NoiseTable,
    #[serde(default)]
    pub chain: Option<ChainTable>,
    #[serde(default)]
    pub axial_noise: Option<AxialNoiseTable>,
    #[serde(default)]
    pub measurement: MeasurementTable,
    #[serde(default)]
    pub analysis: AnalysisTable,
    #[serde(default)]
    pub decoherence: Option<DecoherenceTable>,
    #[serde(default, rename = "expect")]
    pub expectations: Vec<ExpectCheck>,
}

/// Parse a scenario from TOML text and validate it.
pub fn load_scenario_str(text: &str) -> Result<Scenario> {
    let scenario: Scenario = toml::from_str(text)?;
    scenario.validate()?;
    Ok(scenario)
}

/// Load and validate a scenario file.
pub fn load_scenario<P: AsRef<Path>>(path: P) -> Result<Scenario> {
    let text = fs::read_to_string(path)?;
    load_scenario_str(&text)
}

fn invalid(message: String) -> Error {
    Error::ScenarioValidation(message)
}

impl Scenario {
    /// Check every table and the cross-table consistency rules; returns the
    /// first violation with a field-level message.
    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty()
            || !self
                .name
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
        {
            return Err(invalid(format!(
                "name: {:?} must be a non-empty [A-Za-z0-9_-] token (it names the output directory)",
                self.name
            )));
        }
        if !(self.duration_s.is_finite() && self.duration_s > 0.0) {
            return Err(invalid(format!(
                "duration_s: {} must be a positive duration",
                self.duration_s
            )));
        }

        let trap = self.trap.to_config();
        trap.species.validate()?;
        trap.geometry.validate()?;
        trap.drive.validate()?;
        let freqs = trap.secular_frequencies()?;

        self.control.servo_config().validate()?;
        self.control.resonator(self.trap.drive_frequency_hz).validate()?;
        self.control.component_chain().validate()?;
        if self.control.record_stride == 0 {
            return Err(invalid("loop.record_stride: must be at least 1".into()));
        }
        self.noise.to_suite(self.seed).validate()?;
        self.measurement.ramsey(self.kind).validate()?;
        let cadence = self.measurement.cadence(self.kind);
        let ramsey = self.measurement.ramsey(self.kind);
        if cadence < 2.0 * ramsey.shots_per_point as f64 * ramsey.delay {
            return Err(invalid(format!(
                "measurement.cadence_s: {} s is shorter than the two-point acquisition \
                 ({} shots of {} s each on two probe points)",
                cadence, ramsey.shots_per_point, ramsey.delay
            )));
        }
        if let Some(tau) = self.analysis.report_tau_s {
            if !(tau.is_finite() && tau > 0.0) {
                return Err(invalid(format!(
                    "analysis.report_tau_s: {tau} must be positive"
                )));
            }
        }
        if let Some(axial) = &self.axial_noise {
            if !(axial.sample_period_s.is_finite() && axial.sample_period_s > 0.0) {
                return Err(invalid(format!(
                    "axial_noise.sample_period_s: {} must be positive",
                    axial.sample_period_s
                )));
            }
            if axial.white_ppm < 0.0 || axial.random_walk_ppm < 0.0 {
                return Err(invalid(
                    "axial_noise: noise magnitudes must be non-negative".into(),
                ));
            }
            if let Some(tone) = &axial.tone {
                tone.validate()?;
            }
        }

        match self.kind {
            ScenarioKind::Transverse => {}
            ScenarioKind::Axial => {
                if self.axial_noise.is_none() {
                    return Err(invalid(
                        "axial_noise: the axial kind tracks endcap-supply noise, so the \
                         [axial_noise] table is required"
                            .into(),
                    ));
                }
            }
            ScenarioKind::Zigzag | ScenarioKind::Decoherence => {
                let chain = self.chain.ok_or_else(|| {
                    invalid("chain: [chain] with ion_count is required for this kind".into())
                })?;
                if chain.ion_count < 2 {
                    return Err(invalid(format!(
                        "chain.ion_count: {} must be at least 2",
                        chain.ion_count
                    )));
                }
                let cp = crate::chain::critical_com_frequency(
                    chain.ion_count,
                    freqs.omega_z,
                    &trap.species,
                )?;
                if freqs.omega_y <= cp.omega_yc {
                    return Err(invalid(format!(
                        "trap: the configured chain is past the zigzag transition \
                         (omega_y/2pi = {:.1} Hz, critical {:.1} Hz); raise the transverse \
                         confinement or lower endcap_voltage_v",
                        crate::units::hz_from_angular(freqs.omega_y),
                        crate::units::hz_from_angular(cp.omega_yc),
                    )));
                }
                if self.kind == ScenarioKind::Decoherence {
                    let deco = self.decoherence.as_ref().ok_or_else(|| {
                        invalid("decoherence: [decoherence] table is required for this kind".into())
                    })?;
                    if deco.zz_frequencies_hz.len() < 2 {
                        return Err(invalid(
                            "decoherence.zz_frequencies_hz: need at least 2 sweep points".into(),
                        ));
                    }
                    for &f in &deco.zz_frequencies_hz {
                        if !(f.is_finite() && f > 0.0)
                            || angular_from_hz(f) >= freqs.omega_y
                        {
                            return Err(invalid(format!(
                                "decoherence.zz_frequencies_hz: {f} Hz is not between 0 and \
                                 the transverse COM frequency"
                            )));
                        }
                    }
                    if deco.delays_s.len() < 3 {
                        return Err(invalid(
                            "decoherence.delays_s: contrast decay needs at least 3 delays".into(),
                        ));
                    }
                    let record_period =
                        self.control.sample_period_s * self.control.record_stride as f64;
                    let shortest = deco.delays_s.iter().cloned().fold(f64::INFINITY, f64::min);
                    if record_period > shortest / 2.0 {
                        return Err(invalid(format!(
                            "loop.record_stride: the recorded trace resolves {record_period} s, \
                             too coarse for a {shortest} s Ramsey delay; lower the stride"
                        )));
                    }
                }
            }
            ScenarioKind::TemperatureRamp => {
                match &self.noise.temperatures.detector {
                    TemperatureTrace::Ramp { begin_s, end_s, .. } => {
                        if *end_s > self.duration_s {
                            return Err(invalid(format!(
                                "noise.temperatures.detector: the ramp ends at {end_s} s but \
                                 the run lasts only {} s",
                                self.duration_s
                            )));
                        }
                        if *begin_s >= *end_s {
                            return Err(invalid(
                                "noise.temperatures.detector: ramp must have end_s > begin_s"
                                    .into(),
                            ));
                        }
                    }
                    _ => {
                        return Err(invalid(
                            "noise.temperatures.detector: the temperature_ramp kind needs a \
                             ramp trace on the detector"
                                .into(),
                        ));
                    }
                }
            }
        }

        for (i, check) in self.expectations.iter().enumerate() {
            self.validate_check(i, check)?;
        }
        Ok(())
    }

    fn validate_check(&self, index: usize, check: &ExpectCheck) -> Result<()> {
        let prefix = format!("expect[{index}]");
        if let Some(series) = check.series() {
            if !self.kind.known_series().contains(&series) {
                return Err(invalid(format!(
                    "{prefix}.series: {:?} is not produced by a {} scenario (expected one of {:?})",
                    series,
                    self.kind.label(),
                    self.kind.known_series()
                )));
            }
        }
        match check {
            ExpectCheck::Adev {
                tau_s,
                min_hz,
                max_hz,
                min_ppm,
                max_ppm,
                ..
            } => {
                if !(tau_s.is_finite() && *tau_s > 0.0) {
                    return Err(invalid(format!("{prefix}.tau_s: must be positive")));
                }
                if min_hz.is_none() && max_hz.is_none() && min_ppm.is_none() && max_ppm.is_none() {
                    return Err(invalid(format!("{prefix}: needs at least one bound")));
                }
            }
            ExpectCheck::TotalDrift { max_hz, .. } => {
                if !(max_hz.is_finite() && *max_hz > 0.0) {
                    return Err(invalid(format!("{prefix}.max_hz: must be positive")));
                }
            }
            ExpectCheck::ZigzagExceedsCom { tau_s } => {
                if self.kind != ScenarioKind::Zigzag {
                    return Err(invalid(format!(
                        "{prefix}: zigzag_exceeds_com applies only to the zigzag kind"
                    )));
                }
                if !(tau_s.is_finite() && *tau_s > 0.0) {
                    return Err(invalid(format!("{prefix}.tau_s: must be positive")));
                }
            }
            ExpectCheck::RecoveredTempco {
                min_ppm_per_c,
                max_ppm_per_c,
            } => {
                if self.kind != ScenarioKind::TemperatureRamp {
                    return Err(invalid(format!(
                        "{prefix}: recovered_tempco applies only to the temperature_ramp kind"
                    )));
                }
                if min_ppm_per_c >= max_ppm_per_c {
                    return Err(invalid(format!(
                        "{prefix}: min_ppm_per_c must be below max_ppm_per_c"
                    )));
                }
            }
            ExpectCheck::GammaOrdering {} | ExpectCheck::GammaScaling { .. } => {
                if self.kind != ScenarioKind::Decoherence {
                    return Err(invalid(format!(
                        "{prefix}: decay-rate checks apply only to the decoherence kind"
                    )));
                }
                if let ExpectCheck::GammaScaling { max_spread_factor } = check {
                    if !(*max_spread_factor > 1.0) {
                        return Err(invalid(format!(
                            "{prefix}.max_spread_factor: must exceed 1"
                        )));
                    }
                }
            }
            ExpectCheck::LockHolds {} => {
                if !self.control.locked {
                    return Err(invalid(format!(
                        "{prefix}: lock_holds is meaningless with loop.locked = false"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// A scenario compiled into the binary, runnable by name.
#[derive(Debug, Clone, Copy)]
pub struct ShippedScenario {
    pub name: &'static str,
    pub summary: &'static str,
    pub text: &'static str,
}

/// The scenario library shipped with the crate.
pub fn shipped_scenarios() -> &'static [ShippedScenario] {
    &[
        ShippedScenario {
            name: "single_ion_transverse_locked",
            summary: "2 h transverse COM track with the RF loop closed",
            text: include_str!("../../scenarios/single_ion_transverse_locked.toml"),
        },
        ShippedScenario {
            name: "single_ion_transverse_unlocked",
            summary: "the same trap free-running, showing the open-loop drift",
            text: include_str!("../../scenarios/single_ion_transverse_unlocked.toml"),
        },
        ShippedScenario {
            name: "axial_unlocked",
            summary: "1 h axial COM track under endcap-supply drift",
            text: include_str!("../../scenarios/axial_unlocked.toml"),
        },
        ShippedScenario {
            name: "zz_mode_4ion_56khz",
            summary: "4-ion chain at a 56 kHz zigzag mode, all three modes tracked",
            text: include_str!("../../scenarios/zz_mode_4ion_56khz.toml"),
        },
        ShippedScenario {
            name: "temperature_ramp_lock_limit",
            summary: "detector warmed 2 degC under lock; recovers the imprinted tempco",
            text: include_str!("../../scenarios/temperature_ramp_lock_limit.toml"),
        },
        ShippedScenario {
            name: "decoherence_vs_zz_frequency",
            summary: "zigzag contrast decay, locked vs unlocked, swept toward the critical point",
            text: include_str!("../../scenarios/decoherence_vs_zz_frequency.toml"),
        },
    ]
}

/// Look up a shipped scenario by name.
pub fn shipped_scenario(name: &str) -> Option<&'static ShippedScenario> {
    shipped_scenarios().iter().find(|s| s.name == name)
}
