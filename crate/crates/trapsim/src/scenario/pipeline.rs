//! Execution of validated scenarios: wiring the loop simulation into the
//! trackers and the stability analytics, writing every artifact, and
//! evaluating the acceptance bounds declared in the config.
//!
//! All artifacts are bit-identical across re-runs with the same resolved
//! config: nothing here reads the clock, iteration orders are fixed, and
//! floats are written with their shortest round-trip representation.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::chain::{critical_com_frequency, sensitivity_amplification, zigzag_frequency};
use crate::error::{Error, Result};
use crate::series::FrequencySeries;
use crate::servo::noise::stream_rng;
use crate::servo::{simulate_loop, LoopSettings, LoopTrace, TemperatureTrace};
use crate::spectroscopy::{
    measure_contrast_decay, track_frequency, DecoherenceProtocol, DecoherenceRate, QubitReference,
    RamseyConfig,
};
use crate::stability::{
    allan_deviation, classify_noise_slope, default_tau_grid, drift_rate, interpolate_gaps,
    AdevMode, StabilityReport,
};
use crate::trap::{transverse_frequencies_with_dc, TrapConfig};
use crate::units::{angular_from_hz, hz_from_angular};
use std::f64::consts::TAU;

use super::{AxialNoiseTable, ExpectCheck, Scenario, ScenarioKind};

// Sub-seeds handed to independent consumers of randomness, so the loop
// noise, the endcap noise, and each tracker draw from unrelated streams.
const SEED_TRANSVERSE_TRACKER: u64 = 1;
const SEED_AXIAL_NOISE: u64 = 2;
const SEED_ZIGZAG_TRACKER: u64 = 3;
const SEED_AXIAL_TRACKER: u64 = 4;
const SEED_DECOHERENCE: u64 = 5;

/// Stability analysis of one tracked mode.
#[derive(Debug, Clone)]
pub struct SeriesMetrics {
    pub label: String,
    /// Mean of the tracked frequency, Hz.
    pub mean_hz: f64,
    /// Fraction of tracker ticks that were out of range and interpolated.
    pub gap_fraction: f64,
    /// Length of the tracked record, s.
    pub duration_s: f64,
    pub report: StabilityReport,
}

impl SeriesMetrics {
    /// Deviation at the grid point nearest `tau`, as
    /// `(effective tau, hertz, ppm of the mean)`.
    pub fn adev_at(&self, tau: f64) -> Option<(f64, f64, f64)> {
        let (t, a) = self.report.at_tau(tau)?;
        let (hz, ppm) = match self.report.mode {
            AdevMode::Absolute => (a, a / self.mean_hz * 1e6),
            AdevMode::Fractional => (a * self.mean_hz, a * 1e6),
        };
        Some((t, hz, ppm))
    }
}

/// One point of a decoherence sweep.
#[derive(Debug, Clone, Copy)]
pub struct GammaPoint {
    pub zz_hz: f64,
    /// `omega_y / omega_zz` at this operating point.
    pub amplification: f64,
    pub locked: DecoherenceRate,
    pub unlocked: DecoherenceRate,
}

/// Everything a scenario computed, keyed for expectation checks.
#[derive(Debug, Default)]
pub struct Metrics {
    pub series: BTreeMap<String, SeriesMetrics>,
    pub recovered_tempco_ppm_per_c: Option<f64>,
    pub gamma_points: Vec<GammaPoint>,
    pub lock_failure: Option<bool>,
}

/// Outcome of one `[[expect]]` block.
#[derive(Debug, Clone)]
pub struct CheckResult {
    pub label: String,
    pub passed: bool,
    pub detail: String,
}

/// A finished run: artifact locations, computed metrics, and check results.
#[derive(Debug)]
pub struct ScenarioOutcome {
    pub name: String,
    pub out_dir: PathBuf,
    pub csv_paths: Vec<PathBuf>,
    pub manifest_path: PathBuf,
    pub report_path: PathBuf,
    pub metrics: Metrics,
    pub checks: Vec<CheckResult>,
    pub report_text: String,
}

impl ScenarioOutcome {
    pub fn all_checks_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Run one scenario, writing its artifact bundle under
/// `out_root/<scenario name>/`.
pub fn run_scenario(scenario: &Scenario, out_root: &Path) -> Result<ScenarioOutcome> {
    scenario.validate()?;
    let dir = out_root.join(&scenario.name);
    fs::create_dir_all(&dir)?;

    let mut csv_paths = Vec::new();
    let metrics = match scenario.kind {
        ScenarioKind::Transverse => run_transverse(scenario, &dir, &mut csv_paths)?,
        ScenarioKind::Axial => run_axial(scenario, &dir, &mut csv_paths)?,
        ScenarioKind::Zigzag => run_zigzag(scenario, &dir, &mut csv_paths)?,
        ScenarioKind::TemperatureRamp => run_temperature_ramp(scenario, &dir, &mut csv_paths)?,
        ScenarioKind::Decoherence => run_decoherence(scenario, &dir, &mut csv_paths)?,
    };

    let checks = evaluate_expectations(scenario, &metrics);
    let manifest_path = write_manifest(scenario, &dir)?;
    let report_text = render_report(scenario, &metrics, &checks);
    let report_path = dir.join("report.txt");
    fs::write(&report_path, &report_text)?;

    Ok(ScenarioOutcome {
        name: scenario.name.clone(),
        out_dir: dir,
        csv_paths,
        manifest_path,
        report_path,
        metrics,
        checks,
        report_text,
    })
}

fn run_loop_once(scenario: &Scenario, locked: bool) -> Result<(TrapConfig, LoopTrace)> {
    let trap = scenario.trap.to_config();
    let settings = LoopSettings {
        duration: scenario.duration_s,
        locked,
        record_stride: scenario.control.record_stride,
    };
    let trace = simulate_loop(
        &trap,
        &scenario.control.component_chain(),
        &scenario.control.resonator(scenario.trap.drive_frequency_hz),
        &scenario.control.servo_config(),
        &scenario.noise.to_suite(scenario.seed),
        &settings,
    )?;
    Ok((trap, trace))
}

/// Map the recorded RF amplitudes to the transverse COM frequency,
/// including the static rod-bias split.
fn transverse_com_series(trace: &LoopTrace, trap: &TrapConfig) -> Result<FrequencySeries> {
    if trap.drive.rod_dc == 0.0 {
        return trace.omega_series();
    }
    let mut drive = trap.drive.clone();
    let mut values = Vec::with_capacity(trace.len());
    for &v0 in &trace.v0 {
        drive.rf_amplitude = v0;
        let (_, omega_y) = transverse_frequencies_with_dc(&drive, &trap.geometry, &trap.species)?;
        values.push(omega_y);
    }
    FrequencySeries::new(trace.record_period, values)
}

/// Scripted fractional noise of the axial confinement (the endcap supply
/// sits outside the RF loop).
fn axial_frequency_series(
    omega_z_nominal: f64,
    table: &AxialNoiseTable,
    duration: f64,
    seed: u64,
) -> Result<FrequencySeries> {
    let dt = table.sample_period_s;
    let steps = (duration / dt).round().max(1.0) as usize;
    let mut white_rng = stream_rng(seed, 0);
    let mut walk_rng = stream_rng(seed, 1);
    let white_sigma = table.white_ppm * 1e-6 / dt.sqrt();
    let walk_sigma = table.random_walk_ppm * 1e-6 * dt.sqrt();
    let mut walk = 0.0;
    let mut values = Vec::with_capacity(steps);
    for i in 0..steps {
        let t = i as f64 * dt;
        walk += walk_sigma * walk_rng.sample::<f64, _>(StandardNormal);
        let mut fractional = walk + white_sigma * white_rng.sample::<f64, _>(StandardNormal);
        if let Some(tone) = &table.tone {
            fractional +=
                tone.amplitude_ppm * 1e-6 * (TAU * tone.frequency_hz * t + tone.phase_rad).sin();
        }
        values.push(omega_z_nominal * (1.0 + fractional));
    }
    FrequencySeries::new(dt, values)
}

/// The zigzag branch driven by both wandering COM frequencies.
fn zigzag_truth_series(
    omega_y: &FrequencySeries,
    alpha_c: f64,
    omega_z: Option<&FrequencySeries>,
    omega_z_nominal: f64,
) -> Result<FrequencySeries> {
    let mut values = Vec::with_capacity(omega_y.len());
    for i in 0..omega_y.len() {
        let t = i as f64 * omega_y.sample_period;
        let wz = omega_z.map_or(omega_z_nominal, |s| s.at(t));
        values.push(zigzag_frequency(omega_y.at(t), alpha_c * wz)?);
    }
    FrequencySeries::new(omega_y.sample_period, values)
}

struct Tracked {
    metrics: SeriesMetrics,
    times: Vec<f64>,
    /// Gap-filled tracked frequency, Hz.
    hz: Vec<f64>,
    cadence: f64,
}

#[allow(clippy::too_many_arguments)]
fn track_and_analyze(
    label: &str,
    truth: &FrequencySeries,
    nominal_mode: f64,
    ramsey: &RamseyConfig,
    cadence: f64,
    mode: AdevMode,
    seed: u64,
    dir: &Path,
    csv_paths: &mut Vec<PathBuf>,
) -> Result<Tracked> {
    let tracker = track_frequency(
        truth,
        nominal_mode,
        &QubitReference::nominal(),
        ramsey,
        cadence,
        seed,
    )?;
    let path = dir.join(format!("tracker_{label}.csv"));
    tracker.save_csv(&path)?;
    csv_paths.push(path);

    let (filled, gap_fraction) = interpolate_gaps(&tracker.mode_estimates, &tracker.in_range)?;
    let hz: Vec<f64> = filled.iter().map(|w| hz_from_angular(*w)).collect();
    let duration_s = cadence * hz.len() as f64;
    let taus = default_tau_grid(cadence, duration_s);
    let mut report = allan_deviation(&hz, cadence, &taus, mode)?;
    match classify_noise_slope(&report) {
        Ok(slopes) => report.slopes = slopes,
        Err(Error::ClassificationUnavailable) => {
            log::warn!("{label}: record too short to classify noise slopes");
        }
        Err(e) => return Err(e),
    }
    report.drift = Some(drift_rate(&hz, cadence)?);
    let path = dir.join(format!("adev_{label}.csv"));
    report.save_csv(&path)?;
    csv_paths.push(path);

    let mean_hz = hz.iter().sum::<f64>() / hz.len() as f64;
    Ok(Tracked {
        metrics: SeriesMetrics {
            label: label.to_string(),
            mean_hz,
            gap_fraction,
            duration_s,
            report,
        },
        times: tracker.times,
        hz,
        cadence,
    })
}

fn run_transverse(scenario: &Scenario, dir: &Path, csv_paths: &mut Vec<PathBuf>) -> Result<Metrics> {
    let (trap, trace) = run_loop_once(scenario, scenario.control.locked)?;
    let path = dir.join("loop_trace.csv");
    trace.save_csv(&path)?;
    csv_paths.push(path);

    let truth = transverse_com_series(&trace, &trap)?;
    let freqs = trap.secular_frequencies()?;
    let tracked = track_and_analyze(
        "transverse_com",
        &truth,
        freqs.omega_y,
        &scenario.measurement.ramsey(scenario.kind),
        scenario.measurement.cadence(scenario.kind),
        scenario.analysis.adev_mode(scenario.kind),
        scenario.seed.wrapping_add(SEED_TRANSVERSE_TRACKER),
        dir,
        csv_paths,
    )?;

    let mut metrics = Metrics::default();
    metrics.lock_failure = scenario.control.locked.then_some(trace.lock_failure);
    metrics.series.insert(tracked.metrics.label.clone(), tracked.metrics);
    Ok(metrics)
}

fn run_axial(scenario: &Scenario, dir: &Path, csv_paths: &mut Vec<PathBuf>) -> Result<Metrics> {
    let trap = scenario.trap.to_config();
    let freqs = trap.secular_frequencies()?;
    let table = scenario.axial_noise.as_ref().expect("validated");
    let truth = axial_frequency_series(
        freqs.omega_z,
        table,
        scenario.duration_s,
        scenario.seed.wrapping_add(SEED_AXIAL_NOISE),
    )?;
    let tracked = track_and_analyze(
        "axial_com",
        &truth,
        freqs.omega_z,
        &scenario.measurement.ramsey(scenario.kind),
        scenario.measurement.cadence(scenario.kind),
        scenario.analysis.adev_mode(scenario.kind),
        scenario.seed.wrapping_add(SEED_AXIAL_TRACKER),
        dir,
        csv_paths,
    )?;

    let mut metrics = Metrics::default();
    metrics.series.insert(tracked.metrics.label.clone(), tracked.metrics);
    Ok(metrics)
}

fn run_zigzag(scenario: &Scenario, dir: &Path, csv_paths: &mut Vec<PathBuf>) -> Result<Metrics> {
    let (trap, trace) = run_loop_once(scenario, scenario.control.locked)?;
    let path = dir.join("loop_trace.csv");
    trace.save_csv(&path)?;
    csv_paths.push(path);

    let freqs = trap.secular_frequencies()?;
    let ion_count = scenario.chain.expect("validated").ion_count;
    let cp = critical_com_frequency(ion_count, freqs.omega_z, &trap.species)?;

    let omega_y_truth = transverse_com_series(&trace, &trap)?;
    let omega_z_truth = match &scenario.axial_noise {
        Some(table) => Some(axial_frequency_series(
            freqs.omega_z,
            table,
            scenario.duration_s,
            scenario.seed.wrapping_add(SEED_AXIAL_NOISE),
        )?),
        None => None,
    };
    let zz_truth = zigzag_truth_series(
        &omega_y_truth,
        cp.alpha_c,
        omega_z_truth.as_ref(),
        freqs.omega_z,
    )?;
    let zz_nominal = zigzag_frequency(freqs.omega_y, cp.omega_yc)?;

    let mode = scenario.analysis.adev_mode(scenario.kind);
    let ramsey = scenario.measurement.ramsey(scenario.kind);
    let cadence = scenario.measurement.cadence(scenario.kind);

    let mut metrics = Metrics::default();
    metrics.lock_failure = scenario.control.locked.then_some(trace.lock_failure);

    let tracked = track_and_analyze(
        "transverse_com",
        &omega_y_truth,
        freqs.omega_y,
        &ramsey,
        cadence,
        mode,
        scenario.seed.wrapping_add(SEED_TRANSVERSE_TRACKER),
        dir,
        csv_paths,
    )?;
    metrics.series.insert(tracked.metrics.label.clone(), tracked.metrics);

    // The axial mode is slower, so its two-point protocol needs a longer
    // Ramsey delay and therefore possibly a slower cadence.
    let mut axial_ramsey = ramsey;
    axial_ramsey.delay = scenario.measurement.delay_s.unwrap_or(10e-3).max(ramsey.delay);
    let axial_cadence =
        cadence.max(2.0 * axial_ramsey.shots_per_point as f64 * axial_ramsey.delay);
    let axial_truth = match &omega_z_truth {
        Some(series) => series.clone(),
        None => FrequencySeries::new(
            cadence,
            vec![freqs.omega_z; (scenario.duration_s / cadence).round().max(1.0) as usize],
        )?,
    };
    let tracked = track_and_analyze(
        "axial_com",
        &axial_truth,
        freqs.omega_z,
        &axial_ramsey,
        axial_cadence,
        mode,
        scenario.seed.wrapping_add(SEED_AXIAL_TRACKER),
        dir,
        csv_paths,
    )?;
    metrics.series.insert(tracked.metrics.label.clone(), tracked.metrics);

    let tracked = track_and_analyze(
        "zigzag",
        &zz_truth,
        zz_nominal,
        &ramsey,
        cadence,
        mode,
        scenario.seed.wrapping_add(SEED_ZIGZAG_TRACKER),
        dir,
        csv_paths,
    )?;
    metrics.series.insert(tracked.metrics.label.clone(), tracked.metrics);
    Ok(metrics)
}

fn run_temperature_ramp(
    scenario: &Scenario,
    dir: &Path,
    csv_paths: &mut Vec<PathBuf>,
) -> Result<Metrics> {
    let (trap, trace) = run_loop_once(scenario, scenario.control.locked)?;
    let path = dir.join("loop_trace.csv");
    trace.save_csv(&path)?;
    csv_paths.push(path);

    let truth = transverse_com_series(&trace, &trap)?;
    let freqs = trap.secular_frequencies()?;
    let tracked = track_and_analyze(
        "transverse_com",
        &truth,
        freqs.omega_y,
        &scenario.measurement.ramsey(scenario.kind),
        scenario.measurement.cadence(scenario.kind),
        scenario.analysis.adev_mode(scenario.kind),
        scenario.seed.wrapping_add(SEED_TRANSVERSE_TRACKER),
        dir,
        csv_paths,
    )?;

    let (start_c, end_c, begin_s, end_s) = match &scenario.noise.temperatures.detector {
        TemperatureTrace::Ramp {
            start_c,
            end_c,
            begin_s,
            end_s,
        } => (*start_c, *end_c, *begin_s, *end_s),
        _ => unreachable!("validated: temperature_ramp kind requires a detector ramp"),
    };
    let in_ramp: Vec<f64> = tracked
        .times
        .iter()
        .zip(&tracked.hz)
        .filter(|(t, _)| **t >= begin_s && **t <= end_s)
        .map(|(_, hz)| *hz)
        .collect();
    let drift = drift_rate(&in_ramp, tracked.cadence)?;
    let ramp_rate = (end_c - start_c) / (end_s - begin_s);
    let tempco =
        drift.rate / hz_from_angular(freqs.omega_y) / ramp_rate * 1e6;

    let mut metrics = Metrics::default();
    metrics.lock_failure = scenario.control.locked.then_some(trace.lock_failure);
    metrics.recovered_tempco_ppm_per_c = Some(tempco);
    metrics.series.insert(tracked.metrics.label.clone(), tracked.metrics);
    Ok(metrics)
}

fn run_decoherence(
    scenario: &Scenario,
    dir: &Path,
    csv_paths: &mut Vec<PathBuf>,
) -> Result<Metrics> {
    let deco = scenario.decoherence.as_ref().expect("validated");
    let (trap, trace_locked) = run_loop_once(scenario, true)?;
    let (_, trace_unlocked) = run_loop_once(scenario, false)?;
    for (name, trace) in [
        ("loop_trace_locked.csv", &trace_locked),
        ("loop_trace_unlocked.csv", &trace_unlocked),
    ] {
        let path = dir.join(name);
        trace.save_csv(&path)?;
        csv_paths.push(path);
    }

    let freqs = trap.secular_frequencies()?;
    let omega_y_locked = transverse_com_series(&trace_locked, &trap)?;
    let omega_y_unlocked = transverse_com_series(&trace_unlocked, &trap)?;

    let mut metrics = Metrics::default();
    metrics.lock_failure = Some(trace_locked.lock_failure);
    let mut contrast_rows: Vec<(f64, &'static str, f64, f64)> = Vec::new();

    for (i, &zz_hz) in deco.zz_frequencies_hz.iter().enumerate() {
        let omega_zz = angular_from_hz(zz_hz);
        let omega_yc = (freqs.omega_y.powi(2) - omega_zz.powi(2)).sqrt();
        let protocol = DecoherenceProtocol {
            config: scenario.measurement.ramsey(scenario.kind),
            delays: deco.delays_s.clone(),
            points_per_fringe: deco.points_per_fringe,
            shot_duration: deco.shot_duration_s,
            nominal_mode: omega_zz,
        };
        let seed = scenario
            .seed
            .wrapping_add(SEED_DECOHERENCE)
            .wrapping_add(i as u64);

        let mut rates = [DecoherenceRate {
            gamma: 0.0,
            gamma_sigma: 0.0,
            initial_contrast: 0.0,
        }; 2];
        for (slot, (tag, omega_y_truth)) in [
            ("locked", &omega_y_locked),
            ("unlocked", &omega_y_unlocked),
        ]
        .into_iter()
        .enumerate()
        {
            let zz_truth = zigzag_truth_series(omega_y_truth, 1.0, None, omega_yc)?;
            let contrasts = measure_contrast_decay(&zz_truth, &protocol, seed)?;
            for &(delay, contrast) in &contrasts {
                contrast_rows.push((zz_hz, tag, delay, contrast));
            }
            rates[slot] = crate::spectroscopy::decoherence_rate(&contrasts)?;
        }

        metrics.gamma_points.push(GammaPoint {
            zz_hz,
            amplification: sensitivity_amplification(freqs.omega_y, omega_zz)?,
            locked: rates[0],
            unlocked: rates[1],
        });
    }

    let path = dir.join("decoherence.csv");
    let mut out = BufWriter::new(File::create(&path)?);
    writeln!(
        out,
        "zz_hz,amplification,gamma_locked_per_s,gamma_locked_sigma,gamma_unlocked_per_s,gamma_unlocked_sigma"
    )?;
    for p in &metrics.gamma_points {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            p.zz_hz,
            p.amplification,
            p.locked.gamma,
            p.locked.gamma_sigma,
            p.unlocked.gamma,
            p.unlocked.gamma_sigma
        )?;
    }
    out.flush()?;
    csv_paths.push(path);

    let path = dir.join("contrast_decays.csv");
    let mut out = BufWriter::new(File::create(&path)?);
    writeln!(out, "zz_hz,loop,delay_s,contrast")?;
    for (zz, tag, delay, contrast) in &contrast_rows {
        writeln!(out, "{zz},{tag},{delay},{contrast}")?;
    }
    out.flush()?;
    csv_paths.push(path);

    Ok(metrics)
}

fn evaluate_expectations(scenario: &Scenario, metrics: &Metrics) -> Vec<CheckResult> {
    scenario
        .expectations
        .iter()
        .map(|check| evaluate_check(scenario, metrics, check))
        .collect()
}

fn fail(label: String, detail: String) -> CheckResult {
    CheckResult {
        label,
        passed: false,
        detail,
    }
}

fn evaluate_check(scenario: &Scenario, metrics: &Metrics, check: &ExpectCheck) -> CheckResult {
    match check {
        ExpectCheck::Adev {
            series,
            tau_s,
            min_hz,
            max_hz,
            min_ppm,
            max_ppm,
        } => {
            let name = series
                .as_deref()
                .unwrap_or_else(|| scenario.kind.primary_series());
            let label = format!("adev[{name}] at {tau_s} s");
            let Some(m) = metrics.series.get(name) else {
                return fail(label, format!("series {name:?} was not produced"));
            };
            let Some((tau_eff, hz, ppm)) = m.adev_at(*tau_s) else {
                return fail(label, "deviation grid is empty".into());
            };
            let mut violations = Vec::new();
            if let Some(bound) = min_hz {
                if hz < *bound {
                    violations.push(format!("{hz:.4} Hz below the {bound} Hz floor"));
                }
            }
            if let Some(bound) = max_hz {
                if hz > *bound {
                    violations.push(format!("{hz:.4} Hz above the {bound} Hz ceiling"));
                }
            }
            if let Some(bound) = min_ppm {
                if ppm < *bound {
                    violations.push(format!("{ppm:.4} ppm below the {bound} ppm floor"));
                }
            }
            if let Some(bound) = max_ppm {
                if ppm > *bound {
                    violations.push(format!("{ppm:.4} ppm above the {bound} ppm ceiling"));
                }
            }
            CheckResult {
                label,
                passed: violations.is_empty(),
                detail: if violations.is_empty() {
                    format!("{hz:.4} Hz ({ppm:.4} ppm) at tau = {tau_eff} s within bounds")
                } else {
                    violations.join("; ")
                },
            }
        }
        ExpectCheck::TotalDrift { series, max_hz } => {
            let name = series
                .as_deref()
                .unwrap_or_else(|| scenario.kind.primary_series());
            let label = format!("total drift[{name}]");
            let Some(m) = metrics.series.get(name) else {
                return fail(label, format!("series {name:?} was not produced"));
            };
            let Some(drift) = m.report.drift else {
                return fail(label, "no drift estimate".into());
            };
            let total = drift.rate.abs() * m.duration_s;
            CheckResult {
                label,
                passed: total <= *max_hz,
                detail: format!(
                    "|{:+.5} Hz/s| over {} s accumulates {:.2} Hz (limit {} Hz)",
                    drift.rate, m.duration_s, total, max_hz
                ),
            }
        }
        ExpectCheck::ZigzagExceedsCom { tau_s } => {
            let label = format!("zigzag exceeds both COM modes at {tau_s} s");
            let lookup = |name: &str| {
                metrics
                    .series
                    .get(name)
                    .and_then(|m| m.adev_at(*tau_s))
                    .map(|(_, hz, _)| hz)
            };
            match (lookup("zigzag"), lookup("transverse_com"), lookup("axial_com")) {
                (Some(zz), Some(ty), Some(tz)) => CheckResult {
                    label,
                    passed: zz > ty && zz > tz,
                    detail: format!(
                        "zigzag {zz:.3} Hz vs transverse {ty:.3} Hz and axial {tz:.3} Hz"
                    ),
                },
                _ => fail(label, "one of the three mode series is missing".into()),
            }
        }
        ExpectCheck::RecoveredTempco {
            min_ppm_per_c,
            max_ppm_per_c,
        } => {
            let label = "recovered detector tempco".to_string();
            match metrics.recovered_tempco_ppm_per_c {
                Some(tempco) => CheckResult {
                    label,
                    passed: (*min_ppm_per_c..=*max_ppm_per_c).contains(&tempco),
                    detail: format!(
                        "{tempco:.1} ppm/degC (expected {min_ppm_per_c} to {max_ppm_per_c})"
                    ),
                },
                None => fail(label, "no tempco was recovered".into()),
            }
        }
        ExpectCheck::GammaOrdering {} => {
            let label = "locked decoheres slower at every point".to_string();
            if metrics.gamma_points.is_empty() {
                return fail(label, "no decay rates were measured".into());
            }
            let worst = metrics
                .gamma_points
                .iter()
                .map(|p| (p.zz_hz, p.unlocked.gamma - p.locked.gamma))
                .fold((0.0, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc });
            CheckResult {
                label,
                passed: metrics.gamma_points.iter().all(|p| p.locked.gamma < p.unlocked.gamma),
                detail: format!(
                    "smallest unlocked-minus-locked gap is {:+.3} /s at zz = {} Hz",
                    worst.1, worst.0
                ),
            }
        }
        ExpectCheck::GammaScaling { max_spread_factor } => {
            let label = "unlocked decay scales with the squared amplification".to_string();
            let ratios: Vec<f64> = metrics
                .gamma_points
                .iter()
                .map(|p| p.unlocked.gamma / p.amplification.powi(2))
                .collect();
            if ratios.len() < 2 || ratios.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
                return fail(label, "decay rates too small or too few to compare".into());
            }
            let max = ratios.iter().cloned().fold(f64::MIN, f64::max);
            let min = ratios.iter().cloned().fold(f64::MAX, f64::min);
            CheckResult {
                label,
                passed: max / min <= *max_spread_factor,
                detail: format!(
                    "gamma/amplification^2 spans a factor {:.2} (limit {max_spread_factor})",
                    max / min
                ),
            }
        }
        ExpectCheck::LockHolds {} => {
            let label = "servo stayed in range".to_string();
            match metrics.lock_failure {
                Some(failed) => CheckResult {
                    label,
                    passed: !failed,
                    detail: if failed {
                        "more than 1% of servo updates saturated".into()
                    } else {
                        "saturation stayed below the 1% failure threshold".into()
                    },
                },
                None => fail(label, "no loop was simulated".into()),
            }
        }
    }
}

#[derive(Serialize)]
struct ManifestRun<'a> {
    scenario: &'a str,
    kind: &'a str,
    seed: u64,
    version: &'a str,
    config_sha256: String,
}

#[derive(Serialize)]
struct Manifest<'a> {
    run: ManifestRun<'a>,
    config: &'a Scenario,
}

/// Write `manifest.toml`: the resolved config echoed in full, plus the hash
/// that ties artifacts to it. Deliberately no timestamps, so a re-run is
/// byte-identical.
fn write_manifest(scenario: &Scenario, dir: &Path) -> Result<PathBuf> {
    let config_text = toml::to_string_pretty(scenario)?;
    let digest = Sha256::digest(config_text.as_bytes());
    let config_sha256 = digest.iter().map(|b| format!("{b:02x}")).collect();
    let manifest = Manifest {
        run: ManifestRun {
            scenario: &scenario.name,
            kind: scenario.kind.label(),
            seed: scenario.seed,
            version: env!("CARGO_PKG_VERSION"),
            config_sha256,
        },
        config: scenario,
    };
    let path = dir.join("manifest.toml");
    fs::write(&path, toml::to_string_pretty(&manifest)?)?;
    Ok(path)
}

fn render_report(scenario: &Scenario, metrics: &Metrics, checks: &[CheckResult]) -> String {
    let mut out = String::new();
    let mut line = |s: String| {
        out.push_str(&s);
        out.push('\n');
    };
    line(format!(
        "scenario {} ({}), seed {}, {} s simulated",
        scenario.name,
        scenario.kind.label(),
        scenario.seed,
        scenario.duration_s
    ));
    if let Some(failed) = metrics.lock_failure {
        line(format!(
            "lock: {}",
            if failed { "FAILED (saturated)" } else { "held" }
        ));
    }

    let report_tau = scenario.analysis.report_tau(scenario.kind);
    for m in metrics.series.values() {
        line(String::new());
        line(format!(
            "mode {} (mean {:.3} Hz, {:.2}% of ticks interpolated)",
            m.label,
            m.mean_hz,
            100.0 * m.gap_fraction
        ));
        if let Some(summary) = m.report.summary_at(report_tau, m.mean_hz) {
            line(format!("  stability: {summary}"));
        }
        for decade in &m.report.slopes {
            line(format!(
                "  {:.0}-{:.0} s: {} (slope {:+.2})",
                decade.decade_start,
                decade.decade_start * 10.0,
                decade.class.label(),
                decade.slope
            ));
        }
        if let Some(drift) = m.report.drift {
            line(format!(
                "  drift: {:+.6} Hz/s +- {:.6} ({:+.2} Hz over the record)",
                drift.rate,
                drift.rate_sigma,
                drift.rate * m.duration_s
            ));
        }
    }

    if let Some(tempco) = metrics.recovered_tempco_ppm_per_c {
        line(String::new());
        line(format!("recovered detector tempco: {tempco:.1} ppm/degC"));
    }

    if !metrics.gamma_points.is_empty() {
        line(String::new());
        line("contrast decay rates (1/s):".to_string());
        for p in &metrics.gamma_points {
            line(format!(
                "  zz {:.0} Hz (amplification {:.2}): locked {:.3} +- {:.3}, unlocked {:.3} +- {:.3}",
                p.zz_hz,
                p.amplification,
                p.locked.gamma,
                p.locked.gamma_sigma,
                p.unlocked.gamma,
                p.unlocked.gamma_sigma
            ));
        }
    }

    if !checks.is_empty() {
        line(String::new());
        for check in checks {
            line(format!(
                "{} {}: {}",
                if check.passed { "ok  " } else { "FAIL" },
                check.label,
                check.detail
            ));
        }
        line(String::new());
        line(format!(
            "result: {}",
            if checks.iter().all(|c| c.passed) {
                "all expectations met"
            } else {
                "EXPECTATIONS MISSED"
            }
        ));
    }
    out
}
