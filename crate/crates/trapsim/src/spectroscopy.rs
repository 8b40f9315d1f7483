//! Ramsey interferometry on the blue-sideband transition: fringe sampling
//! with projection noise, cosine fringe fits, the two-point half-contrast
//! drift tracker, and decoherence-rate extraction.
//!
//! The monitored point is Stark-free by construction, so the fringe center
//! does not depend on the Ramsey delay; every systematic of interest enters
//! through the mode frequency itself.

use std::f64::consts::{PI, TAU};
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use nalgebra::{Matrix3, Vector3};
use rand::Rng;
use rand_distr::{Binomial, Distribution};

use crate::error::{Error, Result};
use crate::series::FrequencySeries;
use crate::servo::noise::stream_rng;
use crate::units::hz_from_angular;

/// The qubit used as the frequency ruler.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitReference {
    /// Hyperfine splitting, rad/s.
    pub hyperfine_splitting: f64,
}

impl QubitReference {
    /// The 12.642815 GHz clock splitting of the ytterbium-171 ground state.
    pub fn nominal() -> Self {
        QubitReference {
            hyperfine_splitting: crate::units::angular_from_hz(12.642_815e9),
        }
    }
}

/// Parameters of one Ramsey protocol.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RamseyConfig {
    /// Free-evolution delay, s.
    pub delay: f64,
    /// Fringe contrast amplitude, at most 0.5.
    pub contrast: f64,
    /// Phase offset of the fringe, rad.
    pub phase_offset: f64,
    /// Baseline of the fringe.
    pub offset: f64,
    pub shots_per_point: u64,
    /// Symmetric state-detection error per shot; 0 is ideal detection.
    pub detection_error: f64,
}

impl RamseyConfig {
    /// The transverse monitoring protocol: 1 ms delay, 100 shots per point.
    pub fn transverse() -> Self {
        RamseyConfig {
            delay: 1e-3,
            contrast: 0.4,
            phase_offset: 0.0,
            offset: 0.5,
            shots_per_point: 100,
            detection_error: 0.0,
        }
    }

    /// The axial monitoring protocol, with its longer 10 ms delay.
    pub fn axial() -> Self {
        RamseyConfig {
            delay: 10e-3,
            ..Self::transverse()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delay.is_finite() && self.delay > 0.0) {
            return Err(Error::InvalidParameter {
                name: "delay",
                value: self.delay,
            });
        }
        if !(0.0..=0.5).contains(&self.contrast) {
            return Err(Error::InvalidParameter {
                name: "contrast",
                value: self.contrast,
            });
        }
        let tol = 1e-9;
        if self.offset - self.contrast < -tol || self.offset + self.contrast > 1.0 + tol {
            return Err(Error::InvalidParameter {
                name: "offset",
                value: self.offset,
            });
        }
        if self.shots_per_point == 0 {
            return Err(Error::InvalidParameter {
                name: "shots_per_point",
                value: 0.0,
            });
        }
        if !(0.0..0.5).contains(&self.detection_error) {
            return Err(Error::InvalidParameter {
                name: "detection_error",
                value: self.detection_error,
            });
        }
        Ok(())
    }

    /// Detunings of the half-contrast probe pair relative to the fringe
    /// center: point A on the low side, point B on the high side.
    pub fn probe_detunings(&self) -> (f64, f64) {
        (
            (-PI / 2.0 - self.phase_offset) / self.delay,
            (PI / 2.0 - self.phase_offset) / self.delay,
        )
    }

    /// Fold the symmetric detection error into an ideal probability.
    fn measured(&self, p: f64) -> f64 {
        self.detection_error + (1.0 - 2.0 * self.detection_error) * p
    }
}

/// Spin-up probability of the Ramsey fringe at detuning `delta` (rad/s)
/// from the configured center.
pub fn ramsey_probability(delta: f64, config: &RamseyConfig) -> Result<f64> {
    config.validate()?;
    let p = config.contrast * (delta * config.delay + config.phase_offset).cos() + config.offset;
    if !(-1e-9..=1.0 + 1e-9).contains(&p) {
        log::warn!("fringe probability {p} outside [0, 1]; clamping");
    }
    Ok(p.clamp(0.0, 1.0))
}

/// One projective measurement of `shots` identical preparations.
///
/// The generator is seeded from `(seed, stream)`, so the outcome of a point
/// depends only on its own identity and not on how many points were sampled
/// before it. Scans key the stream on the detuning's bit pattern, which
/// makes a reordered scan bit-identical point by point.
pub fn sample_fringe_point(p: f64, shots: u64, seed: u64, stream: u64) -> Result<u64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter {
            name: "probability",
            value: p,
        });
    }
    let mut rng = stream_rng(seed, stream);
    let binomial = Binomial::new(shots, p).expect("validated probability");
    Ok(binomial.sample(&mut rng))
}

/// A sampled fringe scan together with the protocol that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct FringeDataset {
    pub config: RamseyConfig,
    /// Scan detunings from the nominal center, rad/s.
    pub detunings: Vec<f64>,
    pub up_counts: Vec<u64>,
}

impl FringeDataset {
    /// Write the scan as CSV with columns `detuning_hz,up_counts,shots`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "detuning_hz,up_counts,shots")?;
        for (delta, counts) in self.detunings.iter().zip(&self.up_counts) {
            writeln!(
                out,
                "{},{},{}",
                hz_from_angular(*delta),
                counts,
                self.config.shots_per_point
            )?;
        }
        Ok(())
    }

    pub fn save_csv<P: AsRef<Path>>(&self, path: P) -> io::Result<()> {
        let file = File::create(path)?;
        self.write_csv(BufWriter::new(file))
    }
}

/// Simulate a fringe scan whose true center sits `center_detuning` (rad/s)
/// away from the nominal center.
pub fn scan_fringe(
    config: &RamseyConfig,
    center_detuning: f64,
    detunings: &[f64],
    seed: u64,
) -> Result<FringeDataset> {
    config.validate()?;
    let mut up_counts = Vec::with_capacity(detunings.len());
    for delta in detunings {
        let p = config.measured(ramsey_probability(delta - center_detuning, config)?);
        up_counts.push(sample_fringe_point(
            p.clamp(0.0, 1.0),
            config.shots_per_point,
            seed,
            delta.to_bits(),
        )?);
    }
    Ok(FringeDataset {
        config: *config,
        detunings: detunings.to_vec(),
        up_counts,
    })
}

/// Evenly spaced scan detunings covering `periods` full fringe periods
/// around the nominal center.
pub fn scan_grid(config: &RamseyConfig, points: usize, periods: f64) -> Vec<f64> {
    let span = periods * TAU / config.delay;
    (0..points)
        .map(|i| -span / 2.0 + span * i as f64 / (points.max(2) - 1) as f64)
        .collect()
}

/// Result of the two-point half-contrast comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoPointEstimate {
    /// Estimated drift of the fringe center, rad/s; positive means the
    /// transition moved to higher frequency.
    pub detuning: f64,
    /// False once the accumulated phase leaves the invertible window of
    /// ±0.5 rad, where the caller must rescan the full fringe.
    pub in_range: bool,
}

/// Invert a pair of probabilities measured at the half-contrast probe
/// detunings into a drift estimate.
///
/// The probability difference is `2 A sin(delta * delay)`, inverted exactly
/// through the arcsine rather than its linearization, which costs nothing
/// and keeps the estimator faithful over the whole invertible window.
pub fn two_point_drift_estimate(
    p_a_hat: f64,
    p_b_hat: f64,
    config: &RamseyConfig,
) -> Result<TwoPointEstimate> {
    config.validate()?;
    if config.contrast <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "contrast",
            value: config.contrast,
        });
    }
    let ratio = (p_b_hat - p_a_hat) / (2.0 * config.contrast);
    let clamped = ratio.clamp(-1.0, 1.0);
    let phase = clamped.asin();
    Ok(TwoPointEstimate {
        detuning: phase / config.delay,
        in_range: ratio.abs() <= 1.0 && phase.abs() <= 0.5,
    })
}

/// Parameters recovered from a fringe fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FringeFit {
    pub contrast: f64,
    pub contrast_sigma: f64,
    /// Fitted fringe phase, rad.
    pub phase: f64,
    pub offset: f64,
    /// Fitted displacement of the fringe center from the nominal center,
    /// rad/s.
    pub center_detuning: f64,
    pub center_sigma: f64,
}

fn wrap_angle(x: f64) -> f64 {
    x - TAU * (x / TAU).round()
}

/// Least-squares cosine fit on real-valued probabilities.
///
/// The fringe period is fixed by the delay; the free parameters are the
/// quadrature amplitudes and the baseline, solved in closed form. Parameter
/// uncertainties come from the residual variance through the normal-matrix
/// inverse and the delta method.
pub fn fit_cosine_points(
    detunings: &[f64],
    probabilities: &[f64],
    delay: f64,
    nominal_phase: f64,
) -> Result<FringeFit> {
    if detunings.len() != probabilities.len() {
        return Err(Error::InsufficientData(
            "detuning and probability lists differ in length".into(),
        ));
    }
    let n = detunings.len();
    if n < 8 {
        return Err(Error::InsufficientData(format!(
            "fringe fit needs at least 8 points, got {n}"
        )));
    }
    let span = detunings.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - detunings.iter().cloned().fold(f64::INFINITY, f64::min);
    if span * delay < TAU * (1.0 - 1e-9) {
        return Err(Error::InsufficientData(format!(
            "fringe fit needs a full period; scan spans {:.3} of one",
            span * delay / TAU
        )));
    }

    let mut m = Matrix3::zeros();
    let mut rhs = Vector3::zeros();
    for (delta, p) in detunings.iter().zip(probabilities) {
        let theta = delta * delay;
        let row = Vector3::new(theta.cos(), theta.sin(), 1.0);
        m += row * row.transpose();
        rhs += row * *p;
    }
    let chol = m
        .cholesky()
        .ok_or_else(|| Error::FitQuality("degenerate detuning pattern".into()))?;
    let params = chol.solve(&rhs);
    let (a, b, c) = (params[0], params[1], params[2]);

    let mut ssr = 0.0;
    for (delta, p) in detunings.iter().zip(probabilities) {
        let theta = delta * delay;
        let model = a * theta.cos() + b * theta.sin() + c;
        ssr += (p - model).powi(2);
    }
    let dof = (n - 3) as f64;
    let variance = if dof > 0.0 { ssr / dof } else { 0.0 };
    let cov = chol.inverse() * variance;

    let contrast = a.hypot(b);
    if contrast <= 0.0 {
        return Err(Error::FitQuality("fitted contrast is zero".into()));
    }
    let var_a = cov[(0, 0)];
    let var_b = cov[(1, 1)];
    let cov_ab = cov[(0, 1)];
    let contrast_sigma =
        ((a * a * var_a + b * b * var_b + 2.0 * a * b * cov_ab) / (contrast * contrast))
            .max(0.0)
            .sqrt();
    let phase_sigma = ((b * b * var_a + a * a * var_b - 2.0 * a * b * cov_ab)
        / contrast.powi(4))
    .max(0.0)
    .sqrt();

    if contrast < 3.0 * contrast_sigma {
        return Err(Error::FitQuality(format!(
            "contrast {contrast:.4} below three times its uncertainty {contrast_sigma:.4}"
        )));
    }

    let phase = (-b).atan2(a);
    Ok(FringeFit {
        contrast,
        contrast_sigma,
        phase,
        offset: c,
        center_detuning: wrap_angle(nominal_phase - phase) / delay,
        center_sigma: phase_sigma / delay,
    })
}

/// Fit a sampled fringe scan.
///
/// On top of the residual-based uncertainty this enforces the a-priori
/// binomial noise floor, so a flat scan (whose residuals vanish) is still
/// rejected as contrast-free rather than fitted to numerical dust.
pub fn fit_fringe(data: &FringeDataset) -> Result<FringeFit> {
    let shots = data.config.shots_per_point;
    if data.up_counts.iter().any(|&c| c > shots) {
        return Err(Error::InsufficientData(
            "up counts exceed shots per point".into(),
        ));
    }
    let probabilities: Vec<f64> = data
        .up_counts
        .iter()
        .map(|&c| c as f64 / shots as f64)
        .collect();
    let mut fit = fit_cosine_points(
        &data.detunings,
        &probabilities,
        data.config.delay,
        data.config.phase_offset,
    )?;
    let mean_binomial_var = probabilities
        .iter()
        .map(|p| p * (1.0 - p) / shots as f64)
        .sum::<f64>()
        / probabilities.len() as f64;
    let shot_floor = (2.0 * mean_binomial_var / probabilities.len() as f64).sqrt();
    fit.contrast_sigma = fit.contrast_sigma.max(shot_floor);
    if fit.contrast < 3.0 * fit.contrast_sigma {
        return Err(Error::FitQuality(format!(
            "contrast {:.4} below three times the shot-noise floor {:.4}",
            fit.contrast, fit.contrast_sigma
        )));
    }
    Ok(fit)
}

/// History produced by the two-point tracker.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackerSeries {
    pub cadence: f64,
    /// Hyperfine splitting used to report absolute transition frequencies,
    /// rad/s.
    pub hyperfine_splitting: f64,
    pub times: Vec<f64>,
    /// Estimated mode frequency at each tick, rad/s.
    pub mode_estimates: Vec<f64>,
    pub in_range: Vec<bool>,
}

impl TrackerSeries {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Absolute blue-sideband frequency estimate in hertz at tick `i`.
    pub fn bsbt_hz(&self, i: usize) -> f64 {
        hz_from_angular(self.hyperfine_splitting + self.mode_estimates[i])
    }

    /// The estimated mode frequency history as a uniform series (rad/s),
    /// suitable for stability analysis of the mode itself.
    pub fn mode_series(&self) -> Result<FrequencySeries> {
        FrequencySeries::new(self.cadence, self.mode_estimates.clone())
    }

    /// Write the tracker history as CSV with columns `t_s,f_est_hz,in_range`,
    /// where `f_est_hz` is the absolute sideband transition frequency.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "t_s,f_est_hz,in_range")?;
        for i in 0..self.len() {
            writeln!(
                out,
                "{},{},{}",
                self.times[i],
                self.bsbt_hz(i),
                u8::from(self.in_range[i])
            )?;
        }
        Ok(())
    }

    pub fn save_csv<P: AsRef<Path>>(&self, path: P) -> io::Result<()> {
        let file = File::create(path)?;
        self.write_csv(BufWriter::new(file))
    }
}

/// Follow a drifting mode frequency with the two-point protocol.
///
/// At each cadence tick the tracker probes the half-contrast pair around its
/// current reference, inverts the count asymmetry into a drift estimate, and
/// recenters the pair on that estimate, the way a bench tracker follows slow
/// drift. Ticks whose inversion leaves the ±0.5 rad window are flagged and
/// do not move the reference.
pub fn track_frequency(
    truth: &FrequencySeries,
    nominal_mode: f64,
    qubit: &QubitReference,
    config: &RamseyConfig,
    cadence: f64,
    seed: u64,
) -> Result<TrackerSeries> {
    config.validate()?;
    if !(cadence.is_finite() && cadence > 0.0) {
        return Err(Error::InvalidParameter {
            name: "cadence",
            value: cadence,
        });
    }
    let protocol_time = 2.0 * config.shots_per_point as f64 * config.delay;
    if cadence < protocol_time {
        return Err(Error::InvalidParameter {
            name: "cadence",
            value: cadence,
        });
    }
    if !(nominal_mode.is_finite() && nominal_mode > 0.0) {
        return Err(Error::InvalidParameter {
            name: "nominal_mode",
            value: nominal_mode,
        });
    }

    let ticks = (truth.duration() / cadence).floor() as usize;
    let mut series = TrackerSeries {
        cadence,
        hyperfine_splitting: qubit.hyperfine_splitting,
        times: Vec::with_capacity(ticks),
        mode_estimates: Vec::with_capacity(ticks),
        in_range: Vec::with_capacity(ticks),
    };
    let mut reference = nominal_mode;
    for k in 0..ticks {
        let t = k as f64 * cadence;
        let true_mode = truth.at(t);
        let delta = true_mode - reference;
        let phase = delta * config.delay;
        let p_a = config.measured((config.offset - config.contrast * phase.sin()).clamp(0.0, 1.0));
        let p_b = config.measured((config.offset + config.contrast * phase.sin()).clamp(0.0, 1.0));
        let shots = config.shots_per_point;
        let count_a = sample_fringe_point(p_a, shots, seed, 2 * k as u64)?;
        let count_b = sample_fringe_point(p_b, shots, seed, 2 * k as u64 + 1)?;
        let estimate = two_point_drift_estimate(
            count_a as f64 / shots as f64,
            count_b as f64 / shots as f64,
            config,
        )?;
        let mode_estimate = reference + estimate.detuning;
        series.times.push(t);
        series.mode_estimates.push(mode_estimate);
        series.in_range.push(estimate.in_range);
        if estimate.in_range {
            reference = mode_estimate;
        }
    }
    Ok(series)
}

/// Settings for a contrast-decay measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct DecoherenceProtocol {
    /// Base protocol; the delay field is replaced per measurement.
    pub config: RamseyConfig,
    /// Ramsey delays to probe, s.
    pub delays: Vec<f64>,
    pub points_per_fringe: usize,
    /// Wall-clock time consumed by one shot (preparation + delay + readout), s.
    pub shot_duration: f64,
    /// Nominal mode frequency the fringes are referenced to, rad/s.
    pub nominal_mode: f64,
}

impl DecoherenceProtocol {
    pub fn validate(&self) -> Result<()> {
        self.config.validate()?;
        if self.delays.len() < 3 {
            return Err(Error::InsufficientData(
                "decoherence measurement needs at least 3 delays".into(),
            ));
        }
        if self.delays.iter().any(|d| !(d.is_finite() && *d > 0.0)) {
            return Err(Error::InvalidParameter {
                name: "delays",
                value: f64::NAN,
            });
        }
        if self.points_per_fringe < 8 {
            return Err(Error::InsufficientData(
                "decoherence fringes need at least 8 points".into(),
            ));
        }
        if !(self.shot_duration.is_finite() && self.shot_duration > 0.0) {
            return Err(Error::InvalidParameter {
                name: "shot_duration",
                value: self.shot_duration,
            });
        }
        Ok(())
    }
}

/// Measure fringe contrast against Ramsey delay while the mode frequency
/// wanders along `mode_history`.
///
/// Shots are taken in wall-clock order: each accumulates the phase of the
/// average frequency error over its own Ramsey window, so slow frequency
/// noise dephases long delays more than short ones. Delays whose fringe has
/// decayed below the fit's contrast floor are dropped with a warning.
pub fn measure_contrast_decay(
    mode_history: &FrequencySeries,
    protocol: &DecoherenceProtocol,
    seed: u64,
) -> Result<Vec<(f64, f64)>> {
    protocol.validate()?;
    let mut cursor = 0.0;
    let mut decays = Vec::with_capacity(protocol.delays.len());
    for (di, &delay) in protocol.delays.iter().enumerate() {
        let mut config = protocol.config;
        config.delay = delay;
        let detunings = scan_grid(&config, protocol.points_per_fringe, 1.0);
        let mut up_counts = Vec::with_capacity(detunings.len());
        for (pi, delta) in detunings.iter().enumerate() {
            let mut rng = stream_rng(seed, ((di as u64) << 32) | pi as u64);
            let mut count = 0u64;
            for _ in 0..config.shots_per_point {
                if cursor + delay > mode_history.duration() {
                    cursor = 0.0;
                }
                let wander = mode_history.window_mean(cursor, delay) - protocol.nominal_mode;
                let p = config
                    .measured(
                        config.contrast * ((delta - wander) * delay + config.phase_offset).cos()
                            + config.offset,
                    )
                    .clamp(0.0, 1.0);
                if rng.gen_bool(p) {
                    count += 1;
                }
                cursor += protocol.shot_duration;
            }
            up_counts.push(count);
        }
        let dataset = FringeDataset {
            config,
            detunings,
            up_counts,
        };
        match fit_fringe(&dataset) {
            Ok(fit) => decays.push((delay, fit.contrast)),
            Err(Error::FitQuality(reason)) => {
                log::warn!("dropping delay {delay} s from contrast decay: {reason}");
            }
            Err(other) => return Err(other),
        }
    }
    Ok(decays)
}

/// An exponential decay rate with its statistical uncertainty.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecoherenceRate {
    /// Decay rate, 1/s; zero when the data do not decay.
    pub gamma: f64,
    pub gamma_sigma: f64,
    /// Extrapolated contrast at zero delay.
    pub initial_contrast: f64,
}

/// Fit `contrast = A0 * exp(-gamma * delay)` to measured contrasts.
///
/// The fit is linear in log contrast. Non-decaying data return a rate of
/// zero, with the uncertainty as the upper bound.
pub fn decoherence_rate(contrasts: &[(f64, f64)]) -> Result<DecoherenceRate> {
    if contrasts.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "decoherence fit needs at least 3 contrasts, got {}",
            contrasts.len()
        )));
    }
    if contrasts.iter().any(|(t, a)| *t <= 0.0 || *a <= 0.0) {
        return Err(Error::FitQuality(
            "decoherence fit needs positive delays and contrasts".into(),
        ));
    }
    let n = contrasts.len() as f64;
    let mean_t = contrasts.iter().map(|(t, _)| t).sum::<f64>() / n;
    let mean_log = contrasts.iter().map(|(_, a)| a.ln()).sum::<f64>() / n;
    let mut stt = 0.0;
    let mut sty = 0.0;
    for (t, a) in contrasts {
        stt += (t - mean_t).powi(2);
        sty += (t - mean_t) * (a.ln() - mean_log);
    }
    if stt == 0.0 {
        return Err(Error::FitQuality("decoherence delays are degenerate".into()));
    }
    let slope = sty / stt;
    let intercept = mean_log - slope * mean_t;
    let mut ssr = 0.0;
    for (t, a) in contrasts {
        ssr += (a.ln() - (intercept + slope * t)).powi(2);
    }
    let dof = n - 2.0;
    let slope_sigma = if dof > 0.0 {
        (ssr / dof / stt).sqrt()
    } else {
        0.0
    };
    Ok(DecoherenceRate {
        gamma: (-slope).max(0.0),
        gamma_sigma: slope_sigma,
        initial_contrast: intercept.exp(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand_chacha::rand_core::SeedableRng;

    #[test]
    fn on_resonance_probability_peaks_at_one() {
        let config = RamseyConfig {
            contrast: 0.5,
            ..RamseyConfig::transverse()
        };
        assert_relative_eq!(ramsey_probability(0.0, &config).unwrap(), 1.0);
    }

    #[test]
    fn fringe_minimum_sits_at_offset_minus_contrast() {
        let config = RamseyConfig::transverse();
        let delta = PI / config.delay;
        let p = ramsey_probability(delta, &config).unwrap();
        assert_relative_eq!(p, config.offset - config.contrast, max_relative = 1e-12);
    }

    #[test]
    fn fringe_period_is_one_kilohertz_at_millisecond_delay() {
        let config = RamseyConfig::transverse();
        let period = TAU / config.delay;
        assert_relative_eq!(period, TAU * 1000.0, max_relative = 1e-12);
        for delta in [-800.0, 0.0, 1234.5] {
            let a = ramsey_probability(delta, &config).unwrap();
            let b = ramsey_probability(delta + period, &config).unwrap();
            assert_relative_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn certain_outcomes_sample_exactly() {
        assert_eq!(sample_fringe_point(0.0, 100, 1, 0).unwrap(), 0);
        assert_eq!(sample_fringe_point(1.0, 100, 1, 0).unwrap(), 100);
    }

    #[test]
    fn binomial_sampling_has_binomial_moments() {
        let draws: Vec<f64> = (0..2000)
            .map(|s| sample_fringe_point(0.5, 100, 99, s).unwrap() as f64)
            .collect();
        let mean = draws.iter().sum::<f64>() / draws.len() as f64;
        let var = draws.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / draws.len() as f64;
        assert!((mean - 50.0).abs() < 0.5, "mean {mean}");
        assert!((var.sqrt() - 5.0).abs() < 0.5, "std {}", var.sqrt());
    }

    #[test]
    fn reordering_a_scan_does_not_change_outcomes() {
        let config = RamseyConfig::transverse();
        let grid = scan_grid(&config, 12, 1.2);
        let mut reversed = grid.clone();
        reversed.reverse();
        let forward = scan_fringe(&config, 150.0, &grid, 5).unwrap();
        let backward = scan_fringe(&config, 150.0, &reversed, 5).unwrap();
        for (i, delta) in grid.iter().enumerate() {
            let j = reversed.iter().position(|d| d == delta).unwrap();
            assert_eq!(forward.up_counts[i], backward.up_counts[j]);
        }
    }

    #[test]
    fn balanced_probe_points_mean_zero_drift() {
        let config = RamseyConfig::transverse();
        let est = two_point_drift_estimate(0.37, 0.37, &config).unwrap();
        assert_eq!(est.detuning, 0.0);
        assert!(est.in_range);
    }

    #[test]
    fn two_point_estimate_recovers_injected_drift() {
        let config = RamseyConfig::transverse();
        let injected = TAU * 20.0;
        let phase = injected * config.delay;
        let p_a = config.offset - config.contrast * phase.sin();
        let p_b = config.offset + config.contrast * phase.sin();
        let est = two_point_drift_estimate(p_a, p_b, &config).unwrap();
        assert!(est.in_range);
        assert_relative_eq!(est.detuning, injected, max_relative = 1e-12);
        assert!((est.detuning - injected).abs() / injected < 0.02);
    }

    #[test]
    fn two_point_estimate_is_odd_in_the_drift() {
        let config = RamseyConfig::transverse();
        for hz in [3.0, 17.0, 45.0, 70.0] {
            let phase = TAU * hz * config.delay;
            let swing = config.contrast * phase.sin();
            let plus =
                two_point_drift_estimate(config.offset - swing, config.offset + swing, &config)
                    .unwrap();
            let minus =
                two_point_drift_estimate(config.offset + swing, config.offset - swing, &config)
                    .unwrap();
            assert_relative_eq!(plus.detuning, -minus.detuning, max_relative = 1e-12);
        }
    }

    #[test]
    fn drift_beyond_half_radian_is_flagged() {
        let config = RamseyConfig::transverse();
        let injected = 0.8 / config.delay;
        let phase = injected * config.delay;
        let p_a = config.offset - config.contrast * phase.sin();
        let p_b = config.offset + config.contrast * phase.sin();
        let est = two_point_drift_estimate(p_a, p_b, &config).unwrap();
        assert!(!est.in_range);
        let saturating = two_point_drift_estimate(0.0, 1.0, &config).unwrap();
        assert!(!saturating.in_range);
    }

    #[test]
    fn clean_fringe_fit_recovers_parameters_exactly() {
        let config = RamseyConfig::transverse();
        let true_center = TAU * 87.0;
        let grid = scan_grid(&config, 16, 1.5);
        let probabilities: Vec<f64> = grid
            .iter()
            .map(|d| ramsey_probability(d - true_center, &config).unwrap())
            .collect();
        let fit =
            fit_cosine_points(&grid, &probabilities, config.delay, config.phase_offset).unwrap();
        assert_relative_eq!(fit.contrast, config.contrast, max_relative = 1e-9);
        assert_relative_eq!(fit.offset, config.offset, max_relative = 1e-9);
        assert_relative_eq!(fit.center_detuning, true_center, max_relative = 1e-9);
    }

    #[test]
    fn fitted_fringe_repeats_at_one_kilohertz_for_millisecond_delay() {
        let config = RamseyConfig::transverse();
        let grid = scan_grid(&config, 24, 2.0);
        let data = scan_fringe(&config, 0.0, &grid, 11).unwrap();
        let fit = fit_fringe(&data).unwrap();
        let model = |delta: f64| {
            fit.contrast * (delta * config.delay + fit.phase).cos() + fit.offset
        };
        for delta in [-1500.0, 0.0, 400.0] {
            assert_relative_eq!(model(delta), model(delta + TAU * 1000.0), epsilon = 1e-9);
        }
    }

    #[test]
    fn sampled_fringe_fit_center_is_consistent_with_its_uncertainty() {
        let config = RamseyConfig::transverse();
        let true_center = TAU * 40.0;
        let grid = scan_grid(&config, 20, 1.25);
        let mut pulls = Vec::new();
        for seed in 0..40 {
            let data = scan_fringe(&config, true_center, &grid, seed).unwrap();
            let fit = fit_fringe(&data).unwrap();
            pulls.push((fit.center_detuning - true_center) / fit.center_sigma);
        }
        let mean_pull = pulls.iter().sum::<f64>() / pulls.len() as f64;
        let pull_var =
            pulls.iter().map(|p| (p - mean_pull).powi(2)).sum::<f64>() / (pulls.len() - 1) as f64;
        assert!(mean_pull.abs() < 0.6, "pull mean {mean_pull}");
        assert!(
            (0.4..2.6).contains(&pull_var),
            "pull variance {pull_var} outside binomial expectation"
        );
    }

    #[test]
    fn vanishing_contrast_is_a_fit_error() {
        let config = RamseyConfig::transverse();
        let grid = scan_grid(&config, 16, 1.2);
        let flat = FringeDataset {
            config,
            detunings: grid,
            up_counts: vec![50; 16],
        };
        assert!(matches!(fit_fringe(&flat), Err(Error::FitQuality(_))));
    }

    #[test]
    fn short_scans_are_rejected() {
        let config = RamseyConfig::transverse();
        let few = scan_grid(&config, 5, 1.5);
        let p = vec![0.5; 5];
        assert!(matches!(
            fit_cosine_points(&few, &p, config.delay, 0.0),
            Err(Error::InsufficientData(_))
        ));
        let narrow = scan_grid(&config, 12, 0.4);
        let p = vec![0.5; 12];
        assert!(matches!(
            fit_cosine_points(&narrow, &p, config.delay, 0.0),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn fringe_center_is_independent_of_delay_on_clean_data() {
        for delay in [1e-3, 5e-3, 10e-3] {
            let config = RamseyConfig {
                delay,
                ..RamseyConfig::transverse()
            };
            let grid = scan_grid(&config, 16, 1.5);
            let probabilities: Vec<f64> = grid
                .iter()
                .map(|d| ramsey_probability(*d, &config).unwrap())
                .collect();
            let fit =
                fit_cosine_points(&grid, &probabilities, config.delay, config.phase_offset)
                    .unwrap();
            assert!(
                fit.center_detuning.abs() < 1e-6 / delay,
                "center {} rad/s at delay {delay}",
                fit.center_detuning
            );
        }
    }

    #[test]
    fn tracker_is_unbiased_on_a_constant_frequency() {
        let mode = TAU * 56_000.0;
        let truth = FrequencySeries::new(1.0, vec![mode; 401]).unwrap();
        let tracker = track_frequency(
            &truth,
            mode,
            &QubitReference::nominal(),
            &RamseyConfig::transverse(),
            2.0,
            21,
        )
        .unwrap();
        assert_eq!(tracker.len(), 200);
        assert!(tracker.in_range.iter().all(|&f| f));
        let mean = tracker.mode_estimates.iter().sum::<f64>() / tracker.len() as f64;
        assert!(
            (mean - mode).abs() < TAU * 4.0,
            "tracker bias {} Hz",
            hz_from_angular(mean - mode)
        );
        let first_bsbt = tracker.bsbt_hz(0);
        assert_relative_eq!(first_bsbt, 12.642_815e9 + 56_000.0, max_relative = 1e-6);
    }

    #[test]
    fn tracker_follows_a_slow_ramp() {
        let mode = TAU * 56_000.0;
        let slope = TAU * 10.0;
        let values: Vec<f64> = (0..=100).map(|i| mode + slope * i as f64).collect();
        let truth = FrequencySeries::new(1.0, values).unwrap();
        let tracker = track_frequency(
            &truth,
            mode,
            &QubitReference::nominal(),
            &RamseyConfig::transverse(),
            2.0,
            4,
        )
        .unwrap();
        let in_range = tracker.in_range.iter().filter(|&&f| f).count();
        assert!(
            in_range * 10 >= tracker.len() * 9,
            "only {in_range}/{} ticks in range",
            tracker.len()
        );
        let n = tracker.len() as f64;
        let mean_t = tracker.times.iter().sum::<f64>() / n;
        let mean_f = tracker.mode_estimates.iter().sum::<f64>() / n;
        let mut stt = 0.0;
        let mut stf = 0.0;
        for i in 0..tracker.len() {
            stt += (tracker.times[i] - mean_t).powi(2);
            stf += (tracker.times[i] - mean_t) * (tracker.mode_estimates[i] - mean_f);
        }
        let fitted_slope = stf / stt;
        assert_relative_eq!(fitted_slope, slope, max_relative = 0.05);
    }

    #[test]
    fn tracker_csv_reports_absolute_transition_frequency() {
        let mode = TAU * 56_000.0;
        let truth = FrequencySeries::new(1.0, vec![mode; 21]).unwrap();
        let tracker = track_frequency(
            &truth,
            mode,
            &QubitReference::nominal(),
            &RamseyConfig::transverse(),
            2.0,
            3,
        )
        .unwrap();
        let mut buffer = Vec::new();
        tracker.write_csv(&mut buffer).unwrap();
        let text = String::from_utf8(buffer).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "t_s,f_est_hz,in_range");
        let first: Vec<&str> = lines.next().unwrap().split(',').collect();
        let f: f64 = first[1].parse().unwrap();
        assert!((f - 12.642_871e9).abs() < 1e4, "absolute frequency {f}");
        assert_eq!(first[2], "1");
    }

    #[test]
    fn constant_contrast_gives_zero_decoherence_rate() {
        let contrasts = vec![(1e-3, 0.4), (3e-3, 0.4), (6e-3, 0.4), (10e-3, 0.4)];
        let rate = decoherence_rate(&contrasts).unwrap();
        assert_eq!(rate.gamma, 0.0);
    }

    #[test]
    fn exponential_contrast_decay_is_recovered_exactly() {
        let gamma = 55.0_f64;
        let contrasts: Vec<(f64, f64)> = [1e-3_f64, 2e-3, 4e-3, 7e-3, 10e-3]
            .iter()
            .map(|&t| (t, 0.4 * (-gamma * t).exp()))
            .collect();
        let rate = decoherence_rate(&contrasts).unwrap();
        assert_relative_eq!(rate.gamma, gamma, max_relative = 1e-9);
        assert_relative_eq!(rate.initial_contrast, 0.4, max_relative = 1e-9);
    }

    fn quasi_static_series(sigma: f64, mode: f64, seed: u64) -> FrequencySeries {
        use rand_distr::StandardNormal;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let values: Vec<f64> = (0..4000)
            .map(|_| mode + sigma * rng.sample::<f64, _>(StandardNormal))
            .collect();
        FrequencySeries::new(0.05, values).unwrap()
    }

    #[test]
    fn decoherence_rate_scales_with_noise_variance() {
        let mode = TAU * 56_000.0;
        let protocol = DecoherenceProtocol {
            config: RamseyConfig {
                contrast: 0.45,
                shots_per_point: 200,
                ..RamseyConfig::transverse()
            },
            delays: vec![0.5e-3, 1e-3, 2e-3, 3e-3, 4e-3],
            points_per_fringe: 16,
            shot_duration: 12e-3,
            nominal_mode: mode,
        };
        let sigma = TAU * 30.0;
        let gentle = measure_contrast_decay(&quasi_static_series(sigma, mode, 2), &protocol, 31)
            .unwrap();
        let harsh =
            measure_contrast_decay(&quasi_static_series(2.0 * sigma, mode, 2), &protocol, 31)
                .unwrap();
        let gamma_gentle = decoherence_rate(&gentle).unwrap().gamma;
        let gamma_harsh = decoherence_rate(&harsh).unwrap().gamma;
        let ratio = gamma_harsh / gamma_gentle;
        assert!(
            (2.5..6.0).contains(&ratio),
            "variance quadrupled but rate ratio was {ratio:.2} \
             (gentle {gamma_gentle:.1}/s, harsh {gamma_harsh:.1}/s)"
        );
    }
}
