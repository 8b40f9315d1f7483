//! Frequency-stability analytics: overlapping Allan deviation, noise-slope
//! classification per decade of averaging time, and linear drift fits.
//!
//! Absolute mode works in the units of the input series (hertz for the
//! scenarios); fractional mode normalizes by the series mean first, which is
//! how the ppm figures are produced.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Normalization of an Allan-deviation analysis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdevMode {
    /// Deviation in the units of the series.
    Absolute,
    /// Deviation divided by the series mean.
    Fractional,
}

impl AdevMode {
    pub fn label(&self) -> &'static str {
        match self {
            AdevMode::Absolute => "absolute",
            AdevMode::Fractional => "fractional",
        }
    }
}

/// Noise character of one decade of averaging time, read off the log-log
/// slope of the Allan deviation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlopeClass {
    /// Slope near -1/2: white frequency noise, averaging down.
    White,
    /// Slope near 0: flicker floor.
    Flicker,
    /// Slope at or above +1/2: random walk or deterministic drift.
    RandomWalkOrDrift,
    /// No resolvable slope (zero deviations or a degenerate decade).
    Undefined,
}

impl SlopeClass {
    pub fn label(&self) -> &'static str {
        match self {
            SlopeClass::White => "white",
            SlopeClass::Flicker => "flicker",
            SlopeClass::RandomWalkOrDrift => "random-walk-or-drift",
            SlopeClass::Undefined => "undefined",
        }
    }

    fn from_slope(slope: f64) -> Self {
        if slope <= -0.25 {
            SlopeClass::White
        } else if slope < 0.25 {
            SlopeClass::Flicker
        } else {
            SlopeClass::RandomWalkOrDrift
        }
    }
}

/// Fitted log-log slope of one decade.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecadeSlope {
    /// Lower edge of the decade, s.
    pub decade_start: f64,
    pub slope: f64,
    pub class: SlopeClass,
}

/// Linear drift estimate of a series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftEstimate {
    /// Slope in series units per second.
    pub rate: f64,
    pub rate_sigma: f64,
}

/// Allan-deviation curve with optional annotations.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    /// Averaging times, strictly increasing, s.
    pub taus: Vec<f64>,
    pub adev: Vec<f64>,
    pub mode: AdevMode,
    /// Per-decade classifications; empty until classified.
    pub slopes: Vec<DecadeSlope>,
    pub drift: Option<DriftEstimate>,
}

impl StabilityReport {
    /// Deviation at the grid point closest to `tau`, if any.
    pub fn at_tau(&self, tau: f64) -> Option<(f64, f64)> {
        let mut best: Option<(f64, f64)> = None;
        for (t, a) in self.taus.iter().zip(&self.adev) {
            let closer = match best {
                Some((bt, _)) => (t - tau).abs() < (bt - tau).abs(),
                None => true,
            };
            if closer {
                best = Some((*t, *a));
            }
        }
        best
    }

    /// One-line stability statement at the grid point nearest `tau`, in the
    /// report's `X Hz, i.e., Y ppm` convention. `reference_hz` converts
    /// between the two readings.
    pub fn summary_at(&self, tau: f64, reference_hz: f64) -> Option<String> {
        let (t, a) = self.at_tau(tau)?;
        let (hz, ppm) = match self.mode {
            AdevMode::Absolute => (a, a / reference_hz * 1e6),
            AdevMode::Fractional => (a * reference_hz, a * 1e6),
        };
        Some(format!(
            "{hz:.3} Hz, i.e., {ppm:.3} ppm at tau = {t:.0} s"
        ))
    }

    /// Write the curve as CSV with columns `tau_s,adev,mode`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "tau_s,adev,mode")?;
        for (tau, adev) in self.taus.iter().zip(&self.adev) {
            writeln!(out, "{},{},{}", tau, adev, self.mode.label())?;
        }
        Ok(())
    }

    pub fn save_csv<P: AsRef<Path>>(&self, path: P) -> io::Result<()> {
        let file = File::create(path)?;
        self.write_csv(BufWriter::new(file))
    }
}

/// Logarithmic averaging-time grid: 10 points per decade from the sample
/// period up to a quarter of the record length, expressed as exact
/// multiples of the sample period.
pub fn default_tau_grid(sample_period: f64, record_duration: f64) -> Vec<f64> {
    let samples = (record_duration / sample_period).round() as i64;
    let max_m = (samples / 4).max(1);
    let mut taus = Vec::new();
    let mut last_m = 0i64;
    let mut i = 0;
    loop {
        let tau = sample_period * 10f64.powf(i as f64 / 10.0);
        let m = (tau / sample_period).round() as i64;
        if m > max_m {
            break;
        }
        if m > last_m {
            taus.push(m as f64 * sample_period);
            last_m = m;
        }
        i += 1;
    }
    taus
}

/// Overlapping Allan deviation of a uniformly sampled series.
///
/// Each requested averaging time is rounded to a whole number of samples
/// (with a warning when the rounding is material), duplicates after
/// rounding are dropped, and the returned grid holds the effective times.
pub fn allan_deviation(
    values: &[f64],
    sample_period: f64,
    taus: &[f64],
    mode: AdevMode,
) -> Result<StabilityReport> {
    if !(sample_period.is_finite() && sample_period > 0.0) {
        return Err(Error::InvalidParameter {
            name: "sample_period",
            value: sample_period,
        });
    }
    let n = values.len();
    if n < 3 {
        return Err(Error::InsufficientData(format!(
            "Allan deviation needs at least 3 samples, got {n}"
        )));
    }
    if taus.is_empty() {
        return Err(Error::InsufficientData("empty averaging-time grid".into()));
    }

    let mean = values.iter().sum::<f64>() / n as f64;
    let scale = match mode {
        AdevMode::Absolute => 1.0,
        AdevMode::Fractional => {
            if mean <= 0.0 {
                return Err(Error::InvalidParameter {
                    name: "series_mean",
                    value: mean,
                });
            }
            mean
        }
    };

    // Accumulating mean-centered values keeps the prefix sums small, so
    // window-mean differences stay accurate even when the series rides on a
    // large offset (megahertz frequencies with sub-hertz fluctuations).
    let mut prefix = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    prefix.push(0.0);
    for v in values {
        acc += v - mean;
        prefix.push(acc);
    }
    let window_mean = |k: usize, m: usize| (prefix[k + m] - prefix[k]) / m as f64;

    let mut out_taus = Vec::with_capacity(taus.len());
    let mut out_adev = Vec::with_capacity(taus.len());
    let mut last_m = 0usize;
    for &tau in taus {
        if !(tau.is_finite() && tau > 0.0) {
            return Err(Error::InvalidParameter {
                name: "tau",
                value: tau,
            });
        }
        let m = (tau / sample_period).round().max(1.0) as usize;
        if (m as f64 * sample_period - tau).abs() > 1e-9 * tau {
            log::warn!(
                "averaging time {tau} s rounded to {} s ({} samples)",
                m as f64 * sample_period,
                m
            );
        }
        if m <= last_m {
            continue;
        }
        if 2 * m + 1 > n {
            return Err(Error::InsufficientData(format!(
                "averaging time {} s needs {} samples, record has {n}",
                m as f64 * sample_period,
                2 * m + 1
            )));
        }
        let pairs = n - 2 * m + 1;
        let mut sum_sq = 0.0;
        for k in 0..pairs {
            let diff = window_mean(k + m, m) - window_mean(k, m);
            sum_sq += diff * diff;
        }
        let sigma_sq = sum_sq / (2.0 * pairs as f64);
        out_taus.push(m as f64 * sample_period);
        out_adev.push(sigma_sq.sqrt() / scale);
        last_m = m;
    }

    Ok(StabilityReport {
        taus: out_taus,
        adev: out_adev,
        mode,
        slopes: Vec::new(),
        drift: None,
    })
}

/// Classify the noise character of each decade of averaging time from the
/// log-log slope of the Allan deviation.
pub fn classify_noise_slope(report: &StabilityReport) -> Result<Vec<DecadeSlope>> {
    let mut decades: Vec<(i32, Vec<(f64, f64)>)> = Vec::new();
    for (tau, adev) in report.taus.iter().zip(&report.adev) {
        let decade = tau.log10().floor() as i32;
        match decades.last_mut() {
            Some((d, points)) if *d == decade => points.push((*tau, *adev)),
            _ => decades.push((decade, vec![(*tau, *adev)])),
        }
    }
    decades.retain(|(_, points)| points.len() >= 2);
    if decades.is_empty() {
        return Err(Error::ClassificationUnavailable);
    }

    let mut out = Vec::with_capacity(decades.len());
    for (decade, points) in decades {
        let decade_start = 10f64.powi(decade);
        if points.iter().any(|(_, a)| *a <= 0.0) {
            out.push(DecadeSlope {
                decade_start,
                slope: 0.0,
                class: SlopeClass::Undefined,
            });
            continue;
        }
        let n = points.len() as f64;
        let mean_x = points.iter().map(|(t, _)| t.log10()).sum::<f64>() / n;
        let mean_y = points.iter().map(|(_, a)| a.log10()).sum::<f64>() / n;
        let mut sxx = 0.0;
        let mut sxy = 0.0;
        for (t, a) in &points {
            sxx += (t.log10() - mean_x).powi(2);
            sxy += (t.log10() - mean_x) * (a.log10() - mean_y);
        }
        if sxx == 0.0 {
            out.push(DecadeSlope {
                decade_start,
                slope: 0.0,
                class: SlopeClass::Undefined,
            });
            continue;
        }
        let slope = sxy / sxx;
        out.push(DecadeSlope {
            decade_start,
            slope,
            class: SlopeClass::from_slope(slope),
        });
    }
    Ok(out)
}

/// Least-squares linear drift of a uniformly sampled series, in series
/// units per second.
pub fn drift_rate(values: &[f64], sample_period: f64) -> Result<DriftEstimate> {
    if values.len() < 2 {
        return Err(Error::InsufficientData(
            "drift fit needs at least 2 samples".into(),
        ));
    }
    if !(sample_period.is_finite() && sample_period > 0.0) {
        return Err(Error::InvalidParameter {
            name: "sample_period",
            value: sample_period,
        });
    }
    let n = values.len() as f64;
    let mean_t = sample_period * (values.len() - 1) as f64 / 2.0;
    let mean_v = values.iter().sum::<f64>() / n;
    let mut stt = 0.0;
    let mut stv = 0.0;
    for (i, v) in values.iter().enumerate() {
        let dt = i as f64 * sample_period - mean_t;
        stt += dt * dt;
        stv += dt * (v - mean_v);
    }
    let rate = stv / stt;
    let intercept = mean_v - rate * mean_t;
    let mut ssr = 0.0;
    for (i, v) in values.iter().enumerate() {
        let t = i as f64 * sample_period;
        ssr += (v - (intercept + rate * t)).powi(2);
    }
    let dof = n - 2.0;
    let rate_sigma = if dof > 0.0 { (ssr / dof / stt).sqrt() } else { 0.0 };
    Ok(DriftEstimate { rate, rate_sigma })
}

/// Fill flagged-out samples by linear interpolation between valid
/// neighbors, returning the filled series and the gap fraction.
///
/// Leading and trailing gaps take the nearest valid value. A gap fraction
/// above 5% is loud enough to warn about, since interpolation starts to
/// shape the statistics there.
pub fn interpolate_gaps(values: &[f64], valid: &[bool]) -> Result<(Vec<f64>, f64)> {
    if values.len() != valid.len() {
        return Err(Error::InsufficientData(
            "value and validity lists differ in length".into(),
        ));
    }
    let good = valid.iter().filter(|&&v| v).count();
    if good == 0 {
        return Err(Error::InsufficientData(
            "no valid samples to interpolate between".into(),
        ));
    }
    let gap_fraction = 1.0 - good as f64 / values.len() as f64;
    if gap_fraction > 0.05 {
        log::warn!(
            "{:.1}% of samples interpolated across gaps; statistics may be shaped by the fill",
            100.0 * gap_fraction
        );
    }

    let mut filled = values.to_vec();
    let mut last_valid: Option<usize> = None;
    for i in 0..filled.len() {
        if valid[i] {
            if let Some(prev) = last_valid {
                if i > prev + 1 {
                    let span = (i - prev) as f64;
                    for j in prev + 1..i {
                        let w = (j - prev) as f64 / span;
                        filled[j] = values[prev] * (1.0 - w) + values[i] * w;
                    }
                }
            } else {
                for j in 0..i {
                    filled[j] = values[i];
                }
            }
            last_valid = Some(i);
        }
    }
    if let Some(prev) = last_valid {
        for j in prev + 1..filled.len() {
            filled[j] = values[prev];
        }
    }
    Ok((filled, gap_fraction))
}
