//! Stochastic inputs for the loop simulation: source amplitude noise and
//! scripted temperature records for the supply, resonator, and detector
//! environments.
//!
//! Every random process draws from a counter-mode generator seeded by one
//! integer, with a fixed stream index per process, so a configuration
//! replays bit-identically no matter how the surrounding code evolves.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::servo::NOMINAL_AMBIENT_C;

pub(crate) const STREAM_SOURCE_WHITE: u64 = 0;
pub(crate) const STREAM_SOURCE_WALK: u64 = 1;
pub(crate) const STREAM_SETPOINT: u64 = 2;

/// A generator for one named noise process.
pub(crate) fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Scripted temperature record in °C, evaluated at any time in seconds.
///
/// Temperatures are inputs to the simulation, not a thermal model: the
/// scenarios drive them the way a bench test would drive a heater.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum TemperatureTrace {
    Constant {
        value_c: f64,
    },
    /// Holds `start_c` until `begin_s`, ramps linearly, holds `end_c` after
    /// `end_s`.
    Ramp {
        start_c: f64,
        end_c: f64,
        begin_s: f64,
        end_s: f64,
    },
    Sinusoid {
        mean_c: f64,
        amplitude_c: f64,
        period_s: f64,
        #[serde(default)]
        phase_rad: f64,
    },
    /// Linear interpolation through `[time_s, value_c]` points, clamped at
    /// both ends.
    PiecewiseLinear { points: Vec<[f64; 2]> },
}

impl TemperatureTrace {
    pub fn constant(value_c: f64) -> Self {
        TemperatureTrace::Constant { value_c }
    }

    pub fn evaluate(&self, t: f64) -> f64 {
        match self {
            TemperatureTrace::Constant { value_c } => *value_c,
            TemperatureTrace::Ramp {
                start_c,
                end_c,
                begin_s,
                end_s,
            } => {
                if t <= *begin_s {
                    *start_c
                } else if t >= *end_s {
                    *end_c
                } else {
                    start_c + (end_c - start_c) * (t - begin_s) / (end_s - begin_s)
                }
            }
            TemperatureTrace::Sinusoid {
                mean_c,
                amplitude_c,
                period_s,
                phase_rad,
            } => mean_c + amplitude_c * (TAU * t / period_s + phase_rad).sin(),
            TemperatureTrace::PiecewiseLinear { points } => {
                let first = match points.first() {
                    Some(p) => p,
                    None => return 0.0,
                };
                if t <= first[0] {
                    return first[1];
                }
                let last = points.last().expect("non-empty");
                if t >= last[0] {
                    return last[1];
                }
                let hi = points.partition_point(|p| p[0] < t);
                let a = points[hi - 1];
                let b = points[hi];
                a[1] + (b[1] - a[1]) * (t - a[0]) / (b[0] - a[0])
            }
        }
    }

    pub fn validate(&self, name: &str) -> Result<()> {
        let complain = |msg: String| Err(Error::ScenarioValidation(msg));
        match self {
            TemperatureTrace::Constant { value_c } => {
                if !value_c.is_finite() {
                    return complain(format!("{name}: temperature must be finite"));
                }
            }
            TemperatureTrace::Ramp {
                start_c,
                end_c,
                begin_s,
                end_s,
            } => {
                if ![*start_c, *end_c, *begin_s, *end_s].iter().all(|v| v.is_finite()) {
                    return complain(format!("{name}: ramp parameters must be finite"));
                }
                if end_s <= begin_s {
                    return complain(format!("{name}: ramp needs end_s > begin_s"));
                }
            }
            TemperatureTrace::Sinusoid {
                mean_c,
                amplitude_c,
                period_s,
                phase_rad,
            } => {
                if ![*mean_c, *amplitude_c, *period_s, *phase_rad]
                    .iter()
                    .all(|v| v.is_finite())
                {
                    return complain(format!("{name}: sinusoid parameters must be finite"));
                }
                if *period_s <= 0.0 {
                    return complain(format!("{name}: sinusoid needs period_s > 0"));
                }
            }
            TemperatureTrace::PiecewiseLinear { points } => {
                if points.is_empty() {
                    return complain(format!("{name}: piecewise trace needs at least one point"));
                }
                for p in points {
                    if !p[0].is_finite() || !p[1].is_finite() {
                        return complain(format!("{name}: piecewise points must be finite"));
                    }
                }
                for w in points.windows(2) {
                    if w[1][0] <= w[0][0] {
                        return complain(format!(
                            "{name}: piecewise points must be strictly increasing in time"
                        ));
                    }
                }
            }
        }
        Ok(())
    }
}

fn ambient() -> TemperatureTrace {
    TemperatureTrace::constant(NOMINAL_AMBIENT_C)
}

/// Temperature records for the three thermally distinct locations in the
/// chain: the source/supply rack, the resonator with its sampling divider,
/// and the rectifying detector board.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TemperatureSet {
    #[serde(default = "ambient")]
    pub supply: TemperatureTrace,
    #[serde(default = "ambient")]
    pub resonator: TemperatureTrace,
    #[serde(default = "ambient")]
    pub detector: TemperatureTrace,
}

impl Default for TemperatureSet {
    fn default() -> Self {
        TemperatureSet {
            supply: ambient(),
            resonator: ambient(),
            detector: ambient(),
        }
    }
}

impl TemperatureSet {
    pub fn validate(&self) -> Result<()> {
        self.supply.validate("supply temperature")?;
        self.resonator.validate("resonator temperature")?;
        self.detector.validate("detector temperature")
    }
}

/// Fractional amplitude noise of the RF source.
///
/// `white_ppm` is the standard deviation, in ppm, of one-second averages of
/// the white component (per-sample jitter scales as `white_ppm / sqrt(dt)`).
/// `random_walk_ppm` is the growth rate of the random-walk component in ppm
/// per square-root second. Both conventions are sample-rate independent.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AmplitudeNoise {
    #[serde(default)]
    pub white_ppm: f64,
    #[serde(default)]
    pub random_walk_ppm: f64,
}

impl AmplitudeNoise {
    pub fn validate(&self) -> Result<()> {
        if !(self.white_ppm.is_finite() && self.white_ppm >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "white_ppm",
                value: self.white_ppm,
            });
        }
        if !(self.random_walk_ppm.is_finite() && self.random_walk_ppm >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "random_walk_ppm",
                value: self.random_walk_ppm,
            });
        }
        Ok(())
    }
}

/// A deterministic sinusoidal modulation of the source amplitude, used to
/// probe the loop's disturbance rejection and to script slow supply drift.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceTone {
    pub amplitude_ppm: f64,
    pub frequency_hz: f64,
    #[serde(default)]
    pub phase_rad: f64,
}

impl SourceTone {
    pub fn validate(&self) -> Result<()> {
        if !(self.frequency_hz.is_finite() && self.frequency_hz > 0.0) {
            return Err(Error::InvalidParameter {
                name: "frequency_hz",
                value: self.frequency_hz,
            });
        }
        if !self.amplitude_ppm.is_finite() {
            return Err(Error::InvalidParameter {
                name: "amplitude_ppm",
                value: self.amplitude_ppm,
            });
        }
        Ok(())
    }
}

/// Everything stochastic or scripted that feeds one loop simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSuite {
    #[serde(default)]
    pub amplitude: AmplitudeNoise,
    #[serde(default)]
    pub temperatures: TemperatureSet,
    #[serde(default)]
    pub tone: Option<SourceTone>,
    #[serde(default)]
    pub seed: u64,
}

impl NoiseSuite {
    /// No noise, every temperature parked at the tempco reference.
    pub fn quiet(seed: u64) -> Self {
        NoiseSuite {
            amplitude: AmplitudeNoise::default(),
            temperatures: TemperatureSet::default(),
            tone: None,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.amplitude.validate()?;
        self.temperatures.validate()?;
        if let Some(tone) = &self.tone {
            tone.validate()?;
        }
        Ok(())
    }
}
