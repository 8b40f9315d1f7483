//! The RF amplitude stabilization chain: mixer actuation, resonator
//! envelope response, divider + rectifier detection with temperature
//! coefficients, and a PI servo holding the rectified sample against a
//! digitally quantized setpoint.
//!
//! The simulation is amplitude-envelope only. Every observable of interest
//! (trap frequency, rectified monitor voltages, lock residuals) lives on the
//! envelope, so nothing here resolves individual RF cycles and hours-long
//! runs stay tractable at millisecond steps.

pub mod noise;
pub mod sim;

pub use noise::{AmplitudeNoise, NoiseSuite, SourceTone, TemperatureSet, TemperatureTrace};
pub use sim::{simulate_loop, LoopSettings, LoopTrace};

use crate::error::{Error, Result};

/// Ambient temperature at which component gains are quoted, °C.
pub const NOMINAL_AMBIENT_C: f64 = 23.0;

/// The passive path from the resonator output to a rectified DC voltage:
/// a capacitive divider tapping a small fraction of the RF amplitude,
/// followed by a rectifying detector.
///
/// `chain_ratio` is the end-to-end DC volts per volt of RF amplitude at the
/// reference temperature; `divider_fraction` records how much of that
/// happens in the divider. Both gain stages drift with their local
/// temperature through first-order coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentChain {
    pub divider_fraction: f64,
    pub chain_ratio: f64,
    /// Fractional rectifier gain change per °C.
    pub detector_tempco: f64,
    /// Fractional divider gain change per °C.
    pub divider_tempco: f64,
    pub reference_temperature: f64,
}

impl ComponentChain {
    /// Bench-measured defaults: a 2% divider tap, 1:250 overall DC per RF
    /// volt, a strongly temperature-dependent rectifier, and a divider more
    /// than an order of magnitude more stable than the rectifier.
    pub fn nominal() -> Self {
        ComponentChain {
            divider_fraction: 0.02,
            chain_ratio: 1.0 / 250.0,
            detector_tempco: 1400e-6,
            divider_tempco: 17e-6,
            reference_temperature: NOMINAL_AMBIENT_C,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.divider_fraction > 0.0 && self.divider_fraction < 1.0) {
            return Err(Error::InvalidParameter {
                name: "divider_fraction",
                value: self.divider_fraction,
            });
        }
        if !(self.chain_ratio.is_finite() && self.chain_ratio > 0.0) {
            return Err(Error::InvalidParameter {
                name: "chain_ratio",
                value: self.chain_ratio,
            });
        }
        for (name, value) in [
            ("detector_tempco", self.detector_tempco),
            ("divider_tempco", self.divider_tempco),
            ("reference_temperature", self.reference_temperature),
        ] {
            if !value.is_finite() {
                return Err(Error::InvalidParameter { name, value });
            }
        }
        Ok(())
    }
}

/// Rectified DC output of the sampling chain for an RF amplitude `v_rf`,
/// with the rectifier at `detector_t` and the divider at `divider_t` (°C).
pub fn detector_chain_output(
    v_rf: f64,
    detector_t: f64,
    divider_t: f64,
    chain: &ComponentChain,
) -> f64 {
    let detector_gain = 1.0 + chain.detector_tempco * (detector_t - chain.reference_temperature);
    let divider_gain = 1.0 + chain.divider_tempco * (divider_t - chain.reference_temperature);
    v_rf * chain.chain_ratio * detector_gain * divider_gain
}

/// First-order envelope model of the step-up resonator.
#[derive(Debug, Clone, PartialEq)]
pub struct ResonatorModel {
    pub loaded_q: f64,
    /// Drive (carrier) angular frequency, rad/s.
    pub center_frequency: f64,
    /// DC amplitude gain from mixer output to trap electrode.
    pub step_gain: f64,
}

impl ResonatorModel {
    /// A loaded Q of 180 at a 16.9 MHz drive, stepping ~1 V of mixer output
    /// up to the hundreds of volts the trap electrodes need.
    pub fn nominal() -> Self {
        ResonatorModel {
            loaded_q: 180.0,
            center_frequency: crate::units::angular_from_hz(16.9e6),
            step_gain: 1200.0,
        }
    }

    /// Envelope bandwidth of the loaded resonator, rad/s.
    pub fn bandwidth(&self) -> f64 {
        self.center_frequency / (2.0 * self.loaded_q)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, value) in [
            ("loaded_q", self.loaded_q),
            ("center_frequency", self.center_frequency),
            ("step_gain", self.step_gain),
        ] {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidParameter { name, value });
            }
        }
        Ok(())
    }
}

/// Envelope state of the resonator output.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ResonatorState {
    pub envelope: f64,
}

/// Advance the resonator envelope by `dt` seconds with `input` volts at the
/// mixer output, returning the new output amplitude.
///
/// The update uses the exact discrete solution of the one-pole response, so
/// the step response passes 1 - 1/e at t = 2Q/Omega regardless of step size.
pub fn resonator_step(
    state: &mut ResonatorState,
    input: f64,
    dt: f64,
    model: &ResonatorModel,
) -> f64 {
    debug_assert!(dt > 0.0);
    let settle = 1.0 - (-model.bandwidth() * dt).exp();
    state.envelope += (model.step_gain * input - state.envelope) * settle;
    state.envelope
}

/// PI servo configuration, including the digital setpoint source.
#[derive(Debug, Clone, PartialEq)]
pub struct ServoConfig {
    pub proportional_gain: f64,
    /// Integrator gain in actuation volts per error-volt-second.
    pub integrator_gain: f64,
    pub setpoint: f64,
    pub setpoint_resolution_bits: u32,
    /// Bound on the slow drift of the setpoint reference, ppm of the span.
    pub setpoint_stability_ppm: f64,
    /// Usable range of the mixer control input, V.
    pub actuator_limits: (f64, f64),
    pub sample_period: f64,
    /// Full scale of the setpoint source, V.
    pub reference_span: f64,
}

impl ServoConfig {
    /// Gains chosen for a ~50 Hz unity-gain bandwidth at the 1 ms sample
    /// period: a decade below Nyquist for phase margin, with the integrator
    /// carrying the low-frequency suppression the lock exists for.
    pub fn nominal() -> Self {
        ServoConfig {
            proportional_gain: 0.02,
            integrator_gain: 62.5,
            setpoint: 2.4,
            setpoint_resolution_bits: 20,
            setpoint_stability_ppm: 0.25,
            actuator_limits: (0.0, 1.0),
            sample_period: 1e-3,
            reference_span: 5.0,
        }
    }

    /// Smallest representable setpoint increment, V.
    pub fn setpoint_lsb(&self) -> f64 {
        self.reference_span / (1u64 << self.setpoint_resolution_bits) as f64
    }

    pub fn validate(&self) -> Result<()> {
        for (name, value) in [
            ("proportional_gain", self.proportional_gain),
            ("integrator_gain", self.integrator_gain),
        ] {
            if !(value.is_finite() && value >= 0.0) {
                return Err(Error::InvalidParameter { name, value });
            }
        }
        if !(self.sample_period.is_finite() && self.sample_period > 0.0) {
            return Err(Error::InvalidParameter {
                name: "sample_period",
                value: self.sample_period,
            });
        }
        if !(self.reference_span.is_finite() && self.reference_span > 0.0) {
            return Err(Error::InvalidParameter {
                name: "reference_span",
                value: self.reference_span,
            });
        }
        if self.setpoint_resolution_bits == 0 || self.setpoint_resolution_bits > 48 {
            return Err(Error::InvalidParameter {
                name: "setpoint_resolution_bits",
                value: self.setpoint_resolution_bits as f64,
            });
        }
        if !(self.setpoint_stability_ppm.is_finite() && self.setpoint_stability_ppm >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "setpoint_stability_ppm",
                value: self.setpoint_stability_ppm,
            });
        }
        let (lo, hi) = self.actuator_limits;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::InvalidParameter {
                name: "actuator_limits",
                value: hi - lo,
            });
        }
        if !self.setpoint.is_finite() {
            return Err(Error::InvalidParameter {
                name: "setpoint",
                value: self.setpoint,
            });
        }
        Ok(())
    }
}

/// Integrator state of the PI servo.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ServoState {
    pub integrator: f64,
    /// Whether the most recent update hit an actuator limit.
    pub saturated: bool,
}

impl ServoState {
    /// Start with the integrator preloaded, so a loop that is already at its
    /// operating point produces no artificial turn-on transient.
    pub fn settled(actuation: f64) -> Self {
        ServoState {
            integrator: actuation,
            saturated: false,
        }
    }
}

/// One PI update: returns the actuation for the given error sample.
///
/// Integration halts while the output is clamped at an actuator limit, so
/// the integrator never winds up beyond what the actuator can deliver.
pub fn servo_step(state: &mut ServoState, error: f64, config: &ServoConfig) -> f64 {
    let (lo, hi) = config.actuator_limits;
    let step = config.integrator_gain * error * config.sample_period;
    let candidate = config.proportional_gain * error + state.integrator + step;
    if candidate < lo {
        state.saturated = true;
        lo
    } else if candidate > hi {
        state.saturated = true;
        hi
    } else {
        state.integrator += step;
        state.saturated = false;
        candidate
    }
}

/// Round a requested setpoint to the nearest representable level of the
/// digital reference.
///
/// The slow reference drift (bounded by `setpoint_stability_ppm`) is a
/// property of the running simulation, not of this pure map; see
/// [`sim::simulate_loop`].
pub fn quantize_setpoint(value: f64, config: &ServoConfig) -> Result<f64> {
    if !(0.0..=config.reference_span).contains(&value) {
        return Err(Error::SetpointOutOfSpan {
            value,
            span: config.reference_span,
        });
    }
    let lsb = config.setpoint_lsb();
    Ok((value / lsb).round() * lsb)
}
