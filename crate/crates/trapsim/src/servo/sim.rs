//! Discrete-time simulation of the locked RF drive chain.
//!
//! Each servo period the source amplitude (carrying its noise processes) is
//! scaled by the mixer actuation, pushed through the resonator envelope
//! response onto the trap electrodes, sampled by the divider + rectifier
//! chain, and compared against the quantized setpoint by the PI servo. An
//! out-of-loop monitor rectifier watches the same RF from a different
//! thermal environment, which is what makes in-loop blindness visible.

use std::f64::consts::TAU;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::series::FrequencySeries;
use crate::servo::noise::{stream_rng, NoiseSuite, STREAM_SETPOINT, STREAM_SOURCE_WALK, STREAM_SOURCE_WHITE};
use crate::servo::{
    detector_chain_output, quantize_setpoint, servo_step, ComponentChain, ResonatorModel,
    ResonatorState, ServoConfig, ServoState,
};
use crate::trap::{radial_secular_frequency, TrapConfig};
use crate::units::hz_from_angular;

/// Run-level options for [`simulate_loop`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoopSettings {
    pub duration: f64,
    pub locked: bool,
    /// Record every `record_stride`-th servo sample (1 = every sample).
    pub record_stride: usize,
}

impl LoopSettings {
    pub fn locked(duration: f64) -> Self {
        LoopSettings {
            duration,
            locked: true,
            record_stride: 1,
        }
    }

    pub fn unlocked(duration: f64) -> Self {
        LoopSettings {
            duration,
            locked: false,
            record_stride: 1,
        }
    }

    pub fn with_stride(mut self, record_stride: usize) -> Self {
        self.record_stride = record_stride;
        self
    }
}

/// Recorded history of one loop run.
///
/// All vectors have the same length; row `i` was recorded at time
/// `i * record_period`, and `omega_r[i]` is always the radial secular
/// frequency implied by `v0[i]` through the trap model.
#[derive(Debug, Clone, PartialEq)]
pub struct LoopTrace {
    /// Time between recorded rows, s.
    pub record_period: f64,
    /// RF amplitude on the trap electrodes, V.
    pub v0: Vec<f64>,
    /// Radial secular frequency, rad/s.
    pub omega_r: Vec<f64>,
    /// In-loop rectified sample, V.
    pub v_lock: Vec<f64>,
    /// Out-of-loop rectified monitor, V.
    pub v_monitor: Vec<f64>,
    pub t_supply: Vec<f64>,
    pub t_resonator: Vec<f64>,
    pub t_detector: Vec<f64>,
    pub locked: Vec<bool>,
    /// Fraction of servo updates that hit an actuator limit.
    pub saturated_fraction: f64,
    /// True when more than 1% of samples were saturated, i.e. the lock
    /// cannot be trusted.
    pub lock_failure: bool,
}

impl LoopTrace {
    pub fn len(&self) -> usize {
        self.v0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.v0.is_empty()
    }

    pub fn time(&self, index: usize) -> f64 {
        index as f64 * self.record_period
    }

    /// The radial secular frequency history as a uniformly sampled series
    /// (rad/s).
    pub fn omega_series(&self) -> Result<FrequencySeries> {
        FrequencySeries::new(self.record_period, self.omega_r.clone())
    }

    /// Write the trace as CSV with the stable column contract
    /// `t_s,v0_V,omega_r_hz,v_lock_V,v_monitor_V,T_supply_C,T_resonator_C,locked`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(
            out,
            "t_s,v0_V,omega_r_hz,v_lock_V,v_monitor_V,T_supply_C,T_resonator_C,locked"
        )?;
        for i in 0..self.len() {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                self.time(i),
                self.v0[i],
                hz_from_angular(self.omega_r[i]),
                self.v_lock[i],
                self.v_monitor[i],
                self.t_supply[i],
                self.t_resonator[i],
                u8::from(self.locked[i]),
            )?;
        }
        Ok(())
    }

    pub fn save_csv<P: AsRef<Path>>(&self, path: P) -> io::Result<()> {
        let file = File::create(path)?;
        self.write_csv(BufWriter::new(file))
    }
}

/// Bounded slow drift of the digital setpoint reference: a reflected random
/// walk confined to ±(stability/2) of the span, so the peak-to-peak
/// excursion over any window never exceeds the stated stability.
struct SetpointDrift {
    value: f64,
    bound: f64,
    step_sigma: f64,
}

impl SetpointDrift {
    fn new(config: &ServoConfig, dt: f64) -> Self {
        let bound = 0.5 * config.setpoint_stability_ppm * 1e-6 * config.reference_span;
        SetpointDrift {
            value: 0.0,
            bound,
            step_sigma: bound * dt.sqrt() / 60.0,
        }
    }

    fn advance(&mut self, rng: &mut ChaCha8Rng) -> f64 {
        let step: f64 = rng.sample(StandardNormal);
        self.value += self.step_sigma * step;
        if self.value > self.bound {
            self.value = 2.0 * self.bound - self.value;
        }
        if self.value < -self.bound {
            self.value = -2.0 * self.bound - self.value;
        }
        self.value
    }
}

/// Simulate the amplitude lock for `settings.duration` seconds.
///
/// The run is deterministic for a fixed `(configuration, seed)`: locked and
/// unlocked runs of the same suite see bit-identical noise realizations,
/// which is what makes suppression comparisons meaningful. When unlocked,
/// the loop is held open at the nominal mixer actuation (the midpoint of the
/// actuator limits).
pub fn simulate_loop(
    trap: &TrapConfig,
    chain: &ComponentChain,
    resonator: &ResonatorModel,
    servo: &ServoConfig,
    noise: &NoiseSuite,
    settings: &LoopSettings,
) -> Result<LoopTrace> {
    chain.validate()?;
    resonator.validate()?;
    servo.validate()?;
    noise.validate()?;
    quantize_setpoint(servo.setpoint, servo)?;
    if !(settings.duration.is_finite() && settings.duration > 0.0) {
        return Err(Error::InvalidParameter {
            name: "duration",
            value: settings.duration,
        });
    }
    if settings.record_stride == 0 {
        return Err(Error::InvalidParameter {
            name: "record_stride",
            value: 0.0,
        });
    }
    let dt = servo.sample_period;
    let steps_exact = settings.duration / dt;
    let steps = steps_exact.round() as usize;
    if steps == 0 || (steps_exact - steps as f64).abs() > 1e-6 * steps_exact.max(1.0) {
        return Err(Error::InvalidParameter {
            name: "duration",
            value: settings.duration,
        });
    }

    let (lo, hi) = servo.actuator_limits;
    let nominal_actuation = 0.5 * (lo + hi);
    let nominal_v0 = trap.drive.rf_amplitude;
    let source_nominal = nominal_v0 / (resonator.step_gain * nominal_actuation);
    let settle = 1.0 - (-resonator.bandwidth() * dt).exp();

    let mut white_rng = stream_rng(noise.seed, STREAM_SOURCE_WHITE);
    let mut walk_rng = stream_rng(noise.seed, STREAM_SOURCE_WALK);
    let mut setpoint_rng = stream_rng(noise.seed, STREAM_SETPOINT);
    let white_sigma = noise.amplitude.white_ppm * 1e-6 / dt.sqrt();
    let walk_sigma = noise.amplitude.random_walk_ppm * 1e-6 * dt.sqrt();
    let lsb = servo.setpoint_lsb();
    let mut drift = SetpointDrift::new(servo, dt);

    let mut resonator_state = ResonatorState {
        envelope: nominal_v0,
    };
    let mut servo_state = ServoState::settled(nominal_actuation);
    let mut walk = 0.0;
    let mut saturated = 0usize;

    let records = steps.div_ceil(settings.record_stride);
    let mut trace = LoopTrace {
        record_period: dt * settings.record_stride as f64,
        v0: Vec::with_capacity(records),
        omega_r: Vec::with_capacity(records),
        v_lock: Vec::with_capacity(records),
        v_monitor: Vec::with_capacity(records),
        t_supply: Vec::with_capacity(records),
        t_resonator: Vec::with_capacity(records),
        t_detector: Vec::with_capacity(records),
        locked: Vec::with_capacity(records),
        saturated_fraction: 0.0,
        lock_failure: false,
    };

    let mut drive = trap.drive.clone();
    for k in 0..steps {
        let t = k as f64 * dt;
        let t_supply = noise.temperatures.supply.evaluate(t);
        let t_resonator = noise.temperatures.resonator.evaluate(t);
        let t_detector = noise.temperatures.detector.evaluate(t);

        let white: f64 = white_rng.sample::<f64, _>(StandardNormal) * white_sigma;
        walk += walk_rng.sample::<f64, _>(StandardNormal) * walk_sigma;
        let drift_now = drift.advance(&mut setpoint_rng);

        let mut source = source_nominal * (1.0 + white + walk);
        if let Some(tone) = &noise.tone {
            source += source_nominal
                * tone.amplitude_ppm
                * 1e-6
                * (TAU * tone.frequency_hz * t + tone.phase_rad).sin();
        }
        let source = source.max(0.0);

        let v0 = resonator_state.envelope;
        let v_lock = detector_chain_output(v0, t_detector, t_resonator, chain);
        let v_monitor = detector_chain_output(v0, t_supply, t_resonator, chain);

        let actuation = if settings.locked {
            let reference = (servo.setpoint + drift_now).clamp(0.0, servo.reference_span);
            let target = (reference / lsb).round() * lsb;
            let u = servo_step(&mut servo_state, target - v_lock, servo);
            if servo_state.saturated {
                saturated += 1;
            }
            u
        } else {
            nominal_actuation
        };

        if k % settings.record_stride == 0 {
            drive.rf_amplitude = v0;
            let omega = radial_secular_frequency(&drive, &trap.geometry, &trap.species)?;
            trace.v0.push(v0);
            trace.omega_r.push(omega);
            trace.v_lock.push(v_lock);
            trace.v_monitor.push(v_monitor);
            trace.t_supply.push(t_supply);
            trace.t_resonator.push(t_resonator);
            trace.t_detector.push(t_detector);
            trace.locked.push(settings.locked);
        }

        resonator_state.envelope += (resonator.step_gain * (source * actuation)
            - resonator_state.envelope)
            * settle;
    }

    trace.saturated_fraction = saturated as f64 / steps as f64;
    trace.lock_failure = settings.locked && trace.saturated_fraction > 0.01;
    if trace.lock_failure {
        log::warn!(
            "actuator saturated for {:.1}% of samples; the lock did not hold",
            100.0 * trace.saturated_fraction
        );
    }
    Ok(trace)
}
