//! Deterministic simulator and analysis toolkit for the secular-frequency
//! stability of a linear RF ion trap.
//!
//! The crate models the full measurement chain of a trap whose RF amplitude
//! is actively stabilized:
//!
//! * [`trap`]: static trap characterization, from voltages to secular
//!   frequencies, and the calibrations that tie the model to a real machine.
//! * [`chain`]: equilibria and normal modes of a cold ion chain near the
//!   linear-to-zigzag transition, where the soft mode amplifies frequency
//!   noise.
//! * [`servo`]: the RF amplitude stabilization loop (resonator, sampling
//!   divider, rectifying detector with temperature coefficients, digital
//!   setpoint, and PI servo), simulated at the envelope level.
//! * [`spectroscopy`]: Ramsey interferometry on a sideband transition,
//!   fringe sampling with projection noise, fringe fits, a two-point drift
//!   tracker, and decoherence-rate extraction.
//! * [`stability`]: overlapping Allan deviation, noise-slope
//!   classification, and drift estimation.
//! * [`scenario`]: end-to-end measurement campaigns described by TOML
//!   files, producing CSV traces and reports that are bit-identical for a
//!   fixed seed.
//!
//! All internal physics uses SI units with angular frequencies in rad/s;
//! hertz and ppm appear only at configuration and reporting boundaries.

pub mod chain;
mod error;
pub mod scenario;
pub mod series;
pub mod servo;
pub mod spectroscopy;
pub mod stability;
pub mod trap;
pub mod units;

pub use error::{Error, Result};
