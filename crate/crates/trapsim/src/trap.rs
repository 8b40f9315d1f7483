//! Static characterization of a linear RF trap.
//!
//! The trap is described by a pseudopotential model: the RF drive of
//! amplitude `V0` at angular frequency `Omega` confines the ion radially
//! with secular frequency
//!
//! ```text
//! omega_r = e V0 / (sqrt(2) m Omega R^2)
//! ```
//!
//! where `R` is an effective radial distance that absorbs electrode-shape
//! factors, while a DC voltage `U0` on the end caps confines it axially,
//!
//! ```text
//! omega_z = sqrt(2 kappa e U0 / m) / z0
//! ```
//!
//! with `z0` half the end-cap separation and `kappa` a geometric loss
//! factor. A DC bias `U_rod` on two of the four rods splits the radial
//! degeneracy through the quadrupole coefficient `c22`: it stiffens x and
//! softens y by equal amounts in frequency squared. The same bias leaks
//! weakly into the axial direction through `c20`; this correction is off by
//! default and can be enabled per geometry.
//!
//! Both `R` and `kappa` are treated as calibration constants: they are fit
//! once from a measured pair of secular frequencies and then reproduce the
//! trap over its whole operating range.

use crate::error::{Error, Result};
use crate::units::{ATOMIC_MASS_KG, ELEMENTARY_CHARGE, YB171_MASS_AMU};

/// A trapped ion species.
#[derive(Debug, Clone, PartialEq)]
pub struct IonSpecies {
    /// Ion mass in kilograms.
    pub mass: f64,
    /// Ion charge in coulombs.
    pub charge: f64,
    /// Display label, e.g. "171Yb+".
    pub label: String,
}

impl IonSpecies {
    /// Singly charged ytterbium-171.
    pub fn yb171() -> Self {
        Self {
            mass: YB171_MASS_AMU * ATOMIC_MASS_KG,
            charge: ELEMENTARY_CHARGE,
            label: "171Yb+".into(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mass > 0.0) || !self.mass.is_finite() {
            return Err(Error::InvalidParameter { name: "mass", value: self.mass });
        }
        if !(self.charge > 0.0) || !self.charge.is_finite() {
            return Err(Error::InvalidParameter { name: "charge", value: self.charge });
        }
        Ok(())
    }
}

/// Electrode geometry and calibration constants.
#[derive(Debug, Clone, PartialEq)]
pub struct TrapGeometry {
    /// Effective radial distance `R` in meters (calibrated).
    pub effective_radius: f64,
    /// Half the end-cap (needle) separation `z0` in meters.
    pub half_endcap_distance: f64,
    /// Quadrupole coefficient coupling the rod bias to the x/y split.
    pub c22: f64,
    /// Quadrupole coefficient coupling the rod bias to the axial direction.
    pub c20: f64,
    /// Axial geometric loss factor `kappa` (calibrated).
    pub kappa: f64,
    /// Include the rod-bias `c20` leak in the axial frequency. Off by
    /// default; the leak is a fraction of a percent at typical biases.
    pub include_rod_axial_leak: bool,
}

impl TrapGeometry {
    pub fn validate(&self) -> Result<()> {
        for (name, value) in [
            ("effective_radius", self.effective_radius),
            ("half_endcap_distance", self.half_endcap_distance),
            ("c22", self.c22),
            ("kappa", self.kappa),
        ] {
            if !(value > 0.0) || !value.is_finite() {
                return Err(Error::InvalidParameter { name, value });
            }
        }
        if !(self.c20 >= 0.0) || !self.c20.is_finite() {
            return Err(Error::InvalidParameter { name: "c20", value: self.c20 });
        }
        Ok(())
    }
}

/// Voltages applied to the trap.
#[derive(Debug, Clone, PartialEq)]
pub struct DriveParams {
    /// RF amplitude `V0` on the rods, volts.
    pub rf_amplitude: f64,
    /// RF drive angular frequency `Omega`, rad/s.
    pub rf_angular_frequency: f64,
    /// DC bias `U_rod` on one rod pair, volts. Positive bias softens y.
    pub rod_dc: f64,
    /// DC voltage `U0` on the end caps, volts.
    pub endcap_dc: f64,
}

impl DriveParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.rf_amplitude > 0.0) || !self.rf_amplitude.is_finite() {
            return Err(Error::InvalidParameter {
                name: "rf_amplitude",
                value: self.rf_amplitude,
            });
        }
        if !(self.rf_angular_frequency > 0.0) || !self.rf_angular_frequency.is_finite() {
            return Err(Error::InvalidParameter {
                name: "rf_angular_frequency",
                value: self.rf_angular_frequency,
            });
        }
        if !self.rod_dc.is_finite() {
            return Err(Error::InvalidParameter { name: "rod_dc", value: self.rod_dc });
        }
        if !self.endcap_dc.is_finite() {
            return Err(Error::InvalidParameter { name: "endcap_dc", value: self.endcap_dc });
        }
        Ok(())
    }
}

/// The three secular frequencies of a single trapped ion, rad/s.
///
/// Constructed only through the functions in this module, which refuse to
/// return imaginary (unstable) solutions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecularFrequencies {
    pub omega_x: f64,
    pub omega_y: f64,
    pub omega_z: f64,
}

/// Complete description of one trap: who is trapped, in what electrodes,
/// at which voltages.
#[derive(Debug, Clone, PartialEq)]
pub struct TrapConfig {
    pub species: IonSpecies,
    pub geometry: TrapGeometry,
    pub drive: DriveParams,
}

impl TrapConfig {
    /// All three secular frequencies at the configured operating point.
    pub fn secular_frequencies(&self) -> Result<SecularFrequencies> {
        let (omega_x, omega_y) =
            transverse_frequencies_with_dc(&self.drive, &self.geometry, &self.species)?;
        let omega_z = axial_secular_frequency(&self.drive, &self.geometry, &self.species)?;
        Ok(SecularFrequencies { omega_x, omega_y, omega_z })
    }
}

/// Degenerate radial secular frequency at zero rod bias, rad/s.
///
/// Linear in the RF amplitude and in the inverse drive frequency. Logs a
/// warning when the result exceeds a tenth of the drive frequency, where
/// the time-averaged pseudopotential stops being a good description.
pub fn radial_secular_frequency(
    drive: &DriveParams,
    geometry: &TrapGeometry,
    species: &IonSpecies,
) -> Result<f64> {
    drive.validate()?;
    geometry.validate()?;
    species.validate()?;
    let omega = species.charge * drive.rf_amplitude
        / (std::f64::consts::SQRT_2
            * species.mass
            * drive.rf_angular_frequency
            * geometry.effective_radius
            * geometry.effective_radius);
    if omega > drive.rf_angular_frequency / 10.0 {
        log::warn!(
            "radial secular frequency {:.3e} rad/s exceeds a tenth of the drive \
             frequency {:.3e} rad/s; the pseudopotential average is marginal",
            omega,
            drive.rf_angular_frequency
        );
    }
    Ok(omega)
}

/// Axial secular frequency from the end-cap voltage, rad/s.
pub fn axial_secular_frequency(
    drive: &DriveParams,
    geometry: &TrapGeometry,
    species: &IonSpecies,
) -> Result<f64> {
    drive.validate()?;
    geometry.validate()?;
    species.validate()?;
    let mut omega_sq = 2.0 * geometry.kappa * species.charge * drive.endcap_dc
        / (species.mass * geometry.half_endcap_distance * geometry.half_endcap_distance);
    if geometry.include_rod_axial_leak {
        omega_sq -= 2.0 * species.charge * drive.rod_dc * geometry.c20
            / (species.mass * geometry.effective_radius * geometry.effective_radius);
    }
    if omega_sq <= 0.0 {
        return Err(Error::AxialInstability { omega_z_sq: omega_sq });
    }
    Ok(omega_sq.sqrt())
}

/// Transverse frequencies `(omega_x, omega_y)` with the rod bias applied,
/// rad/s.
///
/// The bias enters in frequency squared: `omega_{x,y}^2 = omega_r^2 +/-
/// e U_rod c22 / (m R^2)`, so the identity `omega_x^2 + omega_y^2 =
/// 2 omega_r^2` holds for any bias. A bias large enough to drive
/// `omega_y^2` negative is an error, not a NaN.
pub fn transverse_frequencies_with_dc(
    drive: &DriveParams,
    geometry: &TrapGeometry,
    species: &IonSpecies,
) -> Result<(f64, f64)> {
    let omega_r = radial_secular_frequency(drive, geometry, species)?;
    let split = species.charge * drive.rod_dc * geometry.c22
        / (species.mass * geometry.effective_radius * geometry.effective_radius);
    let x_sq = omega_r * omega_r + split;
    let y_sq = omega_r * omega_r - split;
    if y_sq <= 0.0 {
        return Err(Error::TransverseInstability { rod_dc: drive.rod_dc, omega_y_sq: y_sq });
    }
    if x_sq <= 0.0 {
        return Err(Error::TransverseInstability { rod_dc: drive.rod_dc, omega_y_sq: x_sq });
    }
    Ok((x_sq.sqrt(), y_sq.sqrt()))
}

/// Rod bias that places the softened transverse frequency at
/// `target_omega_y` (rad/s) while the RF drive is held fixed.
pub fn rod_voltage_for_target_omega_y(
    target_omega_y: f64,
    drive: &DriveParams,
    geometry: &TrapGeometry,
    species: &IonSpecies,
) -> Result<f64> {
    if !(target_omega_y > 0.0) || !target_omega_y.is_finite() {
        return Err(Error::InvalidParameter { name: "target_omega_y", value: target_omega_y });
    }
    let omega_r = radial_secular_frequency(drive, geometry, species)?;
    let split = omega_r * omega_r - target_omega_y * target_omega_y;
    Ok(split * species.mass * geometry.effective_radius * geometry.effective_radius
        / (species.charge * geometry.c22))
}

/// Effective radius `R` that reproduces a measured radial frequency
/// (rad/s) at the given drive.
pub fn calibrate_effective_radius(
    measured_omega_r: f64,
    drive: &DriveParams,
    species: &IonSpecies,
) -> Result<f64> {
    drive.validate()?;
    species.validate()?;
    if !(measured_omega_r > 0.0) || !measured_omega_r.is_finite() {
        return Err(Error::Uncalibratable("measured radial frequency must be positive"));
    }
    let r_sq = species.charge * drive.rf_amplitude
        / (std::f64::consts::SQRT_2
            * species.mass
            * drive.rf_angular_frequency
            * measured_omega_r);
    Ok(r_sq.sqrt())
}

/// Axial loss factor `kappa` that reproduces a measured axial frequency
/// (rad/s) at end-cap voltage `endcap_dc`.
pub fn calibrate_kappa(
    measured_omega_z: f64,
    endcap_dc: f64,
    geometry: &TrapGeometry,
    species: &IonSpecies,
) -> Result<f64> {
    species.validate()?;
    if !(measured_omega_z > 0.0) || !measured_omega_z.is_finite() {
        return Err(Error::Uncalibratable("measured axial frequency must be positive"));
    }
    if !(endcap_dc > 0.0) || !endcap_dc.is_finite() {
        return Err(Error::Uncalibratable("end-cap voltage must be positive"));
    }
    if !(geometry.half_endcap_distance > 0.0) {
        return Err(Error::Uncalibratable("end-cap distance must be positive"));
    }
    Ok(species.mass
        * measured_omega_z
        * measured_omega_z
        * geometry.half_endcap_distance
        * geometry.half_endcap_distance
        / (2.0 * species.charge * endcap_dc))
}

/// Transverse-to-axial anisotropy `alpha = omega_y / omega_z`.
pub fn anisotropy(omega_y: f64, omega_z: f64) -> Result<f64> {
    if !(omega_y > 0.0) || !omega_y.is_finite() {
        return Err(Error::InvalidParameter { name: "omega_y", value: omega_y });
    }
    if !(omega_z > 0.0) || !omega_z.is_finite() {
        return Err(Error::InvalidParameter { name: "omega_z", value: omega_z });
    }
    Ok(omega_y / omega_z)
}
