//! Stokes sedimentation model for small airborne droplets.
//!
//! A droplet of radius `R` falling through still air reaches terminal
//! velocity almost immediately; the time to settle from height `z0` is
//! `t = phi * z0 / R^2` where `phi = 9 * eta / (2 * rho * g)` collects the
//! fluid constants. Working units are micrometers, seconds and grams.

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum PhysicsError {
    #[error("radius must be positive, got {0}")]
    NonPositiveRadius(f64),
    #[error("{name} must be positive, got {value}")]
    NonPositiveInput { name: &'static str, value: f64 },
}

/// Stokes settling constants.
///
/// Defaults describe water droplets in room-temperature air:
/// dynamic viscosity of air, droplet density, gravitational acceleration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SedimentationModel {
    /// Dynamic viscosity of air, g / (um * s).
    pub viscosity: f64,
    /// Droplet density, g / um^3.
    pub density: f64,
    /// Gravitational acceleration, um / s^2.
    pub gravity: f64,
}

impl Default for SedimentationModel {
    fn default() -> Self {
        Self {
            viscosity: 1.86e-8,
            density: 1.0e-12,
            gravity: 9.8e6,
        }
    }
}

impl SedimentationModel {
    /// The settling coefficient `9 * viscosity / (2 * density * gravity)`,
    /// in um * s. Always derived from the stored constants.
    pub fn phi(&self) -> f64 {
        9.0 * self.viscosity / (2.0 * self.density * self.gravity)
    }

    /// Time in seconds for a droplet of radius `radius_um` to fall
    /// `height_um` at terminal velocity.
    pub fn sedimentation_time(&self, radius_um: f64, height_um: f64) -> Result<f64, PhysicsError> {
        if !(radius_um > 0.0) {
            return Err(PhysicsError::NonPositiveRadius(radius_um));
        }
        if !(height_um > 0.0) {
            return Err(PhysicsError::NonPositiveInput {
                name: "height_um",
                value: height_um,
            });
        }
        Ok(self.phi() * height_um / (radius_um * radius_um))
    }

    /// Terminal fall speed in um/s for a droplet of radius `radius_um`.
    pub fn terminal_velocity(&self, radius_um: f64) -> Result<f64, PhysicsError> {
        if !(radius_um > 0.0) {
            return Err(PhysicsError::NonPositiveRadius(radius_um));
        }
        Ok(radius_um * radius_um / self.phi())
    }

    /// Radius in um implied by an observed fall of `fall_um` over
    /// `duration_s` seconds, inverting the settling relation.
    pub fn estimate_radius(&self, fall_um: f64, duration_s: f64) -> Result<f64, PhysicsError> {
        if !(fall_um > 0.0) {
            return Err(PhysicsError::NonPositiveInput {
                name: "fall_um",
                value: fall_um,
            });
        }
        if !(duration_s > 0.0) {
            return Err(PhysicsError::NonPositiveInput {
                name: "duration_s",
                value: duration_s,
            });
        }
        Ok((self.phi() * fall_um / duration_s).sqrt())
    }

    /// Smallest radius whose settling time across `height_um` does not
    /// exceed `max_duration_s`; slower (smaller) droplets never cross the
    /// field of view within that window.
    pub fn min_detectable_radius(
        &self,
        height_um: f64,
        max_duration_s: f64,
    ) -> Result<f64, PhysicsError> {
        if !(height_um > 0.0) {
            return Err(PhysicsError::NonPositiveInput {
                name: "height_um",
                value: height_um,
            });
        }
        if !(max_duration_s > 0.0) {
            return Err(PhysicsError::NonPositiveInput {
                name: "max_duration_s",
                value: max_duration_s,
            });
        }
        Ok((self.phi() * height_um / max_duration_s).sqrt())
    }
}
