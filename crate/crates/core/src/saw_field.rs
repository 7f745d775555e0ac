//! Evanescent potential and field above an interdigital transducer (IDT).
//!
//! Heights passed as `z` are absolute, measured from layer 1; a layer-2
//! transducer faces down from `z = D`, so its own distance is `D - z`.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FieldError {
    #[error("invalid parameter {field}: {reason}")]
    InvalidParameter { field: &'static str, reason: String },
    #[error("height {z} lies outside the gap [0, {gap}]")]
    OutOfDomain { z: f64, gap: f64 },
}

/// Which face of the gap the transducer sits on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LayerSide {
    /// Bottom face, field decays upward from `z = 0`.
    Lower,
    /// Top face, field decays downward from `z = D`.
    Upper,
}

impl LayerSide {
    /// +1 for the lower layer, -1 for the upper one: the sign in front of
    /// the vertical field component and of the repulsive force.
    pub fn orientation(self) -> f64 {
        match self {
            LayerSide::Lower => 1.0,
            LayerSide::Upper => -1.0,
        }
    }
}

/// A single transducer layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdtLayer {
    /// Number of finger periods.
    pub periods: u32,
    /// Finger width; one period holds six of them.
    pub finger_width: f64,
    /// Acoustic phase velocity.
    pub velocity: f64,
    /// Voltages on the three interleaved finger sets.
    pub voltages: [f64; 3],
    /// Induced-potential amplitude per volt.
    pub coupling: f64,
    pub side: LayerSide,
    /// Separation between the two transducer faces.
    pub gap: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldVector {
    pub ex: f64,
    pub ez: f64,
}

impl FieldVector {
    pub fn magnitude(&self) -> f64 {
        self.ex.hypot(self.ez)
    }
}

impl IdtLayer {
    /// Layer with the given wavenumber and the drive `V0 = V1 = 0`, `V2 = 1`.
    pub fn with_wavenumber(k: f64, gap: f64, side: LayerSide) -> Self {
        Self {
            periods: 1,
            finger_width: PI / (3.0 * k),
            velocity: 0.0,
            voltages: [0.0, 0.0, 1.0],
            coupling: 1.0,
            side,
            gap,
        }
    }

    pub fn wavelength(&self) -> f64 {
        6.0 * self.finger_width
    }

    pub fn wavenumber(&self) -> f64 {
        2.0 * PI / self.wavelength()
    }

    pub fn validate(&self) -> Result<(), FieldError> {
        let bad = |field, reason: &str| Err(FieldError::InvalidParameter { field, reason: reason.into() });
        if self.periods == 0 {
            return bad("M", "need at least one period");
        }
        if !(self.finger_width > 0.0 && self.finger_width.is_finite()) {
            return bad("finger_width", "must be positive");
        }
        if !(self.gap > 0.0 && self.gap.is_finite()) {
            return bad("D", "must be positive");
        }
        if !self.velocity.is_finite() {
            return bad("v", "must be finite");
        }
        if !(self.coupling.is_finite() && self.voltages.iter().all(|v| v.is_finite())) {
            return bad("voltages", "must be finite");
        }
        Ok(())
    }

    /// Drive amplitude of the travelling wave, `(V2 - V0) * B0`.
    ///
    /// With this sign the closed-form field is exactly minus the gradient of
    /// the finger-sum potential whenever `V0 == V1`.
    pub fn drive_amplitude(&self) -> f64 {
        (self.voltages[2] - self.voltages[0]) * self.coupling
    }

    /// True when the three-phase drive reduces to a single travelling wave.
    pub fn closed_form_applies(&self) -> bool {
        self.voltages[0] == self.voltages[1]
    }

    /// Distance from this layer's own face for an absolute height.
    pub fn local_height(&self, z: f64) -> Result<f64, FieldError> {
        if !(0.0..=self.gap).contains(&z) {
            return Err(FieldError::OutOfDomain { z, gap: self.gap });
        }
        Ok(match self.side {
            LayerSide::Lower => z,
            LayerSide::Upper => self.gap - z,
        })
    }
}

/// Superposition of all finger potentials at distance `zl >= 0` from the
/// layer face.
pub fn potential_finger_sum(layer: &IdtLayer, x: f64, zl: f64, t: f64) -> f64 {
    let k = layer.wavenumber();
    let lambda = layer.wavelength();
    let decay = layer.coupling * (-k * zl).exp();
    let mut total = 0.0;
    for (j, v) in layer.voltages.iter().enumerate() {
        if *v == 0.0 {
            continue;
        }
        let mut set = 0.0;
        for m in 0..layer.periods {
            set += (k * (x - j as f64 * lambda / 3.0 - m as f64 * lambda - layer.velocity * t)).cos();
        }
        total += v * decay * set;
    }
    total
}

/// Finger-sum potential at an absolute height inside the gap.
pub fn potential_in_gap(layer: &IdtLayer, x: f64, z: f64, t: f64) -> Result<f64, FieldError> {
    Ok(potential_finger_sum(layer, x, layer.local_height(z)?, t))
}

/// Exact minus-gradient of the finger sum, valid for any voltages.
pub fn field_finger_sum(layer: &IdtLayer, x: f64, z: f64, t: f64) -> Result<FieldVector, FieldError> {
    let zl = layer.local_height(z)?;
    let k = layer.wavenumber();
    let lambda = layer.wavelength();
    let decay = layer.coupling * k * (-k * zl).exp() * layer.periods as f64;
    let (mut ex, mut ez) = (0.0, 0.0);
    for (j, v) in layer.voltages.iter().enumerate() {
        let phase = k * (x - j as f64 * lambda / 3.0 - layer.velocity * t);
        ex += v * decay * phase.sin();
        ez += v * decay * phase.cos();
    }
    Ok(FieldVector { ex, ez: layer.side.orientation() * ez })
}

/// Travelling-wave field for amplitude `amplitude` (see
/// [`IdtLayer::drive_amplitude`]).
pub fn field_closed_form(layer: &IdtLayer, amplitude: f64, x: f64, z: f64, t: f64) -> Result<FieldVector, FieldError> {
    let zl = layer.local_height(z)?;
    let k = layer.wavenumber();
    let env = layer.periods as f64 * amplitude * k * (-k * zl).exp();
    let phase = k * (x - 2.0 * layer.wavelength() / 3.0 - layer.velocity * t);
    Ok(FieldVector { ex: env * phase.sin(), ez: layer.side.orientation() * env * phase.cos() })
}

/// Amplitude of the vertical field, `M * amplitude * k * exp(-k z_local)`.
pub fn field_envelope(layer: &IdtLayer, amplitude: f64, z: f64) -> Result<f64, FieldError> {
    let zl = layer.local_height(z)?;
    let k = layer.wavenumber();
    Ok(layer.periods as f64 * amplitude * k * (-k * zl).exp())
}

/// Largest five-point Laplacian of the finger-sum potential over `points`
/// (`(x, z_local)` pairs with `z_local >= h`).
pub fn check_harmonicity(layer: &IdtLayer, points: &[(f64, f64)], h: f64, t: f64) -> f64 {
    points
        .iter()
        .map(|&(x, z)| {
            let phi = |x, z| potential_finger_sum(layer, x, z, t);
            let lap = (phi(x + h, z) + phi(x - h, z) + phi(x, z + h) + phi(x, z - h) - 4.0 * phi(x, z)) / (h * h);
            lap.abs()
        })
        .fold(0.0, f64::max)
}
