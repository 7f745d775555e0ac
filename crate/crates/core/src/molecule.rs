//! Two-level Lambda-doublet molecule coupled to the transducer field.

use nalgebra::Matrix2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

use crate::saw_field::IdtLayer;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MoleculeError {
    #[error("invalid molecule parameter {field}: {reason}")]
    InvalidParameter { field: &'static str, reason: String },
}

/// Conversion factors between the dipole/field product, frequencies and forces.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StarkUnits {
    /// GHz per (debye x V/m).
    pub dipole_field_to_ghz: f64,
    /// Force per (GHz / m).
    pub ghz_per_m_to_force: f64,
}

impl StarkUnits {
    /// SI inputs, frequencies in GHz, forces in amu m/s^2.
    pub const SI: StarkUnits =
        StarkUnits { dipole_field_to_ghz: 5.034_116_567_542_71e-6, ghz_per_m_to_force: 399.031_271_427_239_8 };

    /// Bare numbers: the dipole/field product is already in GHz and the
    /// force is left in GHz/m.
    pub const UNITLESS: StarkUnits = StarkUnits { dipole_field_to_ghz: 1.0, ghz_per_m_to_force: 1.0 };
}

impl Default for StarkUnits {
    fn default() -> Self {
        Self::SI
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Seeker {
    /// Energy rises with field; pushed toward weak field.
    LowField,
    /// Energy falls with field.
    HighField,
}

impl Seeker {
    pub fn sign(self) -> f64 {
        match self {
            Seeker::HighField => 1.0,
            Seeker::LowField => -1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MoleculeSpec {
    pub name: String,
    /// Permanent dipole moment, debye.
    pub dipole: f64,
    /// Zero-field Lambda-doublet splitting, GHz.
    pub doublet: f64,
    /// Rotational constant, GHz.
    pub rotational_constant: f64,
    /// Total angular momentum of the doublet.
    pub j: f64,
    /// Projection on the field axis.
    pub m: i32,
    /// Projection on the molecular axis.
    pub omega: i32,
    pub seeker: Seeker,
    /// Mass in amu.
    pub mass: f64,
    /// Midpoint of the two doublet levels, GHz.
    pub mean_level: f64,
    #[serde(default)]
    pub units: StarkUnits,
}

impl MoleculeSpec {
    pub fn co() -> Self {
        Self {
            name: "CO".into(),
            dipole: 0.167,
            doublet: 0.4,
            rotational_constant: 57.636,
            j: 1.0,
            m: 1,
            omega: 1,
            seeker: Seeker::LowField,
            mass: 28.0,
            mean_level: 0.0,
            units: StarkUnits::SI,
        }
    }

    pub fn oh() -> Self {
        Self {
            name: "OH".into(),
            dipole: 1.67,
            doublet: 1.65,
            rotational_constant: 555.7,
            j: 1.5,
            m: 1,
            omega: 1,
            seeker: Seeker::LowField,
            mass: 17.0,
            mean_level: 0.0,
            units: StarkUnits::SI,
        }
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name.to_ascii_uppercase().as_str() {
            "CO" => Some(Self::co()),
            "OH" => Some(Self::oh()),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<(), MoleculeError> {
        let bad = |field, reason: &str| Err(MoleculeError::InvalidParameter { field, reason: reason.into() });
        if !(self.dipole >= 0.0 && self.dipole.is_finite()) {
            return bad("dipole", "must be non-negative");
        }
        if !(self.j > 0.0 && (2.0 * self.j).fract() == 0.0) {
            return bad("j", "must be a positive integer or half-integer");
        }
        if (self.m.abs() as f64) > self.j {
            return bad("m", "|m| cannot exceed j");
        }
        if (self.omega.abs() as f64) > self.j {
            return bad("omega", "|omega| cannot exceed j");
        }
        if !(self.doublet.is_finite() && self.doublet >= 0.0) {
            return bad("doublet", "must be non-negative");
        }
        if !(self.mass > 0.0) {
            return bad("mass", "must be positive");
        }
        if !(self.units.dipole_field_to_ghz > 0.0 && self.units.ghz_per_m_to_force > 0.0) {
            return bad("units", "conversion factors must be positive");
        }
        Ok(())
    }

    /// The two zero-field levels `(lower, upper)`.
    pub fn levels(&self) -> (f64, f64) {
        (self.mean_level - self.doublet / 2.0, self.mean_level + self.doublet / 2.0)
    }
}

/// Signed dipole projection `sign * |mu| m Omega / (2 J (J + 1))`, debye.
pub fn effective_dipole(spec: &MoleculeSpec) -> f64 {
    spec.seeker.sign() * spec.dipole * (spec.m * spec.omega) as f64 / (2.0 * spec.j * (spec.j + 1.0))
}

/// Doublet splitting seen by a molecule riding with the wave, GHz: the
/// Doppler term `k v` (rad/s) is turned into cycles per nanosecond.
pub fn shifted_splitting(spec: &MoleculeSpec, k: f64, v: f64) -> f64 {
    spec.doublet - k * v / (2.0 * PI * 1e9)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StarkLevels {
    pub upper: f64,
    pub lower: f64,
    /// Branch followed by the molecule relative to the mean level.
    pub trapping: f64,
}

impl StarkLevels {
    pub fn gap(&self) -> f64 {
        self.upper - self.lower
    }
}

/// Dipole coupling `mu_eff * |E|` in GHz.
pub fn dipole_coupling(spec: &MoleculeSpec, field: f64) -> f64 {
    effective_dipole(spec) * field * spec.units.dipole_field_to_ghz
}

/// Field-dressed levels for a field magnitude `field` and splitting `splitting`.
pub fn stark_levels(spec: &MoleculeSpec, field: f64, splitting: f64) -> StarkLevels {
    let half = (splitting / 2.0).hypot(dipole_coupling(spec, field));
    let trapping = match spec.seeker {
        Seeker::LowField => half,
        Seeker::HighField => -half,
    };
    StarkLevels { upper: spec.mean_level + half, lower: spec.mean_level - half, trapping }
}

/// Off-diagonal sign for a layer: -1 below, +1 above.
fn layer_sign(layer: &IdtLayer) -> f64 {
    -layer.side.orientation()
}

/// Two-level Hamiltonian in the frame co-moving with the wave, after
/// dropping the counter-rotating term. `field` is the vertical field
/// amplitude at the molecule's height.
pub fn rotating_frame_hamiltonian(spec: &MoleculeSpec, layer: &IdtLayer, field: f64, x: f64) -> Matrix2<Complex64> {
    let k = layer.wavenumber();
    let splitting = shifted_splitting(spec, k, layer.velocity);
    let g = layer_sign(layer) * dipole_coupling(spec, field);
    let phase = Complex64::from_polar(1.0, -k * (x - 2.0 * layer.wavelength() / 3.0));
    let c = |v: f64| Complex64::new(v, 0.0);
    Matrix2::new(
        c(spec.mean_level + splitting / 2.0),
        g * phase.conj(),
        g * phase,
        c(spec.mean_level - splitting / 2.0),
    )
}

/// Lower-left coupling before the rotating-wave approximation, split into
/// the co-rotating part that is kept and the `exp(-2ikvt)` part that is dropped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingTerms {
    pub exact: Complex64,
    pub kept: Complex64,
    pub dropped: Complex64,
}

pub fn pre_rwa_coupling(spec: &MoleculeSpec, layer: &IdtLayer, field: f64, x: f64, t: f64) -> CouplingTerms {
    let k = layer.wavenumber();
    let v = layer.velocity;
    let shift = 2.0 * layer.wavelength() / 3.0;
    let g = layer_sign(layer) * dipole_coupling(spec, field);
    let ez = -layer_sign(layer) * field * (k * (x - shift - v * t)).cos();
    let exact =
        -2.0 * effective_dipole(spec) * spec.units.dipole_field_to_ghz * ez * Complex64::from_polar(1.0, -k * v * t);
    let kept = g * Complex64::from_polar(1.0, -k * (x - shift));
    let dropped = g * Complex64::from_polar(1.0, k * (x - shift) - 2.0 * k * v * t);
    CouplingTerms { exact, kept, dropped }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::saw_field::LayerSide;
    use approx::assert_relative_eq;

    #[test]
    fn effective_dipole_examples() {
        let oh = MoleculeSpec::oh();
        assert_relative_eq!(effective_dipole(&oh).abs(), 1.67 / 7.5, max_relative = 1e-14);
        assert!((effective_dipole(&oh).abs() - 0.2227).abs() < 5e-5);
        let mut co = MoleculeSpec::co();
        co.seeker = Seeker::HighField;
        assert_relative_eq!(effective_dipole(&co), 0.167 / 4.0, max_relative = 1e-14);
        co.m = 0;
        assert_eq!(effective_dipole(&co), 0.0);
    }

    #[test]
    fn doppler_shift_in_ghz() {
        let co = MoleculeSpec::co();
        let s = shifted_splitting(&co, 50.0, 3000.0);
        assert_relative_eq!(s, 0.4 - 1.5e5 / (2.0 * PI * 1e9), max_relative = 1e-15);
        assert_eq!(shifted_splitting(&co, 50.0, 0.0), 0.4);
    }

    #[test]
    fn zero_field_levels() {
        let co = MoleculeSpec::co();
        let lv = stark_levels(&co, 0.0, co.doublet);
        assert_relative_eq!(lv.gap(), co.doublet, max_relative = 1e-15);
        let (lo, hi) = co.levels();
        assert_relative_eq!(lv.lower, lo);
        assert_relative_eq!(lv.upper, hi);
    }

    #[test]
    fn linear_stark_regime() {
        let mut co = MoleculeSpec::co();
        co.units = StarkUnits::UNITLESS;
        let lv = stark_levels(&co, 1e6, 0.0);
        assert_relative_eq!(lv.gap(), 2.0 * effective_dipole(&co).abs() * 1e6, max_relative = 1e-14);
    }

    #[test]
    fn validation_catches_bad_projection() {
        let mut s = MoleculeSpec::co();
        s.m = 2;
        assert!(s.validate().is_err());
        s = MoleculeSpec::oh();
        s.j = 1.2;
        assert!(s.validate().is_err());
        assert!(MoleculeSpec::oh().validate().is_ok());
    }

    #[test]
    fn hamiltonian_is_hermitian_and_matches_levels() {
        let mut layer = IdtLayer::with_wavenumber(50.0, 0.02, LayerSide::Upper);
        layer.velocity = 3000.0;
        let mut co = MoleculeSpec::co();
        co.mean_level = 3.0;
        let field = 2.0e4;
        let h = rotating_frame_hamiltonian(&co, &layer, field, 0.017);
        assert_eq!(h[(0, 1)], h[(1, 0)].conj());
        let eig = h.symmetric_eigenvalues();
        let (lo, hi) = if eig[0] < eig[1] { (eig[0], eig[1]) } else { (eig[1], eig[0]) };
        let lv = stark_levels(&co, field, shifted_splitting(&co, 50.0, 3000.0));
        assert!((lo - lv.lower).abs() < 1e-12);
        assert!((hi - lv.upper).abs() < 1e-12);
    }

    #[test]
    fn rwa_split_adds_up() {
        let mut layer = IdtLayer::with_wavenumber(50.0, 0.02, LayerSide::Lower);
        layer.velocity = 3000.0;
        let co = MoleculeSpec::co();
        for &(x, t) in &[(0.0, 0.0), (0.013, 1e-5), (-0.2, 7e-4)] {
            let c = pre_rwa_coupling(&co, &layer, 5e4, x, t);
            assert!((c.exact - (c.kept + c.dropped)).norm() < 1e-14 * c.kept.norm().max(1e-300));
        }
        let k = layer.wavenumber();
        let half_turn = PI / (2.0 * k * layer.velocity);
        let a = pre_rwa_coupling(&co, &layer, 5e4, 0.01, 0.0);
        let b = pre_rwa_coupling(&co, &layer, 5e4, 0.01, half_turn);
        assert!((a.kept - b.kept).norm() < 1e-15);
        assert!((a.dropped + b.dropped).norm() < 1e-12 * a.dropped.norm());
    }
}
