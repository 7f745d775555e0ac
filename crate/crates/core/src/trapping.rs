//! Forces on a molecule above one or two transducers, trap heights and
//! their stability.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::molecule::{dipole_coupling, shifted_splitting, MoleculeSpec};
use crate::numerics::{find_roots_bracketed, NumericsError, RootOptions};
use crate::saw_field::{field_envelope, FieldError, IdtLayer};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TrapError {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error("invalid trap parameter {field}: {reason}")]
    InvalidParameter { field: &'static str, reason: String },
    #[error("height {z} outside the tabulated range [{lo}, {hi}]")]
    OutsideTable { z: f64, lo: f64, hi: f64 },
    #[error("stencil step {h} is too small for the potential's scale; use a larger step")]
    CatastrophicCancellation { h: f64 },
}

/// Force exerted by one transducer. Positive `fz` points up.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SawForce {
    pub fx: f64,
    pub fz: f64,
    /// Zero splitting in zero field: the force formula is 0/0 and `fz` is set to 0.
    pub degenerate: bool,
}

/// Time-averaged force from `layer` at absolute height `z`. It always points
/// away from the layer's face; the horizontal component averages out.
pub fn saw_force(layer: &IdtLayer, spec: &MoleculeSpec, z: f64) -> Result<SawForce, TrapError> {
    let k = layer.wavenumber();
    let field = field_envelope(layer, layer.drive_amplitude(), z)?.abs();
    let coupling = dipole_coupling(spec, field);
    let splitting = shifted_splitting(spec, k, layer.velocity);
    let denom = (splitting / 2.0).hypot(coupling);
    if denom == 0.0 {
        return Ok(SawForce { fx: 0.0, fz: 0.0, degenerate: true });
    }
    let magnitude = spec.units.ghz_per_m_to_force * coupling * coupling * k / denom;
    Ok(SawForce { fx: 0.0, fz: layer.side.orientation() * magnitude, degenerate: false })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Stability {
    Stable,
    Unstable,
    Marginal,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrapEquilibrium {
    pub z: f64,
    pub stability: Stability,
    /// Net vertical force left at `z`.
    pub residual_force: f64,
}

/// Which edge of the admissible amplitude-ratio band was crossed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BandEdge {
    /// ratio <= exp(-k D)
    Lower,
    /// ratio >= exp(k D)
    Upper,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TwoLayerTrap {
    Trap(TrapEquilibrium),
    NoTrap { violated: BandEdge, ratio: f64, limit: f64 },
}

/// Height where the forces of two facing transducers with drive amplitudes
/// `u1` (bottom) and `u2` (top) cancel.
pub fn two_layer_equilibrium(u1: f64, u2: f64, k: f64, gap: f64) -> Result<TwoLayerTrap, TrapError> {
    if !(k > 0.0 && k.is_finite()) {
        return Err(TrapError::InvalidParameter { field: "k", reason: "must be positive".into() });
    }
    if !(gap > 0.0 && gap.is_finite()) {
        return Err(TrapError::InvalidParameter { field: "D", reason: "must be positive".into() });
    }
    if !(u1.is_finite() && u2.is_finite()) || u1 == 0.0 || u2 == 0.0 {
        return Err(TrapError::InvalidParameter {
            field: "amplitude",
            reason: "both drive amplitudes must be finite and non-zero".into(),
        });
    }
    let (a1, a2) = (u1.abs(), u2.abs());
    let ratio = a1 / a2;
    let log_ratio = a1.ln() - a2.ln();
    let kd = k * gap;
    if log_ratio <= -kd {
        return Ok(TwoLayerTrap::NoTrap { violated: BandEdge::Lower, ratio, limit: (-kd).exp() });
    }
    if log_ratio >= kd {
        return Ok(TwoLayerTrap::NoTrap { violated: BandEdge::Upper, ratio, limit: kd.exp() });
    }
    let z = gap / 2.0 + log_ratio / (2.0 * k);
    let residual = k.powi(3) * (a1 * a1 * (-2.0 * k * z).exp() - a2 * a2 * (-2.0 * k * (gap - z)).exp());
    Ok(TwoLayerTrap::Trap(TrapEquilibrium { z, stability: Stability::Stable, residual_force: residual }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Envelope {
    /// 1 + sin(pi z / period)
    Sine,
    /// 1 + cos(pi z / period)
    Cosine,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProfileShape {
    /// amplitude * z^exponent
    PowerLaw { amplitude: f64, exponent: f64 },
    /// amplitude * sin(wavenumber z)
    Sinusoidal { amplitude: f64, wavenumber: f64 },
    /// Polynomial (highest power first) times a periodic envelope.
    Polynomial { coefficients: Vec<f64>, envelope: Envelope, period: f64 },
    /// Linear interpolation of sampled values.
    Tabulated { z: Vec<f64>, field: Vec<f64> },
}

/// Field magnitude imposed by an external source as a function of height.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExternalFieldProfile {
    #[serde(flatten)]
    pub shape: ProfileShape,
    /// Keeps the force finite where the field vanishes.
    pub regularizer: f64,
    /// Overall scale applied to the resulting force.
    #[serde(default = "unit_gain")]
    pub gain: f64,
}

fn unit_gain() -> f64 {
    1.0
}

impl ExternalFieldProfile {
    pub fn new(shape: ProfileShape) -> Self {
        Self { shape, regularizer: 0.01, gain: 1.0 }
    }

    pub fn validate(&self) -> Result<(), TrapError> {
        let bad = |field, reason: &str| Err(TrapError::InvalidParameter { field, reason: reason.into() });
        if !(self.regularizer > 0.0 && self.regularizer.is_finite()) {
            return bad("profile.regularizer", "must be positive");
        }
        if !self.gain.is_finite() {
            return bad("profile.gain", "must be finite");
        }
        match &self.shape {
            ProfileShape::Polynomial { coefficients, period, .. } => {
                if coefficients.is_empty() {
                    return bad("profile.coefficients", "need at least one coefficient");
                }
                if !(*period > 0.0) {
                    return bad("profile.period", "must be positive");
                }
            }
            ProfileShape::Tabulated { z, field } => {
                if z.len() < 3 || z.len() != field.len() {
                    return bad("profile.z", "need at least three (z, field) pairs of equal length");
                }
                if z.windows(2).any(|w| !(w[1] > w[0])) {
                    return bad("profile.z", "heights must be strictly increasing");
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// `(E, E * dE/dz)` at height `z`.
    fn field_and_product(&self, z: f64) -> Result<(f64, f64), TrapError> {
        Ok(match &self.shape {
            ProfileShape::PowerLaw { amplitude, exponent } => {
                let e = amplitude * z.powf(*exponent);
                let prod = if *exponent == 0.0 {
                    0.0
                } else {
                    exponent * amplitude * amplitude * z.powf(2.0 * exponent - 1.0)
                };
                (e, prod)
            }
            ProfileShape::Sinusoidal { amplitude, wavenumber } => {
                let (s, c) = (wavenumber * z).sin_cos();
                (amplitude * s, wavenumber * amplitude * amplitude * s * c)
            }
            ProfileShape::Polynomial { coefficients, envelope, period } => {
                let (p, dp) = coefficients.iter().fold((0.0, 0.0), |(p, dp), &c| (p * z + c, dp * z + p));
                let w = std::f64::consts::PI / period;
                let (env, denv) = match envelope {
                    Envelope::Sine => (1.0 + (w * z).sin(), w * (w * z).cos()),
                    Envelope::Cosine => (1.0 + (w * z).cos(), -w * (w * z).sin()),
                };
                let e = p * env;
                (e, e * (dp * env + p * denv))
            }
            ProfileShape::Tabulated { z: zs, field } => {
                let (lo, hi) = (zs[0], zs[zs.len() - 1]);
                if !(lo..=hi).contains(&z) {
                    return Err(TrapError::OutsideTable { z, lo, hi });
                }
                let i = match zs.partition_point(|&v| v <= z) {
                    0 => 0,
                    p if p >= zs.len() => zs.len() - 2,
                    p => p - 1,
                };
                let slope = |j: usize| {
                    let (a, b) = if j == 0 {
                        (0, 1)
                    } else if j == zs.len() - 1 {
                        (j - 1, j)
                    } else {
                        (j - 1, j + 1)
                    };
                    (field[b] - field[a]) / (zs[b] - zs[a])
                };
                let s = (z - zs[i]) / (zs[i + 1] - zs[i]);
                let e = field[i] + s * (field[i + 1] - field[i]);
                let de = slope(i) + s * (slope(i + 1) - slope(i));
                (e, e * de)
            }
        })
    }

    /// Field magnitude at height `z`.
    pub fn field(&self, z: f64) -> Result<f64, TrapError> {
        Ok(self.field_and_product(z)?.0)
    }
}

/// Magnitude of the force from an external profile. It is applied toward the
/// transducer whose repulsion it balances.
pub fn external_force(profile: &ExternalFieldProfile, spec: &MoleculeSpec, z: f64) -> Result<f64, TrapError> {
    let (e, prod) = profile.field_and_product(z)?;
    let mu = dipole_coupling(spec, 1.0).abs();
    Ok(profile.gain * spec.units.ghz_per_m_to_force * mu * prod.abs() / (e.abs() + profile.regularizer))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrapScan {
    pub z_min: f64,
    pub z_max: f64,
    pub scan_points: usize,
    /// Root tolerance relative to the largest force seen on the scan grid.
    pub rel_tol: f64,
}

impl TrapScan {
    pub fn whole_gap(layer: &IdtLayer) -> Self {
        Self { z_min: 0.0, z_max: layer.gap, scan_points: 2000, rel_tol: 1e-11 }
    }
}

/// Net upward force when the external profile presses the molecule toward `layer`.
pub fn net_force(
    profile: &ExternalFieldProfile,
    layer: &IdtLayer,
    spec: &MoleculeSpec,
    z: f64,
) -> Result<f64, TrapError> {
    let saw = saw_force(layer, spec, z)?.fz;
    let ext = external_force(profile, spec, z)?;
    Ok(saw - layer.side.orientation() * ext)
}

/// Heights in the scan window where the transducer and external forces balance.
pub fn find_trap_layers(
    profile: &ExternalFieldProfile,
    layer: &IdtLayer,
    spec: &MoleculeSpec,
    scan: &TrapScan,
) -> Result<Vec<TrapEquilibrium>, TrapError> {
    profile.validate()?;
    layer.validate()?;
    if !(0.0 <= scan.z_min && scan.z_min < scan.z_max && scan.z_max <= layer.gap) {
        return Err(TrapError::InvalidParameter {
            field: "scan",
            reason: format!("window [{}, {}] must lie inside [0, {}]", scan.z_min, scan.z_max, layer.gap),
        });
    }
    let net = |z: f64| net_force(profile, layer, spec, z).unwrap_or(f64::NAN);
    let n = scan.scan_points.max(2);
    let scale = (0..n)
        .map(|i| net(scan.z_min + (scan.z_max - scan.z_min) * i as f64 / (n - 1) as f64).abs())
        .filter(|v| v.is_finite())
        .fold(0.0, f64::max);
    let opts = RootOptions { scan_points: n, tol: scan.rel_tol * scale };
    let roots = find_roots_bracketed(net, scan.z_min, scan.z_max, &opts)?;

    let delta = 1e-4 * layer.gap;
    let mut out = Vec::with_capacity(roots.len());
    for (&z, &r) in roots.roots.iter().zip(&roots.residuals) {
        let below = net((z - delta).max(0.0));
        let above = net((z + delta).min(layer.gap));
        let stability = if below > 0.0 && above < 0.0 {
            Stability::Stable
        } else if below < 0.0 && above > 0.0 {
            Stability::Unstable
        } else {
            Stability::Marginal
        };
        out.push(TrapEquilibrium { z, stability, residual_force: r });
    }
    Ok(out)
}

/// Divergence of the trapping force for an arbitrary electrostatic
/// potential `phi(x, z)`, from central differences with step `h`.
/// Negative values mean the force field converges on the point.
pub fn force_divergence<P>(phi: P, spec: &MoleculeSpec, x: f64, z: f64, h: f64) -> Result<f64, TrapError>
where
    P: Fn(f64, f64) -> f64,
{
    if !(h > 0.0 && h.is_finite()) {
        return Err(TrapError::InvalidParameter { field: "h", reason: "must be positive".into() });
    }
    let mut s = [[0.0; 3]; 3];
    for (i, row) in s.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = phi(x + (i as f64 - 1.0) * h, z + (j as f64 - 1.0) * h);
        }
    }
    let c = s[1][1];
    if s.iter().flatten().all(|v| *v == c) {
        return Ok(0.0);
    }
    let h2 = h * h;
    let pxx = (s[2][1] - 2.0 * c + s[0][1]) / h2;
    let pzz = (s[1][2] - 2.0 * c + s[1][0]) / h2;
    let pxz = (s[2][2] - s[2][0] - s[0][2] + s[0][0]) / (4.0 * h2);
    let peak = s.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    let noise = 4.0 * f64::EPSILON * peak / h2;
    if pxx.abs().max(pzz.abs()).max(pxz.abs()) <= 1e3 * noise {
        return Err(TrapError::CatastrophicCancellation { h });
    }
    let px = (s[2][1] - s[0][1]) / (2.0 * h);
    let pz = (s[1][2] - s[1][0]) / (2.0 * h);
    let mu = dipole_coupling(spec, 1.0);
    let denom = (spec.doublet / 2.0).hypot(mu * px.hypot(pz));
    let sum = pxx * pxx + pzz * pzz + 2.0 * pxz * pxz;
    Ok(-spec.units.ghz_per_m_to_force * mu * mu * sum / denom)
}
