//! Elastic and piezoelectric surface-wave relations: strain and stress,
//! the secular matrix whose determinant fixes the decay constants, and the
//! potential radiated above the surface.

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::SQRT_2;
use thiserror::Error;

use crate::numerics::{cubic_roots, NumericsError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AcousticsError {
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error("strain tensor is not symmetric (asymmetry {asymmetry:e})")]
    NonSymmetricStrain { asymmetry: f64 },
    #[error("invalid medium parameter {field}: {reason}")]
    InvalidParameter { field: &'static str, reason: String },
}

/// Isotropic elastic solid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ElasticMedium {
    /// First Lame constant.
    pub lame: f64,
    /// Shear modulus.
    pub shear: f64,
    pub density: f64,
}

impl ElasticMedium {
    pub fn validate(&self) -> Result<(), AcousticsError> {
        let bad = |field, reason: &str| Err(AcousticsError::InvalidParameter { field, reason: reason.into() });
        if !(self.shear > 0.0 && self.shear.is_finite()) {
            return bad("shear", "must be positive");
        }
        if !(self.density > 0.0 && self.density.is_finite()) {
            return bad("density", "must be positive");
        }
        if !(self.lame.is_finite() && self.lame + 2.0 * self.shear > 0.0) {
            return bad("lame", "longitudinal modulus must be positive");
        }
        Ok(())
    }

    pub fn shear_velocity(&self) -> f64 {
        (self.shear / self.density).sqrt()
    }

    pub fn longitudinal_velocity(&self) -> f64 {
        ((self.lame + 2.0 * self.shear) / self.density).sqrt()
    }
}

/// In-plane propagation direction (angle from x), phase velocity and wavenumber.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Propagation {
    pub angle: f64,
    pub velocity: f64,
    pub wavenumber: f64,
}

impl Propagation {
    fn direction(&self) -> (f64, f64) {
        (self.angle.cos(), self.angle.sin())
    }
}

/// Symmetric part of a displacement gradient.
pub fn strain_tensor(gradient: &Matrix3<f64>) -> Matrix3<f64> {
    (gradient + gradient.transpose()) * 0.5
}

/// Hooke's law for an isotropic solid.
pub fn isotropic_stress(medium: &ElasticMedium, strain: &Matrix3<f64>) -> Result<Matrix3<f64>, AcousticsError> {
    let asymmetry = (strain - strain.transpose()).abs().max();
    if asymmetry > 1e-12 * strain.abs().max().max(f64::MIN_POSITIVE) {
        return Err(AcousticsError::NonSymmetricStrain { asymmetry });
    }
    Ok(Matrix3::identity() * (medium.lame * strain.trace()) + strain * (2.0 * medium.shear))
}

/// Matrix acting on the amplitudes `(U, V, iW)` of a wave decaying as
/// `exp(-k q z)` below the surface.
pub fn secular_matrix(medium: &ElasticMedium, prop: &Propagation, q: Complex64) -> Matrix3<Complex64> {
    let (l, m) = prop.direction();
    let a = medium.lame + 2.0 * medium.shear;
    let b = medium.lame + medium.shear;
    let mu = medium.shear;
    let rv2 = medium.density * prop.velocity * prop.velocity;
    let q2 = q * q;
    let p11 = a * l * l - rv2 + mu * (m * m - q2);
    let p22 = a * m * m - rv2 + mu * (l * l - q2);
    let p33 = a * q2 + rv2 - mu * (l * l + m * m);
    let p12 = Complex64::new(b * l * m, 0.0);
    let p13 = b * l * q;
    let p23 = b * m * q;
    Matrix3::new(p11, p12, p13, p12, p22, p23, p13, p23, p33)
}

pub fn secular_determinant(medium: &ElasticMedium, prop: &Propagation, q: Complex64) -> Complex64 {
    secular_matrix(medium, prop, q).determinant()
}

/// Coefficients `[c3, c2, c1, c0]` of the determinant as a cubic in `q^2`.
pub fn secular_cubic(medium: &ElasticMedium, prop: &Propagation) -> [f64; 4] {
    let (l, m) = prop.direction();
    let (l2, m2) = (l * l, m * m);
    let a = medium.lame + 2.0 * medium.shear;
    let b = medium.lame + medium.shear;
    let mu = medium.shear;
    let rv2 = medium.density * prop.velocity * prop.velocity;
    let a1 = a * l2 - rv2 + mu * m2;
    let a2 = a * m2 - rv2 + mu * l2;
    let c3 = rv2 - mu * (l2 + m2);
    let b2 = b * b;
    [
        a * mu * mu,
        -a * mu * (a1 + a2) + mu * mu * c3 + b2 * mu * (l2 + m2),
        a * a1 * a2 - mu * (a1 + a2) * c3 + 2.0 * b2 * b * l2 * m2 - b2 * (m2 * a1 + l2 * a2) - a * b2 * l2 * m2,
        c3 * (a1 * a2 - b2 * l2 * m2),
    ]
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayConstants {
    /// Roots in `q^2`.
    pub q_squared: Vec<Complex64>,
    /// Principal square roots, so `Re(q) >= 0`.
    pub q: Vec<Complex64>,
    /// |det P(q)| at each root.
    pub residuals: Vec<f64>,
    /// Two of the `q^2` roots coincide to within 1e-6 (relative).
    pub repeated: bool,
}

pub fn solve_decay_constants(medium: &ElasticMedium, prop: &Propagation) -> Result<DecayConstants, AcousticsError> {
    medium.validate()?;
    let [c3, c2, c1, c0] = secular_cubic(medium, prop);
    let roots = cubic_roots(c3, c2, c1, c0)?;
    let q_squared = roots.roots;
    let q: Vec<Complex64> = q_squared.iter().map(|r| r.sqrt()).collect();
    let residuals = q.iter().map(|&qi| secular_determinant(medium, prop, qi).norm()).collect();
    let mut repeated = false;
    for i in 0..q_squared.len() {
        for j in (i + 1)..q_squared.len() {
            let scale = q_squared[i].norm().max(q_squared[j].norm()).max(1.0);
            if (q_squared[i] - q_squared[j]).norm() <= 1e-6 * scale {
                repeated = true;
            }
        }
    }
    Ok(DecayConstants { q_squared, q, residuals, repeated })
}

/// Potential above the surface for a wave running along the (1, 1) diagonal.
pub fn free_space_potential(amplitude: f64, k: f64, v: f64, x: f64, y: f64, z: f64, t: f64) -> f64 {
    amplitude * (-k * z).exp() * (k * (x + y) / SQRT_2 - v * k * t).cos()
}

/// Cubic piezoelectric crystal (e.g. GaAs).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PiezoCubicMedium {
    pub c11: f64,
    pub c12: f64,
    pub c44: f64,
    pub e14: f64,
    pub permittivity: f64,
    pub vacuum_permittivity: f64,
    pub density: f64,
}

impl PiezoCubicMedium {
    /// Cubic constants equivalent to an isotropic solid, with no piezo coupling.
    pub fn from_isotropic(m: &ElasticMedium) -> Self {
        Self {
            c11: m.lame + 2.0 * m.shear,
            c12: m.lame,
            c44: m.shear,
            e14: 0.0,
            permittivity: 1.0,
            vacuum_permittivity: 1.0,
            density: m.density,
        }
    }
}

/// Displacements `(U, V, W)` and potential `Phi` multiplying
/// `exp(i k (l x + m y) - k q z - i k v t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaneWave {
    pub direction: (f64, f64),
    pub decay: Complex64,
    pub wavenumber: f64,
    pub velocity: f64,
    pub displacement: Vector3<Complex64>,
    pub potential: Complex64,
}

impl PlaneWave {
    fn grad(&self) -> [Complex64; 3] {
        let k = self.wavenumber;
        let (l, m) = self.direction;
        [Complex64::new(0.0, k * l), Complex64::new(0.0, k * m), -k * self.decay]
    }
}

/// Residuals of the three equations of motion and of the Poisson equation.
pub fn piezo_bulk_residuals(medium: &PiezoCubicMedium, w: &PlaneWave) -> [Complex64; 4] {
    let [dx, dy, dz] = w.grad();
    let dt2 = -(w.wavenumber * w.velocity).powi(2);
    let [ux, uy, uz] = [w.displacement[0], w.displacement[1], w.displacement[2]];
    let phi = w.potential;
    let (c11, c44, c1244, e) = (medium.c11, medium.c44, medium.c12 + medium.c44, medium.e14);
    let rho = medium.density;
    let rx = rho * dt2 * ux
        - (c11 * dx * dx * ux
            + c44 * (dy * dy + dz * dz) * ux
            + c1244 * (dx * dy * uy + dx * dz * uz)
            + 2.0 * e * dy * dz * phi);
    let ry = rho * dt2 * uy
        - (c11 * dy * dy * uy
            + c44 * (dx * dx + dz * dz) * uy
            + c1244 * (dy * dx * ux + dy * dz * uz)
            + 2.0 * e * dx * dz * phi);
    let rz = rho * dt2 * uz
        - (c11 * dz * dz * uz
            + c44 * (dx * dx + dy * dy) * uz
            + c1244 * (dz * dx * ux + dz * dy * uy)
            + 2.0 * e * dx * dy * phi);
    let rp = medium.permittivity * (dx * dx + dy * dy + dz * dz) * phi
        - 2.0 * e * (dy * dz * ux + dx * dz * uy + dx * dy * uz);
    [rx, ry, rz, rp]
}

/// Traction-free and electrical boundary residuals at the surface:
/// `[T13, T23, T33, electric]`.
pub fn piezo_boundary_residuals(medium: &PiezoCubicMedium, w: &PlaneWave) -> [Complex64; 4] {
    let [dx, dy, dz] = w.grad();
    let [ux, uy, uz] = [w.displacement[0], w.displacement[1], w.displacement[2]];
    let phi = w.potential;
    let e = medium.e14;
    [
        medium.c44 * (dx * uz + dz * ux) + e * dy * phi,
        medium.c44 * (dy * uz + dz * uy) + e * dx * phi,
        medium.c11 * dz * uz + medium.c12 * (dx * ux + dy * uy),
        e * (dy * ux + dx * uy) - medium.permittivity * dz * phi + medium.vacuum_permittivity * w.wavenumber * phi,
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn medium() -> ElasticMedium {
        ElasticMedium { lame: 2.0, shear: 1.0, density: 1.0 }
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn stress_of_pure_shear_and_dilation() {
        let mut g = Matrix3::zeros();
        g[(0, 1)] = 0.02;
        let s = strain_tensor(&g);
        assert_eq!(s[(0, 1)], 0.01);
        let t = isotropic_stress(&medium(), &s).unwrap();
        assert_relative_eq!(t[(0, 1)], 0.02, max_relative = 1e-15);
        assert_eq!(t.trace(), 0.0);
        let d = Matrix3::identity() * 0.001;
        let t = isotropic_stress(&medium(), &d).unwrap();
        assert_relative_eq!(t[(2, 2)], 2.0 * 0.003 + 2.0 * 0.001, max_relative = 1e-14);
        assert!(isotropic_stress(&medium(), &g).is_err());
    }

    #[test]
    fn cubic_coefficients_reproduce_determinant() {
        let m = ElasticMedium { lame: 1.3, shear: 0.7, density: 2.1 };
        let p = Propagation { angle: 0.37, velocity: 0.45, wavenumber: 1.0 };
        let coeffs = secular_cubic(&m, &p);
        for q in [c(0.0, 0.0), c(0.3, 0.0), c(1.7, -0.4), c(-0.2, 2.5)] {
            let qq = q * q;
            let poly = ((coeffs[0] * qq + coeffs[1]) * qq + coeffs[2]) * qq + coeffs[3];
            let det = secular_determinant(&m, &p, q);
            assert!((poly - det).norm() < 1e-12 * (1.0 + det.norm()), "{poly} vs {det}");
        }
        assert_relative_eq!(coeffs[0], (1.3 + 1.4) * 0.49, max_relative = 1e-15);
    }

    #[test]
    fn subsonic_roots_decay() {
        let p = Propagation { angle: 0.0, velocity: 0.9, wavenumber: 1.0 };
        let d = solve_decay_constants(&medium(), &p).unwrap();
        assert!(d.q.iter().all(|q| q.re > 0.0));
        assert!(d.repeated);
        let mut got: Vec<f64> = d.q_squared.iter().map(|q| q.re).collect();
        got.sort_by(f64::total_cmp);
        assert!((got[0] - 0.19).abs() < 1e-7 && (got[1] - 0.19).abs() < 1e-7);
        assert_relative_eq!(got[2], 1.0 - 0.81 / 4.0, max_relative = 1e-12);
        assert!(d.residuals.iter().all(|r| *r < 1e-10));
    }

    #[test]
    fn potential_is_harmonic_and_periodic() {
        let (b, k, v) = (0.3, 2.0, 1.5);
        let f = |x, y, z| free_space_potential(b, k, v, x, y, z, 0.2);
        let (x, y, z, h) = (0.4, -0.3, 0.7, 1e-3);
        let lap = (f(x + h, y, z) + f(x - h, y, z) + f(x, y + h, z) + f(x, y - h, z) + f(x, y, z + h) + f(x, y, z - h)
            - 6.0 * f(x, y, z))
            / (h * h);
        assert!(lap.abs() < 1e-6);
        let shift = SQRT_2 * 2.0 * std::f64::consts::PI / k;
        assert!((f(x + shift, y, z) - f(x, y, z)).abs() < 1e-12);
    }

    #[test]
    fn isotropic_limit_of_piezo_residuals() {
        let iso = ElasticMedium { lame: 1.1, shear: 0.6, density: 1.4 };
        let piezo = PiezoCubicMedium::from_isotropic(&iso);
        let angle: f64 = 0.6;
        let wave = PlaneWave {
            direction: (angle.cos(), angle.sin()),
            decay: c(0.8, 0.1),
            wavenumber: 1.9,
            velocity: 0.5,
            displacement: Vector3::new(c(0.3, 0.2), c(-0.1, 0.4), c(0.25, -0.05)),
            potential: c(0.0, 0.0),
        };
        let prop = Propagation { angle, velocity: 0.5, wavenumber: 1.9 };
        let p = secular_matrix(&iso, &prop, wave.decay);
        let amps = Vector3::new(wave.displacement[0], wave.displacement[1], Complex64::i() * wave.displacement[2]);
        let pa = p * amps;
        let k2 = 1.9 * 1.9;
        let r = piezo_bulk_residuals(&piezo, &wave);
        assert!((r[0] - pa[0] * k2).norm() < 1e-12);
        assert!((r[1] - pa[1] * k2).norm() < 1e-12);
        assert!((r[2] - Complex64::i() * pa[2] * k2).norm() < 1e-12);
        assert_eq!(r[3], c(0.0, 0.0));
    }

    #[test]
    fn piezo_boundary_of_static_potential() {
        // With no displacement only the electric condition survives:
        // (eps k q + eps0 k) Phi.
        let m = PiezoCubicMedium {
            c11: 11.9,
            c12: 5.4,
            c44: 5.9,
            e14: -0.16,
            permittivity: 12.9,
            vacuum_permittivity: 1.0,
            density: 5.3,
        };
        let w = PlaneWave {
            direction: (1.0 / SQRT_2, 1.0 / SQRT_2),
            decay: c(1.0, 0.0),
            wavenumber: 2.0,
            velocity: 0.0,
            displacement: Vector3::zeros(),
            potential: c(1.0, 0.0),
        };
        let r = piezo_boundary_residuals(&m, &w);
        let dphi = Complex64::new(0.0, 2.0 / SQRT_2);
        assert!((r[0] - m.e14 * dphi).norm() < 1e-14);
        assert!((r[2]).norm() == 0.0);
        assert_relative_eq!(r[3].re, 12.9 * 2.0 + 2.0, max_relative = 1e-14);
    }
}
