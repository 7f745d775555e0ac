//! Bose-Hubbard parameters for molecules held in the transducer potential,
//! and the Mott/superfluid classification built on them.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

use crate::numerics::{quadrature, NumericsError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HubbardError {
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error("invalid Hubbard parameter {field}: {reason}")]
    InvalidParameter { field: &'static str, reason: String },
}

/// Geometry of one lattice of trapped molecules above a transducer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeGeometry {
    /// Number of sites across the aperture.
    pub sites: u32,
    /// Aperture width; the site spacing is `width / sites`.
    pub width: f64,
    /// Height above the transducer.
    pub height: f64,
    pub wavenumber: f64,
    /// Trapping-potential amplitude at the surface, in the units of U.
    pub potential_scale: f64,
    pub mass: f64,
    /// Length unit of the Gaussian Wannier function `exp(-x^2 / 2)`.
    #[serde(default = "default_wannier_length")]
    pub wannier_length: f64,
}

fn default_wannier_length() -> f64 {
    1e-3
}

impl LatticeGeometry {
    pub fn new(sites: u32, height: f64) -> Self {
        Self {
            sites,
            width: 0.005,
            height,
            wavenumber: 50.0,
            potential_scale: 100.0,
            mass: 0.1,
            wannier_length: default_wannier_length(),
        }
    }

    pub fn spacing(&self) -> f64 {
        self.width / self.sites as f64
    }

    /// Site spacing in Wannier lengths.
    pub fn reduced_spacing(&self) -> f64 {
        self.spacing() / self.wannier_length
    }

    pub fn validate(&self) -> Result<(), HubbardError> {
        let bad = |field, reason: &str| Err(HubbardError::InvalidParameter { field, reason: reason.into() });
        if self.sites == 0 {
            return bad("sites", "need at least one site");
        }
        for (field, v) in [("width", self.width), ("mass", self.mass), ("wannier_length", self.wannier_length)] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(field, "must be positive");
            }
        }
        if !(self.height >= 0.0 && self.height.is_finite()) {
            return bad("height", "must be non-negative");
        }
        if !(self.wavenumber.is_finite() && self.potential_scale.is_finite()) {
            return bad("wavenumber", "must be finite");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct HubbardOptions {
    /// Include the kinetic overlap in the hopping.
    #[serde(default)]
    pub kinetic: bool,
    /// Thermal suppression exponent, in units of U; `None` for zero temperature.
    #[serde(default)]
    pub thermal: Option<f64>,
}

/// Nearest-neighbour hopping.
pub fn hopping(geom: &LatticeGeometry, delta_j: f64, opts: &HubbardOptions) -> f64 {
    let d = geom.reduced_spacing();
    let gauss = (-d * d).exp();
    let mut j = d * (geom.potential_scale * (-geom.wavenumber * geom.height).exp() + delta_j) * gauss;
    if opts.kinetic {
        j += d * (1.0 - d * d) / (2.0 * geom.mass) * gauss;
    }
    j
}

/// Hopping reduced by thermal population of excited bands.
pub fn thermal_hopping(j: f64, exponent_in_u: f64) -> f64 {
    j * (-exponent_in_u).exp()
}

/// On-site interaction `(4 pi / m0) * integral exp(-2 x^2) dx`, by quadrature.
pub fn onsite_interaction(mass: f64) -> Result<f64, HubbardError> {
    if !(mass > 0.0 && mass.is_finite()) {
        return Err(HubbardError::InvalidParameter { field: "mass", reason: "must be positive".into() });
    }
    let q = quadrature(|x| (-2.0 * x * x).exp(), -12.0, 12.0, 1e-15)?;
    Ok(4.0 * PI / mass * q.value)
}

/// On-site energy offset.
pub fn onsite_energy(geom: &LatticeGeometry, delta_eps: f64) -> f64 {
    (geom.potential_scale + delta_eps) * (-geom.wavenumber * geom.height).exp()
}

/// Hopping between sites `a` and `b` from the overlap integral of Gaussian
/// Wannier functions under the kinetic operator and the travelling-wave
/// potential, with the wave phase `phase` at the origin.
pub fn wannier_hopping(geom: &LatticeGeometry, a: i64, b: i64, phase: f64) -> Result<f64, HubbardError> {
    let d = geom.reduced_spacing();
    let (ua, ub) = (a as f64 * d, b as f64 * d);
    let q = geom.wavenumber * geom.wannier_length;
    let amp = geom.potential_scale * (-geom.wavenumber * geom.height).exp();
    let m = geom.mass;
    let integrand = |u: f64| {
        let wa = (-(u - ua).powi(2) / 2.0).exp();
        let wb = (-(u - ub).powi(2) / 2.0).exp();
        let wb2 = ((u - ub).powi(2) - 1.0) * wb;
        wa * (-wb2 / (2.0 * m) + amp * (q * u - phase).cos() * wb)
    };
    let c = 0.5 * (ua + ub);
    Ok(quadrature(integrand, c - 14.0, c + 14.0, 1e-13 * (1.0 + amp.abs() + 1.0 / m))?.value)
}

/// Largest J/U inside the Mott lobe with filling `n0`.
pub fn critical_ratio(n0: u32) -> f64 {
    let n = n0 as f64;
    // n + 1/2 - sqrt(n (n + 1)), rationalized
    0.25 / (n + 0.5 + (n * (n + 1.0)).sqrt())
}

/// Discriminant of the lobe boundary at hopping ratio `x = J/U`.
pub fn boundary_discriminant(x: f64, n0: u32) -> f64 {
    x * x - (2.0 * n0 as f64 + 1.0) * x + 0.25
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LobeBoundary {
    /// Lower and upper edges of the lobe in eps/U.
    Branches {
        lower: f64,
        upper: f64,
    },
    NoBoundary,
}

pub fn phase_boundary(j_over_u: f64, n0: u32) -> LobeBoundary {
    let disc = boundary_discriminant(j_over_u, n0);
    if disc < 0.0 {
        return LobeBoundary::NoBoundary;
    }
    let mid = n0 as f64 - 0.5 - j_over_u;
    let r = disc.sqrt();
    LobeBoundary::Branches { lower: mid - r, upper: mid + r }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    Mott,
    Superfluid,
}

impl Phase {
    pub fn label(self) -> &'static str {
        match self {
            Phase::Mott => "mott",
            Phase::Superfluid => "superfluid",
        }
    }
}

/// Mott unless J/U strictly exceeds the critical ratio.
pub fn classify_ratio(j_over_u: f64, n0: u32) -> Phase {
    if j_over_u > critical_ratio(n0) {
        Phase::Superfluid
    } else {
        Phase::Mott
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhasePoint {
    pub height: f64,
    pub sites: u32,
    pub delta_j: f64,
    pub delta_eps: f64,
    pub hopping: f64,
    pub interaction: f64,
    pub onsite: f64,
    pub j_over_u: f64,
    pub eps_over_u: f64,
    /// Mott iff J/U <= critical ratio.
    pub phase: Phase,
    /// Mott iff (J/U, eps/U) lies inside the lobe, edges included.
    pub lobe_phase: Phase,
}

pub fn classify_phase(
    geom: &LatticeGeometry,
    n0: u32,
    delta_j: f64,
    delta_eps: f64,
    opts: &HubbardOptions,
) -> Result<PhasePoint, HubbardError> {
    geom.validate()?;
    if n0 == 0 {
        return Err(HubbardError::InvalidParameter { field: "n0", reason: "filling must be at least 1".into() });
    }
    let mut j = hopping(geom, delta_j, opts);
    if let Some(e) = opts.thermal {
        j = thermal_hopping(j, e);
    }
    let u = onsite_interaction(geom.mass)?;
    let eps = onsite_energy(geom, delta_eps);
    let (x, y) = (j / u, eps / u);
    let fc = critical_ratio(n0);
    let phase = classify_ratio(x, n0);
    let lobe_phase = match phase_boundary(x, n0) {
        LobeBoundary::Branches { lower, upper } if x <= fc && lower <= y && y <= upper => Phase::Mott,
        _ => Phase::Superfluid,
    };
    Ok(PhasePoint {
        height: geom.height,
        sites: geom.sites,
        delta_j,
        delta_eps,
        hopping: j,
        interaction: u,
        onsite: eps,
        j_over_u: x,
        eps_over_u: y,
        phase,
        lobe_phase,
    })
}

/// Uniform random offsets for J and eps drawn per grid point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Perturbation {
    pub delta_j: [f64; 2],
    pub delta_eps: [f64; 2],
}

impl Default for Perturbation {
    fn default() -> Self {
        Self { delta_j: [-5.0, 5.0], delta_eps: [-100.0, 100.0] }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseGrid {
    pub heights: Vec<f64>,
    pub site_counts: Vec<u32>,
}

/// Classify every (height, sites) pair; rows come out height-major in grid
/// order regardless of how the work is scheduled.
pub fn phase_diagram(
    base: &LatticeGeometry,
    grid: &PhaseGrid,
    n0: u32,
    perturbation: Option<&Perturbation>,
    seed: u64,
    opts: &HubbardOptions,
) -> Result<Vec<PhasePoint>, HubbardError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut jobs = Vec::with_capacity(grid.heights.len() * grid.site_counts.len());
    for &z in &grid.heights {
        for &n in &grid.site_counts {
            let (dj, de) = match perturbation {
                Some(p) => (draw(&mut rng, p.delta_j), draw(&mut rng, p.delta_eps)),
                None => (0.0, 0.0),
            };
            jobs.push((z, n, dj, de));
        }
    }
    jobs.par_iter()
        .map(|&(z, n, dj, de)| {
            let geom = LatticeGeometry { sites: n, height: z, ..base.clone() };
            classify_phase(&geom, n0, dj, de, opts)
        })
        .collect()
}

fn draw(rng: &mut ChaCha8Rng, [lo, hi]: [f64; 2]) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.random_range(lo..hi)
    }
}
