//! Dipolar hopping on a lattice of trapped molecules: single-excitation
//! dynamics, its Laplace-domain description, and long-range shielding.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::{cubic_roots, integrate_linear, NumericsError, OdeOptions, ScaledRealGenerator, Trajectory};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LatticeError {
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error("sites {a} and {b} coincide")]
    CoincidentSites { a: usize, b: usize },
    #[error("s = {s} is a pole of the site-1 amplitude")]
    Pole { s: Complex64 },
    #[error("the characteristic cubic has a repeated root; use the time-domain integrator")]
    RepeatedRoot,
    #[error("invalid lattice parameter {field}: {reason}")]
    InvalidParameter { field: &'static str, reason: String },
}

fn c64(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Sites with `c / r^3` hopping between every pair and a common on-site energy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeConfig {
    pub positions: Vec<[f64; 2]>,
    pub coupling: f64,
    pub onsite: f64,
}

impl LatticeConfig {
    /// `n` sites at `x = spacing, 2 spacing, ..., n spacing`.
    pub fn chain(n: usize, spacing: f64, coupling: f64, onsite: f64) -> Self {
        Self { positions: (1..=n).map(|i| [spacing * i as f64, 0.0]).collect(), coupling, onsite }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Hopping matrix with zero diagonal.
    pub fn hopping(&self) -> Result<DMatrix<f64>, LatticeError> {
        let n = self.len();
        let mut v = DMatrix::zeros(n, n);
        for a in 0..n {
            for b in (a + 1)..n {
                let [xa, ya] = self.positions[a];
                let [xb, yb] = self.positions[b];
                let r = (xa - xb).hypot(ya - yb);
                if r == 0.0 {
                    return Err(LatticeError::CoincidentSites { a, b });
                }
                let t = self.coupling / (r * r * r);
                v[(a, b)] = t;
                v[(b, a)] = t;
            }
        }
        Ok(v)
    }

    /// `U0 I + V`.
    pub fn hamiltonian(&self) -> Result<DMatrix<f64>, LatticeError> {
        let mut h = self.hopping()?;
        for i in 0..self.len() {
            h[(i, i)] = self.onsite;
        }
        Ok(h)
    }
}

/// Integrator settings for lattice runs. Dipolar chains are stiff (nearest
/// couplings of order 10^3 against times of order 10), and a Dormand-Prince
/// pair at rtol 1e-9 lets the norm wander by ~1e-7 over such runs; 1e-11
/// keeps it below 1e-8.
pub fn lattice_ode_options() -> OdeOptions {
    OdeOptions { rtol: 1e-11, atol: 1e-14, ..OdeOptions::default() }
}

/// Integrate `p' = -i (U0 + V) p` from 0 to `t_end`.
pub fn anderson_evolve(
    cfg: &LatticeConfig,
    p0: &[Complex64],
    t_end: f64,
    opts: &OdeOptions,
) -> Result<Trajectory, LatticeError> {
    let g = ScaledRealGenerator::new(Complex64::new(0.0, -1.0), &cfg.hamiltonian()?)?;
    Ok(integrate_linear(&g, p0, 0.0, t_end, opts)?)
}

/// Coefficients of the site-1 resolvent denominator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaplaceCoefficients {
    /// Sum of squared couplings out of site 1.
    pub alpha: f64,
    /// Sum over closed three-site loops through site 1.
    pub beta: f64,
    /// `U0^3 - alpha U0 + beta`; the long-time site-1 amplitude vanishes when this is non-zero.
    pub discriminant: f64,
}

impl LaplaceCoefficients {
    pub fn predicts_decay(&self) -> bool {
        self.discriminant != 0.0
    }
}

pub fn laplace_coefficients(cfg: &LatticeConfig) -> Result<LaplaceCoefficients, LatticeError> {
    let v = cfg.hopping()?;
    let n = cfg.len();
    let mut alpha = 0.0;
    let mut beta = 0.0;
    for j in 1..n {
        alpha += v[(0, j)] * v[(0, j)];
        let mut inner = 0.0;
        for jp in 1..n {
            if jp != j {
                inner += v[(j, jp)] * v[(jp, 0)];
            }
        }
        beta += v[(0, j)] * inner;
    }
    let u = cfg.onsite;
    Ok(LaplaceCoefficients { alpha, beta, discriminant: u * u * u - alpha * u + beta })
}

/// Laplace transform of the site-1 amplitude for an excitation starting on site 1.
pub fn p1_laplace(cfg: &LatticeConfig, s: Complex64) -> Result<Complex64, LatticeError> {
    let c = laplace_coefficients(cfg)?;
    let w = Complex64::i() * s - cfg.onsite;
    let denom = w * w * w - c.alpha * w - c.beta;
    if denom.norm() <= 1e-14 * (w.norm().powi(3) + c.alpha.abs() * w.norm() + c.beta.abs()) {
        return Err(LatticeError::Pole { s });
    }
    Ok(Complex64::i() * w * w / denom)
}

/// Inverse transform of [`p1_laplace`] by summing residues at its three poles.
pub fn p1_time_domain(cfg: &LatticeConfig, t: f64) -> Result<Complex64, LatticeError> {
    let c = laplace_coefficients(cfg)?;
    if c.alpha == 0.0 && c.beta == 0.0 {
        return Ok(Complex64::from_polar(1.0, -cfg.onsite * t));
    }
    let roots = cubic_roots(1.0, 0.0, -c.alpha, -c.beta)?.roots;
    let scale = c.alpha.abs().sqrt().max(c.beta.abs().cbrt());
    let mut total = Complex64::new(0.0, 0.0);
    for (k, wk) in roots.iter().enumerate() {
        let mut denom = c64(1.0);
        for (l, wl) in roots.iter().enumerate() {
            if l != k {
                let d = wk - wl;
                if d.norm() <= 1e-9 * scale {
                    return Err(LatticeError::RepeatedRoot);
                }
                denom *= d;
            }
        }
        let sk = -Complex64::i() * (wk + cfg.onsite);
        total += wk * wk / denom * (sk * t).exp();
    }
    Ok(total)
}

/// Eigen-decomposition of a real symmetric Hamiltonian, used to evaluate
/// long-time averages without stepping through every oscillation.
#[derive(Debug, Clone)]
pub struct SpectralPropagator {
    pub energies: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

impl SpectralPropagator {
    pub fn new(h: DMatrix<f64>) -> Self {
        let eig = SymmetricEigen::new(h);
        Self { energies: eig.eigenvalues.iter().copied().collect(), vectors: eig.eigenvectors }
    }

    /// State at time `t` under `-i H`.
    pub fn evolve(&self, psi0: &[Complex64], t: f64) -> Vec<Complex64> {
        let n = self.energies.len();
        let mut out = vec![c64(0.0); n];
        for k in 0..n {
            let overlap: Complex64 = psi0.iter().enumerate().map(|(i, p)| self.vectors[(i, k)] * p).sum();
            let amp = overlap * Complex64::from_polar(1.0, -self.energies[k] * t);
            for (i, o) in out.iter_mut().enumerate() {
                *o += self.vectors[(i, k)] * amp;
            }
        }
        out
    }

    /// Mean of the return probability on `site` over `[0, t_end]` for an
    /// excitation that starts there.
    pub fn time_averaged_return(&self, site: usize, t_end: f64) -> f64 {
        let weights: Vec<f64> = (0..self.energies.len()).map(|k| self.vectors[(site, k)].powi(2)).collect();
        let mut total = 0.0;
        for (k, wk) in weights.iter().enumerate() {
            for (l, wl) in weights.iter().enumerate() {
                let x = (self.energies[k] - self.energies[l]) * t_end;
                let sinc = if x.abs() < 1e-8 { 1.0 - x * x / 6.0 } else { x.sin() / x };
                total += wk * wl * sinc;
            }
        }
        total
    }
}

/// Time-averaged |p1|^2 over `[0, t_end]` for an excitation starting on site 1.
pub fn time_averaged_return(cfg: &LatticeConfig, t_end: f64) -> Result<f64, LatticeError> {
    if cfg.is_empty() {
        return Err(LatticeError::InvalidParameter { field: "positions", reason: "no sites".into() });
    }
    Ok(SpectralPropagator::new(cfg.hamiltonian()?).time_averaged_return(0, t_end))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    pub sites: usize,
    /// Time-averaged |p1|^2.
    pub value: f64,
    /// Change from the previous row (zero for the first).
    pub deviation: f64,
}

/// Refine the chain on the interval `(0, L]` spanned by `base` (its last
/// site sits at `L`) and watch the time-averaged return probability settle.
pub fn continuum_convergence(
    base: &LatticeConfig,
    site_counts: &[usize],
    t_end: f64,
) -> Result<Vec<ConvergenceRow>, LatticeError> {
    let length = base.positions.iter().map(|p| p[0].hypot(p[1])).fold(0.0, f64::max);
    if !(length > 0.0) {
        return Err(LatticeError::InvalidParameter { field: "positions", reason: "interval has zero length".into() });
    }
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(site_counts.len());
    for &n in site_counts {
        if n == 0 {
            return Err(LatticeError::InvalidParameter { field: "sites", reason: "need at least one site".into() });
        }
        let cfg = LatticeConfig::chain(n, length / n as f64, base.coupling, base.onsite);
        let value = time_averaged_return(&cfg, t_end)?;
        let deviation = rows.last().map_or(0.0, |r| (value - r.value).abs());
        rows.push(ConvergenceRow { sites: n, value, deviation });
    }
    Ok(rows)
}

/// Extra couplings beyond nearest neighbours in the shielding model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LongRange {
    /// Every pair coupled with the same strength.
    Uniform {
        gamma: f64,
    },
    /// `hopping / |n - j|^3`.
    PowerLaw,
    Off,
}

/// How the generator is assembled; both give the same dynamics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum GeneratorForm {
    /// `c' = i (V nn + gamma + U0) c`, written out term by term.
    #[default]
    Direct,
    /// `c' = -i H c` with `H = -(V nn + gamma + U0)`.
    Hamiltonian,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShieldingConfig {
    pub sites: usize,
    pub hopping: f64,
    pub onsite: f64,
    pub long_range: LongRange,
    #[serde(default)]
    pub form: GeneratorForm,
    #[serde(default = "default_duration")]
    pub duration: f64,
}

fn default_duration() -> f64 {
    10.0
}

impl ShieldingConfig {
    pub fn validate(&self) -> Result<(), LatticeError> {
        if self.sites == 0 {
            return Err(LatticeError::InvalidParameter { field: "sites", reason: "need at least one site".into() });
        }
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return Err(LatticeError::InvalidParameter { field: "duration", reason: "must be positive".into() });
        }
        Ok(())
    }

    /// Real matrix `V nn + gamma + U0` with open ends.
    pub fn coupling_matrix(&self) -> DMatrix<f64> {
        let n = self.sites;
        let mut m = DMatrix::zeros(n, n);
        for a in 0..n {
            m[(a, a)] = self.onsite;
            for b in 0..n {
                if a == b {
                    continue;
                }
                let d = a.abs_diff(b);
                if d == 1 {
                    m[(a, b)] += self.hopping;
                }
                m[(a, b)] += match self.long_range {
                    LongRange::Uniform { gamma } => gamma,
                    LongRange::PowerLaw => self.hopping / (d * d * d) as f64,
                    LongRange::Off => 0.0,
                };
            }
        }
        m
    }

    pub fn generator(&self) -> Result<ScaledRealGenerator, NumericsError> {
        let m = self.coupling_matrix();
        match self.form {
            GeneratorForm::Direct => ScaledRealGenerator::new(Complex64::i(), &m),
            GeneratorForm::Hamiltonian => ScaledRealGenerator::new(-Complex64::i(), &(-m)),
        }
    }

    pub fn evolve(&self, initial: &[Complex64], opts: &OdeOptions) -> Result<Trajectory, LatticeError> {
        self.validate()?;
        Ok(integrate_linear(&self.generator()?, initial, 0.0, self.duration, opts)?)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShieldingOutcome {
    /// max_n | |c_n|^2 - |c'_n|^2 | at the final time.
    pub deviation: f64,
    pub norm_drift: f64,
}

/// Compare the final populations with and without the long-range couplings.
pub fn shielding_deviation(
    cfg: &ShieldingConfig,
    initial: &[Complex64],
    opts: &OdeOptions,
) -> Result<ShieldingOutcome, LatticeError> {
    let with = cfg.evolve(initial, opts)?;
    let without = ShieldingConfig { long_range: LongRange::Off, ..cfg.clone() }.evolve(initial, opts)?;
    let deviation = with
        .final_state()
        .iter()
        .zip(without.final_state())
        .map(|(a, b)| (a.norm_sqr() - b.norm_sqr()).abs())
        .fold(0.0, f64::max);
    Ok(ShieldingOutcome { deviation, norm_drift: with.max_norm_drift().max(without.max_norm_drift()) })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialState {
    Uniform,
    Site { index: usize },
    Random { seed: u64 },
}

/// Normalized initial amplitudes on `n` sites.
pub fn initial_state(kind: InitialState, n: usize) -> Result<Vec<Complex64>, LatticeError> {
    let mut v = match kind {
        InitialState::Uniform => vec![c64(1.0); n],
        InitialState::Site { index } => {
            if index >= n {
                return Err(LatticeError::InvalidParameter {
                    field: "initial.index",
                    reason: format!("{index} >= {n}"),
                });
            }
            let mut v = vec![c64(0.0); n];
            v[index] = c64(1.0);
            v
        }
        InitialState::Random { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..n).map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect()
        }
    };
    let norm = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(LatticeError::InvalidParameter { field: "initial", reason: "zero state".into() });
    }
    v.iter_mut().for_each(|c| *c /= norm);
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::OutputGrid;
    use approx::assert_relative_eq;

    fn site0(n: usize) -> Vec<Complex64> {
        initial_state(InitialState::Site { index: 0 }, n).unwrap()
    }

    #[test]
    fn two_sites_have_exact_rabi_oscillation() {
        let cfg = LatticeConfig::chain(2, 1.0, 0.7, 2.0);
        for t in [0.0, 0.4, 3.3] {
            let want = Complex64::from_polar(1.0, -2.0 * t) * (0.7 * t).cos();
            assert!((p1_time_domain(&cfg, t).unwrap() - want).norm() < 1e-12);
        }
        let traj = anderson_evolve(&cfg, &site0(2), 3.3, &OdeOptions::default()).unwrap();
        let want = Complex64::from_polar(1.0, -6.6) * (0.7f64 * 3.3).cos();
        assert!((traj.final_state()[0] - want).norm() < 1e-8);
    }

    #[test]
    fn three_site_coefficients() {
        let d = 0.5;
        let cfg = LatticeConfig::chain(3, d, 0.4, 2.0);
        let v = 0.4 / (d * d * d);
        let v13 = v / 8.0;
        let c = laplace_coefficients(&cfg).unwrap();
        assert_relative_eq!(c.alpha, v * v + v13 * v13, max_relative = 1e-14);
        assert_relative_eq!(c.beta, 2.0 * v * v * v13, max_relative = 1e-14);
        assert_relative_eq!(c.discriminant, 8.0 - c.alpha * 2.0 + c.beta, max_relative = 1e-14);
    }

    #[test]
    fn isolated_site_keeps_its_excitation() {
        let cfg = LatticeConfig::chain(1, 0.1, 0.4, 2.0);
        let c = laplace_coefficients(&cfg).unwrap();
        assert_eq!((c.alpha, c.beta), (0.0, 0.0));
        assert_relative_eq!(p1_time_domain(&cfg, 1.3).unwrap().norm(), 1.0, max_relative = 1e-15);
        assert_relative_eq!(time_averaged_return(&cfg, 10.0).unwrap(), 1.0, max_relative = 1e-15);
    }

    #[test]
    fn pole_is_reported() {
        let cfg = LatticeConfig::chain(1, 0.1, 0.4, 2.0);
        // i s - U0 = 0 at s = -2i
        assert!(matches!(p1_laplace(&cfg, Complex64::new(0.0, -2.0)), Err(LatticeError::Pole { .. })));
        assert!(p1_laplace(&cfg, Complex64::new(0.5, 0.0)).is_ok());
    }

    #[test]
    fn laplace_inverse_tracks_dynamics_when_weakly_coupled() {
        let cfg = LatticeConfig::chain(5, 1.0, 0.05, 2.0);
        let t_max = 2.0 * std::f64::consts::PI / 2.0;
        let opts = OdeOptions { output: OutputGrid::Uniform(20), ..Default::default() };
        let traj = anderson_evolve(&cfg, &site0(5), t_max, &opts).unwrap();
        for (t, state) in traj.times.iter().zip(&traj.states) {
            let approx = p1_time_domain(&cfg, *t).unwrap();
            assert!((approx - state[0]).norm() < 0.1 * state[0].norm());
        }
    }

    #[test]
    fn spectral_route_matches_integrator() {
        let cfg = LatticeConfig::chain(5, 0.1, 0.4, 2.0);
        let traj = anderson_evolve(&cfg, &site0(5), 2.0, &lattice_ode_options()).unwrap();
        let spec = SpectralPropagator::new(cfg.hamiltonian().unwrap());
        let exact = spec.evolve(&site0(5), 2.0);
        for (a, b) in traj.final_state().iter().zip(&exact) {
            assert!((a - b).norm() < 1e-7);
        }
        assert!(traj.max_norm_drift() < 1e-8);
    }

    #[test]
    fn time_average_matches_sampled_trajectory() {
        let cfg = LatticeConfig::chain(3, 1.0, 0.6, 2.0);
        let opts = OdeOptions { output: OutputGrid::Uniform(4000), ..Default::default() };
        let traj = anderson_evolve(&cfg, &site0(3), 10.0, &opts).unwrap();
        let p = traj.populations(0);
        let dt = 10.0 / 4000.0;
        let trap: f64 = p.windows(2).map(|w| 0.5 * (w[0] + w[1]) * dt).sum::<f64>() / 10.0;
        assert_relative_eq!(trap, time_averaged_return(&cfg, 10.0).unwrap(), max_relative = 1e-5);
    }

    #[test]
    fn convergence_rows() {
        let base = LatticeConfig::chain(5, 0.1, 0.4, 2.0);
        let rows = continuum_convergence(&base, &[5, 5], 10.0).unwrap();
        assert_eq!(rows[1].deviation, 0.0);
        let single = continuum_convergence(&base, &[1], 10.0).unwrap();
        assert_relative_eq!(single[0].value, 1.0, max_relative = 1e-15);
    }

    #[test]
    fn both_generator_forms_agree() {
        let base = ShieldingConfig {
            sites: 12,
            hopping: 1.0,
            onsite: 0.1,
            long_range: LongRange::Uniform { gamma: 2.0 },
            form: GeneratorForm::Direct,
            duration: 3.0,
        };
        let psi = initial_state(InitialState::Random { seed: 7 }, 12).unwrap();
        let a = base.evolve(&psi, &OdeOptions::default()).unwrap();
        let b =
            ShieldingConfig { form: GeneratorForm::Hamiltonian, ..base }.evolve(&psi, &OdeOptions::default()).unwrap();
        for (x, y) in a.final_state().iter().zip(b.final_state()) {
            assert!((x - y).norm() < 1e-12);
        }
    }

    #[test]
    fn no_long_range_means_no_deviation() {
        let cfg = ShieldingConfig {
            sites: 8,
            hopping: 1.0,
            onsite: 0.1,
            long_range: LongRange::Off,
            form: GeneratorForm::Direct,
            duration: 10.0,
        };
        let psi = initial_state(InitialState::Uniform, 8).unwrap();
        assert_eq!(shielding_deviation(&cfg, &psi, &OdeOptions::default()).unwrap().deviation, 0.0);
    }

    #[test]
    fn power_law_matrix_entries() {
        let cfg = ShieldingConfig {
            sites: 4,
            hopping: 1.0,
            onsite: 0.1,
            long_range: LongRange::PowerLaw,
            form: GeneratorForm::Direct,
            duration: 10.0,
        };
        let m = cfg.coupling_matrix();
        assert_eq!(m[(0, 1)], 2.0);
        assert_eq!(m[(0, 2)], 0.125);
        assert_eq!(m[(3, 3)], 0.1);
    }

    #[test]
    fn random_initial_state_is_reproducible() {
        let a = initial_state(InitialState::Random { seed: 3 }, 6).unwrap();
        let b = initial_state(InitialState::Random { seed: 3 }, 6).unwrap();
        let c = initial_state(InitialState::Random { seed: 4 }, 6).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_relative_eq!(a.iter().map(|c| c.norm_sqr()).sum::<f64>(), 1.0, max_relative = 1e-14);
    }
}
