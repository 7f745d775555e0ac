//! Dormand-Prince 5(4) integration of `y' = G y` for complex state vectors.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::NumericsError;

/// A linear map applied to complex vectors, `out = G y`.
pub trait LinearOperator: Sync {
    fn dim(&self) -> usize;
    fn apply(&self, y: &[Complex64], out: &mut [Complex64]);
}

/// Dense complex generator stored row-major.
#[derive(Debug, Clone)]
pub struct DenseGenerator {
    n: usize,
    data: Vec<Complex64>,
}

impl DenseGenerator {
    pub fn from_matrix(m: &DMatrix<Complex64>) -> Result<Self, NumericsError> {
        if m.nrows() != m.ncols() {
            return Err(NumericsError::DimensionMismatch { rows: m.nrows(), cols: m.ncols(), len: m.ncols() });
        }
        let n = m.nrows();
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(m[(i, j)]);
            }
        }
        Ok(Self { n, data })
    }

    /// `factor * H` for a real square matrix `H`, e.g. `-i H` for a Hamiltonian.
    pub fn scaled_real(factor: Complex64, h: &DMatrix<f64>) -> Result<Self, NumericsError> {
        Self::from_matrix(&h.map(|x| factor * x))
    }
}

impl LinearOperator for DenseGenerator {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply(&self, y: &[Complex64], out: &mut [Complex64]) {
        for (i, o) in out.iter_mut().enumerate() {
            let row = &self.data[i * self.n..(i + 1) * self.n];
            let mut acc = Complex64::new(0.0, 0.0);
            for (a, b) in row.iter().zip(y) {
                acc += a * b;
            }
            *o = acc;
        }
    }
}

/// `factor * H` for a real square `H`, applied without forming complex entries.
#[derive(Debug, Clone)]
pub struct ScaledRealGenerator {
    n: usize,
    factor: Complex64,
    data: Vec<f64>,
}

impl ScaledRealGenerator {
    pub fn new(factor: Complex64, h: &DMatrix<f64>) -> Result<Self, NumericsError> {
        if h.nrows() != h.ncols() {
            return Err(NumericsError::DimensionMismatch { rows: h.nrows(), cols: h.ncols(), len: h.ncols() });
        }
        let n = h.nrows();
        let data = (0..n * n).map(|k| h[(k / n, k % n)]).collect();
        Ok(Self { n, factor, data })
    }
}

impl LinearOperator for ScaledRealGenerator {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply(&self, y: &[Complex64], out: &mut [Complex64]) {
        for (i, o) in out.iter_mut().enumerate() {
            let row = &self.data[i * self.n..(i + 1) * self.n];
            let (mut re, mut im) = (0.0, 0.0);
            for (a, b) in row.iter().zip(y) {
                re += a * b.re;
                im += a * b.im;
            }
            *o = self.factor * Complex64::new(re, im);
        }
    }
}

/// Which times end up in the returned trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OutputGrid {
    /// Every accepted step.
    Steps,
    /// `n` equal intervals on `[t0, t_end]` (so `n + 1` samples). Steps are
    /// clipped to land on the grid.
    Uniform(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    /// First trial step; chosen automatically when `None`.
    pub h_init: Option<f64>,
    pub max_steps: usize,
    pub output: OutputGrid,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self { rtol: 1e-9, atol: 1e-12, h_init: None, max_steps: 5_000_000, output: OutputGrid::Steps }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<Complex64>>,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

impl Trajectory {
    pub fn final_state(&self) -> &[Complex64] {
        self.states.last().map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn norms(&self) -> Vec<f64> {
        self.states.iter().map(|s| l2_norm(s)).collect()
    }

    /// Largest deviation of the 2-norm from its initial value.
    pub fn max_norm_drift(&self) -> f64 {
        let norms = self.norms();
        let n0 = norms.first().copied().unwrap_or(0.0);
        norms.iter().map(|n| (n - n0).abs()).fold(0.0, f64::max)
    }

    /// Occupation probabilities |y_i|^2 of one component over time.
    pub fn populations(&self, component: usize) -> Vec<f64> {
        self.states.iter().map(|s| s[component].norm_sqr()).collect()
    }
}

pub(crate) fn l2_norm(y: &[Complex64]) -> f64 {
    y.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

/// Integrate `y' = G y` from `t0` to `t_end` with a dense complex generator.
pub fn integrate_linear_ode(
    generator: &DMatrix<Complex64>,
    y0: &[Complex64],
    t0: f64,
    t_end: f64,
    opts: &OdeOptions,
) -> Result<Trajectory, NumericsError> {
    if generator.nrows() != y0.len() || generator.ncols() != y0.len() {
        return Err(NumericsError::DimensionMismatch {
            rows: generator.nrows(),
            cols: generator.ncols(),
            len: y0.len(),
        });
    }
    let op = DenseGenerator::from_matrix(generator)?;
    integrate_linear(&op, y0, t0, t_end, opts)
}

// Dormand-Prince tableau.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Integrate `y' = G y` for any linear operator.
pub fn integrate_linear<G: LinearOperator + ?Sized>(
    op: &G,
    y0: &[Complex64],
    t0: f64,
    t_end: f64,
    opts: &OdeOptions,
) -> Result<Trajectory, NumericsError> {
    let n = op.dim();
    if y0.len() != n {
        return Err(NumericsError::DimensionMismatch { rows: n, cols: n, len: y0.len() });
    }
    if !(t_end.is_finite() && t0.is_finite()) || t_end < t0 {
        return Err(NumericsError::InvalidArgument(format!("integration interval [{t0}, {t_end}] is not valid")));
    }
    if !(opts.rtol > 0.0 && opts.atol >= 0.0) {
        return Err(NumericsError::InvalidArgument("tolerances must be positive".into()));
    }

    let mut traj = Trajectory { times: vec![t0], states: vec![y0.to_vec()], accepted_steps: 0, rejected_steps: 0 };
    let span = t_end - t0;
    if span == 0.0 || n == 0 {
        return Ok(traj);
    }

    let grid: Vec<f64> = match opts.output {
        OutputGrid::Steps => Vec::new(),
        OutputGrid::Uniform(m) => {
            let m = m.max(1);
            (1..=m).map(|i| if i == m { t_end } else { t0 + span * i as f64 / m as f64 }).collect()
        }
    };
    let mut next_out = 0usize;

    let zero = Complex64::new(0.0, 0.0);
    let mut y = y0.to_vec();
    let mut k1 = vec![zero; n];
    let mut k2 = vec![zero; n];
    let mut k3 = vec![zero; n];
    let mut k4 = vec![zero; n];
    let mut k5 = vec![zero; n];
    let mut k6 = vec![zero; n];
    let mut k7 = vec![zero; n];
    let mut tmp = vec![zero; n];
    let mut y_new = vec![zero; n];

    op.apply(&y, &mut k1);
    let mut h = match opts.h_init {
        Some(h) if h > 0.0 => h,
        _ => {
            let ny = l2_norm(&y);
            let nf = l2_norm(&k1);
            let guess = if nf > 0.0 && ny > 0.0 { 0.01 * ny / nf } else { span * 1e-3 };
            guess.min(span)
        }
    };
    let h_min = span * 1e-14;
    let mut t = t0;
    let mut steps = 0usize;

    while t < t_end {
        if steps >= opts.max_steps {
            return Err(NumericsError::MaxSteps { max_steps: opts.max_steps, t });
        }
        let target = match opts.output {
            OutputGrid::Steps => t_end,
            OutputGrid::Uniform(_) => grid[next_out],
        };
        let mut lands = false;
        if t + h >= target {
            h = target - t;
            lands = true;
        }
        if h < h_min {
            return Err(NumericsError::StepUnderflow { t });
        }

        for i in 0..n {
            tmp[i] = y[i] + h * A21 * k1[i];
        }
        op.apply(&tmp, &mut k2);
        for i in 0..n {
            tmp[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
        }
        op.apply(&tmp, &mut k3);
        for i in 0..n {
            tmp[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        }
        op.apply(&tmp, &mut k4);
        for i in 0..n {
            tmp[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        op.apply(&tmp, &mut k5);
        for i in 0..n {
            tmp[i] = y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        op.apply(&tmp, &mut k6);
        for i in 0..n {
            y_new[i] = y[i] + h * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i] + B5 * k5[i] + B6 * k6[i]);
        }
        op.apply(&y_new, &mut k7);

        let mut err = 0.0f64;
        for i in 0..n {
            let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let scale = opts.atol + opts.rtol * y[i].norm().max(y_new[i].norm());
            let r = e.norm() / scale;
            if r.is_nan() {
                return Err(NumericsError::NonFinite { t });
            }
            err = err.max(r);
        }
        steps += 1;

        if err <= 1.0 {
            t = if lands { target } else { t + h };
            std::mem::swap(&mut y, &mut y_new);
            std::mem::swap(&mut k1, &mut k7);
            if y.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
                return Err(NumericsError::NonFinite { t });
            }
            traj.accepted_steps += 1;
            match opts.output {
                OutputGrid::Steps => {
                    traj.times.push(t);
                    traj.states.push(y.clone());
                }
                OutputGrid::Uniform(_) => {
                    if lands {
                        traj.times.push(t);
                        traj.states.push(y.clone());
                        next_out += 1;
                    }
                }
            }
            let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            h *= fac;
        } else {
            traj.rejected_steps += 1;
            h *= (0.9 * err.powf(-0.2)).clamp(0.1, 1.0);
        }
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn scalar_decay_matches_exponential() {
        let g = DMatrix::from_element(1, 1, c(-1.0, 0.0));
        let traj = integrate_linear_ode(&g, &[c(1.0, 0.0)], 0.0, 1.0, &OdeOptions::default()).unwrap();
        assert_relative_eq!(traj.final_state()[0].re, (-1.0f64).exp(), max_relative = 1e-8);
        assert_eq!(*traj.times.last().unwrap(), 1.0);
    }

    #[test]
    fn zero_generator_keeps_state() {
        let g = DMatrix::from_element(2, 2, c(0.0, 0.0));
        let y0 = [c(0.3, 0.1), c(-0.2, 0.5)];
        let traj = integrate_linear_ode(&g, &y0, 0.0, 3.0, &OdeOptions::default()).unwrap();
        assert_eq!(traj.final_state(), &y0);
    }

    #[test]
    fn rotation_is_norm_preserving() {
        // G = -i sigma_x, exact solution cos t, -i sin t
        let mut g = DMatrix::from_element(2, 2, c(0.0, 0.0));
        g[(0, 1)] = c(0.0, -1.0);
        g[(1, 0)] = c(0.0, -1.0);
        let opts = OdeOptions { output: OutputGrid::Uniform(10), ..Default::default() };
        let traj = integrate_linear_ode(&g, &[c(1.0, 0.0), c(0.0, 0.0)], 0.0, 10.0, &opts).unwrap();
        assert_eq!(traj.times.len(), 11);
        let y = traj.final_state();
        assert!((y[0] - c(10f64.cos(), 0.0)).norm() < 1e-8);
        assert!((y[1] - c(0.0, -(10f64.sin()))).norm() < 1e-8);
        assert!(traj.max_norm_drift() < 1e-8);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let g = DMatrix::from_element(2, 2, c(0.0, 0.0));
        let err = integrate_linear_ode(&g, &[c(1.0, 0.0)], 0.0, 1.0, &OdeOptions::default());
        assert!(matches!(err, Err(NumericsError::DimensionMismatch { .. })));
    }

    #[test]
    fn step_budget_reports_last_good_time() {
        let g = DMatrix::from_element(1, 1, c(0.0, -1.0));
        let opts = OdeOptions { max_steps: 3, h_init: Some(1e-3), ..Default::default() };
        match integrate_linear_ode(&g, &[c(1.0, 0.0)], 0.0, 100.0, &opts) {
            Err(NumericsError::MaxSteps { t, .. }) => assert!(t > 0.0 && t < 1.0),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn blow_up_is_reported_as_underflow_or_non_finite() {
        let g = DMatrix::from_element(1, 1, c(1e300, 0.0));
        let r = integrate_linear_ode(&g, &[c(1.0, 0.0)], 0.0, 1.0, &OdeOptions::default());
        assert!(r.is_err());
    }

    #[test]
    fn uniform_grid_times_are_increasing() {
        let g = DMatrix::from_element(1, 1, c(0.0, -3.0));
        let opts = OdeOptions { output: OutputGrid::Uniform(7), ..Default::default() };
        let traj = integrate_linear_ode(&g, &[c(1.0, 0.0)], 0.5, 2.0, &opts).unwrap();
        assert_eq!(traj.times.len(), traj.states.len());
        assert!(traj.times.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(traj.times[0], 0.5);
        assert_eq!(*traj.times.last().unwrap(), 2.0);
    }
}
