//! Stacks of trapped molecular layers: binding energy from the interlayer
//! overlap and the in-plane width each layer settles into.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StackError {
    #[error("layers {a} and {b} sit at the same height {z}")]
    CoincidentHeights { a: usize, b: usize, z: f64 },
    #[error("layer index {index} out of range for {len} layers")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("expected {expected} values, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("invalid stack parameter {field}: {reason}")]
    InvalidParameter { field: &'static str, reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerStack {
    pub heights: Vec<f64>,
    /// Molecular mass.
    pub mass: f64,
    /// In-plane harmonic trap frequency.
    pub trap_frequency: f64,
    /// Decay rate of the overlap with squared separation.
    pub binding_exponent: f64,
    /// Width of an isolated layer.
    pub base_width: f64,
    /// How strongly neighbouring layers squeeze or stretch a layer.
    pub width_coupling: f64,
}

impl LayerStack {
    pub fn new(heights: Vec<f64>) -> Self {
        Self { heights, mass: 1.0, trap_frequency: 1.0, binding_exponent: 8.0, base_width: 0.04, width_coupling: 0.01 }
    }

    pub fn len(&self) -> usize {
        self.heights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heights.is_empty()
    }

    pub fn validate(&self) -> Result<(), StackError> {
        let bad = |field, reason: &str| Err(StackError::InvalidParameter { field, reason: reason.into() });
        if self.heights.iter().any(|z| !z.is_finite()) {
            return bad("heights", "must be finite");
        }
        if !(self.mass > 0.0) {
            return bad("mass", "must be positive");
        }
        if !(self.binding_exponent > 0.0) {
            return bad("binding_exponent", "must be positive");
        }
        if !(self.base_width > 0.0) {
            return bad("base_width", "must be positive");
        }
        if !(self.width_coupling >= 0.0) {
            return bad("width_coupling", "must be non-negative");
        }
        Ok(())
    }
}

/// Sum of pairwise overlaps over ordered pairs, negated.
pub fn binding_energy(stack: &LayerStack) -> f64 {
    let a = stack.binding_exponent;
    let z = &stack.heights;
    let mut total = 0.0;
    for (q, zq) in z.iter().enumerate() {
        for (l, zl) in z.iter().enumerate() {
            if q != l {
                total += (-a * (zq - zl).powi(2)).exp();
            }
        }
    }
    -total
}

/// In-plane width of layer `l` (0-based).
pub fn oscillation_width(stack: &LayerStack, l: usize) -> Result<f64, StackError> {
    let n = stack.heights.len();
    if l >= n {
        return Err(StackError::IndexOutOfRange { index: l, len: n });
    }
    let zl = stack.heights[l];
    let (mut above, mut below) = (0.0, 0.0);
    for (q, &zq) in stack.heights.iter().enumerate() {
        if q == l {
            continue;
        }
        let d = zq - zl;
        if d == 0.0 {
            return Err(StackError::CoincidentHeights { a: l.min(q), b: l.max(q), z: zl });
        }
        if q > l {
            above += 1.0 / (d * d);
        } else {
            below += 1.0 / (d * d);
        }
    }
    Ok(stack.base_width * (1.0 + stack.width_coupling * (above - below).abs()))
}

pub fn oscillation_widths(stack: &LayerStack) -> Result<Vec<f64>, StackError> {
    (0..stack.len()).map(|l| oscillation_width(stack, l)).collect()
}

/// Product of normalized 2D Gaussians, one per layer, at in-plane radii `radii`.
pub fn variational_density(stack: &LayerStack, radii: &[f64]) -> Result<f64, StackError> {
    if radii.len() != stack.len() {
        return Err(StackError::LengthMismatch { expected: stack.len(), got: radii.len() });
    }
    let widths = oscillation_widths(stack)?;
    Ok(widths.iter().zip(radii).map(|(w, r)| (-(r * r) / (w * w)).exp() / (std::f64::consts::PI * w * w)).product())
}

/// Classical energy of the chain: in-plane oscillators plus half the sum of
/// the pair potential over ordered pairs.
pub fn chain_energy<V>(stack: &LayerStack, momenta: &[f64], radii: &[f64], pair: V) -> Result<f64, StackError>
where
    V: Fn(f64) -> f64,
{
    let n = stack.len();
    for got in [momenta.len(), radii.len()] {
        if got != n {
            return Err(StackError::LengthMismatch { expected: n, got });
        }
    }
    let m = stack.mass;
    let w = stack.trap_frequency;
    let single: f64 = momenta.iter().zip(radii).map(|(p, r)| p * p / (2.0 * m) + 0.5 * m * w * w * r * r).sum();
    let mut interaction = 0.0;
    for (q, zq) in stack.heights.iter().enumerate() {
        for (l, zl) in stack.heights.iter().enumerate() {
            if q != l {
                interaction += pair((zq - zl).abs());
            }
        }
    }
    Ok(single + 0.5 * interaction)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::quadrature;
    use approx::assert_relative_eq;

    #[test]
    fn binding_energy_of_three_layers() {
        let stack = LayerStack::new(vec![0.002, 0.010, 0.018]);
        let near = (-8.0f64 * 0.008 * 0.008).exp();
        let far = (-8.0f64 * 0.016 * 0.016).exp();
        assert_relative_eq!(binding_energy(&stack), -2.0 * (2.0 * near + far), max_relative = 1e-15);
        assert_eq!(binding_energy(&LayerStack::new(vec![0.5])), 0.0);
    }

    #[test]
    fn middle_of_uniform_stack_keeps_base_width() {
        let stack = LayerStack::new(vec![0.1, 0.2, 0.3]);
        assert_relative_eq!(oscillation_width(&stack, 1).unwrap(), 0.04, max_relative = 1e-12);
        let outer = oscillation_width(&stack, 0).unwrap();
        assert_relative_eq!(outer, 0.04 * (1.0 + 0.01 * (100.0 + 25.0)), max_relative = 1e-12);
    }

    #[test]
    fn no_coupling_no_broadening() {
        let mut stack = LayerStack::new(vec![0.1, 0.13, 0.5, 0.52]);
        stack.width_coupling = 0.0;
        assert!(oscillation_widths(&stack).unwrap().iter().all(|w| *w == 0.04));
    }

    #[test]
    fn coincident_layers_rejected() {
        let stack = LayerStack::new(vec![0.1, 0.1]);
        assert!(matches!(oscillation_width(&stack, 0), Err(StackError::CoincidentHeights { .. })));
    }

    #[test]
    fn single_layer_density_is_normalized() {
        let stack = LayerStack::new(vec![0.0]);
        let q = quadrature(
            |r| 2.0 * std::f64::consts::PI * r * variational_density(&stack, &[r]).unwrap(),
            0.0,
            1.0,
            1e-13,
        )
        .unwrap();
        assert_relative_eq!(q.value, 1.0, max_relative = 1e-11);
    }

    #[test]
    fn single_oscillator_energy() {
        let mut stack = LayerStack::new(vec![0.0]);
        stack.trap_frequency = 2.0;
        assert_eq!(chain_energy(&stack, &[0.0], &[1.0], |_| 0.0).unwrap(), 2.0);
        let pair = LayerStack::new(vec![0.0, 0.3]);
        let e = chain_energy(&pair, &[0.0, 0.0], &[0.0, 0.0], |d| d * 10.0).unwrap();
        assert_relative_eq!(e, 3.0, max_relative = 1e-15);
    }
}
