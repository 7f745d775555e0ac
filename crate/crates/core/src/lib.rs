//! Models for trapping polar molecules in the evanescent field of
//! surface-acoustic-wave transducers, together with the lattice, Hubbard and
//! elastic-medium calculations built on top of them.
//!
//! The commonly used types are re-exported at the crate root.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod acoustics;
pub mod hubbard;
pub mod lattice;
pub mod molecule;
pub mod multilayer;
pub mod numerics;
pub mod saw_field;
pub mod trapping;

pub use acoustics::{ElasticMedium, PiezoCubicMedium, Propagation};
pub use hubbard::{HubbardOptions, LatticeGeometry, Perturbation, Phase, PhaseGrid, PhasePoint};
pub use lattice::{GeneratorForm, InitialState, LatticeConfig, LongRange, ShieldingConfig};
pub use molecule::{MoleculeSpec, Seeker, StarkUnits};
pub use multilayer::LayerStack;
pub use numerics::{NumericsError, OdeOptions, RootSet, Trajectory};
pub use saw_field::{FieldVector, IdtLayer, LayerSide};
pub use trapping::{ExternalFieldProfile, ProfileShape, Stability, TrapEquilibrium, TwoLayerTrap};
