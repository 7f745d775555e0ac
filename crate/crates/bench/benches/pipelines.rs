use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use sawtrap_core::hubbard::{phase_diagram, PhaseGrid};
use sawtrap_core::trapping::{find_trap_layers, ProfileShape, TrapScan};
use sawtrap_core::*;

fn trap_layers(c: &mut Criterion) {
    let layer = IdtLayer::with_wavenumber(50.0, 0.1, LayerSide::Lower);
    let spec = MoleculeSpec { units: StarkUnits::UNITLESS, ..MoleculeSpec::co() };
    let profile = ExternalFieldProfile::new(ProfileShape::PowerLaw { amplitude: 200.0, exponent: 0.5 });
    let scan = TrapScan::whole_gap(&layer);
    c.bench_function("find_trap_layers/power_law", |b| {
        b.iter(|| find_trap_layers(black_box(&profile), &layer, &spec, &scan))
    });
}

fn phase(c: &mut Criterion) {
    let grid = PhaseGrid { heights: (1..=20).map(|i| 0.001 * i as f64).collect(), site_counts: (5..=15).collect() };
    let base = LatticeGeometry::new(5, 0.0);
    let perturbation = Perturbation::default();
    c.bench_function("phase_diagram/20x11", |b| {
        b.iter(|| phase_diagram(&base, black_box(&grid), 1, Some(&perturbation), 7, &HubbardOptions::default()))
    });
}

criterion_group!(benches, trap_layers, phase);
criterion_main!(benches);
