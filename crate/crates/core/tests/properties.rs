//! Property tests for the invariants each module promises.

use nalgebra::{DMatrix, Matrix3};
use num_complex::Complex64;
use proptest::prelude::*;
use std::f64::consts::PI;

use sawtrap_core::acoustics::{isotropic_stress, solve_decay_constants, strain_tensor};
use sawtrap_core::hubbard::{classify_phase, critical_ratio, hopping, onsite_interaction};
use sawtrap_core::molecule::{rotating_frame_hamiltonian, shifted_splitting, stark_levels};
use sawtrap_core::multilayer::{binding_energy, oscillation_widths};
use sawtrap_core::numerics::{cubic_roots, find_roots_bracketed, integrate_linear_ode, quadrature, RootOptions};
use sawtrap_core::saw_field::{field_closed_form, field_envelope, potential_finger_sum};
use sawtrap_core::trapping::two_layer_equilibrium;
use sawtrap_core::*;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Eigenvalues of the companion matrix, an independent route to cubic roots.
fn companion_roots(c3: f64, c2: f64, c1: f64, c0: f64) -> Vec<Complex64> {
    let m = nalgebra::Matrix3::new(0.0, 0.0, -c0 / c3, 1.0, 0.0, -c1 / c3, 0.0, 1.0, -c2 / c3);
    m.complex_eigenvalues().iter().copied().collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn cubic_roots_rebuild_their_coefficients(
        c3 in prop_oneof![-10.0..-0.1f64, 0.1..10.0f64],
        c2 in -10.0..10.0f64, c1 in -10.0..10.0f64, c0 in -10.0..10.0f64,
    ) {
        let set = cubic_roots(c3, c2, c1, c0).unwrap();
        let r = &set.roots;
        let rebuilt = [
            c(c3),
            -c3 * (r[0] + r[1] + r[2]),
            c3 * (r[0] * r[1] + r[0] * r[2] + r[1] * r[2]),
            -c3 * r[0] * r[1] * r[2],
        ];
        let scale = [c3, c2, c1, c0].iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (got, want) in rebuilt.iter().zip([c3, c2, c1, c0]) {
            prop_assert!((got - want).norm() <= 1e-10 * scale, "{got} vs {want}");
        }
        for res in &set.residuals {
            prop_assert!(*res <= set.tolerance);
        }
        // every companion eigenvalue is close to one of ours
        let mut oracle = companion_roots(c3, c2, c1, c0);
        for root in r {
            let (i, d) = oracle.iter().enumerate()
                .map(|(i, o)| (i, (o - root).norm()))
                .fold((0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
            prop_assert!(d <= 1e-5 * (1.0 + root.norm()), "root {root} far from oracle");
            oracle.remove(i);
        }
    }

    #[test]
    fn bracketed_roots_are_sorted_and_within_tolerance(
        a in -3.0..3.0f64, b in -3.0..3.0f64, w in 0.5..20.0f64,
    ) {
        let f = |x: f64| (w * x).sin() + 0.3 * a - 0.1 * b * x;
        let opts = RootOptions { scan_points: 2000, tol: 1e-11 };
        let set = find_roots_bracketed(f, -2.0, 2.0, &opts).unwrap();
        prop_assert!(set.roots.windows(2).all(|p| p[0] < p[1]));
        for (x, r) in set.roots.iter().zip(&set.residuals) {
            prop_assert!(*r <= 1e-11);
            prop_assert!((f(*x)).abs() <= 1e-11);
        }
    }

    #[test]
    fn hermitian_evolution_conserves_norm(seed in any::<u64>()) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let n = 4;
        let mut h = DMatrix::<Complex64>::zeros(n, n);
        for i in 0..n {
            h[(i, i)] = c(rng.random_range(-1.0..1.0));
            for j in (i + 1)..n {
                let z = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                h[(i, j)] = z;
                h[(j, i)] = z.conj();
            }
        }
        let g = h.map(|z| -Complex64::i() * z);
        let y0: Vec<Complex64> = (0..n).map(|i| c(if i == 0 { 1.0 } else { 0.0 })).collect();
        let traj = integrate_linear_ode(&g, &y0, 0.0, 10.0, &OdeOptions::default()).unwrap();
        prop_assert!(traj.max_norm_drift() < 1e-8, "drift {}", traj.max_norm_drift());
        prop_assert!(traj.times.windows(2).all(|w| w[1] > w[0]));
        prop_assert_eq!(traj.times.len(), traj.states.len());
    }

    #[test]
    fn quadrature_is_exact_for_low_degree_polynomials(
        coeffs in prop::collection::vec(-5.0..5.0f64, 1..10), lo in -2.0..0.0f64, hi in 0.1..2.0f64,
    ) {
        let p = |x: f64| coeffs.iter().fold(0.0, |acc, c| acc * x + c);
        let n = coeffs.len();
        let anti = |x: f64| coeffs.iter().enumerate()
            .map(|(i, c)| c * x.powi((n - i) as i32) / (n - i) as f64)
            .sum::<f64>();
        let q = quadrature(p, lo, hi, 1e-12).unwrap();
        let want = anti(hi) - anti(lo);
        prop_assert!((q.value - want).abs() <= 1e-11 * (1.0 + want.abs()));
    }

    #[test]
    fn finger_sum_is_periodic_and_moves_with_the_wave(
        x in -0.5..0.5f64, z in 0.0..0.02f64, t in 0.0..1e-4f64, v0 in -2.0..2.0f64, v2 in -2.0..2.0f64,
    ) {
        let layer = IdtLayer {
            periods: 2, voltages: [v0, v0, v2], velocity: 3000.0,
            ..IdtLayer::with_wavenumber(50.0, 0.02, LayerSide::Lower)
        };
        let amp = 2.0 * (v2 - v0).abs() + 1e-300;
        let base = potential_finger_sum(&layer, x, z, t);
        let shifted = potential_finger_sum(&layer, x + layer.wavelength(), z, t);
        let moved = potential_finger_sum(&layer, x + 3000.0 * 1e-6, z, t + 1e-6);
        prop_assert!((base - shifted).abs() <= 1e-11 * amp);
        prop_assert!((base - moved).abs() <= 1e-11 * amp);
        let f = field_closed_form(&layer, layer.drive_amplitude(), x, z, t).unwrap();
        let env = field_envelope(&layer, layer.drive_amplitude(), z).unwrap().abs();
        prop_assert!(f.magnitude() <= env * (1.0 + 1e-12));
    }

    #[test]
    fn rotating_frame_spectrum_matches_stark_levels(
        field in 0.0..1e5f64, x in -1.0..1.0f64, v in 0.0..5000.0f64, upper in any::<bool>(),
    ) {
        let side = if upper { LayerSide::Upper } else { LayerSide::Lower };
        let layer = IdtLayer { velocity: v, ..IdtLayer::with_wavenumber(50.0, 0.02, side) };
        let spec = MoleculeSpec::oh();
        let h = rotating_frame_hamiltonian(&spec, &layer, field, x);
        prop_assert_eq!(h[(0, 1)], h[(1, 0)].conj());
        let mut e: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
        e.sort_by(f64::total_cmp);
        let lv = stark_levels(&spec, field, shifted_splitting(&spec, 50.0, v));
        prop_assert!((e[0] - lv.lower).abs() < 1e-12);
        prop_assert!((e[1] - lv.upper).abs() < 1e-12);
    }

    #[test]
    fn two_layer_trap_sits_inside_the_gap(
        log_ratio in -0.99..0.99f64, k in 10.0..100.0f64, gap in 0.005..0.05f64,
    ) {
        let r = (log_ratio * k * gap).exp();
        let a = match two_layer_equilibrium(r, 1.0, k, gap).unwrap() {
            TwoLayerTrap::Trap(t) => t.z,
            other => return Err(TestCaseError::fail(format!("{other:?}"))),
        };
        let b = match two_layer_equilibrium(1.0, r, k, gap).unwrap() {
            TwoLayerTrap::Trap(t) => t.z,
            other => return Err(TestCaseError::fail(format!("{other:?}"))),
        };
        prop_assert!(a > 0.0 && a < gap);
        prop_assert!((a + b - gap).abs() < 1e-15 * gap.max(1.0) * 4.0);
        if let TwoLayerTrap::Trap(wider) = two_layer_equilibrium(r, 1.0, k, 2.0 * gap).unwrap() {
            prop_assert!(wider.z > 0.0 && wider.z < 2.0 * gap);
        } else {
            prop_assert!(false, "widening the gap lost the trap");
        }
    }

    #[test]
    fn widening_any_gap_weakens_binding(
        gaps in prop::collection::vec(0.05..1.0f64, 2..6), pick in any::<prop::sample::Index>(), extra in 0.01..0.5f64,
    ) {
        let heights = |g: &[f64]| {
            let mut z = vec![0.0];
            for d in g { z.push(z.last().unwrap() + d); }
            z
        };
        let before = LayerStack::new(heights(&gaps));
        let mut wider = gaps.clone();
        wider[pick.index(gaps.len())] += extra;
        let after = LayerStack::new(heights(&wider));
        prop_assert!(binding_energy(&after).abs() < binding_energy(&before).abs());
        for w in oscillation_widths(&before).unwrap() {
            prop_assert!(w >= before.base_width);
        }
    }

    #[test]
    fn hubbard_ratio_falls_with_height(z in 0.0..0.019f64, n in 5u32..16, dz in 1e-4..1e-3f64) {
        let u = onsite_interaction(0.1).unwrap();
        let lo = hopping(&LatticeGeometry::new(n, z), 0.0, &HubbardOptions::default()) / u;
        let hi = hopping(&LatticeGeometry::new(n, z + dz), 0.0, &HubbardOptions::default()) / u;
        prop_assert!(hi < lo);
        let p = classify_phase(&LatticeGeometry::new(n, z), 1, 0.0, 0.0, &HubbardOptions::default()).unwrap();
        prop_assert!(p.j_over_u > 0.0);
    }

    #[test]
    fn critical_ratio_is_bounded_and_decreasing(n0 in 1u32..200) {
        let f = critical_ratio(n0);
        prop_assert!(f > 0.0 && f <= critical_ratio(1));
        prop_assert!(critical_ratio(n0 + 1) < f);
    }

    #[test]
    fn strain_and_stress_are_symmetric(entries in prop::array::uniform9(-1.0..1.0f64)) {
        let g = Matrix3::from_row_slice(&entries);
        let s = strain_tensor(&g);
        prop_assert_eq!(s, s.transpose());
        let m = ElasticMedium { lame: 1.2, shear: 0.8, density: 1.0 };
        let t = isotropic_stress(&m, &s).unwrap();
        prop_assert!((t - t.transpose()).abs().max() < 1e-15);
    }

    #[test]
    fn decay_constants_have_small_residuals(
        lame in 0.5..3.0f64, shear in 0.5..2.0f64, frac in 0.1..0.95f64, angle in 0.0..(2.0 * PI),
    ) {
        let m = ElasticMedium { lame, shear, density: 1.0 };
        let p = Propagation { angle, velocity: frac * m.shear_velocity(), wavenumber: 1.0 };
        let d = solve_decay_constants(&m, &p).unwrap();
        for (q, r) in d.q.iter().zip(&d.residuals) {
            prop_assert!(q.re > 0.0);
            prop_assert!(*r < 1e-8, "residual {r}");
        }
    }

    #[test]
    fn shielding_forms_agree_on_random_states(seed in 0u64..1000) {
        let cfg = ShieldingConfig {
            sites: 6, hopping: 1.0, onsite: 0.1,
            long_range: LongRange::PowerLaw, form: GeneratorForm::Direct, duration: 1.0,
        };
        let psi = lattice::initial_state(InitialState::Random { seed }, 6).unwrap();
        let a = cfg.evolve(&psi, &OdeOptions::default()).unwrap();
        let b = ShieldingConfig { form: GeneratorForm::Hamiltonian, ..cfg }.evolve(&psi, &OdeOptions::default()).unwrap();
        for (x, y) in a.final_state().iter().zip(b.final_state()) {
            prop_assert!((x - y).norm() < 1e-12);
        }
    }
}
