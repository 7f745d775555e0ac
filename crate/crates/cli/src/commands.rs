//! One function per subcommand, each producing rows for a fixed header.

use num_complex::Complex64;
use thiserror::Error;

use sawtrap_core::acoustics::{secular_determinant, solve_decay_constants};
use sawtrap_core::hubbard::{self, critical_ratio, onsite_energy, onsite_interaction, phase_diagram, PhaseGrid};
use sawtrap_core::lattice::{self, anderson_evolve, lattice_ode_options, shielding_deviation, LatticeConfig};
use sawtrap_core::molecule::{shifted_splitting, stark_levels};
use sawtrap_core::multilayer::{binding_energy, oscillation_widths};
use sawtrap_core::numerics::OutputGrid;
use sawtrap_core::saw_field::{field_closed_form, field_envelope, field_finger_sum, potential_in_gap};
use sawtrap_core::trapping::{find_trap_layers, two_layer_equilibrium, BandEdge, TrapScan};
use sawtrap_core::{InitialState, Propagation, ShieldingConfig, Stability, TwoLayerTrap};

use crate::config::{ConfigError, ExperimentConfig, InitialBlock, Subcommand};
use crate::table::Cell;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("numerical failure: {0}")]
    Numeric(String),
}

macro_rules! numeric_from {
    ($($t:ty),*) => {$(
        impl From<$t> for RunError {
            fn from(e: $t) -> Self {
                RunError::Numeric(e.to_string())
            }
        }
    )*};
}

numeric_from!(
    sawtrap_core::saw_field::FieldError,
    sawtrap_core::trapping::TrapError,
    sawtrap_core::multilayer::StackError,
    sawtrap_core::lattice::LatticeError,
    sawtrap_core::hubbard::HubbardError,
    sawtrap_core::acoustics::AcousticsError
);

pub fn columns(sub: Subcommand) -> &'static [&'static str] {
    match sub {
        Subcommand::Fields => &["x", "z", "potential", "ex", "ez", "ex_closed_form", "ez_closed_form"],
        Subcommand::Stark => &["amplitude", "field", "upper", "lower", "trapping", "gap"],
        Subcommand::TrapMap => &["lower_amplitude", "upper_amplitude", "z0", "z0_over_d", "status"],
        Subcommand::TrapLayers => &["z", "z_over_d", "stability", "residual_force"],
        Subcommand::Multilayer => &["layer", "height", "width", "binding_energy"],
        Subcommand::Anderson => &["sites", "t", "p1", "norm", "time_averaged_p1"],
        Subcommand::Shielding => &["sites", "deviation", "norm_drift"],
        Subcommand::HubbardParams => {
            &["height", "sites", "spacing", "hopping", "interaction", "onsite", "j_over_u", "critical_ratio"]
        }
        Subcommand::PhaseDiagram => &[
            "height",
            "sites",
            "delta_j",
            "delta_eps",
            "hopping",
            "interaction",
            "onsite",
            "j_over_u",
            "eps_over_u",
            "phase",
            "lobe_phase",
        ],
        Subcommand::Acoustics => {
            &["velocity", "root", "q_squared_re", "q_squared_im", "q_re", "q_im", "residual", "repeated", "det_at_zero"]
        }
    }
}

/// Rows for a single (non-swept) configuration.
pub fn execute(cfg: &ExperimentConfig) -> Result<Vec<Vec<Cell>>, RunError> {
    cfg.validate_blocks()?;
    match cfg.subcommand {
        Subcommand::Fields => fields(cfg),
        Subcommand::Stark => stark(cfg),
        Subcommand::TrapMap => trap_map(cfg),
        Subcommand::TrapLayers => trap_layers(cfg),
        Subcommand::Multilayer => multilayer(cfg),
        Subcommand::Anderson => anderson(cfg),
        Subcommand::Shielding => shielding(cfg),
        Subcommand::HubbardParams => hubbard_params(cfg),
        Subcommand::PhaseDiagram => phase(cfg),
        Subcommand::Acoustics => acoustics(cfg),
    }
}

fn block<'a, T>(b: &'a Option<T>, sub: Subcommand, name: &'static str) -> Result<&'a T, ConfigError> {
    b.as_ref().ok_or(ConfigError::MissingBlock { subcommand: sub, block: name })
}

fn fields(cfg: &ExperimentConfig) -> Result<Vec<Vec<Cell>>, RunError> {
    let layer = block(&cfg.layer, cfg.subcommand, "layer")?.build()?;
    let grid = block(&cfg.fields, cfg.subcommand, "fields")?;
    let mut rows = Vec::new();
    for z in grid.z.values() {
        for x in grid.x.values() {
            let phi = potential_in_gap(&layer, x, z, grid.t)?;
            let f = field_finger_sum(&layer, x, z, grid.t)?;
            let (cx, cz) = if layer.closed_form_applies() {
                let c = field_closed_form(&layer, layer.drive_amplitude(), x, z, grid.t)?;
                (c.ex.into(), c.ez.into())
            } else {
                (Cell::Empty, Cell::Empty)
            };
            rows.push(vec![x.into(), z.into(), phi.into(), f.ex.into(), f.ez.into(), cx, cz]);
        }
    }
    Ok(rows)
}

fn stark(cfg: &ExperimentConfig) -> Result<Vec<Vec<Cell>>, RunError> {
    let layer = block(&cfg.layer, cfg.subcommand, "layer")?.build()?;
    let spec = block(&cfg.molecule, cfg.subcommand, "molecule")?.build()?;
    let grid = block(&cfg.stark, cfg.subcommand, "stark")?;
    let splitting = shifted_splitting(&spec, layer.wavenumber(), layer.velocity);
    let mut rows = Vec::new();
    for amp in grid.amplitude.values() {
        let field = field_envelope(&layer, amp, grid.height)?.abs();
        let lv = stark_levels(&spec, field, splitting);
        rows.push(vec![
            amp.into(),
            field.into(),
            lv.upper.into(),
            lv.lower.into(),
            lv.trapping.into(),
            lv.gap().into(),
        ]);
    }
    Ok(rows)
}

fn trap_map(cfg: &ExperimentConfig) -> Result<Vec<Vec<Cell>>, RunError> {
    let layer = block(&cfg.layer, cfg.subcommand, "layer")?.build()?;
    let grid = block(&cfg.trap_map, cfg.subcommand, "trap_map")?;
    let (k, d) = (layer.wavenumber(), layer.gap);
    let mut rows = Vec::new();
    for u1 in grid.lower_amplitude.values() {
        for u2 in grid.upper_amplitude.values() {
            let row = match two_layer_equilibrium(u1, u2, k, d)? {
                TwoLayerTrap::Trap(t) => vec![u1.into(), u2.into(), t.z.into(), (t.z / d).into(), "trap".into()],
                TwoLayerTrap::NoTrap { violated, .. } => {
                    let status = match violated {
                        BandEdge::Lower => "no_trap_below",
                        BandEdge::Upper => "no_trap_above",
                    };
                    vec![u1.into(), u2.into(), Cell::Empty, Cell::Empty, status.into()]
                }
            };
            rows.push(row);
        }
    }
    Ok(rows)
}

fn stability_label(s: Stability) -> &'static str {
    match s {
        Stability::Stable => "stable",
        Stability::Unstable => "unstable",
        Stability::Marginal => "marginal",
    }
}

fn trap_layers(cfg: &ExperimentConfig) -> Result<Vec<Vec<Cell>>, RunError> {
    let layer = block(&cfg.layer, cfg.subcommand, "layer")?.build()?;
    let spec = block(&cfg.molecule, cfg.subcommand, "molecule")?.build()?;
    let profile = block(&cfg.profile, cfg.subcommand, "profile")?;
    let scan = match &cfg.scan {
        Some(s) => s.build(&layer)?,
        None => TrapScan::whole_gap(&layer),
    };
    let found = find_trap_layers(profile, &layer, &spec, &scan)?;
    Ok(found
        .iter()
        .map(|t| {
            vec![t.z.into(), (t.z / layer.gap).into(), stability_label(t.stability).into(), t.residual_force.into()]
        })
        .collect())
}

fn multilayer(cfg: &ExperimentConfig) -> Result<Vec<Vec<Cell>>, RunError> {
    let stack = block(&cfg.stack, cfg.subcommand, "stack")?.build()?;
    let eb = binding_energy(&stack);
    let widths = oscillation_widths(&stack)?;
    Ok(stack
        .heights
        .iter()
        .zip(&widths)
        .enumerate()
        .map(|(i, (&z, &w))| vec![(i + 1).into(), z.into(), w.into(), eb.into()])
        .collect())
}

fn anderson(cfg: &ExperimentConfig) -> Result<Vec<Vec<Cell>>, RunError> {
    let b = block(&cfg.lattice, cfg.subcommand, "lattice")?;
    let mut rows = Vec::new();
    for &n in &b.site_counts {
        let chain = LatticeConfig::chain(n, b.spacing, b.coupling, b.onsite);
        let p0 = lattice::initial_state(InitialState::Site { index: 0 }, n)?;
        let opts = sawtrap_core::OdeOptions { output: OutputGrid::Uniform(b.samples), ..lattice_ode_options() };
        let traj = anderson_evolve(&chain, &p0, b.duration, &opts)?;
        let avg = lattice::time_averaged_return(&chain, b.duration)?;
        for ((t, p1), norm) in traj.times.iter().zip(traj.populations(0)).zip(traj.norms()) {
            rows.push(vec![n.into(), (*t).into(), p1.into(), norm.into(), avg.into()]);
        }
    }
    Ok(rows)
}

fn shielding(cfg: &ExperimentConfig) -> Result<Vec<Vec<Cell>>, RunError> {
    let b = block(&cfg.shielding, cfg.subcommand, "shielding")?;
    let kind = match b.initial {
        InitialBlock::Uniform => InitialState::Uniform,
        InitialBlock::Site { index } => InitialState::Site { index },
        InitialBlock::Random => InitialState::Random { seed: cfg.seed },
    };
    let mut rows = Vec::new();
    for &n in &b.site_counts {
        let sc = ShieldingConfig {
            sites: n,
            hopping: b.hopping,
            onsite: b.onsite,
            long_range: b.long_range,
            form: b.form,
            duration: b.duration,
        };
        let psi = lattice::initial_state(kind, n)?;
        let out = shielding_deviation(&sc, &psi, &lattice_ode_options())?;
        rows.push(vec![n.into(), out.deviation.into(), out.norm_drift.into()]);
    }
    Ok(rows)
}

fn hubbard_params(cfg: &ExperimentConfig) -> Result<Vec<Vec<Cell>>, RunError> {
    let b = block(&cfg.hubbard, cfg.subcommand, "hubbard")?;
    let base = b.geometry();
    let opts = b.options();
    let u = onsite_interaction(base.mass)?;
    let mut rows = Vec::new();
    for z in b.heights.values() {
        for &n in &b.site_counts {
            let geom = hubbard::LatticeGeometry { sites: n, height: z, ..base.clone() };
            geom.validate()?;
            let j = hubbard::hopping(&geom, 0.0, &opts);
            let eps = onsite_energy(&geom, 0.0);
            rows.push(vec![
                z.into(),
                n.into(),
                geom.spacing().into(),
                j.into(),
                u.into(),
                eps.into(),
                (j / u).into(),
                critical_ratio(b.filling).into(),
            ]);
        }
    }
    Ok(rows)
}

fn phase(cfg: &ExperimentConfig) -> Result<Vec<Vec<Cell>>, RunError> {
    let b = block(&cfg.hubbard, cfg.subcommand, "hubbard")?;
    let grid = PhaseGrid { heights: b.heights.values(), site_counts: b.site_counts.clone() };
    let points = phase_diagram(&b.geometry(), &grid, b.filling, b.perturbation.as_ref(), cfg.seed, &b.options())?;
    Ok(points
        .iter()
        .map(|p| {
            vec![
                p.height.into(),
                p.sites.into(),
                p.delta_j.into(),
                p.delta_eps.into(),
                p.hopping.into(),
                p.interaction.into(),
                p.onsite.into(),
                p.j_over_u.into(),
                p.eps_over_u.into(),
                p.phase.label().into(),
                p.lobe_phase.label().into(),
            ]
        })
        .collect())
}

fn acoustics(cfg: &ExperimentConfig) -> Result<Vec<Vec<Cell>>, RunError> {
    let b = block(&cfg.acoustics, cfg.subcommand, "acoustics")?;
    let medium = b.medium();
    let mut rows = Vec::new();
    for v in b.velocity.values() {
        let prop = Propagation { angle: b.angle, velocity: v, wavenumber: b.wavenumber };
        let d = solve_decay_constants(&medium, &prop)?;
        let det0 = secular_determinant(&medium, &prop, Complex64::new(0.0, 0.0)).norm();
        for (i, ((q2, q), r)) in d.q_squared.iter().zip(&d.q).zip(&d.residuals).enumerate() {
            rows.push(vec![
                v.into(),
                (i + 1).into(),
                q2.re.into(),
                q2.im.into(),
                q.re.into(),
                q.im.into(),
                (*r).into(),
                d.repeated.into(),
                det0.into(),
            ]);
        }
    }
    Ok(rows)
}
