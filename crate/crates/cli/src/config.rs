//! Experiment configuration: a versioned TOML document with one block per
//! model and optional sweep axes.

use std::fmt;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use sawtrap_core::hubbard::{HubbardOptions, LatticeGeometry, Perturbation};
use sawtrap_core::lattice::{GeneratorForm, LongRange};
use sawtrap_core::trapping::TrapScan;
use sawtrap_core::{
    ElasticMedium, ExternalFieldProfile, IdtLayer, LayerSide, LayerStack, MoleculeSpec, Seeker, StarkUnits,
};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Subcommand {
    Fields,
    Stark,
    TrapMap,
    TrapLayers,
    Multilayer,
    Anderson,
    Shielding,
    HubbardParams,
    PhaseDiagram,
    Acoustics,
}

impl Subcommand {
    pub fn name(self) -> &'static str {
        match self {
            Subcommand::Fields => "fields",
            Subcommand::Stark => "stark",
            Subcommand::TrapMap => "trap-map",
            Subcommand::TrapLayers => "trap-layers",
            Subcommand::Multilayer => "multilayer",
            Subcommand::Anderson => "anderson",
            Subcommand::Shielding => "shielding",
            Subcommand::HubbardParams => "hubbard-params",
            Subcommand::PhaseDiagram => "phase-diagram",
            Subcommand::Acoustics => "acoustics",
        }
    }

    /// Blocks that must be present for this subcommand to run.
    pub fn required_blocks(self) -> &'static [&'static str] {
        match self {
            Subcommand::Fields => &["layer", "fields"],
            Subcommand::Stark => &["layer", "molecule", "stark"],
            Subcommand::TrapMap => &["layer", "trap_map"],
            Subcommand::TrapLayers => &["layer", "molecule", "profile"],
            Subcommand::Multilayer => &["stack"],
            Subcommand::Anderson => &["lattice"],
            Subcommand::Shielding => &["shielding"],
            Subcommand::HubbardParams | Subcommand::PhaseDiagram => &["hubbard"],
            Subcommand::Acoustics => &["acoustics"],
        }
    }
}

impl fmt::Display for Subcommand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}", located("config error", *line, *column, message))]
    Parse { message: String, line: Option<usize>, column: Option<usize> },
    #[error("{}", located(&format!("invalid `{field}`"), *line, None, reason))]
    Invalid { field: String, reason: String, line: Option<usize> },
    #[error("subcommand `{subcommand}` needs a [{block}] block")]
    MissingBlock { subcommand: Subcommand, block: &'static str },
}

fn located(what: &str, line: Option<usize>, column: Option<usize>, detail: &str) -> String {
    match (line, column) {
        (Some(l), Some(c)) => format!("{what} at line {l}, column {c}: {detail}"),
        (Some(l), None) => format!("{what} at line {l}: {detail}"),
        _ => format!("{what}: {detail}"),
    }
}

impl ConfigError {
    pub fn invalid(field: impl Into<String>, reason: impl fmt::Display) -> Self {
        ConfigError::Invalid { field: field.into(), reason: reason.to_string(), line: None }
    }

    /// The dotted field name for validation errors.
    pub fn field(&self) -> Option<&str> {
        match self {
            ConfigError::Invalid { field, .. } => Some(field),
            _ => None,
        }
    }

    fn with_line_from(self, source: &str) -> Self {
        match self {
            ConfigError::Invalid { field, reason, line: None } => {
                let line = locate_key(source, &field);
                ConfigError::Invalid { field, reason, line }
            }
            other => other,
        }
    }
}

/// Line (1-based) where a dotted key such as `layer.D` is assigned.
pub fn locate_key(source: &str, dotted: &str) -> Option<usize> {
    let mut parts: Vec<&str> = dotted.split('.').collect();
    let key = parts.pop()?;
    let table = parts.join(".");
    let mut current = String::new();
    let mut fallback = None;
    for (i, raw) in source.lines().enumerate() {
        let line = raw.trim();
        if let Some(h) = line.strip_prefix('[') {
            current = h.trim_start_matches('[').split(']').next().unwrap_or("").trim().to_string();
            if current == dotted {
                fallback = Some(i + 1);
            }
            continue;
        }
        if current != table {
            continue;
        }
        if let Some((lhs, _)) = line.split_once('=') {
            if lhs.trim().trim_matches('"') == key {
                return Some(i + 1);
            }
        }
    }
    fallback
}

/// Evenly spaced values from `start` to `stop` inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl Axis {
    pub fn values(&self) -> Vec<f64> {
        match self.count {
            0 => Vec::new(),
            1 => vec![self.start],
            n => (0..n).map(|i| self.start + (self.stop - self.start) * i as f64 / (n - 1) as f64).collect(),
        }
    }

    fn check(&self, field: &str) -> Result<(), ConfigError> {
        if !(self.start.is_finite() && self.stop.is_finite()) {
            return Err(ConfigError::invalid(format!("{field}.start"), "axis limits must be finite"));
        }
        if self.count == 0 {
            return Err(ConfigError::invalid(format!("{field}.count"), "must be at least 1"));
        }
        Ok(())
    }
}

fn one_u32() -> u32 {
    1
}
fn one() -> f64 {
    1.0
}
fn lower() -> LayerSide {
    LayerSide::Lower
}
fn unit_drive() -> [f64; 3] {
    [0.0, 0.0, 1.0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerBlock {
    #[serde(default = "one_u32")]
    pub periods: u32,
    /// Give either the wavenumber or the finger width.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wavenumber: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub finger_width: Option<f64>,
    #[serde(default)]
    pub velocity: f64,
    #[serde(default = "unit_drive")]
    pub voltages: [f64; 3],
    #[serde(default = "one")]
    pub coupling: f64,
    #[serde(default = "lower")]
    pub side: LayerSide,
    #[serde(rename = "D")]
    pub gap: f64,
}

impl LayerBlock {
    pub fn build(&self) -> Result<IdtLayer, ConfigError> {
        let finger_width = match (self.wavenumber, self.finger_width) {
            (Some(k), None) => {
                if !(k > 0.0 && k.is_finite()) {
                    return Err(ConfigError::invalid("layer.wavenumber", "must be positive"));
                }
                std::f64::consts::PI / (3.0 * k)
            }
            (None, Some(w)) => w,
            (Some(_), Some(_)) => {
                return Err(ConfigError::invalid("layer.wavenumber", "give the wavenumber or finger_width, not both"))
            }
            (None, None) => {
                return Err(ConfigError::invalid("layer.wavenumber", "wavenumber or finger_width is required"))
            }
        };
        let layer = IdtLayer {
            periods: self.periods,
            finger_width,
            velocity: self.velocity,
            voltages: self.voltages,
            coupling: self.coupling,
            side: self.side,
            gap: self.gap,
        };
        layer.validate().map_err(|e| match e {
            sawtrap_core::saw_field::FieldError::InvalidParameter { field, reason } => {
                let key = match field {
                    "M" => "periods",
                    "v" => "velocity",
                    other => other,
                };
                ConfigError::invalid(format!("layer.{key}"), reason)
            }
            other => ConfigError::invalid("layer", other),
        })?;
        Ok(layer)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnitsName {
    Si,
    Unitless,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum UnitsChoice {
    Named(UnitsName),
    Custom(StarkUnits),
}

/// A preset molecule with optional overrides, or a fully specified one.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MoleculeBlock {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dipole: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub doublet: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rotational_constant: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub j: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<i32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega: Option<i32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seeker: Option<Seeker>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mass: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_level: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub units: Option<UnitsChoice>,
}

impl MoleculeBlock {
    pub fn build(&self) -> Result<MoleculeSpec, ConfigError> {
        let base = match &self.preset {
            Some(p) => Some(MoleculeSpec::preset(p).ok_or_else(|| {
                ConfigError::invalid("molecule.preset", format!("unknown preset `{p}` (known: CO, OH)"))
            })?),
            None => None,
        };
        fn pick<T: Clone>(v: &Option<T>, base: Option<T>, key: &str) -> Result<T, ConfigError> {
            v.clone()
                .or(base)
                .ok_or_else(|| ConfigError::invalid(format!("molecule.{key}"), "required when no preset is given"))
        }
        let b = base.as_ref();
        let spec = MoleculeSpec {
            name: pick(&self.name, b.map(|s| s.name.clone()).or(Some("custom".into())), "name")?,
            dipole: pick(&self.dipole, b.map(|s| s.dipole), "dipole")?,
            doublet: pick(&self.doublet, b.map(|s| s.doublet), "doublet")?,
            rotational_constant: pick(
                &self.rotational_constant,
                b.map(|s| s.rotational_constant),
                "rotational_constant",
            )?,
            j: pick(&self.j, b.map(|s| s.j), "j")?,
            m: pick(&self.m, b.map(|s| s.m), "m")?,
            omega: pick(&self.omega, b.map(|s| s.omega), "omega")?,
            seeker: pick(&self.seeker, b.map(|s| s.seeker), "seeker")?,
            mass: pick(&self.mass, b.map(|s| s.mass), "mass")?,
            mean_level: pick(&self.mean_level, b.map(|s| s.mean_level).or(Some(0.0)), "mean_level")?,
            units: match self.units {
                Some(UnitsChoice::Named(UnitsName::Si)) => StarkUnits::SI,
                Some(UnitsChoice::Named(UnitsName::Unitless)) => StarkUnits::UNITLESS,
                Some(UnitsChoice::Custom(u)) => u,
                None => b.map(|s| s.units).unwrap_or_default(),
            },
        };
        spec.validate().map_err(|sawtrap_core::molecule::MoleculeError::InvalidParameter { field, reason }| {
            ConfigError::invalid(format!("molecule.{field}"), reason)
        })?;
        Ok(spec)
    }
}

fn default_scan_points() -> usize {
    2000
}
fn default_rel_tol() -> f64 {
    1e-11
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanBlock {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z_max: Option<f64>,
    #[serde(default = "default_scan_points")]
    pub scan_points: usize,
    #[serde(default = "default_rel_tol")]
    pub rel_tol: f64,
}

impl ScanBlock {
    pub fn build(&self, layer: &IdtLayer) -> Result<TrapScan, ConfigError> {
        let whole = TrapScan::whole_gap(layer);
        let scan = TrapScan {
            z_min: self.z_min.unwrap_or(whole.z_min),
            z_max: self.z_max.unwrap_or(whole.z_max),
            scan_points: self.scan_points,
            rel_tol: self.rel_tol,
        };
        if !(0.0 <= scan.z_min && scan.z_min < scan.z_max && scan.z_max <= layer.gap) {
            return Err(ConfigError::invalid(
                "scan.z_min",
                format!("window must satisfy 0 <= z_min < z_max <= D = {}", layer.gap),
            ));
        }
        if scan.scan_points < 2 {
            return Err(ConfigError::invalid("scan.scan_points", "must be at least 2"));
        }
        if !(scan.rel_tol > 0.0) {
            return Err(ConfigError::invalid("scan.rel_tol", "must be positive"));
        }
        Ok(scan)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldsBlock {
    pub x: Axis,
    /// Absolute heights in the gap.
    pub z: Axis,
    #[serde(default)]
    pub t: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StarkBlock {
    /// Drive amplitudes at which to evaluate the levels.
    pub amplitude: Axis,
    /// Height at which the field envelope is taken.
    #[serde(default)]
    pub height: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrapMapBlock {
    pub lower_amplitude: Axis,
    pub upper_amplitude: Axis,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StackBlock {
    pub heights: Vec<f64>,
    #[serde(default = "one")]
    pub mass: f64,
    #[serde(default = "one")]
    pub trap_frequency: f64,
    #[serde(default = "default_binding_exponent")]
    pub binding_exponent: f64,
    #[serde(default = "default_base_width")]
    pub base_width: f64,
    #[serde(default = "default_width_coupling")]
    pub width_coupling: f64,
}

fn default_binding_exponent() -> f64 {
    8.0
}
fn default_base_width() -> f64 {
    0.04
}
fn default_width_coupling() -> f64 {
    0.01
}

impl StackBlock {
    pub fn build(&self) -> Result<LayerStack, ConfigError> {
        let stack = LayerStack {
            heights: self.heights.clone(),
            mass: self.mass,
            trap_frequency: self.trap_frequency,
            binding_exponent: self.binding_exponent,
            base_width: self.base_width,
            width_coupling: self.width_coupling,
        };
        if stack.heights.is_empty() {
            return Err(ConfigError::invalid("stack.heights", "need at least one layer"));
        }
        stack.validate().map_err(|e| match e {
            sawtrap_core::multilayer::StackError::InvalidParameter { field, reason } => {
                ConfigError::invalid(format!("stack.{field}"), reason)
            }
            other => ConfigError::invalid("stack", other),
        })?;
        Ok(stack)
    }
}

fn default_duration() -> f64 {
    10.0
}
fn default_samples() -> usize {
    100
}

/// Chains of dipolar-coupled sites at fixed spacing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AndersonBlock {
    pub site_counts: Vec<usize>,
    pub spacing: f64,
    pub coupling: f64,
    pub onsite: f64,
    #[serde(default = "default_duration")]
    pub duration: f64,
    /// Output intervals on `[0, duration]`.
    #[serde(default = "default_samples")]
    pub samples: usize,
}

impl AndersonBlock {
    fn check(&self) -> Result<(), ConfigError> {
        if self.site_counts.is_empty() || self.site_counts.contains(&0) {
            return Err(ConfigError::invalid("lattice.site_counts", "need positive site counts"));
        }
        if !(self.spacing > 0.0 && self.spacing.is_finite()) {
            return Err(ConfigError::invalid("lattice.spacing", "must be positive"));
        }
        if !(self.coupling.is_finite() && self.onsite.is_finite()) {
            return Err(ConfigError::invalid("lattice.coupling", "must be finite"));
        }
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return Err(ConfigError::invalid("lattice.duration", "must be positive"));
        }
        if self.samples == 0 {
            return Err(ConfigError::invalid("lattice.samples", "must be at least 1"));
        }
        Ok(())
    }
}

/// Initial amplitudes; `random` draws from the experiment seed.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialBlock {
    #[default]
    Uniform,
    Site {
        index: usize,
    },
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShieldingBlock {
    pub site_counts: Vec<usize>,
    pub hopping: f64,
    pub onsite: f64,
    pub long_range: LongRange,
    #[serde(default)]
    pub form: GeneratorForm,
    #[serde(default = "default_duration")]
    pub duration: f64,
    #[serde(default)]
    pub initial: InitialBlock,
}

impl ShieldingBlock {
    fn check(&self) -> Result<(), ConfigError> {
        if self.site_counts.is_empty() || self.site_counts.contains(&0) {
            return Err(ConfigError::invalid("shielding.site_counts", "need positive site counts"));
        }
        if !(self.hopping.is_finite() && self.onsite.is_finite()) {
            return Err(ConfigError::invalid("shielding.hopping", "must be finite"));
        }
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return Err(ConfigError::invalid("shielding.duration", "must be positive"));
        }
        if let InitialBlock::Site { index } = self.initial {
            if let Some(n) = self.site_counts.iter().find(|&&n| index >= n) {
                return Err(ConfigError::invalid(
                    "shielding.initial.index",
                    format!("{index} is outside a chain of {n}"),
                ));
            }
        }
        Ok(())
    }
}

fn default_width() -> f64 {
    LatticeGeometry::new(1, 0.0).width
}
fn default_hubbard_wavenumber() -> f64 {
    LatticeGeometry::new(1, 0.0).wavenumber
}
fn default_potential_scale() -> f64 {
    LatticeGeometry::new(1, 0.0).potential_scale
}
fn default_hubbard_mass() -> f64 {
    LatticeGeometry::new(1, 0.0).mass
}
fn default_wannier_length() -> f64 {
    LatticeGeometry::new(1, 0.0).wannier_length
}
fn one_filling() -> u32 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HubbardBlock {
    pub heights: Axis,
    pub site_counts: Vec<u32>,
    #[serde(default = "default_width")]
    pub width: f64,
    #[serde(default = "default_hubbard_wavenumber")]
    pub wavenumber: f64,
    #[serde(default = "default_potential_scale")]
    pub potential_scale: f64,
    #[serde(default = "default_hubbard_mass")]
    pub mass: f64,
    #[serde(default = "default_wannier_length")]
    pub wannier_length: f64,
    #[serde(default = "one_filling")]
    pub filling: u32,
    #[serde(default)]
    pub kinetic: bool,
    /// Thermal suppression exponent in units of U.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thermal: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perturbation: Option<Perturbation>,
}

impl HubbardBlock {
    pub fn geometry(&self) -> LatticeGeometry {
        LatticeGeometry {
            sites: self.site_counts.first().copied().unwrap_or(1),
            width: self.width,
            height: self.heights.start,
            wavenumber: self.wavenumber,
            potential_scale: self.potential_scale,
            mass: self.mass,
            wannier_length: self.wannier_length,
        }
    }

    pub fn options(&self) -> HubbardOptions {
        HubbardOptions { kinetic: self.kinetic, thermal: self.thermal }
    }

    fn check(&self) -> Result<(), ConfigError> {
        self.heights.check("hubbard.heights")?;
        if self.heights.start.min(self.heights.stop) < 0.0 {
            return Err(ConfigError::invalid("hubbard.heights.start", "heights must be non-negative"));
        }
        if self.site_counts.is_empty() || self.site_counts.contains(&0) {
            return Err(ConfigError::invalid("hubbard.site_counts", "need positive site counts"));
        }
        if self.filling == 0 {
            return Err(ConfigError::invalid("hubbard.filling", "must be at least 1"));
        }
        if let Some(t) = self.thermal {
            if !(t >= 0.0 && t.is_finite()) {
                return Err(ConfigError::invalid("hubbard.thermal", "must be non-negative"));
            }
        }
        if let Some(p) = &self.perturbation {
            for (name, [lo, hi]) in [("delta_j", p.delta_j), ("delta_eps", p.delta_eps)] {
                if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                    return Err(ConfigError::invalid(
                        format!("hubbard.perturbation.{name}"),
                        "need a finite [low, high] range",
                    ));
                }
            }
        }
        for (key, v) in [
            ("width", self.width),
            ("potential_scale", self.potential_scale),
            ("mass", self.mass),
            ("wannier_length", self.wannier_length),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(ConfigError::invalid(format!("hubbard.{key}"), "must be positive"));
            }
        }
        self.geometry().validate().map_err(|e| match e {
            sawtrap_core::hubbard::HubbardError::InvalidParameter { field, reason } => {
                ConfigError::invalid(format!("hubbard.{field}"), reason)
            }
            other => ConfigError::invalid("hubbard", other),
        })
    }
}

fn zero() -> f64 {
    0.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AcousticsBlock {
    pub lame: f64,
    pub shear: f64,
    pub density: f64,
    #[serde(default = "zero")]
    pub angle: f64,
    #[serde(default = "one")]
    pub wavenumber: f64,
    pub velocity: Axis,
}

impl AcousticsBlock {
    pub fn medium(&self) -> ElasticMedium {
        ElasticMedium { lame: self.lame, shear: self.shear, density: self.density }
    }

    fn check(&self) -> Result<(), ConfigError> {
        self.velocity.check("acoustics.velocity")?;
        self.medium().validate().map_err(|e| match e {
            sawtrap_core::acoustics::AcousticsError::InvalidParameter { field, reason } => {
                ConfigError::invalid(format!("acoustics.{field}"), reason)
            }
            other => ConfigError::invalid("acoustics", other),
        })?;
        if !(self.angle.is_finite() && self.wavenumber > 0.0 && self.wavenumber.is_finite()) {
            return Err(ConfigError::invalid("acoustics.wavenumber", "must be positive, with a finite angle"));
        }
        Ok(())
    }
}

/// One axis of a Cartesian parameter sweep over a dotted config path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxis {
    pub name: String,
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl SweepAxis {
    pub fn values(&self) -> Vec<f64> {
        Axis { start: self.start, stop: self.stop, count: self.count }.values()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub subcommand: Subcommand,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub layer: Option<LayerBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub molecule: Option<MoleculeBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<ExternalFieldProfile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scan: Option<ScanBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fields: Option<FieldsBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stark: Option<StarkBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trap_map: Option<TrapMapBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stack: Option<StackBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lattice: Option<AndersonBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shielding: Option<ShieldingBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hubbard: Option<HubbardBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub acoustics: Option<AcousticsBlock>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sweep: Vec<SweepAxis>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text =
            std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
        Self::from_toml_str(&text)
    }

    /// Parse and validate; validation errors carry the line of the offending key.
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| {
            let (line, column) = match e.span() {
                Some(span) => {
                    let before = &text[..span.start.min(text.len())];
                    let line = before.matches('\n').count() + 1;
                    let column = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
                    (Some(line), Some(column))
                }
                None => (None, None),
            };
            ConfigError::Parse { message: e.message().trim().to_string(), line, column }
        })?;
        cfg.validate().map_err(|e| e.with_line_from(text))?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String, toml::ser::Error> {
        toml::to_string(self)
    }

    fn block_present(&self, block: &str) -> bool {
        match block {
            "layer" => self.layer.is_some(),
            "molecule" => self.molecule.is_some(),
            "profile" => self.profile.is_some(),
            "fields" => self.fields.is_some(),
            "stark" => self.stark.is_some(),
            "trap_map" => self.trap_map.is_some(),
            "stack" => self.stack.is_some(),
            "lattice" => self.lattice.is_some(),
            "shielding" => self.shielding.is_some(),
            "hubbard" => self.hubbard.is_some(),
            "acoustics" => self.acoustics.is_some(),
            _ => false,
        }
    }

    /// Schema and value checks, including the sweep axes.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(ConfigError::invalid(
                "schema_version",
                format!("unsupported version {} (expected {SCHEMA_VERSION})", self.schema_version),
            ));
        }
        if i64::try_from(self.seed).is_err() {
            return Err(ConfigError::invalid("seed", "must fit in a signed 64-bit integer"));
        }
        self.validate_blocks()?;
        let base = toml::Value::try_from(self).map_err(|e| ConfigError::invalid("sweep", e))?;
        for (i, axis) in self.sweep.iter().enumerate() {
            if !(axis.start.is_finite() && axis.stop.is_finite()) {
                return Err(ConfigError::invalid(format!("sweep[{i}].start"), "axis limits must be finite"));
            }
            if axis.count == 0 {
                return Err(ConfigError::invalid(format!("sweep[{i}].count"), "must be at least 1"));
            }
            match lookup(&base, &axis.name) {
                Some(toml::Value::Float(_)) | Some(toml::Value::Integer(_)) => {}
                Some(_) => {
                    return Err(ConfigError::invalid(
                        format!("sweep[{i}].name"),
                        format!("`{}` is not numeric", axis.name),
                    ))
                }
                None => {
                    return Err(ConfigError::invalid(
                        format!("sweep[{i}].name"),
                        format!("`{}` is not set in this config", axis.name),
                    ))
                }
            }
            if self.sweep[..i].iter().any(|a| a.name == axis.name) {
                return Err(ConfigError::invalid(format!("sweep[{i}].name"), format!("`{}` swept twice", axis.name)));
            }
        }
        Ok(())
    }

    /// Value checks on the blocks only; sweep points go through this.
    pub fn validate_blocks(&self) -> Result<(), ConfigError> {
        for block in self.subcommand.required_blocks() {
            if !self.block_present(block) {
                return Err(ConfigError::MissingBlock { subcommand: self.subcommand, block });
            }
        }
        let layer = self.layer.as_ref().map(LayerBlock::build).transpose()?;
        if let Some(m) = &self.molecule {
            m.build()?;
        }
        if let Some(p) = &self.profile {
            p.validate().map_err(|e| match e {
                sawtrap_core::trapping::TrapError::InvalidParameter { field, reason } => {
                    let f = if field.starts_with("profile.") { field.to_string() } else { format!("profile.{field}") };
                    ConfigError::invalid(f, reason)
                }
                other => ConfigError::invalid("profile", other),
            })?;
        }
        if let (Some(s), Some(l)) = (&self.scan, &layer) {
            s.build(l)?;
        }
        if let Some(f) = &self.fields {
            f.x.check("fields.x")?;
            f.z.check("fields.z")?;
            if let Some(l) = &layer {
                for (name, z) in [("start", f.z.start), ("stop", f.z.stop)] {
                    if !(0.0..=l.gap).contains(&z) {
                        return Err(ConfigError::invalid(
                            format!("fields.z.{name}"),
                            format!("heights must lie in [0, D = {}]", l.gap),
                        ));
                    }
                }
            }
        }
        if let Some(s) = &self.stark {
            s.amplitude.check("stark.amplitude")?;
            if let Some(l) = &layer {
                if !(0.0..=l.gap).contains(&s.height) {
                    return Err(ConfigError::invalid("stark.height", format!("must lie in [0, D = {}]", l.gap)));
                }
            }
        }
        if let Some(t) = &self.trap_map {
            t.lower_amplitude.check("trap_map.lower_amplitude")?;
            t.upper_amplitude.check("trap_map.upper_amplitude")?;
        }
        if let Some(s) = &self.stack {
            s.build()?;
        }
        if let Some(a) = &self.lattice {
            a.check()?;
        }
        if let Some(s) = &self.shielding {
            s.check()?;
        }
        if let Some(h) = &self.hubbard {
            h.check()?;
        }
        if let Some(a) = &self.acoustics {
            a.check()?;
        }
        Ok(())
    }

    /// Copy of this config with the named numeric fields replaced.
    pub fn with_overrides(&self, values: &[(&str, f64)]) -> Result<Self, ConfigError> {
        let mut v = toml::Value::try_from(self).map_err(|e| ConfigError::invalid("sweep", e))?;
        for (path, x) in values {
            let slot = lookup_mut(&mut v, path)
                .ok_or_else(|| ConfigError::invalid(path.to_string(), "not set in this config"))?;
            *slot = match slot {
                toml::Value::Integer(_) => {
                    if x.fract() != 0.0 {
                        return Err(ConfigError::invalid(path.to_string(), format!("{x} is not an integer")));
                    }
                    toml::Value::Integer(*x as i64)
                }
                _ => toml::Value::Float(*x),
            };
        }
        let cfg: ExperimentConfig =
            v.try_into().map_err(|e: toml::de::Error| ConfigError::invalid("sweep", e.message().trim()))?;
        cfg.validate_blocks()?;
        Ok(cfg)
    }
}

fn lookup<'a>(v: &'a toml::Value, path: &str) -> Option<&'a toml::Value> {
    path.split('.').try_fold(v, |v, key| match v {
        toml::Value::Table(t) => t.get(key),
        toml::Value::Array(a) => key.parse::<usize>().ok().and_then(|i| a.get(i)),
        _ => None,
    })
}

fn lookup_mut<'a>(v: &'a mut toml::Value, path: &str) -> Option<&'a mut toml::Value> {
    path.split('.').try_fold(v, |v, key| match v {
        toml::Value::Table(t) => t.get_mut(key),
        toml::Value::Array(a) => key.parse::<usize>().ok().and_then(move |i| a.get_mut(i)),
        _ => None,
    })
}
