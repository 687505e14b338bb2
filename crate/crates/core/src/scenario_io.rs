//! Scenario files, the built-in preset, sweeps and report emission.
//!
//! Scenario files are flat `section.key = value` text. Lines starting with
//! `#` are comments. Angles are written in degrees (a value ending in `rad`
//! is taken as radians). Every key is optional and defaults to the
//! `paper-table` preset; unknown or repeated keys are rejected.

use crate::cir::{self, DcMethod, Link, LinkResult, MotionState, PathClass};
use crate::error::{Error, Result};
use crate::geometry::{
    ellipse_from_axes, AnglePair, EllipseGeometry, GeometryBackend, HeadlampLayout, Side, SphereGeometry,
    SubModel,
};
use crate::noise_snr::{self, NoiseConfig};
use crate::optics::{self, Headlamp, LensGainMode, OpticalReceiver, DEFAULT_LUMINOUS_EFFICACY};
use crate::oracle;
use crate::scatterfield::VmfField;
use sha2::{Digest, Sha256};
use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;

/// Link length used for the DC-gain comparisons of the discrepancy report.
pub const REFERENCE_DISTANCE: f64 = 10.0;

/// Monte-Carlo sample count used by [`validate`].
pub const VALIDATION_MC_SAMPLES: usize = 1_000_000;

/// Geometry draws per surface used by [`validate`].
pub const VALIDATION_GEOMETRY_DRAWS: usize = 1000;

/// The six scatterer populations, indexed by surface then side.
#[derive(Debug, Clone, PartialEq)]
pub struct VmfFields {
    fields: [[VmfField; 2]; 3],
}

fn slot(kind: SubModel, side: Side) -> (usize, usize) {
    let k = match kind {
        SubModel::TxSphere => 0,
        SubModel::RxSphere => 1,
        SubModel::Cylinder => 2,
    };
    (k, if side == Side::Left { 0 } else { 1 })
}

impl VmfFields {
    /// Mirror-symmetric populations: the right side takes azimuth `-α₀`.
    pub fn symmetric(left_mean: AnglePair, concentration: f64, count: usize) -> Self {
        let fields = SubModel::ALL.map(|kind| {
            [
                VmfField::new(left_mean, concentration, count, kind, Side::Left),
                VmfField::new(left_mean.mirrored(), concentration, count, kind, Side::Right),
            ]
        });
        Self { fields }
    }

    pub fn get(&self, kind: SubModel, side: Side) -> &VmfField {
        let (k, s) = slot(kind, side);
        &self.fields[k][s]
    }

    pub fn get_mut(&mut self, kind: SubModel, side: Side) -> &mut VmfField {
        let (k, s) = slot(kind, side);
        &mut self.fields[k][s]
    }

    pub fn iter(&self) -> impl Iterator<Item = &VmfField> {
        self.fields.iter().flatten()
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut VmfField> {
        self.fields.iter_mut().flatten()
    }
}

/// A complete, validated simulation scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    /// Ellipse at the configured axes; per-instant ellipses keep `b` and
    /// place the foci at the current link length.
    pub ellipse: EllipseGeometry,
    pub spheres: SphereGeometry,
    pub layout: HeadlampLayout,
    /// Headlamp height above the road (m).
    pub tx_height: f64,
    /// Photodetector height above the road (m).
    pub rx_height: f64,
    pub lamp: Headlamp,
    pub luminous_efficacy: f64,
    pub receiver: OpticalReceiver,
    pub motion: MotionState,
    pub vmf_fields: VmfFields,
    pub rho_vehicles: f64,
    pub rho_roadside: f64,
    pub noise: NoiseConfig,
    pub backend: GeometryBackend,
    /// Sweep time step (s).
    pub time_step: f64,
    pub seed: u64,
    /// Recorded road metadata (m); not used by the propagation model.
    pub lane_width: f64,
    pub roadside_width: f64,
}

fn kmh(v: f64) -> f64 {
    v / 3.6
}

/// The parameter table preset.
pub fn paper_table() -> ScenarioConfig {
    let deg = f64::to_radians;
    let lamp = Headlamp::from_intensity(1.0, 8830.0, DEFAULT_LUMINOUS_EFFICACY).expect("preset lamp is valid");
    ScenarioConfig {
        ellipse: ellipse_from_axes(40.0, 19.0).expect("preset ellipse is valid"),
        spheres: SphereGeometry { radius_tx: 4.0, radius_rx: 4.0 },
        layout: HeadlampLayout::symmetric(0.6),
        tx_height: 0.6,
        rx_height: 0.6,
        lamp,
        luminous_efficacy: DEFAULT_LUMINOUS_EFFICACY,
        receiver: OpticalReceiver {
            area: 1e-4,
            fov: deg(80.0),
            refractive_index: 1.5,
            filter_transmission: 1.0,
            responsivity: 0.54,
            lens_gain_mode: LensGainMode::ConstantCpc,
        },
        motion: MotionState {
            v_tx: kmh(21.6),
            v_rx: kmh(14.4),
            gamma_tx: 0.0,
            gamma_rx: 0.0,
            d0: 70.0,
            stop_distance: 6.0,
        },
        vmf_fields: VmfFields::symmetric(AnglePair { azimuth: deg(10.0), elevation: deg(2.0) }, 30.0, 100),
        rho_vehicles: 0.8,
        rho_roadside: 0.4,
        noise: NoiseConfig::default(),
        backend: GeometryBackend::Oracle,
        time_step: 0.1,
        seed: 0,
        lane_width: 3.5,
        roadside_width: 2.2,
    }
}

/// Look up a preset by name.
pub fn preset(name: &str) -> Result<ScenarioConfig> {
    match name {
        "paper-table" => Ok(paper_table()),
        other => Err(Error::Validation(format!("unknown preset '{other}' (available: paper-table)"))),
    }
}

fn invalid(e: Error) -> Error {
    match e {
        Error::InvalidParameter(m) | Error::Singular(m) => Error::Validation(m),
        other => other,
    }
}

impl ScenarioConfig {
    /// Check every component invariant; failures name the violated invariant.
    pub fn validate(&self) -> Result<()> {
        let e = &self.ellipse;
        ellipse_from_axes(e.a, e.b).map_err(invalid)?;
        SphereGeometry::new(self.spheres.radius_tx, self.spheres.radius_rx).map_err(invalid)?;
        self.spheres.check_against(self.motion.stop_distance).map_err(invalid)?;
        self.layout.validate().map_err(invalid)?;
        if !(self.tx_height.is_finite() && self.rx_height.is_finite()) {
            return Err(Error::Validation("heights must be finite".into()));
        }
        self.lamp.validate().map_err(invalid)?;
        if !(self.luminous_efficacy > 0.0) {
            return Err(Error::Validation("luminous efficacy must be > 0".into()));
        }
        self.receiver.validate().map_err(invalid)?;
        self.motion.validate().map_err(invalid)?;
        for kind in SubModel::ALL {
            for side in Side::BOTH {
                let f = self.vmf_fields.get(kind, side);
                if f.region != kind || f.side != side {
                    return Err(Error::Validation(format!(
                        "scatterer field tags do not match slot {}.{}",
                        kind.label(),
                        side.label()
                    )));
                }
                f.validate().map_err(invalid)?;
            }
        }
        for (name, rho) in [("vehicles", self.rho_vehicles), ("roadside", self.rho_roadside)] {
            if !(0.0..=1.0).contains(&rho) {
                return Err(Error::Validation(format!("reflectivity {name} = {rho} outside [0, 1]")));
            }
        }
        self.noise.validate().map_err(invalid)?;
        if !(self.time_step > 0.0 && self.time_step.is_finite()) {
            return Err(Error::Validation("time step must be > 0".into()));
        }
        Ok(())
    }

    /// Short content hash of the emitted configuration.
    pub fn fingerprint(&self) -> String {
        let digest = Sha256::digest(emit(self).as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Transmit power implied by the photometric inputs, if any.
    fn derived_tx_power(&self) -> Option<f64> {
        self.lamp
            .luminous_intensity_peak
            .map(|cd| optics::tx_power_from_intensity(self.lamp.mode_number, cd, self.luminous_efficacy))
    }
}

// ---------------------------------------------------------------------------
// Parsing and emission
// ---------------------------------------------------------------------------

/// Parsed-but-unassembled values that depend on each other.
struct Pending {
    a: f64,
    b: f64,
    tx_power: Option<f64>,
    right_azimuth_set: [bool; 3],
}

fn parse_err(line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, column, message: message.into() }
}

fn num(v: &str) -> std::result::Result<f64, String> {
    v.parse::<f64>().map_err(|_| format!("expected a number, found '{v}'"))
}

fn angle(v: &str) -> std::result::Result<f64, String> {
    match v.strip_suffix("rad") {
        Some(r) => num(r.trim()),
        None => num(v).map(f64::to_radians),
    }
}

fn boolean(v: &str) -> std::result::Result<bool, String> {
    v.parse::<bool>().map_err(|_| format!("expected true or false, found '{v}'"))
}

fn integer<T: std::str::FromStr>(v: &str) -> std::result::Result<T, String> {
    v.parse::<T>().map_err(|_| format!("expected a non-negative integer, found '{v}'"))
}

fn sub_model_key(s: &str) -> Option<SubModel> {
    SubModel::ALL.into_iter().find(|k| k.label() == s)
}

fn side_key(s: &str) -> Option<Side> {
    Side::BOTH.into_iter().find(|k| k.label() == s)
}

fn apply(cfg: &mut ScenarioConfig, p: &mut Pending, key: &str, v: &str) -> std::result::Result<bool, String> {
    let n = &mut cfg.noise;
    match key {
        "ellipse.a_m" => p.a = num(v)?,
        "ellipse.b_m" => p.b = num(v)?,
        "spheres.radius_tx_m" => cfg.spheres.radius_tx = num(v)?,
        "spheres.radius_rx_m" => cfg.spheres.radius_rx = num(v)?,
        "layout.half_separation_m" => cfg.layout.half_separation = num(v)?,
        "layout.delta_left_m" => cfg.layout.delta_left = num(v)?,
        "layout.delta_right_m" => cfg.layout.delta_right = num(v)?,
        "layout.tilt_azimuth_deg" => cfg.layout.tilt_azimuth = angle(v)?,
        "layout.tilt_elevation_deg" => cfg.layout.tilt_elevation = angle(v)?,
        "layout.tx_height_m" => cfg.tx_height = num(v)?,
        "lamp.mode_number" => cfg.lamp.mode_number = num(v)?,
        "lamp.tx_power_w" => p.tx_power = Some(num(v)?),
        "lamp.luminous_intensity_cd" => cfg.lamp.luminous_intensity_peak = Some(num(v)?),
        "lamp.luminous_efficacy_lm_per_w" => cfg.luminous_efficacy = num(v)?,
        "receiver.area_m2" => cfg.receiver.area = num(v)?,
        "receiver.height_m" => cfg.rx_height = num(v)?,
        "receiver.fov_deg" => cfg.receiver.fov = angle(v)?,
        "receiver.refractive_index" => cfg.receiver.refractive_index = num(v)?,
        "receiver.filter_transmission" => cfg.receiver.filter_transmission = num(v)?,
        "receiver.responsivity_a_per_w" => cfg.receiver.responsivity = num(v)?,
        "receiver.lens_gain_mode" => cfg.receiver.lens_gain_mode = v.parse().map_err(|e: Error| e.to_string())?,
        "motion.v_tx_mps" => cfg.motion.v_tx = num(v)?,
        "motion.v_rx_mps" => cfg.motion.v_rx = num(v)?,
        "motion.gamma_tx_deg" => cfg.motion.gamma_tx = angle(v)?,
        "motion.gamma_rx_deg" => cfg.motion.gamma_rx = angle(v)?,
        "motion.d0_m" => cfg.motion.d0 = num(v)?,
        "motion.stop_distance_m" => cfg.motion.stop_distance = num(v)?,
        "reflectivity.vehicles" => cfg.rho_vehicles = num(v)?,
        "reflectivity.roadside" => cfg.rho_roadside = num(v)?,
        "noise.bandwidth_hz" => n.bandwidth = num(v)?,
        "noise.bg_current_a" => n.bg_current = num(v)?,
        "noise.dark_current_a" => n.dark_current = num(v)?,
        "noise.i2" => n.i2 = num(v)?,
        "noise.i3" => n.i3 = num(v)?,
        "noise.fet_noise_factor" => n.fet_noise_factor = num(v)?,
        "noise.open_loop_gain" => n.open_loop_gain = num(v)?,
        "noise.transconductance_s" => n.transconductance = num(v)?,
        "noise.pd_capacitance_f_per_m2" => n.pd_capacitance_per_area = num(v)?,
        "noise.temperature_k" => n.temperature = num(v)?,
        "noise.boltzmann_j_per_k" => n.boltzmann = num(v)?,
        "noise.electron_charge_c" => n.electron_charge = num(v)?,
        "sim.geometry_backend" => cfg.backend = v.parse().map_err(|e: Error| e.to_string())?,
        "sim.time_step_s" => cfg.time_step = num(v)?,
        "sim.seed" => cfg.seed = integer(v)?,
        "meta.lane_width_m" => cfg.lane_width = num(v)?,
        "meta.roadside_width_m" => cfg.roadside_width = num(v)?,
        _ => {
            let parts: Vec<&str> = key.split('.').collect();
            let ["vmf", model, side, field] = parts.as_slice() else { return Ok(false) };
            let (Some(kind), Some(side)) = (sub_model_key(model), side_key(side)) else { return Ok(false) };
            let f = cfg.vmf_fields.get_mut(kind, side);
            match *field {
                "azimuth_deg" => {
                    f.mean.azimuth = angle(v)?;
                    if side == Side::Right {
                        p.right_azimuth_set[slot(kind, side).0] = true;
                    }
                }
                "elevation_deg" => f.mean.elevation = angle(v)?,
                "concentration" => f.concentration = num(v)?,
                "count" => f.count = integer(v)?,
                "planar" => f.planar = boolean(v)?,
                _ => return Ok(false),
            }
        }
    }
    Ok(true)
}

/// Parse scenario text on top of the preset.
pub fn parse(text: &str) -> Result<ScenarioConfig> {
    let mut cfg = paper_table();
    let mut p = Pending {
        a: cfg.ellipse.a,
        b: cfg.ellipse.b,
        tx_power: None,
        right_azimuth_set: [false; 3],
    };
    let mut seen = HashSet::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("");
        if content.trim().is_empty() {
            continue;
        }
        let Some(eq) = content.find('=') else {
            let col = content.len() - content.trim_start().len() + 1;
            return Err(parse_err(line, col, "expected 'key = value'"));
        };
        let key = content[..eq].trim();
        let key_col = content.len() - content.trim_start().len() + 1;
        let value_part = &content[eq + 1..];
        let value = value_part.trim();
        let value_col = eq + 2 + (value_part.len() - value_part.trim_start().len());
        if key.is_empty() {
            return Err(parse_err(line, key_col, "missing key"));
        }
        if value.is_empty() {
            return Err(parse_err(line, value_col, format!("missing value for '{key}'")));
        }
        if !seen.insert(key.to_string()) {
            return Err(parse_err(line, key_col, format!("duplicate key '{key}'")));
        }
        match apply(&mut cfg, &mut p, key, value) {
            Ok(true) => {}
            Ok(false) => return Err(parse_err(line, key_col, format!("unknown key '{key}'"))),
            Err(msg) => return Err(parse_err(line, value_col, msg)),
        }
    }
    cfg.ellipse = ellipse_from_axes(p.a, p.b).map_err(invalid)?;
    for kind in SubModel::ALL {
        if !p.right_azimuth_set[slot(kind, Side::Left).0] {
            let left = cfg.vmf_fields.get(kind, Side::Left).mean.mirrored().azimuth;
            cfg.vmf_fields.get_mut(kind, Side::Right).mean.azimuth = left;
        }
    }
    cfg.lamp.tx_power = match p.tx_power {
        Some(w) => w,
        None => cfg.derived_tx_power().unwrap_or(cfg.lamp.tx_power),
    };
    cfg.validate()?;
    Ok(cfg)
}

/// Load and validate a scenario file.
pub fn load_scenario(path: impl AsRef<Path>) -> Result<ScenarioConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse(&text)
}

/// Degrees text that converts back to exactly `rad`.
fn degrees_text(rad: f64) -> String {
    let d = rad.to_degrees();
    if d.to_radians() == rad {
        return format!("{d}");
    }
    let mut lo = d;
    let mut hi = d;
    for _ in 0..64 {
        lo = lo.next_down();
        hi = hi.next_up();
        for c in [lo, hi] {
            if c.to_radians() == rad {
                return format!("{c}");
            }
        }
    }
    format!("{rad}rad")
}

/// Emit every key of `cfg` so that [`parse`] reproduces it exactly.
/// Shortest round-tripping text for a real, in exponent form when tiny or huge.
fn real(v: f64) -> String {
    if v != 0.0 && !(1e-3..1e7).contains(&v.abs()) {
        format!("{v:e}")
    } else {
        v.to_string()
    }
}

pub fn emit(cfg: &ScenarioConfig) -> String {
    let mut s = String::new();
    let mut kv = |k: &str, v: String| {
        let _ = writeln!(s, "{k} = {v}");
    };
    kv("ellipse.a_m", real(cfg.ellipse.a));
    kv("ellipse.b_m", real(cfg.ellipse.b));
    kv("spheres.radius_tx_m", real(cfg.spheres.radius_tx));
    kv("spheres.radius_rx_m", real(cfg.spheres.radius_rx));
    let l = &cfg.layout;
    kv("layout.half_separation_m", real(l.half_separation));
    kv("layout.delta_left_m", real(l.delta_left));
    kv("layout.delta_right_m", real(l.delta_right));
    kv("layout.tilt_azimuth_deg", degrees_text(l.tilt_azimuth));
    kv("layout.tilt_elevation_deg", degrees_text(l.tilt_elevation));
    kv("layout.tx_height_m", real(cfg.tx_height));
    kv("lamp.mode_number", real(cfg.lamp.mode_number));
    if let Some(cd) = cfg.lamp.luminous_intensity_peak {
        kv("lamp.luminous_intensity_cd", real(cd));
    }
    kv("lamp.luminous_efficacy_lm_per_w", real(cfg.luminous_efficacy));
    if cfg.derived_tx_power() != Some(cfg.lamp.tx_power) {
        kv("lamp.tx_power_w", real(cfg.lamp.tx_power));
    }
    let r = &cfg.receiver;
    kv("receiver.area_m2", real(r.area));
    kv("receiver.height_m", real(cfg.rx_height));
    kv("receiver.fov_deg", degrees_text(r.fov));
    kv("receiver.refractive_index", real(r.refractive_index));
    kv("receiver.filter_transmission", real(r.filter_transmission));
    kv("receiver.responsivity_a_per_w", real(r.responsivity));
    kv("receiver.lens_gain_mode", r.lens_gain_mode.label().to_string());
    let m = &cfg.motion;
    kv("motion.v_tx_mps", real(m.v_tx));
    kv("motion.v_rx_mps", real(m.v_rx));
    kv("motion.gamma_tx_deg", degrees_text(m.gamma_tx));
    kv("motion.gamma_rx_deg", degrees_text(m.gamma_rx));
    kv("motion.d0_m", real(m.d0));
    kv("motion.stop_distance_m", real(m.stop_distance));
    for kind in SubModel::ALL {
        for side in Side::BOTH {
            let f = cfg.vmf_fields.get(kind, side);
            let prefix = format!("vmf.{}.{}", kind.label(), side.label());
            let mirrored = cfg.vmf_fields.get(kind, Side::Left).mean.mirrored().azimuth;
            if side == Side::Left || f.mean.azimuth != mirrored {
                kv(&format!("{prefix}.azimuth_deg"), degrees_text(f.mean.azimuth));
            }
            kv(&format!("{prefix}.elevation_deg"), degrees_text(f.mean.elevation));
            kv(&format!("{prefix}.concentration"), real(f.concentration));
            kv(&format!("{prefix}.count"), f.count.to_string());
            kv(&format!("{prefix}.planar"), f.planar.to_string());
        }
    }
    kv("reflectivity.vehicles", real(cfg.rho_vehicles));
    kv("reflectivity.roadside", real(cfg.rho_roadside));
    let n = &cfg.noise;
    kv("noise.bandwidth_hz", real(n.bandwidth));
    kv("noise.bg_current_a", real(n.bg_current));
    kv("noise.dark_current_a", real(n.dark_current));
    kv("noise.i2", real(n.i2));
    kv("noise.i3", real(n.i3));
    kv("noise.fet_noise_factor", real(n.fet_noise_factor));
    kv("noise.open_loop_gain", real(n.open_loop_gain));
    kv("noise.transconductance_s", real(n.transconductance));
    kv("noise.pd_capacitance_f_per_m2", real(n.pd_capacitance_per_area));
    kv("noise.temperature_k", real(n.temperature));
    kv("noise.boltzmann_j_per_k", real(n.boltzmann));
    kv("noise.electron_charge_c", real(n.electron_charge));
    kv("sim.geometry_backend", cfg.backend.label().to_string());
    kv("sim.time_step_s", real(cfg.time_step));
    kv("sim.seed", cfg.seed.to_string());
    kv("meta.lane_width_m", real(cfg.lane_width));
    kv("meta.roadside_width_m", real(cfg.roadside_width));
    s
}

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

/// The quantity varied by a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepVariable {
    /// Link length (m). An empty value list walks the trajectory at the
    /// scenario time step.
    Distance,
    /// Concentration of every scatterer population.
    K,
    /// Left-population mean azimuth in degrees; the right population mirrors it.
    Alpha0,
    ModeNumber,
}

impl std::str::FromStr for SweepVariable {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "distance" => Ok(SweepVariable::Distance),
            "k" => Ok(SweepVariable::K),
            "alpha0" => Ok(SweepVariable::Alpha0),
            "mode_number" => Ok(SweepVariable::ModeNumber),
            other => Err(Error::InvalidParameter(format!(
                "unknown sweep variable '{other}' (expected distance, k, alpha0 or mode_number)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub variable: SweepVariable,
    pub values: Vec<f64>,
    /// Link length for sweeps over a non-distance variable (m).
    pub distance: f64,
    /// Columns to keep, in schema order; empty keeps all.
    pub outputs: Vec<String>,
}

impl SweepSpec {
    /// Walk the scenario trajectory at its time step.
    pub fn trajectory() -> Self {
        Self { variable: SweepVariable::Distance, values: Vec::new(), distance: REFERENCE_DISTANCE, outputs: Vec::new() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("sweep values must be finite".into()));
        }
        if self.values.is_empty() && self.variable != SweepVariable::Distance {
            return Err(Error::InvalidParameter("sweep values must be non-empty".into()));
        }
        let bad = match self.variable {
            SweepVariable::K => self.values.iter().any(|&k| k < 0.0),
            SweepVariable::ModeNumber => self.values.iter().any(|&m| m < 1.0),
            SweepVariable::Alpha0 => self.values.iter().any(|&a| !(a > -180.0 && a <= 180.0)),
            SweepVariable::Distance => self.values.iter().any(|&d| d <= 0.0),
        };
        if bad {
            return Err(Error::InvalidParameter(format!("sweep values out of range for {:?}", self.variable)));
        }
        Ok(())
    }
}

/// Fixed column order of sweep CSV output.
pub const SWEEP_COLUMNS: [&str; 24] = [
    "value",
    "time_s",
    "distance_m",
    "los_lsh_w",
    "los_rsh_w",
    "sb1_lsh_w",
    "sb1_rsh_w",
    "sb2_lsh_w",
    "sb2_rsh_w",
    "sb3_lsh_w",
    "sb3_rsh_w",
    "total_w",
    "total_bare_w",
    "shot_a2",
    "background_a2",
    "dark_a2",
    "thermal_a2",
    "noise_total_a2",
    "excluded",
    "snr_db",
    "snr_los_db",
    "snr_sb1_db",
    "snr_sb2_db",
    "snr_sb3_db",
];

fn fmt(x: f64) -> String {
    format!("{x:.8e}")
}

fn class_snr_db(scn: &ScenarioConfig, p: f64) -> Result<f64> {
    Ok(noise_snr::snr(&scn.noise, scn.receiver.responsivity, p, scn.receiver.area)?.db)
}

fn sweep_row(scn: &ScenarioConfig, value: f64, r: &LinkResult) -> Result<Vec<String>> {
    let mut row = vec![fmt(value), fmt(r.time), fmt(r.distance)];
    for p in [r.power_los, r.power_sb1, r.power_sb2, r.power_sb3] {
        row.push(fmt(p[0]));
        row.push(fmt(p[1]));
    }
    row.push(fmt(r.power_total));
    row.push(fmt(r.power_total_bare));
    let n = &r.noise;
    for x in [n.shot, n.background, n.dark, n.thermal, n.total] {
        row.push(fmt(x));
    }
    row.push(r.excluded.to_string());
    row.push(fmt(r.snr_db));
    for c in [PathClass::Los, PathClass::Sb1, PathClass::Sb2, PathClass::Sb3] {
        row.push(fmt(class_snr_db(scn, r.class_power(c))?));
    }
    Ok(row)
}

fn column_selection(outputs: &[String]) -> Result<Vec<usize>> {
    if outputs.is_empty() {
        return Ok((0..SWEEP_COLUMNS.len()).collect());
    }
    let mut idx = Vec::new();
    for (i, c) in SWEEP_COLUMNS.iter().enumerate() {
        if outputs.iter().any(|o| o == c) {
            idx.push(i);
        }
    }
    if let Some(unknown) = outputs.iter().find(|o| !SWEEP_COLUMNS.contains(&o.as_str())) {
        return Err(Error::InvalidParameter(format!("unknown output column '{unknown}'")));
    }
    Ok(idx)
}

fn csv_document(header: &[&str], rows: &[Vec<String>], footer: Option<String>) -> Result<String> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    let io = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(header).map_err(io)?;
    for r in rows {
        w.write_record(r).map_err(io)?;
    }
    let mut out = String::from_utf8(w.into_inner().map_err(|e| Error::Io(e.to_string()))?)
        .map_err(|e| Error::Io(e.to_string()))?;
    if let Some(f) = footer {
        let _ = writeln!(out, "# {f}");
    }
    Ok(out)
}

/// Points at which a trajectory or distance sweep is evaluated.
enum Grid {
    Times(f64),
    Distances(Vec<f64>),
}

/// Evaluate `link` over the grid, stopping with a footer note when the
/// scenario ends.
fn walk<F: FnMut(f64, LinkResult) -> Result<()>>(link: &Link, grid: Grid, mut each: F) -> Result<Option<String>> {
    let motion = link.scenario().motion;
    match grid {
        Grid::Times(dt) => {
            if !(motion.closing_speed() > 0.0) {
                return Err(Error::InvalidParameter("the link never closes; trajectory sweep is unbounded".into()));
            }
            let mut i: u64 = 0;
            loop {
                let t = i as f64 * dt;
                match link.received_power(t) {
                    Ok(r) => each(t, r)?,
                    Err(Error::ScenarioEnded { t, stop_time }) => {
                        return Ok(Some(format!("scenario ended: t = {t:.8e} s is past the stop time {stop_time:.8e} s")));
                    }
                    Err(e) => return Err(e),
                }
                i += 1;
            }
        }
        Grid::Distances(ds) => {
            for d in ds {
                if d < motion.stop_distance || d > motion.d0 {
                    return Ok(Some(format!(
                        "scenario ended: distance {d:.8e} m is outside [{:.8e}, {:.8e}] m",
                        motion.stop_distance, motion.d0
                    )));
                }
                each(d, link.at_distance(d)?)?;
            }
            Ok(None)
        }
    }
}

/// Run a sweep and render it as CSV.
pub fn run_sweep(scn: &ScenarioConfig, spec: &SweepSpec) -> Result<String> {
    spec.validate()?;
    let cols = column_selection(&spec.outputs)?;
    let header: Vec<&str> = cols.iter().map(|&i| SWEEP_COLUMNS[i]).collect();
    let mut rows = Vec::new();
    let mut footer = None;
    let keep = |row: Vec<String>| cols.iter().map(|&i| row[i].clone()).collect::<Vec<_>>();
    match spec.variable {
        SweepVariable::Distance => {
            let link = Link::new(scn)?;
            let grid = if spec.values.is_empty() { Grid::Times(scn.time_step) } else { Grid::Distances(spec.values.clone()) };
            footer = walk(&link, grid, |v, r| {
                rows.push(keep(sweep_row(scn, v, &r)?));
                Ok(())
            })?;
        }
        var => {
            for &v in &spec.values {
                let varied = with_variable(scn, var, v)?;
                let link = Link::new(&varied)?;
                match link.at_distance(spec.distance) {
                    Ok(r) => rows.push(keep(sweep_row(&varied, v, &r)?)),
                    Err(Error::ScenarioEnded { t, stop_time }) => {
                        footer = Some(format!("scenario ended: t = {t:.8e} s is past the stop time {stop_time:.8e} s"));
                        break;
                    }
                    Err(e) => return Err(e),
                }
            }
        }
    }
    csv_document(&header, &rows, footer)
}

/// A copy of `scn` with one sweep variable set.
pub fn with_variable(scn: &ScenarioConfig, var: SweepVariable, v: f64) -> Result<ScenarioConfig> {
    let mut out = scn.clone();
    match var {
        SweepVariable::K => out.vmf_fields.iter_mut().for_each(|f| f.concentration = v),
        SweepVariable::Alpha0 => {
            let a = v.to_radians();
            for kind in SubModel::ALL {
                out.vmf_fields.get_mut(kind, Side::Left).mean.azimuth = a;
                out.vmf_fields.get_mut(kind, Side::Right).mean.azimuth = AnglePair { azimuth: a, elevation: 0.0 }.mirrored().azimuth;
            }
        }
        SweepVariable::ModeNumber => {
            out.lamp.mode_number = v;
            if let Some(p) = out.derived_tx_power() {
                out.lamp.tx_power = p;
            }
        }
        SweepVariable::Distance => {
            return Err(Error::InvalidParameter("distance is not a scenario parameter".into()));
        }
    }
    out.validate()?;
    Ok(out)
}

/// Fixed column order of the 2-D/3-D comparison.
pub fn compare_columns() -> Vec<String> {
    let mut cols = vec!["time_s".to_string(), "distance_m".to_string()];
    for c in ["los", "sb1", "sb2", "sb3", "total"] {
        for s in ["3d_w", "2d_w", "ratio"] {
            cols.push(format!("{c}_{s}"));
        }
    }
    cols
}

/// 2-D over 3-D power; 1 when both vanish.
pub fn power_ratio(p2d: f64, p3d: f64) -> f64 {
    if p3d == 0.0 && p2d == 0.0 {
        1.0
    } else {
        p2d / p3d
    }
}

/// Run the scenario and its planar reduction on the same time grid.
pub fn compare_2d3d(scn: &ScenarioConfig) -> Result<String> {
    let flat = cir::reduce_to_2d(scn);
    let link3 = Link::new(scn)?;
    let link2 = Link::new(&flat)?;
    let mut rows = Vec::new();
    let footer = walk(&link3, Grid::Times(scn.time_step), |t, r3| {
        let r2 = link2.evaluate(t, r3.distance)?;
        let mut row = vec![fmt(t), fmt(r3.distance)];
        let classes = [PathClass::Los, PathClass::Sb1, PathClass::Sb2, PathClass::Sb3];
        let pairs = classes
            .iter()
            .map(|&c| (r3.class_power(c), r2.class_power(c)))
            .chain(std::iter::once((r3.power_total, r2.power_total)));
        for (p3, p2) in pairs {
            row.extend([fmt(p3), fmt(p2), fmt(power_ratio(p2, p3))]);
        }
        rows.push(row);
        Ok(())
    })?;
    let cols = compare_columns();
    let header: Vec<&str> = cols.iter().map(String::as_str).collect();
    csv_document(&header, &rows, footer)
}

// ---------------------------------------------------------------------------
// Discrepancy report
// ---------------------------------------------------------------------------

/// Closed-form backend versus oracle comparisons as line-oriented `key=value` text.
pub fn validate(scn: &ScenarioConfig) -> Result<String> {
    scn.validate()?;
    let mut out = String::new();
    let mut kv = |k: String, v: String| {
        let _ = writeln!(out, "{k}={v}");
    };
    kv("report".into(), "discrepancy".into());
    kv("config_fingerprint".into(), scn.fingerprint());
    kv("seed".into(), scn.seed.to_string());
    kv("responsivity_a_per_w".into(), format!("{} (assumed default; not in the parameter table)", scn.receiver.responsivity));

    let ell = EllipseGeometry::from_minor_and_separation(scn.ellipse.b, scn.motion.d0)?;
    let lay = HeadlampLayout { delta_left: 0.0, delta_right: 0.0, ..scn.layout };
    kv("geometry.link_length_m".into(), fmt(scn.motion.d0));
    kv("geometry.tolerance".into(), fmt(oracle::GEOMETRY_TOLERANCE));
    let mut itemised = Vec::new();
    for (i, kind) in SubModel::ALL.into_iter().enumerate() {
        let survey = oracle::geometry_survey(kind, &ell, &scn.spheres, &lay, scn.seed.wrapping_add(i as u64), VALIDATION_GEOMETRY_DRAWS);
        for q in &survey.summaries {
            kv(format!("geometry.{}.draws", q.quantity), q.draws.to_string());
            kv(format!("geometry.{}.deviating", q.quantity), q.deviating.to_string());
            kv(format!("geometry.{}.max_abs_dev", q.quantity), fmt(q.max_abs_dev));
            kv(format!("geometry.{}.mean_abs_dev", q.quantity), fmt(q.mean_abs_dev));
        }
        kv(format!("geometry.{}.paper_failures", kind.label()), survey.paper_failures.len().to_string());
        for (draw, rec) in &survey.deviations {
            itemised.push(format!("deviation draw={draw} {}", rec.to_line()));
        }
        for (draw, msg) in &survey.paper_failures {
            itemised.push(format!("paper_failure surface={} draw={draw} error=\"{msg}\"", kind.label()));
        }
    }

    let link = Link::new(scn)?;
    let d = REFERENCE_DISTANCE.clamp(scn.motion.stop_distance, scn.motion.d0);
    kv("dc_gain.link_length_m".into(), fmt(d));
    kv("dc_gain.mc_samples".into(), VALIDATION_MC_SAMPLES.to_string());
    for kind in SubModel::ALL {
        let mev = link.dc_gain_sb_at_distance(d, Side::Left, kind, DcMethod::MevSum)?;
        let mc = link.dc_gain_sb_at_distance(d, Side::Left, kind, DcMethod::MonteCarlo { seed: scn.seed, n: VALIDATION_MC_SAMPLES })?;
        let rec = oracle::DeviationRecord::new(format!("dc_gain.{}.lsh", kind.label()), mev.value, mc.value, scn.fingerprint());
        let p = format!("dc_gain.{}", kind.label());
        kv(format!("{p}.mev_sum"), fmt(mev.value));
        kv(format!("{p}.monte_carlo"), fmt(mc.value));
        kv(format!("{p}.monte_carlo_std_error"), fmt(mc.uncertainty));
        kv(format!("{p}.rel_dev"), fmt(rec.rel_dev));
    }

    let los_impulse = link.los_cir_at_distance(d, Side::Left)?.gain;
    let los_dc = link.dc_gain_los_at_distance(d, Side::Left)?;
    kv("los.impulse_gain_lsh".into(), fmt(los_impulse));
    kv("los.dc_gain_lsh".into(), fmt(los_dc));
    kv("los.impulse_over_dc".into(), fmt(if los_dc > 0.0 { los_impulse / los_dc } else { f64::NAN }));

    let printed = noise_snr::thermal_noise_channel(&scn.noise, scn.receiver.area);
    let textbook = noise_snr::thermal_noise_channel_textbook(&scn.noise, scn.receiver.area);
    kv("thermal.channel_term_printed_a2".into(), fmt(printed));
    kv("thermal.channel_term_textbook_a2".into(), fmt(textbook));
    kv("thermal.printed_over_textbook".into(), fmt(printed / textbook));
    kv("deviations.itemised".into(), itemised.len().to_string());
    for line in itemised {
        let _ = writeln!(out, "{line}");
    }
    Ok(out)
}
