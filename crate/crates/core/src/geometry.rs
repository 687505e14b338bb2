//! Path lengths and angle coupling for single-bounce rays.
//!
//! # Frame
//!
//! The transmitter centre OTx (midpoint between the headlamps) sits at the
//! origin and the receiver ORx at `(D, 0, 0)`. The x-axis points from OTx to
//! ORx, z is vertical and the left headlamp lies on the `+y` side.
//!
//! * Departure angles are measured at OTx: azimuth counter-clockwise from `+x`,
//!   elevation from the x-y plane.
//! * Arrival angles on the Tx-sphere and Rx-sphere are measured at ORx in the
//!   receiver frame, whose zero azimuth points back at OTx (`-x`). The
//!   `y` axis is kept, so a scatterer on the left side has positive azimuth
//!   from both ends.
//! * Arrival angles on the elliptic cylinder are measured at ORx from `+x`,
//!   the reference under which the closed-form focal distance holds.
//!
//! # Backends
//!
//! [`GeometryBackend::Paper`] evaluates the closed-form expressions verbatim,
//! including their sign and dimension slips. [`GeometryBackend::Oracle`]
//! places every point in Cartesian coordinates and measures Euclidean lengths
//! and angles. The oracle is the default for power computations.

use crate::error::{Error, Result};
use std::f64::consts::{FRAC_PI_2, PI};

/// Inputs closer than this to a vertical direction are rejected.
pub const SINGULAR_MARGIN: f64 = 1e-12;

/// Slack allowed on arcsin arguments before they count as out of domain.
const ASIN_SLACK: f64 = 1e-12;

/// Wrap an azimuth into `(-π, π]`.
pub fn wrap_azimuth(a: f64) -> f64 {
    let mut w = a % (2.0 * PI);
    if w <= -PI {
        w += 2.0 * PI;
    } else if w > PI {
        w -= 2.0 * PI;
    }
    w
}

/// Unit vector for an (azimuth, elevation) direction in a right-handed frame.
pub fn unit_vector(azimuth: f64, elevation: f64) -> [f64; 3] {
    let (sa, ca) = azimuth.sin_cos();
    let (se, ce) = elevation.sin_cos();
    [ce * ca, ce * sa, se]
}

fn norm(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn checked_asin(value: f64, context: &'static str) -> Result<f64> {
    if !value.is_finite() || value.abs() > 1.0 + ASIN_SLACK {
        return Err(Error::Domain { context, value });
    }
    Ok(value.clamp(-1.0, 1.0).asin())
}

/// An (azimuth, elevation) direction in radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnglePair {
    pub azimuth: f64,
    pub elevation: f64,
}

impl AnglePair {
    /// Build a validated pair: azimuth in `(-π, π]`, elevation in `(-π/2, π/2)`.
    pub fn new(azimuth: f64, elevation: f64) -> Result<Self> {
        if !azimuth.is_finite() || !elevation.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "non-finite angle ({azimuth}, {elevation})"
            )));
        }
        if !(azimuth > -PI && azimuth <= PI) {
            return Err(Error::InvalidParameter(format!(
                "azimuth {azimuth} outside (-pi, pi]"
            )));
        }
        if elevation.abs() >= FRAC_PI_2 - SINGULAR_MARGIN {
            return Err(Error::Singular(format!(
                "elevation {elevation} is within {SINGULAR_MARGIN} rad of vertical"
            )));
        }
        Ok(Self { azimuth, elevation })
    }

    /// Build from degrees, wrapping the azimuth.
    pub fn from_degrees(azimuth_deg: f64, elevation_deg: f64) -> Result<Self> {
        Self::new(wrap_azimuth(azimuth_deg.to_radians()), elevation_deg.to_radians())
    }

    /// The same direction mirrored across the x-z plane.
    pub fn mirrored(self) -> Self {
        Self {
            azimuth: wrap_azimuth(-self.azimuth),
            elevation: self.elevation,
        }
    }

    /// Cosine of the angle between this direction and the frame's zero-azimuth axis.
    pub fn boresight_cosine(self) -> f64 {
        self.azimuth.cos() * self.elevation.cos()
    }
}

/// Ellipse with OTx and ORx at its foci.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllipseGeometry {
    pub a: f64,
    pub b: f64,
    pub f: f64,
    pub d: f64,
}

/// Build an ellipse from its semi-axes. Requires `a > b > 0`.
pub fn ellipse_from_axes(a: f64, b: f64) -> Result<EllipseGeometry> {
    if !(a.is_finite() && b.is_finite()) || b <= 0.0 {
        return Err(Error::InvalidParameter(format!("semi-minor axis b = {b} must be > 0")));
    }
    if a <= b {
        return Err(Error::InvalidParameter(format!(
            "a > b violated (a = {a}, b = {b})"
        )));
    }
    let f = (a * a - b * b).sqrt();
    Ok(EllipseGeometry { a, b, f, d: 2.0 * f })
}

impl EllipseGeometry {
    /// Ellipse with the given semi-minor axis whose foci are `separation` apart.
    pub fn from_minor_and_separation(b: f64, separation: f64) -> Result<Self> {
        if !(separation > 0.0) || !(b > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "focal separation {separation} and semi-minor axis {b} must be > 0"
            )));
        }
        let f = 0.5 * separation;
        let a = (b * b + f * f).sqrt();
        Ok(Self { a, b, f, d: separation })
    }

    /// Position of the receiver focus.
    pub fn rx_position(&self) -> [f64; 3] {
        [self.d, 0.0, 0.0]
    }
}

/// Radii of the spheres around the transmitter and the receiver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphereGeometry {
    pub radius_tx: f64,
    pub radius_rx: f64,
}

impl SphereGeometry {
    pub fn new(radius_tx: f64, radius_rx: f64) -> Result<Self> {
        if !(radius_tx > 0.0 && radius_rx > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "sphere radii must be > 0 (got {radius_tx}, {radius_rx})"
            )));
        }
        Ok(Self { radius_tx, radius_rx })
    }

    /// Check that neither sphere engulfs the link of length `d`.
    pub fn check_against(&self, d: f64) -> Result<()> {
        if self.radius_tx >= d || self.radius_rx >= d {
            return Err(Error::InvalidParameter(format!(
                "sphere radii ({}, {}) must be smaller than the link length {d}",
                self.radius_tx, self.radius_rx
            )));
        }
        Ok(())
    }
}

/// Headlamp placement around OTx.
///
/// The left lamp sits at distance `delta_left` along azimuth `π/2 + tilt_azimuth`
/// and elevation `tilt_elevation`; the right lamp is its mirror image at
/// distance `delta_right`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeadlampLayout {
    pub half_separation: f64,
    pub delta_left: f64,
    pub delta_right: f64,
    pub tilt_azimuth: f64,
    pub tilt_elevation: f64,
}

impl HeadlampLayout {
    /// Symmetric layout with both offsets equal to `delta` and no tilt.
    pub fn symmetric(delta: f64) -> Self {
        Self {
            half_separation: delta,
            delta_left: delta,
            delta_right: delta,
            tilt_azimuth: 0.0,
            tilt_elevation: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.half_separation > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "half separation {} must be > 0",
                self.half_separation
            )));
        }
        if !(self.delta_left >= 0.0 && self.delta_right >= 0.0) {
            return Err(Error::InvalidParameter("side offsets must be >= 0".into()));
        }
        if !(self.tilt_azimuth > -PI && self.tilt_azimuth <= PI) {
            return Err(Error::InvalidParameter("tilt azimuth outside (-pi, pi]".into()));
        }
        if !(self.tilt_elevation.abs() < FRAC_PI_2) {
            return Err(Error::InvalidParameter("tilt elevation outside (-pi/2, pi/2)".into()));
        }
        Ok(())
    }

    pub fn offset(&self, side: Side) -> f64 {
        match side {
            Side::Left => self.delta_left,
            Side::Right => self.delta_right,
        }
    }

    /// Azimuth of the lamp's displacement from OTx.
    pub fn displacement_azimuth(&self, side: Side) -> f64 {
        match side {
            Side::Left => FRAC_PI_2 + self.tilt_azimuth,
            Side::Right => -FRAC_PI_2 - self.tilt_azimuth,
        }
    }

    /// Cartesian position of a headlamp.
    pub fn position(&self, side: Side) -> [f64; 3] {
        let u = unit_vector(self.displacement_azimuth(side), self.tilt_elevation);
        let r = self.offset(side);
        [r * u[0], r * u[1], r * u[2]]
    }
}

/// Which headlamp (or which scatterer population) is meant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub const BOTH: [Side; 2] = [Side::Left, Side::Right];

    pub fn label(self) -> &'static str {
        match self {
            Side::Left => "left",
            Side::Right => "right",
        }
    }
}

/// The three single-bounce scatterer surfaces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SubModel {
    TxSphere,
    RxSphere,
    Cylinder,
}

impl SubModel {
    pub const ALL: [SubModel; 3] = [SubModel::TxSphere, SubModel::RxSphere, SubModel::Cylinder];

    pub fn label(self) -> &'static str {
        match self {
            SubModel::TxSphere => "tx_sphere",
            SubModel::RxSphere => "rx_sphere",
            SubModel::Cylinder => "cylinder",
        }
    }

    /// True when scatterers of this surface are parameterised by departure angles.
    pub fn indexed_by_departure(self) -> bool {
        matches!(self, SubModel::TxSphere)
    }
}

/// Selects which implementation of the path geometry is used.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GeometryBackend {
    Paper,
    #[default]
    Oracle,
}

impl GeometryBackend {
    pub fn label(self) -> &'static str {
        match self {
            GeometryBackend::Paper => "paper",
            GeometryBackend::Oracle => "oracle",
        }
    }
}

impl std::str::FromStr for GeometryBackend {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper" => Ok(GeometryBackend::Paper),
            "oracle" => Ok(GeometryBackend::Oracle),
            other => Err(Error::InvalidParameter(format!(
                "unknown geometry backend '{other}' (expected paper or oracle)"
            ))),
        }
    }
}

/// Leg lengths of a single-bounce ray.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathLengths {
    pub d_tx_to_scatterer: f64,
    pub d_scatterer_to_rx: f64,
    pub total: f64,
}

impl PathLengths {
    pub fn new(d_tx_to_scatterer: f64, d_scatterer_to_rx: f64) -> Result<Self> {
        for (name, v) in [("transmit leg", d_tx_to_scatterer), ("receive leg", d_scatterer_to_rx)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Singular(format!("{name} length {v} is not positive")));
            }
        }
        Ok(Self {
            d_tx_to_scatterer,
            d_scatterer_to_rx,
            total: d_tx_to_scatterer + d_scatterer_to_rx,
        })
    }
}

fn check_direction(angle: AnglePair) -> Result<()> {
    AnglePair::new(angle.azimuth, angle.elevation).map(|_| ())
}

// ---------------------------------------------------------------------------
// Closed-form backend
// ---------------------------------------------------------------------------

fn tx_sphere_q1_q2(ell: &EllipseGeometry, sph: &SphereGeometry, dep: AnglePair) -> (f64, f64) {
    let f = ell.f;
    let q1 = sph.radius_tx * dep.elevation.cos();
    let q2 = (q1 * q1 + 4.0 * f * f - 4.0 * f * q1 * dep.azimuth.cos()).max(0.0).sqrt();
    (q1, q2)
}

/// Arrival direction of a Tx-sphere scatterer in closed form.
pub fn txsphere_arrival(
    ell: &EllipseGeometry,
    sph: &SphereGeometry,
    dep: AnglePair,
) -> Result<AnglePair> {
    check_direction(dep)?;
    let f = ell.f;
    let q1 = sph.radius_tx * dep.elevation.cos();
    let root = (q1 * q1 + 4.0 * f * f + 4.0 * f * q1 * dep.azimuth.cos()).sqrt();
    let arg = sph.radius_tx * dep.elevation.cos() * dep.azimuth.sin() / root;
    let azimuth = checked_asin(arg, "tx-sphere arrival azimuth")?;
    let elevation = (sph.radius_tx * dep.elevation.sin() / root).atan();
    Ok(AnglePair { azimuth, elevation })
}

/// Leg lengths for a Tx-sphere scatterer in closed form.
pub fn txsphere_paths(
    ell: &EllipseGeometry,
    sph: &SphereGeometry,
    lay: &HeadlampLayout,
    side: Side,
    dep: AnglePair,
) -> Result<PathLengths> {
    check_direction(dep)?;
    let arr = txsphere_arrival(ell, sph, dep)?;
    check_direction(arr)?;
    let (_, q2) = tx_sphere_q1_q2(ell, sph, dep);
    let rx_leg = q2 / arr.elevation.cos();
    let r = sph.radius_tx;
    let (sb, cb) = dep.elevation.sin_cos();
    let (sp, cp) = lay.tilt_elevation.sin_cos();
    let tx_leg_sq = match side {
        Side::Left => {
            let dl = lay.delta_left;
            let theta = lay.displacement_azimuth(Side::Left);
            r * r + dl * dl
                - 2.0 * dl * r * cp * cb * (theta - dep.azimuth).cos()
                - 2.0 * dl * r * sp * sb
        }
        Side::Right => {
            let dr = lay.delta_right;
            let theta = lay.displacement_azimuth(Side::Right);
            let a1 = 2.0 * r * dr * sp * sb;
            let b1 = 2.0 * r * dr * cp * cb * (theta - dep.azimuth).cos();
            r * r + dr * dr + a1 - b1
        }
    };
    PathLengths::new(tx_leg_sq.max(0.0).sqrt(), rx_leg)
}

/// Horizontal distance from OTx to an Rx-sphere scatterer's foot point.
fn rx_sphere_q1(ell: &EllipseGeometry, sph: &SphereGeometry, arr: AnglePair) -> f64 {
    let f = ell.f;
    let q2 = sph.radius_rx * arr.elevation.cos();
    (4.0 * f * f + q2 * q2 - 4.0 * f * q2 * arr.azimuth.cos()).max(0.0).sqrt()
}

/// The auxiliary distance from OTx to an Rx-sphere scatterer. It is given
/// but never used by the later expressions; it is kept for audit.
pub fn rxsphere_xi(ell: &EllipseGeometry, sph: &SphereGeometry, arr: AnglePair) -> f64 {
    let q1 = rx_sphere_q1(ell, sph, arr);
    let s = sph.radius_rx * arr.elevation.sin();
    (q1 * q1 + s * s).sqrt()
}

/// Departure direction of an Rx-sphere scatterer in closed form.
pub fn rxsphere_departure(
    ell: &EllipseGeometry,
    sph: &SphereGeometry,
    arr: AnglePair,
) -> Result<AnglePair> {
    check_direction(arr)?;
    let f = ell.f;
    let rr = sph.radius_rx;
    let c3 = arr.elevation.cos() * arr.azimuth.cos();
    let denom = (rr * rr + 4.0 * f * f + 4.0 * f * rr * c3).sqrt();
    let elevation = checked_asin(rr * arr.elevation.sin() / denom, "rx-sphere departure elevation")?;
    let q1 = rx_sphere_q1(ell, sph, arr);
    let azimuth = checked_asin(
        rr * arr.elevation.cos() * arr.azimuth.sin() / q1,
        "rx-sphere departure azimuth",
    )?;
    Ok(AnglePair { azimuth, elevation })
}

/// Leg lengths for an Rx-sphere scatterer in closed form. The receive leg is
/// always the sphere radius.
pub fn rxsphere_paths(
    ell: &EllipseGeometry,
    sph: &SphereGeometry,
    lay: &HeadlampLayout,
    side: Side,
    arr: AnglePair,
) -> Result<PathLengths> {
    check_direction(arr)?;
    let dep = rxsphere_departure(ell, sph, arr)?;
    let q1 = rx_sphere_q1(ell, sph, arr);
    let rr = sph.radius_rx;
    let delta = lay.offset(side);
    let (sp, cp) = lay.tilt_elevation.sin_cos();
    // Both closed forms are written against the left lamp's displacement azimuth.
    let theta = lay.displacement_azimuth(Side::Left);
    let sbr = arr.elevation.sin();
    let tx_leg = match side {
        Side::Left => {
            let a2 = (delta * delta * cp * cp + q1 * q1
                - 2.0 * delta * q1 * cp * (theta - dep.azimuth).cos())
            .max(0.0)
            .sqrt();
            let b2 = rr * rr * sbr * sbr - 2.0 * delta * rr * sbr * theta.sin()
                + delta * delta * sp * sp;
            (a2 * a2 + b2 * b2).sqrt()
        }
        Side::Right => {
            let a3 = delta * delta * cp * cp
                + q1 * q1
                + 2.0 * delta * q1 * cp * (theta - dep.azimuth).cos();
            let b3 = 2.0 * delta * rr * sp * arr.elevation.cos();
            (rr * rr * sbr * sbr + delta * delta * sp * sp + a3 + b3).max(0.0).sqrt()
        }
    };
    PathLengths::new(tx_leg, rr)
}

/// Intermediate cylinder quantities shared by the path and departure forms.
struct CylinderTerms {
    /// Distance from OTx to the wall point's foot, `Q`.
    q: f64,
    /// Wall point to ORx.
    eps_rx: f64,
    /// OTx to wall point.
    eps_otx: f64,
    /// Horizontal OTx to wall-point distance from the law of cosines.
    q1: f64,
}

fn cylinder_terms(ell: &EllipseGeometry, arr: AnglePair) -> Result<CylinderTerms> {
    check_direction(arr)?;
    let (a, f) = (ell.a, ell.f);
    let ca = arr.azimuth.cos();
    let q = (a * a + f * f + 2.0 * a * f * ca) / (a + f * ca);
    let cb = arr.elevation.cos();
    let eps_rx = (2.0 * a - q) / cb;
    let sbr = arr.elevation.sin();
    let eps_otx = (q * q + eps_rx * eps_rx * sbr * sbr).sqrt();
    let q2 = eps_rx * cb;
    let q1 = (q2 * q2 + ell.d * ell.d - 2.0 * q2 * ell.d * ca).max(0.0).sqrt();
    Ok(CylinderTerms { q, eps_rx, eps_otx, q1 })
}

/// Distance from OTx to the cylinder wall in the given arrival direction.
pub fn cylinder_center_distance(ell: &EllipseGeometry, arr: AnglePair) -> Result<f64> {
    cylinder_terms(ell, arr).map(|t| t.eps_otx)
}

/// The focal-radius term `Q` of the cylinder expressions.
pub fn cylinder_q(ell: &EllipseGeometry, arr: AnglePair) -> Result<f64> {
    cylinder_terms(ell, arr).map(|t| t.q)
}

/// Departure direction of a cylinder scatterer in closed form.
pub fn cylinder_departure(ell: &EllipseGeometry, arr: AnglePair) -> Result<AnglePair> {
    let t = cylinder_terms(ell, arr)?;
    let elevation = checked_asin(
        t.eps_rx * arr.elevation.sin() / t.eps_otx,
        "cylinder departure elevation",
    )?;
    let azimuth = checked_asin(
        t.eps_rx * arr.elevation.cos() * arr.azimuth.sin() / t.q1,
        "cylinder departure azimuth",
    )?;
    Ok(AnglePair { azimuth, elevation })
}

/// Leg lengths for a cylinder scatterer in closed form.
pub fn cylinder_paths(
    ell: &EllipseGeometry,
    lay: &HeadlampLayout,
    side: Side,
    arr: AnglePair,
) -> Result<PathLengths> {
    let t = cylinder_terms(ell, arr)?;
    let dep = cylinder_departure(ell, arr)?;
    let delta = lay.offset(side);
    let (sp, cp) = lay.tilt_elevation.sin_cos();
    let sbr = arr.elevation.sin();
    let tx_leg = match side {
        Side::Left => {
            let theta = lay.displacement_azimuth(Side::Left);
            let a4 = delta * delta + t.q1 * t.q1
                - 2.0 * delta * t.q1 * cp * (theta - dep.azimuth).cos();
            let b4 = delta * delta + t.eps_rx * t.eps_rx * sbr * sbr
                - 2.0 * delta * t.eps_rx * sbr * sp;
            (a4 * a4 + b4 * b4).sqrt()
        }
        Side::Right => {
            let d = ell.d;
            let ca = arr.azimuth.cos();
            let a5 = d * d + t.eps_rx * t.eps_rx - 2.0 * d * t.eps_rx * arr.elevation.cos() * ca;
            let b5 = 2.0 * d * delta * t.eps_rx * sp * ca;
            (delta * delta * sp * sp + a5 - b5).max(0.0).sqrt()
        }
    };
    PathLengths::new(tx_leg, t.eps_rx)
}

// ---------------------------------------------------------------------------
// Cartesian backend
// ---------------------------------------------------------------------------

/// Cartesian position of the scatterer indexed by `angle` on the given surface.
pub fn scatterer_position(
    kind: SubModel,
    ell: &EllipseGeometry,
    sph: &SphereGeometry,
    angle: AnglePair,
) -> Result<[f64; 3]> {
    check_direction(angle)?;
    let rx = ell.rx_position();
    match kind {
        SubModel::TxSphere => {
            let u = unit_vector(angle.azimuth, angle.elevation);
            let r = sph.radius_tx;
            Ok([r * u[0], r * u[1], r * u[2]])
        }
        SubModel::RxSphere => {
            let u = unit_vector(angle.azimuth, angle.elevation);
            let r = sph.radius_rx;
            Ok([rx[0] - r * u[0], rx[1] + r * u[1], rx[2] + r * u[2]])
        }
        SubModel::Cylinder => {
            let w = unit_vector(angle.azimuth, angle.elevation);
            let (a, b, f) = (ell.a, ell.b, ell.f);
            // Solve ((x - f)/a)^2 + (y/b)^2 = 1 along ORx + t w.
            let qa = w[0] * w[0] / (a * a) + w[1] * w[1] / (b * b);
            let qb = 2.0 * f * w[0] / (a * a);
            let qc = f * f / (a * a) - 1.0;
            let disc = qb * qb - 4.0 * qa * qc;
            if !(qa > 0.0) || disc < 0.0 {
                return Err(Error::Singular("direction does not meet the cylinder wall".into()));
            }
            let t = (2.0 * -qc) / (qb + disc.sqrt());
            Ok([rx[0] + t * w[0], rx[1] + t * w[1], rx[2] + t * w[2]])
        }
    }
}

/// Leg lengths from explicit Cartesian positions.
pub fn cartesian_oracle_paths(
    kind: SubModel,
    ell: &EllipseGeometry,
    sph: &SphereGeometry,
    lay: &HeadlampLayout,
    side: Side,
    angle: AnglePair,
) -> Result<PathLengths> {
    let s = scatterer_position(kind, ell, sph, angle)?;
    let h = lay.position(side);
    PathLengths::new(norm(sub(s, h)), norm(sub(s, ell.rx_position())))
}

/// The coupled angle measured directly from Cartesian positions: the arrival
/// direction for Tx-sphere scatterers, the departure direction otherwise.
pub fn cartesian_coupled_angle(
    kind: SubModel,
    ell: &EllipseGeometry,
    sph: &SphereGeometry,
    angle: AnglePair,
) -> Result<AnglePair> {
    let s = scatterer_position(kind, ell, sph, angle)?;
    match kind {
        SubModel::TxSphere => {
            let v = sub(s, ell.rx_position());
            let azimuth = wrap_azimuth(v[1].atan2(-v[0]));
            let elevation = (v[2] / norm(v)).clamp(-1.0, 1.0).asin();
            Ok(AnglePair { azimuth, elevation })
        }
        SubModel::RxSphere | SubModel::Cylinder => {
            let azimuth = wrap_azimuth(s[1].atan2(s[0]));
            let elevation = (s[2] / norm(s)).clamp(-1.0, 1.0).asin();
            Ok(AnglePair { azimuth, elevation })
        }
    }
}

/// Realism filter: Tx-sphere scatterers must lie ahead of OTx and Rx-sphere
/// scatterers between the receiver and the transmitter side. Cylinder points
/// always pass.
pub fn forward_filter(
    kind: SubModel,
    ell: &EllipseGeometry,
    sph: &SphereGeometry,
    angle: AnglePair,
) -> bool {
    match scatterer_position(kind, ell, sph, angle) {
        Ok(s) => match kind {
            SubModel::TxSphere => s[0] > 0.0,
            SubModel::RxSphere => s[0] - ell.d < 0.0,
            SubModel::Cylinder => true,
        },
        Err(_) => false,
    }
}

/// A fully resolved single-bounce ray.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolvedPath {
    pub departure: AnglePair,
    pub arrival: AnglePair,
    pub lengths: PathLengths,
}

/// Resolve the ray through the scatterer indexed by `angle` (departure for the
/// Tx-sphere, arrival otherwise) with the chosen backend.
pub fn resolve_path(
    backend: GeometryBackend,
    kind: SubModel,
    ell: &EllipseGeometry,
    sph: &SphereGeometry,
    lay: &HeadlampLayout,
    side: Side,
    angle: AnglePair,
) -> Result<ResolvedPath> {
    let (coupled, lengths) = match backend {
        GeometryBackend::Paper => match kind {
            SubModel::TxSphere => (
                txsphere_arrival(ell, sph, angle)?,
                txsphere_paths(ell, sph, lay, side, angle)?,
            ),
            SubModel::RxSphere => (
                rxsphere_departure(ell, sph, angle)?,
                rxsphere_paths(ell, sph, lay, side, angle)?,
            ),
            SubModel::Cylinder => (
                cylinder_departure(ell, angle)?,
                cylinder_paths(ell, lay, side, angle)?,
            ),
        },
        GeometryBackend::Oracle => (
            cartesian_coupled_angle(kind, ell, sph, angle)?,
            cartesian_oracle_paths(kind, ell, sph, lay, side, angle)?,
        ),
    };
    let (departure, arrival) = if kind.indexed_by_departure() {
        (angle, coupled)
    } else {
        (coupled, angle)
    };
    Ok(ResolvedPath { departure, arrival, lengths })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn table() -> (EllipseGeometry, SphereGeometry, HeadlampLayout) {
        (
            ellipse_from_axes(40.0, 19.0).unwrap(),
            SphereGeometry::new(4.0, 4.0).unwrap(),
            HeadlampLayout::symmetric(0.6),
        )
    }

    #[test]
    fn ellipse_examples() {
        let e = ellipse_from_axes(5.0, 3.0).unwrap();
        assert_relative_eq!(e.f, 4.0);
        assert_relative_eq!(e.d, 8.0);
        let e = ellipse_from_axes(40.0, 19.0).unwrap();
        assert_relative_eq!(e.f, 1239f64.sqrt());
        assert_relative_eq!(e.d, 70.398_863_627_491_9, epsilon = 1e-9);
        assert!(ellipse_from_axes(19.0, 19.0).is_err());
        assert!(ellipse_from_axes(19.0, 40.0).is_err());
    }

    #[test]
    fn zero_offset_lamp_sits_at_sphere_centre() {
        let (e, s, _) = table();
        let lay = HeadlampLayout { delta_left: 0.0, ..HeadlampLayout::symmetric(0.6) };
        let p = txsphere_paths(&e, &s, &lay, Side::Left, AnglePair::new(0.0, 0.0).unwrap()).unwrap();
        assert_relative_eq!(p.d_tx_to_scatterer, 4.0, epsilon = 1e-12);
    }

    #[test]
    fn near_vertical_is_rejected() {
        let (e, s, lay) = table();
        let dep = AnglePair { azimuth: 0.0, elevation: FRAC_PI_2 - 1e-15 };
        assert!(txsphere_paths(&e, &s, &lay, Side::Left, dep).is_err());
        assert!(AnglePair::new(0.0, FRAC_PI_2 - 1e-15).is_err());
    }

    #[test]
    fn tx_sphere_arrival_broadside() {
        let (e, s, _) = table();
        let arr = txsphere_arrival(&e, &s, AnglePair::new(FRAC_PI_2, 0.0).unwrap()).unwrap();
        let expected = (4.0 / (16.0 + 4.0 * e.f * e.f).sqrt()).asin();
        assert_relative_eq!(arr.azimuth, expected, epsilon = 1e-15);
        assert_relative_eq!(arr.azimuth, 0.056_757, epsilon = 1e-5);
        assert_eq!(arr.elevation, 0.0);
        let oracle = cartesian_coupled_angle(SubModel::TxSphere, &e, &s, AnglePair::new(FRAC_PI_2, 0.0).unwrap()).unwrap();
        assert_relative_eq!(oracle.azimuth, expected, epsilon = 1e-12);
    }

    #[test]
    fn rx_sphere_examples() {
        let (e, s, _) = table();
        let lay = HeadlampLayout { delta_left: 0.0, delta_right: 0.0, ..HeadlampLayout::symmetric(0.6) };
        let p = rxsphere_paths(&e, &s, &lay, Side::Left, AnglePair::new(0.0, 0.0).unwrap()).unwrap();
        assert_relative_eq!(p.d_tx_to_scatterer, (2.0 * e.f - 4.0).abs(), epsilon = 1e-9);
        assert_eq!(p.d_scatterer_to_rx, 4.0);
        let dep = rxsphere_departure(&e, &s, AnglePair::new(FRAC_PI_2, 0.0).unwrap()).unwrap();
        let q1 = (4.0 * e.f * e.f + 16.0).sqrt();
        assert_relative_eq!(dep.azimuth, (4.0 / q1).asin(), epsilon = 1e-15);
        assert_relative_eq!(dep.azimuth, 0.056_757, epsilon = 1e-5);
        let dep0 = rxsphere_departure(&e, &s, AnglePair::new(0.3, 0.0).unwrap()).unwrap();
        assert_eq!(dep0.elevation, 0.0);
    }

    #[test]
    fn cylinder_vertices() {
        let (e, _, _) = table();
        let lay = HeadlampLayout { delta_left: 0.0, delta_right: 0.0, ..HeadlampLayout::symmetric(0.6) };
        let near = cylinder_paths(&e, &lay, Side::Left, AnglePair::new(0.0, 0.0).unwrap()).unwrap();
        assert_relative_eq!(near.d_scatterer_to_rx, 40.0 - e.f, epsilon = 1e-12);
        assert_relative_eq!(near.d_scatterer_to_rx, 4.8006, epsilon = 1e-4);
        let far = cylinder_paths(&e, &lay, Side::Left, AnglePair::new(PI, 0.0).unwrap()).unwrap();
        assert_relative_eq!(far.d_scatterer_to_rx, 40.0 + e.f, epsilon = 1e-9);
    }

    #[test]
    fn cartesian_focal_sum_is_two_a() {
        let (e, s, _) = table();
        let lay = HeadlampLayout { delta_left: 0.0, delta_right: 0.0, ..HeadlampLayout::symmetric(0.6) };
        for i in 0..72 {
            let az = wrap_azimuth(-PI + (i as f64 + 0.5) * PI / 36.0);
            let p = cartesian_oracle_paths(SubModel::Cylinder, &e, &s, &lay, Side::Left, AnglePair::new(az, 0.0).unwrap()).unwrap();
            assert_relative_eq!(p.total, 2.0 * e.a, max_relative = 1e-12);
        }
    }

    #[test]
    fn departure_elevation_zero_maps_to_arrival_zero() {
        let (e, s, _) = table();
        let a = AnglePair::new(0.7, 0.0).unwrap();
        assert_eq!(txsphere_arrival(&e, &s, a).unwrap().elevation, 0.0);
        assert_eq!(cylinder_departure(&e, a).unwrap().elevation, 0.0);
        assert_eq!(cylinder_departure(&e, AnglePair::new(0.0, 0.0).unwrap()).unwrap().azimuth, 0.0);
    }

    #[test]
    fn forward_filter_examples() {
        let (e, s, _) = table();
        assert!(forward_filter(SubModel::TxSphere, &e, &s, AnglePair::new(0.2, 0.0).unwrap()));
        assert!(!forward_filter(SubModel::TxSphere, &e, &s, AnglePair::new(2.0, 0.0).unwrap()));
        assert!(forward_filter(SubModel::RxSphere, &e, &s, AnglePair::new(0.2, 0.0).unwrap()));
        assert!(!forward_filter(SubModel::RxSphere, &e, &s, AnglePair::new(2.5, 0.0).unwrap()));
    }
}
