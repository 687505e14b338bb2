//! Channel impulse responses, DC gains and received power over time.
//!
//! A [`Link`] owns a validated scenario together with the discretised
//! scatterer populations, so repeated evaluations along a trajectory only
//! redo the distance-dependent geometry.

use crate::error::{Error, Result};
use crate::geometry::{
    self, AnglePair, EllipseGeometry, Side, SphereGeometry, SubModel,
};
use crate::noise_snr::{self, NoiseBreakdown};
use crate::optics;
use crate::oracle;
use crate::scatterfield::{mev_discretize, ScattererSet};
use crate::scenario_io::ScenarioConfig;
use crate::SPEED_OF_LIGHT;
use std::f64::consts::PI;

/// Longitudinal motion of both vehicles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotionState {
    /// Transmitter speed (m/s).
    pub v_tx: f64,
    /// Receiver speed (m/s).
    pub v_rx: f64,
    pub gamma_tx: f64,
    pub gamma_rx: f64,
    /// Initial link length (m).
    pub d0: f64,
    /// Distance at which the scenario stops (m).
    pub stop_distance: f64,
}

impl MotionState {
    pub fn validate(&self) -> Result<()> {
        if !(self.v_tx >= 0.0 && self.v_rx >= 0.0) {
            return Err(Error::InvalidParameter("speeds must be >= 0".into()));
        }
        if !(self.stop_distance > 0.0 && self.d0 > self.stop_distance) {
            return Err(Error::InvalidParameter(format!(
                "need d0 > stop distance > 0 (d0 = {}, stop = {})",
                self.d0, self.stop_distance
            )));
        }
        if !(self.gamma_tx.is_finite() && self.gamma_rx.is_finite()) {
            return Err(Error::InvalidParameter("motion directions must be finite".into()));
        }
        Ok(())
    }

    /// Rate at which the link shortens (m/s).
    pub fn closing_speed(&self) -> f64 {
        self.v_tx * self.gamma_tx.cos() - self.v_rx * self.gamma_rx.cos()
    }

    /// Time at which the stop distance is reached; infinite if the gap never closes.
    pub fn stop_time(&self) -> f64 {
        let v = self.closing_speed();
        if v > 0.0 {
            (self.d0 - self.stop_distance) / v
        } else {
            f64::INFINITY
        }
    }
}

/// Link length at time `t`.
pub fn los_distance(motion: &MotionState, t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::InvalidParameter(format!("time {t} must be >= 0")));
    }
    let stop = motion.stop_time();
    if t > stop {
        return Err(Error::ScenarioEnded { t, stop_time: stop });
    }
    let d = motion.d0 - motion.closing_speed() * t;
    Ok(d.max(motion.stop_distance))
}

/// Time at which the link length equals `d`, for a closing scenario.
pub fn time_at_distance(motion: &MotionState, d: f64) -> Result<f64> {
    if !(d >= motion.stop_distance && d <= motion.d0) {
        return Err(Error::InvalidParameter(format!(
            "distance {d} outside [{}, {}]",
            motion.stop_distance, motion.d0
        )));
    }
    let v = motion.closing_speed();
    if v > 0.0 {
        Ok((motion.d0 - d) / v)
    } else if d == motion.d0 {
        Ok(0.0)
    } else {
        Err(Error::InvalidParameter(format!("distance {d} is never reached")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PathClass {
    Los,
    Sb1,
    Sb2,
    Sb3,
}

impl PathClass {
    pub fn label(self) -> &'static str {
        match self {
            PathClass::Los => "los",
            PathClass::Sb1 => "sb1",
            PathClass::Sb2 => "sb2",
            PathClass::Sb3 => "sb3",
        }
    }
}

impl From<SubModel> for PathClass {
    fn from(k: SubModel) -> Self {
        match k {
            SubModel::TxSphere => PathClass::Sb1,
            SubModel::RxSphere => PathClass::Sb2,
            SubModel::Cylinder => PathClass::Sb3,
        }
    }
}

/// One delayed impulse of the CIR.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CirComponent {
    pub source: Side,
    pub path_class: PathClass,
    /// Delay (s).
    pub delay: f64,
    pub gain: f64,
}

/// How the SB DC gain integral is evaluated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DcMethod {
    /// Weighted sum over the equal-volume scatterer set.
    MevSum,
    /// Adaptive 2-D quadrature to the given relative tolerance.
    Quadrature { tol: f64 },
    /// Monte-Carlo average over `n` draws per population.
    MonteCarlo { seed: u64, n: usize },
}

/// A DC gain and its numerical uncertainty (standard error for Monte-Carlo,
/// achieved relative tolerance for quadrature, zero for the discrete sum).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DcGain {
    pub value: f64,
    pub uncertainty: f64,
}

/// Everything computed for one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkResult {
    pub time: f64,
    pub distance: f64,
    /// Per-headlight powers (W), indexed `[left, right]`.
    pub power_los: [f64; 2],
    pub power_sb1: [f64; 2],
    pub power_sb2: [f64; 2],
    pub power_sb3: [f64; 2],
    /// Sum of every class and both headlights (W).
    pub power_total: f64,
    /// The same total without concentrator and filter gains (W).
    pub power_total_bare: f64,
    /// Per-class DC gains indexed `[class][headlight]`, classes in LoS, SB1, SB2, SB3 order.
    pub dc_gain_per_class: [[f64; 2]; 4],
    /// Scatterers dropped by the realism filter or by singular geometry.
    pub excluded: usize,
    pub noise: NoiseBreakdown,
    pub snr_linear: f64,
    pub snr_db: f64,
}

impl LinkResult {
    /// Total power of one class over both headlights.
    pub fn class_power(&self, class: PathClass) -> f64 {
        let p = match class {
            PathClass::Los => self.power_los,
            PathClass::Sb1 => self.power_sb1,
            PathClass::Sb2 => self.power_sb2,
            PathClass::Sb3 => self.power_sb3,
        };
        p[0] + p[1]
    }
}

fn side_index(side: Side) -> usize {
    match side {
        Side::Left => 0,
        Side::Right => 1,
    }
}

fn model_index(kind: SubModel) -> usize {
    match kind {
        SubModel::TxSphere => 0,
        SubModel::RxSphere => 1,
        SubModel::Cylinder => 2,
    }
}

/// Geometry at one link length.
#[derive(Debug, Clone, Copy)]
struct Snapshot {
    ellipse: EllipseGeometry,
    spheres: SphereGeometry,
}

/// Outcome of evaluating a single scatterer.
#[derive(Debug, Clone, Copy)]
enum Term {
    Excluded,
    Ray { gain: f64, gain_bare: f64, intensity: f64, path: f64 },
}

/// A scenario prepared for evaluation.
#[derive(Debug, Clone)]
pub struct Link {
    scn: ScenarioConfig,
    sets: [[ScattererSet; 2]; 3],
}

impl Link {
    pub fn new(scn: &ScenarioConfig) -> Result<Self> {
        scn.validate()?;
        let sets = SubModel::ALL.map(|kind| Side::BOTH.map(|side| mev_discretize(scn.vmf_fields.get(kind, side))));
        Ok(Self { scn: scn.clone(), sets })
    }

    pub fn scenario(&self) -> &ScenarioConfig {
        &self.scn
    }

    pub fn scatterers(&self, kind: SubModel, population: Side) -> &ScattererSet {
        &self.sets[model_index(kind)][side_index(population)]
    }

    fn snapshot(&self, d: f64) -> Result<Snapshot> {
        let ellipse = EllipseGeometry::from_minor_and_separation(self.scn.ellipse.b, d)?;
        self.scn.spheres.check_against(d)?;
        Ok(Snapshot { ellipse, spheres: self.scn.spheres })
    }

    fn reflectivity(&self, kind: SubModel) -> f64 {
        match kind {
            SubModel::TxSphere | SubModel::RxSphere => self.scn.rho_vehicles,
            SubModel::Cylinder => self.scn.rho_roadside,
        }
    }

    fn term(&self, snap: &Snapshot, lamp: Side, kind: SubModel, angle: AnglePair) -> Term {
        let s = &self.scn;
        if !geometry::forward_filter(kind, &snap.ellipse, &snap.spheres, angle) {
            return Term::Excluded;
        }
        let Ok(ray) = geometry::resolve_path(s.backend, kind, &snap.ellipse, &snap.spheres, &s.layout, lamp, angle) else {
            return Term::Excluded;
        };
        let ct = ray.departure.boresight_cosine();
        let cr = ray.arrival.boresight_cosine();
        if !(ct > 0.0 && cr > 0.0) {
            return Term::Excluded;
        }
        let incidence = cr.min(1.0).acos();
        let rx = &s.receiver;
        let concentrator = if !rx.in_view(incidence) {
            0.0
        } else {
            match optics::lens_gain(rx, incidence) {
                Ok(g) => g * optics::filter_gain(rx, incidence),
                Err(_) => return Term::Excluded,
            }
        };
        let gate = if rx.in_view(incidence) { 1.0 } else { 0.0 };
        let l = ray.lengths;
        let prefactor = match kind {
            SubModel::TxSphere => {
                let e = l.d_tx_to_scatterer * l.d_scatterer_to_rx;
                self.reflectivity(kind) * rx.area / (PI * PI * e * e)
            }
            SubModel::RxSphere | SubModel::Cylinder => self.reflectivity(kind) * rx.area / (PI * l.total * l.total),
        };
        let base = prefactor * ct * cr;
        Term::Ray {
            gain: base * concentrator,
            gain_bare: base * gate,
            intensity: optics::lambertian_intensity(s.lamp.mode_number, ct.min(1.0).acos()),
            path: l.total,
        }
    }

    /// Lambertian-weighted single-scatterer DC gain `I·h` at one direction;
    /// zero for excluded rays.
    pub fn sb_integrand_at_distance(&self, d: f64, lamp: Side, kind: SubModel, angle: AnglePair) -> Result<f64> {
        let snap = self.snapshot(d)?;
        Ok(match self.term(&snap, lamp, kind, angle) {
            Term::Excluded => 0.0,
            Term::Ray { gain, intensity, .. } => gain * intensity,
        })
    }

    /// SB impulses from one headlight via one surface, over both scatterer
    /// populations, plus the number of excluded scatterers.
    pub fn sb_cir_at_distance(&self, d: f64, lamp: Side, kind: SubModel) -> Result<(Vec<CirComponent>, usize)> {
        let snap = self.snapshot(d)?;
        let mut out = Vec::new();
        let mut excluded = 0;
        for pop in Side::BOTH {
            for &(angle, w) in &self.scatterers(kind, pop).entries {
                match self.term(&snap, lamp, kind, angle) {
                    Term::Excluded => excluded += 1,
                    Term::Ray { gain, path, .. } => out.push(CirComponent {
                        source: lamp,
                        path_class: kind.into(),
                        delay: path / SPEED_OF_LIGHT,
                        gain: gain * w,
                    }),
                }
            }
        }
        Ok((out, excluded))
    }

    pub fn sb_cir(&self, t: f64, lamp: Side, kind: SubModel) -> Result<(Vec<CirComponent>, usize)> {
        self.sb_cir_at_distance(los_distance(&self.scn.motion, t)?, lamp, kind)
    }

    /// Elevation of the LoS ray and its 3-D length from one headlight.
    fn los_geometry(&self, d: f64, lamp: Side) -> (f64, f64) {
        let p = self.scn.layout.position(lamp);
        let dx = d - p[0];
        let dy = -p[1];
        let dz = self.scn.rx_height - (self.scn.tx_height + p[2]);
        let horizontal = (dx * dx + dy * dy).sqrt();
        let length = (horizontal * horizontal + dz * dz).sqrt();
        (dz.atan2(horizontal), length)
    }

    /// LoS impulse with the `(m+1)/(2π)` normalisation.
    pub fn los_cir_at_distance(&self, d: f64, lamp: Side) -> Result<CirComponent> {
        let (gain, _) = self.los_gains(d, lamp)?;
        let (_, length) = self.los_geometry(d, lamp);
        Ok(CirComponent { source: lamp, path_class: PathClass::Los, delay: length / SPEED_OF_LIGHT, gain })
    }

    pub fn los_cir(&self, t: f64, lamp: Side) -> Result<CirComponent> {
        self.los_cir_at_distance(los_distance(&self.scn.motion, t)?, lamp)
    }

    /// LoS impulse gain with and without concentrator/filter gains.
    fn los_gains(&self, d: f64, lamp: Side) -> Result<(f64, f64)> {
        let (elevation, length) = self.los_geometry(d, lamp);
        let beta_t = elevation.abs();
        let beta_r = elevation.abs();
        let rx = &self.scn.receiver;
        if !rx.in_view(beta_r) {
            return Ok((0.0, 0.0));
        }
        let m = self.scn.lamp.mode_number;
        let bare = (m + 1.0) * rx.area / (2.0 * PI * length * length) * beta_t.cos().powf(m) * beta_r.cos();
        let g = optics::lens_gain(rx, beta_r)? * optics::filter_gain(rx, beta_r);
        Ok((bare * g, bare))
    }

    /// LoS DC gain in the `A_r/(π D²)` form.
    pub fn dc_gain_los_at_distance(&self, d: f64, lamp: Side) -> Result<f64> {
        let (elevation, length) = self.los_geometry(d, lamp);
        let beta = elevation.abs();
        let rx = &self.scn.receiver;
        if !rx.in_view(beta) {
            return Ok(0.0);
        }
        let g = optics::lens_gain(rx, beta)? * optics::filter_gain(rx, beta);
        Ok(g * rx.area / (PI * length * length) * beta.cos() * beta.cos())
    }

    pub fn dc_gain_los(&self, t: f64, lamp: Side) -> Result<f64> {
        self.dc_gain_los_at_distance(los_distance(&self.scn.motion, t)?, lamp)
    }

    /// SB DC gain from one headlight via one surface, summed over both
    /// scatterer populations.
    pub fn dc_gain_sb_at_distance(&self, d: f64, lamp: Side, kind: SubModel, method: DcMethod) -> Result<DcGain> {
        let snap = self.snapshot(d)?;
        let integrand = |a: AnglePair| match self.term(&snap, lamp, kind, a) {
            Term::Excluded => 0.0,
            Term::Ray { gain, intensity, .. } => gain * intensity,
        };
        let mut value = 0.0;
        let mut var = 0.0;
        for pop in Side::BOTH {
            match method {
                DcMethod::MevSum => {
                    value += self.scatterers(kind, pop).entries.iter().map(|&(a, w)| w * integrand(a)).sum::<f64>();
                }
                DcMethod::Quadrature { tol } => {
                    let q = oracle::quad_integrate(integrand, self.scn.vmf_fields.get(kind, pop), tol)?;
                    value += q.value;
                    var += (q.achieved * q.value).powi(2);
                }
                DcMethod::MonteCarlo { seed, n } => {
                    let sub_seed = seed.wrapping_add(side_index(pop) as u64 * 0x9E37_79B9_7F4A_7C15);
                    let e = oracle::mc_integrate(integrand, self.scn.vmf_fields.get(kind, pop), sub_seed, n)?;
                    value += e.mean;
                    var += e.std_error * e.std_error;
                }
            }
        }
        let uncertainty = match method {
            DcMethod::Quadrature { .. } if value != 0.0 => var.sqrt() / value.abs(),
            _ => var.sqrt(),
        };
        Ok(DcGain { value, uncertainty })
    }

    pub fn dc_gain_sb(&self, t: f64, lamp: Side, kind: SubModel, method: DcMethod) -> Result<DcGain> {
        self.dc_gain_sb_at_distance(los_distance(&self.scn.motion, t)?, lamp, kind, method)
    }

    /// Concentrated and bare SB DC gains from the discrete scatterer sets,
    /// plus the excluded count.
    fn sb_mev_gains(&self, snap: &Snapshot, lamp: Side, kind: SubModel) -> (f64, f64, usize) {
        let (mut g, mut gb, mut excluded) = (0.0, 0.0, 0);
        for pop in Side::BOTH {
            for &(a, w) in &self.scatterers(kind, pop).entries {
                match self.term(snap, lamp, kind, a) {
                    Term::Excluded => excluded += 1,
                    Term::Ray { gain, gain_bare, intensity, .. } => {
                        g += w * gain * intensity;
                        gb += w * gain_bare * intensity;
                    }
                }
            }
        }
        (g, gb, excluded)
    }

    /// Full link evaluation at link length `d`, labelled with time `time`.
    pub fn evaluate(&self, time: f64, d: f64) -> Result<LinkResult> {
        let s = &self.scn;
        let snap = self.snapshot(d)?;
        let p_tx = s.lamp.tx_power;
        let mut gains = [[0.0; 2]; 4];
        let mut total_bare = 0.0;
        let mut excluded = 0;
        for lamp in Side::BOTH {
            let i = side_index(lamp);
            let (los, los_bare) = self.los_gains(d, lamp)?;
            gains[0][i] = los;
            total_bare += los_bare;
            for kind in SubModel::ALL {
                let (g, gb, ex) = self.sb_mev_gains(&snap, lamp, kind);
                gains[1 + model_index(kind)][i] = g;
                total_bare += gb;
                excluded += ex;
            }
        }
        let power = |c: usize| [gains[c][0] * p_tx, gains[c][1] * p_tx];
        let power_total = gains.iter().flatten().sum::<f64>() * p_tx;
        let rx = &s.receiver;
        let noise = noise_snr::noise_breakdown(&s.noise, rx.responsivity, power_total, rx.area);
        let snr = noise_snr::snr(&s.noise, rx.responsivity, power_total, rx.area)?;
        Ok(LinkResult {
            time,
            distance: d,
            power_los: power(0),
            power_sb1: power(1),
            power_sb2: power(2),
            power_sb3: power(3),
            power_total,
            power_total_bare: total_bare * p_tx,
            dc_gain_per_class: gains,
            excluded,
            noise,
            snr_linear: snr.linear,
            snr_db: snr.db,
        })
    }

    /// Received power at time `t` along the scenario trajectory.
    pub fn received_power(&self, t: f64) -> Result<LinkResult> {
        let d = los_distance(&self.scn.motion, t)?;
        self.evaluate(t, d)
    }

    /// Received power at link length `d`, timed along the trajectory when it
    /// passes through `d` (time is NaN otherwise).
    pub fn at_distance(&self, d: f64) -> Result<LinkResult> {
        let t = time_at_distance(&self.scn.motion, d).unwrap_or(f64::NAN);
        self.evaluate(t, d)
    }
}

/// Convenience wrapper around [`Link::received_power`].
pub fn received_power(scn: &ScenarioConfig, t: f64) -> Result<LinkResult> {
    Link::new(scn)?.received_power(t)
}

/// The same scenario with every elevation collapsed to the horizontal plane.
pub fn reduce_to_2d(scn: &ScenarioConfig) -> ScenarioConfig {
    let mut out = scn.clone();
    for kind in SubModel::ALL {
        for side in Side::BOTH {
            let f = out.vmf_fields.get_mut(kind, side);
            f.mean.elevation = 0.0;
            f.planar = true;
        }
    }
    out.layout.tilt_elevation = 0.0;
    out
}

/// Ratio of the LoS impulse gain to the LoS DC gain at zero angles.
pub fn los_normalisation_ratio(mode_number: f64) -> f64 {
    (mode_number + 1.0) / 2.0
}
