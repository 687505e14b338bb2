//! Source and receiver optics.

use crate::error::{Error, Result};
use std::f64::consts::PI;

/// Default luminous efficacy used to convert candela to watts (lm/W).
pub const DEFAULT_LUMINOUS_EFFICACY: f64 = 300.0;

/// Smallest incidence angle accepted by the `paper-form` lens gain.
pub const PAPER_LENS_MIN_INCIDENCE: f64 = 1e-6;

/// A generalised Lambertian headlamp.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Headlamp {
    /// Lambertian mode number `m`.
    pub mode_number: f64,
    /// Radiometric transmit power per lamp (W).
    pub tx_power: f64,
    /// Peak luminous intensity (cd), kept for photometric reporting.
    pub luminous_intensity_peak: Option<f64>,
}

impl Headlamp {
    pub fn validate(&self) -> Result<()> {
        if !(self.mode_number >= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "mode number {} must be >= 1",
                self.mode_number
            )));
        }
        if !(self.tx_power > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "transmit power {} must be > 0",
                self.tx_power
            )));
        }
        Ok(())
    }

    /// Derive the radiometric power from a peak intensity in candela.
    pub fn from_intensity(mode_number: f64, intensity_cd: f64, efficacy_lm_per_w: f64) -> Result<Self> {
        if !(intensity_cd > 0.0 && efficacy_lm_per_w > 0.0) {
            return Err(Error::InvalidParameter(
                "luminous intensity and efficacy must be > 0".into(),
            ));
        }
        let lamp = Self {
            mode_number,
            tx_power: tx_power_from_intensity(mode_number, intensity_cd, efficacy_lm_per_w),
            luminous_intensity_peak: Some(intensity_cd),
        };
        lamp.validate()?;
        Ok(lamp)
    }
}

/// `P_Tx` such that `P_Tx (m+1)/(2π) · efficacy` equals the peak intensity.
pub fn tx_power_from_intensity(mode_number: f64, intensity_cd: f64, efficacy_lm_per_w: f64) -> f64 {
    intensity_cd * 2.0 * PI / ((mode_number + 1.0) * efficacy_lm_per_w)
}

/// Peak luminous intensity (cd) of a lamp emitting `tx_power` watts.
pub fn peak_intensity(mode_number: f64, tx_power: f64, efficacy_lm_per_w: f64) -> f64 {
    tx_power * (mode_number + 1.0) / (2.0 * PI) * efficacy_lm_per_w
}

/// How the concentrator gain depends on incidence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LensGainMode {
    /// `n² / sin²(β_R)`, singular at normal incidence.
    PaperForm,
    /// `n² / sin²(Ψ_FoV)` for every in-view ray.
    #[default]
    ConstantCpc,
}

impl LensGainMode {
    pub fn label(self) -> &'static str {
        match self {
            LensGainMode::PaperForm => "paper-form",
            LensGainMode::ConstantCpc => "constant-cpc",
        }
    }
}

impl std::str::FromStr for LensGainMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper-form" => Ok(LensGainMode::PaperForm),
            "constant-cpc" => Ok(LensGainMode::ConstantCpc),
            other => Err(Error::InvalidParameter(format!(
                "unknown lens gain mode '{other}' (expected paper-form or constant-cpc)"
            ))),
        }
    }
}

/// Photodetector front end.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OpticalReceiver {
    /// Detector area (m²).
    pub area: f64,
    /// Field-of-view half angle (rad).
    pub fov: f64,
    pub refractive_index: f64,
    pub filter_transmission: f64,
    /// Responsivity (A/W).
    pub responsivity: f64,
    pub lens_gain_mode: LensGainMode,
}

impl OpticalReceiver {
    pub fn validate(&self) -> Result<()> {
        let checks = [
            (self.area > 0.0, "area must be > 0"),
            (self.fov > 0.0 && self.fov <= PI / 2.0, "field of view must lie in (0, pi/2]"),
            (self.refractive_index >= 1.0, "refractive index must be >= 1"),
            (
                (0.0..=1.0).contains(&self.filter_transmission),
                "filter transmission must lie in [0, 1]",
            ),
            (self.responsivity > 0.0, "responsivity must be > 0"),
        ];
        for (ok, msg) in checks {
            if !ok {
                return Err(Error::InvalidParameter(format!("receiver {msg}")));
            }
        }
        Ok(())
    }

    pub fn in_view(&self, incidence: f64) -> bool {
        incidence >= 0.0 && incidence <= self.fov
    }
}

/// Normalised Lambertian intensity `(m+1)/(2π) cos^m(β)` in sr⁻¹.
pub fn lambertian_intensity(mode_number: f64, beta_t: f64) -> f64 {
    let c = beta_t.cos();
    if c <= 0.0 {
        return 0.0;
    }
    (mode_number + 1.0) / (2.0 * PI) * c.powf(mode_number)
}

/// Illuminance in lux at distance `d` for incidence `beta_r`.
pub fn illuminance(intensity_cd: f64, beta_r: f64, d: f64) -> Result<f64> {
    if !(d > 0.0) {
        return Err(Error::InvalidParameter(format!("distance {d} must be > 0")));
    }
    Ok((intensity_cd * beta_r.cos() / (d * d)).max(0.0))
}

/// Projected detector area; zero outside the field of view.
pub fn effective_area(rx: &OpticalReceiver, beta_r: f64) -> f64 {
    if rx.in_view(beta_r) {
        rx.area * beta_r.cos()
    } else {
        0.0
    }
}

/// Concentrator gain; zero outside the field of view.
pub fn lens_gain(rx: &OpticalReceiver, beta_r: f64) -> Result<f64> {
    if !rx.in_view(beta_r) {
        return Ok(0.0);
    }
    let n2 = rx.refractive_index * rx.refractive_index;
    match rx.lens_gain_mode {
        LensGainMode::ConstantCpc => Ok(n2 / rx.fov.sin().powi(2)),
        LensGainMode::PaperForm => {
            if beta_r < PAPER_LENS_MIN_INCIDENCE {
                return Err(Error::Singular(format!(
                    "paper-form lens gain is singular at incidence {beta_r}"
                )));
            }
            Ok(n2 / beta_r.sin().powi(2))
        }
    }
}

/// Filter transmission; zero outside the field of view.
pub fn filter_gain(rx: &OpticalReceiver, beta_r: f64) -> f64 {
    if rx.in_view(beta_r) {
        rx.filter_transmission
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn rx(mode: LensGainMode) -> OpticalReceiver {
        OpticalReceiver {
            area: 1e-4,
            fov: 80f64.to_radians(),
            refractive_index: 1.5,
            filter_transmission: 1.0,
            responsivity: 0.54,
            lens_gain_mode: mode,
        }
    }

    #[test]
    #[allow(clippy::approx_constant)]
    fn lambertian_examples() {
        assert_relative_eq!(lambertian_intensity(1.0, 0.0), 1.0 / PI, epsilon = 1e-15);
        assert_relative_eq!(lambertian_intensity(1.0, 60f64.to_radians()), 0.5 / PI, epsilon = 1e-15);
        assert_relative_eq!(lambertian_intensity(1.0, 0.0), 0.31831, epsilon = 1e-5);
    }

    #[test]
    fn illuminance_examples() {
        assert_relative_eq!(illuminance(8830.0, 0.0, 10.0).unwrap(), 88.3, epsilon = 1e-12);
        assert!(illuminance(8830.0, PI / 2.0, 10.0).unwrap() < 1e-12);
        let e1 = illuminance(8830.0, 0.2, 7.0).unwrap();
        let e2 = illuminance(8830.0, 0.2, 14.0).unwrap();
        assert_relative_eq!(e2 / e1, 0.25, epsilon = 1e-15);
        assert!(illuminance(8830.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn effective_area_examples() {
        let r = rx(LensGainMode::ConstantCpc);
        assert_eq!(effective_area(&r, 0.0), 1e-4);
        assert_eq!(effective_area(&r, r.fov + 1e-9), 0.0);
        assert_relative_eq!(effective_area(&r, 60f64.to_radians()), 5e-5, epsilon = 1e-15);
    }

    #[test]
    fn lens_gain_examples() {
        let r = rx(LensGainMode::ConstantCpc);
        let g = lens_gain(&r, 0.1).unwrap();
        assert_relative_eq!(g, 2.25 / 80f64.to_radians().sin().powi(2), epsilon = 1e-15);
        assert_relative_eq!(g, 2.3200, epsilon = 1e-4);
        assert_eq!(lens_gain(&r, 1.5).unwrap(), 0.0);
        let p = rx(LensGainMode::PaperForm);
        assert!(lens_gain(&p, 0.0).is_err());
        assert_relative_eq!(lens_gain(&p, r.fov).unwrap(), g, epsilon = 1e-15);
    }

    #[test]
    fn intensity_bridge_round_trips() {
        let lamp = Headlamp::from_intensity(1.0, 8830.0, DEFAULT_LUMINOUS_EFFICACY).unwrap();
        assert_relative_eq!(peak_intensity(1.0, lamp.tx_power, 300.0), 8830.0, max_relative = 1e-14);
    }
}
