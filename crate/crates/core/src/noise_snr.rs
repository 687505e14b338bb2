//! Receiver noise budget and SNR for intensity-modulated links.

use crate::error::{Error, Result};
use std::f64::consts::PI;

/// Noise constants of the detector and its preamplifier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseConfig {
    /// Noise bandwidth (Hz).
    pub bandwidth: f64,
    /// Background-induced photocurrent (A).
    pub bg_current: f64,
    /// Dark current (A).
    pub dark_current: f64,
    pub i2: f64,
    pub i3: f64,
    /// FET channel noise factor Γ.
    pub fet_noise_factor: f64,
    pub open_loop_gain: f64,
    /// FET transconductance (S).
    pub transconductance: f64,
    /// Detector capacitance per unit area (F/m²).
    pub pd_capacitance_per_area: f64,
    /// Absolute temperature (K).
    pub temperature: f64,
    /// Boltzmann constant (J/K).
    pub boltzmann: f64,
    /// Elementary charge (C).
    pub electron_charge: f64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            bandwidth: 20e6,
            bg_current: 5100e-6,
            dark_current: 0.0,
            i2: 0.562,
            i3: 0.0868,
            fet_noise_factor: 1.5,
            open_loop_gain: 10.0,
            transconductance: 30e-3,
            pd_capacitance_per_area: 1.12e-6,
            temperature: 298.0,
            boltzmann: 1.38e-23,
            electron_charge: 1.6e-19,
        }
    }
}

impl NoiseConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("bandwidth", self.bandwidth),
            ("bg_current", self.bg_current),
            ("i2", self.i2),
            ("i3", self.i3),
            ("fet_noise_factor", self.fet_noise_factor),
            ("open_loop_gain", self.open_loop_gain),
            ("transconductance", self.transconductance),
            ("pd_capacitance_per_area", self.pd_capacitance_per_area),
            ("temperature", self.temperature),
            ("boltzmann", self.boltzmann),
            ("electron_charge", self.electron_charge),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("noise {name} = {v} must be > 0")));
            }
        }
        if !(self.dark_current >= 0.0) {
            return Err(Error::InvalidParameter("noise dark_current must be >= 0".into()));
        }
        Ok(())
    }
}

/// Noise variances in A².
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NoiseBreakdown {
    pub shot: f64,
    pub background: f64,
    pub dark: f64,
    pub thermal: f64,
    pub total: f64,
}

/// Signal-dependent shot noise `2 q R P B`.
pub fn signal_shot_noise(cfg: &NoiseConfig, responsivity: f64, p_rx: f64) -> f64 {
    2.0 * cfg.electron_charge * responsivity * p_rx * cfg.bandwidth
}

/// Background shot noise `2 q I_B I₂ B`.
pub fn background_noise(cfg: &NoiseConfig) -> f64 {
    2.0 * cfg.electron_charge * cfg.bg_current * cfg.i2 * cfg.bandwidth
}

/// Dark-current shot noise `2 q I_d I₂ B`.
pub fn dark_noise(cfg: &NoiseConfig) -> f64 {
    2.0 * cfg.electron_charge * cfg.dark_current * cfg.i2 * cfg.bandwidth
}

/// Total shot noise: the signal term plus the background term.
pub fn shot_noise(cfg: &NoiseConfig, responsivity: f64, p_rx: f64) -> f64 {
    signal_shot_noise(cfg, responsivity, p_rx) + background_noise(cfg)
}

/// Feedback-resistor term of the thermal noise.
pub fn thermal_noise_feedback(cfg: &NoiseConfig, area: f64) -> f64 {
    8.0 * PI * cfg.boltzmann * cfg.temperature / cfg.open_loop_gain
        * cfg.pd_capacitance_per_area
        * area
        * cfg.i2
        * cfg.bandwidth.powi(2)
}

/// FET channel term of the thermal noise, with the area squared.
pub fn thermal_noise_channel(cfg: &NoiseConfig, area: f64) -> f64 {
    16.0 * PI * PI * cfg.boltzmann * cfg.temperature * cfg.fet_noise_factor / cfg.transconductance
        * cfg.pd_capacitance_per_area
        * area
        * area
        * cfg.i3
        * cfg.bandwidth.powi(3)
}

/// The FET channel term with the textbook `(C_PD A_r)²` capacitance dependence.
pub fn thermal_noise_channel_textbook(cfg: &NoiseConfig, area: f64) -> f64 {
    let c = cfg.pd_capacitance_per_area * area;
    16.0 * PI * PI * cfg.boltzmann * cfg.temperature * cfg.fet_noise_factor / cfg.transconductance
        * c
        * c
        * cfg.i3
        * cfg.bandwidth.powi(3)
}

/// Total thermal noise.
pub fn thermal_noise(cfg: &NoiseConfig, area: f64) -> f64 {
    thermal_noise_feedback(cfg, area) + thermal_noise_channel(cfg, area)
}

/// Full breakdown for received power `p_rx`.
pub fn noise_breakdown(cfg: &NoiseConfig, responsivity: f64, p_rx: f64, area: f64) -> NoiseBreakdown {
    let shot = signal_shot_noise(cfg, responsivity, p_rx);
    let background = background_noise(cfg);
    let dark = dark_noise(cfg);
    let thermal = thermal_noise(cfg, area);
    NoiseBreakdown { shot, background, dark, thermal, total: shot + background + dark + thermal }
}

/// Signal-to-noise ratio, linear and in dB.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Snr {
    pub linear: f64,
    /// `-inf` when the received power is zero.
    pub db: f64,
}

/// `SNR = (R P)² / σ²_total`.
pub fn snr(cfg: &NoiseConfig, responsivity: f64, p_rx: f64, area: f64) -> Result<Snr> {
    let total = noise_breakdown(cfg, responsivity, p_rx, area).total;
    if !(total > 0.0) {
        return Err(Error::ZeroNoise);
    }
    let linear = (responsivity * p_rx).powi(2) / total;
    let db = if linear > 0.0 { 10.0 * linear.log10() } else { f64::NEG_INFINITY };
    Ok(Snr { linear, db })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn background_term() {
        let cfg = NoiseConfig::default();
        assert_relative_eq!(background_noise(&cfg), 1.834e-14, max_relative = 1e-3);
        assert_eq!(signal_shot_noise(&cfg, 0.54, 0.0), 0.0);
    }

    #[test]
    fn signal_shot_term() {
        let cfg = NoiseConfig::default();
        assert_relative_eq!(signal_shot_noise(&cfg, 0.54, 1e-6), 3.456e-18, max_relative = 1e-12);
        assert_relative_eq!(
            signal_shot_noise(&cfg, 0.54, 2e-6),
            2.0 * signal_shot_noise(&cfg, 0.54, 1e-6),
            max_relative = 1e-15
        );
    }

    #[test]
    fn thermal_terms() {
        let cfg = NoiseConfig::default();
        // 8π·1.38e-23·298/10 · 1.12e-6 F/m² · 1e-4 m² · 0.562 · 4e14
        assert_relative_eq!(thermal_noise_feedback(&cfg, 1e-4), 2.602_253_1e-16, max_relative = 1e-7);
        assert_relative_eq!(thermal_noise_channel(&cfg, 1e-4), 2.525_299_1e-10, max_relative = 1e-6);
        assert_relative_eq!(thermal_noise_channel_textbook(&cfg, 1e-4), 2.828_335_0e-16, max_relative = 1e-6);
        let doubled = NoiseConfig { bandwidth: 2.0 * cfg.bandwidth, ..cfg };
        assert_relative_eq!(
            thermal_noise_feedback(&doubled, 1e-4),
            4.0 * thermal_noise_feedback(&cfg, 1e-4),
            max_relative = 1e-14
        );
        assert_relative_eq!(
            thermal_noise_channel(&doubled, 1e-4),
            8.0 * thermal_noise_channel(&cfg, 1e-4),
            max_relative = 1e-14
        );
        let no_fet = NoiseConfig { fet_noise_factor: 0.0, ..cfg };
        assert_eq!(thermal_noise_channel(&no_fet, 1e-4), 0.0);
    }

    #[test]
    fn snr_zero_power() {
        let s = snr(&NoiseConfig::default(), 0.54, 0.0, 1e-4).unwrap();
        assert_eq!(s.linear, 0.0);
        assert_eq!(s.db, f64::NEG_INFINITY);
    }

    #[test]
    fn snr_doubling_adds_six_db_when_signal_shot_is_negligible() {
        let cfg = NoiseConfig::default();
        let a = snr(&cfg, 0.54, 1e-9, 1e-4).unwrap().db;
        let b = snr(&cfg, 0.54, 2e-9, 1e-4).unwrap().db;
        assert!((b - a - 20.0 * 2f64.log10()).abs() < 0.01);
    }
}
