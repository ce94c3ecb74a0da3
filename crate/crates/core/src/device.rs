//! Device-level quantities: subthreshold bias mapping, DPI filter parameters,
//! uniform current scaling and the temperature model.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::BiasConfiguration;

/// Boltzmann constant (J/K).
pub const BOLTZMANN: f64 = 1.380_649e-23;
/// Elementary charge (C).
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;

pub const T_MIN: f64 = 250.0;
pub const T_MAX: f64 = 400.0;

/// Filter capacitors of the fast, slow and ultraslow DPIs (F).
pub const C_FAST: f64 = 0.5e-12;
pub const C_SLOW: f64 = 2e-12;
pub const C_ULTRASLOW: f64 = 8e-12;

/// Thermal voltage kT/q (V).
pub fn thermal_voltage(temperature: f64) -> f64 {
    BOLTZMANN * temperature / ELEMENTARY_CHARGE
}

fn check_temperature(t: f64) -> Result<()> {
    if !(T_MIN..=T_MAX).contains(&t) {
        return Err(Error::param(
            "temperature",
            format!("{t} K is outside [{T_MIN}, {T_MAX}] K"),
        ));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceParams {
    /// Leakage prefactor at `t_ref` (A).
    pub i0: f64,
    /// Subthreshold slope factor.
    pub kappa: f64,
    /// Reference temperature (K).
    pub t_ref: f64,
    #[serde(default)]
    pub temp_model: TempModel,
}

impl Default for DeviceParams {
    fn default() -> Self {
        Self {
            i0: 1e-18,
            kappa: 0.7,
            t_ref: 300.0,
            temp_model: TempModel::default(),
        }
    }
}

impl DeviceParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.i0.is_finite() && self.i0 > 0.0) {
            return Err(Error::param("i0", "must be finite and > 0"));
        }
        if !(self.kappa > 0.0 && self.kappa <= 1.0) {
            return Err(Error::param("kappa", "must be in (0, 1]"));
        }
        check_temperature(self.t_ref)?;
        self.temp_model.validate()
    }

    /// Leakage prefactor at `temperature`, following the temperature model.
    pub fn i0_at(&self, temperature: f64) -> f64 {
        self.i0 * self.temp_model.speedup(self.t_ref, temperature)
    }
}

/// Uniform current speedup `s = exp(alpha * (T_to - T_from))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TempModel {
    /// Per kelvin.
    pub alpha: f64,
}

impl Default for TempModel {
    /// Calibrated so that currents grow 50-fold between 5 °C and 45 °C.
    fn default() -> Self {
        Self {
            alpha: 50f64.ln() / 40.0,
        }
    }
}

impl TempModel {
    pub fn validate(&self) -> Result<()> {
        if !self.alpha.is_finite() {
            return Err(Error::param("alpha", "must be finite"));
        }
        Ok(())
    }

    pub fn speedup(&self, t_from: f64, t_to: f64) -> f64 {
        (self.alpha * (t_to - t_from)).exp()
    }
}

/// `I_0(T) * exp(kappa * v / U_T(T))`.
pub fn bias_voltage_to_current(v: f64, dev: &DeviceParams, temperature: f64) -> Result<f64> {
    dev.validate()?;
    check_temperature(temperature)?;
    if !(v.is_finite() && v >= 0.0) {
        return Err(Error::param("v", "must be finite and >= 0"));
    }
    Ok(dev.i0_at(temperature) * (dev.kappa * v / thermal_voltage(temperature)).exp())
}

/// `(U_T / kappa) * ln(i / I_0(T))`.
pub fn current_to_bias_voltage(i: f64, dev: &DeviceParams, temperature: f64) -> Result<f64> {
    dev.validate()?;
    check_temperature(temperature)?;
    if !(i.is_finite() && i > 0.0) {
        return Err(Error::Domain(format!("bias current must be > 0, got {i:e} A")));
    }
    Ok(thermal_voltage(temperature) / dev.kappa * (i / dev.i0_at(temperature)).ln())
}

/// Capacitor and bias currents of one DPI low-pass filter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DpiSpec {
    /// Filter capacitance (F).
    pub c: f64,
    pub i_tau: f64,
    pub i_th: f64,
}

impl DpiSpec {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("c", self.c), ("i_tau", self.i_tau), ("i_th", self.i_th)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::param(name, "must be finite and > 0"));
            }
        }
        Ok(())
    }
}

/// Gain `i_th / i_tau` and time constant `C U_T / (kappa i_tau)` of a DPI.
pub fn dpi_params(spec: &DpiSpec, dev: &DeviceParams, temperature: f64) -> Result<(f64, f64)> {
    spec.validate()?;
    dev.validate()?;
    check_temperature(temperature)?;
    let gain = spec.i_th / spec.i_tau;
    let tau = spec.c * thermal_voltage(temperature) / (dev.kappa * spec.i_tau);
    Ok((gain, tau))
}

/// Multiplies every current by `lambda` and divides every time constant by it.
pub fn uniform_scale(cfg: &BiasConfiguration, lambda: f64) -> Result<BiasConfiguration> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::param("lambda", "must be finite and > 0"));
    }
    Ok(BiasConfiguration {
        tau_f: cfg.tau_f / lambda,
        tau_s: cfg.tau_s / lambda,
        tau_u: cfg.tau_u / lambda,
        sig_f: cfg.sig_f.scaled(lambda),
        sig_s: cfg.sig_s.scaled(lambda),
        ..cfg.clone()
    })
}

/// Configuration seen at `t_to` for biases set at `t_from`.
pub fn temperature_transform(
    cfg: &BiasConfiguration,
    t_from: f64,
    t_to: f64,
    model: &TempModel,
) -> Result<BiasConfiguration> {
    check_temperature(t_from)?;
    check_temperature(t_to)?;
    model.validate()?;
    uniform_scale(cfg, model.speedup(t_from, t_to))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::tests::linear_cfg;

    #[test]
    fn thermal_voltage_at_300k() {
        assert!((thermal_voltage(300.0) - 0.025852).abs() < 1e-6);
    }

    #[test]
    fn zero_bias_gives_leakage() {
        let dev = DeviceParams::default();
        assert_eq!(bias_voltage_to_current(0.0, &dev, 300.0).unwrap(), 1e-18);
    }

    #[test]
    fn half_volt_bias() {
        let dev = DeviceParams::default();
        let i = bias_voltage_to_current(0.5, &dev, 300.0).unwrap();
        let want = 1e-18 * (0.7 * 0.5 / thermal_voltage(300.0)).exp();
        assert_eq!(i, want);
        assert!((i - 7.6e-13).abs() < 0.05e-13, "{i:e}");
    }

    #[test]
    fn inverse_rejects_non_positive() {
        let dev = DeviceParams::default();
        assert!(matches!(current_to_bias_voltage(0.0, &dev, 300.0), Err(Error::Domain(_))));
        assert!(current_to_bias_voltage(-1e-9, &dev, 300.0).is_err());
    }

    #[test]
    fn temperature_range_checked() {
        let dev = DeviceParams::default();
        assert!(bias_voltage_to_current(0.1, &dev, 200.0).is_err());
        assert!(dpi_params(&DpiSpec { c: 1e-12, i_tau: 1e-10, i_th: 1e-10 }, &dev, 450.0).is_err());
    }

    #[test]
    fn unit_gain_dpi() {
        let dev = DeviceParams::default();
        let (g, _) = dpi_params(&DpiSpec { c: C_FAST, i_tau: 1e-10, i_th: 1e-10 }, &dev, 300.0).unwrap();
        assert_eq!(g, 1.0);
    }

    #[test]
    fn kappa_bounds() {
        let mut dev = DeviceParams::default();
        dev.kappa = 1.2;
        assert!(dev.validate().is_err());
        dev.kappa = 1.0;
        assert!(dev.validate().is_ok());
    }

    #[test]
    fn identity_scale_and_transform() {
        let cfg = linear_cfg();
        assert_eq!(uniform_scale(&cfg, 1.0).unwrap(), cfg);
        let same = temperature_transform(&cfg, 300.0, 300.0, &TempModel::default()).unwrap();
        assert_eq!(same, cfg);
        assert!(uniform_scale(&cfg, 0.0).is_err());
    }

    #[test]
    fn scale_leaves_gains() {
        let cfg = linear_cfg();
        let s = uniform_scale(&cfg, 7.0).unwrap();
        assert_eq!((s.g_f, s.g_s, s.g_u), (cfg.g_f, cfg.g_s, cfg.g_u));
        assert_eq!(s.sig_f.i_thr, 7.0 * cfg.sig_f.i_thr);
    }
}
