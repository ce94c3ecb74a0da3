//! Parameterization and vector field of the three-timescale mixed-feedback neuron.
//!
//! All state variables are currents (A) and all time constants are in seconds.
//! The neuron is three first-order low-pass filters (fast, slow, ultraslow)
//! coupled through two current-mode sigmoids that provide positive feedback
//! and two linear negative feedback paths:
//!
//! ```text
//! tau_f dI_f/dt = -I_f + G_f * (S_f(I_f; I_Gf) + S_s(I_s; I_Gs) - I_s - I_u + I_app)
//! tau_s dI_s/dt = -I_s + G_s * I_f
//! tau_u dI_u/dt = -I_u + G_u * I_f
//! ```
//!
//! With inactivation enabled the sigmoid gains are reduced by the slower
//! currents: `I_Gf = max(0, I_Gf0 - I_s)` and `I_Gs = max(0, I_Gs0 - I_u)`.

use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slope of the unit sigmoid at its midpoint is `SIGMOID_STEEPNESS / 4`.
///
/// With 8 the unit sigmoid is below 0.02 at `x = 0` and above 0.98 at
/// `x = 1`, so `i_thr` and `i_lin` bracket the rising part of the curve.
pub const SIGMOID_STEEPNESS: f64 = 8.0;

/// Minimum acceptable ratio between neighbouring time constants before the
/// validator warns about weak timescale separation.
pub const TIMESCALE_RATIO_WARN: f64 = 10.0;

/// Smooth monotone map from the normalized input to `(0, 1)`, centred at 1/2.
#[inline]
pub fn unit_sigmoid(x: f64) -> f64 {
    let z = SIGMOID_STEEPNESS * (x - 0.5);
    // keep exp() in range for very negative arguments
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

#[inline]
fn unit_sigmoid_slope(x: f64) -> f64 {
    let s = unit_sigmoid(x);
    SIGMOID_STEEPNESS * s * (1.0 - s)
}

/// Bias currents of one current-mode sigmoid block.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SigmoidParams {
    /// Input threshold current (A).
    pub i_thr: f64,
    /// Width of the rising input range (A).
    pub i_lin: f64,
    /// Baseline saturation current (A).
    pub i_gain0: f64,
}

impl SigmoidParams {
    pub fn new(i_thr: f64, i_lin: f64, i_gain0: f64) -> Self {
        Self {
            i_thr,
            i_lin,
            i_gain0,
        }
    }

    pub fn validate(&self, name: &str) -> Result<()> {
        if !(self.i_thr.is_finite() && self.i_thr >= 0.0) {
            return Err(Error::param(format!("{name}.i_thr"), "must be finite and >= 0"));
        }
        if !(self.i_lin.is_finite() && self.i_lin > 0.0) {
            return Err(Error::param(format!("{name}.i_lin"), "must be finite and > 0"));
        }
        if !(self.i_gain0.is_finite() && self.i_gain0 >= 0.0) {
            return Err(Error::param(format!("{name}.i_gain0"), "must be finite and >= 0"));
        }
        Ok(())
    }

    /// Output current for input `i_in` and saturation level `gain`.
    ///
    /// No validation; use [`sigmoid_eval`] for the checked version.
    #[inline]
    pub fn eval(&self, i_in: f64, gain: f64) -> f64 {
        gain * unit_sigmoid((i_in - self.i_thr) / self.i_lin)
    }

    /// dS/dI_in at `i_in` for saturation level `gain`.
    #[inline]
    pub fn slope(&self, i_in: f64, gain: f64) -> f64 {
        gain * unit_sigmoid_slope((i_in - self.i_thr) / self.i_lin) / self.i_lin
    }

    pub fn scaled(&self, lambda: f64) -> Self {
        Self {
            i_thr: self.i_thr * lambda,
            i_lin: self.i_lin * lambda,
            i_gain0: self.i_gain0 * lambda,
        }
    }
}

/// Evaluates `S(i_in) = gain * sigma((i_in - i_thr) / i_lin)`.
pub fn sigmoid_eval(i_in: f64, p: &SigmoidParams, i_gain_effective: f64) -> Result<f64> {
    p.validate("sigmoid")?;
    if !(i_gain_effective >= 0.0) {
        return Err(Error::param("i_gain_effective", "must be >= 0"));
    }
    Ok(p.eval(i_in, i_gain_effective))
}

/// Every tunable quantity of the neuron, expressed at model level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BiasConfiguration {
    pub tau_f: f64,
    pub tau_s: f64,
    pub tau_u: f64,
    pub g_f: f64,
    pub g_s: f64,
    pub g_u: f64,
    pub sig_f: SigmoidParams,
    pub sig_s: SigmoidParams,
    pub inactivation_enabled: bool,
    #[serde(default = "default_true")]
    pub rectify_filter_inputs: bool,
}

fn default_true() -> bool {
    true
}

/// Non-fatal findings of [`BiasConfiguration::validate`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigWarning {
    pub field: String,
    pub message: String,
}

impl BiasConfiguration {
    /// Checks hard invariants and returns soft warnings.
    pub fn validate(&self) -> Result<Vec<ConfigWarning>> {
        for (name, v) in [("tau_f", self.tau_f), ("tau_s", self.tau_s), ("tau_u", self.tau_u)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::param(name, "time constant must be finite and > 0"));
            }
        }
        if !(self.tau_f < self.tau_s) {
            return Err(Error::param("tau_s", "must be larger than tau_f"));
        }
        if !(self.tau_s < self.tau_u) {
            return Err(Error::param("tau_u", "must be larger than tau_s"));
        }
        for (name, v) in [("g_f", self.g_f), ("g_s", self.g_s), ("g_u", self.g_u)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::param(name, "filter gain must be finite and > 0"));
            }
        }
        self.sig_f.validate("sig_f")?;
        self.sig_s.validate("sig_s")?;

        let mut warnings = Vec::new();
        let rs = self.tau_s / self.tau_f;
        if rs < TIMESCALE_RATIO_WARN {
            warnings.push(ConfigWarning {
                field: "tau_s".into(),
                message: format!("tau_s/tau_f = {rs:.2} is below {TIMESCALE_RATIO_WARN}"),
            });
        }
        let ru = self.tau_u / self.tau_s;
        if ru < TIMESCALE_RATIO_WARN {
            warnings.push(ConfigWarning {
                field: "tau_u".into(),
                message: format!("tau_u/tau_s = {ru:.2} is below {TIMESCALE_RATIO_WARN}"),
            });
        }
        Ok(warnings)
    }

    /// Largest current scale in the configuration, used to normalize tolerances.
    pub fn current_scale(&self) -> f64 {
        [
            self.sig_f.i_gain0,
            self.sig_f.i_thr,
            self.sig_f.i_lin,
            self.sig_s.i_gain0,
            self.sig_s.i_thr,
            self.sig_s.i_lin,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

/// Current-mode state `(I_f, I_s, I_u)` in amperes.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NeuronState {
    pub i_f: f64,
    pub i_s: f64,
    pub i_u: f64,
}

impl NeuronState {
    pub const ZERO: NeuronState = NeuronState {
        i_f: 0.0,
        i_s: 0.0,
        i_u: 0.0,
    };

    pub fn new(i_f: f64, i_s: f64, i_u: f64) -> Self {
        Self { i_f, i_s, i_u }
    }

    pub fn is_finite(&self) -> bool {
        self.i_f.is_finite() && self.i_s.is_finite() && self.i_u.is_finite()
    }

    pub fn max_abs(&self) -> f64 {
        self.i_f.abs().max(self.i_s.abs()).max(self.i_u.abs())
    }
}

impl Add for NeuronState {
    type Output = NeuronState;
    fn add(self, o: NeuronState) -> NeuronState {
        NeuronState::new(self.i_f + o.i_f, self.i_s + o.i_s, self.i_u + o.i_u)
    }
}

impl Sub for NeuronState {
    type Output = NeuronState;
    fn sub(self, o: NeuronState) -> NeuronState {
        NeuronState::new(self.i_f - o.i_f, self.i_s - o.i_s, self.i_u - o.i_u)
    }
}

impl Mul<f64> for NeuronState {
    type Output = NeuronState;
    fn mul(self, k: f64) -> NeuronState {
        NeuronState::new(self.i_f * k, self.i_s * k, self.i_u * k)
    }
}

/// One piece of a piecewise-constant applied current.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputSegment {
    pub start_time: f64,
    pub amplitude: f64,
}

/// Piecewise-constant applied current `I_app(t)`; zero before the first segment.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputSignal {
    pub segments: Vec<InputSegment>,
}

impl InputSignal {
    pub fn constant(amplitude: f64) -> Self {
        Self {
            segments: vec![InputSegment {
                start_time: 0.0,
                amplitude,
            }],
        }
    }

    /// Zero until `t0`, then `amplitude`.
    pub fn step(t0: f64, amplitude: f64) -> Self {
        let mut segments = Vec::new();
        if t0 > 0.0 {
            segments.push(InputSegment {
                start_time: 0.0,
                amplitude: 0.0,
            });
        }
        segments.push(InputSegment {
            start_time: t0,
            amplitude,
        });
        Self { segments }
    }

    /// Consecutive levels, each held for `dwell` seconds starting at t = 0.
    pub fn staircase(levels: &[f64], dwell: f64) -> Self {
        Self {
            segments: levels
                .iter()
                .enumerate()
                .map(|(k, &amplitude)| InputSegment {
                    start_time: k as f64 * dwell,
                    amplitude,
                })
                .collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (k, seg) in self.segments.iter().enumerate() {
            if !(seg.amplitude.is_finite() && seg.amplitude >= 0.0) {
                return Err(Error::param(
                    format!("segments[{k}].amplitude"),
                    "must be finite and >= 0",
                ));
            }
            if !seg.start_time.is_finite() {
                return Err(Error::param(format!("segments[{k}].start_time"), "must be finite"));
            }
            if k > 0 && !(seg.start_time > self.segments[k - 1].start_time) {
                return Err(Error::param(
                    format!("segments[{k}].start_time"),
                    "segment start times must be strictly increasing",
                ));
            }
        }
        Ok(())
    }

    pub fn amplitude_at(&self, t: f64) -> f64 {
        let idx = self.segments.partition_point(|s| s.start_time <= t);
        if idx == 0 {
            0.0
        } else {
            self.segments[idx - 1].amplitude
        }
    }

    pub fn max_amplitude(&self) -> f64 {
        self.segments.iter().map(|s| s.amplitude).fold(0.0, f64::max)
    }

    pub fn scaled(&self, amplitude_factor: f64, time_factor: f64) -> Self {
        Self {
            segments: self
                .segments
                .iter()
                .map(|s| InputSegment {
                    start_time: s.start_time * time_factor,
                    amplitude: s.amplitude * amplitude_factor,
                })
                .collect(),
        }
    }
}

/// Sigmoid gain currents after positive-feedback inactivation.
pub fn effective_gains(state: &NeuronState, cfg: &BiasConfiguration) -> (f64, f64) {
    if cfg.inactivation_enabled {
        (
            (cfg.sig_f.i_gain0 - state.i_s).max(0.0),
            (cfg.sig_s.i_gain0 - state.i_u).max(0.0),
        )
    } else {
        (cfg.sig_f.i_gain0, cfg.sig_s.i_gain0)
    }
}

/// Net current entering the fast filter, before rectification.
#[inline]
pub fn fast_filter_input(state: &NeuronState, i_app: f64, cfg: &BiasConfiguration) -> f64 {
    let (i_gf, i_gs) = effective_gains(state, cfg);
    cfg.sig_f.eval(state.i_f, i_gf) + cfg.sig_s.eval(state.i_s, i_gs) - state.i_s - state.i_u
        + i_app
}

/// Time derivative of the state.
pub fn vector_field(state: &NeuronState, i_app: f64, cfg: &BiasConfiguration) -> NeuronState {
    let mut u = fast_filter_input(state, i_app, cfg);
    if cfg.rectify_filter_inputs && u < 0.0 {
        u = 0.0;
    }
    NeuronState {
        i_f: (-state.i_f + cfg.g_f * u) / cfg.tau_f,
        i_s: (-state.i_s + cfg.g_s * state.i_f) / cfg.tau_s,
        i_u: (-state.i_u + cfg.g_u * state.i_f) / cfg.tau_u,
    }
}
