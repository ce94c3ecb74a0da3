//! Steady-state curve geometry, fold detection, regime classification and
//! neuromodulation sweeps.
//!
//! Each curve gives the applied current that holds the neuron at equilibrium
//! value `Ī` of the fast current, with the slower variables either frozen at
//! rest (fast curve) or equilibrated (`I_s = G_s Ī`, `I_u = G_u Ī`):
//!
//! ```text
//! fast:      i_app = Ī/G_f - S_f(Ī)
//! slow:      i_app = Ī/G_f - S_f(Ī) - S_s(G_s Ī) + G_s Ī
//! ultraslow: i_app = Ī/G_f - S_f(Ī) - S_s(G_s Ī) + G_s Ī + G_u Ī
//! ```
//!
//! Inactivation is ignored and the sigmoids use their baseline gains.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{firing_metrics, integrate, FiringRegime, MetricsOptions, SolverOptions};
use crate::error::{Error, Result};
use crate::model::{BiasConfiguration, InputSignal, NeuronState};

pub const DEFAULT_GRID_POINTS: usize = 1024;
pub const MIN_GRID_POINTS: usize = 256;

/// Fold positions are refined to this fraction of the grid step.
const FOLD_REFINE_FRACTION: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CurveKind {
    Fast,
    Slow,
    Ultraslow,
}

impl CurveKind {
    /// Applied current holding the neuron at `ibar` on this curve.
    pub fn value(self, cfg: &BiasConfiguration, ibar: f64) -> f64 {
        let fast = ibar / cfg.g_f - cfg.sig_f.eval(ibar, cfg.sig_f.i_gain0);
        match self {
            CurveKind::Fast => fast,
            CurveKind::Slow | CurveKind::Ultraslow => {
                let is = cfg.g_s * ibar;
                let slow = fast - cfg.sig_s.eval(is, cfg.sig_s.i_gain0) + is;
                if self == CurveKind::Slow {
                    slow
                } else {
                    slow + cfg.g_u * ibar
                }
            }
        }
    }

    /// d(i_app)/dĪ.
    pub fn slope(self, cfg: &BiasConfiguration, ibar: f64) -> f64 {
        let fast = 1.0 / cfg.g_f - cfg.sig_f.slope(ibar, cfg.sig_f.i_gain0);
        match self {
            CurveKind::Fast => fast,
            CurveKind::Slow | CurveKind::Ultraslow => {
                let gs = cfg.g_s;
                let slow = fast - gs * cfg.sig_s.slope(gs * ibar, cfg.sig_s.i_gain0) + gs;
                if self == CurveKind::Slow {
                    slow
                } else {
                    slow + cfg.g_u
                }
            }
        }
    }
}

/// Uniform grid of equilibrium current values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveGrid {
    pub i_min: f64,
    pub i_max: f64,
    pub points: usize,
}

impl CurveGrid {
    /// A grid from zero that covers the rising ranges of both sigmoids and
    /// the largest fast current the feedback can sustain.
    pub fn for_config(cfg: &BiasConfiguration) -> Self {
        let fast_edge = cfg.sig_f.i_thr + 2.0 * cfg.sig_f.i_lin;
        let slow_edge = (cfg.sig_s.i_thr + 2.0 * cfg.sig_s.i_lin) / cfg.g_s;
        let drive = cfg.g_f * (cfg.sig_f.i_gain0 + cfg.sig_s.i_gain0);
        let hi = 1.25 * fast_edge.max(slow_edge).max(drive);
        Self {
            i_min: 0.0,
            i_max: if hi > 0.0 { hi } else { 1e-9 },
            points: DEFAULT_GRID_POINTS,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.i_min.is_finite() && self.i_min >= 0.0) {
            return Err(Error::param("grid.i_min", "must be finite and >= 0"));
        }
        if !(self.i_max.is_finite() && self.i_max > self.i_min) {
            return Err(Error::param("grid.i_max", "must be finite and larger than i_min"));
        }
        if self.points < MIN_GRID_POINTS {
            return Err(Error::param("grid.points", format!("must be >= {MIN_GRID_POINTS}")));
        }
        Ok(())
    }

    pub fn step(&self) -> f64 {
        (self.i_max - self.i_min) / (self.points - 1) as f64
    }

    pub fn values(&self) -> Vec<f64> {
        let h = self.step();
        (0..self.points).map(|k| self.i_min + k as f64 * h).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FoldKind {
    /// Slope turns from positive to negative.
    Upper,
    /// Slope turns from negative to positive.
    Lower,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Fold {
    pub i_bar: f64,
    pub i_app: f64,
    pub kind: FoldKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteadyStateCurve {
    pub kind: CurveKind,
    pub grid: Vec<f64>,
    pub i_app: Vec<f64>,
    pub folds: Vec<Fold>,
    /// `(low, high)` applied current spanned by the negative-slope segments.
    pub bistability_window: Option<(f64, f64)>,
    /// `(start, end)` of the negative-slope segments along the `Ī` axis.
    pub negative_slope_range: Option<(f64, f64)>,
    /// More than two folds; the outermost ones define the window.
    pub multi_fold: bool,
}

impl SteadyStateCurve {
    pub fn is_monotone(&self) -> bool {
        self.negative_slope_range.is_none()
    }
}

/// Samples one curve on `grid` and locates its folds.
pub fn sample_curve(cfg: &BiasConfiguration, kind: CurveKind, grid: &CurveGrid) -> Result<SteadyStateCurve> {
    grid.validate()?;
    let xs = grid.values();
    let ys: Vec<f64> = xs.iter().map(|&x| kind.value(cfg, x)).collect();
    let folds = find_folds(&xs, &ys, |x| kind.slope(cfg, x), |x| kind.value(cfg, x));
    let (window, range) = negative_slope_extent(&xs, &ys, &folds);
    Ok(SteadyStateCurve {
        kind,
        multi_fold: folds.len() > 2,
        grid: xs,
        i_app: ys,
        folds,
        bistability_window: window,
        negative_slope_range: range,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteadyStateCurveSet {
    pub fast: SteadyStateCurve,
    pub slow: SteadyStateCurve,
    pub ultraslow: SteadyStateCurve,
}

pub fn steady_state_curves(cfg: &BiasConfiguration, grid: &CurveGrid) -> Result<SteadyStateCurveSet> {
    cfg.validate()?;
    Ok(SteadyStateCurveSet {
        fast: sample_curve(cfg, CurveKind::Fast, grid)?,
        slow: sample_curve(cfg, CurveKind::Slow, grid)?,
        ultraslow: sample_curve(cfg, CurveKind::Ultraslow, grid)?,
    })
}

/// Folds of a sampled curve.
///
/// Sign changes of the central-difference derivative bracket each fold,
/// which is then refined by bisection on `slope` to 1/100 of the grid step.
pub fn find_folds(
    xs: &[f64],
    ys: &[f64],
    slope: impl Fn(f64) -> f64,
    value: impl Fn(f64) -> f64,
) -> Vec<Fold> {
    let n = xs.len();
    if n < 3 {
        return Vec::new();
    }
    let d: Vec<f64> = (0..n)
        .map(|k| {
            let (a, b) = (k.saturating_sub(1), (k + 1).min(n - 1));
            (ys[b] - ys[a]) / (xs[b] - xs[a])
        })
        .collect();

    let mut folds = Vec::new();
    let mut prev: Option<(usize, bool)> = None;
    for (k, &dk) in d.iter().enumerate() {
        if dk == 0.0 {
            continue;
        }
        let pos = dk > 0.0;
        if let Some((j, was_pos)) = prev {
            if pos != was_pos {
                let tol = FOLD_REFINE_FRACTION * (xs[k] - xs[j]) / (k - j) as f64;
                // central differences smear the sign change over one sample on
                // each side, so look for the analytic root in the widened bracket
                let (lo, hi) = (j.saturating_sub(1), (k + 1).min(n - 1));
                let bracket = (lo..hi)
                    .find(|&m| {
                        let (sa, sb) = (slope(xs[m]), slope(xs[m + 1]));
                        (sa > 0.0) == was_pos && (sb > 0.0) != was_pos
                    })
                    .map_or((xs[j], xs[k]), |m| (xs[m], xs[m + 1]));
                let x = bisect(&slope, bracket.0, bracket.1, tol);
                folds.push(Fold {
                    i_bar: x,
                    i_app: value(x),
                    kind: if was_pos { FoldKind::Upper } else { FoldKind::Lower },
                });
            }
        }
        prev = Some((k, pos));
    }
    folds
}

/// Root of `f` in `[a, b]`, assuming a sign change; falls back to the
/// midpoint when the analytic sign disagrees with the sampled one.
fn bisect(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let mut fa = f(a);
    if fa * f(b) > 0.0 {
        return 0.5 * (a + b);
    }
    while b - a > tol {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if (fm > 0.0) == (fa > 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

type Span = Option<(f64, f64)>;

/// Window in applied current and range in `Ī` covered by negative slope.
fn negative_slope_extent(xs: &[f64], ys: &[f64], folds: &[Fold]) -> (Span, Span) {
    // endpoints of negative-slope segments: folds, plus the grid ends when the
    // curve starts or ends descending
    let mut ends: Vec<(f64, f64)> = folds.iter().map(|f| (f.i_bar, f.i_app)).collect();
    let n = xs.len();
    let starts_down = n >= 2 && ys[1] < ys[0];
    let ends_down = n >= 2 && ys[n - 1] < ys[n - 2];
    if starts_down {
        ends.insert(0, (xs[0], ys[0]));
    }
    if ends_down {
        ends.push((xs[n - 1], ys[n - 1]));
    }
    if ends.len() < 2 {
        return (None, None);
    }
    let lo = ends.iter().map(|e| e.1).fold(f64::INFINITY, f64::min);
    let hi = ends.iter().map(|e| e.1).fold(f64::NEG_INFINITY, f64::max);
    (Some((lo, hi)), Some((ends[0].0, ends[ends.len() - 1].0)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RegimeLabel {
    Resting,
    SpikingOnly,
    BurstingCapable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport {
    pub label: RegimeLabel,
    pub fast_window: Option<(f64, f64)>,
    pub slow_window: Option<(f64, f64)>,
    /// Negative-slope range of the fast curve along `Ī`; its start is the spike threshold.
    pub fast_range: Option<(f64, f64)>,
    /// Negative-slope range of the slow curve along `Ī`.
    pub slow_range: Option<(f64, f64)>,
    pub ultraslow_monotone: bool,
    pub rest_return_guaranteed: bool,
    /// A curve had more than two folds.
    pub unusual: bool,
}

/// Reads the excitability type off the curve geometry.
///
/// Bursting needs a slow negative-slope region that begins at a lower
/// equilibrium current than the fast one, so that the slow subsystem is
/// bistable between rest and spiking.
pub fn classify_regime(
    fast: &SteadyStateCurve,
    slow: &SteadyStateCurve,
    ultraslow: &SteadyStateCurve,
) -> Result<RegimeReport> {
    if fast.grid != slow.grid || fast.grid != ultraslow.grid {
        return Err(Error::Input("curves were sampled on different grids".into()));
    }
    let fast_range = fast.negative_slope_range;
    let slow_range = slow.negative_slope_range;
    let label = match (fast_range, slow_range) {
        (None, _) => RegimeLabel::Resting,
        (Some(f), Some(s)) if s.0 < f.0 => RegimeLabel::BurstingCapable,
        _ => RegimeLabel::SpikingOnly,
    };
    let ultraslow_monotone = ultraslow.is_monotone();
    Ok(RegimeReport {
        label,
        fast_window: fast.bistability_window,
        slow_window: slow.bistability_window,
        fast_range,
        slow_range,
        ultraslow_monotone,
        rest_return_guaranteed: ultraslow_monotone,
        unusual: fast.multi_fold || slow.multi_fold || ultraslow.multi_fold,
    })
}

/// Curves on the default grid and their classification.
pub fn classify_config(cfg: &BiasConfiguration) -> Result<(SteadyStateCurveSet, RegimeReport)> {
    let set = steady_state_curves(cfg, &CurveGrid::for_config(cfg))?;
    let report = classify_regime(&set.fast, &set.slow, &set.ultraslow)?;
    Ok((set, report))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Equilibrium {
    pub state: NeuronState,
    pub stable: bool,
}

const ROOT_SCAN_POINTS: usize = 4096;

/// All `Ī >= 0` with `kind.value(Ī) = i_app`.
fn curve_roots(cfg: &BiasConfiguration, kind: CurveKind, i_app: f64, hi: f64) -> Vec<f64> {
    let h = hi / (ROOT_SCAN_POINTS - 1) as f64;
    let g = |x: f64| kind.value(cfg, x) - i_app;
    let mut roots = Vec::new();
    let mut x0 = 0.0;
    let mut g0 = g(x0);
    if g0 == 0.0 {
        roots.push(0.0);
    }
    for k in 1..ROOT_SCAN_POINTS {
        let x1 = k as f64 * h;
        let g1 = g(x1);
        if g1 == 0.0 {
            roots.push(x1);
        } else if g0 != 0.0 && (g0 > 0.0) != (g1 > 0.0) {
            roots.push(bisect(&g, x0, x1, 0.0));
        }
        x0 = x1;
        g0 = g1;
    }
    roots
}

/// Upper end of the root scan: beyond it every curve exceeds `i_app`.
fn root_bound(cfg: &BiasConfiguration, kind: CurveKind, i_app: f64) -> f64 {
    let gains = cfg.sig_f.i_gain0 + cfg.sig_s.i_gain0;
    let rate = match kind {
        CurveKind::Fast => 1.0 / cfg.g_f,
        CurveKind::Slow => 1.0 / cfg.g_f + cfg.g_s,
        CurveKind::Ultraslow => 1.0 / cfg.g_f + cfg.g_s + cfg.g_u,
    };
    let bound = 1.01 * (i_app.max(0.0) + gains) / rate;
    if bound > 0.0 {
        bound
    } else {
        1e-12
    }
}

/// Equilibria of the full system without rectification or inactivation.
///
/// Stability follows the sign of the ultraslow curve slope at the root.
pub fn equilibria(cfg: &BiasConfiguration, i_app: f64) -> Result<Vec<Equilibrium>> {
    subsystem_equilibria(cfg, CurveKind::Ultraslow, i_app)
}

/// Equilibria of one timescale subsystem: roots of `kind.value(Ī) = i_app`,
/// with slower currents at rest (fast) or equilibrated (slow, ultraslow).
pub fn subsystem_equilibria(cfg: &BiasConfiguration, kind: CurveKind, i_app: f64) -> Result<Vec<Equilibrium>> {
    cfg.validate()?;
    if !i_app.is_finite() {
        return Err(Error::param("i_app", "must be finite"));
    }
    let hi = root_bound(cfg, kind, i_app);
    Ok(curve_roots(cfg, kind, i_app, hi)
        .into_iter()
        .map(|x| {
            let state = match kind {
                CurveKind::Fast => NeuronState::new(x, 0.0, 0.0),
                CurveKind::Slow => NeuronState::new(x, cfg.g_s * x, 0.0),
                CurveKind::Ultraslow => NeuronState::new(x, cfg.g_s * x, cfg.g_u * x),
            };
            Equilibrium {
                state,
                stable: kind.slope(cfg, x) > 0.0,
            }
        })
        .collect())
}

/// Bias parameter varied by a neuromodulation sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    #[default]
    SlowSigmoidGain,
    FastSigmoidGain,
    SlowSigmoidThreshold,
    FastSigmoidThreshold,
}

impl SweepParam {
    pub fn get(self, cfg: &BiasConfiguration) -> f64 {
        match self {
            SweepParam::SlowSigmoidGain => cfg.sig_s.i_gain0,
            SweepParam::FastSigmoidGain => cfg.sig_f.i_gain0,
            SweepParam::SlowSigmoidThreshold => cfg.sig_s.i_thr,
            SweepParam::FastSigmoidThreshold => cfg.sig_f.i_thr,
        }
    }

    pub fn with(self, cfg: &BiasConfiguration, v: f64) -> BiasConfiguration {
        let mut c = cfg.clone();
        match self {
            SweepParam::SlowSigmoidGain => c.sig_s.i_gain0 = v,
            SweepParam::FastSigmoidGain => c.sig_f.i_gain0 = v,
            SweepParam::SlowSigmoidThreshold => c.sig_s.i_thr = v,
            SweepParam::FastSigmoidThreshold => c.sig_f.i_thr = v,
        }
        c
    }
}

/// Applied current used by confirmation simulations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepInput {
    /// The same constant current (A) at every sweep point.
    Fixed(f64),
    /// Chosen per point from the curve geometry, see [`confirmation_input`].
    Geometric,
}

/// Confirmation run made at every sweep point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSimulation {
    pub input: SweepInput,
    pub t_end: f64,
    /// Defaults to the standard step for each configuration.
    #[serde(default)]
    pub dt: Option<f64>,
}

/// Constant input that places the full-system equilibrium in the middle of
/// the relevant negative-slope region: the slow one for a bursting-capable
/// neuron, the fast one for a spiking-only neuron. `None` when resting.
pub fn confirmation_input(cfg: &BiasConfiguration, report: &RegimeReport) -> Option<f64> {
    let range = match report.label {
        RegimeLabel::Resting => return None,
        RegimeLabel::BurstingCapable => report.slow_range?,
        RegimeLabel::SpikingOnly => report.fast_range?,
    };
    Some(CurveKind::Ultraslow.value(cfg, 0.5 * (range.0 + range.1)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub value: f64,
    pub label: RegimeLabel,
    /// Applied current of the confirmation run.
    pub i_app: Option<f64>,
    pub simulated: Option<FiringRegime>,
    pub spikes_per_burst: Option<f64>,
    pub burst_rate: Option<f64>,
    pub spike_rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub param: SweepParam,
    pub points: Vec<SweepPoint>,
    /// First index labeled bursting-capable by the classifier.
    pub classifier_transition: Option<usize>,
    /// First index whose simulation is bursting.
    pub simulation_transition: Option<usize>,
    /// Parameter value at `classifier_transition`.
    pub transition_value: Option<f64>,
}

pub const MIN_SWEEP_STEPS: usize = 8;

/// Sweeps `param` linearly over `range` (inclusive) in `steps` points.
pub fn neuromod_sweep(
    cfg: &BiasConfiguration,
    param: SweepParam,
    range: (f64, f64),
    steps: usize,
    sim: Option<&SweepSimulation>,
) -> Result<SweepReport> {
    if steps < MIN_SWEEP_STEPS {
        return Err(Error::param("steps", format!("must be >= {MIN_SWEEP_STEPS}")));
    }
    if !(range.0.is_finite() && range.1.is_finite() && range.0 >= 0.0 && range.1 > range.0) {
        return Err(Error::param("range", "must be finite, non-negative and increasing"));
    }
    cfg.validate()?;
    let values: Vec<f64> = (0..steps)
        .map(|k| range.0 + (range.1 - range.0) * k as f64 / (steps - 1) as f64)
        .collect();

    let points = values
        .par_iter()
        .map(|&v| sweep_point(&param.with(cfg, v), v, sim))
        .collect::<Result<Vec<_>>>()?;

    let classifier_transition = points
        .iter()
        .position(|p| p.label == RegimeLabel::BurstingCapable);
    let simulation_transition = points
        .iter()
        .position(|p| p.simulated == Some(FiringRegime::Bursting));
    Ok(SweepReport {
        param,
        transition_value: classifier_transition.map(|k| points[k].value),
        points,
        classifier_transition,
        simulation_transition,
    })
}

fn sweep_point(cfg: &BiasConfiguration, value: f64, sim: Option<&SweepSimulation>) -> Result<SweepPoint> {
    let (_, report) = classify_config(cfg)?;
    let mut point = SweepPoint {
        value,
        label: report.label,
        i_app: None,
        simulated: None,
        spikes_per_burst: None,
        burst_rate: None,
        spike_rate: None,
    };
    let Some(s) = sim else {
        return Ok(point);
    };
    let i_app = match s.input {
        SweepInput::Fixed(a) => Some(a),
        SweepInput::Geometric => confirmation_input(cfg, &report),
    };
    point.i_app = i_app;
    if let Some(i_app) = i_app.filter(|a| *a > 0.0) {
        let mut opts = SolverOptions::for_config(cfg, s.t_end);
        if let Some(dt) = s.dt {
            opts.dt = dt;
        }
        let trace = integrate(cfg, &InputSignal::constant(i_app), &opts)?;
        let m = firing_metrics(&trace, &MetricsOptions::for_config(cfg))?;
        point.simulated = Some(m.regime_label);
        point.spikes_per_burst = m.spikes_per_burst_mean;
        point.burst_rate = m.burst_rate;
        point.spike_rate = Some(m.spike_rate);
    } else {
        point.simulated = Some(FiringRegime::Quiescent);
    }
    Ok(point)
}
