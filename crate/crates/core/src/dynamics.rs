//! Fixed-step integration of the neuron and event extraction from traces.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{vector_field, BiasConfiguration, ConfigWarning, InputSignal, NeuronState};

/// Steps coarser than `tau_f / MAX_STEP_DIVISOR` are rejected and replaced.
pub const MAX_STEP_DIVISOR: f64 = 20.0;
/// Default step is `tau_f / DEFAULT_STEP_DIVISOR`.
pub const DEFAULT_STEP_DIVISOR: f64 = 50.0;

/// Spike detector thresholds as fractions of the fast sigmoid gain.
pub const RISE_FRACTION: f64 = 0.3;
pub const FALL_FRACTION: f64 = 0.15;

/// Default burst split: mean long ISI over mean short ISI.
pub const BURST_SPLIT_FACTOR: f64 = 2.5;

/// Default transient exclusion, in units of `tau_u`.
pub const TRANSIENT_TAU_U: f64 = 3.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverOptions {
    /// Fixed step (s).
    pub dt: f64,
    /// Simulated horizon (s).
    pub t_end: f64,
    /// Keep every n-th sample in the trace.
    #[serde(default = "one")]
    pub record_stride: usize,
    #[serde(default)]
    pub initial_state: NeuronState,
}

fn one() -> usize {
    1
}

impl SolverOptions {
    /// Default step for `cfg` over `t_end` seconds, recording every step.
    pub fn for_config(cfg: &BiasConfiguration, t_end: f64) -> Self {
        Self {
            dt: cfg.tau_f / DEFAULT_STEP_DIVISOR,
            t_end,
            record_stride: 1,
            initial_state: NeuronState::ZERO,
        }
    }

    /// Returns the step actually used and any warning about replacing it.
    pub fn resolve_step(&self, cfg: &BiasConfiguration) -> Result<(f64, Option<ConfigWarning>)> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::param("dt", "must be finite and > 0"));
        }
        if !(self.t_end.is_finite() && self.t_end >= 0.0) {
            return Err(Error::param("t_end", "must be finite and >= 0"));
        }
        if self.record_stride == 0 {
            return Err(Error::param("record_stride", "must be >= 1"));
        }
        if !self.initial_state.is_finite() {
            return Err(Error::param("initial_state", "must be finite"));
        }
        let limit = cfg.tau_f / MAX_STEP_DIVISOR;
        if self.dt > limit {
            let dt = cfg.tau_f / DEFAULT_STEP_DIVISOR;
            Ok((
                dt,
                Some(ConfigWarning {
                    field: "dt".into(),
                    message: format!(
                        "dt = {:e} s exceeds tau_f/{MAX_STEP_DIVISOR}; using {dt:e} s",
                        self.dt
                    ),
                }),
            ))
        } else {
            Ok((self.dt, None))
        }
    }
}

/// Hysteresis thresholds on `I_f`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpikeThresholds {
    pub rise: f64,
    pub fall: f64,
}

impl SpikeThresholds {
    /// Default thresholds, or `None` when the fast sigmoid has no gain (no spikes possible).
    pub fn for_config(cfg: &BiasConfiguration) -> Option<Self> {
        let g = cfg.sig_f.i_gain0;
        (g > 0.0).then(|| Self {
            rise: RISE_FRACTION * g,
            fall: FALL_FRACTION * g,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fall > 0.0) {
            return Err(Error::param("fall", "must be > 0"));
        }
        if !(self.rise > self.fall) {
            return Err(Error::param("rise", "must be larger than fall"));
        }
        Ok(())
    }
}

/// One detected spike.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpikeEvent {
    /// Upward crossing of the rise threshold; this is the spike time.
    pub time: f64,
    /// Last upward crossing of the fall threshold before `time`.
    pub onset: f64,
    /// Downward crossing of the fall threshold that re-armed the detector.
    pub offset: Option<f64>,
}

impl SpikeEvent {
    /// Time spent above the fall threshold, when the spike has ended.
    pub fn width(&self) -> Option<f64> {
        self.offset.map(|o| o - self.onset)
    }
}

/// Streaming hysteresis detector; fed one sample at a time.
#[derive(Debug, Clone)]
pub struct SpikeDetector {
    th: SpikeThresholds,
    armed: bool,
    above_fall_since: Option<f64>,
    events: Vec<SpikeEvent>,
}

impl SpikeDetector {
    pub fn new(th: SpikeThresholds) -> Result<Self> {
        th.validate()?;
        Ok(Self {
            th,
            armed: true,
            above_fall_since: None,
            events: Vec::new(),
        })
    }

    /// Returns `true` when a spike is registered at this sample.
    pub fn push(&mut self, t: f64, i_f: f64) -> bool {
        if i_f >= self.th.fall {
            if self.above_fall_since.is_none() {
                self.above_fall_since = Some(t);
            }
        } else {
            self.above_fall_since = None;
        }

        if self.armed {
            if i_f > self.th.rise {
                self.armed = false;
                self.events.push(SpikeEvent {
                    time: t,
                    onset: self.above_fall_since.unwrap_or(t),
                    offset: None,
                });
                return true;
            }
        } else if i_f < self.th.fall {
            self.armed = true;
            if let Some(ev) = self.events.last_mut() {
                ev.offset = Some(t);
            }
        }
        false
    }

    pub fn finish(self) -> Vec<SpikeEvent> {
        self.events
    }
}

/// Spike events of `i_f` sampled at times `t`.
pub fn detect_spike_events(t: &[f64], i_f: &[f64], th: SpikeThresholds) -> Result<Vec<SpikeEvent>> {
    if t.len() != i_f.len() {
        return Err(Error::Input("time and current columns differ in length".into()));
    }
    let mut det = SpikeDetector::new(th)?;
    for (&tk, &x) in t.iter().zip(i_f) {
        det.push(tk, x);
    }
    Ok(det.finish())
}

/// A group of closely spaced spikes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Burst {
    /// Time of the first spike (s).
    pub start: f64,
    /// Time of the last spike (s).
    pub end: f64,
    pub spike_count: usize,
}

/// Uniformly sampled trajectory with detected events.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Trace {
    pub t: Vec<f64>,
    pub i_f: Vec<f64>,
    pub i_s: Vec<f64>,
    pub i_u: Vec<f64>,
    pub i_app: Vec<f64>,
    pub spikes: Vec<f64>,
    pub spike_events: Vec<SpikeEvent>,
    pub bursts: Vec<Burst>,
    /// Step used by the integrator (s).
    pub dt: f64,
    pub warnings: Vec<ConfigWarning>,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn state(&self, k: usize) -> NeuronState {
        NeuronState::new(self.i_f[k], self.i_s[k], self.i_u[k])
    }

    pub fn t_end(&self) -> f64 {
        self.t.last().copied().unwrap_or(0.0)
    }

    /// Re-runs the event detectors on the sampled `i_f` column.
    pub fn redetect(&mut self, th: Option<SpikeThresholds>, burst: &BurstOptions) -> Result<()> {
        self.spike_events = match th {
            Some(th) => detect_spike_events(&self.t, &self.i_f, th)?,
            None => Vec::new(),
        };
        self.spikes = self.spike_events.iter().map(|e| e.time).collect();
        self.bursts = segment_bursts(&self.spikes, burst);
        Ok(())
    }
}

/// Classic RK4 step of the neuron vector field at constant input.
#[inline]
pub fn rk4_step(y: &NeuronState, i_app: f64, dt: f64, cfg: &BiasConfiguration) -> NeuronState {
    let k1 = vector_field(y, i_app, cfg);
    let k2 = vector_field(&(*y + k1 * (0.5 * dt)), i_app, cfg);
    let k3 = vector_field(&(*y + k2 * (0.5 * dt)), i_app, cfg);
    let k4 = vector_field(&(*y + k3 * dt), i_app, cfg);
    *y + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0)
}

/// Integrates with fixed-step RK4 and detects spikes and bursts at full resolution.
///
/// Segment boundaries of `input` are snapped to the nearest step. The input
/// level used across step `k` is the one active at grid time `k * dt`.
pub fn integrate(cfg: &BiasConfiguration, input: &InputSignal, opts: &SolverOptions) -> Result<Trace> {
    integrate_with(cfg, input, opts, SpikeThresholds::for_config(cfg), &BurstOptions::default())
}

pub fn integrate_with(
    cfg: &BiasConfiguration,
    input: &InputSignal,
    opts: &SolverOptions,
    thresholds: Option<SpikeThresholds>,
    burst: &BurstOptions,
) -> Result<Trace> {
    let mut warnings = cfg.validate()?;
    input.validate()?;
    let (dt, step_warning) = opts.resolve_step(cfg)?;
    warnings.extend(step_warning);

    let n_steps = (opts.t_end / dt).round() as usize;
    let stride = opts.record_stride;
    let cap = n_steps / stride + 1;

    // step index at which each segment takes effect
    let switch_at: Vec<(usize, f64)> = input
        .segments
        .iter()
        .map(|s| (((s.start_time / dt).round().max(0.0)) as usize, s.amplitude))
        .collect();
    let mut seg = 0usize;
    let mut level = 0.0;
    let mut level_at = |k: usize| -> f64 {
        while seg < switch_at.len() && switch_at[seg].0 <= k {
            level = switch_at[seg].1;
            seg += 1;
        }
        level
    };

    let mut tr = Trace {
        t: Vec::with_capacity(cap),
        i_f: Vec::with_capacity(cap),
        i_s: Vec::with_capacity(cap),
        i_u: Vec::with_capacity(cap),
        i_app: Vec::with_capacity(cap),
        dt,
        warnings,
        ..Default::default()
    };

    let mut detector = thresholds.map(SpikeDetector::new).transpose()?;
    let mut y = opts.initial_state;
    let mut i_app = level_at(0);
    record(&mut tr, 0.0, &y, i_app);
    if let Some(d) = detector.as_mut() {
        d.push(0.0, y.i_f);
    }

    for k in 0..n_steps {
        y = rk4_step(&y, i_app, dt, cfg);
        let t = (k + 1) as f64 * dt;
        if !y.is_finite() {
            return Err(Error::Diverged { time: t });
        }
        i_app = level_at(k + 1);
        if let Some(d) = detector.as_mut() {
            d.push(t, y.i_f);
        }
        if (k + 1) % stride == 0 {
            record(&mut tr, t, &y, i_app);
        }
    }

    tr.spike_events = detector.map(SpikeDetector::finish).unwrap_or_default();
    tr.spikes = tr.spike_events.iter().map(|e| e.time).collect();
    tr.bursts = segment_bursts(&tr.spikes, burst);
    Ok(tr)
}

fn record(tr: &mut Trace, t: f64, y: &NeuronState, i_app: f64) {
    tr.t.push(t);
    tr.i_f.push(y.i_f);
    tr.i_s.push(y.i_s);
    tr.i_u.push(y.i_u);
    tr.i_app.push(i_app);
}

/// Spike times of a sampled trace.
pub fn detect_spikes(trace: &Trace, thresholds: SpikeThresholds) -> Result<Vec<f64>> {
    Ok(detect_spike_events(&trace.t, &trace.i_f, thresholds)?
        .into_iter()
        .map(|e| e.time)
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BurstOptions {
    /// Minimum ratio of mean long ISI to mean short ISI for a bimodal split.
    #[serde(default = "default_split")]
    pub split_factor: f64,
    /// Fixed maximum intra-burst ISI (s); bypasses the automatic split.
    #[serde(default)]
    pub max_intra_isi: Option<f64>,
}

fn default_split() -> f64 {
    BURST_SPLIT_FACTOR
}

impl Default for BurstOptions {
    fn default() -> Self {
        Self {
            split_factor: BURST_SPLIT_FACTOR,
            max_intra_isi: None,
        }
    }
}

/// Groups sorted spike times into bursts.
///
/// The ISIs are split at the widest gap of their sorted logarithms. When the
/// mean of the long cluster is at least `split_factor` times the mean of the
/// short one, long ISIs separate bursts. Groups of a single spike are dropped.
pub fn segment_bursts(spike_times: &[f64], opts: &BurstOptions) -> Vec<Burst> {
    if spike_times.len() <= 2 {
        return Vec::new();
    }
    let isi: Vec<f64> = spike_times.windows(2).map(|w| w[1] - w[0]).collect();
    let separator = match opts.max_intra_isi {
        Some(max) => max,
        None => match bimodal_split(&isi, opts.split_factor) {
            Some(s) => s,
            None => return Vec::new(),
        },
    };

    let mut bursts = Vec::new();
    let mut first = 0usize;
    for (k, &gap) in isi.iter().enumerate() {
        if gap > separator {
            push_group(&mut bursts, spike_times, first, k);
            first = k + 1;
        }
    }
    push_group(&mut bursts, spike_times, first, spike_times.len() - 1);
    bursts
}

fn push_group(out: &mut Vec<Burst>, times: &[f64], first: usize, last: usize) {
    if last > first {
        out.push(Burst {
            start: times[first],
            end: times[last],
            spike_count: last - first + 1,
        });
    }
}

/// Threshold between short and long ISIs, or `None` for a unimodal set.
fn bimodal_split(isi: &[f64], factor: f64) -> Option<f64> {
    let mut logs: Vec<f64> = isi.iter().filter(|x| **x > 0.0).map(|x| x.ln()).collect();
    if logs.len() < 2 {
        return None;
    }
    logs.sort_by(f64::total_cmp);
    let (cut, _) = logs
        .windows(2)
        .enumerate()
        .map(|(k, w)| (k, w[1] - w[0]))
        .fold((0, f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best });
    let mean = |xs: &[f64]| xs.iter().map(|l| l.exp()).sum::<f64>() / xs.len() as f64;
    let short = mean(&logs[..=cut]);
    let long = mean(&logs[cut + 1..]);
    (long >= factor * short).then(|| ((logs[cut] + logs[cut + 1]) / 2.0).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FiringRegime {
    Quiescent,
    TonicSpiking,
    Bursting,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiringMetrics {
    /// Spikes per second in the analyzed window (Hz).
    pub spike_rate: f64,
    /// Inverse mean period between burst starts (Hz); `None` with fewer than two bursts.
    pub burst_rate: Option<f64>,
    pub spikes_per_burst_mean: Option<f64>,
    pub spikes_per_burst: Vec<usize>,
    /// Fraction of the window spent between the first and last spike of a burst.
    pub duty_cycle: f64,
    pub regime_label: FiringRegime,
    pub window_start: f64,
    pub window_end: f64,
    pub bursts: Vec<Burst>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricsOptions {
    /// Start of the analyzed window (s).
    pub window_start: f64,
    /// End of the analyzed window (s); the end of the trace when absent.
    #[serde(default)]
    pub window_end: Option<f64>,
    #[serde(default)]
    pub burst: BurstOptions,
}

impl MetricsOptions {
    pub fn for_config(cfg: &BiasConfiguration) -> Self {
        Self {
            window_start: TRANSIENT_TAU_U * cfg.tau_u,
            window_end: None,
            burst: BurstOptions::default(),
        }
    }
}

/// Steady-state firing statistics over `[window_start, window_end]`.
///
/// Bursts are re-segmented from the spikes inside the window so that the
/// initial transient does not bias the ISI split.
pub fn firing_metrics(trace: &Trace, opts: &MetricsOptions) -> Result<FiringMetrics> {
    let trace_end = trace.t_end();
    let end = opts.window_end.unwrap_or(trace_end);
    if !(opts.window_start < end && end <= trace_end) {
        return Err(Error::Window {
            start: opts.window_start,
            end: trace_end,
        });
    }
    let span = end - opts.window_start;
    let spikes: Vec<f64> = trace
        .spikes
        .iter()
        .copied()
        .filter(|&t| t >= opts.window_start && t <= end)
        .collect();
    let bursts = segment_bursts(&spikes, &opts.burst);

    let burst_rate = (bursts.len() >= 2).then(|| {
        let period = (bursts.last().unwrap().start - bursts[0].start) / (bursts.len() - 1) as f64;
        1.0 / period
    });
    let spikes_per_burst: Vec<usize> = bursts.iter().map(|b| b.spike_count).collect();
    let spikes_per_burst_mean = (!bursts.is_empty())
        .then(|| spikes_per_burst.iter().sum::<usize>() as f64 / bursts.len() as f64);
    let duty_cycle = bursts.iter().fold(0.0, |acc, b| acc + (b.end - b.start)) / span;
    let regime_label = if spikes.is_empty() {
        FiringRegime::Quiescent
    } else if bursts.len() >= 2 {
        FiringRegime::Bursting
    } else {
        FiringRegime::TonicSpiking
    };

    Ok(FiringMetrics {
        spike_rate: spikes.len() as f64 / span,
        burst_rate,
        spikes_per_burst_mean,
        spikes_per_burst,
        duty_cycle,
        regime_label,
        window_start: opts.window_start,
        window_end: end,
        bursts,
    })
}

/// Mean time above the fall threshold per spike, over spikes starting at or after `from`.
pub fn mean_spike_width(trace: &Trace, from: f64) -> Option<f64> {
    let widths: Vec<f64> = trace
        .spike_events
        .iter()
        .filter(|e| e.onset >= from)
        .filter_map(SpikeEvent::width)
        .collect();
    (!widths.is_empty()).then(|| widths.iter().sum::<f64>() / widths.len() as f64)
}

/// Mean burst envelope (first spike onset to last spike offset) over bursts starting at or after `from`.
pub fn mean_burst_duration(trace: &Trace, from: f64) -> Option<f64> {
    let mut durations = Vec::new();
    for b in trace.bursts.iter().filter(|b| b.start >= from) {
        let first = trace.spike_events.iter().find(|e| e.time == b.start)?;
        let last = trace.spike_events.iter().find(|e| e.time == b.end)?;
        if let Some(off) = last.offset {
            durations.push(off - first.onset);
        }
    }
    (!durations.is_empty()).then(|| durations.iter().sum::<f64>() / durations.len() as f64)
}
