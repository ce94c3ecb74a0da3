//! Executes scenarios and writes their artifacts.

use std::path::Path;

use mixfeed_core::analysis::{
    classify_regime, neuromod_sweep, steady_state_curves, CurveGrid, RegimeReport, SteadyStateCurveSet,
    SweepReport, SweepSimulation,
};
use mixfeed_core::device::{temperature_transform, TempModel};
use mixfeed_core::dynamics::{
    firing_metrics, integrate, mean_burst_duration, mean_spike_width, FiringMetrics, FiringRegime, MetricsOptions,
    SolverOptions, Trace,
};
use mixfeed_core::model::{BiasConfiguration, ConfigWarning, InputSignal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::Result;
use crate::io::{ensure_dir, export_curves, export_table, export_trace, write_json};
use crate::scenario::{Scenario, ScenarioKind};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationSummary {
    pub dt: f64,
    pub samples: usize,
    pub spikes: Vec<f64>,
    pub bursts: usize,
    /// `None` when the trace is shorter than the transient window.
    pub metrics: Option<FiringMetrics>,
    pub warnings: Vec<ConfigWarning>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StaircaseRow {
    pub level: usize,
    pub amplitude_a: f64,
    pub regime: FiringRegime,
    pub spike_rate_hz: f64,
    pub burst_rate_hz: Option<f64>,
    pub spikes_per_burst: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TemperatureRow {
    pub temperature_k: f64,
    pub speedup: f64,
    pub regime: FiringRegime,
    pub spike_rate_hz: f64,
    pub burst_rate_hz: Option<f64>,
    pub spikes_per_burst: Option<f64>,
    /// Burst rate when bursting, spike rate otherwise.
    pub frequency_hz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InactivationRow {
    pub inactivation: bool,
    pub regime: FiringRegime,
    pub spike_rate_hz: f64,
    pub spikes_per_burst: Option<f64>,
    pub mean_spike_width_s: Option<f64>,
    pub mean_burst_duration_s: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Summary {
    Simulate {
        simulation: SimulationSummary,
    },
    Staircase {
        simulation: SimulationSummary,
        levels: Vec<StaircaseRow>,
    },
    NeuromodSweep {
        report: SweepReport,
    },
    TemperatureSweep {
        rows: Vec<TemperatureRow>,
        /// Frequency at the highest temperature over that at the lowest.
        frequency_ratio: Option<f64>,
    },
    InactivationCompare {
        rows: Vec<InactivationRow>,
    },
    Curves {
        fast_window: Option<(f64, f64)>,
        slow_window: Option<(f64, f64)>,
        ultraslow_window: Option<(f64, f64)>,
        report: RegimeReport,
    },
    Classify {
        report: RegimeReport,
    },
}

fn solver_options(s: &Scenario, cfg: &BiasConfiguration, t_end: f64) -> SolverOptions {
    let mut opts = SolverOptions::for_config(cfg, t_end);
    if let Some(dt) = s.solver.dt {
        opts.dt = dt;
    }
    if let Some(k) = s.solver.record_stride {
        opts.record_stride = k;
    }
    opts
}

/// Metrics after the transient, or `None` when the trace is too short.
fn steady_metrics(cfg: &BiasConfiguration, trace: &Trace) -> Result<Option<FiringMetrics>> {
    let opts = MetricsOptions::for_config(cfg);
    if opts.window_start >= trace.t_end() {
        return Ok(None);
    }
    Ok(Some(firing_metrics(trace, &opts)?))
}

fn summarize(cfg: &BiasConfiguration, trace: &Trace) -> Result<SimulationSummary> {
    Ok(SimulationSummary {
        dt: trace.dt,
        samples: trace.len(),
        spikes: trace.spikes.clone(),
        bursts: trace.bursts.len(),
        metrics: steady_metrics(cfg, trace)?,
        warnings: trace.warnings.clone(),
    })
}

/// Curves on the scenario grid (or the default grid) and their classification.
pub fn curves_and_report(cfg: &BiasConfiguration, grid: Option<&CurveGrid>) -> Result<(SteadyStateCurveSet, RegimeReport)> {
    let grid = grid.copied().unwrap_or_else(|| CurveGrid::for_config(cfg));
    let set = steady_state_curves(cfg, &grid)?;
    let report = classify_regime(&set.fast, &set.slow, &set.ultraslow)?;
    Ok((set, report))
}

/// Runs `s`, writing artifacts under `out` and returning the summary that is
/// also written to `out/summary.json`.
pub fn run_scenario(s: &Scenario, out: &Path) -> Result<Summary> {
    s.validate()?;
    let cfg = s.config()?;
    ensure_dir(out)?;

    let summary = match s.kind {
        ScenarioKind::Simulate => {
            let input = s.input.as_ref().expect("validated");
            let opts = solver_options(s, &cfg, s.solver.t_end.expect("validated"));
            let trace = integrate(&cfg, input, &opts)?;
            export_trace(&trace, &out.join("trace.csv"))?;
            Summary::Simulate {
                simulation: summarize(&cfg, &trace)?,
            }
        }
        ScenarioKind::Staircase => run_staircase(s, &cfg, out)?,
        ScenarioKind::NeuromodSweep => {
            let sw = s.sweep.as_ref().expect("validated");
            let sim = sw.input.map(|input| SweepSimulation {
                input,
                t_end: s.solver.t_end.expect("validated"),
                dt: s.solver.dt,
            });
            let report = neuromod_sweep(&cfg, sw.param, (sw.range[0], sw.range[1]), sw.steps, sim.as_ref())?;
            export_table(&report.points, &out.join("sweep.csv"))?;
            Summary::NeuromodSweep { report }
        }
        ScenarioKind::TemperatureSweep => run_temperature(s, &cfg)?,
        ScenarioKind::InactivationCompare => run_inactivation(s, &cfg, out)?,
        ScenarioKind::Curves => {
            let (set, report) = curves_and_report(&cfg, s.grid.as_ref())?;
            export_curves(&set, &out.join("curves.csv"))?;
            Summary::Curves {
                fast_window: set.fast.bistability_window,
                slow_window: set.slow.bistability_window,
                ultraslow_window: set.ultraslow.bistability_window,
                report,
            }
        }
        ScenarioKind::Classify => Summary::Classify {
            report: curves_and_report(&cfg, s.grid.as_ref())?.1,
        },
    };

    match &summary {
        Summary::TemperatureSweep { rows, .. } => export_table(rows, &out.join("temperature.csv"))?,
        Summary::InactivationCompare { rows } => export_table(rows, &out.join("inactivation.csv"))?,
        Summary::Staircase { levels, .. } => export_table(levels, &out.join("staircase.csv"))?,
        _ => {}
    }
    write_json(&summary, &out.join("summary.json"))?;
    Ok(summary)
}

fn run_staircase(s: &Scenario, cfg: &BiasConfiguration, out: &Path) -> Result<Summary> {
    let st = s.staircase.as_ref().expect("validated");
    let settle = st.settle.unwrap_or(3.0 * cfg.tau_u);
    let input = InputSignal::staircase(&st.levels, st.dwell);
    let t_end = st.dwell * st.levels.len() as f64;
    let trace = integrate(cfg, &input, &solver_options(s, cfg, t_end))?;
    export_trace(&trace, &out.join("trace.csv"))?;

    let mut levels = Vec::with_capacity(st.levels.len());
    for (k, &amplitude) in st.levels.iter().enumerate() {
        let start = k as f64 * st.dwell;
        let opts = MetricsOptions {
            window_start: start + settle,
            window_end: Some((start + st.dwell).min(trace.t_end())),
            ..MetricsOptions::for_config(cfg)
        };
        let m = firing_metrics(&trace, &opts)?;
        levels.push(StaircaseRow {
            level: k,
            amplitude_a: amplitude,
            regime: m.regime_label,
            spike_rate_hz: m.spike_rate,
            burst_rate_hz: m.burst_rate,
            spikes_per_burst: m.spikes_per_burst_mean,
        });
    }
    Ok(Summary::Staircase {
        simulation: summarize(cfg, &trace)?,
        levels,
    })
}

/// Frequency of the dominant rhythm: bursts when bursting, spikes otherwise.
pub fn dominant_frequency(m: &FiringMetrics) -> f64 {
    match (m.regime_label, m.burst_rate) {
        (FiringRegime::Bursting, Some(r)) => r,
        _ => m.spike_rate,
    }
}

fn run_temperature(s: &Scenario, cfg: &BiasConfiguration) -> Result<Summary> {
    let spec = s.temperature.as_ref().expect("validated");
    let model = spec.alpha.map(|alpha| TempModel { alpha }).unwrap_or_default();
    let input = s.input.as_ref().expect("validated");
    let t_end = s.solver.t_end.expect("validated");

    let rows = spec
        .temperatures
        .par_iter()
        .map(|&temp| -> Result<TemperatureRow> {
            let speedup = model.speedup(spec.t_ref, temp);
            let c = temperature_transform(cfg, spec.t_ref, temp, &model)?;
            let mut opts = solver_options(s, &c, t_end / speedup);
            if let Some(dt) = s.solver.dt {
                opts.dt = dt / speedup;
            }
            let trace = integrate(&c, &input.scaled(speedup, 1.0 / speedup), &opts)?;
            let m = firing_metrics(&trace, &MetricsOptions::for_config(&c))?;
            Ok(TemperatureRow {
                temperature_k: temp,
                speedup,
                regime: m.regime_label,
                spike_rate_hz: m.spike_rate,
                burst_rate_hz: m.burst_rate,
                spikes_per_burst: m.spikes_per_burst_mean,
                frequency_hz: dominant_frequency(&m),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let lo = rows.iter().min_by(|a, b| a.temperature_k.total_cmp(&b.temperature_k));
    let hi = rows.iter().max_by(|a, b| a.temperature_k.total_cmp(&b.temperature_k));
    let frequency_ratio = match (lo, hi) {
        (Some(lo), Some(hi)) if lo.frequency_hz > 0.0 => Some(hi.frequency_hz / lo.frequency_hz),
        _ => None,
    };
    Ok(Summary::TemperatureSweep { rows, frequency_ratio })
}

fn run_inactivation(s: &Scenario, cfg: &BiasConfiguration, out: &Path) -> Result<Summary> {
    let input = s.input.as_ref().expect("validated");
    let t_end = s.solver.t_end.expect("validated");
    let mut rows = Vec::with_capacity(2);
    for enabled in [false, true] {
        let c = BiasConfiguration {
            inactivation_enabled: enabled,
            ..cfg.clone()
        };
        let trace = integrate(&c, input, &solver_options(s, &c, t_end))?;
        let name = if enabled { "trace_inactivation_on.csv" } else { "trace_inactivation_off.csv" };
        export_trace(&trace, &out.join(name))?;
        let mopts = MetricsOptions::for_config(&c);
        let m = firing_metrics(&trace, &mopts)?;
        rows.push(InactivationRow {
            inactivation: enabled,
            regime: m.regime_label,
            spike_rate_hz: m.spike_rate,
            spikes_per_burst: m.spikes_per_burst_mean,
            mean_spike_width_s: mean_spike_width(&trace, mopts.window_start),
            mean_burst_duration_s: mean_burst_duration(&trace, mopts.window_start),
        });
    }
    Ok(Summary::InactivationCompare { rows })
}
