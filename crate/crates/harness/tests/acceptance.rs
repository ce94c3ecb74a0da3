//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use mixfeed_core::analysis::{
    classify_config, equilibria, CurveGrid, CurveKind, RegimeLabel, SteadyStateCurve,
};
use mixfeed_core::device::{
    bias_voltage_to_current, current_to_bias_voltage, dpi_params, temperature_transform, uniform_scale,
    DeviceParams, DpiSpec, TempModel, C_FAST, C_ULTRASLOW,
};
use mixfeed_core::dynamics::{integrate, FiringRegime, SolverOptions, Trace};
use mixfeed_core::model::{vector_field, BiasConfiguration, InputSignal};
use mixfeed_core::presets;
use mixfeed_harness::run::{run_scenario, Summary};
use mixfeed_harness::scenario::{load_config, Scenario};

type Check = Result<String, String>;

fn scenario(name: &str) -> Scenario {
    let path: PathBuf = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name);
    load_config(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn run(s: &Scenario) -> Result<Summary, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    run_scenario(s, dir.path()).map_err(|e| e.to_string())
}

/// Largest deviation of `b` from `factor * a`, relative to the largest `|factor * a|`,
/// over all three state columns sampled at the same indices.
fn image_error(a: &Trace, b: &Trace, factor: f64) -> Result<f64, String> {
    ensure(a.len() == b.len(), || format!("sample counts differ: {} vs {}", a.len(), b.len()))?;
    let mut num = 0.0f64;
    let mut den = 0.0f64;
    for (xa, xb) in [(&a.i_f, &b.i_f), (&a.i_s, &b.i_s), (&a.i_u, &b.i_u)] {
        for (p, q) in xa.iter().zip(xb.iter()) {
            num = num.max((q - factor * p).abs());
            den = den.max((factor * p).abs());
        }
    }
    Ok(num / den)
}

/// Simulates `s` on `cfg` with all currents scaled by `lambda` and time by `1/lambda`.
fn scaled_pair(cfg: &BiasConfiguration, s: &Scenario, lambda: f64) -> Result<(Trace, Trace), String> {
    let input = s.input.clone().ok_or("scenario has no input")?;
    let t_end = s.solver.t_end.ok_or("scenario has no horizon")?;
    let opts = SolverOptions::for_config(cfg, t_end);
    let base = integrate(cfg, &input, &opts).map_err(|e| e.to_string())?;
    let c2 = uniform_scale(cfg, lambda).map_err(|e| e.to_string())?;
    let opts2 = SolverOptions {
        dt: opts.dt / lambda,
        t_end: t_end / lambda,
        ..opts.clone()
    };
    let scaled = integrate(&c2, &input.scaled(lambda, 1.0 / lambda), &opts2).map_err(|e| e.to_string())?;
    Ok((base, scaled))
}

fn scale_law() -> Check {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for name in ["burster-simulate.toml", "tonic-simulate.toml"] {
        let s = scenario(name);
        let cfg = s.config().map_err(|e| e.to_string())?;
        for lambda in [0.1, 10.0] {
            let (a, b) = scaled_pair(&cfg, &s, lambda)?;
            let err = image_error(&a, &b, lambda)?;
            worst = worst.max(err);
            ensure(err < 1e-6, || format!("{name}, lambda {lambda}: relative error {err:.3e}"))?;
            ensure(a.spikes.len() == b.spikes.len(), || {
                format!("{name}, lambda {lambda}: {} vs {} spikes", a.spikes.len(), b.spikes.len())
            })?;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(secs < 10.0, || format!("took {secs:.1} s"))?;
    Ok(format!("max relative error {worst:.2e}, spike counts equal, {secs:.1} s"))
}

/// Window of a curve from a dense sampling: values at the first and last local extrema.
fn brute_force_window(cfg: &BiasConfiguration, kind: CurveKind, grid: &CurveGrid) -> Option<(f64, f64)> {
    const N: usize = 100_000;
    let h = (grid.i_max - grid.i_min) / (N - 1) as f64;
    let ys: Vec<f64> = (0..N).map(|k| kind.value(cfg, grid.i_min + k as f64 * h)).collect();
    let mut extrema = Vec::new();
    for k in 1..N - 1 {
        let (d0, d1) = (ys[k] - ys[k - 1], ys[k + 1] - ys[k]);
        if (d0 > 0.0) != (d1 > 0.0) && d0 != 0.0 && d1 != 0.0 {
            extrema.push(ys[k]);
        }
    }
    if extrema.len() < 2 {
        return None;
    }
    let lo = extrema.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = extrema.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Some((lo, hi))
}

fn steady_state_oracle() -> Check {
    let mut n_eq = 0;
    let mut worst_res = 0.0f64;
    let mut worst_win = 0.0f64;
    for (name, cfg) in presets::all() {
        let exact = BiasConfiguration {
            rectify_filter_inputs: false,
            inactivation_enabled: false,
            ..cfg.clone()
        };
        let (set, report) = classify_config(&cfg).map_err(|e| e.to_string())?;
        let top = set.ultraslow.i_app.iter().copied().fold(0.0f64, f64::max);
        let mut inputs: Vec<f64> = (0..=40).map(|k| top * k as f64 / 40.0).collect();
        for w in [report.fast_window, report.slow_window].into_iter().flatten() {
            inputs.push(0.5 * (w.0 + w.1));
        }
        for i_app in inputs {
            for eq in equilibria(&cfg, i_app).map_err(|e| e.to_string())? {
                let y = eq.state;
                let d = vector_field(&y, i_app, &exact);
                let scale = y.max_abs().max(cfg.current_scale());
                let res = (d.i_f * cfg.tau_f).abs().max((d.i_s * cfg.tau_s).abs()).max((d.i_u * cfg.tau_u).abs());
                worst_res = worst_res.max(res / scale);
                ensure(res < 1e-9 * scale, || format!("{name}: residual {res:.3e} A at i_app {i_app:.3e}"))?;
                n_eq += 1;
            }
        }
        let grid = CurveGrid::for_config(&cfg);
        let curves: [(&str, &SteadyStateCurve); 3] =
            [("fast", &set.fast), ("slow", &set.slow), ("ultraslow", &set.ultraslow)];
        for (cname, curve) in curves {
            let brute = brute_force_window(&cfg, curve.kind, &grid);
            match (curve.bistability_window, brute) {
                (None, None) => {}
                (Some((lo, hi)), Some((blo, bhi))) => {
                    let width = hi - lo;
                    let err = (lo - blo).abs().max((hi - bhi).abs()) / width;
                    worst_win = worst_win.max(err);
                    ensure(err < 1e-3, || format!("{name} {cname}: window off by {:.3}% of width", err * 100.0))?;
                }
                (a, b) => return Err(format!("{name} {cname}: window {a:?} vs brute force {b:?}")),
            }
        }
    }
    ensure(n_eq > 0, || "no equilibria checked".into())?;
    Ok(format!(
        "{n_eq} equilibria, max residual {worst_res:.1e} x scale; max window error {:.4}% of width",
        worst_win * 100.0
    ))
}

fn simulated_regime(name: &str) -> Result<(FiringRegime, usize), String> {
    match run(&scenario(name))? {
        Summary::Simulate { simulation } => {
            let m = simulation.metrics.ok_or("horizon shorter than the transient")?;
            Ok((m.regime_label, m.bursts.len()))
        }
        other => Err(format!("unexpected summary {other:?}")),
    }
}

fn classification() -> Check {
    let (_, tonic) = classify_config(&presets::tonic_spiker()).map_err(|e| e.to_string())?;
    let (_, burst) = classify_config(&presets::burster()).map_err(|e| e.to_string())?;
    ensure(tonic.label == RegimeLabel::SpikingOnly, || format!("tonic-spiker classified {:?}", tonic.label))?;
    ensure(burst.label == RegimeLabel::BurstingCapable, || format!("burster classified {:?}", burst.label))?;
    let (t_regime, _) = simulated_regime("tonic-simulate.toml")?;
    ensure(t_regime == FiringRegime::TonicSpiking, || format!("tonic-spiker simulated {t_regime:?}"))?;
    let (b_regime, n) = simulated_regime("burster-simulate.toml")?;
    ensure(b_regime == FiringRegime::Bursting && n >= 2, || format!("burster simulated {b_regime:?} with {n} bursts"))?;
    Ok(format!("tonic-spiker: spiking-only / tonic; burster: bursting-capable / {n} bursts"))
}

fn transitions<T: PartialEq>(xs: &[T], is_burst: impl Fn(&T) -> bool) -> usize {
    xs.windows(2).filter(|w| is_burst(&w[0]) != is_burst(&w[1])).count()
}

fn neuromodulation() -> Check {
    let Summary::NeuromodSweep { report } = run(&scenario("burster-sweep.toml"))? else {
        return Err("wrong summary kind".into());
    };
    let labels: Vec<RegimeLabel> = report.points.iter().map(|p| p.label).collect();
    let sims: Vec<Option<FiringRegime>> = report.points.iter().map(|p| p.simulated).collect();
    let c = report.classifier_transition.ok_or("classifier found no transition")?;
    let s = report.simulation_transition.ok_or("simulation found no transition")?;
    ensure(transitions(&labels, |l| *l == RegimeLabel::BurstingCapable) == 1, || format!("classifier labels {labels:?}"))?;
    ensure(transitions(&sims, |r| *r == Some(FiringRegime::Bursting)) == 1, || format!("simulated regimes {sims:?}"))?;
    ensure(
        sims[..s].iter().all(|r| *r == Some(FiringRegime::TonicSpiking)),
        || format!("points before the transition are not all tonic: {sims:?}"),
    )?;
    let spb: Vec<f64> = report.points[s..].iter().map(|p| p.spikes_per_burst.unwrap_or(0.0)).collect();
    ensure(spb.windows(2).all(|w| w[1] >= w[0]), || format!("spikes per burst {spb:?}"))?;
    ensure(c.abs_diff(s) <= 1, || format!("classifier index {c}, simulation index {s}"))?;
    Ok(format!(
        "transition at step {c} (classifier) / {s} (simulation) of {}; spikes per burst {:.1} -> {:.1}",
        report.points.len(),
        spb[0],
        spb[spb.len() - 1]
    ))
}

fn staircase() -> Check {
    let Summary::Staircase { levels: tonic, .. } = run(&scenario("tonic-staircase.toml"))? else {
        return Err("wrong summary kind".into());
    };
    let Summary::Staircase { levels: burst, .. } = run(&scenario("burster-staircase.toml"))? else {
        return Err("wrong summary kind".into());
    };
    ensure(tonic.len() == 6 && burst.len() == 6, || "staircases must have 6 levels".into())?;
    let rates: Vec<f64> = tonic.iter().map(|l| l.spike_rate_hz).collect();
    ensure(tonic.iter().all(|l| l.regime == FiringRegime::TonicSpiking), || format!("tonic-spiker regimes {tonic:?}"))?;
    ensure(rates.windows(2).all(|w| w[1] >= w[0]), || format!("tonic spike rates {rates:?}"))?;
    let (top, lower) = burst.split_last().ok_or("empty staircase")?;
    ensure(lower.iter().all(|l| l.regime == FiringRegime::Bursting), || format!("burster regimes {burst:?}"))?;
    let brates: Vec<f64> = lower.iter().map(|l| l.burst_rate_hz.unwrap_or(0.0)).collect();
    ensure(brates.windows(2).all(|w| w[1] >= w[0]), || format!("burst rates {brates:?}"))?;
    ensure(top.regime == FiringRegime::TonicSpiking, || format!("top level is {:?}", top.regime))?;
    Ok(format!(
        "spike rate {:.1} -> {:.1} Hz; burst rate {:.2} -> {:.2} Hz, top level tonic at {:.1} Hz",
        rates[0],
        rates[5],
        brates[0],
        brates[brates.len() - 1],
        top.spike_rate_hz
    ))
}

fn temperature() -> Check {
    let s = scenario("burster-temperature.toml");
    let Summary::TemperatureSweep { rows, frequency_ratio } = run(&s)? else {
        return Err("wrong summary kind".into());
    };
    let ratio = frequency_ratio.ok_or("no frequency at the lowest temperature")?;
    ensure((47.5..=52.5).contains(&ratio), || format!("frequency ratio {ratio:.2}"))?;
    ensure(rows.iter().all(|r| r.regime == rows[0].regime), || format!("regimes differ: {rows:?}"))?;

    let spec = s.temperature.as_ref().ok_or("no temperature section")?;
    let cfg = s.config().map_err(|e| e.to_string())?;
    let model = TempModel::default();
    let (t_lo, t_hi) = (spec.temperatures[0], spec.temperatures[spec.temperatures.len() - 1]);
    let cold = temperature_transform(&cfg, spec.t_ref, t_lo, &model).map_err(|e| e.to_string())?;
    let speed = model.speedup(t_lo, t_hi);
    let (a, b) = scaled_pair(&cold, &s, speed)?;
    let err = image_error(&a, &b, speed)?;
    ensure(err < 1e-6, || format!("time-compressed image error {err:.3e}"))?;
    ensure(a.spikes.len() == b.spikes.len(), || "spike counts differ between temperatures".into())?;
    Ok(format!(
        "{t_hi:.2} K / {t_lo:.2} K frequency ratio {ratio:.2}; image error {err:.1e}; regime {:?} throughout",
        rows[0].regime
    ))
}

fn inactivation() -> Check {
    let mut parts = Vec::new();
    for (name, needs_bursts) in [("burster-inactivation.toml", true), ("tonic-inactivation.toml", false)] {
        let Summary::InactivationCompare { rows } = run(&scenario(name))? else {
            return Err("wrong summary kind".into());
        };
        let (off, on) = (&rows[0], &rows[1]);
        let (w_off, w_on) = (
            off.mean_spike_width_s.ok_or(format!("{name}: no spikes without inactivation"))?,
            on.mean_spike_width_s.ok_or(format!("{name}: no spikes with inactivation"))?,
        );
        ensure(w_on < w_off, || format!("{name}: spike width {w_on:.3e} s vs {w_off:.3e} s"))?;
        let mut part = format!("{name}: width {:.2} -> {:.2} ms", w_off * 1e3, w_on * 1e3);
        if needs_bursts {
            let (d_off, d_on) = (
                off.mean_burst_duration_s.ok_or(format!("{name}: no bursts without inactivation"))?,
                on.mean_burst_duration_s.ok_or(format!("{name}: no bursts with inactivation"))?,
            );
            ensure(d_on < d_off, || format!("{name}: burst duration {d_on:.3e} s vs {d_off:.3e} s"))?;
            part += &format!(", burst {:.0} -> {:.0} ms", d_off * 1e3, d_on * 1e3);
        } else {
            part += ", no bursts (burst duration not applicable)";
        }
        parts.push(part);
    }
    Ok(parts.join("; "))
}

fn convergence() -> Check {
    let mut counts = Vec::new();
    for name in ["burster-simulate.toml", "tonic-simulate.toml"] {
        let s = scenario(name);
        let cfg = s.config().map_err(|e| e.to_string())?;
        let input = s.input.clone().ok_or("no input")?;
        let base = SolverOptions::for_config(&cfg, s.solver.t_end.ok_or("no horizon")?);
        let a = integrate(&cfg, &input, &base).map_err(|e| e.to_string())?;
        let half = SolverOptions { dt: base.dt / 2.0, ..base.clone() };
        let b = integrate(&cfg, &input, &half).map_err(|e| e.to_string())?;
        ensure(a.spikes.len().abs_diff(b.spikes.len()) <= 1, || {
            format!("{name}: {} vs {} spikes", a.spikes.len(), b.spikes.len())
        })?;
        counts.push(format!("{}/{}", a.spikes.len(), b.spikes.len()));
    }

    // smooth segment: subthreshold relaxation of the resting preset at the coarsest allowed step
    let cfg = presets::resting();
    let input = InputSignal::constant(2e-9);
    let dt = cfg.tau_f / 20.0;
    let t_end = 5.0 * cfg.tau_s;
    let sim = |div: usize| {
        let opts = SolverOptions {
            dt: dt / div as f64,
            record_stride: div,
            ..SolverOptions::for_config(&cfg, t_end)
        };
        integrate(&cfg, &input, &opts).map_err(|e| e.to_string())
    };
    let (r1, r2, r8) = (sim(1)?, sim(2)?, sim(8)?);
    let err = |t: &Trace| t.i_f.iter().zip(&r8.i_f).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let (e1, e2) = (err(&r1), err(&r2));
    ensure(e2 > 0.0 && e1 / e2 >= 8.0, || format!("error ratio {:.2} ({e1:.2e} / {e2:.2e})", e1 / e2))?;
    Ok(format!("spike counts dt/dt2 {}; smooth error ratio {:.1}", counts.join(", "), e1 / e2))
}

fn device_map() -> Check {
    let dev = DeviceParams::default();
    let i_tau = 1e-12;
    let (_, tau_fast) = dpi_params(&DpiSpec { c: C_FAST, i_tau, i_th: i_tau }, &dev, 300.0).map_err(|e| e.to_string())?;
    let (_, tau_ultra) =
        dpi_params(&DpiSpec { c: C_ULTRASLOW, i_tau, i_th: i_tau }, &dev, 300.0).map_err(|e| e.to_string())?;
    let ratio = tau_ultra / tau_fast;
    ensure((ratio - 16.0).abs() <= 4.0 * f64::EPSILON * 16.0, || format!("tau ratio {ratio}"))?;
    let mut worst = 0.0f64;
    for t in [250.0, 278.15, 300.0, 318.15, 400.0] {
        for k in 0..=90 {
            let v = k as f64 * 0.01;
            let i = bias_voltage_to_current(v, &dev, t).map_err(|e| e.to_string())?;
            let back = current_to_bias_voltage(i, &dev, t).map_err(|e| e.to_string())?;
            worst = worst.max((back - v).abs());
        }
    }
    ensure(worst <= 1e-12, || format!("round trip error {worst:.3e} V"))?;
    Ok(format!("tau ratio {ratio}; max V->I->V error {worst:.1e} V"))
}

fn main() -> ExitCode {
    let checks: [(&str, fn() -> Check); 9] = [
        ("scale-equivariance", scale_law),
        ("steady-state-oracle", steady_state_oracle),
        ("classification", classification),
        ("neuromodulation", neuromodulation),
        ("input-staircase", staircase),
        ("temperature", temperature),
        ("inactivation", inactivation),
        ("integrator-convergence", convergence),
        ("device-map", device_map),
    ];
    let mut failed = 0;
    for (name, check) in checks {
        match check() {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name}: {detail}");
            }
        }
    }
    println!("{} of {} acceptance criteria met", checks.len() - failed, checks.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
