//! Column-oriented text exports of traces and curves.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use mixfeed_core::analysis::{SteadyStateCurve, SteadyStateCurveSet};
use mixfeed_core::dynamics::Trace;
use serde::Serialize;

use crate::error::{HarnessError, Result};

pub const TRACE_HEADER: [&str; 6] = ["t_s", "i_f_A", "i_s_A", "i_u_A", "i_app_A", "spike"];
pub const CURVE_HEADER: [&str; 4] = ["i_bar_A", "fast_i_app_A", "slow_i_app_A", "ultraslow_i_app_A"];

fn write_err(path: &Path) -> impl Fn(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Write {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> HarnessError + '_ {
    move |e| HarnessError::Write {
        path: path.to_path_buf(),
        source: e.into(),
    }
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(write_err(dir))
}

/// Row index at which each spike is marked: the first sample at or after it.
fn spike_rows(trace: &Trace) -> Vec<bool> {
    let mut marks = vec![false; trace.len()];
    for &s in &trace.spikes {
        let k = trace.t.partition_point(|&t| t < s);
        if k < marks.len() {
            marks[k] = true;
        }
    }
    marks
}

pub fn export_trace(trace: &Trace, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record(TRACE_HEADER).map_err(csv_err(path))?;
    let marks = spike_rows(trace);
    for k in 0..trace.len() {
        w.write_record([
            trace.t[k].to_string(),
            trace.i_f[k].to_string(),
            trace.i_s[k].to_string(),
            trace.i_u[k].to_string(),
            trace.i_app[k].to_string(),
            u8::from(marks[k]).to_string(),
        ])
        .map_err(csv_err(path))?;
    }
    w.flush().map_err(write_err(path))
}

/// Reads a trace written by [`export_trace`]. Spike times are the times of
/// the marked rows; bursts and spike widths are not restored.
pub fn import_trace(path: &Path) -> Result<Trace> {
    let mut r = csv::Reader::from_path(path).map_err(|e| HarnessError::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let header = r.headers().map_err(|e| HarnessError::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    if header.iter().ne(TRACE_HEADER) {
        return Err(HarnessError::Parse {
            path: path.to_path_buf(),
            message: format!("expected header `{}`", TRACE_HEADER.join(",")),
        });
    }

    let mut tr = Trace::default();
    for rec in r.records() {
        let rec = rec.map_err(|e| HarnessError::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        let field = |k: usize| -> Result<f64> {
            rec[k].trim().parse::<f64>().map_err(|e| HarnessError::Record {
                path: path.to_path_buf(),
                line,
                field: TRACE_HEADER[k].into(),
                message: e.to_string(),
            })
        };
        let t = field(0)?;
        tr.t.push(t);
        tr.i_f.push(field(1)?);
        tr.i_s.push(field(2)?);
        tr.i_u.push(field(3)?);
        tr.i_app.push(field(4)?);
        match rec[5].trim() {
            "0" => {}
            "1" => tr.spikes.push(t),
            other => {
                return Err(HarnessError::Record {
                    path: path.to_path_buf(),
                    line,
                    field: "spike".into(),
                    message: format!("expected 0 or 1, got `{other}`"),
                })
            }
        }
    }
    if tr.t.len() >= 2 {
        tr.dt = tr.t[1] - tr.t[0];
    }
    Ok(tr)
}

fn write_fold_lines(out: &mut impl Write, name: &str, c: &SteadyStateCurve) -> std::io::Result<()> {
    for f in &c.folds {
        let kind = match f.kind {
            mixfeed_core::analysis::FoldKind::Upper => "upper",
            mixfeed_core::analysis::FoldKind::Lower => "lower",
        };
        writeln!(out, "# fold,{name},{kind},{},{}", f.i_bar, f.i_app)?;
    }
    if let Some((lo, hi)) = c.bistability_window {
        writeln!(out, "# window,{name},{lo},{hi}")?;
    }
    if c.multi_fold {
        writeln!(out, "# multi-fold,{name}")?;
    }
    Ok(())
}

/// Writes the three curves on their shared grid. Fold and window annotations
/// precede the header as `#` lines:
/// `# fold,<curve>,<upper|lower>,<i_bar_A>,<i_app_A>` and
/// `# window,<curve>,<low_A>,<high_A>`.
pub fn export_curves(curves: &SteadyStateCurveSet, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(write_err(path))?;
    let mut out = BufWriter::new(file);
    for (name, c) in [("fast", &curves.fast), ("slow", &curves.slow), ("ultraslow", &curves.ultraslow)] {
        write_fold_lines(&mut out, name, c).map_err(write_err(path))?;
    }
    writeln!(out, "{}", CURVE_HEADER.join(",")).map_err(write_err(path))?;
    for k in 0..curves.fast.grid.len() {
        writeln!(
            out,
            "{},{},{},{}",
            curves.fast.grid[k], curves.fast.i_app[k], curves.slow.i_app[k], curves.ultraslow.i_app[k]
        )
        .map_err(write_err(path))?;
    }
    out.flush().map_err(write_err(path))
}

/// Writes rows of a serializable record type with a header from its field names.
pub fn export_table<T: Serialize>(rows: &[T], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    for row in rows {
        w.serialize(row).map_err(csv_err(path))?;
    }
    w.flush().map_err(write_err(path))
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| HarnessError::Write {
        path: path.to_path_buf(),
        source: e.into(),
    })?;
    text.push('\n');
    fs::write(path, text).map_err(write_err(path))
}
