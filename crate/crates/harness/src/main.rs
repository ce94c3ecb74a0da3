use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mixfeed_harness::run::run_scenario;
use mixfeed_harness::scenario::{load_config, Scenario, ScenarioKind};
use mixfeed_harness::{HarnessError, Result};

#[derive(Parser)]
#[command(name = "mixfeed", version, about = "Mixed-feedback neuron simulator and analysis workbench")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Scenario file (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Shipped preset; replaces the configuration in `--config`.
    #[arg(long)]
    preset: Option<String>,
    /// Output directory; overrides the scenario's `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Fixed integration step (s).
    #[arg(long)]
    dt: Option<f64>,
    /// Simulated horizon (s).
    #[arg(long)]
    t_end: Option<f64>,
    /// No effect: runs use no random numbers and are always reproducible.
    #[arg(long)]
    seedless: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one trajectory and write trace.csv.
    Simulate(Common),
    /// Compute the steady-state curves and write curves.csv.
    Curves(Common),
    /// Label the configuration from its curve geometry.
    Classify(Common),
    /// Sweep a sigmoid parameter and locate the spiking to bursting transition.
    Sweep(Common),
    /// Step the input through a staircase and report per-level firing.
    Staircase(Common),
    /// Rerun the configuration at several ambient temperatures.
    Tempsweep(Common),
    /// Run with and without positive-feedback inactivation.
    CompareInactivation(Common),
    /// Serve the HTTP API.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: String,
    },
}

fn scenario(kind: ScenarioKind, c: &Common) -> Result<(Scenario, PathBuf)> {
    let mut s = match (&c.config, &c.preset) {
        (Some(path), _) => load_config(path)?,
        (None, Some(p)) => Scenario::from_preset(kind, p),
        (None, None) => return Err(HarnessError::Scenario("give --config or --preset".into())),
    };
    if s.kind != kind {
        return Err(HarnessError::Scenario(format!(
            "scenario kind is `{}`, command expects `{}`",
            s.kind.as_str(),
            kind.as_str()
        )));
    }
    if let Some(p) = &c.preset {
        s.preset = Some(p.clone());
        s.cfg = None;
    }
    if c.dt.is_some() {
        s.solver.dt = c.dt;
    }
    if c.t_end.is_some() {
        s.solver.t_end = c.t_end;
    }
    let out = c.out.clone().unwrap_or_else(|| s.output_dir());
    Ok((s, out))
}

fn run(kind: ScenarioKind, c: &Common) -> Result<()> {
    let (s, out) = scenario(kind, c)?;
    run_scenario(&s, &out)?;
    println!("{}", out.join("summary.json").display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match &cli.cmd {
        Command::Simulate(c) => run(ScenarioKind::Simulate, c),
        Command::Curves(c) => run(ScenarioKind::Curves, c),
        Command::Classify(c) => run(ScenarioKind::Classify, c),
        Command::Sweep(c) => run(ScenarioKind::NeuromodSweep, c),
        Command::Staircase(c) => run(ScenarioKind::Staircase, c),
        Command::Tempsweep(c) => run(ScenarioKind::TemperatureSweep, c),
        Command::CompareInactivation(c) => run(ScenarioKind::InactivationCompare, c),
        Command::Serve { addr } => serve(addr),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn serve(addr: &str) -> Result<()> {
    let rt = tokio::runtime::Runtime::new().map_err(|e| HarnessError::Scenario(e.to_string()))?;
    rt.block_on(async {
        let listener = tokio::net::TcpListener::bind(addr)
            .await
            .map_err(|e| HarnessError::Scenario(format!("cannot bind {addr}: {e}")))?;
        eprintln!("listening on http://{addr}");
        mixfeed_service::serve(listener)
            .await
            .map_err(|e| HarnessError::Scenario(e.to_string()))
    })
}
