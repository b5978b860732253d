//! `floquet` command-line front end.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::config::{self, RunConfig};
use crate::drive;
use crate::evolve::{self, DRIVE_FRAME_CONVENTION};
use crate::lattice::{self, HaldaneParams, ModelKind};
use crate::observables;
use crate::output::{self, Manifest};
use crate::sweep;
use crate::Error;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Parser)]
#[command(name = "floquet", about = "Quantized pumping on Floquet synthetic lattices", disable_version_flag = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct ConfigArgs {
    /// Run configuration file (`key = value` lines).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one config key, e.g. `--set model.M=2`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Output directory (overrides `output.dir`).
    #[arg(long)]
    out: Option<PathBuf>,
}

impl ConfigArgs {
    fn load(&self) -> Result<RunConfig, Error> {
        let mut overrides = self.overrides.clone();
        if let Some(out) = &self.out {
            overrides.push(format!("output.dir = {}", out.display()));
        }
        Ok(match &self.config {
            Some(path) => config::load_config_with_overrides(path, &overrides)?,
            None => RunConfig::parse_with_overrides("", &overrides)?,
        })
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Integrate one trajectory and write it with its work and tone energies.
    Evolve(ConfigArgs),
    /// Run an (M, φ) grid of evolutions and fit slopes per cell.
    Sweep {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Worker threads (overrides `sweep.workers` and FLOQUET_WORKERS).
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Density of states of the synthesized Hamiltonian for several masses.
    Dos {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Comma-separated masses.
        #[arg(long, default_value = "1,2,3,4,5,6", value_delimiter = ',')]
        masses: Vec<f64>,
        #[arg(long, default_value_t = 96)]
        grid: usize,
        #[arg(long, default_value_t = 80)]
        bins: usize,
    },
    /// Print the lattice Chern number of the lower band.
    Chern {
        #[arg(long)]
        kind: ModelKind,
        #[arg(long = "M", allow_hyphen_values = true)]
        mass: f64,
        #[arg(long, allow_hyphen_values = true)]
        phi: f64,
        #[arg(long, default_value_t = 64)]
        grid: usize,
    },
    /// Export the modulation waveforms for an arbitrary waveform generator.
    Signals {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Samples per µs.
        #[arg(long, default_value_t = 100.0)]
        rate: f64,
        /// Length in µs; the configured horizon by default.
        #[arg(long)]
        duration: Option<f64>,
    },
    /// Print the tool version.
    Version,
}

/// Runs the CLI and returns the process exit code: 0 on success, 1 on a
/// runtime failure, 2 on a usage or configuration error.
pub fn run_cli<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e.to_string().replace('\n', " "));
            match e {
                Error::Config(_) => 2,
                _ => 1,
            }
        }
    }
}

fn dispatch(cmd: Command) -> Result<(), Error> {
    let started = Instant::now();
    match cmd {
        Command::Evolve(args) => cmd_evolve(&args.load()?, started),
        Command::Sweep { cfg, workers } => {
            let mut rc = cfg.load()?;
            if workers.is_some() {
                rc.sweep.workers = workers;
            }
            cmd_sweep(&rc, started)
        }
        Command::Dos { cfg, masses, grid, bins } => cmd_dos(&cfg.load()?, &masses, grid, bins, started),
        Command::Chern { kind, mass, phi, grid } => {
            let c = lattice::chern_number(
                lattice::bloch_hamiltonian(kind, HaldaneParams::new(mass, phi)),
                &lattice::geometry(kind),
                grid,
            )?;
            println!("{c}");
            Ok(())
        }
        Command::Signals { cfg, rate, duration } => {
            let rc = cfg.load()?;
            let duration = duration.unwrap_or_else(|| rc.schedule().duration);
            cmd_signals(&rc, rate, duration, started)
        }
        Command::Version => {
            println!("floquet {VERSION}");
            Ok(())
        }
    }
}

fn echo_of(rc: &RunConfig) -> Vec<(String, String)> {
    let mut e = rc.echo();
    e.extend(rc.derived());
    e
}

fn finish(
    rc: &RunConfig,
    command: &str,
    files: Vec<String>,
    summary: serde_json::Value,
    started: Instant,
) -> Result<(), Error> {
    let dir = &rc.output_dir;
    write_text(&dir.join("resolved.cfg"), &rc.to_config_text())?;
    let mut all = files;
    all.push("resolved.cfg".into());
    Manifest {
        tool: "floquet".into(),
        version: VERSION.into(),
        command: command.into(),
        parameters: echo_of(rc).into_iter().collect(),
        drive_frame: DRIVE_FRAME_CONVENTION.into(),
        files: all,
        summary,
        wall_time_s: started.elapsed().as_secs_f64(),
    }
    .write(&dir.join("manifest.json"))?;
    Ok(())
}

fn write_text(path: &Path, text: &str) -> Result<(), Error> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::Io(format!("{}: {e}", parent.display())))?;
    }
    std::fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn cmd_evolve(rc: &RunConfig, started: Instant) -> Result<(), Error> {
    let schedule = rc.schedule();
    let traj = if rc.dissipation.enabled {
        evolve::evolve_driven_dissipative(rc.kind, &rc.drive, rc.phi, &rc.dissipation, schedule)?
    } else {
        evolve::evolve_conservative(rc.kind, &rc.drive, rc.phi, schedule)?
    };
    let ws = observables::work_done(&traj, rc.kind, &rc.drive, rc.phi)?;
    let fit = observables::pumping_slope(&ws, &rc.drive, rc.evolve.window_start).ok();
    let table = drive::harmonic_table(rc.kind);
    let hw = observables::work_by_harmonic(&traj, rc.kind, &rc.drive, rc.phi, &table)?;
    let coverage = observables::coverage_fraction(&traj, observables::DEFAULT_COVERAGE_BINS);
    let drift = traj.norm.iter().map(|n| (n - 1.0).abs()).fold(0.0, f64::max);
    let echo = echo_of(rc);
    let dir = &rc.output_dir;
    output::trajectory_csv(&echo, &traj).write(&dir.join("trajectory.csv"))?;
    output::harmonics_csv(&echo, &hw).write(&dir.join("harmonics.csv"))?;
    let summary = json!({
        "samples": traj.len,
        "slope1": fit.map(|f| f.slope1),
        "slope2": fit.map(|f| f.slope2),
        "r2_1": fit.map(|f| f.r2_1),
        "r2_2": fit.map(|f| f.r2_2),
        "coverage": coverage.fraction,
        "max_norm_deviation": drift,
        "harmonic_completeness_error": observables::harmonic_completeness_error(&ws, &hw),
    });
    match fit {
        Some(f) => println!("slope1 = {:.4}  slope2 = {:.4}  (R² {:.3}, {:.3})", f.slope1, f.slope2, f.r2_1, f.r2_2),
        None => println!("too few samples for a slope fit"),
    }
    finish(rc, "evolve", vec!["trajectory.csv".into(), "harmonics.csv".into()], summary, started)
}

fn cmd_sweep(rc: &RunConfig, started: Instant) -> Result<(), Error> {
    let spec = rc.sweep_spec();
    let res = sweep::sweep(&spec)?;
    output::sweep_csv(&echo_of(rc), &res).write(&rc.output_dir.join("sweep.csv"))?;
    let failed = res.cells.iter().filter(|c| c.status == sweep::CellStatus::NumericalFailure).count();
    println!("{} cells, {failed} failed", res.cells.len());
    let summary = json!({ "cells": res.cells.len(), "numerical_failures": failed });
    finish(rc, "sweep", vec!["sweep.csv".into()], summary, started)
}

fn cmd_dos(rc: &RunConfig, masses: &[f64], grid: usize, bins: usize, started: Instant) -> Result<(), Error> {
    let hists = masses
        .iter()
        .map(|&m| observables::density_of_states(rc.kind, &rc.drive, rc.phi, m, grid, bins))
        .collect::<Result<Vec<_>, _>>()?;
    let mut echo = echo_of(rc);
    echo.push(("dos.grid".into(), grid.to_string()));
    echo.push(("dos.bins".into(), bins.to_string()));
    output::dos_csv(&echo, &hists).write(&rc.output_dir.join("dos.csv"))?;
    let summary = json!({
        "masses": masses,
        "min_abs_energy": hists.iter().map(|h| h.min_abs_energy).collect::<Vec<_>>(),
    });
    finish(rc, "dos", vec!["dos.csv".into()], summary, started)
}

fn cmd_signals(rc: &RunConfig, rate: f64, duration: f64, started: Instant) -> Result<(), Error> {
    let path = rc.output_dir.join("waveforms.csv");
    let w = output::export_waveforms(rc.kind, &rc.drive, rc.phi, rate, duration, &path, &echo_of(rc))?;
    let summary = json!({ "samples": w.times.len(), "sample_rate": rate, "duration": duration });
    finish(rc, "signals", vec!["waveforms.csv".into()], summary, started)
}
