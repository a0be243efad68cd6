use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use semiflow::config::{parse_config, RunConfig};
use semiflow::density::{density_geodesic, TangentDensity};
use semiflow::dynamics::{simulate, State, Termination};
use semiflow::error::{Error, Result};
use semiflow::output::{write_diagnostics, write_fields, write_metadata};
use semiflow::presets::Preset;
use semiflow::verify::{report, run_suite, Suite};

#[derive(Parser)]
#[command(name = "semiflow", version, about = "Pseudo-spectral solver for hydrodynamic PDEs on the circle")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate an initial-value problem described by a JSON config
    Run { config: PathBuf },
    /// Horizontally lift a density path: geodesic from (rho, rho_dot)
    Lift { config: PathBuf },
    /// Run a built-in verification suite (adjoint, conservation, burgers,
    /// dispersion, density, all)
    Verify { suite: String },
    /// List the built-in model presets
    Presets,
}

fn load_config(path: &PathBuf) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)?;
    parse_config(&text)
}

/// Output directory: SEMIFLOW_OUT overrides the config value.
fn out_dir(config: &RunConfig) -> PathBuf {
    match std::env::var_os("SEMIFLOW_OUT") {
        Some(dir) if !dir.is_empty() => PathBuf::from(dir),
        _ => PathBuf::from(&config.output.directory),
    }
}

fn exit_for(termination: Termination) -> ExitCode {
    match termination {
        Termination::Completed => ExitCode::SUCCESS,
        Termination::BlowupDetected | Termination::DensityFloor => ExitCode::from(2),
    }
}

fn cmd_run(path: &PathBuf) -> Result<ExitCode> {
    let config = load_config(path)?;
    let grid = config.build_grid()?;
    let model = config.build_model()?;
    let rho = config.initial_density(&grid)?;
    let u_expr = config.initial.u.as_ref().ok_or_else(|| Error::Config {
        path: "initial.u".to_string(),
        message: "run requires an initial velocity".to_string(),
    })?;
    let state = State::new(0.0, rho, u_expr.field(&grid))?;
    let traj = simulate(
        &model,
        &state,
        config.time.t_end,
        config.time.dt,
        config.form()?,
        config.time.snapshot_every,
    )?;
    let dir = out_dir(&config);
    write_metadata(&dir, &config, traj.termination)?;
    write_diagnostics(&dir, &traj)?;
    if config.output.write_fields {
        write_fields(&dir, &model, &traj)?;
    }
    let fin = traj.final_state();
    println!(
        "{}: {} at t = {:.6}, outputs in {}",
        model.label,
        traj.termination.as_str(),
        fin.time,
        dir.display()
    );
    Ok(exit_for(traj.termination))
}

fn cmd_lift(path: &PathBuf) -> Result<ExitCode> {
    let config = load_config(path)?;
    let grid = config.build_grid()?;
    let model = config.build_model()?;
    let rho = config.initial_density(&grid)?;
    let rho_dot_expr = config.initial.rho_dot.as_ref().ok_or_else(|| Error::Config {
        path: "initial.rho_dot".to_string(),
        message: "lift requires an initial density velocity".to_string(),
    })?;
    let rho_dot = TangentDensity::new(rho_dot_expr.field(&grid))?;
    let geo = density_geodesic(
        &model,
        &rho,
        &rho_dot,
        config.time.t_end,
        config.time.dt,
        config.time.snapshot_every,
    )?;
    let dir = out_dir(&config);
    write_metadata(&dir, &config, geo.trajectory.termination)?;
    write_diagnostics(&dir, &geo.trajectory)?;
    if config.output.write_fields {
        write_fields(&dir, &model, &geo.trajectory)?;
    }
    let fin = geo.trajectory.final_state();
    println!(
        "{}: lift {} at t = {:.6}, outputs in {}",
        model.label,
        geo.trajectory.termination.as_str(),
        fin.time,
        dir.display()
    );
    Ok(exit_for(geo.trajectory.termination))
}

fn cmd_verify(suite: &str) -> Result<ExitCode> {
    let suite: Suite = suite.parse()?;
    let checks = run_suite(suite)?;
    let all_pass = report(&checks, &mut std::io::stdout())?;
    Ok(if all_pass { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn cmd_presets() -> ExitCode {
    for name in Preset::names() {
        let desc = match *name {
            "burgers" => "a0 = rho; pressureless transport (Otto geometry on densities)",
            "epdiff_h1" => "a0 = a1 = 1; Camassa-Holm / EPDiff with the H1 metric",
            "shallow_water" => "a0 = rho, V = 1/2 int rho^2; classical shallow water",
            "compressible_euler" => "a0 = rho, V = int e(rho) rho; barotropic Euler",
            "sgn" => "a0 = rho, a1 = rho^3/3, V = 1/2 int rho^2; Serre-Green-Naghdi",
            _ => unreachable!(),
        };
        println!("{name}: {desc}");
    }
    ExitCode::SUCCESS
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Run { config } => cmd_run(config),
        Command::Lift { config } => cmd_lift(config),
        Command::Verify { suite } => cmd_verify(suite),
        Command::Presets => Ok(cmd_presets()),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
