//! Deterministic file outputs: metadata.json, diagnostics.csv and optional
//! per-snapshot field tables. Floats are written with Rust's shortest
//! round-trip formatting, so identical runs produce byte-identical files.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::RunConfig;
use crate::dynamics::{Termination, Trajectory};
use crate::error::Result;
use crate::inertia::{apply_a, ModelSpec};

/// Write `bytes` to `path` atomically (temp file + rename).
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    fs::create_dir_all(dir)?;
    let tmp = dir.join(format!(
        ".{}.tmp",
        path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
    ));
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

#[derive(Serialize)]
struct Metadata<'a> {
    version: &'static str,
    termination: &'a str,
    config: &'a RunConfig,
}

/// Resolved config, termination flag and crate version.
pub fn write_metadata(dir: &Path, config: &RunConfig, termination: Termination) -> Result<PathBuf> {
    let meta = Metadata {
        version: env!("CARGO_PKG_VERSION"),
        termination: termination.as_str(),
        config,
    };
    let mut json = serde_json::to_string_pretty(&meta).expect("metadata serializes");
    json.push('\n');
    let path = dir.join("metadata.json");
    write_atomic(&path, json.as_bytes())?;
    Ok(path)
}

fn push_row(out: &mut String, values: &[f64]) {
    let mut first = true;
    for v in values {
        if !first {
            out.push(',');
        }
        out.push_str(&format!("{v}"));
        first = false;
    }
    out.push('\n');
}

/// diagnostics.csv: t,energy,mass,min_rho,max_abs_u[,horizontality].
pub fn write_diagnostics(dir: &Path, traj: &Trajectory) -> Result<PathBuf> {
    let with_defect = traj
        .diagnostics
        .iter()
        .any(|d| d.horizontality_defect.is_some());
    let mut out = String::from("t,energy,mass,min_rho,max_abs_u");
    if with_defect {
        out.push_str(",horizontality");
    }
    out.push('\n');
    for d in &traj.diagnostics {
        let mut row = vec![d.time, d.energy, d.mass, d.min_rho, d.max_abs_u];
        if with_defect {
            row.push(d.horizontality_defect.unwrap_or(f64::NAN));
        }
        push_row(&mut out, &row);
    }
    let path = dir.join("diagnostics.csv");
    write_atomic(&path, out.as_bytes())?;
    Ok(path)
}

/// fields_<index>.csv per snapshot: x,rho,u,m.
pub fn write_fields(dir: &Path, model: &ModelSpec, traj: &Trajectory) -> Result<Vec<PathBuf>> {
    let mut paths = Vec::new();
    for (index, state) in traj.states.iter().enumerate() {
        let m = apply_a(model, &state.rho, &state.u)?;
        let grid = state.rho.grid();
        let mut out = String::from("x,rho,u,m\n");
        for j in 0..grid.n() {
            push_row(
                &mut out,
                &[grid.nodes()[j], state.rho.values()[j], state.u.values()[j], m.values()[j]],
            );
        }
        let path = dir.join(format!("fields_{index:04}.csv"));
        write_atomic(&path, out.as_bytes())?;
        paths.push(path);
    }
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;
    use crate::dynamics::{simulate, Form, State};
    use crate::grid::{Density, Grid, ScalarField};
    use crate::presets::{make_preset, Preset};

    fn small_run() -> (RunConfig, ModelSpec, Trajectory) {
        let text = r#"{
            "grid": {"n": 32},
            "model": {"preset": "burgers"},
            "initial": {"rho": [{"kind": "const", "c": 1.0}],
                        "u": [{"kind": "sin", "c": 0.1, "kappa": 1.0}]},
            "time": {"t_end": 0.1, "dt": 0.01, "snapshot_every": 5}
        }"#;
        let config = parse_config(text).unwrap();
        let model = make_preset(Preset::Burgers);
        let g = Grid::new(32, crate::config::DEFAULT_LENGTH).unwrap();
        let rho = Density::constant(g.clone(), 1.0).unwrap();
        let u = ScalarField::from_fn(g, |x| 0.1 * x.sin());
        let state = State::new(0.0, rho, u).unwrap();
        let traj = simulate(&model, &state, 0.1, 0.01, Form::Momentum, 5).unwrap();
        (config, model, traj)
    }

    #[test]
    fn outputs_are_byte_identical_across_runs() {
        let (config, model, traj) = small_run();
        let dir1 = tempfile::tempdir().unwrap();
        let dir2 = tempfile::tempdir().unwrap();
        for dir in [dir1.path(), dir2.path()] {
            write_metadata(dir, &config, traj.termination).unwrap();
            write_diagnostics(dir, &traj).unwrap();
            write_fields(dir, &model, &traj).unwrap();
        }
        for name in ["metadata.json", "diagnostics.csv", "fields_0000.csv"] {
            let a = fs::read(dir1.path().join(name)).unwrap();
            let b = fs::read(dir2.path().join(name)).unwrap();
            assert_eq!(a, b, "{name}");
        }
    }

    #[test]
    fn metadata_round_trips() {
        let (config, _, traj) = small_run();
        let dir = tempfile::tempdir().unwrap();
        let path = write_metadata(dir.path(), &config, traj.termination).unwrap();
        let text = fs::read_to_string(path).unwrap();
        let value: serde_json::Value = serde_json::from_str(&text).unwrap();
        let embedded = serde_json::to_string(&value["config"]).unwrap();
        let reparsed = parse_config(&embedded).unwrap();
        assert_eq!(config, reparsed);
        assert_eq!(value["termination"], "completed");
    }

    #[test]
    fn diagnostics_header_matches_contents() {
        let (_, _, traj) = small_run();
        let dir = tempfile::tempdir().unwrap();
        let path = write_diagnostics(dir.path(), &traj).unwrap();
        let text = fs::read_to_string(path).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "t,energy,mass,min_rho,max_abs_u");
        assert_eq!(lines.count(), traj.diagnostics.len());
        assert!(!text.contains("NaN"));
    }
}
