//! File emission. Every number goes through [`num`], which prints 17
//! significant digits so values round-trip exactly.

use std::fs;
use std::path::{Path, PathBuf};

use halfline::{FieldState, Grid1D, StepDiagnostics, Trajectory};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{CliError, Result};

pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

/// Output directory plus the relative paths written into it so far.
pub struct Output {
    root: PathBuf,
    files: Vec<String>,
}

impl Output {
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root)?;
        Ok(Output {
            root: root.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Absolute path for `rel`, creating parent directories and recording it.
    pub fn path(&mut self, rel: &str) -> Result<PathBuf> {
        let p = self.root.join(rel);
        if let Some(dir) = p.parent() {
            fs::create_dir_all(dir)?;
        }
        self.files.push(rel.to_string());
        Ok(p)
    }

    pub fn csv(&mut self, rel: &str, header: &[&str], rows: &[Vec<String>]) -> Result<PathBuf> {
        let p = self.path(rel)?;
        let mut w = csv::Writer::from_path(&p)?;
        w.write_record(header)?;
        for r in rows {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(p)
    }

    pub fn files(&self) -> &[String] {
        &self.files
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SnapshotEntry {
    pub t: f64,
    pub file: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub status: String,
    pub exit_code: i32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    /// Resolved configuration; also written verbatim as `config.toml`.
    pub config: serde_json::Value,
    pub files: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<Grid1D>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub snapshots: Vec<SnapshotEntry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub diagnostics: Vec<StepDiagnostics>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub summary: Vec<String>,
}

impl Manifest {
    pub fn new(command: &str, cfg: &RunConfig) -> Result<Self> {
        Ok(Manifest {
            tool: "halfline".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            status: String::new(),
            exit_code: 0,
            message: None,
            config: serde_json::to_value(cfg)?,
            files: Vec::new(),
            grid: None,
            snapshots: Vec::new(),
            diagnostics: Vec::new(),
            summary: Vec::new(),
        })
    }

    pub fn write(mut self, out: &mut Output, cfg: &RunConfig) -> Result<()> {
        let toml_path = out.path("config.toml")?;
        let text = toml::to_string(cfg).map_err(|e| CliError::config(e.to_string()))?;
        fs::write(toml_path, text)?;
        self.files = out.files().to_vec();
        let p = out.root().join("manifest.json");
        fs::write(p, serde_json::to_string_pretty(&self)? + "\n")?;
        Ok(())
    }
}

pub fn write_snapshot(
    out: &mut Output,
    index: usize,
    grid: &Grid1D,
    s: &FieldState,
) -> Result<String> {
    let rel = format!("snapshots/snapshot_{index:04}.csv");
    let rows: Vec<Vec<String>> = (0..grid.nodes())
        .map(|j| vec![num(grid.x(j)), num(s.rho[j]), num(s.m[j])])
        .collect();
    out.csv(&rel, &["x", "rho", "m"], &rows)?;
    Ok(rel)
}

/// Two-column `x value` files, one per field, for generic plotting tools.
pub fn write_plot_data(
    out: &mut Output,
    index: usize,
    grid: &Grid1D,
    s: &FieldState,
) -> Result<()> {
    use std::fmt::Write;
    for (name, v) in [("rho", &s.rho), ("m", &s.m)] {
        let mut text = format!("# t = {}\n# x {name}\n", num(s.t));
        for (j, value) in v.iter().enumerate() {
            writeln!(text, "{} {}", num(grid.x(j)), num(*value)).expect("string write");
        }
        fs::write(out.path(&format!("plot/{name}_{index:04}.dat"))?, text)?;
    }
    Ok(())
}

/// Reads a trajectory written by `solve` back from its output directory.
pub fn load_trajectory(dir: &Path) -> Result<Trajectory> {
    let path = dir.join("manifest.json");
    let text = fs::read_to_string(&path).map_err(|source| CliError::ReadConfig {
        path: path.clone(),
        source,
    })?;
    let m: Manifest = serde_json::from_str(&text)?;
    let grid = m
        .grid
        .ok_or_else(|| CliError::config(format!("{} records no solver grid", path.display())))?;
    let mut traj = Trajectory::new(grid);
    for (k, e) in m.snapshots.iter().enumerate() {
        let mut r = csv::Reader::from_path(dir.join(&e.file))?;
        let mut s = FieldState {
            t: e.t,
            rho: Vec::with_capacity(grid.nodes()),
            m: Vec::with_capacity(grid.nodes()),
        };
        for rec in r.records() {
            let rec = rec?;
            let field = |i: usize| -> Result<f64> {
                rec.get(i)
                    .and_then(|v| v.parse().ok())
                    .ok_or_else(|| CliError::config(format!("malformed row in {}", e.file)))
            };
            s.rho.push(field(1)?);
            s.m.push(field(2)?);
        }
        s.check(&grid)?;
        let d = m.diagnostics.get(k).copied().unwrap_or_default();
        traj.push(s, d)?;
    }
    Ok(traj)
}
