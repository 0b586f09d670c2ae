//! Output directory layout: CSV tables with a units row, binary matrices,
//! JSON summaries and the run manifest.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use hydrofluct::grid::Grid;
use hydrofluct::matrix_io::{self, write_atomic};
use hydrofluct::{Error, Result};

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// A CSV table: header row, units row, then data rows.
pub struct Table {
    pub columns: Vec<String>,
    pub units: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(spec: &[(&str, &str)]) -> Table {
        Table {
            columns: spec.iter().map(|c| c.0.to_string()).collect(),
            units: spec.iter().map(|c| c.1.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn render(&self) -> String {
        let mut s = self.columns.join(",");
        s.push('\n');
        s.push_str(&self.units.join(","));
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.join(","));
            s.push('\n');
        }
        s
    }
}

/// Shortest round-trip decimal form.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

pub fn component_names(dim: usize) -> Vec<&'static str> {
    ["e", "rho", "j_x", "j_y"][..dim + 2].to_vec()
}

pub fn component_units(dim: usize) -> Vec<String> {
    let vol = if dim == 1 { "L" } else { "L^2" };
    vec![format!("E/{vol}"), format!("M/{vol}"), format!("M/({vol} T)"), format!("M/({vol} T)")][..dim + 2].to_vec()
}

/// Matrix over node-major unknowns as CSV: one labelled row per unknown,
/// the units row gives the unit of each column's unknown.
pub fn matrix_table(grid: &Grid, m: &DMatrix<f64>) -> Table {
    let names = component_names(grid.dim);
    let units = component_units(grid.dim);
    let nodes = grid.interior_nodes();
    let label = |k: usize| format!("{}@{}", names[k % names.len()], nodes[k / names.len()]);
    let mut spec = vec![("unknown".to_string(), "-".to_string())];
    for k in 0..m.ncols() {
        spec.push((label(k), units[k % units.len()].clone()));
    }
    let mut t = Table {
        columns: spec.iter().map(|c| c.0.clone()).collect(),
        units: spec.iter().map(|c| c.1.clone()).collect(),
        rows: Vec::new(),
    };
    for i in 0..m.nrows() {
        let mut row = vec![label(i)];
        row.extend((0..m.ncols()).map(|j| num(m[(i, j)])));
        t.push(row);
    }
    t
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputRecord {
    pub file: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gate {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub passed: bool,
}

impl Gate {
    /// Passes when `value <= threshold`.
    pub fn at_most(name: &str, value: f64, threshold: f64) -> Gate {
        Gate { name: name.into(), value, threshold, passed: value <= threshold }
    }

    /// Passes when `value < threshold`.
    pub fn below(name: &str, value: f64, threshold: f64) -> Gate {
        Gate { name: name.into(), value, threshold, passed: value < threshold }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub outputs: Vec<OutputRecord>,
    pub gates: Vec<Gate>,
    pub seeds: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub tool_version: String,
    pub library_version: String,
    pub schema_version: u32,
    pub config_file: String,
    pub config_sha256: String,
    pub route: String,
    pub stages: BTreeMap<String, StageRecord>,
}

pub const MANIFEST: &str = "manifest.json";
pub const CONFIG_COPY: &str = "config.toml";

/// Output directory of one run.
pub struct OutDir {
    pub root: PathBuf,
    outputs: Vec<OutputRecord>,
    gates: Vec<Gate>,
}

impl OutDir {
    pub fn new(root: &Path) -> Result<OutDir> {
        fs::create_dir_all(root)?;
        Ok(OutDir { root: root.to_path_buf(), outputs: Vec::new(), gates: Vec::new() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        write_atomic(&self.path(name), bytes)?;
        self.outputs.push(OutputRecord { file: name.into(), sha256: sha256_hex(bytes) });
        Ok(())
    }

    pub fn write_table(&mut self, name: &str, t: &Table) -> Result<()> {
        self.write(name, t.render().as_bytes())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, v: &T) -> Result<()> {
        let mut s = serde_json::to_string_pretty(v).map_err(|e| Error::Invalid(e.to_string()))?;
        s.push('\n');
        self.write(name, s.as_bytes())
    }

    /// Binary and CSV forms of a matrix over node-major unknowns.
    pub fn write_matrix(&mut self, stem: &str, grid: &Grid, m: &DMatrix<f64>) -> Result<()> {
        self.write(&format!("{stem}.bin"), &matrix_io::encode_binary(m, matrix_io::node_major_tag(grid)))?;
        self.write_table(&format!("{stem}.csv"), &matrix_table(grid, m))
    }

    pub fn read_matrix(&self, stem: &str, grid: &Grid) -> Result<DMatrix<f64>> {
        let path = self.path(&format!("{stem}.bin"));
        let bytes = fs::read(&path).map_err(|e| missing(&path, e))?;
        let (m, tag) = matrix_io::decode_binary(&bytes)?;
        let n = grid.num_unknowns();
        if tag != matrix_io::node_major_tag(grid) || m.shape() != (n, n) {
            return Err(Error::Invalid(format!("{} does not match the configured grid", path.display())));
        }
        Ok(m)
    }

    pub fn read_json<T: for<'de> Deserialize<'de>>(&self, name: &str) -> Result<T> {
        let path = self.path(name);
        let text = fs::read_to_string(&path).map_err(|e| missing(&path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Invalid(format!("{}: {e}", path.display())))
    }

    pub fn gate(&mut self, g: Gate) {
        self.gates.push(g);
    }

    /// Closes a stage: returns its record and clears the accumulators.
    pub fn finish_stage(&mut self, seeds: Vec<u64>) -> StageRecord {
        StageRecord { outputs: std::mem::take(&mut self.outputs), gates: std::mem::take(&mut self.gates), seeds }
    }
}

fn missing(path: &Path, e: std::io::Error) -> Error {
    if e.kind() == std::io::ErrorKind::NotFound {
        Error::Invalid(format!("{} not found; run the earlier stage first", path.display()))
    } else {
        Error::Io(e)
    }
}
