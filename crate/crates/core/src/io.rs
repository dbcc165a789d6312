//! Portable text exports: CSV tables and JSON envelopes for bases, grid
//! functions and cylinder fields, plus the CSV loader for load data.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::eigenbasis::{EigenBasis, EigenMethod};
use crate::error::{Error, Result};
use crate::extension::{CylinderField, CylinderGrid};
use crate::geometry::{Grid, GridFunction};

fn coord_header(grid: &Grid) -> &'static str {
    if grid.dim() == 1 {
        "x"
    } else {
        "x1,x2"
    }
}

fn push_coords(out: &mut String, grid: &Grid, i: usize) {
    let p = grid.coord(i);
    if grid.dim() == 1 {
        out.push_str(&p[0].to_string());
    } else {
        out.push_str(&format!("{},{}", p[0], p[1]));
    }
}

/// `x,u` (or `x1,x2,u`) per node.
pub fn grid_function_csv(grid: &Grid, u: &GridFunction, name: &str) -> String {
    let mut out = format!("{},{name}\n", coord_header(grid));
    for i in 0..grid.len() {
        push_coords(&mut out, grid, i);
        out.push_str(&format!(",{}\n", u.0[i]));
    }
    out
}

/// `x,y,U` (or `x1,x2,y,U`) per cylinder node.
pub fn field_csv(cyl: &CylinderGrid, u: &CylinderField) -> String {
    let grid = &cyl.base;
    let mut out = format!("{},y,U\n", coord_header(grid));
    for i in 0..grid.len() {
        for (k, y) in cyl.levels.iter().enumerate() {
            push_coords(&mut out, grid, i);
            out.push_str(&format!(",{y},{}\n", u.get(i, k)));
        }
    }
    out
}

pub fn eigenvalues_csv(basis: &EigenBasis) -> String {
    let mut out = String::from("index,lambda\n");
    for (j, l) in basis.eigenvalues.iter().enumerate() {
        out.push_str(&format!("{},{l}\n", j + 1));
    }
    out
}

/// JSON form of an [`EigenBasis`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisEnvelope {
    pub version: String,
    pub method: EigenMethod,
    pub node_count: usize,
    pub eigenvalues: Vec<f64>,
    pub weights: Vec<f64>,
    pub modes: Vec<Vec<f64>>,
}

impl BasisEnvelope {
    pub fn from_basis(basis: &EigenBasis, version: &str) -> Self {
        BasisEnvelope {
            version: version.to_string(),
            method: basis.method,
            node_count: basis.node_count(),
            eigenvalues: basis.eigenvalues.clone(),
            weights: basis.weights.clone(),
            modes: basis.modes.iter().map(|m| m.0.clone()).collect(),
        }
    }

    pub fn into_basis(self) -> EigenBasis {
        EigenBasis {
            eigenvalues: self.eigenvalues,
            modes: self.modes.into_iter().map(GridFunction).collect(),
            weights: self.weights,
            method: self.method,
            iterations: 0,
        }
    }
}

/// Parses and validates a basis envelope: consistent lengths, finite
/// values, positive nondecreasing eigenvalues, positive weights.
pub fn parse_basis_json(text: &str) -> Result<BasisEnvelope> {
    let env: BasisEnvelope = serde_json::from_str(text)?;
    let n = env.node_count;
    if env.weights.len() != n {
        return Err(Error::BasisMismatch {
            expected: n,
            found: env.weights.len(),
        });
    }
    if env.modes.len() != env.eigenvalues.len() {
        return Err(Error::BasisMismatch {
            expected: env.eigenvalues.len(),
            found: env.modes.len(),
        });
    }
    if let Some(bad) = env.modes.iter().find(|m| m.len() != n) {
        return Err(Error::BasisMismatch {
            expected: n,
            found: bad.len(),
        });
    }
    if env.weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(Error::InvalidParameter("weights must be finite and nonnegative".into()));
    }
    if env.eigenvalues.iter().any(|l| !(l.is_finite() && *l > 0.0)) || env.eigenvalues.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidParameter("eigenvalues must be positive, finite and nondecreasing".into()));
    }
    if env.modes.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("mode values must be finite".into()));
    }
    Ok(env)
}

/// Cylinder field with its geometry, for JSON export.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldEnvelope {
    pub version: String,
    pub base: Grid,
    pub levels: Vec<f64>,
    pub field: CylinderField,
}

/// Reads load data from CSV rows `x,value` (1D) or `x1,x2,value` (2D), one
/// per grid node in any order. A header line is optional. Every node must
/// be matched exactly once, within a quarter of the spacing.
pub fn parse_f_csv(text: &str, grid: &Grid) -> Result<GridFunction> {
    let dim = grid.dim();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut values: Vec<Option<f64>> = vec![None; grid.len()];
    let mut seen_data = false;
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Config {
            line: row + 1,
            msg: format!("csv: {e}"),
        })?;
        let line = record.position().map_or(row + 1, |p| p.line() as usize);
        let bad = |msg: String| Error::Config { line, msg };
        if record.len() != dim + 1 {
            return Err(bad(format!("expected {} columns, found {}", dim + 1, record.len())));
        }
        let nums: Option<Vec<f64>> = record.iter().map(|f| f.parse::<f64>().ok().filter(|v| v.is_finite())).collect();
        let Some(nums) = nums else {
            if !seen_data && row == 0 {
                continue;
            }
            return Err(bad("non-numeric or non-finite entry".into()));
        };
        seen_data = true;
        let node = locate(grid, &nums[..dim]).ok_or_else(|| bad("coordinates do not match a grid node".into()))?;
        if values[node].replace(nums[dim]).is_some() {
            return Err(bad(format!("node {node} given twice")));
        }
    }
    let missing = values.iter().filter(|v| v.is_none()).count();
    if missing > 0 {
        return Err(Error::BasisMismatch {
            expected: grid.len(),
            found: grid.len() - missing,
        });
    }
    Ok(GridFunction(values.into_iter().map(|v| v.unwrap()).collect()))
}

fn locate(grid: &Grid, x: &[f64]) -> Option<usize> {
    let origin = grid.coord(0);
    let fx = (x[0] - origin[0]) / grid.hx;
    let ix = fx.round();
    if !((fx - ix).abs() <= 0.25 && ix >= 0.0 && ix < grid.nx as f64) {
        return None;
    }
    let iy = if grid.dim() == 1 {
        0.0
    } else {
        let fy = (x[1] - origin[1]) / grid.hy;
        let iy = fy.round();
        if !((fy - iy).abs() <= 0.25 && iy >= 0.0 && iy < grid.ny as f64) {
            return None;
        }
        iy
    };
    Some(grid.index(ix as usize, iy as usize))
}

pub fn load_f_csv(path: &Path, grid: &Grid) -> Result<GridFunction> {
    parse_f_csv(&std::fs::read_to_string(path)?, grid)
}
