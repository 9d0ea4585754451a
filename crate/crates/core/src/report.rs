//! Report schema and artifact writers.
//!
//! JSON reports are deterministic for a fixed config and seed (no wall-clock
//! content); sweep CSVs carry a runtime column for convenience, which is why
//! runtimes are excluded from the JSON schema. Every artifact declares the
//! hash of the configuration that produced it: JSON as a field, CSV as a
//! leading `# config_hash=...` comment line.

use crate::config::ProblemConfig;
use crate::field::{ScalarField, VectorField};
use crate::grid::{Grid, PairTable};
use crate::Result;
use serde::Serialize;
use std::io::Write;
use std::path::Path;

/// One named check with its measured value, reference, and verdict.
#[derive(Clone, Debug, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub value: f64,
    pub reference: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl CheckResult {
    /// Pass when `|value - reference| <= tolerance`.
    pub fn absolute(name: &str, value: f64, reference: f64, tolerance: f64) -> Self {
        CheckResult {
            name: name.to_string(),
            value,
            reference,
            tolerance,
            pass: (value - reference).abs() <= tolerance,
        }
    }

    /// Pass when `value <= bound` (value is already a defect or error).
    pub fn bound(name: &str, value: f64, bound: f64) -> Self {
        CheckResult {
            name: name.to_string(),
            value,
            reference: 0.0,
            tolerance: bound,
            pass: value <= bound,
        }
    }
}

/// Report of the verification suite.
#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub config_hash: String,
    pub problem: ProblemConfig,
    pub results: Vec<CheckResult>,
    pub passed: usize,
    pub failed: usize,
}

impl VerifyReport {
    pub fn new(config_hash: String, problem: ProblemConfig, results: Vec<CheckResult>) -> Self {
        let passed = results.iter().filter(|r| r.pass).count();
        let failed = results.len() - passed;
        VerifyReport {
            config_hash,
            problem,
            results,
            passed,
            failed,
        }
    }

    pub fn all_passed(&self) -> bool {
        self.failed == 0
    }
}

/// One sweep point. The runtime (seconds) appears only in CSV output.
#[derive(Clone, Debug, Serialize)]
pub struct SweepRow {
    pub delta: f64,
    pub h: f64,
    pub value: f64,
    pub reference: f64,
    pub abs_error: f64,
    pub rel_error: f64,
    #[serde(skip)]
    pub runtime: f64,
}

impl SweepRow {
    pub fn new(delta: f64, h: f64, value: f64, reference: f64, runtime: f64) -> Self {
        let abs_error = (value - reference).abs();
        let rel_error = if reference != 0.0 {
            abs_error / reference.abs()
        } else {
            abs_error
        };
        SweepRow {
            delta,
            h,
            value,
            reference,
            abs_error,
            rel_error,
            runtime,
        }
    }
}

/// Report of a horizon sweep (consistency or localization study).
#[derive(Clone, Debug, Serialize)]
pub struct SweepReport {
    pub config_hash: String,
    pub name: String,
    pub problem: ProblemConfig,
    pub rows: Vec<SweepRow>,
    /// Empirical orders `log2(E_k / E_{k+1})` between consecutive rows.
    pub orders: Vec<f64>,
    pub results: Vec<CheckResult>,
}

/// Summary of a single state solve.
#[derive(Clone, Debug, Serialize)]
pub struct SolveSummary {
    pub config_hash: String,
    pub problem: ProblemConfig,
    pub primal_energy: f64,
    pub dual_energy: f64,
    pub duality_gap: f64,
    pub kkt_stationarity: f64,
    pub kkt_feasibility: f64,
    pub iterations: usize,
    pub warnings: Vec<String>,
}

/// Summary of a design run.
#[derive(Clone, Debug, Serialize)]
pub struct DesignSummary {
    pub config_hash: String,
    pub problem: ProblemConfig,
    pub objective: f64,
    pub objective_history: Vec<f64>,
    pub volume_used: f64,
    pub outer_iterations: usize,
    pub inner_gaps: Vec<f64>,
    pub inner_iterations: Vec<usize>,
    pub warnings: Vec<String>,
}

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let mut file = std::fs::File::create(path)?;
    serde_json::to_writer_pretty(&mut file, value)?;
    file.write_all(b"\n")?;
    Ok(())
}

fn open_csv(path: &Path, config_hash: &str) -> Result<std::fs::File> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let mut file = std::fs::File::create(path)?;
    writeln!(file, "# config_hash={config_hash}")?;
    Ok(file)
}

/// Cell dump `x[,y],value`, one row per cell.
pub fn write_scalar_field_csv(
    path: &Path,
    grid: &Grid,
    field: &ScalarField,
    config_hash: &str,
) -> Result<()> {
    let mut file = open_csv(path, config_hash)?;
    if grid.n == 1 {
        writeln!(file, "x,value")?;
        for (c, v) in grid.centers.iter().zip(&field.values) {
            writeln!(file, "{},{}", c[0], v)?;
        }
    } else {
        writeln!(file, "x,y,value")?;
        for (c, v) in grid.centers.iter().zip(&field.values) {
            writeln!(file, "{},{},{}", c[0], c[1], v)?;
        }
    }
    Ok(())
}

/// Cell dump of a vector field, `x[,y],vx[,vy]`.
pub fn write_vector_field_csv(
    path: &Path,
    grid: &Grid,
    field: &VectorField,
    config_hash: &str,
) -> Result<()> {
    let mut file = open_csv(path, config_hash)?;
    if grid.n == 1 {
        writeln!(file, "x,vx")?;
        for (c, v) in grid.centers.iter().zip(&field.values) {
            writeln!(file, "{},{}", c[0], v[0])?;
        }
    } else {
        writeln!(file, "x,y,vx,vy")?;
        for (c, v) in grid.centers.iter().zip(&field.values) {
            writeln!(file, "{},{},{},{}", c[0], c[1], v[0], v[1])?;
        }
    }
    Ok(())
}

/// Pair dump `i,j,r,value`, one row per stored pair.
pub fn write_pairs_csv(
    path: &Path,
    pairs: &PairTable,
    values: &[f64],
    config_hash: &str,
) -> Result<()> {
    let mut file = open_csv(path, config_hash)?;
    writeln!(file, "i,j,r,value")?;
    for (e, v) in pairs.entries.iter().zip(values) {
        writeln!(file, "{},{},{},{}", e.i, e.j, e.r, v)?;
    }
    Ok(())
}

/// Sweep table with the runtime column.
pub fn write_sweep_csv(path: &Path, rows: &[SweepRow], config_hash: &str) -> Result<()> {
    let mut file = open_csv(path, config_hash)?;
    writeln!(file, "delta,h,value,reference,abs_error,rel_error,runtime")?;
    for r in rows {
        writeln!(
            file,
            "{},{},{},{},{},{},{:.3}",
            r.delta, r.h, r.value, r.reference, r.abs_error, r.rel_error, r.runtime
        )?;
    }
    Ok(())
}
