//! Convergence studies over a mesh sequence.

use std::path::Path;
use std::time::Instant;

use serde::Serialize;

use super::{error_norms, solve_case, ManufacturedCase, RunConfig};
use crate::error::{Result, VemError};
use crate::mesh::Mesh;

/// One refinement level.
#[derive(Clone, Debug, Serialize)]
pub struct StudyRow {
    pub mesh: String,
    pub h: f64,
    /// Free `V` plus free `U` dofs.
    pub ndof: usize,
    /// `4 N_V + N_E + N_F`, no boundary elimination.
    pub ndof_paper_convention: usize,
    pub err_b: f64,
    pub rate_b: Option<f64>,
    pub err_a1: f64,
    pub rate_a1: Option<f64>,
    pub iters: usize,
    pub seconds: f64,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct StudyReport {
    pub rows: Vec<StudyRow>,
}

pub fn rate(e0: f64, e1: f64, h0: f64, h1: f64) -> f64 {
    (e0 / e1).ln() / (h0 / h1).ln()
}

/// Solves one mesh and measures its errors.
pub fn run_one(id: &str, mesh: &Mesh, case: &ManufacturedCase, cfg: &RunConfig) -> Result<StudyRow> {
    let start = Instant::now();
    let sol = solve_case(mesh, case, cfg)?;
    let (err_b, err_a1) = error_norms(mesh, &sol.system, &sol.psi_h, case, cfg.quad);
    Ok(StudyRow {
        mesh: id.to_string(),
        h: mesh.h(),
        ndof: sol.system.num_free_v() + sol.system.num_free_u(),
        ndof_paper_convention: 4 * mesh.num_vertices() + mesh.num_edges() + mesh.num_faces(),
        err_b,
        rate_b: None,
        err_a1,
        rate_a1: None,
        iters: sol.report.iterations,
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// Runs meshes in order and fills consecutive-pair rates. On failure the
/// rows finished so far are returned alongside the error.
pub fn run_study(
    meshes: &[(String, Mesh)],
    case: &ManufacturedCase,
    cfg: &RunConfig,
) -> std::result::Result<StudyReport, (StudyReport, VemError)> {
    let mut report = StudyReport::default();
    for (id, mesh) in meshes {
        match run_one(id, mesh, case, cfg) {
            Ok(mut row) => {
                if let Some(prev) = report.rows.last() {
                    row.rate_b = Some(rate(prev.err_b, row.err_b, prev.h, row.h));
                    row.rate_a1 = Some(rate(prev.err_a1, row.err_a1, prev.h, row.h));
                }
                report.rows.push(row);
            }
            Err(e) => return Err((report, e)),
        }
    }
    Ok(report)
}

impl StudyReport {
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        for row in &self.rows {
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    /// Chooses the format from the extension (`.json`, otherwise CSV).
    pub fn write(&self, path: &Path) -> Result<()> {
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") => self.write_json(path),
            _ => self.write_csv(path),
        }
    }

    pub fn to_table(&self) -> String {
        let fmt_rate = |r: Option<f64>| r.map_or_else(|| "-".to_string(), |r| format!("{r:.4}"));
        let mut s = format!(
            "{:<22} {:>9} {:>7} {:>12} {:>7} {:>12} {:>7} {:>6} {:>8}\n",
            "mesh", "h", "ndof", "err_b", "rate", "err_a1", "rate", "iters", "sec"
        );
        for r in &self.rows {
            s += &format!(
                "{:<22} {:>9.6} {:>7} {:>12.4e} {:>7} {:>12.4e} {:>7} {:>6} {:>8.2}\n",
                r.mesh,
                r.h,
                r.ndof,
                r.err_b,
                fmt_rate(r.rate_b),
                r.err_a1,
                fmt_rate(r.rate_a1),
                r.iters,
                r.seconds
            );
        }
        s
    }
}
