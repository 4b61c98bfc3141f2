//! Manufactured-solution solves, discrete error norms, convergence studies,
//! structural checks and output writers.

pub mod manufactured;
pub mod study;
pub mod verify;
pub mod vtk;

use sprs::CsMat;

use crate::assembly::{assemble, AssemblyOptions, GlobalSystem};
use crate::error::Result;
use crate::linsolve::{cg_solve, direct_solve, spmv, SolveReport, DEFAULT_TOL};
use crate::local::dofs::interpolate_v;
use crate::local::ElementOptions;
use crate::mesh::Mesh;

pub use manufactured::ManufacturedCase;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolverKind {
    Cg,
    Direct,
}

#[derive(Clone, Copy, Debug)]
pub struct SolverConfig {
    pub kind: SolverKind,
    pub tol: f64,
    /// `None` means `10 · n`.
    pub maxiter: Option<usize>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            kind: SolverKind::Cg,
            tol: DEFAULT_TOL,
            maxiter: None,
        }
    }
}

/// Everything a manufactured-solution run needs besides the mesh.
#[derive(Clone, Copy, Debug)]
pub struct RunConfig {
    pub solver: SolverConfig,
    /// Quadrature parameter for loads and dof evaluation.
    pub quad: usize,
    pub element: ElementOptions,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            solver: SolverConfig::default(),
            quad: crate::local::DEFAULT_LOAD_DEGREE,
            element: ElementOptions::default(),
        }
    }
}

/// Solves the SPD Schur system `S ψ = F`.
pub fn solve_spd(s: &CsMat<f64>, f: &[f64], cfg: &SolverConfig) -> Result<(Vec<f64>, SolveReport)> {
    match cfg.kind {
        SolverKind::Cg => cg_solve(s, f, cfg.tol, cfg.maxiter.unwrap_or(10 * f.len().max(1))),
        SolverKind::Direct => direct_solve(s, f, false),
    }
}

/// `sqrt(xᵀ M x)`.
pub fn energy(m: &CsMat<f64>, x: &[f64]) -> f64 {
    let y = spmv(m, x);
    x.iter().zip(&y).map(|(a, b)| a * b).sum::<f64>().max(0.0).sqrt()
}

/// Assembled problem together with its discrete solution.
pub struct Solution {
    pub system: GlobalSystem,
    /// `ψ_h` on free `V` dofs.
    pub psi_h: Vec<f64>,
    pub report: SolveReport,
}

pub fn solve_case(mesh: &Mesh, case: &ManufacturedCase, cfg: &RunConfig) -> Result<Solution> {
    let opts = AssemblyOptions {
        load_degree: cfg.quad,
        nu: case.nu,
        element: cfg.element,
    };
    let source = |x: &crate::mesh::Point| case.source(x);
    let system = assemble(mesh, Some(&source), &opts)?;
    let s = system.schur()?;
    let (psi_h, report) = solve_spd(&s, &system.load, &cfg.solver)?;
    Ok(Solution { system, psi_h, report })
}

/// `(‖I_h ψ − ψ_h‖_{b_h}, |∇×(I_h ψ − ψ_h)|_{a_h})`.
pub fn error_norms(
    mesh: &Mesh,
    system: &GlobalSystem,
    psi_h: &[f64],
    case: &ManufacturedCase,
    quad: usize,
) -> (f64, f64) {
    let full = interpolate_v(mesh, |x| case.psi(x), |x| case.curl_psi(x), quad);
    let e: Vec<f64> = system
        .numbering
        .v
        .restrict(&full)
        .iter()
        .zip(psi_h)
        .map(|(a, b)| a - b)
        .collect();
    (energy(&system.b_vv, &e), energy(&system.a, &e))
}

/// Saddle-point cross-solve: returns `(ψ_h, λ_h)` on free dofs.
pub fn saddle_solve(system: &GlobalSystem) -> Result<(Vec<f64>, Vec<f64>, SolveReport)> {
    let (k, rhs) = system.saddle();
    let (x, rep) = direct_solve(&k, &rhs, true)?;
    let nv = system.num_free_v();
    Ok((x[..nv].to_vec(), x[nv..].to_vec(), rep))
}

/// `‖λ‖_{b_h} = sqrt((Gλ)ᵀ B (Gλ))`.
pub fn lambda_norm(system: &GlobalSystem, lambda: &[f64]) -> f64 {
    energy(&system.b_vv, &spmv(&system.g, lambda))
}
