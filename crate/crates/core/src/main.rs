use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use gradcurl::assembly::write_coo;
use gradcurl::harness::study::{run_one, run_study, StudyReport};
use gradcurl::harness::verify::verify_structure;
use gradcurl::harness::vtk::{cell_curl_means, write_vtu};
use gradcurl::harness::{manufactured, solve_case, ManufacturedCase, RunConfig, SolverConfig, SolverKind};
use gradcurl::local::{EdgeTraceWeight, ElementOptions, DEFAULT_LOAD_DEGREE};
use gradcurl::mesh::{check_regularity, load_mesh};
use gradcurl::{Mesh, Result, VemError};

#[derive(Parser)]
#[command(name = "gradcurl", version, about = "Grad-curl virtual element solver and verification harness")]
struct Cli {
    /// Worker threads (default: RAYON_NUM_THREADS or all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the manufactured problem on one mesh.
    Run {
        #[arg(long)]
        mesh: String,
        #[command(flatten)]
        solve: SolveArgs,
        /// Write the Schur matrix in COO text form.
        #[arg(long)]
        dump_matrix: Option<PathBuf>,
        /// Write cell means of the projected curl as a VTU file.
        #[arg(long)]
        vtk: Option<PathBuf>,
    },
    /// Convergence study over a comma-separated mesh list.
    Study {
        #[arg(long, value_delimiter = ',', required = true)]
        meshes: Vec<String>,
        #[command(flatten)]
        solve: SolveArgs,
    },
    /// Structural checks of the discrete complex.
    Verify {
        #[arg(long)]
        mesh: String,
        #[arg(long, default_value_t = DEFAULT_LOAD_DEGREE)]
        quad: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Mesh statistics and regularity.
    Meshinfo {
        #[arg(long)]
        mesh: String,
        #[arg(long, default_value_t = 0.05)]
        mu: f64,
    },
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long, value_enum, default_value = "cg")]
    solver: SolverArg,
    #[arg(long, default_value_t = gradcurl::linsolve::DEFAULT_TOL)]
    tol: f64,
    #[arg(long)]
    maxiter: Option<usize>,
    /// Quadrature parameter for loads and dof evaluation.
    #[arg(long, default_value_t = DEFAULT_LOAD_DEGREE)]
    quad: usize,
    /// Weight of the edge-trace term in the `b_h` stabilization.
    #[arg(long, value_enum, default_value = "h2")]
    edge_weight: EdgeWeightArg,
    /// CSV, or JSON when the extension is `.json`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum EdgeWeightArg {
    /// `h_f`
    H,
    /// `h_f²`
    H2,
}

#[derive(Clone, Copy, ValueEnum)]
enum SolverArg {
    Cg,
    Direct,
}

impl SolveArgs {
    fn config(&self) -> RunConfig {
        RunConfig {
            solver: SolverConfig {
                kind: match self.solver {
                    SolverArg::Cg => SolverKind::Cg,
                    SolverArg::Direct => SolverKind::Direct,
                },
                tol: self.tol,
                maxiter: self.maxiter,
            },
            quad: self.quad,
            element: ElementOptions {
                edge_trace: match self.edge_weight {
                    EdgeWeightArg::H => EdgeTraceWeight::Diameter,
                    EdgeWeightArg::H2 => EdgeTraceWeight::DiameterSquared,
                },
            },
        }
    }
}

fn emit(report: &StudyReport, out: Option<&PathBuf>) -> Result<()> {
    print!("{}", report.to_table());
    if let Some(p) = out {
        report.write(p)?;
    }
    Ok(())
}

fn execute(cmd: Command) -> Result<bool> {
    let case = ManufacturedCase::default();
    match cmd {
        Command::Run {
            mesh,
            solve,
            dump_matrix,
            vtk,
        } => {
            let m = load_mesh(&mesh)?;
            let cfg = solve.config();
            let row = run_one(&mesh, &m, &case, &cfg)?;
            emit(&StudyReport { rows: vec![row] }, solve.out.as_ref())?;
            if dump_matrix.is_some() || vtk.is_some() {
                let sol = solve_case(&m, &case, &cfg)?;
                if let Some(p) = dump_matrix {
                    write_coo(&sol.system.schur()?, &p)?;
                }
                if let Some(p) = vtk {
                    let full = sol.system.numbering.v.extend(&sol.psi_h);
                    write_vtu(&m, "curl_psi_h", &cell_curl_means(&m, &full)?, &p)?;
                }
            }
            Ok(true)
        }
        Command::Study { meshes, solve } => {
            if meshes.len() < 2 {
                return Err(VemError::Validation("a study needs at least two meshes".into()));
            }
            let loaded: Vec<(String, Mesh)> = meshes
                .iter()
                .map(|id| Ok((id.clone(), load_mesh(id)?)))
                .collect::<Result<_>>()?;
            match run_study(&loaded, &case, &solve.config()) {
                Ok(rep) => emit(&rep, solve.out.as_ref()).map(|_| true),
                Err((partial, e)) => {
                    emit(&partial, solve.out.as_ref())?;
                    Err(e)
                }
            }
        }
        Command::Verify { mesh, quad, out } => {
            let m = load_mesh(&mesh)?;
            let cfg = RunConfig {
                quad,
                ..Default::default()
            };
            let sol = solve_case(&m, &case, &cfg)?;
            let psi: &dyn Fn(&gradcurl::mesh::Point) -> _ = &manufactured::psi;
            let curl: &dyn Fn(&gradcurl::mesh::Point) -> _ = &manufactured::curl_psi;
            let rep = verify_structure(&m, Some((psi, curl)), Some(&sol.psi_h), quad);
            print!("{}", rep.to_text());
            if let Some(p) = out {
                std::fs::write(p, serde_json::to_string_pretty(&rep)?)?;
            }
            Ok(rep.passed())
        }
        Command::Meshinfo { mesh, mu } => {
            let m = load_mesh(&mesh)?;
            println!(
                "vertices {}  edges {}  faces {}  cells {}  h {:.6}",
                m.num_vertices(),
                m.num_edges(),
                m.num_faces(),
                m.num_cells(),
                m.h()
            );
            let reg = check_regularity(&m, mu);
            println!(
                "regularity mu={mu}: {} ({} failing cells, {} short edges)",
                if reg.passed { "ok" } else { "violated" },
                reg.failing_cells.len(),
                reg.short_edges.len()
            );
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match execute(cli.cmd) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(VemError::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
