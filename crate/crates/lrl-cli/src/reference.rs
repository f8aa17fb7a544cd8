//! Reference-solution cache.
//!
//! Distance columns are always measured against the ISTA solution at
//! fixed-point tolerance 1e-12, computed once per problem file and cached
//! next to it as `<name>.reference.json` (an ordinary solve report).

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use log::info;

use lrl::matrix::DenseMatrix;
use lrl::sensing::ProblemInstance;
use lrl::solvers::{self, SolveStatus, SolverConfig};

pub const REFERENCE_FIXPOINT_TOL: f64 = 1e-12;
pub const REFERENCE_MAX_ITERS: usize = 50_000;

pub fn reference_path(problem_path: &Path) -> PathBuf {
    let mut name = problem_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "problem".into());
    name.push_str(".reference.json");
    problem_path.with_file_name(name)
}

/// Load the cached reference solution, or compute and cache it.
pub fn ensure_reference(
    problem_path: &Path,
    inst: &ProblemInstance,
) -> anyhow::Result<DenseMatrix> {
    let path = reference_path(problem_path);
    if path.exists() {
        let report = solvers::load_report(&path)
            .with_context(|| format!("bad reference cache {}", path.display()))?;
        if report.final_matrix.shape() != (inst.d1(), inst.d2()) {
            bail!(
                "reference cache {} has shape {:?}, expected {:?}",
                path.display(),
                report.final_matrix.shape(),
                (inst.d1(), inst.d2())
            );
        }
        info!("loaded reference solution from {}", path.display());
        return Ok(report.final_matrix);
    }

    info!("computing reference solution (ista, fixpoint tol 1e-12)");
    let cfg = SolverConfig {
        fixpoint_tol: REFERENCE_FIXPOINT_TOL,
        max_iters: REFERENCE_MAX_ITERS,
        ..SolverConfig::default()
    };
    let report = solvers::solve_ista(inst, &cfg, None, None)?;
    if report.status != SolveStatus::Converged {
        bail!("reference solve did not converge (status {:?})", report.status);
    }
    solvers::save_report(&path, &report)?;
    info!("cached reference solution at {}", path.display());
    Ok(report.final_matrix)
}
