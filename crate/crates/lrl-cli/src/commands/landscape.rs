use std::path::PathBuf;

use anyhow::{bail, Context};
use log::info;
use rayon::prelude::*;

use lrl::linalg;
use lrl::sensing;
use lrl::solvers::{self, CriticalityTolerances, SolverConfig};

use crate::cli::{thread_pool, GlobalOpts, LandscapeArgs, EXIT_NUMERICAL, EXIT_OK};
use crate::commands::solve::status_name;
use crate::reference::ensure_reference;
use crate::svgplot::{self, Series};
use crate::table::{self, ResultRow, TableFormat};

/// Second-order tolerance on the smallest Hessian eigenvalue (relative to
/// 1 + objective).
const HESS_TOL: f64 = 1e-6;

pub fn run(args: &LandscapeArgs, global: &GlobalOpts) -> anyhow::Result<i32> {
    let inst = sensing::load_instance(&args.problem)
        .with_context(|| format!("cannot load problem {}", args.problem.display()))?;
    if args.ranks.is_empty() {
        bail!("--ranks must name at least one rank");
    }
    if args.seeds == 0 {
        bail!("--seeds must be >= 1");
    }
    for &r in &args.ranks {
        if r == 0 || r > inst.d1().min(inst.d2()) {
            bail!("rank {r} out of range for this problem");
        }
    }

    let reference = ensure_reference(&args.problem, &inst)?;
    let base_seed = global.seed.unwrap_or(0);

    let cells: Vec<(usize, u64)> = args
        .ranks
        .iter()
        .flat_map(|&r| (0..args.seeds).map(move |s| (r, base_seed.wrapping_add(s))))
        .collect();

    let pool = thread_pool(global.jobs)?;
    let results: anyhow::Result<Vec<ResultRow>> = pool.install(|| {
        cells
            .par_iter()
            .map(|&(rank, seed)| -> anyhow::Result<ResultRow> {
                let cfg = SolverConfig {
                    max_iters: args.max_iters,
                    fixpoint_tol: global.tol_fixpoint,
                    grad_tol: global.tol_grad,
                    rank: Some(rank),
                    seed,
                    ..SolverConfig::default()
                };
                let report = solvers::solve_burer_monteiro(&inst, &cfg, Some(&reference))?;
                let (x, y) = report.factored.as_ref().expect("factored solver");
                let cert = solvers::certify_criticality(
                    &inst,
                    x,
                    y,
                    &CriticalityTolerances {
                        grad_tol: global.tol_grad,
                        hess_tol: HESS_TOL,
                    },
                )?;
                let dist = report.final_matrix.sub(&reference).frobenius_norm();
                info!(
                    "rank {rank} seed {seed}: {:?} after {} iters, dist {dist:.3e}, second-order {}",
                    report.status,
                    report.iters(),
                    cert.is_second_order
                );
                Ok(ResultRow {
                    d1: inst.d1(),
                    d2: inst.d2(),
                    n: inst.n(),
                    lambda: inst.lambda,
                    solver: "bm".into(),
                    seed,
                    iters: report.iters(),
                    status: status_name(report.status).to_string(),
                    final_objective: report.final_objective().unwrap_or(f64::NAN),
                    rank_m_hat: linalg::numerical_rank(&report.final_matrix, global.rank_tol),
                    tol_fixpoint: global.tol_fixpoint,
                    tol_grad: global.tol_grad,
                    tol_cert: global.tol_cert,
                    rank_tol: global.rank_tol,
                    r_star: inst.ground_truth.as_ref().map(|gt| gt.r_star),
                    rho: inst.noise_to_lambda()?,
                    rank: Some(rank),
                    dist_to_reference: Some(dist),
                    is_second_order: Some(cert.is_second_order),
                    min_hess_eig: Some(cert.min_hess_eig),
                    ..ResultRow::default()
                })
            })
            .collect()
    });
    let mut rows = results?;

    let any_failure = rows.iter().any(|r| r.status == "numerical_failure");
    let out = global
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("landscape.csv"));
    let format = match global.format {
        crate::cli::Format::Csv => TableFormat::Csv,
        crate::cli::Format::Json => TableFormat::Json,
    };
    table::write_rows(&out, &mut rows, format)?;

    if args.plot {
        let series: Vec<Series> = args
            .ranks
            .iter()
            .map(|&r| Series {
                name: format!("rank {r}"),
                points: rows
                    .iter()
                    .filter(|row| row.rank == Some(r))
                    .map(|row| (row.seed as f64, row.dist_to_reference.unwrap_or(f64::NAN)))
                    .collect(),
            })
            .collect();
        svgplot::scatter_plot(
            &out.with_extension("svg"),
            "distance to reference by seed",
            "seed",
            "Frobenius distance",
            &series,
        )?;
    }

    println!("{}", out.display());
    Ok(if any_failure { EXIT_NUMERICAL } else { EXIT_OK })
}
