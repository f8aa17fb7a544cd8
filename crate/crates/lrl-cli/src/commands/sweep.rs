use std::path::PathBuf;

use anyhow::Context;
use log::info;
use rayon::prelude::*;

use lrl::certificate::{self, VerifyOptions};
use lrl::sensing::{self, InstanceSpec};
use lrl::solvers::{self, SolveStatus, SolverConfig};

use crate::cli::{thread_pool, GlobalOpts, SweepArgs, EXIT_NUMERICAL, EXIT_OK};
use crate::commands::solve::status_name;
use crate::config::{self, SweepCell, SweepConfig};
use crate::svgplot::{self, Series};
use crate::table::{self, ResultRow, TableFormat};

pub fn run(args: &SweepArgs, global: &GlobalOpts) -> anyhow::Result<i32> {
    let cfg = config::load_sweep_config(&args.config)?;
    let cells = cfg.cells();
    info!("sweep over {} cells", cells.len());

    let pool = thread_pool(global.jobs)?;
    let results: anyhow::Result<Vec<ResultRow>> = pool.install(|| {
        cells
            .par_iter()
            .map(|cell| run_cell(&cfg, cell, global))
            .collect()
    });
    let mut rows = results?;

    let any_failure = rows.iter().any(|r| r.status == "numerical_failure");
    let out = global
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("sweep.csv"));
    let format = match global.format {
        crate::cli::Format::Csv => TableFormat::Csv,
        crate::cli::Format::Json => TableFormat::Json,
    };
    table::write_rows(&out, &mut rows, format)?;

    if args.plot {
        let series = vec![Series {
            name: "rank".into(),
            points: rows
                .iter()
                .filter_map(|r| r.rho.map(|rho| (rho, r.rank_m_hat as f64)))
                .collect(),
        }];
        svgplot::scatter_plot(
            &out.with_extension("svg"),
            "solution rank vs noise ratio",
            "noise ratio",
            "rank",
            &series,
        )?;
    }

    println!("{}", out.display());
    Ok(if any_failure { EXIT_NUMERICAL } else { EXIT_OK })
}

fn run_cell(cfg: &SweepConfig, cell: &SweepCell, global: &GlobalOpts) -> anyhow::Result<ResultRow> {
    let spec = InstanceSpec {
        d1: cfg.d1,
        d2: cfg.d2,
        r_star: cfg.r_star,
        spectrum: cfg.spectrum.clone(),
        n: cell.n,
        lambda: cell.lambda,
        noise_ratio: cell.rho,
        seed: cell.instance_seed,
        operator: lrl::sensing::GeneratedOperator::Gaussian,
    };
    let inst = sensing::generate_instance(&spec)
        .with_context(|| format!("generation failed for cell seed {}", cell.instance_seed))?;

    let solver_cfg = SolverConfig {
        max_iters: cfg.max_iters,
        fixpoint_tol: global.tol_fixpoint,
        grad_tol: global.tol_grad,
        seed: cell.instance_seed,
        ..SolverConfig::default()
    };
    let report = solvers::solve_ista(&inst, &solver_cfg, None, None)?;

    let cert = certificate::verify_rank_bound(
        &inst,
        &report.final_matrix,
        &VerifyOptions {
            rip_samples: cfg.rip_samples,
            cert_tol: global.tol_cert,
            rank_tol: global.rank_tol,
            seed: cell.instance_seed,
            include_matrices: false,
        },
    )?;
    if report.status != SolveStatus::Converged {
        info!(
            "cell seed {} ended with status {:?}",
            cell.instance_seed, report.status
        );
    }

    Ok(ResultRow {
        d1: cfg.d1,
        d2: cfg.d2,
        n: cell.n,
        lambda: cell.lambda,
        solver: "ista".into(),
        seed: cell.rep,
        iters: report.iters(),
        status: status_name(report.status).to_string(),
        final_objective: report.final_objective().unwrap_or(f64::NAN),
        rank_m_hat: cert.rank_m_hat,
        tol_fixpoint: global.tol_fixpoint,
        tol_grad: global.tol_grad,
        tol_cert: global.tol_cert,
        rank_tol: global.rank_tol,
        r_star: Some(cfg.r_star),
        rho: Some(cell.rho),
        n_factor: Some(cell.n_factor),
        instance_seed: Some(cell.instance_seed),
        delta_lower: cert.delta_lower,
        condition_value: cert.condition_value,
        rank_cap: cert.rank_cap,
        subgrad_is_member: Some(cert.is_member),
        ..ResultRow::default()
    })
}
