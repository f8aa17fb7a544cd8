use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use log::info;

use lrl::linalg;
use lrl::matrix::DenseMatrix;
use lrl::rng::SeededRng;
use lrl::sensing::{self, ProblemInstance};
use lrl::solvers::{
    self, SolveReport, SolveStatus, SolverConfig, Stepsize,
};

use crate::cli::{GlobalOpts, SolveArgs, SolverKind, StartKind, EXIT_NUMERICAL, EXIT_OK};
use crate::reference::ensure_reference;
use crate::svgplot::{self, Series};
use crate::table::{self, ResultRow, TableFormat};

pub fn run(args: &SolveArgs, global: &GlobalOpts) -> anyhow::Result<i32> {
    let inst = sensing::load_instance(&args.problem)
        .with_context(|| format!("cannot load problem {}", args.problem.display()))?;

    let stepsize = parse_stepsize(&args.stepsize)?;
    if matches!(args.solver, SolverKind::Ppgd | SolverKind::Bm) && args.rank.is_none() {
        bail!("--rank is required for the {} solver", args.solver.name());
    }
    if args.seeds == 0 {
        bail!("--seeds must be >= 1");
    }

    let reference = match args.reference.as_deref() {
        None => None,
        Some("auto") => Some(ensure_reference(&args.problem, &inst)?),
        Some(path) => {
            let report = solvers::load_report(Path::new(path))
                .with_context(|| format!("cannot load reference report {path}"))?;
            Some(report.final_matrix)
        }
    };

    let base_seed = global.seed.unwrap_or(0);
    let mut runs: Vec<(u64, SolveReport)> = Vec::new();
    for k in 0..args.seeds {
        let seed = base_seed.wrapping_add(k);
        let cfg = SolverConfig {
            max_iters: args.max_iters,
            stepsize,
            fixpoint_tol: global.tol_fixpoint,
            grad_tol: global.tol_grad,
            rank: match args.solver {
                SolverKind::Ista => None,
                _ => args.rank,
            },
            seed,
        };
        let report = run_one(&inst, args, &cfg, seed, reference.as_ref())?;
        info!(
            "seed {seed}: status {:?}, {} iterations, objective {:?}",
            report.status,
            report.iters(),
            report.final_objective()
        );
        runs.push((seed, report));
    }

    let out = global.out.clone().unwrap_or_else(|| {
        PathBuf::from(if args.seeds == 1 {
            "solve_report.json"
        } else {
            "solve_rows.csv"
        })
    });

    let any_failure = runs
        .iter()
        .any(|(_, r)| r.status == SolveStatus::NumericalFailure);

    if args.seeds == 1 {
        let (_, report) = &runs[0];
        solvers::save_report(&out, report)?;
        let trace_path = sibling(&out, ".trace.csv");
        std::fs::write(&trace_path, table::trace_to_csv(&report.trace))?;
        if args.plot {
            plot_convergence(&sibling(&out, ".convergence.svg"), report)?;
        }
        println!("{}", out.display());
    } else {
        let mut rows: Vec<ResultRow> = Vec::new();
        for (seed, report) in &runs {
            solvers::save_report(sibling(&out, &format!(".seed{seed}.json")), report)?;
            rows.push(result_row(&inst, args, global, *seed, report)?);
        }
        let format = match global.format {
            crate::cli::Format::Csv => TableFormat::Csv,
            crate::cli::Format::Json => TableFormat::Json,
        };
        table::write_rows(&out, &mut rows, format)?;
        println!("{}", out.display());
    }

    Ok(if any_failure { EXIT_NUMERICAL } else { EXIT_OK })
}

fn run_one(
    inst: &ProblemInstance,
    args: &SolveArgs,
    cfg: &SolverConfig,
    seed: u64,
    reference: Option<&DenseMatrix>,
) -> anyhow::Result<SolveReport> {
    let report = match args.solver {
        SolverKind::Ista => {
            let start = start_matrix(inst, args.start, None, seed);
            solvers::solve_ista(inst, cfg, start.as_ref(), reference)?
        }
        SolverKind::Ppgd => {
            let rank = cfg.rank.expect("checked in run");
            let start = start_matrix(inst, args.start, Some(rank), seed)
                .unwrap_or_else(|| DenseMatrix::zeros(inst.d1(), inst.d2()));
            solvers::solve_ppgd(inst, cfg, &start, reference)?
        }
        SolverKind::Bm => solvers::solve_burer_monteiro(inst, cfg, reference)?,
    };
    Ok(report)
}

/// Random starts are scaled to keep the initial iterate O(1); for the
/// rank-projected solver the start must respect the rank cap, so it is a
/// product of thin Gaussian factors.
fn start_matrix(
    inst: &ProblemInstance,
    kind: StartKind,
    rank: Option<usize>,
    seed: u64,
) -> Option<DenseMatrix> {
    match kind {
        StartKind::Zero => None,
        StartKind::Random => {
            let mut rng = SeededRng::with_stream(seed, 0x73746172); // "star"
            let (d1, d2) = (inst.d1(), inst.d2());
            Some(match rank {
                None => {
                    let scale = 1.0 / ((d1 * d2) as f64).sqrt();
                    DenseMatrix::gaussian(d1, d2, &mut rng).scale(scale)
                }
                Some(r) => {
                    let scale = 1.0 / ((d1.max(d2) * r) as f64).sqrt();
                    let left = DenseMatrix::gaussian(d1, r, &mut rng);
                    let right = DenseMatrix::gaussian(d2, r, &mut rng);
                    left.matmul_nt(&right).scale(scale)
                }
            })
        }
    }
}

fn result_row(
    inst: &ProblemInstance,
    args: &SolveArgs,
    global: &GlobalOpts,
    seed: u64,
    report: &SolveReport,
) -> anyhow::Result<ResultRow> {
    let last = report.trace.last();
    Ok(ResultRow {
        d1: inst.d1(),
        d2: inst.d2(),
        n: inst.n(),
        lambda: inst.lambda,
        solver: args.solver.name().to_string(),
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
        rank: args.rank,
        dist_to_reference: last.and_then(|r| r.dist_to_ref),
        ..ResultRow::default()
    })
}

pub(crate) fn status_name(status: SolveStatus) -> &'static str {
    match status {
        SolveStatus::Converged => "converged",
        SolveStatus::MaxIters => "max_iters",
        SolveStatus::NumericalFailure => "numerical_failure",
    }
}

pub(crate) fn parse_stepsize(text: &str) -> anyhow::Result<Stepsize> {
    if text == "auto" {
        return Ok(Stepsize::Auto);
    }
    let value: f64 = text
        .parse()
        .with_context(|| format!("stepsize must be 'auto' or a number, got '{text}'"))?;
    if !(value > 0.0 && value.is_finite()) {
        bail!("stepsize must be positive");
    }
    Ok(Stepsize::Fixed(value))
}

fn sibling(out: &Path, suffix: &str) -> PathBuf {
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".into());
    out.with_file_name(format!("{stem}{suffix}"))
}

fn plot_convergence(path: &Path, report: &SolveReport) -> anyhow::Result<()> {
    let mut series = vec![Series {
        name: "objective".into(),
        points: report
            .trace
            .iter()
            .map(|r| (r.iter as f64, r.objective))
            .collect(),
    }];
    let resid: Vec<(f64, f64)> = report
        .trace
        .iter()
        .filter_map(|r| r.fixpoint_residual.map(|v| (r.iter as f64, v)))
        .collect();
    if !resid.is_empty() {
        series.push(Series {
            name: "fixpoint residual".into(),
            points: resid,
        });
    }
    let dist: Vec<(f64, f64)> = report
        .trace
        .iter()
        .filter_map(|r| r.dist_to_ref.map(|v| (r.iter as f64, v)))
        .collect();
    if !dist.is_empty() {
        series.push(Series {
            name: "distance to reference".into(),
            points: dist,
        });
    }
    svgplot::line_plot(path, "convergence", "iteration", "value (log)", &series, true)
}
