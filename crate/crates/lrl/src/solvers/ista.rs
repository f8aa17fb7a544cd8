//! Iterative shrinkage-thresholding for the unconstrained convex problem.
//!
//! Iterates `M_{t+1} = shrink_{eta lambda}(M_t + eta A*(y - A(M_t)))` with
//! full singular value soft-thresholding (no rank cap). The automatic
//! stepsize is `1/L` with `L = ||A||_op^2` from power iteration, a standard
//! convergence-safe choice for the quadratic term.

use std::time::Instant;

use crate::certificate;
use crate::error::{Error, Result};
use crate::linalg::{self, DEFAULT_RANK_TOL};
use crate::matrix::DenseMatrix;
use crate::sensing::ProblemInstance;
use crate::solvers::{SolveReport, SolveStatus, SolverConfig, Stepsize, TraceRow};

/// Solve the nuclear-norm-penalized least-squares problem by ISTA.
///
/// `start` defaults to the zero matrix; `reference` fills the trace's
/// distance column. On convergence the subgradient-membership residual at
/// the final point is attached to the report. A relative objective increase
/// above 1e-8 is reported as numerical failure (stepsize too large).
pub fn solve_ista(
    inst: &ProblemInstance,
    cfg: &SolverConfig,
    start: Option<&DenseMatrix>,
    reference: Option<&DenseMatrix>,
) -> Result<SolveReport> {
    let t0 = Instant::now();
    let (d1, d2) = (inst.d1(), inst.d2());
    cfg.validate(d1, d2)?;
    if cfg.rank.is_some() {
        return Err(Error::Validation(
            "ista is unconstrained; use the rank-projected solver for a rank cap".into(),
        ));
    }
    let eta = match cfg.stepsize {
        Stepsize::Fixed(s) => s,
        Stepsize::Auto => {
            let l = inst.operator.op_norm_sq(cfg.seed);
            if !l.is_finite() || l <= 0.0 {
                return Err(Error::Numerical("operator norm estimate is degenerate".into()));
            }
            1.0 / l
        }
    };
    let full_rank = d1.min(d2);

    let mut m = match start {
        Some(m0) => {
            if m0.shape() != (d1, d2) {
                return Err(Error::Dimension(format!(
                    "start matrix is {:?}, expected {:?}",
                    m0.shape(),
                    (d1, d2)
                )));
            }
            m0.clone()
        }
        None => DenseMatrix::zeros(d1, d2),
    };

    let mut resid = residual(inst, &m)?;
    let vals0 = linalg::svd_values(&m)?;
    let mut objective = 0.5 * sq_norm(&resid) + inst.lambda * vals0.iter().sum::<f64>();
    let mut trace = Vec::new();
    trace.push(TraceRow {
        iter: 0,
        objective,
        fixpoint_residual: None,
        grad_norm: None,
        rank_estimate: rank_from_values(&vals0),
        dist_to_ref: reference.map(|r| m.sub(r).frobenius_norm()),
    });

    let mut status = SolveStatus::MaxIters;
    for t in 1..=cfg.max_iters {
        let grad_step = {
            let mut half = m.clone();
            half.axpy_in(eta, &inst.operator.adjoint(&resid)?);
            half
        };
        let (next, kept) = linalg::shrink_with_values(&grad_step, full_rank, eta * inst.lambda)?;
        let next_resid = residual(inst, &next)?;
        let next_obj = 0.5 * sq_norm(&next_resid) + inst.lambda * kept.iter().sum::<f64>();
        let fixres = next.sub(&m).frobenius_norm() / m.frobenius_norm().max(1.0);

        trace.push(TraceRow {
            iter: t,
            objective: next_obj,
            fixpoint_residual: Some(fixres),
            grad_norm: None,
            rank_estimate: kept.iter().filter(|&&s| s > 0.0).count(),
            dist_to_ref: reference.map(|r| next.sub(r).frobenius_norm()),
        });

        if next_obj > objective + 1e-8 * objective.abs().max(1.0) {
            status = SolveStatus::NumericalFailure;
            m = next;
            break;
        }
        m = next;
        resid = next_resid;
        objective = next_obj;
        if fixres <= cfg.fixpoint_tol {
            status = SolveStatus::Converged;
            break;
        }
    }

    let subgradient_residual = if status == SolveStatus::Converged {
        let e_hat = certificate::compute_ehat(inst, &m)?;
        let cert_tol = 1e-6 * (1.0 + linalg::operator_norm(&e_hat)?);
        let mem = certificate::subgradient_membership(&m, &e_hat, cert_tol, DEFAULT_RANK_TOL)?;
        Some(
            mem.uv_residual
                .max(mem.ortho_residual)
                .max((mem.w_op_norm - 1.0).max(0.0)),
        )
    } else {
        None
    };

    Ok(SolveReport {
        final_matrix: m,
        factored: None,
        trace,
        status,
        wall_time: t0.elapsed().as_secs_f64(),
        subgradient_residual,
    })
}

fn residual(inst: &ProblemInstance, m: &DenseMatrix) -> Result<Vec<f64>> {
    let am = inst.operator.apply(m)?;
    Ok(inst.y.iter().zip(&am).map(|(y, a)| y - a).collect())
}

fn sq_norm(v: &[f64]) -> f64 {
    crate::matrix::dot(v, v)
}

pub(crate) fn rank_from_values(vals: &[f64]) -> usize {
    match vals.first() {
        Some(&s1) if s1 > 0.0 => vals.iter().filter(|&&s| s > DEFAULT_RANK_TOL * s1).count(),
        _ => 0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeededRng;
    use crate::sensing::{GeneratedOperator, generate_instance, InstanceSpec, SensingOperator};

    fn denoising_instance(d: usize, seed: u64, lambda: f64) -> (ProblemInstance, DenseMatrix) {
        let mut rng = SeededRng::new(seed);
        let observed = DenseMatrix::gaussian(d, d, &mut rng);
        let op = SensingOperator::identity(d, d).unwrap();
        let y = observed.as_slice().to_vec();
        let inst = ProblemInstance::new(op, y, lambda).unwrap();
        (inst, observed)
    }

    // With the identity operator the solution has a closed form: singular
    // value soft-thresholding of the observed matrix.
    #[test]
    fn denoising_matches_closed_form() {
        let (inst, observed) = denoising_instance(8, 1, 0.6);
        let (closed_form, _) = linalg::ideal_solution(&observed, 0.6).unwrap();
        let report = solve_ista(&inst, &SolverConfig::default(), None, None).unwrap();
        assert_eq!(report.status, SolveStatus::Converged);
        let err = report.final_matrix.sub(&closed_form).frobenius_norm()
            / closed_form.frobenius_norm().max(1.0);
        assert!(err < 1e-8, "closed-form mismatch {err}");
        assert!(report.subgradient_residual.unwrap() < 1e-6);
    }

    #[test]
    fn full_shrinkage_gives_zero() {
        let inst = generate_instance(&InstanceSpec {
            d1: 6,
            d2: 6,
            r_star: 2,
            spectrum: vec![1.0, 0.8],
            n: 40,
            lambda: 1.0,
            noise_ratio: 0.0,
            seed: 2,
            operator: GeneratedOperator::Gaussian,
        })
        .unwrap();
        let a_y = inst.operator.adjoint(&inst.y).unwrap();
        let lambda = 1.1 * linalg::operator_norm(&a_y).unwrap();
        let mut big = inst.clone();
        big.lambda = lambda;
        let report = solve_ista(&big, &SolverConfig::default(), None, None).unwrap();
        assert_eq!(report.status, SolveStatus::Converged);
        assert!(report.final_matrix.frobenius_norm() < 1e-10);
    }

    #[test]
    fn objective_is_monotone_within_slack() {
        let inst = generate_instance(&InstanceSpec {
            d1: 10,
            d2: 9,
            r_star: 2,
            spectrum: vec![1.0, 0.5],
            n: 120,
            lambda: 0.1,
            noise_ratio: 0.05,
            seed: 3,
            operator: GeneratedOperator::Gaussian,
        })
        .unwrap();
        let report = solve_ista(&inst, &SolverConfig::default(), None, None).unwrap();
        assert_eq!(report.status, SolveStatus::Converged);
        for w in report.trace.windows(2) {
            assert!(
                w[1].objective <= w[0].objective + 1e-12 * w[0].objective.abs().max(1.0),
                "objective rose at iter {}",
                w[1].iter
            );
        }
    }

    #[test]
    fn fixed_point_property_at_convergence() {
        let inst = generate_instance(&InstanceSpec {
            d1: 8,
            d2: 8,
            r_star: 1,
            spectrum: vec![1.0],
            n: 80,
            lambda: 0.15,
            noise_ratio: 0.0,
            seed: 4,
            operator: GeneratedOperator::Gaussian,
        })
        .unwrap();
        let cfg = SolverConfig::default();
        let report = solve_ista(&inst, &cfg, None, None).unwrap();
        let m = &report.final_matrix;
        let eta = 1.0 / inst.operator.op_norm_sq(cfg.seed);
        let mut half = m.clone();
        half.axpy_in(eta, &inst.operator.adjoint(&residual(&inst, m).unwrap()).unwrap());
        let mapped =
            linalg::soft_hard_threshold(&half, inst.d1().min(inst.d2()), eta * inst.lambda)
                .unwrap();
        let drift = mapped.sub(m).frobenius_norm();
        assert!(drift <= 10.0 * cfg.fixpoint_tol * m.frobenius_norm().max(1.0));
    }

    #[test]
    fn rank_cap_is_rejected() {
        let (inst, _) = denoising_instance(4, 5, 0.3);
        let cfg = SolverConfig {
            rank: Some(2),
            ..SolverConfig::default()
        };
        assert!(matches!(
            solve_ista(&inst, &cfg, None, None),
            Err(Error::Validation(_))
        ));
    }
}
