//! Generic constrained proximal gradient descent.
//!
//! Minimizes `f(x) + h(x)` over a closed (not necessarily convex) set `C`,
//! given handles for the smooth term, its gradient, the convex term, and
//! the constrained proximal map
//! `P_eta(x) = argmin_{y in C} 1/(2 eta) ||x - y||^2 + h(y)`,
//! by iterating `x_{t+1} = P_eta(x_t - eta grad f(x_t))`.
//!
//! The rank-projected matrix solver is this driver instantiated with
//! `C = {rank <= r}`, `h = lambda ||.||_*`, and soft/hard singular value
//! thresholding as the proximal map; the driver itself is exposed for
//! arbitrary instantiations.

use crate::error::Result;
use crate::solvers::{relative_step, SolveStatus};

/// Handles defining one constrained composite problem over flat `f64`
/// state. Handle failures propagate out of the driver.
pub trait ProxProblem {
    /// Smooth term `f(x)`.
    fn smooth(&self, x: &[f64]) -> Result<f64>;
    /// Gradient of the smooth term.
    fn smooth_grad(&self, x: &[f64]) -> Result<Vec<f64>>;
    /// Convex term `h(x)` (evaluated on points of `C`).
    fn nonsmooth(&self, x: &[f64]) -> Result<f64>;
    /// Constrained proximal map `P_eta(x)`.
    fn prox(&self, x: &[f64], eta: f64) -> Result<Vec<f64>>;
}

#[derive(Debug, Clone)]
pub struct GenericProxConfig {
    pub stepsize: f64,
    pub max_iters: usize,
    /// Relative fixed-point tolerance on `||x_{t+1} - x_t|| / max(1, ||x_t||)`.
    pub fixpoint_tol: f64,
}

#[derive(Debug, Clone)]
pub struct GenericTraceRow {
    pub iter: usize,
    pub objective: f64,
    pub fixpoint_residual: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct GenericProxReport {
    pub final_x: Vec<f64>,
    pub trace: Vec<GenericTraceRow>,
    pub status: SolveStatus,
}

/// Run the iteration from `x0` (which should lie in `C`).
///
/// The observer sees every trace row together with the corresponding
/// iterate, so callers can layer richer diagnostics without re-running.
/// Iteration stops on the fixed-point tolerance, the iteration cap, or a
/// relative objective increase above 1e-8 (reported as numerical failure).
pub fn solve_generic_prox<P: ProxProblem>(
    problem: &P,
    x0: &[f64],
    cfg: &GenericProxConfig,
    mut observer: impl FnMut(&GenericTraceRow, &[f64]),
) -> Result<GenericProxReport> {
    let eta = cfg.stepsize;
    let mut x = x0.to_vec();
    let mut objective = problem.smooth(&x)? + problem.nonsmooth(&x)?;
    let mut trace = Vec::with_capacity(cfg.max_iters.min(4096) + 1);
    let row = GenericTraceRow {
        iter: 0,
        objective,
        fixpoint_residual: None,
    };
    observer(&row, &x);
    trace.push(row);

    let mut status = SolveStatus::MaxIters;
    for t in 1..=cfg.max_iters {
        let grad = problem.smooth_grad(&x)?;
        let mut shifted = x.clone();
        for (s, g) in shifted.iter_mut().zip(&grad) {
            *s -= eta * g;
        }
        let next = problem.prox(&shifted, eta)?;
        let fixres = relative_step(&next, &x);
        let next_objective = problem.smooth(&next)? + problem.nonsmooth(&next)?;

        let row = GenericTraceRow {
            iter: t,
            objective: next_objective,
            fixpoint_residual: Some(fixres),
        };
        observer(&row, &next);
        trace.push(row);

        if next_objective > objective + 1e-8 * objective.abs().max(1.0) {
            status = SolveStatus::NumericalFailure;
            x = next;
            break;
        }
        x = next;
        objective = next_objective;
        if fixres <= cfg.fixpoint_tol {
            status = SolveStatus::Converged;
            break;
        }
    }

    Ok(GenericProxReport {
        final_x: x,
        trace,
        status,
    })
}
