//! Optimization routines for the penalized sensing problem
//! `min 1/2 ||y - A(M)||^2 + lambda ||M||_*`:
//!
//! * [`solve_ista`] — the convex baseline, iterative shrinkage-thresholding
//!   with full singular value soft-thresholding;
//! * [`solve_ppgd`] — rank-projected proximal gradient descent, an
//!   instantiation of the generic constrained driver in [`generic`];
//! * [`solve_burer_monteiro`] — gradient descent with Armijo backtracking
//!   on the factored problem over `M = X Y^T`, plus second-order
//!   criticality certification via Lanczos on analytic Hessian-vector
//!   products.

pub mod bm;
pub mod eig;
pub mod generic;
pub mod ista;
pub mod ppgd;

pub use bm::{
    bm_gradient, bm_hessian_vec, bm_objective, certify_criticality, solve_burer_monteiro,
    CriticalityReport, CriticalityTolerances,
};
pub use generic::{solve_generic_prox, GenericProxConfig, GenericProxReport, ProxProblem};
pub use ista::solve_ista;
pub use ppgd::solve_ppgd;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::matrix::DenseMatrix;
use crate::sensing::ProblemInstance;

/// Fixed or automatic stepsize. Serialized as the string `"auto"` or a
/// plain number.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Stepsize {
    Auto,
    Fixed(f64),
}

impl Serialize for Stepsize {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Stepsize::Auto => ser.serialize_str("auto"),
            Stepsize::Fixed(x) => ser.serialize_f64(*x),
        }
    }
}

impl<'de> Deserialize<'de> for Stepsize {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl serde::de::Visitor<'_> for V {
            type Value = Stepsize;
            fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
                write!(f, "\"auto\" or a positive number")
            }
            fn visit_str<E: serde::de::Error>(self, s: &str) -> std::result::Result<Stepsize, E> {
                if s == "auto" {
                    Ok(Stepsize::Auto)
                } else {
                    Err(E::custom(format!("unknown stepsize '{s}'")))
                }
            }
            fn visit_f64<E: serde::de::Error>(self, x: f64) -> std::result::Result<Stepsize, E> {
                Ok(Stepsize::Fixed(x))
            }
            fn visit_u64<E: serde::de::Error>(self, x: u64) -> std::result::Result<Stepsize, E> {
                Ok(Stepsize::Fixed(x as f64))
            }
            fn visit_i64<E: serde::de::Error>(self, x: i64) -> std::result::Result<Stepsize, E> {
                Ok(Stepsize::Fixed(x as f64))
            }
        }
        de.deserialize_any(V)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub max_iters: usize,
    pub stepsize: Stepsize,
    /// Relative fixed-point tolerance `||M_{t+1} - M_t||_F / max(1, ||M_t||_F)`.
    pub fixpoint_tol: f64,
    /// Relative gradient tolerance for the factored solver,
    /// `||grad|| <= grad_tol * (1 + objective)`.
    pub grad_tol: f64,
    /// Rank cap for PPGD and Burer-Monteiro; must be absent for ISTA.
    pub rank: Option<usize>,
    /// Seed for solver-internal randomness (factored initialization, auto
    /// stepsize estimation).
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            max_iters: 2000,
            stepsize: Stepsize::Auto,
            fixpoint_tol: 1e-10,
            grad_tol: 1e-8,
            rank: None,
            seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self, d1: usize, d2: usize) -> Result<()> {
        let tol_ok = |t: f64| t.is_finite() && t > 0.0;
        if !tol_ok(self.fixpoint_tol) || !tol_ok(self.grad_tol) {
            return Err(Error::Validation("tolerances must be positive".into()));
        }
        if let Stepsize::Fixed(s) = self.stepsize {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::Validation("stepsize must be positive".into()));
            }
        }
        if let Some(r) = self.rank {
            if r == 0 || r > d1.min(d2) {
                return Err(Error::Validation(format!(
                    "rank {r} out of range for {d1}x{d2}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Converged,
    MaxIters,
    NumericalFailure,
}

/// One row of the per-iteration trace. Row 0 describes the starting point
/// and has no fixed-point residual yet.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceRow {
    pub iter: usize,
    pub objective: f64,
    pub fixpoint_residual: Option<f64>,
    pub grad_norm: Option<f64>,
    pub rank_estimate: usize,
    pub dist_to_ref: Option<f64>,
}

/// Solver output: final iterate, optional factors, trace, and status.
#[derive(Debug, Clone)]
pub struct SolveReport {
    pub final_matrix: DenseMatrix,
    pub factored: Option<(DenseMatrix, DenseMatrix)>,
    pub trace: Vec<TraceRow>,
    pub status: SolveStatus,
    pub wall_time: f64,
    /// Subgradient-membership residual at the final point, filled by ISTA
    /// on convergence.
    pub subgradient_residual: Option<f64>,
}

impl SolveReport {
    pub fn iters(&self) -> usize {
        self.trace.last().map(|r| r.iter).unwrap_or(0)
    }

    pub fn final_objective(&self) -> Option<f64> {
        self.trace.last().map(|r| r.objective)
    }
}

/// Objective `1/2 ||y - A(M)||^2 + lambda ||M||_*`.
pub fn objective(inst: &ProblemInstance, m: &DenseMatrix) -> Result<f64> {
    let am = inst.operator.apply(m)?;
    let sq: f64 = inst
        .y
        .iter()
        .zip(&am)
        .map(|(yi, ai)| (yi - ai) * (yi - ai))
        .sum();
    Ok(0.5 * sq + inst.lambda * linalg::nuclear_norm(m)?)
}

/// Singular values of the product `X Y^T` without forming a large SVD:
/// QR both factors and decompose the small `R_x R_y^T` core.
pub fn product_singvals(x: &DenseMatrix, y: &DenseMatrix) -> Result<Vec<f64>> {
    if x.cols() != y.cols() {
        return Err(Error::Dimension(format!(
            "factor widths differ: {} vs {}",
            x.cols(),
            y.cols()
        )));
    }
    let r = x.cols();
    if r == 0 {
        return Ok(vec![]);
    }
    let qr_x = nalgebra::linalg::QR::new(nalgebra::DMatrix::from_row_slice(
        x.rows(),
        r,
        x.as_slice(),
    ));
    let qr_y = nalgebra::linalg::QR::new(nalgebra::DMatrix::from_row_slice(
        y.rows(),
        r,
        y.as_slice(),
    ));
    let core = qr_x.r() * qr_y.r().transpose();
    let mut vals: Vec<f64> = core.svd(false, false).singular_values.iter().copied().collect();
    vals.sort_by(|a, b| b.partial_cmp(a).unwrap());
    Ok(vals)
}

pub(crate) fn norm2(v: &[f64]) -> f64 {
    crate::matrix::dot(v, v).sqrt()
}

pub(crate) fn relative_step(next: &[f64], prev: &[f64]) -> f64 {
    let diff_sq: f64 = next
        .iter()
        .zip(prev)
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    diff_sq.sqrt() / norm2(prev).max(1.0)
}

// --- report files -----------------------------------------------------

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ReportFile {
    d1: usize,
    d2: usize,
    status: SolveStatus,
    wall_time: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    subgradient_residual: Option<f64>,
    /// Row-major entries of the final matrix.
    final_matrix: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    factored: Option<FactoredFile>,
    trace: Vec<TraceRow>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FactoredFile {
    rank: usize,
    x: Vec<f64>,
    y: Vec<f64>,
}

pub fn report_to_json(report: &SolveReport) -> String {
    let (d1, d2) = report.final_matrix.shape();
    let file = ReportFile {
        d1,
        d2,
        status: report.status,
        wall_time: report.wall_time,
        subgradient_residual: report.subgradient_residual,
        final_matrix: report.final_matrix.as_slice().to_vec(),
        factored: report.factored.as_ref().map(|(x, y)| FactoredFile {
            rank: x.cols(),
            x: x.as_slice().to_vec(),
            y: y.as_slice().to_vec(),
        }),
        trace: report.trace.clone(),
    };
    serde_json::to_string_pretty(&file).expect("reports serialize")
}

pub fn report_from_json(text: &str) -> Result<SolveReport> {
    let file: ReportFile = serde_json::from_str(text).map_err(|e| Error::parse(&e))?;
    if file.d1 == 0
        || file.d2 == 0
        || file.d1 > crate::sensing::MAX_DIM
        || file.d2 > crate::sensing::MAX_DIM
    {
        return Err(Error::Validation("report dimensions out of range".into()));
    }
    let final_matrix = DenseMatrix::from_vec(file.d1, file.d2, file.final_matrix)?;
    let factored = match file.factored {
        None => None,
        Some(f) => {
            if f.rank == 0 || f.rank > file.d1.min(file.d2) {
                return Err(Error::Validation("factor rank out of range".into()));
            }
            let x = DenseMatrix::from_vec(file.d1, f.rank, f.x)?;
            let y = DenseMatrix::from_vec(file.d2, f.rank, f.y)?;
            let product = x.matmul_nt(&y);
            let tol = 1e-12 * (1.0 + final_matrix.frobenius_norm());
            if product.sub(&final_matrix).frobenius_norm() > tol {
                return Err(Error::Validation(
                    "factored entry does not reproduce the final matrix".into(),
                ));
            }
            Some((x, y))
        }
    };
    for row in &file.trace {
        for v in [
            Some(row.objective),
            row.fixpoint_residual,
            row.grad_norm,
            row.dist_to_ref,
        ]
        .into_iter()
        .flatten()
        {
            if !v.is_finite() {
                return Err(Error::Validation("trace values must be finite".into()));
            }
        }
    }
    Ok(SolveReport {
        final_matrix,
        factored,
        trace: file.trace,
        status: file.status,
        wall_time: file.wall_time,
        subgradient_residual: file.subgradient_residual,
    })
}

pub fn save_report(path: impl AsRef<std::path::Path>, report: &SolveReport) -> Result<()> {
    std::fs::write(path, report_to_json(report))?;
    Ok(())
}

pub fn load_report(path: impl AsRef<std::path::Path>) -> Result<SolveReport> {
    let text = std::fs::read_to_string(path)?;
    report_from_json(&text)
}
