//! Smallest-eigenvalue estimation for implicitly defined symmetric
//! operators (Hessians accessed through matrix-vector products).
//!
//! The workhorse is Lanczos with full reorthogonalization and a stabilized
//! stopping rule on the smallest Ritz value. On early breakdown the routine
//! falls back to power iteration on the shifted operator `c I - H`, with
//! `c` an operator-norm estimate; the method actually used is reported.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::matrix::{axpy, dot};
use crate::rng::SeededRng;
use crate::solvers::norm2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EigMethod {
    Lanczos,
    ShiftedPower,
}

#[derive(Debug, Clone, Copy)]
pub struct SmallestEig {
    pub value: f64,
    pub iters: usize,
    pub method: EigMethod,
}

const BREAKDOWN_REL: f64 = 1e-13;
const STABLE_REL: f64 = 1e-11;
const CHECK_EVERY: usize = 5;
const MIN_ITERS_BEFORE_CHECK: usize = 30;

/// Estimate the smallest eigenvalue of a symmetric operator of the given
/// dimension. `matvec` must implement `v -> H v`; the start vector is
/// deterministic in `seed`.
pub fn smallest_eigenvalue(
    dim: usize,
    matvec: impl Fn(&[f64]) -> Result<Vec<f64>>,
    seed: u64,
    max_iters: usize,
) -> Result<SmallestEig> {
    if dim == 0 {
        return Ok(SmallestEig {
            value: 0.0,
            iters: 0,
            method: EigMethod::Lanczos,
        });
    }
    let mut rng = SeededRng::with_stream(seed, 0x6c616e63); // "lanc"
    let start = rng.normal_vec(dim);
    let nrm = norm2(&start);
    let q0: Vec<f64> = start.iter().map(|x| x / nrm).collect();

    let mut basis: Vec<Vec<f64>> = vec![q0];
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let cap = max_iters.min(dim).max(1);

    let mut last_check: Option<f64> = None;
    let mut stable = 0usize;

    for j in 0..cap {
        let mut w = matvec(&basis[j])?;
        let alpha = dot(&w, &basis[j]);
        alphas.push(alpha);
        axpy(&mut w, -alpha, &basis[j]);
        if j > 0 {
            axpy(&mut w, -betas[j - 1], &basis[j - 1]);
        }
        // full reorthogonalization, two passes
        for _ in 0..2 {
            for q in &basis {
                let c = dot(&w, q);
                if c != 0.0 {
                    axpy(&mut w, -c, q);
                }
            }
        }
        let beta = norm2(&w);
        let t_scale = alphas.iter().fold(0.0f64, |m, a| m.max(a.abs()))
            + betas.iter().fold(0.0f64, |m, b| m.max(b.abs()));
        if beta <= BREAKDOWN_REL * t_scale.max(1e-300) {
            if alphas.len() >= 3 || basis.len() == dim {
                // invariant subspace found; the tridiagonal block is exact
                return Ok(SmallestEig {
                    value: tridiag_min_eig(&alphas, &betas),
                    iters: alphas.len(),
                    method: EigMethod::Lanczos,
                });
            }
            return shifted_power_fallback(dim, &matvec, seed, alphas.len());
        }
        if j + 1 < cap {
            betas.push(beta);
            basis.push(w.iter().map(|x| x / beta).collect());
        }

        let m = alphas.len();
        if m >= MIN_ITERS_BEFORE_CHECK && m.is_multiple_of(CHECK_EVERY) {
            let cur = tridiag_min_eig(&alphas, &betas[..m - 1]);
            if let Some(prev) = last_check {
                if (cur - prev).abs() <= STABLE_REL * (1.0 + cur.abs()) {
                    stable += 1;
                    if stable >= 2 {
                        return Ok(SmallestEig {
                            value: cur,
                            iters: m,
                            method: EigMethod::Lanczos,
                        });
                    }
                } else {
                    stable = 0;
                }
            }
            last_check = Some(cur);
        }
    }

    Ok(SmallestEig {
        value: tridiag_min_eig(&alphas, &betas[..alphas.len() - 1]),
        iters: alphas.len(),
        method: EigMethod::Lanczos,
    })
}

fn tridiag_min_eig(alphas: &[f64], betas: &[f64]) -> f64 {
    let m = alphas.len();
    let mut t = nalgebra::DMatrix::<f64>::zeros(m, m);
    for i in 0..m {
        t[(i, i)] = alphas[i];
        if i + 1 < m {
            t[(i, i + 1)] = betas[i];
            t[(i + 1, i)] = betas[i];
        }
    }
    nalgebra::linalg::SymmetricEigen::new(t)
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

fn shifted_power_fallback(
    dim: usize,
    matvec: &impl Fn(&[f64]) -> Result<Vec<f64>>,
    seed: u64,
    iters_so_far: usize,
) -> Result<SmallestEig> {
    let mut rng = SeededRng::with_stream(seed, 0x73686674); // "shft"
    let mut iters = iters_so_far;

    // operator-norm estimate: power iteration on H itself
    let mut v = rng.normal_vec(dim);
    let mut c = 0.0f64;
    for _ in 0..100 {
        let n = norm2(&v);
        if n == 0.0 {
            return Ok(SmallestEig {
                value: 0.0,
                iters,
                method: EigMethod::ShiftedPower,
            });
        }
        for x in &mut v {
            *x /= n;
        }
        let hv = matvec(&v)?;
        c = norm2(&hv);
        v = hv;
        iters += 1;
    }
    let shift = 2.0 * c.max(1e-300);

    // power iteration on (shift I - H): dominant eigenvalue shift - lambda_min
    let mut u = rng.normal_vec(dim);
    let mut top = 0.0f64;
    for _ in 0..300 {
        let n = norm2(&u);
        if n == 0.0 {
            break;
        }
        for x in &mut u {
            *x /= n;
        }
        let hu = matvec(&u)?;
        let mut next: Vec<f64> = u.iter().map(|x| shift * x).collect();
        axpy(&mut next, -1.0, &hu);
        let new_top = dot(&next, &u);
        u = next;
        iters += 1;
        if (new_top - top).abs() <= 1e-12 * (1.0 + new_top.abs()) {
            top = new_top;
            break;
        }
        top = new_top;
    }
    Ok(SmallestEig {
        value: shift - top,
        iters,
        method: EigMethod::ShiftedPower,
    })
}
