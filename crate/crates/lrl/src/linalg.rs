//! SVD-based matrix operators shared by every solver: soft/hard singular
//! value thresholding, the idealized denoising solution and its subgradient,
//! tangent-space projections, block decompositions, and numerical rank.
//!
//! One dense SVD backend (nalgebra's Golub-Kahan) is used everywhere, at
//! desk scale a thin SVD is computed even when only the top `r` triples are
//! needed; determinism matters more here than asymptotic speed.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;
use crate::rng::SeededRng;

/// Default relative tolerance for rank counting: well above machine noise,
/// well below any shrinkage-scale singular value.
pub const DEFAULT_RANK_TOL: f64 = 1e-6;

const SVD_MAX_SWEEPS: usize = 1024;

/// Thin singular value decomposition `M = left * diag(singvals) * right^T`.
///
/// `left` is `d1 x k` and `right` is `d2 x k` with orthonormal columns,
/// `k = min(d1, d2)`, and `singvals` is nonincreasing and nonnegative.
#[derive(Debug, Clone)]
pub struct Svd {
    pub left: DenseMatrix,
    pub singvals: Vec<f64>,
    pub right: DenseMatrix,
}

impl Svd {
    /// `left * diag(singvals) * right^T`.
    pub fn reconstruct(&self) -> DenseMatrix {
        self.reconstruct_with(|s| s)
    }

    /// Reconstruction with a map applied to each singular value.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> DenseMatrix {
        rebuild(self, |_, s| f(s))
    }
}

fn to_dmatrix(m: &DenseMatrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.rows(), m.cols(), m.as_slice())
}

fn from_dmatrix(m: &DMatrix<f64>) -> DenseMatrix {
    DenseMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

/// Thin SVD with `k = min(d1, d2)` triples, singular values sorted
/// nonincreasing. Fails with [`Error::SvdConvergence`] if the iteration
/// does not converge.
pub fn svd(m: &DenseMatrix) -> Result<Svd> {
    if !m.is_finite() {
        return Err(Error::Validation("svd input must be finite".into()));
    }
    let k = m.rows().min(m.cols());
    if k == 0 {
        return Ok(Svd {
            left: DenseMatrix::zeros(m.rows(), 0),
            singvals: vec![],
            right: DenseMatrix::zeros(m.cols(), 0),
        });
    }
    let svd = nalgebra::linalg::SVD::try_new(to_dmatrix(m), true, true, f64::EPSILON, SVD_MAX_SWEEPS)
        .ok_or(Error::SvdConvergence)?;
    let u = svd.u.expect("u requested");
    let v_t = svd.v_t.expect("v_t requested");
    let mut order: Vec<usize> = (0..k).collect();
    // nalgebra returns sorted values; re-sort stably anyway so the contract
    // does not depend on backend internals. Ties keep backend order.
    order.sort_by(|&a, &b| svd.singular_values[b].partial_cmp(&svd.singular_values[a]).unwrap());
    let singvals: Vec<f64> = order.iter().map(|&l| svd.singular_values[l]).collect();
    let left = DenseMatrix::from_fn(m.rows(), k, |i, j| u[(i, order[j])]);
    let right = DenseMatrix::from_fn(m.cols(), k, |i, j| v_t[(order[j], i)]);
    Ok(Svd {
        left,
        singvals,
        right,
    })
}

/// Singular values only, sorted nonincreasing.
pub fn svd_values(m: &DenseMatrix) -> Result<Vec<f64>> {
    if m.rows().min(m.cols()) == 0 {
        return Ok(vec![]);
    }
    let svd = nalgebra::linalg::SVD::try_new(to_dmatrix(m), false, false, f64::EPSILON, SVD_MAX_SWEEPS)
        .ok_or(Error::SvdConvergence)?;
    let mut vals: Vec<f64> = svd.singular_values.iter().copied().collect();
    vals.sort_by(|a, b| b.partial_cmp(a).unwrap());
    Ok(vals)
}

/// Nuclear norm (sum of singular values).
pub fn nuclear_norm(m: &DenseMatrix) -> Result<f64> {
    Ok(svd_values(m)?.iter().sum())
}

/// Operator norm (largest singular value).
pub fn operator_norm(m: &DenseMatrix) -> Result<f64> {
    Ok(svd_values(m)?.first().copied().unwrap_or(0.0))
}

/// Soft/hard singular value thresholding: soft-threshold all singular
/// values by `alpha`, then keep only the top `r`. The result is the global
/// minimizer of `N -> 1/2 ||N - M||_F^2 + alpha ||N||_*` over rank(N) <= r.
pub fn soft_hard_threshold(m: &DenseMatrix, r: usize, alpha: f64) -> Result<DenseMatrix> {
    if r == 0 {
        return Err(Error::Validation("rank cap r must be >= 1".into()));
    }
    if alpha < 0.0 {
        return Err(Error::Validation("threshold alpha must be >= 0".into()));
    }
    Ok(shrink_with_values(m, r, alpha)?.0)
}

/// Thresholded matrix together with its post-shrinkage singular values
/// (exact zeros beyond the kept triples), so callers can reuse the nuclear
/// norm and rank without another decomposition.
pub(crate) fn shrink_with_values(
    m: &DenseMatrix,
    r: usize,
    alpha: f64,
) -> Result<(DenseMatrix, Vec<f64>)> {
    let dec = svd(m)?;
    let shrunk: Vec<f64> = dec
        .singvals
        .iter()
        .enumerate()
        .map(|(l, &s)| if l < r { (s - alpha).max(0.0) } else { 0.0 })
        .collect();
    let out = rebuild(&dec, |l, _| shrunk[l]);
    Ok((out, shrunk))
}

/// Idealized shrinkage pair for a ground truth `M*` at level `lambda`:
/// the soft-thresholded matrix `M_l = U (S - lambda)_+ V^T` together with
/// the subgradient `E_l = (1/lambda) U min(S, lambda) V^T`, which satisfy
/// `M* = M_l + lambda E_l`, `||E_l||_op <= 1`, and `rank(E_l) = rank(M*)`.
pub fn ideal_solution(m_star: &DenseMatrix, lambda: f64) -> Result<(DenseMatrix, DenseMatrix)> {
    if lambda <= 0.0 {
        return Err(Error::Validation("lambda must be positive".into()));
    }
    let dec = svd(m_star)?;
    let m_lambda = rebuild(&dec, |_, s| (s - lambda).max(0.0));
    let e_lambda = rebuild(&dec, |_, s| s.min(lambda) / lambda);
    Ok((m_lambda, e_lambda))
}

/// Split `M` into rank-`r` blocks of consecutive singular triples, largest
/// first. Blocks are pairwise orthogonal in the trace inner product, sum to
/// `M`, and satisfy `sum_k ||M_k||_F <= ||M||_F + ||M||_* / sqrt(r)`.
pub fn block_decompose(m: &DenseMatrix, r: usize) -> Result<BlockDecomposition> {
    if r == 0 {
        return Err(Error::Validation("block rank r must be >= 1".into()));
    }
    let dec = svd(m)?;
    let k = dec.singvals.len();
    let mut blocks = Vec::new();
    let mut start = 0;
    while start < k {
        let end = (start + r).min(k);
        if dec.singvals[start] == 0.0 {
            break; // sorted nonincreasing: only zero triples remain
        }
        let block = rebuild(&dec, |l, s| if l >= start && l < end { s } else { 0.0 });
        blocks.push(block);
        start = end;
    }
    Ok(BlockDecomposition {
        blocks,
        block_rank: r,
    })
}

/// Ordered rank-`r` blocks of a matrix (see [`block_decompose`]).
#[derive(Debug, Clone)]
pub struct BlockDecomposition {
    pub blocks: Vec<DenseMatrix>,
    pub block_rank: usize,
}

impl BlockDecomposition {
    pub fn sum(&self, rows: usize, cols: usize) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(rows, cols);
        for b in &self.blocks {
            out.axpy_in(1.0, b);
        }
        out
    }
}

const ORTHONORMALITY_TOL: f64 = 1e-8;

/// Split `M` into its component in the tangent space
/// `T = { U* A^T + B V*^T }` and the complement `(I - U*U*^T) M (I - V*V*^T)`.
///
/// Returns `(p_t, p_t_perp)` with `p_t + p_t_perp = M` up to roundoff.
/// `u_star`/`v_star` must have orthonormal columns (checked to 1e-8); empty
/// factors (zero columns) give `p_t = 0`, `p_t_perp = M`.
pub fn tangent_projections(
    u_star: &DenseMatrix,
    v_star: &DenseMatrix,
    m: &DenseMatrix,
) -> Result<(DenseMatrix, DenseMatrix)> {
    if u_star.cols() != v_star.cols() {
        return Err(Error::Dimension(format!(
            "factor column counts differ: {} vs {}",
            u_star.cols(),
            v_star.cols()
        )));
    }
    if u_star.rows() != m.rows() || v_star.rows() != m.cols() {
        return Err(Error::Dimension(format!(
            "factors {:?}/{:?} do not match matrix {:?}",
            u_star.shape(),
            v_star.shape(),
            m.shape()
        )));
    }
    check_orthonormal(u_star, "u_star")?;
    check_orthonormal(v_star, "v_star")?;

    // (I - UU^T) M (I - VV^T), evaluated as two rank-k corrections.
    let ut_m = u_star.matmul_tn(m); // k x d2
    let mut left_perp = m.clone();
    left_perp.axpy_in(-1.0, &u_star.matmul(&ut_m));
    let lp_v = left_perp.matmul(v_star); // d1 x k
    let mut p_perp = left_perp;
    p_perp.axpy_in(-1.0, &lp_v.matmul_nt(v_star));

    let p_t = m.sub(&p_perp);
    Ok((p_t, p_perp))
}

fn check_orthonormal(q: &DenseMatrix, name: &str) -> Result<()> {
    let gram = q.matmul_tn(q);
    let k = q.cols();
    let mut err = 0.0f64;
    for i in 0..k {
        for j in 0..k {
            let target = if i == j { 1.0 } else { 0.0 };
            err = err.max((gram.get(i, j) - target).abs());
        }
    }
    if err > ORTHONORMALITY_TOL {
        return Err(Error::Validation(format!(
            "{name} does not have orthonormal columns (deviation {err:.2e})"
        )));
    }
    Ok(())
}

/// Number of singular values exceeding `rel_tol * sigma_1`; 0 for the zero
/// matrix. `rel_tol` must lie in (0, 1).
pub fn numerical_rank(m: &DenseMatrix, rel_tol: f64) -> usize {
    assert!(
        rel_tol > 0.0 && rel_tol < 1.0,
        "rel_tol must lie in (0, 1), got {rel_tol}"
    );
    let vals = svd_values(m).expect("svd convergence");
    match vals.first() {
        Some(&s1) if s1 > 0.0 => vals.iter().filter(|&&s| s > rel_tol * s1).count(),
        _ => 0,
    }
}

/// Power iteration estimate of the operator norm, with a deterministic
/// start vector derived from `seed`. Runs 200 iterations or until the
/// estimate changes by less than 1e-10 relative, whichever comes first.
pub fn power_operator_norm(m: &DenseMatrix, seed: u64) -> f64 {
    let (d1, d2) = m.shape();
    if d1 == 0 || d2 == 0 {
        return 0.0;
    }
    let mut rng = SeededRng::with_stream(seed, 0x706f7765); // "powe"
    let mut v = DenseMatrix::from_vec(d2, 1, rng.normal_vec(d2)).expect("finite start");
    let nv = v.frobenius_norm();
    if nv == 0.0 {
        return 0.0;
    }
    v = v.scale(1.0 / nv);
    let mut sigma = 0.0f64;
    for _ in 0..200 {
        let u = m.matmul(&v); // d1 x 1
        let new_sigma = u.frobenius_norm();
        if new_sigma == 0.0 {
            return 0.0;
        }
        let w = m.matmul_tn(&u); // d2 x 1
        let nw = w.frobenius_norm();
        if nw == 0.0 {
            return new_sigma;
        }
        v = w.scale(1.0 / nw);
        if (new_sigma - sigma).abs() <= 1e-10 * new_sigma.max(1e-300) {
            return new_sigma;
        }
        sigma = new_sigma;
    }
    sigma
}

/// Orthonormal `rows x cols` factor from the QR decomposition of a Gaussian
/// matrix. Requires `cols <= rows`.
pub fn random_orthonormal(rows: usize, cols: usize, rng: &mut SeededRng) -> Result<DenseMatrix> {
    if cols > rows {
        return Err(Error::Validation(format!(
            "cannot build {rows}x{cols} orthonormal factor (cols > rows)"
        )));
    }
    if cols == 0 {
        return Ok(DenseMatrix::zeros(rows, 0));
    }
    let g = DenseMatrix::gaussian(rows, cols, rng);
    let qr = nalgebra::linalg::QR::new(to_dmatrix(&g));
    let q = qr.q();
    Ok(from_dmatrix(&q))
}

fn rebuild(dec: &Svd, f: impl Fn(usize, f64) -> f64) -> DenseMatrix {
    let (d1, k) = dec.left.shape();
    let d2 = dec.right.rows();
    // Work with right^T rows for contiguous axpys.
    let right_t = dec.right.transpose(); // k x d2
    let mut out = DenseMatrix::zeros(d1, d2);
    for l in 0..k {
        let s = f(l, dec.singvals[l]);
        if s == 0.0 {
            continue;
        }
        let row = right_t.row(l);
        for i in 0..d1 {
            let c = s * dec.left.get(i, l);
            if c != 0.0 {
                crate::matrix::axpy(out.row_mut(i), c, row);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn orthonormality_defect(q: &DenseMatrix) -> f64 {
        let gram = q.matmul_tn(q);
        let mut err = 0.0f64;
        for i in 0..q.cols() {
            for j in 0..q.cols() {
                let t = if i == j { 1.0 } else { 0.0 };
                err = err.max((gram.get(i, j) - t).abs());
            }
        }
        err
    }

    #[test]
    fn svd_of_diagonal() {
        let dec = svd(&DenseMatrix::diagonal(&[3.0, 1.0])).unwrap();
        assert!((dec.singvals[0] - 3.0).abs() < 1e-12);
        assert!((dec.singvals[1] - 1.0).abs() < 1e-12);
        assert!(dec.reconstruct().max_abs_diff(&DenseMatrix::diagonal(&[3.0, 1.0])) < 1e-12);
    }

    #[test]
    fn svd_of_zero_matrix() {
        let dec = svd(&DenseMatrix::zeros(4, 3)).unwrap();
        assert_eq!(dec.singvals.len(), 3);
        assert!(dec.singvals.iter().all(|&s| s == 0.0));
        assert!(orthonormality_defect(&dec.left) < 1e-10);
        assert!(orthonormality_defect(&dec.right) < 1e-10);
    }

    // Oracle: singular values from the eigendecomposition of the Gram
    // matrix M^T M, computed by a different routine than the SVD itself.
    #[test]
    fn svd_matches_gram_eigendecomposition() {
        let mut rng = SeededRng::new(11);
        let m = DenseMatrix::gaussian(20, 15, &mut rng);
        let gram = m.matmul_tn(&m);
        let sym = nalgebra::linalg::SymmetricEigen::new(to_dmatrix(&gram));
        let mut oracle: Vec<f64> = sym.eigenvalues.iter().map(|&e| e.max(0.0).sqrt()).collect();
        oracle.sort_by(|a, b| b.partial_cmp(a).unwrap());

        let dec = svd(&m).unwrap();
        for (a, b) in dec.singvals.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-9 * (1.0 + b), "{a} vs {b}");
        }
        let err = dec.reconstruct().sub(&m).frobenius_norm() / m.frobenius_norm();
        assert!(err < 1e-9, "reconstruction error {err}");
        assert!(orthonormality_defect(&dec.left) < 1e-10);
        assert!(orthonormality_defect(&dec.right) < 1e-10);
        for w in dec.singvals.windows(2) {
            assert!(w[0] >= w[1]);
        }
    }

    #[test]
    fn threshold_on_diagonal() {
        let m = DenseMatrix::diagonal(&[3.0, 1.0]);
        let t = soft_hard_threshold(&m, 2, 1.0).unwrap();
        assert!(t.max_abs_diff(&DenseMatrix::diagonal(&[2.0, 0.0])) < 1e-12);
    }

    #[test]
    fn threshold_identity_case() {
        let mut rng = SeededRng::new(4);
        let m = DenseMatrix::gaussian(6, 9, &mut rng);
        let t = soft_hard_threshold(&m, 6, 0.0).unwrap();
        assert!(t.max_abs_diff(&m) < 1e-10 * (1.0 + m.frobenius_norm()));
    }

    // Oracle: recompute through an explicit triple loop over the SVD
    // triples, shrinking every singular value and zeroing all but the top r.
    #[test]
    fn threshold_matches_full_svd_oracle() {
        let mut rng = SeededRng::new(5);
        let m = DenseMatrix::gaussian(10, 8, &mut rng);
        let (r, alpha) = (3usize, 0.5);
        let dec = svd(&m).unwrap();
        let mut oracle = DenseMatrix::zeros(10, 8);
        for l in 0..dec.singvals.len() {
            let s = (dec.singvals[l] - alpha).max(0.0);
            let keep = if l < r { s } else { 0.0 };
            for i in 0..10 {
                for j in 0..8 {
                    let v = oracle.get(i, j) + keep * dec.left.get(i, l) * dec.right.get(j, l);
                    oracle.set(i, j, v);
                }
            }
        }
        let t = soft_hard_threshold(&m, r, alpha).unwrap();
        assert!(t.max_abs_diff(&oracle) < 1e-12);
        assert!(numerical_rank(&t, DEFAULT_RANK_TOL) <= r);
    }

    #[test]
    fn ideal_solution_diagonal() {
        let m = DenseMatrix::diagonal(&[3.0, 1.0]);
        let (m_l, e_l) = ideal_solution(&m, 2.0).unwrap();
        assert!(m_l.max_abs_diff(&DenseMatrix::diagonal(&[1.0, 0.0])) < 1e-12);
        assert!(e_l.max_abs_diff(&DenseMatrix::diagonal(&[1.0, 0.5])) < 1e-12);
    }

    #[test]
    fn ideal_solution_full_shrinkage() {
        let mut rng = SeededRng::new(6);
        let m = DenseMatrix::gaussian(5, 7, &mut rng);
        let lambda = 2.0 * operator_norm(&m).unwrap();
        let (m_l, e_l) = ideal_solution(&m, lambda).unwrap();
        assert!(m_l.frobenius_norm() < 1e-12);
        assert!(e_l.max_abs_diff(&m.scale(1.0 / lambda)) < 1e-12);
    }

    #[test]
    fn ideal_solution_identity_and_norms() {
        let mut rng = SeededRng::new(7);
        let u = random_orthonormal(12, 4, &mut rng).unwrap();
        let v = random_orthonormal(9, 4, &mut rng).unwrap();
        let m = u
            .matmul(&DenseMatrix::diagonal(&[2.0, 1.5, 0.7, 0.2]))
            .matmul_nt(&v);
        let lambda = 0.5;
        let (m_l, e_l) = ideal_solution(&m, lambda).unwrap();
        let recon = m_l.add(&e_l.scale(lambda));
        assert!(recon.max_abs_diff(&m) < 1e-10);
        assert!(operator_norm(&e_l).unwrap() <= 1.0 + 1e-12);
        assert_eq!(
            numerical_rank(&e_l, DEFAULT_RANK_TOL),
            numerical_rank(&m, DEFAULT_RANK_TOL)
        );
    }

    #[test]
    fn block_decompose_low_rank_is_single_block() {
        let mut rng = SeededRng::new(8);
        let a = DenseMatrix::gaussian(7, 2, &mut rng);
        let b = DenseMatrix::gaussian(2, 6, &mut rng);
        let m = a.matmul(&b);
        let dec = block_decompose(&m, 2).unwrap();
        // rank-2 tail triples may carry roundoff-level weight; the leading
        // block must carry essentially everything.
        assert!(dec.blocks[0].max_abs_diff(&m) < 1e-10 * (1.0 + m.frobenius_norm()));
        let total = dec.sum(7, 6);
        assert!(total.max_abs_diff(&m) < 1e-12 * (1.0 + m.frobenius_norm()));
    }

    #[test]
    fn block_decompose_diagonal_partition() {
        let m = DenseMatrix::diagonal(&[4.0, 3.0, 2.0, 1.0]);
        let dec = block_decompose(&m, 2).unwrap();
        assert_eq!(dec.blocks.len(), 2);
        assert!(dec.blocks[0].max_abs_diff(&DenseMatrix::diagonal(&[4.0, 3.0, 0.0, 0.0])) < 1e-12);
        assert!(dec.blocks[1].max_abs_diff(&DenseMatrix::diagonal(&[0.0, 0.0, 2.0, 1.0])) < 1e-12);
    }

    #[test]
    fn block_decompose_norm_bound() {
        let mut rng = SeededRng::new(9);
        let m = DenseMatrix::gaussian(30, 30, &mut rng);
        let dec = block_decompose(&m, 5).unwrap();
        let sum_f: f64 = dec.blocks.iter().map(|b| b.frobenius_norm()).sum();
        let bound = m.frobenius_norm() + nuclear_norm(&m).unwrap() / 5f64.sqrt();
        assert!(sum_f <= bound + 1e-9, "{sum_f} > {bound}");
    }

    #[test]
    fn tangent_projection_of_in_span_matrix() {
        let mut rng = SeededRng::new(10);
        let u = random_orthonormal(8, 3, &mut rng).unwrap();
        let v = random_orthonormal(6, 3, &mut rng).unwrap();
        let a = DenseMatrix::gaussian(6, 3, &mut rng); // M = U A^T lies in T
        let m = u.matmul_nt(&a);
        let (p_t, p_perp) = tangent_projections(&u, &v, &m).unwrap();
        assert!(p_perp.frobenius_norm() < 1e-12 * (1.0 + m.frobenius_norm()));
        assert!(p_t.max_abs_diff(&m) < 1e-12 * (1.0 + m.frobenius_norm()));
    }

    #[test]
    fn tangent_projection_empty_subspace() {
        let mut rng = SeededRng::new(12);
        let m = DenseMatrix::gaussian(5, 4, &mut rng);
        let u = DenseMatrix::zeros(5, 0);
        let v = DenseMatrix::zeros(4, 0);
        let (p_t, p_perp) = tangent_projections(&u, &v, &m).unwrap();
        assert!(p_t.frobenius_norm() == 0.0);
        assert!(p_perp.max_abs_diff(&m) == 0.0);
    }

    // Oracle: closed-form projector P_T(M) = UU^T M + M VV^T - UU^T M VV^T.
    #[test]
    fn tangent_projection_matches_projector_formula() {
        let mut rng = SeededRng::new(13);
        let u = random_orthonormal(9, 2, &mut rng).unwrap();
        let v = random_orthonormal(7, 2, &mut rng).unwrap();
        let m = DenseMatrix::gaussian(9, 7, &mut rng);
        let uut_m = u.matmul(&u.matmul_tn(&m));
        let m_vvt = m.matmul(&v).matmul_nt(&v);
        let uut_m_vvt = uut_m.matmul(&v).matmul_nt(&v);
        let oracle = uut_m.add(&m_vvt).sub(&uut_m_vvt);

        let (p_t, p_perp) = tangent_projections(&u, &v, &m).unwrap();
        assert!(p_t.max_abs_diff(&oracle) < 1e-12 * (1.0 + m.frobenius_norm()));
        // complement annihilated by the factors
        let ut_p = u.matmul_tn(&p_perp);
        let p_v = p_perp.matmul(&v);
        assert!(ut_p.frobenius_norm() < 1e-10);
        assert!(p_v.frobenius_norm() < 1e-10);
        // p_t + p_perp = m up to roundoff
        assert!(p_t.add(&p_perp).max_abs_diff(&m) < 1e-14 * (1.0 + m.frobenius_norm()));
    }

    #[test]
    fn tangent_projection_rejects_non_orthonormal() {
        let mut rng = SeededRng::new(14);
        let u = DenseMatrix::gaussian(6, 2, &mut rng);
        let v = random_orthonormal(5, 2, &mut rng).unwrap();
        let m = DenseMatrix::gaussian(6, 5, &mut rng);
        assert!(matches!(
            tangent_projections(&u, &v, &m),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn numerical_rank_cases() {
        assert_eq!(numerical_rank(&DenseMatrix::zeros(3, 5), 1e-6), 0);
        let m = DenseMatrix::diagonal(&[1.0, 1e-12]);
        assert_eq!(numerical_rank(&m, 1e-6), 1);
        assert_eq!(numerical_rank(&DenseMatrix::identity(4), 1e-6), 4);
    }

    #[test]
    fn power_iteration_matches_svd_norm() {
        let mut rng = SeededRng::new(15);
        let m = DenseMatrix::gaussian(20, 14, &mut rng);
        let exact = operator_norm(&m).unwrap();
        let power = power_operator_norm(&m, 99);
        assert!((exact - power).abs() < 1e-8 * exact, "{exact} vs {power}");
        assert_eq!(power_operator_norm(&DenseMatrix::zeros(4, 4), 1), 0.0);
    }

    #[test]
    fn random_orthonormal_is_orthonormal() {
        let mut rng = SeededRng::new(16);
        let q = random_orthonormal(15, 6, &mut rng).unwrap();
        assert!(orthonormality_defect(&q) < 1e-12);
        assert!(random_orthonormal(3, 5, &mut rng).is_err());
    }
}
