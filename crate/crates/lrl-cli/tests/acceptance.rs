//! Acceptance suite: one test per criterion, each printing a PASS/FAIL
//! line (run with `cargo test -p lrl-cli --test acceptance -- --nocapture`
//! to see them).
//!
//! A1  adjoint identity for every operator kind
//! A2  denoising closed-form equivalence of ISTA and full-rank PPGD
//! A3  block-decomposition and polarization bounds
//! A4  solution-rank bound with certificate and membership
//! A5  linear convergence of the rank-projected solver
//! A6  factored landscape: second-order points reach the reference
//! A7  uniqueness via multi-start agreement
//! A8  derivative checks (gradient and Hessian-vector products)
//! A9  byte-identical sweep re-runs

use std::process::Command;

use lrl::certificate::{self, polarization_pairs};
use lrl::linalg::{self, DEFAULT_RANK_TOL};
use lrl::matrix::{dot, DenseMatrix};
use lrl::rng::SeededRng;
use lrl::sensing::{GeneratedOperator, 
    estimate_rip, generate_instance, InstanceSpec, ProblemInstance, RipEstimate, SensingOperator,
};
use lrl::solvers::{
    self, bm_gradient, bm_hessian_vec, bm_objective, certify_criticality, solve_ista, solve_ppgd,
    CriticalityTolerances, SolveStatus, SolverConfig,
};

fn check(criterion: &str, pass: bool, detail: &str) {
    println!(
        "[{criterion}] {} — {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "{criterion} failed: {detail}");
}

/// d1 = d2 = 40, r* = 2, spectrum (1, 1), n = 8 r* (d1 + d2) = 1280,
/// noise ratio 1/32, lambda = 0.1 sigma_1.
fn rank_bound_spec(seed: u64) -> InstanceSpec {
    InstanceSpec {
        d1: 40,
        d2: 40,
        r_star: 2,
        spectrum: vec![1.0, 1.0],
        n: 1280,
        lambda: 0.1,
        noise_ratio: 1.0 / 32.0,
        seed,
        operator: GeneratedOperator::Gaussian,
    }
}

fn tight_ista(inst: &ProblemInstance, start: Option<&DenseMatrix>) -> solvers::SolveReport {
    let cfg = SolverConfig {
        fixpoint_tol: 1e-12,
        max_iters: 20_000,
        ..SolverConfig::default()
    };
    let report = solve_ista(inst, &cfg, start, None).expect("ista runs");
    assert_eq!(report.status, SolveStatus::Converged, "ista must converge");
    report
}

#[test]
fn a1_adjoint_identity() {
    let ops: Vec<(&str, SensingOperator)> = vec![
        ("identity", SensingOperator::identity(10, 7).unwrap()),
        (
            "gaussian",
            SensingOperator::gaussian_ensemble(10, 7, 60, 5).unwrap(),
        ),
        ("explicit", {
            let src = SensingOperator::gaussian_ensemble(10, 7, 40, 9).unwrap();
            SensingOperator::explicit((0..40).map(|i| src.measurement(i)).collect()).unwrap()
        }),
    ];
    let mut worst: f64 = 0.0;
    for (name, op) in &ops {
        let mut rng = SeededRng::new(1);
        for _ in 0..100 {
            let m = DenseMatrix::gaussian(10, 7, &mut rng);
            let v = rng.normal_vec(op.n());
            let lhs = dot(&op.apply(&m).unwrap(), &v);
            let rhs = m.dot(&op.adjoint(&v).unwrap());
            let err = (lhs - rhs).abs() / (1.0 + lhs.abs());
            worst = worst.max(err);
            assert!(err <= 1e-10, "{name}: adjoint identity violated by {err}");
        }
    }
    check("A1", true, &format!("3 kinds x 100 pairs, worst relative defect {worst:.2e}"));
}

#[test]
fn a2_denoising_oracle_equivalence() {
    let mut rng = SeededRng::new(2);
    let u = linalg::random_orthonormal(30, 3, &mut rng).unwrap();
    let v = linalg::random_orthonormal(30, 3, &mut rng).unwrap();
    let m_star = u.matmul(&DenseMatrix::diagonal(&[3.0, 2.0, 1.0])).matmul_nt(&v);
    let sigma3 = 1.0;

    let mut worst: f64 = 0.0;
    for factor in [0.1, 1.0, 10.0] {
        let lambda = factor * sigma3;
        let inst = ProblemInstance::new(
            SensingOperator::identity(30, 30).unwrap(),
            m_star.as_slice().to_vec(),
            lambda,
        )
        .unwrap();
        let (closed, _) = linalg::ideal_solution(&m_star, lambda).unwrap();
        let denom = closed.frobenius_norm().max(1e-12);

        let ista = tight_ista(&inst, None);
        let err_ista = ista.final_matrix.sub(&closed).frobenius_norm() / denom;

        let cfg = SolverConfig {
            rank: Some(30),
            fixpoint_tol: 1e-12,
            max_iters: 20_000,
            ..SolverConfig::default()
        };
        let ppgd = solve_ppgd(&inst, &cfg, &DenseMatrix::zeros(30, 30), None).unwrap();
        let err_ppgd = ppgd.final_matrix.sub(&closed).frobenius_norm() / denom;

        worst = worst.max(err_ista).max(err_ppgd);
        assert!(
            err_ista <= 1e-8 && err_ppgd <= 1e-8,
            "lambda = {lambda}: ista {err_ista:.2e}, ppgd {err_ppgd:.2e}"
        );
    }
    check("A2", true, &format!("3 penalty levels, worst relative error {worst:.2e}"));
}

#[test]
fn a3_decomposition_and_polarization() {
    // block decomposition invariants on 100 random matrices
    let mut rng = SeededRng::new(3);
    for _ in 0..100 {
        let m = DenseMatrix::gaussian(12, 12, &mut rng);
        let dec = linalg::block_decompose(&m, 3).unwrap();
        let total = dec.sum(12, 12);
        assert!(total.max_abs_diff(&m) <= 1e-9 * (1.0 + m.frobenius_norm()));
        for i in 0..dec.blocks.len() {
            for j in 0..i {
                let ip = dec.blocks[i].dot(&dec.blocks[j]).abs();
                let bound =
                    1e-9 * dec.blocks[i].frobenius_norm() * dec.blocks[j].frobenius_norm();
                assert!(ip <= bound.max(1e-18));
            }
        }
        let sum_f: f64 = dec.blocks.iter().map(|b| b.frobenius_norm()).sum();
        let bound = m.frobenius_norm() + linalg::nuclear_norm(&m).unwrap() / 3f64.sqrt();
        assert!(sum_f <= bound + 1e-9);
    }

    // polarization deviations against the isometry estimate on shared
    // samples: every pair's deviation is controlled by the worst ratio of
    // the pair's sum/difference matrices, all of rank <= 2r
    let op = SensingOperator::gaussian_ensemble(12, 12, 200, 4).unwrap();
    let r = 2;
    let pairs = polarization_pairs(&op, r, 100, 11).unwrap();
    let mut shared_ratios = Vec::new();
    for p in &pairs {
        for m in [&p.m1, &p.m2, &p.m1.add(&p.m2), &p.m1.sub(&p.m2)] {
            let norm_sq = m.dot(m);
            if norm_sq > 0.0 {
                let am = op.apply(m).unwrap();
                shared_ratios.push(dot(&am, &am) / norm_sq);
            }
        }
    }
    let shared = RipEstimate::from_ratios(2 * r, &shared_ratios);
    let max_dev = pairs.iter().map(|p| p.deviation).fold(0.0f64, f64::max);
    assert!(
        max_dev <= shared.delta_lower * 1.2,
        "polarization {max_dev} vs shared delta {}",
        shared.delta_lower
    );

    // the identity operator polarizes exactly
    let ident = SensingOperator::identity(12, 12).unwrap();
    let ident_dev = certificate::polarization_check(&ident, r, 100, 12).unwrap();
    assert!(ident_dev <= 1e-12);

    check(
        "A3",
        true,
        &format!(
            "100 decompositions ok; polarization {max_dev:.3} <= 1.2 x shared delta {:.3}; identity exact",
            shared.delta_lower
        ),
    );
}

#[test]
fn a4_rank_bound() {
    let mut details = Vec::new();
    for seed in [101u64, 102, 103, 104, 105] {
        let inst = generate_instance(&rank_bound_spec(seed)).unwrap();
        let report = tight_ista(&inst, None);
        let m_hat = &report.final_matrix;

        let cert = certificate::verify_rank_bound(
            &inst,
            m_hat,
            &certificate::VerifyOptions {
                rip_samples: 200,
                seed,
                ..certificate::VerifyOptions::default()
            },
        )
        .unwrap();

        let rank = cert.rank_m_hat;
        let cap = cert.rank_cap.unwrap();
        assert!(rank <= cap, "seed {seed}: rank {rank} above cap {cap}");
        assert!(rank <= 2, "seed {seed}: rank {rank} above floor(1.1 r*) = 2");

        // membership at the data-driven tolerance
        let e_hat = certificate::compute_ehat(&inst, m_hat).unwrap();
        let cert_tol = 1e-6 * (1.0 + linalg::operator_norm(&e_hat).unwrap());
        let mem =
            certificate::subgradient_membership(m_hat, &e_hat, cert_tol, DEFAULT_RANK_TOL)
                .unwrap();
        assert!(mem.is_member, "seed {seed}: membership failed {mem:?}");

        details.push(format!(
            "seed {seed}: rank {rank} <= cap {cap} (condition {:.3})",
            cert.condition_value.unwrap()
        ));
    }
    check("A4", true, &details.join("; "));
}

#[test]
fn a5_linear_convergence() {
    let seed = 101u64;
    let inst = generate_instance(&rank_bound_spec(seed)).unwrap();
    let m_hat = tight_ista(&inst, None).final_matrix;
    let m_hat_norm = m_hat.frobenius_norm();

    let rip = estimate_rip(&inst.operator, 4, 200, seed).unwrap();
    assert!(
        rip.delta_lower < 1.0 / 3.0,
        "frozen instance must sit in the contraction regime, got {}",
        rip.delta_lower
    );
    let analytic_rate = 2.0 * rip.delta_lower / (1.0 - rip.delta_lower);

    let mut worst_rate: f64 = 0.0;
    for start_seed in 0..3u64 {
        let mut rng = SeededRng::new(900 + start_seed);
        let left = DenseMatrix::gaussian(40, 2, &mut rng);
        let right = DenseMatrix::gaussian(40, 2, &mut rng);
        let m0 = left.matmul_nt(&right).scale(0.1);

        let cfg = SolverConfig {
            rank: Some(2),
            fixpoint_tol: 1e-14,
            max_iters: 2000,
            seed,
            ..SolverConfig::default()
        };
        let report = solve_ppgd(&inst, &cfg, &m0, Some(&m_hat)).unwrap();

        let errors: Vec<f64> = report
            .trace
            .iter()
            .map(|r| {
                let d = r.dist_to_ref.unwrap();
                d * d
            })
            .collect();
        let reached = errors
            .iter()
            .any(|&e| e.sqrt() <= 1e-8 * m_hat_norm);
        assert!(
            reached,
            "start {start_seed}: never reached 1e-8 relative distance in {} iters",
            report.iters()
        );

        let mut rate: f64 = 0.0;
        for w in errors.windows(2) {
            if w[0] > 1e-16 {
                rate = rate.max(w[1] / w[0]);
            }
        }
        assert!(rate < 1.0, "start {start_seed}: worst ratio {rate} >= 1");
        worst_rate = worst_rate.max(rate);
    }
    // reported, not asserted: the analytic rate bound uses the true isometry
    // constant, which the sampled bound underestimates
    println!(
        "[A5] observed worst ratio {worst_rate:.4}; analytic bound 2d/(1-d) with sampled d: {analytic_rate:.4}"
    );
    check(
        "A5",
        true,
        &format!("geometric decay with ratio {worst_rate:.4} < 1 from 3 starts"),
    );
}

#[test]
fn a6_landscape() {
    use rayon::prelude::*;

    let seed = 101u64;
    let inst = generate_instance(&rank_bound_spec(seed)).unwrap();
    let m_hat = tight_ista(&inst, None).final_matrix;
    let m_hat_norm = m_hat.frobenius_norm();

    let cells: Vec<(usize, u64)> = [2usize, 3, 4]
        .iter()
        .flat_map(|&r| (0..20u64).map(move |s| (r, s)))
        .collect();

    let results: Vec<(usize, u64, f64, bool, f64)> = cells
        .par_iter()
        .map(|&(rank, bm_seed)| {
            let cfg = SolverConfig {
                rank: Some(rank),
                grad_tol: 1e-8,
                max_iters: 100_000,
                seed: bm_seed,
                ..SolverConfig::default()
            };
            let report = solvers::solve_burer_monteiro(&inst, &cfg, None).unwrap();
            assert_eq!(
                report.status,
                SolveStatus::Converged,
                "rank {rank} seed {bm_seed} did not converge"
            );
            let (x, y) = report.factored.as_ref().unwrap();
            let cert = certify_criticality(
                &inst,
                x,
                y,
                &CriticalityTolerances {
                    grad_tol: 1e-8,
                    hess_tol: 1e-6,
                },
            )
            .unwrap();
            let dist = report.final_matrix.sub(&m_hat).frobenius_norm();
            (rank, bm_seed, dist, cert.is_second_order, cert.min_hess_eig)
        })
        .collect();

    let mut worst_dist: f64 = 0.0;
    for (rank, bm_seed, dist, second_order, min_eig) in &results {
        assert!(
            *second_order,
            "rank {rank} seed {bm_seed}: not second-order (min eig {min_eig:.2e})"
        );
        assert!(
            *dist <= 1e-4 * m_hat_norm,
            "rank {rank} seed {bm_seed}: distance {dist:.2e} above 1e-4 relative"
        );
        worst_dist = worst_dist.max(*dist);
    }
    check(
        "A6",
        true,
        &format!(
            "60/60 runs second-order and within {:.2e} of the reference (1e-4 rel cap {:.2e})",
            worst_dist,
            1e-4 * m_hat_norm
        ),
    );
}

#[test]
fn a7_uniqueness_multi_start() {
    let inst = generate_instance(&rank_bound_spec(101)).unwrap();
    let mut finals = Vec::new();
    for s in 0..5u64 {
        let mut rng = SeededRng::new(700 + s);
        let start = DenseMatrix::gaussian(40, 40, &mut rng).scale(0.2);
        finals.push(tight_ista(&inst, Some(&start)).final_matrix);
    }
    let mut worst: f64 = 0.0;
    for i in 0..finals.len() {
        for j in 0..i {
            let rel = finals[i].sub(&finals[j]).frobenius_norm()
                / finals[i].frobenius_norm().max(1e-12);
            worst = worst.max(rel);
            assert!(rel <= 1e-8, "starts {i},{j} differ by {rel:.2e}");
        }
    }
    check(
        "A7",
        true,
        &format!("5 starts agree pairwise within {worst:.2e} (cap 1e-8)"),
    );
}

#[test]
fn a8_derivative_checks() {
    let inst = generate_instance(&InstanceSpec {
        d1: 10,
        d2: 9,
        r_star: 2,
        spectrum: vec![1.0, 0.6],
        n: 80,
        lambda: 0.12,
        noise_ratio: 0.05,
        seed: 8,
        operator: GeneratedOperator::Gaussian,
    })
    .unwrap();
    let r = 2;
    let dim = (10 + 9) * r;
    let mut rng = SeededRng::new(88);
    let mut worst_grad: f64 = 0.0;
    let mut worst_hvp: f64 = 0.0;

    for _ in 0..20 {
        let x = DenseMatrix::gaussian(10, r, &mut rng).scale(0.6);
        let y = DenseMatrix::gaussian(9, r, &mut rng).scale(0.6);

        // gradient vs central differences
        let (gx, gy) = bm_gradient(&inst, &x, &y).unwrap();
        let mut analytic = gx.as_slice().to_vec();
        analytic.extend_from_slice(gy.as_slice());
        let eps = 1e-6;
        let mut fd = vec![0.0; dim];
        for (i, slot) in fd.iter_mut().enumerate() {
            let perturb = |sign: f64| {
                let mut xs = x.clone();
                let mut ys = y.clone();
                if i < 10 * r {
                    xs.as_mut_slice()[i] += sign * eps;
                } else {
                    ys.as_mut_slice()[i - 10 * r] += sign * eps;
                }
                bm_objective(&inst, &xs, &ys).unwrap()
            };
            *slot = (perturb(1.0) - perturb(-1.0)) / (2.0 * eps);
        }
        let grad_err = rel_vec_err(&analytic, &fd);
        worst_grad = worst_grad.max(grad_err);
        assert!(grad_err <= 1e-6, "gradient error {grad_err:.2e}");

        // Hessian-vector product vs finite-difference of the gradient
        let vx = DenseMatrix::gaussian(10, r, &mut rng);
        let vy = DenseMatrix::gaussian(9, r, &mut rng);
        let (hx, hy) = bm_hessian_vec(&inst, &x, &y, &vx, &vy).unwrap();
        let mut analytic_h = hx.as_slice().to_vec();
        analytic_h.extend_from_slice(hy.as_slice());

        let heps = 1e-5;
        let shift = |sign: f64| {
            let mut xs = x.clone();
            xs.axpy_in(sign * heps, &vx);
            let mut ys = y.clone();
            ys.axpy_in(sign * heps, &vy);
            let (gxs, gys) = bm_gradient(&inst, &xs, &ys).unwrap();
            let mut g = gxs.as_slice().to_vec();
            g.extend_from_slice(gys.as_slice());
            g
        };
        let gp = shift(1.0);
        let gm = shift(-1.0);
        let fd_h: Vec<f64> = gp
            .iter()
            .zip(&gm)
            .map(|(p, m)| (p - m) / (2.0 * heps))
            .collect();
        let hvp_err = rel_vec_err(&analytic_h, &fd_h);
        worst_hvp = worst_hvp.max(hvp_err);
        assert!(hvp_err <= 1e-5, "hvp error {hvp_err:.2e}");
    }
    check(
        "A8",
        true,
        &format!("20 points: gradient err <= {worst_grad:.2e}, hvp err <= {worst_hvp:.2e}"),
    );
}

fn rel_vec_err(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt();
    let den: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    num / den.max(1e-300)
}

#[test]
fn a9_sweep_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("sweep.json");
    std::fs::write(
        &config_path,
        r#"{
            "d1": 12, "d2": 12, "r_star": 2, "spectrum": [1.0, 0.8],
            "rho_grid": [0.0, 0.03125, 0.0625],
            "lambda_grid": [0.1],
            "n_factor_grid": [4.0, 8.0],
            "seeds": 1, "base_seed": 3, "rip_samples": 100
        }"#,
    )
    .unwrap();

    let run = |out: &str, jobs: &str| {
        let out_path = dir.path().join(out);
        let status = Command::new(env!("CARGO_BIN_EXE_lrl"))
            .args([
                "sweep",
                "--config",
                config_path.to_str().unwrap(),
                "--out",
                out_path.to_str().unwrap(),
                "--jobs",
                jobs,
            ])
            .status()
            .expect("sweep runs");
        assert!(status.success(), "sweep exited with {status}");
        std::fs::read(out_path).unwrap()
    };

    let first = run("a.csv", "1");
    let second = run("b.csv", "2");
    assert!(!first.is_empty());
    assert_eq!(first, second, "sweep outputs differ between runs");
    check(
        "A9",
        true,
        &format!("re-run identical ({} bytes, jobs 1 vs 2)", first.len()),
    );
}
