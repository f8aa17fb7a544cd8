//! Linear measurement operators, problem-instance generation, and empirical
//! restricted-isometry estimation.
//!
//! A sensing operator maps a `d1 x d2` matrix to `n` real measurements
//! `A(M)_i = <A_i, M>`. Three kinds exist: a Gaussian ensemble regenerated
//! bit-identically from its seed, the identity (vectorization) operator, and
//! explicitly supplied measurement matrices.

mod io;

pub use io::{instance_from_json, instance_to_json, load_instance, save_instance, FILE_VERSION};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, DEFAULT_RANK_TOL};
use crate::matrix::{axpy, dot, DenseMatrix};
use crate::rng::SeededRng;

/// Dimensions are capped so that a problem file cannot request an
/// arbitrarily large ensemble regeneration.
pub const MAX_DIM: usize = 4096;
/// Cap on `n * d1 * d2` for materialized ensembles (128 MiB of f64).
pub const MAX_ENSEMBLE_ELEMS: usize = 1 << 24;

const STREAM_ENSEMBLE: u64 = 0x01;
const STREAM_GROUND_TRUTH: u64 = 0x02;
const STREAM_NOISE: u64 = 0x03;
const STREAM_POWER: u64 = 0x04;
const STREAM_RIP: u64 = 0x05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OperatorKind {
    Gaussian,
    Identity,
    Explicit,
}

/// Linear measurement operator with adjoint.
#[derive(Debug, Clone)]
pub struct SensingOperator {
    kind: OperatorKind,
    d1: usize,
    d2: usize,
    n: usize,
    seed: Option<u64>,
    /// Measurement matrices, stacked row-major: entry `i*d1*d2 ..` holds
    /// `A_i`. Absent for the identity kind.
    stacked: Option<Vec<f64>>,
}

impl SensingOperator {
    /// Vectorization operator `A(M) = vec(M)` with `n = d1 * d2`.
    pub fn identity(d1: usize, d2: usize) -> Result<Self> {
        check_dims(d1, d2)?;
        Ok(Self {
            kind: OperatorKind::Identity,
            d1,
            d2,
            n: d1 * d2,
            seed: None,
            stacked: None,
        })
    }

    /// `n` i.i.d. Gaussian measurement matrices with entry variance `1/n`,
    /// so that `E ||A(M)||^2 = ||M||_F^2`. Regenerates bit-identically from
    /// `(seed, d1, d2, n)`.
    pub fn gaussian_ensemble(d1: usize, d2: usize, n: usize, seed: u64) -> Result<Self> {
        check_dims(d1, d2)?;
        if n == 0 {
            return Err(Error::Validation("measurement count n must be >= 1".into()));
        }
        if n.saturating_mul(d1).saturating_mul(d2) > MAX_ENSEMBLE_ELEMS {
            return Err(Error::Validation(format!(
                "ensemble of {n} matrices of size {d1}x{d2} exceeds the size cap"
            )));
        }
        let mut rng = SeededRng::with_stream(seed, STREAM_ENSEMBLE);
        let scale = 1.0 / (n as f64).sqrt();
        let mut stacked = rng.normal_vec(n * d1 * d2);
        for x in &mut stacked {
            *x *= scale;
        }
        Ok(Self {
            kind: OperatorKind::Gaussian,
            d1,
            d2,
            n,
            seed: Some(seed),
            stacked: Some(stacked),
        })
    }

    /// Operator from explicitly supplied measurement matrices.
    pub fn explicit(matrices: Vec<DenseMatrix>) -> Result<Self> {
        let first = matrices
            .first()
            .ok_or_else(|| Error::Validation("explicit operator needs >= 1 matrix".into()))?;
        let (d1, d2) = first.shape();
        check_dims(d1, d2)?;
        let n = matrices.len();
        if n.saturating_mul(d1).saturating_mul(d2) > MAX_ENSEMBLE_ELEMS {
            return Err(Error::Validation("explicit ensemble exceeds the size cap".into()));
        }
        let mut stacked = Vec::with_capacity(n * d1 * d2);
        for m in &matrices {
            if m.shape() != (d1, d2) {
                return Err(Error::Dimension(format!(
                    "measurement matrices disagree in shape: {:?} vs {:?}",
                    m.shape(),
                    (d1, d2)
                )));
            }
            stacked.extend_from_slice(m.as_slice());
        }
        Ok(Self {
            kind: OperatorKind::Explicit,
            d1,
            d2,
            n,
            seed: None,
            stacked: Some(stacked),
        })
    }

    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    pub fn d1(&self) -> usize {
        self.d1
    }

    pub fn d2(&self) -> usize {
        self.d2
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    /// The i-th measurement matrix `A_i`.
    pub fn measurement(&self, i: usize) -> DenseMatrix {
        assert!(i < self.n, "measurement index {i} out of range");
        match &self.stacked {
            Some(stacked) => {
                let len = self.d1 * self.d2;
                DenseMatrix::from_vec(self.d1, self.d2, stacked[i * len..(i + 1) * len].to_vec())
                    .expect("stored measurements are finite")
            }
            None => {
                // identity: A_i is the basis matrix with a single unit entry
                let mut m = DenseMatrix::zeros(self.d1, self.d2);
                m.as_mut_slice()[i] = 1.0;
                m
            }
        }
    }

    /// `A(M)`, component `i` the trace inner product `<A_i, M>`.
    pub fn apply(&self, m: &DenseMatrix) -> Result<Vec<f64>> {
        if m.shape() != (self.d1, self.d2) {
            return Err(Error::Dimension(format!(
                "operator expects {}x{}, got {:?}",
                self.d1,
                self.d2,
                m.shape()
            )));
        }
        match &self.stacked {
            None => Ok(m.as_slice().to_vec()),
            Some(stacked) => {
                let len = self.d1 * self.d2;
                let v = m.as_slice();
                Ok((0..self.n)
                    .map(|i| dot(&stacked[i * len..(i + 1) * len], v))
                    .collect())
            }
        }
    }

    /// Adjoint `A*(v) = sum_i v_i A_i`.
    pub fn adjoint(&self, v: &[f64]) -> Result<DenseMatrix> {
        if v.len() != self.n {
            return Err(Error::Dimension(format!(
                "adjoint expects a length-{} vector, got {}",
                self.n,
                v.len()
            )));
        }
        match &self.stacked {
            None => DenseMatrix::from_vec(self.d1, self.d2, v.to_vec()),
            Some(stacked) => {
                let len = self.d1 * self.d2;
                let mut out = vec![0.0; len];
                for (i, &vi) in v.iter().enumerate() {
                    if vi != 0.0 {
                        axpy(&mut out, vi, &stacked[i * len..(i + 1) * len]);
                    }
                }
                DenseMatrix::from_vec(self.d1, self.d2, out)
            }
        }
    }

    /// Power-iteration estimate of `||A||_op^2` (largest eigenvalue of
    /// `A* A`), used for gradient stepsizes. Fixed 50 iterations with a
    /// deterministic start derived from `seed`; exact for the identity.
    pub fn op_norm_sq(&self, seed: u64) -> f64 {
        if self.kind == OperatorKind::Identity {
            return 1.0;
        }
        let mut rng = SeededRng::with_stream(seed, STREAM_POWER);
        let mut m = DenseMatrix::from_vec(self.d1, self.d2, rng.normal_vec(self.d1 * self.d2))
            .expect("finite start");
        let norm = m.frobenius_norm();
        if norm == 0.0 {
            return 0.0;
        }
        let mut lambda = 0.0;
        for _ in 0..50 {
            let scale = m.frobenius_norm();
            if scale == 0.0 {
                return 0.0;
            }
            m = m.scale(1.0 / scale);
            let am = self.apply(&m).expect("dims fixed");
            lambda = dot(&am, &am);
            m = self.adjoint(&am).expect("dims fixed");
        }
        lambda
    }
}

fn check_dims(d1: usize, d2: usize) -> Result<()> {
    if d1 == 0 || d2 == 0 {
        return Err(Error::Validation("matrix dimensions must be >= 1".into()));
    }
    if d1 > MAX_DIM || d2 > MAX_DIM {
        return Err(Error::Validation(format!(
            "dimensions {d1}x{d2} exceed the supported maximum {MAX_DIM}"
        )));
    }
    Ok(())
}

/// Sampled lower bound on the restricted isometry constant at a given rank.
///
/// `delta_lower` is the largest observed deviation of `||A(M)||^2` from 1
/// over unit-Frobenius rank-`r` samples. Sampling a supremum can only
/// underestimate it, so this is a lower bound on the true constant; checks
/// that consume it are diagnostic, not certifying.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RipEstimate {
    pub rank: usize,
    pub samples: usize,
    pub delta_lower: f64,
    pub max_ratio: f64,
    pub min_ratio: f64,
}

impl RipEstimate {
    pub fn from_ratios(rank: usize, ratios: &[f64]) -> Self {
        let max_ratio = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min_ratio = ratios.iter().copied().fold(f64::INFINITY, f64::min);
        RipEstimate {
            rank,
            samples: ratios.len(),
            delta_lower: (max_ratio - 1.0).max(1.0 - min_ratio).max(0.0),
            max_ratio,
            min_ratio,
        }
    }

    /// Pooled estimate over this sample set and another.
    pub fn merge(&self, other: &RipEstimate) -> RipEstimate {
        let max_ratio = self.max_ratio.max(other.max_ratio);
        let min_ratio = self.min_ratio.min(other.min_ratio);
        RipEstimate {
            rank: self.rank.max(other.rank),
            samples: self.samples + other.samples,
            delta_lower: (max_ratio - 1.0).max(1.0 - min_ratio).max(0.0),
            max_ratio,
            min_ratio,
        }
    }
}

/// Random rank-`r` matrix with unit Frobenius norm (product of Gaussian
/// factors).
pub fn sample_rank_r_unit(d1: usize, d2: usize, r: usize, rng: &mut SeededRng) -> DenseMatrix {
    let left = DenseMatrix::gaussian(d1, r, rng);
    let right = DenseMatrix::gaussian(r, d2, rng);
    let m = left.matmul(&right);
    let norm = m.frobenius_norm();
    m.scale(1.0 / norm)
}

/// Estimate the RIP constant at rank `r` from `samples` random unit-norm
/// rank-`r` matrices.
pub fn estimate_rip(op: &SensingOperator, r: usize, samples: usize, seed: u64) -> Result<RipEstimate> {
    if r == 0 || r > op.d1().min(op.d2()) {
        return Err(Error::Validation(format!(
            "rip rank {r} out of range for a {}x{} operator",
            op.d1(),
            op.d2()
        )));
    }
    if samples == 0 {
        return Err(Error::Validation("need at least one rip sample".into()));
    }
    let mut rng = SeededRng::with_stream(seed, STREAM_RIP);
    let mut ratios = Vec::with_capacity(samples);
    for _ in 0..samples {
        let m = sample_rank_r_unit(op.d1(), op.d2(), r, &mut rng);
        let am = op.apply(&m)?;
        // divide by the sample's actual squared norm; for an isometry the
        // ratio is then exactly 1, not 1 up to normalization roundoff
        ratios.push(dot(&am, &am) / m.dot(&m));
    }
    Ok(RipEstimate::from_ratios(r, ratios.as_slice()))
}

/// Known ground truth attached to a generated problem.
#[derive(Debug, Clone)]
pub struct GroundTruth {
    pub m_star: DenseMatrix,
    pub xi: Vec<f64>,
    pub r_star: usize,
}

/// A measurement problem: operator, observations, penalty weight, and
/// (for generated problems) the ground truth.
#[derive(Debug, Clone)]
pub struct ProblemInstance {
    pub operator: SensingOperator,
    pub y: Vec<f64>,
    pub lambda: f64,
    pub ground_truth: Option<GroundTruth>,
}

impl ProblemInstance {
    pub fn new(operator: SensingOperator, y: Vec<f64>, lambda: f64) -> Result<Self> {
        let inst = ProblemInstance {
            operator,
            y,
            lambda,
            ground_truth: None,
        };
        inst.validate()?;
        Ok(inst)
    }

    pub fn d1(&self) -> usize {
        self.operator.d1()
    }

    pub fn d2(&self) -> usize {
        self.operator.d2()
    }

    pub fn n(&self) -> usize {
        self.operator.n()
    }

    /// Check the structural invariants (shapes, finiteness, ground-truth
    /// consistency `y = A(M*) + xi` and `r* = numerical_rank(M*)`).
    pub fn validate(&self) -> Result<()> {
        if self.y.len() != self.operator.n() {
            return Err(Error::Validation(format!(
                "y has length {} but the operator produces {} measurements",
                self.y.len(),
                self.operator.n()
            )));
        }
        if !self.y.iter().all(|x| x.is_finite()) {
            return Err(Error::Validation("y entries must be finite".into()));
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::Validation("lambda must be positive and finite".into()));
        }
        if let Some(gt) = &self.ground_truth {
            if gt.m_star.shape() != (self.d1(), self.d2()) {
                return Err(Error::Validation("ground-truth matrix shape mismatch".into()));
            }
            if gt.xi.len() != self.n() {
                return Err(Error::Validation("ground-truth noise length mismatch".into()));
            }
            if !gt.xi.iter().all(|x| x.is_finite()) {
                return Err(Error::Validation("noise entries must be finite".into()));
            }
            let a_mstar = self.operator.apply(&gt.m_star)?;
            for (i, ((yi, ai), xi)) in self.y.iter().zip(&a_mstar).zip(&gt.xi).enumerate() {
                let expected = ai + xi;
                if (yi - expected).abs() > 1e-12 * yi.abs().max(1.0) {
                    return Err(Error::Validation(format!(
                        "y[{i}] is inconsistent with A(M*) + xi"
                    )));
                }
            }
            let rank = linalg::numerical_rank(&gt.m_star, DEFAULT_RANK_TOL);
            if rank != gt.r_star {
                return Err(Error::Validation(format!(
                    "recorded r_star {} but numerical rank is {rank}",
                    gt.r_star
                )));
            }
        }
        Ok(())
    }

    /// Observed noise-to-penalty ratio `||A*(xi)||_op / lambda`, if the
    /// ground truth is available.
    pub fn noise_to_lambda(&self) -> Result<Option<f64>> {
        match &self.ground_truth {
            None => Ok(None),
            Some(gt) => {
                let b = self.operator.adjoint(&gt.xi)?;
                Ok(Some(linalg::operator_norm(&b)? / self.lambda))
            }
        }
    }
}

/// Operator family a generated instance draws from.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GeneratedOperator {
    #[default]
    Gaussian,
    /// Vectorization (the denoising special case); requires `n = d1 * d2`.
    Identity,
}

/// Recipe for a synthetic problem instance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InstanceSpec {
    pub d1: usize,
    pub d2: usize,
    pub r_star: usize,
    /// Singular values of the ground truth, length `r_star`.
    pub spectrum: Vec<f64>,
    pub n: usize,
    pub lambda: f64,
    /// Target for `||A*(xi)||_op / lambda`; 0 means noiseless.
    pub noise_ratio: f64,
    pub seed: u64,
    #[serde(default)]
    pub operator: GeneratedOperator,
}

/// Generate a problem under the measurement model `y = A(M*) + xi`.
///
/// `M*` is built from Gaussian orthonormal factors and the requested
/// spectrum; the Gaussian ensemble is seeded from `spec.seed`; the noise is
/// drawn Gaussian and rescaled so that `||A*(xi)||_op = noise_ratio * lambda`
/// (power-iteration norm), which is exact up to the norm estimate because
/// the adjoint is linear.
pub fn generate_instance(spec: &InstanceSpec) -> Result<ProblemInstance> {
    if spec.spectrum.len() != spec.r_star {
        return Err(Error::Validation(format!(
            "spectrum has {} entries but r_star = {}",
            spec.spectrum.len(),
            spec.r_star
        )));
    }
    if spec.r_star > spec.d1.min(spec.d2) {
        return Err(Error::Validation(format!(
            "r_star {} exceeds min dimension {}",
            spec.r_star,
            spec.d1.min(spec.d2)
        )));
    }
    if spec.spectrum.iter().any(|&s| !s.is_finite() || s <= 0.0) {
        return Err(Error::Validation("spectrum entries must be positive".into()));
    }
    if !(spec.lambda > 0.0 && spec.lambda.is_finite()) {
        return Err(Error::Validation("lambda must be positive".into()));
    }
    if !(spec.noise_ratio >= 0.0 && spec.noise_ratio.is_finite()) {
        return Err(Error::Validation("noise_ratio must be >= 0".into()));
    }

    let operator = match spec.operator {
        GeneratedOperator::Gaussian => {
            SensingOperator::gaussian_ensemble(spec.d1, spec.d2, spec.n, spec.seed)?
        }
        GeneratedOperator::Identity => {
            if spec.n != spec.d1 * spec.d2 {
                return Err(Error::Validation(format!(
                    "identity operator requires n = d1*d2 = {}, got {}",
                    spec.d1 * spec.d2,
                    spec.n
                )));
            }
            SensingOperator::identity(spec.d1, spec.d2)?
        }
    };

    let mut gt_rng = SeededRng::with_stream(spec.seed, STREAM_GROUND_TRUTH);
    let u = linalg::random_orthonormal(spec.d1, spec.r_star, &mut gt_rng)?;
    let v = linalg::random_orthonormal(spec.d2, spec.r_star, &mut gt_rng)?;
    // M* = U diag(spectrum) V^T
    let mut scaled = u;
    for i in 0..spec.d1 {
        for (j, &s) in spec.spectrum.iter().enumerate() {
            scaled.set(i, j, scaled.get(i, j) * s);
        }
    }
    let m_star = scaled.matmul_nt(&v);

    let xi = if spec.noise_ratio == 0.0 {
        vec![0.0; spec.n]
    } else {
        let mut noise_rng = SeededRng::with_stream(spec.seed, STREAM_NOISE);
        let raw = noise_rng.normal_vec(spec.n);
        let b = operator.adjoint(&raw)?;
        let norm = linalg::power_operator_norm(&b, spec.seed);
        if norm == 0.0 {
            return Err(Error::Numerical("degenerate noise draw".into()));
        }
        let scale = spec.noise_ratio * spec.lambda / norm;
        raw.into_iter().map(|x| x * scale).collect()
    };

    let a_mstar = operator.apply(&m_star)?;
    let y: Vec<f64> = a_mstar.iter().zip(&xi).map(|(a, x)| a + x).collect();

    let r_star = linalg::numerical_rank(&m_star, DEFAULT_RANK_TOL);
    let inst = ProblemInstance {
        operator,
        y,
        lambda: spec.lambda,
        ground_truth: Some(GroundTruth {
            m_star,
            xi,
            r_star,
        }),
    };
    inst.validate()?;
    Ok(inst)
}
