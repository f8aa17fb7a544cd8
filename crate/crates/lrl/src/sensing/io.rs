//! Problem-file serialization.
//!
//! Problems are stored as UTF-8 JSON with top-level keys `version` (= 1),
//! `d1`, `d2`, `n`, `lambda`, `operator`, `y`, and optional `ground_truth`.
//! Gaussian operators are stored seed-based and regenerated on load, so a
//! round trip reproduces the measurement matrices bit-for-bit; explicit
//! operators are stored as nested row-major arrays. Floating-point numbers
//! use the shortest representation that parses back to the same double, so
//! round trips are lossless.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;

use super::{GroundTruth, OperatorKind, ProblemInstance, SensingOperator};

pub const FILE_VERSION: u64 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProblemFile {
    version: u64,
    d1: usize,
    d2: usize,
    n: usize,
    lambda: f64,
    operator: OperatorFile,
    y: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    ground_truth: Option<GroundTruthFile>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct OperatorFile {
    kind: OperatorKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    matrices: Option<Vec<Vec<f64>>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GroundTruthFile {
    /// Row-major entries of M*, length d1*d2.
    m_star: Vec<f64>,
    xi: Vec<f64>,
    r_star: usize,
}

pub fn instance_to_json(inst: &ProblemInstance) -> String {
    let operator = match inst.operator.kind() {
        OperatorKind::Identity => OperatorFile {
            kind: OperatorKind::Identity,
            seed: None,
            matrices: None,
        },
        OperatorKind::Gaussian => OperatorFile {
            kind: OperatorKind::Gaussian,
            seed: inst.operator.seed(),
            matrices: None,
        },
        OperatorKind::Explicit => OperatorFile {
            kind: OperatorKind::Explicit,
            seed: None,
            matrices: Some(
                (0..inst.n())
                    .map(|i| inst.operator.measurement(i).into_vec())
                    .collect(),
            ),
        },
    };
    let file = ProblemFile {
        version: FILE_VERSION,
        d1: inst.d1(),
        d2: inst.d2(),
        n: inst.n(),
        lambda: inst.lambda,
        operator,
        y: inst.y.clone(),
        ground_truth: inst.ground_truth.as_ref().map(|gt| GroundTruthFile {
            m_star: gt.m_star.as_slice().to_vec(),
            xi: gt.xi.clone(),
            r_star: gt.r_star,
        }),
    };
    serde_json::to_string_pretty(&file).expect("problem files serialize")
}

pub fn instance_from_json(text: &str) -> Result<ProblemInstance> {
    let file: ProblemFile = match serde_json::from_str(text) {
        Ok(f) => f,
        Err(err) => {
            // Distinguish a version we do not read from a generally
            // malformed file, for a clearer message.
            if let Ok(value) = serde_json::from_str::<serde_json::Value>(text) {
                if let Some(v) = value.get("version").and_then(|v| v.as_u64()) {
                    if v != FILE_VERSION {
                        return Err(Error::Version {
                            found: v,
                            expected: FILE_VERSION,
                        });
                    }
                }
            }
            return Err(Error::parse(&err));
        }
    };
    if file.version != FILE_VERSION {
        return Err(Error::Version {
            found: file.version,
            expected: FILE_VERSION,
        });
    }

    let operator = match file.operator.kind {
        OperatorKind::Identity => {
            if file.operator.seed.is_some() || file.operator.matrices.is_some() {
                return Err(Error::Validation(
                    "identity operator takes neither seed nor matrices".into(),
                ));
            }
            let op = SensingOperator::identity(file.d1, file.d2)?;
            if op.n() != file.n {
                return Err(Error::Validation(format!(
                    "identity operator requires n = d1*d2 = {}, file says {}",
                    op.n(),
                    file.n
                )));
            }
            op
        }
        OperatorKind::Gaussian => {
            if file.operator.matrices.is_some() {
                return Err(Error::Validation(
                    "gaussian operators are stored seed-based, not materialized".into(),
                ));
            }
            let seed = file.operator.seed.ok_or_else(|| {
                Error::Validation("gaussian operator needs a seed".into())
            })?;
            SensingOperator::gaussian_ensemble(file.d1, file.d2, file.n, seed)?
        }
        OperatorKind::Explicit => {
            if file.operator.seed.is_some() {
                return Err(Error::Validation("explicit operator takes no seed".into()));
            }
            let rows = file.operator.matrices.ok_or_else(|| {
                Error::Validation("explicit operator needs matrices".into())
            })?;
            if rows.len() != file.n {
                return Err(Error::Validation(format!(
                    "operator has {} matrices but n = {}",
                    rows.len(),
                    file.n
                )));
            }
            let mats = rows
                .into_iter()
                .map(|r| DenseMatrix::from_vec(file.d1, file.d2, r))
                .collect::<Result<Vec<_>>>()?;
            SensingOperator::explicit(mats)?
        }
    };

    let ground_truth = match file.ground_truth {
        None => None,
        Some(gt) => Some(GroundTruth {
            m_star: DenseMatrix::from_vec(file.d1, file.d2, gt.m_star)?,
            xi: gt.xi,
            r_star: gt.r_star,
        }),
    };

    let inst = ProblemInstance {
        operator,
        y: file.y,
        lambda: file.lambda,
        ground_truth,
    };
    inst.validate()?;
    Ok(inst)
}

pub fn save_instance(path: impl AsRef<Path>, inst: &ProblemInstance) -> Result<()> {
    std::fs::write(path, instance_to_json(inst))?;
    Ok(())
}

pub fn load_instance(path: impl AsRef<Path>) -> Result<ProblemInstance> {
    let text = std::fs::read_to_string(path)?;
    instance_from_json(&text)
}
