//! Flat result rows and their CSV/JSON writers.
//!
//! Every row carries the full provenance of its cell (seeds and
//! tolerances). Wall times are deliberately excluded so that re-running a
//! command with the same config produces byte-identical files; rows are
//! sorted by cell key before writing.

use serde::{Deserialize, Serialize};
use std::io::Write;

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ResultRow {
    pub d1: usize,
    pub d2: usize,
    pub n: usize,
    pub lambda: f64,
    pub solver: String,
    pub seed: u64,
    pub iters: usize,
    pub status: String,
    pub final_objective: f64,
    pub rank_m_hat: usize,
    pub tol_fixpoint: f64,
    pub tol_grad: f64,
    pub tol_cert: f64,
    pub rank_tol: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_star: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_factor: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instance_seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rank: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_lower: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub condition_value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rank_cap: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subgrad_is_member: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dist_to_reference: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub is_second_order: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_hess_eig: Option<f64>,
}

pub const CSV_SCHEMA_LINE: &str = "# schema=1";

const COLUMNS: &[&str] = &[
    "d1",
    "d2",
    "n",
    "lambda",
    "solver",
    "seed",
    "instance_seed",
    "r_star",
    "rho",
    "n_factor",
    "rank",
    "iters",
    "status",
    "final_objective",
    "rank_m_hat",
    "rank_cap",
    "delta_lower",
    "condition_value",
    "subgrad_is_member",
    "dist_to_reference",
    "is_second_order",
    "min_hess_eig",
    "tol_fixpoint",
    "tol_grad",
    "tol_cert",
    "rank_tol",
];

impl ResultRow {
    /// Stable ordering key: grid coordinates first, then solver/rank/seed.
    pub fn sort_key(&self) -> impl Ord {
        (
            Total(self.rho.unwrap_or(f64::NEG_INFINITY)),
            Total(self.n_factor.unwrap_or(f64::NEG_INFINITY)),
            Total(self.lambda),
            self.solver.clone(),
            self.rank.unwrap_or(0),
            self.seed,
            self.instance_seed.unwrap_or(0),
        )
    }

    fn cell(&self, column: &str) -> String {
        match column {
            "d1" => self.d1.to_string(),
            "d2" => self.d2.to_string(),
            "n" => self.n.to_string(),
            "lambda" => fmt_f64(self.lambda),
            "solver" => self.solver.clone(),
            "seed" => self.seed.to_string(),
            "instance_seed" => opt(self.instance_seed.map(|v| v.to_string())),
            "r_star" => opt(self.r_star.map(|v| v.to_string())),
            "rho" => opt(self.rho.map(fmt_f64)),
            "n_factor" => opt(self.n_factor.map(fmt_f64)),
            "rank" => opt(self.rank.map(|v| v.to_string())),
            "iters" => self.iters.to_string(),
            "status" => self.status.clone(),
            "final_objective" => fmt_f64(self.final_objective),
            "rank_m_hat" => self.rank_m_hat.to_string(),
            "rank_cap" => opt(self.rank_cap.map(|v| v.to_string())),
            "delta_lower" => opt(self.delta_lower.map(fmt_f64)),
            "condition_value" => opt(self.condition_value.map(fmt_f64)),
            "subgrad_is_member" => opt(self.subgrad_is_member.map(|v| v.to_string())),
            "dist_to_reference" => opt(self.dist_to_reference.map(fmt_f64)),
            "is_second_order" => opt(self.is_second_order.map(|v| v.to_string())),
            "min_hess_eig" => opt(self.min_hess_eig.map(fmt_f64)),
            "tol_fixpoint" => fmt_f64(self.tol_fixpoint),
            "tol_grad" => fmt_f64(self.tol_grad),
            "tol_cert" => fmt_f64(self.tol_cert),
            "rank_tol" => fmt_f64(self.rank_tol),
            other => unreachable!("unknown column {other}"),
        }
    }
}

/// Shortest representation that parses back to the same double.
fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

fn opt(v: Option<String>) -> String {
    v.unwrap_or_default()
}

struct Total(f64);

impl PartialEq for Total {
    fn eq(&self, other: &Self) -> bool {
        self.0.total_cmp(&other.0) == std::cmp::Ordering::Equal
    }
}
impl Eq for Total {}
impl PartialOrd for Total {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Total {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

pub fn sort_rows(rows: &mut [ResultRow]) {
    rows.sort_by_key(|r| r.sort_key());
}

pub fn rows_to_csv(rows: &[ResultRow]) -> String {
    let mut out = String::new();
    out.push_str(CSV_SCHEMA_LINE);
    out.push('\n');
    out.push_str(&COLUMNS.join(","));
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = COLUMNS.iter().map(|c| row.cell(c)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn rows_to_json(rows: &[ResultRow]) -> String {
    serde_json::to_string_pretty(rows).expect("rows serialize")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableFormat {
    Csv,
    Json,
}

pub fn write_rows(
    path: &std::path::Path,
    rows: &mut [ResultRow],
    format: TableFormat,
) -> anyhow::Result<()> {
    sort_rows(rows);
    let text = match format {
        TableFormat::Csv => rows_to_csv(rows),
        TableFormat::Json => rows_to_json(rows),
    };
    let mut f = std::fs::File::create(path)?;
    f.write_all(text.as_bytes())?;
    Ok(())
}

/// Per-iteration trace CSV (columns fixed; missing values empty).
pub fn trace_to_csv(trace: &[lrl::solvers::TraceRow]) -> String {
    let mut out = String::new();
    out.push_str(CSV_SCHEMA_LINE);
    out.push('\n');
    out.push_str("iter,objective,fixpoint_residual,grad_norm,rank_estimate,dist_to_ref\n");
    for row in trace {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            row.iter,
            fmt_f64(row.objective),
            opt(row.fixpoint_residual.map(fmt_f64)),
            opt(row.grad_norm.map(fmt_f64)),
            row.rank_estimate,
            opt(row.dist_to_ref.map(fmt_f64)),
        ));
    }
    out
}
