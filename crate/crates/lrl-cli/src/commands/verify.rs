use std::path::PathBuf;

use anyhow::{bail, Context};
use log::info;

use lrl::certificate::{self, VerifyOptions};
use lrl::sensing;
use lrl::solvers;

use crate::cli::{GlobalOpts, VerifyArgs, EXIT_OK};

pub fn run(args: &VerifyArgs, global: &GlobalOpts) -> anyhow::Result<i32> {
    let inst = sensing::load_instance(&args.problem)
        .with_context(|| format!("cannot load problem {}", args.problem.display()))?;
    let solution = solvers::load_report(&args.solution)
        .with_context(|| format!("cannot load solution {}", args.solution.display()))?;
    let m_hat = &solution.final_matrix;
    if m_hat.shape() != (inst.d1(), inst.d2()) {
        bail!(
            "solution shape {:?} does not match the problem ({}x{})",
            m_hat.shape(),
            inst.d1(),
            inst.d2()
        );
    }

    let opts = VerifyOptions {
        rip_samples: args.rip_samples,
        cert_tol: global.tol_cert,
        rank_tol: global.rank_tol,
        seed: global.seed.unwrap_or(0),
        include_matrices: args.include_matrices,
    };
    // verification reporting false is a result, not an error
    let report = if inst.ground_truth.is_some() {
        certificate::verify_rank_bound(&inst, m_hat, &opts)?
    } else {
        certificate::certificate_without_ground_truth(&inst, m_hat, &opts)?
    };

    info!(
        "membership {}, rank {}, census {}, condition value {:?}",
        report.is_member, report.rank_m_hat, report.count_ge1, report.condition_value
    );

    let out = global
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("certificate.json"));
    std::fs::write(&out, serde_json::to_string_pretty(&report)?)?;
    println!("{}", out.display());
    Ok(EXIT_OK)
}
