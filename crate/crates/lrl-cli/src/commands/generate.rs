use std::path::PathBuf;

use anyhow::Context;
use log::info;

use lrl::linalg;
use lrl::sensing;

use crate::cli::{GenerateArgs, GlobalOpts, EXIT_OK};
use crate::config;

pub fn run(args: &GenerateArgs, global: &GlobalOpts) -> anyhow::Result<i32> {
    let cfg = config::load_generate_config(&args.config)?;
    let spec = cfg.to_instance_spec(global.seed)?;
    let inst = sensing::generate_instance(&spec).context("instance generation failed")?;

    let out = global
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("problem.json"));
    sensing::save_instance(&out, &inst)?;

    // re-check the calibrated noise level the way the generator measured it
    if let Some(gt) = &inst.ground_truth {
        let observed = if spec.noise_ratio == 0.0 {
            0.0
        } else {
            let b = inst.operator.adjoint(&gt.xi)?;
            linalg::power_operator_norm(&b, spec.seed) / inst.lambda
        };
        info!(
            "wrote {} (d={}x{}, n={}, r*={}, noise ratio requested {} observed {observed})",
            out.display(),
            spec.d1,
            spec.d2,
            spec.n,
            gt.r_star,
            spec.noise_ratio
        );
    }
    println!("{}", out.display());
    Ok(EXIT_OK)
}
