//! Experiment-config parsers must never panic; accepted sweep configs must
//! enumerate a bounded, deterministic cell list.

#![no_main]

use libfuzzer_sys::fuzz_target;
use lrl_cli::config::{parse_generate_config, parse_sweep_config};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(cfg) = parse_generate_config(text) {
        let _ = cfg.measurement_count();
        let _ = cfg.to_instance_spec(None);
    }
    if let Ok(cfg) = parse_sweep_config(text) {
        let cells = cfg.cells();
        assert_eq!(cells.len(), cfg.cells().len());
    }
});
