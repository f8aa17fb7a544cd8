//! Solve-report parser (the `verify` command's solution input) must never
//! panic; accepted reports must round-trip.

#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(report) = lrl::solvers::report_from_json(text) {
        let again = lrl::solvers::report_to_json(&report);
        let back = lrl::solvers::report_from_json(&again).expect("round trip of accepted report");
        assert_eq!(back.final_matrix.shape(), report.final_matrix.shape());
        assert_eq!(back.trace.len(), report.trace.len());
    }
});
