//! Problem-file parser must never panic on arbitrary bytes, and anything
//! it accepts must survive a serialize/parse round trip.

#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(inst) = lrl::sensing::instance_from_json(text) {
        let again = lrl::sensing::instance_to_json(&inst);
        let back = lrl::sensing::instance_from_json(&again).expect("round trip of accepted file");
        assert_eq!(back.y, inst.y);
        assert_eq!(back.lambda, inst.lambda);
    }
});
