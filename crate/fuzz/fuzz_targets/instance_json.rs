#![no_main]

use hsqc::format::{instance_to_json, parse_instance};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(inst) = parse_instance(text) else { return };
    let again = parse_instance(&instance_to_json(&inst)).expect("serialized instance parses");
    assert_eq!(again.terms(), inst.terms());
});
