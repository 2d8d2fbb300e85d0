#![no_main]

use hsqc::format::{connectivity_to_json, parse_connectivity};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(map) = parse_connectivity(text) else { return };
    let again = parse_connectivity(&connectivity_to_json(&map)).expect("serialized map parses");
    assert_eq!(again.edges(), map.edges());
});
