#![no_main]

use hsqc::format::parse_bitstring;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(s) = parse_bitstring(text) {
        assert_eq!(parse_bitstring(&s.to_string()).unwrap(), s);
    }
});
