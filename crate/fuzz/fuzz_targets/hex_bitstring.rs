#![no_main]

use hsqc::format::parse_hex_bitstring;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Some((&n, rest)) = data.split_first() else { return };
    let Ok(text) = std::str::from_utf8(rest) else { return };
    if let Ok(s) = parse_hex_bitstring(text, n as usize) {
        assert_eq!(s.len(), n as usize);
    }
});
