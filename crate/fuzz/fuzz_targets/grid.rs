#![no_main]

use libfuzzer_sys::fuzz_target;
use qkick::config::{parse_override, parse_range};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(v) = parse_range(text) {
        assert!(v.len() <= 100_000);
    }
    let _ = parse_override(text);
});
