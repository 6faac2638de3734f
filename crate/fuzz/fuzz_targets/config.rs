#![no_main]
//! Arbitrary text through config validation: every input must come back as
//! either a config or a list of issues, never a panic.

use libfuzzer_sys::fuzz_target;
use qkick::{validate_config, HarnessError};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    match validate_config(text) {
        Ok(cfg) => {
            // accepted configs must hash and expose a usable first kick
            assert_eq!(cfg.content_hash().len(), 64);
            let _ = cfg.kick().resolve(cfg.kappa);
        }
        Err(HarnessError::Config(issues)) => assert!(!issues.is_empty()),
        Err(e) => panic!("validation returned a non-config error: {e}"),
    }
});
