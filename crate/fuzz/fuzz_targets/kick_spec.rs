#![no_main]

use libfuzzer_sys::fuzz_target;
use qkick_core::evolution::{kick_unitary, parse_angle, KickSpec};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(a) = parse_angle(text) {
        assert!(a.is_finite());
    }
    let Ok(spec) = text.parse::<KickSpec>() else { return };
    // printing and re-parsing is lossless
    let again: KickSpec = spec.to_string().parse().expect("printed spec parses");
    assert_eq!(spec, again);
    if spec.validate(3).is_ok() && spec.rotations.len() <= 16 {
        let u = kick_unitary(&spec, 3).unwrap();
        let dev = (&u * u.adjoint() - qkick_core::Matrix::identity(8, 8)).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(dev < 1e-10);
    }
});
