#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(motions) = depthfield::io::parse_motion_csv(text) {
            // accepted logs hold only finite samples and round-trip
            assert!(motions.iter().all(|m| m.is_finite()));
            let out = depthfield::io::motion_csv_string(&motions).expect("nonempty");
            depthfield::io::parse_motion_csv(&out).expect("re-export must parse");
        }
    }
});
