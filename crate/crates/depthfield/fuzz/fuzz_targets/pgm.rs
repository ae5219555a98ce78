#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(img) = depthfield::io::parse_pgm(data) {
        // all samples fit the declared maxval's byte width
        let bound = if img.maxval > 255 { 65535.0 } else { 255.0 };
        for &s in img.samples.values() {
            assert!((0.0..=bound).contains(&s));
        }
    }
});
